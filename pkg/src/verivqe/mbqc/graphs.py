"""Open graphs for measurement patterns and proper vertex colorings."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class OpenGraph:
    """Undirected graph with ordered input/output vertices and a total
    measurement order over the measured vertices."""

    num_vertices: int
    edges: frozenset[tuple[int, int]]
    inputs: tuple[int, ...]
    outputs: tuple[int, ...]
    order: tuple[int, ...]  # measurement order; may include outputs

    def __post_init__(self):
        nv = self.num_vertices
        for a, b in self.edges:
            if a == b:
                raise ValueError("self-loops are not allowed")
            if not (0 <= a < nv and 0 <= b < nv):
                raise ValueError(f"edge ({a},{b}) out of range")
            if a > b:
                raise ValueError("edges must be stored as sorted pairs")
        for v in (*self.inputs, *self.outputs, *self.order):
            if not (0 <= v < nv):
                raise ValueError(f"vertex {v} out of range")
        if len(set(self.order)) != len(self.order):
            raise ValueError("measurement order repeats a vertex")

    def neighbors(self) -> dict[int, tuple[int, ...]]:
        adj: dict[int, list[int]] = {v: [] for v in range(self.num_vertices)}
        for a, b in sorted(self.edges):
            adj[a].append(b)
            adj[b].append(a)
        return {v: tuple(ns) for v, ns in adj.items()}

    def max_degree(self) -> int:
        if not self.edges:
            return 0
        return max(len(ns) for ns in self.neighbors().values())

    def to_json(self) -> dict:
        return {
            "vertices": self.num_vertices,
            "edges": sorted(list(e) for e in self.edges),
            "inputs": list(self.inputs),
            "outputs": list(self.outputs),
            "order": list(self.order),
        }

    @classmethod
    def from_json(cls, data) -> "OpenGraph":
        return cls(
            num_vertices=int(data["vertices"]),
            edges=frozenset(tuple(sorted(e)) for e in data["edges"]),
            inputs=tuple(data["inputs"]),
            outputs=tuple(data["outputs"]),
            order=tuple(data["order"]),
        )


@dataclass(frozen=True)
class Coloring:
    """Proper vertex coloring; trap placement picks one color class."""

    color_of: tuple[int, ...]
    num_colors: int

    def class_vertices(self, color: int) -> tuple[int, ...]:
        return tuple(v for v, c in enumerate(self.color_of) if c == color)

    def validate(self, graph: OpenGraph) -> None:
        if len(self.color_of) != graph.num_vertices:
            raise ValueError("coloring size mismatch")
        for a, b in graph.edges:
            if self.color_of[a] == self.color_of[b]:
                raise ValueError(f"edge ({a},{b}) is monochromatic")


def greedy_coloring(graph: OpenGraph) -> Coloring:
    """Greedy coloring in natural vertex order; uses at most max_degree+1
    colors."""
    adj = graph.neighbors()
    colors = [-1] * graph.num_vertices
    for v in range(graph.num_vertices):
        taken = {colors[u] for u in adj[v] if colors[u] >= 0}
        c = 0
        while c in taken:
            c += 1
        colors[v] = c
    coloring = Coloring(color_of=tuple(colors), num_colors=max(colors) + 1)
    coloring.validate(graph)
    return coloring
