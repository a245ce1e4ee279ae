"""Client-facing transports: direct in-process calls and loopback/remote TCP.

Both transports drive the same party logic with the same RNG streams, so a
given seed produces identical decoded transcripts on either one. Party
seeds derive from a master seed via SeedSequence spawning, in the fixed
order (client, server, referee).
"""

from __future__ import annotations

import socket
import socketserver
import threading

import numpy as np

from .messages import (
    ProtocolViolation,
    REFEREE_ONLY_SCHEMA,
    decode_frame,
    encode_frame,
    validate_server_visible,
)
from .parties import RefereeParty, ServerParty


class TransportError(Exception):
    """Communication failure, distinct from a protocol Abort verdict."""


def split_party_seeds(seed: int):
    """(client, server, referee) seed sequences from one master seed."""
    return tuple(np.random.SeedSequence(seed).spawn(3))


class InprocTransport:
    """Direct method-call wiring of client, server, and referee."""

    def __init__(self, attack, server_seed, referee_seed, record_log: bool = False):
        self.server = ServerParty(attack, np.random.default_rng(server_seed),
                                  record_log=record_log)
        self.referee = RefereeParty(np.random.default_rng(referee_seed))

    def open_session(self, graph_json: dict) -> "InprocSession":
        self.server.session_init(graph_json)
        self.referee.session_init(graph_json)
        return InprocSession(self.server, self.referee)

    def server_log(self) -> list[dict]:
        return self.server.log


class InprocSession:
    def __init__(self, server: ServerParty, referee: RefereeParty):
        self._server = server
        self._referee = referee

    def begin_round(self, round_id: int, preparations: dict) -> None:
        self._referee.prepare_batch(round_id, preparations)

    def measure(self, round_id: int, vertex: int, angle: float) -> int:
        return self._server.angle(round_id, vertex, angle, self._referee.measure)

    def finish_round(self, round_id: int) -> list[int]:
        return self._server.round_report(round_id)

    def send_verdict(self, verdict: str) -> None:
        self._server.step_verdict(verdict)

    def close(self) -> None:
        pass


# ---------------------------------------------------------------------------
# TCP side
# ---------------------------------------------------------------------------


class _FramedHandler(socketserver.BaseRequestHandler):
    def handle(self):
        while True:
            try:
                msg = decode_frame(self.request)
            except ProtocolViolation as exc:
                try:
                    self.request.sendall(encode_frame(
                        {"type": "error", "reason": str(exc)}))
                finally:
                    return
            if msg is None or msg.get("type") == "close":
                if msg is not None:
                    self.request.sendall(encode_frame({"type": "ack"}))
                return
            try:
                reply = self.server.dispatch(msg)
            except ProtocolViolation as exc:
                self.request.sendall(encode_frame({"type": "error", "reason": str(exc)}))
                return
            self.request.sendall(encode_frame(reply))


class _PartyServer(socketserver.ThreadingTCPServer):
    allow_reuse_address = True
    daemon_threads = True

    def __init__(self, address, dispatch):
        super().__init__(address, _FramedHandler)
        self._dispatch = dispatch
        self._lock = threading.Lock()

    def dispatch(self, msg: dict) -> dict:
        with self._lock:
            return self._dispatch(msg)


def serve_referee(host: str, port: int, referee_seed) -> _PartyServer:
    """Start the referee endpoint; returns the server (shutdown() to stop)."""
    party = RefereeParty(np.random.default_rng(referee_seed))

    def dispatch(msg: dict) -> dict:
        mtype = msg["type"]
        if mtype == "session_init":
            party.session_init(msg["graph"])
            return {"type": "ack"}
        if mtype == "prepare_batch":
            if set(msg) - {"type"} != REFEREE_ONLY_SCHEMA["prepare_batch"]:
                raise ProtocolViolation("malformed prepare_batch")
            party.prepare_batch(int(msg["round_id"]), msg["preparations"])
            return {"type": "ack"}
        if mtype == "measure_request":
            bit = party.measure(int(msg["round_id"]), int(msg["vertex"]),
                                float(msg["angle"]))
            return {"type": "measure_result", "round_id": msg["round_id"],
                    "vertex": msg["vertex"], "bit": bit}
        raise ProtocolViolation(f"referee cannot handle {mtype!r}")

    server = _PartyServer((host, port), dispatch)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    return server


def serve_server(host: str, port: int, referee_addr, attack, server_seed) -> _PartyServer:
    """Start the untrusted-server endpoint, connected to the referee."""
    party = ServerParty(attack, np.random.default_rng(server_seed), record_log=True)
    referee_sock = socket.create_connection(referee_addr)
    sock_lock = threading.Lock()

    def referee_measure(round_id, vertex, angle):
        with sock_lock:
            referee_sock.sendall(encode_frame(
                {"type": "measure_request", "round_id": round_id,
                 "vertex": vertex, "angle": angle}))
            reply = decode_frame(referee_sock)
        if reply is None or reply.get("type") != "measure_result":
            raise TransportError(f"referee returned {reply!r}")
        return reply["bit"]

    def dispatch(msg: dict) -> dict:
        validate_server_visible(msg)
        mtype = msg["type"]
        if mtype == "session_init":
            party.session_init(msg["graph"])
            with sock_lock:
                referee_sock.sendall(encode_frame(msg))
                reply = decode_frame(referee_sock)
            if reply is None or reply.get("type") != "ack":
                raise TransportError("referee rejected session_init")
            return {"type": "ack"}
        if mtype == "angle":
            bit = party.angle(int(msg["round_id"]), int(msg["vertex"]),
                              float(msg["angle"]), referee_measure)
            return {"type": "vertex_result", "round_id": msg["round_id"],
                    "vertex": msg["vertex"], "bit": bit}
        if mtype == "report_request":
            bits = party.round_report(int(msg["round_id"]))
            return {"type": "round_report", "round_id": msg["round_id"],
                    "bits": bits}
        if mtype == "step_verdict":
            party.step_verdict(msg["verdict"])
            return {"type": "ack"}
        raise ProtocolViolation(f"server cannot handle {mtype!r}")

    server = _PartyServer((host, port), dispatch)
    server.party = party  # exposed for log inspection in tests
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    return server


class TcpTransport:
    """Client side of the TCP wiring: talks to a server endpoint for angles
    and to the referee endpoint for preparations."""

    def __init__(self, server_addr, referee_addr):
        self.server_addr = tuple(server_addr)
        self.referee_addr = tuple(referee_addr)
        self._server_sock = None
        self._referee_sock = None

    def _connect(self):
        if self._server_sock is None:
            try:
                self._server_sock = socket.create_connection(self.server_addr)
                self._referee_sock = socket.create_connection(self.referee_addr)
            except OSError as exc:
                raise TransportError(f"cannot connect: {exc}") from exc

    def _call(self, sock, msg: dict) -> dict:
        try:
            sock.sendall(encode_frame(msg))
            reply = decode_frame(sock)
        except (OSError, ProtocolViolation) as exc:
            raise TransportError(str(exc)) from exc
        if reply is None:
            raise TransportError("connection closed mid-session")
        if reply.get("type") == "error":
            raise TransportError(f"peer error: {reply.get('reason')}")
        return reply

    def open_session(self, graph_json: dict) -> "TcpSession":
        self._connect()
        init = {"type": "session_init", "graph": graph_json, "angle_alphabet": 8}
        reply = self._call(self._server_sock, init)
        if reply.get("type") != "ack":
            raise TransportError(f"server rejected session: {reply!r}")
        return TcpSession(self)

    def close(self):
        for sock in (self._server_sock, self._referee_sock):
            if sock is not None:
                try:
                    sock.sendall(encode_frame({"type": "close"}))
                    decode_frame(sock)
                except (OSError, ProtocolViolation):
                    pass
                sock.close()
        self._server_sock = None
        self._referee_sock = None


class TcpSession:
    def __init__(self, transport: TcpTransport):
        self._t = transport

    def begin_round(self, round_id: int, preparations: dict) -> None:
        reply = self._t._call(self._t._referee_sock, {
            "type": "prepare_batch", "round_id": round_id,
            "vertex_count": len(preparations), "preparations": preparations,
        })
        if reply.get("type") != "ack":
            raise TransportError(f"referee rejected preparations: {reply!r}")

    def measure(self, round_id: int, vertex: int, angle: float) -> int:
        reply = self._t._call(self._t._server_sock, {
            "type": "angle", "round_id": round_id, "vertex": vertex,
            "angle": angle,
        })
        if reply.get("type") != "vertex_result":
            raise TransportError(f"unexpected reply {reply!r}")
        return int(reply["bit"])

    def finish_round(self, round_id: int) -> list[int]:
        reply = self._t._call(self._t._server_sock, {
            "type": "report_request", "round_id": round_id,
        })
        if reply.get("type") != "round_report":
            raise TransportError(f"unexpected reply {reply!r}")
        return [int(b) for b in reply["bits"]]

    def send_verdict(self, verdict: str) -> None:
        self._t._call(self._t._server_sock, {"type": "step_verdict",
                                             "verdict": verdict})

    def close(self) -> None:
        pass
