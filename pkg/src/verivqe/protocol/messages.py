"""Wire message schemas and length-prefixed JSON framing.

Messages the server can ever see are listed in SERVER_VISIBLE_SCHEMA; by
construction they carry no preparation secrets, no randomization bits, no
dummy positions, and no round-kind or evaluation-attribution fields. The
blindness checks assert the server's session log against this schema.

TCP frames are a 4-byte big-endian payload length followed by UTF-8 JSON.
"""

from __future__ import annotations

import json
import struct

# message type -> exact field set (beyond "type")
SERVER_VISIBLE_SCHEMA = {
    "session_init": {"graph", "angle_alphabet"},
    "angle": {"round_id", "vertex", "angle"},
    "measure_request": {"round_id", "vertex", "angle"},
    "measure_result": {"round_id", "vertex", "bit"},
    "vertex_result": {"round_id", "vertex", "bit"},
    "report_request": {"round_id"},
    "round_report": {"round_id", "bits"},
    "step_verdict": {"verdict"},
    "ack": set(),
    "close": set(),
}

# client -> referee only; carries the secret per-vertex preparations
REFEREE_ONLY_SCHEMA = {
    "prepare_batch": {"round_id", "vertex_count", "preparations"},
}

SECRET_FIELD_NAMES = (
    "theta", "r_bits", "dummies", "dummy_angles", "trap", "traps",
    "trap_class", "kind", "preparations", "eval_index", "term_index",
)


class ProtocolViolation(Exception):
    """Malformed or out-of-schema message."""


def validate_server_visible(msg: dict) -> None:
    mtype = msg.get("type")
    if mtype not in SERVER_VISIBLE_SCHEMA:
        raise ProtocolViolation(f"message type {mtype!r} is not server-visible")
    fields = set(msg) - {"type"}
    if fields != SERVER_VISIBLE_SCHEMA[mtype]:
        raise ProtocolViolation(
            f"{mtype} fields {sorted(fields)} != {sorted(SERVER_VISIBLE_SCHEMA[mtype])}"
        )


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def encode_frame(msg: dict) -> bytes:
    payload = canonical_json(msg).encode("utf-8")
    return struct.pack(">I", len(payload)) + payload


def decode_frame(sock) -> dict | None:
    """Read one frame from a socket-like object; None on clean EOF."""
    header = _read_exact(sock, 4)
    if header is None:
        return None
    (length,) = struct.unpack(">I", header)
    if length > 1 << 24:
        raise ProtocolViolation(f"frame length {length} is implausible")
    payload = _read_exact(sock, length, allow_eof=False)
    try:
        msg = json.loads(payload.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ProtocolViolation(f"undecodable frame: {exc}") from exc
    if not isinstance(msg, dict) or "type" not in msg:
        raise ProtocolViolation("frame is not a typed message object")
    return msg


def _read_exact(sock, n: int, allow_eof: bool = True) -> bytes | None:
    chunks = []
    got = 0
    while got < n:
        chunk = sock.recv(n - got)
        if not chunk:
            if got == 0 and allow_eof:
                return None
            raise ProtocolViolation("connection dropped mid-frame")
        chunks.append(chunk)
        got += len(chunk)
    return b"".join(chunks)
