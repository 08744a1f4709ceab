"""Wire codec for console messages.

Every frame is one UTF-8 JSON object with the fixed key order
``op, seq, payload``. ``seq`` is strictly increasing per direction per
connection. Decoding is total: any input either yields a WireMessage or a
ProtocolError, never an unhandled exception.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from ..logbook import LogEntry
from ..session import (EmitSummary, Log, PlayAudio, SetFace, ShowMedia,
                       ShowOptions, ShowText, StartGesture)

CLIENT_OPS = ("hello", "action")
SERVER_OPS = ("welcome", "state", "effect", "summary", "error", "status")
ACTION_TYPES = ("answer", "pause_toggle", "shutdown")
ROLES = ("tutor", "learner", "observer")

MALFORMED = "MALFORMED"
UNKNOWN_OP = "UNKNOWN_OP"
BAD_SEQ = "BAD_SEQ"


class ProtocolError(Exception):
    def __init__(self, code: str, message: str) -> None:
        self.code = code
        super().__init__(message)


@dataclass(frozen=True)
class WireMessage:
    op: str
    seq: int
    payload: dict


def encode_message(msg: WireMessage) -> bytes:
    """Single text frame; payload keys are sorted for a canonical form."""
    doc = {"op": msg.op, "seq": msg.seq, "payload": _canonical(msg.payload)}
    return json.dumps(doc, separators=(",", ":"), ensure_ascii=False).encode("utf-8")


def _canonical(value):
    if isinstance(value, dict):
        return {str(k): _canonical(value[k]) for k in sorted(value, key=str)}
    if isinstance(value, (list, tuple)):
        return [_canonical(v) for v in value]
    return value


def decode_message(frame: bytes | str, prev_seq: int | None = None) -> WireMessage:
    """Strict parse of one frame; unknown payload keys are kept as-is."""
    if isinstance(frame, bytes):
        try:
            frame = frame.decode("utf-8")
        except UnicodeDecodeError:
            raise ProtocolError(MALFORMED, "frame is not UTF-8") from None
    try:
        data = json.loads(frame)
    except (json.JSONDecodeError, RecursionError):
        raise ProtocolError(MALFORMED, "frame is not valid JSON") from None
    if not isinstance(data, dict):
        raise ProtocolError(MALFORMED, "frame must be a JSON object")
    op = data.get("op")
    if not isinstance(op, str):
        raise ProtocolError(MALFORMED, "missing or non-string op")
    seq = data.get("seq")
    if not isinstance(seq, int) or isinstance(seq, bool):
        raise ProtocolError(MALFORMED, "missing or non-integer seq")
    payload = data.get("payload")
    if payload is None:
        payload = {}
    if not isinstance(payload, dict):
        raise ProtocolError(MALFORMED, "payload must be an object")
    if op not in CLIENT_OPS and op not in SERVER_OPS:
        raise ProtocolError(UNKNOWN_OP, f"unknown op {op!r}")
    if prev_seq is not None and seq <= prev_seq:
        raise ProtocolError(BAD_SEQ, f"seq {seq} after {prev_seq}")
    return WireMessage(op=op, seq=seq, payload=payload)


def effect_payload(effect) -> dict:
    """Wire shape of one engine effect (EmitSummary goes out as op=summary)."""
    if isinstance(effect, Log):
        return {"kind": "log", "entry": effect.entry.as_dict()}
    if isinstance(effect, ShowMedia):
        return {"kind": "show_media", "asset": effect.asset.as_dict()}
    if isinstance(effect, ShowText):
        return {"kind": "show_text", "text": effect.text}
    if isinstance(effect, ShowOptions):
        return {"kind": "show_options", "options": list(effect.options)}
    if isinstance(effect, PlayAudio):
        out = {"kind": "play_audio", "asset": effect.asset.as_dict()}
        if effect.visemes is not None:
            out["visemes"] = effect.visemes.as_list()
        return out
    if isinstance(effect, SetFace):
        return {"kind": "face",
                "au": {str(a): v for a, v in effect.vector.as_map().items()}}
    if isinstance(effect, StartGesture):
        return {"kind": "start_gesture", "gesture": effect.timeline.name,
                "timeline": effect.timeline.as_dict()}
    if isinstance(effect, EmitSummary):
        return effect.summary.as_dict()
    raise TypeError(f"not an effect: {effect!r}")


def log_entry_payload(entry: LogEntry) -> dict:
    return entry.as_dict()
