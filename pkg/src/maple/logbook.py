"""Append-only session log with a canonical newline-delimited JSON form.

``at_ms`` is active session time (frozen while paused). Entries that need
to relate active time back to real elapsed time (pause, resume,
quiz_shown) also carry a ``wall_ms`` payload field.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field


@dataclass(frozen=True)
class LogEntry:
    at_ms: int
    kind: str
    payload: dict

    def as_dict(self) -> dict:
        out = {"at_ms": self.at_ms, "kind": self.kind}
        for key in sorted(self.payload):
            out[key] = self.payload[key]
        return out

    def to_line(self) -> str:
        return json.dumps(self.as_dict(), separators=(",", ":"), ensure_ascii=False)


class SessionLog:
    """Ordered record of everything that happened in a session."""

    def __init__(self, entries: "list[LogEntry] | None" = None) -> None:
        self._entries: list[LogEntry] = []
        for entry in entries or []:
            self.append(entry)

    def append(self, entry: LogEntry) -> None:
        if self._entries and entry.at_ms < self._entries[-1].at_ms:
            raise ValueError(f"log time went backwards: {entry}")
        self._entries.append(entry)

    @property
    def entries(self) -> tuple[LogEntry, ...]:
        return tuple(self._entries)

    def __len__(self) -> int:
        return len(self._entries)

    def __iter__(self):
        return iter(self._entries)

    def of_kind(self, kind: str) -> list[LogEntry]:
        return [e for e in self._entries if e.kind == kind]

    def serialize(self) -> bytes:
        return "".join(e.to_line() + "\n" for e in self._entries).encode("utf-8")

    @classmethod
    def parse(cls, data: bytes | str) -> "SessionLog":
        if isinstance(data, bytes):
            data = data.decode("utf-8")
        log = cls()
        for line in data.splitlines():
            if not line.strip():
                continue
            raw = json.loads(line)
            at_ms = raw.pop("at_ms")
            kind = raw.pop("kind")
            log.append(LogEntry(at_ms=at_ms, kind=kind, payload=raw))
        return log
