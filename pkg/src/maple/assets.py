"""Asset references and the runtime index of available media.

Speech is pre-generated audio; the index records each clip's duration and,
optionally, a hand-authored mouth (viseme) track.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

ASSET_KINDS = ("image", "audio", "motion")


@dataclass(frozen=True)
class AssetRef:
    """Reference to a media asset by id.

    Audio assets must carry a positive duration so schedules can be
    computed without touching the actual file.
    """

    id: str
    kind: str
    duration_ms: int | None = None

    def __post_init__(self) -> None:
        if self.kind not in ASSET_KINDS:
            raise ValueError(f"unknown asset kind {self.kind!r}")
        if self.kind == "audio" and (self.duration_ms is None or self.duration_ms <= 0):
            raise ValueError(f"audio asset {self.id!r} needs a positive duration_ms")

    def as_dict(self) -> dict:
        out: dict = {"id": self.id, "kind": self.kind}
        if self.duration_ms is not None:
            out["duration_ms"] = self.duration_ms
        return out


class AssetIndex:
    """Maps asset ids to their metadata (what is actually on disk/available)."""

    def __init__(self, refs: "list[AssetRef] | tuple[AssetRef, ...]" = (),
                 visemes: dict[str, list[tuple[int, float]]] | None = None) -> None:
        self._refs: dict[str, AssetRef] = {}
        for ref in refs:
            if ref.id in self._refs:
                raise ValueError(f"duplicate asset id {ref.id!r}")
            self._refs[ref.id] = ref
        self._visemes = dict(visemes or {})

    def __contains__(self, asset_id: str) -> bool:
        return asset_id in self._refs

    def __len__(self) -> int:
        return len(self._refs)

    def get(self, asset_id: str) -> AssetRef | None:
        return self._refs.get(asset_id)

    def ids(self) -> list[str]:
        return list(self._refs)

    def viseme_sidecar(self, asset_id: str) -> list[tuple[int, float]] | None:
        """Hand-authored mouth track for an utterance, if one was shipped."""
        track = self._visemes.get(asset_id)
        return list(track) if track is not None else None

    def sidecars(self) -> dict[str, list[tuple[int, float]]]:
        return {k: list(v) for k, v in self._visemes.items()}

    @classmethod
    def load(cls, path: str | Path) -> "AssetIndex":
        return cls.from_json(Path(path).read_text(encoding="utf-8"))

    @classmethod
    def from_json(cls, text: bytes | str) -> "AssetIndex":
        """Read an index document: {"assets": [{id, kind, duration_ms, visemes?}]}."""
        data = json.loads(text)
        refs = []
        visemes: dict[str, list[tuple[int, float]]] = {}
        for entry in data.get("assets", []):
            refs.append(AssetRef(id=entry["id"], kind=entry["kind"],
                                 duration_ms=entry.get("duration_ms")))
            if "visemes" in entry:
                visemes[entry["id"]] = [(int(at), float(o)) for at, o in entry["visemes"]]
        return cls(refs, visemes)
