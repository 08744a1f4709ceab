"""Facial command layer: Action Unit vectors, named presets, viseme tracks.

The face itself is rendered elsewhere (the console draws it); this module
only models the parameters that get dispatched.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources

from .assets import AssetRef

# Smallest AU set that covers neutral/happy/frown/surprised plus mouth motion.
SUPPORTED_AUS = (1, 2, 4, 6, 12, 15, 25, 26)

VISEME_INTERVAL_MS = 125  # 8 Hz alternation for synthesized mouth tracks
VISEME_OPENNESS = 0.8


class UnknownPreset(Exception):
    pass


class NotAudio(Exception):
    pass


@dataclass(frozen=True)
class AUVector:
    """Intensities for the supported Action Units, each clamped to [0, 1]."""

    intensities: tuple[float, ...]

    @classmethod
    def from_map(cls, values: dict[int, float] | None = None) -> "AUVector":
        values = values or {}
        for au in values:
            if au not in SUPPORTED_AUS:
                raise ValueError(f"unsupported AU id {au}")
        return cls(tuple(min(1.0, max(0.0, float(values.get(au, 0.0))))
                         for au in SUPPORTED_AUS))

    def intensity(self, au: int) -> float:
        return self.intensities[SUPPORTED_AUS.index(au)]

    def as_map(self) -> dict[int, float]:
        return dict(zip(SUPPORTED_AUS, self.intensities))

    def is_zero(self) -> bool:
        return all(v == 0.0 for v in self.intensities)


NEUTRAL = AUVector.from_map({})


@dataclass(frozen=True)
class Preset:
    """Expression looked up by name in a PresetTable."""

    name: str


@dataclass(frozen=True)
class Explicit:
    """Expression given directly as an AU vector."""

    vector: AUVector


# ExpressionSpec = Preset | Explicit
ExpressionSpec = object

BUILTIN_PRESETS = ("neutral", "happy", "frown", "surprised")


class PresetTable:
    """Named expression registry; entries can be replaced at runtime.

    Resolution copies the entry, so effects already dispatched keep the
    vector that was current when they were planned.
    """

    def __init__(self, presets: dict[str, AUVector] | None = None) -> None:
        self._presets = dict(presets) if presets is not None else _load_builtin_presets()
        missing = [n for n in BUILTIN_PRESETS if n not in self._presets]
        if missing:
            raise ValueError(f"preset table missing built-ins: {missing}")

    @classmethod
    def bundled(cls) -> "PresetTable":
        return cls()

    def names(self) -> list[str]:
        return sorted(self._presets)

    def get(self, name: str) -> AUVector:
        try:
            return self._presets[name]
        except KeyError:
            raise UnknownPreset(name) from None

    def set(self, name: str, vector: AUVector) -> None:
        if not name:
            raise ValueError("preset name must be non-empty")
        self._presets[name] = vector


def _load_builtin_presets() -> dict[str, AUVector]:
    raw = resources.files("maple.data").joinpath("presets.json").read_text(encoding="utf-8")
    table = json.loads(raw)
    return {name: AUVector.from_map({int(au): v for au, v in aus.items()})
            for name, aus in table.items()}


def resolve_expression(spec, presets: PresetTable) -> AUVector:
    """Turn an expression spec into a concrete AU vector."""
    if isinstance(spec, Preset):
        return presets.get(spec.name)
    if isinstance(spec, Explicit):
        return spec.vector  # AUVector construction already clamped
    raise TypeError(f"not an expression spec: {spec!r}")


@dataclass(frozen=True)
class VisemeTrack:
    """Mouth-openness keyframes for one utterance; always ends closed."""

    utterance_id: str
    events: tuple[tuple[int, float], ...]

    def duration_ms(self) -> int:
        return self.events[-1][0] if self.events else 0

    def as_list(self) -> list[list[float]]:
        return [[at, openness] for at, openness in self.events]


def build_viseme_track(utterance: AssetRef,
                       sidecar: list[tuple[int, float]] | None = None) -> VisemeTrack:
    """Mouth track for an utterance: the asset's sidecar if present,
    otherwise an alternating open/close pattern at 8 Hz.
    """
    if utterance.kind != "audio":
        raise NotAudio(utterance.id)
    duration = utterance.duration_ms or 0
    if sidecar is not None:
        return _normalize_sidecar(utterance.id, sidecar, duration)
    events: list[tuple[int, float]] = []
    at = 0
    open_phase = True
    while at < duration:
        events.append((at, VISEME_OPENNESS if open_phase else 0.0))
        open_phase = not open_phase
        at += VISEME_INTERVAL_MS
    events.append((duration, 0.0))
    return VisemeTrack(utterance.id, tuple(events))


def _normalize_sidecar(utterance_id: str, sidecar: list[tuple[int, float]],
                       duration: int) -> VisemeTrack:
    events: list[tuple[int, float]] = []
    last_at = 0
    for at, openness in sidecar:
        at = int(at)
        if at < last_at:
            raise ValueError(f"viseme sidecar for {utterance_id!r} is not time-ordered")
        if at > duration:
            break  # events past the audio end are dropped
        events.append((at, min(1.0, max(0.0, float(openness)))))
        last_at = at
    if not events or events[0][0] != 0:
        events.insert(0, (0, 0.0))
    if events[-1] != (duration, 0.0):
        events.append((duration, 0.0))
    return VisemeTrack(utterance_id, tuple(events))
