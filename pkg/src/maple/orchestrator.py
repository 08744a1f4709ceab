"""Behavior planning: turn a high-level request into an absolute-time plan.

All timing decisions live here. Speech, gesture, and face stay
time-relative on their own; the planner is what pins them to a clock,
which keeps the motor, face, and audio layers decoupled from each other.
"""

from __future__ import annotations

from dataclasses import dataclass

from .assets import AssetRef
from .face import (AUVector, Explicit, Preset, PresetTable, VisemeTrack,
                   build_viseme_track, resolve_expression)
from .motion import MotionLibrary, MotionTimeline, compile_motion

POLICIES = ("parallel", "speech_then_gesture", "gesture_then_speech")


class MissingDuration(Exception):
    pass


@dataclass(frozen=True)
class BehaviorSpec:
    """What a state asks the robot to do; at least one element required."""

    gesture: str | None = None
    speech: AssetRef | None = None
    face: object | None = None  # Preset | Explicit
    policy: str = "parallel"

    def __post_init__(self) -> None:
        if self.gesture is None and self.speech is None and self.face is None:
            raise ValueError("behavior needs at least one of gesture/speech/face")
        if self.policy not in POLICIES:
            raise ValueError(f"unknown policy {self.policy!r}")

    def as_dict(self) -> dict:
        out: dict = {"policy": self.policy}
        if self.gesture is not None:
            out["gesture"] = self.gesture
        if self.speech is not None:
            out["speech"] = self.speech.id
        if isinstance(self.face, Preset):
            out["face"] = self.face.name
        elif isinstance(self.face, Explicit):
            out["face"] = {str(au): v for au, v in self.face.vector.as_map().items() if v}
        return out


@dataclass(frozen=True)
class Speech:
    asset: AssetRef
    visemes: VisemeTrack


@dataclass(frozen=True)
class Gesture:
    timeline: MotionTimeline


@dataclass(frozen=True)
class Face:
    vector: AUVector


@dataclass(frozen=True)
class PlannedElement:
    start_ms: int
    element: object  # Speech | Gesture | Face


@dataclass(frozen=True)
class BehaviorPlan:
    elements: tuple[PlannedElement, ...]
    total_duration_ms: int

    def as_dict(self) -> dict:
        return {"elements": [_element_dict(p) for p in self.elements],
                "total_duration_ms": self.total_duration_ms}


def element_duration(element) -> int:
    if isinstance(element, Speech):
        return element.asset.duration_ms or 0
    if isinstance(element, Gesture):
        return element.timeline.total_duration_ms
    if isinstance(element, Face):
        return 0  # an expression is an instantaneous state change
    raise TypeError(f"not a planned element: {element!r}")


# Same-instant ordering follows the dispatch order of the engine's effects.
_KIND_RANK = {Speech: 0, Face: 1, Gesture: 2}


def _element_dict(planned: PlannedElement) -> dict:
    el = planned.element
    if isinstance(el, Speech):
        body = {"kind": "speech", "asset": el.asset.as_dict(),
                "visemes": el.visemes.as_list()}
    elif isinstance(el, Gesture):
        body = {"kind": "gesture", "timeline": el.timeline.as_dict()}
    else:
        body = {"kind": "face", "au": {str(a): v for a, v in el.vector.as_map().items()}}
    body["start_ms"] = planned.start_ms
    return body


def plan_behavior(spec: BehaviorSpec, motions: MotionLibrary, presets: PresetTable,
                  start_ms: int,
                  viseme_sidecars: dict[str, list[tuple[int, float]]] | None = None,
                  ) -> BehaviorPlan:
    """Schedule the elements of a behavior spec at absolute times.

    Sequential policies order speech and gesture; the face element (when
    present) always snaps to the first element's start. Presets resolve
    now, so later preset edits never rewrite an already-planned behavior.
    """
    if spec.speech is not None and not spec.speech.duration_ms:
        raise MissingDuration(spec.speech.id)

    speech_at = gesture_at = start_ms
    if spec.speech is not None and spec.gesture is not None:
        if spec.policy == "speech_then_gesture":
            gesture_at = start_ms + spec.speech.duration_ms
        elif spec.policy == "gesture_then_speech":
            motion = motions.get(spec.gesture)
            speech_at = start_ms + compile_motion(motion, 0).total_duration_ms

    elements: list[PlannedElement] = []
    if spec.speech is not None:
        sidecar = (viseme_sidecars or {}).get(spec.speech.id)
        track = build_viseme_track(spec.speech, sidecar)
        elements.append(PlannedElement(speech_at, Speech(spec.speech, track)))
    if spec.gesture is not None:
        timeline = compile_motion(motions.get(spec.gesture), gesture_at)
        elements.append(PlannedElement(gesture_at, Gesture(timeline)))
    if spec.face is not None:
        vector = resolve_expression(spec.face, presets)
        first = min(e.start_ms for e in elements) if elements else start_ms
        elements.append(PlannedElement(first, Face(vector)))

    elements.sort(key=lambda p: (p.start_ms, _KIND_RANK[type(p.element)]))
    total = max(p.start_ms + element_duration(p.element) for p in elements)
    return BehaviorPlan(tuple(elements), total)
