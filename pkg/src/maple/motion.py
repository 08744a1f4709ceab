"""Gesture motion files, their compiled command timelines, and a simulated
motor bus.

A motion file names the motors it drives and lists joint poses with hold
times. Compilation turns each keyframe into one grouped command that moves
every involved motor at once; the simulated bus records the torque/write
lifecycle instead of talking to hardware.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .errors import ParseError

JOINT_LIMIT_DEG = 180.0

BUNDLED_MOTIONS = ("wave", "point_at_screen", "affirmative_nod", "hold_still")


class UnknownMotion(Exception):
    pass


class OverlapError(Exception):
    """Two grouped commands address the same motor at the same instant."""

    def __init__(self, motor_id: int, at_ms: int) -> None:
        self.motor_id = motor_id
        self.at_ms = at_ms
        super().__init__(f"motor {motor_id} commanded twice at t={at_ms}ms")


@dataclass(frozen=True)
class Keyframe:
    pose: dict[int, float]  # motor id -> joint target in degrees
    hold_ms: int


@dataclass(frozen=True)
class MotionFile:
    name: str
    motor_ids: tuple[int, ...]
    keyframes: tuple[Keyframe, ...]


@dataclass(frozen=True)
class GroupCommand:
    at_ms: int
    targets: dict[int, float]

    def as_dict(self) -> dict:
        return {"at_ms": self.at_ms,
                "targets": {str(m): d for m, d in sorted(self.targets.items())}}


@dataclass(frozen=True)
class MotionTimeline:
    """Absolute-time schedule of grouped commands for one gesture."""

    name: str
    commands: tuple[GroupCommand, ...]
    total_duration_ms: int

    def as_dict(self) -> dict:
        return {"name": self.name,
                "commands": [c.as_dict() for c in self.commands],
                "total_duration_ms": self.total_duration_ms}


# Bus lifecycle events.


@dataclass(frozen=True)
class TorqueOn:
    motor_ids: tuple[int, ...]


@dataclass(frozen=True)
class GroupWrite:
    command: GroupCommand


@dataclass(frozen=True)
class TorqueOff:
    motor_ids: tuple[int, ...]


@dataclass(frozen=True)
class Close:
    pass


@dataclass(frozen=True)
class BusTrace:
    events: tuple


def parse_motion(document: bytes | str) -> MotionFile:
    """Parse a motion document: {"name", "motors", "keyframes": [{pose, hold_ms}]}."""
    if isinstance(document, bytes):
        try:
            document = document.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ParseError("motion file is not UTF-8", offset=exc.start) from None
    try:
        data = json.loads(document)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, offset=exc.pos) from None
    if not isinstance(data, dict):
        raise ParseError("motion document must be an object", path="$")

    name = data.get("name")
    if not isinstance(name, str) or not name:
        raise ParseError("name must be a non-empty string", path="name")

    motors = data.get("motors")
    if not isinstance(motors, list) or not motors or not all(
            isinstance(m, int) and not isinstance(m, bool) for m in motors):
        raise ParseError("motors must be a non-empty list of integers", path="motors")
    if len(set(motors)) != len(motors):
        raise ParseError("motor ids must be unique", path="motors", code="DUPLICATE_MOTOR")
    motor_ids = tuple(motors)

    raw_frames = data.get("keyframes")
    if not isinstance(raw_frames, list) or not raw_frames:
        raise ParseError("at least one keyframe required", path="keyframes",
                         code="NO_KEYFRAMES")

    keyframes = []
    last = len(raw_frames) - 1
    for i, frame in enumerate(raw_frames):
        where = f"keyframes[{i}]"
        if not isinstance(frame, dict):
            raise ParseError("keyframe must be an object", path=where)
        pose_raw = frame.get("pose")
        if not isinstance(pose_raw, dict):
            raise ParseError("pose must map motor ids to degrees", path=f"{where}.pose")
        pose: dict[int, float] = {}
        for key, deg in pose_raw.items():
            try:
                motor = int(key)
            except (TypeError, ValueError):
                raise ParseError(f"bad motor id {key!r}", path=f"{where}.pose") from None
            if motor not in motor_ids:
                raise ParseError(f"pose drives undeclared motor {motor}",
                                 path=f"{where}.pose", code="POSE_UNKNOWN_MOTOR")
            if not isinstance(deg, (int, float)) or isinstance(deg, bool):
                raise ParseError(f"target for motor {motor} must be a number",
                                 path=f"{where}.pose")
            deg = float(deg)
            if not -JOINT_LIMIT_DEG <= deg <= JOINT_LIMIT_DEG:
                raise ParseError(f"joint target {deg} outside ±{JOINT_LIMIT_DEG} degrees",
                                 path=f"{where}.pose", code="JOINT_OUT_OF_RANGE")
            pose[motor] = deg
        missing = [m for m in motor_ids if m not in pose]
        if missing:
            raise ParseError(f"pose missing declared motors {missing}",
                             path=f"{where}.pose", code="POSE_INCOMPLETE")
        hold = frame.get("hold_ms")
        if not isinstance(hold, int) or isinstance(hold, bool):
            raise ParseError("hold_ms must be an integer", path=f"{where}.hold_ms")
        if hold < 0:
            raise ParseError("hold_ms must be >= 0", path=f"{where}.hold_ms",
                             code="NEGATIVE_HOLD")
        # A zero hold between poses would put two grouped commands on the
        # same bus tick; only the final keyframe may hold for 0ms.
        if hold == 0 and i != last:
            raise ParseError("only the final keyframe may have hold_ms 0",
                             path=f"{where}.hold_ms", code="ZERO_HOLD")
        keyframes.append(Keyframe(pose=pose, hold_ms=hold))

    return MotionFile(name=name, motor_ids=motor_ids, keyframes=tuple(keyframes))


def compile_motion(motion: MotionFile, start_ms: int) -> MotionTimeline:
    """One grouped command per keyframe, issued at the start of its hold."""
    if start_ms < 0:
        raise ValueError("start_ms must be >= 0")
    commands = []
    at = start_ms
    for frame in motion.keyframes:
        commands.append(GroupCommand(at_ms=at, targets=dict(frame.pose)))
        at += frame.hold_ms
    return MotionTimeline(name=motion.name, commands=tuple(commands),
                          total_duration_ms=at - start_ms)


def simulate_bus(timelines: list[MotionTimeline], motor_ids: set[int]) -> BusTrace:
    """Replay timelines through the simulated bus lifecycle.

    The trace always opens with a single torque enable and closes with a
    torque disable followed by the bus close, mirroring safe shutdown.
    """
    ordered = sorted(
        ((cmd, idx) for idx, tl in enumerate(timelines) for cmd in tl.commands),
        key=lambda pair: (pair[0].at_ms, pair[1]))
    seen: dict[tuple[int, int], int] = {}
    for cmd, _ in ordered:
        for motor in cmd.targets:
            key = (cmd.at_ms, motor)
            if key in seen:
                raise OverlapError(motor, cmd.at_ms)
            seen[key] = 1
    motors = tuple(sorted(motor_ids))
    events: list = [TorqueOn(motors)]
    events.extend(GroupWrite(cmd) for cmd, _ in ordered)
    events.append(TorqueOff(motors))
    events.append(Close())
    return BusTrace(tuple(events))


class MotionLibrary:
    """Named gestures available to the planner."""

    def __init__(self, motions: "list[MotionFile] | tuple[MotionFile, ...]" = ()) -> None:
        self._motions: dict[str, MotionFile] = {}
        for m in motions:
            self.add(m)

    def add(self, motion: MotionFile) -> None:
        self._motions[motion.name] = motion

    def __contains__(self, name: str) -> bool:
        return name in self._motions

    def get(self, name: str) -> MotionFile:
        try:
            return self._motions[name]
        except KeyError:
            raise UnknownMotion(name) from None

    def names(self) -> list[str]:
        return sorted(self._motions)

    @classmethod
    def bundled(cls) -> "MotionLibrary":
        lib = cls()
        base = resources.files("maple.data").joinpath("motions")
        for name in BUNDLED_MOTIONS:
            lib.add(parse_motion(base.joinpath(f"{name}.json").read_text(encoding="utf-8")))
        return lib

    @classmethod
    def from_dir(cls, path: str | Path) -> "MotionLibrary":
        lib = cls()
        for file in sorted(Path(path).glob("*.json")):
            lib.add(parse_motion(file.read_bytes()))
        return lib
