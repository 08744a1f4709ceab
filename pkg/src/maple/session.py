"""Deterministic event-driven execution of a scenario.

The session is a single-owner state machine: every input (ticks, answers,
the tutor's pause toggle) arrives as an Event, and each step returns the
effects to perform. Two clocks are kept: ``wall_ms`` counts all elapsed
time, ``clock_ms`` (active time) freezes while paused, so tutor
interventions never leak into the activity's own timing.

Time handling is boundary-exact: a tick is consumed in sub-steps up to
each interesting instant (element start, dwell end, quiz timeout), which
makes logs independent of tick granularity.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import report as report_mod
from .assets import AssetIndex, AssetRef
from .face import AUVector, PresetTable, VisemeTrack
from .logbook import LogEntry, SessionLog
from .motion import MotionLibrary, MotionTimeline
from .orchestrator import (BehaviorPlan, BehaviorSpec, Face, Gesture,
                           PlannedElement, Speech, element_duration,
                           plan_behavior)
from .scenario import (Scenario, StoryState, QuizState, ValidationReport,
                       WORD_AUDIO_PREFIX, validate_scenario)


class InvalidScenario(Exception):
    def __init__(self, report: ValidationReport) -> None:
        self.report = report
        lines = "; ".join(f"{f.code}({f.state_id})" for f in report.errors)
        super().__init__(f"scenario failed validation: {lines}")


class MissingWordAudio(Exception):
    pass


# --- events ---------------------------------------------------------------


@dataclass(frozen=True)
class Tick:
    delta_ms: int


@dataclass(frozen=True)
class AnswerSelected:
    option_index: int
    at_wall_ms: int


@dataclass(frozen=True)
class PauseToggled:
    pass


@dataclass(frozen=True)
class ElementDone:
    element_id: str


@dataclass(frozen=True)
class Shutdown:
    pass


# --- effects --------------------------------------------------------------


@dataclass(frozen=True)
class Log:
    entry: LogEntry


@dataclass(frozen=True)
class ShowMedia:
    asset: AssetRef


@dataclass(frozen=True)
class ShowText:
    text: str


@dataclass(frozen=True)
class ShowOptions:
    options: tuple[str, ...]


@dataclass(frozen=True)
class PlayAudio:
    asset: AssetRef
    visemes: VisemeTrack | None = None


@dataclass(frozen=True)
class SetFace:
    vector: AUVector


@dataclass(frozen=True)
class StartGesture:
    timeline: MotionTimeline


@dataclass(frozen=True)
class EmitSummary:
    summary: "report_mod.TutorSummary"


# Dispatch order for effects emitted at the same instant.
EFFECT_RANK = {Log: 0, ShowMedia: 1, ShowText: 2, ShowOptions: 3,
               PlayAudio: 4, SetFace: 5, StartGesture: 6, EmitSummary: 7}

PRESENTING = "presenting"
AWAITING_INPUT = "awaiting_input"
PAUSED = "paused"
FINISHED = "finished"

_FINISH = ("finish", None)
_RETRY = ("retry", None)


class _Emitter:
    """Collects a step's effects, sorting each same-instant batch by rank."""

    def __init__(self, session: "Session") -> None:
        self._session = session
        self._out: list = []
        self._batch: list = []
        self._batch_clock: int | None = None

    def add(self, effect) -> None:
        if self._batch_clock != self._session.clock_ms:
            self._flush()
            self._batch_clock = self._session.clock_ms
        self._batch.append(effect)

    def log(self, kind: str, payload: dict) -> None:
        entry = LogEntry(self._session.clock_ms, kind, payload)
        self._session.log.append(entry)
        self.add(Log(entry))

    def _flush(self) -> None:
        self._batch.sort(key=lambda e: EFFECT_RANK[type(e)])
        self._out.extend(self._batch)
        self._batch = []

    def finish(self) -> list:
        self._flush()
        return self._out


@dataclass
class _Slot:
    planned: PlannedElement
    marks: list  # (kind, payload) pairs logged when the element starts

    @property
    def start_ms(self) -> int:
        return self.planned.start_ms

    @property
    def end_ms(self) -> int:
        return self.planned.start_ms + element_duration(self.planned.element)


class Session:
    """Live state of one scenario run."""

    def __init__(self, scenario: Scenario, motions: MotionLibrary,
                 presets: PresetTable, assets: AssetIndex) -> None:
        self.scenario = scenario
        self.motions = motions
        self.presets = presets
        self.assets = assets
        self._states = {}
        for state in scenario.states:
            self._states.setdefault(state.id, state)
        self._sidecars = assets.sidecars()

        self.phase = PRESENTING
        self.current_state: str | None = None
        self.clock_ms = 0
        self.wall_ms = 0
        self.log = SessionLog()
        self.state_entered_at = 0
        self.quiz_shown_at: int | None = None  # wall ms of the live prompt
        self.retry_used = False

        self._program: list[_Slot] = []
        self._program_start = 0
        self._program_total = 0
        self._next_slot = 0
        self._narration_until = 0
        self._dwell_until: int | None = None
        self._timeout_at: int | None = None
        self._dest: tuple[str, str | None] = _FINISH
        self._prior_phase = PRESENTING
        self._pause_pending = False
        self._started = False

    # -- public views ------------------------------------------------------

    @property
    def plan_offset_ms(self) -> int:
        if not self._program:
            return 0
        return min(self.clock_ms - self._program_start, self._program_total)

    @property
    def active_plan(self) -> BehaviorPlan | None:
        if not self._program:
            return None
        return BehaviorPlan(tuple(s.planned for s in self._program),
                            self._program_total)

    def at_element_boundary(self) -> bool:
        """True when a pause toggle would freeze immediately."""
        if self.phase in (PAUSED, FINISHED, AWAITING_INPUT):
            return True
        return self._inflight_end() is None

    def snapshot(self) -> dict:
        snap: dict = {
            "scenario_id": self.scenario.id,
            "state_id": self.current_state,
            "kind": None,
            "phase": self.phase,
            "paused": self.phase == PAUSED,
            "clock_ms": self.clock_ms,
        }
        if self.current_state is not None:
            state = self._states[self.current_state]
            if isinstance(state, QuizState):
                snap.update(kind="quiz", prompt=state.prompt,
                            options=list(state.options))
            else:
                snap.update(kind="story", text=state.text,
                            media=state.media.id if state.media else None)
        return snap

    # -- event handling ------------------------------------------------------

    def start(self) -> list:
        if self._started:
            raise RuntimeError("session already started")
        self._started = True
        em = _Emitter(self)
        self._enter_state(self.scenario.initial_state, em)
        self._settle(em)
        return em.finish()

    def step(self, event) -> list:
        if not self._started:
            raise RuntimeError("session not started")
        em = _Emitter(self)
        if isinstance(event, Tick):
            self._on_tick(event, em)
        elif isinstance(event, AnswerSelected):
            self._on_answer(event, em)
        elif isinstance(event, PauseToggled):
            self._on_pause_toggle(em)
        elif isinstance(event, Shutdown):
            self._on_shutdown(em)
        elif isinstance(event, ElementDone):
            pass  # the clock, not device completion, is authoritative
        else:
            raise TypeError(f"not a session event: {event!r}")
        return em.finish()

    # -- internals -----------------------------------------------------------

    def _protocol_error(self, em: _Emitter, event_name: str) -> None:
        em.log("protocol_error", {"phase": self.phase, "event": event_name})

    def _on_tick(self, event: Tick, em: _Emitter) -> None:
        if event.delta_ms <= 0:
            self._protocol_error(em, "tick")
            return
        self.wall_ms += event.delta_ms
        if self.phase in (PAUSED, FINISHED):
            return
        remaining = event.delta_ms
        self._settle(em)
        while remaining > 0 and self.phase in (PRESENTING, AWAITING_INPUT):
            dist = self._next_boundary_distance()
            sub = remaining if dist is None else min(dist, remaining)
            self.clock_ms += sub
            remaining -= sub
            self._settle(em)

    def _on_answer(self, event: AnswerSelected, em: _Emitter) -> None:
        if self.phase != AWAITING_INPUT:
            self._protocol_error(em, "answer")
            return
        state = self._states[self.current_state]
        if not 0 <= event.option_index < len(state.options):
            self._protocol_error(em, "answer")
            return
        shown_wall = self.quiz_shown_at or 0
        if event.at_wall_ms < shown_wall:
            self._protocol_error(em, "answer")  # stamped before the prompt appeared
            return
        correct = event.option_index == state.correct_index
        em.log("quiz_answered", {
            "state_id": state.id,
            "option": event.option_index,
            "correct": correct,
            "response_time_ms": event.at_wall_ms - shown_wall,
        })
        if not correct and state.incorrect_policy == "retry_once" and not self.retry_used:
            self.retry_used = True
            dest = _RETRY
        else:
            dest = ("state", state.next) if state.next else _FINISH
        spec = state.on_correct if correct else state.on_incorrect
        self.phase = PRESENTING
        self._timeout_at = None
        self._install_program(self._plan(spec), [])
        self._dwell_until = self.clock_ms + self._program_total
        self._dest = dest
        self._settle(em)

    def _on_pause_toggle(self, em: _Emitter) -> None:
        if self.phase == PAUSED:
            self.phase = self._prior_phase
            em.log("resume", {"wall_ms": self.wall_ms})
            self._settle(em)
        elif self._pause_pending:
            self._pause_pending = False  # toggled back before taking effect
        elif self.phase in (PRESENTING, AWAITING_INPUT):
            self._pause_pending = True
            self._settle(em)
        else:
            self._protocol_error(em, "pause_toggle")

    def _on_shutdown(self, em: _Emitter) -> None:
        if self.phase == FINISHED:
            return
        self._finish(em, "shutdown")

    def _plan(self, spec: BehaviorSpec, start_ms: int = 0) -> BehaviorPlan:
        return plan_behavior(spec, self.motions, self.presets, start_ms,
                             self._sidecars)

    def _install_program(self, plan: BehaviorPlan | None,
                         marks_by_index: list) -> None:
        slots = []
        if plan is not None:
            for i, planned in enumerate(plan.elements):
                marks = marks_by_index[i] if i < len(marks_by_index) else []
                slots.append(_Slot(planned, marks))
        slots.sort(key=lambda s: s.start_ms)
        self._program = slots
        self._program_start = self.clock_ms
        self._program_total = plan.total_duration_ms if plan is not None else 0
        self._next_slot = 0

    def _inflight_end(self) -> int | None:
        """Session clock at which everything currently running will be done."""
        ends = [self._program_start + s.end_ms
                for s in self._program[:self._next_slot]
                if self._program_start + s.end_ms > self.clock_ms]
        if self._narration_until > self.clock_ms:
            ends.append(self._narration_until)
        return max(ends) if ends else None

    def _next_boundary_distance(self) -> int | None:
        if self._pause_pending:
            end = self._inflight_end()
            return max(0, end - self.clock_ms) if end is not None else 0
        candidates = []
        if self.phase == PRESENTING:
            if self._next_slot < len(self._program):
                candidates.append(self._program_start
                                  + self._program[self._next_slot].start_ms
                                  - self.clock_ms)
            if self._dwell_until is not None:
                candidates.append(self._dwell_until - self.clock_ms)
        elif self.phase == AWAITING_INPUT:
            if self._timeout_at is not None:
                candidates.append(self._timeout_at - self.clock_ms)
        return min(candidates) if candidates else None

    def _settle(self, em: _Emitter) -> None:
        """Fire every boundary that is due at the current instant."""
        while self.phase in (PRESENTING, AWAITING_INPUT):
            if self._pause_pending:
                end = self._inflight_end()
                if end is None or end <= self.clock_ms:
                    self._pause_pending = False
                    self._prior_phase = self.phase
                    self.phase = PAUSED
                    em.log("pause", {"wall_ms": self.wall_ms})
                return  # waiting for the running element; nothing else moves
            if self.phase == PRESENTING and self._emit_due(em):
                continue
            if (self.phase == AWAITING_INPUT and self._timeout_at is not None
                    and self.clock_ms >= self._timeout_at):
                state = self._states[self.current_state]
                em.log("quiz_timeout", {"state_id": state.id})
                self._timeout_at = None
                dest = ("state", state.next) if state.next else _FINISH
                self._goto(dest, em)
                continue
            if (self.phase == PRESENTING and self._dwell_until is not None
                    and self.clock_ms >= self._dwell_until
                    and self._next_slot >= len(self._program)):
                self._goto(self._dest, em)
                continue
            return

    def _emit_due(self, em: _Emitter) -> bool:
        offset = self.plan_offset_ms
        emitted = False
        while self._next_slot < len(self._program):
            slot = self._program[self._next_slot]
            if slot.start_ms > offset:
                break
            for kind, payload in slot.marks:
                em.log(kind, payload)
            element = slot.planned.element
            if isinstance(element, Speech):
                em.add(PlayAudio(element.asset, element.visemes))
            elif isinstance(element, Gesture):
                em.add(StartGesture(element.timeline))
            elif isinstance(element, Face):
                em.add(SetFace(element.vector))
            self._next_slot += 1
            emitted = True
        return emitted

    def _goto(self, dest: tuple[str, str | None], em: _Emitter) -> None:
        self._program = []
        self._program_total = 0
        self._next_slot = 0
        self._dwell_until = None
        self._narration_until = 0
        kind, target = dest
        if kind == "finish":
            self._finish(em, "finished")
        elif kind == "retry":
            self._show_quiz(self._states[self.current_state], em)
        else:
            self._enter_state(target, em)

    def _enter_state(self, state_id: str, em: _Emitter) -> None:
        state = self._states[state_id]
        self.current_state = state_id
        self.state_entered_at = self.clock_ms
        self.phase = PRESENTING
        em.log("state_entered", {"state_id": state_id})
        if isinstance(state, QuizState):
            self.retry_used = False
            self._show_quiz(state, em)
            return
        if state.media is not None:
            em.add(ShowMedia(state.media))
        if state.text:
            em.add(ShowText(state.text))
        narration_ms = 0
        if state.audio is not None:
            em.add(PlayAudio(state.audio))
            narration_ms = state.audio.duration_ms
        self._narration_until = self.clock_ms + narration_ms
        plan, marks = self._build_story_program(state, narration_ms)
        self._install_program(plan, marks)
        self._dwell_until = self.clock_ms + max(
            state.transition.duration_ms, self._program_total, narration_ms)
        self._dest = (("state", state.transition.next)
                      if state.transition.next else _FINISH)

    def _show_quiz(self, state: QuizState, em: _Emitter) -> None:
        self.phase = AWAITING_INPUT
        self.quiz_shown_at = self.wall_ms
        self._timeout_at = (self.clock_ms + state.timeout_ms
                            if state.timeout_ms is not None else None)
        em.log("quiz_shown", {"state_id": state.id, "wall_ms": self.wall_ms})
        em.add(ShowText(state.prompt))
        em.add(ShowOptions(state.options))

    def _build_story_program(self, state: StoryState, narration_ms: int):
        elements: list[PlannedElement] = []
        marks: list[list] = []
        behavior_end = 0
        if state.behavior is not None:
            plan = self._plan(state.behavior)
            elements.extend(plan.elements)
            marks.extend([] for _ in plan.elements)
            behavior_end = plan.total_duration_ms
        if state.repetition is not None:
            rep = state.repetition
            word_asset = self.assets.get(WORD_AUDIO_PREFIX + rep.word)
            specs = schedule_repetitions(state, self.motions, self.assets)
            # Repetitions wait for the narration and the state behavior,
            # then the word plays back to back; a deictic point rides the
            # first repetition and simply keeps going underneath the rest.
            start = max(behavior_end, narration_ms)
            for index, spec in enumerate(specs, start=1):
                plan = self._plan(spec, start + (index - 1) * word_asset.duration_ms)
                for planned in plan.elements:
                    if isinstance(planned.element, Speech):
                        marks.append([("word_exposure",
                                       {"word": rep.word,
                                        "repetition_index": index,
                                        "deictic": rep.deictic})])
                    else:
                        marks.append([])
                    elements.append(planned)
        if not elements:
            return None, []
        total = max(p.start_ms + element_duration(p.element) for p in elements)
        return BehaviorPlan(tuple(elements), total), marks

    def _finish(self, em: _Emitter, kind: str) -> None:
        self._program = []
        self._program_total = 0
        self._next_slot = 0
        self._dwell_until = None
        self._timeout_at = None
        self._narration_until = 0
        self._pause_pending = False
        em.log(kind, {})
        self.phase = FINISHED
        self.current_state = None
        em.add(EmitSummary(report_mod.summarize(self.log, self.scenario)))


# --- module-level operations ----------------------------------------------


def init_session(scenario: Scenario, motions: MotionLibrary, presets: PresetTable,
                 assets: AssetIndex | None = None) -> tuple[Session, list]:
    """Validate and start a session; initial-state effects come back with it."""
    if assets is None:
        assets = scenario.manifest_index()
    result = validate_scenario(scenario, assets)
    if not result.ok:
        raise InvalidScenario(result)
    for state in scenario.states:
        for spec in _behavior_specs_of(state):
            if spec.gesture is not None:
                motions.get(spec.gesture)  # raises UnknownMotion up front
        if isinstance(state, StoryState) and state.repetition is not None:
            if state.repetition.deictic:
                motions.get("point_at_screen")
    session = Session(scenario, motions, presets, assets)
    return session, session.start()


def _behavior_specs_of(state):
    if isinstance(state, StoryState):
        return [state.behavior] if state.behavior is not None else []
    return [state.on_correct, state.on_incorrect]


def step(session: Session, event) -> tuple[Session, list]:
    return session, session.step(event)


def schedule_repetitions(state: StoryState, motions: MotionLibrary,
                         assets: AssetIndex) -> list[BehaviorSpec]:
    """Specs for the repeated word exposures of a story state.

    The word plays ``count`` times; when the point is deictic the first
    repetition carries the pointing gesture in parallel and later ones are
    speech-only, so the point is held rather than restarted.
    """
    rep = state.repetition
    if rep is None:
        raise ValueError(f"state {state.id!r} has no repetition point")
    word_asset = assets.get(WORD_AUDIO_PREFIX + rep.word)
    if word_asset is None or word_asset.kind != "audio":
        raise MissingWordAudio(rep.word)
    if rep.deictic:
        motions.get("point_at_screen")
    specs = []
    for index in range(1, rep.count + 1):
        gesture = "point_at_screen" if (rep.deictic and index == 1) else None
        specs.append(BehaviorSpec(gesture=gesture, speech=word_asset,
                                  policy="parallel"))
    return specs


def load_script(text: bytes | str) -> list:
    """Read a script file: a JSON list of {at_ms, event, ...} objects."""
    import json

    if isinstance(text, bytes):
        text = text.decode("utf-8")
    script = []
    for i, raw in enumerate(json.loads(text)):
        at = raw["at_ms"]
        name = raw["event"]
        if name == "answer":
            event = AnswerSelected(raw["choice"], at)
        elif name == "pause_toggle":
            event = PauseToggled()
        elif name == "shutdown":
            event = Shutdown()
        else:
            raise ValueError(f"script entry {i}: unknown event {name!r}")
        script.append((at, event))
    return script


def run_scripted(scenario: Scenario, script: list,
                 motions: MotionLibrary | None = None,
                 presets: PresetTable | None = None,
                 assets: AssetIndex | None = None,
                 effects_out: list | None = None,
                 tick_ms: int = 10,
                 max_wall_ms: int = 600_000) -> SessionLog:
    """Headless replay: scripted events interleaved with synthetic ticks.

    ``script`` is a list of (wall_ms, event) pairs sorted by time; answer
    events are re-stamped with their script time. Returns the final log.
    """
    if motions is None:
        motions = MotionLibrary.bundled()
    if presets is None:
        presets = PresetTable.bundled()
    session, effects = init_session(scenario, motions, presets, assets)
    if effects_out is not None:
        effects_out.extend(effects)

    def run(event):
        out = session.step(event)
        if effects_out is not None:
            effects_out.extend(out)

    wall = 0
    for at, event in sorted(script, key=lambda item: item[0]):
        if at < 0:
            raise ValueError("script times must be >= 0")
        while wall < at:
            sub = min(tick_ms, at - wall)
            run(Tick(sub))
            wall += sub
        if isinstance(event, AnswerSelected):
            event = AnswerSelected(event.option_index, at)
        run(event)

    while session.phase != FINISHED and wall < max_wall_ms:
        if session.phase == PAUSED:
            break  # nobody left to resume
        if session.phase == AWAITING_INPUT and session._timeout_at is None:
            break  # unanswerable without a script entry
        run(Tick(tick_ms))
        wall += tick_ms
    return session.log
