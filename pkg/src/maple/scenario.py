"""Scenario files: the story/quiz state graph, its parser and validator.

A scenario is a UTF-8 JSON document (schema_version 1) describing an
ordered list of story and quiz states. Story states advance on a timer;
quiz states wait for an answer. Parsing only enforces per-field typing;
graph-level checks live in validate_scenario so authoring tools can list
every problem at once.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources

from .assets import AssetIndex, AssetRef
from .errors import ParseError
from .face import Explicit, Preset, AUVector
from .orchestrator import BehaviorSpec, POLICIES

SCHEMA_VERSION = 1

INCORRECT_POLICIES = ("advance", "retry_once")

# Audio asset id that carries the repeated pronunciation of a target word.
WORD_AUDIO_PREFIX = "word_"

# Asset id of the default supportive utterance played on a wrong answer,
# when the scenario ships one.
SUPPORTIVE_AUDIO_ID = "supportive"


@dataclass(frozen=True)
class Timed:
    """Advance after a fixed dwell. ``next=None`` marks a terminal state."""

    duration_ms: int
    next: str | None = None


@dataclass(frozen=True)
class RepetitionPoint:
    """Planned repeated exposure of a target word, optionally with pointing."""

    word: str
    count: int = 3
    deictic: bool = False


@dataclass(frozen=True)
class StoryState:
    id: str
    text: str
    transition: Timed
    media: AssetRef | None = None
    audio: AssetRef | None = None
    behavior: BehaviorSpec | None = None
    repetition: RepetitionPoint | None = None


@dataclass(frozen=True)
class QuizState:
    id: str
    prompt: str
    options: tuple[str, ...]
    correct_index: int
    on_correct: BehaviorSpec
    on_incorrect: BehaviorSpec
    target_word: str | None = None
    incorrect_policy: str = "advance"
    timeout_ms: int | None = None
    next: str | None = None


@dataclass(frozen=True)
class Scenario:
    id: str
    schema_version: int
    title: str
    target_words: tuple[str, ...]
    states: tuple  # StoryState | QuizState, in file order
    initial_state: str
    asset_manifest: tuple[AssetRef, ...]

    def state(self, state_id: str):
        for s in self.states:
            if s.id == state_id:
                return s
        raise KeyError(state_id)

    def manifest_index(self) -> AssetIndex:
        """Treat the declared manifest as the available-asset index."""
        return AssetIndex(self.asset_manifest)


@dataclass(frozen=True)
class Finding:
    code: str
    state_id: str | None
    message: str


@dataclass
class ValidationReport:
    errors: list[Finding] = field(default_factory=list)
    warnings: list[Finding] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.errors


def next_state_of(state) -> str | None:
    return state.transition.next if isinstance(state, StoryState) else state.next


def is_terminal(state) -> bool:
    return next_state_of(state) is None


def dolch_words() -> list[str]:
    """The bundled high-frequency sight-word reference list."""
    raw = resources.files("maple.data").joinpath("dolch.txt").read_text(encoding="utf-8")
    return [line.strip() for line in raw.splitlines() if line.strip()]


# --- parsing -------------------------------------------------------------


def parse_scenario(document: bytes | str) -> Scenario:
    """Parse a scenario document, checking syntax and per-field types only."""
    if isinstance(document, bytes):
        try:
            document = document.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ParseError("scenario file is not UTF-8", offset=exc.start) from None
    try:
        data = json.loads(document)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, offset=exc.pos) from None
    if not isinstance(data, dict):
        raise ParseError("scenario document must be an object", path="$")

    version = _req(data, "schema_version", int, "schema_version")
    if version != SCHEMA_VERSION:
        raise ParseError(f"unknown schema_version {version}", path="schema_version",
                         code="UNKNOWN_SCHEMA_VERSION")
    scenario_id = _req(data, "id", str, "id")
    title = _req(data, "title", str, "title")
    initial = _req(data, "initial_state", str, "initial_state")

    words_raw = _req(data, "target_words", list, "target_words")
    for i, w in enumerate(words_raw):
        if not isinstance(w, str) or not w:
            raise ParseError("target words must be non-empty strings",
                             path=f"target_words[{i}]")
    target_words = tuple(words_raw)

    manifest = _parse_manifest(_req(data, "assets", list, "assets"))
    by_id = {ref.id: ref for ref in manifest}

    states_raw = _req(data, "states", list, "states")
    states = []
    for i, raw in enumerate(states_raw):
        path = f"states[{i}]"
        if not isinstance(raw, dict):
            raise ParseError("state must be an object", path=path)
        kind = _req(raw, "kind", str, f"{path}.kind")
        if kind == "story":
            states.append(_parse_story(raw, by_id, path))
        elif kind == "quiz":
            states.append(_parse_quiz(raw, by_id, path))
        else:
            raise ParseError(f"unknown state kind {kind!r}", path=f"{path}.kind")

    return Scenario(id=scenario_id, schema_version=version, title=title,
                    target_words=target_words, states=tuple(states),
                    initial_state=initial, asset_manifest=manifest)


def _req(obj: dict, key: str, typ, path: str):
    if key not in obj:
        raise ParseError("required field missing", path=path, code="MISSING_FIELD")
    value = obj[key]
    if typ is int and isinstance(value, bool):
        raise ParseError("expected an integer", path=path, code="WRONG_TYPE")
    if not isinstance(value, typ):
        raise ParseError(f"expected {typ.__name__}", path=path, code="WRONG_TYPE")
    return value


def _opt(obj: dict, key: str, typ, path: str):
    if key not in obj or obj[key] is None:
        return None
    return _req(obj, key, typ, path)


def _parse_manifest(raw: list) -> tuple[AssetRef, ...]:
    refs = []
    for i, entry in enumerate(raw):
        path = f"assets[{i}]"
        if not isinstance(entry, dict):
            raise ParseError("asset entry must be an object", path=path)
        kind = _req(entry, "kind", str, f"{path}.kind")
        duration = _opt(entry, "duration_ms", int, f"{path}.duration_ms")
        try:
            refs.append(AssetRef(id=_req(entry, "id", str, f"{path}.id"),
                                 kind=kind, duration_ms=duration))
        except ValueError as exc:
            raise ParseError(str(exc), path=path, code="BAD_ASSET") from None
    return tuple(refs)


def _asset(ref_id, by_id: dict, want_kind: str, path: str) -> AssetRef:
    if ref_id not in by_id:
        raise ParseError(f"asset {ref_id!r} not declared in manifest", path=path,
                         code="UNKNOWN_ASSET")
    ref = by_id[ref_id]
    if ref.kind != want_kind:
        raise ParseError(f"asset {ref_id!r} is {ref.kind}, field needs {want_kind}",
                         path=path, code="WRONG_ASSET_KIND")
    return ref


def _parse_behavior(raw, by_id: dict, path: str) -> BehaviorSpec:
    if not isinstance(raw, dict):
        raise ParseError("behavior must be an object", path=path)
    gesture = _opt(raw, "gesture", str, f"{path}.gesture")
    speech = None
    speech_id = _opt(raw, "speech", str, f"{path}.speech")
    if speech_id is not None:
        speech = _asset(speech_id, by_id, "audio", f"{path}.speech")
    face = None
    if raw.get("face") is not None:
        face_raw = raw["face"]
        if isinstance(face_raw, str):
            face = Preset(face_raw)
        elif isinstance(face_raw, dict):
            try:
                au_map = {int(k): float(v) for k, v in face_raw.items()}
                face = Explicit(AUVector.from_map(au_map))
            except (TypeError, ValueError) as exc:
                raise ParseError(str(exc), path=f"{path}.face") from None
        else:
            raise ParseError("face must be a preset name or an AU map",
                             path=f"{path}.face")
    policy = _opt(raw, "policy", str, f"{path}.policy") or "parallel"
    if policy not in POLICIES:
        raise ParseError(f"unknown policy {policy!r}", path=f"{path}.policy")
    try:
        return BehaviorSpec(gesture=gesture, speech=speech, face=face, policy=policy)
    except ValueError as exc:
        raise ParseError(str(exc), path=path) from None


def _parse_story(raw: dict, by_id: dict, path: str) -> StoryState:
    media = None
    media_id = _opt(raw, "media", str, f"{path}.media")
    if media_id is not None:
        media = _asset(media_id, by_id, "image", f"{path}.media")
    audio = None
    audio_id = _opt(raw, "audio", str, f"{path}.audio")
    if audio_id is not None:
        audio = _asset(audio_id, by_id, "audio", f"{path}.audio")
    behavior = None
    if raw.get("behavior") is not None:
        behavior = _parse_behavior(raw["behavior"], by_id, f"{path}.behavior")
    repetition = None
    if raw.get("repetition") is not None:
        rep = raw["repetition"]
        if not isinstance(rep, dict):
            raise ParseError("repetition must be an object", path=f"{path}.repetition")
        count = _opt(rep, "count", int, f"{path}.repetition.count")
        repetition = RepetitionPoint(
            word=_req(rep, "word", str, f"{path}.repetition.word"),
            count=3 if count is None else count,
            deictic=bool(_opt(rep, "deictic", bool, f"{path}.repetition.deictic")))
    trans_raw = _req(raw, "transition", dict, f"{path}.transition")
    transition = Timed(
        duration_ms=_req(trans_raw, "duration_ms", int, f"{path}.transition.duration_ms"),
        next=_opt(trans_raw, "next", str, f"{path}.transition.next"))
    return StoryState(id=_req(raw, "id", str, f"{path}.id"),
                      text=_req(raw, "text", str, f"{path}.text"),
                      transition=transition, media=media, audio=audio,
                      behavior=behavior, repetition=repetition)


def _parse_quiz(raw: dict, by_id: dict, path: str) -> QuizState:
    options = _req(raw, "options", list, f"{path}.options")
    for i, opt in enumerate(options):
        if not isinstance(opt, str):
            raise ParseError("options must be strings", path=f"{path}.options[{i}]")
    policy = _opt(raw, "incorrect_policy", str, f"{path}.incorrect_policy") or "advance"
    if policy not in INCORRECT_POLICIES:
        raise ParseError(f"unknown incorrect_policy {policy!r}",
                         path=f"{path}.incorrect_policy")
    if raw.get("on_correct") is not None:
        on_correct = _parse_behavior(raw["on_correct"], by_id, f"{path}.on_correct")
    else:
        on_correct = default_correct_feedback()
    if raw.get("on_incorrect") is not None:
        on_incorrect = _parse_behavior(raw["on_incorrect"], by_id, f"{path}.on_incorrect")
    else:
        on_incorrect = default_incorrect_feedback(by_id)
    return QuizState(id=_req(raw, "id", str, f"{path}.id"),
                     prompt=_req(raw, "prompt", str, f"{path}.prompt"),
                     options=tuple(options),
                     correct_index=_req(raw, "correct_index", int, f"{path}.correct_index"),
                     target_word=_opt(raw, "target_word", str, f"{path}.target_word"),
                     on_correct=on_correct, on_incorrect=on_incorrect,
                     incorrect_policy=policy,
                     timeout_ms=_opt(raw, "timeout_ms", int, f"{path}.timeout_ms"),
                     next=_opt(raw, "next", str, f"{path}.next"))


def default_correct_feedback() -> BehaviorSpec:
    return BehaviorSpec(face=Preset("happy"), gesture="affirmative_nod",
                        policy="parallel")


def default_incorrect_feedback(by_id: dict | None = None) -> BehaviorSpec:
    """Supportive rather than evaluative: a shared 'we hit a snag' cue."""
    speech = None
    if by_id:
        candidate = by_id.get(SUPPORTIVE_AUDIO_ID)
        if candidate is not None and candidate.kind == "audio":
            speech = candidate
    return BehaviorSpec(face=Preset("frown"), speech=speech, policy="parallel")


# --- serialization -------------------------------------------------------


def serialize_scenario(scenario: Scenario) -> bytes:
    """Canonical document form; parse(serialize(s)) == s for accepted scenarios."""
    doc = {
        "schema_version": scenario.schema_version,
        "id": scenario.id,
        "title": scenario.title,
        "target_words": list(scenario.target_words),
        "initial_state": scenario.initial_state,
        "assets": [ref.as_dict() for ref in scenario.asset_manifest],
        "states": [_state_doc(s) for s in scenario.states],
    }
    return (json.dumps(doc, indent=2, ensure_ascii=False) + "\n").encode("utf-8")


def _behavior_doc(spec: BehaviorSpec) -> dict:
    return spec.as_dict()


def _state_doc(state) -> dict:
    if isinstance(state, StoryState):
        doc: dict = {"kind": "story", "id": state.id, "text": state.text}
        if state.media is not None:
            doc["media"] = state.media.id
        if state.audio is not None:
            doc["audio"] = state.audio.id
        if state.behavior is not None:
            doc["behavior"] = _behavior_doc(state.behavior)
        if state.repetition is not None:
            doc["repetition"] = {"word": state.repetition.word,
                                 "count": state.repetition.count,
                                 "deictic": state.repetition.deictic}
        doc["transition"] = {"duration_ms": state.transition.duration_ms,
                             "next": state.transition.next}
        return doc
    doc = {"kind": "quiz", "id": state.id, "prompt": state.prompt,
           "options": list(state.options), "correct_index": state.correct_index}
    if state.target_word is not None:
        doc["target_word"] = state.target_word
    doc["on_correct"] = _behavior_doc(state.on_correct)
    doc["on_incorrect"] = _behavior_doc(state.on_incorrect)
    doc["incorrect_policy"] = state.incorrect_policy
    if state.timeout_ms is not None:
        doc["timeout_ms"] = state.timeout_ms
    doc["next"] = state.next
    return doc


# --- validation ----------------------------------------------------------


def validate_scenario(scenario: Scenario, assets: AssetIndex) -> ValidationReport:
    """List every violated invariant; findings are data, not failures.

    Ordering is stable: scenario-wide findings first, then per-state in
    file order, each group sorted by code.
    """
    errors: list[tuple[int, Finding]] = []
    warnings: list[tuple[int, Finding]] = []
    order = {s.id: i for i, s in enumerate(scenario.states)}

    def err(code, state_id, message):
        errors.append((order.get(state_id, -1), Finding(code, state_id, message)))

    def warn(code, state_id, message):
        warnings.append((order.get(state_id, -1), Finding(code, state_id, message)))

    seen: set[str] = set()
    for i, state in enumerate(scenario.states):
        if not state.id:
            err("EMPTY_STATE_ID", None, f"state #{i} has an empty id")
        elif state.id in seen:
            err("DUPLICATE_STATE_ID", state.id, f"state id {state.id!r} appears twice")
        seen.add(state.id)

    ids = {s.id for s in scenario.states}
    if scenario.initial_state not in ids:
        err("UNKNOWN_INITIAL_STATE", None,
            f"initial_state {scenario.initial_state!r} is not a state")
    if not any(is_terminal(s) for s in scenario.states):
        err("NO_TERMINAL_STATE", None, "every state has an outgoing transition")

    referenced: set[str] = set()
    for state in scenario.states:
        nxt = next_state_of(state)
        if nxt is not None and nxt not in ids:
            err("UNKNOWN_TRANSITION_TARGET", state.id,
                f"{state.id!r} points at missing state {nxt!r}")
        if isinstance(state, StoryState):
            _check_story(state, scenario, assets, referenced, err, warn)
        else:
            _check_quiz(state, scenario, assets, referenced, err, warn)

    for state_id in _unreachable(scenario, ids):
        err("UNREACHABLE_STATE", state_id,
            f"{state_id!r} cannot be reached from the initial state")

    for ref in scenario.asset_manifest:
        indexed = assets.get(ref.id)
        if indexed is None:
            continue  # MISSING_ASSET is raised where the asset is used
        if indexed.kind != ref.kind:
            err("ASSET_KIND_MISMATCH", None,
                f"asset {ref.id!r} declared {ref.kind} but indexed as {indexed.kind}")
        elif (ref.duration_ms is not None and indexed.duration_ms is not None
              and ref.duration_ms != indexed.duration_ms):
            warn("DURATION_MISMATCH", None,
                 f"asset {ref.id!r} declared {ref.duration_ms}ms, index has "
                 f"{indexed.duration_ms}ms")
        if ref.id not in referenced:
            warn("UNUSED_ASSET", None, f"asset {ref.id!r} is never referenced")

    errors.sort(key=lambda pair: (pair[0], pair[1].code))
    warnings.sort(key=lambda pair: (pair[0], pair[1].code))
    return ValidationReport(errors=[f for _, f in errors],
                            warnings=[f for _, f in warnings])


def _use_asset(ref: AssetRef | None, state_id, assets: AssetIndex,
               referenced: set, err) -> None:
    if ref is None:
        return
    referenced.add(ref.id)
    if ref.id not in assets:
        err("MISSING_ASSET", state_id, f"asset {ref.id!r} is not in the asset index")


def _check_story(state: StoryState, scenario, assets, referenced, err, warn) -> None:
    if state.transition.duration_ms <= 0:
        err("NONPOSITIVE_DURATION", state.id, "timed transition must be > 0 ms")
    if not state.text and state.audio is None:
        err("EMPTY_STORY_TEXT", state.id, "story text may be empty only with audio")
    _use_asset(state.media, state.id, assets, referenced, err)
    _use_asset(state.audio, state.id, assets, referenced, err)
    if state.behavior is not None:
        _use_asset(state.behavior.speech, state.id, assets, referenced, err)
        if state.behavior.gesture is not None:
            referenced.add(state.behavior.gesture)
    rep = state.repetition
    if rep is not None:
        if rep.count < 1:
            err("NONPOSITIVE_REPETITION_COUNT", state.id,
                f"repetition count {rep.count} must be >= 1")
        if rep.word not in scenario.target_words:
            err("REPETITION_WORD_NOT_TARGET", state.id,
                f"{rep.word!r} is not in target_words")
        word_asset = assets.get(WORD_AUDIO_PREFIX + rep.word)
        referenced.add(WORD_AUDIO_PREFIX + rep.word)
        if word_asset is None or word_asset.kind != "audio":
            err("MISSING_WORD_AUDIO", state.id,
                f"no audio asset {WORD_AUDIO_PREFIX + rep.word!r} for repetition")


def _check_quiz(state: QuizState, scenario, assets, referenced, err, warn) -> None:
    if len(state.options) < 2:
        err("TOO_FEW_OPTIONS", state.id, "a quiz needs at least two options")
    if not 0 <= state.correct_index < len(state.options):
        err("CORRECT_INDEX_OUT_OF_RANGE", state.id,
            f"correct_index {state.correct_index} with {len(state.options)} options")
    if state.timeout_ms is not None and state.timeout_ms <= 0:
        err("NONPOSITIVE_TIMEOUT", state.id, "timeout_ms must be > 0 when present")
    if state.target_word is not None and state.target_word not in scenario.target_words:
        warn("TARGET_WORD_NOT_LISTED", state.id,
             f"target_word {state.target_word!r} is not in target_words")
    for spec in (state.on_correct, state.on_incorrect):
        _use_asset(spec.speech, state.id, assets, referenced, err)
        if spec.gesture is not None:
            referenced.add(spec.gesture)


def _unreachable(scenario: Scenario, ids: set[str]) -> list[str]:
    if scenario.initial_state not in ids:
        return []  # nothing meaningful to report without a root
    frontier = [scenario.initial_state]
    reached = {scenario.initial_state}
    while frontier:
        current = frontier.pop()
        state = scenario.state(current)
        nxt = next_state_of(state)
        if nxt is not None and nxt in ids and nxt not in reached:
            reached.add(nxt)
            frontier.append(nxt)
    return [s.id for s in scenario.states if s.id and s.id not in reached]
