"""Turn a session log into the tutor-facing formative summary.

The summary tells a tutor, per target word, how often the word was
presented and how quizzes on it went, plus attention flags (timeouts and
unusually slow answers) that suggest where to step in next time.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from statistics import median

from .logbook import SessionLog
from .scenario import QuizState, Scenario

OUTLIER_FACTOR = 2.0
OUTLIER_MIN_ANSWERS = 3


class ScenarioMismatch(Exception):
    pass


@dataclass(frozen=True)
class WordStats:
    exposures: int = 0
    quiz_attempts: int = 0
    quiz_correct: int = 0
    mean_response_time_ms: float | None = None


@dataclass(frozen=True)
class AttentionFlag:
    state_id: str
    reason: str  # "timeout" | "response_time_outlier"


@dataclass(frozen=True)
class Totals:
    quizzes_shown: int = 0
    answered: int = 0
    correct: int = 0
    paused_count: int = 0
    active_duration_ms: int = 0


@dataclass(frozen=True)
class TutorSummary:
    scenario_id: str
    per_word: dict[str, WordStats]
    attention_flags: tuple[AttentionFlag, ...]
    totals: Totals

    def as_dict(self) -> dict:
        return {
            "scenario_id": self.scenario_id,
            "per_word": {
                word: {
                    "exposures": st.exposures,
                    "quiz_attempts": st.quiz_attempts,
                    "quiz_correct": st.quiz_correct,
                    "mean_response_time_ms": st.mean_response_time_ms,
                }
                for word, st in sorted(self.per_word.items())
            },
            "attention_flags": [{"state_id": f.state_id, "reason": f.reason}
                                for f in self.attention_flags],
            "totals": {
                "quizzes_shown": self.totals.quizzes_shown,
                "answered": self.totals.answered,
                "correct": self.totals.correct,
                "paused_count": self.totals.paused_count,
                "active_duration_ms": self.totals.active_duration_ms,
            },
        }


def summarize(log: SessionLog, scenario: Scenario) -> TutorSummary:
    """Aggregate quiz, exposure, and pause entries into a TutorSummary."""
    quiz_word = {}
    for state in scenario.states:
        if isinstance(state, QuizState):
            quiz_word[state.id] = state.target_word

    shown = answered = correct_count = paused = 0
    exposures: dict[str, int] = {}
    attempts: dict[str, int] = {}
    corrects: dict[str, int] = {}
    times: dict[str, list[int]] = {}
    answer_entries = []
    timeout_entries = []

    for entry in log:
        kind = entry.kind
        if kind == "quiz_shown":
            _quiz_state(entry, quiz_word)
            shown += 1
        elif kind == "quiz_answered":
            state_id = _quiz_state(entry, quiz_word)
            answered += 1
            answer_entries.append(entry)
            if entry.payload.get("correct"):
                correct_count += 1
            word = quiz_word.get(state_id)
            if word is not None:
                attempts[word] = attempts.get(word, 0) + 1
                if entry.payload.get("correct"):
                    corrects[word] = corrects.get(word, 0) + 1
                times.setdefault(word, []).append(entry.payload["response_time_ms"])
        elif kind == "quiz_timeout":
            _quiz_state(entry, quiz_word)
            timeout_entries.append(entry)
        elif kind == "word_exposure":
            word = entry.payload["word"]
            exposures[word] = exposures.get(word, 0) + 1
        elif kind == "pause":
            paused += 1

    per_word: dict[str, WordStats] = {}
    words = set(scenario.target_words) | set(exposures) | set(attempts)
    for word in sorted(words):
        rts = times.get(word, [])
        per_word[word] = WordStats(
            exposures=exposures.get(word, 0),
            quiz_attempts=attempts.get(word, 0),
            quiz_correct=corrects.get(word, 0),
            mean_response_time_ms=sum(rts) / len(rts) if rts else None)

    flags = [AttentionFlag(e.payload["state_id"], "timeout") for e in timeout_entries]
    rts_all = [e.payload["response_time_ms"] for e in answer_entries]
    if len(rts_all) >= OUTLIER_MIN_ANSWERS:
        cutoff = OUTLIER_FACTOR * median(rts_all)
        flags.extend(AttentionFlag(e.payload["state_id"], "response_time_outlier")
                     for e in answer_entries
                     if e.payload["response_time_ms"] > cutoff)

    last_at = log.entries[-1].at_ms if len(log) else 0
    totals = Totals(quizzes_shown=shown, answered=answered, correct=correct_count,
                    paused_count=paused, active_duration_ms=last_at)
    return TutorSummary(scenario_id=scenario.id, per_word=per_word,
                        attention_flags=tuple(flags), totals=totals)


def _quiz_state(entry, quiz_word: dict) -> str:
    state_id = entry.payload.get("state_id")
    if state_id not in quiz_word:
        raise ScenarioMismatch(f"log references quiz state {state_id!r} "
                               f"that is not in the scenario")
    return state_id


def render_report(summary: TutorSummary, format: str = "text") -> bytes:
    if format == "structured":
        return (json.dumps(summary.as_dict(), indent=2, ensure_ascii=False)
                + "\n").encode("utf-8")
    if format != "text":
        raise ValueError(f"unknown report format {format!r}")
    return _render_text(summary).encode("utf-8")


def parse_report(data: bytes | str) -> TutorSummary:
    """Read back a structured report; round-trips render_report output."""
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    raw = json.loads(data)
    per_word = {word: WordStats(
        exposures=st["exposures"], quiz_attempts=st["quiz_attempts"],
        quiz_correct=st["quiz_correct"],
        mean_response_time_ms=st["mean_response_time_ms"])
        for word, st in raw["per_word"].items()}
    flags = tuple(AttentionFlag(f["state_id"], f["reason"])
                  for f in raw["attention_flags"])
    t = raw["totals"]
    return TutorSummary(scenario_id=raw["scenario_id"], per_word=per_word,
                        attention_flags=flags,
                        totals=Totals(quizzes_shown=t["quizzes_shown"],
                                      answered=t["answered"],
                                      correct=t["correct"],
                                      paused_count=t["paused_count"],
                                      active_duration_ms=t["active_duration_ms"]))


def _render_text(summary: TutorSummary) -> str:
    lines = []
    lines.append(f"Session summary for scenario '{summary.scenario_id}'")
    t = summary.totals
    lines.append(f"Active time: {t.active_duration_ms / 1000:.1f}s   "
                 f"Pauses: {t.paused_count}")
    lines.append("")
    idle = (t.quizzes_shown == 0 and t.answered == 0
            and all(st.exposures == 0 and st.quiz_attempts == 0
                    for st in summary.per_word.values()))
    if idle:
        lines.append("no quiz activity recorded")
        return "\n".join(lines) + "\n"
    lines.append(f"Quizzes: {t.answered}/{t.quizzes_shown} answered, "
                 f"{t.correct} correct")
    lines.append("")
    lines.append(f"{'word':<12} {'exposures':>9} {'attempts':>8} "
                 f"{'correct':>7} {'mean rt':>9}")
    lines.append("-" * 50)
    for word, st in sorted(summary.per_word.items()):
        rt = f"{st.mean_response_time_ms:.0f}ms" if st.mean_response_time_ms is not None else "-"
        lines.append(f"{word:<12} {st.exposures:>9} {st.quiz_attempts:>8} "
                     f"{st.quiz_correct:>7} {rt:>9}")
    if summary.attention_flags:
        lines.append("")
        lines.append("Attention flags:")
        for flag in summary.attention_flags:
            lines.append(f"  {flag.state_id}: {flag.reason}")
    return "\n".join(lines) + "\n"
