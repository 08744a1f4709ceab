"""Maple: a deterministic tutor-in-the-loop engine for story and quiz
activities with simulated robot speech, gestures, and facial feedback."""

__version__ = "0.1.0"

from .assets import AssetIndex, AssetRef
from .face import AUVector, PresetTable, build_viseme_track, resolve_expression
from .motion import MotionLibrary, compile_motion, parse_motion, simulate_bus
from .orchestrator import BehaviorPlan, BehaviorSpec, plan_behavior
from .report import TutorSummary, render_report, summarize
from .scenario import Scenario, parse_scenario, serialize_scenario, validate_scenario
from .session import Session, init_session, run_scripted, schedule_repetitions, step

__all__ = [
    "AssetIndex", "AssetRef", "AUVector", "PresetTable", "build_viseme_track",
    "resolve_expression", "MotionLibrary", "compile_motion", "parse_motion",
    "simulate_bus", "BehaviorPlan", "BehaviorSpec", "plan_behavior",
    "TutorSummary", "render_report", "summarize", "Scenario", "parse_scenario",
    "serialize_scenario", "validate_scenario", "Session", "init_session",
    "run_scripted", "schedule_repetitions", "step",
]
