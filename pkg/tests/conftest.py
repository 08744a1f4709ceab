"""Shared fixtures and small scenario-building helpers."""

from __future__ import annotations

from importlib import resources

import pytest

from maple.assets import AssetIndex, AssetRef
from maple.face import PresetTable
from maple.motion import MotionLibrary
from maple.scenario import (QuizState, Scenario, StoryState, Timed,
                            default_correct_feedback,
                            default_incorrect_feedback, parse_scenario)
from maple.session import load_script


def sample_text(name: str) -> str:
    return resources.files("maple.data").joinpath(f"sample/{name}").read_text("utf-8")


@pytest.fixture(scope="session")
def motions() -> MotionLibrary:
    return MotionLibrary.bundled()


@pytest.fixture()
def presets() -> PresetTable:
    return PresetTable.bundled()


@pytest.fixture(scope="session")
def sample_scenario() -> Scenario:
    return parse_scenario(sample_text("maple_forest.json"))


@pytest.fixture(scope="session")
def sample_assets() -> AssetIndex:
    return AssetIndex.from_json(sample_text("assets.json"))


@pytest.fixture(scope="session")
def sample_script() -> list:
    return load_script(sample_text("script.json"))


# -- scenario construction helpers ------------------------------------------


def audio(asset_id: str, duration_ms: int = 500) -> AssetRef:
    return AssetRef(id=asset_id, kind="audio", duration_ms=duration_ms)


def story(state_id: str, duration_ms: int = 1000, next_id: str | None = None,
          **kwargs) -> StoryState:
    kwargs.setdefault("text", f"text of {state_id}")
    return StoryState(id=state_id, transition=Timed(duration_ms, next_id), **kwargs)


def quiz(state_id: str, next_id: str | None = None, options=("a", "b", "c"),
         correct_index: int = 0, manifest: tuple = (), **kwargs) -> QuizState:
    by_id = {ref.id: ref for ref in manifest}
    kwargs.setdefault("on_correct", default_correct_feedback())
    kwargs.setdefault("on_incorrect", default_incorrect_feedback(by_id))
    return QuizState(id=state_id, prompt=f"prompt of {state_id}",
                     options=tuple(options), correct_index=correct_index,
                     next=next_id, **kwargs)


def scn(states, assets=(), target_words=(), scenario_id="test",
        initial: str | None = None) -> Scenario:
    return Scenario(id=scenario_id, schema_version=1, title="test scenario",
                    target_words=tuple(target_words), states=tuple(states),
                    initial_state=initial or states[0].id,
                    asset_manifest=tuple(assets))
