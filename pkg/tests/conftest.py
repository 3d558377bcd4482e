from __future__ import annotations

from random import Random
from typing import Sequence

import pytest

from cogopt.problems import ConstrainedProblem, make_problem
from cogopt.quality import QualityPair, State
from cogopt.script import Script, load_script, reference_script_path


class ScriptedRng:
    """Stands in for random.Random, replaying a fixed uniform sequence.

    Raises if the code under test draws more than was scripted, and exposes
    how many draws were consumed, so tests can pin draw budgets exactly.
    """

    def __init__(self, values: Sequence[float]) -> None:
        self._values = list(values)
        self.consumed = 0

    def random(self) -> float:
        if self.consumed >= len(self._values):
            raise AssertionError(
                f"scripted stream exhausted after {self.consumed} draws"
            )
        value = self._values[self.consumed]
        self.consumed += 1
        return value

    @property
    def remaining(self) -> int:
        return len(self._values) - self.consumed


class RecordingRandom(Random):
    """A real generator that remembers every uniform it hands out."""

    def __init__(self, seed: int) -> None:
        super().__init__(seed)
        self.draws: list[float] = []

    def random(self) -> float:  # type: ignore[override]
        value = super().random()
        self.draws.append(value)
        return value


def pair(v_con: float, v_obj: float) -> QualityPair:
    return QualityPair(v_con=v_con, v_obj=v_obj)


def state(coords: Sequence[float], v_con: float, v_obj: float) -> State:
    return State(tuple(float(c) for c in coords), pair(v_con, v_obj))


def flat_problem(
    dimension: int = 2,
    lower: float = 0.0,
    upper: float = 10.0,
    intervals: Sequence[tuple[float, float]] = (),
    eps_h: float = 1e-4,
) -> ConstrainedProblem:
    """A tiny synthetic instance: objective is the coordinate sum and each
    declared constraint row reads the matching coordinate."""

    rows = tuple(intervals)

    def evaluate_all(x: tuple[float, ...]) -> tuple[float, tuple[float, ...]]:
        return sum(x), tuple(x[i] for i in range(len(rows)))

    return make_problem(
        instance_id="FLAT",
        dimension=dimension,
        lower=(lower,) * dimension,
        upper=(upper,) * dimension,
        evaluate_all=evaluate_all,
        raw_intervals=rows,
        eps_h=eps_h,
    )


@pytest.fixture(scope="session")
def reference_script() -> Script:
    return load_script(reference_script_path())
