"""Sequential source-task selection strategies over hold durations.

Each selector repeatedly asks a trainer for a policy at a chosen duration,
merges the result into the landscape, and tracks the covered area. Selection
order matters only through the running landscape; the anytime property holds
for every strategy (truncating a run is the same as replaying its prefix).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from . import theory
from .landscape import (
    GapModel,
    HoldRange,
    Landscape,
    SlopeClass,
    aggregate_area,
    apply_transfer,
    segments,
)
from .trainers import EvaluatorResult


class SelectorKind(str, Enum):
    GTTL = "gttl"
    CTTL = "cttl"
    RTTL = "rttl"
    EXHAUSTIVE = "exhaustive"


class SelectionError(RuntimeError):
    """Trainer failure mid-run; carries the valid partial state."""

    def __init__(self, message: str, state: "SelectionState"):
        super().__init__(message)
        self.state = state


class GridExhausted(RuntimeError):
    """Every grid duration has been selected already."""


@dataclass
class SelectionState:
    """Everything accumulated across selection iterations."""

    landscape: Landscape
    sources: list[float] = field(default_factory=list)
    results: list[EvaluatorResult] = field(default_factory=list)
    area_history: list[float] = field(default_factory=list)
    budget: int = 15
    epsilon: float = 0.05

    @property
    def iteration(self) -> int:
        return len(self.sources)

    @property
    def area(self) -> float:
        return self.area_history[-1] if self.area_history else aggregate_area(self.landscape)


def _fresh_state(hold_range: HoldRange, budget: int, epsilon: float = 0.0) -> SelectionState:
    return SelectionState(landscape=Landscape.zeros(hold_range), budget=budget, epsilon=epsilon)


def _train_and_apply(state: SelectionState, trainer, model: GapModel, delta: float) -> None:
    snap = getattr(trainer, "snap_delta", None)
    if snap is not None:
        snapped = state.landscape.range.snap(snap(delta))
        # keep the exact grid pick when backend rounding would retrain an
        # already-selected task
        if snapped not in state.sources:
            delta = snapped
    try:
        result = trainer.evaluate(delta)
    except Exception as exc:  # anytime property: partial state stays valid
        raise SelectionError(f"trainer failed at delta={delta:.6g}: {exc}", state) from exc
    state.landscape = apply_transfer(state.landscape, model, delta, result.achieved)
    state.sources.append(delta)
    state.results.append(result)
    state.area_history.append(aggregate_area(state.landscape))


def _marginal_gain(land: Landscape, model: GapModel, delta: float) -> float:
    return aggregate_area(apply_transfer(land, model, delta, model.j_star)) - aggregate_area(land)


def _segment_candidate(segment, model: GapModel, is_first: bool) -> tuple[float, float]:
    """(pick, estimated gain) for one segment, tolerating asymmetric models."""
    if model.symmetric:
        return theory.optimal_pick_and_gain(segment, model, is_first)
    # Heuristic outside the symmetric theory: slope-weighted point for fresh
    # or V segments, trisection for monotone ones, mean slope for gains.
    mean_theta = (model.theta_left + model.theta_right) / 2
    length = segment.length
    if is_first:
        return theory.split_point(model, segment.left, segment.right), 0.75 * mean_theta * length**2
    if segment.slope_class is SlopeClass.SYMMETRIC_V:
        return theory.split_point(model, segment.left, segment.right), mean_theta * length**2 / 8
    if segment.slope_class is SlopeClass.POSITIVE:
        return (2 * segment.left + segment.right) / 3, mean_theta * length**2 / 3
    if segment.slope_class is SlopeClass.NEGATIVE:
        return (segment.left + 2 * segment.right) / 3, mean_theta * length**2 / 3
    return (segment.left + segment.right) / 2, mean_theta * length**2 / 3


def find_greedy_transfer_point(state: SelectionState, model: GapModel) -> float:
    """Pick of the segment with the largest estimated marginal area gain.

    Ties (mirror segments, equal-gain candidates) go to the coarser (larger)
    duration. If the winning pick snaps onto an already-selected duration,
    the best non-duplicate grid cell inside the winning segment is used
    instead, ranked by true marginal gain.
    """
    land = state.landscape
    rng = land.range
    if rng.n_points < 2:
        raise ValueError("hold range has no segments")
    is_first = not state.sources
    best = None  # (gain, candidate, segment)
    for seg in segments(land, state.sources):
        cand, gain = _segment_candidate(seg, model, is_first)
        cand = rng.snap(cand)
        if best is None or gain > best[0] + 1e-12 * (abs(best[0]) + 1.0) or (
            abs(gain - best[0]) <= 1e-12 * (abs(best[0]) + 1.0) and cand > best[1]
        ):
            best = (gain, cand, seg)
    _, candidate, seg = best
    if candidate not in state.sources:
        return candidate
    taken = set(state.sources)

    def best_fresh_cell(lo: int, hi: int):
        found = None  # (gain, duration), ties to the coarser duration
        for i in range(lo, hi + 1):
            d = rng.point(i)
            if d in taken:
                continue
            g = _marginal_gain(land, model, d)
            if found is None or g > found[0] + 1e-15 or (g >= found[0] - 1e-15 and d > found[1]):
                found = (g, d)
        return found

    fallback = best_fresh_cell(rng.index_of(seg.left), rng.index_of(seg.right))
    if fallback is None:  # winning segment exhausted; widen to the whole grid
        fallback = best_fresh_cell(0, rng.n_points - 1)
    if fallback is None:
        raise GridExhausted("every grid duration has already been selected")
    return fallback[1]


def run_gttl(
    trainer,
    model: GapModel,
    hold_range: HoldRange,
    budget: int = 15,
    epsilon: float = 0.05,
) -> SelectionState:
    """Greedy selection until the area target or the training budget is hit."""
    if budget < 1:
        raise ValueError(f"budget must be >= 1, got {budget}")
    if not 0 <= epsilon <= 1:
        raise ValueError(f"epsilon must be in [0, 1], got {epsilon}")
    state = _fresh_state(hold_range, budget, epsilon)
    if epsilon >= 1:  # degenerate: the coverage target is already met
        return state
    a_star = theory.full_area(hold_range, model)
    while state.area <= (1 - epsilon) * a_star and state.iteration < budget:
        try:
            delta = find_greedy_transfer_point(state, model)
        except GridExhausted:
            break
        _train_and_apply(state, trainer, model, delta)
    return state


def cttl_schedule(hold_range: HoldRange, budget: int) -> list[float]:
    """Coarse-to-fine schedule: K equally spaced durations, snapped to grid.

    Starts at d_max - width/(2K) and steps down by width/K.
    """
    width = hold_range.width
    return [
        hold_range.snap(hold_range.d_max - (2 * k + 1) / (2 * budget) * width)
        for k in range(budget)
    ]


def run_cttl(trainer, model: GapModel, hold_range: HoldRange, budget: int = 15) -> SelectionState:
    """Train the coarse-to-fine schedule in order."""
    if budget < 1:
        raise ValueError(f"budget must be >= 1, got {budget}")
    state = _fresh_state(hold_range, budget)
    for delta in cttl_schedule(hold_range, budget):
        _train_and_apply(state, trainer, model, delta)
    return state


def run_rttl(
    trainer, model: GapModel, hold_range: HoldRange, budget: int = 15, seed: int = 0
) -> SelectionState:
    """Train budget-many distinct grid durations drawn uniformly at random."""
    if budget < 1:
        raise ValueError(f"budget must be >= 1, got {budget}")
    if budget > hold_range.n_points:
        raise ValueError(
            f"budget {budget} exceeds the {hold_range.n_points}-point grid"
        )
    rng = np.random.default_rng(seed)
    picks = rng.choice(hold_range.n_points, size=budget, replace=False)
    state = _fresh_state(hold_range, budget)
    for i in picks:
        _train_and_apply(state, trainer, model, hold_range.point(int(i)))
    return state


def run_exhaustive(trainer, model: GapModel, hold_range: HoldRange) -> SelectionState:
    """Train every grid duration, merged in grid order."""
    state = _fresh_state(hold_range, hold_range.n_points)
    for i in range(hold_range.n_points):
        _train_and_apply(state, trainer, model, hold_range.point(i))
    return state


def run_selector(
    kind: SelectorKind,
    trainer,
    model: GapModel,
    hold_range: HoldRange,
    budget: int = 15,
    epsilon: float = 0.05,
    seed: int = 0,
) -> SelectionState:
    if kind is SelectorKind.GTTL:
        return run_gttl(trainer, model, hold_range, budget, epsilon)
    if kind is SelectorKind.CTTL:
        return run_cttl(trainer, model, hold_range, budget)
    if kind is SelectorKind.RTTL:
        return run_rttl(trainer, model, hold_range, budget, seed)
    return run_exhaustive(trainer, model, hold_range)


def iterations_csv_text(state: SelectionState) -> str:
    lines = ["iteration,delta,achieved,area"]
    for i, (d, res, area) in enumerate(
        zip(state.sources, state.results, state.area_history), start=1
    ):
        lines.append(f"{i},{d:.6g},{res.achieved:.6g},{area:.6g}")
    return "\n".join(lines) + "\n"


def write_iterations_csv(state: SelectionState, path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(iterations_csv_text(state))
