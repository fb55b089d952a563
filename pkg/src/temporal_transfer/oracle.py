"""Brute-force certification of the selectors against exhaustive search.

Enumerates every K-subset of a coarse duration grid under the ideal trainer
(final landscapes are order-invariant there, so subsets suffice), integrates
each resulting landscape exactly, and reports the maximizer. Used to certify
the closed-form picks, areas, and suboptimality bounds independently of the
formulas themselves.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from . import theory
from .landscape import GapModel, HoldRange, Landscape, aggregate_area, apply_transfer
from .selectors import run_gttl
from .theory import BoundReport, bound_report
from .trainers import IdealTrainer

MAX_CELLS = 81
MAX_SUBSETS = 10**7
_CHUNK = 65536


class CombinatorialGuardError(ValueError):
    """Requested enumeration exceeds the subset budget."""


@dataclass(frozen=True)
class OracleResult:
    best_sequence: tuple[float, ...]
    best_area: float
    evaluated_count: int


def coarse_range(hold_range: HoldRange, coarse_cells: int) -> HoldRange:
    """Evaluation grid with coarse_cells points across the same interval."""
    return HoldRange(
        d_min=hold_range.d_min,
        d_max=hold_range.d_max,
        resolution=hold_range.width / (coarse_cells - 1),
    )


def _tent_matrix(grid: np.ndarray, model: GapModel) -> np.ndarray:
    """Row i: landscape reached by one ideal training at grid[i]."""
    diff = grid[None, :] - grid[:, None]  # target minus source
    gaps = np.where(diff >= 0, model.theta_right * diff, -model.theta_left * diff)
    return np.maximum(model.j_star - gaps, 0.0)


def _trapezoid_weights(rng: HoldRange) -> np.ndarray:
    w = np.full(rng.n_points, rng.resolution)
    w[0] = w[-1] = rng.resolution / 2
    return w


def exhaustive_best(
    hold_range: HoldRange, model: GapModel, k: int, coarse_cells: int = 41
) -> OracleResult:
    """Best K-subset of the coarse grid by exact enumeration.

    Deterministic: subsets are scanned in lexicographic order and ties keep
    the first maximizer.
    """
    if coarse_cells > MAX_CELLS:
        raise CombinatorialGuardError(f"coarse grid capped at {MAX_CELLS} cells, got {coarse_cells}")
    total = math.comb(coarse_cells, k)
    if total > MAX_SUBSETS:
        raise CombinatorialGuardError(
            f"C({coarse_cells}, {k}) = {total} subsets exceeds the {MAX_SUBSETS} budget"
        )
    rng = coarse_range(hold_range, coarse_cells)
    grid = rng.grid()
    tents = _tent_matrix(grid, model)
    weights = _trapezoid_weights(rng)
    best_area = -np.inf
    best_idx: tuple[int, ...] = ()
    combos = itertools.combinations(range(coarse_cells), k)
    while True:
        chunk = list(itertools.islice(combos, _CHUNK))
        if not chunk:
            break
        idx = np.array(chunk, dtype=np.intp)
        envelope = tents[idx[:, 0]].copy()
        for j in range(1, k):
            np.maximum(envelope, tents[idx[:, j]], out=envelope)
        areas = envelope @ weights
        local = int(np.argmax(areas))
        if areas[local] > best_area:
            best_area = float(areas[local])
            best_idx = tuple(int(x) for x in idx[local])
    return OracleResult(
        best_sequence=tuple(float(grid[i]) for i in best_idx),
        best_area=best_area,
        evaluated_count=total,
    )


def best_marginal_cell(
    land: Landscape, model: GapModel, lo: float, hi: float
) -> tuple[float, float]:
    """Grid cell in [lo, hi] whose ideal transfer adds the most area.

    Brute force over cells; the independent check for the closed-form picks.
    """
    rng = land.range
    base = aggregate_area(land)
    best = None
    for i in range(rng.index_of(rng.snap(lo)), rng.index_of(rng.snap(hi)) + 1):
        d = rng.point(i)
        gain = aggregate_area(apply_transfer(land, model, d, model.j_star)) - base
        if best is None or gain > best[1]:
            best = (d, gain)
    return best


def greedy_vs_oracle(
    hold_range: HoldRange, model: GapModel, k: int, coarse_cells: int = 41
) -> BoundReport:
    """Measured oracle-minus-greedy area gap checked against the bound.

    The greedy run uses the same coarse grid as the enumeration; the bound
    allows one coarse cell of discretization slack.
    """
    rng = coarse_range(hold_range, coarse_cells)
    oracle = exhaustive_best(hold_range, model, k, coarse_cells)
    greedy = run_gttl(IdealTrainer(model.j_star, rng), model, rng, budget=k, epsilon=0.0)
    gap = oracle.best_area - greedy.area
    cell = rng.resolution * model.j_star
    bound = theory.suboptimality_bound(hold_range, model, k) if k >= 2 else 0.0
    return bound_report(
        claim=f"T4-oracle-K{k}",
        lhs=gap,
        rhs=bound + cell,
        scale=theory.full_area(hold_range, model),
    )
