"""Closed-form areas, picks, and bounds for the selection strategies.

Everything here is a pure function of the gap model and the hold range, used
both by the greedy selector and by the verification suite that checks the
simulated selectors against these formulas.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .landscape import GapModel, HoldRange, Segment, SlopeClass


class UnsupportedAssumptionError(ValueError):
    """Raised when a closed form needs an assumption the model violates."""


# Relative slack for floating comparisons in bound reports.
REPORT_TOL = 1e-12


@dataclass(frozen=True)
class BoundReport:
    """One verified claim: holds iff lhs <= rhs within relative slack."""

    claim: str
    lhs: float
    rhs: float
    holds: bool
    slack: float


def bound_report(claim: str, lhs: float, rhs: float, scale: float) -> BoundReport:
    return BoundReport(
        claim=claim,
        lhs=lhs,
        rhs=rhs,
        holds=lhs <= rhs + REPORT_TOL * abs(scale),
        slack=rhs - lhs,
    )


def full_area(hold_range: HoldRange, model: GapModel) -> float:
    """Area ceiling A*: constant j_star over the whole range."""
    return hold_range.width * model.j_star


def split_point(model: GapModel, left: float, right: float) -> float:
    """Slope-weighted optimal pick for a fresh or V-shaped stretch.

    Reduces to the midpoint for symmetric models.
    """
    return (model.theta_left * left + model.theta_right * right) / (
        model.theta_left + model.theta_right
    )


def optimal_pick_and_gain(
    segment: Segment, model: GapModel, is_first: bool
) -> tuple[float, float]:
    """Optimal within-segment pick and its closed-form marginal area gain.

    is_first marks the untouched full range (estimate identically zero), which
    has its own gain row. Flat segments after the first pick fall back to the
    monotone gain rule with a midpoint pick.
    """
    if not model.symmetric:
        raise UnsupportedAssumptionError(
            "gain formulas require a symmetric gap model; "
            "use split_point for the asymmetric pick"
        )
    theta = model.theta
    length = segment.length
    if is_first:
        return (segment.left + segment.right) / 2, 0.75 * theta * length**2
    if segment.slope_class is SlopeClass.SYMMETRIC_V:
        return (segment.left + segment.right) / 2, theta * length**2 / 8
    if segment.slope_class is SlopeClass.POSITIVE:
        return (2 * segment.left + segment.right) / 3, theta * length**2 / 3
    if segment.slope_class is SlopeClass.NEGATIVE:
        return (segment.left + 2 * segment.right) / 3, theta * length**2 / 3
    # Flat after the first pick: no direction to trisect toward.
    return (segment.left + segment.right) / 2, theta * length**2 / 3


def _require_bounded_symmetric(hold_range: HoldRange, model: GapModel, what: str) -> float:
    if not model.symmetric:
        raise UnsupportedAssumptionError(f"{what} requires a symmetric gap model")
    if not model.slope_within_bound(hold_range):
        raise UnsupportedAssumptionError(
            f"{what} requires theta <= j_star / range width "
            f"(theta={model.theta}, j_star={model.j_star}, width={hold_range.width})"
        )
    return model.theta


def ghost_cell_lower_bound(hold_range: HoldRange, model: GapModel, k: int) -> float:
    """Coverage guaranteed after k steps by the ghost-cell construction.

    Anchors at k = 2^i + 1 carry the closed form (1 - 1/2^(i+2)) * theta * W^2;
    intermediate k interpolate with equal steps of theta * W^2 / 2^(2i+1).
    The value is a valid (loose) lower bound whenever theta <= j_star / W.
    """
    theta = _require_bounded_symmetric(hold_range, model, "ghost_cell_lower_bound")
    if k < 0:
        raise ValueError(f"k must be >= 0, got {k}")
    if k == 0:
        return 0.0
    scale = theta * hold_range.width**2
    if k <= 2:
        return 0.75 * scale
    i = math.ceil(math.log2(k - 1))  # anchor above: k <= 2^i + 1
    upper_frac = 1 - 1 / 2 ** (i + 2)
    steps_short = (2**i + 1) - k
    return scale * (upper_frac - steps_short / 2 ** (2 * i + 1))


def steps_to_cover(epsilon: float) -> int:
    """Minimum selection steps needed to cover a (1 - epsilon) area fraction."""
    if epsilon <= 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    raw = (4 * epsilon + 1) / (4 * epsilon)
    return math.ceil(raw - 1e-9)


def cttl_optimal_area(hold_range: HoldRange, model: GapModel, k: int) -> float:
    """Closed-form area of the budget-K coarse-to-fine schedule."""
    theta = _require_bounded_symmetric(hold_range, model, "cttl_optimal_area")
    if k < 1:
        raise ValueError(f"budget must be >= 1, got {k}")
    return (1 - 1 / (4 * k)) * theta * hold_range.width**2


def suboptimality_bound(hold_range: HoldRange, model: GapModel, k: int) -> float:
    """Upper bound on the coarse-to-fine advantage over the greedy selector."""
    theta = _require_bounded_symmetric(hold_range, model, "suboptimality_bound")
    if k < 2:
        raise ValueError(f"bound is defined for budgets >= 2, got {k}")
    scale = theta * hold_range.width**2
    n = k - 1
    if n & (n - 1) == 0:  # k = 2^i + 1 for some i >= 0
        return scale / (4 * k * (k - 1))
    return scale / (2 * (k - 1) ** 2)
