"""Estimated-performance landscapes over a range of guidance hold durations.

A landscape stores the running estimate J(delta) on a uniform grid of hold
durations. Transferring a trained policy from a source duration lowers the
estimate linearly with distance (the generalization-gap model); the landscape
keeps the pointwise best estimate seen so far.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np


class GridAlignmentError(ValueError):
    """Raised when a duration does not lie on the landscape grid."""


class SlopeClass(str, Enum):
    FLAT = "flat"
    POSITIVE = "positive"
    NEGATIVE = "negative"
    SYMMETRIC_V = "symmetric-V"


# Relative tolerance for treating grid values as equal when classifying
# segment shapes; floating-point grids never hit exact equality.
SLOPE_TOL = 1e-9


@dataclass(frozen=True)
class HoldRange:
    """Closed interval of hold durations with a uniform evaluation grid."""

    d_min: float
    d_max: float
    resolution: float = 0.1

    def __post_init__(self):
        if not 0 <= self.d_min < self.d_max:
            raise ValueError(f"need 0 <= d_min < d_max, got [{self.d_min}, {self.d_max}]")
        if self.resolution <= 0:
            raise ValueError(f"resolution must be positive, got {self.resolution}")
        cells = (self.d_max - self.d_min) / self.resolution
        if abs(cells - round(cells)) > 1e-6 * max(cells, 1.0):
            raise ValueError(
                f"range width {self.d_max - self.d_min} is not a whole number of "
                f"{self.resolution}-cells"
            )

    @property
    def width(self) -> float:
        return self.d_max - self.d_min

    @property
    def n_cells(self) -> int:
        return round((self.d_max - self.d_min) / self.resolution)

    @property
    def n_points(self) -> int:
        return self.n_cells + 1

    def grid(self) -> np.ndarray:
        return self.d_min + self.resolution * np.arange(self.n_points)

    def index_of(self, duration: float) -> int:
        """Grid index of an on-grid duration; GridAlignmentError otherwise."""
        i = round((duration - self.d_min) / self.resolution)
        if i < 0 or i >= self.n_points or abs(self.point(i) - duration) > 1e-9 * max(
            self.resolution, 1.0
        ):
            raise GridAlignmentError(
                f"duration {duration} is not on the [{self.d_min}, {self.d_max}] "
                f"grid with resolution {self.resolution}"
            )
        return i

    def point(self, index: int) -> float:
        return self.d_min + index * self.resolution

    def snap(self, duration: float) -> float:
        """Nearest grid duration (clamped to the range)."""
        i = round((duration - self.d_min) / self.resolution)
        return self.point(min(max(i, 0), self.n_points - 1))


@dataclass(frozen=True)
class GapModel:
    """Linear generalization-gap model with an upper performance bound.

    theta_left is the degradation slope when transferring from a coarser to a
    finer task (source > target); theta_right covers the opposite direction.
    j_star is the upper-bound performance every training is assumed to reach.
    """

    theta_left: float
    theta_right: float
    j_star: float

    def __post_init__(self):
        if self.theta_left < 0 or self.theta_right < 0 or self.j_star < 0:
            raise ValueError("slopes and j_star must be non-negative")

    @property
    def symmetric(self) -> bool:
        return self.theta_left == self.theta_right

    @property
    def theta(self) -> float:
        """Common slope for symmetric models."""
        if not self.symmetric:
            raise ValueError("model is asymmetric; no single slope")
        return self.theta_left

    def slope_within_bound(self, hold_range: HoldRange) -> bool:
        """Bounded-slope check: max slope <= j_star / range width.

        Violations are reported (False), never silently fixed.
        """
        return max(self.theta_left, self.theta_right) <= self.j_star / hold_range.width


def symmetric_model(theta: float, j_star: float) -> GapModel:
    return GapModel(theta_left=theta, theta_right=theta, j_star=j_star)


def gap(model: GapModel, d_source: float, d_target: float) -> float:
    """Performance lost transferring a policy from d_source to d_target."""
    if d_source > d_target:
        return model.theta_left * (d_source - d_target)
    return model.theta_right * (d_target - d_source)


@dataclass(frozen=True)
class Landscape:
    """Immutable per-grid-point performance estimates.

    All operations return new landscapes; instances are safe to share.
    """

    range: HoldRange
    values: np.ndarray
    generation: int = 0

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != (self.range.n_points,):
            raise ValueError(
                f"values length {values.shape} does not match grid "
                f"({self.range.n_points} points)"
            )
        values = values.copy()
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    @classmethod
    def zeros(cls, hold_range: HoldRange) -> "Landscape":
        return cls(range=hold_range, values=np.zeros(hold_range.n_points), generation=0)

    def value_at(self, duration: float) -> float:
        return float(self.values[self.range.index_of(duration)])


def apply_transfer(
    land: Landscape, model: GapModel, d_source: float, achieved: float
) -> Landscape:
    """Merge one training result into the landscape.

    At d_source the new estimate is exactly `achieved` (the measurement
    overrides any prior extrapolation there). Elsewhere it is the pointwise
    max of the old estimate and achieved minus the gap, clamped at 0.
    """
    if achieved < 0:
        raise ValueError(f"achieved performance must be >= 0, got {achieved}")
    idx = land.range.index_of(d_source)
    grid = land.range.grid()
    dist_left = np.maximum(d_source - grid, 0.0)  # targets finer than the source
    dist_right = np.maximum(grid - d_source, 0.0)
    gaps = model.theta_left * dist_left + model.theta_right * dist_right
    candidate = np.maximum(achieved - gaps, 0.0)
    new_values = np.maximum(land.values, candidate)
    new_values[idx] = achieved
    return Landscape(range=land.range, values=new_values, generation=land.generation + 1)


def aggregate_area(land: Landscape) -> float:
    """Trapezoidal integral of the estimates over the hold range."""
    v = land.values
    return float(land.range.resolution * (v.sum() - 0.5 * (v[0] + v[-1])))


@dataclass(frozen=True)
class Segment:
    """Maximal stretch of the landscape between consecutive inflection points."""

    left: float
    right: float
    slope_class: SlopeClass

    @property
    def length(self) -> float:
        return self.right - self.left


def _classify(values: np.ndarray, tol: float) -> SlopeClass:
    v_left, v_right = values[0], values[-1]
    if values.max() - values.min() <= tol:
        return SlopeClass.FLAT
    interior_min = values.min()
    if interior_min < min(v_left, v_right) - tol and abs(v_left - v_right) <= tol:
        return SlopeClass.SYMMETRIC_V
    if v_right > v_left:
        return SlopeClass.POSITIVE
    return SlopeClass.NEGATIVE


def segments(land: Landscape, sources) -> list[Segment]:
    """Split the range at the selected source durations and classify each piece."""
    rng = land.range
    indices = sorted({rng.index_of(s) for s in sources})
    boundaries = [0] + [i for i in indices if 0 < i < rng.n_points - 1] + [rng.n_points - 1]
    boundaries = sorted(set(boundaries))
    tol = SLOPE_TOL * max(float(np.abs(land.values).max()), 1e-300)
    out = []
    for lo, hi in zip(boundaries[:-1], boundaries[1:]):
        out.append(
            Segment(
                left=rng.point(lo),
                right=rng.point(hi),
                slope_class=_classify(land.values[lo : hi + 1], tol),
            )
        )
    return out


def write_landscape_csv(land: Landscape, path) -> None:
    """CSV with header delta,performance, one row per grid point, 6 sig digits."""
    with open(path, "w", newline="") as fh:
        fh.write(landscape_csv_text(land))


def landscape_csv_text(land: Landscape) -> str:
    lines = ["delta,performance"]
    for d, v in zip(land.range.grid(), land.values):
        lines.append(f"{d:.6g},{v:.6g}")
    return "\n".join(lines) + "\n"
