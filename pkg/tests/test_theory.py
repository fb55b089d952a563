"""Closed-form picks, areas, and bound arithmetic."""

import pytest

from temporal_transfer.landscape import GapModel, HoldRange, Segment, SlopeClass, symmetric_model
from temporal_transfer.selectors import run_cttl
from temporal_transfer.theory import (
    UnsupportedAssumptionError,
    bound_report,
    cttl_optimal_area,
    full_area,
    ghost_cell_lower_bound,
    optimal_pick_and_gain,
    split_point,
    steps_to_cover,
    suboptimality_bound,
)
from temporal_transfer.trainers import IdealTrainer

UNIT = HoldRange(0, 1, 0.025)
UNIT_MODEL = symmetric_model(1.0, 1.0)
WIDE = HoldRange(0, 40, 0.1)
WIDE_MODEL = symmetric_model(1 / 40, 1.0)


class TestOptimalPickAndGain:
    def test_first_pick_full_range(self):
        seg = Segment(0.0, 40.0, SlopeClass.FLAT)
        point, gain = optimal_pick_and_gain(seg, WIDE_MODEL, is_first=True)
        assert point == pytest.approx(20.0)
        assert gain == pytest.approx(30.0)  # (3/4) * theta * width^2

    def test_symmetric_v(self):
        seg = Segment(0.0, 20.0, SlopeClass.SYMMETRIC_V)
        point, gain = optimal_pick_and_gain(seg, WIDE_MODEL, is_first=False)
        assert point == pytest.approx(10.0)
        assert gain == pytest.approx(1.25)  # (1/8) * (1/40) * 400

    def test_positive_slope_trisection(self):
        seg = Segment(0.0, 20.0, SlopeClass.POSITIVE)
        point, gain = optimal_pick_and_gain(seg, WIDE_MODEL, is_first=False)
        assert point == pytest.approx(20 / 3)
        assert gain == pytest.approx(400 / 120)  # (1/3) * (1/40) * 400

    def test_negative_slope_trisection(self):
        seg = Segment(10.0, 40.0, SlopeClass.NEGATIVE)
        point, _ = optimal_pick_and_gain(seg, WIDE_MODEL, is_first=False)
        assert point == pytest.approx((10 + 80) / 3)

    def test_asymmetric_model_refused_but_point_exposed(self):
        model = GapModel(theta_left=0.2, theta_right=0.1, j_star=1.0)
        seg = Segment(0.0, 30.0, SlopeClass.SYMMETRIC_V)
        with pytest.raises(UnsupportedAssumptionError):
            optimal_pick_and_gain(seg, model, is_first=False)
        assert split_point(model, 0.0, 30.0) == pytest.approx(
            (0.2 * 0 + 0.1 * 30) / 0.3
        )


class TestGhostCellLowerBound:
    def test_k1(self):
        assert ghost_cell_lower_bound(UNIT, UNIT_MODEL, 1) == pytest.approx(0.75)

    def test_anchors(self):
        for i, k in enumerate((2, 3, 5, 9, 17)):
            expected = 1 - 1 / 2 ** (i + 2)
            assert ghost_cell_lower_bound(UNIT, UNIT_MODEL, k) == pytest.approx(
                expected, rel=1e-15
            )

    def test_interpolated_k4(self):
        assert ghost_cell_lower_bound(UNIT, UNIT_MODEL, 4) == pytest.approx(0.875 + 1 / 32)

    def test_k0_and_monotone(self):
        assert ghost_cell_lower_bound(UNIT, UNIT_MODEL, 0) == 0.0
        values = [ghost_cell_lower_bound(UNIT, UNIT_MODEL, k) for k in range(1, 40)]
        assert all(b >= a - 1e-15 for a, b in zip(values, values[1:]))
        assert all(v <= full_area(UNIT, UNIT_MODEL) + 1e-12 for v in values)

    def test_loose_for_small_theta(self):
        model = symmetric_model(0.25, 1.0)
        assert ghost_cell_lower_bound(UNIT, model, 5) == pytest.approx(0.25 * 0.9375)

    def test_slope_violation_rejected(self):
        with pytest.raises(UnsupportedAssumptionError):
            ghost_cell_lower_bound(UNIT, symmetric_model(1.5, 1.0), 3)


class TestStepsToCover:
    def test_examples(self):
        assert steps_to_cover(1 / 16) == 5
        assert steps_to_cover(1 / 4) == 2
        assert steps_to_cover(1 / 64) == 17

    def test_consistency_with_ghost_bound(self):
        # 17 steps cover 1 - 1/64 of the ceiling
        assert ghost_cell_lower_bound(UNIT, UNIT_MODEL, 17) == pytest.approx(1 - 1 / 64)

    def test_divergence(self):
        with pytest.raises(ValueError):
            steps_to_cover(0.0)
        with pytest.raises(ValueError):
            steps_to_cover(-0.1)

    def test_non_dyadic(self):
        assert steps_to_cover(1 / 12) == 4


class TestCttlOptimalArea:
    def test_small_budget(self):
        assert cttl_optimal_area(UNIT, UNIT_MODEL, 2) == pytest.approx(0.875)

    def test_large_budget_limit(self):
        assert cttl_optimal_area(UNIT, UNIT_MODEL, 1000) == pytest.approx(0.99975)

    def test_matches_simulated_schedule(self):
        closed = cttl_optimal_area(WIDE, WIDE_MODEL, 7)
        assert closed == pytest.approx(40 * (1 - 1 / 28))
        state = run_cttl(IdealTrainer(1.0, WIDE), WIDE_MODEL, WIDE, budget=7)
        assert state.area == pytest.approx(closed, abs=WIDE.resolution * WIDE_MODEL.j_star)


class TestSuboptimalityBound:
    def test_power_of_two_plus_one_branch(self):
        assert suboptimality_bound(UNIT, UNIT_MODEL, 3) == pytest.approx(1 / 24)
        assert suboptimality_bound(UNIT, UNIT_MODEL, 5) == pytest.approx(1 / 80)
        assert suboptimality_bound(UNIT, UNIT_MODEL, 2) == pytest.approx(1 / 8)

    def test_other_branch(self):
        assert suboptimality_bound(UNIT, UNIT_MODEL, 4) == pytest.approx(1 / 18)

    def test_undefined_below_two(self):
        with pytest.raises(ValueError):
            suboptimality_bound(UNIT, UNIT_MODEL, 1)

    def test_identity_at_anchors(self):
        # closed-form schedule area minus ghost bound equals the first-branch
        # bound exactly at every anchor budget
        for i in range(5):
            k = 2**i + 1
            lhs = cttl_optimal_area(UNIT, UNIT_MODEL, k) - ghost_cell_lower_bound(
                UNIT, UNIT_MODEL, k
            )
            assert lhs == pytest.approx(suboptimality_bound(UNIT, UNIT_MODEL, k), rel=1e-12)


class TestBoundReport:
    def test_holds_semantics(self):
        report = bound_report("x", 1.0, 1.0, scale=1.0)
        assert report.holds
        assert bound_report("x", 1.0 + 1e-10, 1.0, scale=1.0).holds is False
        assert bound_report("x", 2.0, 1.0, scale=1.0).slack == -1.0
