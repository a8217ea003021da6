import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from standby_lab import (
    DeadAtAge,
    DegenerateGrid,
    Exponential,
    NegativeTime,
    OutOfRange,
    PiecewiseSurvival,
    SeedStream,
    ShapeProperty,
    Weibull,
    evaluate,
    inverse_survival,
    residual,
    sample,
    sample_many,
    shape_check,
)
from standby_lab.grids import GridSpec, default_grid

LAWS = [
    Exponential(1.0),
    Exponential(2.5),
    Weibull(2.0, 1.0),
    Weibull(0.7, 2.0),
    PiecewiseSurvival(((0.0, 1.0), (1.0, 0.6), (2.5, 0.25), (4.0, 0.05))),
]


class TestEvaluate:
    def test_exponential_at_zero(self):
        rec = evaluate(Exponential(1.0), 0.0)
        assert rec.S == 1.0
        assert rec.F == 0.0

    def test_exponential_at_ln2(self):
        rec = evaluate(Exponential(1.0), math.log(2.0))
        assert rec.S == pytest.approx(0.5, abs=1e-15)
        assert rec.hazards.hazard == pytest.approx(1.0, abs=1e-15)

    def test_weibull_closed_form(self):
        rec = evaluate(Weibull(2.0, 1.0), 1.0)
        assert rec.S == pytest.approx(math.exp(-1.0), abs=1e-15)
        # f = k/theta * t^{k-1} * e^{-t^k}
        assert rec.f == pytest.approx(2.0 * math.exp(-1.0), rel=1e-12)

    def test_negative_time_rejected(self):
        with pytest.raises(NegativeTime):
            evaluate(Exponential(1.0), -0.1)

    @pytest.mark.parametrize("d", LAWS)
    def test_s_plus_f_is_one_exactly(self, d):
        for t in np.linspace(0.0, 5.0, 23):
            rec = evaluate(d, float(t))
            assert rec.S + rec.F == 1.0

    @pytest.mark.parametrize("d", LAWS)
    def test_survival_nonincreasing(self, d):
        ts = default_grid([d]).ts
        s = d.survival(ts)
        assert np.all(np.diff(s) <= 1e-15)


class TestInverseSurvival:
    def test_boundary_p_one(self):
        assert inverse_survival(Exponential(1.0), 1.0) == 0.0

    def test_exponential_closed_form(self):
        assert inverse_survival(Exponential(2.0), 0.5) == pytest.approx(
            math.log(2.0) / 2.0, rel=1e-14)

    def test_weibull_closed_form(self):
        assert inverse_survival(Weibull(0.5, 1.0), math.exp(-1.0)) == pytest.approx(
            1.0, rel=1e-12)

    @pytest.mark.parametrize("p", [0.0, -0.2, 1.0001])
    def test_out_of_range(self, p):
        with pytest.raises(OutOfRange):
            inverse_survival(Exponential(1.0), p)

    @pytest.mark.parametrize("d", LAWS)
    def test_roundtrip_identity(self, d):
        ts = np.linspace(1e-6, d.inverse_survival(1e-3), 50)
        back = d.inverse_survival(d.survival(ts))
        assert np.allclose(back, ts, rtol=1e-8, atol=1e-10)


class TestSampling:
    def test_u_equal_one_maps_to_zero(self):
        assert Exponential(1.0).draw(1.0) == 0.0

    def test_sample_uses_stream_uniform(self):
        stream = SeedStream(123)
        u = SeedStream(123).uniform()
        assert sample(Exponential(1.0), stream) == Exponential(1.0).draw(u)

    def test_exponential_law_of_large_numbers(self):
        draws = sample_many(Exponential(1.0), SeedStream(42), 10**6)
        assert abs(draws.mean() - 1.0) < 3.0 / math.sqrt(10**6)

    def test_weibull_mean_matches_gamma_function(self):
        mean = math.gamma(1.5)
        sd = math.sqrt(math.gamma(2.0) - mean**2)
        draws = sample_many(Weibull(2.0, 1.0), SeedStream(43), 10**6)
        assert abs(draws.mean() - mean) < 3.0 * sd / math.sqrt(10**6)

    def test_reproducible_and_split_invariant(self):
        d = Weibull(2.0, 1.0)
        full = sample_many(d, SeedStream(7), 1000)
        again = sample_many(d, SeedStream(7), 1000)
        head = sample_many(d, SeedStream(7), 400)
        tail = sample_many(d, SeedStream(7, position=400), 600)
        assert np.array_equal(full, again)
        assert np.array_equal(full, np.concatenate([head, tail]))


class TestResidual:
    def test_exponential_memoryless(self):
        d = Exponential(3.0)
        assert residual(d, 2.0) is d

    def test_age_zero_identity(self):
        d = Weibull(2.0, 1.0)
        assert residual(d, 0.0) is d

    def test_weibull_residual_closed_form(self):
        r = residual(Weibull(2.0, 1.0), 1.0)
        assert r.survival(1.0) == pytest.approx(math.exp(-3.0), rel=1e-12)

    def test_dead_at_age(self):
        d = PiecewiseSurvival(((0.0, 1.0), (1.0, 0.5)))
        # log-linear tail at rate log(2): survival underflows near t ~ 1000
        with pytest.raises(DeadAtAge):
            residual(d, 1100.0)

    @given(st.floats(0.1, 3.0), st.floats(0.1, 3.0))
    @settings(max_examples=30, deadline=None)
    def test_residual_composes_ages(self, age_a, age_b):
        d = Weibull(1.7, 1.3)
        nested = residual(residual(d, age_a), age_b)
        flat = residual(d, age_a + age_b)
        ts = np.linspace(0.0, 4.0, 100)
        s_nested = nested.survival(ts)
        s_flat = flat.survival(ts)
        assert np.allclose(s_nested, s_flat, rtol=1e-12, atol=0.0)

    def test_residual_draws_match_residual_law(self):
        d = Weibull(2.0, 1.0)
        u = SeedStream(11).take(2000)
        direct = d.residual_draw(np.full(2000, 0.8), u)
        via_law = residual(d, 0.8).draw(u)
        assert np.allclose(direct, via_law, rtol=1e-12, atol=1e-14)


class TestShapeCheck:
    def test_exponential_is_log_linear(self):
        d = Exponential(1.0)
        assert shape_check(d, ShapeProperty.LOG_CONCAVE_SURVIVAL)
        assert shape_check(d, ShapeProperty.LOG_CONVEX_SURVIVAL)
        assert shape_check(d, ShapeProperty.CONVEX_SURVIVAL)

    def test_weibull_shape_two_is_log_concave_only(self):
        d = Weibull(2.0, 1.0)
        assert shape_check(d, ShapeProperty.LOG_CONCAVE_SURVIVAL)
        verdict = shape_check(d, ShapeProperty.LOG_CONVEX_SURVIVAL)
        assert not verdict
        assert verdict.verdict.t is not None
        assert verdict.verdict.margin > 1.0  # curvature of -t^2 is -2

    def test_weibull_shape_below_one_is_log_convex(self):
        d = Weibull(0.5, 1.0)
        assert shape_check(d, ShapeProperty.LOG_CONVEX_SURVIVAL)
        assert not shape_check(d, ShapeProperty.LOG_CONCAVE_SURVIVAL)

    def test_degenerate_grid(self):
        with pytest.raises(DegenerateGrid):
            shape_check(Exponential(1.0), ShapeProperty.CONVEX_SURVIVAL,
                        grid=GridSpec.from_times([700.0, 710.0, 720.0, 730.0]))


class TestPiecewiseSurvival:
    def test_knot_validation(self):
        with pytest.raises(OutOfRange):
            PiecewiseSurvival(((0.0, 0.9), (1.0, 0.5)))  # first knot must be S=1
        with pytest.raises(OutOfRange):
            PiecewiseSurvival(((0.0, 1.0), (1.0, 0.5), (0.5, 0.4)))
        with pytest.raises(OutOfRange):
            PiecewiseSurvival(((0.0, 1.0), (1.0, 0.5), (2.0, 0.6)))
        with pytest.raises(OutOfRange):
            PiecewiseSurvival(((0.0, 1.0), (1.0, 0.5), (2.0, 0.5)))  # flat tail

    def test_hits_knots_and_interpolates_monotonically(self):
        d = PiecewiseSurvival(((0.0, 1.0), (1.0, 0.6), (2.0, 0.2)))
        assert d.survival(0.0) == 1.0
        assert d.survival(1.0) == pytest.approx(0.6, rel=1e-12)
        assert d.survival(2.0) == pytest.approx(0.2, rel=1e-12)
        ts = np.linspace(0.0, 6.0, 400)
        assert np.all(np.diff(d.survival(ts)) < 0)

    def test_tail_extrapolates_log_linearly(self):
        d = PiecewiseSurvival(((0.0, 1.0), (1.0, 0.5), (2.0, 0.25)))
        # last-segment hazard is log 2 per unit time
        assert d.survival(3.0) == pytest.approx(0.125, rel=1e-12)
        assert d.survival(5.0) == pytest.approx(0.03125, rel=1e-12)

    def test_inverse_roundtrip(self):
        d = PiecewiseSurvival(((0.0, 1.0), (0.7, 0.8), (1.5, 0.45), (3.0, 0.1)))
        for p in (1.0, 0.9, 0.8, 0.5, 0.45, 0.2, 0.05, 1e-4):
            t = d.inverse_survival(p)
            assert d.survival(t) == pytest.approx(p, rel=1e-9, abs=1e-12)

    def test_csv_loading(self, tmp_path):
        path = tmp_path / "surv.csv"
        path.write_text("t,S\n0.0,1.0\n1.0,0.7\n2.0,0.4\n")
        d = PiecewiseSurvival.from_csv(path)
        assert d.knots == ((0.0, 1.0), (1.0, 0.7), (2.0, 0.4))
        with pytest.raises(OutOfRange):
            bad = tmp_path / "bad.csv"
            bad.write_text("time,surv\n0.0,1.0\n")
            PiecewiseSurvival.from_csv(bad)

    def test_density_nonnegative(self):
        d = PiecewiseSurvival(((0.0, 1.0), (0.7, 0.8), (1.5, 0.45), (3.0, 0.1)))
        ts = np.linspace(0.0, 5.0, 300)
        assert np.all(d.density(ts) >= 0.0)
