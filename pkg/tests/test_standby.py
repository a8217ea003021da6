import math

import numpy as np
import pytest

from standby_lab import (
    COLD_MF,
    HOT_MF,
    Exponential,
    InvalidModelFunction,
    MapKind,
    ModelFunction,
    NegativeTime,
    OutOfRange,
    QuadratureFailure,
    QuadratureSettings,
    SeedStream,
    ShapeProperty,
    SpecialStructure,
    StandbyComposite,
    TimeMap,
    Weibull,
    identity_map,
    linear_map,
    log_map,
    model_function_eval,
    reduce_special,
    residual,
    shape_check,
    table_map,
    validate_model_function,
    warm_sample,
    warm_sample_many,
    warm_survival,
    zero_map,
)
from oracles import exp_pdf, exp_sf, midpoint, warm_survival_oracle

# Frozen via the midpoint Riemann oracle at 1e6 panels (see oracles.py).
WARM_EXP1_EXP1_LOG03_LIN06_T1 = 0.6960829756742273
WARM_EXP2_EXP1_LOG03_LIN06 = {0.5: 0.8177141807208776,
                              1.0: 0.5573577965360731,
                              2.0: 0.22199060091856604}

EXAMPLE_41_MF = ModelFunction(gamma=log_map(0.3), omega=linear_map(0.6))


class TestModelFunctionEval:
    def test_origin(self):
        mf = ModelFunction(gamma=linear_map(0.2), omega=linear_map(0.6))
        rec = model_function_eval(mf, 0.0)
        assert (rec.gamma, rec.omega, rec.delta) == (0.0, 0.0, 0.0)

    def test_hot_standby_case(self):
        rec = model_function_eval(HOT_MF, 5.0)
        assert (rec.gamma, rec.omega, rec.delta) == (5.0, 5.0, 0.0)

    def test_log_gamma_linear_omega(self):
        mf = ModelFunction(gamma=log_map(0.5), omega=linear_map(0.7))
        rec = model_function_eval(mf, 1.0)
        assert rec.gamma == pytest.approx(0.5 * math.log(2.0), rel=1e-14)
        assert rec.omega == pytest.approx(0.7, rel=1e-15)
        assert rec.delta == pytest.approx(0.3, rel=1e-12)

    def test_negative_time(self):
        with pytest.raises(NegativeTime):
            model_function_eval(HOT_MF, -1.0)

    def test_out_of_band_map_rejected(self):
        class DoublingMap(TimeMap):
            def __call__(self, t):
                return 2.0 * np.asarray(t, dtype=float)

        mf = ModelFunction(gamma=DoublingMap(MapKind.LINEAR, a=0.5), omega=zero_map())
        with pytest.raises(InvalidModelFunction):
            model_function_eval(mf, 1.0)

    def test_map_coefficient_validation(self):
        with pytest.raises(OutOfRange):
            linear_map(1.5)
        with pytest.raises(OutOfRange):
            log_map(-0.1)
        with pytest.raises(OutOfRange):
            table_map([(0.0, 0.0), (1.0, 1.5)])


class TestValidateModelFunction:
    GRID = np.linspace(0.0, 5.0, 64)

    def test_cold_standby_all_hold(self):
        audit = validate_model_function(COLD_MF, self.GRID)
        assert audit.gamma_valid and audit.omega_valid
        assert audit.delta_increasing
        assert audit.omega_equals_gamma

    def test_log_gamma_linear_omega_monotonicities(self):
        # gamma(u) = a log(1+u), omega(u) = b u with 0 < a <= b <= 1
        mf = ModelFunction(gamma=log_map(0.3), omega=linear_map(0.6))
        audit = validate_model_function(mf, self.GRID)
        assert audit.omega_minus_gamma_increasing
        assert audit.delta_increasing
        assert audit.gamma_valid and audit.omega_valid

    def test_identity_gamma_half_omega(self):
        mf = ModelFunction(gamma=identity_map(), omega=linear_map(0.5))
        audit = validate_model_function(mf, self.GRID)
        assert audit.delta_increasing
        assert audit.gamma_valid and audit.omega_valid
        assert not audit.omega_equals_gamma
        assert audit.omega_equals_gamma.t is not None


class TestReduceSpecial:
    def test_tags(self):
        assert reduce_special(COLD_MF) is SpecialStructure.COLD
        assert reduce_special(HOT_MF) is SpecialStructure.HOT
        general = ModelFunction(gamma=linear_map(0.5), omega=linear_map(0.5))
        assert reduce_special(general) is SpecialStructure.GENERAL

    @pytest.mark.parametrize("mf,base,standby", [
        (COLD_MF, Exponential(2.0), Exponential(1.0)),
        (COLD_MF, Weibull(2.0, 1.0), Exponential(1.0)),
        (HOT_MF, Exponential(1.0), Exponential(1.0)),
        (HOT_MF, Exponential(2.0), Weibull(1.5, 0.8)),
    ])
    def test_reductions_agree_with_general_quadrature(self, mf, base, standby):
        c = StandbyComposite(base, standby, mf)
        t_max = base.inverse_survival(1e-3)
        for t in np.linspace(0.0, t_max, 50):
            fast = warm_survival(c, float(t))
            general = warm_survival(c, float(t), force_quadrature=True)
            assert abs(fast - general) <= 1e-9


class TestWarmSurvival:
    def test_t_zero_is_one(self):
        c = StandbyComposite(Exponential(1.0), Exponential(1.0), EXAMPLE_41_MF)
        assert warm_survival(c, 0.0) == 1.0

    def test_hot_standby_is_max_of_two(self):
        c = StandbyComposite(Exponential(1.0), Exponential(1.0), HOT_MF)
        expected = 2.0 * math.exp(-1.0) - math.exp(-2.0)
        assert warm_survival(c, 1.0) == pytest.approx(expected, abs=1e-12)
        assert warm_survival(c, 1.0, force_quadrature=True) == pytest.approx(
            expected, abs=1e-9)

    def test_cold_standby_is_sum_of_two(self):
        c = StandbyComposite(Exponential(2.0), Exponential(1.0), COLD_MF)
        expected = 2.0 * math.exp(-1.0) - math.exp(-2.0)
        assert warm_survival(c, 1.0) == pytest.approx(expected, abs=1e-9)

    def test_general_matches_riemann_oracle(self):
        c = StandbyComposite(Exponential(1.0), Exponential(1.0), EXAMPLE_41_MF)
        value = warm_survival(c, 1.0)
        assert value == pytest.approx(WARM_EXP1_EXP1_LOG03_LIN06_T1, abs=1e-7)
        # recompute the oracle live to keep the frozen value honest
        live = warm_survival_oracle(exp_sf(1.0), exp_pdf(1.0), exp_sf(1.0),
                                    lambda u: 0.3 * np.log1p(u),
                                    lambda u: 0.6 * u, 1.0)
        assert live == pytest.approx(WARM_EXP1_EXP1_LOG03_LIN06_T1, abs=1e-12)

    def test_weibull_standby_against_oracle(self):
        c = StandbyComposite(Exponential(2.0), Weibull(1.6, 1.2),
                             ModelFunction(gamma=linear_map(0.4), omega=linear_map(0.7)))
        t = 1.5
        oracle = warm_survival_oracle(
            exp_sf(2.0), exp_pdf(2.0),
            lambda u: np.exp(-((np.asarray(u) / 1.2) ** 1.6)),
            lambda u: 0.4 * np.asarray(u), lambda u: 0.7 * np.asarray(u), t)
        assert warm_survival(c, t) == pytest.approx(oracle, abs=1e-7)

    def test_weibull_singular_base_density(self):
        # shape < 1 has an unbounded density at 0; the integral must still converge.
        # Oracle substitutes s = u^k so dF_X = e^{-s} ds is bounded.
        k, t = 0.6, 1.0
        c = StandbyComposite(Weibull(k, 1.0), Exponential(1.0), EXAMPLE_41_MF)

        def integrand(s):
            u = s ** (1.0 / k)
            g, w = 0.3 * np.log1p(u), 0.6 * u
            return np.exp(-((t - u) + w) + w - g - s)

        oracle = math.exp(-(t**k)) + midpoint(integrand, 0.0, t**k, 10**6)
        assert warm_survival(c, t) == pytest.approx(oracle, abs=1e-7)

    def test_quadrature_failure_on_exhausted_depth(self):
        c = StandbyComposite(Exponential(1.0), Exponential(1.0), EXAMPLE_41_MF,
                             QuadratureSettings(tol=1e-16, max_depth=2))
        with pytest.raises(QuadratureFailure):
            warm_survival(c, 1.0)

    def test_negative_time(self):
        c = StandbyComposite(Exponential(1.0), Exponential(1.0), COLD_MF)
        with pytest.raises(NegativeTime):
            warm_survival(c, -0.5)

    def test_prior_knowledge_shift_composes_residual_base(self):
        # a primary known to survive t0 composes via its residual law
        t0 = 0.8
        base = residual(Weibull(2.0, 1.0), t0)
        c = StandbyComposite(base, Exponential(1.0), EXAMPLE_41_MF)
        oracle = warm_survival_oracle(
            lambda u: np.exp(-((np.asarray(u) + t0) ** 2) + t0**2),
            lambda u: 2.0 * (np.asarray(u) + t0) * np.exp(-((np.asarray(u) + t0) ** 2) + t0**2),
            exp_sf(1.0), lambda u: 0.3 * np.log1p(u), lambda u: 0.6 * np.asarray(u), 1.0)
        assert warm_survival(c, 1.0) == pytest.approx(oracle, abs=1e-7)


class TestWarmSurvivalInvariants:
    COMPOSITES = [
        StandbyComposite(Exponential(2.0), Exponential(1.0), EXAMPLE_41_MF),
        StandbyComposite(Weibull(2.0, 1.0), Exponential(1.5),
                         ModelFunction(gamma=linear_map(0.3), omega=linear_map(0.5))),
        StandbyComposite(Exponential(1.0), Weibull(1.4, 1.0),
                         ModelFunction(gamma=log_map(0.5), omega=log_map(0.9))),
    ]

    @pytest.mark.parametrize("c", COMPOSITES)
    def test_redundancy_never_hurts(self, c):
        ts = np.linspace(0.0, c.base.inverse_survival(1e-3), 60)
        for t in ts:
            assert warm_survival(c, float(t)) >= c.base.survival(float(t)) - 1e-12

    @pytest.mark.parametrize("c", COMPOSITES)
    def test_nonincreasing_in_t(self, c):
        ts = np.linspace(0.0, c.base.inverse_survival(1e-3), 60)
        vals = [warm_survival(c, float(t)) for t in ts]
        assert np.all(np.diff(vals) <= 1e-10)

    @pytest.mark.parametrize("c", COMPOSITES)
    def test_storage_ratio_bounded_by_one(self, c):
        # t - delta(u) >= omega(u), so the conditional-survival ratio is <= 1
        t = float(c.base.inverse_survival(0.05))
        u = np.linspace(0.0, t, 500)
        w = np.asarray(c.mf.omega(u), dtype=float)
        log_ratio = c.standby.log_survival((t - u) + w) - c.standby.log_survival(w)
        assert np.all(log_ratio <= 1e-12)

    def test_monotone_integrand_factor(self):
        # delta increasing + omega-gamma increasing + log-concave standby
        # makes the storage factor nondecreasing on [0, t]
        rng = np.random.default_rng(2101)
        for _ in range(25):
            a = 0.05 + 0.5 * rng.random()
            b = a + (1.0 - a) * rng.random()
            k = 1.0 + 2.0 * rng.random()
            standby = Weibull(k, 0.5 + rng.random())
            mf = ModelFunction(gamma=log_map(a), omega=linear_map(b))
            t = 0.5 + 3.0 * rng.random()
            u = np.linspace(0.0, t, 100)
            w = np.asarray(mf.omega(u), dtype=float)
            g = np.asarray(mf.gamma(u), dtype=float)
            factor = np.exp(standby.log_survival((t - u) + w)
                            - standby.log_survival(w)
                            + standby.log_survival(g))
            assert np.all(np.diff(factor) >= -1e-9)
            assert np.all(factor >= 0.0)


class TestWarmSampling:
    def test_cold_standby_draw_is_sum(self):
        c = StandbyComposite(Exponential(2.0), Exponential(1.0), COLD_MF)
        u = SeedStream(5).block(500, 3)
        draws = c.lifetimes_from_uniforms(u[:, 0], u[:, 1], u[:, 2])
        expected = Exponential(2.0).draw(u[:, 0]) + Exponential(1.0).draw(u[:, 2])
        assert np.allclose(draws, expected, rtol=1e-12)

    def test_hot_standby_empirical_survival(self):
        c = StandbyComposite(Exponential(1.0), Exponential(1.0), HOT_MF)
        draws = warm_sample_many(c, SeedStream(17), 10**6)
        expected = 2.0 * math.exp(-1.0) - math.exp(-2.0)
        se = math.sqrt(expected * (1.0 - expected) / 10**6)
        assert abs(np.mean(draws > 1.0) - expected) <= 3.0 * se

    def test_example_4_1_functions_match_quadrature(self):
        c = StandbyComposite(Exponential(2.0), Exponential(1.0), EXAMPLE_41_MF)
        draws = warm_sample_many(c, SeedStream(20140), 10**6)
        for t in (0.5, 1.0, 2.0):
            p = warm_survival(c, t)
            assert p == pytest.approx(WARM_EXP2_EXP1_LOG03_LIN06[t], abs=1e-7)
            se = math.sqrt(p * (1.0 - p) / 10**6)
            assert abs(np.mean(draws > t) - p) <= 3.0 * se

    def test_scalar_sample_matches_vector_path(self):
        c = StandbyComposite(Exponential(2.0), Exponential(1.0), EXAMPLE_41_MF)
        vec = warm_sample_many(c, SeedStream(9), 5)
        singles = [warm_sample(c, SeedStream(9, position=3 * i)) for i in range(5)]
        assert np.allclose(vec, singles, rtol=0, atol=0)

    def test_draw_consumes_three_positions(self):
        c = StandbyComposite(Exponential(2.0), Exponential(1.0), EXAMPLE_41_MF)
        stream = SeedStream(31)
        warm_sample(c, stream)
        assert stream.position == 3
