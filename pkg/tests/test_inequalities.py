import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import solve_ivp

from dampedwave.dynamics import simulate_ode
from dampedwave.functionals import weight_derivative
from dampedwave.inequalities import (InequalityParams, estimate_gn_constant, gn_ratio, holder_exponent,
                                     holder_interpolation_check, lemma_bound, random_smooth_coefficients,
                                     verify_integral_inequality, verify_lemma)
from dampedwave.spectral import inverse_transform, make_box_domain


def equality_trace(prm, t):
    sol = solve_ivp(lambda s, E: -prm.A * weight_derivative(s, prm.weight) * np.abs(E) ** (1 + prm.beta),
                    (t[0], t[-1]), [prm.E0], method="DOP853", t_eval=t, rtol=1e-13, atol=1e-300)
    return sol.y[0]


class TestLemmaBound:
    def test_examples(self):
        assert lemma_bound(InequalityParams(A=1, beta=0, E0=2), 1.0) == pytest.approx(2 * np.exp(-1), rel=1e-15)
        assert lemma_bound(InequalityParams(A=1, beta=1, E0=1), 3.0) == pytest.approx(0.25, rel=1e-15)
        for b in (0.0, 0.7):
            for w in ("linear", "logshift"):
                assert lemma_bound(InequalityParams(A=2.0, beta=b, weight=w, E0=3.0), 0.0) == 3.0

    def test_logshift(self):
        prm = InequalityParams(A=0.5, beta=0, weight="logshift", E0=1.0)
        assert lemma_bound(prm, 6.0) == pytest.approx(np.exp(-0.5 * np.log(4.0)))

    @settings(max_examples=50, deadline=None)
    @given(st.floats(0.01, 10), st.floats(0, 5), st.sampled_from(["linear", "logshift"]), st.floats(0.01, 10))
    def test_nonincreasing(self, A, beta, weight, E0):
        t = np.linspace(0, 100, 300)
        b = lemma_bound(InequalityParams(A, beta, weight, E0), t)
        assert np.all(np.diff(b) <= 0)

    @pytest.mark.parametrize("weight", ["linear", "logshift"])
    def test_beta_continuity(self, weight):
        t = np.linspace(0, 5, 50)
        b0 = lemma_bound(InequalityParams(1.3, 0.0, weight, 2.0), t)
        b1 = lemma_bound(InequalityParams(1.3, 1e-8, weight, 2.0), t)
        np.testing.assert_allclose(b1, b0, rtol=1e-6)

    @pytest.mark.parametrize("kw", [dict(A=0), dict(A=1, beta=-1), dict(A=1, weight="cubic"), dict(A=1, E0=-1)])
    def test_invalid(self, kw):
        with pytest.raises(ValueError):
            InequalityParams(**kw)


class TestVerifyLemma:
    @pytest.mark.parametrize("beta", [0.0, 0.5, 1.0])
    @pytest.mark.parametrize("weight", ["linear", "logshift"])
    def test_equality_trace(self, beta, weight):
        prm = InequalityParams(A=0.8, beta=beta, weight=weight, E0=1.5)
        t = np.linspace(0, 30, 1000)
        rep = verify_lemma((t, equality_trace(prm, t)), prm)
        assert rep.passed
        assert abs(rep.conclusion_margin) <= 1e-8

    def test_constant_fails_hypothesis(self):
        t = np.linspace(0, 1, 20)
        rep = verify_lemma((t, np.ones(20)), InequalityParams(A=1.0))
        assert not rep.hypothesis_ok

    def test_uptick_rejected(self):
        prm = InequalityParams(A=1.0, beta=1.0)
        t = np.linspace(0, 5, 200)
        E = equality_trace(prm, t)
        E[120] *= 1.001
        rep = verify_lemma((t, E), prm)
        assert not rep.hypothesis_ok
        assert rep.hypothesis_worst_t == pytest.approx(t[120])

    def test_sample_formats(self):
        t = np.linspace(0, 1, 5)
        E = np.exp(-t)
        prm = InequalityParams(A=1.0, E0=1.0)
        a = verify_lemma((t, E), prm)
        b = verify_lemma(np.column_stack([t, E]), prm)
        assert a == b

    def test_non_monotone_times(self):
        with pytest.raises(ValueError):
            verify_lemma(([0.0, 1.0, 1.0], [1.0, 0.5, 0.4]), InequalityParams(A=1.0))

    def test_ode_trace_with_fitted_constant(self):
        tr = simulate_ode(1.0, 1.0, 4.0, 0.0, 1.0, 1e-3, 1000.0)
        t, E = tr.t, tr.E
        # beta = mu_p = 1 for p = 4; A fitted as the tightest constant over the trace
        A = float(np.min((1 / E[1:] - 1 / E[0]) / t[1:]))
        assert A > 0
        prm = InequalityParams(A=A, beta=1.0, E0=E[0])
        assert verify_lemma((t, E), prm).conclusion_ok
        assert verify_integral_inequality((t, E), prm).ok


class TestIntegralInequality:
    def test_equality_case_exponential(self):
        prm = InequalityParams(A=2.0, beta=0.0, E0=1.0)
        t = np.linspace(0, 3, 2001)
        E = np.exp(-2.0 * t)
        rep = verify_integral_inequality((t, E), prm)
        np.testing.assert_allclose(rep.lhs, (E - E[-1]) / 2.0, rtol=1e-5, atol=1e-12)
        assert rep.ok

    def test_zero(self):
        rep = verify_integral_inequality((np.linspace(0, 1, 5), np.zeros(5)), InequalityParams(A=1.0))
        assert rep.ok and rep.margin == 0.0

    def test_violation_detected(self):
        t = np.linspace(0, 10, 100)
        rep = verify_integral_inequality((t, np.ones(100)), InequalityParams(A=1.0))
        assert not rep.ok and rep.worst_t == 0.0

    def test_simulation_trace(self):
        from dampedwave.dynamics import DampingSpec, InitSpec, SimConfig, simulate

        d = make_box_domain([np.pi], [64])
        tr = simulate(SimConfig(d, damping=DampingSpec.single(1.0, 4.0), init=InitSpec(seed=0), dt=1e-2,
                                t_max=100.0))
        t, E = tr.t, tr.E
        A = float(np.min((1 / E[1:] - 1 / E[0]) / t[1:]))
        rep = verify_integral_inequality((t, E), InequalityParams(A=A, beta=1.0, E0=E[0]))
        assert rep.ok


UNIT_CUBE = make_box_domain([1.0] * 3, [16] * 3)


class TestGN:
    def test_single_mode_closed_form(self):
        d = UNIT_CUBE
        c = np.zeros(d.resolution)
        c[0, 0, 0] = 1.0
        delta = 3 / 8
        l2sq = 1 / 8                                 # (1/2)^3
        h2 = np.sqrt(l2sq * (1 + (3 * np.pi**2) ** 2))
        l4 = (3 / 8) ** (3 / 4)                      # (int sin^4)^(3/4) over the cube
        want = l4 / (h2**delta * np.sqrt(l2sq) ** (1 - delta))
        assert gn_ratio(c, d, 4, delta) == pytest.approx(want, rel=1e-13)

    @settings(max_examples=20, deadline=None)
    @given(st.floats(1e-3, 1e3), st.integers(0, 100))
    def test_scale_invariant(self, alpha, seed):
        c = random_smooth_coefficients(UNIT_CUBE, np.random.default_rng(seed), cutoff=4)
        assert gn_ratio(alpha * c, UNIT_CUBE, 4, 3 / 8) == pytest.approx(gn_ratio(c, UNIT_CUBE, 4, 3 / 8), rel=1e-12)

    def test_ensemble(self):
        rep = estimate_gn_constant(UNIT_CUBE, 4, n_fields=100, seed=2)
        assert rep.delta == 3 / 8 and len(rep.ratios) == 100
        assert rep.C_star == rep.ratios.max() and np.isfinite(rep.C_star)
        q = rep.quantiles
        assert q["min"] <= q["median"] <= q["max"] == rep.C_star

    def test_zero_fields_skipped(self):
        c = random_smooth_coefficients(UNIT_CUBE, np.random.default_rng(0), cutoff=4)
        rep = estimate_gn_constant(UNIT_CUBE, 4, ensemble=[c, np.zeros_like(c), 2 * c])
        assert rep.skipped == 1 and len(rep.ratios) == 2

    def test_errors(self):
        with pytest.raises(ValueError):
            estimate_gn_constant(UNIT_CUBE, 4, n_fields=50)
        with pytest.raises(ValueError):
            estimate_gn_constant(make_box_domain([1.0, 1.0], [8, 8]), 2.0)
        with pytest.raises(ValueError):
            estimate_gn_constant(UNIT_CUBE, 4, ensemble=[np.zeros(UNIT_CUBE.resolution)])


class TestHolder:
    def test_exponent_identity(self):
        rng = np.random.default_rng(0)
        for _ in range(200):
            p = rng.uniform(2.01, 20)
            q = p + rng.uniform(0.01, 20)
            tau = holder_exponent(p, q)
            assert 0 < tau < 1
            assert tau / 2 + (1 - tau) / q == pytest.approx(1 / p, rel=1e-13)
            # second exponent in the interpolation equals q(p-2)/(p(q-2))
            assert 1 - tau == pytest.approx(q * (p - 2) / (p * (q - 2)), rel=1e-12)

    def test_point_support_equality(self):
        d = make_box_domain([1.0, 2.0], [10, 10])
        f = np.zeros(d.resolution)
        f[3, 4] = -2.0
        rep = holder_interpolation_check(f, d, 3, 6)
        assert rep.ok and rep.lhs == pytest.approx(rep.rhs, rel=1e-13)

    def test_zero(self):
        d = make_box_domain([1.0], [10])
        rep = holder_interpolation_check(np.zeros(10), d, 3, 5)
        assert rep.ok and rep.lhs == rep.rhs == 0.0

    @settings(max_examples=100, deadline=None)
    @given(st.integers(0, 1_000_000), st.sampled_from([(3, 5), (4, 8), (2.5, 7)]))
    def test_random_fields(self, seed, pq):
        d = make_box_domain([np.pi, 1.0], [16, 16])
        f = inverse_transform(random_smooth_coefficients(d, np.random.default_rng(seed), cutoff=8), d)
        rep = holder_interpolation_check(f, d, *pq)
        assert rep.ok and rep.margin > 0

    @pytest.mark.parametrize("pq", [(2, 5), (5, 5), (6, 4)])
    def test_ordering(self, pq):
        d = make_box_domain([1.0], [10])
        with pytest.raises(ValueError):
            holder_interpolation_check(np.ones(10), d, *pq)
