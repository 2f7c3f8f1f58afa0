import json
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dampedwave import functionals as fn
from dampedwave.dynamics import InitSpec, OperatorSpec, SimConfig, State, initial_state
from dampedwave.spectral import forward_transform, grid_coordinates, make_box_domain

D1 = make_box_domain([np.pi], [64])


def _mode_state(d, k_y=None, k_v=None, ay=1.0, av=1.0):
    y = np.zeros(d.resolution)
    v = np.zeros(d.resolution)
    if k_y is not None:
        y[k_y - 1] = ay
    if k_v is not None:
        v[k_v - 1] = av
    return State(0.0, y, v)


class TestEnergy:
    def test_mode_one_velocity(self):
        assert fn.energy(_mode_state(D1, k_v=1), D1) == pytest.approx(np.pi / 4, rel=1e-15)

    def test_zero(self):
        assert fn.energy(_mode_state(D1), D1) == 0.0
        assert fn.f_functional(_mode_state(D1), D1) == 0.0

    def test_plate_energy_uses_laplacian(self):
        s = _mode_state(D1, k_y=2, ay=0.5)
        # 1/2 * |Lap y|^2 with eig=4: 0.5 * 16 * 0.25 * pi/2
        assert fn.energy(s, D1, "hinged_plate") == pytest.approx(0.5 * 16 * 0.25 * np.pi / 2, rel=1e-14)
        assert fn.energy(s, D1, "wave") == pytest.approx(0.5 * 4 * 0.25 * np.pi / 2, rel=1e-14)

    def test_physical_agrees_at_second_order(self):
        diffs = []
        for n in (31, 63, 127):
            d = make_box_domain([np.pi, 2.0], [n, n])
            x, y = grid_coordinates(d)
            Y = np.sin(x) ** 3 * np.sin(np.pi * y / 2) * np.exp(x / 3)
            V = np.sin(2 * x) * np.sin(np.pi * y) * (1 + x * y)
            s = State(0.0, forward_transform(Y, d), forward_transform(V, d))
            diffs.append(abs(fn.energy(s, d) - fn.energy_physical(Y, V, d)))
        assert diffs[0] / diffs[1] == pytest.approx(4, rel=0.1)
        assert diffs[1] / diffs[2] == pytest.approx(4, rel=0.1)

    def test_operator_duck_typing(self):
        s = _mode_state(D1, k_y=3, k_v=2)
        assert fn.energy(s, D1, OperatorSpec("hinged_plate")) == fn.energy(s, D1, "hinged_plate")
        with pytest.raises(ValueError):
            fn.energy(s, D1, "membrane")


class TestF:
    def test_mode_one(self):
        s = _mode_state(D1, k_v=1)
        assert fn.f_functional(s, D1) == pytest.approx(np.pi / 2, rel=1e-15)
        assert fn.f_functional(s, D1, "hinged_plate") == pytest.approx(np.pi / 4, rel=1e-15)

    def test_displacement_terms(self):
        s = _mode_state(D1, k_y=2)
        assert fn.f_functional(s, D1) == pytest.approx(16 * np.pi / 2)          # |Lap y|^2
        assert fn.f_functional(s, D1, "hinged_plate") == pytest.approx(0.5 * 64 * np.pi / 2)  # |grad Lap y|^2 / 2


class TestPerturbedEnergy:
    def test_eps_zero_and_orthogonal(self):
        rng = np.random.default_rng(0)
        s = State(0.0, rng.standard_normal(64) / np.arange(1, 65) ** 2, rng.standard_normal(64) / np.arange(1, 65))
        E = fn.energy(s, D1)
        assert fn.perturbed_energy(s, 0.0, 1.0, 1.0, D1) == E
        assert fn.perturbed_energy(s, 1e-12, 1.0, 1.0, D1) == pytest.approx(E, rel=1e-10)
        orth = _mode_state(D1, k_y=1, k_v=2, ay=0.7, av=-1.3)
        assert fn.perturbed_energy(orth, 0.4, 2.0, 1.0, D1) == fn.energy(orth, D1)

    def test_cross_term(self):
        s = _mode_state(D1, k_y=1, k_v=1, ay=2.0, av=3.0)
        E = fn.energy(s, D1)
        assert fn.perturbed_energy(s, 0.1, 0.5, 0.25, D1) == pytest.approx(E + 0.1 * 0.25 * E**0.5 * 6 * np.pi / 2)

    @settings(max_examples=60, deadline=None)
    @given(st.integers(0, 10_000), st.floats(0.0, 0.5), st.floats(0.0, 3.0), st.floats(0.05, 20.0),
           st.sampled_from(["wave", "hinged_plate"]))
    def test_sandwich(self, seed, r, mu, E0, op):
        d = make_box_domain([np.pi, 1.7], [10, 10])
        cfg = SimConfig(d, OperatorSpec(op), init=InitSpec(seed=seed, cutoff=6, energy=E0))
        s = initial_state(cfg)
        poincare = d.lam if op == "wave" else d.lambda2
        for w0 in (1.0, 0.5):
            eps = r * poincare / (w0 * E0**mu)
            Ee = fn.perturbed_energy(s, eps, mu, w0, d, op)
            lo, hi = fn.perturbed_energy_sandwich(fn.energy(s, d, op), E0, eps, mu, w0, poincare)
            assert lo * (1 - 1e-12) <= Ee <= hi * (1 + 1e-12)

    def test_weights(self):
        assert fn.weight_phi(0.0, "logshift") == 0.0
        assert fn.weight_phi(2.0, "logshift") == pytest.approx(np.log(4) - np.log(2))
        assert fn.weight_derivative(3.0, "logshift") == pytest.approx(0.2)
        assert fn.weight_derivative(3.0) == 1.0
        np.testing.assert_array_equal(fn.weight_derivative(np.zeros(3)), np.ones(3))
        with pytest.raises(ValueError):
            fn.weight_phi(1.0, "sqrt")


class TestExponents:
    def test_remark_p3_N12(self):
        r = fn.mu_exponents(3, 12)
        assert r.mu_pN == Fraction(1, 2)
        assert r.predicted_power_exponent == 2
        assert r.regime == "supercritical" and r.strong_admissible and r.power_theorem == "strong"

    def test_mu_p_example(self):
        assert fn.mu_exponents(8, 3).mu_p == 3

    def test_cube_p7(self):
        r = fn.mu_exponents(7, 3)
        assert r.mu_pN == Fraction(5, 2) and r.mu_p == Fraction(5, 2)
        assert r.predicted_power_exponent == Fraction(2, 5) and r.predicted_log_exponent == Fraction(2, 5)
        assert r.regime == "supercritical"

    def test_subcritical_and_critical_use_classical_rate(self):
        r = fn.mu_exponents(4, 3)
        assert r.regime == "subcritical" and r.predicted_power_exponent == 1 and r.power_theorem == "classical"
        assert not r.weak_log_applicable
        assert fn.mu_exponents(6, 3).regime == "critical"
        assert fn.mu_exponents(Fraction(7, 2), 1).regime == "subcritical"

    def test_inadmissible_supercritical(self):
        r = fn.mu_exponents(12, 6)     # (N-4)p = 24 > 12
        assert r.regime == "supercritical" and not r.strong_admissible
        assert r.predicted_power_exponent is None and r.predicted_log_exponent == Fraction(1, 5)
        assert r.delta_gn is None

    def test_q_equal_p_reduces(self):
        for p in (Fraction(5, 2), 3, 4, 9):
            for N in range(1, 15):
                r = fn.mu_exponents(p, N, q=p)
                assert r.mu_pqN == r.mu_pN
                assert r.mu_pq == r.mu_p

    def test_double_dominance(self):
        r = fn.mu_exponents(3, 5, q=8)
        assert r.mu_pqN == Fraction(1, 2) and r.predicted_power_exponent == 2 and r.dominant_damping == "p"
        assert fn.mu_exponents(3, 8, q=4).dominant_damping == "p"       # 8 <= 12
        r = fn.mu_exponents(Fraction(21, 10), 8, q=4)
        assert r.dominant_damping == "q"

    def test_plate(self):
        assert fn.mu_exponents(3, 8, operator="hinged_plate").regime == "subcritical"   # (N-4)p = 12 < 16
        assert fn.mu_exponents(4, 8, operator="hinged_plate").regime == "critical"
        r = fn.mu_exponents(5, 8, operator="hinged_plate")
        assert r.regime == "supercritical" and r.strong_admissible
        assert r.mu_pN == Fraction(3, 2) and r.predicted_power_exponent == Fraction(2, 3)
        r = fn.mu_exponents(3, 30, operator="hinged_plate")
        # dimensional branch: (N-6)/(6(p-1)) = 2 > 1
        assert r.mu_pN == Fraction(1, 2) * 2 and not r.strong_admissible

    @pytest.mark.parametrize("args", [(2, 3), (1.5, 3), (3, 0), (4, 3, 3.5)])
    def test_errors(self, args):
        with pytest.raises(ValueError):
            fn.mu_exponents(*args)

    def test_double_plate_unsupported(self):
        with pytest.raises(ValueError):
            fn.mu_exponents(3, 3, q=4, operator="hinged_plate")

    def test_exact_arithmetic_from_floats(self):
        r = fn.mu_exponents(2.5, 3)
        assert r.p == Fraction(5, 2) and r.mu_p == Fraction(2, 3)

    def test_branch_switch_continuity(self):
        # mu_p branches meet at p = 3, mu_pN branches at p = N/4
        for p0, N in ((3.0, 3), (3.0, 12), (4.0, 16)):
            at = float(fn.mu_exponents(p0, N).mu_p if N == 3 else fn.mu_exponents(p0, N).mu_pN)
            for h in (1e-6, -1e-6):
                r = fn.mu_exponents(p0 + h, N)
                val = float(r.mu_p if N == 3 else r.mu_pN)
                assert abs(val - at) < 1e-5

    @settings(max_examples=200, deadline=None)
    @given(st.fractions(Fraction(201, 100), 12), st.integers(1, 14))
    def test_invariants(self, p, N):
        r = fn.mu_exponents(p, N)
        assert r.mu_p > 0 and r.mu_pN > 0
        lhs = (N - 2) * p
        assert r.regime == ("subcritical" if lhs < 2 * N else "critical" if lhs == 2 * N else "supercritical")
        assert r.strong_admissible == (p * (N - 4) <= 2 * N)

    def test_json(self):
        d = json.loads(json.dumps(fn.mu_exponents(7, 3).to_json()))
        assert d["mu_pN_exact"] == "5/2" and d["mu_pN"] == 2.5 and d["q"] is None


class TestGNDelta:
    def test_examples(self):
        assert fn.gn_delta(4, 3) == Fraction(3, 8)
        for p in (3, Fraction(7, 2), 10):
            assert fn.gn_delta(p, 4) == (Fraction(p) - 2) / p
        assert fn.gn_delta(10, 5) == 1

    def test_inadmissible(self):
        with pytest.raises(ValueError):
            fn.gn_delta(11, 5)
        with pytest.raises(ValueError):
            fn.gn_delta(2, 3)


class TestCurves:
    def test_lp_growth(self):
        assert fn.lp_growth_bound(0.0, 1.5, 2.0, 1.0, 4.0) == pytest.approx(2 ** 0.75 * 1.5)
        assert fn.lp_growth_bound(10.0, 0.0, 0.0, 1.0, 4.0) == 0.0
        t = np.array([0.0, 1.0, 16.0])
        want = 2 ** 0.75 * (0.5 + 2.0 ** -0.25 * t**0.75 * 3.0**0.25)
        np.testing.assert_allclose(fn.lp_growth_bound(t, 0.5, 3.0, 2.0, 4.0), want)
        with pytest.raises(ValueError):
            fn.lp_growth_bound(1.0, 1.0, 1.0, 0.0, 4.0)

    def test_bound_curve(self):
        assert fn.bound_curve(0.0, "power", 1.0, 1.0) == 1.0
        assert fn.bound_curve(0.0, "log", 3.0, 0.4) == pytest.approx(3.0 * np.log(2) ** -0.4)
        assert fn.bound_curve(9.0, "power", 2.0, 0.5) == pytest.approx(2.0 / np.sqrt(10))
        with pytest.raises(ValueError):
            fn.bound_curve(0.0, "exp", 1.0, 1.0)


class TestTrajectory:
    def test_columns(self):
        tr = fn.Trajectory([fn.TrajectoryRecord(0.0, 2.0, 0.0, F=1.0), fn.TrajectoryRecord(1.0, 1.5, 0.5)])
        np.testing.assert_array_equal(tr.E, [2.0, 1.5])
        assert np.isnan(tr.F[1]) and len(tr) == 2 and tr[1].t == 1.0
        assert isinstance(tr[:1], fn.Trajectory)
        with pytest.raises(AttributeError):
            tr.bogus
