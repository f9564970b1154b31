"""Scalar nonlinearity: signed log, convex potential, and smoothed maps."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import minimize_scalar

from logdiff.nonlinearity import (
    moreau_envelope,
    potential,
    potential_shifted,
    resolvent,
    signed_log,
    yosida,
    yosida_derivative,
    yosida_shifted,
)

finite_x = st.floats(min_value=-100.0, max_value=100.0, allow_nan=False)
eps_range = st.floats(min_value=1e-3, max_value=1.0, allow_nan=False)


def bisect_resolvent(eps: float, x: float, tol: float = 1e-14) -> float:
    """Independent oracle: plain bisection on y + eps*psi(y) - x."""
    lo, hi = (0.0, x) if x >= 0 else (x, 0.0)
    f = lambda y: y + eps * np.sign(y) * np.log(abs(y) + 1.0) - x
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if f(mid) <= 0:
            lo = mid
        else:
            hi = mid
        if hi - lo < tol:
            break
    return 0.5 * (lo + hi)


class TestSignedLog:
    def test_known_values(self):
        assert signed_log(0.0) == 0.0
        assert abs(signed_log(np.e - 1.0) - 1.0) < 1e-14
        assert abs(signed_log(-(np.e**2 - 1.0)) + 2.0) < 1e-14

    @given(finite_x)
    def test_odd(self, x):
        assert signed_log(-x) == -signed_log(x)

    @given(finite_x, finite_x)
    def test_increasing(self, a, b):
        if a == b:
            return
        lo, hi = min(a, b), max(a, b)
        assert signed_log(lo) <= signed_log(hi)
        # strict once the gap is resolvable in floating point
        if hi - lo > 1e-9 * (1.0 + abs(lo) + abs(hi)):
            assert signed_log(lo) < signed_log(hi)

    def test_vectorized(self):
        x = np.array([0.0, np.e - 1.0, -(np.e - 1.0)])
        out = signed_log(x)
        assert out.shape == (3,)
        assert np.allclose(out, [0.0, 1.0, -1.0])


class TestPotential:
    def test_known_values(self):
        assert potential(0.0) == 0.0
        assert abs(potential(np.e - 1.0) - 1.0) < 1e-14

    @given(finite_x)
    def test_even_nonnegative_quadratic_bound(self, x):
        g = potential(x)
        assert g == potential(-x)
        assert 0.0 <= g <= x * x + 1e-15

    def test_superlinear_growth(self):
        ratios = [potential(v) / v for v in (1e2, 1e4, 1e6)]
        assert ratios[0] < ratios[1] < ratios[2]

    @given(finite_x, finite_x)
    def test_convexity_midpoint(self, a, b):
        mid = potential(0.5 * (a + b))
        assert mid <= 0.5 * (potential(a) + potential(b)) + 1e-12


class TestResolvent:
    def test_known_values(self):
        assert resolvent(1.0, 0.0) == 0.0
        assert abs(resolvent(1.0, np.e) - (np.e - 1.0)) < 1e-12

    def test_against_bisection_oracle(self):
        for eps, x in [(0.5, 10.0), (1e-3, 42.0), (1.0, -7.5), (0.25, 0.3)]:
            y = resolvent(eps, x)
            oracle = bisect_resolvent(eps, x)
            assert abs(y - oracle) < 1e-12 * max(1.0, abs(x))

    @given(eps_range, finite_x)
    def test_residual_sign_and_contraction(self, eps, x):
        y = resolvent(eps, x)
        assert abs(y + eps * signed_log(y) - x) <= 1e-12 * max(1.0, abs(x))
        assert np.sign(y) == np.sign(x)
        assert abs(y) <= abs(x) + 1e-15

    @given(eps_range, finite_x, finite_x)
    def test_nonexpansive(self, eps, a, b):
        assert abs(resolvent(eps, a) - resolvent(eps, b)) <= abs(a - b) + 1e-12

    def test_rejects_bad_eps_and_nonfinite(self):
        with pytest.raises(ValueError):
            resolvent(0.0, 1.0)
        with pytest.raises(ValueError):
            resolvent(-1.0, 1.0)
        with pytest.raises(ValueError):
            resolvent(1.0, np.nan)

    def test_array_input(self):
        x = np.linspace(-50, 50, 101)
        y = resolvent(0.1, x)
        assert y.shape == x.shape
        assert np.max(np.abs(y + 0.1 * signed_log(y) - x)) < 1e-12 * 50


class TestYosida:
    def test_known_values(self):
        assert yosida(1.0, 0.0) == 0.0
        assert abs(yosida(1.0, np.e) - 1.0) < 1e-12

    @given(eps_range, finite_x)
    def test_two_formulas_agree(self, eps, x):
        # (x - J)/eps vs psi(J)
        assert abs(yosida(eps, x) - signed_log(resolvent(eps, x))) < 1e-10

    @given(eps_range, finite_x)
    def test_standard_bounds(self, eps, x):
        v = yosida(eps, x)
        assert abs(v) <= abs(signed_log(x)) + 1e-12
        assert abs(v) <= abs(x) / eps + 1e-12

    @given(eps_range, finite_x, finite_x)
    def test_monotone(self, eps, a, b):
        assert (yosida(eps, a) - yosida(eps, b)) * (a - b) >= -1e-12

    def test_pointwise_convergence_monotone(self):
        rng = np.random.default_rng(17)
        x = rng.uniform(-100, 100, 100)
        gaps = np.stack(
            [np.abs(yosida(e, x) - signed_log(x)) for e in (1.0, 0.1, 0.01, 0.001)]
        )
        assert np.all(np.diff(gaps, axis=0) <= 1e-12)


class TestShifted:
    def test_known_values(self):
        assert yosida_shifted(1.0, 0.0) == 0.0
        assert potential_shifted(1.0, 0.0) == 0.0
        assert abs(yosida_shifted(1.0, np.e) - (1.0 + np.e)) < 1e-12

    def test_derivative_matches_central_difference(self):
        rng = np.random.default_rng(23)
        step = 1e-5
        for _ in range(200):
            eps = rng.uniform(1e-2, 1.0)
            x = rng.uniform(-50, 50)
            if abs(x) < 0.1:
                continue
            approx = (
                potential_shifted(eps, x + step) - potential_shifted(eps, x - step)
            ) / (2 * step)
            exact = yosida_shifted(eps, x)
            assert abs(approx - exact) < 1e-6 * max(1.0, abs(exact))

    @given(eps_range, finite_x, finite_x)
    def test_strong_monotonicity(self, eps, a, b):
        lhs = (yosida_shifted(eps, a) - yosida_shifted(eps, b)) * (a - b)
        assert lhs >= eps * (a - b) ** 2 - 1e-10

    @given(eps_range, finite_x, finite_x)
    def test_subdifferential_inequality(self, eps, x, y):
        lhs = yosida_shifted(eps, x) * (x - y)
        rhs = potential_shifted(eps, x) - potential_shifted(eps, y)
        assert lhs >= rhs - 1e-10


class TestMoreauEnvelope:
    def test_known_values(self):
        assert moreau_envelope(1.0, 0.0) == 0.0
        assert abs(moreau_envelope(1.0, np.e) - 1.5) < 1e-12

    def test_against_minimization_oracle(self):
        for eps, x in [(0.5, 3.0), (0.1, -8.0), (1.0, 20.0), (0.01, 0.5)]:
            res = minimize_scalar(
                lambda y: (x - y) ** 2 / (2 * eps) + potential(y),
                bracket=(0.0, x) if x != 0 else None,
                method="brent",
                options={"xtol": 1e-12},
            )
            assert abs(moreau_envelope(eps, x) - res.fun) < 1e-9 * max(1.0, abs(res.fun))

    @given(eps_range, finite_x)
    def test_sandwich(self, eps, x):
        j = resolvent(eps, x)
        env = moreau_envelope(eps, x)
        assert potential(j) <= env + 1e-12
        assert env <= potential(x) + 1e-12


class TestYosidaDerivative:
    def test_known_values(self):
        for eps in (0.1, 0.5, 1.0):
            assert abs(yosida_derivative(eps, 0.0) - 1.0 / (1.0 + eps)) < 1e-14
        assert abs(yosida_derivative(1.0, np.e) - 1.0 / (np.e + 1.0)) < 1e-12

    def test_vanishes_at_infinity(self):
        assert yosida_derivative(0.5, 1e8) < 1e-6
        assert yosida_derivative(0.5, -1e8) < 1e-6

    @given(eps_range, finite_x)
    def test_positive_bounded(self, eps, x):
        d = yosida_derivative(eps, x)
        assert 0.0 < d <= 1.0 / eps

    def test_matches_central_difference_of_yosida(self):
        rng = np.random.default_rng(29)
        step = 1e-5
        for _ in range(100):
            eps = rng.uniform(1e-2, 1.0)
            x = rng.uniform(-50, 50)
            approx = (yosida(eps, x + step) - yosida(eps, x - step)) / (2 * step)
            assert abs(approx - yosida_derivative(eps, x)) < 1e-5
