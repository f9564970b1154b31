"""The monotone log nonlinearity and its Yosida/Moreau regularizations.

Everything here is a scalar map applied elementwise; array inputs are
accepted and broadcast.  The base graph is

    signed_log(x) = sign(x) * ln(1 + |x|),        signed_log(0) = 0,

with convex potential

    potential(x) = (|x| + 1) * ln(|x| + 1) - |x|,  0 <= potential(x) <= x^2.

For eps > 0 the resolvent J_eps solves y + eps*signed_log(y) = x; the
Yosida approximation is yosida(eps, x) = (x - J_eps(x)) / eps, which
coincides with signed_log(J_eps(x)).  The solver uses the shifted
variants yosida_shifted = yosida + eps*x and the matching potential
potential_shifted = moreau_envelope + eps*x^2/2, whose derivative is
exactly yosida_shifted.

The scalar root solve is a Newton iteration safeguarded by bisection on
the bracket [0, |x|]; it is driven below its rounding floor (far below
the 1e-12*max(1,|x|) residual contract) so that the two Yosida formulas
agree to 1e-10 even after division by eps.
"""

from __future__ import annotations

import numpy as np

_MAX_NEWTON_ITER = 100
_RESIDUAL_CONTRACT = 1e-12
_RESIDUAL_TARGET = 1e-15


def _check_eps(eps) -> None:
    e = np.asarray(eps, dtype=float)
    if not (np.all(np.isfinite(e)) and np.all(e > 0)):
        raise ValueError(f"eps must be positive and finite, got {eps}")


def _prepare(x) -> tuple[np.ndarray, bool]:
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ValueError("input values must be finite")
    return arr, arr.ndim == 0


def _output(out, scalar: bool):
    return float(out) if scalar else np.asarray(out)


def signed_log(x):
    """sign(x) * ln(1 + |x|)."""
    arr, scalar = _prepare(x)
    return _output(np.sign(arr) * np.log1p(np.abs(arr)), scalar)


def potential(x):
    """Convex antiderivative of signed_log, normalized to vanish at 0."""
    arr, scalar = _prepare(x)
    a = np.abs(arr)
    return _output((a + 1.0) * np.log1p(a) - a, scalar)


def _resolvent(eps, arr: np.ndarray) -> np.ndarray:
    """Safeguarded Newton for y + eps*ln(1+y) = |x|, sign restored after."""
    eps_arr = np.broadcast_to(np.asarray(eps, dtype=float), arr.shape)
    a = np.abs(arr)
    s = np.sign(arr)
    scale = np.maximum(1.0, a)
    y = a.copy()
    lo = np.zeros_like(a)
    hi = a.copy()

    prev_max = np.inf
    stall = 0
    for _ in range(_MAX_NEWTON_ITER):
        f = y + eps_arr * np.log1p(y) - a
        absf = np.abs(f)
        if np.all(absf <= _RESIDUAL_TARGET * scale):
            break
        worst = float(np.max(absf / scale)) if absf.size else 0.0
        if worst >= 0.5 * prev_max:
            stall += 1
            if stall >= 3 and np.all(absf <= _RESIDUAL_CONTRACT * scale):
                break
        else:
            stall = 0
        prev_max = min(prev_max, worst)
        lo = np.where(f < 0.0, y, lo)
        hi = np.where(f > 0.0, y, hi)
        y_new = y - f / (1.0 + eps_arr / (1.0 + y))
        outside = (y_new < lo) | (y_new > hi)
        y = np.where(outside, 0.5 * (lo + hi), y_new)

    residual = np.abs(y + eps_arr * np.log1p(y) - a)
    if not np.all(residual <= _RESIDUAL_CONTRACT * scale):
        raise RuntimeError("resolvent root solve failed to meet the residual contract")
    return s * y


def resolvent(eps, x):
    """Solve y + eps*signed_log(y) = x for y (elementwise).

    The root has the sign of x and |y| <= |x|, so by oddness the solve
    runs on |x| with the bracket [0, |x|].  Newton steps that leave the
    bracket fall back to its midpoint.  Raises RuntimeError if the
    residual contract 1e-12*max(1,|x|) cannot be met (must not happen
    for finite input).
    """
    _check_eps(eps)
    arr, scalar = _prepare(x)
    return _output(_resolvent(eps, arr), scalar)


def yosida(eps, x):
    """(x - resolvent(eps, x)) / eps; equals signed_log at the resolvent."""
    _check_eps(eps)
    arr, scalar = _prepare(x)
    j = _resolvent(eps, arr)
    return _output((arr - j) / np.asarray(eps, dtype=float), scalar)


def moreau_envelope(eps, x):
    """(x - J)^2/(2 eps) + potential(J) with J = resolvent(eps, x).

    This closed form (via the resolvent) is the primary definition; the
    underlying minimization over y is kept as a test oracle only.
    """
    _check_eps(eps)
    arr, scalar = _prepare(x)
    j = _resolvent(eps, arr)
    e = np.asarray(eps, dtype=float)
    return _output((arr - j) ** 2 / (2.0 * e) + potential(j), scalar)


def yosida_shifted(eps, x):
    """yosida(eps, x) + eps*x, strictly monotone with slope >= eps."""
    _check_eps(eps)
    arr, scalar = _prepare(x)
    e = np.asarray(eps, dtype=float)
    j = _resolvent(eps, arr)
    return _output((arr - j) / e + e * arr, scalar)


def potential_shifted(eps, x):
    """moreau_envelope(eps, x) + eps*x^2/2; derivative is yosida_shifted."""
    _check_eps(eps)
    arr, scalar = _prepare(x)
    e = np.asarray(eps, dtype=float)
    j = _resolvent(eps, arr)
    env = (arr - j) ** 2 / (2.0 * e) + potential(j)
    return _output(env + 0.5 * e * arr**2, scalar)


def yosida_derivative(eps, x):
    """d/dx yosida(eps, x) = s/(1 + eps*s) with s = 1/(1 + |J|).

    Values lie in (0, 1/(1+eps)] subset of (0, 1/eps]; at x = 0 the
    value is 1/(1+eps).
    """
    _check_eps(eps)
    arr, scalar = _prepare(x)
    j = _resolvent(eps, arr)
    slope = 1.0 / (1.0 + np.abs(j))
    e = np.asarray(eps, dtype=float)
    return _output(slope / (1.0 + e * slope), scalar)
