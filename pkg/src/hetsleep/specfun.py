"""Special functions used by the analytic coverage engine.

This module implements:
  - a guarded Gauss hypergeometric 2F1 (direct series, Pfaff transform for
    negative argument, exact c=a / c=b and terminating reductions)
  - a generalized 3F2 with exact upper/lower parameter cancellation
  - the interference kernel transform J_l built on 3F2
  - the 1-norm of the exponential of a lower-triangular Toeplitz matrix
  - an inverse DFT that recovers a probability mass function from
    generating-function samples on the unit circle
  - Nakagami-m pdf / ccdf for the circular-cell radius model

Everything here is deterministic numerics; no network model state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import linalg as _sla
from scipy import special as _sps

__all__ = [
    "SeriesControl",
    "ConvergenceError",
    "ArgumentRangeError",
    "reg_upper_gamma_q",
    "gauss_2f1",
    "hyper_3f2",
    "cal_j",
    "toeplitz_lower_expm_norm1",
    "inverse_dft_real",
    "nakagami_pdf",
    "nakagami_ccdf",
]


class ConvergenceError(ArithmeticError):
    """Series did not reach the requested tolerance within max_terms."""


class ArgumentRangeError(ValueError):
    """Argument outside the domain where the implemented evaluation is valid."""


@dataclass(frozen=True)
class SeriesControl:
    """Convergence policy for the hypergeometric series.

    rel_tol: stop once |term| <= rel_tol * |partial sum|
    abs_tol: stop once |term| <= abs_tol (guards sums near zero)
    max_terms: hard cap, exceeding it raises ConvergenceError
    """

    rel_tol: float = 1e-12
    abs_tol: float = 1e-300
    max_terms: int = 10000


_DEFAULT_CTRL = SeriesControl()


def reg_upper_gamma_q(a: float, x: float):
    """Regularized upper incomplete gamma Q(a, x) = Gamma(a, x) / Gamma(a).

    Thin wrapper, exists so callers share one spelling.  Accepts arrays in x.
    """
    if a <= 0.0:
        raise ArgumentRangeError(f"shape parameter must be positive, got a={a}")
    return _sps.gammaincc(a, x)


def _is_nonpos_int(v: float) -> bool:
    return v <= 0.0 and float(v).is_integer()


def _series_2f1(a: float, b: float, c: float, x: float, ctrl: SeriesControl) -> float:
    # Kahan-compensated power series; caller guarantees |x| < 1 and c not a
    # nonpositive integer (unless the series terminates first).
    total = 1.0
    comp = 0.0
    term = 1.0
    for n in range(ctrl.max_terms):
        term *= (a + n) * (b + n) / ((c + n) * (1.0 + n)) * x
        y = term - comp
        t = total + y
        comp = (t - total) - y
        total = t
        if abs(term) <= ctrl.abs_tol or abs(term) <= ctrl.rel_tol * abs(total):
            return total
        if a + n + 1 == 0.0 or b + n + 1 == 0.0:
            return total  # next factor is zero, polynomial terminated
    raise ConvergenceError(
        f"2F1({a},{b};{c};{x}) did not converge in {ctrl.max_terms} terms"
    )


def gauss_2f1(a: float, b: float, c: float, x: float,
              ctrl: SeriesControl = _DEFAULT_CTRL) -> float:
    """Gauss hypergeometric function 2F1(a, b; c; x) for real x < 1.

    Evaluation routes:
      - c == a: exact reduction (1-x)^(-b); c == b: (1-x)^(-a)
      - a or b a nonpositive integer: terminating series
      - x < 0: Pfaff transform onto argument x/(x-1) in (0, 1)
      - 0 <= x < 1: direct series

    Raises
    ------
    ArgumentRangeError
        if x >= 1 or c is a nonpositive integer without termination.
    ConvergenceError
        if the series does not converge within ctrl.max_terms.
    """
    if not np.isfinite(x):
        raise ArgumentRangeError(f"argument must be finite, got x={x}")
    if x >= 1.0:
        raise ArgumentRangeError(f"2F1 series region is x < 1, got x={x}")
    if x == 0.0:
        return 1.0
    # exact reductions first: they hold for all x < 1 and cost nothing
    if c == a:
        return (1.0 - x) ** (-b)
    if c == b:
        return (1.0 - x) ** (-a)
    terminating = _is_nonpos_int(a) or _is_nonpos_int(b)
    if _is_nonpos_int(c) and not terminating:
        raise ArgumentRangeError(f"lower parameter c={c} is a nonpositive integer")
    if terminating or 0.0 < x < 1.0:
        return _series_2f1(a, b, c, x, ctrl)
    # x < 0: Pfaff on whichever parameter keeps the transformed series sane
    y = x / (x - 1.0)  # in (0, 1)
    if not _is_nonpos_int(c - b):
        return (1.0 - x) ** (-a) * _series_2f1(a, c - b, c, y, ctrl)
    if not _is_nonpos_int(c - a):
        return (1.0 - x) ** (-b) * _series_2f1(c - a, b, c, y, ctrl)
    # both transforms degenerate; the direct series still converges on (-1, 0)
    if x > -1.0:
        return _series_2f1(a, b, c, x, ctrl)
    raise ArgumentRangeError(
        f"no valid evaluation route for 2F1({a},{b};{c};{x})"
    )


def hyper_3f2(a1: float, a2: float, a3: float, b1: float, b2: float, x: float,
              ctrl: SeriesControl = _DEFAULT_CTRL) -> float:
    """Generalized hypergeometric 3F2(a1, a2, a3; b1, b2; x).

    An upper parameter equal to a lower parameter cancels exactly, reducing
    to 2F1 (which then has the full x < 1 domain).  The remaining true 3F2
    is summed directly and only trusted for |x| < 0.95; outside that an
    ArgumentRangeError signals the caller to fall back to quadrature.
    """
    uppers = [a1, a2, a3]
    for i, ai in enumerate(uppers):
        if ai == b1:
            rest = uppers[:i] + uppers[i + 1:]
            return gauss_2f1(rest[0], rest[1], b2, x, ctrl)
        if ai == b2:
            rest = uppers[:i] + uppers[i + 1:]
            return gauss_2f1(rest[0], rest[1], b1, x, ctrl)
    if not np.isfinite(x):
        raise ArgumentRangeError(f"argument must be finite, got x={x}")
    if x == 0.0:
        return 1.0
    terminating = any(_is_nonpos_int(v) for v in uppers)
    if abs(x) >= 0.95 and not terminating:
        raise ArgumentRangeError(
            f"3F2 direct series limited to |x| < 0.95, got x={x}"
        )
    if (_is_nonpos_int(b1) or _is_nonpos_int(b2)) and not terminating:
        raise ArgumentRangeError("lower 3F2 parameter is a nonpositive integer")
    total = 1.0
    comp = 0.0
    term = 1.0
    for n in range(ctrl.max_terms):
        term *= (a1 + n) * (a2 + n) * (a3 + n) / ((b1 + n) * (b2 + n) * (1.0 + n)) * x
        y = term - comp
        t = total + y
        comp = (t - total) - y
        total = t
        if abs(term) <= ctrl.abs_tol or abs(term) <= ctrl.rel_tol * abs(total):
            return total
        if any(v + n + 1 == 0.0 for v in uppers):
            return total
    raise ConvergenceError(
        f"3F2({a1},{a2},{a3};{b1},{b2};{x}) did not converge in {ctrl.max_terms} terms"
    )


def cal_j(l: int, m: float, nu: float, x: float,
          ctrl: SeriesControl = _DEFAULT_CTRL) -> float:
    """Interference transform J_l(x) = 3F2(l+1/2, l-nu, l+m; l+1, l+1-nu; x).

    l is the Laplace-derivative order, m the fading shape, nu = 2/alpha.
    For m = 1 the (l+m, l+1) pair cancels and the x < 0 domain is unlimited.
    """
    if l < 0:
        raise ArgumentRangeError(f"order must be nonnegative, got l={l}")
    return hyper_3f2(l + 0.5, l - nu, l + m, l + 1.0, l + 1.0 - nu, x, ctrl)


def toeplitz_lower_expm_norm1(first_col) -> float:
    """1-norm of exp(C) where C is lower-triangular Toeplitz.

    first_col lists the first column of C, diagonal entry first.  The order
    equals the fading shape m and is capped at 64, matching the largest m
    the success-probability series uses.  For a 1x1 input this is exp(c0).
    """
    col = np.asarray(first_col, dtype=float)
    if col.ndim != 1 or col.size < 1:
        raise ArgumentRangeError("first_col must be a nonempty 1-d sequence")
    m = col.size
    if m > 64:
        raise ArgumentRangeError(f"order capped at 64, got {m}")
    if m == 1:
        return math.exp(col[0])
    mat = np.zeros((m, m))
    for k in range(m):
        idx = np.arange(m - k)
        mat[idx + k, idx] = col[k]
    return float(np.linalg.norm(_sla.expm(mat), 1))


def inverse_dft_real(values, imag_tol: float = 1e-8):
    """Recover a pmf from generating-function samples on the unit circle.

    values[k] must equal G(exp(2j*pi*k/N)) for k = 0..N-1 where G is the
    probability generating function of the target pmf.  Returns the length-N
    real pmf (mass above N-1 aliases; the caller controls N so the aliased
    tail stays below its tolerance).

    Raises
    ------
    ValueError
        if the inverted coefficients carry an imaginary residue larger than
        imag_tol * max|values|, which indicates aliasing or a bad sample grid.
    """
    v = np.asarray(values, dtype=complex)
    if v.ndim != 1 or v.size < 2:
        raise ValueError("values must be a 1-d array of at least 2 samples")
    coef = np.fft.fft(v) / v.size
    scale = np.max(np.abs(v))
    resid = np.max(np.abs(coef.imag))
    if scale > 0 and resid > imag_tol * scale:
        raise ValueError(
            f"imaginary residue {resid:.3e} exceeds {imag_tol:.1e} * max|values|; "
            "generating-function samples are inconsistent with a real pmf"
        )
    return coef.real


def nakagami_pdf(r, m: float, omega: float):
    """Nakagami-m pdf with shape m and spread omega, evaluated at r >= 0."""
    if m <= 0 or omega <= 0:
        raise ArgumentRangeError("nakagami parameters must be positive")
    r = np.asarray(r, dtype=float)
    out = np.zeros_like(r)
    pos = r > 0
    rp = r[pos]
    logpdf = (
        math.log(2.0)
        + m * math.log(m / omega)
        - math.lgamma(m)
        + (2 * m - 1) * np.log(rp)
        - m * rp * rp / omega
    )
    out[pos] = np.exp(logpdf)
    return out if out.ndim else float(out)


def nakagami_ccdf(r, m: float, omega: float):
    """Nakagami-m ccdf P(R > r) = Q(m, m r^2 / omega)."""
    if m <= 0 or omega <= 0:
        raise ArgumentRangeError("nakagami parameters must be positive")
    r = np.asarray(r, dtype=float)
    out = _sps.gammaincc(m, m * r * r / omega)
    return out if out.ndim else float(out)
