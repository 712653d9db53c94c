"""Unit tests for the special-function layer.

Oracles: scipy.special.hyp2f1 and scipy.stats.nakagami for cross-checks,
hand-expanded polynomials for terminating cases, and direct construction
for the generating-function inversion.
"""

import math

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st
from scipy import special as sps
from scipy import stats as sstats

from hetsleep.specfun import (
    ArgumentRangeError,
    ConvergenceError,
    SeriesControl,
    cal_j,
    gauss_2f1,
    hyper_3f2,
    inverse_dft_real,
    nakagami_ccdf,
    nakagami_pdf,
    reg_upper_gamma_q,
    toeplitz_lower_expm_norm1,
)


# ===== 2F1 =====

def test_2f1_sqrt_identity_wide_range():
    # 2F1(1/2, -1/2; 1/2; x) = sqrt(1 - x), the c = a reduction
    for x in np.linspace(-10.0, 0.99, 113):
        assert gauss_2f1(0.5, -0.5, 0.5, float(x)) == pytest.approx(
            math.sqrt(1.0 - x), abs=1e-10
        )


def test_2f1_matches_scipy_on_grid():
    rng = np.random.default_rng(7)
    for _ in range(200):
        a = rng.uniform(-2.5, 2.5)
        b = rng.uniform(-2.5, 2.5)
        c = rng.uniform(0.3, 4.0)
        x = rng.uniform(-6.0, 0.9)
        ref = float(sps.hyp2f1(a, b, c, x))
        assert gauss_2f1(a, b, c, x) == pytest.approx(ref, rel=1e-9, abs=1e-12)


@given(
    a=st.floats(-2.0, 2.0),
    b=st.floats(-2.0, 2.0),
    c=st.floats(0.5, 3.5),
    x=st.floats(-4.0, 0.85),
)
@settings(max_examples=120, deadline=None)
def test_2f1_scipy_property(a, b, c, x):
    ref = float(sps.hyp2f1(a, b, c, x))
    assume(np.isfinite(ref))  # scipy itself fails on some degenerate corners
    assert gauss_2f1(a, b, c, x) == pytest.approx(ref, rel=1e-8, abs=1e-10)


def test_2f1_terminating_polynomial():
    # b = -2 gives 1 - 2*a*x/c + a*(a+1)*x^2/(c*(c+1))
    a, c, x = 0.7, 1.3, -3.0
    expect = 1.0 - 2 * a * x / c + a * (a + 1) * x * x / (c * (c + 1))
    assert gauss_2f1(a, -2.0, c, x) == pytest.approx(expect, rel=1e-14)


def test_2f1_domain_and_convergence_errors():
    with pytest.raises(ArgumentRangeError):
        gauss_2f1(0.5, 0.5, 1.5, 1.0)
    with pytest.raises(ConvergenceError):
        gauss_2f1(0.5, 0.5, 1.0, 0.999999, SeriesControl(max_terms=500))


def test_2f1_x_zero_is_one():
    assert gauss_2f1(1.2, -0.3, 0.9, 0.0) == 1.0


# ===== 3F2 and J_l =====

def test_3f2_cancellation_reduces_to_2f1():
    # upper 1.5 cancels lower 1.5, leaving 2F1(0.5, -0.5; 0.5; x) = sqrt(1-x)
    for x in (-9.0, -2.0, -0.3, 0.4):
        assert hyper_3f2(0.5, -0.5, 1.5, 1.5, 0.5, x) == pytest.approx(
            math.sqrt(1.0 - x), rel=1e-12
        )


def test_3f2_direct_series_small_argument():
    # sum the series by hand for a short prefix as an independent check
    a1, a2, a3, b1, b2, x = 0.5, -0.5, 2.0, 1.0, 0.5, 0.2
    term, expect = 1.0, 1.0
    for n in range(60):
        term *= (a1 + n) * (a2 + n) * (a3 + n) / ((b1 + n) * (b2 + n) * (1 + n)) * x
        expect += term
    assert hyper_3f2(a1, a2, a3, b1, b2, x) == pytest.approx(expect, rel=1e-12)


def test_3f2_out_of_range_signals():
    with pytest.raises(ArgumentRangeError):
        hyper_3f2(0.5, 0.4, 2.0, 1.0, 1.5, -0.96)
    with pytest.raises(ArgumentRangeError):
        hyper_3f2(0.5, 0.4, 2.0, 1.0, 1.5, 0.95)


def test_cal_j_unit_fading_closed_form():
    # m = 1, nu = 1/2 (path loss exponent 4): J_0(x) = sqrt(1 - x)
    for x in (-300.0, -3.16, -0.5, 0.3):
        assert cal_j(0, 1.0, 0.5, x) == pytest.approx(math.sqrt(1 - x), rel=1e-10)
    # J_0(x) > 1 for x < 0 and J_0(0) = 1
    assert cal_j(0, 2.0, 0.5, -0.5) > 1.0
    assert cal_j(0, 3.0, 0.4, 0.0) == 1.0


def test_cal_j_order_one_m1_matches_series():
    # after cancellation J_1 = 2F1(1.5, 0.5; 1.5; x) = (1-x)^(-1/2) at nu = 1/2
    for x in (-5.0, -0.7):
        assert cal_j(1, 1.0, 0.5, x) == pytest.approx((1 - x) ** -0.5, rel=1e-10)


def test_cal_j_half_nu_cancels_for_any_fading_shape():
    # at nu = 1/2 the upper l+1/2 always cancels the lower l+1-nu, so the
    # m >= 2 path stays closed-form; check against 2F1(-1/2, m; 1; x)
    for m in (2.0, 3.0):
        for x in (-40.0, -3.0, 0.2):
            ref = float(sps.hyp2f1(-0.5, m, 1.0, x))
            assert cal_j(0, m, 0.5, x) == pytest.approx(ref, rel=1e-9)


def test_cal_j_rejects_far_argument_without_cancellation():
    # nu != 1/2 and m >= 2 leaves a true 3F2, limited to |x| < 0.95
    with pytest.raises(ArgumentRangeError):
        cal_j(0, 2.0, 0.4, -3.0)


# ===== Toeplitz expm norm =====

def test_expm_norm_scalar_case():
    assert toeplitz_lower_expm_norm1([-0.7]) == pytest.approx(0.4965853, abs=1e-7)


def test_expm_norm_order_two():
    # C = [[-1, 0], [0.5, -1]], exp(C) = e^-1 [[1, 0], [0.5, 1]], norm1 = 1.5/e
    assert toeplitz_lower_expm_norm1([-1.0, 0.5]) == pytest.approx(0.5518192, abs=1e-7)


def test_expm_norm_against_dense_oracle():
    rng = np.random.default_rng(3)
    from scipy.linalg import expm

    for m in (3, 5, 11):
        col = rng.normal(size=m) * 0.4
        mat = np.zeros((m, m))
        for k in range(m):
            i = np.arange(m - k)
            mat[i + k, i] = col[k]
        ref = np.linalg.norm(expm(mat), 1)
        assert toeplitz_lower_expm_norm1(col) == pytest.approx(ref, rel=1e-12)


def test_expm_norm_guards():
    with pytest.raises(ArgumentRangeError):
        toeplitz_lower_expm_norm1(np.zeros(65))
    with pytest.raises(ArgumentRangeError):
        toeplitz_lower_expm_norm1([])


# ===== inverse DFT =====

def _pgf_samples(pmf, n):
    z = np.exp(2j * np.pi * np.arange(n) / n)
    powers = np.arange(len(pmf))
    return np.array([np.sum(pmf * zk ** powers) for zk in z])


def test_idft_recovers_delta():
    n = 16
    z = np.exp(2j * np.pi * np.arange(n) / n)
    out = inverse_dft_real(np.ones(n))
    assert out[0] == pytest.approx(1.0, abs=1e-14)
    assert np.max(np.abs(out[1:])) < 1e-14
    out3 = inverse_dft_real(z ** 3)
    assert out3[3] == pytest.approx(1.0, abs=1e-13)


def test_idft_recovers_poisson_pmf():
    n = 64
    lam = 2.0
    z = np.exp(2j * np.pi * np.arange(n) / n)
    samples = np.exp(lam * (z - 1.0))
    pmf = inverse_dft_real(samples)
    ks = np.arange(20)
    expect = np.exp(-lam) * lam ** ks / sps.factorial(ks)
    assert np.allclose(pmf[:20], expect, atol=1e-12)
    assert abs(pmf.sum() - 1.0) < 1e-12


@given(st.integers(0, 6), st.integers(1, 40))
@settings(max_examples=60, deadline=None)
def test_idft_roundtrip_property(seed, support):
    rng = np.random.default_rng(seed)
    pmf = rng.uniform(0, 1, size=support)
    pmf /= pmf.sum()
    n = 128
    out = inverse_dft_real(_pgf_samples(pmf, n))
    assert np.allclose(out[:support], pmf, atol=1e-10)


def test_idft_flags_inconsistent_samples():
    n = 32
    bad = np.exp(2j * np.pi * np.arange(n) / n) ** 0.37  # not a pmf transform
    with pytest.raises(ValueError):
        inverse_dft_real(bad)


# ===== gamma tail and Nakagami =====

def test_reg_upper_gamma_exponential_case():
    for x in (0.0, 0.5, 3.0):
        assert reg_upper_gamma_q(1.0, x) == pytest.approx(math.exp(-x), rel=1e-12)


def test_nakagami_matches_scipy():
    m, omega = 3.575, 2546.0
    r = np.linspace(0.1, 200.0, 57)
    dist = sstats.nakagami(m, scale=math.sqrt(omega))
    assert np.allclose(nakagami_pdf(r, m, omega), dist.pdf(r), rtol=1e-10)
    assert np.allclose(nakagami_ccdf(r, m, omega), dist.sf(r), rtol=1e-10)


def test_nakagami_pdf_normalizes():
    m, omega = 3.575, 2546.0
    r = np.linspace(0.0, 400.0, 20001)
    total = np.trapezoid(nakagami_pdf(r, m, omega), r)
    assert total == pytest.approx(1.0, abs=1e-8)
    assert nakagami_ccdf(0.0, m, omega) == pytest.approx(1.0)
