import numpy as np
import pytest

from onebit_isac.array_geometry import pt_response_operator
from onebit_isac.linalg import complex_normal, psd_sqrt
from onebit_isac.quantization import (
    TWO_OVER_PI,
    bussgang_gain,
    bussgang_pair,
    covariance_czz_approx,
    covariance_czz_exact,
    crr_et,
    crr_pt,
    quantize_one_bit,
)


def random_cov(rng, n, noise=0.3):
    a = complex_normal(rng, (n, n))
    return a @ a.conj().T + noise * np.eye(n)


def test_quantizer_examples():
    assert quantize_one_bit(np.array([1 + 2j])) == pytest.approx((1 + 1j) / np.sqrt(2))
    assert quantize_one_bit(np.array([-0.5 - 0.1j])) == pytest.approx((-1 - 1j) / np.sqrt(2))


def test_quantizer_outputs_on_unit_circle():
    rng = np.random.default_rng(0)
    z = quantize_one_bit(complex_normal(rng, 10000))
    assert np.allclose(np.abs(z), 1.0, atol=1e-15)


def test_quantizer_sign_zero_convention():
    z = quantize_one_bit(np.array([0.0 + 0.0j, -0.0 - 0.0j, 0.0 - 3.0j]))
    assert z[0] == pytest.approx((1 + 1j) / np.sqrt(2))
    assert z[1] == pytest.approx((1 + 1j) / np.sqrt(2))
    assert z[2] == pytest.approx((1 - 1j) / np.sqrt(2))


def test_bussgang_gain_identity_covariance():
    f = bussgang_gain(np.eye(3))
    assert np.allclose(f, np.sqrt(TWO_OVER_PI))
    f4 = bussgang_gain(4.0 * np.eye(3))
    assert np.allclose(f4, np.sqrt(TWO_OVER_PI) / 2.0)


def test_bussgang_gain_scaling_identity():
    rng = np.random.default_rng(1)
    c = random_cov(rng, 5)
    f = bussgang_gain(c)
    assert np.allclose(f * np.sqrt(np.diag(c).real), np.sqrt(TWO_OVER_PI), atol=1e-12)


def test_bussgang_gain_rejects_nonpositive_diag():
    with pytest.raises(ValueError):
        bussgang_gain(np.diag([1.0, 0.0]))


def test_czz_exact_identity():
    assert np.allclose(covariance_czz_exact(np.eye(4)), np.eye(4))


def test_czz_exact_unit_diagonal():
    rng = np.random.default_rng(2)
    c = random_cov(rng, 6)
    czz = covariance_czz_exact(c)
    assert np.array_equal(np.diag(czz), np.ones(6).astype(complex))
    assert np.linalg.norm(czz - czz.conj().T) < 1e-12


def test_czz_exact_rejects_invalid_correlation():
    bad = np.array([[1.0, 1.5], [1.5, 1.0]])
    with pytest.raises(ValueError):
        covariance_czz_exact(bad)


def test_czz_exact_monte_carlo():
    # quantize correlated Gaussian draws and compare empirical covariance
    rng = np.random.default_rng(3)
    c = random_cov(rng, 4, noise=0.5)
    root = psd_sqrt(c)
    n = 100000
    r = complex_normal(rng, (n, 4)) @ root.T  # rows r_i = root @ w_i
    z = quantize_one_bit(r)
    c_emp = z.T @ z.conj() / n
    c_true = covariance_czz_exact(c)
    se = np.sqrt((1.0 - np.abs(c_true) ** 2) / n)
    assert np.all(np.abs(c_emp - c_true) <= 3.0 * se + 5.0 / n)


def test_czz_approx_identity_and_diag():
    assert np.allclose(covariance_czz_approx(np.eye(4)), np.eye(4))
    rng = np.random.default_rng(4)
    c = random_cov(rng, 5)
    czz = covariance_czz_approx(c)
    assert np.allclose(np.diag(czz).real, 1.0, atol=1e-12)


def test_czz_approx_offdiagonal_form():
    # off-diagonal entries are (2/pi) times the normalized correlation
    rho = 0.1
    c = np.array([[1.0, rho], [rho, 1.0]])
    approx = covariance_czz_approx(c)
    exact = covariance_czz_exact(c)
    assert approx[0, 1] == pytest.approx(TWO_OVER_PI * rho, rel=1e-12)
    assert abs(approx[0, 1] - exact[0, 1]) < 2e-4


def test_czz_approx_cubic_error_decay():
    def gap(rho):
        c = np.array([[1.0, rho], [rho, 1.0]])
        return abs(
            covariance_czz_exact(c)[0, 1] - covariance_czz_approx(c)[0, 1]
        )

    assert gap(0.2) / gap(0.1) >= 8.0


def test_crr_pt_zero_waveform():
    cov = crr_pt(np.zeros(6, dtype=complex), 0.3, 1.0, 0.2, block_len=2, n_r=3)
    assert np.allclose(cov.matrix, 0.2 * np.eye(6))


def test_crr_pt_trace_identity():
    rng = np.random.default_rng(5)
    x = complex_normal(rng, 6)
    theta, sa, sv = 0.4, 1.5, 0.3
    cov = crr_pt(x, theta, sa, sv, block_len=2, n_r=3)
    g = pt_response_operator(theta, 2, 3, 3).apply(x)
    expected = sa * np.linalg.norm(g) ** 2 + sv * 6
    assert np.trace(cov.matrix).real == pytest.approx(expected, rel=1e-12)
    assert np.allclose(cov.diagonal(), np.diag(cov.matrix).real, atol=1e-14)


def test_crr_pt_dense_oracle():
    rng = np.random.default_rng(6)
    x = complex_normal(rng, 6)
    theta, sa, sv = -0.2, 0.8, 0.1
    cov = crr_pt(x, theta, sa, sv, block_len=2, n_r=3)
    a_dense = pt_response_operator(theta, 2, 3, 3).dense()
    g = a_dense @ x
    oracle = sa * np.outer(g, g.conj()) + sv * np.eye(6)
    assert np.linalg.norm(cov.matrix - oracle) < 1e-12


def test_crr_pt_rejects_bad_noise():
    with pytest.raises(ValueError):
        crr_pt(np.zeros(6, dtype=complex), 0.3, 1.0, 0.0, block_len=2, n_r=3)


def test_crr_et_zero_waveform():
    cov = crr_et(np.zeros((2, 3), dtype=complex), np.eye(4), 0.7)
    assert np.allclose(cov.matrix, 0.7 * np.eye(6))


def test_crr_et_identity_prior_trace():
    rng = np.random.default_rng(7)
    x = complex_normal(rng, (2, 3))
    n_r, sv = 2, 0.2
    cov = crr_et(x, np.eye(4), sv)
    expected = n_r * np.linalg.norm(x) ** 2 + sv * n_r * 3
    assert np.trace(cov.matrix).real == pytest.approx(expected, rel=1e-12)


def test_crr_et_monte_carlo():
    from onebit_isac.array_geometry import (
        et_prior_covariance,
        et_sample,
        exponential_correlation,
    )
    from onebit_isac.linalg import XtildeOperator, vec

    rng = np.random.default_rng(8)
    phi_r = exponential_correlation(2, 0.5)
    phi_t = exponential_correlation(2, 0.5)
    c_aa = et_prior_covariance(phi_r, phi_t)
    x = complex_normal(rng, (2, 2))
    sv = 0.3
    cov = crr_et(x, c_aa, sv)
    op = XtildeOperator(x, 2)
    n = 100000
    r = np.zeros((n, 4), dtype=complex)
    for i in range(n):
        a = vec(et_sample(phi_r, phi_t, rng))
        r[i] = op.apply(a) + complex_normal(rng, 4, scale=np.sqrt(sv))
    c_emp = r.T @ r.conj() / n
    d = np.diag(cov.matrix).real
    se = np.sqrt(np.outer(d, d) / n)
    assert np.all(np.abs(c_emp - cov.matrix) <= 3.0 * se + 5.0 / n)


def test_bussgang_pair_consistency():
    rng = np.random.default_rng(9)
    c = random_cov(rng, 4)
    pair = bussgang_pair(c)
    assert np.allclose(pair.c_zz_hat, covariance_czz_approx(c))
    assert np.allclose(pair.f, bussgang_gain(c))
