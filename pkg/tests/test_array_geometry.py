import numpy as np
import pytest

from onebit_isac.array_geometry import (
    EtTarget,
    PtTarget,
    UlaSteering,
    et_prior_covariance,
    et_sample,
    exponential_correlation,
    pt_response_derivative_operator,
    pt_response_operator,
    steering,
    steering_derivative,
)
from onebit_isac.linalg import complex_normal, vec


def test_steering_broadside_is_uniform():
    assert np.allclose(steering(4, 0.0), 0.5 * np.ones(4))


def test_steering_single_element():
    assert np.allclose(steering(1, 0.7), np.array([1.0]))


def test_steering_phase_at_30_degrees():
    # entry 1 phase is -pi*sin(30deg) = -pi/2, computed analytically
    v = steering(16, np.deg2rad(30.0))
    assert np.angle(v[1]) == pytest.approx(-np.pi / 2, abs=1e-12)


def test_steering_unit_norm_randomized():
    rng = np.random.default_rng(0)
    for _ in range(100):
        n = int(rng.integers(1, 40))
        theta = rng.uniform(-np.pi / 2, np.pi / 2)
        assert abs(np.linalg.norm(steering(n, theta)) - 1.0) < 1e-12


def test_steering_rejects_empty_and_out_of_range():
    with pytest.raises(ValueError):
        steering(0, 0.0)
    with pytest.raises(ValueError):
        steering(4, 2.0)
    with pytest.raises(ValueError):
        steering_derivative(0, 0.0)


def test_steering_derivative_endfire_vanishes():
    assert np.allclose(steering_derivative(6, np.pi / 2), 0.0)
    assert np.allclose(steering_derivative(6, -np.pi / 2), 0.0)


def test_steering_derivative_entry_zero():
    assert steering_derivative(8, 0.3)[0] == 0.0


def _central_diff(fn, theta, h=1e-6):
    return (fn(theta + h) - fn(theta - h)) / (2.0 * h)


def test_steering_derivative_finite_difference():
    rng = np.random.default_rng(1)
    for _ in range(100):
        n = int(rng.integers(2, 24))
        theta = rng.uniform(-1.4, 1.4)
        fd = _central_diff(lambda t: steering(n, t), theta)
        an = steering_derivative(n, theta)
        assert np.linalg.norm(an - fd) / np.linalg.norm(fd) < 1e-6


def test_ula_steering_dataclass():
    s = UlaSteering(5, 0.2)
    assert np.allclose(s.vector(), steering(5, 0.2))
    assert np.allclose(s.derivative(), steering_derivative(5, 0.2))


def test_pt_operator_matched_filter_case():
    # L=1, x = conj(a_t): a_t^T conj(a_t) = 1, output is a_r
    theta = 0.4
    op = pt_response_operator(theta, 1, 4, 3)
    out = op.apply(steering(4, theta).conj())
    assert np.allclose(out, steering(3, theta), atol=1e-12)


def test_pt_operator_zero_maps_to_zero():
    op = pt_response_operator(0.3, 2, 3, 3)
    assert np.allclose(op.apply(np.zeros(6)), 0.0)


def test_pt_operator_dense_equivalence():
    rng = np.random.default_rng(2)
    op = pt_response_operator(0.5, 2, 3, 3)
    dense = op.dense()
    for _ in range(10):
        x = complex_normal(rng, 6)
        assert np.linalg.norm(op.apply(x) - dense @ x) < 1e-12
        y = complex_normal(rng, 6)
        assert np.linalg.norm(op.adjoint(y) - dense.conj().T @ y) < 1e-12


def test_pt_operator_rejects_dimension_mismatch():
    op = pt_response_operator(0.5, 2, 3, 3)
    with pytest.raises(ValueError):
        op.apply(np.zeros(5))
    with pytest.raises(ValueError):
        op.adjoint(np.zeros(5))


def test_pt_operator_dense_guard():
    op = pt_response_operator(0.1, 64, 16, 16)
    with pytest.raises(ValueError):
        op.dense(max_entries=4096)


def test_pt_derivative_operator_endfire_is_zero():
    op = pt_response_derivative_operator(np.pi / 2, 2, 3, 3)
    rng = np.random.default_rng(3)
    x = complex_normal(rng, 6)
    assert np.linalg.norm(op.apply(x)) < 1e-12


def test_pt_derivative_operator_finite_difference():
    rng = np.random.default_rng(4)
    x = complex_normal(rng, 6)
    theta = 0.3
    fd = _central_diff(lambda t: pt_response_operator(t, 2, 3, 3).apply(x), theta)
    an = pt_response_derivative_operator(theta, 2, 3, 3).apply(x)
    assert np.linalg.norm(an - fd) / np.linalg.norm(fd) < 1e-6


def test_pt_derivative_dense_equivalence():
    rng = np.random.default_rng(5)
    op = pt_response_derivative_operator(0.7, 2, 3, 3)
    dense = op.dense()
    x = complex_normal(rng, 6)
    assert np.linalg.norm(op.apply(x) - dense @ x) < 1e-12


def test_operator_dense_agreement_up_to_64():
    rng = np.random.default_rng(6)
    for n_t, n_r, block in [(4, 4, 4), (8, 8, 8), (2, 16, 4)]:
        for build in (pt_response_operator, pt_response_derivative_operator):
            op = build(0.25, block, n_t, n_r)
            dense = op.dense()
            x = complex_normal(rng, n_t * block)
            assert np.linalg.norm(op.apply(x) - dense @ x) < 1e-12


def test_exponential_correlation_entries():
    phi = exponential_correlation(4, 0.5)
    assert phi[0, 1] == pytest.approx(0.5)
    assert phi[0, 3] == pytest.approx(0.125)
    assert np.allclose(np.diag(phi), 1.0)


def test_et_prior_covariance_identity():
    assert np.allclose(et_prior_covariance(np.eye(3), np.eye(2)), np.eye(6))


def test_et_prior_covariance_hermitian_psd():
    c = et_prior_covariance(
        exponential_correlation(3, 0.5), exponential_correlation(4, 0.5)
    )
    assert np.linalg.norm(c - c.conj().T) < 1e-12
    assert np.linalg.eigvalsh(c).min() > -1e-10


def test_et_prior_covariance_rejects_non_psd():
    with pytest.raises(ValueError):
        et_prior_covariance(np.diag([1.0, -1.0]), np.eye(2))


def test_et_sample_identity_correlation_unit_variance():
    rng = np.random.default_rng(7)
    draws = np.array([et_sample(np.eye(2), np.eye(2), rng) for _ in range(10000)])
    var = np.mean(np.abs(draws) ** 2, axis=0)
    assert np.all(np.abs(var - 1.0) < 0.05)


def test_et_sample_covariance_matches_prior():
    rng = np.random.default_rng(8)
    phi_r = exponential_correlation(2, 0.5)
    phi_t = exponential_correlation(2, 0.5)
    c_true = et_prior_covariance(phi_r, phi_t)
    n = 100000
    samples = np.stack([vec(et_sample(phi_r, phi_t, rng)) for _ in range(n)])
    c_emp = samples.conj().T @ samples / n
    c_emp = c_emp.T  # E[a a^H]
    se = np.sqrt(np.outer(np.diag(c_true).real, np.diag(c_true).real) / n)
    assert np.all(np.abs(c_emp - c_true) <= 3.0 * se + 1e-12)


def test_et_sample_deterministic_given_seed():
    a = et_sample(np.eye(2), np.eye(2), np.random.default_rng(42))
    b = et_sample(np.eye(2), np.eye(2), np.random.default_rng(42))
    assert np.array_equal(a, b)


def test_targets_validation():
    with pytest.raises(ValueError):
        PtTarget(0.1, sigma_alpha_sq=0.0)
    t = EtTarget.from_kronecker(np.eye(2), np.eye(3))
    assert np.allclose(t.c_aa, np.eye(6))
