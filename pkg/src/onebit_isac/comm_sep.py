"""QAM constellation handling, symbol-error-probability threshold
construction, constraint evaluation, and empirical SER measurement."""

from dataclasses import dataclass

import numpy as np
import scipy.special as sps

from .linalg import complex_normal

NEG_INF = -np.inf


def q_function(x):
    """Gaussian tail probability Q(x)."""
    return 0.5 * sps.erfc(np.asarray(x, dtype=float) / np.sqrt(2.0))


def q_inverse(p):
    """Inverse Gaussian tail, Q^{-1}(p) for p in (0, 1)."""
    p = np.asarray(p, dtype=float)
    if np.any(p <= 0.0) or np.any(p >= 1.0):
        raise ValueError("q_inverse requires probabilities strictly inside (0, 1)")
    out = -sps.ndtri(p)
    return float(out) if out.ndim == 0 else out


def qam_levels(order):
    """Per-dimension amplitude levels of square M-QAM, odd integers."""
    root = int(round(np.sqrt(order)))
    if root * root != order or order < 4:
        raise ValueError("QAM order must be a perfect square >= 4")
    return np.arange(-(root - 1), root, 2).astype(float)


def random_qam_symbols(n_users, block_len, order, rng):
    levels = qam_levels(order)
    re = rng.choice(levels, size=(n_users, block_len))
    im = rng.choice(levels, size=(n_users, block_len))
    return re + 1j * im


@dataclass
class QamSymbols:
    """Square-QAM information block."""

    order: int
    matrix: np.ndarray

    def __post_init__(self):
        validate_qam(self.matrix, self.order)


def validate_qam(s, order):
    levels = qam_levels(order)
    s = np.asarray(s)
    for part in (s.real, s.imag):
        if not np.all(np.isin(part, levels)):
            raise ValueError("symbol entry outside the constellation")


@dataclass
class SepSpec:
    """Per-symbol threshold vectors and minimum decision value for the
    linear SEP constraints; -inf marks a vacuous (one-sided) threshold."""

    a_r: np.ndarray
    b_r: np.ndarray
    a_i: np.ndarray
    b_i: np.ndarray
    gamma: float
    epsilon: float
    sigma_w: float
    s_real: np.ndarray
    s_imag: np.ndarray

    @property
    def n_users(self):
        return self.a_r.shape[0]

    @property
    def block_len(self):
        return self.a_r.shape[1]


def _threshold_pair(part, order, epsilon, sigma_w):
    """(a, b) thresholds for one real dimension of every symbol."""
    root = int(round(np.sqrt(order)))
    extreme = float(root - 1)
    p_interior = (1.0 - np.sqrt(1.0 - epsilon)) / 2.0
    p_edge = 1.0 - np.sqrt(1.0 - epsilon)
    gamma = sigma_w / np.sqrt(2.0) * q_inverse(p_interior)
    edge = sigma_w / np.sqrt(2.0) * q_inverse(p_edge)
    a = np.full(part.shape, gamma)
    b = np.full(part.shape, gamma)
    a[part == extreme] = NEG_INF
    b[part == extreme] = edge
    a[part == -extreme] = edge
    b[part == -extreme] = NEG_INF
    return a, b, gamma


def build_sep_spec(s, epsilon, sigma_w, order):
    """Threshold vectors realizing the per-symbol SEP target epsilon."""
    if not 0.0 < epsilon < 1.0:
        raise ValueError("epsilon must lie in (0, 1)")
    s = np.asarray(s)
    validate_qam(s, order)
    a_r, b_r, gamma = _threshold_pair(s.real, order, epsilon, sigma_w)
    a_i, b_i, _ = _threshold_pair(s.imag, order, epsilon, sigma_w)
    return SepSpec(
        a_r=a_r,
        b_r=b_r,
        a_i=a_i,
        b_i=b_i,
        gamma=float(gamma),
        epsilon=float(epsilon),
        sigma_w=float(sigma_w),
        s_real=s.real.copy(),
        s_imag=s.imag.copy(),
    )


def _margins(u_part, d_part, s_part, a, b):
    """Slacks of  -d + b <= u - d*s <= d - a  per entry; -inf drops a side."""
    centered = u_part - d_part[:, None] * s_part
    upper = np.where(
        np.isfinite(a), (d_part[:, None] - a) - centered, np.inf
    )
    lower = np.where(
        np.isfinite(b), centered - (b - d_part[:, None]), np.inf
    )
    return min(upper.min(initial=np.inf), lower.min(initial=np.inf))


def sep_constraints_satisfied(u, d, spec, atol=1e-9):
    """Check the linear SEP constraints; returns (ok, worst margin).

    Violations are reported through a negative margin rather than rejected.
    """
    u = np.asarray(u)
    k = spec.n_users
    d = np.asarray(d, dtype=float)
    d_r, d_i = d[:k], d[k:]
    worst = min(
        _margins(u.real, d_r, spec.s_real, spec.a_r, spec.b_r),
        _margins(u.imag, d_i, spec.s_imag, spec.a_i, spec.b_i),
    )
    if k:
        worst = min(worst, float((d - spec.gamma).min()))
    return bool(worst >= -atol), float(worst)


def _slice_to_level(values, order):
    root = int(round(np.sqrt(order)))
    lev = 2.0 * np.round((values - 1.0) / 2.0) + 1.0
    return np.clip(lev, -(root - 1), root - 1)


def empirical_ser(x_matrix, h, s, d, sigma_w, n_noise_draws, seed, order=None):
    """Per-user symbol error rate of the hard-decision receiver.

    Simulates Y = H X + W, equalizes each dimension by its decision
    variable, slices to the nearest constellation level, and counts a symbol
    error whenever either real dimension decides wrongly. ``order`` defaults
    to the smallest square constellation containing the block.
    """
    if n_noise_draws < 1:
        raise ValueError("need at least one noise draw")
    h = np.asarray(h)
    s = np.asarray(s)
    x_matrix = np.asarray(x_matrix)
    k, block_len = s.shape
    if order is None:
        order = int((max(np.max(np.abs(s.real)), np.max(np.abs(s.imag))) + 1) ** 2)
    d = np.asarray(d, dtype=float)
    d_r = d[:k][:, None]
    d_i = d[k:][:, None]
    noiseless = h @ x_matrix
    rng = np.random.default_rng(seed)
    errors = np.zeros(k, dtype=np.int64)
    for _ in range(n_noise_draws):
        w = complex_normal(rng, (k, block_len), scale=sigma_w)
        y = noiseless + w
        dec_r = _slice_to_level(y.real / d_r, order)
        dec_i = _slice_to_level(y.imag / d_i, order)
        errors += np.sum((dec_r != s.real) | (dec_i != s.imag), axis=1)
    return errors / float(n_noise_draws * block_len)
