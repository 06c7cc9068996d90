"""Shared complex linear algebra: column-stacked vectorization, guarded
Hermitian solves, PSD square roots, power iteration, and the structured
operators (X^T kron I, I kron H) used throughout the library."""

import numpy as np
import scipy.linalg as sla


def vec(a):
    """Column-stacking vectorization, vec(A) = [A[:,0]; A[:,1]; ...]."""
    return np.asarray(a).reshape(-1, order="F")


def unvec(v, rows, cols):
    """Inverse of :func:`vec`."""
    v = np.asarray(v)
    if v.size != rows * cols:
        raise ValueError(f"cannot unvec length {v.size} into {rows}x{cols}")
    return v.reshape((rows, cols), order="F")


def hermitian_factor(a, jitter_scale=1e-12):
    """Cholesky factor of a Hermitian PSD matrix with jitter fallback.

    Returns (factor, lower_flag) in the scipy ``cho_factor`` convention.
    When the plain factorization fails, the diagonal is lifted by
    jitter_scale * trace(a)/n, escalating twice by 10x before giving up.
    """
    a = np.asarray(a)
    n = a.shape[0]
    base = jitter_scale * max(np.trace(a).real / max(n, 1), np.finfo(float).tiny)
    for k in range(4):
        jitter = 0.0 if k == 0 else base * 10.0 ** (k - 1)
        try:
            return sla.cho_factor(a + jitter * np.eye(n), lower=True)
        except np.linalg.LinAlgError:
            continue
    raise np.linalg.LinAlgError("matrix not positive definite even after jitter")


def hermitian_solve(a, b, jitter_scale=1e-12):
    """Solve a @ x = b for Hermitian positive definite a (jittered Cholesky)."""
    return sla.cho_solve(hermitian_factor(a, jitter_scale), np.asarray(b))


def chol_logdet(factor):
    """log det from a ``cho_factor`` result."""
    c, _ = factor
    return 2.0 * np.sum(np.log(np.abs(np.diag(c))))


def psd_sqrt(a, tol=1e-10):
    """Hermitian PSD square root via eigendecomposition.

    Eigenvalues in [-tol * scale, 0) are clamped to zero; anything more
    negative raises, since the input is then not a correlation/covariance.
    """
    a = np.asarray(a)
    w, v = np.linalg.eigh((a + a.conj().T) / 2.0)
    scale = max(abs(w[-1]), 1.0)
    if w[0] < -tol * scale:
        raise ValueError(f"matrix is not PSD (min eigenvalue {w[0]:.3e})")
    w = np.clip(w, 0.0, None)
    return (v * np.sqrt(w)) @ v.conj().T


def power_iteration(matvec, n, tol=1e-8, max_iter=10000, seed=0, v0=None):
    """Largest eigenvalue of a Hermitian PSD operator given by ``matvec``.

    Returns (lam, v, converged); v is the last iterate, reusable as a warm
    start. Deterministic for a fixed seed / v0.
    """
    if v0 is not None and np.linalg.norm(v0) > 0:
        v = np.asarray(v0, dtype=complex)
    else:
        rng = np.random.default_rng(seed)
        v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    v = v / np.linalg.norm(v)
    lam = 0.0
    for _ in range(max_iter):
        w = matvec(v)
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return 0.0, v, True
        lam_new = float(np.vdot(v, w).real)
        v = w / nw
        if abs(lam_new - lam) <= tol * max(abs(lam_new), np.finfo(float).tiny):
            return lam_new, v, True
        lam = lam_new
    return lam, v, False


def complex_normal(rng, shape, scale=1.0):
    """Circularly symmetric complex Gaussian, per-entry variance scale**2."""
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) * (
        scale / np.sqrt(2.0)
    )


class XtildeOperator:
    """Action of X^T kron I_{n_r} without forming the Kronecker product.

    Maps a vectorized n_r x n_t response matrix A to vec(A @ X), the stacked
    length-(n_r * L) echo block.
    """

    def __init__(self, x_matrix, n_r):
        self.x = np.asarray(x_matrix)
        self.n_t, self.block_len = self.x.shape
        self.n_r = int(n_r)

    @property
    def shape(self):
        return (self.n_r * self.block_len, self.n_r * self.n_t)

    def apply(self, a):
        return vec(unvec(a, self.n_r, self.n_t) @ self.x)

    def adjoint(self, y):
        return vec(unvec(y, self.n_r, self.block_len) @ self.x.conj().T)

    def right_multiply(self, c):
        """X~ @ C for a matrix C with n_r * n_t rows."""
        c = np.asarray(c)
        if c.shape[0] != self.n_r * self.n_t:
            raise ValueError("row count mismatch in right_multiply")
        c4 = c.reshape((self.n_r, self.n_t, c.shape[1]), order="F")
        out = np.einsum("bl,rbj->rlj", self.x, c4)
        return out.reshape((self.n_r * self.block_len, c.shape[1]), order="F")

    def gram(self, c_aa):
        """X~ @ C_aa @ X~^H."""
        n_r, n_t, L = self.n_r, self.n_t, self.block_len
        t4 = np.asarray(c_aa).reshape((n_r, n_t, n_r, n_t), order="F")
        out = np.einsum("bl,rbsd,dk->rlsk", self.x, t4, self.x.conj())
        return out.reshape((n_r * L, n_r * L), order="F")

    def dense(self, max_entries=65536):
        total = self.shape[0] * self.shape[1]
        if total > max_entries:
            raise ValueError(f"refusing to materialize {total} entries")
        return np.kron(self.x.T, np.eye(self.n_r))


def h_tilde_apply(h, x, block_len):
    """(I_L kron H) @ x, i.e. vec(H @ unvec(x))."""
    h = np.asarray(h)
    return vec(h @ unvec(x, h.shape[1], block_len))


def h_tilde_adjoint(h, y, block_len):
    """(I_L kron H)^H @ y."""
    h = np.asarray(h)
    return vec(h.conj().T @ unvec(y, h.shape[0], block_len))


def project_power_ball(x, power):
    """Scale x onto the ball ||x||^2 <= power when it lies outside."""
    n2 = float(np.vdot(x, x).real)
    if n2 <= power:
        return x
    return x * np.sqrt(power / n2)
