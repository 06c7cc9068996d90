"""Estimation-accuracy metrics: the one-bit DOA bound for point-like targets
with its full derivative chain, the Bayesian trace bound for extended
targets in both algebraic forms, their infinite-resolution / quantization-
unaware counterparts, and the workspace types the optimizers reuse."""

import math
from dataclasses import dataclass, field

import numpy as np

from .linalg import XtildeOperator, hermitian_solve
from .array_geometry import pt_response_operator, pt_response_derivative_operator
from .quantization import TWO_OVER_PI

INFINITE_CRB_FLOOR = 1e-18
SQRT_TWO_OVER_PI = math.sqrt(TWO_OVER_PI)


@dataclass
class PtCrbWorkspace:
    """Covariance chain of the point-target bound at one waveform.

    Diagonal matrices (f, d_f_dtheta and the diagonal of c_rr) are stored as
    vectors; everything dense is Hermitian.
    """

    g: np.ndarray
    g_prime: np.ndarray
    c_rr: np.ndarray
    d_crr_dtheta: np.ndarray
    diag_crr: np.ndarray
    f: np.ndarray
    d_f_dtheta: np.ndarray
    c_zz_hat: np.ndarray
    d_czz_dtheta: np.ndarray


@dataclass
class PtModel:
    """Point-target problem data with cached response operators."""

    theta: float
    sigma_alpha_sq: float
    sigma_v_sq: float
    n_t: int
    n_r: int
    block_len: int
    response: object = field(default=None, repr=False)
    response_derivative: object = field(default=None, repr=False)

    def __post_init__(self):
        if self.sigma_v_sq <= 0.0:
            raise ValueError("noise power must be positive")
        if self.response is None:
            self.response = pt_response_operator(
                self.theta, self.block_len, self.n_t, self.n_r
            )
        if self.response_derivative is None:
            self.response_derivative = pt_response_derivative_operator(
                self.theta, self.block_len, self.n_t, self.n_r
            )

    @property
    def dim(self):
        return self.n_r * self.block_len

    def workspace(self, x):
        """Build the full covariance/derivative chain at waveform x."""
        x = np.asarray(x, dtype=complex)
        n = self.dim
        g = self.response.apply(x)
        gp = self.response_derivative.apply(x)
        sa = self.sigma_alpha_sq
        c_rr = sa * np.outer(g, g.conj()) + self.sigma_v_sq * np.eye(n)
        d_crr = sa * (np.outer(gp, g.conj()) + np.outer(g, gp.conj()))
        diag_crr = np.abs(g) ** 2 * sa + self.sigma_v_sq
        f = SQRT_TWO_OVER_PI / np.sqrt(diag_crr)
        diag_dcrr = 2.0 * sa * (gp * g.conj()).real
        d_f = -0.5 * SQRT_TWO_OVER_PI * diag_dcrr / diag_crr**1.5
        c_zz_hat = np.outer(f, f) * c_rr + (1.0 - TWO_OVER_PI) * np.eye(n)
        np.fill_diagonal(c_zz_hat, 1.0)
        d_czz = (
            np.outer(d_f, f) * c_rr
            + np.outer(f, f) * d_crr
            + np.outer(f, d_f) * c_rr
        )
        # diag is analytically zero (unit quantizer diagonal); pin it exactly
        np.fill_diagonal(d_czz, 0.0)
        return PtCrbWorkspace(
            g=g,
            g_prime=gp,
            c_rr=c_rr,
            d_crr_dtheta=d_crr,
            diag_crr=diag_crr,
            f=f,
            d_f_dtheta=d_f,
            c_zz_hat=c_zz_hat,
            d_czz_dtheta=d_czz,
        )


def _trace_form(cov, dcov):
    """tr(C^{-1} dC C^{-1} dC) via one Hermitian solve."""
    s = hermitian_solve(cov, dcov)
    return float(np.einsum("ij,ji->", s, s).real)


def crb_pt(x, theta, sigma_alpha_sq, sigma_v_sq, n_r, block_len):
    """Worst-case one-bit DOA bound for a point-like target (rad^2).

    Returns math.inf when the direction is unidentifiable (trace below the
    configured floor), e.g. at theta = +/- pi/2.
    """
    x = np.asarray(x)
    model = PtModel(theta, sigma_alpha_sq, sigma_v_sq, x.size // block_len, n_r, block_len)
    ws = model.workspace(x)
    t = _trace_form(ws.c_zz_hat, ws.d_czz_dtheta)
    if t < INFINITE_CRB_FLOOR:
        return math.inf
    return 1.0 / t


def crb_pt_infinite_resolution(x, theta, sigma_alpha_sq, sigma_v_sq, n_r, block_len):
    """Same trace bound with the unquantized echo covariance."""
    x = np.asarray(x)
    model = PtModel(theta, sigma_alpha_sq, sigma_v_sq, x.size // block_len, n_r, block_len)
    ws = model.workspace(x)
    t = _trace_form(ws.c_rr, ws.d_crr_dtheta)
    if t < INFINITE_CRB_FLOOR:
        return math.inf
    return 1.0 / t


@dataclass
class EtCrbInputs:
    """Pieces of the extended-target bound: X~ operator, prior, effective noise."""

    x_tilde: XtildeOperator
    c_aa: np.ndarray
    c_vv_tilde: np.ndarray  # diagonal, stored as a vector
    f: np.ndarray


def et_crb_inputs(x_matrix, c_aa, sigma_v_sq):
    if sigma_v_sq <= 0.0:
        raise ValueError("noise power must be positive")
    x_matrix = np.asarray(x_matrix)
    c_aa = np.asarray(c_aa)
    n_t = x_matrix.shape[0]
    n_r = c_aa.shape[0] // n_t
    op = XtildeOperator(x_matrix, n_r)
    diag_crr = np.diag(op.gram(c_aa)).real + sigma_v_sq
    f = SQRT_TWO_OVER_PI / np.sqrt(diag_crr)
    c_vv = sigma_v_sq * f**2 + (1.0 - TWO_OVER_PI)
    return EtCrbInputs(x_tilde=op, c_aa=c_aa, c_vv_tilde=c_vv, f=f)


def _et_m_matrix(op, c_aa, sigma_v_sq):
    """X~ C X~^H + (pi/2 - 1) diag(X~ C X~^H) + (pi/2) sigma_v^2 I."""
    gram = op.gram(c_aa)
    m = gram + (np.pi / 2.0 - 1.0) * np.diag(np.diag(gram))
    m += (np.pi / 2.0) * sigma_v_sq * np.eye(gram.shape[0])
    return (m + m.conj().T) / 2.0


def crb_et(x_matrix, c_aa, sigma_v_sq):
    """One-bit Bayesian trace bound for the extended-target response.

    Uses the expanded form tr(C_aa) - tr(L^H M^{-1} L), which stays valid for
    merely PSD priors.
    """
    if sigma_v_sq <= 0.0:
        raise ValueError("noise power must be positive")
    x_matrix = np.asarray(x_matrix)
    c_aa = np.asarray(c_aa)
    n_t = x_matrix.shape[0]
    n_r = c_aa.shape[0] // n_t
    op = XtildeOperator(x_matrix, n_r)
    l_mat = op.right_multiply(c_aa)
    m = _et_m_matrix(op, c_aa, sigma_v_sq)
    sol = hermitian_solve(m, l_mat)
    gain = float(np.einsum("ij,ij->", l_mat.conj(), sol).real)
    return float(np.trace(c_aa).real - gain)


def crb_et_information_form(x_matrix, c_aa, sigma_v_sq):
    """Information-form bound tr((C_aa^{-1} + X~^H F Cvv^{-1} F X~)^{-1}).

    Requires an invertible prior.
    """
    inputs = et_crb_inputs(x_matrix, c_aa, sigma_v_sq)
    op = inputs.x_tilde
    w = inputs.f**2 / inputs.c_vv_tilde
    xd = op.dense(max_entries=1 << 22)
    info = xd.conj().T @ (w[:, None] * xd)
    info += np.linalg.inv(np.asarray(c_aa))
    return float(np.trace(hermitian_solve(info, np.eye(info.shape[0]))).real)


def crb_et_forms_equal(x_matrix, c_aa, sigma_v_sq, rtol=1e-9):
    """Compare the expanded and information forms of the extended-target bound."""
    a = crb_et(x_matrix, c_aa, sigma_v_sq)
    b = crb_et_information_form(x_matrix, c_aa, sigma_v_sq)
    gap = abs(a - b) / max(abs(a), abs(b), np.finfo(float).tiny)
    return gap <= rtol, gap


def mse_et_quantization_unaware(x_matrix, c_aa, sigma_v_sq):
    """Unquantized LMMSE MSE, tr(C_aa) - tr(C_aa X~^H (X~ C X~^H + s^2 I)^{-1} X~ C_aa)."""
    if sigma_v_sq <= 0.0:
        raise ValueError("noise power must be positive")
    x_matrix = np.asarray(x_matrix)
    c_aa = np.asarray(c_aa)
    n_t = x_matrix.shape[0]
    n_r = c_aa.shape[0] // n_t
    op = XtildeOperator(x_matrix, n_r)
    l_mat = op.right_multiply(c_aa)
    m = op.gram(c_aa) + sigma_v_sq * np.eye(n_r * x_matrix.shape[1])
    sol = hermitian_solve(m, l_mat)
    gain = float(np.einsum("ij,ij->", l_mat.conj(), sol).real)
    return float(np.trace(c_aa).real - gain)


@dataclass
class CrbReport:
    """A bound value together with where it came from."""

    value: float
    provenance: str  # "pt" | "pt_infinite" | "et" | "et_qu"
    workspace: object = None

    @property
    def is_infinite(self):
        return math.isinf(self.value)
