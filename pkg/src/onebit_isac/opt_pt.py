"""Waveform subproblem solver for point-like targets: concave-Taylor
surrogate of the trace objective, its analytic conjugate gradient (built
from rank-one response applies, never from materialized Kronecker
products), one-step normalized projected gradient descent with backtracking,
and the outer majorize-minimize loop."""

import math
from dataclasses import dataclass, field

import numpy as np

from .crb_metrics import PtModel, SQRT_TWO_OVER_PI, _trace_form
from .linalg import (
    h_tilde_adjoint,
    h_tilde_apply,
    hermitian_solve,
    project_power_ball,
)


@dataclass
class SearchConfig:
    """Backtracking schedule: start at 0.1 sqrt(P), halve until accepted."""

    mu0: float = None
    mu_min: float = 1e-12
    relative_slack: float = 1e-12


@dataclass
class SurrogateAnchor:
    """Taylor anchor of the trace surrogate at one iterate.

    p_big is unvec(Q_t^{-1} p_t) = C^{-1} dC C^{-1} evaluated at the anchor
    (quantized or infinite-resolution covariance chain as configured).
    """

    model: PtModel
    x_t: np.ndarray
    p_big: np.ndarray
    quantized: bool
    ws_t: object = field(repr=False, default=None)

    def q_inverse_apply(self, mat):
        """Apply Q_t^{-1} = C^{-T} kron C^{-1} to vec(mat) as two solves."""
        base = self.ws_t.c_zz_hat if self.quantized else self.ws_t.c_rr
        s1 = hermitian_solve(base, np.asarray(mat))
        return hermitian_solve(base, s1.conj().T).conj().T


def build_anchor(model, x_t, quantized=True):
    ws = model.workspace(x_t)
    base = ws.c_zz_hat if quantized else ws.c_rr
    dbase = ws.d_czz_dtheta if quantized else ws.d_crr_dtheta
    s1 = hermitian_solve(base, dbase)
    p_big = hermitian_solve(base, s1.conj().T).conj().T
    p_big = (p_big + p_big.conj().T) / 2.0
    return SurrogateAnchor(model=model, x_t=np.asarray(x_t, dtype=complex),
                           p_big=p_big, quantized=quantized, ws_t=ws)


def _penalty_residual(model, x, u_i, lambda_i, channel):
    if channel is None or channel.size == 0:
        return None
    return h_tilde_apply(channel, x, model.block_len) - u_i + lambda_i


def penalty_value(model, x, rho, u_i, lambda_i, channel):
    if rho == 0.0 or channel is None or channel.size == 0:
        return 0.0
    w = _penalty_residual(model, x, u_i, lambda_i, channel)
    return rho * float(np.vdot(w, w).real)


def objective_value(model, x, quantized=True, workspace=None):
    """True objective f(x) = -tr(C^{-1} dC C^{-1} dC) at waveform x."""
    ws = workspace or model.workspace(x)
    if quantized:
        return -_trace_form(ws.c_zz_hat, ws.d_czz_dtheta)
    return -_trace_form(ws.c_rr, ws.d_crr_dtheta)


def augmented_objective(model, x, rho, u_i=None, lambda_i=None, channel=None,
                        quantized=True):
    return objective_value(model, x, quantized) + penalty_value(
        model, x, rho, u_i, lambda_i, channel
    )


def surrogate_value(anchor, x, rho=0.0, u_i=None, lambda_i=None, channel=None):
    """Surrogate -2 Re tr(P dC(x)) + tr(P C(x) P C(x)) + penalty.

    Touches the true augmented objective at the anchor (the Taylor constant
    vanishes for this parameterization).
    """
    model = anchor.model
    ws = model.workspace(x)
    p = anchor.p_big
    if anchor.quantized:
        base, dbase = ws.c_zz_hat, ws.d_czz_dtheta
    else:
        base, dbase = ws.c_rr, ws.d_crr_dtheta
    lin = -2.0 * float(np.einsum("ij,ji->", p, dbase).real)
    pc = p @ base
    quad = float(np.einsum("ij,ji->", pc, pc).real)
    return lin + quad + penalty_value(model, x, rho, u_i, lambda_i, channel)


def _diag_of_triple(a, dvec, b):
    """diag(A diag(dvec) B) as a vector."""
    return np.einsum("nk,k,kn->n", a, dvec, b)


def _row(coef, v, mat_vec, op):
    """Row coef * v^H D Op returned entrywise (D Hermitian dense or diagonal)."""
    if mat_vec.ndim == 1:
        w = mat_vec * v
    else:
        w = mat_vec @ v
    return coef * np.conj(op.adjoint(w))


def gradient_rows(anchor, x, rho=0.0, u_i=None, lambda_i=None, channel=None):
    """Per-term rows of the surrogate derivative d m / d x^T.

    Keys m11..m16 cover the six linear-term paths (quantized chain), m3 the
    quadratic term, m4 the penalty. The infinite-resolution chain collapses
    to keys m1 and m3.
    """
    model = anchor.model
    ws = model.workspace(x)
    p = anchor.p_big
    sa = model.sigma_alpha_sq
    g, gp = ws.g, ws.g_prime
    op_a = model.response
    op_ad = model.response_derivative
    rows = {}
    if anchor.quantized:
        c, dc = ws.c_rr, ws.d_crr_dtheta
        f, df = ws.f, ws.d_f_dtheta
        j1 = 1.0 / ws.diag_crr
        j2 = 1.0 / np.sqrt(ws.diag_crr)
        diag_dc = np.diag(dc).real
        fpf = np.outer(f, f) * p
        fpdf = np.outer(f, df) * p + np.outer(df, f) * p
        rows["m11"] = _row(-sa, g, fpdf, op_a)
        rows["m12"] = _row(-sa, g, fpf, op_ad) + _row(-sa, gp, fpf, op_a)
        diag_k1 = (
            _diag_of_triple(c, df, p)
            + _diag_of_triple(p, f, dc)
            + _diag_of_triple(p, df, c)
            + _diag_of_triple(dc, f, p)
        ).real
        rows["m13"] = _row(0.5 * sa * SQRT_TWO_OVER_PI, g, j1 * j2 * diag_k1, op_a)
        diag_k2 = 2.0 * _diag_of_triple(c, f, p).real
        v46 = j1 * j1 * j2 * diag_dc * diag_k2
        rows["m14"] = _row(-0.5 * sa * SQRT_TWO_OVER_PI, g, v46, op_a)
        v15 = j1 * j2 * diag_k2
        rows["m15"] = _row(0.5 * sa * SQRT_TWO_OVER_PI, g, v15, op_ad) + _row(
            0.5 * sa * SQRT_TWO_OVER_PI, gp, v15, op_a
        )
        rows["m16"] = _row(-0.25 * sa * SQRT_TWO_OVER_PI, g, v46, op_a)
        w_mat = p @ ws.c_zz_hat @ p
        w_mat = (w_mat + w_mat.conj().T) / 2.0
        fwf = np.outer(f, f) * w_mat
        diag_cfw = 2.0 * _diag_of_triple(c, f, w_mat).real
        rows["m3"] = _row(2.0 * sa, g, fwf, op_a) + _row(
            -sa * SQRT_TWO_OVER_PI, g, j1 * j2 * diag_cfw, op_a
        )
        linear_keys = ("m11", "m12", "m13", "m14", "m15", "m16")
    else:
        rows["m1"] = _row(-sa, g, p, op_ad) + _row(-sa, gp, p, op_a)
        w_mat = p @ ws.c_rr @ p
        w_mat = (w_mat + w_mat.conj().T) / 2.0
        rows["m3"] = _row(2.0 * sa, g, w_mat, op_a)
        linear_keys = ("m1",)
    if rho != 0.0 and channel is not None and channel.size:
        w = _penalty_residual(model, x, u_i, lambda_i, channel)
        rows["m4"] = rho * np.conj(h_tilde_adjoint(channel, w, model.block_len))
    else:
        rows["m4"] = np.zeros(model.n_t * model.block_len, dtype=complex)
    total = rows["m4"].copy() + rows["m3"]
    for key in linear_keys:
        total = total + 2.0 * rows[key]
    rows["total"] = total
    return rows


def surrogate_gradient(anchor, x, rho=0.0, u_i=None, lambda_i=None, channel=None,
                       return_terms=False):
    """Conjugate (Wirtinger) gradient of the surrogate, the descent direction."""
    rows = gradient_rows(anchor, x, rho, u_i, lambda_i, channel)
    grad = np.conj(rows["total"])
    if return_terms:
        return grad, rows
    return grad


def pgd_step(anchor, x_t, rho=0.0, u_i=None, lambda_i=None, channel=None,
             power=1.0, search=None):
    """One normalized projected-gradient step with backtracking.

    Returns (x_next, mu, stalled). A zero gradient or an exhausted line
    search returns the anchor point unchanged (stalled flags the latter).
    """
    search = search or SearchConfig()
    grad = surrogate_gradient(anchor, x_t, rho, u_i, lambda_i, channel)
    gn = float(np.linalg.norm(grad))
    m0 = surrogate_value(anchor, x_t, rho, u_i, lambda_i, channel)
    if gn <= 1e-12 * (abs(m0) + 1.0):
        # normalized steps along a numerically-zero gradient only add noise
        return np.asarray(x_t, dtype=complex), 0.0, False
    ghat = grad / gn
    slack = search.relative_slack * (abs(m0) + 1.0)
    mu = search.mu0 if search.mu0 is not None else 0.1 * math.sqrt(power)
    while mu >= search.mu_min:
        x_new = project_power_ball(x_t - mu * ghat, power)
        m1 = surrogate_value(anchor, x_new, rho, u_i, lambda_i, channel)
        rhs = (2.0 * mu / gn) * float(np.vdot(grad, x_new - x_t).real)
        if m1 - m0 <= rhs + slack and m1 <= m0 + slack:
            return x_new, mu, False
        mu *= 0.5
    return np.asarray(x_t, dtype=complex), 0.0, True


def solve_x_pt(model, x_init, rho=0.0, u_i=None, lambda_i=None, channel=None,
               power=1.0, tol=1e-6, max_iter=20, quantized=True, search=None):
    """Majorize-minimize loop: re-anchor, take one PGD step, repeat.

    The true augmented objective is non-increasing across anchors; iteration
    stops on a relative change below tol, a stalled line search, or the
    iteration cap. Returns (x, info).
    """
    x = np.asarray(x_init, dtype=complex)
    if float(np.vdot(x, x).real) > power * (1.0 + 1e-9):
        raise ValueError("initial waveform violates the power constraint")
    f_prev = augmented_objective(model, x, rho, u_i, lambda_i, channel, quantized)
    history = [f_prev]
    stalled = False
    for _ in range(max_iter):
        anchor = build_anchor(model, x, quantized)
        x, _, stalled = pgd_step(
            anchor, x, rho, u_i, lambda_i, channel, power, search
        )
        f_new = augmented_objective(model, x, rho, u_i, lambda_i, channel, quantized)
        history.append(f_new)
        if stalled:
            break
        if abs(f_new - f_prev) <= tol * (abs(f_prev) + 1e-30):
            f_prev = f_new
            break
        f_prev = f_new
    return x, {
        "objective_history": history,
        "n_iter": len(history) - 1,
        "stalled": stalled,
    }
