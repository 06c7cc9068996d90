"""Exact solver for the SEP-feasible projection subproblem: per-user box
QPs with a shared decision variable, solved by boundary-point enumeration
with a closed-form candidate on each interval."""

from dataclasses import dataclass

import numpy as np

DEDUP_TOL = 1e-12


@dataclass
class UserQpInstance:
    """One real dimension of one user's subproblem.

    chi are the projection targets, s_tilde the constellation levels, and
    a_tilde/b_tilde the threshold vectors (-inf marks a vacuous side).
    """

    chi: np.ndarray
    s_tilde: np.ndarray
    a_tilde: np.ndarray
    b_tilde: np.ndarray
    gamma: float

    def __post_init__(self):
        self.chi = np.asarray(self.chi, dtype=float)
        self.s_tilde = np.asarray(self.s_tilde, dtype=float)
        self.a_tilde = np.asarray(self.a_tilde, dtype=float)
        self.b_tilde = np.asarray(self.b_tilde, dtype=float)
        if not np.all(np.isfinite(self.chi)):
            raise ValueError("projection targets must be finite")


def boundary_points(inst):
    """Sorted candidate interval endpoints {gamma, ...} with +inf appended.

    Collects every finite point (chi + a)/(1 + s) and (b - chi)/(1 - s)
    strictly above gamma; candidates generated from -inf thresholds drop out
    as non-finite. Duplicates are merged at 1e-12.
    """
    pts = [float(inst.gamma)]
    with np.errstate(divide="ignore", invalid="ignore"):
        cand_a = (inst.chi + inst.a_tilde) / (1.0 + inst.s_tilde)
        cand_b = (inst.b_tilde - inst.chi) / (1.0 - inst.s_tilde)
    for cand in (cand_a, cand_b):
        good = cand[np.isfinite(cand) & (cand > inst.gamma + DEDUP_TOL)]
        pts.extend(good.tolist())
    pts.sort()
    merged = [pts[0]]
    for p in pts[1:]:
        if p - merged[-1] > DEDUP_TOL:
            merged.append(p)
    merged.append(np.inf)
    return np.asarray(merged)


def _clamp_u(chi, s, a, b, d):
    """Optimal per-symbol coordinate at fixed d: clamp chi into its box."""
    upper = np.where(np.isfinite(a), (s + 1.0) * d - a, np.inf)
    lower = np.where(np.isfinite(b), (s - 1.0) * d + b, -np.inf)
    return np.clip(chi, lower, upper)


def _objective_at(inst, d):
    u = _clamp_u(inst.chi, inst.s_tilde, inst.a_tilde, inst.b_tilde, d)
    return float(np.sum((u - inst.chi) ** 2)), u


def solve_user_qp(inst):
    """Global minimizer (d*, u*, objective) of one per-user subproblem.

    Each interval between consecutive boundary points has a constant
    active-set classification (evaluated at the midpoint, or at tau + 1 on
    the unbounded last interval); the unconstrained quadratic candidate is
    clamped into the interval and the best interval wins. Ties go to the
    smaller decision value.
    """
    if inst.gamma <= 0.0:
        raise ValueError("gamma must be positive")
    pts = boundary_points(inst)
    s = inst.s_tilde
    chi = inst.chi
    a = inst.a_tilde
    b = inst.b_tilde
    best_d = None
    best_obj = np.inf
    for i in range(len(pts) - 1):
        lo, hi = pts[i], pts[i + 1]
        probe = 0.5 * (lo + hi) if np.isfinite(hi) else lo + 1.0
        with np.errstate(invalid="ignore"):
            in_gamma = chi > (s + 1.0) * probe - a
            in_omega = chi < (s - 1.0) * probe + b
        den = np.sum((s + 1.0)[in_gamma] ** 2) + np.sum((s - 1.0)[in_omega] ** 2)
        if den == 0.0:
            # objective constant on the interval; keep decision regions tight
            d_hat = lo
        else:
            num = np.sum(((a + chi) * (s + 1.0))[in_gamma]) + np.sum(
                ((chi - b) * (s - 1.0))[in_omega]
            )
            d_hat = min(max(num / den, lo), hi)
        obj, _ = _objective_at(inst, d_hat)
        if obj < best_obj:  # ties keep the earlier, smaller decision value
            best_obj = obj
            best_d = d_hat
    obj, u = _objective_at(inst, best_d)
    return float(best_d), u, obj


def solve_block(lambda_tilde, spec):
    """Project a K x L complex block onto the SEP-feasible set.

    Splits into 2K independent real subproblems (real and imaginary
    dimension per user) and reassembles (u, d).
    """
    lam = np.asarray(lambda_tilde)
    k, block_len = spec.s_real.shape
    if lam.shape != (k, block_len):
        raise ValueError("block shape does not match the SEP spec")
    u = np.zeros((k, block_len), dtype=complex)
    d = np.zeros(2 * k)
    for kk in range(k):
        inst_r = UserQpInstance(
            lam[kk].real, spec.s_real[kk], spec.a_r[kk], spec.b_r[kk], spec.gamma
        )
        d_r, u_r, _ = solve_user_qp(inst_r)
        inst_i = UserQpInstance(
            lam[kk].imag, spec.s_imag[kk], spec.a_i[kk], spec.b_i[kk], spec.gamma
        )
        d_i, u_i, _ = solve_user_qp(inst_i)
        u[kk] = u_r + 1j * u_i
        d[kk] = d_r
        d[k + kk] = d_i
    return u, d
