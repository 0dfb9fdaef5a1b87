"""Linear solvers for the (H + rho D^t D) systems inside MM and ADMM.

Conjugate gradients is the workhorse; LSQR is available behind the same
surface for the stacked least-squares form. The metric-projection and
condition-number problems admit exact O(m^2) / O(p) inverse applications
(Woodbury and Sherman-Morrison closed forms) implemented here.
"""

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.sparse.linalg as spla

from . import _kern
from .errors import ContractViolationError, SolverFailureError

# iterations without residual improvement before CG is declared stalled
STAGNATION_WINDOW = 50


@dataclass
class SpdSystem:
    """Symmetric positive definite system given through its operator action."""

    matvec: Callable[[np.ndarray], np.ndarray]
    rhs: np.ndarray
    dim: int


@dataclass
class IterativeResult:
    x: np.ndarray
    iterations: int
    converged: bool
    residual_norm: float
    stagnated: bool = field(default=False)


def cg_solve(system, tol, maxiter, x0=None):
    """Conjugate gradients on an SPD operator system.

    Stops when ||Ax - b|| <= tol * ||b||. Hitting maxiter or stalling for
    STAGNATION_WINDOW iterations is flagged on the result, not raised;
    non-finite values raise SolverFailureError.
    """
    if tol <= 0:
        raise ContractViolationError("cg tolerance must be positive")
    b = np.asarray(system.rhs, dtype=np.float64)
    bnorm = float(np.linalg.norm(b))
    if bnorm == 0.0:
        return IterativeResult(np.zeros(system.dim), 0, True, 0.0)
    target = tol * bnorm

    if x0 is None:
        x = np.zeros(system.dim)
        r = b.copy()
    else:
        x = np.array(x0, dtype=np.float64, copy=True)
        r = b - system.matvec(x)
    rnorm = float(np.linalg.norm(r))
    if rnorm <= target:
        return IterativeResult(x, 0, True, rnorm)

    p = r.copy()
    rs = rnorm * rnorm
    best = rnorm
    since_best = 0
    for k in range(1, maxiter + 1):
        Ap = system.matvec(p)
        pAp = float(p @ Ap)
        if not np.isfinite(pAp) or pAp <= 0.0:
            raise SolverFailureError(
                f"cg: curvature {pAp!r} at iteration {k} (system not SPD?)"
            )
        alpha = rs / pAp
        x += alpha * p
        r -= alpha * Ap
        rs_new = float(r @ r)
        if not np.isfinite(rs_new):
            raise SolverFailureError(f"cg: non-finite residual at iteration {k}")
        rnorm = np.sqrt(rs_new)
        if rnorm <= target:
            return IterativeResult(x, k, True, rnorm)
        if rnorm < best:
            best = rnorm
            since_best = 0
        else:
            since_best += 1
            if since_best >= STAGNATION_WINDOW:
                return IterativeResult(x, k, False, rnorm, stagnated=True)
        p = r + (rs_new / rs) * p
        rs = rs_new
    return IterativeResult(x, maxiter, False, rnorm)


def lsqr_solve(apply_fn, apply_t_fn, shape, b, tol, maxiter, x0=None):
    """Least-squares solve min ||A x - b|| for a stacked operator.

    The operator is given through its forward/transpose actions (the
    [W^{1/2}; sqrt(rho) D] stacked form). Wraps scipy's LSQR; tol is the
    relative normal-equation residual target.
    """
    op = spla.LinearOperator(shape, matvec=apply_fn, rmatvec=apply_t_fn)
    if x0 is not None:
        # shift so LSQR starts from x0: solve A dx = b - A x0
        b = b - apply_fn(x0)
    out = spla.lsqr(op, b, atol=tol, btol=tol, iter_lim=maxiter)
    x, istop, itn = out[0], out[1], out[2]
    if not np.all(np.isfinite(x)):
        raise SolverFailureError("lsqr: non-finite solution")
    if x0 is not None:
        x = x + x0
    return IterativeResult(x, itn, istop in (1, 2), float(out[3]))


def metric_inverse_apply(m, rho, b):
    """Exact [I + rho D^t D]^{-1} b for the metric stack D = [T; I].

    Closed form a I + a b rho M M^t + 4 a b c rho^2 11^t with
    a = 1/(3(m-1)rho + 1), b = 1/((2m-1)rho + 1), c = 1/((m-1)rho + 1),
    applied with two incidence products; O(m^2) total.
    """
    b_vec = np.ascontiguousarray(b, dtype=np.float64)
    ca = 1.0 / (3.0 * (m - 1) * rho + 1.0)
    cb = 1.0 / ((2.0 * m - 1.0) * rho + 1.0)
    cc = 1.0 / ((m - 1.0) * rho + 1.0)
    mm = _kern.incidence_apply(m, _kern.incidence_apply_transpose(m, b_vec))
    return ca * b_vec + ca * cb * rho * mm + 4.0 * ca * cb * cc * rho**2 * b_vec.sum()


def condnum_inverse_apply(p, c, rho, b):
    """Exact [I + rho D^t D]^{-1} b for the condition-number operator.

    Sherman-Morrison on a I - b' 11^t with a = 1 + rho p (c^2 + 1) and
    b' = 2 rho c: result (1/a) [b - (1^t b)/(p - a/b') 1].
    """
    b = np.asarray(b, dtype=np.float64)
    a = 1.0 + rho * p * (c * c + 1.0)
    bp = 2.0 * rho * c
    return (b - b.sum() / (p - a / bp)) / a
