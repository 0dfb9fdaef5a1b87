"""Inner solvers and the annealing outer loop.

Three interchangeable inner solvers minimize the penalized objective

    h_rho(x) = f(x) + rho/2 * dist(D x, S)^2

for a fixed rho: exact surrogate minimization (``mm``), steepest descent
with the exact quadratic step length (``sd``), and ADMM with an adaptive
penalty parameter (``admm``). The outer loop anneals rho geometrically and
stops on the distance criteria. One run owns its state exclusively; runs
with distinct state may execute concurrently.
"""

import csv
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ContractViolationError, SolverFailureError
from .linsolve import IterativeResult, SpdSystem, cg_solve, lsqr_solve
from .projections import prox_scaled_distance

SOLVERS = ("mm", "sd", "admm")
TRACE_HEADER = ("outer", "inner", "rho", "loss", "distance", "gradnorm", "step")
# cadence of the adaptive-mu test; per-iteration adaptation limit-cycles on
# stiff fusion operators, so the ratio check runs every few sweeps
ADMM_MU_PERIOD = 10


@dataclass(frozen=True)
class AnnealingSchedule:
    """Geometric penalty schedule rho(t) = min(rho_max, r^(t-1))."""

    multiplier: float = 1.2
    rho_max: float = 1e8

    def __post_init__(self):
        if self.multiplier <= 1.0:
            raise ContractViolationError("annealing multiplier must be > 1")
        if self.rho_max < 1.0:
            raise ContractViolationError("rho_max must be >= 1")

    def rho(self, t):
        if (t - 1) * np.log(self.multiplier) >= np.log(self.rho_max):
            return self.rho_max
        return min(self.rho_max, self.multiplier ** (t - 1))


@dataclass(frozen=True)
class StoppingConfig:
    """Tolerances and iteration caps for the inner/outer loops."""

    delta_h: float = 1e-3
    delta_d: float = 1e-2
    delta_q: float = 1e-6
    i_outer: int = 200
    i_inner: int = 10**4
    i_nesterov: int = 10

    def __post_init__(self):
        if min(self.delta_h, self.delta_d, self.delta_q) < 0:
            raise ContractViolationError("tolerances must be >= 0")
        if min(self.i_outer, self.i_inner, self.i_nesterov) < 1:
            raise ContractViolationError("iteration caps must be >= 1")

    def linear_tol(self):
        # keep linear-solve error below the gradient stopping level
        return min(1e-8, 1e-2 * self.delta_h)


@dataclass
class SolverState:
    """Mutable per-run state: iterates, acceleration shadow, ADMM blocks."""

    x: np.ndarray
    z: np.ndarray
    nesterov: int = 1
    inner_n: int = 0
    x_prev: Optional[np.ndarray] = None
    h: Optional[float] = None
    h_prev: Optional[float] = None
    y: Optional[np.ndarray] = None
    lam: Optional[np.ndarray] = None
    mu: float = 1.0
    r_norm: float = 0.0
    s_norm: float = 0.0
    step_size: float = 0.0
    admm_iters: int = 0


class RunTrace:
    """Append-only per-iteration records; serializes to CSV."""

    def __init__(self):
        self.rows = []

    def append(self, outer, inner, rho, loss, distance, gradnorm, step):
        self.rows.append(
            (int(outer), int(inner), float(rho), float(loss), float(distance),
             float(gradnorm), float(step))
        )

    def __len__(self):
        return len(self.rows)

    def column(self, name):
        return np.array([r[TRACE_HEADER.index(name)] for r in self.rows])

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(TRACE_HEADER)
            for row in self.rows:
                writer.writerow([repr(v) for v in row])


@dataclass
class AnnealResult:
    x: np.ndarray
    trace: RunTrace
    outer_iterations: int
    inner_iterations: int
    loss: float
    distance: float
    gradient_norm: float
    rho_final: float
    stop_reason: str


def _norm(v):
    return float(np.sqrt(v @ v))


def _penalty_parts(problem, x):
    Dx = problem.operator.apply(x)
    proj = problem.constraint.project(Dx)
    dist = _norm(Dx - proj)
    return Dx, proj, dist


def objective_h(problem, x, rho):
    """Penalized objective f(x) + rho/2 dist(Dx, S)^2."""
    _, _, dist = _penalty_parts(problem, x)
    return problem.loss.value(x) + 0.5 * rho * dist * dist


def gradient_h(problem, x, rho):
    """Gradient of the penalized objective (one projection evaluation)."""
    Dx, proj, _ = _penalty_parts(problem, x)
    return problem.loss.gradient(x) + rho * problem.operator.apply_transpose(Dx - proj)


def surrogate_g(problem, x, anchor, rho):
    """Distance-majorization surrogate g_rho(x | anchor)."""
    target = problem.constraint.project(problem.operator.apply(anchor))
    resid = problem.operator.apply(x) - target
    return problem.loss.value(x) + 0.5 * rho * float(resid @ resid)


def _solve_regularized(problem, scale, rhs, warm, linear_solver, tol, maxiter):
    """Solve (W + scale D^t D) x = rhs, or the equivalent stacked LS problem."""
    loss, op = problem.loss, problem.operator
    if linear_solver not in (None, "cg", "lsqr", "exact"):
        raise ContractViolationError(f"unknown linear solver {linear_solver!r}")
    use_exact = problem.inverse_factory is not None and linear_solver in (None, "exact")
    if linear_solver == "exact" and problem.inverse_factory is None:
        raise ContractViolationError("no exact inverse available for this problem")
    if use_exact:
        return problem.inverse_factory(scale)(rhs), 0
    if linear_solver == "lsqr":
        # rebuild the stacked least-squares data from the normal-equation rhs:
        # rhs = W c + scale D^t t  with top block W^{1/2} c, bottom sqrt(scale) t
        raise ContractViolationError(
            "lsqr path requires the stacked form; use _solve_stacked"
        )
    sys = SpdSystem(
        matvec=lambda v: loss.curvature_apply(v) + scale * op.apply_gram(v),
        rhs=rhs,
        dim=op.cols,
    )
    result = cg_solve(sys, tol, maxiter, x0=warm)
    return result.x, result.iterations


def _solve_stacked_lsqr(problem, scale, target, warm, tol, maxiter):
    """min ||[W^{1/2}; sqrt(scale) D] x - [W^{1/2} c; sqrt(scale) target]||."""
    loss, op = problem.loss, problem.operator
    sw = loss.sqrt_weight
    rs = np.sqrt(scale)

    def fwd(v):
        return np.concatenate([sw * v, rs * op.apply(v)])

    def adj(u):
        return sw * u[: op.cols] + rs * op.apply_transpose(u[op.cols:])

    b = np.concatenate([sw * loss.target, rs * target])
    result = lsqr_solve(fwd, adj, (op.cols + op.rows, op.cols), b, tol, maxiter,
                        x0=warm)
    return result.x, result.iterations


def mm_step(problem, state, rho, linear_solver=None, tol=1e-8, maxiter=None,
            z_projection=None):
    """Exact minimization of the surrogate anchored at the shadow iterate.

    Solves the stacked least-squares system [W^{1/2}; sqrt(rho) D] x =
    [W^{1/2} c; sqrt(rho) P(D z)] through the problem's exact inverse when
    one exists, else warm-started CG on the normal equations. A precomputed
    projection of D z may be passed to avoid re-evaluating it.
    """
    op = problem.operator
    if maxiter is None:
        maxiter = max(50, 3 * op.cols)
    if z_projection is None:
        z_projection = problem.constraint.project(op.apply(state.z))
    target = z_projection
    if linear_solver == "lsqr":
        x_new, _ = _solve_stacked_lsqr(problem, rho, target, state.x, tol, maxiter)
    else:
        rhs = problem.loss.curvature_apply(problem.loss.target)
        rhs = rhs + rho * op.apply_transpose(target)
        x_new, _ = _solve_regularized(problem, rho, rhs, state.x, linear_solver,
                                      tol, maxiter)
    if not np.all(np.isfinite(x_new)):
        raise SolverFailureError("mm step produced non-finite iterate")
    state.x_prev = state.x
    state.x = x_new
    state.step_size = 0.0
    return state


def sd_step(problem, state, rho, z_gradient=None):
    """Steepest descent on the surrogate with the exact step length.

    t_n = ||v||^2 / (v^t W v + rho ||D v||^2) for v the penalized gradient
    at the shadow iterate; a zero gradient is a fixed point. The gradient
    may be passed in when the caller has already evaluated it.
    """
    v = gradient_h(problem, state.z, rho) if z_gradient is None else z_gradient
    vnorm2 = float(v @ v)
    if vnorm2 == 0.0:
        state.x_prev = state.x
        state.step_size = 0.0
        return state
    Dv = problem.operator.apply(v)
    denom = float(v @ problem.loss.curvature_apply(v)) + rho * float(Dv @ Dv)
    if denom <= 0.0 or not np.isfinite(denom):
        raise SolverFailureError(
            f"sd step: degenerate curvature {denom!r} with nonzero gradient"
        )
    t = vnorm2 / denom
    state.x_prev = state.x
    state.x = state.z - t * v
    state.step_size = t
    return state


def admm_step(problem, state, rho, linear_solver=None, tol=1e-8, maxiter=None):
    """One ADMM sweep (x, y, multiplier) plus the adaptive-mu update.

    Multipliers are stored in scaled form; when mu changes they are rescaled
    so the unscaled multiplier mu*lam is preserved.
    """
    op = problem.operator
    if maxiter is None:
        maxiter = max(50, 3 * op.cols)
    if state.y is None:
        state.y = op.apply(state.x)
        state.lam = np.zeros(op.rows)
    mu = state.mu
    target = state.y - state.lam
    if linear_solver == "lsqr":
        x_new, _ = _solve_stacked_lsqr(problem, mu, target, state.x, tol, maxiter)
    else:
        rhs = problem.loss.curvature_apply(problem.loss.target)
        rhs = rhs + mu * op.apply_transpose(target)
        x_new, _ = _solve_regularized(problem, mu, rhs, state.x, linear_solver,
                                      tol, maxiter)
    if not np.all(np.isfinite(x_new)):
        raise SolverFailureError("admm x-update produced non-finite iterate")
    Dx = op.apply(x_new)
    y_new = prox_scaled_distance(Dx + state.lam, rho / mu, problem.constraint)
    lam_new = state.lam + Dx - y_new

    r_norm = float(np.linalg.norm(Dx - y_new))
    s_norm = float(mu * np.linalg.norm(op.apply_transpose(state.y - y_new)))
    state.admm_iters += 1
    mu_new = mu
    if state.admm_iters % ADMM_MU_PERIOD == 0:
        if r_norm > 0.0 and (s_norm == 0.0 or r_norm / s_norm > 10.0):
            mu_new = 2.0 * mu
        elif s_norm > 0.0 and (r_norm == 0.0 or r_norm / s_norm < 0.1):
            mu_new = 0.5 * mu
    if mu_new != mu:
        lam_new = lam_new * (mu / mu_new)

    state.x_prev = state.x
    state.x = x_new
    state.y = y_new
    state.lam = lam_new
    state.mu = mu_new
    state.r_norm = r_norm
    state.s_norm = s_norm
    state.step_size = mu_new
    return state


def accelerate(state, i_nesterov):
    """Nesterov extrapolation with the stability check and restart.

    Accelerates only when the penalized objective decreased and the inner
    iteration count has reached the threshold; otherwise the shadow iterate
    resets to the new point and the counter restarts at 1.
    """
    stable = (
        state.h is not None
        and state.h_prev is not None
        and state.h < state.h_prev
        and state.inner_n >= i_nesterov
    )
    if stable:
        coef = (state.nesterov - 1.0) / (state.nesterov + 2.0)
        state.z = state.x + coef * (state.x - state.x_prev)
        state.nesterov += 1
    else:
        state.z = state.x.copy()
        state.nesterov = 1
    return state


def run_inner(problem, rho, config, state, solver="mm", outer=1, trace=None,
              use_acceleration=True, linear_solver=None, record_trace=True):
    """Iterate one inner solver at fixed rho until the gradient test passes.

    Returns (state, trace, steps_taken, converged). Each evaluated iterate
    appends a trace row (unless record_trace is off); the step column
    carries the SD step length or the ADMM mu (0 for MM and for the
    initial point).

    Penalty evaluations are shared: the objective check of the candidate
    iterate doubles as the next iteration's loop-top evaluation, and when
    the shadow iterate coincides with the current point the loop-top
    gradient/projection feed the step directly.
    """
    if trace is None:
        trace = RunTrace()
    tol = config.linear_tol()
    steps = 0
    converged = False
    # z equals x at entry (fresh subproblem start)
    z_is_x = bool(np.array_equal(state.z, state.x))
    Dx, proj, dist = _penalty_parts(problem, state.x)
    loss = problem.loss.value(state.x)
    for n in range(1, config.i_inner + 2):
        grad = problem.loss.gradient(state.x) + rho * problem.operator.apply_transpose(
            Dx - proj
        )
        gradnorm = _norm(grad)
        if record_trace:
            trace.append(outer, n, rho, loss, dist, gradnorm, state.step_size)
        if not np.isfinite(gradnorm):
            raise SolverFailureError("non-finite gradient norm")
        if gradnorm <= config.delta_h:
            converged = True
            break
        if n > config.i_inner:
            break
        state.h_prev = loss + 0.5 * rho * dist * dist
        if solver == "mm":
            mm_step(problem, state, rho, linear_solver, tol, None,
                    z_projection=proj if z_is_x else None)
        elif solver == "sd":
            sd_step(problem, state, rho,
                    z_gradient=grad if z_is_x else None)
        elif solver == "admm":
            admm_step(problem, state, rho, linear_solver, tol, None)
        else:
            raise ContractViolationError(f"unknown solver {solver!r}")
        Dx, proj, dist = _penalty_parts(problem, state.x)
        loss = problem.loss.value(state.x)
        state.h = loss + 0.5 * rho * dist * dist
        state.inner_n = n
        if use_acceleration:
            accelerate(state, config.i_nesterov)
            z_is_x = state.nesterov == 1
        else:
            state.z = state.x.copy()
            state.nesterov = 1
            z_is_x = True
        steps += 1
    return state, trace, steps, converged


def run_annealing(problem, schedule, config, solver="mm", use_acceleration=True,
                  linear_solver=None, trace=None, record_trace=True):
    """Algorithm: anneal rho along the schedule, warm-starting each subproblem.

    Stops when dist(Dx, S) <= delta_d or when the distance stops making
    relative progress (delta_q test); hitting the outer cap is reported in
    the result, not raised.
    """
    if solver not in SOLVERS:
        raise ContractViolationError(f"unknown solver {solver!r}")
    x0 = np.asarray(problem.x0, dtype=np.float64).copy()
    state = SolverState(x=x0, z=x0.copy())
    if trace is None:
        trace = RunTrace()
    q_prev = problem.constraint.distance(problem.operator.apply(state.x))
    total_steps = 0
    outer_used = 0
    stop_reason = "outer-cap"
    q_t = q_prev
    rho = schedule.rho(1)
    for t in range(1, config.i_outer + 1):
        rho = schedule.rho(t)
        state.z = state.x.copy()
        state, trace, steps, _ = run_inner(
            problem, rho, config, state, solver=solver, outer=t, trace=trace,
            use_acceleration=use_acceleration, linear_solver=linear_solver,
            record_trace=record_trace,
        )
        total_steps += steps
        outer_used = t
        q_t = problem.constraint.distance(problem.operator.apply(state.x))
        if q_t <= config.delta_d:
            stop_reason = "distance"
            break
        if abs(q_t - q_prev) <= config.delta_q * (q_prev + 1.0):
            stop_reason = "distance-progress"
            break
        q_prev = q_t
    gradnorm = float(np.linalg.norm(gradient_h(problem, state.x, rho)))
    return AnnealResult(
        x=state.x,
        trace=trace,
        outer_iterations=outer_used,
        inner_iterations=total_steps,
        loss=float(problem.loss.value(state.x)),
        distance=q_t,
        gradient_norm=gradnorm,
        rho_final=rho,
        stop_reason=stop_reason,
    )
