"""The five fusion-constrained problems and their path drivers.

Each builder returns an immutable ProblemInstance bundling the quadratic
loss, the structured fusion operator, the constraint set, the start point
(the unconstrained minimizer in every case), and, where the linear system
admits one, an exact inverse for the regularized normal equations.
"""

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np
import scipy.linalg

from . import engine
from .errors import ContractViolationError
from .linsolve import condnum_inverse_apply, metric_inverse_apply
from .operators import (
    ClusteringOperator,
    CondnumOperator,
    DenseOperator,
    IdentityOperator,
    StackedOperator,
    TriangleOperator,
    TvOperator,
)
from .projections import (
    BlockProduct,
    ColumnSparsitySet,
    FreeSet,
    L1Ball,
    NonnegativeOrthant,
    NonpositiveOrthant,
)


@dataclass(frozen=True)
class QuadraticLoss:
    """f(x) = 1/2 ||W^{1/2}(x - c)||^2 with diagonal weights."""

    weight: np.ndarray
    target: np.ndarray

    @property
    def sqrt_weight(self):
        return np.sqrt(self.weight)

    def value(self, x):
        d = x - self.target
        return 0.5 * float(d @ (self.weight * d))

    def gradient(self, x):
        return self.weight * (x - self.target)

    def curvature_apply(self, v):
        return self.weight * v


@dataclass(frozen=True)
class ProblemInstance:
    loss: QuadraticLoss
    operator: object
    constraint: object
    x0: np.ndarray
    name: str = ""
    metadata: dict = field(default_factory=dict)
    # maps a regularization scale s to a solver for (W + s D^t D) x = rhs
    inverse_factory: Optional[Callable[[float], Callable]] = None

    def with_start(self, x0):
        return replace(self, x0=np.asarray(x0, dtype=np.float64))


def _dense_inverse_factory(weight, gram):
    """Cached Cholesky solves of (diag(weight) + s * gram)."""
    cache = {}

    def factory(scale):
        key = float(scale)
        if key not in cache:
            if len(cache) > 16:
                cache.clear()
            A = scale * gram
            A[np.diag_indices_from(A)] += weight
            cho = scipy.linalg.cho_factor(A)
            cache[key] = lambda rhs: scipy.linalg.cho_solve(cho, rhs)
        return cache[key]

    return factory


class _UnionFind:
    def __init__(self, n):
        self.parent = list(range(n))

    def find(self, a):
        while self.parent[a] != a:
            self.parent[a] = self.parent[self.parent[a]]
            a = self.parent[a]
        return a

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[max(ra, rb)] = min(ra, rb)


# ---------------------------------------------------------------------------
# trivec


def trivec(X):
    """Stack the strict lower triangle of a symmetric matrix column-major."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] != X.shape[1]:
        raise ContractViolationError("trivec needs a square matrix")
    scale = max(1.0, float(np.abs(X).max(initial=0.0)))
    if np.abs(X - X.T).max(initial=0.0) > 1e-12 * scale:
        raise ContractViolationError("matrix is not symmetric within 1e-12")
    m = X.shape[0]
    return np.concatenate([X[j + 1:, j] for j in range(m)]) if m > 1 else np.empty(0)


def untrivec(x):
    """Inverse of trivec: rebuild the symmetric zero-diagonal matrix."""
    x = np.asarray(x, dtype=np.float64)
    p = x.shape[0]
    m = (1 + math.isqrt(1 + 8 * p)) // 2
    if m * (m - 1) // 2 != p:
        raise ContractViolationError(f"length {p} is not a binomial C(m,2)")
    X = np.zeros((m, m))
    pos = 0
    for j in range(m):
        cnt = m - j - 1
        X[j + 1:, j] = x[pos: pos + cnt]
        pos += cnt
    return X + X.T


# ---------------------------------------------------------------------------
# metric projection


def build_metric(Y, W=None):
    """Metric projection: fit a semi-metric to noisy dissimilarities.

    Loss 1/2 ||W^{1/2}(x - y)||^2 on the trivec parameterization, fusion
    stack [T; I] with the triangle rows constrained nonpositive and the
    entries nonnegative. Unit weights enable the exact Woodbury inverse.
    """
    Y = np.asarray(Y, dtype=np.float64)
    m = Y.shape[0]
    if m < 3:
        raise ContractViolationError("metric projection needs m >= 3 nodes")
    y = trivec(Y)
    if np.any(y < 0):
        raise ContractViolationError("dissimilarities must be nonnegative")
    if W is None:
        w = np.ones_like(y)
    else:
        w = trivec(np.asarray(W, dtype=np.float64))
        if np.any(w < 0):
            raise ContractViolationError("weights must be nonnegative")
    tri = TriangleOperator(m)
    p = tri.cols
    op = StackedOperator([tri, IdentityOperator(p)])
    constraint = BlockProduct(
        [NonpositiveOrthant(tri.rows), NonnegativeOrthant(p)]
    )
    inverse = None
    if np.all(w == 1.0):
        inverse = lambda scale: (lambda rhs: metric_inverse_apply(m, scale, rhs))
    return ProblemInstance(
        loss=QuadraticLoss(weight=w, target=y),
        operator=op,
        constraint=constraint,
        x0=y.copy(),
        name="metric",
        metadata={"m": m},
        inverse_factory=inverse,
    )


# ---------------------------------------------------------------------------
# convex regression


def build_cvxreg(X, y):
    """Convex regression: fit function values and subgradients.

    Variable v = [theta; vec(Xi)] of length m(1+d); rows of D over ordered
    pairs (i, j), i-major, encode theta_j - theta_i + <x_i - x_j, xi_j> <= 0.
    """
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    d, m = X.shape
    y = np.asarray(y, dtype=np.float64)
    if y.shape != (m,):
        raise ContractViolationError("response length must match sample count")
    if m < 2:
        raise ContractViolationError("convex regression needs m >= 2 samples")
    n = m * (1 + d)
    D = np.zeros((m * (m - 1), n))
    row = 0
    for i in range(m):
        for j in range(m):
            if i == j:
                continue
            D[row, j] += 1.0
            D[row, i] -= 1.0
            D[row, m + j * d: m + (j + 1) * d] = X[:, i] - X[:, j]
            row += 1
    op = DenseOperator(D)
    weight = np.concatenate([np.ones(m), np.zeros(m * d)])
    target = np.concatenate([y, np.zeros(m * d)])
    return ProblemInstance(
        loss=QuadraticLoss(weight=weight, target=target),
        operator=op,
        constraint=NonpositiveOrthant(m * (m - 1)),
        x0=target.copy(),
        name="cvxreg",
        metadata={"d": d, "m": m},
        inverse_factory=_dense_inverse_factory(weight, op.gram_matrix()),
    )


def cvxreg_split(problem, v):
    """Split the stacked variable into (theta, Xi)."""
    d, m = problem.metadata["d"], problem.metadata["m"]
    return v[:m], v[m:].reshape(d, m, order="F")


# ---------------------------------------------------------------------------
# convex clustering


def knn_gaussian_weights(X, n_neighbors=10, phi=3.0):
    """Gaussian kernel weights on the symmetrized kNN graph.

    w_ij = exp(-phi ||x_i - x_j||^2) when j is among i's n_neighbors nearest
    neighbors (or vice versa), 0 otherwise. The Euclidean minimum spanning
    tree is added so the graph is always connected.
    """
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    m = X.shape[1]
    diff = X[:, :, None] - X[:, None, :]
    dist2 = np.einsum("dij,dij->ij", diff, diff)
    kernel = np.exp(-phi * dist2)
    order = np.argsort(dist2, axis=1, kind="stable")
    keep = np.zeros((m, m), dtype=bool)
    k = min(n_neighbors, m - 1)
    for i in range(m):
        neighbors = [j for j in order[i] if j != i][:k]
        keep[i, neighbors] = True
    keep |= keep.T
    from scipy.sparse.csgraph import minimum_spanning_tree

    mst = minimum_spanning_tree(np.sqrt(dist2)).toarray()
    keep |= (mst + mst.T) > 0
    np.fill_diagonal(keep, False)
    return np.where(keep, kernel, 0.0)


def build_clustering(X, weights, k):
    """Convex clustering with a hard sparsity budget on centroid differences.

    Loss 1/2 ||U - X||_F^2 on vec(U); the fusion operator maps centroids to
    weighted pair differences and the constraint keeps at most k nonzero
    difference blocks. The weight graph must be connected.
    """
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    d, m = X.shape
    op = ClusteringOperator(d, m, weights)
    uf = _UnionFind(m)
    for i, j in zip(op.pair_i, op.pair_j):
        uf.union(int(i), int(j))
    if len({uf.find(i) for i in range(m)}) > 1:
        raise ContractViolationError("clustering weight graph is disconnected")
    if not 0 <= k <= op.num_pairs:
        raise ContractViolationError(
            f"sparsity budget k={k} outside [0, {op.num_pairs}]"
        )
    x0 = X.reshape(-1, order="F")
    L = op.laplacian()
    eigval, eigvec = np.linalg.eigh(L)

    def inverse(scale):
        shrink = 1.0 / (1.0 + scale * eigval)

        def solve(rhs):
            R = rhs.reshape(d, m, order="F")
            out = (R @ eigvec) * shrink @ eigvec.T
            return out.reshape(-1, order="F")

        return solve

    return ProblemInstance(
        loss=QuadraticLoss(weight=np.ones(d * m), target=x0.copy()),
        operator=op,
        constraint=ColumnSparsitySet(d, op.num_pairs, k),
        x0=x0,
        name="cluster",
        metadata={"d": d, "m": m, "k": k},
        inverse_factory=inverse,
    )


def coalescence_tolerance(X):
    """Matching threshold for 'centroids i and j have merged'."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    return 1e-4 * (1.0 + np.linalg.norm(X) / X.shape[1])


def cluster_labels(U, tol):
    """Partition samples by centroid coalescence (transitive closure)."""
    U = np.atleast_2d(np.asarray(U, dtype=np.float64))
    m = U.shape[1]
    uf = _UnionFind(m)
    for j in range(m):
        for i in range(j + 1, m):
            if np.linalg.norm(U[:, i] - U[:, j]) <= tol:
                uf.union(i, j)
    roots = [uf.find(i) for i in range(m)]
    relabel = {r: idx for idx, r in enumerate(dict.fromkeys(roots))}
    return np.array([relabel[r] for r in roots])


@dataclass(frozen=True)
class ClusterPathEntry:
    s: float
    k: int
    U: np.ndarray
    labels: np.ndarray
    loss: float
    distance: float


@dataclass(frozen=True)
class ClusterPathResult:
    entries: list

    def best_by(self, score, reference):
        return max(self.entries, key=lambda e: score(reference, e.labels))


def cvxclusterpath(X, weights, s0=0.0, s_step=0.05, schedule=None, config=None,
                   solver="mm", use_acceleration=True, linear_solver=None):
    """Sparsity-level search: sweep s upward, solving and counting merges.

    At each level, k = round((1-s) k_max) difference blocks may stay nonzero;
    after solving, the fraction of coalesced pairs proposes the next level,
    falling back to a fixed s_step increment. Solves warm-start from the
    previous centroids.
    """
    if not 0 <= s0 < 1 or s_step <= 0:
        raise ContractViolationError("need 0 <= s0 < 1 and s_step > 0")
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    d, m = X.shape
    schedule = schedule or engine.AnnealingSchedule(multiplier=1.2, rho_max=1e8)
    config = config or engine.StoppingConfig(
        delta_h=1e-2, delta_d=1e-5, delta_q=1e-6, i_outer=100, i_inner=10**4
    )
    tol = coalescence_tolerance(X)
    base = build_clustering(X, weights, k=0)
    k_max = base.operator.num_pairs
    entries = []
    s = s0
    U = X.copy()
    while s < 1.0:
        k = int(round((1.0 - s) * k_max))
        problem = replace(
            base,
            constraint=ColumnSparsitySet(d, k_max, k),
            metadata={**base.metadata, "k": k},
        ).with_start(U.reshape(-1, order="F"))
        result = engine.run_annealing(
            problem, schedule, config, solver=solver,
            use_acceleration=use_acceleration, linear_solver=linear_solver,
            record_trace=False,
        )
        U = result.x.reshape(d, m, order="F")
        labels = cluster_labels(U, tol)
        pair_gap = np.linalg.norm(
            U[:, base.operator.pair_i] - U[:, base.operator.pair_j], axis=0
        )
        coalesced = int((pair_gap <= tol).sum())
        entries.append(
            ClusterPathEntry(
                s=s, k=k, U=U.copy(), labels=labels,
                loss=result.loss, distance=result.distance,
            )
        )
        proposal = coalesced / k_max
        s = proposal if proposal > s + s_step else s + s_step
    return ClusterPathResult(entries=entries)


# ---------------------------------------------------------------------------
# total-variation denoising


def tv1_norm(img):
    """Anisotropic total variation: l1 norm of all forward differences."""
    img = np.asarray(img, dtype=np.float64)
    return float(
        np.abs(np.diff(img, axis=0)).sum() + np.abs(np.diff(img, axis=1)).sum()
    )


def build_denoise(Wimg, gamma):
    """TV denoising: stay within an l1 budget on the image differences.

    The operator's final rank-repair row is unconstrained (free factor);
    the l1 ball applies to every other component of D u.
    """
    Wimg = np.asarray(Wimg, dtype=np.float64)
    if not np.all(np.isfinite(Wimg)):
        raise ContractViolationError("image must be finite")
    if gamma < 0:
        raise ContractViolationError("target total variation must be >= 0")
    m, p = Wimg.shape
    op = TvOperator(m, p)
    constraint = BlockProduct([L1Ball(op.rows - 1, gamma), FreeSet(1)])
    w = Wimg.reshape(-1, order="F")
    return ProblemInstance(
        loss=QuadraticLoss(weight=np.ones(m * p), target=w.copy()),
        operator=op,
        constraint=constraint,
        x0=w.copy(),
        name="denoise",
        metadata={"shape": (m, p), "gamma": float(gamma)},
    )


@dataclass(frozen=True)
class DenoiseLevelResult:
    s: float
    gamma: float
    image: np.ndarray
    tv: float
    mse: Optional[float]
    psnr: Optional[float]


def denoise_path(Wimg, levels=None, schedule=None, config=None, solver="sd",
                 reference=None, use_acceleration=True, linear_solver=None):
    """Sweep denoising strength s: solve at gamma = (1-s) TV1(input).

    Levels default to 0.0, 0.1, ..., 0.9; each solve warm-starts from the
    previous level. MSE/PSNR are reported against the reference image when
    one is supplied.
    """
    from .metrics import mse as mse_fn
    from .metrics import psnr as psnr_fn

    Wimg = np.asarray(Wimg, dtype=np.float64)
    if levels is None:
        levels = [round(0.1 * i, 1) for i in range(10)]
    if any(not 0 <= s <= 1 for s in levels):
        raise ContractViolationError("path levels must lie in [0, 1]")
    schedule = schedule or engine.AnnealingSchedule(multiplier=1.5, rho_max=1e8)
    config = config or engine.StoppingConfig(
        delta_h=1e-1, delta_d=1e-1, delta_q=1e-6, i_outer=100, i_inner=10**4
    )
    gamma0 = tv1_norm(Wimg)
    start = Wimg.reshape(-1, order="F")
    out = []
    for s in levels:
        gamma = (1.0 - s) * gamma0
        problem = build_denoise(Wimg, gamma).with_start(start)
        result = engine.run_annealing(
            problem, schedule, config, solver=solver,
            use_acceleration=use_acceleration, linear_solver=linear_solver,
            record_trace=False,
        )
        start = result.x
        img = result.x.reshape(Wimg.shape, order="F")
        err = mse_fn(reference, img) if reference is not None else None
        out.append(
            DenoiseLevelResult(
                s=float(s), gamma=gamma, image=img, tv=tv1_norm(img),
                mse=err,
                psnr=psnr_fn(reference, img) if reference is not None else None,
            )
        )
    return out


# ---------------------------------------------------------------------------
# condition-number projection


def build_condnum(sigma, c):
    """Project singular values so every pair satisfies x_i <= c x_j."""
    sigma = np.asarray(sigma, dtype=np.float64)
    if np.any(np.diff(sigma) > 0):
        raise ContractViolationError("singular values must be non-increasing")
    if np.any(sigma < 0):
        raise ContractViolationError("singular values must be nonnegative")
    if c < 1.0:
        raise ContractViolationError("condition bound c must be >= 1")
    p = sigma.shape[0]
    op = CondnumOperator(p, c)
    inverse = lambda scale: (lambda rhs: condnum_inverse_apply(p, c, scale, rhs))
    return ProblemInstance(
        loss=QuadraticLoss(weight=np.ones(p), target=sigma.copy()),
        operator=op,
        constraint=NonpositiveOrthant(p * p),
        x0=sigma.copy(),
        name="condnum",
        metadata={"p": p, "c": float(c)},
        inverse_factory=inverse,
    )


def singular_values(Mtx, tol=1e-12, max_sweeps=60):
    """Singular values by one-sided Jacobi, descending.

    Rotates column pairs until all are orthogonal to the given relative
    tolerance. Guarded to min dimension <= 64; supply sigma directly for
    larger matrices.
    """
    A = np.atleast_2d(np.asarray(Mtx, dtype=np.float64))
    if not np.all(np.isfinite(A)):
        raise ContractViolationError("matrix entries must be finite")
    if min(A.shape) > 64:
        raise ContractViolationError(
            "one-sided Jacobi guard: min dimension > 64; supply sigma directly"
        )
    if A.shape[0] < A.shape[1]:
        A = A.T
    A = A.copy()
    n = A.shape[1]
    for _ in range(max_sweeps):
        rotated = False
        for i in range(n - 1):
            for j in range(i + 1, n):
                ai, aj = A[:, i], A[:, j]
                alpha = float(ai @ ai)
                beta = float(aj @ aj)
                gamma = float(ai @ aj)
                if abs(gamma) <= tol * math.sqrt(alpha * beta) or gamma == 0.0:
                    continue
                rotated = True
                zeta = (beta - alpha) / (2.0 * gamma)
                t = math.copysign(1.0, zeta) / (
                    abs(zeta) + math.sqrt(1.0 + zeta * zeta)
                )
                cs = 1.0 / math.sqrt(1.0 + t * t)
                sn = cs * t
                A[:, i], A[:, j] = cs * ai - sn * aj, sn * ai + cs * aj
        if not rotated:
            break
    vals = np.linalg.norm(A, axis=0)
    return np.sort(vals)[::-1]
