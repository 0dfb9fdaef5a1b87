"""Euclidean projections onto the constraint sets used by the solvers.

Sets are immutable and their ``project`` methods are pure functions, so
concurrent use is safe. Nonconvex kinds (sparsity, column sparsity) break
magnitude ties deterministically: the lowest index wins a retained slot.
"""

import numpy as np

from . import _kern
from .errors import ContractViolationError


def _check_len(v, n):
    v = np.asarray(v, dtype=np.float64)
    if v.ndim != 1 or v.shape[0] != n:
        raise ContractViolationError(
            f"expected vector of length {n}, got shape {v.shape}"
        )
    return v


def _topk_mask(vals, k):
    """Boolean mask keeping the k largest values; ties keep lowest index.

    Uses introselect partial selection, never a full sort.
    """
    P = vals.shape[0]
    if k >= P:
        return np.ones(P, dtype=bool)
    keep = np.zeros(P, dtype=bool)
    if k == 0:
        return keep
    tau = np.partition(vals, P - k)[P - k]
    keep = vals > tau
    need = k - int(keep.sum())
    if need > 0:
        tied = np.flatnonzero(vals == tau)
        keep[tied[:need]] = True
    return keep


class ConstraintSet:
    """A closed set with a (possibly tie-broken) Euclidean projection."""

    kind = "abstract"

    def __init__(self, dim):
        self.dim = int(dim)

    def project(self, v):
        return self._project(_check_len(v, self.dim))

    def distance(self, v):
        v = _check_len(v, self.dim)
        return float(np.linalg.norm(v - self._project(v)))

    def selection_margin(self, v):
        """Gap guarding the projection's support choice; inf when unique."""
        return np.inf


class NonnegativeOrthant(ConstraintSet):
    kind = "nonneg-orthant"

    def _project(self, v):
        return np.maximum(v, 0.0)


class NonpositiveOrthant(ConstraintSet):
    kind = "nonpos-orthant"

    def _project(self, v):
        return np.minimum(v, 0.0)


class FreeSet(ConstraintSet):
    """The whole space; projection is the identity."""

    kind = "free"

    def _project(self, v):
        return v.copy()


class L1Ball(ConstraintSet):
    kind = "l1-ball"

    def __init__(self, dim, radius):
        if radius < 0:
            raise ContractViolationError("l1 ball radius must be >= 0")
        super().__init__(dim)
        self.radius = float(radius)

    def _project(self, v):
        return project_l1_ball(v, self.radius)


class SparsitySet(ConstraintSet):
    """Vectors with at most k nonzero entries."""

    kind = "sparsity"

    def __init__(self, dim, k):
        if not 0 <= k <= dim:
            raise ContractViolationError("sparsity level k out of range")
        super().__init__(dim)
        self.k = int(k)

    def _project(self, v):
        keep = _topk_mask(np.abs(v), self.k)
        return np.where(keep, v, 0.0)

    def selection_margin(self, v):
        v = _check_len(v, self.dim)
        return _selection_gap(np.abs(v), self.k)


class ColumnSparsitySet(ConstraintSet):
    """Block vectors (d-long blocks) with at most k nonzero blocks."""

    kind = "column-sparsity"

    def __init__(self, block_dim, num_blocks, k):
        if not 0 <= k <= num_blocks:
            raise ContractViolationError("column sparsity level k out of range")
        super().__init__(block_dim * num_blocks)
        self.block_dim = int(block_dim)
        self.num_blocks = int(num_blocks)
        self.k = int(k)

    def _as_blocks(self, v):
        # block l occupies v[l*d:(l+1)*d]: one row per block
        return v.reshape(self.num_blocks, self.block_dim)

    def _block_norms(self, v):
        V = self._as_blocks(v)
        return np.sqrt(np.einsum("ij,ij->i", V, V))

    def _project(self, v):
        V = self._as_blocks(v)
        keep = _topk_mask(self._block_norms(v), self.k)
        return np.where(keep[:, None], V, 0.0).reshape(-1)

    def selection_margin(self, v):
        v = _check_len(v, self.dim)
        return _selection_gap(self._block_norms(v), self.k)


class BlockProduct(ConstraintSet):
    """Cartesian product of sets; projects each block independently."""

    kind = "block-product"

    def __init__(self, sets):
        self.sets = list(sets)
        super().__init__(sum(s.dim for s in self.sets))
        self.offsets = np.cumsum([0] + [s.dim for s in self.sets])

    def _blocks(self, v):
        for s, lo, hi in zip(self.sets, self.offsets[:-1], self.offsets[1:]):
            yield s, v[lo:hi]

    def _project(self, v):
        return np.concatenate([s._project(b) for s, b in self._blocks(v)])

    def selection_margin(self, v):
        v = _check_len(v, self.dim)
        return min(s.selection_margin(b) for s, b in self._blocks(v))


def _selection_gap(vals, k):
    """Gap between the k-th and (k+1)-th largest values (inf at the ends)."""
    P = vals.shape[0]
    if k == 0 or k >= P:
        return np.inf
    part = np.partition(vals, P - k - 1)
    return float(part[P - k:].min() - part[P - k - 1])


def project(constraint, v):
    """Nearest point of the set (one representative for nonconvex kinds)."""
    return constraint.project(v)


def project_l1_ball(v, radius):
    """Project onto the l1 ball of the given radius.

    Points inside (or on) the ball are returned unchanged; otherwise
    soft-thresholding at the level found by expected-linear-time pivot
    selection (no full sort).
    """
    if radius < 0:
        raise ContractViolationError("l1 ball radius must be >= 0")
    v = np.asarray(v, dtype=np.float64)
    if radius == 0.0:
        return np.zeros_like(v)
    mag = np.abs(v)
    if mag.sum() <= radius:
        return v.copy()
    lam = _kern.l1_ball_threshold(np.ascontiguousarray(mag), radius)
    return np.sign(v) * np.maximum(mag - lam, 0.0)


def project_column_sparsity(V, k):
    """Zero all but the k columns of largest Euclidean norm.

    Accepts a d-by-P array and returns one; ties at the threshold keep the
    lowest column index. Partial selection, no full sort.
    """
    V = np.asarray(V, dtype=np.float64)
    if V.ndim != 2:
        raise ContractViolationError("expected a d x P block matrix")
    if not 0 <= k <= V.shape[1]:
        raise ContractViolationError("column sparsity level k out of range")
    keep = _topk_mask(np.sqrt(np.einsum("ij,ij->j", V, V)), k)
    return np.where(keep[None, :], V, 0.0)


def prox_scaled_distance(z, alpha, constraint):
    """Prox of alpha * (1/2) dist(., S)^2 at z.

    Equals the convex combination alpha/(1+alpha) P(z) + 1/(1+alpha) z,
    which satisfies the prox stationarity condition even for nonconvex S.
    """
    z = np.asarray(z, dtype=np.float64)
    t = alpha / (1.0 + alpha)
    return t * constraint.project(z) + (1.0 - t) * z
