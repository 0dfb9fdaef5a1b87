"""Matrix-free fusion operators.

Every operator maps parameter vectors of length ``cols`` to constraint-space
vectors of length ``rows`` and exposes the transpose and Gram actions. The
structured variants never materialize their matrix; ``materialize_dense`` is
a testing oracle guarded to at most 1e6 entries.

Operators are immutable after construction and safe to share across threads;
apply calls allocate their own output buffers.
"""

import numpy as np

from . import _kern
from .errors import ContractViolationError

DENSE_GUARD = 10**6


def _as_vector(x, n, what):
    x = np.ascontiguousarray(x, dtype=np.float64)
    if x.ndim != 1 or x.shape[0] != n:
        raise ContractViolationError(
            f"{what}: expected vector of length {n}, got shape {x.shape}"
        )
    return x


class FusionOperator:
    """Base class: a linear map with apply / transpose / Gram actions."""

    tag = "dense"

    def __init__(self, rows, cols):
        self.rows = int(rows)
        self.cols = int(cols)

    def apply(self, x):
        x = _as_vector(x, self.cols, "apply")
        return self._apply(x)

    def apply_transpose(self, y):
        y = _as_vector(y, self.rows, "apply_transpose")
        return self._apply_transpose(y)

    def apply_gram(self, x):
        """D^t D x; structured identities override this where available."""
        x = _as_vector(x, self.cols, "apply_gram")
        return self._apply_gram(x)

    def _apply_gram(self, x):
        return self._apply_transpose(self._apply(x))

    def materialize_dense(self):
        """Dense matrix equal to this operator (testing oracle)."""
        if self.rows * self.cols > DENSE_GUARD:
            raise ContractViolationError(
                f"dense materialization of {self.rows}x{self.cols} exceeds "
                f"{DENSE_GUARD} entries"
            )
        out = np.empty((self.rows, self.cols))
        e = np.zeros(self.cols)
        for j in range(self.cols):
            e[j] = 1.0
            out[:, j] = self._apply(e)
            e[j] = 0.0
        return out


class DenseOperator(FusionOperator):
    """Explicitly stored matrix; Gram product cached on first use."""

    tag = "dense"

    def __init__(self, matrix):
        matrix = np.ascontiguousarray(matrix, dtype=np.float64)
        if matrix.ndim != 2:
            raise ContractViolationError("DenseOperator needs a 2-d array")
        super().__init__(*matrix.shape)
        self.matrix = matrix
        self._gram = None

    def _apply(self, x):
        return self.matrix @ x

    def _apply_transpose(self, y):
        return self.matrix.T @ y

    def _apply_gram(self, x):
        if self._gram is None:
            self._gram = self.matrix.T @ self.matrix
        return self._gram @ x

    def gram_matrix(self):
        if self._gram is None:
            self._gram = self.matrix.T @ self.matrix
        return self._gram

    def materialize_dense(self):
        return self.matrix.copy()


class IdentityOperator(FusionOperator):
    tag = "identity"

    def __init__(self, n):
        super().__init__(n, n)

    def _apply(self, x):
        return x.copy()

    _apply_transpose = _apply
    _apply_gram = _apply


class StackedOperator(FusionOperator):
    """Vertical stack [D_1; ...; D_r] of operators on a common domain."""

    tag = "stacked"

    def __init__(self, blocks):
        blocks = list(blocks)
        cols = blocks[0].cols
        if any(b.cols != cols for b in blocks):
            raise ContractViolationError("stacked blocks must share cols")
        super().__init__(sum(b.rows for b in blocks), cols)
        self.blocks = blocks
        self.offsets = np.cumsum([0] + [b.rows for b in blocks])

    def _apply(self, x):
        return np.concatenate([b._apply(x) for b in self.blocks])

    def _apply_transpose(self, y):
        out = np.zeros(self.cols)
        for b, lo, hi in zip(self.blocks, self.offsets[:-1], self.offsets[1:]):
            out += b._apply_transpose(y[lo:hi])
        return out

    def _apply_gram(self, x):
        out = np.zeros(self.cols)
        for b in self.blocks:
            out += b._apply_gram(x)
        return out


class TriangleOperator(FusionOperator):
    """All-triples triangle-inequality rows on the trivec parameterization.

    Rows come in groups of three per node triple j < k < i, subjects in the
    order (k,j), (i,j), (i,k); each row reads
    ``x_subject - x_other1 - x_other2`` and is feasible when <= 0.
    Shape is 3*C(m,3) by C(m,2); the Gram action uses
    T^t T = (3m-4) I - M M^t with M the complete-graph incidence matrix.
    """

    tag = "triangle"

    def __init__(self, m):
        if m < 3:
            raise ContractViolationError("triangle operator needs m >= 3")
        self.m = int(m)
        n3 = m * (m - 1) * (m - 2) // 6
        super().__init__(3 * n3, m * (m - 1) // 2)

    def _apply(self, x):
        return _kern.triangle_apply(self.m, x)

    def _apply_transpose(self, y):
        return _kern.triangle_apply_transpose(self.m, y)

    def _apply_gram(self, x):
        m = self.m
        mm = _kern.incidence_apply(m, _kern.incidence_apply_transpose(m, x))
        return (3 * m - 4) * x - mm


class ClusteringOperator(FusionOperator):
    """Weighted centroid differences w_ij (u_i - u_j) over retained pairs.

    Acts on vec(U) for a d-by-m centroid matrix (column-major); block l of
    the image is the pair difference for the l-th retained pair. Pairs with
    zero weight are dropped; retained pairs keep trivec order.
    """

    tag = "clustering"

    def __init__(self, d, m, weights):
        weights = np.asarray(weights, dtype=np.float64)
        if weights.shape != (m, m):
            raise ContractViolationError("weights must be an m x m matrix")
        if not np.allclose(weights, weights.T):
            raise ContractViolationError("weights must be symmetric")
        if np.any(weights < 0):
            raise ContractViolationError("weights must be nonnegative")
        I, J, w = [], [], []
        for j in range(m):
            for i in range(j + 1, m):
                if weights[i, j] != 0.0:
                    I.append(i)
                    J.append(j)
                    w.append(weights[i, j])
        self.d = int(d)
        self.m = int(m)
        self.pair_i = np.asarray(I, dtype=np.intp)
        self.pair_j = np.asarray(J, dtype=np.intp)
        self.pair_w = np.asarray(w, dtype=np.float64)
        self.num_pairs = len(w)
        super().__init__(d * self.num_pairs, d * m)
        self._laplacian = None

    def _as_mat(self, x):
        # vec is column-major over a (d, m) matrix, i.e. row-major (m, d)
        return x.reshape(self.m, self.d)

    def _apply(self, x):
        V = _kern.pair_diff_apply(self._as_mat(x), self.pair_i, self.pair_j,
                                  self.pair_w)
        return V.reshape(-1)

    def _apply_transpose(self, y):
        V = y.reshape(self.num_pairs, self.d)
        G = _kern.pair_diff_apply_transpose(V, self.pair_i, self.pair_j,
                                            self.pair_w, self.m)
        return G.reshape(-1)

    def laplacian(self):
        """Graph Laplacian with w_ij^2 edge weights; D^t D = L kron I_d."""
        if self._laplacian is None:
            L = np.zeros((self.m, self.m))
            w2 = self.pair_w**2
            for i, j, v in zip(self.pair_i, self.pair_j, w2):
                L[i, i] += v
                L[j, j] += v
                L[i, j] -= v
                L[j, i] -= v
            self._laplacian = L
        return self._laplacian

    def _apply_gram(self, x):
        return (self.laplacian() @ self._as_mat(x)).reshape(-1)


class TvOperator(FusionOperator):
    """Anisotropic total-variation differences of an m-by-p image.

    On vec(U) (column-major): all forward row differences, then all forward
    column differences, then one extra row picking the last pixel (rank
    repair). Rows = p(m-1) + m(p-1) + 1.
    """

    tag = "tv"

    def __init__(self, m, p):
        if m < 1 or p < 1:
            raise ContractViolationError("image dimensions must be positive")
        self.img_rows = int(m)
        self.img_cols = int(p)
        super().__init__(p * (m - 1) + m * (p - 1) + 1, m * p)

    def _apply(self, x):
        m, p = self.img_rows, self.img_cols
        U = x.reshape(m, p, order="F")
        dr = np.diff(U, axis=0)  # (m-1) x p
        dc = np.diff(U, axis=1)  # m x (p-1)
        return np.concatenate(
            [dr.reshape(-1, order="F"), dc.reshape(-1, order="F"), x[-1:]]
        )

    def _apply_transpose(self, y):
        m, p = self.img_rows, self.img_cols
        n1 = p * (m - 1)
        out = np.zeros((m, p))
        dr = y[:n1].reshape(m - 1, p, order="F")
        out[1:, :] += dr
        out[:-1, :] -= dr
        dc = y[n1:-1].reshape(m, p - 1, order="F")
        out[:, 1:] += dc
        out[:, :-1] -= dc
        out[-1, -1] += y[-1]
        return out.reshape(-1, order="F")


class CondnumOperator(FusionOperator):
    """Pairwise condition-bound rows x_i - c x_j over ordered pairs.

    Pairs (i, j) are enumerated column-major with i varying fastest,
    including i = j (those rows read x_i(1 - c) <= 0, harmless for c >= 1).
    The Gram action uses D^t D = p(c^2+1) I - 2c 11^t.
    """

    tag = "condnum"

    def __init__(self, p, c):
        if c < 1.0:
            raise ContractViolationError("condition bound c must be >= 1")
        self.p = int(p)
        self.c = float(c)
        super().__init__(p * p, p)

    def _apply(self, x):
        # out[i, j] = x_i - c x_j, flattened with i fastest
        O = x[:, None] - self.c * x[None, :]
        return O.reshape(-1, order="F")

    def _apply_transpose(self, y):
        Y = y.reshape(self.p, self.p, order="F")
        return Y.sum(axis=1) - self.c * Y.sum(axis=0)

    def _apply_gram(self, x):
        c = self.c
        return self.p * (c * c + 1.0) * x - 2.0 * c * x.sum() * np.ones(self.p)


def apply(op, x):
    """D x."""
    return op.apply(x)


def apply_transpose(op, y):
    """D^t y."""
    return op.apply_transpose(y)


def apply_gram(op, x):
    """D^t D x via the structured identity when one is available."""
    return op.apply_gram(x)


def materialize_dense(op):
    """Dense matrix of the operator; guarded testing oracle."""
    return op.materialize_dense()


def incidence_apply(m, v):
    """M v: pairwise sums v_i + v_j in trivec order; O(m^2)."""
    v = _as_vector(v, m, "incidence_apply")
    return _kern.incidence_apply(m, v)


def incidence_apply_transpose(m, w):
    """M^t w: per-node sums of w over incident pairs; O(m^2)."""
    w = _as_vector(w, m * (m - 1) // 2, "incidence_apply_transpose")
    return _kern.incidence_apply_transpose(m, w)
