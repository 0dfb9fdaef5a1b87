"""NumPy implementations of the hot kernels.

These are the fallback used when the compiled extension is unavailable
(and the reference the extension is tested against). Index arrays for the
triangle/incidence maps are cached per node count, so repeated applies
amortize the setup cost.
"""

from functools import lru_cache

import numpy as np

BACKEND = "python"


def pair_index(m, i, j):
    """Trivec column index of the pair (i, j), i > j, 0-based.

    Pairs are ordered by ascending j, then ascending i (column-major
    strict lower triangle).
    """
    return j * m - (j * (j + 1)) // 2 + (i - j - 1)


@lru_cache(maxsize=8)
def _pair_arrays(m):
    # node indices (I, J) of every pair in trivec order
    I = np.concatenate([np.arange(j + 1, m) for j in range(m)])
    J = np.concatenate([np.full(m - j - 1, j) for j in range(m)])
    return I.astype(np.intp), J.astype(np.intp)


@lru_cache(maxsize=8)
def _triangle_arrays(m):
    # For every triple j < k < i, three rows with subjects (k,j), (i,j), (i,k):
    #   x_subj - x_a - x_b  with {a, b} the other two edges of the triple.
    subj, oa, ob = [], [], []
    for j in range(m):
        for k in range(j + 1, m):
            e_kj = pair_index(m, k, j)
            for i in range(k + 1, m):
                e_ij = pair_index(m, i, j)
                e_ik = pair_index(m, i, k)
                subj += [e_kj, e_ij, e_ik]
                oa += [e_ij, e_kj, e_kj]
                ob += [e_ik, e_ik, e_ij]
    return (
        np.asarray(subj, dtype=np.intp),
        np.asarray(oa, dtype=np.intp),
        np.asarray(ob, dtype=np.intp),
    )


def triangle_apply(m, x):
    subj, oa, ob = _triangle_arrays(m)
    return x[subj] - x[oa] - x[ob]


def triangle_apply_transpose(m, y):
    subj, oa, ob = _triangle_arrays(m)
    p = m * (m - 1) // 2
    out = np.bincount(subj, weights=y, minlength=p)
    out -= np.bincount(oa, weights=y, minlength=p)
    out -= np.bincount(ob, weights=y, minlength=p)
    return out


def incidence_apply(m, v):
    I, J = _pair_arrays(m)
    return v[I] + v[J]


def incidence_apply_transpose(m, w):
    I, J = _pair_arrays(m)
    return np.bincount(I, weights=w, minlength=m) + np.bincount(
        J, weights=w, minlength=m
    )


def pair_diff_apply(U, I, J, w):
    """Weighted row differences w_l * (U[i_l] - U[j_l]).

    U has one row per node, shape (m, d); the result has one row per pair,
    shape (P, d).
    """
    return (U[I] - U[J]) * w[:, None]


def pair_diff_apply_transpose(V, I, J, w, m):
    """Adjoint of pair_diff_apply: scatter-add pair rows back onto nodes."""
    d = V.shape[1]
    WV = V * w[:, None]
    out = np.empty((m, d))
    for r in range(d):
        out[:, r] = np.bincount(I, weights=WV[:, r], minlength=m)
        out[:, r] -= np.bincount(J, weights=WV[:, r], minlength=m)
    return out


def _median3(a):
    # median of first, middle, last entry; cheap deterministic pivot
    x, y, z = a[0], a[len(a) // 2], a[-1]
    if x > y:
        x, y = y, x
    return min(y, max(x, z))


def l1_ball_threshold(mag, radius):
    """Soft-threshold level lam solving sum(max(mag - lam, 0)) = radius.

    Expected linear time: pivot-partition search over candidate magnitudes,
    no full sort. Caller guarantees sum(mag) > radius >= 0 and mag >= 0.
    """
    seg = np.asarray(mag, dtype=np.float64)
    s = 0.0
    rho = 0
    while seg.size:
        xi = _median3(seg)
        ge = seg >= xi
        ds = float(seg[ge].sum())
        dr = int(ge.sum())
        if (s + ds) - (rho + dr) * xi < radius:
            # everything >= xi is above the threshold
            s += ds
            rho += dr
            seg = seg[~ge]
        else:
            # threshold >= xi: discard one pivot instance, keep the rest
            g = seg[ge]
            drop = int(np.argmax(g == xi))
            seg = np.delete(g, drop)
    return (s - radius) / rho
