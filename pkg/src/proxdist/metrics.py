"""Clustering agreement and image quality metrics."""

import math

import numpy as np

from .errors import ContractViolationError


def _contingency(a, b):
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape or a.ndim != 1:
        raise ContractViolationError("label vectors must share one length")
    _, ai = np.unique(a, return_inverse=True)
    _, bi = np.unique(b, return_inverse=True)
    nb = bi.max() + 1
    counts = np.bincount(ai * nb + bi, minlength=(ai.max() + 1) * nb)
    return counts.reshape(ai.max() + 1, nb).astype(np.float64)


def _comb2(x):
    return x * (x - 1.0) / 2.0


def adjusted_rand_index(a, b):
    """Pair-counting agreement with expected-index correction, in [-1, 1]."""
    table = _contingency(a, b)
    n = table.sum()
    sum_ij = _comb2(table).sum()
    sum_a = _comb2(table.sum(axis=1)).sum()
    sum_b = _comb2(table.sum(axis=0)).sum()
    expected = sum_a * sum_b / _comb2(n)
    maximum = 0.5 * (sum_a + sum_b)
    if maximum == expected:
        # both partitions degenerate in the same way (all-singletons or
        # single-cluster on both sides): identical partitions by convention
        return 1.0
    return float((sum_ij - expected) / (maximum - expected))


def _entropy(p):
    p = p[p > 0]
    return float(-(p * np.log(p)).sum())


def normalized_mutual_information(a, b):
    """MI normalized by sqrt(H(a) H(b)), in [0, 1]."""
    table = _contingency(a, b)
    n = table.sum()
    pa = table.sum(axis=1) / n
    pb = table.sum(axis=0) / n
    ha, hb = _entropy(pa), _entropy(pb)
    if ha == 0.0 or hb == 0.0:
        # a constant labeling carries no information: identical partitions
        # score 1, anything else 0
        same = ha == hb == 0.0 or np.array_equal(
            np.unique(a, return_inverse=True)[1],
            np.unique(b, return_inverse=True)[1],
        )
        return 1.0 if same else 0.0
    pj = table / n
    outer = np.outer(pa, pb)
    mask = pj > 0
    mi = float((pj[mask] * np.log(pj[mask] / outer[mask])).sum())
    return float(mi / math.sqrt(ha * hb))


def mse(a, b):
    """Mean squared difference of two equally shaped images."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ContractViolationError("images must share a shape")
    return float(np.mean((a - b) ** 2))


def psnr(a, b, peak=1.0):
    """Peak signal-to-noise ratio in dB; +inf for identical images."""
    if peak <= 0:
        raise ContractViolationError("peak must be positive")
    err = mse(a, b)
    if err == 0.0:
        return math.inf
    return float(10.0 * math.log10(peak * peak / err))
