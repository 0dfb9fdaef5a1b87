"""Compare the compiled kernels against the NumPy fallback.

Usage: python benchmarks/bench_kernels.py [--repeats N]

Times the hot kernels on representative sizes and prints one table row per
(kernel, size) with both backends and the speedup. The compiled extension
must have been built (pip install -e .) for the comparison to be useful;
otherwise only the fallback column appears.
"""

import argparse
import time

import numpy as np

from proxdist._kern import _pykern

try:
    from proxdist._kern import _ckern
except ImportError:
    _ckern = None


def timeit(fn, repeats):
    fn()  # warm up (index caches, allocator)
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def cases(rng):
    out = []
    for m in (16, 32, 64):
        p = m * (m - 1) // 2
        rows = m * (m - 1) * (m - 2) // 2
        x = rng.standard_normal(p)
        y = rng.standard_normal(rows)
        out.append((f"triangle_apply m={m}",
                    lambda impl, m=m, x=x: impl.triangle_apply(m, x)))
        out.append((f"triangle_apply_t m={m}",
                    lambda impl, m=m, y=y: impl.triangle_apply_transpose(m, y)))
    for m in (64, 256):
        v = rng.standard_normal(m)
        w = rng.standard_normal(m * (m - 1) // 2)
        out.append((f"incidence m={m}",
                    lambda impl, m=m, v=v: impl.incidence_apply(m, v)))
        out.append((f"incidence_t m={m}",
                    lambda impl, m=m, w=w: impl.incidence_apply_transpose(m, w)))
    for n in (1000, 100000):
        mag = np.abs(rng.standard_normal(n))
        radius = 0.3 * mag.sum()
        out.append((f"l1_threshold n={n}",
                    lambda impl, mag=mag, radius=radius:
                    impl.l1_ball_threshold(mag.copy(), radius)))
    m, P, d = 300, 3000, 2
    I = rng.integers(0, m, size=P).astype(np.intp)
    J = ((I + 1 + rng.integers(0, m - 1, size=P)) % m).astype(np.intp)
    w = rng.random(P) + 0.1
    U = rng.standard_normal((m, d))
    V = rng.standard_normal((P, d))
    out.append((f"pair_diff m={m} P={P}",
                lambda impl: impl.pair_diff_apply(U, I, J, w)))
    out.append((f"pair_diff_t m={m} P={P}",
                lambda impl: impl.pair_diff_apply_transpose(V, I, J, w, m)))
    return out


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--repeats", type=int, default=7)
    args = parser.parse_args()
    rng = np.random.default_rng(0)
    rows = cases(rng)
    header = f"{'kernel':28s} {'numpy':>12s} {'compiled':>12s} {'speedup':>8s}"
    print(header)
    print("-" * len(header))
    for name, call in rows:
        t_py = timeit(lambda: call(_pykern), args.repeats)
        if _ckern is None:
            print(f"{name:28s} {t_py * 1e6:10.1f}us {'n/a':>12s} {'':>8s}")
            continue
        t_c = timeit(lambda: call(_ckern), args.repeats)
        print(f"{name:28s} {t_py * 1e6:10.1f}us {t_c * 1e6:10.1f}us "
              f"{t_py / t_c:7.1f}x")
        ref = call(_pykern)
        got = call(_ckern)
        np.testing.assert_allclose(got, ref, atol=1e-10)
    if _ckern is None:
        print("\ncompiled extension unavailable; showing fallback only")


if __name__ == "__main__":
    main()
