"""Command-line frontend: data ingestion, run orchestration, outputs.

Every run writes a trace CSV and a summary JSON (schema 1); problem
subcommands add their natural artifact (solution CSV, labels CSV, or PGM
image). Exit codes: 0 success, 1 malformed input, 2 solver failure.
"""

import argparse
import json
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from . import engine, fileio, metrics, problems, selftest
from .errors import ContractViolationError, SolverFailureError

# Per-problem control-parameter defaults (tolerances, schedule, caps, solver).
DEFAULTS = {
    "metric": dict(delta_h=1e-3, delta_d=1e-2, delta_q=1e-6, multiplier=1.2,
                   rho_max=1e8, i_outer=200, i_inner=10**5, solver="mm"),
    "cvxreg": dict(delta_h=1e-3, delta_d=1e-2, delta_q=1e-6, multiplier=1.2,
                   rho_max=1e8, i_outer=200, i_inner=10**4, solver="mm"),
    "cluster": dict(delta_h=1e-2, delta_d=1e-5, delta_q=1e-6, multiplier=1.2,
                    rho_max=1e8, i_outer=100, i_inner=10**4, solver="mm"),
    "denoise": dict(delta_h=1e-1, delta_d=1e-1, delta_q=1e-6, multiplier=1.5,
                    rho_max=1e8, i_outer=100, i_inner=10**4, solver="sd"),
    "condnum": dict(delta_h=1e-3, delta_d=1e-2, delta_q=1e-6, multiplier=1.2,
                    rho_max=1e8, i_outer=200, i_inner=10**4, solver="mm"),
}


@dataclass
class RunConfig:
    problem: str
    solver: str
    linear_solver: Optional[str]
    delta_h: float
    delta_d: float
    delta_q: float
    multiplier: float
    rho_max: float
    i_outer: int
    i_inner: int
    i_nesterov: int
    seed: int
    use_acceleration: bool

    def stopping(self):
        return engine.StoppingConfig(
            delta_h=self.delta_h, delta_d=self.delta_d, delta_q=self.delta_q,
            i_outer=self.i_outer, i_inner=self.i_inner,
            i_nesterov=self.i_nesterov,
        )

    def schedule(self):
        return engine.AnnealingSchedule(self.multiplier, self.rho_max)


def _add_common(sub, problem):
    d = DEFAULTS[problem]
    sub.add_argument("--solver", choices=engine.SOLVERS, default=d["solver"])
    sub.add_argument("--linear-solver", choices=["cg", "lsqr", "exact"],
                     default=None,
                     help="default: exact inverse when available, else cg")
    sub.add_argument("--delta-h", type=float, default=d["delta_h"])
    sub.add_argument("--delta-d", type=float, default=d["delta_d"])
    sub.add_argument("--delta-q", type=float, default=d["delta_q"])
    sub.add_argument("--rho-multiplier", type=float, default=d["multiplier"])
    sub.add_argument("--rho-max", type=float, default=d["rho_max"])
    sub.add_argument("--i-outer", type=int, default=d["i_outer"])
    sub.add_argument("--i-inner", type=int, default=d["i_inner"])
    sub.add_argument("--i-nesterov", type=int, default=10)
    sub.add_argument("--no-acceleration", action="store_true")
    sub.add_argument("--seed", type=int, default=0)
    sub.add_argument("--replicates", type=int, default=1)
    sub.add_argument("--output-dir", default=".")
    sub.add_argument("--prefix", default=None,
                     help="output filename prefix (default: the subcommand)")


def config_from_args(args):
    return RunConfig(
        problem=args.command,
        solver=args.solver,
        linear_solver=args.linear_solver,
        delta_h=args.delta_h,
        delta_d=args.delta_d,
        delta_q=args.delta_q,
        multiplier=args.rho_multiplier,
        rho_max=args.rho_max,
        i_outer=args.i_outer,
        i_inner=args.i_inner,
        i_nesterov=args.i_nesterov,
        seed=args.seed,
        use_acceleration=not args.no_acceleration,
    )


def build_parser():
    parser = argparse.ArgumentParser(
        prog="proxdist",
        description="Proximal distance solvers for fusion-constrained problems",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("metric", help="metric projection of dissimilarities")
    p.add_argument("--input", help="m x m dissimilarity CSV")
    p.add_argument("--weights", help="m x m weight CSV")
    p.add_argument("--synthetic", action="store_true",
                   help="uniform [0,10] dissimilarities")
    p.add_argument("--m", type=int, default=16)
    _add_common(p, "metric")

    p = sub.add_parser("cvxreg", help="convex regression")
    p.add_argument("--input", help="d x m predictor CSV")
    p.add_argument("--response", help="response CSV (single row or column)")
    p.add_argument("--synthetic", action="store_true",
                   help="y = |x|^2 + N(0, 0.1) on uniform [-1,1]^d")
    p.add_argument("--m", type=int, default=50)
    p.add_argument("--d", type=int, default=1)
    _add_common(p, "cvxreg")

    p = sub.add_parser("cluster", help="convex clustering path")
    p.add_argument("--input", help="d x m data CSV")
    p.add_argument("--truth", help="ground-truth labels CSV (optional)")
    p.add_argument("--synthetic", choices=["gauss3", "spiral"],
                   help="generated dataset")
    p.add_argument("--m", type=int, default=60)
    p.add_argument("--knn", type=int, default=10,
                   help="neighbors for the weight graph")
    p.add_argument("--phi", type=float, default=3.0,
                   help="Gaussian kernel sharpness")
    p.add_argument("--k", type=int, default=None,
                   help="solve a single sparsity budget instead of the path")
    p.add_argument("--s0", type=float, default=0.0)
    p.add_argument("--s-step", type=float, default=0.05)
    _add_common(p, "cluster")

    p = sub.add_parser("denoise", help="total-variation image denoising")
    p.add_argument("--input", help="noisy PGM image")
    p.add_argument("--reference", help="clean PGM for MSE/PSNR reporting")
    p.add_argument("--synthetic", action="store_true",
                   help="piecewise-constant image plus Gaussian noise")
    p.add_argument("--size", type=int, default=64)
    p.add_argument("--noise", type=float, default=0.2)
    p.add_argument("--s", type=float, default=None,
                   help="single TV-reduction level instead of the 0..0.9 path")
    p.add_argument("--save-images", action="store_true",
                   help="write a PGM per path level (default: last level only)")
    _add_common(p, "denoise")

    p = sub.add_parser("condnum", help="condition-number projection")
    p.add_argument("--sigma", help="singular values CSV (row or column)")
    p.add_argument("--matrix", help="matrix CSV (small; SVD computed here)")
    p.add_argument("--synthetic", action="store_true",
                   help="random descending spectrum")
    p.add_argument("--p", type=int, default=10)
    p.add_argument("--cond", type=float, default=100.0,
                   help="condition number of the synthetic spectrum")
    p.add_argument("--c", type=float, default=None, help="condition bound")
    p.add_argument("--a", type=float, default=None,
                   help="reduction factor: c = cond(sigma)/a")
    _add_common(p, "condnum")

    sub.add_parser("selftest", help="run the built-in invariant checks")
    return parser


# ---------------------------------------------------------------------------
# synthetic data


def synthetic_metric(m, rng):
    Y = np.zeros((m, m))
    iu = np.triu_indices(m, 1)
    Y[iu] = rng.uniform(0.0, 10.0, size=len(iu[0]))
    return Y + Y.T


def synthetic_cvxreg(m, d, rng):
    X = rng.uniform(-1.0, 1.0, size=(d, m))
    y = (X**2).sum(axis=0) + rng.normal(0.0, np.sqrt(0.1), size=m)
    return X, y


def synthetic_gauss3(m, rng):
    means = np.array([[0.0, 0.0], [2.0, 2.0], [1.8, 0.5]])
    fractions = np.array([150, 50, 100]) / 300.0
    sizes = np.floor(fractions * m).astype(int)
    sizes[0] += m - sizes.sum()
    X, labels = [], []
    for c, (mu, n) in enumerate(zip(means, sizes)):
        X.append(mu[:, None] + 0.1 * rng.standard_normal((2, n)))
        labels += [c] * n
    return np.concatenate(X, axis=1), np.array(labels)

def synthetic_spiral(m, rng):
    half = m // 2
    sizes = (half, m - half)
    X, labels = [], []
    for c, n in enumerate(sizes):
        t = np.sqrt(rng.uniform(0.25, 1.0, size=n))
        angle = 4.0 * np.pi * t + np.pi * c
        arm = np.vstack([t * np.cos(angle), t * np.sin(angle)])
        X.append(arm + 0.02 * rng.standard_normal((2, n)))
        labels += [c] * n
    return np.concatenate(X, axis=1), np.array(labels)


def synthetic_image(n):
    img = np.empty((n, n))
    h = n // 2
    img[:h, :h] = 0.25
    img[h:, :h] = 0.75
    img[:h, h:] = 0.5
    img[h:, h:] = 1.0
    return img


def synthetic_sigma(p, cond, rng):
    u = np.sort(rng.random(p))[::-1]
    lo, hi = 0.1, 0.1 * cond
    span = u.max() - u.min()
    return lo + (u - u.min()) / span * (hi - lo)


# ---------------------------------------------------------------------------
# running and reporting


def _write_summary(path, summary):
    with open(path, "w", encoding="ascii") as fh:
        json.dump(summary, fh, sort_keys=True, indent=2)
        fh.write("\n")


def _result_fields(result):
    return {
        "loss": result.loss,
        "distance": result.distance,
        "gradient_norm": result.gradient_norm,
        "outer_iterations": result.outer_iterations,
        "inner_iterations": result.inner_iterations,
        "rho_final": result.rho_final,
        "stop_reason": result.stop_reason,
    }


def _run_problem(problem, config):
    return engine.run_annealing(
        problem,
        config.schedule(),
        config.stopping(),
        solver=config.solver,
        use_acceleration=config.use_acceleration,
        linear_solver=config.linear_solver,
    )


def _with_replicates(n, seed, build_and_run):
    """Run seeds seed..seed+n-1 (threads when n > 1); keep submission order."""
    seeds = [seed + i for i in range(max(1, n))]
    if len(seeds) == 1:
        return [build_and_run(seeds[0])]
    with ThreadPoolExecutor(max_workers=min(8, len(seeds))) as pool:
        return list(pool.map(build_and_run, seeds))


def _finish(args, config, summary, started):
    outdir = Path(args.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    prefix = args.prefix if args.prefix is not None else args.command
    summary["schema"] = 1
    summary["problem"] = config.problem
    summary["solver"] = config.solver
    summary["seed"] = config.seed
    summary["config"] = {
        k: v for k, v in asdict(config).items() if k not in ("problem", "solver")
    }
    summary["wall_time_s"] = time.perf_counter() - started
    _write_summary(outdir / f"{prefix}_summary.json", summary)
    print(json.dumps(summary, sort_keys=True))
    return outdir, prefix


def cmd_metric(args):
    started = time.perf_counter()
    config = config_from_args(args)

    def one(seed):
        rng = np.random.default_rng(seed)
        if args.synthetic or args.input is None:
            Y = synthetic_metric(args.m, rng)
            W = None
        else:
            Y = fileio.read_matrix_csv(args.input)
            W = fileio.read_matrix_csv(args.weights) if args.weights else None
        problem = problems.build_metric(Y, W)
        result = _run_problem(problem, config)
        return problem, result

    runs = _with_replicates(args.replicates, config.seed, one)
    problem, result = runs[0]
    summary = _result_fields(result)
    if len(runs) > 1:
        summary["replicates"] = [_result_fields(r) for _, r in runs]
    outdir, prefix = _finish(args, config, summary, started)
    result.trace.to_csv(outdir / f"{prefix}_trace.csv")
    fileio.write_matrix_csv(outdir / f"{prefix}_solution.csv",
                            problems.untrivec(result.x))
    return 0


def cmd_cvxreg(args):
    started = time.perf_counter()
    config = config_from_args(args)

    def one(seed):
        rng = np.random.default_rng(seed)
        if args.synthetic or args.input is None:
            X, y = synthetic_cvxreg(args.m, args.d, rng)
        else:
            X = fileio.read_matrix_csv(args.input)
            y = fileio.read_matrix_csv(args.response).ravel()
        problem = problems.build_cvxreg(X, y)
        result = _run_problem(problem, config)
        return problem, result

    runs = _with_replicates(args.replicates, config.seed, one)
    problem, result = runs[0]
    theta, Xi = problems.cvxreg_split(problem, result.x)
    summary = _result_fields(result)
    summary["max_constraint_violation"] = float(
        np.maximum(problem.operator.apply(result.x), 0.0).max()
    )
    if len(runs) > 1:
        summary["replicates"] = [_result_fields(r) for _, r in runs]
    outdir, prefix = _finish(args, config, summary, started)
    result.trace.to_csv(outdir / f"{prefix}_trace.csv")
    fileio.write_matrix_csv(outdir / f"{prefix}_solution.csv",
                            np.vstack([theta, Xi]))
    return 0


def cmd_cluster(args):
    started = time.perf_counter()
    config = config_from_args(args)
    rng = np.random.default_rng(config.seed)
    truth = None
    if args.synthetic == "gauss3":
        X, truth = synthetic_gauss3(args.m, rng)
    elif args.synthetic == "spiral":
        X, truth = synthetic_spiral(args.m, rng)
    elif args.input:
        X = fileio.read_matrix_csv(args.input)
        if args.truth:
            truth = fileio.read_matrix_csv(args.truth).ravel().astype(int)
    else:
        raise ContractViolationError("cluster: need --input or --synthetic")
    weights = problems.knn_gaussian_weights(X, args.knn, args.phi)

    summary = {}
    if args.k is not None:
        problem = problems.build_clustering(X, weights, args.k)
        result = _run_problem(problem, config)
        U = result.x.reshape(X.shape, order="F")
        labels = problems.cluster_labels(U, problems.coalescence_tolerance(X))
        entries = [problems.ClusterPathEntry(
            s=1.0 - args.k / problem.operator.num_pairs, k=args.k, U=U,
            labels=labels, loss=result.loss, distance=result.distance)]
        summary.update(_result_fields(result))
    else:
        path = problems.cvxclusterpath(
            X, weights, s0=args.s0, s_step=args.s_step,
            schedule=config.schedule(), config=config.stopping(),
            solver=config.solver, use_acceleration=config.use_acceleration,
            linear_solver=config.linear_solver,
        )
        entries = path.entries
    per_level = []
    for e in entries:
        row = {
            "s": e.s, "k": e.k, "clusters": int(e.labels.max()) + 1,
            "loss": e.loss, "distance": e.distance,
        }
        if truth is not None:
            row["ari"] = metrics.adjusted_rand_index(truth, e.labels)
            row["nmi"] = metrics.normalized_mutual_information(truth, e.labels)
        per_level.append(row)
    summary["path"] = per_level
    if truth is not None:
        summary["best_ari"] = max(r["ari"] for r in per_level)
    outdir, prefix = _finish(args, config, summary, started)
    label_rows = np.vstack([
        np.concatenate([[e.s], e.labels]) for e in entries
    ])
    fileio.write_matrix_csv(outdir / f"{prefix}_labels.csv", label_rows)
    best = max(
        entries,
        key=lambda e: (metrics.adjusted_rand_index(truth, e.labels)
                       if truth is not None else -e.s),
    )
    fileio.write_matrix_csv(outdir / f"{prefix}_centroids.csv", best.U)
    return 0


def cmd_denoise(args):
    started = time.perf_counter()
    config = config_from_args(args)
    rng = np.random.default_rng(config.seed)
    reference = None
    if args.synthetic or args.input is None:
        clean = synthetic_image(args.size)
        noisy = clean + rng.normal(0.0, args.noise, size=clean.shape)
        reference = clean
    else:
        noisy, _ = fileio.read_pgm(args.input)
    if args.reference:
        reference, _ = fileio.read_pgm(args.reference)
    levels = [args.s] if args.s is not None else None
    results = problems.denoise_path(
        noisy, levels=levels, schedule=config.schedule(),
        config=config.stopping(), solver=config.solver, reference=reference,
        use_acceleration=config.use_acceleration,
        linear_solver=config.linear_solver,
    )
    summary = {
        "tv_input": problems.tv1_norm(noisy),
        "path": [
            {"s": r.s, "gamma": r.gamma, "tv": r.tv, "mse": r.mse,
             "psnr": (None if r.psnr is None or not np.isfinite(r.psnr)
                      else r.psnr)}
            for r in results
        ],
    }
    if reference is not None:
        summary["psnr_noisy"] = metrics.psnr(reference, noisy)
    outdir, prefix = _finish(args, config, summary, started)
    keep = results if args.save_images else results[-1:]
    for r in keep:
        fileio.write_pgm(outdir / f"{prefix}_s{int(round(100 * r.s)):02d}.pgm",
                         r.image)
    return 0


def cmd_condnum(args):
    started = time.perf_counter()
    config = config_from_args(args)

    def one(seed):
        rng = np.random.default_rng(seed)
        if args.sigma:
            sigma = np.sort(fileio.read_matrix_csv(args.sigma).ravel())[::-1]
        elif args.matrix:
            sigma = problems.singular_values(fileio.read_matrix_csv(args.matrix))
        else:
            sigma = synthetic_sigma(args.p, args.cond, rng)
        cond_in = float(sigma[0] / sigma[-1]) if sigma[-1] > 0 else float("inf")
        if args.c is not None:
            c = args.c
        elif args.a is not None:
            c = cond_in / args.a
        else:
            c = cond_in / 2.0
        problem = problems.build_condnum(sigma, c)
        return cond_in, c, _run_problem(problem, config)

    runs = _with_replicates(args.replicates, config.seed, one)
    cond_in, c, result = runs[0]
    x = result.x
    summary = _result_fields(result)
    summary["cond_input"] = cond_in
    summary["cond_bound"] = c
    summary["cond_output"] = float(x.max() / x.min()) if x.min() > 0 else None
    if len(runs) > 1:
        summary["replicates"] = [_result_fields(r) for _, _, r in runs]
    outdir, prefix = _finish(args, config, summary, started)
    result.trace.to_csv(outdir / f"{prefix}_trace.csv")
    fileio.write_matrix_csv(outdir / f"{prefix}_solution.csv", x[None, :])
    return 0


COMMANDS = {
    "metric": cmd_metric,
    "cvxreg": cmd_cvxreg,
    "cluster": cmd_cluster,
    "denoise": cmd_denoise,
    "condnum": cmd_condnum,
}


def parse_and_run(argv):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "selftest":
        return 0 if selftest.run_all() else 1
    try:
        return COMMANDS[args.command](args)
    except (ContractViolationError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except SolverFailureError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return 2


def main():
    sys.exit(parse_and_run(sys.argv[1:]))


if __name__ == "__main__":
    main()
