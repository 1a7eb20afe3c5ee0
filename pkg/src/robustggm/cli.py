"""Command-line interface: data simulation, estimator dispatch, metric
evaluation, and replicated benchmarks.

Every command is deterministic given its flags and seed, and every
output carries a config echo sufficient to reproduce it.  Exit codes:
0 success, 1 input/config error, 2 soft estimation failure (results are
still written).  The environment variable ``RGGM_THREADS`` caps the
worker processes `bench` fans replicates across.
"""

from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import baselines, fileio, gamma_mm, glasso, metrics, simgen
from .errors import InputError, RobustGgmError
from .gamma_mm import FitResult
from .objective import ModelParams, RobustConfig

ESTIMATORS = ("gamma", "glasso", "tlasso", "npn")


def _progress(args, msg: str) -> None:
    if not getattr(args, "quiet", False):
        print(msg, file=sys.stderr)


def _parse_grid(text: str) -> tuple[int, float]:
    if text == "default":
        return 10, 0.2
    try:
        k_str, d_str = text.split(",")
        k, d = int(k_str), float(d_str)
    except ValueError:
        raise InputError(f"bad --lambda-grid {text!r}; use 'default' or 'K,DELTA'")
    if k < 2 or not 0.0 < d < 1.0:
        raise InputError("grid needs K >= 2 and 0 < DELTA < 1")
    return k, d


# --- estimator dispatch ----------------------------------------------------

def fit_single(estimator, X, *, gamma, lam, nu, delta_n, tol, max_iter) -> FitResult:
    if estimator in ("gamma", "glasso"):
        g = gamma if estimator == "gamma" else 0.0
        return gamma_mm.fit(
            X, RobustConfig(gamma=g, lam=lam), tol=tol, max_iter=max_iter
        )
    if estimator == "tlasso":
        return baselines.fit_tlasso(
            X, baselines.TlassoConfig(nu=nu, lam=lam, max_iter=max_iter)
        )
    if estimator == "npn":
        return baselines.fit_nonparanormal(
            X, baselines.NpnConfig(delta_n=delta_n, lam=lam)
        )
    raise InputError(f"unknown estimator {estimator!r}")


def _npn_path(X, delta_n, lambdas):
    Z = baselines.npn_transform(X, baselines.NpnConfig(delta_n=delta_n))
    fits, statuses = [], []
    prev = None
    for lam in lambdas:
        cfg = baselines.NpnConfig(delta_n=delta_n, lam=float(lam))
        try:
            if prev is None:
                res = baselines.fit_nonparanormal(X, cfg)
            else:  # reuse the transform; warm-start the solver
                n = Z.shape[0]
                mu = Z.mean(axis=0)
                d = Z - mu
                s = (d.T @ d) / n
                s = (s + s.T) / 2.0
                sol = glasso.solve(
                    glasso.GlassoProblem(s=s, lam=float(lam)), init=prev
                )
                res = FitResult(
                    theta=ModelParams(mu=mu, omega=sol.omega),
                    weights=np.full(n, 1.0 / n),
                    objective_trace=(
                        glasso.glasso_objective(
                            sol.omega, glasso.GlassoProblem(s=s, lam=float(lam))
                        ),
                    ),
                    converged=True,
                    mm_iterations=sol.iterations,
                    config=RobustConfig(gamma=0.0, lam=float(lam)),
                )
            fits.append(res)
            statuses.append("ok")
            prev = res.theta.omega
        except RobustGgmError as exc:
            fits.append(None)
            statuses.append(f"error: {exc}")
    return fits, statuses


def fit_path(estimator, X, *, gamma, nu, delta_n, K, delta, tol, max_iter):
    """Warm-started decreasing-penalty path for any estimator.

    Returns (lambdas, fits, statuses).  The gamma/glasso grid anchors at
    the estimator's own lambda_max; tlasso and npn anchor at the uniform
    -weight (gamma = 0) lambda_max of the (transformed) data.
    """
    if estimator in ("gamma", "glasso"):
        g = gamma if estimator == "gamma" else 0.0
        path = gamma_mm.solution_path(X, g, K=K, delta=delta, tol=tol, max_iter=max_iter)
        return path.lambdas, list(path.fits), list(path.statuses)
    if estimator == "tlasso":
        theta0, lam1 = baselines.tlasso_diagonal_start(X, nu)
        lambdas = lam1 * delta ** (np.arange(K) / (K - 1))
        fits, statuses = [], []
        theta = theta0
        for lam in lambdas:
            cfg = baselines.TlassoConfig(nu=nu, lam=float(lam), max_iter=max_iter)
            try:
                res = baselines.fit_tlasso(X, cfg, init=theta)
                fits.append(res)
                statuses.append("ok" if res.converged else "max_iter")
                theta = res.theta
            except RobustGgmError as exc:
                fits.append(None)
                statuses.append(f"error: {exc}")
        return lambdas, fits, statuses
    if estimator == "npn":
        Z = baselines.npn_transform(X, baselines.NpnConfig(delta_n=delta_n))
        n, p = Z.shape
        d = Z - Z.mean(axis=0)
        s = (d.T @ d) / n
        off = ~np.eye(p, dtype=bool)
        lam1 = float(np.max(np.abs(s[off])))
        lambdas = lam1 * delta ** (np.arange(K) / (K - 1))
        fits, statuses = _npn_path(X, delta_n, lambdas)
        return lambdas, fits, statuses
    raise InputError(f"unknown estimator {estimator!r}")


# --- artifact serialization ------------------------------------------------

def _fit_record(lam, res: FitResult | None, status: str) -> dict:
    rec = {"lambda": float(lam), "status": status}
    if res is None:
        return rec
    est = metrics.edge_set(res.theta.omega)
    rec.update(
        {
            "mu": res.theta.mu,
            "omega": res.theta.omega,
            "edges": [list(e) for e in sorted(est.edges)],
            "nnz": 2 * len(est),
            "weights": res.weights,
            "objective_trace": list(res.objective_trace),
            "converged": bool(res.converged),
            "mm_iterations": int(res.mm_iterations),
        }
    )
    return rec


def _write_fit_artifacts(outdir: Path, config: dict, lambdas, fits, statuses, grid: bool):
    records = [
        _fit_record(lam, res, status)
        for lam, res, status in zip(lambdas, fits, statuses)
    ]
    final = next(
        (r for r in reversed(records) if "omega" in r),
        None,
    )
    doc = {"config": config, "fits": records}
    if final is not None:
        for key in (
            "mu", "omega", "edges", "weights", "objective_trace", "converged",
        ):
            doc[key] = final[key]
    fileio.write_json(outdir / "fit.json", doc)
    if grid:
        rows = []
        for rec in records:
            rows.append(
                (
                    rec["lambda"],
                    rec.get("nnz", -1),
                    rec["objective_trace"][-1] if "objective_trace" in rec else 0.0,
                    fileio.edge_hash(rec.get("edges", [])),
                )
            )
        fileio.write_tsv(
            outdir / "path.tsv", ["lambda", "nnz", "objective", "edge_hash"], rows
        )


# --- subcommands -----------------------------------------------------------

def run_simulate(args) -> int:
    spec = simgen.SimSpec(
        p=args.p, n=args.n, model=args.model, epsilon=args.epsilon,
        eta=args.eta, ba_m=args.m, seed=args.seed,
    )
    X, labels, truth = simgen.generate(spec)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    fileio.write_csv(outdir / "data.csv", X)
    fileio.write_json(
        outdir / "truth.json",
        {
            "config": {
                "command": "simulate", "p": spec.p, "n": spec.n,
                "model": spec.model, "epsilon": spec.epsilon, "eta": spec.eta,
                "m": spec.ba_m, "seed": spec.seed,
            },
            "p": spec.p,
            "omega": truth.omega,
            "edges": [list(e) for e in sorted(truth.adjacency.edges)],
            "labels": [bool(b) for b in labels],
        },
    )
    _progress(args, f"wrote {outdir / 'data.csv'} and {outdir / 'truth.json'}")
    return 0


def run_fit(args) -> int:
    X = fileio.read_csv(args.input)
    if args.normalize != "none":
        X = metrics.normalize(X, args.normalize)
    if args.estimator not in ESTIMATORS:
        raise InputError(f"unknown estimator {args.estimator!r}")
    if args.gamma < 0 or args.nu <= 0:
        raise InputError("gamma must be >= 0 and nu > 0")
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    config = {
        "command": "fit", "estimator": args.estimator, "input": str(args.input),
        "normalize": args.normalize, "gamma": args.gamma, "nu": args.nu,
        "delta_n": args.delta_n, "seed": args.seed, "tol": args.tol,
        "max_iter": args.max_iter,
    }
    delta_n = args.delta_n if args.delta_n == "auto" else float(args.delta_n)
    soft_failure = False
    if args.lambda_grid is not None:
        K, delta = _parse_grid(args.lambda_grid)
        config["lambda_grid"] = {"K": K, "delta": delta}
        lambdas, fits, statuses = fit_path(
            args.estimator, X, gamma=args.gamma, nu=args.nu, delta_n=delta_n,
            K=K, delta=delta, tol=args.tol, max_iter=args.max_iter,
        )
        config["lambdas"] = [float(v) for v in lambdas]
        _write_fit_artifacts(outdir, config, lambdas, fits, statuses, grid=True)
        soft_failure = any(s != "ok" for s in statuses)
    else:
        if args.lam is None:
            raise InputError("provide --lambda or --lambda-grid")
        if args.lam < 0:
            raise InputError("lambda must be >= 0")
        config["lambda"] = args.lam
        try:
            res = fit_single(
                args.estimator, X, gamma=args.gamma, lam=args.lam, nu=args.nu,
                delta_n=delta_n, tol=args.tol, max_iter=args.max_iter,
            )
            status = "ok" if res.converged else "max_iter"
        except RobustGgmError as exc:
            res, status = None, f"error: {exc}"
        _write_fit_artifacts(
            outdir, config, [args.lam], [res], [status], grid=False
        )
        soft_failure = status != "ok"
    _progress(args, f"wrote {outdir / 'fit.json'}")
    return 2 if soft_failure else 0


def _load_fit(path) -> dict:
    path = Path(path)
    if not path.exists():
        raise InputError(f"fit artifact not found: {path}")
    import json

    try:
        return json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: bad JSON ({exc})")


def _edges_from_lists(p: int, pairs) -> metrics.EdgeSet:
    return metrics.EdgeSet(p=p, edges=frozenset((int(i), int(j)) for i, j in pairs))


def run_evaluate(args) -> int:
    doc = _load_fit(args.fit)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    report = {"config": {"command": "evaluate", "fit": str(args.fit)}}
    if args.truth:
        truth_doc = _load_fit(args.truth)
        report["config"]["truth"] = str(args.truth)
        p = int(truth_doc["p"])
        truth_omega = np.asarray(truth_doc["omega"], dtype=float)
        truth_edges = _edges_from_lists(p, truth_doc["edges"])
        per_lambda = []
        for rec in doc["fits"]:
            if "omega" not in rec:
                continue
            omega = np.asarray(rec["omega"], dtype=float)
            if omega.shape != truth_omega.shape:
                raise InputError(
                    f"fit p={omega.shape[0]} does not match truth p={p}"
                )
            est = _edges_from_lists(p, rec["edges"])
            per_lambda.append(
                {
                    "lambda": rec["lambda"],
                    "nnz": rec["nnz"],
                    "tpr": (
                        len(est.edges & truth_edges.edges) / len(truth_edges)
                        if len(truth_edges)
                        else 0.0
                    ),
                    "mse_offdiag": metrics.mse_offdiag(omega, truth_omega),
                }
            )
        report["per_lambda"] = per_lambda
    if args.fit_b:
        doc_b = _load_fit(args.fit_b)
        report["config"]["fit_b"] = str(args.fit_b)
        if "edges" not in doc or "edges" not in doc_b:
            raise InputError("both fits need a final estimate to compare")
        p_a = len(doc["mu"])
        p_b = len(doc_b["mu"])
        if p_a != p_b:
            raise InputError(f"fit p={p_a} does not match fit-b p={p_b}")
        a = _edges_from_lists(p_a, doc["edges"])
        b = _edges_from_lists(p_b, doc_b["edges"])
        report["total_agreement"] = metrics.total_agreement(a, b)
        report["common_edges"] = metrics.common_edges(a, b)
    if "per_lambda" not in report and "total_agreement" not in report:
        raise InputError("provide --truth and/or --fit-b")
    fileio.write_json(outdir / "metrics.json", report)
    _progress(args, f"wrote {outdir / 'metrics.json'}")
    return 0


# --- bench -----------------------------------------------------------------

def _bench_replicate(task: dict) -> dict:
    """One replicate: simulate, fit every estimator on the same data,
    evaluate against the truth.  Pure function of the task dict."""
    spec = simgen.SimSpec(**task["spec"])
    X, labels, truth = simgen.generate(spec)
    if task["normalize"] != "none":
        X = metrics.normalize(X, task["normalize"])
    truth_edges = truth.adjacency
    out = {"replicate": task["replicate"], "seed": spec.seed, "estimators": {}}
    for est in task["estimators"]:
        try:
            lambdas, fits, statuses = fit_path(
                est, X, gamma=task["gamma"], nu=task["nu"], delta_n="auto",
                K=task["K"], delta=task["delta"], tol=task["tol"],
                max_iter=task["max_iter"],
            )
        except RobustGgmError as exc:
            out["estimators"][est] = {"error": str(exc), "points": []}
            continue
        points = []
        for lam, res, status in zip(lambdas, fits, statuses):
            if res is None:
                points.append({"lambda": float(lam), "status": status})
                continue
            e = metrics.edge_set(res.theta.omega)
            points.append(
                {
                    "lambda": float(lam),
                    "status": status,
                    "nnz": 2 * len(e),
                    "tpr": len(e.edges & truth_edges.edges) / max(len(truth_edges), 1),
                    "mse_offdiag": metrics.mse_offdiag(res.theta.omega, truth.omega),
                }
            )
        out["estimators"][est] = {"points": points}
    return out


def step_mean_curves(results: list, estimators: list) -> tuple[list, dict]:
    """Carry-forward interpolation of per-replicate (nnz, tpr) curves
    onto the union grid of observed nnz values, then the mean over
    replicates per estimator.  Returns (grid, {estimator: mean tprs})."""
    grid = sorted(
        {
            pt["nnz"]
            for rep in results
            for est in estimators
            for pt in rep["estimators"][est]["points"]
            if "nnz" in pt
        }
    )
    means = {}
    for est in estimators:
        curves = []
        for rep in results:
            pts = sorted(
                (pt["nnz"], pt["tpr"])
                for pt in rep["estimators"][est]["points"]
                if "nnz" in pt
            )
            best = {}
            for nnz, tpr in pts:
                best[nnz] = max(best.get(nnz, 0.0), tpr)
            xs = sorted(best)
            curve = []
            for g in grid:
                level = 0.0
                for x in xs:
                    if x <= g:
                        level = best[x]
                    else:
                        break
                curve.append(level)
            curves.append(curve)
        means[est] = (
            np.mean(np.asarray(curves), axis=0).tolist() if curves else []
        )
    return grid, means


def min_mse_table(results: list, estimators: list) -> list:
    rows = []
    for rep in results:
        row = [rep["replicate"]]
        for est in estimators:
            vals = [
                pt["mse_offdiag"]
                for pt in rep["estimators"][est]["points"]
                if "mse_offdiag" in pt
            ]
            row.append(min(vals) if vals else float("inf"))
        rows.append(row)
    return rows


def run_bench(args) -> int:
    estimators = [e.strip() for e in args.estimators.split(",") if e.strip()]
    for est in estimators:
        if est not in ESTIMATORS:
            raise InputError(f"unknown estimator {est!r}")
    if args.replicates < 1:
        raise InputError("need at least one replicate")
    K, delta = _parse_grid(args.lambda_grid)
    tasks = []
    for r in range(args.replicates):
        tasks.append(
            {
                "replicate": r,
                "spec": {
                    "p": args.p, "n": args.n, "model": args.model,
                    "epsilon": args.epsilon, "eta": args.eta, "ba_m": args.m,
                    "seed": simgen.replicate_seed(args.seed, r),
                },
                "estimators": estimators,
                "gamma": args.gamma, "nu": args.nu, "K": K, "delta": delta,
                "tol": args.tol, "max_iter": args.max_iter,
                "normalize": args.normalize,
            }
        )
    workers = int(os.environ.get("RGGM_THREADS", "0")) or (os.cpu_count() or 1)
    workers = max(1, min(workers, len(tasks)))
    if workers == 1:
        results = []
        for t in tasks:
            results.append(_bench_replicate(t))
            _progress(args, f"replicate {t['replicate'] + 1}/{len(tasks)} done")
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_bench_replicate, tasks))
        _progress(args, f"{len(tasks)} replicates done on {workers} workers")
    results.sort(key=lambda r: r["replicate"])

    grid, means = step_mean_curves(results, estimators)
    mse_rows = min_mse_table(results, estimators)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    config = {
        "command": "bench", "p": args.p, "n": args.n, "model": args.model,
        "epsilon": args.epsilon, "eta": args.eta, "m": args.m,
        "gamma": args.gamma, "nu": args.nu, "replicates": args.replicates,
        "seed": args.seed, "estimators": estimators,
        "lambda_grid": {"K": K, "delta": delta}, "normalize": args.normalize,
        "tol": args.tol, "max_iter": args.max_iter,
    }
    fileio.write_json(
        outdir / "bench.json",
        {
            "config": config,
            "metadata": {
                "roc_interpolation": (
                    "per replicate: sort points by nnz, keep max tpr per nnz, "
                    "carry forward onto the union nnz grid, 0 before the first "
                    "point; mean over replicates per grid value"
                ),
                "seed_rule": "replicate r uses SeedSequence([seed, r]); "
                "streams per purpose: graph=0, precision=1, samples=2",
            },
            "replicates": results,
            "roc_grid": grid,
            "roc_mean": means,
        },
    )
    fileio.write_tsv(
        outdir / "roc_mean.tsv",
        ["nnz"] + estimators,
        [
            [g] + [float(means[e][i]) for e in estimators]
            for i, g in enumerate(grid)
        ],
    )
    fileio.write_tsv(outdir / "mse_summary.tsv", ["replicate"] + estimators, mse_rows)
    _progress(args, f"wrote {outdir / 'bench.json'}")
    failed = any(
        "error" in rep["estimators"][est]
        or any(pt.get("status", "ok").startswith("error") for pt in rep["estimators"][est]["points"])
        for rep in results
        for est in estimators
    )
    return 2 if failed else 0


# --- argument parsing --------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rggm",
        description="Robust sparse Gaussian graphical modeling toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="generate a benchmark dataset")
    sim.add_argument("--p", type=int, required=True)
    sim.add_argument("--n", type=int, required=True)
    sim.add_argument("--model", choices=("i", "ii", "iii"), required=True)
    sim.add_argument("--epsilon", type=float, default=0.0)
    sim.add_argument("--eta", type=float, default=0.0)
    sim.add_argument("--m", type=int, default=1, help="edges per new node")
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--out", required=True)
    sim.add_argument("--quiet", action="store_true")
    sim.set_defaults(func=run_simulate)

    fit = sub.add_parser("fit", help="fit one estimator to a CSV dataset")
    fit.add_argument("--estimator", choices=ESTIMATORS, required=True)
    fit.add_argument("--input", required=True)
    fit.add_argument("--out", required=True)
    fit.add_argument("--gamma", type=float, default=0.1)
    fit.add_argument("--lambda", dest="lam", type=float, default=None)
    fit.add_argument("--lambda-grid", default=None, help="'default' or 'K,DELTA'")
    fit.add_argument("--nu", type=float, default=1.0)
    fit.add_argument("--delta-n", default="auto")
    fit.add_argument("--normalize", choices=("none", "sd", "mad"), default="none")
    fit.add_argument("--seed", type=int, default=0)
    fit.add_argument("--tol", type=float, default=1e-7)
    fit.add_argument("--max-iter", type=int, default=200)
    fit.add_argument("--quiet", action="store_true")
    fit.set_defaults(func=run_fit)

    ev = sub.add_parser("evaluate", help="score fit artifacts against a truth")
    ev.add_argument("--fit", required=True)
    ev.add_argument("--truth", default=None)
    ev.add_argument("--fit-b", default=None)
    ev.add_argument("--out", required=True)
    ev.add_argument("--quiet", action="store_true")
    ev.set_defaults(func=run_evaluate)

    bench = sub.add_parser("bench", help="replicated simulate/fit/evaluate")
    bench.add_argument("--p", type=int, required=True)
    bench.add_argument("--n", type=int, required=True)
    bench.add_argument("--model", choices=("i", "ii", "iii"), required=True)
    bench.add_argument("--epsilon", type=float, default=0.0)
    bench.add_argument("--eta", type=float, default=0.0)
    bench.add_argument("--m", type=int, default=1)
    bench.add_argument("--gamma", type=float, default=0.05)
    bench.add_argument("--nu", type=float, default=1.0)
    bench.add_argument("--replicates", type=int, default=20)
    bench.add_argument("--seed", type=int, default=0)
    bench.add_argument(
        "--estimators", default="gamma,glasso,tlasso,npn",
        help="comma-separated subset of gamma,glasso,tlasso,npn",
    )
    bench.add_argument("--lambda-grid", default="default")
    bench.add_argument("--normalize", choices=("none", "sd", "mad"), default="none")
    bench.add_argument("--tol", type=float, default=1e-7)
    bench.add_argument("--max-iter", type=int, default=200)
    bench.add_argument("--out", required=True)
    bench.add_argument("--quiet", action="store_true")
    bench.set_defaults(func=run_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse errors are input errors
        return 1 if exc.code not in (0, None) else 0
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except RobustGgmError as exc:
        print(f"estimation failed: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
