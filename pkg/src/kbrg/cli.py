"""Command-line harness: reproducible experiment runs and file outputs.

Subcommands: sample, esd, moments, stieltjes, density, tail, compare,
validate.  Configuration is a flat key-value file (--config) with CLI flags
taking precedence; every run writes a manifest listing its outputs with
content digests.  Results are byte-identical for a fixed (config, seed)
regardless of --threads.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__, ensembles, io, moments, spectra, stieltjes
from .errors import KbrgError, ParameterError
from .model import ModelParams, trial_seeds


def _params_from(options: dict) -> ModelParams:
    return ModelParams(
        n=int(options["n"]),
        d=int(options["d"]),
        alpha=float(options["alpha"]),
        tau=float(options["tau"]),
        sigma=float(options["sigma"]),
        trunc_m=float(options["trunc_m"]),
        kernel=str(options["kernel"]),
    )


def _merge_config(args: argparse.Namespace) -> dict:
    """File values first, explicit CLI flags override."""
    options = {
        "n": 128, "d": 1, "alpha": 0.5, "tau": 4.0, "sigma": 1.0,
        "trunc_m": math.inf, "kernel": "sigma", "seed": 0,
        "trials": 1, "threads": 1,
    }
    if getattr(args, "config", None):
        options.update(io.parse_config_file(args.config))
    for key in list(options):
        flag = getattr(args, key, None)
        if flag is not None:
            options[key] = flag
    options["seed"] = int(options["seed"])
    options["trials"] = int(options["trials"])
    options["threads"] = int(options["threads"])
    options["trunc_m"] = float(options["trunc_m"])
    return options


def _out_dir(args, command: str) -> Path:
    out = Path(args.out) if args.out else Path(f"kbrg-{command}")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _pool_map(jobs, threads: int):
    if threads <= 1 or len(jobs) == 1:
        return [job() for job in jobs]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return [f.result() for f in [pool.submit(j) for j in jobs]]


def _sample_spectra(kind: str, params: ModelParams, master_seed: int,
                    trials: int, threads: int):
    if trials < 1:
        raise ParameterError(f"trials must be >= 1, got {trials}")

    def make(trial):
        def job():
            w_seed, n_seed = trial_seeds(master_seed, trial)
            return spectra.eigenvalues(ensembles.sample_matrix(kind, params, w_seed, n_seed))
        return job

    return _pool_map([make(t) for t in range(trials)], threads)


def _seed_record(master_seed: int, trials: int) -> dict:
    return {
        "master_seed": master_seed,
        "rule": "per-trial streams are SeedSequence(master, spawn_key=(trial, s)), "
                "s=0 for weights, s=1 for edge/Gaussian noise",
        "trials": trials,
        "per_trial": [{"trial": t, "weights": [t, 0], "noise": [t, 1]}
                      for t in range(trials)],
    }


# ---------------------------------------------------------------------------
# subcommands


def run_sample(params: ModelParams, kind: str, trials: int, master_seed: int,
               out_dir: Path, threads: int = 1, dump_matrices: bool = False):
    """Sample matrices, write one eigenvalue CSV per trial plus a manifest."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if trials < 1:
        raise ParameterError(f"trials must be >= 1, got {trials}")

    def make(trial):
        def job():
            w_seed, n_seed = trial_seeds(master_seed, trial)
            sample = ensembles.sample_matrix(kind, params, w_seed, n_seed)
            return sample if dump_matrices else spectra.eigenvalues(sample)
        return job

    results = _pool_map([make(t) for t in range(trials)], threads)
    outputs = []
    for trial, result in enumerate(results):
        if dump_matrices:
            dump_path = out_dir / f"matrix_{trial:03d}.bin"
            ensembles.dump_matrix(result, dump_path)
            outputs.append(dump_path)
            result = spectra.eigenvalues(result)
        path = out_dir / f"eigenvalues_{trial:03d}.csv"
        io.write_csv(path, ["index", "lambda"],
                     [(i, float(v)) for i, v in enumerate(result.eigenvalues)])
        outputs.append(path)
    config = dict(params.as_config(), kind=kind, trials=trials, seed=master_seed)
    io.write_manifest(out_dir, config, _seed_record(master_seed, trials), outputs, __version__)
    return outputs


def cmd_sample(args) -> int:
    options = _merge_config(args)
    params = _params_from(options)
    out = _out_dir(args, "sample")
    run_sample(params, args.kind, options["trials"], options["seed"], out,
               threads=options["threads"], dump_matrices=args.dump_matrices)
    print(f"wrote {options['trials']} eigenvalue files to {out}")
    return 0


def cmd_esd(args) -> int:
    options = _merge_config(args)
    params = _params_from(options)
    out = _out_dir(args, "esd")
    samples = _sample_spectra(args.kind, params, options["seed"], options["trials"],
                              options["threads"])
    pool = spectra.pooled_eigenvalues(samples)
    if args.edges:
        edges = np.array([float(tok) for tok in args.edges.split(",")])
    else:
        edges = spectra.histogram_edges(pool)
    counts, edges = np.histogram(pool, bins=edges)
    widths = np.diff(edges)
    density = counts / counts.sum() / widths
    outputs = [io.write_csv(out / "histogram.csv",
                            ["bin_left", "bin_right", "count", "density"],
                            [(float(edges[i]), float(edges[i + 1]), int(counts[i]),
                              float(density[i])) for i in range(counts.size)])]
    orders = [2 * k for k in range(1, args.k_max + 1)]
    outputs.append(io.write_csv(out / "moments.csv", ["order", "value"],
                                [(o, spectra.empirical_moment(pool, o)) for o in orders]))
    if not args.no_plot:
        from . import report
        outputs.append(report.esd_figure(pool, edges, out / "esd.png",
                                         title=f"{args.kind}, pooled over {options['trials']} trials"))
    config = dict(params.as_config(), kind=args.kind, trials=options["trials"],
                  seed=options["seed"])
    io.write_manifest(out, config, _seed_record(options["seed"], options["trials"]),
                      outputs, __version__)
    print(f"pooled {pool.size} eigenvalues into {out}")
    return 0


def cmd_moments(args) -> int:
    options = _merge_config(args)
    params = _params_from(options)
    out = _out_dir(args, "moments")
    if options["trials"] > 0:
        params.require_dense()
    if args.k_max > 4 and options["trials"] > 0:
        raise ParameterError("empirical comparison is limited to k <= 4; "
                             "pass --trials 0 for theory-only tables")
    law = args.law
    rows = []
    for k in range(1, args.k_max + 1):
        quad = moments.limiting_moment(k, params, law=law, method="tree-quadrature")
        rows.append((k, quad, "tree-quadrature", None))
        if params.kernel != "trivial" and math.isclose(params.effective_sigma(), 1.0):
            block = moments.limiting_moment(k, params, law=law, method="block-factorization")
            rows.append((k, block, "block-factorization", None))
        if args.mc_trials > 0:
            est, se = moments.monte_carlo_moment(k, params, law=law,
                                                 trials=args.mc_trials,
                                                 seed=options["seed"] + k)
            rows.append((k, est, "monte-carlo", se))
    if options["trials"] > 0:
        samples = _sample_spectra(args.kind, params, options["seed"], options["trials"],
                                  options["threads"])
        for k in range(1, args.k_max + 1):
            per_trial = [spectra.empirical_moment(s, 2 * k) for s in samples]
            se = float(np.std(per_trial, ddof=1) / math.sqrt(len(per_trial))) \
                if len(per_trial) > 1 else 0.0
            rows.append((k, float(np.mean(per_trial)), "empirical", se))
    outputs = [io.write_csv(out / "moments.csv", ["k", "moment", "method", "stderr"],
                            [(k, v, m, "" if se is None else se) for k, v, m, se in rows])]
    if not args.no_plot:
        from . import report
        outputs.append(report.moments_figure(rows, out / "moments.png"))
    config = dict(params.as_config(), law=law, k_max=args.k_max, kind=args.kind,
                  trials=options["trials"], seed=options["seed"])
    io.write_manifest(out, config, _seed_record(options["seed"], options["trials"]),
                      outputs, __version__)
    print(f"wrote moment table ({len(rows)} rows) to {out}")
    return 0


def _default_law(params: ModelParams, requested: str | None) -> str:
    if requested:
        return requested
    return "conditional" if params.truncated else "untruncated"


def cmd_stieltjes(args) -> int:
    options = _merge_config(args)
    params = _params_from(options)
    out = _out_dir(args, "stieltjes")
    law = _default_law(params, args.law)
    problem = stieltjes.make_problem(params, law=law, size=args.grid_size)
    zs = args.z or [complex(0.0, 1.0)]
    rows = []
    for z in zs:
        field = stieltjes.solve_fixed_point(z, problem)
        s_val = stieltjes.stieltjes_transform(field, problem.grid)
        rows.append((z.real, z.imag, s_val.real, s_val.imag, field.iterations,
                     field.residual))
    outputs = [io.write_csv(out / "transform.csv",
                            ["re_z", "im_z", "re_S", "im_S", "iters", "residual"], rows)]
    config = dict(params.as_config(), law=law, seed=options["seed"])
    io.write_manifest(out, config, {"master_seed": options["seed"]}, outputs, __version__)
    print(f"solved {len(rows)} points into {out}")
    return 0


def cmd_density(args) -> int:
    options = _merge_config(args)
    params = _params_from(options)
    out = _out_dir(args, "density")
    law = _default_law(params, args.law)
    problem = stieltjes.make_problem(params, law=law, size=args.grid_size)
    x_grid = np.arange(args.x_min, args.x_max + 1e-12, args.x_step)
    scan = stieltjes.spectral_density(problem, x_grid, eta_final=args.eta)
    outputs = [io.write_csv(out / "density.csv", ["x", "density", "eta", "residual"],
                            [tuple(row) for row in scan.rows])]
    if not args.no_plot:
        from . import report
        outputs.append(report.density_figure(scan.rows, out / "density.png",
                                             title=f"law={law}, eta={args.eta}"))
    config = dict(params.as_config(), law=law, eta=args.eta, seed=options["seed"])
    io.write_manifest(out, config, {"master_seed": options["seed"]}, outputs, __version__)
    print(f"density on {scan.rows.shape[0]} points (mass {scan.mass():.4f}) in {out}")
    return 0


def cmd_tail(args) -> int:
    options = _merge_config(args)
    params = _params_from(options)
    params.require_dense()
    if not (params.kernel == "product"
            or (params.kernel == "sigma" and math.isclose(params.sigma, 1.0))):
        raise ParameterError("tail analysis requires the product kernel (sigma = 1)")
    out = _out_dir(args, "tail")
    samples = _sample_spectra(args.kind, params, options["seed"], options["trials"],
                              options["threads"])
    pool = spectra.pooled_eigenvalues(samples)
    if pool.size < 10 ** 4:
        print(f"warning: pooled count {pool.size} below the advisory 1e4", file=sys.stderr)
    q999 = float(np.quantile(pool, 0.999))
    if args.grid_scale == "linear":
        grid = np.linspace(args.x_min, q999, args.grid_points)
    else:
        grid = np.geomspace(args.x_min, q999, args.grid_points)
    table = spectra.survival_function([pool], grid)
    fit = spectra.tail_fit(table, x_min=args.x_min)
    m1 = (params.tau - 1.0) / (params.tau - 2.0)
    target_slope = -2.0 * (params.tau - 1.0)
    target_intercept = math.log(0.5 * m1 ** (params.tau - 1.0))
    outputs = [
        io.write_csv(out / "survival.csv", ["x", "survival"],
                     [tuple(row) for row in table]),
        io.write_csv(out / "tail_fit.csv",
                     ["slope", "intercept", "stderr", "n_points",
                      "target_slope", "target_intercept"],
                     [(fit.slope, fit.intercept, fit.stderr, fit.n_points,
                       target_slope, target_intercept)]),
    ]
    if not args.no_plot:
        from . import report
        outputs.append(report.survival_figure(table, fit,
                                              (target_slope, target_intercept),
                                              out / "tail.png"))
    config = dict(params.as_config(), kind=args.kind, trials=options["trials"],
                  seed=options["seed"], x_min=args.x_min)
    io.write_manifest(out, config, _seed_record(options["seed"], options["trials"]),
                      outputs, __version__)
    print(f"tail fit slope {fit.slope:.3f} (target {target_slope:.1f}) in {out}")
    return 0


def cmd_compare(args) -> int:
    options = _merge_config(args)
    params = _params_from(options)
    params.require_dense()
    out = _out_dir(args, "compare")
    pools = []
    for stream, kind in enumerate((args.kind_a, args.kind_b)):
        samples = _sample_spectra(kind, params, options["seed"] + stream,
                                  options["trials"], options["threads"])
        pool = spectra.pooled_eigenvalues(samples)
        pools.append(spectra.standardize(pool) if args.standardize else pool)
    mu = spectra.EmpiricalMeasure.from_samples(pools[0])
    nu = spectra.EmpiricalMeasure.from_samples(pools[1])
    rows = [("ks", spectra.ks_distance(mu, nu)),
            ("levy", spectra.levy_distance(mu, nu))]
    outputs = [io.write_csv(out / "metrics.csv", ["metric", "value"], rows)]
    if not args.no_plot:
        from . import report
        outputs.append(report.compare_figure(pools[0], pools[1],
                                             (args.kind_a, args.kind_b),
                                             out / "compare.png"))
    config = dict(params.as_config(), kind_a=args.kind_a, kind_b=args.kind_b,
                  trials=options["trials"], standardize=args.standardize,
                  seed=options["seed"])
    io.write_manifest(out, config, _seed_record(options["seed"], options["trials"]),
                      outputs, __version__)
    print("  ".join(f"{name}={value:.5f}" for name, value in rows))
    return 0


def cmd_validate(args) -> int:
    from .acceptance import run_criteria

    options = _merge_config(args)
    out = _out_dir(args, "validate")
    only = [int(tok) for tok in args.only.split(",")] if args.only else None
    results = run_criteria(only=only, threads=options["threads"],
                           cn_factor=4.0 if args.debug_wrong_cn else 1.0,
                           debug_small=args.debug_small)
    report_doc = {
        "version": __version__,
        "all_passed": all(r.passed for r in results),
        "criteria": [
            {"number": r.number, "name": r.name, "passed": r.passed,
             "seconds": round(r.seconds, 3), "details": r.details}
            for r in results
        ],
    }
    path = out / "report.json"
    path.write_text(json.dumps(report_doc, indent=2, default=float) + "\n")
    print(f"report written to {path}")
    return 0 if report_doc["all_passed"] else 1


# ---------------------------------------------------------------------------
# argument parsing


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", help="flat key-value config file")
    sub.add_argument("--out", help="output directory")
    sub.add_argument("--seed", type=int, help="master seed (u64)")
    sub.add_argument("--trials", type=int, help="number of independent trials")
    sub.add_argument("--threads", type=int, help="worker threads for trials")
    sub.add_argument("--n", type=int, help="torus side length")
    sub.add_argument("--d", type=int, help="dimension, 1 or 2")
    sub.add_argument("--alpha", type=float, help="long-range exponent")
    sub.add_argument("--tau", type=float, help="weight tail parameter")
    sub.add_argument("--sigma", type=float, help="kernel exponent")
    sub.add_argument("--trunc-m", dest="trunc_m", type=float, help="truncation threshold")
    sub.add_argument("--kernel", choices=["sigma", "trivial", "strong", "product", "pref-attach"])


_KINDS = [k.value for k in ensembles.MatrixKind]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kbrg",
                                     description="kernel-based random graph spectra toolkit")
    parser.add_argument("--version", action="version", version=f"kbrg {__version__}")
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("sample", help="sample matrices and write eigenvalue CSVs")
    _add_common(p)
    p.add_argument("--kind", choices=_KINDS, default="adjacency")
    p.add_argument("--dump-matrices", action="store_true",
                   help="also write binary matrix dumps")
    p.set_defaults(func=cmd_sample)

    p = subs.add_parser("esd", help="pooled eigenvalue histogram and moments")
    _add_common(p)
    p.add_argument("--kind", choices=_KINDS, default="adjacency")
    p.add_argument("--edges", help="explicit comma-separated bin edges")
    p.add_argument("--k-max", dest="k_max", type=int, default=2)
    p.add_argument("--no-plot", action="store_true")
    p.set_defaults(func=cmd_esd)

    p = subs.add_parser("moments", help="theoretical vs empirical moment table")
    _add_common(p)
    p.add_argument("--kind", choices=_KINDS, default="simplified-gaussian")
    p.add_argument("--law", choices=list(moments.LAW_VARIANTS), default="hard")
    p.add_argument("--k-max", dest="k_max", type=int, default=4)
    p.add_argument("--mc-trials", dest="mc_trials", type=int, default=10 ** 5)
    p.add_argument("--no-plot", action="store_true")
    p.set_defaults(func=cmd_moments)

    p = subs.add_parser("stieltjes", help="solve the transform at given z points")
    _add_common(p)
    p.add_argument("--z", type=complex, action="append",
                   help="complex point, e.g. 0.5+2j (repeatable)")
    p.add_argument("--law", choices=["conditional", "untruncated", "degenerate"])
    p.add_argument("--grid-size", dest="grid_size", type=int, default=256)
    p.set_defaults(func=cmd_stieltjes)

    p = subs.add_parser("density", help="recover the spectral density by inversion")
    _add_common(p)
    p.add_argument("--law", choices=["conditional", "untruncated", "degenerate"])
    p.add_argument("--grid-size", dest="grid_size", type=int, default=256)
    p.add_argument("--x-min", dest="x_min", type=float, default=-6.0)
    p.add_argument("--x-max", dest="x_max", type=float, default=6.0)
    p.add_argument("--x-step", dest="x_step", type=float, default=0.05)
    p.add_argument("--eta", type=float, default=1e-2)
    p.add_argument("--no-plot", action="store_true")
    p.set_defaults(func=cmd_density)

    p = subs.add_parser("tail", help="pooled survival function and power-law fit")
    _add_common(p)
    p.add_argument("--kind", choices=_KINDS, default="adjacency")
    p.add_argument("--x-min", dest="x_min", type=float, default=1.5)
    p.add_argument("--grid-points", dest="grid_points", type=int, default=24)
    p.add_argument("--grid-scale", dest="grid_scale", choices=["linear", "log"],
                   default="linear")
    p.add_argument("--no-plot", action="store_true")
    p.set_defaults(func=cmd_tail)

    p = subs.add_parser("compare", help="distribution distances between two ensembles")
    _add_common(p)
    p.add_argument("--kind-a", dest="kind_a", choices=_KINDS, default="adjacency")
    p.add_argument("--kind-b", dest="kind_b", choices=_KINDS, default="diag-wigner-diag")
    p.add_argument("--no-standardize", dest="standardize", action="store_false")
    p.add_argument("--no-plot", action="store_true")
    p.set_defaults(func=cmd_compare)

    p = subs.add_parser("validate", help="run the acceptance criteria")
    _add_common(p)
    p.add_argument("--only", help="comma-separated criterion numbers")
    p.add_argument("--debug-wrong-cn", dest="debug_wrong_cn", action="store_true",
                   help=argparse.SUPPRESS)  # negative control: corrupt the scaling constant
    p.add_argument("--debug-small", dest="debug_small", action="store_true",
                   help=argparse.SUPPRESS)  # negative control: reduced scale
    p.set_defaults(func=cmd_validate)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except KbrgError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
