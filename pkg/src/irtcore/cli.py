"""Command-line front end.

Subcommands: ``gen`` (synthetic data), ``fit`` (full-data fit),
``coreset-fit`` (subsampled fit), ``compare`` (full vs. method with
metrics), ``mu`` (per-item complexity table), and ``report`` (figures from a
run directory). Exit codes: 0 ok, 2 configuration error, 3 numeric failure.
Set ``IRT_THREADS`` to cap BLAS threading before numpy loads.
"""

from __future__ import annotations

import argparse
import os
import sys


def _apply_thread_cap():
    cap = os.environ.get("IRT_THREADS")
    if cap:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS",
                    "MKL_NUM_THREADS", "NUMEXPR_NUM_THREADS",
                    "NUMBA_NUM_THREADS"):
            os.environ.setdefault(var, cap)


def _add_data_args(p, need_k=False):
    p.add_argument("--data", default="", help="response CSV (dense or long form)")
    p.add_argument("--n", type=int, default=0, help="examinees (synthetic)")
    p.add_argument("--m", type=int, default=0, help="items (synthetic)")
    p.add_argument("--model", default="2pl", choices=["1pl", "2pl", "3pl"])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--iters", type=int, default=50, help="main-loop iterations")
    p.add_argument("--labels", default="pm1", choices=["pm1", "01"])
    p.add_argument("--out", required=True, help="output directory")
    if need_k:
        p.add_argument("--k", type=int, required=True, help="subsample size")
        p.add_argument("--method", default="coreset",
                       choices=["coreset", "uniform", "distance", "l1lev", "lewis"])
        p.add_argument("--reps", type=int, default=1)
        p.add_argument("--sketched", action="store_true",
                       help="CountSketch-approximate the leverage scores")
        p.add_argument("--rounds", type=int, default=1,
                       help="recursive coreset applications (experimental)")
        p.add_argument("--centers", type=int, default=25,
                       help="centers for distance sampling")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="irtcore",
        description="IRT model estimation with coreset subsampling",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate synthetic responses")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--m", type=int, required=True)
    g.add_argument("--model", default="2pl", choices=["1pl", "2pl", "3pl"])
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--labels", default="pm1", choices=["pm1", "01"])
    g.add_argument("--format", default="dense", choices=["dense", "long"])
    g.add_argument("--out", required=True)

    f = sub.add_parser("fit", help="full-data alternating fit")
    _add_data_args(f)

    cf = sub.add_parser("coreset-fit", help="subsampled fit without the full baseline")
    _add_data_args(cf, need_k=True)

    cp = sub.add_parser("compare", help="full fit vs. subsampled fits with metrics")
    _add_data_args(cp, need_k=True)

    mu = sub.add_parser("mu", help="per-item complexity table at the fitted optimum")
    _add_data_args(mu)
    mu.add_argument("--exact", action="store_true",
                    help="exact angular sweep (designs up to 5000 rows)")

    rp = sub.add_parser("report", help="render figures for a run directory")
    rp.add_argument("--run", required=True, help="directory written by compare/fit")

    return parser


def _cmd_gen(args):
    from pathlib import Path

    from .io import write_item_parameters, write_abilities, write_responses
    from .model import ModelKind
    from .synth import GenConfig, generate_synthetic

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    Y, items, abilities = generate_synthetic(
        GenConfig(n=args.n, m=args.m, model=ModelKind.parse(args.model),
                  seed=args.seed)
    )
    write_responses(Y, out / "responses.csv", fmt=args.format, labels=args.labels)
    write_item_parameters(items, out / "items_true.csv")
    write_abilities(abilities, out / "theta_true.csv")
    print(f"wrote {out / 'responses.csv'} ({Y.m} items x {Y.n} examinees)")
    return 0


def _make_config(args, method=None, reps=None):
    from .harness import ExperimentConfig

    return ExperimentConfig(
        n=args.n, m=args.m, k=getattr(args, "k", 0),
        model=args.model, method=method or getattr(args, "method", "full"),
        reps=reps if reps is not None else getattr(args, "reps", 1),
        iters=args.iters, seed=args.seed, out=args.out, data=args.data,
        labels=args.labels, sketched=getattr(args, "sketched", False),
        rounds=getattr(args, "rounds", 1), centers=getattr(args, "centers", 25),
    )


def _print_result(result):
    best = result.best_report
    mean_wall = sum(r.wall_seconds for r in result.runs) / len(result.runs)
    print(f"method={best.method} reps={len(result.reports)} "
          f"f_best={best.objective_full_data:.6g}")
    if result.full is not None and best.method != "full":
        print(f"best rel_err={best.rel_err:.5f} mad_alpha={best.mad_alpha:.4f} "
              f"mad_theta={best.mad_theta:.4f}")
        print(f"wall full={result.full.wall_seconds:.2f}s "
              f"mean method={mean_wall:.2f}s gain={result.gain_percent:.2f}%")
    else:
        print(f"mean wall={mean_wall:.2f}s")


def _cmd_fit(args):
    from .harness import run_experiment

    result = run_experiment(_make_config(args, method="full", reps=1))
    _print_result(result)
    return 0


def _cmd_coreset_fit(args):
    from .harness import run_experiment

    result = run_experiment(_make_config(args), include_full=False)
    _print_result(result)
    return 0


def _cmd_compare(args):
    from .harness import run_experiment

    result = run_experiment(_make_config(args))
    _print_result(result)
    return 0


def _cmd_mu(args):
    from pathlib import Path

    from .harness import (ExperimentConfig, _load_data, _run_once, mu_table,
                          write_mu_table)
    from .model import ModelKind

    config = _make_config(args, method="full", reps=1)
    Y, _, _ = _load_data(config)
    fit = _run_once(Y, ModelKind.parse(config.model), config, "full", 0)
    rows = mu_table(Y, fit.items, fit.abilities, exact=args.exact)
    summary = write_mu_table(rows, Path(args.out))
    med = next(s for s in summary if s["stat"] == "median")
    print(f"median mu0={med['mu0']:.3f} mu1={med['mu1']:.3f} "
          f"(table in {Path(args.out) / 'mu.csv'})")
    return 0


def _cmd_report(args):
    from .report import render_report

    paths = render_report(args.run)
    for p in paths:
        print(f"wrote {p}")
    return 0


_COMMANDS = {
    "gen": _cmd_gen,
    "fit": _cmd_fit,
    "coreset-fit": _cmd_coreset_fit,
    "compare": _cmd_compare,
    "mu": _cmd_mu,
    "report": _cmd_report,
}


def main(argv=None):
    _apply_thread_cap()
    args = build_parser().parse_args(argv)
    from .errors import ConfigError, NumericError

    try:
        return _COMMANDS[args.command](args)
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3
    except (ConfigError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
