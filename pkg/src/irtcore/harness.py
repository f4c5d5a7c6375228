"""Experiment orchestration: run full and subsampled fits, compute the
objective/parameter comparison metrics, and emit CSV/JSON artifacts plus the
plot-ready data files consumed by the report renderer."""

from __future__ import annotations

import json
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import io as _io
from .baselines import (
    BaselineKind,
    distance_sampling_coreset,
    score_based_coreset,
    uniform_coreset,
)
from .coreset import build_coreset
from .errors import ConfigError
from .model import ModelKind, full_nll
from .mu import mu_exact_2d, mu_heuristic
from .model import Orientation, build_signed_design
from .solver import FitConfig, alternate_fit, initial_parameters, standardize

__all__ = [
    "SCHEMA_VERSION",
    "ExperimentConfig",
    "FitOutcome",
    "FitReport",
    "ExperimentResult",
    "metrics",
    "run_experiment",
    "mu_table",
    "write_mu_table",
]

SCHEMA_VERSION = 1
METHODS = ("full", "coreset", "uniform", "distance", "l1lev", "lewis")


@dataclass
class ExperimentConfig:
    """One experiment: a data source, a fitting method, and repetition/seed
    bookkeeping. Serializes to versioned JSON (``schema: 1``)."""

    n: int = 0
    m: int = 0
    k: int = 0
    model: str = "2pl"
    method: str = "coreset"
    reps: int = 1
    iters: int = 50
    seed: int = 0
    out: str = ""
    data: str = ""
    labels: str = "pm1"
    sketched: bool = False
    rounds: int = 1
    centers: int = 25
    mu_policy: str = "auto"

    def __post_init__(self):
        ModelKind.parse(self.model)
        if self.method not in METHODS:
            raise ConfigError(f"unknown method {self.method!r}; pick from {METHODS}")
        if self.reps < 1 or self.iters < 1:
            raise ConfigError("reps and iters must be >= 1")
        if self.data:
            if not Path(self.data).is_file():
                raise ConfigError(f"data file not found: {self.data}")
        elif self.n < 1 or self.m < 1:
            raise ConfigError("either --data or positive --n/--m are required")

    def to_json(self, path):
        payload = {"schema": SCHEMA_VERSION, **asdict(self)}
        Path(path).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")

    @classmethod
    def from_json(cls, path):
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
        if payload.pop("schema", None) != SCHEMA_VERSION:
            raise ConfigError(f"{path}: unsupported or missing config schema")
        return cls(**payload)


@dataclass
class FitOutcome:
    """One fitting run with standardized parameters and phase timings."""

    method: str
    rep: int
    seed: int
    items: object
    abilities: object
    trace: object
    objective_surrogate: float
    objective_full_data: float
    wall_seconds: float
    phase_seconds: dict
    standardized: bool = True


@dataclass
class FitReport:
    """Comparison of one subsampled run against the full-data run."""

    method: str
    rep: int
    seed: int
    objective_surrogate: float
    objective_full_data: float
    rel_err: float
    rel_err_surrogate: float
    mad_alpha: float
    mad_theta: float
    wall_seconds: float
    phase_seconds: dict = field(default_factory=dict)


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    full: FitOutcome
    runs: list
    reports: list
    best_index: int
    gain_percent: float

    @property
    def best_report(self):
        return self.reports[self.best_index]

    @property
    def best_run(self):
        return self.runs[self.best_index]


def _load_data(config):
    if config.data:
        Y = _io.read_responses(config.data, labels=config.labels)
        return Y, None, None
    from .synth import GenConfig, generate_synthetic

    Y, items_true, abil_true = generate_synthetic(
        GenConfig(n=config.n, m=config.m, model=ModelKind.parse(config.model),
                  seed=config.seed)
    )
    return Y, items_true, abil_true


def _rep_seed(seed, rep):
    return int(np.random.SeedSequence([int(seed), int(rep)]).generate_state(1)[0])


def _build_subsample(method, Y, items0, abilities0, model, config, seed, timings):
    if method == "coreset":
        return build_coreset(
            Y, items0, abilities0, model, config.k, seed=seed,
            sketched=config.sketched, rounds=config.rounds,
            mu_policy=config.mu_policy, timings=timings,
        )
    t0 = time.perf_counter()
    if method == "uniform":
        core = uniform_coreset(Y.n, config.k, seed=seed)
    elif method == "distance":
        core = distance_sampling_coreset(
            abilities0.beta(), config.k, centers=config.centers, seed=seed
        )
    elif method == "l1lev":
        core = score_based_coreset(BaselineKind.L1_LEVERAGE, abilities0.beta(),
                                   config.k, seed=seed)
    elif method == "lewis":
        core = score_based_coreset(BaselineKind.LEWIS_L1, abilities0.beta(),
                                   config.k, seed=seed)
    else:
        raise ConfigError(f"method {method!r} does not subsample")
    timings["scores"] = timings.get("scores", 0.0)
    timings["sampling"] = timings.get("sampling", 0.0) + time.perf_counter() - t0
    return core


def _run_once(Y, model, config, method, rep):
    from .solver import _ensure_kernels

    _ensure_kernels()  # keep one-time JIT loading out of the wall clocks
    seed = _rep_seed(config.seed, rep)
    fit_config = FitConfig(max_main_iterations=config.iters, seed=seed)
    init = initial_parameters(Y, model, fit_config.bounds)
    timings = {"scores": 0.0, "sampling": 0.0}
    t0 = time.perf_counter()
    core = None
    if method != "full":
        if not 1 <= config.k < Y.n:
            raise ConfigError(f"subsampling needs 1 <= k < n, got k={config.k}")
        core = _build_subsample(method, Y, init[0], init[1], model, config,
                                seed, timings)
    # the uniform baseline is the naive train-on-a-subset practice: abilities
    # outside the sample are never visited; importance-sampling methods plug
    # their weighted subsample into step (b) while step (a) stays full
    scope = "subsample" if method == "uniform" else "all"
    items, abilities, trace = alternate_fit(Y, model, fit_config,
                                            coreset=core, init=init,
                                            ability_scope=scope)
    wall = time.perf_counter() - t0
    items_s, abilities_s = standardize(items, abilities)
    phase = dict(timings)
    phase.update(trace.phase_seconds)
    return FitOutcome(
        method=method,
        rep=rep,
        seed=seed,
        items=items_s,
        abilities=abilities_s,
        trace=trace,
        objective_surrogate=float(trace.objectives[-1]),
        objective_full_data=full_nll(Y, items_s, abilities_s),
        wall_seconds=wall,
        phase_seconds=phase,
    )


def metrics(full_fit, core_fit, Y):
    """Comparison metrics between a full-data run and a subsampled run.

    ``rel_err`` compares full-data objective values at the two final parameter
    sets (the coreset-optimum bound check); ``rel_err_surrogate`` compares the
    subsampled run's own (weighted) optimum against the full objective. Mean
    absolute deviations average each parameter block over its own count.
    """
    if not (full_fit.standardized and core_fit.standardized):
        raise ValueError("metrics require standardized fits")
    if full_fit.items.m != Y.m or core_fit.abilities.n != Y.n:
        raise ValueError("fit dimensions do not match the response matrix")
    f_full = full_fit.objective_full_data
    rel_err = abs(core_fit.objective_full_data - f_full) / f_full
    rel_err_surrogate = abs(core_fit.objective_surrogate - f_full) / f_full
    it_f, it_c = full_fit.items, core_fit.items
    mad_alpha = float(
        np.mean(np.abs(it_f.a - it_c.a) + np.abs(it_f.b - it_c.b)
                + np.abs(it_f.c - it_c.c))
    )
    mad_theta = float(
        np.mean(np.abs(full_fit.abilities.theta - core_fit.abilities.theta))
    )
    return FitReport(
        method=core_fit.method,
        rep=core_fit.rep,
        seed=core_fit.seed,
        objective_surrogate=core_fit.objective_surrogate,
        objective_full_data=core_fit.objective_full_data,
        rel_err=rel_err,
        rel_err_surrogate=rel_err_surrogate,
        mad_alpha=mad_alpha,
        mad_theta=mad_theta,
        wall_seconds=core_fit.wall_seconds,
        phase_seconds=core_fit.phase_seconds,
    )


def _solo_report(run):
    return FitReport(
        method=run.method, rep=run.rep, seed=run.seed,
        objective_surrogate=run.objective_surrogate,
        objective_full_data=run.objective_full_data,
        rel_err=float("nan"), rel_err_surrogate=float("nan"),
        mad_alpha=float("nan"), mad_theta=float("nan"),
        wall_seconds=run.wall_seconds, phase_seconds=run.phase_seconds,
    )


def run_experiment(config, Y=None, include_full=True, full_outcome=None):
    """Execute a configured experiment and write its artifacts.

    Runs one full fit plus ``reps`` subsampled fits (or ``reps`` full fits
    when method == "full"), selects the best repetition by full-data
    objective, and writes per-repetition reports, a summary CSV, fitted
    parameter CSVs, and the plot-ready bias/density data files. With
    ``include_full=False`` (and a subsampling method) the full baseline and
    the comparison metrics are skipped; ``full_outcome`` reuses an already
    computed full-data run for the comparisons.
    """
    model = ModelKind.parse(config.model)
    if Y is None:
        Y, _, _ = _load_data(config)

    if config.method == "full":
        full = full_outcome or _run_once(Y, model, config, "full", 0)
        runs = [full] + [
            _run_once(Y, model, config, "full", r) for r in range(1, config.reps)
        ]
    else:
        if full_outcome is not None:
            full = full_outcome
        elif include_full:
            full = _run_once(Y, model, config, "full", 0)
        else:
            full = None
        runs = [_run_once(Y, model, config, config.method, r)
                for r in range(config.reps)]
    if full is not None:
        reports = [metrics(full, run, Y) for run in runs]
    else:
        reports = [_solo_report(run) for run in runs]
    best_index = int(np.argmin([r.objective_full_data for r in reports]))
    mean_core = float(np.mean([r.wall_seconds for r in runs]))
    gain = (
        (1.0 - mean_core / full.wall_seconds) * 100.0 if full is not None
        else float("nan")
    )

    result = ExperimentResult(
        config=config, full=full, runs=runs, reports=reports,
        best_index=best_index, gain_percent=gain,
    )
    if config.out:
        _write_artifacts(result, Y)
    return result


def _report_row(report):
    row = {
        "method": report.method,
        "rep": report.rep,
        "seed": report.seed,
        "objective_surrogate": report.objective_surrogate,
        "objective_full_data": report.objective_full_data,
        "rel_err": report.rel_err,
        "rel_err_surrogate": report.rel_err_surrogate,
        "mad_alpha": report.mad_alpha,
        "mad_theta": report.mad_theta,
        "wall_seconds": report.wall_seconds,
    }
    for phase in ("scores", "sampling", "step_a", "step_b"):
        row[f"seconds_{phase}"] = report.phase_seconds.get(phase, 0.0)
    return row


def _format_cell(v):
    return repr(float(v)) if isinstance(v, (float, np.floating)) else str(v)


def write_csv(path, rows):
    if not rows:
        raise ValueError("no rows to write")
    cols = list(rows[0].keys())
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(cols) + "\n")
        for row in rows:
            fh.write(",".join(_format_cell(row[c]) for c in cols) + "\n")


def read_csv(path):
    with open(path, "r", encoding="utf-8") as fh:
        cols = fh.readline().strip().split(",")
        rows = []
        for line in fh:
            line = line.strip()
            if line:
                rows.append(dict(zip(cols, line.split(","))))
    return rows


def _write_artifacts(result, Y):
    out = Path(result.config.out)
    out.mkdir(parents=True, exist_ok=True)
    result.config.to_json(out / "config.json")

    rows = [_report_row(r) for r in result.reports]
    write_csv(out / "summary.csv", rows)

    best = result.best_run
    _io.write_item_parameters(best.items, out / f"items_{best.method}.csv")
    _io.write_abilities(best.abilities, out / f"theta_{best.method}.csv")
    if result.full is not None:
        _io.write_item_parameters(result.full.items, out / "items_full.csv")
        _io.write_abilities(result.full.abilities, out / "theta_full.csv")
    if result.full is not None and best.method != "full":
        bias_rows = []
        for i in range(Y.m):
            bias_rows.append({
                "item": i,
                "a_full": result.full.items.a[i],
                "b_full": result.full.items.b[i],
                "c_full": result.full.items.c[i],
                "a_core": best.items.a[i], "b_core": best.items.b[i],
                "c_core": best.items.c[i],
            })
        write_csv(out / "item_bias.csv", bias_rows)
        pair_rows = [
            {"examinee": j,
             "theta_full": result.full.abilities.theta[j],
             "theta_core": best.abilities.theta[j]}
            for j in range(Y.n)
        ]
        write_csv(out / "theta_pairs.csv", pair_rows)

    headline = {
        "schema": SCHEMA_VERSION,
        "method": result.config.method,
        "reps": result.config.reps,
        "best_rep": result.best_report.rep,
        "f_best_full_data": result.best_report.objective_full_data,
        "f_best_surrogate": result.best_report.objective_surrogate,
        "rel_err_best": result.best_report.rel_err,
        "mad_alpha_best": result.best_report.mad_alpha,
        "mad_theta_best": result.best_report.mad_theta,
        "mean_wall_method": float(np.mean([r.wall_seconds for r in result.runs])),
        "gain_percent": result.gain_percent,
        "seeds": [r.seed for r in result.runs],
    }
    if result.full is not None:
        headline["f_full"] = result.full.objective_full_data
        headline["mean_wall_full"] = result.full.wall_seconds
    (out / "report.json").write_text(
        json.dumps(headline, indent=2) + "\n", encoding="utf-8"
    )


def mu_table(Y, items, abilities, exact=False, exact_limit=5000):
    """Per-item complexity estimates at the fitted parameters.

    Evaluates each item's examinee-side design; the heuristic (default) rates
    directions including that item's fitted parameter vector, the exact sweep
    is used on request for designs of at most ``exact_limit`` rows. Returns a
    list of {item, mu0, mu1, method} dicts.
    """
    rows = []
    for i in range(Y.m):
        design = build_signed_design(Y, abilities, Orientation.BY_ITEM, i)
        if exact and Y.n <= exact_limit:
            est = mu_exact_2d(design.rows)
        else:
            est = mu_heuristic(
                design.rows,
                extra_directions=[np.array([items.a[i], items.b[i]])],
            )
        rows.append({"item": i, "mu0": est.mu0, "mu1": est.mu1,
                     "method": est.method.value})
    return rows


def write_mu_table(rows, out_dir):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_csv(out / "mu.csv", rows)
    mu0 = np.array([r["mu0"] for r in rows])
    mu1 = np.array([r["mu1"] for r in rows])
    finite = np.isfinite(mu0) & np.isfinite(mu1)
    summary = []
    for stat, fn in (("mean", np.mean), ("median", np.median), ("max", np.max)):
        summary.append({
            "stat": stat,
            "mu0": float(fn(mu0[finite])) if finite.any() else float("inf"),
            "mu1": float(fn(mu1[finite])) if finite.any() else float("inf"),
        })
    summary.append({"stat": "n_separable", "mu0": float(np.sum(~finite)),
                    "mu1": float(np.sum(~finite))})
    write_csv(out / "mu_summary.csv", summary)
    return summary
