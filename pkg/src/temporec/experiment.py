"""Calibration sweeps and out-of-sample evaluation over sampled probes.

Calibration samples probe cut times from an early window, sweeps each
method's parameter grid, and picks the recall-maximizing point per method.
Evaluation samples cut times from a later, disjoint window and measures each
method at its chosen parameters; a random-probe run of the plain conserving
diffusion is included as the classical-protocol comparison column.

All randomness derives from the master seed: the calibration and evaluation
samplers and each random probe get child seeds from
``SeedSequence([master, stream, index])``, so runs are reproducible and
probe-level work can execute in parallel with a fixed reduction order.
"""

from __future__ import annotations

import csv
import json
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Mapping, Sequence

import numpy as np
from sklearn.model_selection import ParameterGrid

from .errors import ConfigurationError, EmptyProbeWarning, ExperimentError, \
    UndefinedMetricError
from .eventlog import EventLog, IngestConfig
from .metrics import MetricsReport, evaluate_split
from .probes import ProbeSampler, random_probe, sample_probe_times, time_probe
from .recommenders import (DEFAULT_EPSILON, DegreeIncrease, HeatS, Hybrid,
                           ProbS, SimS, THybrid, TProbS)
from .timeunits import parse_duration

DEFAULT_TAU_GRID = (1, 2, 5, 10, 20, 50, 100)
DEFAULT_LAMBDA_GRID = tuple(round(0.1 * i, 1) for i in range(11))
DEFAULT_THETA_GRID = (0.5, 0.75, 1.0, 1.25, 1.5, 2.0)

_AXIS_DEFAULTS = {
    "tau": DEFAULT_TAU_GRID,
    "lam": DEFAULT_LAMBDA_GRID,
    "theta": DEFAULT_THETA_GRID,
}

# seed streams
_STREAM_CALIBRATION = 0
_STREAM_EVALUATION = 1
_STREAM_RANDOM = 2

# method name -> (constructor from (params, epsilon), swept axes)
_METHODS: dict[str, tuple[Callable, tuple[str, ...]]] = {
    "probs": (lambda p, eps: ProbS(), ()),
    "heats": (lambda p, eps: HeatS(), ()),
    "hybrid": (lambda p, eps: Hybrid(lam=p["lam"]), ("lam",)),
    "sims": (lambda p, eps: SimS(theta=p["theta"], lam=p["lam"]),
             ("theta", "lam")),
    "di": (lambda p, eps: DegreeIncrease(tau=p["tau"], epsilon=eps), ("tau",)),
    "tprobs": (lambda p, eps: TProbS(tau=p["tau"], epsilon=eps), ("tau",)),
    "thybrid": (lambda p, eps: THybrid(lam=p["lam"], tau=p["tau"], epsilon=eps),
                ("lam", "tau")),
}

METHOD_NAMES = tuple(_METHODS)


def _child_seed(master: int, *key: int) -> int:
    return int(np.random.SeedSequence([master, *key]).generate_state(1)[0])


def make_estimator(name: str, params: Mapping, epsilon: float = DEFAULT_EPSILON):
    """Instantiate a registered method with the given parameter point."""
    if name not in _METHODS:
        raise ConfigurationError(
            f"unknown method {name!r}; known: {', '.join(METHOD_NAMES)}"
        )
    factory, axes = _METHODS[name]
    missing = [axis for axis in axes if axis not in params]
    if missing:
        raise ConfigurationError(f"method {name!r} needs parameters {missing}")
    return factory(params, epsilon)


@dataclass(frozen=True)
class MethodSpec:
    """A method name and the grid of parameter values to sweep."""

    name: str
    grid: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.name not in _METHODS:
            raise ConfigurationError(
                f"unknown method {self.name!r}; known: {', '.join(METHOD_NAMES)}"
            )
        _, axes = _METHODS[self.name]
        unknown = set(self.grid) - set(axes)
        if unknown:
            raise ConfigurationError(
                f"method {self.name!r} does not take parameters {sorted(unknown)}"
            )

    def points(self) -> list[dict]:
        _, axes = _METHODS[self.name]
        if not axes:
            return [{}]
        grid = {axis: list(self.grid.get(axis, _AXIS_DEFAULTS[axis]))
                for axis in axes}
        return list(ParameterGrid(grid))


def default_method_specs(names: Sequence[str] = METHOD_NAMES) -> tuple[MethodSpec, ...]:
    return tuple(MethodSpec(name) for name in names)


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything an experiment run needs besides the event log itself."""

    methods: tuple = ()
    delta_p: int = 1
    top_length: int = 50
    epsilon: float = DEFAULT_EPSILON
    calibration_range: tuple = (0.8, 0.9)
    evaluation_range: tuple = (0.9, 1.0)
    probes: int = 100
    random_fraction: float = 0.1
    seed: int = 0
    threads: int = 1
    include_unknown_users: bool = True
    drop_cold: bool = False

    def __post_init__(self):
        if not self.methods:
            object.__setattr__(self, "methods", default_method_specs())
        cal_lo, cal_hi = self.calibration_range
        ev_lo, ev_hi = self.evaluation_range
        for value in (cal_lo, cal_hi, ev_lo, ev_hi):
            if not 0.0 <= value <= 1.0:
                raise ConfigurationError("probe ranges must lie within [0, 1]")
        if cal_lo > cal_hi or ev_lo > ev_hi:
            raise ConfigurationError("probe ranges must be non-decreasing")
        if cal_hi > ev_lo:
            raise ConfigurationError(
                "calibration range must end before the evaluation range begins"
            )
        if self.probes < 1:
            raise ConfigurationError("probes must be at least 1")
        if self.delta_p < 1:
            raise ConfigurationError("delta_p must be at least 1")
        if self.top_length < 1:
            raise ConfigurationError("top_length must be at least 1")
        if not 0.0 < self.random_fraction < 1.0:
            raise ConfigurationError("random_fraction must be in (0, 1)")
        if self.threads < 1:
            raise ConfigurationError("threads must be at least 1")

    def to_dict(self) -> dict:
        return {
            "methods": {spec.name: {k: list(v) for k, v in spec.grid.items()}
                        for spec in self.methods},
            "delta_p": self.delta_p,
            "top_length": self.top_length,
            "epsilon": self.epsilon,
            "calibration_range": list(self.calibration_range),
            "evaluation_range": list(self.evaluation_range),
            "probes": self.probes,
            "random_fraction": self.random_fraction,
            "seed": self.seed,
            "threads": self.threads,
            "include_unknown_users": self.include_unknown_users,
            "drop_cold": self.drop_cold,
        }


@dataclass(frozen=True)
class AggregateRow:
    """Mean and spread of one method/parameter point across probes."""

    method: str
    params: dict
    probe_kind: str
    n_probes: int
    recall_mean: float
    recall_std: float
    ranking_mean: float
    ranking_std: float
    top_degree_mean: float
    top_degree_std: float

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "params": dict(self.params),
            "probe_kind": self.probe_kind,
            "n_probes": self.n_probes,
            "recall_mean": self.recall_mean,
            "recall_std": self.recall_std,
            "ranking_mean": self.ranking_mean,
            "ranking_std": self.ranking_std,
            "top_degree_mean": self.top_degree_mean,
            "top_degree_std": self.top_degree_std,
        }


@dataclass(frozen=True)
class SweepResult:
    """Calibration outcome: per-point aggregates and per-method optima."""

    rows: tuple
    optima: dict
    per_probe: tuple
    probe_times: tuple
    skipped_probes: int
    provenance: dict

    def to_dict(self) -> dict:
        return {
            "rows": [row.to_dict() for row in self.rows],
            "optima": {name: dict(params) for name, params in self.optima.items()},
            "probe_times": list(self.probe_times),
            "skipped_probes": self.skipped_probes,
            "provenance": self.provenance,
        }


@dataclass(frozen=True)
class EvaluationReport:
    """Out-of-sample outcome: per-method aggregates on late time probes,
    plus the random-probe comparison row."""

    rows: tuple
    per_probe: tuple
    probe_times: tuple
    skipped_probes: int
    provenance: dict

    def to_dict(self) -> dict:
        return {
            "rows": [row.to_dict() for row in self.rows],
            "probe_times": list(self.probe_times),
            "skipped_probes": self.skipped_probes,
            "provenance": self.provenance,
        }


def _run_ordered(tasks: Sequence[Callable], threads: int) -> list:
    # results come back in submission order regardless of completion order,
    # so downstream reductions are deterministic
    if threads <= 1:
        return [task() for task in tasks]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        futures = [pool.submit(task) for task in tasks]
        return [future.result() for future in futures]


def _probe_reports(split, jobs: Mapping, config) -> dict | None:
    """Evaluate every (method, params) job on one split; None if skipped.

    Scoreability depends only on the probe's users and items, not on the
    method, so the first undefined metric skips the whole probe.
    """
    reports = {}
    for key, (name, params) in jobs.items():
        estimator = make_estimator(name, params, config.epsilon)
        estimator.fit(split.training)
        try:
            report, _ = evaluate_split(
                estimator, split, top_length=config.top_length, label=name,
                include_unknown_users=config.include_unknown_users,
                drop_cold=config.drop_cold,
            )
        except UndefinedMetricError:
            return None
        reports[key] = report
    return reports


def _aggregate(collected: Mapping, probe_kind: str) -> list[AggregateRow]:
    rows = []
    for (name, _), (params, reports) in collected.items():
        if not reports:
            continue
        recalls = np.asarray([r.recall for r in reports])
        rankings = np.asarray([r.ranking_score for r in reports])
        degrees = np.asarray([r.avg_top_degree for r in reports])
        rows.append(AggregateRow(
            method=name,
            params=params,
            probe_kind=probe_kind,
            n_probes=len(reports),
            recall_mean=float(recalls.mean()),
            recall_std=float(recalls.std()),
            ranking_mean=float(rankings.mean()),
            ranking_std=float(rankings.std()),
            top_degree_mean=float(degrees.mean()),
            top_degree_std=float(degrees.std()),
        ))
    return rows


def _per_probe_row(kind: str, index: int, descriptor: dict, name: str,
                   params: dict, report: MetricsReport) -> dict:
    return {
        "probe_kind": kind,
        "probe_index": index,
        "t_p": descriptor.get("t_p"),
        "delta_p": descriptor.get("delta_p"),
        "fraction": descriptor.get("fraction"),
        "seed": descriptor.get("seed"),
        "method": name,
        "params": dict(params),
        "recall": report.recall,
        "ranking_score": report.ranking_score,
        "avg_top_degree": report.avg_top_degree,
        "n_users": report.n_users,
        "n_entries": report.n_entries,
        "cold_fraction": report.cold_fraction,
    }


def _run_time_phase(log, config, jobs, fraction_range, stream):
    sampler = ProbeSampler(lo=fraction_range[0], hi=fraction_range[1],
                           count=config.probes,
                           seed=_child_seed(config.seed, stream))
    t_values = sample_probe_times(log, sampler, config.delta_p)

    def task_for(t_p):
        def run():
            split = time_probe(log, t_p, config.delta_p)
            return split.descriptor(), _probe_reports(split, jobs, config)
        return run

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", EmptyProbeWarning)
        results = _run_ordered([task_for(t) for t in t_values], config.threads)

    collected = {key: (params, []) for key, (_, params) in jobs.items()}
    per_probe = []
    skipped = 0
    for index, (descriptor, reports) in enumerate(results):
        if reports is None:
            skipped += 1
            continue
        for key, report in reports.items():
            name, params = jobs[key]
            collected[key][1].append(report)
            per_probe.append(
                _per_probe_row("time", index, descriptor, name, params, report)
            )
    if skipped == len(results):
        raise ExperimentError(
            "every sampled probe was empty or unscoreable; widen delta_p or "
            "the probe range"
        )
    return t_values, collected, per_probe, skipped


def calibrate(log: EventLog, config: ExperimentConfig) -> SweepResult:
    """Sweep each method's grid over calibration-window probes.

    Returns per-point aggregates and, per method, the parameters of the
    recall-maximizing point (ties broken by smaller tau, then lam, then
    theta).
    """
    jobs: dict = {}
    for spec in config.methods:
        for point_index, params in enumerate(spec.points()):
            jobs[(spec.name, point_index)] = (spec.name, params)

    t_values, collected, per_probe, skipped = _run_time_phase(
        log, config, jobs, config.calibration_range, _STREAM_CALIBRATION
    )
    rows = _aggregate(collected, "time")

    optima: dict = {}
    for spec in config.methods:
        candidates = [row for row in rows if row.method == spec.name]
        if not candidates:
            continue
        candidates.sort(key=lambda row: (
            -row.recall_mean,
            row.params.get("tau", 0),
            row.params.get("lam", 0.0),
            row.params.get("theta", 0.0),
        ))
        optima[spec.name] = candidates[0].params

    return SweepResult(
        rows=tuple(rows),
        optima=optima,
        per_probe=tuple(per_probe),
        probe_times=tuple(t_values),
        skipped_probes=skipped,
        provenance={"config": config.to_dict(), "phase": "calibration"},
    )


def evaluate(log: EventLog, config: ExperimentConfig,
             chosen_params: Mapping[str, Mapping]) -> EvaluationReport:
    """Measure each method at fixed parameters on evaluation-window probes.

    ``chosen_params`` maps method names to parameter points (typically
    ``SweepResult.optima``). A random-probe run of the conserving diffusion
    is appended for comparison with the classical protocol.
    """
    jobs: dict = {}
    for name in chosen_params:
        if name not in _METHODS:
            raise ConfigurationError(f"unknown method {name!r}")
        jobs[(name, 0)] = (name, dict(chosen_params[name]))

    t_values, collected, per_probe, skipped = _run_time_phase(
        log, config, jobs, config.evaluation_range, _STREAM_EVALUATION
    )
    rows = _aggregate(collected, "time")

    random_jobs = {("probs", 0): ("probs", {})}

    def task_for(index):
        def run():
            split = random_probe(log, config.random_fraction,
                                 _child_seed(config.seed, _STREAM_RANDOM, index))
            return split.descriptor(), _probe_reports(split, random_jobs, config)
        return run

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", EmptyProbeWarning)
        results = _run_ordered([task_for(i) for i in range(config.probes)],
                               config.threads)

    random_reports = []
    random_skipped = 0
    for index, (descriptor, reports) in enumerate(results):
        if reports is None:
            random_skipped += 1
            continue
        report = reports[("probs", 0)]
        random_reports.append(report)
        per_probe.append(
            _per_probe_row("random", index, descriptor, "probs", {}, report)
        )
    rows.extend(_aggregate({("probs", 0): ({}, random_reports)}, "random"))

    return EvaluationReport(
        rows=tuple(rows),
        per_probe=tuple(per_probe),
        probe_times=tuple(t_values),
        skipped_probes=skipped + random_skipped,
        provenance={
            "config": config.to_dict(),
            "chosen_params": {k: dict(v) for k, v in chosen_params.items()},
            "phase": "evaluation",
        },
    )


# -- config files and report serialization -----------------------------------

_SUMMARY_COLUMNS = ("method", "params", "probe_kind", "n_probes",
                    "recall_mean", "recall_std", "ranking_mean", "ranking_std",
                    "top_degree_mean", "top_degree_std")
_PROBE_COLUMNS = ("probe_kind", "probe_index", "t_p", "delta_p", "fraction",
                  "seed", "method", "params", "recall", "ranking_score",
                  "avg_top_degree", "n_users", "n_entries", "cold_fraction")


def _csv_cell(value) -> str:
    if isinstance(value, float):
        return repr(value)
    if value is None:
        return ""
    if isinstance(value, dict):
        return json.dumps(value, sort_keys=True)
    return str(value)


def write_rows_csv(rows: Sequence[dict], columns: Sequence[str],
                   path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_csv_cell(row.get(col)) for col in columns])


def write_json(payload: dict, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(payload, handle, indent=2, sort_keys=True)
        handle.write("\n")


def write_summary_csv(rows: Sequence[AggregateRow], path: str | Path) -> None:
    write_rows_csv([row.to_dict() for row in rows], _SUMMARY_COLUMNS, path)


def write_per_probe_csv(rows: Sequence[dict], path: str | Path) -> None:
    write_rows_csv(rows, _PROBE_COLUMNS, path)


@dataclass(frozen=True)
class ExperimentSetup:
    """A dataset reference plus the experiment configuration."""

    dataset_path: str
    ingest: IngestConfig
    config: ExperimentConfig


_DELIMITERS = {"tab": "\t", "comma": ",", "\t": "\t", ",": ","}


def _load_config_mapping(path: str | Path) -> dict:
    path = Path(path)
    if path.suffix == ".json":
        with open(path, "r", encoding="utf-8") as handle:
            return json.load(handle)
    try:
        import tomllib
    except ModuleNotFoundError:
        import tomli as tomllib
    with open(path, "rb") as handle:
        return tomllib.load(handle)


def load_setup(path: str | Path) -> ExperimentSetup:
    """Read a declarative experiment config (TOML or JSON).

    Schema (all sections optional except ``dataset.path``):

    * ``[dataset]`` — path, delimiter ("tab"/"comma"), columns, header,
      rating_threshold, time_unit.
    * ``[probe]`` — delta_p (duration string or int), probes,
      calibration_range, evaluation_range, random_fraction.
    * ``[evaluation]`` — top_length, epsilon, seed, threads,
      include_unknown_users, drop_cold.
    * ``[methods.<name>]`` — per-axis value lists (tau entries may be
      duration strings); omit the whole table to sweep every method on the
      default grids.
    """
    raw = _load_config_mapping(path)
    dataset = raw.get("dataset", {})
    if "path" not in dataset:
        raise ConfigurationError(f"{path}: [dataset] must define 'path'")
    time_unit = dataset.get("time_unit", "step")
    ingest = IngestConfig(
        delimiter=_DELIMITERS.get(dataset.get("delimiter", "tab"),
                                  dataset.get("delimiter", "\t")),
        columns=tuple(dataset.get("columns", ("user", "item", "timestamp"))),
        rating_threshold=dataset.get("rating_threshold"),
        time_unit=time_unit,
        header=bool(dataset.get("header", False)),
    )

    probe = raw.get("probe", {})
    evaluation = raw.get("evaluation", {})

    methods_raw = raw.get("methods")
    if methods_raw is None:
        methods = default_method_specs()
    else:
        specs = []
        for name, grid_raw in methods_raw.items():
            grid = {}
            for axis, values in (grid_raw or {}).items():
                axis = "lam" if axis == "lambda" else axis
                if axis == "tau":
                    values = [parse_duration(v, time_unit) for v in values]
                grid[axis] = tuple(values)
            specs.append(MethodSpec(name=name, grid=grid))
        methods = tuple(specs)

    config = ExperimentConfig(
        methods=methods,
        delta_p=parse_duration(probe.get("delta_p", 1), time_unit),
        top_length=int(evaluation.get("top_length", 50)),
        epsilon=float(evaluation.get("epsilon", DEFAULT_EPSILON)),
        calibration_range=tuple(probe.get("calibration_range", (0.8, 0.9))),
        evaluation_range=tuple(probe.get("evaluation_range", (0.9, 1.0))),
        probes=int(probe.get("probes", 100)),
        random_fraction=float(probe.get("random_fraction", 0.1)),
        seed=int(evaluation.get("seed", 0)),
        threads=int(evaluation.get("threads", 1)),
        include_unknown_users=bool(evaluation.get("include_unknown_users", True)),
        drop_cold=bool(evaluation.get("drop_cold", False)),
    )
    return ExperimentSetup(dataset_path=str(dataset["path"]), ingest=ingest,
                           config=config)
