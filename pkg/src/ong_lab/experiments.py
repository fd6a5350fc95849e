"""Experiment runner: config validation, deterministic job planning,
parallel execution, and report emission.

Reproducibility works by addressing, not by locking: every job owns a
random stream keyed by (master seed, experiment label, parameter-point
label, replicate index), parameter labels hash the parameter values
rather than their list positions, and the final reduction sorts all job
output by (parameter key, statistic, replicate) before folding. Identical
configs therefore produce byte-identical results.csv at any thread count.

Tolerance gates are data: each gate in the config names a summary metric,
a comparison, and a target, and the exit code reflects the gate outcomes,
never hard-coded thresholds.
"""

from __future__ import annotations

import json
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from typing import Callable, NamedTuple

import numpy as np

from . import _kernels, stats
from .errors import ConfigError, OracleMismatchError
from .geom import (
    Point,
    PointSequence,
    RandomStream,
    label_from_text,
    sample_binomial_process,
    uniform_open,
)
from .ong import poissonized_total
from .resample import estimate_conditioned_second_moment, resample_breakdown, tail_increment_l2
from .theory import predicted_regimes, theory_constants
from .voronoi import cone_radius_1d, voronoi_diameter

EXPERIMENT_NAMES = (
    "lln",
    "mean-gain",
    "log-regime",
    "mu-limit",
    "variance-scan",
    "cauchy-tail",
    "resample-check",
    "voronoi-scan",
    "oracle-check",
    "constants",
)

GATE_OPS = ("le", "ge", "eq", "within-rel", "within-abs")

RESULTS_HEADER = ("experiment", "d", "alpha", "n_or_lambda", "statistic", "value", "stderr")

_EDGE_DUMP_EXPERIMENTS = ("lln", "mean-gain", "log-regime", "mu-limit", "variance-scan")

_IDENTITY_CHUNK = 100
_ORACLE_CHUNK = 50
_CONE_SLACK = 1.0e-12
_IDENTITY_REL_TOL = 1.0e-9

_CI95_Z = 1.959963984540054


@dataclass(frozen=True)
class ExperimentConfig:
    """One validated experiment request.

    Only the fields an experiment uses are populated; validation rejects
    unknown keys and missing required ones, so a config file is a complete
    and exact record of a run.
    """

    experiment: str
    master_seed: int
    threads: int
    d: int | None = None
    d_list: tuple[int, ...] = ()
    alpha: float | None = None
    n: tuple[int, ...] = ()
    lam: tuple[float, ...] = ()
    i_list: tuple[int, ...] = ()
    replicates: int | None = None
    outer_reps: int | None = None
    inner_reps: int | None = None
    identity_instances: int | None = None
    identity_max_n: int | None = None
    sample_factor: int | None = None
    builds: int | None = None
    max_n: int | None = None
    coupling_instances: int | None = None
    coupling_lambda: float | None = None
    out_dir: str | None = None
    dump_edges: bool = False
    shadow_oracle: bool = False
    gates: tuple[dict, ...] = ()

    def to_json_dict(self) -> dict:
        out: dict = {
            "experiment": self.experiment,
            "master_seed": self.master_seed,
            "threads": self.threads,
            "out_dir": self.out_dir,
            "dump_edges": self.dump_edges,
            "shadow_oracle": self.shadow_oracle,
            "gates": [dict(g) for g in self.gates],
        }
        if self.d is not None:
            out["d"] = self.d
        if self.d_list:
            out["d"] = list(self.d_list)
        if self.alpha is not None:
            out["alpha"] = self.alpha
        if self.n:
            out["n"] = list(self.n)
        if self.lam:
            out["lambda"] = list(self.lam)
        if self.i_list:
            out["i"] = list(self.i_list)
        for key in (
            "replicates",
            "outer_reps",
            "inner_reps",
            "identity_instances",
            "identity_max_n",
            "sample_factor",
            "builds",
            "max_n",
            "coupling_instances",
            "coupling_lambda",
        ):
            value = getattr(self, key)
            if value is not None:
                out[key] = value
        return out


class PlannedJob(NamedTuple):
    """One unit of parallel work and the stream address it owns."""

    param_key: str
    n_or_lambda: str
    replicate: int
    seed_path: tuple[int, int, int]


class Row(NamedTuple):
    """One raw statistic value produced by a job."""

    key: str
    n_or_lambda: str
    statistic: str
    replicate: int
    value: float


@dataclass(frozen=True)
class RunResult:
    exit_code: int
    out_dir: str
    passed: bool
    metrics: dict
    gate_results: tuple[dict, ...]
    results_path: str
    summary_path: str
    manifest_path: str


@dataclass
class _Bundle:
    """Everything a summarize step hands back to the writer."""

    metrics: dict = field(default_factory=dict)
    csv_rows: list = field(default_factory=list)
    fits: dict = field(default_factory=dict)
    theory: dict | None = None
    notes: dict = field(default_factory=dict)


# --------------------------------------------------------------------------
# Config parsing and validation


def _required(raw: dict, key: str):
    if key not in raw:
        raise ConfigError(f"missing required key '{key}'", field=key)
    return raw[key]


def _as_int(value, key: str, minimum: int | None = None) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"'{key}' must be an integer, got {value!r}", field=key)
    if minimum is not None and value < minimum:
        raise ConfigError(f"'{key}' must be at least {minimum}, got {value}", field=key)
    return value


def _as_float(value, key: str, positive: bool = True) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"'{key}' must be a number, got {value!r}", field=key)
    v = float(value)
    if not math.isfinite(v):
        raise ConfigError(f"'{key}' must be finite, got {value!r}", field=key)
    if positive and not v > 0:
        raise ConfigError(f"'{key}' must be positive, got {value!r}", field=key)
    return v


def _as_int_list(value, key: str, minimum: int) -> tuple[int, ...]:
    if not isinstance(value, list) or not value:
        raise ConfigError(f"'{key}' must be a non-empty list, got {value!r}", field=key)
    return tuple(_as_int(v, key, minimum) for v in value)


def _as_bool(value, key: str) -> bool:
    if not isinstance(value, bool):
        raise ConfigError(f"'{key}' must be a boolean, got {value!r}", field=key)
    return value


def _validate_gates(value) -> tuple[dict, ...]:
    if not isinstance(value, list):
        raise ConfigError(f"'gates' must be a list, got {value!r}", field="gates")
    gates = []
    for idx, gate in enumerate(value):
        where = f"gates[{idx}]"
        if not isinstance(gate, dict):
            raise ConfigError(f"{where} must be an object", field="gates")
        allowed = {"name", "metric", "op", "target", "tol", "informational"}
        unknown = set(gate) - allowed
        if unknown:
            raise ConfigError(f"{where} has unknown keys {sorted(unknown)}", field="gates")
        for req in ("name", "metric", "op", "target"):
            if req not in gate:
                raise ConfigError(f"{where} is missing '{req}'", field="gates")
        if gate["op"] not in GATE_OPS:
            raise ConfigError(
                f"{where} op must be one of {GATE_OPS}, got {gate['op']!r}", field="gates"
            )
        _as_float(gate["target"], f"{where}.target", positive=False)
        if gate["op"].startswith("within"):
            if "tol" not in gate:
                raise ConfigError(f"{where} needs 'tol' for op {gate['op']}", field="gates")
            _as_float(gate["tol"], f"{where}.tol")
        if "informational" in gate:
            _as_bool(gate["informational"], f"{where}.informational")
        gates.append(dict(gate))
    return tuple(gates)


_KEYS_BY_EXPERIMENT: dict[str, set[str]] = {
    "lln": {"d", "alpha", "n", "replicates"},
    "mean-gain": {"d", "alpha", "n", "replicates"},
    "log-regime": {"d", "alpha", "n", "replicates"},
    "mu-limit": {"d", "alpha", "n", "lambda", "replicates"},
    "variance-scan": {"d", "alpha", "n", "replicates"},
    "cauchy-tail": {"d", "alpha", "n", "replicates"},
    "resample-check": {
        "d",
        "alpha",
        "n",
        "i",
        "outer_reps",
        "inner_reps",
        "identity_instances",
        "identity_max_n",
    },
    "voronoi-scan": {"d", "n", "replicates", "sample_factor"},
    "oracle-check": {
        "d",
        "alpha",
        "builds",
        "max_n",
        "coupling_instances",
        "coupling_lambda",
    },
    "constants": {"d", "alpha"},
}

_COMMON_KEYS = {
    "experiment",
    "master_seed",
    "threads",
    "out_dir",
    "dump_edges",
    "shadow_oracle",
    "gates",
}


def validate_config(raw: dict) -> ExperimentConfig:
    """Parse a raw config mapping into a validated ExperimentConfig.

    Unknown keys are rejected rather than ignored so that a typo can never
    silently run a different experiment than the one intended.
    """
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    experiment = _required(raw, "experiment")
    if experiment not in EXPERIMENT_NAMES:
        raise ConfigError(
            f"unknown experiment {experiment!r}; expected one of {EXPERIMENT_NAMES}",
            field="experiment",
        )
    allowed = _COMMON_KEYS | _KEYS_BY_EXPERIMENT[experiment]
    unknown = set(raw) - allowed
    if unknown:
        raise ConfigError(
            f"unknown config keys for {experiment}: {sorted(unknown)}",
            field=sorted(unknown)[0],
        )

    master_seed = _as_int(_required(raw, "master_seed"), "master_seed", minimum=0)
    if master_seed >= 1 << 64:
        raise ConfigError("'master_seed' must fit in 64 bits", field="master_seed")
    threads = (
        _as_int(raw["threads"], "threads", minimum=1)
        if "threads" in raw
        else (os.cpu_count() or 1)
    )
    out_dir = raw.get("out_dir")
    if out_dir is not None and not isinstance(out_dir, str):
        raise ConfigError("'out_dir' must be a string", field="out_dir")
    dump_edges = _as_bool(raw.get("dump_edges", False), "dump_edges")
    shadow_oracle = _as_bool(raw.get("shadow_oracle", False), "shadow_oracle")
    gates = _validate_gates(raw.get("gates", []))

    cfg = ExperimentConfig(
        experiment=experiment,
        master_seed=master_seed,
        threads=threads,
        out_dir=out_dir,
        dump_edges=dump_edges,
        shadow_oracle=shadow_oracle,
        gates=gates,
    )

    if dump_edges and experiment not in _EDGE_DUMP_EXPERIMENTS:
        raise ConfigError(
            f"dump_edges is only supported for {_EDGE_DUMP_EXPERIMENTS}", field="dump_edges"
        )

    if experiment in ("lln", "mean-gain", "log-regime", "variance-scan", "cauchy-tail"):
        d = _as_int(_required(raw, "d"), "d", minimum=1)
        alpha = _as_float(_required(raw, "alpha"), "alpha")
        n = _as_int_list(_required(raw, "n"), "n", minimum=1)
        reps = _as_int(_required(raw, "replicates"), "replicates", minimum=1)
        regimes = predicted_regimes(d, alpha)
        if experiment == "lln" and regimes.mean_regime != "lln":
            raise ConfigError(
                f"lln requires alpha < d for a finite limit, got alpha={alpha}, d={d}",
                field="alpha",
            )
        if experiment == "mean-gain" and alpha > d:
            raise ConfigError(
                f"mean-gain requires alpha <= d (gain-law scope), got alpha={alpha}, d={d}",
                field="alpha",
            )
        if experiment == "log-regime" and regimes.mean_regime != "log":
            raise ConfigError(
                f"log-regime requires alpha == d, got alpha={alpha}, d={d}", field="alpha"
            )
        if experiment == "cauchy-tail":
            if regimes.variance_regime != "bounded":
                raise ConfigError(
                    f"cauchy-tail requires alpha > d/2, got alpha={alpha}, d={d}",
                    field="alpha",
                )
            if reps < 2:
                raise ConfigError("cauchy-tail needs replicates >= 2", field="replicates")
        if experiment in ("variance-scan", "cauchy-tail") and len(set(n)) != len(n):
            raise ConfigError("'n' must not contain duplicates", field="n")
        return replace(cfg, d=d, alpha=alpha, n=n, replicates=reps)

    if experiment == "mu-limit":
        d = _as_int(_required(raw, "d"), "d", minimum=1)
        alpha = _as_float(_required(raw, "alpha"), "alpha")
        if d != 1 or not alpha > 1:
            raise ConfigError(
                f"mu-limit has a closed-form target only for d=1, alpha > 1; "
                f"got d={d}, alpha={alpha}",
                field="alpha",
            )
        n = _as_int_list(_required(raw, "n"), "n", minimum=1)
        lam_raw = raw.get("lambda", [])
        if not isinstance(lam_raw, list):
            raise ConfigError("'lambda' must be a list", field="lambda")
        lam = tuple(_as_float(v, "lambda") for v in lam_raw)
        reps = _as_int(_required(raw, "replicates"), "replicates", minimum=1)
        return replace(cfg, d=d, alpha=alpha, n=n, lam=lam, replicates=reps)

    if experiment == "resample-check":
        d = _as_int(_required(raw, "d"), "d", minimum=1)
        alpha = _as_float(_required(raw, "alpha"), "alpha")
        n = _as_int_list(_required(raw, "n"), "n", minimum=1)
        if len(n) != 1:
            raise ConfigError("resample-check takes exactly one n", field="n")
        i_list = _as_int_list(_required(raw, "i"), "i", minimum=1)
        for i in i_list:
            if i > n[0]:
                raise ConfigError(f"conditioning index {i} exceeds n={n[0]}", field="i")
        outer = _as_int(_required(raw, "outer_reps"), "outer_reps", minimum=2)
        inner = _as_int(_required(raw, "inner_reps"), "inner_reps", minimum=2)
        instances = _as_int(
            _required(raw, "identity_instances"), "identity_instances", minimum=1
        )
        max_n = _as_int(_required(raw, "identity_max_n"), "identity_max_n", minimum=2)
        return replace(
            cfg,
            d=d,
            alpha=alpha,
            n=n,
            i_list=i_list,
            outer_reps=outer,
            inner_reps=inner,
            identity_instances=instances,
            identity_max_n=max_n,
        )

    if experiment == "voronoi-scan":
        d = _as_int(_required(raw, "d"), "d", minimum=1)
        n = _as_int_list(_required(raw, "n"), "n", minimum=2)
        if len(set(n)) != len(n):
            raise ConfigError("'n' must not contain duplicates", field="n")
        reps = _as_int(_required(raw, "replicates"), "replicates", minimum=2)
        factor = _as_int(_required(raw, "sample_factor"), "sample_factor", minimum=1)
        return replace(cfg, d=d, n=n, replicates=reps, sample_factor=factor)

    if experiment == "oracle-check":
        d_raw = _required(raw, "d")
        if isinstance(d_raw, int) and not isinstance(d_raw, bool):
            d_raw = [d_raw]
        d_list = _as_int_list(d_raw, "d", minimum=1)
        alpha = _as_float(_required(raw, "alpha"), "alpha")
        builds = _as_int(_required(raw, "builds"), "builds", minimum=1)
        max_n = _as_int(_required(raw, "max_n"), "max_n", minimum=2)
        coupling = _as_int(
            _required(raw, "coupling_instances"), "coupling_instances", minimum=1
        )
        coupling_lambda = _as_float(_required(raw, "coupling_lambda"), "coupling_lambda")
        return replace(
            cfg,
            d_list=d_list,
            alpha=alpha,
            builds=builds,
            max_n=max_n,
            coupling_instances=coupling,
            coupling_lambda=coupling_lambda,
        )

    # constants
    d = _as_int(_required(raw, "d"), "d", minimum=1)
    alpha = _as_float(_required(raw, "alpha"), "alpha")
    return replace(cfg, d=d, alpha=alpha)


def load_config(path: str) -> ExperimentConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    return validate_config(raw)


# --------------------------------------------------------------------------
# Planning


def _fmt(value) -> str:
    """Canonical value formatting for parameter keys and CSV cells."""
    if isinstance(value, float):
        return f"{value:g}"
    return str(value)


def _param_label(param_key: str) -> int:
    return label_from_text(param_key)


def _seed_path(config: ExperimentConfig, param_key: str, replicate: int) -> tuple[int, int, int]:
    return (label_from_text(config.experiment), _param_label(param_key), replicate)


def _grid_key(config: ExperimentConfig) -> str:
    ns = ",".join(str(v) for v in sorted(config.n))
    return f"d={config.d};alpha={_fmt(config.alpha)};grid={ns}"


def plan_grid(config: ExperimentConfig) -> tuple[PlannedJob, ...]:
    """Deterministically enumerate jobs with their stream addresses.

    Parameter-point labels hash the parameter values, so re-ordering a
    value list permutes the plan without changing any job's seed path.
    """
    exp = config.experiment
    jobs: list[PlannedJob] = []
    if exp in ("lln", "mean-gain", "log-regime"):
        for n in config.n:
            key = f"d={config.d};alpha={_fmt(config.alpha)};n={n}"
            for r in range(config.replicates or 0):
                jobs.append(PlannedJob(key, str(n), r, _seed_path(config, key, r)))
    elif exp == "mu-limit":
        for n in config.n:
            key = f"d={config.d};alpha={_fmt(config.alpha)};kind=binomial;n={n}"
            for r in range(config.replicates or 0):
                jobs.append(PlannedJob(key, str(n), r, _seed_path(config, key, r)))
        for lam in config.lam:
            key = f"d={config.d};alpha={_fmt(config.alpha)};kind=poisson;lam={_fmt(lam)}"
            for r in range(config.replicates or 0):
                jobs.append(PlannedJob(key, _fmt(lam), r, _seed_path(config, key, r)))
    elif exp == "variance-scan":
        key = _grid_key(config)
        for r in range(config.replicates or 0):
            jobs.append(PlannedJob(key, "", r, _seed_path(config, key, r)))
    elif exp == "cauchy-tail":
        for m in config.n:
            key = f"d={config.d};alpha={_fmt(config.alpha)};m={m}"
            jobs.append(PlannedJob(key, str(m), 0, _seed_path(config, key, 0)))
    elif exp == "resample-check":
        instances = config.identity_instances or 0
        chunks = (instances + _IDENTITY_CHUNK - 1) // _IDENTITY_CHUNK
        key = f"identity;max_n={config.identity_max_n}"
        for c in range(chunks):
            jobs.append(PlannedJob(key, "", c, _seed_path(config, key, c)))
        for i in config.i_list:
            ikey = (
                f"d={config.d};alpha={_fmt(config.alpha)};n={config.n[0]};i={i};"
                f"outer={config.outer_reps};inner={config.inner_reps}"
            )
            jobs.append(PlannedJob(ikey, str(i), 0, _seed_path(config, ikey, 0)))
    elif exp == "voronoi-scan":
        key = f"d={config.d};grid={','.join(str(v) for v in sorted(config.n))};factor={config.sample_factor}"
        for r in range(config.replicates or 0):
            jobs.append(PlannedJob(key, "", r, _seed_path(config, key, r)))
    elif exp == "oracle-check":
        builds = config.builds or 0
        chunks = (builds + _ORACLE_CHUNK - 1) // _ORACLE_CHUNK
        key = f"builds;d={','.join(str(v) for v in config.d_list)};max_n={config.max_n}"
        for c in range(chunks):
            jobs.append(PlannedJob(key, "", c, _seed_path(config, key, c)))
        coupling = config.coupling_instances or 0
        cchunks = (coupling + _ORACLE_CHUNK - 1) // _ORACLE_CHUNK
        ckey = (
            f"coupling;d={','.join(str(v) for v in config.d_list)};"
            f"lam={_fmt(config.coupling_lambda)}"
        )
        for c in range(cchunks):
            jobs.append(PlannedJob(ckey, "", c, _seed_path(config, ckey, c)))
    # constants plans no jobs
    return tuple(jobs)


# --------------------------------------------------------------------------
# Job bodies


def _build_sqd(coords: np.ndarray, shadow: bool) -> np.ndarray:
    """Squared edge lengths of the graph on coords, optionally shadowed by
    the quadratic oracle; a disagreement is a hard error, never a report."""
    if shadow:
        _, sqd, mismatches = _kernels.build_ong_checked(coords)
        if mismatches:
            raise OracleMismatchError(
                f"grid index disagreed with brute force on {mismatches} edge(s)"
            )
        return sqd
    _, sqd = _kernels.build_ong(coords)
    return sqd


def _job_lln(config: ExperimentConfig, job: PlannedJob, stream: RandomStream) -> list[Row]:
    n = int(job.n_or_lambda)
    seq = sample_binomial_process(n, config.d, stream)
    sqd = _build_sqd(seq.coords, config.shadow_oracle)
    total = _kernels.total_weight_from_sqd(sqd, config.alpha)
    scaled = float(n) ** ((config.alpha - config.d) / config.d) * total
    return [Row(job.param_key, job.n_or_lambda, "scaled_total", job.replicate, scaled)]


def _job_mean_gain(config: ExperimentConfig, job: PlannedJob, stream: RandomStream) -> list[Row]:
    n = int(job.n_or_lambda)
    seq = sample_binomial_process(n, config.d, stream)
    sqd = _build_sqd(seq.coords, config.shadow_oracle)
    gain_power = sqd[n - 1] ** (config.alpha * 0.5) if n >= 2 else 0.0
    scaled = float(n) ** (config.alpha / config.d) * gain_power
    return [Row(job.param_key, job.n_or_lambda, "scaled_gain_power", job.replicate, scaled)]


def _job_log_regime(config: ExperimentConfig, job: PlannedJob, stream: RandomStream) -> list[Row]:
    n = int(job.n_or_lambda)
    seq = sample_binomial_process(2 * n, config.d, stream)
    sqd = _build_sqd(seq.coords, config.shadow_oracle)
    totals = _kernels.prefix_totals(sqd, config.alpha, np.array([n, 2 * n], dtype=np.int64))
    return [
        Row(job.param_key, job.n_or_lambda, "dyadic_difference", job.replicate, totals[1] - totals[0])
    ]


def _job_mu_limit(config: ExperimentConfig, job: PlannedJob, stream: RandomStream) -> list[Row]:
    if ";kind=binomial;" in f";{job.param_key};":
        n = int(job.n_or_lambda)
        seq = sample_binomial_process(n, config.d, stream)
        sqd = _build_sqd(seq.coords, config.shadow_oracle)
        total = _kernels.total_weight_from_sqd(sqd, config.alpha)
    else:
        total = poissonized_total(float(job.n_or_lambda), config.d, config.alpha, stream).total
    return [Row(job.param_key, job.n_or_lambda, "total", job.replicate, total)]


def _job_variance_scan(
    config: ExperimentConfig, job: PlannedJob, stream: RandomStream
) -> list[Row]:
    ns = sorted(config.n)
    n_max = ns[-1]
    seq = sample_binomial_process(n_max, config.d, stream)
    sqd = _build_sqd(seq.coords, config.shadow_oracle)
    totals = _kernels.prefix_totals(sqd, config.alpha, np.array(ns, dtype=np.int64))
    base = f"d={config.d};alpha={_fmt(config.alpha)}"
    return [
        Row(f"{base};n={n}", str(n), "total", job.replicate, totals[k])
        for k, n in enumerate(ns)
    ]


def _job_cauchy_tail(config: ExperimentConfig, job: PlannedJob, stream: RandomStream) -> list[Row]:
    m = int(job.n_or_lambda)
    t = tail_increment_l2(m, 2 * m, config.d, config.alpha, config.replicates, stream)
    return [
        Row(job.param_key, job.n_or_lambda, "tail_l2", 0, t.second_moment),
        Row(job.param_key, job.n_or_lambda, "tail_l2_stderr", 0, t.stderr),
    ]


_IDENTITY_DIMS = (1, 2, 3)
_IDENTITY_ALPHAS = (0.5, 1.0, 2.0)


def _job_resample_identity(
    config: ExperimentConfig, job: PlannedJob, stream: RandomStream
) -> list[Row]:
    chunk = job.replicate
    lo = chunk * _IDENTITY_CHUNK
    hi = min(lo + _IDENTITY_CHUNK, config.identity_instances or 0)
    failures = 0
    max_rel_gap = 0.0
    for k in range(lo, hi):
        g = stream.child(k - lo).generator()
        d = _IDENTITY_DIMS[int(g.integers(0, len(_IDENTITY_DIMS)))]
        alpha = _IDENTITY_ALPHAS[int(g.integers(0, len(_IDENTITY_ALPHAS)))]
        n = int(g.integers(2, (config.identity_max_n or 2) + 1))
        i = int(g.integers(1, n + 1))
        seq = PointSequence(uniform_open(g, (n, d)))
        x_new = Point(tuple(uniform_open(g, (d,))))
        b = resample_breakdown(seq, i, x_new, alpha)
        rel = b.identity_gap() / b.identity_scale()
        if rel > max_rel_gap:
            max_rel_gap = rel
        if rel > _IDENTITY_REL_TOL:
            failures += 1
    return [
        Row(job.param_key, "", "identity_failures", chunk, float(failures)),
        Row(job.param_key, "", "identity_checked", chunk, float(hi - lo)),
        Row(job.param_key, "", "identity_max_rel_gap", chunk, max_rel_gap),
    ]


def _job_resample_dsq(
    config: ExperimentConfig, job: PlannedJob, stream: RandomStream
) -> list[Row]:
    i = int(job.n_or_lambda)
    est = estimate_conditioned_second_moment(
        config.n[0],
        i,
        config.d,
        config.alpha,
        config.outer_reps,
        config.inner_reps,
        stream,
    )
    return [
        Row(job.param_key, job.n_or_lambda, "dsq", 0, est.value),
        Row(job.param_key, job.n_or_lambda, "dsq_stderr", 0, est.stderr),
    ]


_POINTS_LABEL = label_from_text("voronoi.points")
_MC_LABEL = label_from_text("voronoi.samples")


def _voronoi_probes(d: int) -> tuple[Point, Point]:
    interior = Point(tuple([0.5] * d))
    boundary = Point(tuple([0.03] + [0.5] * (d - 1)))
    return interior, boundary


def _job_voronoi(config: ExperimentConfig, job: PlannedJob, stream: RandomStream) -> list[Row]:
    d = config.d
    ns = sorted(config.n)
    interior, boundary = _voronoi_probes(d)
    seq = sample_binomial_process(ns[-1], d, stream.child(_POINTS_LABEL))
    rows: list[Row] = []
    violations = 0
    base = f"d={d}"
    for k, n in enumerate(ns):
        prefix = seq.prefix(n)
        samples = (config.sample_factor or 1) * n
        e_int = voronoi_diameter(
            interior, prefix, samples, s=stream.child(_MC_LABEL, k, 0)
        )
        e_bnd = voronoi_diameter(
            boundary, prefix, samples, s=stream.child(_MC_LABEL, k, 1)
        )
        key = f"{base};n={n}"
        rows.append(Row(key, str(n), "diam_interior", job.replicate, e_int.value))
        rows.append(Row(key, str(n), "diam_boundary", job.replicate, e_bnd.value))
        if d == 1:
            for probe, est in ((interior, e_int), (boundary, e_bnd)):
                radius = cone_radius_1d(probe, prefix)
                if est.value > 2.0 * radius.value + _CONE_SLACK:
                    violations += 1
    if d == 1:
        rows.append(Row(job.param_key, "", "cone_violations", job.replicate, float(violations)))
        rows.append(
            Row(job.param_key, "", "cone_checked", job.replicate, float(2 * len(ns)))
        )
    return rows


def _job_oracle_builds(
    config: ExperimentConfig, job: PlannedJob, stream: RandomStream
) -> list[Row]:
    chunk = job.replicate
    lo = chunk * _ORACLE_CHUNK
    hi = min(lo + _ORACLE_CHUNK, config.builds or 0)
    mismatches = 0
    for k in range(lo, hi):
        g = stream.child(k - lo).generator()
        d = config.d_list[int(g.integers(0, len(config.d_list)))]
        n = int(g.integers(2, (config.max_n or 2) + 1))
        coords = uniform_open(g, (n, d))
        _, _, bad = _kernels.build_ong_checked(coords)
        mismatches += int(bad)
    return [
        Row(job.param_key, "", "edge_mismatches", chunk, float(mismatches)),
        Row(job.param_key, "", "builds_checked", chunk, float(hi - lo)),
    ]


def _job_oracle_coupling(
    config: ExperimentConfig, job: PlannedJob, stream: RandomStream
) -> list[Row]:
    chunk = job.replicate
    lo = chunk * _ORACLE_CHUNK
    hi = min(lo + _ORACLE_CHUNK, config.coupling_instances or 0)
    failures = 0
    for k in range(lo, hi):
        inst = stream.child(k - lo)
        g = inst.generator()
        d = config.d_list[int(g.integers(0, len(config.d_list)))]
        draw_stream = inst.child(1)
        pt = poissonized_total(config.coupling_lambda, d, config.alpha, draw_stream)
        forced = poissonized_total(
            config.coupling_lambda, d, config.alpha, draw_stream, force_count=pt.count
        )
        if pt.count > 0:
            seq = sample_binomial_process(pt.count, d, draw_stream)
            sqd = _build_sqd(seq.coords, False)
            binom = _kernels.total_weight_from_sqd(sqd, config.alpha)
        else:
            binom = 0.0
        if forced.total != pt.total or binom != pt.total or forced.count != pt.count:
            failures += 1
    return [
        Row(job.param_key, "", "coupling_failures", chunk, float(failures)),
        Row(job.param_key, "", "coupling_checked", chunk, float(hi - lo)),
    ]


def _dispatch(config: ExperimentConfig, job: PlannedJob) -> list[Row]:
    stream = RandomStream(config.master_seed, job.seed_path)
    exp = config.experiment
    if exp == "lln":
        return _job_lln(config, job, stream)
    if exp == "mean-gain":
        return _job_mean_gain(config, job, stream)
    if exp == "log-regime":
        return _job_log_regime(config, job, stream)
    if exp == "mu-limit":
        return _job_mu_limit(config, job, stream)
    if exp == "variance-scan":
        return _job_variance_scan(config, job, stream)
    if exp == "cauchy-tail":
        return _job_cauchy_tail(config, job, stream)
    if exp == "resample-check":
        if job.param_key.startswith("identity;"):
            return _job_resample_identity(config, job, stream)
        return _job_resample_dsq(config, job, stream)
    if exp == "voronoi-scan":
        return _job_voronoi(config, job, stream)
    if exp == "oracle-check":
        if job.param_key.startswith("builds;"):
            return _job_oracle_builds(config, job, stream)
        return _job_oracle_coupling(config, job, stream)
    raise RuntimeError(f"no job body for experiment {exp}")


# --------------------------------------------------------------------------
# Reduction and summaries


def _reduce(rows: list[Row]) -> dict[tuple[str, str], stats.EstimateSummary]:
    """Fold raw rows into summaries in a canonical order.

    Sorting by (parameter key, statistic, replicate) before the sequential
    fold makes the reduction independent of job completion order, which is
    what buys byte-identical output at any thread count.
    """
    ordered = sorted(rows, key=lambda r: (r.key, r.statistic, r.replicate))
    out: dict[tuple[str, str], stats.EstimateSummary] = {}
    for row in ordered:
        key = (row.key, row.statistic)
        out[key] = stats.update(out.get(key, stats.EstimateSummary.empty()), row.value)
    return out


def _group_total(summaries, key: str, statistic: str) -> float:
    s = summaries.get((key, statistic))
    if s is None:
        return 0.0
    return s.mean * s.count


def _csv_value(v) -> str:
    if v is None:
        return ""
    if isinstance(v, str):
        return v
    return repr(float(v))


def _mean_stderr_metrics(
    config: ExperimentConfig,
    summaries,
    statistic: str,
    points: list[tuple[str, str]],
    metric_prefix: str,
) -> tuple[dict, list, list[tuple[float, float]]]:
    """Shared mean/stderr extraction for per-parameter-point statistics.

    points is a list of (param_key, n_or_lambda); returns metrics, csv
    rows, and (n, mean) pairs for any follow-up slope fit.
    """
    metrics: dict = {}
    csv_rows: list = []
    series: list[tuple[float, float]] = []
    for key, label in points:
        s = summaries[(key, statistic)]
        metrics[f"mean_{metric_prefix}{label}"] = s.mean
        metrics[f"stderr_{metric_prefix}{label}"] = s.stderr if s.stderr is not None else 0.0
        csv_rows.append(
            (
                config.experiment,
                config.d,
                config.alpha,
                label,
                statistic,
                s.mean,
                s.stderr,
            )
        )
        series.append((float(label), s.mean))
    return metrics, csv_rows, series


def _summ_lln(config: ExperimentConfig, rows, summaries) -> _Bundle:
    bundle = _Bundle(theory=theory_constants(config.d, config.alpha).to_json_dict())
    points = [
        (f"d={config.d};alpha={_fmt(config.alpha)};n={n}", str(n)) for n in config.n
    ]
    metrics, csv_rows, _ = _mean_stderr_metrics(
        config, summaries, "scaled_total", points, "scaled_total_n"
    )
    bundle.metrics.update(metrics)
    bundle.csv_rows.extend(csv_rows)
    return bundle


def _summ_mean_gain(config: ExperimentConfig, rows, summaries) -> _Bundle:
    bundle = _Bundle(theory=theory_constants(config.d, config.alpha).to_json_dict())
    points = [
        (f"d={config.d};alpha={_fmt(config.alpha)};n={n}", str(n)) for n in config.n
    ]
    metrics, csv_rows, _ = _mean_stderr_metrics(
        config, summaries, "scaled_gain_power", points, "scaled_gain_n"
    )
    bundle.metrics.update(metrics)
    bundle.csv_rows.extend(csv_rows)
    return bundle


def _summ_log_regime(config: ExperimentConfig, rows, summaries) -> _Bundle:
    bundle = _Bundle(theory=theory_constants(config.d, config.alpha).to_json_dict())
    points = [
        (f"d={config.d};alpha={_fmt(config.alpha)};n={n}", str(n)) for n in config.n
    ]
    metrics, csv_rows, _ = _mean_stderr_metrics(
        config, summaries, "dyadic_difference", points, "dyadic_diff_n"
    )
    bundle.metrics.update(metrics)
    bundle.csv_rows.extend(csv_rows)
    vd = bundle.theory["v_d"]
    bundle.metrics["dyadic_target"] = math.log(2.0) / vd
    return bundle


def _summ_mu_limit(config: ExperimentConfig, rows, summaries) -> _Bundle:
    bundle = _Bundle(theory=theory_constants(config.d, config.alpha).to_json_dict())
    base = f"d={config.d};alpha={_fmt(config.alpha)}"
    intervals: dict[str, tuple[float, float]] = {}
    for n in config.n:
        s = summaries[(f"{base};kind=binomial;n={n}", "total")]
        label = str(n)
        bundle.metrics[f"mean_total_n{label}"] = s.mean
        bundle.metrics[f"stderr_total_n{label}"] = s.stderr if s.stderr is not None else 0.0
        bundle.csv_rows.append(
            (config.experiment, config.d, config.alpha, label, "total", s.mean, s.stderr)
        )
        if s.stderr is not None:
            intervals[f"n{label}"] = (
                s.mean - _CI95_Z * s.stderr,
                s.mean + _CI95_Z * s.stderr,
            )
    for lam in config.lam:
        s = summaries[(f"{base};kind=poisson;lam={_fmt(lam)}", "total")]
        label = _fmt(lam)
        bundle.metrics[f"mean_total_lam{label}"] = s.mean
        bundle.metrics[f"stderr_total_lam{label}"] = s.stderr if s.stderr is not None else 0.0
        bundle.csv_rows.append(
            (config.experiment, config.d, config.alpha, label, "poisson_total", s.mean, s.stderr)
        )
        if s.stderr is not None:
            intervals[f"lam{label}"] = (
                s.mean - _CI95_Z * s.stderr,
                s.mean + _CI95_Z * s.stderr,
            )
    for n in config.n:
        for lam in config.lam:
            a = intervals.get(f"n{n}")
            b = intervals.get(f"lam{_fmt(lam)}")
            if a is None or b is None:
                continue
            overlap = 1.0 if (a[0] <= b[1] and b[0] <= a[1]) else 0.0
            bundle.metrics[f"ci_overlap_n{n}_lam{_fmt(lam)}"] = overlap
    bundle.notes["ci_overlap"] = "95% normal intervals on the two means must intersect"
    return bundle


def _summ_variance_scan(config: ExperimentConfig, rows, summaries) -> _Bundle:
    bundle = _Bundle(theory=theory_constants(config.d, config.alpha).to_json_dict())
    base = f"d={config.d};alpha={_fmt(config.alpha)}"
    ns = sorted(config.n)
    var_points: list[tuple[float, float]] = []
    ratios: list[float] = []
    for n in ns:
        s = summaries[(f"{base};n={n}", "total")]
        variance = s.variance
        assert variance is not None
        stderr = _variance_stderr_from_summary(s)
        bundle.metrics[f"variance_total_n{n}"] = variance
        bundle.metrics[f"variance_stderr_total_n{n}"] = stderr
        bundle.csv_rows.append(
            (config.experiment, config.d, config.alpha, str(n), "mean_total", s.mean, s.stderr)
        )
        bundle.csv_rows.append(
            (config.experiment, config.d, config.alpha, str(n), "variance_total", variance, stderr)
        )
        var_points.append((float(n), variance))
        ratio = variance / math.log(float(n))
        ratios.append(ratio)
        bundle.csv_rows.append(
            (config.experiment, config.d, config.alpha, str(n), "variance_over_log", ratio, None)
        )
    fit = stats.loglog_slope(var_points)
    bundle.fits["variance"] = fit.to_json_dict()
    bundle.metrics["slope_variance"] = fit.slope
    bundle.metrics["slope_variance_stderr"] = fit.slope_stderr
    bundle.metrics["slope_variance_r2"] = fit.r_squared
    bundle.metrics["var_over_log_ratio"] = max(ratios) / min(ratios)
    bundle.csv_rows.append(
        (config.experiment, config.d, config.alpha, "", "slope_variance", fit.slope, fit.slope_stderr)
    )
    bundle.csv_rows.append(
        (
            config.experiment,
            config.d,
            config.alpha,
            "",
            "var_over_log_ratio",
            max(ratios) / min(ratios),
            None,
        )
    )
    return bundle


def _variance_stderr_from_summary(s: stats.EstimateSummary) -> float:
    r = s.count
    if r < 2:
        return 0.0
    s2 = s.m2 / (r - 1)
    var_of_s2 = (s.m4 / r - s2 * s2 * (r - 3.0) / (r - 1.0)) / r
    return math.sqrt(var_of_s2) if var_of_s2 > 0.0 else 0.0


def _summ_cauchy_tail(config: ExperimentConfig, rows, summaries) -> _Bundle:
    bundle = _Bundle(theory=theory_constants(config.d, config.alpha).to_json_dict())
    ms = sorted(config.n)
    points: list[tuple[float, float]] = []
    values: list[float] = []
    for m in ms:
        key = f"d={config.d};alpha={_fmt(config.alpha)};m={m}"
        value = summaries[(key, "tail_l2")].mean
        stderr = summaries[(key, "tail_l2_stderr")].mean
        bundle.metrics[f"tail_l2_m{m}"] = value
        bundle.metrics[f"tail_l2_stderr_m{m}"] = stderr
        bundle.csv_rows.append(
            (config.experiment, config.d, config.alpha, str(m), "tail_l2", value, stderr)
        )
        points.append((float(m), value))
        values.append(value)
    fit = stats.loglog_slope(points)
    bundle.fits["tail"] = fit.to_json_dict()
    bundle.metrics["slope_tail"] = fit.slope
    bundle.metrics["slope_tail_stderr"] = fit.slope_stderr
    monotone = all(values[k + 1] < values[k] for k in range(len(values) - 1))
    bundle.metrics["tail_monotone"] = 1.0 if monotone else 0.0
    bundle.csv_rows.append(
        (config.experiment, config.d, config.alpha, "", "slope_tail", fit.slope, fit.slope_stderr)
    )
    return bundle


def _summ_resample_check(config: ExperimentConfig, rows, summaries) -> _Bundle:
    bundle = _Bundle(theory=theory_constants(config.d, config.alpha).to_json_dict())
    ikey = f"identity;max_n={config.identity_max_n}"
    failures = _group_total(summaries, ikey, "identity_failures")
    checked = _group_total(summaries, ikey, "identity_checked")
    max_gap = max(
        (r.value for r in rows if r.key == ikey and r.statistic == "identity_max_rel_gap"),
        default=0.0,
    )
    bundle.metrics["identity_failures"] = failures
    bundle.metrics["identity_checked"] = checked
    bundle.metrics["identity_max_rel_gap"] = max_gap
    bundle.csv_rows.append(
        (config.experiment, "", "", "", "identity_failures", failures, None)
    )
    bundle.csv_rows.append(
        (config.experiment, "", "", "", "identity_max_rel_gap", max_gap, None)
    )
    points: list[tuple[float, float]] = []
    for i in config.i_list:
        key = (
            f"d={config.d};alpha={_fmt(config.alpha)};n={config.n[0]};i={i};"
            f"outer={config.outer_reps};inner={config.inner_reps}"
        )
        value = summaries[(key, "dsq")].mean
        stderr = summaries[(key, "dsq_stderr")].mean
        bundle.metrics[f"dsq_i{i}"] = value
        bundle.metrics[f"dsq_stderr_i{i}"] = stderr
        bundle.csv_rows.append(
            (config.experiment, config.d, config.alpha, str(i), "dsq", value, stderr)
        )
        points.append((float(i), value))
    if len(points) >= 3 and all(v > 0 for _, v in points):
        fit = stats.loglog_slope(points)
        bundle.fits["dsq"] = fit.to_json_dict()
        bundle.metrics["slope_dsq"] = fit.slope
        bundle.metrics["slope_dsq_stderr"] = fit.slope_stderr
        bundle.csv_rows.append(
            (config.experiment, config.d, config.alpha, "", "slope_dsq", fit.slope, fit.slope_stderr)
        )
    bundle.notes["dsq_estimator"] = (
        "nested Monte Carlo; the squared conditional mean is estimated by the "
        "product of two independent inner half-averages, which removes the "
        "inner-variance/inner_reps bias of squaring one inner mean"
    )
    return bundle


def _summ_voronoi(config: ExperimentConfig, rows, summaries) -> _Bundle:
    bundle = _Bundle()
    ns = sorted(config.n)
    for name in ("diam_interior", "diam_boundary"):
        points: list[tuple[float, float]] = []
        for n in ns:
            s = summaries[(f"d={config.d};n={n}", name)]
            bundle.metrics[f"mean_{name}_n{n}"] = s.mean
            bundle.metrics[f"stderr_{name}_n{n}"] = s.stderr if s.stderr is not None else 0.0
            bundle.csv_rows.append(
                (config.experiment, config.d, "", str(n), name, s.mean, s.stderr)
            )
            points.append((float(n), s.mean))
        fit = stats.loglog_slope(points)
        bundle.fits[name] = fit.to_json_dict()
        bundle.metrics[f"slope_{name}"] = fit.slope
        bundle.metrics[f"slope_{name}_stderr"] = fit.slope_stderr
        bundle.csv_rows.append(
            (config.experiment, config.d, "", "", f"slope_{name}", fit.slope, fit.slope_stderr)
        )
    if config.d == 1:
        key = (
            f"d={config.d};grid={','.join(str(v) for v in ns)};factor={config.sample_factor}"
        )
        violations = _group_total(summaries, key, "cone_violations")
        checked = _group_total(summaries, key, "cone_checked")
        bundle.metrics["cone_violations"] = violations
        bundle.metrics["cone_checked"] = checked
        bundle.csv_rows.append(
            (config.experiment, config.d, "", "", "cone_violations", violations, None)
        )
    bundle.notes["sampled_method"] = (
        "d >= 2 diameters are lower bounds from kept uniform samples; the "
        "per-n sample count is sample_factor * n so the kept count per cell "
        "stays level and the scaling exponent is not distorted"
    )
    return bundle


def _summ_oracle_check(config: ExperimentConfig, rows, summaries) -> _Bundle:
    bundle = _Bundle()
    bkey = f"builds;d={','.join(str(v) for v in config.d_list)};max_n={config.max_n}"
    ckey = (
        f"coupling;d={','.join(str(v) for v in config.d_list)};"
        f"lam={_fmt(config.coupling_lambda)}"
    )
    bundle.metrics["edge_mismatches"] = _group_total(summaries, bkey, "edge_mismatches")
    bundle.metrics["builds_checked"] = _group_total(summaries, bkey, "builds_checked")
    bundle.metrics["coupling_failures"] = _group_total(summaries, ckey, "coupling_failures")
    bundle.metrics["coupling_checked"] = _group_total(summaries, ckey, "coupling_checked")
    for name in ("edge_mismatches", "builds_checked", "coupling_failures", "coupling_checked"):
        bundle.csv_rows.append(
            (config.experiment, "", config.alpha, "", name, bundle.metrics[name], None)
        )
    return bundle


def _summ_constants(config: ExperimentConfig, rows, summaries) -> _Bundle:
    tc = theory_constants(config.d, config.alpha)
    bundle = _Bundle(theory=tc.to_json_dict())
    for name, value in tc.to_json_dict().items():
        if name in ("d", "alpha") or not isinstance(value, (int, float)):
            continue
        bundle.metrics[name] = float(value)
        bundle.csv_rows.append(
            (config.experiment, config.d, config.alpha, "", name, float(value), None)
        )
    return bundle


_SUMMARIZERS: dict[str, Callable[..., _Bundle]] = {
    "lln": _summ_lln,
    "mean-gain": _summ_mean_gain,
    "log-regime": _summ_log_regime,
    "mu-limit": _summ_mu_limit,
    "variance-scan": _summ_variance_scan,
    "cauchy-tail": _summ_cauchy_tail,
    "resample-check": _summ_resample_check,
    "voronoi-scan": _summ_voronoi,
    "oracle-check": _summ_oracle_check,
    "constants": _summ_constants,
}


# --------------------------------------------------------------------------
# Gates


def evaluate_gate(gate: dict, metrics: dict) -> dict:
    """Compare one gate against the metrics; a missing metric fails."""
    result = dict(gate)
    value = metrics.get(gate["metric"])
    result["value"] = value
    if value is None:
        result["passed"] = False
        return result
    target = float(gate["target"])
    op = gate["op"]
    if op == "le":
        passed = value <= target
    elif op == "ge":
        passed = value >= target
    elif op == "eq":
        passed = value == target
    elif op == "within-rel":
        passed = abs(value - target) <= float(gate["tol"]) * abs(target)
    else:
        passed = abs(value - target) <= float(gate["tol"])
    result["passed"] = bool(passed)
    return result


# --------------------------------------------------------------------------
# Edge dumping


def _dump_edges(config: ExperimentConfig, out_dir: str) -> str:
    """Re-generate the replicate-0 build of each parameter point from its
    seed path and write its edge list; regeneration costs one build and
    keeps the job pipeline free of bulk payloads."""
    specs: list[tuple[str, np.ndarray]] = []
    if config.experiment in ("lln", "mean-gain"):
        for n in config.n:
            key = f"d={config.d};alpha={_fmt(config.alpha)};n={n}"
            stream = RandomStream(config.master_seed, _seed_path(config, key, 0))
            specs.append((key, sample_binomial_process(n, config.d, stream).coords))
    elif config.experiment == "log-regime":
        for n in config.n:
            key = f"d={config.d};alpha={_fmt(config.alpha)};n={n}"
            stream = RandomStream(config.master_seed, _seed_path(config, key, 0))
            specs.append((key, sample_binomial_process(2 * n, config.d, stream).coords))
    elif config.experiment == "mu-limit":
        base = f"d={config.d};alpha={_fmt(config.alpha)}"
        for n in config.n:
            key = f"{base};kind=binomial;n={n}"
            stream = RandomStream(config.master_seed, _seed_path(config, key, 0))
            specs.append((key, sample_binomial_process(n, config.d, stream).coords))
        for lam in config.lam:
            key = f"{base};kind=poisson;lam={_fmt(lam)}"
            stream = RandomStream(config.master_seed, _seed_path(config, key, 0))
            pt = poissonized_total(lam, config.d, config.alpha, stream)
            if pt.count > 0:
                specs.append((key, sample_binomial_process(pt.count, config.d, stream).coords))
            else:
                specs.append((key, np.empty((0, config.d))))
    elif config.experiment == "variance-scan":
        key = _grid_key(config)
        stream = RandomStream(config.master_seed, _seed_path(config, key, 0))
        specs.append((key, sample_binomial_process(max(config.n), config.d, stream).coords))
    path = os.path.join(out_dir, "edges.csv")
    lines = ["param_key,source,target,length"]
    for key, coords in specs:
        targets, sqd = _kernels.build_ong(coords)
        for idx in range(1, coords.shape[0]):
            lines.append(
                f"{key},{idx + 1},{int(targets[idx]) + 1},{repr(math.sqrt(sqd[idx]))}"
            )
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
    return path


# --------------------------------------------------------------------------
# The runner


def _manifest(
    config: ExperimentConfig, jobs: tuple[PlannedJob, ...], wall_seconds: float
) -> dict:
    grouped: dict[str, dict] = {}
    for job in jobs:
        entry = grouped.setdefault(
            job.param_key,
            {
                "param_label": _param_label(job.param_key),
                "replicates": 0,
            },
        )
        entry["replicates"] += 1
    return {
        "config": config.to_json_dict(),
        "package_version": _package_version(),
        "timestamp_utc": datetime.now(timezone.utc).isoformat(),
        "wall_seconds": wall_seconds,
        "threads": config.threads,
        "host_cpu_count": os.cpu_count(),
        "seed_rule": (
            "per-job stream = RandomStream(master_seed, path) with path = "
            "(label(experiment), label(param_key), replicate); label = "
            "big-endian 8-byte blake2b of the text"
        ),
        "experiment_label": label_from_text(config.experiment),
        "seed_paths": {
            key: grouped[key] for key in sorted(grouped)
        },
    }


def _package_version() -> str:
    from . import __version__

    return __version__


def run(config: ExperimentConfig) -> RunResult:
    """Execute one experiment end to end and write its three report files.

    Files are written only after every job has finished, so a crashed run
    leaves no partial results behind. The exit code is 0 only if every
    non-informational gate passed.
    """
    if config.out_dir is None:
        raise ConfigError("no output directory: set 'out_dir' or pass --out", field="out_dir")
    jobs = plan_grid(config)
    start = time.monotonic()
    rows: list[Row] = []
    if jobs:
        with ThreadPoolExecutor(max_workers=config.threads) as pool:
            for job_rows in pool.map(lambda j: _dispatch(config, j), jobs):
                rows.extend(job_rows)
    wall = time.monotonic() - start
    summaries = _reduce(rows)
    bundle = _SUMMARIZERS[config.experiment](config, rows, summaries)
    gate_results = tuple(evaluate_gate(g, bundle.metrics) for g in config.gates)
    passed = all(g["passed"] for g in gate_results if not g.get("informational", False))

    os.makedirs(config.out_dir, exist_ok=True)
    results_path = os.path.join(config.out_dir, "results.csv")
    lines = [",".join(RESULTS_HEADER)]
    for row in bundle.csv_rows:
        exp, d, alpha, n_or_lambda, statistic, value, stderr = row
        lines.append(
            ",".join(
                [
                    exp,
                    "" if d == "" else str(d),
                    "" if alpha == "" else _fmt(alpha),
                    str(n_or_lambda),
                    statistic,
                    _csv_value(value),
                    _csv_value(stderr),
                ]
            )
        )
    with open(results_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")

    summary = {
        "experiment": config.experiment,
        "package_version": _package_version(),
        "metrics": bundle.metrics,
        "fits": bundle.fits,
        "theory": bundle.theory,
        "notes": bundle.notes,
        "gates": list(gate_results),
        "passed": passed,
    }
    summary_path = os.path.join(config.out_dir, "summary.json")
    with open(summary_path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")

    manifest_path = os.path.join(config.out_dir, "manifest.json")
    with open(manifest_path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(_manifest(config, jobs, wall), fh, indent=2, sort_keys=True)
        fh.write("\n")

    if config.dump_edges:
        _dump_edges(config, config.out_dir)

    return RunResult(
        exit_code=0 if passed else 1,
        out_dir=config.out_dir,
        passed=passed,
        metrics=bundle.metrics,
        gate_results=gate_results,
        results_path=results_path,
        summary_path=summary_path,
        manifest_path=manifest_path,
    )
