"""Monte-Carlo study driver: existence probabilities, MSE, and root summaries.

Runs the (distribution, m, lambda, n) grid with M replications per cell.
Shortage cost is fixed at 1 and the excess cost equals lambda; only the ratio
enters k_m, so this normalization is observationally irrelevant and is
recorded in the run metadata.

Reproducibility contract: replication r of a cell seeds its generator with
SeedSequence((base_seed, dist_code, m, round(1000*lambda), n, r)) feeding
PCG64, so every (cell, replication) pair owns an independent stream that
does not depend on scheduling. Cells are computed as independent work items
(optionally in a process pool) and reduced in canonical grid order, which
makes outputs byte-identical for any worker count.
"""

from __future__ import annotations

import json
import logging
import math
import os
import time
from dataclasses import dataclass, field, asdict
from multiprocessing import Pool

import numpy as np

from . import __version__
from .cost import SeverityCost
from .demand import ExponentialDemand, UniformDemand
from .estimator import estimate_optimal_q
from .foc import solve_population_foc

__all__ = [
    "ExperimentConfig",
    "CellSummary",
    "run_cell",
    "run_grid",
    "existence_table",
    "mse_curves",
    "write_outputs",
]

log = logging.getLogger(__name__)

DIST_CODES = {"uniform": 1, "exponential": 2}
DEFAULT_M = (2, 3, 4, 5, 10)
DEFAULT_LAMBDA = (0.25, 0.45, 0.65, 0.85, 1.05, 1.25, 1.45, 1.65, 1.85)
DEFAULT_N = (20, 50, 100, 500, 1000, 5000, 10000)
DEFAULT_M_REPS = 5000
GENERATOR_NAME = "PCG64"
SEED_SCHEME = "SeedSequence((base_seed, dist_code, m, round(1000*lambda), n, rep))"

SUMMARY_COLUMNS = (
    "dist", "m", "lambda", "n", "M", "count_exist", "p_exist",
    "q_true", "mse", "bias", "q05", "q25", "q50", "q75", "q95",
)


@dataclass(frozen=True)
class ExperimentConfig:
    distribution: str = "uniform"
    m_list: tuple = DEFAULT_M
    lambda_list: tuple = DEFAULT_LAMBDA
    n_list: tuple = DEFAULT_N
    M: int = DEFAULT_M_REPS
    base_seed: int = 20250818
    select: str = "max"

    def __post_init__(self):
        if self.distribution not in DIST_CODES:
            raise ValueError(f"distribution must be one of {sorted(DIST_CODES)}, got {self.distribution!r}")
        for name, values in (("m_list", self.m_list), ("lambda_list", self.lambda_list), ("n_list", self.n_list)):
            if len(values) == 0:
                raise ValueError(f"{name} must be non-empty")
        object.__setattr__(self, "m_list", tuple(int(m) for m in self.m_list))
        object.__setattr__(self, "lambda_list", tuple(float(v) for v in self.lambda_list))
        object.__setattr__(self, "n_list", tuple(int(n) for n in self.n_list))
        if any(not 1 <= m <= 10 for m in self.m_list):
            raise ValueError(f"severity degrees must lie in 1..10, got {self.m_list}")
        if any(lam <= 0 for lam in self.lambda_list):
            raise ValueError(f"cost ratios must be positive, got {self.lambda_list}")
        if any(lam == 1.0 for lam in self.lambda_list):
            raise ValueError("cost ratio 1.0 is excluded (model assumes c_e != c_s)")
        if any(n < 1 for n in self.n_list):
            raise ValueError(f"sample sizes must be at least 1, got {self.n_list}")
        if self.M < 1:
            raise ValueError(f"replication count must be at least 1, got {self.M}")
        if self.select not in ("max", "cost-min"):
            raise ValueError(f"unknown selection rule {self.select!r}")

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        text = open(path).read()
        if str(path).endswith(".toml"):
            try:
                import tomllib
            except ModuleNotFoundError:  # stdlib from 3.11; tomli is the backport
                import tomli as tomllib

            return cls.from_dict(tomllib.loads(text))
        return cls.from_dict(json.loads(text))

    def cells(self):
        # canonical order: m, then lambda, then n; the reduction relies on it
        for m in self.m_list:
            for lam in self.lambda_list:
                for n in self.n_list:
                    yield (self.distribution, m, lam, n)


@dataclass(frozen=True)
class CellSummary:
    dist: str
    m: int
    lam: float
    n: int
    M: int
    count_exist: int
    p_exist: float
    q_true: float | None
    mse: float | None
    bias: float | None
    q05: float | None = None
    q25: float | None = None
    q50: float | None = None
    q75: float | None = None
    q95: float | None = None
    error: str | None = None
    reps: tuple = field(default_factory=tuple, repr=False)  # (rep, q_hat) for existing reps

    def row(self) -> dict:
        vals = {
            "dist": self.dist, "m": self.m, "lambda": _fmt(self.lam), "n": self.n,
            "M": self.M, "count_exist": self.count_exist, "p_exist": _fmt(self.p_exist),
            "q_true": _fmt(self.q_true), "mse": _fmt(self.mse), "bias": _fmt(self.bias),
            "q05": _fmt(self.q05), "q25": _fmt(self.q25), "q50": _fmt(self.q50),
            "q75": _fmt(self.q75), "q95": _fmt(self.q95),
        }
        return vals


def _fmt(v) -> str:
    # locale-independent, 9 significant digits, blank for missing
    if v is None:
        return ""
    return format(float(v), ".9g")


def _demand_model(dist: str):
    return UniformDemand(0.0, 1.0) if dist == "uniform" else ExponentialDemand(1.0)


def run_cell(dist: str, m: int, lam: float, n: int, M: int, base_seed: int, select: str = "max") -> CellSummary:
    """All M replications of one grid cell, sequential and deterministic."""
    if dist not in DIST_CODES:
        raise ValueError(f"distribution must be one of {sorted(DIST_CODES)}, got {dist!r}")
    if lam == 1.0:
        raise ValueError("cost ratio 1.0 is excluded (model assumes c_e != c_s)")
    model = _demand_model(dist)
    sc = SeverityCost(m=m, c_e=lam, c_s=1.0)

    report = solve_population_foc(model, sc)
    q_true = report.selected  # None marks a no-true-optimum cell; existence still tallied

    reps = []
    for r in range(M):
        ss = np.random.SeedSequence((base_seed, DIST_CODES[dist], m, round(1000 * lam), n, r))
        sample = model.sample(n, ss)
        result = estimate_optimal_q(sample, sc, select=select)
        if result.exists:
            reps.append((r, result.selected))

    count = len(reps)
    qhats = np.array([q for _, q in reps])
    mse = bias = None
    if count and q_true is not None:
        err = qhats - q_true
        mse = float(np.mean(err**2))
        bias = float(np.mean(err))
    qq = {}
    if count:
        levels = np.quantile(qhats, [0.05, 0.25, 0.50, 0.75, 0.95])
        qq = dict(zip(("q05", "q25", "q50", "q75", "q95"), map(float, levels)))
    return CellSummary(
        dist=dist, m=m, lam=lam, n=n, M=M, count_exist=count, p_exist=count / M,
        q_true=q_true, mse=mse, bias=bias, reps=tuple(reps), **qq,
    )


def _cell_task(args) -> CellSummary:
    dist, m, lam, n, M, base_seed, select = args
    try:
        return run_cell(dist, m, lam, n, M, base_seed, select)
    except Exception as exc:  # collected per cell, never fatal to the grid
        log.warning("cell (%s, m=%d, lambda=%g, n=%d) failed: %s", dist, m, lam, n, exc)
        return CellSummary(
            dist=dist, m=m, lam=lam, n=n, M=M, count_exist=0, p_exist=0.0,
            q_true=None, mse=None, bias=None, error=str(exc),
        )


def run_grid(config: ExperimentConfig, workers: int = 1) -> list[CellSummary]:
    """Every cell of the grid, reduced in canonical order for any worker count."""
    tasks = [
        (dist, m, lam, n, config.M, config.base_seed, config.select)
        for (dist, m, lam, n) in config.cells()
    ]
    t0 = time.monotonic()
    if workers > 1:
        with Pool(workers) as pool:
            summaries = pool.map(_cell_task, tasks)  # map preserves task order
    else:
        summaries = [_cell_task(t) for t in tasks]
    log.info("grid of %d cells finished in %.1fs", len(tasks), time.monotonic() - t0)
    return summaries


def existence_table(summaries, n_filter: int, include_odd: bool = False):
    """Existence-probability matrix at one sample size, rows m, columns lambda.

    Rows default to the even severities, the layout the study tables use;
    include_odd adds the odd rows (identically 1.0 in theory). Cells missing
    from the summaries render as blanks.
    """
    pool = [s for s in summaries if s.n == n_filter and s.error is None]
    lambdas = sorted({s.lam for s in pool})
    ms = sorted({s.m for s in pool if include_odd or s.m % 2 == 0})
    by_key = {(s.m, s.lam): s for s in pool}
    rows = []
    for m in ms:
        row = [m]
        for lam in lambdas:
            s = by_key.get((m, lam))
            row.append("" if s is None else s.p_exist)
        rows.append(row)
    return lambdas, rows


def mse_curves(summaries):
    """Long-format (dist, m, lambda, n, mse) records; undefined cells separated."""
    records, omitted = [], []
    for s in summaries:
        if s.error is not None or s.count_exist == 0 or s.mse is None:
            omitted.append((s.dist, s.m, s.lam, s.n, "no-existing-replications" if s.error is None else s.error))
            continue
        records.append((s.dist, s.m, s.lam, s.n, s.mse))
    return records, omitted


def _atomic_write(path: str, text: str) -> None:
    tmp = path + ".tmp"
    with open(tmp, "w", newline="") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _csv_text(header, rows) -> str:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(str(v) for v in row))
    return "\n".join(lines) + "\n"


def write_outputs(config: ExperimentConfig, summaries, out_dir: str, elapsed_s: float | None = None) -> list:
    """Write every study artifact; returns the paths. run_meta.json goes last."""
    os.makedirs(out_dir, exist_ok=True)
    written = []

    rows = [[s.row()[c] for c in SUMMARY_COLUMNS] for s in summaries]
    path = os.path.join(out_dir, "summaries.csv")
    _atomic_write(path, _csv_text(SUMMARY_COLUMNS, rows))
    written.append(path)

    dist = config.distribution
    for n in config.n_list:
        lambdas, trows = existence_table(summaries, n)
        header = ["m"] + [_fmt(l) for l in lambdas]
        body = [[r[0]] + [_fmt(v) if v != "" else "" for v in r[1:]] for r in trows]
        path = os.path.join(out_dir, f"existence_table_{dist}_n{n}.csv")
        _atomic_write(path, _csv_text(header, body))
        written.append(path)

    records, omitted = mse_curves(summaries)
    for key in omitted:
        log.info("mse row omitted for cell %s", key)
    path = os.path.join(out_dir, f"mse_curves_{dist}.csv")
    _atomic_write(path, _csv_text(
        ("dist", "m", "lambda", "n", "mse"),
        [(d, m, _fmt(l), n, _fmt(v)) for d, m, l, n, v in records],
    ))
    written.append(path)

    box_rows = []
    for s in summaries:
        for r, qhat in s.reps:
            box_rows.append((s.dist, s.m, _fmt(s.lam), s.n, r, _fmt(qhat)))
    path = os.path.join(out_dir, f"boxplot_data_{dist}.csv")
    _atomic_write(path, _csv_text(("dist", "m", "lambda", "n", "rep", "q_hat"), box_rows))
    written.append(path)

    cells = len(summaries)
    meta = {
        "config": {k: v for k, v in asdict(config).items()},
        "generator": GENERATOR_NAME,
        "seed_scheme": SEED_SCHEME,
        "cost_convention": "c_s = 1, c_e = lambda (only the ratio enters k_m)",
        "cells": cells,
        "experiments": cells * config.M,
        "version": __version__,
        "elapsed_seconds": elapsed_s,
    }
    path = os.path.join(out_dir, "run_meta.json")
    _atomic_write(path, json.dumps(meta, indent=2, sort_keys=True) + "\n")
    written.append(path)
    return written
