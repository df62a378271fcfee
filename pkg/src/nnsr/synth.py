"""Synthetic robust matrix completion instances, RRE, and parameter sweeps.

Instance recipe: M_t = U V^T with standard normal U (m x r) and V (n x r);
round(alpha*m*n) entries drawn without replacement get uniform noise on
[-beta/2, beta/2]; then each entry is observed independently with
probability gamma. Every random draw comes from a numpy PCG64 stream
keyed by (seed, purpose), so the three draws are independent of each other
and of evaluation order.
"""
from __future__ import annotations

import csv
import json
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Literal, Sequence

import numpy as np

from .matrix import cardinality
from .solver import SolverConfig, nnsr_solve

SweepAxis = Literal["gamma", "alpha", "beta", "rank", "lambda_c"]
REPORT_HEADER = ("axis", "value", "mean_rre", "mean_iters", "mean_seconds")

_FACTORS, _OUTLIERS, _MASK = 0, 1, 2


class UndefinedMetricError(ValueError):
    pass


@dataclass(frozen=True)
class SyntheticSpec:
    m: int = 200
    n: int = 200
    r: int = 5
    gamma: float = 0.8
    alpha: float = 0.2
    beta: float = 100.0
    seed: int = 0

    def __post_init__(self):
        if self.m < 1 or self.n < 1:
            raise ValueError("m and n must be positive")
        if not 1 <= self.r <= min(self.m, self.n):
            raise ValueError(f"rank {self.r} outside [1, {min(self.m, self.n)}]")
        if not 0 < self.gamma <= 1:
            raise ValueError(f"gamma must lie in (0, 1], got {self.gamma}")
        if not 0 <= self.alpha <= 1:
            raise ValueError(f"alpha must lie in [0, 1], got {self.alpha}")
        if not self.beta >= 0:
            raise ValueError(f"beta must be >= 0, got {self.beta}")


def rng_for(seed: int, *key: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=key)))


def derive_seed(seed: int, cell: int, repeat: int) -> int:
    """64-bit instance seed for (cell, repeat) of a sweep."""
    ss = np.random.SeedSequence(seed, spawn_key=(cell, repeat))
    return int(ss.generate_state(1, np.uint64)[0])


def gen_lowrank(spec: SyntheticSpec) -> np.ndarray:
    rng = rng_for(spec.seed, _FACTORS)
    u = rng.standard_normal((spec.m, spec.r))
    v = rng.standard_normal((spec.n, spec.r))
    return u @ v.T


def gen_mask(spec: SyntheticSpec) -> np.ndarray:
    if spec.gamma >= 1:
        return np.ones((spec.m, spec.n), dtype=bool)
    rng = rng_for(spec.seed, _MASK)
    return rng.random((spec.m, spec.n)) < spec.gamma


def outlier_positions(spec: SyntheticSpec) -> tuple[np.ndarray, np.ndarray]:
    """Flat indices and additive values of the injected outliers."""
    count = int(round(spec.alpha * spec.m * spec.n))
    rng = rng_for(spec.seed, _OUTLIERS)
    idx = rng.choice(spec.m * spec.n, size=count, replace=False)
    vals = rng.uniform(-spec.beta / 2, spec.beta / 2, size=count)
    return idx, vals


def inject_outliers(m_t: np.ndarray, spec: SyntheticSpec) -> np.ndarray:
    out = np.array(m_t, dtype=np.float64, copy=True)
    idx, vals = outlier_positions(spec)
    out.flat[idx] += vals
    return out


def rre(truth, estimate) -> float:
    """Squared relative reconstruction error ||truth - est||_F^2 / ||truth||_F^2."""
    truth = np.asarray(truth, dtype=np.float64)
    estimate = np.asarray(estimate, dtype=np.float64)
    if truth.shape != estimate.shape:
        raise ValueError(f"shape mismatch: {truth.shape} vs {estimate.shape}")
    denom = float(np.sum(truth * truth))
    if denom == 0:
        raise UndefinedMetricError("RRE is undefined for an all-zero ground truth")
    return float(np.sum((truth - estimate) ** 2)) / denom


@dataclass
class Problem:
    truth: np.ndarray
    x: np.ndarray  # corrupted, zero off the mask
    mask: np.ndarray


def make_problem(spec: SyntheticSpec) -> Problem:
    truth = gen_lowrank(spec)
    corrupted = inject_outliers(truth, spec)
    mask = gen_mask(spec)
    return Problem(truth=truth, x=np.where(mask, corrupted, 0.0), mask=mask)


@dataclass(frozen=True)
class SweepSpec:
    axis: SweepAxis
    values: tuple
    repeats: int = 10
    base: SyntheticSpec = field(default_factory=SyntheticSpec)
    solver: SolverConfig = field(default_factory=SolverConfig)

    def __post_init__(self):
        if self.axis not in ("gamma", "alpha", "beta", "rank", "lambda_c"):
            raise ValueError(f"unknown sweep axis {self.axis!r}")
        if self.repeats < 1:
            raise ValueError("repeats must be >= 1")

    def cell(self, value) -> tuple[SyntheticSpec, SolverConfig]:
        if self.axis == "lambda_c":
            return self.base, replace(self.solver, lambda_c=float(value), lam=None)
        key = "r" if self.axis == "rank" else self.axis
        cast = int if self.axis == "rank" else float
        return replace(self.base, **{key: cast(value)}), self.solver


@dataclass
class RepeatResult:
    seed: int
    rre: float
    iterations: int
    converged: bool
    seconds: float
    observed: int


@dataclass
class SweepRow:
    axis: str
    value: float
    mean_rre: float
    mean_iters: float
    mean_seconds: float
    repeats: list[RepeatResult]


def run_instance(spec: SyntheticSpec, cfg: SolverConfig) -> RepeatResult:
    prob = make_problem(spec)
    t0 = time.perf_counter()
    res = nnsr_solve(prob.x, prob.mask, cfg)
    elapsed = time.perf_counter() - t0
    return RepeatResult(
        seed=spec.seed, rre=rre(prob.truth, res.m), iterations=res.iterations,
        converged=res.converged, seconds=elapsed, observed=cardinality(prob.mask),
    )


class SweepCellError(RuntimeError):
    pass


def _run_job(job):
    cell, rep, value, spec, cfg = job
    try:
        return run_instance(spec, cfg)
    except Exception as exc:  # re-raised with the cell identified
        raise SweepCellError(f"cell {cell} (value={value}) repeat {rep}: {exc}") from exc


def default_workers() -> int:
    env = os.environ.get("NNSR_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def run_sweep(sweep: SweepSpec, workers: int | None = None) -> list[SweepRow]:
    """Solve ``repeats`` instances per axis value; rows sorted by value."""
    jobs = []
    for cell, value in enumerate(sweep.values):
        spec, cfg = sweep.cell(value)
        for rep in range(sweep.repeats):
            seeded = replace(spec, seed=derive_seed(sweep.base.seed, cell, rep))
            jobs.append((cell, rep, value, seeded, cfg))

    workers = default_workers() if workers is None else workers
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_job, jobs))
    else:
        results = [_run_job(j) for j in jobs]

    rows = []
    for cell, value in enumerate(sweep.values):
        reps = [r for j, r in zip(jobs, results) if j[0] == cell]
        rows.append(SweepRow(
            axis=sweep.axis, value=float(value),
            mean_rre=float(np.mean([r.rre for r in reps])),
            mean_iters=float(np.mean([r.iterations for r in reps])),
            mean_seconds=float(np.mean([r.seconds for r in reps])),
            repeats=reps,
        ))
    rows.sort(key=lambda r: r.value)
    return rows


def write_report_csv(rows: Sequence[SweepRow], path, timing: bool = False) -> None:
    """Write the sweep report.

    Wall-clock time is not reproducible, so ``mean_seconds`` is left empty
    unless ``timing`` is set; the numeric columns are then byte-stable.
    """
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(REPORT_HEADER)
        for r in rows:
            w.writerow([r.axis, repr(r.value), repr(r.mean_rre), repr(r.mean_iters),
                        repr(r.mean_seconds) if timing else ""])


def write_report_json(rows: Sequence[SweepRow], path) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump([asdict(r) for r in rows], fh, indent=2)
        fh.write("\n")
