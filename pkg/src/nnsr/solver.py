"""NNSR: ADMM for robust matrix completion with the HOW implicit regularizer.

Solves  min_{M,S} ||M||_phi + lam * phi(S_Omega)  s.t.  X = M + S
by alternating

    M <- U diag(P_{1/rho}(s)) V^T           of  X - S + Lambda/rho
    S <- P_{lam/rho}(X - M + Lambda/rho)    on Omega
    S <- Lambda/rho - M                     off Omega
    Lambda <- Lambda + rho (X - M - S)
    rho <- mu * rho

until ||X - M - S||_F / ||X||_F <= tol or max_iter iterations.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .matrix import NumericError, ShapeError, as_mask, as_matrix, cardinality, thin_svd
from .prox import SQRT2, prox_how
from .svt import ShrinkSpec, shrink_factors

TRACE_HEADER = ("iter", "rho", "rel_e", "re_m", "re_x", "lagrange_fro", "rank_est")


class DivergenceError(NumericError):
    def __init__(self, message: str, iteration: int):
        super().__init__(f"{message} (iteration {iteration})")
        self.iteration = iteration


@dataclass(frozen=True)
class SolverConfig:
    """Solver parameters. ``None`` fields are resolved from the data.

    lam:    outlier weight; defaults to lambda_c / sqrt(max(m, n)).
    sigma:  fixed kernel size for both prox steps. When None (default) the
            kernel follows each threshold, sigma_k = sigma_ratio * threshold_k,
            which keeps every prox call at sigma <= sqrt(2) * threshold.
    rho0:   initial penalty; defaults to 1.25 / s_max(X_Omega).
    """

    lam: float | None = None
    lambda_c: float = 1.0
    sigma: float | None = None
    sigma_ratio: float = SQRT2
    rho0: float | None = None
    mu: float = 1.05
    tol: float = 1e-7
    max_iter: int = 1000
    eps_guard: float = 1e-12

    def __post_init__(self):
        if self.lam is not None and not self.lam > 0:
            raise ValueError(f"lam must be > 0, got {self.lam}")
        if not self.lambda_c > 0:
            raise ValueError(f"lambda_c must be > 0, got {self.lambda_c}")
        if self.sigma is not None and not self.sigma > 0:
            raise ValueError(f"sigma must be > 0, got {self.sigma}")
        if not self.sigma_ratio > 0:
            raise ValueError(f"sigma_ratio must be > 0, got {self.sigma_ratio}")
        if self.rho0 is not None and not self.rho0 > 0:
            raise ValueError(f"rho0 must be > 0, got {self.rho0}")
        if not self.mu > 1:
            raise ValueError(f"mu must be > 1, got {self.mu}")
        if not self.tol > 0:
            raise ValueError(f"tol must be > 0, got {self.tol}")
        if int(self.max_iter) != self.max_iter or self.max_iter < 1:
            raise ValueError(f"max_iter must be a positive integer, got {self.max_iter}")
        if not self.eps_guard > 0:
            raise ValueError(f"eps_guard must be > 0, got {self.eps_guard}")

    def resolve(self, x: np.ndarray) -> SolverConfig:
        """Materialize lam and rho0 for the (already masked) data matrix."""
        lam = self.lam
        if lam is None:
            lam = self.lambda_c / math.sqrt(max(x.shape))
        rho0 = self.rho0
        if rho0 is None:
            smax = float(thin_svd(x).s[0])
            rho0 = 1.25 / max(smax, self.eps_guard)
        return replace(self, lam=lam, rho0=rho0)

    def sigma_for(self, threshold: float) -> float:
        if self.sigma is not None:
            return self.sigma
        # threshold can underflow only after ~15000 iterations at mu = 1.05
        return max(self.sigma_ratio * threshold, np.finfo(float).tiny)


@dataclass
class SolveState:
    m: np.ndarray
    s: np.ndarray
    lagrange: np.ndarray
    rho: float
    iter: int = 0

    @classmethod
    def initial(cls, x: np.ndarray, rho0: float) -> SolveState:
        z = np.zeros_like(x)
        return cls(m=z.copy(), s=z.copy(), lagrange=z.copy(), rho=rho0, iter=0)


@dataclass(frozen=True)
class TraceRecord:
    iter: int
    rho: float  # penalty used by this iteration
    rel_e: float
    re_m: float
    re_x: float
    lagrange_fro: float
    rank_est: int
    dm_fro: float  # ||M^{k+1} - M^k||_F
    ds_fro: float  # ||S^{k+1} - S^k||_F


@dataclass
class SolveResult:
    m: np.ndarray
    s: np.ndarray
    lagrange: np.ndarray
    rho: float
    iterations: int
    converged: bool
    config: SolverConfig
    trace: list[TraceRecord] = field(default_factory=list)

    @property
    def completed(self) -> np.ndarray:
        # missing entries are read off M; observed ones too (S absorbs outliers)
        return self.m


class KktResiduals(NamedTuple):
    feasibility: float
    m_fixedpoint: float
    s_fixedpoint: float


def _prepare(x, mask):
    x = as_matrix(x, "x")
    mask = as_mask(mask, x.shape)
    return np.where(mask, x, 0.0), mask


def _m_update(x, s, lagrange, rho, cfg):
    t = 1.0 / rho
    spec = ShrinkSpec(threshold=t, sigma=cfg.sigma_for(t), kind="how")
    return shrink_factors(thin_svd(x - s + lagrange / rho), spec)


def _s_update(x, m, lagrange, rho, mask, cfg):
    t = cfg.lam / rho
    d = x - m + lagrange / rho
    return np.where(mask, prox_how(d, t, cfg.sigma_for(t)), lagrange / rho - m)


def _step(state: SolveState, x, mask, cfg: SolverConfig):
    rho = state.rho
    m_new, sv = _m_update(x, state.s, state.lagrange, rho, cfg)
    s_new = _s_update(x, m_new, state.lagrange, rho, mask, cfg)
    # off Omega the S update makes the residual exactly -Lambda/rho, so the
    # multiplier there is identically zero; write it so, free of rounding
    lagrange = np.where(mask, state.lagrange + rho * (x - m_new - s_new), 0.0)
    new = SolveState(m=m_new, s=s_new, lagrange=lagrange, rho=cfg.mu * rho, iter=state.iter + 1)
    return new, sv


def step(state: SolveState, x, mask, cfg: SolverConfig) -> SolveState:
    """One ADMM iteration (M, S, Lambda and rho updates)."""
    x, mask = _prepare(x, mask)
    if state.m.shape != x.shape:
        raise ShapeError(f"state shape {state.m.shape} does not match x {x.shape}")
    if cfg.lam is None:
        cfg = replace(cfg, lam=cfg.lambda_c / math.sqrt(max(x.shape)))
    return _step(state, x, mask, cfg)[0]


def kkt_residuals(state: SolveState, x, mask, cfg: SolverConfig) -> KktResiduals:
    """Primal feasibility and prox fixed-point gaps at ``state``.

    The fixed-point gaps measure how far M and S_Omega are from being
    reproduced by their own update maps at the state's (Lambda, rho); both
    vanish exactly at a stationary point.
    """
    x, mask = _prepare(x, mask)
    if cfg.lam is None:
        cfg = replace(cfg, lam=cfg.lambda_c / math.sqrt(max(x.shape)))
    feas = float(np.linalg.norm(x - state.m - state.s))
    m_fp, _ = _m_update(x, state.s, state.lagrange, state.rho, cfg)
    s_fp = _s_update(x, state.m, state.lagrange, state.rho, mask, cfg)
    return KktResiduals(
        feasibility=feas,
        m_fixedpoint=float(np.linalg.norm(state.m - m_fp)),
        s_fixedpoint=float(np.linalg.norm(np.where(mask, state.s - s_fp, 0.0))),
    )


def nnsr_solve(x, mask, cfg: SolverConfig | None = None) -> SolveResult:
    """Run the ADMM loop. Entries of ``x`` outside ``mask`` are ignored."""
    cfg = cfg or SolverConfig()
    x, mask = _prepare(x, mask)
    cfg = cfg.resolve(x)
    x_norm = max(float(np.linalg.norm(x)), cfg.eps_guard)

    state = SolveState.initial(x, cfg.rho0)
    trace: list[TraceRecord] = []
    converged = False
    for k in range(1, cfg.max_iter + 1):
        rho_k = state.rho
        try:
            new, sv = _step(state, x, mask, cfg)
        except NumericError as exc:
            raise NumericError(f"{exc} (iteration {k})") from exc
        if not (np.all(np.isfinite(new.m)) and np.all(np.isfinite(new.s))
                and np.all(np.isfinite(new.lagrange))):
            raise DivergenceError("non-finite iterate", k)

        rel_e = float(np.linalg.norm(x - new.m - new.s)) / x_norm
        dm = float(np.linalg.norm(new.m - state.m))
        ds = float(np.linalg.norm(new.s - state.s))
        m_prev = float(np.linalg.norm(state.m))
        if m_prev > 0:
            re_m = dm / m_prev
        else:
            re_m = 0.0 if dm == 0 else math.inf
        smax = float(sv[0]) if sv.size else 0.0
        rank_est = int(np.count_nonzero(sv > 1e-8 * smax)) if smax > 0 else 0
        trace.append(TraceRecord(
            iter=k, rho=rho_k, rel_e=rel_e, re_m=re_m, re_x=rel_e,
            lagrange_fro=float(np.linalg.norm(new.lagrange)), rank_est=rank_est,
            dm_fro=dm, ds_fro=ds,
        ))
        state = new
        if rel_e <= cfg.tol:
            converged = True
            break

    return SolveResult(
        m=state.m, s=state.s, lagrange=state.lagrange, rho=state.rho,
        iterations=state.iter, converged=converged, config=cfg, trace=trace,
    )


def lagrange_bound(mask, lam: float) -> float:
    """Upper bound lam * sqrt(|Omega|) on ||Lambda^k||_F for k >= 1."""
    return lam * math.sqrt(cardinality(mask))


def write_trace_csv(trace: list[TraceRecord], path) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRACE_HEADER)
        for r in trace:
            w.writerow([r.iter, repr(r.rho), repr(r.rel_e), repr(r.re_m), repr(r.re_x),
                        repr(r.lagrange_fro), r.rank_est])
