"""Singular value shrinkage with a monotone scalar proximity operator."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np

from .matrix import SvdFactors, thin_svd
from .prox import phi_numeric, prox_how, prox_l1, prox_welsch

ShrinkKind = Literal["how", "l1", "welsch"]


class InvariantError(RuntimeError):
    """An internal ordering/shape invariant was violated."""


@dataclass(frozen=True)
class ShrinkSpec:
    threshold: float
    sigma: float = 1.0
    kind: ShrinkKind = "how"

    def __post_init__(self):
        if self.kind not in ("how", "l1", "welsch"):
            raise ValueError(f"unknown shrink kind {self.kind!r}")
        if not self.threshold >= 0:
            raise ValueError(f"threshold must be >= 0, got {self.threshold}")
        if not self.sigma > 0:
            raise ValueError(f"sigma must be > 0, got {self.sigma}")

    def apply(self, s):
        if self.kind == "how":
            return prox_how(s, self.threshold, self.sigma)
        if self.kind == "l1":
            return prox_l1(s, self.threshold)
        # welsch ignores the threshold
        return prox_welsch(s, self.sigma)


def shrink_factors(f: SvdFactors, spec: ShrinkSpec) -> tuple[np.ndarray, np.ndarray]:
    """Return (shrunk matrix, shrunk singular values) from precomputed factors."""
    s_new = spec.apply(f.s)
    if np.any(np.diff(s_new) > 1e-12 * max(float(s_new[0]) if s_new.size else 0.0, 1.0)):
        raise InvariantError("shrunk singular values are not non-increasing")
    keep = s_new > 0
    m = (f.u[:, keep] * s_new[keep]) @ f.vt[keep]
    return m, s_new


def sv_shrink(a, spec: ShrinkSpec) -> np.ndarray:
    """U diag(P(s)) V^T, the prox of the matrix phi-norm (or nuclear norm for l1)."""
    return shrink_factors(thin_svd(a), spec)[0]


def matrix_phi_norm(a, lam: float, sigma: float) -> float:
    """Sum of phi over the singular values of ``a`` (diagnostic)."""
    s = thin_svd(a).s
    return float(np.sum(phi_numeric(s, lam, sigma)))
