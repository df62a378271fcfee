"""Scalar losses and proximity operators.

All functions are elementwise: they accept floats or arrays and return the
same kind. ``lam`` is the dead-zone threshold and ``sigma`` the Gaussian
kernel size of the hybrid ordinary-Welsch (HOW) loss

    l(x) = x^2/2                                          |x| <= lam
         = sigma^2/2 * (1 - exp((lam^2 - x^2)/sigma^2)) + lam^2/2   otherwise

whose implicit regularizer ``phi`` satisfies
``l(x) = min_y (y - x)^2/2 + lam * phi(y)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .matrix import NumericError

SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class HowParams:
    lam: float
    sigma: float

    def __post_init__(self):
        if not self.lam >= 0:
            raise ValueError(f"lam must be >= 0, got {self.lam}")
        if not self.sigma > 0:
            raise ValueError(f"sigma must be > 0, got {self.sigma}")

    @property
    def quasiconvex_regime(self) -> bool:
        """True when phi is concave on y > 0 (sigma <= sqrt(2) * lam)."""
        return self.sigma <= SQRT2 * self.lam


def _check(lam, sigma):
    if not lam >= 0:
        raise ValueError(f"threshold must be >= 0, got {lam}")
    if not sigma > 0:
        raise ValueError(f"sigma must be > 0, got {sigma}")


def _result(x, out):
    return float(out) if np.ndim(x) == 0 else out


def how_loss(x, lam: float, sigma: float):
    _check(lam, sigma)
    x = np.asarray(x, dtype=np.float64)
    out = np.asarray(0.5 * x * x)
    outer = np.abs(x) > lam
    xo = x[outer]
    out[outer] = -0.5 * sigma**2 * np.expm1((lam * lam - xo * xo) / sigma**2) + 0.5 * lam * lam
    return _result(x, out)


def welsch_loss(x, sigma: float):
    return how_loss(x, 0.0, sigma)


def f_gap(x, lam: float, sigma: float):
    """x^2/2 - how_loss(x): convex, zero on the dead zone.

    Evaluated from the closed form rather than by subtraction so that the
    dead zone is exactly zero.
    """
    _check(lam, sigma)
    x = np.asarray(x, dtype=np.float64)
    out = np.zeros_like(x)
    outer = np.abs(x) > lam
    xo = x[outer]
    out[outer] = (
        0.5 * xo * xo
        + 0.5 * sigma**2 * np.expm1((lam * lam - xo * xo) / sigma**2)
        - 0.5 * lam * lam
    )
    return _result(x, out)


def prox_how(x, lam: float, sigma: float):
    """Closed-form proximity operator of lam * phi.

    max(0, |x| - |x| exp((lam^2 - x^2)/sigma^2)) * sign(x); zero on |x| <= lam.
    """
    _check(lam, sigma)
    x = np.asarray(x, dtype=np.float64)
    out = np.zeros_like(x)
    outer = np.abs(x) > lam
    xo = x[outer]
    # exponent < 0 on this branch, so exp cannot overflow; expm1 keeps
    # precision for |x| just above lam and for tiny x in the Welsch case
    out[outer] = -xo * np.expm1((lam * lam - xo * xo) / sigma**2)
    return _result(x, out)


def prox_l1(x, lam: float):
    """Soft thresholding."""
    if not lam >= 0:
        raise ValueError(f"threshold must be >= 0, got {lam}")
    x = np.asarray(x, dtype=np.float64)
    out = np.sign(x) * np.maximum(np.abs(x) - lam, 0.0)
    return _result(x, out)


def prox_welsch(x, sigma: float):
    return prox_how(x, 0.0, sigma)


def _invert_prox(y: np.ndarray, lam: float, sigma: float, tol: float, max_iter: int) -> np.ndarray:
    """Solve prox_how(x) = y for x > lam, elementwise, y > 0."""
    lo = np.full_like(y, lam)
    hi = lam + y + 10.0 * sigma
    if np.any(prox_how(hi, lam, sigma) < y):
        raise NumericError("phi_numeric: bisection bracket does not contain the root")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        below = prox_how(mid, lam, sigma) < y
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
        if np.max(hi - lo, initial=0.0) <= tol:
            break
    return 0.5 * (lo + hi)


def phi_numeric(y, lam: float, sigma: float, tol: float = 1e-12, max_iter: int = 200):
    """Implicit regularizer phi(y), reconstructed numerically.

    phi has no closed form. For y != 0 we find x* with prox_how(x*) = |y| by
    bisection on [lam, lam + |y| + 10 sigma] and return
    (how_loss(x*) - (|y| - x*)^2 / 2) / lam.
    """
    if not lam > 0:
        raise ValueError("phi_numeric needs lam > 0")
    _check(lam, sigma)
    y = np.asarray(y, dtype=np.float64)
    ay = np.abs(y)
    out = np.zeros_like(ay)
    nz = ay > 0
    if np.any(nz):
        yn = ay[nz]
        xs = _invert_prox(yn, lam, sigma, tol, max_iter)
        out[nz] = (how_loss(xs, lam, sigma) - 0.5 * (yn - xs) ** 2) / lam
    return _result(y, out)
