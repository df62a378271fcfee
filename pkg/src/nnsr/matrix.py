"""Dense matrix helpers: masking, Frobenius norms, thin SVD and CSV I/O.

Matrices are plain 2-D float64 ``numpy`` arrays and observation masks are
boolean arrays of the same shape (``True`` = observed).
"""
from __future__ import annotations

import csv
from pathlib import Path
from typing import NamedTuple

import numpy as np


class ShapeError(ValueError):
    """Operands have incompatible shapes."""


class NumericError(ArithmeticError):
    """A numerical backend failed or produced non-finite values."""


class SvdFactors(NamedTuple):
    u: np.ndarray  # m x r, orthonormal columns
    s: np.ndarray  # r, non-increasing, >= 0
    vt: np.ndarray  # r x n, orthonormal rows

    def reconstruct(self) -> np.ndarray:
        return (self.u * self.s) @ self.vt


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    """Validate and convert ``a`` to a finite 2-D float64 array."""
    arr = np.asarray(a, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ShapeError(f"{name} must be a non-empty 2-D array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise NumericError(f"{name} contains non-finite entries")
    return arr


def as_mask(mask, shape: tuple[int, int] | None = None) -> np.ndarray:
    m = np.asarray(mask, dtype=bool)
    if m.ndim != 2:
        raise ShapeError(f"mask must be 2-D, got shape {m.shape}")
    if shape is not None and m.shape != tuple(shape):
        raise ShapeError(f"mask shape {m.shape} does not match matrix shape {tuple(shape)}")
    return m


def cardinality(mask: np.ndarray) -> int:
    """Number of observed entries, |Omega|."""
    return int(np.count_nonzero(mask))


def project_mask(a, mask) -> np.ndarray:
    """Keep the observed entries of ``a`` and zero the rest."""
    a = np.asarray(a, dtype=np.float64)
    mask = as_mask(mask, a.shape)
    return np.where(mask, a, 0.0)


def fro_norm(a) -> float:
    return float(np.linalg.norm(np.asarray(a, dtype=np.float64), "fro"))


def fro_inner(a, b) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ShapeError(f"shape mismatch: {a.shape} vs {b.shape}")
    return float(np.sum(a * b))


def thin_svd(a) -> SvdFactors:
    """Economy SVD with r = min(m, n) singular values, sorted non-increasing.

    Tiny singular values are returned as computed; truncation is left to
    the caller.
    """
    a = np.asarray(a, dtype=np.float64)
    try:
        u, s, vt = np.linalg.svd(a, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"SVD did not converge for matrix of shape {a.shape}") from exc
    return SvdFactors(u, s, vt)


def read_matrix_csv(path) -> np.ndarray:
    """Read a headerless CSV of reals, one matrix row per line."""
    rows: list[list[float]] = []
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row:
                continue
            if rows and len(row) != len(rows[0]):
                raise ShapeError(
                    f"{path}: ragged row at line {lineno} "
                    f"({len(row)} fields, expected {len(rows[0])})"
                )
            rows.append([float(v) for v in row])
    if not rows:
        raise ShapeError(f"{path}: empty matrix file")
    return as_matrix(rows, name=str(path))


def write_matrix_csv(a, path) -> None:
    a = as_matrix(a)
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        for row in a:
            # repr round-trips float64 exactly
            writer.writerow([repr(float(v)) for v in row])
