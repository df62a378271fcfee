import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from nnsr.matrix import (
    NumericError, ShapeError, as_matrix, cardinality, fro_inner, fro_norm, project_mask,
    read_matrix_csv, thin_svd, write_matrix_csv,
)
from oracles import singular_values_charpoly

finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)


@st.composite
def matrix_and_mask(draw, max_side=6):
    m = draw(st.integers(1, max_side))
    n = draw(st.integers(1, max_side))
    a = draw(arrays(np.float64, (m, n), elements=finite))
    mask = draw(arrays(np.bool_, (m, n)))
    return a, mask


def test_project_full_and_empty(rng):
    a = rng.standard_normal((4, 3))
    assert np.array_equal(project_mask(a, np.ones_like(a, bool)), a)
    assert np.array_equal(project_mask(a, np.zeros_like(a, bool)), np.zeros_like(a))


def test_project_shape_error():
    with pytest.raises(ShapeError):
        project_mask(np.zeros((2, 3)), np.ones((3, 2), bool))


@given(matrix_and_mask())
def test_projection_properties(am):
    a, mask = am
    p = project_mask(a, mask)
    assert np.array_equal(project_mask(p, mask), p)
    assert np.array_equal(p + project_mask(a, ~mask), a)
    assert fro_norm(p) <= fro_norm(a) * (1 + 1e-15)
    assert cardinality(mask) + cardinality(~mask) == a.size


def test_fro_norm_examples():
    assert fro_norm(np.zeros((3, 3))) == 0
    assert fro_norm(np.eye(2)) == pytest.approx(math.sqrt(2), abs=1e-15)
    assert fro_norm([[3.0, 4.0]]) == 5.0


def test_fro_inner_examples(rng):
    a = rng.standard_normal((3, 4))
    assert fro_inner(a, np.zeros_like(a)) == 0
    assert fro_inner(a, a) == pytest.approx(fro_norm(a) ** 2, rel=1e-14)
    assert fro_inner([[1, 2], [3, 4]], [[1, 0], [0, 1]]) == 5
    with pytest.raises(ShapeError):
        fro_inner(np.zeros((2, 2)), np.zeros((2, 3)))


def test_svd_zero_and_diag():
    assert np.all(thin_svd(np.zeros((3, 2))).s == 0)
    f = thin_svd(np.diag([3.0, -2.0]))
    assert np.allclose(f.s, [3, 2], atol=1e-15)
    assert np.allclose(f.reconstruct(), np.diag([3.0, -2.0]), atol=1e-14)


def test_svd_reconstruction_and_orthonormality(rng):
    a = rng.standard_normal((20, 8))
    f = thin_svd(a)
    assert f.s.shape == (8,)
    assert np.linalg.norm(f.reconstruct() - a) <= 1e-10 * np.linalg.norm(a)
    assert np.max(np.abs(f.u.T @ f.u - np.eye(8))) <= 1e-10
    assert np.max(np.abs(f.vt @ f.vt.T - np.eye(8))) <= 1e-10
    assert np.all(np.diff(f.s) <= 0) and np.all(f.s >= 0)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 5), st.integers(1, 5), st.integers(0, 2**32 - 1))
def test_svd_matches_charpoly_oracle(m, n, seed):
    a = np.random.default_rng(seed).standard_normal((m, n))
    expected = singular_values_charpoly(a)[: min(m, n)]
    assert np.allclose(thin_svd(a).s, expected, atol=1e-8, rtol=0)


def test_as_matrix_rejects_nonfinite():
    with pytest.raises(NumericError):
        as_matrix([[1.0, np.nan]])
    with pytest.raises(ShapeError):
        as_matrix(np.zeros(3))


def test_svd_failure_is_wrapped(monkeypatch):
    def boom(*a, **k):
        raise np.linalg.LinAlgError("no convergence")

    monkeypatch.setattr(np.linalg, "svd", boom)
    with pytest.raises(NumericError, match=r"\(4, 3\)"):
        thin_svd(np.ones((4, 3)))


def test_csv_roundtrip(tmp_path, rng):
    a = rng.standard_normal((5, 3))
    write_matrix_csv(a, tmp_path / "a.csv")
    assert np.array_equal(read_matrix_csv(tmp_path / "a.csv"), a)


def test_csv_rejects_ragged(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("1,2,3\n4,5\n")
    with pytest.raises(ShapeError, match="ragged"):
        read_matrix_csv(p)
