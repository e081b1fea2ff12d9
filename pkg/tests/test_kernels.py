import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from gpt_thermo import _kernels_py, kernels

compiled = pytest.importorskip("gpt_thermo._kernels")

probs = arrays(np.float64, st.tuples(st.integers(1, 6), st.integers(1, 7)),
               elements=st.floats(0, 1, allow_nan=False))


def _normalise(a):
    s = a.sum(axis=-1, keepdims=True)
    return np.where(s > 0, a / np.where(s > 0, s, 1), 1.0 / a.shape[-1])


@settings(max_examples=60, deadline=None)
@given(probs)
def test_shannon_backends_agree(a):
    p = np.ascontiguousarray(_normalise(a))
    np.testing.assert_allclose(compiled.shannon_rows(p), _kernels_py.shannon_rows(p),
                               atol=1e-12)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 5), st.integers(1, 5), st.integers(1, 4), st.integers(0, 10_000))
def test_mutual_information_backends_agree(m, k, rows, seed):
    rng = np.random.default_rng(seed)
    w = rng.dirichlet(np.ones(m), size=rows)
    ch = rng.dirichlet(np.ones(k), size=m)
    a = compiled.mutual_information_rows(w, ch)
    b = _kernels_py.mutual_information_rows(w, ch)
    np.testing.assert_allclose(a, b, atol=1e-12)
    assert np.all(b >= -1e-12)


def test_known_values():
    assert kernels.shannon_rows(np.array([[0.5, 0.5], [1.0, 0.0]])) == pytest.approx(
        [np.log(2), 0.0])
    # identity channel: I = H(w)
    w = np.array([0.2, 0.3, 0.5])
    assert kernels.mutual_information_rows(w, np.eye(3))[0] == pytest.approx(
        -(w * np.log(w)).sum())
    # constant channel carries nothing
    assert kernels.mutual_information_rows(w, np.full((3, 2), 0.5))[0] == pytest.approx(0.0)


def test_backend_flag():
    assert kernels.BACKEND in ("cython", "python")
