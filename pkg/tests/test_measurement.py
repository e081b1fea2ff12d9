import numpy as np
import pytest

from gpt_thermo import make_classical, make_polygon
from gpt_thermo.errors import InvalidArgument, NotDistinguishable
from gpt_thermo.measurement import (Measurement, MeasurementProcess, enumerate_fine_grained,
                                    induced_measurement, is_fine_grained, is_indecomposable,
                                    is_repeatable, is_strongly_repeatable, measure_and_prepare,
                                    perfectly_distinguishable, pointer_process, process_zoo,
                                    strong_repeatability_witness, trivial_process,
                                    vertex_pair_process)


def test_measurement_validation(square):
    with pytest.raises(InvalidArgument):
        Measurement(square, np.array([[0, 0, 0.5], [0, 0, 0.4]]))
    with pytest.raises(InvalidArgument):
        Measurement(square, np.array([[2, 0, 0.5], [-2, 0, 0.5]]))
    m = Measurement(square, np.array([[0, 0, 0.5], [0, 0, 0.5]]))
    np.testing.assert_allclose(m.probabilities(square.vertex(0)), [0.5, 0.5])


@pytest.mark.parametrize("n, sizes", [(4, [2, 2]), (5, [3] * 5), (6, [2, 2, 2, 3, 3])])
def test_enumeration_on_polygons(n, sizes):
    ms = enumerate_fine_grained(make_polygon(n))
    assert sorted(m.n_outcomes for m in ms) == sorted(sizes)
    assert all(is_fine_grained(m) for m in ms)


def test_enumeration_classical():
    ms = enumerate_fine_grained(make_classical(3))
    assert [m.n_outcomes for m in ms] == [3]


def test_indecomposable(square):
    assert is_indecomposable(square, square.dual_rays[0])
    assert not is_indecomposable(square, square.unit)


def test_distinguishability(square, hexagon):
    assert perfectly_distinguishable([square.vertex(0), square.vertex(2)]) is not None
    # adjacent square vertices are distinguishable too (gbit)
    assert perfectly_distinguishable([square.vertex(0), square.vertex(1)]) is not None
    assert perfectly_distinguishable([square.vertex(0), square.vertex(1),
                                      square.vertex(2)]) is None
    assert perfectly_distinguishable([hexagon.vertex(0), hexagon.vertex(1)]) is None
    with pytest.raises(NotDistinguishable):
        vertex_pair_process(hexagon, 0, 1)


@pytest.mark.parametrize("n", [4, 5, 6])
def test_zoo_is_repeatable(n):
    for proc in process_zoo(make_polygon(n)):
        assert is_repeatable(proc)
        assert is_strongly_repeatable(proc)
        assert strong_repeatability_witness(proc, trials=30, rng=0) is None


def test_pointer_process():
    p = pointer_process(3)
    assert is_repeatable(p) and is_strongly_repeatable(p)
    ka = p.apply(make_classical(3).state([0.2, 0.3, 0.5]))
    np.testing.assert_allclose(ka.weights, [0.2, 0.3, 0.5])


def _midpoint_process(square):
    """Repeatable process that prepares edge midpoints: not strongly repeatable."""
    g = square.generators
    f = next(r for r in square.dual_rays if np.allclose(g[[0, 1]] @ r, 1.0))
    m01, m23 = (g[0] + g[1]) / 2, (g[2] + g[3]) / 2
    maps = np.array([np.outer(m01, f), np.outer(m23, square.unit - f)])
    return MeasurementProcess(square, maps)


def test_repeatable_but_not_strongly(square):
    proc = _midpoint_process(square)
    assert is_repeatable(proc)
    assert not is_strongly_repeatable(proc)
    witness = strong_repeatability_witness(proc, trials=50, rng=0)
    assert witness is not None
    x, rho, sigma = witness
    assert not np.allclose(proc.maps[x] @ sigma, sigma)


def test_not_repeatable(square):
    f = square.dual_rays[0]
    c = square.unit / 1.0
    centre = np.array([0.0, 0.0, 1.0])
    maps = np.array([np.outer(centre, f), np.outer(centre, c - f)])
    proc = MeasurementProcess(square, maps)
    assert not is_repeatable(proc)


def test_process_validation(square):
    with pytest.raises(InvalidArgument):
        MeasurementProcess(square, np.eye(3)[None] * 0.5)
    with pytest.raises(InvalidArgument):
        MeasurementProcess(square, -np.eye(3)[None])


def test_apply_and_induced(square):
    proc = vertex_pair_process(square, 0, 2)
    rho = square.state([0.75, 0, 0.25, 0])
    ka = proc.apply(rho)
    np.testing.assert_allclose(ka.weights, [0.75, 0.25])
    np.testing.assert_allclose(ka.partial_trace().coords, rho.coords)
    assert is_fine_grained(induced_measurement(proc))
    assert trivial_process(square).is_trivial()


def test_measure_and_prepare_requires_distinguishing(square):
    m = Measurement(square, np.array([[0, 0, 0.5], [0, 0, 0.5]]))
    with pytest.raises(NotDistinguishable):
        measure_and_prepare([square.vertex(0), square.vertex(2)], m)
