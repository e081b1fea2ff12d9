import numpy as np
import pytest

from gpt_thermo import (DirectSumState, State, direct_sum, make_classical, make_custom,
                        make_polygon)
from gpt_thermo.core import (cone_contains, cone_contains_lp, is_pointed, is_reversible,
                             polygon_reflection, polygon_rotation, polygon_symmetries, rays_match)
from gpt_thermo.errors import GptError, InvalidArgument


@pytest.mark.parametrize("n", [3, 4, 5, 6, 8])
def test_polygon_dual_rays(n):
    p = make_polygon(n)
    assert p.dim == 3 and p.n_vertices == n
    assert len(p.dual_rays) == n
    vals = p.generators @ p.dual_rays.T
    assert vals.min() >= -1e-12
    np.testing.assert_allclose(vals.max(axis=0), 1.0)
    assert is_pointed(p)


def test_square_vertices_and_unit(square):
    np.testing.assert_allclose(square.generators[1], [0, 1, 1], atol=1e-15)
    np.testing.assert_allclose(square.unit, [0, 0, 1])
    # the gbit's four effects are each 1 on an edge
    ones = np.isclose(square.generators @ square.dual_rays.T, 1.0).sum(axis=0)
    assert list(ones) == [2, 2, 2, 2]


def test_classical_is_simplex():
    c = make_classical(3)
    np.testing.assert_allclose(c.generators, np.eye(3))
    assert rays_match(c.dual_rays, np.eye(3))


def test_containment(square, rng):
    inside = rng.dirichlet(np.ones(4)) @ square.generators
    assert cone_contains(square, inside) and cone_contains_lp(square, inside)
    outside = np.array([0.9, 0.9, 1.0])
    assert not cone_contains(square, outside) and not cone_contains_lp(square, outside)


def test_state_validation(square):
    with pytest.raises(GptError):
        State(square, [2.0, 0.0, 1.0])
    with pytest.raises(GptError):
        State(square, [0.0, 0.0, 2.0])
    assert square.state([0.5, 0, 0.5, 0]).coords == pytest.approx([0, 0, 1])


def test_custom_matches_polygon():
    p = make_polygon(5)
    c = make_custom(p.generators, p.unit)
    assert rays_match(c.dual_rays, p.dual_rays)


def test_custom_rejects_bad_unit():
    with pytest.raises(GptError):
        make_custom(np.eye(3), [1.0, 1.0, 0.0])


def test_symmetries_are_reversible(hexagon):
    syms = polygon_symmetries(hexagon)
    assert len(syms) == 12
    assert all(is_reversible(s) for s in syms)
    r = polygon_rotation(hexagon)
    np.testing.assert_allclose(r.matrix @ hexagon.generators[0], hexagon.generators[1],
                               atol=1e-12)
    f = polygon_reflection(hexagon)
    np.testing.assert_allclose(f.matrix @ f.matrix, np.eye(3), atol=1e-12)


def test_direct_sum_blocks(square, bit):
    ds = direct_sum([square, bit])
    assert ds.dim == 5 and ds.n_vertices == 6
    assert ds.block_offsets == [0, 3]
    assert direct_sum([square, bit]) is ds


def test_direct_sum_state(square, rng):
    states = [square.state(rng.dirichlet(np.ones(4))) for _ in range(3)]
    w = np.array([0.2, 0.3, 0.5])
    ens = DirectSumState.from_ensemble(w, states)
    np.testing.assert_allclose(ens.weights, w)
    np.testing.assert_allclose(ens.partial_trace().coords,
                               sum(p * s.coords for p, s in zip(w, states)))
    flat = ens.as_state()
    assert flat.system.dim == 9
    assert flat.system.unit @ flat.coords == pytest.approx(1.0)


def test_direct_sum_state_rejects_bad_weight(square):
    with pytest.raises(InvalidArgument):
        DirectSumState.from_ensemble([0.5, 0.6], [square.vertex(0), square.vertex(1)])
