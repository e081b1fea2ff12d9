import math
import time

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gpt_thermo import (builtin_cycle, check_thm2, discrepancy_bound, get_entropy,
                        lemma1_bound, make_polygon, run_cycle, s_acc, s_meas)
from gpt_thermo.errors import ConservationError, InvalidArgument, NotACycle, NotMixable, PreconditionError
from gpt_thermo.measurement import MeasurementProcess, trivial_process, vertex_pair_process
from gpt_thermo.spm import (Container, CycleStep, GasConfiguration, Group, check_cor1, mixing,
                            random_classical_cycle, separation)

TARGET = 0.25 * math.log(27 / 16)
H34 = -(0.75 * math.log(0.75) + 0.25 * math.log(0.25))
LN2 = math.log(2)
SHANNON = get_entropy("shannon")


@pytest.fixture(scope="module")
def square_ledger():
    return run_cycle(*builtin_cycle("square"))


@pytest.fixture(scope="module")
def hexagon_ledger():
    return run_cycle(*builtin_cycle("hexagon"))


def test_square_per_step(square_ledger):
    np.testing.assert_allclose(square_ledger.per_step, [-H34, 0, LN2, 0, 0], atol=1e-12)
    assert square_ledger.total == pytest.approx(TARGET, abs=1e-12)
    assert square_ledger.cumulative[-1] == pytest.approx(TARGET, abs=1e-12)
    assert square_ledger.is_cycle


def test_hexagon_per_step(hexagon_ledger):
    np.testing.assert_allclose(hexagon_ledger.per_step, [-H34, 0, LN2], atol=1e-12)
    assert hexagon_ledger.total == pytest.approx(TARGET, abs=1e-12)


def test_builtin_cycles_are_fast():
    t0 = time.perf_counter()
    for _ in range(5):
        run_cycle(*builtin_cycle("square"))
        run_cycle(*builtin_cycle("hexagon"))
    assert (time.perf_counter() - t0) / 5 < 0.2


@pytest.mark.parametrize("n", [2, 3, 4, 5])
def test_von_neumann_cycle(n):
    rng = np.random.default_rng(n)
    p = rng.dirichlet(np.ones(n))
    ledger = run_cycle(*builtin_cycle("von-neumann", n=n, weights=p))
    h = -(p * np.log(p)).sum()
    np.testing.assert_allclose(ledger.per_step, [0, -h, h], atol=1e-12)
    assert lemma1_bound(ledger, SHANNON) == pytest.approx(ledger.total, abs=1e-12)
    assert discrepancy_bound(ledger) == pytest.approx(0.0, abs=1e-12)
    assert check_thm2(ledger, SHANNON).passed()


def test_von_neumann_rejects_bad_weights():
    with pytest.raises(InvalidArgument):
        builtin_cycle("von-neumann", n=3, weights=[0.5, 0.5, 0.0])
    with pytest.raises(InvalidArgument):
        builtin_cycle("pentagon")


def test_work_bound_dominates(square_ledger, hexagon_ledger):
    assert lemma1_bound(square_ledger, s_meas) == pytest.approx(LN2, abs=1e-12)
    assert lemma1_bound(hexagon_ledger, s_meas) == pytest.approx(TARGET, abs=1e-12)
    per = lemma1_bound(square_ledger, s_meas, per_step=True)
    assert per.sum() == pytest.approx(LN2)


def test_discrepancy_bound(square_ledger, hexagon_ledger):
    assert discrepancy_bound(square_ledger) == pytest.approx(LN2, abs=1e-9)
    assert discrepancy_bound(hexagon_ledger) >= hexagon_ledger.total - 1e-9


def test_thm2_square_with_s_acc(square_ledger):
    fails = check_thm2(square_ledger, s_acc).failures()
    assert fails
    assert {f.inequality for f in fails} == {"concavity"}
    assert {f.step for f in fails} == {4}
    assert fails[0].slack == pytest.approx(-TARGET, abs=1e-9)


def test_thm2_hexagon_with_s_acc(hexagon_ledger):
    fails = check_thm2(hexagon_ledger, s_acc).failures()
    assert any(f.inequality == "first" and f.step == 0 for f in fails)


@pytest.mark.parametrize("name", ["square", "hexagon"])
def test_thm2_with_s_meas_flags_mixing(name):
    ledger = run_cycle(*builtin_cycle(name))
    fails = check_thm2(ledger, s_meas).failures()
    assert fails
    assert {f.inequality for f in fails} == {"second"}
    assert all(ledger.steps[f.step].phase == "mixing" for f in fails)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_random_classical_cycles(seed):
    ledger = run_cycle(*random_classical_cycle(np.random.default_rng(seed)))
    assert ledger.total <= 1e-9
    assert check_thm2(ledger, SHANNON).passed()
    assert lemma1_bound(ledger, SHANNON) >= ledger.total - 1e-9
    assert discrepancy_bound(ledger) == pytest.approx(0.0, abs=1e-12)


def test_incomplete_cycle_raises():
    init, steps = builtin_cycle("square")
    with pytest.raises(NotACycle) as info:
        run_cycle(init, steps[:-1])
    assert info.value.ledger is not None
    ledger = run_cycle(init, steps[:-1], strict=False)
    assert not ledger.is_cycle and ledger.residual > 1e-3


def test_separation_then_mixing(square):
    proc = vertex_pair_process(square, 0, 2)
    c = Container("c", 1.0, 1.0, square.state([0.75, 0, 0.25, 0]))
    parts, w_sep = separation(c, proc)
    assert w_sep == pytest.approx(-H34)
    assert [p.volume for p in parts] == pytest.approx([0.75, 0.25])
    merged, w_mix = mixing(parts, proc)
    assert w_mix == pytest.approx(H34)
    np.testing.assert_allclose(merged.internal.coords, c.internal.coords, atol=1e-12)


def test_mixing_requires_fixed_branches(square):
    proc = vertex_pair_process(square, 0, 2)
    a = Container("a", 0.5, 0.5, square.vertex(2))
    b = Container("b", 0.5, 0.5, square.vertex(0))
    with pytest.raises(NotMixable):
        mixing([a, b], proc)


def test_group_validation(square):
    proc = vertex_pair_process(square, 0, 2)
    with pytest.raises(InvalidArgument):
        Group(("a",), proc, np.ones((2, 2, 1)), ("x", "y"), (0.5, 0.5))
    with pytest.raises(InvalidArgument):
        Group(("a",), proc, np.eye(2)[:, :, None], ("x", "y"), (0.5, -0.5))
    g = Group(("a",), trivial_process(square), np.ones((1, 1, 1)), ("x",), (1.0,))
    with pytest.raises(InvalidArgument):
        CycleStep((g, g))


def test_configuration_validation(square):
    with pytest.raises(ConservationError):
        GasConfiguration(square, (Container("a", 1.0, 0.5, square.vertex(0)),))
    c = Container("a", 1.0, 1.0, square.vertex(0))
    with pytest.raises(InvalidArgument):
        GasConfiguration(square, (c, c))


def test_cor1(square, rng):
    proc = vertex_pair_process(square, 0, 2)
    states = [square.state(rng.dirichlet(np.ones(4))) for _ in range(20)]
    for inst in check_cor1(proc, s_meas, states):
        assert inst.left_slack >= -1e-9
        assert inst.right_slack >= -1e-9


def test_discrepancy_requires_strong_repeatability(square):
    g = square.generators
    f = next(r for r in square.dual_rays if np.allclose(g[[0, 1]] @ r, 1.0))
    m01, m23 = (g[0] + g[1]) / 2, (g[2] + g[3]) / 2
    proc = MeasurementProcess(square, np.array([np.outer(m01, f),
                                                np.outer(m23, square.unit - f)]))
    mid = square.state([0.5, 0.5, 0, 0])
    init = GasConfiguration(square, (Container("c", 1.0, 1.0, mid),))
    step = CycleStep((Group(("c",), proc, np.ones((2, 1, 1)), ("c",), (1.0,)),))
    ledger = run_cycle(init, [step])
    with pytest.raises(PreconditionError):
        discrepancy_bound(ledger)
