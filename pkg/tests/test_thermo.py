import math

import numpy as np
import pytest

from gpt_thermo import make_classical, make_polygon, s_acc, s_meas
from gpt_thermo.errors import InvalidArgument, InvalidScenario
from gpt_thermo.measurement import vertex_pair_process
from gpt_thermo.thermo import (EnergyFunction, Scenario, check_subadditivity, evaluate_scenario,
                               free_energy, gibbs_state, random_classical_scenario,
                               szilard_scenario)

LN2 = math.log(2)


def test_gibbs_state():
    c = make_classical(3)
    e = np.array([0.0, 1.0, 2.0])
    g = gibbs_state(c, e, 2.0)
    np.testing.assert_allclose(g.coords, np.exp(-2 * e) / np.exp(-2 * e).sum())
    # the Gibbs state minimises the free energy
    from gpt_thermo.entropy import get_entropy

    sh = get_entropy("shannon")
    f_g = free_energy(g, EnergyFunction(c, e), sh, 2.0)
    for p in np.random.default_rng(0).dirichlet(np.ones(3), size=20):
        assert free_energy(c.state(p), EnergyFunction(c, e), sh, 2.0) >= f_g - 1e-12


def test_szilard_noiseless():
    rep = evaluate_scenario(szilard_scenario())
    assert rep.W_ext == pytest.approx(LN2, abs=1e-12)
    assert rep.W_meas == pytest.approx(0.0, abs=1e-12)
    assert rep.W_eras == pytest.approx(LN2, abs=1e-12)
    assert rep.W == pytest.approx(0.0, abs=1e-12)
    assert rep.I == pytest.approx(LN2) and rep.H == pytest.approx(LN2)
    assert rep.dS_F == pytest.approx(-LN2)
    assert rep.all_hold()


@pytest.mark.parametrize("eps", [0.0, 0.05, 0.1, 0.25, 0.4, 0.5])
@pytest.mark.parametrize("beta", [0.5, 1.0, 2.0])
def test_szilard_noisy(eps, beta):
    rep = evaluate_scenario(szilard_scenario(beta, eps))
    assert rep.W_ext == pytest.approx((1 - 2 * eps) * LN2 / beta, abs=1e-12)
    assert rep.W <= 1e-9
    assert rep.all_hold()
    assert rep.identity_residual < 1e-12


def test_szilard_useless_measurement():
    rep = evaluate_scenario(szilard_scenario(1.0, 0.5))
    assert rep.I == pytest.approx(0.0, abs=1e-12)
    assert rep.W_ext <= 1e-12


def test_szilard_argument_ranges():
    with pytest.raises(InvalidArgument):
        szilard_scenario(1.0, 0.6)
    with pytest.raises(InvalidArgument):
        szilard_scenario(0.0, 0.1)


def test_random_panel():
    rng = np.random.default_rng(3)
    for _ in range(40):
        rep = evaluate_scenario(random_classical_scenario(rng))
        assert min(rep.slack_1, rep.slack_2, rep.slack_3, rep.slack_total) >= -1e-9
        assert rep.identity_residual < 1e-12
        assert rep.memory_residual < 1e-12


def _square_scenario():
    sq = make_polygon(4)
    proc = vertex_pair_process(sq, 0, 2)
    t = np.zeros((2, 2, 1, 3, 2, 1, 3))
    for k in range(2):
        for m in range(2):
            t[k, (m + k) % 2, 0, :, m, 0, :] = proc.maps[k]
    flip = np.diag([-1.0, -1.0, 1.0])  # rotation by pi maps v2 to v0
    f = np.zeros((2, 1, 3, 1, 3))
    f[0, 0, :, 0, :] = np.eye(3)
    f[1, 0, :, 0, :] = flip
    v = np.zeros((2, 1, 2, 2, 1))
    v[0, 0] = 1.0
    energies = {"A": np.zeros(3), "M": np.zeros(2), "B1": np.zeros(1), "B2": np.zeros(1),
                "B3": np.zeros(1)}
    return Scenario(sq, sq.state([0.75, 0, 0.25, 0]).coords, [1.0, 0.0], energies, 1.0,
                    t, f, v, name="square")


def test_polygon_target():
    rep = evaluate_scenario(_square_scenario())
    assert rep.I == pytest.approx(-(0.75 * math.log(0.75) + 0.25 * math.log(0.25)))
    assert rep.all_hold()


def test_scenario_validation():
    s = szilard_scenario()
    with pytest.raises(InvalidScenario):
        Scenario(s.system_a, s.rho_a, s.rho_m, s.energies, -1.0, s.measurement, s.feedback,
                 s.erasure)
    with pytest.raises(InvalidScenario):
        Scenario(s.system_a, s.rho_a, s.rho_m, s.energies, 1.0, s.measurement[:, :1],
                 s.feedback, s.erasure)
    bad = s.feedback.copy()
    bad[0] *= 2
    with pytest.raises(InvalidScenario):
        Scenario(s.system_a, s.rho_a, s.rho_m, s.energies, 1.0, s.measurement, bad, s.erasure)
    energies = dict(s.energies)
    energies.pop("B3")
    with pytest.raises(InvalidScenario):
        Scenario(s.system_a, s.rho_a, s.rho_m, energies, 1.0, s.measurement, s.feedback,
                 s.erasure)


def test_memory_must_reset():
    s = szilard_scenario()
    keep = np.zeros_like(s.erasure)
    for k in range(2):
        for m in range(2):
            keep[m, 0, k, m, :] = 1.0
    bad = Scenario(s.system_a, s.rho_a, s.rho_m, s.energies, 1.0, s.measurement, s.feedback,
                   keep)
    with pytest.raises(InvalidScenario):
        evaluate_scenario(bad)
    assert evaluate_scenario(bad, check_memory=False).memory_residual > 0.4


def test_subadditivity(square):
    assert check_subadditivity(s_meas, square) >= -1e-9
    assert check_subadditivity(s_acc, square) < -0.05
