"""Measurement, feedback and erasure with heat baths: the generalized Sagawa-Ueda bounds.

A scenario couples a target system ``A`` (classical or a polygon) with a
classical memory ``M`` and classical baths ``B1``, ``B2``, ``B3``. States with
classical labels and an ``A`` factor are stored as arrays whose last axis holds
``A``-coordinates, e.g. ``P[k, m, b1, :]``; every entropy of such a state is the
extended entropy ``H(labels) + sum_c p_c S_A(rho_c)``.

Process tensors (last axis of every block acts on ``A``-coordinates):

* measurement ``T[k, m', b1', a', m, b1, a]``
* feedback ``F[k, b2', a', b2, a]``
* erasure ``V[m', b3', k, m, b3]`` (classical)
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Callable

import numpy as np

from .core import TOL, GptSystem, State, make_classical
from .entropy import entropy_terms, s_meas, shannon
from .errors import InvalidArgument, InvalidScenario, UnsupportedSystem

LN2 = float(np.log(2.0))


@dataclass(frozen=True)
class EnergyFunction:
    """Affine energy ``E(rho) = vector . rho + constant * unit(rho)``."""

    system: GptSystem
    vector: np.ndarray
    constant: float = 0.0

    def __post_init__(self):
        v = np.asarray(self.vector, dtype=float)
        if v.shape != (self.system.dim,):
            raise InvalidArgument("energy vector does not match the system dimension")
        object.__setattr__(self, "vector", v)

    def __call__(self, coords) -> float:
        c = np.asarray(getattr(coords, "coords", coords), dtype=float)
        return float(self.vector @ c + self.constant * (self.system.unit @ c))


def gibbs_state(system: GptSystem, energy, beta: float) -> State:
    """Canonical state ``p_x ~ exp(-beta E_x)`` of a classical system."""
    if system.kind != "classical":
        raise UnsupportedSystem("Gibbs states are only provided for classical systems")
    if beta <= 0:
        raise InvalidArgument("beta must be positive")
    e = energy.vector if isinstance(energy, EnergyFunction) else np.asarray(energy, float)
    x = -beta * (e - e.min())
    p = np.exp(x - x.max())
    return State(system, p / p.sum())


def free_energy(state, energy, entropy: Callable, beta: float) -> float:
    """Nonequilibrium free energy ``E - S / beta``."""
    e = energy(state) if callable(energy) else float(np.asarray(energy) @ state.coords)
    return e - entropy(state) / beta


def _shannon_state(state) -> float:
    return shannon(np.clip(state.coords, 0.0, None))


# --------------------------------------------------------------------------
# scenarios


@dataclass
class Scenario:
    """Fully specified measurement-feedback-erasure protocol.

    ``energies`` maps ``"A"``, ``"M"``, ``"B1"``, ``"B2"``, ``"B3"`` to energy
    vectors; ``entropy`` is the entropy used on ``A`` (Shannon by default for
    classical ``A``, measurement entropy for polygons).
    """

    system_a: GptSystem
    rho_a: np.ndarray
    rho_m: np.ndarray
    energies: dict
    beta: float
    measurement: np.ndarray
    feedback: np.ndarray
    erasure: np.ndarray
    entropy: Callable | None = None
    name: str = "scenario"

    def __post_init__(self):
        if self.beta <= 0:
            raise InvalidScenario("beta must be positive")
        if self.system_a.kind not in ("classical", "polygon"):
            raise InvalidScenario("the target system must be classical or a polygon")
        self.rho_a = np.asarray(self.rho_a, dtype=float)
        self.rho_m = np.asarray(self.rho_m, dtype=float)
        self.measurement = np.asarray(self.measurement, dtype=float)
        self.feedback = np.asarray(self.feedback, dtype=float)
        self.erasure = np.asarray(self.erasure, dtype=float)
        self.energies = {k: np.asarray(v, dtype=float) for k, v in self.energies.items()}
        missing = {"A", "M", "B1", "B2", "B3"} - set(self.energies)
        if missing:
            raise InvalidScenario(f"missing energies for {sorted(missing)}")
        if self.entropy is None:
            self.entropy = _shannon_state if self.system_a.kind == "classical" else s_meas
        State(self.system_a, self.rho_a)
        if np.any(self.rho_m < -TOL) or abs(self.rho_m.sum() - 1) > 1e-9:
            raise InvalidScenario("memory state is not a distribution")
        self._validate_shapes()
        self._validate_processes()

    # sizes
    @property
    def n_k(self) -> int:
        return self.measurement.shape[0]

    @property
    def dims(self) -> dict:
        return {"M": len(self.energies["M"]), "B1": len(self.energies["B1"]),
                "B2": len(self.energies["B2"]), "B3": len(self.energies["B3"])}

    def _validate_shapes(self):
        d = self.system_a.dim
        m, b1, b2, b3 = (self.dims[k] for k in ("M", "B1", "B2", "B3"))
        k = self.n_k
        expect = {
            "measurement": (self.measurement.shape, (k, m, b1, d, m, b1, d)),
            "feedback": (self.feedback.shape, (k, b2, d, b2, d)),
            "erasure": (self.erasure.shape, (m, b3, k, m, b3)),
        }
        for name, (got, want) in expect.items():
            if got != want:
                raise InvalidScenario(f"{name} tensor has shape {got}, expected {want}")
        if len(self.energies["A"]) != d or len(self.rho_m) != m:
            raise InvalidScenario("energy or memory vectors have the wrong length")

    def _validate_processes(self):
        a = self.system_a
        gens, rays, unit = a.generators, a.dual_rays, a.unit
        # images of every (classical input, pure A input) pair
        t = self.measurement
        img = np.einsum("kpqzmbx,gx->kpqzmbg", t, gens)
        if np.any(np.einsum("kpqzmbg,rz->kpqmbgr", img, rays) < -1e-9):
            raise InvalidScenario("measurement process is not positive")
        if not np.allclose(np.einsum("kpqzmbg,z->mbg", img, unit), 1.0, atol=1e-9):
            raise InvalidScenario("measurement process does not preserve normalisation")
        f = self.feedback
        img = np.einsum("kczdx,gx->kczdg", f, gens)
        if np.any(np.einsum("kczdg,rz->kcdgr", img, rays) < -1e-9):
            raise InvalidScenario("feedback process is not positive")
        if not np.allclose(np.einsum("kczdg,z->kdg", img, unit), 1.0, atol=1e-9):
            raise InvalidScenario("feedback process does not preserve normalisation")
        v = self.erasure
        if np.any(v < -1e-12) or not np.allclose(v.sum(axis=(0, 1)), 1.0, atol=1e-9):
            raise InvalidScenario("erasure must be a stochastic map")


@dataclass
class SagawaUedaReport:
    W_ext: float
    W_meas: float
    W_eras: float
    W: float
    H: float
    I: float
    dF_A: float
    dF_M: float
    dS_M: float
    dS_F: float
    dS_V: float
    slack_1: float
    slack_2: float
    slack_3: float
    slack_total: float
    identity_residual: float
    memory_residual: float

    def all_hold(self, tol: float = 1e-9) -> bool:
        return min(self.slack_1, self.slack_2, self.slack_3, self.slack_total) >= -tol

    def as_dict(self) -> dict:
        return asdict(self)


def _labels_entropy(p: np.ndarray, system: GptSystem, entropy: Callable) -> float:
    """Extended entropy of an array ``p[..., a]`` of ``A``-substates."""
    flat = p.reshape(-1, system.dim)
    masses = np.clip(flat @ system.unit, 0.0, None)
    total = entropy_terms(masses)
    for mass, coords in zip(masses, flat):
        if mass > 1e-14:
            total += mass * entropy(State(system, np.clip(coords / mass, -1e-15, None)
                                          if system.kind == "classical" else coords / mass))
    return float(total)


def _gibbs(e: np.ndarray, beta: float) -> np.ndarray:
    return gibbs_state(make_classical(len(e)), e, beta).coords


def evaluate_scenario(s: Scenario, check_memory: bool = True) -> SagawaUedaReport:
    """Evaluate every work, entropy and free-energy term and the three slacks.

    The total ``W`` is ``W_ext - W_meas - W_eras``, i.e. the energy lost by the
    whole system, ``E(rho_0) - E(rho_3)``.
    """
    a = s.system_a
    beta = s.beta
    e = s.energies
    S = s.entropy
    g1, g2, g3 = (_gibbs(e[k], beta) for k in ("B1", "B2", "B3"))
    ea = EnergyFunction(a, e["A"])

    # stage 0: P0[m, b1, :]
    p0 = np.einsum("m,b,x->mbx", s.rho_m, g1, s.rho_a)
    # stage 1: Q[k, m', b1', :]
    q = np.einsum("kpqzmbx,mbx->kpqz", s.measurement, p0)
    # stage 2: R[k, m', b1', b2', :]
    r = np.einsum("kczdx,kpqx,d->kpqcz", s.feedback, q, g2)
    # stage 3 (A, B1, B2 spectators): X[m'', b3', b1', b2', :]
    x = np.einsum("nekpb,b,kpqcz->neqcz", s.erasure, g3, r)

    unit = a.unit
    k_marg = np.einsum("kpqz,z->k", q, unit)
    m1 = np.einsum("kpqz,z->p", q, unit)
    b1_1 = np.einsum("kpqz,z->q", q, unit)
    a2 = r.sum(axis=(0, 1, 2, 3))
    b2_2 = np.einsum("kpqcz,z->c", r, unit)
    m3 = np.einsum("neqcz,z->n", x, unit)
    b3_3 = np.einsum("neqcz,z->e", x, unit)
    memory_residual = float(np.max(np.abs(m3 - s.rho_m)))
    if check_memory and memory_residual > 1e-9:
        raise InvalidScenario(f"memory does not return to its initial state "
                              f"(residual {memory_residual:.3g})")

    w_ext = (ea(s.rho_a) + e["B2"] @ g2) - (ea(a2) + e["B2"] @ b2_2)
    w_meas = (e["M"] @ m1 + e["B1"] @ b1_1) - (e["M"] @ s.rho_m + e["B1"] @ g1)
    w_eras = (e["M"] @ m3 + e["B3"] @ b3_3) - (e["M"] @ m1 + e["B3"] @ g3)
    w = w_ext - w_meas - w_eras

    def total_energy(a_c, m_p, b1_p, b2_p, b3_p):
        return (ea(a_c) + e["M"] @ m_p + e["B1"] @ b1_p + e["B2"] @ b2_p + e["B3"] @ b3_p)

    e0 = total_energy(s.rho_a, s.rho_m, g1, g2, g3)
    e3 = total_energy(x.sum(axis=(0, 1, 2, 3)), m3, np.einsum("neqcz,z->q", x, unit),
                      np.einsum("neqcz,z->c", x, unit), b3_3)
    identity_residual = float(abs(w - (e0 - e3)))

    h = entropy_terms(k_marg)
    ka1 = q.sum(axis=(1, 2))  # [k, :]
    info = S(State(a, s.rho_a)) - sum(
        pk * S(State(a, ka1[k] / pk)) for k, pk in enumerate(k_marg) if pk > 1e-14)

    def f_a(coords):
        return ea(coords) - S(State(a, coords)) / beta

    def f_m(p):
        return e["M"] @ p - shannon(np.clip(p, 0.0, None)) / beta

    d_f_a = f_a(a2) - f_a(s.rho_a)
    km1 = np.einsum("kpqz,z->kp", q, unit)
    d_f_m = sum(pk * f_m(km1[k] / pk) for k, pk in enumerate(k_marg) if pk > 1e-14) \
        - f_m(s.rho_m)

    ds_m = _labels_entropy(q, a, S) - _labels_entropy(p0, a, S)
    kab2_2 = r.sum(axis=(1, 2))  # [k, b2', :]
    kab2_1 = np.einsum("kz,c->kcz", ka1, g2)
    ds_f = _labels_entropy(kab2_2, a, S) - _labels_entropy(kab2_1, a, S)
    mb3 = np.einsum("neqcz,z->ne", x, unit)
    kmb3 = np.einsum("kp,b->kpb", km1, g3)
    ds_v = entropy_terms(mb3.ravel()) - entropy_terms(kmb3.ravel())

    slack_1 = (-d_f_a + (info - ds_f) / beta) - w_ext
    slack_2 = w_meas - (d_f_m - (h - info - ds_m) / beta)
    slack_3 = w_eras - (-d_f_m + (h + ds_v) / beta)
    slack_total = (-d_f_a - (ds_m + ds_f + ds_v) / beta) - w
    return SagawaUedaReport(
        float(w_ext), float(w_meas), float(w_eras), float(w), float(h), float(info),
        float(d_f_a), float(d_f_m), float(ds_m), float(ds_f), float(ds_v),
        float(slack_1), float(slack_2), float(slack_3), float(slack_total),
        identity_residual, memory_residual)


# --------------------------------------------------------------------------
# concrete scenarios


def _two_level_bath(beta: float) -> np.ndarray:
    """Ground level plus a four-fold level at ``ln 4 / beta``: Gibbs ``(1/2, 1/8 x 4)``."""
    return np.array([0.0] + [np.log(4.0) / beta] * 4)


def szilard_scenario(beta: float = 1.0, error_prob: float = 0.0) -> Scenario:
    """Szilard engine with a noisy one-bit measurement.

    The demon copies the particle's side (flipped with probability
    ``error_prob``) into ``K`` and the memory. Feedback given ``k``: if the
    particle is on side ``k`` a bath excitation is converted into moving it
    across (worth ``ln 2 / beta`` on average); if the record is wrong the
    particle is released and the bath is left excited. Erasure resets the
    memory to 0 by exciting a fresh bath, which costs ``ln 2 / beta``.
    Noiseless extraction is exactly ``ln 2 / beta``; in general it is
    ``(1 - 2 error_prob) ln 2 / beta``.
    """
    if beta <= 0:
        raise InvalidArgument("beta must be positive")
    if not 0.0 <= error_prob <= 0.5:
        raise InvalidArgument("error probability must lie in [0, 1/2]")
    a = make_classical(2)
    bath = _two_level_bath(beta)
    nb = len(bath)
    eps = error_prob

    t = np.zeros((2, 2, 1, 2, 2, 1, 2))
    for k in range(2):
        for m in range(2):
            for x in range(2):
                t[k, (m + k) % 2, 0, x, m, 0, x] = 1 - eps if k == x else eps

    f = np.zeros((2, nb, 2, nb, 2))
    for k in range(2):
        f[k, 0, k, 0, k] = 1.0
        for b in range(1, nb):
            f[k, 0, 1 - k, b, k] = 1.0
        for b in range(nb):
            f[k, 1:, :, b, 1 - k] = 1.0 / (2 * (nb - 1))

    v = np.zeros((2, nb, 2, 2, nb))
    v[0, 1:, :, :, :] = 1.0 / (nb - 1)

    return Scenario(a, np.array([0.5, 0.5]), np.array([1.0, 0.0]),
                    {"A": np.zeros(2), "M": np.zeros(2), "B1": np.zeros(1),
                     "B2": bath, "B3": bath},
                    beta, t, f, v, name=f"szilard(eps={error_prob})")


def _stochastic(rng, shape_out, shape_in) -> np.ndarray:
    n_out, n_in = int(np.prod(shape_out)), int(np.prod(shape_in))
    cols = rng.dirichlet(np.full(n_out, 0.5), size=n_in).T
    if rng.uniform() < 0.3:  # some deterministic channels
        cols = np.eye(n_out)[rng.integers(n_out, size=n_in)].T
    return cols.reshape(tuple(shape_out) + tuple(shape_in))


def random_classical_scenario(rng=None) -> Scenario:
    """Random fully classical scenario with a memory reset built in.

    Measurement and feedback are random stochastic maps; the erasure writes a
    fresh copy of the initial memory state, so the reset condition holds.
    """
    rng = np.random.default_rng(rng)
    da, dm, nk = (int(rng.integers(2, 4)) for _ in range(3))
    b1, b2, b3 = (int(rng.integers(1, 9)) for _ in range(3))
    beta = float(rng.uniform(0.3, 3.0))
    a = make_classical(da)
    rho_m = rng.dirichlet(np.ones(dm))
    t = _stochastic(rng, (nk, dm, b1, da), (dm, b1, da))
    f = np.stack([_stochastic(rng, (b2, da), (b2, da)) for _ in range(nk)])
    reset = _stochastic(rng, (b3,), (nk, dm, b3))
    v = np.einsum("n,ekmb->nekmb", rho_m, reset)
    energies = {"A": rng.uniform(0, 2, da), "M": rng.uniform(0, 2, dm),
                "B1": rng.uniform(0, 3, b1), "B2": rng.uniform(0, 3, b2),
                "B3": rng.uniform(0, 3, b3)}
    return Scenario(a, rng.dirichlet(np.ones(da)), rho_m, energies, beta, t, f, v,
                    name="random-classical")


def check_subadditivity(entropy: Callable, system: GptSystem, labels: int = 2,
                        trials: int = 100, seed: int = 0) -> float:
    """Worst slack of ``S(XA) <= S(X) + S(A)`` over random classical-label states.

    ``S(XA)`` is the extended entropy of ``entropy``. Product states must give
    zero slack; the returned value is the minimum of
    ``S(X) + S(A) - S(XA)`` over all trials (negative means a violation).
    """
    rng = np.random.default_rng(seed)
    worst = np.inf
    for t in range(trials):
        w = rng.dirichlet(np.ones(labels))
        if t % 4 == 0:  # product state: equality expected
            rho = system.state(rng.dirichlet(np.ones(system.n_vertices))).coords
            branches = [rho] * labels
        else:
            branches = [system.state(rng.dirichlet(np.full(system.n_vertices, 0.5))).coords
                        for _ in range(labels)]
        p = np.array([wi * b for wi, b in zip(w, branches)])
        joint = _labels_entropy(p, system, entropy)
        marg = State(system, p.sum(axis=0))
        worst = min(worst, shannon(w) + entropy(marg) - joint)
    return float(worst)
