"""Entropies of polyhedral GPT states.

All values are in nats. Mixing, measurement and accessible-information
entropies are computed exactly by vertex enumeration:

* ``s_mix`` minimises a concave function (Shannon entropy of the weights) over
  the polytope of pure decompositions, so the minimum sits on a vertex.
* ``s_meas`` minimises over the finite set returned by
  :func:`~gpt_thermo.measurement.enumerate_fine_grained`.
* ``s_acc`` swaps the two suprema. For a fixed measurement ``E`` the output
  distribution ``E rho`` does not depend on the ensemble, so the mutual
  information ``H(E rho) - sum_j w_j H(E g_j)`` is linear in the weights and
  is maximised on a vertex of the same polytope used by ``s_mix``. Mutual
  information is convex in the channel, which restricts ``E`` to the extreme
  fine-grained measurements.
"""

from __future__ import annotations

import functools
import itertools
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.optimize import linprog

from . import kernels
from .core import TOL, DirectSumState, GptSystem, State, SubState
from .errors import InvalidArgument, InvalidDistribution, UnsupportedSystem
from .measurement import Measurement, enumerate_fine_grained

LN2 = float(np.log(2.0))


# --------------------------------------------------------------------------
# classical information


def shannon(dist, base: float | None = None) -> float:
    """Shannon entropy of a probability vector (nats unless ``base`` is given).

    Entries within ``tol`` of the simplex are clamped and renormalised.
    """
    p = np.asarray(dist, dtype=float).ravel()
    if p.size == 0:
        raise InvalidDistribution("empty distribution")
    if np.any(p < -1e-9):
        raise InvalidDistribution(f"negative probability {p.min()}")
    total = p.sum()
    if abs(total - 1) > 1e-9:
        raise InvalidDistribution(f"probabilities sum to {total}")
    p = np.clip(p, 0.0, 1.0)
    h = float(kernels.shannon_rows((p / p.sum())[None, :])[0])
    return h / np.log(base) if base else h


def entropy_terms(masses) -> float:
    """``-sum m log m`` over the positive entries, without renormalising."""
    m = np.asarray(masses, dtype=float).ravel()
    return float(kernels.shannon_rows(m[None, :])[0])


def mutual_information(weights, channel) -> float:
    """``I(X:Y)`` for input weights and a row-stochastic channel ``p(y|x)``."""
    return float(kernels.mutual_information_rows(np.asarray(weights)[None, :], channel)[0])


def to_base(value: float, base: str | float | None) -> float:
    """Convert a value in nats to ``"bit"``, ``"nat"`` or a numeric base."""
    if base in (None, "nat", "nats"):
        return value
    if base in ("bit", "bits"):
        return value / LN2
    return value / np.log(float(base))


# --------------------------------------------------------------------------
# pure-state ensembles


@dataclass(frozen=True)
class EnsembleOverVertices:
    """Weights on the pure states of a system; ``barycenter`` is their mixture."""

    system: GptSystem
    weights: np.ndarray

    @property
    def barycenter(self) -> np.ndarray:
        return self.weights @ self.system.generators

    def members(self, tol: float = TOL) -> list[tuple[float, int]]:
        return [(float(w), int(k)) for k, w in enumerate(self.weights) if w > tol]

    def as_direct_sum(self) -> DirectSumState:
        items = self.members()
        return DirectSumState.from_ensemble([w for w, _ in items],
                                            [self.system.vertex(k) for _, k in items],
                                            [k for _, k in items])


@functools.lru_cache(maxsize=256)
def _bases(system: GptSystem) -> tuple:
    """``(indices, inverse)`` for every basis of generators; ``w_B = inverse @ rho``."""
    gens = system.generators
    out_idx, out_inv = [], []
    for subset in itertools.combinations(range(system.n_vertices), system.dim):
        sub = gens[list(subset)].T
        if abs(np.linalg.det(sub)) < 1e-10:
            continue
        out_idx.append(subset)
        out_inv.append(np.linalg.inv(sub))
    return np.array(out_idx, dtype=int), np.array(out_inv)


def ensemble_vertices(system: GptSystem, coords, tol: float = 1e-10) -> np.ndarray:
    """Vertices of ``{w >= 0 : sum_j w_j g_j = coords}``, one weight row each.

    Direct sums are handled block by block (the polytope is a product).
    """
    coords = np.asarray(coords, dtype=float)
    if system.blocks:
        per_block = []
        for (_, sub), off in zip(system.blocks, system.block_offsets):
            part = coords[off:off + sub.dim]
            if sub.unit @ part <= tol:
                per_block.append(np.zeros((1, sub.n_vertices)))
            else:
                per_block.append(ensemble_vertices(sub, part, tol))
        return np.array([np.concatenate(c) for c in itertools.product(*per_block)])
    idx, inv = _bases(system)
    if len(idx) == 0:
        raise UnsupportedSystem(f"{system.name} has no basis of generators")
    local = inv @ coords
    feasible = np.all(local >= -tol, axis=1)
    if not np.any(feasible):
        raise InvalidArgument("point is outside the cone")
    rows = np.zeros((int(feasible.sum()), system.n_vertices))
    for r, (sub, w) in enumerate(zip(idx[feasible], local[feasible])):
        rows[r, sub] = np.clip(w, 0.0, None)
    # distinct bases can share a degenerate vertex
    return np.unique(np.round(rows, 12), axis=0)


def _min_linear(system: GptSystem, coords, costs) -> tuple[float, np.ndarray]:
    """Minimise ``w . costs`` over the pure decompositions of ``coords``."""
    coords = np.asarray(coords, dtype=float)
    costs = np.asarray(costs, dtype=float)
    if system.blocks:
        total, parts = 0.0, []
        for (_, sub), off, voff in zip(system.blocks, system.block_offsets,
                                       _vertex_offsets(system)):
            part = coords[off:off + sub.dim]
            if sub.unit @ part <= 1e-10:
                parts.append(np.zeros(sub.n_vertices))
                continue
            v, w = _min_linear(sub, part, costs[voff:voff + sub.n_vertices])
            total += v
            parts.append(w)
        return total, np.concatenate(parts)
    verts = ensemble_vertices(system, coords)
    vals = verts @ costs
    k = int(np.argmin(vals))
    return float(vals[k]), verts[k]


def _vertex_offsets(system: GptSystem) -> list[int]:
    out, start = [], 0
    for _, sub in system.blocks:
        out.append(start)
        start += sub.n_vertices
    return out


def _coords(state) -> tuple[GptSystem, np.ndarray]:
    if isinstance(state, DirectSumState):
        state = state.as_state()
    if isinstance(state, SubState):
        w = state.weight()
        if abs(w - 1) > 1e-9:
            raise InvalidArgument("entropies are defined on normalised states")
        return state.system, np.asarray(state.coords)
    raise InvalidArgument(f"expected a state, got {type(state).__name__}")


# --------------------------------------------------------------------------
# the three entropies


@dataclass
class EntropyResult:
    """Value (nats) plus the decomposition or measurement attaining it."""

    value: float
    kind: str
    ensemble: EnsembleOverVertices | None = None
    measurement: Measurement | None = None
    distribution: np.ndarray | None = None

    def describe(self) -> dict:
        out = {"kind": self.kind, "value": self.value}
        if self.ensemble is not None:
            out["ensemble"] = [{"weight": w, "vertex": k} for w, k in self.ensemble.members()]
        if self.measurement is not None:
            out["measurement"] = {"labels": [str(l) for l in self.measurement.labels],
                                  "effects": self.measurement.effects.tolist()}
        if self.distribution is not None:
            out["distribution"] = self.distribution.tolist()
        return out


def s_mix(state, return_witness: bool = False):
    """Mixing entropy: smallest Shannon entropy of a pure decomposition."""
    system, rho = _coords(state)
    verts = ensemble_vertices(system, rho)
    vals = kernels.shannon_rows(verts)
    k = int(np.argmin(vals))
    value = max(float(vals[k]), 0.0)
    if return_witness:
        return EntropyResult(value, "mix", ensemble=EnsembleOverVertices(system, verts[k]))
    return value


def s_meas(state, return_witness: bool = False):
    """Measurement entropy: smallest outcome entropy over fine-grained measurements."""
    system, rho = _coords(state)
    best, arg = np.inf, None
    for m in enumerate_fine_grained(system):
        p = np.clip(m.effects @ rho, 0.0, None)
        h = entropy_terms(p)
        if h < best - 1e-15:
            best, arg = h, (m, p)
    if arg is None:
        raise UnsupportedSystem(f"no fine-grained measurement found on {system.name}")
    value = max(best, 0.0)
    if return_witness:
        return EntropyResult(value, "meas", measurement=arg[0], distribution=arg[1])
    return value


def _acc_for_measurement(system: GptSystem, rho, m: Measurement) -> tuple[float, np.ndarray]:
    cond = kernels.shannon_rows(m.channel(system.generators))
    floor, w = _min_linear(system, rho, cond)
    return entropy_terms(np.clip(m.effects @ rho, 0.0, None)) - floor, w


def s_acc(state, return_witness: bool = False):
    """Accessible-information entropy with its maximising ensemble and measurement."""
    system, rho = _coords(state)
    best, arg = -np.inf, None
    for m in enumerate_fine_grained(system):
        val, w = _acc_for_measurement(system, rho, m)
        if val > best + 1e-15:
            best, arg = val, (m, w)
    value = max(best, 0.0)
    if return_witness:
        return EntropyResult(value, "acc", ensemble=EnsembleOverVertices(system, arg[1]),
                             measurement=arg[0])
    return value


def i_acc(ensemble: DirectSumState, return_witness: bool = False):
    """Accessible information of an ensemble of states on one system.

    Mutual information is convex in the measurement, so the maximum over all
    measurements is attained on an extreme fine-grained one.
    """
    pairs = ensemble.nonzero()
    if not pairs:
        raise InvalidArgument("empty ensemble")
    system = pairs[0][1].system
    if any(s.system is not system for _, s in pairs):
        raise InvalidArgument("ensemble members live on different systems")
    weights = np.array([w for w, _ in pairs])
    members = np.array([s.coords for _, s in pairs])
    best, arg = 0.0, None
    for m in enumerate_fine_grained(system):
        val = mutual_information(weights, m.channel(members))
        if val > best + 1e-15:
            best, arg = val, m
    if return_witness:
        return EntropyResult(max(best, 0.0), "i_acc", measurement=arg)
    return max(best, 0.0)


# --------------------------------------------------------------------------
# derived entropies


def s_extended(base: Callable, ensemble: DirectSumState) -> float:
    """``H(labels) + sum_x w_x base(normalised branch x)``."""
    pairs = ensemble.nonzero()
    w = np.array([p for p, _ in pairs])
    return entropy_terms(w) + sum(p * base(s) for p, s in pairs)


def zero_entropy(state) -> float:
    return 0.0


@functools.lru_cache(maxsize=64)
def _candidate_pool(system: GptSystem, budget: int, seed: int) -> np.ndarray:
    """Vertices, pairwise midpoints and ``budget`` random states."""
    rng = np.random.default_rng(seed)
    gens = system.generators
    mids = [(gens[i] + gens[j]) / 2
            for i, j in itertools.combinations(range(len(gens)), 2)]
    rand = rng.dirichlet(np.ones(len(gens)), size=budget) @ gens
    return np.vstack([gens] + ([np.array(mids)] if mids else []) + [rand])


def _induced_on_points(system, points, base_values, targets) -> np.ndarray:
    """One round of ``S -> S'`` restricted to ensembles drawn from ``points``.

    For each measurement ``E`` the objective is ``H(E rho) - sum_j w_j
    phi_j`` with ``phi_j = H(E sigma_j) - S(sigma_j)``, an LP in ``w``.
    """
    out = np.full(len(targets), -np.inf)
    for m in enumerate_fine_grained(system):
        phi = kernels.shannon_rows(m.channel(points)) - base_values
        for t, rho in enumerate(targets):
            res = linprog(phi, A_eq=points.T, b_eq=rho, bounds=[(0, None)] * len(points),
                          method="highs")
            if res.status != 0:
                continue
            val = entropy_terms(np.clip(m.effects @ rho, 0.0, None)) - res.fun
            out[t] = max(out[t], val)
    return out


def s_induced(base: Callable, state, budget: int = 48, seed: int = 0) -> float:
    """Induced entropy ``S'`` of ``base``.

    Ensemble members are drawn from a fixed pool: the pure states, their
    pairwise midpoints, ``budget`` seeded random states and the state itself.
    The result is a lower bound that is exact whenever the optimum uses pool
    members (always the case for ``base = 0``, where it equals ``s_acc``).
    """
    if budget <= 0:
        raise InvalidArgument("budget must be positive")
    system, rho = _coords(state)
    pool = np.vstack([_candidate_pool(system, budget, seed), rho[None, :]])
    vals = np.array([base(State(system, p)) for p in pool])
    return max(float(_induced_on_points(system, pool, vals, [rho])[0]), 0.0)


@dataclass
class InfinityReport:
    """Bounded iteration ``S, S', S'', ...``; never claimed converged."""

    values: list = field(default_factory=list)

    @property
    def value(self) -> float:
        return max(self.values)

    @property
    def last_increment(self) -> float:
        return self.values[-1] - self.values[-2] if len(self.values) > 1 else 0.0


def s_infinity(base: Callable, state, iterations: int = 3, budget: int = 32,
               seed: int = 0) -> InfinityReport:
    """Supremum of ``iterations`` rounds of the induced-entropy map.

    Every round is evaluated on the same candidate pool (plus the state), so
    the cost is linear in ``iterations``.
    """
    if iterations < 1 or budget <= 0:
        raise InvalidArgument("iterations and budget must be positive")
    system, rho = _coords(state)
    pool = np.vstack([_candidate_pool(system, budget, seed), rho[None, :]])
    vals = np.array([base(State(system, p)) for p in pool])
    report = InfinityReport([float(vals[-1])])
    for _ in range(iterations):
        vals = np.maximum(_induced_on_points(system, pool, vals, pool), 0.0)
        report.values.append(float(vals[-1]))
    return report


# --------------------------------------------------------------------------
# property checks


@dataclass
class ConcavityWitness:
    weights: np.ndarray
    states: list
    mixture_value: float
    average_value: float

    @property
    def gap(self) -> float:
        return self.average_value - self.mixture_value


def _random_state(system: GptSystem, rng) -> State:
    kind = rng.integers(3)
    n = system.n_vertices
    if kind == 0 and n > 1:  # on an edge between two vertices
        i, j = rng.choice(n, 2, replace=False)
        t = rng.uniform()
        w = np.zeros(n)
        w[i], w[j] = t, 1 - t
    elif kind == 1:
        w = rng.dirichlet(np.full(n, 0.5))
    else:
        w = rng.dirichlet(np.ones(n))
    return system.state(w)


def check_concavity(fn: Callable, system: GptSystem, trials: int = 200, seed: int = 0,
                    tol: float = 1e-9) -> ConcavityWitness | None:
    """Search for ``S(sum p_i rho_i) < sum p_i S(rho_i) - tol``.

    Returns the worst witness found, or ``None`` if every trial passed.
    """
    if trials < 1:
        raise InvalidArgument("trials must be >= 1")
    rng = np.random.default_rng(seed)
    worst = None
    for _ in range(trials):
        k = int(rng.integers(2, 4))
        states = [_random_state(system, rng) for _ in range(k)]
        p = rng.dirichlet(np.ones(k))
        mix = State(system, p @ np.array([s.coords for s in states]))
        lhs = fn(mix)
        rhs = float(sum(pi * fn(s) for pi, s in zip(p, states)))
        if lhs < rhs - tol and (worst is None or rhs - lhs > worst.gap):
            worst = ConcavityWitness(p, states, lhs, rhs)
    return worst


def check_direct_sum_consistency(fn: Callable, ensemble: DirectSumState) -> float:
    """``S(ensemble as a direct-sum state) - [H(weights) + <S>]``."""
    return float(fn(ensemble.as_state()) - s_extended(fn, ensemble))


# --------------------------------------------------------------------------
# kinds


@dataclass(frozen=True)
class EntropyKind:
    """Named entropy, optionally induced from or extended by another kind."""

    tag: str
    of: "EntropyKind | None" = None
    log_base: str = "nat"

    def __post_init__(self):
        if self.tag not in ("mix", "meas", "acc", "shannon", "induced", "extended"):
            raise InvalidArgument(f"unknown entropy kind {self.tag!r}")
        if self.tag in ("induced", "extended") and self.of is None:
            raise InvalidArgument(f"{self.tag} entropy needs a base kind")

    @property
    def name(self) -> str:
        return f"{self.tag}({self.of.name})" if self.of is not None else self.tag

    def nats(self, obj) -> float:
        if self.tag == "extended":
            return s_extended(self.of.nats, obj)
        if self.tag == "induced":
            return s_induced(self.of.nats, obj)
        return ENTROPIES[self.tag](obj)

    def __call__(self, obj) -> float:
        return to_base(self.nats(obj), self.log_base)


def _shannon_state(state) -> float:
    system, rho = _coords(state)
    if system.kind != "classical":
        raise UnsupportedSystem("Shannon entropy needs a classical system")
    return shannon(np.clip(rho, 0.0, None))


ENTROPIES: dict[str, Callable] = {
    "mix": s_mix,
    "meas": s_meas,
    "acc": s_acc,
    "shannon": _shannon_state,
}


def get_entropy(name: str) -> Callable:
    """Entropy function by name (``mix``, ``meas``, ``acc``, ``shannon``)."""
    try:
        return ENTROPIES[name]
    except KeyError:
        raise InvalidArgument(f"unknown entropy {name!r}; choose from {sorted(ENTROPIES)}")
