"""Measurements, measurement processes and their structural predicates."""

from __future__ import annotations

import functools
import itertools
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

from .core import (
    TOL,
    DirectSumState,
    Effect,
    GptSystem,
    State,
    SubState,
    _frozen,
    cone_contains,
    make_classical,
)
from .errors import InvalidArgument, NotDistinguishable

RAY_COS_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class Measurement:
    """Outcome-indexed family of effects summing to the unit."""

    system: GptSystem
    effects: np.ndarray
    labels: tuple = ()

    def __post_init__(self):
        e = np.atleast_2d(np.asarray(self.effects, dtype=float))
        if e.shape[1] != self.system.dim:
            raise InvalidArgument("effect dimension does not match the system")
        object.__setattr__(self, "effects", _frozen(e))
        labels = tuple(self.labels) or tuple(range(len(e)))
        if len(labels) != len(e):
            raise InvalidArgument("one label per effect is required")
        object.__setattr__(self, "labels", labels)
        vals = e @ self.system.generators.T
        if np.any(vals < -TOL) or np.any(vals > 1 + TOL):
            raise InvalidArgument("measurement contains a non-effect")
        if not np.allclose(e.sum(axis=0), self.system.unit, atol=TOL):
            raise InvalidArgument("effects do not sum to the unit effect")

    @property
    def n_outcomes(self) -> int:
        return len(self.effects)

    def probabilities(self, state: SubState) -> np.ndarray:
        p = self.effects @ np.asarray(state.coords)
        return np.clip(p, 0.0, None)

    def channel(self, states) -> np.ndarray:
        """Row ``i`` is the outcome distribution on ``states[i]`` (array of coords)."""
        return np.clip(np.asarray(states, dtype=float) @ self.effects.T, 0.0, None)

    def __repr__(self) -> str:
        return f"Measurement({self.system.name}, outcomes={self.n_outcomes})"


@dataclass(frozen=True, eq=False)
class MeasurementProcess:
    """Family of positive maps ``M_x: A -> A`` with ``sum_x unit . M_x = unit``."""

    system: GptSystem
    maps: np.ndarray
    labels: tuple = ()

    def __post_init__(self):
        m = np.asarray(self.maps, dtype=float)
        d = self.system.dim
        if m.ndim != 3 or m.shape[1:] != (d, d):
            raise InvalidArgument(f"expected maps of shape (k, {d}, {d}), got {m.shape}")
        object.__setattr__(self, "maps", _frozen(m))
        labels = tuple(self.labels) or tuple(range(len(m)))
        if len(labels) != len(m):
            raise InvalidArgument("one label per branch map is required")
        object.__setattr__(self, "labels", labels)
        gens = self.system.generators
        for mx in m:
            if np.any((gens @ mx.T) @ self.system.dual_rays.T < -TOL):
                raise InvalidArgument("branch map is not positive")
        total = sum(self.system.unit @ mx for mx in m)
        if not np.allclose(total, self.system.unit, atol=TOL):
            raise InvalidArgument("branch maps do not sum to a unit-preserving map")

    @property
    def n_outcomes(self) -> int:
        return len(self.maps)

    def is_trivial(self) -> bool:
        return self.n_outcomes == 1 and np.allclose(self.maps[0], np.eye(self.system.dim))

    def apply(self, state: SubState) -> DirectSumState:
        """``M rho`` as a state of ``KA`` (branches are unnormalised)."""
        c = np.asarray(state.coords)
        w = state.weight()
        branches = []
        for mx in self.maps:
            out = mx @ c
            out = np.where(np.abs(out) < 1e-15, 0.0, out)
            branches.append(SubState(self.system, out / w))
        return DirectSumState(tuple(branches), self.labels)

    __call__ = apply

    def __repr__(self) -> str:
        return f"MeasurementProcess({self.system.name}, outcomes={self.n_outcomes})"


def trivial_process(system: GptSystem) -> MeasurementProcess:
    """Single-outcome identity process (a wall that measures nothing)."""
    return MeasurementProcess(system, np.eye(system.dim)[None, :, :], ("*",))


def induced_measurement(proc: MeasurementProcess) -> Measurement:
    return Measurement(proc.system, np.array([proc.system.unit @ m for m in proc.maps]),
                       proc.labels)


# --------------------------------------------------------------------------
# indecomposability and fine-grained measurements


def _ray_index(system: GptSystem, functional, tol: float = RAY_COS_TOL) -> int | None:
    f = np.asarray(functional, dtype=float)
    norm = np.linalg.norm(f)
    if norm <= TOL:
        return None
    rays = system.dual_rays
    cos = rays @ f / (np.linalg.norm(rays, axis=1) * norm)
    k = int(np.argmax(cos))
    return k if cos[k] >= 1 - tol else None


def is_indecomposable(effect, functional=None, tol: float = RAY_COS_TOL) -> bool:
    """True iff the effect lies on an extreme ray of the dual cone.

    Accepts an :class:`Effect`, or a system followed by a raw functional.
    The zero effect is not on any ray.
    """
    if isinstance(effect, Effect):
        system, functional = effect.system, effect.functional
    else:
        system = effect
    return _ray_index(system, functional, tol) is not None


def is_fine_grained(m: Measurement) -> bool:
    return all(is_indecomposable(m.system, e) for e in m.effects)


def _fine_grained_supports(system: GptSystem, max_support: int):
    rays = system.dual_rays
    unit = system.unit
    out = []
    for size in range(1, max_support + 1):
        for subset in itertools.combinations(range(len(rays)), size):
            sub = rays[list(subset)].T  # dim x size
            coef, _, rank, _ = np.linalg.lstsq(sub, unit, rcond=None)
            if rank < size:
                continue
            if np.linalg.norm(sub @ coef - unit) > 1e-9:
                continue
            if np.any(coef <= TOL):
                continue
            out.append((subset, coef))
    return out


def _enumerate_direct_sum(system: GptSystem, max_support: int) -> tuple:
    # the coefficient polytope of a direct sum is the product of the block polytopes
    per_block = [_enumerate_cached(sub, sub.dim) for _, sub in system.blocks]
    found = []
    for combo in itertools.product(*per_block):
        if sum(m.n_outcomes for m in combo) > max_support:
            continue
        effects, labels = [], []
        for (lab, sub), off, m in zip(system.blocks, system.block_offsets, combo):
            for sublabel, e in zip(m.labels, m.effects):
                v = np.zeros(system.dim)
                v[off:off + sub.dim] = e
                effects.append(v)
                labels.append((lab, sublabel))
        found.append(Measurement(system, np.array(effects), tuple(labels)))
    return tuple(found)


@functools.lru_cache(maxsize=256)
def _enumerate_cached(system: GptSystem, max_support: int) -> tuple:
    if system.blocks:
        return _enumerate_direct_sum(system, max_support)
    found = []
    for subset, coef in _fine_grained_supports(system, max_support):
        effects = coef[:, None] * system.dual_rays[list(subset)]
        found.append(Measurement(system, effects, tuple(subset)))
    return tuple(found)


def enumerate_fine_grained(system: GptSystem, max_support: int | None = None) -> list[Measurement]:
    """All extreme fine-grained measurements with at most ``max_support`` outcomes.

    Every measurement whose effects are positive multiples of distinct dual
    rays is a convex combination of the ones returned here (for
    ``max_support >= dim``); each support set is emitted once, so no two
    results coincide up to relabeling. Outcome labels are the indices of the
    dual rays used.
    """
    if max_support is None:
        max_support = system.dim
    if max_support < 1:
        raise InvalidArgument("max_support must be >= 1")
    return list(_enumerate_cached(system, int(max_support)))


# --------------------------------------------------------------------------
# repeatability


def is_repeatable(proc: MeasurementProcess, tol: float = 1e-9) -> bool:
    """``M_x M_y = delta_xy M_x`` entrywise within ``tol``."""
    maps = proc.maps
    for x, y in itertools.product(range(len(maps)), repeat=2):
        target = maps[x] if x == y else np.zeros_like(maps[x])
        if not np.allclose(maps[x] @ maps[y], target, atol=tol):
            return False
    return True


def face_generators(system: GptSystem, point, tol: float = 1e-9) -> np.ndarray:
    """Indices of the generators spanning the smallest face containing ``point``."""
    p = np.asarray(point, dtype=float)
    scale = max(1.0, float(np.abs(p).max()))
    active = system.dual_rays[system.dual_rays @ p <= tol * scale]
    if len(active) == 0:
        return np.arange(system.n_vertices)
    on_face = np.all(system.generators @ active.T <= tol, axis=1)
    return np.flatnonzero(on_face)


def is_strongly_repeatable(proc: MeasurementProcess, tol: float = 1e-9) -> bool:
    """Exact face-fixing test.

    For each outcome ``x``, the substates below some ``M_x rho`` span the
    smallest face containing ``M_x`` applied to an interior point; the process
    is strongly repeatable iff every ``M_x`` fixes each generator of that face.
    """
    gens = proc.system.generators
    for mx in proc.maps:
        images = gens @ mx.T
        p = images.sum(axis=0)
        if np.all(np.abs(p) <= tol):
            continue
        for k in face_generators(proc.system, p, tol):
            if not np.allclose(mx @ gens[k], gens[k], atol=tol):
                return False
    return True


def sample_order_interval(system: GptSystem, top, rng) -> np.ndarray:
    """Random ``sigma`` with ``0 <= sigma <= top``."""
    top = np.asarray(top, dtype=float)
    idx = face_generators(system, top)
    direction = rng.dirichlet(np.ones(len(idx))) @ system.generators[idx]
    fd = system.dual_rays @ direction
    fp = system.dual_rays @ top
    pos = fd > 1e-12
    t_max = float(np.min(np.clip(fp[pos], 0.0, None) / fd[pos])) if np.any(pos) else 0.0
    return rng.uniform(0.0, 1.0) * t_max * direction


def strong_repeatability_witness(proc: MeasurementProcess, trials: int = 200,
                                 rng=None, tol: float = 1e-8):
    """Randomised falsifier: return ``(x, rho, sigma)`` with ``M_x sigma != sigma``.

    ``sigma`` is drawn from the order interval ``[0, M_x rho]`` for random
    states ``rho``. Returns ``None`` when no counterexample is found.
    """
    rng = np.random.default_rng(rng)
    system = proc.system
    for _ in range(trials):
        rho = rng.dirichlet(np.ones(system.n_vertices)) @ system.generators
        for x, mx in enumerate(proc.maps):
            top = mx @ rho
            if system.unit @ top <= tol:
                continue
            sigma = sample_order_interval(system, top, rng)
            if not np.allclose(mx @ sigma, sigma, atol=tol):
                return x, rho, sigma
    return None


# --------------------------------------------------------------------------
# distinguishability and measure-and-prepare


def perfectly_distinguishable(states) -> Measurement | None:
    """A measurement with ``e_x(rho_y) = delta_xy``, or ``None`` if none exists."""
    states = list(states)
    if not states:
        raise InvalidArgument("need at least one state")
    system = states[0].system
    if any(s.system is not system for s in states):
        raise InvalidArgument("states live on different systems")
    n, d = len(states), system.dim
    rho = np.array([s.coords for s in states])
    gens = system.generators
    nv = n * d

    a_eq, b_eq = [], []
    for x in range(n):
        for y in range(n):
            row = np.zeros(nv)
            row[x * d:(x + 1) * d] = rho[y]
            a_eq.append(row)
            b_eq.append(1.0 if x == y else 0.0)
    for j in range(d):
        row = np.zeros(nv)
        row[j::d] = 1.0
        a_eq.append(row)
        b_eq.append(system.unit[j])
    a_ub = np.zeros((n * len(gens), nv))
    for x in range(n):
        a_ub[x * len(gens):(x + 1) * len(gens), x * d:(x + 1) * d] = -gens
    res = linprog(np.zeros(nv), A_ub=a_ub, b_ub=np.zeros(len(a_ub)),
                  A_eq=np.array(a_eq), b_eq=np.array(b_eq),
                  bounds=[(None, None)] * nv, method="highs")
    if res.status != 0:
        return None
    effects = res.x.reshape(n, d)
    effects[-1] = system.unit - effects[:-1].sum(axis=0)
    try:
        return Measurement(system, effects)
    except InvalidArgument:
        return None


def measure_and_prepare(states, m: Measurement) -> MeasurementProcess:
    """Process ``(rho_x e_x)_x``: measure ``m`` and prepare ``states[x]``."""
    states = list(states)
    rho = np.array([s.coords for s in states])
    if len(states) != m.n_outcomes:
        raise InvalidArgument("one state per outcome is required")
    if not np.allclose(m.effects @ rho.T, np.eye(len(states)), atol=TOL):
        raise NotDistinguishable("measurement does not perfectly distinguish the states")
    maps = np.einsum("xi,xj->xij", rho, m.effects)
    return MeasurementProcess(m.system, maps, m.labels)


def pointer_process(n: int) -> MeasurementProcess:
    """Classical pointer process ``(delta_x eps_x)_x`` on ``classical(n)``."""
    system = make_classical(n)
    maps = np.array([np.outer(np.eye(n)[x], np.eye(n)[x]) for x in range(n)])
    return MeasurementProcess(system, maps)


def vertex_pair_process(system: GptSystem, i: int, j: int) -> MeasurementProcess:
    """Measure-and-prepare process for a perfectly distinguishable vertex pair.

    Prefers a distinguishing measurement made of two dual rays (so the
    induced measurement is fine-grained); falls back to an LP solution.
    """
    vi, vj = system.vertex(i), system.vertex(j)
    m = None
    for f in system.dual_rays:
        g = system.unit - f
        if (abs(f @ vi.coords - 1) < TOL and abs(f @ vj.coords) < TOL
                and is_indecomposable(system, g)):
            m = Measurement(system, np.array([f, g]))
            break
    if m is None:
        m = perfectly_distinguishable([vi, vj])
    if m is None:
        raise NotDistinguishable(f"vertices {i} and {j} are not perfectly distinguishable")
    return measure_and_prepare([vi, vj], m)


def process_zoo(system: GptSystem) -> list[MeasurementProcess]:
    """Built-in repeatable processes on a system.

    For polygons: measure-and-prepare processes on every perfectly
    distinguishable vertex pair with a fine-grained distinguishing
    measurement. For classical systems: the pointer process. The trivial
    process is always included.
    """
    zoo = [trivial_process(system)]
    if system.kind == "classical" and not system.blocks:
        zoo.append(pointer_process(system.dim))
    elif system.kind == "polygon":
        for i, j in itertools.combinations(range(system.n), 2):
            try:
                zoo.append(vertex_pair_process(system, i, j))
            except NotDistinguishable:
                continue
    return zoo


def apply_process_to_state(proc: MeasurementProcess, state: State) -> DirectSumState:
    return proc.apply(state)


def branch_fixed(proc: MeasurementProcess, k: int, state: SubState, tol: float = TOL) -> bool:
    """``M_k rho = rho`` within ``tol``."""
    c = np.asarray(state.coords)
    return bool(np.allclose(proc.maps[k] @ c, c, atol=tol))


def check_process_cone(proc: MeasurementProcess) -> bool:
    gens = proc.system.generators
    return all(cone_contains(proc.system, mx @ g) for mx in proc.maps for g in gens)
