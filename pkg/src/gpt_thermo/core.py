"""Finite-dimensional GPT systems with polyhedral cones.

A system is stored in V-representation: the extreme rays of its positive cone,
each scaled to a normalised (pure) state, together with the unit effect. The
extreme rays of the dual cone are derived once at construction and scaled so
that their maximum over the pure states is exactly one, which turns each of
them into a maximal indecomposable effect.
"""

from __future__ import annotations

import functools
import itertools
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import linprog

from .errors import (
    DegenerateCone,
    InvalidArgument,
    PositivityViolation,
    UnsupportedDimension,
)

TOL = 1e-9
MAX_BRUTE_FORCE_DIM = 4


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=float)
    arr.setflags(write=False)
    return arr


# --------------------------------------------------------------------------
# facet enumeration


def facet_normals(points, tol: float = TOL) -> np.ndarray:
    """Inward facet normals of the cone generated by ``points``.

    Brute-force search over (dim-1)-subsets of generators; each subset whose
    span is a supporting hyperplane yields one normal. Normals are returned
    with unit Euclidean length, one per facet.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    n, dim = pts.shape
    if dim > MAX_BRUTE_FORCE_DIM:
        raise UnsupportedDimension(
            f"facet search is limited to dim <= {MAX_BRUTE_FORCE_DIM}, got {dim}"
        )
    if np.linalg.matrix_rank(pts, tol=1e-10) < dim:
        raise DegenerateCone("generators do not span the ambient space")
    if dim == 1:
        sign = np.sign(pts[:, 0])
        if np.all(sign > 0):
            return np.array([[1.0]])
        if np.all(sign < 0):
            return np.array([[-1.0]])
        raise DegenerateCone("one-dimensional cone is not pointed")

    scale = np.linalg.norm(pts, axis=1, keepdims=True)
    unit_pts = pts / scale
    found: list[np.ndarray] = []
    for subset in itertools.combinations(range(n), dim - 1):
        sub = unit_pts[list(subset)]
        _, s, vt = np.linalg.svd(sub)
        if s[-1] < 1e-10:
            continue
        normal = vt[-1]
        vals = unit_pts @ normal
        if np.all(vals >= -tol):
            pass
        elif np.all(vals <= tol):
            normal = -normal
            vals = -vals
        else:
            continue
        if np.all(vals <= tol):
            raise DegenerateCone("cone lies in a hyperplane")
        if not any(np.allclose(normal, f, atol=1e-8) for f in found):
            found.append(normal)
    if not found:
        raise DegenerateCone("no facets found; cone is not pointed")
    return np.array(found)


def _normalise_rays(rays: np.ndarray, generators: np.ndarray) -> np.ndarray:
    top = (rays @ generators.T).max(axis=1)
    if np.any(top <= TOL):
        raise DegenerateCone("dual ray vanishes on every generator")
    return rays / top[:, None]


# --------------------------------------------------------------------------
# systems


@dataclass(frozen=True, eq=False)
class GptSystem:
    """A GPT system ``(V, C, unit)`` with a polyhedral positive cone.

    ``generators`` holds one normalised pure state per extreme ray (rows);
    ``dual_rays`` holds one maximal indecomposable effect per extreme ray of
    the dual cone. Instances are immutable and compared by identity.
    """

    name: str
    generators: np.ndarray
    unit: np.ndarray
    dual_rays: np.ndarray
    kind: str = "custom"
    n: int = 0
    blocks: tuple = field(default=())

    @property
    def dim(self) -> int:
        return self.generators.shape[1]

    @property
    def n_vertices(self) -> int:
        return self.generators.shape[0]

    def vertex(self, k: int) -> "State":
        """The pure state on the ``k``-th extreme ray (indices wrap)."""
        return State(self, self.generators[k % self.n_vertices])

    def state(self, weights: Sequence[float]) -> "State":
        """Convex combination ``sum_k weights[k] * vertex(k)``."""
        w = np.asarray(weights, dtype=float)
        if w.shape != (self.n_vertices,):
            raise InvalidArgument(
                f"expected {self.n_vertices} vertex weights, got shape {w.shape}"
            )
        return State(self, w @ self.generators)

    def mixture(self, terms) -> "State":
        """Build a state from ``[(weight, vertex_index), ...]``."""
        w = np.zeros(self.n_vertices)
        for weight, k in terms:
            w[k % self.n_vertices] += weight
        return self.state(w)

    @property
    def block_offsets(self) -> list[int]:
        offsets, start = [], 0
        for _, sub in self.blocks:
            offsets.append(start)
            start += sub.dim
        return offsets

    def __repr__(self) -> str:
        return f"GptSystem({self.name!r}, dim={self.dim}, rays={self.n_vertices})"


def _build(name, generators, unit, dual_rays, kind, n=0, blocks=()):
    return GptSystem(
        name=name,
        generators=_frozen(generators),
        unit=_frozen(unit),
        dual_rays=_frozen(dual_rays),
        kind=kind,
        n=n,
        blocks=tuple(blocks),
    )


@functools.lru_cache(maxsize=None)
def make_classical(n: int) -> GptSystem:
    """Classical system on ``n`` outcomes (probability simplex)."""
    if not isinstance(n, (int, np.integer)) or n < 1:
        raise InvalidArgument(f"classical system needs n >= 1, got {n!r}")
    eye = np.eye(n)
    return _build(f"classical:{n}", eye, np.ones(n), eye, "classical", n=int(n))


@functools.lru_cache(maxsize=None)
def make_polygon(n: int) -> GptSystem:
    """Regular ``n``-gon state space with vertices ``(cos 2pi k/n, sin 2pi k/n, 1)``."""
    if not isinstance(n, (int, np.integer)) or n < 3:
        raise InvalidArgument(f"polygon needs n >= 3, got {n!r}")
    angles = 2 * np.pi * np.arange(n) / n
    gens = np.column_stack([np.cos(angles), np.sin(angles), np.ones(n)])
    # exact zeros keep the square's vertices clean
    gens[np.abs(gens) < 1e-15] = 0.0
    rays = []
    for k in range(n):
        f = np.cross(gens[k], gens[(k + 1) % n])
        if (gens @ f).sum() < 0:
            f = -f
        rays.append(f)
    rays = _normalise_rays(np.array(rays), gens)
    rays[np.abs(rays) < 1e-15] = 0.0
    names = {4: "square", 6: "hexagon"}
    return _build(names.get(n, f"polygon:{n}"), gens, [0.0, 0.0, 1.0], rays,
                  "polygon", n=int(n))


def make_custom(generators, unit, name: str = "custom") -> GptSystem:
    """System from user-supplied extreme rays; dual rays by brute-force facet search."""
    gens = np.atleast_2d(np.asarray(generators, dtype=float))
    unit = np.asarray(unit, dtype=float)
    if gens.shape[1] != unit.shape[0]:
        raise InvalidArgument("generator and unit dimensions differ")
    vals = gens @ unit
    if np.any(vals <= TOL):
        raise DegenerateCone("unit effect must be strictly positive on every generator")
    gens = gens / vals[:, None]
    rays = _normalise_rays(facet_normals(gens), gens)
    return _build(name, gens, unit, rays, "custom")


def _direct_sum(key: tuple) -> GptSystem:
    labels = [lab for lab, _ in key]
    systems = [s for _, s in key]
    dim = sum(s.dim for s in systems)
    gens, rays, unit = [], [], np.zeros(dim)
    start = 0
    for s in systems:
        sl = slice(start, start + s.dim)
        for g in s.generators:
            v = np.zeros(dim)
            v[sl] = g
            gens.append(v)
        for f in s.dual_rays:
            v = np.zeros(dim)
            v[sl] = f
            rays.append(v)
        unit[sl] = s.unit
        start += s.dim
    if all(s.kind == "classical" for s in systems):
        kind = "classical"
    else:
        kind = "direct_sum"
    name = "+".join(f"{lab}:{s.name}" for lab, s in zip(labels, systems))
    return _build(name, gens, unit, rays, kind, n=len(gens) if kind == "classical" else 0,
                  blocks=tuple(key))


_direct_sum_cache: dict = {}


def direct_sum(systems) -> GptSystem:
    """Direct sum of systems.

    ``systems`` is a list of systems or of ``(label, system)`` pairs. The
    result is memoised on the identity of the inputs so that repeated calls
    return the same object (and share its caches).
    """
    items = list(systems)
    if not items:
        raise InvalidArgument("direct sum of an empty family")
    if not isinstance(items[0], tuple):
        items = list(enumerate(items))
    key = tuple((lab, s) for lab, s in items)
    ident = tuple((lab, id(s)) for lab, s in key)
    hit = _direct_sum_cache.get(ident)
    if hit is None:
        hit = (_direct_sum(key), key)
        _direct_sum_cache[ident] = hit
    return hit[0]


def cone_contains(system: GptSystem, vector, tol: float = TOL) -> bool:
    """True iff ``vector`` lies in the positive cone (up to ``tol``)."""
    v = np.asarray(vector, dtype=float)
    if v.shape != (system.dim,):
        raise InvalidArgument(f"expected vector of length {system.dim}, got {v.shape}")
    return bool(np.all(system.dual_rays @ v >= -tol))


def cone_contains_lp(system: GptSystem, vector) -> bool:
    """Membership by LP feasibility ``vector = sum a_i g_i, a >= 0``."""
    v = np.asarray(vector, dtype=float)
    res = linprog(
        np.zeros(system.n_vertices),
        A_eq=system.generators.T,
        b_eq=v,
        bounds=[(0, None)] * system.n_vertices,
        method="highs",
    )
    return res.status == 0


def dual_extreme_rays(system: GptSystem) -> np.ndarray:
    """Maximal indecomposable effects, one per extreme ray of the dual cone."""
    return system.dual_rays


def is_pointed(system: GptSystem) -> bool:
    """LP check that no nonzero combination of generators sums to zero."""
    n = system.n_vertices
    res = linprog(
        np.zeros(n),
        A_eq=np.vstack([system.generators.T, np.ones((1, n))]),
        b_eq=np.concatenate([np.zeros(system.dim), [1.0]]),
        bounds=[(0, None)] * n,
        method="highs",
    )
    return res.status != 0


def rays_match(a, b, tol: float = 1e-8) -> bool:
    """Same set of rays up to positive scaling."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        return False
    an = a / np.linalg.norm(a, axis=1, keepdims=True)
    bn = b / np.linalg.norm(b, axis=1, keepdims=True)
    used = set()
    for row in an:
        hits = [j for j in range(len(bn)) if j not in used and np.allclose(row, bn[j], atol=tol)]
        if not hits:
            return False
        used.add(hits[0])
    return True


# --------------------------------------------------------------------------
# states, effects, maps


@dataclass(frozen=True, eq=False)
class SubState:
    """Unnormalised state: a cone element with weight ``unit . coords <= 1``."""

    system: GptSystem
    coords: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coords, dtype=float)
        if c.shape != (self.system.dim,):
            raise InvalidArgument(f"expected {self.system.dim} coordinates, got {c.shape}")
        object.__setattr__(self, "coords", _frozen(c))
        if not cone_contains(self.system, c):
            raise PositivityViolation(f"{c} is outside the cone of {self.system.name}")
        w = self.weight()
        if w > 1 + TOL:
            raise InvalidArgument(f"substate weight {w} exceeds 1")

    def weight(self) -> float:
        return float(self.system.unit @ self.coords)

    def normalized(self) -> "State":
        w = self.weight()
        if w <= 0:
            raise InvalidArgument("cannot normalise a zero substate")
        return State(self.system, self.coords / w)


@dataclass(frozen=True, eq=False)
class State(SubState):
    """Normalised state of a system."""

    def __post_init__(self):
        super().__post_init__()
        w = self.weight()
        if abs(w - 1) > TOL:
            raise InvalidArgument(f"state is not normalised (unit value {w})")

    def __repr__(self) -> str:
        return f"State({self.system.name}, {np.round(self.coords, 12).tolist()})"


@dataclass(frozen=True, eq=False)
class Effect:
    system: GptSystem
    functional: np.ndarray

    def __post_init__(self):
        f = np.asarray(self.functional, dtype=float)
        if f.shape != (self.system.dim,):
            raise InvalidArgument(f"expected {self.system.dim} components, got {f.shape}")
        object.__setattr__(self, "functional", _frozen(f))
        vals = self.system.generators @ f
        if np.any(vals < -TOL) or np.any(vals > 1 + TOL):
            raise InvalidArgument("functional is not an effect (must lie in [0, unit])")

    def __call__(self, state: SubState) -> float:
        return float(self.functional @ state.coords)


@dataclass(frozen=True, eq=False)
class PositiveMap:
    """Linear map ``source -> target`` sending the source cone into the target cone."""

    source: GptSystem
    target: GptSystem
    matrix: np.ndarray
    is_process: bool = False

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        if m.shape != (self.target.dim, self.source.dim):
            raise InvalidArgument(
                f"matrix shape {m.shape} does not match "
                f"({self.target.dim}, {self.source.dim})"
            )
        object.__setattr__(self, "matrix", _frozen(m))
        images = self.source.generators @ m.T
        if np.any(images @ self.target.dual_rays.T < -TOL):
            raise PositivityViolation("map sends a generator outside the target cone")
        if self.is_process and not np.allclose(
            self.target.unit @ m, self.source.unit, atol=TOL
        ):
            raise InvalidArgument("map is flagged as a process but does not preserve the unit")

    def __call__(self, state: SubState) -> SubState:
        return apply_map(self, state)

    def compose(self, other: "PositiveMap") -> "PositiveMap":
        """``self`` after ``other``."""
        return PositiveMap(other.source, self.target, self.matrix @ other.matrix,
                           self.is_process and other.is_process)


def identity_map(system: GptSystem) -> PositiveMap:
    return PositiveMap(system, system, np.eye(system.dim), True)


def apply_map(pmap: PositiveMap, state: SubState) -> SubState:
    out = pmap.matrix @ state.coords
    if not cone_contains(pmap.target, out):
        raise PositivityViolation("image left the target cone; the map is not positive")
    if isinstance(state, State) and pmap.is_process:
        return State(pmap.target, out)
    return SubState(pmap.target, out)


def is_reversible(pmap: PositiveMap) -> bool:
    """Invertible process whose inverse is again a process."""
    m = pmap.matrix
    if m.shape[0] != m.shape[1] or not pmap.is_process:
        return False
    if abs(np.linalg.det(m)) < 1e-12:
        return False
    inv = np.linalg.inv(m)
    images = pmap.target.generators @ inv.T
    if np.any(images @ pmap.source.dual_rays.T < -TOL):
        return False
    return bool(np.allclose(pmap.source.unit @ inv, pmap.target.unit, atol=TOL))


def polygon_rotation(system: GptSystem, steps: int = 1) -> PositiveMap:
    """Rotation sending vertex ``k`` to vertex ``k + steps``."""
    if system.kind != "polygon":
        raise InvalidArgument("rotation is defined for polygon systems")
    t = 2 * np.pi * steps / system.n
    c, s = np.cos(t), np.sin(t)
    m = np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
    return PositiveMap(system, system, m, True)


def polygon_reflection(system: GptSystem) -> PositiveMap:
    """Reflection through the axis of vertex 0 (vertex ``k`` -> ``-k``)."""
    if system.kind != "polygon":
        raise InvalidArgument("reflection is defined for polygon systems")
    return PositiveMap(system, system, np.diag([1.0, -1.0, 1.0]), True)


def polygon_symmetries(system: GptSystem) -> list[PositiveMap]:
    """All ``2n`` symmetries of a regular polygon as reversible processes."""
    refl = polygon_reflection(system)
    rots = [polygon_rotation(system, k) for k in range(system.n)]
    return rots + [r.compose(refl) for r in rots]


# --------------------------------------------------------------------------
# classical-label ensembles


@dataclass(frozen=True, eq=False)
class DirectSumState:
    """State of a direct sum: one substate per classical label.

    When every branch lives on the same system ``A`` this is an ensemble,
    i.e. a state of the composite ``XA``.
    """

    branches: tuple
    labels: tuple = ()

    def __post_init__(self):
        branches = tuple(self.branches)
        if not branches:
            raise InvalidArgument("direct-sum state needs at least one branch")
        object.__setattr__(self, "branches", branches)
        labels = tuple(self.labels) or tuple(range(len(branches)))
        if len(labels) != len(branches):
            raise InvalidArgument("labels and branches differ in length")
        object.__setattr__(self, "labels", labels)
        total = sum(b.weight() for b in branches)
        if abs(total - 1) > TOL:
            raise InvalidArgument(f"branch weights sum to {total}, not 1")

    @classmethod
    def from_ensemble(cls, weights, states, labels=()) -> "DirectSumState":
        branches = tuple(
            SubState(s.system, w * np.asarray(s.coords)) for w, s in zip(weights, states)
        )
        return cls(branches, tuple(labels))

    @property
    def weights(self) -> np.ndarray:
        return np.array([b.weight() for b in self.branches])

    def nonzero(self, tol: float = TOL) -> list[tuple[float, State]]:
        """``(weight, normalised branch)`` pairs with zero branches dropped."""
        return [(b.weight(), b.normalized()) for b in self.branches if b.weight() > tol]

    @property
    def system(self) -> GptSystem:
        return direct_sum([(lab, b.system) for lab, b in zip(self.labels, self.branches)])

    def as_state(self) -> State:
        """The same object viewed as a state of the direct-sum system."""
        return State(self.system, np.concatenate([b.coords for b in self.branches]))

    def partial_trace(self) -> State:
        """Forget the label: the sum of the branches (all on one system)."""
        systems = {id(b.system) for b in self.branches}
        if len(systems) != 1:
            raise InvalidArgument("branches live on different systems")
        return State(self.branches[0].system, sum(np.asarray(b.coords) for b in self.branches))

    def expectation(self, funcs) -> float:
        """``<g_x>``: sum of ``weight_x * g_x(normalised branch x)``."""
        if callable(funcs):
            funcs = [funcs] * len(self.branches)
        total = 0.0
        for b, g in zip(self.branches, funcs):
            w = b.weight()
            if w > TOL:
                total += w * g(b.normalized())
        return total
