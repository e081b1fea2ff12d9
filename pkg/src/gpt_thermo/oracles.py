"""Brute-force grid oracles used to cross-check the exact entropy routines.

Each oracle scans a polytope ``{x >= 0 : A x = b}`` on a regular grid in
null-space coordinates, keeps the best feasible point, and zooms in around it.
They share no code with the vertex-enumeration path in :mod:`entropy`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import null_space
from scipy.optimize import linprog

from . import kernels
from .core import GptSystem, State
from .measurement import enumerate_fine_grained


@dataclass
class GridResult:
    value: float
    point: np.ndarray
    evaluations: int


def _box(x0, basis):
    """Bounding box of ``t`` with ``x0 + basis @ t >= 0``."""
    k = basis.shape[1]
    lo, hi = np.empty(k), np.empty(k)
    for i in range(k):
        c = np.zeros(k)
        c[i] = 1.0
        for sign, out in ((1.0, lo), (-1.0, hi)):
            res = linprog(sign * c, A_ub=-basis, b_ub=x0, bounds=[(None, None)] * k,
                          method="highs")
            out[i] = sign * res.fun
    return lo, hi


def _grid(lo, hi, points):
    axes = [np.linspace(l, h, points) for l, h in zip(lo, hi)]
    return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, len(lo))


def grid_optimize(a, b, objective, sense: str = "min", points: int = 25,
                  levels: int = 40, shrink: float = 0.3, starts: int = 12) -> GridResult:
    """Zooming grid search of ``objective`` over ``{x >= 0 : a x = b}``.

    A full grid with ``points`` per null-space axis seeds up to ``starts``
    well-separated candidates; each is refined ``levels`` times on a box
    around the running best whose width shrinks by ``2 * shrink`` per level. ``objective`` maps an
    ``(m, n)`` array of feasible points to ``m`` values.
    """
    a = np.atleast_2d(np.asarray(a, dtype=float))
    b = np.asarray(b, dtype=float)
    sign = 1.0 if sense == "min" else -1.0
    basis = null_space(a)
    res = linprog(np.zeros(a.shape[1]), A_eq=a, b_eq=b, bounds=[(0, None)] * a.shape[1],
                  method="highs")
    x0 = res.x
    if basis.shape[1] == 0:
        x = np.clip(x0, 0.0, None)[None, :]
        return GridResult(float(objective(x)[0]), x[0], 1)
    lo_full, hi_full = _box(x0, basis)

    def evaluate(mesh):
        xs = x0 + mesh @ basis.T
        ok = np.all(xs >= -1e-13, axis=1)
        xs = np.clip(xs[ok], 0.0, None)
        return xs, mesh[ok], sign * np.asarray(objective(xs))

    mesh0 = _grid(lo_full, hi_full, points)
    xs, mesh, vals = evaluate(mesh0)
    evals = len(vals)
    spacing = float(np.max(hi_full - lo_full)) / (points - 1)
    seeds = []
    for k in np.argsort(vals, kind="stable"):
        if all(np.max(np.abs(mesh[k] - mesh[j])) > 2 * spacing for j in seeds):
            seeds.append(k)
        if len(seeds) == starts:
            break

    best = (np.inf, None)
    for k in seeds:
        best_val, best_x, best_t = vals[k], xs[k], mesh[k]
        half = (hi_full - lo_full) / (points - 1) * 2
        for _ in range(levels):
            lo = np.maximum(best_t - half, lo_full)
            hi = np.minimum(best_t + half, hi_full)
            cx, cm, cv = evaluate(_grid(lo, hi, points))
            evals += len(cv)
            if len(cv):
                j = int(np.argmin(cv))
                if cv[j] < best_val:
                    best_val, best_x, best_t = cv[j], cx[j], cm[j]
            half = half * shrink * 2
        if best_val < best[0]:
            best = (best_val, best_x)
    return GridResult(sign * float(best[0]), best[1], evals)


def oracle_s_mix(state: State, **kw) -> GridResult:
    """Grid minimum of ``H(w)`` over pure decompositions of ``state``."""
    g = state.system.generators
    return grid_optimize(g.T, state.coords, kernels.shannon_rows, "min", **kw)


def oracle_s_meas(state: State, **kw) -> GridResult:
    """Grid minimum over every measurement made of multiples of dual rays.

    The grid covers all supports, including ones larger than ``dim``.
    """
    rays = state.system.dual_rays
    vals = rays @ state.coords

    def objective(cs):
        return kernels.shannon_rows(np.clip(cs * vals, 0.0, None))

    return grid_optimize(rays.T, state.system.unit, objective, "min", **kw)


def oracle_s_acc(state: State, **kw) -> GridResult:
    """Grid maximum of the accessible information over pure ensembles.

    Every grid ensemble is scored with the full mutual-information formula
    against each fine-grained measurement.
    """
    system = state.system
    channels = [m.channel(system.generators) for m in enumerate_fine_grained(system)]

    def objective(ws):
        return np.max([kernels.mutual_information_rows(ws, ch) for ch in channels], axis=0)

    return grid_optimize(system.generators.T, state.coords, objective, "max", **kw)


def oracle_i_acc(system: GptSystem, weights, members, **kw) -> GridResult:
    """Accessible information of a fixed ensemble, scanning measurement coefficients.

    Measurements range over ``{c >= 0 : sum c_i f_i = unit}`` for all dual
    rays ``f_i``, with no restriction on the support.
    """
    rays = system.dual_rays
    base = np.asarray(members) @ rays.T  # member x ray
    w = np.asarray(weights, dtype=float)

    def objective(cs):
        out = np.empty(len(cs))
        for r, c in enumerate(cs):
            out[r] = kernels.mutual_information_rows(w[None, :], base * c)[0]
        return out

    kw.setdefault("points", 15)
    kw.setdefault("levels", 10)
    return grid_optimize(rays.T, system.unit, objective, "max", **kw)
