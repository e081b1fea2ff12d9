"""JSON definitions for systems, processes, cycles and scenarios; state expressions."""

from __future__ import annotations

import json
import re
from pathlib import Path

import numpy as np

from .core import GptSystem, PositiveMap, State, make_classical, make_custom, make_polygon
from .errors import InvalidArgument
from .measurement import Measurement, MeasurementProcess, measure_and_prepare
from .spm import Container, CycleStep, GasConfiguration, Group
from .thermo import Scenario

SCHEMA = 1


class ParseError(InvalidArgument):
    """Malformed state expression; ``position`` is the 0-based offending column."""

    def __init__(self, message: str, text: str, position: int):
        super().__init__(f"{message} at position {position}: {text!r}")
        self.text = text
        self.position = position


# --------------------------------------------------------------------------
# systems


def system_from_name(name: str) -> GptSystem:
    """``square``, ``hexagon``, ``polygon:N``, ``classical:N`` or a JSON file path."""
    named = {"square": 4, "hexagon": 6, "gbit": 4}
    if name in named:
        return make_polygon(named[name])
    m = re.fullmatch(r"(classical|polygon):(\d+)", name)
    if m:
        n = int(m.group(2))
        return make_classical(n) if m.group(1) == "classical" else make_polygon(n)
    path = Path(name)
    if path.suffix == ".json" and path.exists():
        return system_from_json(json.loads(path.read_text()))
    raise InvalidArgument(f"unknown system {name!r}")


def system_to_json(system: GptSystem) -> dict:
    if system.kind == "classical" and not system.blocks:
        return {"kind": "classical", "n": system.n}
    if system.kind == "polygon":
        return {"kind": "polygon", "n": system.n}
    return {"kind": "custom", "generators": system.generators.tolist(),
            "unit": system.unit.tolist()}


def system_from_json(d: dict) -> GptSystem:
    kind = d.get("kind")
    if kind == "classical":
        return make_classical(int(d["n"]))
    if kind == "polygon":
        return make_polygon(int(d["n"]))
    if kind == "custom":
        return make_custom(d["generators"], d["unit"], d.get("name", "custom"))
    raise InvalidArgument(f"unknown system kind {kind!r}")


# --------------------------------------------------------------------------
# state expressions

_TERM = re.compile(r"\s*([+-])?\s*(?:(\d+(?:\.\d*)?(?:[eE][+-]?\d+)?(?:/\d+)?)\s*\*?\s*)?v(\d+)\s*")
_NUMBER = re.compile(r"\s*([+-]?\d*\.?\d+(?:[eE][+-]?\d+)?(?:/\d+)?)\s*")


def _number(tok: str) -> float:
    if "/" in tok:
        num, den = tok.split("/")
        return float(num) / float(den)
    return float(tok)


def parse_state(system: GptSystem, text: str) -> State:
    """Parse ``"0.75*v0+0.25*v2"`` (vertex mixture) or ``"0.5,0.5"`` (vertex weights).

    Raises :class:`ParseError` with the position of the first bad character.
    """
    if "v" not in text:
        weights, pos = [], 0
        for part in text.split(","):
            m = _NUMBER.fullmatch(part)
            if not m:
                bad = pos + len(part) - len(part.lstrip())
                raise ParseError("expected a number", text, bad)
            weights.append(_number(m.group(1)))
            pos += len(part) + 1
        if len(weights) != system.n_vertices:
            raise ParseError(f"expected {system.n_vertices} weights, got {len(weights)}",
                             text, len(text))
        return _checked_state(system, np.array(weights), text)
    pos, weights = 0, np.zeros(system.n_vertices)
    first = True
    while pos < len(text):
        m = _TERM.match(text, pos)
        if not m or m.end() == pos or (not first and m.group(1) is None):
            raise ParseError("expected a term like 0.25*v2", text, pos)
        sign = -1.0 if m.group(1) == "-" else 1.0
        coef = _number(m.group(2)) if m.group(2) else 1.0
        k = int(m.group(3))
        if k >= system.n_vertices:
            raise ParseError(f"vertex index {k} out of range", text, m.start(3))
        weights[k] += sign * coef
        pos, first = m.end(), False
    return _checked_state(system, weights, text)


def _checked_state(system, weights, text) -> State:
    if np.any(weights < -1e-12) or abs(weights.sum() - 1) > 1e-9:
        raise ParseError("weights must be nonnegative and sum to 1", text, 0)
    return system.state(weights)


# --------------------------------------------------------------------------
# processes


def process_to_json(proc: MeasurementProcess) -> dict:
    return {"kind": "custom", "matrices": proc.maps.tolist(),
            "labels": [str(l) for l in proc.labels]}


def process_from_json(d: dict, system: GptSystem) -> MeasurementProcess:
    kind = d.get("kind")
    if kind == "measure_prepare":
        states = [State(system, s) for s in d["states"]]
        return measure_and_prepare(states, Measurement(system, np.array(d["effects"])))
    if kind == "custom":
        return MeasurementProcess(system, np.array(d["matrices"], dtype=float),
                                  tuple(d.get("labels", ())))
    raise InvalidArgument(f"unknown process kind {kind!r}")


# --------------------------------------------------------------------------
# cycles


def cycle_to_json(initial: GasConfiguration, steps) -> dict:
    system = initial.system
    return {
        "schema": SCHEMA,
        "system": system_to_json(system),
        "initial": [{"label": c.label, "volume": c.volume, "fraction": c.fraction,
                     "state": c.internal.coords.tolist()} for c in initial.containers],
        "steps": [{
            "phase": st.phase,
            "groups": [{"members": list(g.members), "process": process_to_json(g.process),
                        "feedback": g.feedback.tolist(), "outputs": list(g.outputs),
                        "volumes_out": list(g.volumes_out)} for g in st.groups],
            "relabel": [[a, b] for a, b in st.relabel.items()],
            "reversible": [{"label": lab, "matrix": u.matrix.tolist()}
                           for lab, u in st.reversible.items()],
        } for st in steps],
    }


def cycle_from_json(d: dict):
    """Inverse of :func:`cycle_to_json`; returns ``(initial, steps)``."""
    try:
        system = system_from_json(d["system"])
        initial = GasConfiguration(system, tuple(
            Container(c["label"], float(c["volume"]), float(c["fraction"]),
                      State(system, c["state"])) for c in d["initial"]))
        steps = []
        for st in d["steps"]:
            groups = tuple(Group(tuple(g["members"]), process_from_json(g["process"], system),
                                 np.array(g["feedback"], dtype=float), tuple(g["outputs"]),
                                 tuple(g["volumes_out"])) for g in st["groups"])
            relabel = {a: b for a, b in st.get("relabel", [])}
            rev = {r["label"]: PositiveMap(system, system, np.array(r["matrix"]), True)
                   for r in st.get("reversible", [])}
            steps.append(CycleStep(groups, relabel, rev, st.get("phase", "")))
    except KeyError as exc:
        raise InvalidArgument(f"cycle definition is missing field {exc}") from None
    return initial, steps


# --------------------------------------------------------------------------
# scenarios


def scenario_to_json(s: Scenario, entropy: str = "default") -> dict:
    return {
        "schema": SCHEMA,
        "system": system_to_json(s.system_a),
        "rho_a": s.rho_a.tolist(),
        "rho_m": s.rho_m.tolist(),
        "energies": {k: v.tolist() for k, v in s.energies.items()},
        "beta": s.beta,
        "measurement": s.measurement.tolist(),
        "feedback": s.feedback.tolist(),
        "erasure": s.erasure.tolist(),
        "entropy": entropy,
        "name": s.name,
    }


def scenario_from_json(d: dict) -> Scenario:
    from .entropy import get_entropy

    try:
        system = system_from_json(d["system"])
        name = d.get("entropy", "default")
        entropy = None if name in (None, "default") else get_entropy(name)
        return Scenario(system, d["rho_a"], d["rho_m"], d["energies"], float(d["beta"]),
                        np.array(d["measurement"]), np.array(d["feedback"]),
                        np.array(d["erasure"]), entropy, d.get("name", "scenario"))
    except KeyError as exc:
        raise InvalidArgument(f"scenario definition is missing field {exc}") from None


def load_json(path) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InvalidArgument(f"cannot read {path}: {exc}") from None
