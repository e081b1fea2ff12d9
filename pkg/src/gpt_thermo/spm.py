"""Semipermeable-membrane (SPM) cycles on an ideal gas with a GPT internal degree.

Work is reported per particle in units of ``1/beta`` (i.e. ``beta W / N``).
A step partitions the containers into groups; each group is measured by a
repeatable process, its particles are redistributed by outcome-dependent
column-stochastic feedback, the outcome is forgotten, and finally optional
relabeling and per-container reversible maps are applied. The work of a step
is

    H(Z'K after feedback) - H(ZK after measurement)
        + sum_z' p_z' log V_z' - sum_z p_z log V_z

where both entropy terms are ``-sum m log m`` over the particle masses of all
cells, so per-group contributions add up.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .core import (
    TOL,
    DirectSumState,
    GptSystem,
    PositiveMap,
    State,
    SubState,
    is_reversible,
    make_classical,
    make_polygon,
)
from .entropy import entropy_terms, s_acc, s_extended, s_meas
from .errors import (
    ConservationError,
    InvalidArgument,
    InvalidLedger,
    NotACycle,
    NotMixable,
    PreconditionError,
)
from .measurement import (
    MeasurementProcess,
    branch_fixed,
    induced_measurement,
    is_fine_grained,
    is_repeatable,
    is_strongly_repeatable,
    pointer_process,
    trivial_process,
    vertex_pair_process,
)

MATCH_TOL = 1e-9


# --------------------------------------------------------------------------
# configurations


@dataclass(frozen=True)
class Container:
    label: str
    volume: float
    fraction: float
    internal: State

    def __post_init__(self):
        if not self.volume > 0:
            raise InvalidArgument(f"container {self.label!r} needs a positive volume")
        if self.fraction < -TOL:
            raise InvalidArgument(f"container {self.label!r} has a negative fraction")


@dataclass(frozen=True)
class GasConfiguration:
    system: GptSystem
    containers: tuple

    def __post_init__(self):
        cs = tuple(self.containers)
        object.__setattr__(self, "containers", cs)
        labels = [c.label for c in cs]
        if len(set(labels)) != len(labels):
            raise InvalidArgument("container labels must be unique")
        total = sum(c.fraction for c in cs)
        if abs(total - 1) > 1e-9:
            raise ConservationError(f"fractions sum to {total}, not 1")
        for c in cs:
            if c.internal.system is not self.system:
                raise InvalidArgument(f"container {c.label!r} lives on another system")

    def __getitem__(self, label: str) -> Container:
        for c in self.containers:
            if c.label == label:
                return c
        raise KeyError(label)

    @property
    def labels(self) -> list[str]:
        return [c.label for c in self.containers]


# --------------------------------------------------------------------------
# steps


@dataclass(frozen=True)
class Group:
    """One group ``y`` of a step.

    ``feedback[k]`` is a column-stochastic matrix of shape
    ``(len(outputs), len(members))``: entry ``[j, i]`` is the share of
    member ``i``'s particles with outcome ``k`` sent to output ``j``.
    """

    members: tuple
    process: MeasurementProcess
    feedback: np.ndarray
    outputs: tuple
    volumes_out: tuple

    def __post_init__(self):
        object.__setattr__(self, "members", tuple(self.members))
        object.__setattr__(self, "outputs", tuple(self.outputs))
        object.__setattr__(self, "volumes_out", tuple(float(v) for v in self.volumes_out))
        f = np.asarray(self.feedback, dtype=float)
        shape = (self.process.n_outcomes, len(self.outputs), len(self.members))
        if f.shape != shape:
            raise InvalidArgument(f"feedback shape {f.shape}, expected {shape}")
        if np.any(f < -TOL) or not np.allclose(f.sum(axis=1), 1.0, atol=1e-9):
            raise InvalidArgument("feedback matrices must be column-stochastic")
        object.__setattr__(self, "feedback", f)
        if len(self.volumes_out) != len(self.outputs):
            raise InvalidArgument("one output volume per output container is required")
        if any(v <= 0 for v in self.volumes_out):
            raise InvalidArgument("output volumes must be positive")
        if not is_repeatable(self.process):
            raise InvalidArgument("SPM groups need a repeatable measurement process")


@dataclass(frozen=True)
class CycleStep:
    """Groups plus the relabeling and per-label reversible maps that follow them.

    Containers not named in any group pass through unchanged.
    """

    groups: tuple
    relabel: dict = field(default_factory=dict)
    reversible: dict = field(default_factory=dict)
    phase: str = ""

    def __post_init__(self):
        object.__setattr__(self, "groups", tuple(self.groups))
        members = [m for g in self.groups for m in g.members]
        if len(set(members)) != len(members):
            raise InvalidArgument("a container appears in two groups")
        outs = [o for g in self.groups for o in g.outputs]
        if len(set(outs)) != len(outs):
            raise InvalidArgument("output labels must be unique within a step")
        for lab, u in self.reversible.items():
            if not is_reversible(u):
                raise InvalidArgument(f"map for {lab!r} is not reversible")
        targets = list(self.relabel.values())
        if len(set(targets)) != len(targets):
            raise InvalidArgument("relabeling must be injective")


# --------------------------------------------------------------------------
# traces and ledger


@dataclass
class GroupTrace:
    """Stage states of one group.

    ``stage0``: ``(label, fraction, state)`` per member;
    ``stage1``: ``(label, fraction, M state)`` per member;
    ``stage2``: ``(label, fraction, KA state)`` per output, normalised;
    ``parts``: per output, the ``(mass, state)`` pieces it was assembled from.
    """

    process: MeasurementProcess
    stage0: list
    stage1: list
    stage2: list
    parts: dict


@dataclass
class StepTrace:
    index: int
    phase: str
    w_ext: float
    groups: list
    entropy_term: float
    volume_term: float


@dataclass
class WorkLedger:
    system: GptSystem
    steps: list
    configurations: list
    residual: float = 0.0
    is_cycle: bool = True

    @property
    def per_step(self) -> np.ndarray:
        return np.array([s.w_ext for s in self.steps])

    @property
    def total(self) -> float:
        return float(np.sum(self.per_step))

    @property
    def cumulative(self) -> np.ndarray:
        return np.cumsum(self.per_step)


# --------------------------------------------------------------------------
# one group, one step


def _run_group(containers: list, group: Group, system: GptSystem):
    """Apply a group to its member containers.

    Returns the output containers, the cell masses after measurement and
    after feedback, the member and output volume terms, and the trace.
    """
    proc = group.process
    n_out = len(group.outputs)
    stage0, stage1 = [], []
    masses1 = []
    cells = np.zeros((n_out, proc.n_outcomes, system.dim))
    parts = {o: [] for o in group.outputs}
    for i, c in enumerate(containers):
        branches = proc.apply(c.internal)
        stage0.append((c.label, c.fraction, c.internal))
        stage1.append((c.label, c.fraction, branches))
        for k, b in enumerate(branches.branches):
            m = c.fraction * b.weight()
            masses1.append(m)
            if m <= 0:
                continue
            for j in range(n_out):
                share = group.feedback[k, j, i]
                if share > 0:
                    cells[j, k] += share * c.fraction * np.asarray(b.coords)
                    parts[group.outputs[j]].append((share * m, b.normalized()))

    unit = system.unit
    masses2 = cells @ unit  # (n_out, K)
    outputs, stage2 = [], []
    for j, lab in enumerate(group.outputs):
        total = float(masses2[j].sum())
        if total <= 1e-15:
            continue
        branches = tuple(SubState(system, _clean(cells[j, k] / total))
                         for k in range(proc.n_outcomes))
        ka = DirectSumState(branches, proc.labels)
        internal = State(system, _clean(cells[j].sum(axis=0) / total))
        outputs.append(Container(lab, group.volumes_out[j], total, internal))
        stage2.append((lab, total, ka))

    before = sum(c.fraction for c in containers)
    after = float(masses2.sum())
    if abs(before - after) > 1e-9:
        raise ConservationError(f"group moved {before} particles but delivered {after}")
    vol_in = sum(c.fraction * np.log(c.volume) for c in containers if c.fraction > 0)
    vol_out = sum(c.fraction * np.log(c.volume) for c in outputs)
    trace = GroupTrace(proc, stage0, stage1, stage2,
                       {k: v for k, v in parts.items() if v})
    return outputs, np.array(masses1), masses2.ravel(), vol_in, vol_out, trace


def _clean(v: np.ndarray) -> np.ndarray:
    return np.where(np.abs(v) < 1e-15, 0.0, v)


def step_work(config: GasConfiguration, step: CycleStep):
    """Apply one step; returns ``(new_config, w_ext, trace)``."""
    system = config.system
    by_label = {c.label: c for c in config.containers}
    used = set()
    new, traces = [], []
    h1 = h2 = v0 = v2 = 0.0
    for g in step.groups:
        missing = [m for m in g.members if m not in by_label]
        if missing:
            raise InvalidArgument(f"unknown containers {missing}")
        if g.process.system is not system:
            raise InvalidArgument("group process acts on another system")
        members = [by_label[m] for m in g.members]
        used.update(g.members)
        outs, m1, m2, vin, vout, tr = _run_group(members, g, system)
        h1 += entropy_terms(m1)
        h2 += entropy_terms(m2)
        v0 += vin
        v2 += vout
        new.extend(outs)
        traces.append(tr)
    new.extend(c for c in config.containers if c.label not in used)

    final = []
    for c in new:
        lab = step.relabel.get(c.label, c.label)
        state = c.internal
        u = step.reversible.get(lab)
        if u is not None:
            state = State(system, u.matrix @ state.coords)
        final.append(Container(lab, c.volume, c.fraction, state))
    w = (h2 - h1) + (v2 - v0)
    trace = StepTrace(-1, step.phase, float(w), traces, h2 - h1, v2 - v0)
    return GasConfiguration(system, tuple(final)), float(w), trace


# --------------------------------------------------------------------------
# separation and mixing


def separation(container: Container, proc: MeasurementProcess, labels=None):
    """Split a container by outcome with volumes proportional to the shares.

    Returns ``(containers, w_ext)`` with ``w_ext = fraction * sum l log l``;
    zero-probability outcomes are dropped.
    """
    if not is_repeatable(proc):
        raise InvalidArgument("separation needs a repeatable process")
    k = proc.n_outcomes
    labels = list(labels) if labels is not None else [f"{container.label}.{x}" for x in range(k)]
    probs = np.array([container.internal.system.unit @ (m @ container.internal.coords)
                      for m in proc.maps])
    vols = [max(p, 1e-300) * container.volume for p in probs]
    feedback = np.eye(k)[:, :, None]
    group = Group((container.label,), proc, feedback, labels, vols)
    outs, m1, m2, vin, vout, _ = _run_group([container], group, proc.system)
    return outs, float(entropy_terms(m2) - entropy_terms(m1) + vout - vin)


def mixing(containers, proc: MeasurementProcess, label: str = "mix"):
    """Merge containers whose states are fixed by matching branches of ``proc``.

    Container ``k`` must satisfy ``M_k rho_k = rho_k``. The merged container
    has the summed volume. Returns ``(container, w_ext)``.
    """
    containers = list(containers)
    if len(containers) == 1:
        return containers[0], 0.0
    if len(containers) != proc.n_outcomes:
        raise NotMixable("mixing needs one container per outcome")
    for k, c in enumerate(containers):
        if not branch_fixed(proc, k, c.internal, 1e-9):
            raise NotMixable(f"branch {k} does not fix the state of {c.label!r}")
    feedback = np.ones((proc.n_outcomes, 1, len(containers)))
    group = Group(tuple(c.label for c in containers), proc, feedback, (label,),
                  (sum(c.volume for c in containers),))
    outs, m1, m2, vin, vout, _ = _run_group(containers, group, proc.system)
    return outs[0], float(entropy_terms(m2) - entropy_terms(m1) + vout - vin)


# --------------------------------------------------------------------------
# cycles


def _config_distance(a: Container, b: Container) -> float:
    return max(abs(a.fraction - b.fraction), abs(a.volume - b.volume),
               float(np.max(np.abs(a.internal.coords - b.internal.coords))))


def cyclicity_residual(final: GasConfiguration, initial: GasConfiguration) -> float:
    """Largest mismatch after greedily pairing containers; ``inf`` if counts differ."""
    if len(final.containers) != len(initial.containers):
        return float("inf")
    free = list(final.containers)
    worst = 0.0
    for c in initial.containers:
        d = [_config_distance(c, f) for f in free]
        j = int(np.argmin(d))
        worst = max(worst, d[j])
        free.pop(j)
    return worst


def run_cycle(initial: GasConfiguration, steps, strict: bool = True,
              tol: float = MATCH_TOL) -> WorkLedger:
    """Run every step and check that the configuration returns to the start.

    With ``strict`` a residual above ``tol`` raises :class:`NotACycle`
    carrying the ledger; otherwise the ledger is returned with
    ``is_cycle = False``.
    """
    config = initial
    ledger = WorkLedger(initial.system, [], [initial])
    for i, step in enumerate(steps):
        config, _, trace = step_work(config, step)
        trace.index = i
        ledger.steps.append(trace)
        ledger.configurations.append(config)
    ledger.residual = cyclicity_residual(config, initial)
    ledger.is_cycle = ledger.residual <= tol
    if strict and not ledger.is_cycle:
        raise NotACycle(f"final configuration differs from the initial one "
                        f"(residual {ledger.residual:.3g})", ledger)
    return ledger


# --------------------------------------------------------------------------
# built-in cycles


def _container(system, label, volume, fraction, terms):
    return Container(label, volume, fraction, system.mixture(terms))


def _single(proc_or_system, member, outputs, volumes, shares=None):
    """Group with a single member; trivial process unless one is given."""
    proc = proc_or_system if isinstance(proc_or_system, MeasurementProcess) \
        else trivial_process(proc_or_system)
    if shares is None:
        feedback = np.eye(proc.n_outcomes)[:, :, None] if proc.n_outcomes > 1 \
            else np.ones((1, len(outputs), 1)) / len(outputs)
    else:
        feedback = np.asarray(shares, dtype=float).reshape(1, len(outputs), 1)
    return Group((member,), proc, feedback, tuple(outputs), tuple(volumes))


def _merge(proc_or_system, members, output, volume):
    proc = proc_or_system if isinstance(proc_or_system, MeasurementProcess) \
        else trivial_process(proc_or_system)
    return Group(tuple(members), proc, np.ones((proc.n_outcomes, 1, len(members))),
                 (output,), (volume,))


def _square_cycle():
    sq = make_polygon(4)
    q = 0.25
    init = GasConfiguration(sq, tuple(
        _container(sq, f"c{n}", q, q, [(0.75, n), (0.25, n + 2)]) for n in range(4)))
    steps = []
    # (i) separate each container into rho_n and rho_{n+2}
    steps.append(CycleStep(tuple(
        _single(vertex_pair_process(sq, n, n + 2), f"c{n}", (f"s{n}a", f"s{n}b"),
                (3 / 16, 1 / 16)) for n in range(4)), phase="separation"))
    # (ii) pool the pure-rho_m gases and split them in halves
    steps.append(CycleStep(tuple(
        Group((f"s{m}a", f"s{(m + 2) % 4}b"), trivial_process(sq),
              np.full((1, 2, 2), 0.5), (f"p{m}+", f"p{m}-"), (1 / 8, 1 / 8))
        for m in range(4)), phase="regroup"))
    # (iii) mix rho_n with rho_{n+1} through the SPM pair that distinguishes them
    steps.append(CycleStep(tuple(
        _merge(vertex_pair_process(sq, n, n + 1), (f"p{n}+", f"p{(n + 1) % 4}-"),
               f"m{n}", q) for n in range(4)), phase="mixing"))
    # (iv) halve each mixture
    steps.append(CycleStep(tuple(
        _single(sq, f"m{n}", (f"h{n}a", f"h{n}b"), (1 / 8, 1 / 8)) for n in range(4)),
        phase="regroup"))
    # (v) merge neighbouring halves without measuring
    steps.append(CycleStep(tuple(
        _merge(sq, (f"h{n}a", f"h{(n - 1) % 4}b"), f"c{n}", q) for n in range(4)),
        phase="unmeasured mixing"))
    return init, steps


def _hexagon_cycle():
    hx = make_polygon(6)
    s = 1 / 6
    init = GasConfiguration(hx, tuple(
        _container(hx, f"c{n}", s, s, [(0.5, n - 1), (0.5, n + 1)]) for n in range(6)))
    steps = [
        CycleStep(tuple(
            _single(vertex_pair_process(hx, n, n + 3), f"c{n}", (f"s{n}a", f"s{n}b"),
                    (1 / 8, 1 / 24)) for n in range(6)), phase="separation"),
        CycleStep(tuple(
            Group((f"s{m}a", f"s{(m + 3) % 6}b"), trivial_process(hx),
                  np.full((1, 2, 2), 0.5), (f"p{m}+", f"p{m}-"), (1 / 12, 1 / 12))
            for m in range(6)), phase="regroup"),
        CycleStep(tuple(
            _merge(vertex_pair_process(hx, n - 1, n + 1),
                   (f"p{(n - 1) % 6}+", f"p{(n + 1) % 6}-"), f"c{n}", s)
            for n in range(6)), phase="mixing"),
    ]
    return init, steps


def _von_neumann_cycle(n: int, weights):
    system = make_classical(n)
    p = np.asarray(weights, dtype=float)
    if p.shape != (n,) or np.any(p <= 0) or abs(p.sum() - 1) > 1e-9:
        raise InvalidArgument("von Neumann cycle needs n strictly positive weights summing to 1")
    init = GasConfiguration(system, (Container("c", 1.0, 1.0, system.state(p)),))
    labels = tuple(f"x{k}" for k in range(n))
    steps = [
        CycleStep((_single(pointer_process(n), "c", labels, (1.0,) * n),),
                  phase="constant-volume separation"),
        CycleStep(tuple(_single(system, lab, (lab,), (float(p[k]),))
                        for k, lab in enumerate(labels)), phase="compression"),
        CycleStep((_merge(pointer_process(n), labels, "c", 1.0),), phase="mixing"),
    ]
    return init, steps


def builtin_cycle(name: str, n: int | None = None, weights=None):
    """``(initial configuration, steps)`` for ``square``, ``hexagon`` or ``von_neumann``."""
    if name == "square":
        return _square_cycle()
    if name == "hexagon":
        return _hexagon_cycle()
    if name in ("von_neumann", "von-neumann"):
        n = 2 if n is None else int(n)
        weights = np.full(n, 1 / n) if weights is None else weights
        return _von_neumann_cycle(n, weights)
    raise InvalidArgument(f"unknown built-in cycle {name!r}")


def random_classical_cycle(rng=None, n: int | None = None, forward_steps: int | None = None):
    """Random closed SPM cycle on a classical system using pointer/trivial processes.

    Random forward steps are followed by a fixed closing path: separate every
    container by internal value, pool equal values, then rebuild the initial
    containers by splitting the pools and pointer-mixing.
    """
    rng = np.random.default_rng(rng)
    n = int(rng.integers(2, 5)) if n is None else n
    system = make_classical(n)
    m = int(rng.integers(1, 4))
    fr = rng.dirichlet(np.ones(m))
    init = GasConfiguration(system, tuple(
        Container(f"c{j}", float(rng.uniform(0.2, 2.0)), float(fr[j]),
                  system.state(rng.dirichlet(np.ones(n)))) for j in range(m)))
    counter = itertools.count()
    steps = []
    config = init
    cumulative = np.arange(n)  # current internal value of each original value
    for _ in range(int(rng.integers(1, 4)) if forward_steps is None else forward_steps):
        labels = list(config.labels)
        rng.shuffle(labels)
        cuts = sorted(rng.choice(range(1, len(labels)), size=min(len(labels) - 1,
                                                                  int(rng.integers(0, 3))),
                                 replace=False)) if len(labels) > 1 else []
        groups = []
        for members in np.split(np.array(labels, dtype=object), cuts):
            proc = pointer_process(n) if rng.uniform() < 0.5 else trivial_process(system)
            n_out = int(rng.integers(1, 4))
            fb = rng.dirichlet(np.ones(n_out), size=(proc.n_outcomes, len(members)))
            fb = np.transpose(fb, (0, 2, 1))
            if rng.uniform() < 0.3:  # deterministic routing
                fb = np.zeros_like(fb)
                for k in range(proc.n_outcomes):
                    for i in range(len(members)):
                        fb[k, int(rng.integers(n_out)), i] = 1.0
            outs = tuple(f"r{next(counter)}" for _ in range(n_out))
            groups.append(Group(tuple(members), proc, fb, outs,
                                tuple(rng.uniform(0.1, 2.0, n_out))))
        maps = {}
        if rng.uniform() < 0.3:  # the same relabeling of internal values everywhere
            perm = rng.permutation(n)
            u = PositiveMap(system, system, np.eye(n)[:, perm], True)
            touched = {m for g in groups for m in g.members}
            finals = [o for g in groups for o in g.outputs]
            finals += [lab for lab in config.labels if lab not in touched]
            maps = {lab: u for lab in finals}
            cumulative = perm[cumulative]
        step = CycleStep(tuple(groups), reversible=maps, phase="random")
        steps.append(step)
        config, _, _ = step_work(config, step)
    steps.extend(_closing_steps(config, init, np.argsort(cumulative)))
    return init, steps


def _closing_steps(config: GasConfiguration, target: GasConfiguration, original) -> list:
    """Steps returning ``config`` to ``target``.

    ``original[a]`` is the value in ``target`` that current value ``a`` came from.
    """
    system = config.system
    n = system.dim
    pointer = pointer_process(n)
    sep = CycleStep(tuple(
        _single(pointer, c.label, tuple(f"{c.label}|{a}" for a in range(n)),
                tuple(max(c.fraction * c.internal.coords[a], 1e-3) for a in range(n)))
        for c in config.containers), phase="close: separate")
    after_sep, _, _ = step_work(config, sep)
    pools, undo = [], {}
    for a in range(n):
        members = [c.label for c in after_sep.containers if c.label.endswith(f"|{a}")]
        if members:
            mass = sum(after_sep[m].fraction for m in members)
            b = int(original[a])
            pools.append(_merge(system, members, f"q{b}", mass))
            if b != a:
                u = np.eye(n)
                u[:, [a, b]] = u[:, [b, a]]
                undo[f"q{b}"] = PositiveMap(system, system, u, True)
    pool = CycleStep(tuple(pools), reversible=undo, phase="close: pool")
    after_pool, _, _ = step_work(after_sep, pool)
    splits, mixes = [], []
    for c in after_pool.containers:
        a = int(c.label[1:])
        share = np.array([t.fraction * t.internal.coords[a] for t in target.containers])
        keep = share > 0
        outs = tuple(f"{t.label}<{a}" for t, k in zip(target.containers, keep) if k)
        splits.append(_single(system, c.label, outs, tuple(share[keep]),
                              shares=share[keep] / share[keep].sum()))
    for t in target.containers:
        members = [f"{t.label}<{a}" for a in range(n) if t.internal.coords[a] > 0]
        mixes.append(Group(tuple(members), pointer, np.ones((n, 1, len(members))),
                           (t.label,), (t.volume,)))
    return [sep, pool, CycleStep(tuple(splits), phase="close: split"),
            CycleStep(tuple(mixes), phase="close: mix")]


# --------------------------------------------------------------------------
# bounds and conditions


def _require_traces(ledger: WorkLedger):
    if not isinstance(ledger, WorkLedger) or not ledger.steps:
        raise InvalidLedger("ledger has no step traces")
    for s in ledger.steps:
        if s.groups is None:
            raise InvalidLedger(f"step {s.index} is missing its trace")


def _partial(ka: DirectSumState) -> State:
    return ka.partial_trace()


def lemma1_bound(ledger: WorkLedger, entropy: Callable, per_step: bool = False):
    """Upper bound on the total work for a concave, reversibly invariant entropy.

    Sums, over steps and groups, the stage-2 average of ``S~(KA) - S(A)``
    plus the stage-0 average of ``S`` minus the stage-1 average of ``S~``.
    With ``per_step`` the contribution of each step is returned as an array.
    """
    _require_traces(ledger)
    parts = []
    for step in ledger.steps:
        total = 0.0
        for g in step.groups:
            for _, p, ka in g.stage2:
                total += p * (s_extended(entropy, ka) - entropy(_partial(ka)))
            for _, p, rho in g.stage0:
                if p > 0:
                    total += p * entropy(rho)
            for _, p, ka in g.stage1:
                if p > 0:
                    total -= p * s_extended(entropy, ka)
        parts.append(total)
    parts = np.asarray(parts, dtype=float)
    return parts if per_step else float(parts.sum())


@dataclass
class ConditionInstance:
    step: int
    group: int
    container: str
    inequality: str  # "first", "second" or "concavity"
    lhs: float
    rhs: float

    @property
    def slack(self) -> float:
        return self.rhs - self.lhs


@dataclass
class ConditionReport:
    instances: list

    def failures(self, tol: float = 1e-9) -> list:
        return [c for c in self.instances if c.slack < -tol]

    def passed(self, tol: float = 1e-9) -> bool:
        return not self.failures(tol)


def check_thm2(ledger: WorkLedger, entropy: Callable, concavity: bool = True) -> ConditionReport:
    """Evaluate both per-container conditions that certify a non-positive total.

    ``first``: ``S(rho) <= S~(M rho)`` for every stage-0 member;
    ``second``: ``S~(M sigma) <= S(tr_K M sigma)`` for every stage-2 output
    ``sigma``. With ``concavity`` each stage-2 output assembled from several
    pieces is also checked for ``S(mixture) >= average S(pieces)``, since the
    certificate assumes a concave entropy.
    """
    _require_traces(ledger)
    out = []
    for step in ledger.steps:
        for y, g in enumerate(step.groups):
            proc = g.process
            for lab, p, rho in g.stage0:
                if p > 0:
                    out.append(ConditionInstance(step.index, y, lab, "first", entropy(rho),
                                                 s_extended(entropy, proc.apply(rho))))
            for lab, p, ka in g.stage2:
                sigma = _partial(ka)
                remeasured = proc.apply(sigma)
                out.append(ConditionInstance(step.index, y, lab, "second",
                                             s_extended(entropy, remeasured),
                                             entropy(remeasured.partial_trace())))
            if not concavity:
                continue
            for lab, pieces in g.parts.items():
                if len(pieces) < 2:
                    continue
                mass = sum(m for m, _ in pieces)
                mix = State(pieces[0][1].system,
                            sum(m * np.asarray(s.coords) for m, s in pieces) / mass)
                avg = sum(m * entropy(s) for m, s in pieces) / mass
                out.append(ConditionInstance(step.index, y, lab, "concavity", avg,
                                             entropy(mix)))
    return ConditionReport(out)


@dataclass
class Cor1Instance:
    state: State
    entropy_before: float
    extended_after: float
    entropy_forgotten: float

    @property
    def left_slack(self) -> float:
        return self.extended_after - self.entropy_before

    @property
    def right_slack(self) -> float:
        return self.entropy_forgotten - self.extended_after


def check_cor1(proc: MeasurementProcess, entropy: Callable, states) -> list:
    """Slacks of ``S(rho) <= S~(M rho) <= S(tr_K M rho)`` per state."""
    out = []
    for rho in states:
        ka = proc.apply(rho)
        out.append(Cor1Instance(rho, entropy(rho), s_extended(entropy, ka),
                                entropy(ka.partial_trace())))
    return out


def discrepancy_bound(ledger: WorkLedger, per_step: bool = False):
    """Work bound from the gap between accessible-information and measurement entropies.

    Requires every non-trivial process to be strongly repeatable with a
    fine-grained induced measurement. Single-outcome identity processes
    contribute exactly zero and are accepted as they are.
    """
    _require_traces(ledger)
    cache: dict = {}

    def gap(state: State) -> float:
        key = state.coords.tobytes()
        if key not in cache:
            cache[key] = s_acc(state) - s_meas(state)
        return cache[key]

    parts = []
    for step in ledger.steps:
        total = 0.0
        for y, g in enumerate(step.groups):
            if g.process.is_trivial():
                continue
            if not (is_strongly_repeatable(g.process)
                    and is_fine_grained(induced_measurement(g.process))):
                raise PreconditionError(
                    f"step {step.index}, group {y}: process is not a strongly repeatable "
                    f"fine-grained measurement process")
            for _, p, ka in g.stage2:
                inner = sum(w * gap(s) for w, s in ka.nonzero())
                total += p * (gap(_partial(ka)) - inner)
        parts.append(total)
    parts = np.asarray(parts, dtype=float)
    return parts if per_step else float(parts.sum())
