"""Core model structure for phase-structured plot models.

A plot model couples three graphs over a shared timeline:

* a phase graph over ``m`` active preparatory phases plus the implicit
  inactive phase (index 0, absorbing; it owns no transition-diagram vertex
  but is an explicit index everywhere in this API);
* a two-slice task network over ``n`` binary tasks, with within-slice
  parents ``within[k]`` (indices < k), previous-slice parents ``cross[k]``,
  and within-slice intensity parents ``intensity_within[k]`` (indices < k);
* a bipartite map assigning each active phase the set of tasks it makes
  likely (its indicative tasks).

Everything downstream (simulation, filtering, interventions, scoring)
manipulates these structures plus the factor tables in
:mod:`plotsmith.factors`.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field, replace
from typing import Iterator

from .errors import ModelValidationError, StateSpaceCapError

DEFAULT_STATE_CAP = 1 << 20
STATE_CAP_ENV = "PLOTSMITH_STATE_CAP"

TOL_NORMALIZATION = 1e-9


# ---------------------------------------------------------------------------
# Graphs
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PhaseGraph:
    """Directed phase-transition structure over active phases 1..m.

    ``labels[0]`` names the inactive phase; ``edges[i]`` lists the phases
    reachable from active phase ``i`` in one step (never 0 and never ``i``
    itself; aborting and staying are handled by the transition law, not by
    edges). ``stage_of[i]`` names the stage of phase ``i``; stage-mates must
    have identical edge sets and share one floret table.
    """

    labels: tuple[str, ...]
    edges: tuple[tuple[int, ...], ...]
    stage_of: tuple[str, ...]

    @property
    def m(self) -> int:
        return len(self.labels) - 1

    @property
    def active_phases(self) -> range:
        return range(1, self.m + 1)

    def stages(self) -> dict[str, tuple[int, ...]]:
        """Stage id -> member phases, in first-appearance order."""
        out: dict[str, list[int]] = {}
        for i in self.active_phases:
            out.setdefault(self.stage_of[i], []).append(i)
        return {s: tuple(v) for s, v in out.items()}


@dataclass(frozen=True)
class TaskGraph:
    """Two-slice network structure over binary tasks 1..n.

    All parent tuples are sorted. ``within[k]`` and ``intensity_within[k]``
    may only reference indices below ``k`` (the slice factorizes in task
    order); ``cross[k]`` may reference any task in the previous slice.
    Index 0 of each tuple-of-tuples is an unused placeholder so that task
    ``k`` lives at index ``k``.
    """

    labels: tuple[str, ...]
    within: tuple[tuple[int, ...], ...]
    cross: tuple[tuple[int, ...], ...]
    intensity_within: tuple[tuple[int, ...], ...]

    @property
    def n(self) -> int:
        return len(self.labels)

    @property
    def tasks(self) -> range:
        return range(1, self.n + 1)


@dataclass(frozen=True)
class BipartiteMap:
    """Indicative-task sets per active phase: ``task_sets[i]`` = I(phase i)."""

    task_sets: tuple[tuple[int, ...], ...]

    def tasks_of(self, phase: int) -> tuple[int, ...]:
        return self.task_sets[phase]

    def is_indicative(self, task: int, phase: int) -> bool:
        return phase != 0 and task in self.task_sets[phase]

    def indicative_phases(self, task: int) -> tuple[int, ...]:
        return tuple(
            i for i in range(1, len(self.task_sets)) if task in self.task_sets[i]
        )


@dataclass(frozen=True)
class SuccessSpec:
    """Predicate marking plot completion: the agent sits in one of
    ``phases`` with every task in ``required_tasks`` at its required value.
    This is model data, not a hard-coded rule."""

    phases: tuple[int, ...]
    required_tasks: tuple[tuple[int, int], ...]

    def holds(self, phase: int, theta_bits: int) -> bool:
        if phase not in self.phases:
            return False
        for task, value in self.required_tasks:
            if (theta_bits >> (task - 1)) & 1 != value:
                return False
        return True


# ---------------------------------------------------------------------------
# Joint state space
# ---------------------------------------------------------------------------


def state_cap() -> int:
    raw = os.environ.get(STATE_CAP_ENV)
    if raw is None:
        return DEFAULT_STATE_CAP
    try:
        value = int(raw)
    except ValueError as exc:
        raise ValueError(f"{STATE_CAP_ENV} must be an integer, got {raw!r}") from exc
    if value <= 0:
        raise ValueError(f"{STATE_CAP_ENV} must be positive, got {value}")
    return value


@dataclass(frozen=True)
class StateSpace:
    """Dense enumeration of joint (phase, task-vector) states.

    The index contract is phase-major with little-endian task bits:
    ``index = phase * 2**n + sum(theta_k << (k-1))``. Task bit ``k-1``
    of the low word is task ``k``.
    """

    m: int
    n: int

    @property
    def size(self) -> int:
        return (self.m + 1) << self.n

    @property
    def theta_count(self) -> int:
        return 1 << self.n

    def index_of(self, phase: int, theta_bits: int) -> int:
        return (phase << self.n) | theta_bits

    def phase_of(self, index: int) -> int:
        return index >> self.n

    def theta_of(self, index: int) -> int:
        return index & ((1 << self.n) - 1)

    def __iter__(self) -> Iterator[tuple[int, int]]:
        for phase in range(self.m + 1):
            for bits in range(1 << self.n):
                yield phase, bits


def joint_state_space(m: int, n: int, cap: int | None = None) -> StateSpace:
    """Build the dense joint state space, enforcing the size cap.

    The cap defaults to 2**20 states and can be overridden with the
    PLOTSMITH_STATE_CAP environment variable (or the ``cap`` argument).
    """
    if cap is None:
        cap = state_cap()
    size = (m + 1) << n
    if size > cap:
        raise StateSpaceCapError(size, cap)
    return StateSpace(m=m, n=n)


# ---------------------------------------------------------------------------
# The model proper
# ---------------------------------------------------------------------------


@dataclass
class PlotModel:
    """A complete plot model: graphs, factor tables, horizon and catalogues.

    ``interventions``/``reactions``/``profiles`` hold the document's decision
    catalogue (see :mod:`plotsmith.causal` and :mod:`plotsmith.ara`).
    ``disable_events`` is normally empty; direct interventions attach
    ``(time, probability)`` arrest events here when applied.
    ``layer_of`` is populated only on doubled models (awareness analysis):
    it maps every phase index of this model to the phase index of the base
    model it mirrors.
    """

    title: str
    phase_graph: PhaseGraph
    task_graph: TaskGraph
    task_map: BipartiteMap
    phase_factors: "PhaseFactors"
    task_factors: "TaskFactors"
    intensity_factors: "IntensityFactors"
    horizon: int
    success: SuccessSpec
    time_labels: tuple[str, ...] | None = None
    interventions: tuple = ()
    reactions: tuple = ()
    profiles: dict = field(default_factory=dict)
    disable_events: tuple[tuple[int, float], ...] = ()
    layer_of: tuple[int, ...] | None = None

    @property
    def m(self) -> int:
        return self.phase_graph.m

    @property
    def n(self) -> int:
        return self.task_graph.n

    def state_space(self, cap: int | None = None) -> StateSpace:
        return joint_state_space(self.m, self.n, cap=cap)

    def intervention(self, ident: str):
        for d in self.interventions:
            if d.id == ident:
                return d
        raise KeyError(f"unknown intervention {ident!r}")

    def reaction(self, ident: str):
        for r in self.reactions:
            if r.id == ident:
                return r
        raise KeyError(f"unknown reaction {ident!r}")

    def profile(self, ident: str):
        try:
            return self.profiles[ident]
        except KeyError:
            raise KeyError(f"unknown adversary profile {ident!r}") from None

    def copy_shallow(self) -> "PlotModel":
        """Copy sharing the graphs (interventions replace factors, never
        structure, so graph objects are deliberately reused)."""
        return replace(self)


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Finding:
    level: str  # "error" | "warning"
    path: str
    message: str

    def __str__(self) -> str:
        return f"{self.level}: {self.path}: {self.message}"


def _check_phase_graph(model: PlotModel, out: list[Finding]) -> None:
    g = model.phase_graph
    err = lambda path, msg: out.append(Finding("error", path, msg))
    for i in g.active_phases:
        for j in g.edges[i]:
            if not 1 <= j <= g.m:
                err(f"phases.edges.{i}", f"edge target {j} out of range 1..{g.m}")
            if j == i:
                err(f"phases.edges.{i}", "self edge is not allowed")
        if len(set(g.edges[i])) != len(g.edges[i]):
            err(f"phases.edges.{i}", "duplicate edge target")
    stages = g.stages()
    for sid, members in stages.items():
        sets = {g.edges[i] for i in members}
        if len(sets) > 1:
            err(
                f"phases.stages.{sid}",
                "stage-mates must have identical edge sets, got "
                + ", ".join(str(g.edges[i]) for i in members),
            )


def _check_phase_factors(model: PlotModel, out: list[Finding]) -> None:
    g = model.phase_graph
    pf = model.phase_factors
    err = lambda path, msg: out.append(Finding("error", path, msg))

    initial = pf.initial()
    if len(initial) != g.m + 1:
        err("phases.initial", f"expected {g.m + 1} entries, got {len(initial)}")
        return
    if min(initial) < 0:
        err("phases.initial", "negative probability")
    if abs(sum(initial) - 1.0) > TOL_NORMALIZATION:
        err("phases.initial", f"must sum to 1, got {sum(initial)!r}")

    # Florets must be shared by reference across a stage; q must vanish on
    # phases with no outgoing edges (the law has nowhere to send a move).
    for sid, members in g.stages().items():
        tables = {id(pf.floret_table(i)) for i in members}
        if len(tables) > 1:
            err(
                f"phases.stages.{sid}",
                "stage-mates must share one floret table object",
            )
    times = pf.checkable_times(model.horizon)
    for i in g.active_phases:
        for t in times:
            q = pf.move(t, i)
            qp = pf.abort(t, i)
            if not 0.0 <= q <= 1.0:
                err(f"phases.move_prob.{i}", f"value {q!r} at t={t} outside [0,1]")
            if not 0.0 <= qp <= 1.0:
                err(f"phases.abort_prob.{i}", f"value {qp!r} at t={t} outside [0,1]")
            if not g.edges[i] and q > 0.0:
                err(
                    f"phases.move_prob.{i}",
                    f"phase has no outgoing edges but move probability {q!r} at t={t}",
                )
        for t in times:
            floret = pf.floret(t, i)
            if set(floret) != set(g.edges[i]):
                err(
                    f"phases.florets.{g.stage_of[i]}",
                    f"floret support {sorted(floret)} != edge set {list(g.edges[i])}",
                )
                break
            if floret:
                total = sum(floret.values())
                if min(floret.values()) < 0:
                    err(f"phases.florets.{g.stage_of[i]}", "negative floret probability")
                if abs(total - 1.0) > TOL_NORMALIZATION:
                    err(
                        f"phases.florets.{g.stage_of[i]}",
                        f"floret must sum to 1 at t={t}, got {total!r}",
                    )


def _check_task_factors(model: PlotModel, out: list[Finding]) -> None:
    tg = model.task_graph
    tf = model.task_factors
    err = lambda path, msg: out.append(Finding("error", path, msg))
    times = tf.checkable_times(model.horizon)
    for k in tg.tasks:
        rows = 1 << (len(tg.within[k]) + len(tg.cross[k]))
        base = tf.base_table(k, 0)
        if len(base) != rows:
            err(f"tasks.tables.{k}.w0", f"expected {rows} rows, got {len(base)}")
        for phase in model.task_map.indicative_phases(k):
            tab = tf.base_table(k, phase)
            if len(tab) != rows:
                err(
                    f"tasks.tables.{k}.{phase}",
                    f"expected {rows} rows, got {len(tab)}",
                )
        # non-indicative phases must resolve to the background table by
        # identity (the sharing is structural, not a copied equal array)
        for phase in model.phase_graph.active_phases:
            if not model.task_map.is_indicative(k, phase):
                if tf.base_table(k, phase) is not base:
                    err(
                        f"tasks.tables.{k}.{phase}",
                        "non-indicative phase must alias the w0 table by reference",
                    )
        for phase in (0, *model.task_map.indicative_phases(k)):
            for t in times:
                col = tf.table(t, k, phase)
                bad = [p for p in col if not 0.0 <= p <= 1.0]
                if bad:
                    err(
                        f"tasks.tables.{k}.{'w0' if phase == 0 else phase}",
                        f"probability {bad[0]!r} outside [0,1] at t={t}",
                    )
                    break


def _check_intensity_factors(model: PlotModel, out: list[Finding]) -> None:
    tg = model.task_graph
    itf = model.intensity_factors
    err = lambda path, msg: out.append(Finding("error", path, msg))
    times = itf.checkable_times(model.horizon)
    for k in tg.tasks:
        for t in times:
            findings = itf.check_rows(t, k)
            for msg in findings:
                err(f"intensities.tables.{k}", f"{msg} at t={t}")


def _check_reachability(model: PlotModel, out: list[Finding]) -> None:
    g = model.phase_graph
    initial = model.phase_factors.initial()
    frontier = [i for i in g.active_phases if initial[i] > 0.0]
    seen = set(frontier)
    while frontier:
        i = frontier.pop()
        for j in g.edges[i]:
            if j not in seen:
                seen.add(j)
                frontier.append(j)
    for i in g.active_phases:
        if i not in seen:
            out.append(
                Finding(
                    "warning",
                    f"phases.labels[{i}]",
                    f"phase {g.labels[i]!r} is unreachable from the initial distribution",
                )
            )


def validate(model: PlotModel) -> list[Finding]:
    """Semantic validation of a structurally well-formed model.

    Returns findings sorted errors-first; an empty list means the model is
    ready for inference. Structural problems (wrong shapes, unknown keys)
    are the parser's job and raise ModelFormatError there instead.
    """
    out: list[Finding] = []
    _check_phase_graph(model, out)
    _check_phase_factors(model, out)
    _check_task_factors(model, out)
    _check_intensity_factors(model, out)

    err = lambda path, msg: out.append(Finding("error", path, msg))
    # bipartite map and success predicate reference checks
    for i in model.phase_graph.active_phases:
        tasks = model.task_map.tasks_of(i)
        for k in tasks:
            if not 1 <= k <= model.n:
                err(f"tasks.task_sets.{i}", f"task {k} out of range 1..{model.n}")
        if not tasks:
            out.append(
                Finding(
                    "warning",
                    f"tasks.task_sets.{i}",
                    "phase has an empty indicative-task set",
                )
            )
    for p in model.success.phases:
        if not 1 <= p <= model.m:
            err("success.phases", f"phase {p} out of range 1..{model.m}")
    for task, value in model.success.required_tasks:
        if not 1 <= task <= model.n:
            err("success.required_tasks", f"task {task} out of range 1..{model.n}")
        if value not in (0, 1):
            err("success.required_tasks", f"required value {value!r} is not a bit")
    if model.horizon < 1:
        err("horizon", f"must be at least 1, got {model.horizon}")
    if model.time_labels is not None and len(model.time_labels) != model.horizon:
        err(
            "time_labels",
            f"expected {model.horizon} labels, got {len(model.time_labels)}",
        )
    try:
        joint_state_space(model.m, model.n)
    except StateSpaceCapError as exc:
        err("tasks", str(exc))

    unused = [
        k for k in model.task_graph.tasks if not model.task_map.indicative_phases(k)
    ]
    for k in unused:
        out.append(
            Finding(
                "warning",
                f"tasks.labels[{k - 1}]",
                f"task {model.task_graph.labels[k - 1]!r} is indicative for no phase",
            )
        )
    _check_reachability(model, out)
    out.sort(key=lambda f: (f.level != "error", f.path))
    return out


def ensure_valid(model: PlotModel) -> PlotModel:
    """Raise ModelValidationError if validate() reports any errors."""
    errors = [f for f in validate(model) if f.level == "error"]
    if errors:
        raise ModelValidationError(errors)
    return model
