"""Factor tables and local densities for plot models.

Three factor families parametrize a model:

* phase factors: the initial phase distribution, per-phase abort and move
  probabilities (q', q) and per-stage florets (the conditional move
  distribution over a phase's edge set);
* task factors: per task k a table of P(theta_k = 1 | parent config) with
  one column per phase in which k is indicative plus the background (w0)
  column; phases where k is not indicative resolve to the w0 column *by
  reference*; the sharing is structural, so mutating the background column
  is observable through every non-indicative phase;
* intensity factors: per task an emission model for z_k given theta_k and
  the contemporaneous intensity parents, either categorical over a finite
  alphabet or Gaussian.

All factors are time-homogeneous by default; a base value may instead be a
per-time series, and interventions stack time-windowed overrides on top
(later overrides win cell-by-cell). Lookups are by time index t >= 1.

Parent-configuration indexing (documented contract, used by the document
format as well): for task k with within-slice parents Q(k) and
previous-slice parents Q'(k), both sorted ascending,

    config = sum(bit(theta_t, Q(k)[a]) << a)
           + sum(bit(theta_prev, Q'(k)[b]) << (len(Q(k)) + b))

i.e. within-slice parents occupy the low bits, first parent least
significant. Intensity conditioning rows are indexed by
``theta_k + 2 * mixed_radix(z-parent values)`` with the first (lowest
numbered) parent least significant.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

NEG_INF = float("-inf")


def _log(x: float) -> float:
    return math.log(x) if x > 0.0 else NEG_INF


def _at(value, t: int) -> float:
    """Resolve a scalar-or-series factor entry at time t (1-based).

    Reads past the end of a series hold its final value, so predicting
    beyond the nominal horizon continues the last regime instead of
    crashing; scalars are constant either way."""
    if isinstance(value, (list, tuple, np.ndarray)):
        return float(value[min(t, len(value)) - 1])
    return float(value)


def _is_series(value) -> bool:
    return isinstance(value, (list, tuple, np.ndarray))


def bit(theta_bits: int, task: int) -> int:
    """Task k's value inside a packed task vector (bit k-1)."""
    return (theta_bits >> (task - 1)) & 1


def config_index(
    theta_now: int,
    theta_prev: int,
    within: Sequence[int],
    cross: Sequence[int],
) -> int:
    cfg = 0
    pos = 0
    for p in within:
        cfg |= bit(theta_now, p) << pos
        pos += 1
    for p in cross:
        cfg |= bit(theta_prev, p) << pos
        pos += 1
    return cfg


@dataclass(frozen=True)
class Window:
    """Inclusive time window [t_lo, t_hi] an override applies to."""

    t_lo: int
    t_hi: int

    def covers(self, t: int) -> bool:
        return self.t_lo <= t <= self.t_hi

    def overlaps(self, other: "Window") -> bool:
        return self.t_lo <= other.t_hi and other.t_lo <= self.t_hi


class OverrideOverlapWarning(UserWarning):
    """Two overrides touch the same factor cell in overlapping windows.

    Raised so stacked interventions that silently shadow each other get
    noticed; composition layers that rely on later-wins on purpose (a
    reaction overriding the intervention it answers) suppress it locally.
    """


def _warn_overlap(existing: Window, new: Window, what: str) -> None:
    warnings.warn(
        f"override on {what} for t in [{new.t_lo},{new.t_hi}] overlaps an "
        f"earlier one on [{existing.t_lo},{existing.t_hi}]; the later "
        "intervention wins",
        OverrideOverlapWarning,
        stacklevel=4,
    )


# ---------------------------------------------------------------------------
# Phase factors
# ---------------------------------------------------------------------------


class PhaseFactors:
    """Initial distribution, abort/move probabilities and florets.

    ``abort``/``move`` map active phase -> scalar or per-time series;
    ``florets`` map stage id -> {target phase: scalar or series}. Stage
    membership and edge sets are carried alongside for lookups; they mirror
    the model's PhaseGraph.
    """

    def __init__(
        self,
        initial: Sequence[float],
        abort: Mapping[int, object],
        move: Mapping[int, object],
        florets: Mapping[str, Mapping[int, object]],
        stage_of: Sequence[str],
        edges: Sequence[Sequence[int]],
    ):
        self._initial = np.asarray(initial, dtype=float)
        self._abort = dict(abort)
        self._move = dict(move)
        self._florets = {s: dict(tbl) for s, tbl in florets.items()}
        self._stage_of = tuple(stage_of)
        self._edges = tuple(tuple(e) for e in edges)
        # (window, field, key, value); field in {"abort", "move", "floret"}
        self._overrides: list[tuple[Window, str, int, object]] = []

    # -- lookups ---------------------------------------------------------

    def initial(self) -> np.ndarray:
        return self._initial

    def _overridden(self, t: int, field: str, key: int, base: float) -> float:
        value = base
        for win, f, k, v in self._overrides:
            if f == field and k == key and win.covers(t):
                value = v
        return value

    def abort(self, t: int, i: int) -> float:
        return float(self._overridden(t, "abort", i, _at(self._abort[i], t)))

    def move(self, t: int, i: int) -> float:
        return float(self._overridden(t, "move", i, _at(self._move[i], t)))

    def floret_table(self, i: int) -> Mapping[int, object]:
        """The base floret table object for phase i (shared across its stage)."""
        return self._florets[self._stage_of[i]]

    def floret(self, t: int, i: int) -> dict[int, float]:
        table = self._florets[self._stage_of[i]]
        resolved = {j: _at(p, t) for j, p in table.items()}
        for win, f, k, v in self._overrides:
            if f == "floret" and k == i and win.covers(t):
                resolved = {j: _at(p, t) for j, p in v.items()}
        return resolved

    # -- override stacking -------------------------------------------------

    def with_overrides(
        self, entries: Sequence[tuple[Window, str, int, object]]
    ) -> "PhaseFactors":
        clone = PhaseFactors(
            self._initial,
            self._abort,
            self._move,
            self._florets,
            self._stage_of,
            self._edges,
        )
        clone._overrides = list(self._overrides)
        for win, field, key, value in entries:
            for ewin, ef, ek, _ in clone._overrides:
                if ef == field and ek == key and ewin.overlaps(win):
                    _warn_overlap(ewin, win, f"phase {field}[{key}]")
                    break
            clone._overrides.append((win, field, key, value))
        return clone

    # -- bookkeeping -------------------------------------------------------

    def has_time_variation(self) -> bool:
        if self._overrides:
            return True
        if any(_is_series(v) for v in self._abort.values()):
            return True
        if any(_is_series(v) for v in self._move.values()):
            return True
        return any(
            _is_series(p) for tbl in self._florets.values() for p in tbl.values()
        )

    def checkable_times(self, horizon: int) -> range:
        return range(1, horizon + 1) if self.has_time_variation() else range(1, 2)

    def signature(self, t: int) -> tuple:
        """Hashable token identifying the effective phase factors at time t
        (equal signatures guarantee equal transition kernels)."""
        if not self.has_time_variation():
            return ("static",)
        m = len(self._stage_of) - 1
        return tuple(
            (self.abort(t, i), self.move(t, i), tuple(sorted(self.floret(t, i).items())))
            for i in range(1, m + 1)
        )


def phase_transition(model, t: int, i: int, j: int) -> float:
    """One-step phase transition probability at time t.

    The inactive phase is absorbing. From an active phase the agent aborts
    with the abort probability, otherwise stays put or moves along an edge
    according to the move probability and the phase's floret.
    """
    if i == 0:
        return 1.0 if j == 0 else 0.0
    pf = model.phase_factors
    q_abort = pf.abort(t, i)
    if j == 0:
        return q_abort
    q_move = pf.move(t, i)
    if j == i:
        return (1.0 - q_abort) * (1.0 - q_move)
    floret = pf.floret(t, i)
    if j in floret:
        return (1.0 - q_abort) * q_move * floret[j]
    return 0.0


def transition_matrix(model, t: int) -> np.ndarray:
    """Dense (m+1) x (m+1) phase kernel; row = source, column = target."""
    m = model.phase_graph.m
    out = np.zeros((m + 1, m + 1))
    out[0, 0] = 1.0
    for i in range(1, m + 1):
        out[i, 0] = model.phase_factors.abort(t, i)
        q_move = model.phase_factors.move(t, i)
        out[i, i] = (1.0 - out[i, 0]) * (1.0 - q_move)
        for j, p in model.phase_factors.floret(t, i).items():
            out[i, j] += (1.0 - out[i, 0]) * q_move * p
    return out


# ---------------------------------------------------------------------------
# Task factors
# ---------------------------------------------------------------------------


class TaskFactors:
    """Per-task engagement tables, one column per relevant phase.

    ``columns[k]`` maps phase index -> array of P(theta_k=1 | config); only
    the background column 0 and indicative phases are stored, every other
    phase resolves to the background column by reference.
    """

    def __init__(
        self,
        within: Sequence[Sequence[int]],
        cross: Sequence[Sequence[int]],
        columns: Sequence[Mapping[int, np.ndarray]],
    ):
        self._within = tuple(tuple(w) for w in within)
        self._cross = tuple(tuple(c) for c in cross)
        self._columns: tuple[dict[int, np.ndarray], ...] = tuple(
            dict(col) for col in columns
        )
        # (window, task, phase, replacement column)
        self._overrides: list[tuple[Window, int, int, np.ndarray]] = []

    @property
    def n(self) -> int:
        return len(self._columns) - 1

    def parents(self, k: int) -> tuple[tuple[int, ...], tuple[int, ...]]:
        return self._within[k], self._cross[k]

    def rows(self, k: int) -> int:
        return 1 << (len(self._within[k]) + len(self._cross[k]))

    def base_table(self, k: int, phase: int) -> np.ndarray:
        col = self._columns[k]
        return col[phase] if phase in col else col[0]

    def table(self, t: int, k: int, phase: int) -> np.ndarray:
        value = self.base_table(k, phase)
        for win, task, ph, repl in self._overrides:
            if task == k and ph == phase and win.covers(t):
                value = repl
        return value

    def prob(self, t: int, k: int, phase: int, cfg: int) -> float:
        return float(self.table(t, k, phase)[cfg])

    def with_overrides(
        self, entries: Sequence[tuple[Window, int, int, np.ndarray]]
    ) -> "TaskFactors":
        clone = TaskFactors(self._within, self._cross, self._columns)
        clone._overrides = list(self._overrides)
        for win, task, phase, repl in entries:
            arr = np.asarray(repl, dtype=float)
            if arr.shape != (self.rows(task),):
                raise ValueError(
                    f"replacement for task {task} must have {self.rows(task)} rows,"
                    f" got {arr.shape}"
                )
            for ewin, et, ep, _ in clone._overrides:
                if et == task and ep == phase and ewin.overlaps(win):
                    _warn_overlap(ewin, win, f"task table {task} phase {phase}")
                    break
            clone._overrides.append((win, task, phase, arr))
        return clone

    def has_time_variation(self) -> bool:
        return bool(self._overrides)

    def checkable_times(self, horizon: int) -> range:
        return range(1, horizon + 1) if self.has_time_variation() else range(1, 2)

    def signature(self, t: int) -> tuple:
        """Hashable token for the effective tables at time t: base columns
        are time-constant, so the set of active overrides determines them."""
        if not self._overrides:
            return ("static",)
        return tuple(
            (task, phase, id(repl))
            for win, task, phase, repl in self._overrides
            if win.covers(t)
        )


def task_slice_density(model, t: int, theta_now: int, theta_prev: int, phase: int) -> float:
    """P(theta_t = theta_now | theta_{t-1} = theta_prev, phase) as a product
    of per-task conditionals; tasks not indicative for the phase use the
    background column. Pass theta_prev = 0 for the first slice (the engine's
    previous-slice convention before the window opens)."""
    tf = model.task_factors
    density = 1.0
    for k in model.task_graph.tasks:
        within, cross = tf.parents(k)
        cfg = config_index(theta_now, theta_prev, within, cross)
        p_on = tf.prob(t, k, phase, cfg)
        density *= p_on if bit(theta_now, k) else 1.0 - p_on
    return density


def task_slice_log_density(model, t, theta_now, theta_prev, phase) -> float:
    return _log(task_slice_density(model, t, theta_now, theta_prev, phase))


# ---------------------------------------------------------------------------
# Intensity factors
# ---------------------------------------------------------------------------

CATEGORICAL = "categorical"
GAUSSIAN = "gaussian"


class IntensityFactors:
    """Per-task emission model for the intensity channel z_k.

    Categorical tasks carry ``rows[k]`` as an array of simplices over the
    task's alphabet; Gaussian tasks carry an array of (mean, sd) pairs.
    Row index = theta_k + 2 * mixed-radix index of the z-parent values
    (parents must be categorical; first parent least significant).
    """

    def __init__(
        self,
        kinds: Sequence[str],
        alphabets: Sequence[int],
        z_parents: Sequence[Sequence[int]],
        rows: Sequence[np.ndarray],
    ):
        self._kinds = tuple(kinds)
        self._alphabets = tuple(int(a) for a in alphabets)
        self._z_parents = tuple(tuple(p) for p in z_parents)
        self._rows: tuple[np.ndarray, ...] = tuple(
            np.asarray(r, dtype=float) for r in rows
        )
        self._overrides: list[tuple[Window, int, np.ndarray]] = []

    @property
    def n(self) -> int:
        return len(self._kinds) - 1

    def kind(self, k: int) -> str:
        return self._kinds[k]

    def alphabet(self, k: int) -> int:
        return self._alphabets[k]

    def z_parents(self, k: int) -> tuple[int, ...]:
        return self._z_parents[k]

    def row_count(self, k: int) -> int:
        count = 2
        for p in self._z_parents[k]:
            count *= self._alphabets[p]
        return count

    def base_rows(self, k: int) -> np.ndarray:
        return self._rows[k]

    def rows_at(self, t: int, k: int) -> np.ndarray:
        value = self._rows[k]
        for win, task, repl in self._overrides:
            if task == k and win.covers(t):
                value = repl
        return value

    def row_index(self, k: int, theta_k: int, z_values: Sequence[float]) -> int:
        idx = 0
        stride = 1
        for p in self._z_parents[k]:
            idx += int(z_values[p - 1]) * stride
            stride *= self._alphabets[p]
        return theta_k + 2 * idx

    def density(self, t: int, k: int, z_k: float, theta_k: int, z_values) -> float:
        """Density (mass for categorical) of z_k given theta_k and the full
        contemporaneous z vector (only the task's parents are read)."""
        row = self.row_index(k, theta_k, z_values)
        table = self.rows_at(t, k)
        if self._kinds[k] == CATEGORICAL:
            symbol = int(z_k)
            if not 0 <= symbol < self._alphabets[k]:
                return 0.0
            return float(table[row, symbol])
        mean, sd = table[row]
        u = (float(z_k) - mean) / sd
        return math.exp(-0.5 * u * u) / (sd * math.sqrt(2.0 * math.pi))

    def with_overrides(
        self, entries: Sequence[tuple[Window, int, np.ndarray]]
    ) -> "IntensityFactors":
        clone = IntensityFactors(
            self._kinds, self._alphabets, self._z_parents, self._rows
        )
        clone._overrides = list(self._overrides)
        for win, task, repl in entries:
            arr = np.asarray(repl, dtype=float)
            if arr.shape != self._rows[task].shape:
                raise ValueError(
                    f"replacement rows for task {task} must have shape "
                    f"{self._rows[task].shape}, got {arr.shape}"
                )
            for ewin, et, _ in clone._overrides:
                if et == task and ewin.overlaps(win):
                    _warn_overlap(ewin, win, f"intensity table {task}")
                    break
            clone._overrides.append((win, task, arr))
        return clone

    def has_time_variation(self) -> bool:
        return bool(self._overrides)

    def checkable_times(self, horizon: int) -> range:
        return range(1, horizon + 1) if self.has_time_variation() else range(1, 2)

    def signature(self, t: int) -> tuple:
        if not self._overrides:
            return ("static",)
        return tuple(
            (task, id(repl))
            for win, task, repl in self._overrides
            if win.covers(t)
        )

    def check_rows(self, t: int, k: int) -> list[str]:
        """Shape/normalization findings for task k's table at time t."""
        out: list[str] = []
        table = self.rows_at(t, k)
        expected = self.row_count(k)
        if self._kinds[k] == CATEGORICAL:
            if table.shape != (expected, self._alphabets[k]):
                out.append(
                    f"expected shape ({expected}, {self._alphabets[k]}), got {table.shape}"
                )
                return out
            for r in range(expected):
                row = table[r]
                if row.min() < 0.0:
                    out.append(f"row {r} has a negative probability")
                elif abs(float(row.sum()) - 1.0) > 1e-9:
                    out.append(f"row {r} sums to {float(row.sum())!r}, expected 1")
        else:
            if table.shape != (expected, 2):
                out.append(f"expected shape ({expected}, 2), got {table.shape}")
                return out
            for r in range(expected):
                if table[r, 1] <= 0.0:
                    out.append(f"row {r} has non-positive standard deviation")
        return out


def intensity_slice_density(model, t: int, z_values, theta_bits: int) -> float:
    """Joint emission density of the full intensity vector given the tasks."""
    itf = model.intensity_factors
    density = 1.0
    for k in model.task_graph.tasks:
        density *= itf.density(t, k, z_values[k - 1], bit(theta_bits, k), z_values)
    return density


def intensity_slice_log_density(model, t, z_values, theta_bits) -> float:
    return _log(intensity_slice_density(model, t, z_values, theta_bits))


# ---------------------------------------------------------------------------
# Whole-trajectory density and structural predicates
# ---------------------------------------------------------------------------


def trajectory_log_density(model, phases, thetas, zs) -> float:
    """Log density of a complete trajectory (phases/thetas/zs for t=1..T).

    The first slice uses the initial phase distribution and the all-zeros
    previous task vector; zero-probability events yield -inf, never raise.
    """
    if not (len(phases) == len(thetas) == len(zs)):
        raise ValueError("phases, thetas and zs must have equal length")
    total = _log(float(model.phase_factors.initial()[phases[0]]))
    prev_theta = 0
    prev_phase: int | None = None
    for t, (w, theta, z) in enumerate(zip(phases, thetas, zs), start=1):
        if t > 1:
            total += _log(phase_transition(model, t, prev_phase, w))
        total += task_slice_log_density(model, t, theta, prev_theta, w)
        total += intensity_slice_log_density(model, t, z, theta)
        prev_theta, prev_phase = theta, w
        if total == NEG_INF:
            return NEG_INF
    return total


def is_naive(model) -> bool:
    """True iff every task's background column ignores its parents."""
    tf = model.task_factors
    for k in model.task_graph.tasks:
        col = tf.base_table(k, 0)
        if len(col) and (col.max() - col.min()) > 0.0:
            return False
    return True


def is_regular(model) -> bool:
    """True iff each phase's indicative tasks form a connected within-slice
    parent subgraph (singletons count as connected)."""
    tg = model.task_graph
    for phase in model.phase_graph.active_phases:
        tasks = set(model.task_map.tasks_of(phase))
        if len(tasks) <= 1:
            continue
        adjacency = {k: set() for k in tasks}
        for k in tasks:
            for p in tg.within[k]:
                if p in tasks:
                    adjacency[k].add(p)
                    adjacency[p].add(k)
        start = next(iter(tasks))
        seen = {start}
        frontier = [start]
        while frontier:
            node = frontier.pop()
            for nb in adjacency[node]:
                if nb not in seen:
                    seen.add(nb)
                    frontier.append(nb)
        if seen != tasks:
            return False
    return True
