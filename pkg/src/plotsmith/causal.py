"""Causal surgery on plot models: interventions and the task do-operator.

An intervention edits conditional tables inside a time window; it never
touches graph structure. Four working kinds plus the explicit no-op:

* ``null``:       continue unchanged; the baseline every report includes.
* ``clarifying``: swap observation tables (better sensors, an informant).
* ``blocking``:   force tasks on/off at a phase (with renormalization of
                   the phase's alternatives) and/or patch phase dynamics.
* ``direct``:     an arrest/kill attempt, an event (t0, delta) removing
                   that fraction of active-phase mass at t0, plus optional
                   phase-dynamic edits.
* ``disabling``:  deportation-style removal, a one-shot boost of the abort
                   probability at t0, q' := rho + (1 - rho) * q'.

This module implements the unintelligent treatment, where the adversary
does not get to see the intervention coming. The adversarial treatment
(awareness, reactions) composes on top of it in :mod:`plotsmith.ara`.

Forcing a task at a phase redistributes probability over the alternatives
that remain in the phase's task set: each remaining table is scaled by the
reciprocal of the remaining tasks' total, computed per parent
configuration. Rows are aligned across heterogeneous parent sets by
copying the values of shared parent variables and zeroing parents the
row's own task does not condition on. The scaled value provably stays
within [0, 1] (the task's own probability appears in the total), but a
breach is reported as an error rather than clamped silently.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

import numpy as np

from .errors import BlockScalingError, InterventionError
from .factors import Window
from .model import PlotModel


@dataclass(frozen=True)
class FactorPatch:
    """Table edits an intervention or reaction applies inside its window.

    phase_overrides: (field, phase, value) with field in {"abort", "move",
        "floret"}; floret values are {target: prob} mappings stored as
        item tuples.
    block: (phase, task, value) forcings; the task's table at that phase
        becomes degenerate at value and the phase's remaining tasks are
        renormalized (see do_block_tasks).
    emission_tables: (task, rows) replacing an observation table outright;
        rows are nested tuples matching the table shape.
    """

    phase_overrides: tuple[tuple[str, int, object], ...] = ()
    block: tuple[tuple[int, int, int], ...] = ()
    emission_tables: tuple[tuple[int, tuple], ...] = ()

    def is_empty(self) -> bool:
        return not (self.phase_overrides or self.block or self.emission_tables)


@dataclass(frozen=True)
class Intervention:
    id: str
    kind: str
    description: str = ""
    t0: int = 1
    t1: int | None = None
    betrayal_prob: float = 0.0
    patch: FactorPatch = field(default_factory=FactorPatch)
    disable_prob: float | None = None
    removal_prob: float | None = None

    KINDS = ("null", "clarifying", "blocking", "direct", "disabling")

    def __post_init__(self):
        where = f"interventions.{self.id}"
        if self.kind not in self.KINDS:
            raise InterventionError(f"unknown intervention kind {self.kind!r}", path=where)
        if self.kind == "null" and not self.patch.is_empty():
            raise InterventionError("null intervention carries no payload", path=where)
        if self.kind == "direct" and self.disable_prob is None:
            raise InterventionError("direct intervention needs disable_prob", path=where)
        if self.kind == "disabling" and self.removal_prob is None:
            raise InterventionError("disabling intervention needs removal_prob", path=where)
        if self.t1 is not None and self.t1 < self.t0:
            raise InterventionError(f"window end {self.t1} precedes start {self.t0}", path=where)
        for name, p in (
            ("betrayal_prob", self.betrayal_prob),
            ("disable_prob", self.disable_prob),
            ("removal_prob", self.removal_prob),
        ):
            if p is not None and not 0.0 <= p <= 1.0:
                raise InterventionError(f"{name} must be a probability, got {p!r}", path=where)

    def window(self, horizon: int) -> Window:
        return Window(self.t0, self.t1 if self.t1 is not None else horizon)

    def retimed(self, t0: int, horizon: int) -> "Intervention":
        """Shift the enactment time, preserving window length. One-shot
        windows stay one-shot; open windows stay open to the horizon."""
        if self.kind == "null" or t0 == self.t0:
            return self
        t1 = None if self.t1 is None else min(t0 + (self.t1 - self.t0), horizon)
        return dataclasses.replace(self, t0=t0, t1=t1)


NULL_INTERVENTION = Intervention(id="none", kind="null", description="continue unchanged")


def _decode_row(task: int, row: int, within, cross) -> dict:
    """Row index -> {('now'|'prev', task): bit} for one task's parents."""
    w = within[task]
    x = cross[task]
    out = {}
    for a, parent in enumerate(w):
        out[("now", parent)] = (row >> a) & 1
    for b, parent in enumerate(x):
        out[("prev", parent)] = (row >> (len(w) + b)) & 1
    return out


def _encode_row(task: int, assignment: dict, within, cross) -> int:
    """Parent assignment -> row index for another task; parents the source
    row does not mention default to 0."""
    w = within[task]
    x = cross[task]
    row = 0
    for a, parent in enumerate(w):
        row |= assignment.get(("now", parent), 0) << a
    for b, parent in enumerate(x):
        row |= assignment.get(("prev", parent), 0) << (len(w) + b)
    return row


def _block_entries(model: PlotModel, phase: int, forced) -> list[tuple[int, int, np.ndarray]]:
    """Override entries (task, phase, values) realizing do(theta = value)
    at one phase, with the phase's remaining tasks renormalized."""
    tg = model.task_graph
    tf = model.task_factors
    if not 1 <= phase <= model.m:
        raise InterventionError(f"cannot force tasks at unknown phase {phase}")
    task_set = set(model.task_map.tasks_of(phase))
    forced = {int(k): int(v) for k, v in forced}
    for k, v in forced.items():
        if k not in task_set:
            raise InterventionError(
                f"task {k} is not indicative for phase {phase}; cannot force it there"
            )
        if v not in (0, 1):
            raise InterventionError(f"forced value for task {k} must be 0 or 1, got {v}")

    remaining = sorted(task_set - set(forced))
    if not remaining:
        raise BlockScalingError(
            f"forcing tasks {sorted(forced)} leaves phase {phase} with no alternative tasks"
        )

    entries: list[tuple[int, int, np.ndarray]] = [
        (k, phase, np.full(tf.rows(k), float(v))) for k, v in sorted(forced.items())
    ]
    base = {k: np.asarray(tf.base_table(k, phase), dtype=float) for k in remaining}
    for k in remaining:
        table = base[k]
        scaled = np.zeros_like(table)
        for row in range(table.size):
            if table[row] == 0.0:
                continue
            assignment = _decode_row(k, row, tg.within, tg.cross)
            total = 0.0
            for other in remaining:
                total += base[other][_encode_row(other, assignment, tg.within, tg.cross)]
            value = table[row] / total
            if value > 1.0 + 1e-12:
                raise BlockScalingError(
                    f"renormalization exceeds 1 for task {k} at phase {phase} row {row}"
                    f" ({value!r})"
                )
            scaled[row] = min(value, 1.0)
        entries.append((k, phase, scaled))
    return entries


def do_block_tasks(
    model: PlotModel,
    phase: int,
    forced,
    t0: int = 1,
    t1: int | None = None,
) -> PlotModel:
    """Force tasks at one phase to fixed values from t0 (through t1,
    default the horizon) and renormalize the phase's remaining tasks.

    ``forced`` is an iterable of (task, value) pairs with value 0 or 1;
    every forced task must belong to the phase's task set. Graphs are
    untouched."""
    window = Window(t0, t1 if t1 is not None else model.horizon)
    entries = [
        (window, k, ph, values) for k, ph, values in _block_entries(model, phase, forced)
    ]
    return dataclasses.replace(
        model, task_factors=model.task_factors.with_overrides(entries)
    )


def apply_patch(model: PlotModel, patch: FactorPatch, window: Window, where: str = "") -> PlotModel:
    """Apply one payload's table edits inside a window. Shared by
    interventions and adversary reactions (same payload vocabulary)."""
    patched = model

    phase_entries = []
    for fld, phase, value in patch.phase_overrides:
        if fld not in ("abort", "move", "floret"):
            raise InterventionError(f"unknown phase factor field {fld!r}", path=where)
        if not 1 <= phase <= model.m:
            raise InterventionError(
                f"phase override references unknown phase {phase}", path=where
            )
        if fld == "floret":
            value = dict(value)
        phase_entries.append((window, fld, phase, value))
    if phase_entries:
        patched = dataclasses.replace(
            patched, phase_factors=patched.phase_factors.with_overrides(phase_entries)
        )

    if patch.block:
        by_phase: dict[int, list[tuple[int, int]]] = {}
        for phase, task, value in patch.block:
            by_phase.setdefault(phase, []).append((task, value))
        task_entries = []
        for phase, forced in sorted(by_phase.items()):
            task_entries.extend(
                (window, k, ph, values)
                for k, ph, values in _block_entries(model, phase, forced)
            )
        patched = dataclasses.replace(
            patched, task_factors=patched.task_factors.with_overrides(task_entries)
        )

    if patch.emission_tables:
        for task, _rows in patch.emission_tables:
            if not 1 <= task <= model.n:
                raise InterventionError(
                    f"emission override references unknown task {task}", path=where
                )
        emission_entries = [(window, task, rows) for task, rows in patch.emission_tables]
        patched = dataclasses.replace(
            patched,
            intensity_factors=patched.intensity_factors.with_overrides(emission_entries),
        )
    return patched


def apply_unintelligent(model: PlotModel, intervention: Intervention) -> PlotModel:
    """Patch a model with an intervention's edits, ignoring any adversary
    response. The null intervention returns the model itself."""
    d = intervention
    if d.kind == "null":
        return model
    patched = model

    if d.kind == "disabling":
        rho = float(d.removal_prob)
        entries = []
        for phase in range(1, model.m + 1):
            base = model.phase_factors.abort(d.t0, phase)
            entries.append((Window(d.t0, d.t0), "abort", phase, rho + (1.0 - rho) * base))
        patched = dataclasses.replace(
            patched, phase_factors=patched.phase_factors.with_overrides(entries)
        )

    patched = apply_patch(
        patched, d.patch, d.window(model.horizon), where=f"interventions.{d.id}"
    )

    if d.kind == "direct":
        patched = dataclasses.replace(
            patched,
            disable_events=patched.disable_events + ((d.t0, float(d.disable_prob)),),
        )
    return patched


def graph_invariance_check(model: PlotModel, intervention_or_model) -> bool:
    """True iff the intervened model keeps all three graph components
    (phase graph, task network, phase-task map) structurally equal to the
    input's. Accepts an Intervention (applied here) or an already-patched
    model."""
    if isinstance(intervention_or_model, Intervention):
        patched = apply_unintelligent(model, intervention_or_model)
    else:
        patched = intervention_or_model
    return (
        patched.phase_graph == model.phase_graph
        and patched.task_graph == model.task_graph
        and patched.task_map == model.task_map
    )
