"""The plot-model document format and the CSV formats around it.

A model ships as one JSON document, format tag ``plot-model/1``, with
sections: meta, phases, tasks, factors, success_spec, interventions,
reactions, adversary_profiles. Integer-keyed maps (phases, tasks) use
string keys as JSON requires; phase 0 is the inactive phase and owns no
entries. Task tables list P(theta=1 | config) by config index; the index
contract (within-slice parents in the low bits, first parent least
significant, then previous-slice parents) is documented in
:mod:`plotsmith.factors`. A task's table carries the background column
``"w0"`` plus one column per phase the task is indicative for; phases the
task is not indicative for must NOT appear, because they resolve to the
background column structurally.

Parsing is strict: unknown keys, wrong shapes, and out-of-range indices
raise ModelFormatError naming the exact document path. Value-level
semantics (normalization, floret support) stay in
:func:`plotsmith.model.validate` so a structurally sound document can be
loaded and inspected even when its numbers are off.

The canonical serialization (sorted keys, minimal separators, shortest
round-trip float form, trailing newline) is the golden-file and cache-key
format: equal models serialize to identical bytes.
"""

from __future__ import annotations

import json
from importlib import resources

import numpy as np

from .ara import AdversaryProfile, Reaction
from .causal import FactorPatch, Intervention
from .errors import ModelFormatError, PlotsmithError
from .factors import (
    CATEGORICAL,
    GAUSSIAN,
    IntensityFactors,
    PhaseFactors,
    TaskFactors,
)
from .model import BipartiteMap, PhaseGraph, PlotModel, SuccessSpec, TaskGraph

FORMAT = "plot-model/1"

DEMO_MODEL_ASSET = "assets/bombing_plot.json"
DEMO_OBSERVATIONS_ASSET = "assets/demo_observations.csv"


def canonical_json(obj) -> str:
    """Bit-stable JSON: sorted keys, no whitespace, shortest float form."""
    return (
        json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False, allow_nan=False)
        + "\n"
    )


# ---------------------------------------------------------------------------
# Typed readers with document paths
# ---------------------------------------------------------------------------


def _err(path: str, message: str):
    raise ModelFormatError(path, message)


def _expect_map(value, path: str) -> dict:
    if not isinstance(value, dict):
        _err(path, f"expected an object, got {type(value).__name__}")
    return value


def _expect_list(value, path: str) -> list:
    if not isinstance(value, list):
        _err(path, f"expected an array, got {type(value).__name__}")
    return value


def _expect_str(value, path: str) -> str:
    if not isinstance(value, str):
        _err(path, f"expected a string, got {type(value).__name__}")
    return value


def _expect_int(value, path: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        _err(path, f"expected an integer, got {value!r}")
    return value


def _expect_number(value, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        _err(path, f"expected a number, got {value!r}")
    return float(value)


def _no_extras(mapping: dict, allowed, path: str) -> None:
    extras = sorted(set(mapping) - set(allowed))
    if extras:
        _err(f"{path}.{extras[0]}" if path else extras[0], "unknown key")


def _get(mapping: dict, key: str, path: str):
    if key not in mapping:
        _err(f"{path}.{key}" if path else key, "missing required key")
    return mapping[key]


def _int_keyed(mapping: dict, path: str, lo: int, hi: int) -> dict[int, object]:
    out: dict[int, object] = {}
    for key, value in mapping.items():
        try:
            idx = int(key)
        except (TypeError, ValueError):
            _err(f"{path}.{key}", "key must be an integer index")
        if not lo <= idx <= hi:
            _err(f"{path}.{key}", f"index out of range {lo}..{hi}")
        out[idx] = value
    return out


def _int_list(value, path: str, lo: int, hi: int) -> tuple[int, ...]:
    items = _expect_list(value, path)
    out = []
    for pos, item in enumerate(items):
        idx = _expect_int(item, f"{path}[{pos}]")
        if not lo <= idx <= hi:
            _err(f"{path}[{pos}]", f"index {idx} out of range {lo}..{hi}")
        out.append(idx)
    return tuple(out)


def _prob_or_series(value, path: str, horizon: int):
    """A factor entry: one number, or a per-time series of length T."""
    if isinstance(value, list):
        if len(value) != horizon:
            _err(path, f"series must have {horizon} entries, got {len(value)}")
        return tuple(_expect_number(v, f"{path}[{i}]") for i, v in enumerate(value))
    return _expect_number(value, path)


def _float_rows(value, path: str) -> tuple[tuple[float, ...], ...]:
    rows = _expect_list(value, path)
    out = []
    for r, row in enumerate(rows):
        cells = _expect_list(row, f"{path}[{r}]")
        out.append(tuple(_expect_number(c, f"{path}[{r}][{i}]") for i, c in enumerate(cells)))
    return tuple(out)


# ---------------------------------------------------------------------------
# Section parsers
# ---------------------------------------------------------------------------


def _parse_phases(section, horizon: int):
    section = _expect_map(section, "phases")
    _no_extras(section, ("labels", "edges", "stages", "initial"), "phases")
    labels = tuple(
        _expect_str(v, f"phases.labels[{i}]")
        for i, v in enumerate(_expect_list(_get(section, "labels", "phases"), "phases.labels"))
    )
    if len(labels) < 2:
        _err("phases.labels", "need the inactive phase plus at least one active phase")
    m = len(labels) - 1

    edges_by_phase = {i: () for i in range(1, m + 1)}
    raw_edges = _int_keyed(_expect_map(_get(section, "edges", "phases"), "phases.edges"), "phases.edges", 1, m)
    for i, value in raw_edges.items():
        edges_by_phase[i] = _int_list(value, f"phases.edges.{i}", 1, m)
    edges = ((),) + tuple(edges_by_phase[i] for i in range(1, m + 1))

    stage_of = [""] * (m + 1)
    if "stages" in section:
        stages = _expect_map(section["stages"], "phases.stages")
        seen: dict[int, str] = {}
        for sid, members in stages.items():
            for phase in _int_list(members, f"phases.stages.{sid}", 1, m):
                if phase in seen:
                    _err(f"phases.stages.{sid}", f"phase {phase} already in stage {seen[phase]!r}")
                seen[phase] = sid
                stage_of[phase] = sid
        missing = [i for i in range(1, m + 1) if i not in seen]
        if missing:
            _err("phases.stages", f"phase {missing[0]} belongs to no stage")
    else:
        for i in range(1, m + 1):
            stage_of[i] = f"s{i}"

    initial_raw = _expect_list(_get(section, "initial", "phases"), "phases.initial")
    if len(initial_raw) != m + 1:
        _err("phases.initial", f"expected {m + 1} entries, got {len(initial_raw)}")
    initial = tuple(_expect_number(v, f"phases.initial[{i}]") for i, v in enumerate(initial_raw))

    graph = PhaseGraph(labels=labels, edges=edges, stage_of=tuple(stage_of))
    return graph, initial


def _parse_tasks(section, m: int):
    section = _expect_map(section, "tasks")
    _no_extras(
        section,
        ("labels", "within_parents", "cross_parents", "intensity_parents", "task_sets"),
        "tasks",
    )
    labels = tuple(
        _expect_str(v, f"tasks.labels[{i}]")
        for i, v in enumerate(_expect_list(_get(section, "labels", "tasks"), "tasks.labels"))
    )
    n = len(labels)
    if n < 1:
        _err("tasks.labels", "need at least one task")

    def parent_map(key: str, strict_below: bool) -> tuple[tuple[int, ...], ...]:
        out = {k: () for k in range(1, n + 1)}
        raw = _int_keyed(
            _expect_map(section.get(key, {}), f"tasks.{key}"), f"tasks.{key}", 1, n
        )
        for k, value in raw.items():
            parents = _int_list(value, f"tasks.{key}.{k}", 1, n)
            if len(set(parents)) != len(parents):
                _err(f"tasks.{key}.{k}", "duplicate parent")
            if strict_below and any(p >= k for p in parents):
                _err(f"tasks.{key}.{k}", f"parents must have index below {k}")
            out[k] = tuple(sorted(parents))
        return ((),) + tuple(out[k] for k in range(1, n + 1))

    within = parent_map("within_parents", strict_below=True)
    cross = parent_map("cross_parents", strict_below=False)
    intensity_within = parent_map("intensity_parents", strict_below=True)

    task_sets_by_phase = {i: () for i in range(1, m + 1)}
    raw_sets = _int_keyed(
        _expect_map(_get(section, "task_sets", "tasks"), "tasks.task_sets"),
        "tasks.task_sets",
        1,
        m,
    )
    for i, value in raw_sets.items():
        task_sets_by_phase[i] = _int_list(value, f"tasks.task_sets.{i}", 1, n)
    task_sets = ((),) + tuple(task_sets_by_phase[i] for i in range(1, m + 1))

    graph = TaskGraph(labels=labels, within=within, cross=cross, intensity_within=intensity_within)
    return graph, BipartiteMap(task_sets=task_sets)


def _parse_phase_factors(section, graph: PhaseGraph, initial, horizon: int) -> PhaseFactors:
    section = _expect_map(section, "factors.phase")
    _no_extras(section, ("abort_prob", "move_prob", "florets"), "factors.phase")
    m = graph.m

    def per_phase(key: str) -> dict[int, object]:
        raw = _int_keyed(
            _expect_map(_get(section, key, "factors.phase"), f"factors.phase.{key}"),
            f"factors.phase.{key}",
            1,
            m,
        )
        missing = [i for i in range(1, m + 1) if i not in raw]
        if missing:
            _err(f"factors.phase.{key}", f"missing entry for phase {missing[0]}")
        return {
            i: _prob_or_series(value, f"factors.phase.{key}.{i}", horizon)
            for i, value in raw.items()
        }

    abort = per_phase("abort_prob")
    move = per_phase("move_prob")

    florets_raw = _expect_map(_get(section, "florets", "factors.phase"), "factors.phase.florets")
    stages = graph.stages()
    _no_extras(florets_raw, stages.keys(), "factors.phase.florets")
    florets: dict[str, dict[int, object]] = {}
    for sid in stages:
        table_raw = _expect_map(
            _get(florets_raw, sid, "factors.phase.florets"), f"factors.phase.florets.{sid}"
        )
        table = {}
        for target, value in _int_keyed(table_raw, f"factors.phase.florets.{sid}", 1, m).items():
            table[target] = _prob_or_series(value, f"factors.phase.florets.{sid}.{target}", horizon)
        florets[sid] = table

    return PhaseFactors(
        initial=np.asarray(initial, dtype=float),
        abort=abort,
        move=move,
        florets=florets,
        stage_of=graph.stage_of,
        edges=graph.edges,
    )


def _parse_task_factors(section, tg: TaskGraph, task_map: BipartiteMap) -> TaskFactors:
    section = _expect_map(section, "factors.tasks")
    raw = _int_keyed(section, "factors.tasks", 1, tg.n)
    missing = [k for k in tg.tasks if k not in raw]
    if missing:
        _err("factors.tasks", f"missing table for task {missing[0]}")

    columns: list[dict[int, np.ndarray]] = [{}]
    for k in tg.tasks:
        path = f"factors.tasks.{k}"
        table = _expect_map(raw[k], path)
        rows = 1 << (len(tg.within[k]) + len(tg.cross[k]))
        indicative = set(task_map.indicative_phases(k))
        col: dict[int, np.ndarray] = {}
        for key, value in table.items():
            if key == "w0":
                phase = 0
            else:
                try:
                    phase = int(key)
                except (TypeError, ValueError):
                    _err(f"{path}.{key}", 'column key must be "w0" or a phase index')
                if phase == 0:
                    _err(f"{path}.{key}", 'use "w0" for the background column')
                if phase not in indicative:
                    _err(
                        f"{path}.{key}",
                        f"task {k} is not indicative for phase {phase}; the background "
                        "column applies there automatically, remove this entry",
                    )
            cells = _expect_list(value, f"{path}.{key}")
            if len(cells) != rows:
                _err(f"{path}.{key}", f"expected {rows} rows, got {len(cells)}")
            col[phase] = np.array(
                [_expect_number(c, f"{path}.{key}[{i}]") for i, c in enumerate(cells)],
                dtype=float,
            )
        if 0 not in col:
            _err(f"{path}.w0", "missing required key")
        columns.append(col)
    return TaskFactors(tg.within, tg.cross, columns)


def _parse_intensity_factors(section, tg: TaskGraph) -> IntensityFactors:
    section = _expect_map(section, "factors.intensities")
    raw = _int_keyed(section, "factors.intensities", 1, tg.n)
    missing = [k for k in tg.tasks if k not in raw]
    if missing:
        _err("factors.intensities", f"missing emission model for task {missing[0]}")

    kinds = [""]
    alphabets = [0]
    rows_list: list[np.ndarray] = [np.zeros((0, 0))]
    for k in tg.tasks:
        path = f"factors.intensities.{k}"
        entry = _expect_map(raw[k], path)
        kind = _expect_str(_get(entry, "kind", path), f"{path}.kind")
        if kind == CATEGORICAL:
            _no_extras(entry, ("kind", "alphabet", "rows"), path)
            alphabet = _expect_int(_get(entry, "alphabet", path), f"{path}.alphabet")
            if alphabet < 2:
                _err(f"{path}.alphabet", f"alphabet must have at least 2 symbols, got {alphabet}")
        elif kind == GAUSSIAN:
            _no_extras(entry, ("kind", "rows"), path)
            alphabet = 0
        else:
            _err(f"{path}.kind", f'expected "{CATEGORICAL}" or "{GAUSSIAN}", got {kind!r}')
        kinds.append(kind)
        alphabets.append(alphabet)
        rows_list.append(np.asarray(_float_rows(_get(entry, "rows", path), f"{path}.rows"), dtype=float))

    # z-parents must be categorical: their symbol indexes the row.
    for k in tg.tasks:
        for p in tg.intensity_within[k]:
            if kinds[p] != CATEGORICAL:
                _err(
                    f"tasks.intensity_parents.{k}",
                    f"intensity parent {p} must be a categorical-intensity task",
                )

    factors = IntensityFactors(kinds, alphabets, tg.intensity_within, rows_list)
    for k in tg.tasks:
        path = f"factors.intensities.{k}.rows"
        expected = factors.row_count(k)
        got = factors.base_rows(k)
        width = alphabets[k] if kinds[k] == CATEGORICAL else 2
        if got.ndim != 2 or got.shape != (expected, width):
            _err(path, f"expected shape ({expected}, {width}), got {tuple(got.shape)}")
    return factors


def _parse_success(section, m: int, n: int) -> SuccessSpec:
    section = _expect_map(section, "success_spec")
    _no_extras(section, ("phases", "required_tasks"), "success_spec")
    phases = _int_list(_get(section, "phases", "success_spec"), "success_spec.phases", 1, m)
    required = []
    raw = _int_keyed(
        _expect_map(section.get("required_tasks", {}), "success_spec.required_tasks"),
        "success_spec.required_tasks",
        1,
        n,
    )
    for task in sorted(raw):
        value = _expect_int(raw[task], f"success_spec.required_tasks.{task}")
        if value not in (0, 1):
            _err(f"success_spec.required_tasks.{task}", f"required value must be 0 or 1, got {value}")
        required.append((task, value))
    return SuccessSpec(phases=phases, required_tasks=tuple(required))


def _parse_patch(section, path: str, m: int, n: int, horizon: int) -> FactorPatch:
    section = _expect_map(section, path)
    _no_extras(section, ("phase_overrides", "block", "emission_tables"), path)

    phase_overrides = []
    for i, entry in enumerate(_expect_list(section.get("phase_overrides", []), f"{path}.phase_overrides")):
        epath = f"{path}.phase_overrides[{i}]"
        items = _expect_list(entry, epath)
        if len(items) != 3:
            _err(epath, "expected [field, phase, value]")
        fld = _expect_str(items[0], f"{epath}[0]")
        phase = _expect_int(items[1], f"{epath}[1]")
        if fld == "floret":
            table = _int_keyed(_expect_map(items[2], f"{epath}[2]"), f"{epath}[2]", 1, m)
            value = tuple(
                (target, _prob_or_series(p, f"{epath}[2].{target}", horizon))
                for target, p in sorted(table.items())
            )
        else:
            value = _prob_or_series(items[2], f"{epath}[2]", horizon)
        phase_overrides.append((fld, phase, value))

    block = []
    for i, entry in enumerate(_expect_list(section.get("block", []), f"{path}.block")):
        epath = f"{path}.block[{i}]"
        items = _expect_list(entry, epath)
        if len(items) != 3:
            _err(epath, "expected [phase, task, value]")
        block.append(
            (
                _expect_int(items[0], f"{epath}[0]"),
                _expect_int(items[1], f"{epath}[1]"),
                _expect_int(items[2], f"{epath}[2]"),
            )
        )

    emission_tables = []
    raw_emissions = _int_keyed(
        _expect_map(section.get("emission_tables", {}), f"{path}.emission_tables"),
        f"{path}.emission_tables",
        1,
        n,
    )
    for task in sorted(raw_emissions):
        emission_tables.append(
            (task, _float_rows(raw_emissions[task], f"{path}.emission_tables.{task}"))
        )

    return FactorPatch(
        phase_overrides=tuple(phase_overrides),
        block=tuple(block),
        emission_tables=tuple(emission_tables),
    )


def _parse_interventions(section, m: int, n: int, horizon: int) -> tuple[Intervention, ...]:
    out = []
    seen = set()
    for i, entry in enumerate(_expect_list(section, "interventions")):
        path = f"interventions[{i}]"
        entry = _expect_map(entry, path)
        _no_extras(
            entry,
            ("id", "kind", "description", "t0", "t1", "betrayal_prob", "patch", "disable_prob", "removal_prob"),
            path,
        )
        ident = _expect_str(_get(entry, "id", path), f"{path}.id")
        if ident in seen:
            _err(f"{path}.id", f"duplicate intervention id {ident!r}")
        seen.add(ident)
        kwargs = dict(
            id=ident,
            kind=_expect_str(_get(entry, "kind", path), f"{path}.kind"),
            description=_expect_str(entry.get("description", ""), f"{path}.description"),
            t0=_expect_int(entry.get("t0", 1), f"{path}.t0"),
        )
        if "t1" in entry and entry["t1"] is not None:
            kwargs["t1"] = _expect_int(entry["t1"], f"{path}.t1")
        if "betrayal_prob" in entry:
            kwargs["betrayal_prob"] = _expect_number(entry["betrayal_prob"], f"{path}.betrayal_prob")
        if "patch" in entry:
            kwargs["patch"] = _parse_patch(entry["patch"], f"{path}.patch", m, n, horizon)
        if "disable_prob" in entry and entry["disable_prob"] is not None:
            kwargs["disable_prob"] = _expect_number(entry["disable_prob"], f"{path}.disable_prob")
        if "removal_prob" in entry and entry["removal_prob"] is not None:
            kwargs["removal_prob"] = _expect_number(entry["removal_prob"], f"{path}.removal_prob")
        try:
            out.append(Intervention(**kwargs))
        except PlotsmithError as exc:
            _err(path, str(exc))
    return tuple(out)


def _parse_reactions(section, m: int, n: int, horizon: int) -> tuple[Reaction, ...]:
    out = []
    seen = set()
    for i, entry in enumerate(_expect_list(section, "reactions")):
        path = f"reactions[{i}]"
        entry = _expect_map(entry, path)
        _no_extras(entry, ("id", "description", "patch"), path)
        ident = _expect_str(_get(entry, "id", path), f"{path}.id")
        if ident in seen:
            _err(f"{path}.id", f"duplicate reaction id {ident!r}")
        seen.add(ident)
        patch = (
            _parse_patch(entry["patch"], f"{path}.patch", m, n, horizon)
            if "patch" in entry
            else FactorPatch()
        )
        out.append(
            Reaction(
                id=ident,
                description=_expect_str(entry.get("description", ""), f"{path}.description"),
                patch=patch,
            )
        )
    return tuple(out)


def _parse_profiles(section, interventions, reactions) -> dict[str, AdversaryProfile]:
    section = _expect_map(section, "adversary_profiles")
    reaction_ids = {r.id for r in reactions}
    intervention_ids = {d.id for d in interventions}
    out: dict[str, AdversaryProfile] = {}
    for name in section:
        path = f"adversary_profiles.{name}"
        entry = _expect_map(section[name], path)
        _no_extras(
            entry,
            ("u_a_scenarios", "capability", "discovery", "epsilon", "plot_discovery_reaction"),
            path,
        )
        scenarios = []
        for i, pair in enumerate(_expect_list(_get(entry, "u_a_scenarios", path), f"{path}.u_a_scenarios")):
            items = _expect_list(pair, f"{path}.u_a_scenarios[{i}]")
            if len(items) != 2:
                _err(f"{path}.u_a_scenarios[{i}]", "expected [u_a, weight]")
            scenarios.append(
                (
                    _expect_number(items[0], f"{path}.u_a_scenarios[{i}][0]"),
                    _expect_number(items[1], f"{path}.u_a_scenarios[{i}][1]"),
                )
            )
        capability = {}
        for kind, ids in _expect_map(entry.get("capability", {}), f"{path}.capability").items():
            if kind not in Intervention.KINDS:
                _err(f"{path}.capability.{kind}", f"unknown intervention kind {kind!r}")
            names = tuple(
                _expect_str(v, f"{path}.capability.{kind}[{i}]")
                for i, v in enumerate(_expect_list(ids, f"{path}.capability.{kind}"))
            )
            for rid in names:
                if rid not in reaction_ids:
                    _err(f"{path}.capability.{kind}", f"unknown reaction {rid!r}")
            capability[kind] = names
        discovery = {}
        for ident, values in _expect_map(entry.get("discovery", {}), f"{path}.discovery").items():
            if ident not in intervention_ids:
                _err(f"{path}.discovery.{ident}", f"unknown intervention {ident!r}")
            values = _expect_map(values, f"{path}.discovery.{ident}")
            _no_extras(values, ("betrayal_prob", "local_prob"), f"{path}.discovery.{ident}")
            discovery[ident] = {
                key: _expect_number(v, f"{path}.discovery.{ident}.{key}")
                for key, v in values.items()
            }
        plot_reaction = entry.get("plot_discovery_reaction")
        if plot_reaction is not None:
            plot_reaction = _expect_str(plot_reaction, f"{path}.plot_discovery_reaction")
            if plot_reaction not in reaction_ids:
                _err(f"{path}.plot_discovery_reaction", f"unknown reaction {plot_reaction!r}")
        try:
            out[name] = AdversaryProfile(
                id=name,
                u_a_scenarios=tuple(scenarios),
                capability=capability,
                discovery=discovery,
                epsilon=_expect_number(entry.get("epsilon", 0.0), f"{path}.epsilon"),
                plot_discovery_reaction=plot_reaction,
            )
        except PlotsmithError as exc:
            _err(path, str(exc))
    return out


def parse_model(text: str) -> PlotModel:
    """Parse a plot-model document. Structural problems raise
    ModelFormatError with the document path; numeric semantics are left to
    :func:`plotsmith.model.validate`."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        _err("", f"invalid JSON: {exc}")
    data = _expect_map(data, "")
    _no_extras(
        data,
        (
            "format",
            "meta",
            "phases",
            "tasks",
            "factors",
            "success_spec",
            "interventions",
            "reactions",
            "adversary_profiles",
        ),
        "",
    )
    fmt = _expect_str(_get(data, "format", ""), "format")
    if fmt != FORMAT:
        _err("format", f"expected {FORMAT!r}, got {fmt!r}")

    meta = _expect_map(_get(data, "meta", ""), "meta")
    _no_extras(meta, ("name", "version", "time_step", "horizon", "time_labels"), "meta")
    name = _expect_str(_get(meta, "name", "meta"), "meta.name")
    horizon = _expect_int(_get(meta, "horizon", "meta"), "meta.horizon")
    if horizon < 1:
        _err("meta.horizon", f"must be at least 1, got {horizon}")
    if "version" in meta:
        _expect_str(meta["version"], "meta.version")
    if "time_step" in meta:
        _expect_str(meta["time_step"], "meta.time_step")
    time_labels = None
    if "time_labels" in meta:
        labels_raw = _expect_list(meta["time_labels"], "meta.time_labels")
        time_labels = tuple(
            _expect_str(v, f"meta.time_labels[{i}]") for i, v in enumerate(labels_raw)
        )
        if len(time_labels) != horizon:
            _err("meta.time_labels", f"expected {horizon} labels, got {len(time_labels)}")

    phase_graph, initial = _parse_phases(_get(data, "phases", ""), horizon)
    task_graph, task_map = _parse_tasks(_get(data, "tasks", ""), phase_graph.m)

    factors = _expect_map(_get(data, "factors", ""), "factors")
    _no_extras(factors, ("phase", "tasks", "intensities"), "factors")
    phase_factors = _parse_phase_factors(
        _get(factors, "phase", "factors"), phase_graph, initial, horizon
    )
    task_factors = _parse_task_factors(_get(factors, "tasks", "factors"), task_graph, task_map)
    intensity_factors = _parse_intensity_factors(_get(factors, "intensities", "factors"), task_graph)

    success = _parse_success(_get(data, "success_spec", ""), phase_graph.m, task_graph.n)
    interventions = _parse_interventions(
        data.get("interventions", []), phase_graph.m, task_graph.n, horizon
    )
    reactions = _parse_reactions(data.get("reactions", []), phase_graph.m, task_graph.n, horizon)
    profiles = _parse_profiles(data.get("adversary_profiles", {}), interventions, reactions)

    return PlotModel(
        title=name,
        phase_graph=phase_graph,
        task_graph=task_graph,
        task_map=task_map,
        phase_factors=phase_factors,
        task_factors=task_factors,
        intensity_factors=intensity_factors,
        horizon=horizon,
        success=success,
        time_labels=time_labels,
        interventions=interventions,
        reactions=reactions,
        profiles=profiles,
    )


# ---------------------------------------------------------------------------
# Serialization back to the document form
# ---------------------------------------------------------------------------


def _value_out(value):
    if isinstance(value, (tuple, list, np.ndarray)):
        return [float(v) for v in value]
    return float(value)


def _patch_out(patch: FactorPatch) -> dict:
    out: dict = {}
    if patch.phase_overrides:
        entries = []
        for fld, phase, value in patch.phase_overrides:
            if fld == "floret":
                value = {str(target): _value_out(p) for target, p in dict(value).items()}
            else:
                value = _value_out(value)
            entries.append([fld, phase, value])
        out["phase_overrides"] = entries
    if patch.block:
        out["block"] = [[phase, task, value] for phase, task, value in patch.block]
    if patch.emission_tables:
        out["emission_tables"] = {
            str(task): [[float(c) for c in row] for row in rows]
            for task, rows in patch.emission_tables
        }
    return out


def document_of(model: PlotModel) -> dict:
    """The document form of a base model (inverse of parse_model).

    Models carrying runtime state (factor overrides from interventions, a
    doubled phase space) are analysis artifacts, not documents; they are
    refused rather than silently flattened.
    """
    if model.layer_of is not None:
        raise ValueError("cannot serialize a doubled model; serialize its base instead")
    if (
        model.phase_factors._overrides
        or model.task_factors._overrides
        or model.intensity_factors._overrides
    ):
        raise ValueError("cannot serialize a model with active factor overrides")

    g = model.phase_graph
    tg = model.task_graph
    pf = model.phase_factors
    tf = model.task_factors
    itf = model.intensity_factors

    meta: dict = {"name": model.title, "horizon": model.horizon}
    if model.time_labels is not None:
        meta["time_labels"] = list(model.time_labels)

    stages_out: dict[str, list[int]] = {}
    for i in g.active_phases:
        stages_out.setdefault(g.stage_of[i], []).append(i)

    florets_out = {
        sid: {
            str(target): _value_out(value)
            for target, value in pf.floret_table(members[0]).items()
        }
        for sid, members in g.stages().items()
    }

    tasks_out: dict[str, dict[str, list[float]]] = {}
    for k in tg.tasks:
        col = {"w0": [float(v) for v in tf.base_table(k, 0)]}
        for phase in model.task_map.indicative_phases(k):
            col[str(phase)] = [float(v) for v in tf.base_table(k, phase)]
        tasks_out[str(k)] = col

    intensities_out: dict[str, dict] = {}
    for k in tg.tasks:
        entry: dict = {"kind": itf.kind(k)}
        if itf.kind(k) == CATEGORICAL:
            entry["alphabet"] = itf.alphabet(k)
        entry["rows"] = [[float(c) for c in row] for row in itf.base_rows(k)]
        intensities_out[str(k)] = entry

    interventions_out = []
    for d in model.interventions:
        entry = {"id": d.id, "kind": d.kind, "description": d.description, "t0": d.t0}
        if d.t1 is not None:
            entry["t1"] = d.t1
        if d.betrayal_prob:
            entry["betrayal_prob"] = float(d.betrayal_prob)
        if not d.patch.is_empty():
            entry["patch"] = _patch_out(d.patch)
        if d.disable_prob is not None:
            entry["disable_prob"] = float(d.disable_prob)
        if d.removal_prob is not None:
            entry["removal_prob"] = float(d.removal_prob)
        interventions_out.append(entry)

    reactions_out = []
    for r in model.reactions:
        entry = {"id": r.id, "description": r.description}
        if not r.patch.is_empty():
            entry["patch"] = _patch_out(r.patch)
        reactions_out.append(entry)

    profiles_out = {}
    for name, p in model.profiles.items():
        entry: dict = {"u_a_scenarios": [[float(u), float(w)] for u, w in p.u_a_scenarios]}
        if p.capability:
            entry["capability"] = {kind: list(ids) for kind, ids in p.capability.items()}
        if p.discovery:
            entry["discovery"] = {
                ident: {key: float(v) for key, v in values.items()}
                for ident, values in p.discovery.items()
            }
        if p.epsilon:
            entry["epsilon"] = float(p.epsilon)
        if p.plot_discovery_reaction is not None:
            entry["plot_discovery_reaction"] = p.plot_discovery_reaction
        profiles_out[name] = entry

    return {
        "format": FORMAT,
        "meta": meta,
        "phases": {
            "labels": list(g.labels),
            "edges": {str(i): list(g.edges[i]) for i in g.active_phases},
            "stages": stages_out,
            "initial": [float(v) for v in pf.initial()],
        },
        "tasks": {
            "labels": list(tg.labels),
            "within_parents": {str(k): list(tg.within[k]) for k in tg.tasks},
            "cross_parents": {str(k): list(tg.cross[k]) for k in tg.tasks},
            "intensity_parents": {str(k): list(tg.intensity_within[k]) for k in tg.tasks},
            "task_sets": {str(i): list(model.task_map.tasks_of(i)) for i in g.active_phases},
        },
        "factors": {
            "phase": {
                "abort_prob": {str(i): _value_out(pf._abort[i]) for i in g.active_phases},
                "move_prob": {str(i): _value_out(pf._move[i]) for i in g.active_phases},
                "florets": florets_out,
            },
            "tasks": tasks_out,
            "intensities": intensities_out,
        },
        "success_spec": {
            "phases": list(model.success.phases),
            "required_tasks": {str(task): value for task, value in model.success.required_tasks},
        },
        "interventions": interventions_out,
        "reactions": reactions_out,
        "adversary_profiles": profiles_out,
    }


def serialize_model(model: PlotModel) -> str:
    return canonical_json(document_of(model))


def load_model(path) -> PlotModel:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_model(fh.read())


def load_demo() -> PlotModel:
    """The bundled worked example: a seven-phase bombing plot."""
    text = resources.files("plotsmith").joinpath(DEMO_MODEL_ASSET).read_text(encoding="utf-8")
    return parse_model(text)


def load_demo_observations() -> list[tuple[float, ...]]:
    text = resources.files("plotsmith").joinpath(DEMO_OBSERVATIONS_ASSET).read_text(encoding="utf-8")
    return parse_observations_csv(text)


# ---------------------------------------------------------------------------
# CSV formats
# ---------------------------------------------------------------------------


def _cell(value) -> str:
    if isinstance(value, float) and value.is_integer():
        return str(int(value))
    return str(value)


def observations_csv(rows) -> str:
    """Observation rows (t, z_1..z_n) as CSV text."""
    rows = list(rows)
    n = len(rows[0]) if rows else 0
    header = "t," + ",".join(f"z{k}" for k in range(1, n + 1))
    lines = [header]
    for t, row in enumerate(rows, start=1):
        lines.append(f"{t}," + ",".join(_cell(float(v)) for v in row))
    return "\n".join(lines) + "\n"


def parse_observations_csv(text: str) -> list[tuple[float, ...]]:
    lines = [line for line in text.splitlines() if line.strip()]
    if not lines:
        raise ModelFormatError("observations", "empty CSV")
    header = lines[0].split(",")
    if header[0].strip() != "t":
        raise ModelFormatError("observations", 'first column must be "t"')
    n = len(header) - 1
    rows: list[tuple[float, ...]] = []
    for ln, line in enumerate(lines[1:], start=2):
        cells = line.split(",")
        if len(cells) != n + 1:
            raise ModelFormatError(
                "observations", f"line {ln}: expected {n + 1} columns, got {len(cells)}"
            )
        try:
            t = int(cells[0])
            values = tuple(float(c) for c in cells[1:])
        except ValueError as exc:
            raise ModelFormatError("observations", f"line {ln}: {exc}") from None
        if t != ln - 1:
            raise ModelFormatError(
                "observations", f"line {ln}: expected t={ln - 1}, got t={t}"
            )
        rows.append(values)
    return rows


def trajectory_csv(trajectory) -> str:
    """A sampled trajectory as CSV: t, phase, theta_1..n, z_1..n."""
    n = len(trajectory.zs[0]) if trajectory.zs else 0
    header = (
        "t,phase,"
        + ",".join(f"theta{k}" for k in range(1, n + 1))
        + ","
        + ",".join(f"z{k}" for k in range(1, n + 1))
    )
    lines = [header]
    for t in range(1, len(trajectory) + 1):
        theta = trajectory.thetas[t - 1]
        bits = ",".join(str((theta >> (k - 1)) & 1) for k in range(1, n + 1))
        zs = ",".join(_cell(float(v)) for v in trajectory.zs[t - 1])
        lines.append(f"{t},{trajectory.phases[t - 1]},{bits},{zs}")
    return "\n".join(lines) + "\n"
