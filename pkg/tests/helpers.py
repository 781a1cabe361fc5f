"""Shared test utilities.

``random_tiny_model`` draws small valid models for property and
equivalence tests. ``oracle_filter`` recomputes filtered phase marginals
and evidence by enumerating every hidden state sequence and multiplying
raw factor entries together, reimplementing the transition law, the
config indexing, and the emission row lookup from scratch. It shares no
inference code with the production path, so agreement is meaningful.
"""

from __future__ import annotations

import math

import numpy as np

from plotsmith import BipartiteMap, PhaseGraph, PlotModel, SuccessSpec, TaskGraph, ensure_valid
from plotsmith.factors import IntensityFactors, PhaseFactors, TaskFactors


def _dirichlet(rng: np.random.Generator, size: int) -> np.ndarray:
    raw = rng.dirichlet(np.ones(size))
    return raw / raw.sum()


def random_tiny_model(
    rng: np.random.Generator,
    m: int | None = None,
    n: int | None = None,
    horizon: int | None = None,
    allow_series: bool = True,
    allow_z_parents: bool = True,
) -> PlotModel:
    m = int(rng.integers(1, 3)) if m is None else m
    n = int(rng.integers(1, 3)) if n is None else n
    horizon = int(rng.integers(2, 5)) if horizon is None else horizon

    phase_labels = ("idle",) + tuple(f"p{i}" for i in range(1, m + 1))
    edges: list[tuple[int, ...]] = [()]
    for i in range(1, m + 1):
        others = [j for j in range(1, m + 1) if j != i]
        count = int(rng.integers(0, len(others) + 1))
        picked = sorted(rng.choice(others, size=count, replace=False).tolist()) if count else []
        edges.append(tuple(int(j) for j in picked))
    stage_of = ("",) + tuple(f"s{i}" for i in range(1, m + 1))
    graph = PhaseGraph(labels=phase_labels, edges=tuple(edges), stage_of=stage_of)

    def maybe_series(value: float) -> object:
        if allow_series and rng.random() < 0.25:
            return tuple(float(v) for v in rng.uniform(0.01, 0.5, size=horizon))
        return value

    abort = {i: maybe_series(float(rng.uniform(0.01, 0.3))) for i in range(1, m + 1)}
    move = {
        i: (float(rng.uniform(0.1, 0.6)) if edges[i] else 0.0) for i in range(1, m + 1)
    }
    florets = {}
    for i in range(1, m + 1):
        if edges[i]:
            weights = _dirichlet(rng, len(edges[i]))
            florets[f"s{i}"] = {j: float(w) for j, w in zip(edges[i], weights)}
        else:
            florets[f"s{i}"] = {}
    initial = _dirichlet(rng, m + 1)
    phase_factors = PhaseFactors(
        initial=initial,
        abort=abort,
        move=move,
        florets=florets,
        stage_of=stage_of,
        edges=tuple(edges),
    )

    task_labels = tuple(f"t{k}" for k in range(1, n + 1))
    within: list[tuple[int, ...]] = [()]
    cross: list[tuple[int, ...]] = [()]
    z_parents: list[tuple[int, ...]] = [()]
    for k in range(1, n + 1):
        candidates = list(range(1, k))
        w_count = int(rng.integers(0, len(candidates) + 1))
        picked = (
            sorted(rng.choice(candidates, size=w_count, replace=False).tolist())
            if w_count
            else []
        )
        within.append(tuple(int(p) for p in picked))
        cross.append((k,) if rng.random() < 0.7 else ())
        if allow_z_parents and candidates and rng.random() < 0.3:
            z_parents.append((int(rng.choice(candidates)),))
        else:
            z_parents.append(())
    task_graph = TaskGraph(
        labels=task_labels,
        within=tuple(within),
        cross=tuple(cross),
        intensity_within=tuple(z_parents),
    )

    task_sets: list[tuple[int, ...]] = [()]
    for _ in range(1, m + 1):
        count = int(rng.integers(1, n + 1))
        picked = sorted(rng.choice(range(1, n + 1), size=count, replace=False).tolist())
        task_sets.append(tuple(int(t) for t in picked))
    task_map = BipartiteMap(task_sets=tuple(task_sets))

    columns: list[dict[int, np.ndarray]] = [{}]
    for k in range(1, n + 1):
        rows = 1 << (len(within[k]) + len(cross[k]))
        col = {0: rng.uniform(0.05, 0.95, size=rows)}
        for phase in range(1, m + 1):
            if k in task_sets[phase]:
                col[phase] = rng.uniform(0.05, 0.95, size=rows)
        columns.append(col)
    task_factors = TaskFactors(tuple(within), tuple(cross), columns)

    kinds = [""] + ["categorical"] * n
    alphabets = [0] + [2] * n
    rows_list: list[np.ndarray] = [np.zeros((0, 0))]
    for k in range(1, n + 1):
        row_count = 2 * (2 ** len(z_parents[k]))
        rows_list.append(
            np.stack([_dirichlet(rng, 2) for _ in range(row_count)])
        )
    intensity_factors = IntensityFactors(kinds, alphabets, tuple(z_parents), rows_list)

    phase_count = int(rng.integers(1, m + 1))
    success_phases = sorted(rng.choice(range(1, m + 1), size=phase_count, replace=False).tolist())
    required = ((1, 1),) if rng.random() < 0.5 else ()
    success = SuccessSpec(
        phases=tuple(int(p) for p in success_phases), required_tasks=required
    )

    model = PlotModel(
        title="tiny",
        phase_graph=graph,
        task_graph=task_graph,
        task_map=task_map,
        phase_factors=phase_factors,
        task_factors=task_factors,
        intensity_factors=intensity_factors,
        horizon=horizon,
        success=success,
    )
    return ensure_valid(model)


def _oracle_phase_prob(model: PlotModel, t: int, prev: int, cur: int) -> float:
    pf = model.phase_factors
    if prev == 0:
        return 1.0 if cur == 0 else 0.0
    q_abort = pf.abort(t, prev)
    q_move = pf.move(t, prev)
    if cur == 0:
        return q_abort
    p = 0.0
    if cur == prev:
        p += (1.0 - q_abort) * (1.0 - q_move)
    floret = pf.floret(t, prev)
    if cur in floret:
        p += (1.0 - q_abort) * q_move * floret[cur]
    return p


def _oracle_task_prob(model: PlotModel, t: int, k: int, phase: int, theta: int, theta_prev: int) -> float:
    tg = model.task_graph
    cfg = 0
    pos = 0
    for parent in tg.within[k]:
        cfg |= ((theta >> (parent - 1)) & 1) << pos
        pos += 1
    for parent in tg.cross[k]:
        cfg |= ((theta_prev >> (parent - 1)) & 1) << pos
        pos += 1
    table = model.task_factors.table(t, k, phase)
    p_one = float(table[cfg])
    return p_one if (theta >> (k - 1)) & 1 else 1.0 - p_one


def _oracle_emission_prob(model: PlotModel, t: int, theta: int, z_values) -> float:
    itf = model.intensity_factors
    tg = model.task_graph
    total = 1.0
    for k in range(1, tg.n + 1):
        theta_k = (theta >> (k - 1)) & 1
        row = theta_k
        stride = 2
        for parent in itf.z_parents(k):
            row += stride * int(z_values[parent - 1])
            stride *= itf.alphabet(parent)
        rows = itf.rows_at(t, k)
        symbol = int(z_values[k - 1])
        if not 0 <= symbol < itf.alphabet(k):
            return 0.0
        total *= float(rows[row][symbol])
    return total


def oracle_filter(model: PlotModel, observations):
    """Filtered phase marginals and final log evidence via exhaustive
    enumeration of hidden (phase, theta) sequences with prefix pruning."""
    m, n = model.m, model.n
    T = len(observations)
    acc = [np.zeros(m + 1) for _ in range(T + 1)]

    def recurse(t: int, phase_prev: int, theta_prev: int, weight: float) -> None:
        if t > T:
            return
        z = observations[t - 1]
        for phase in range(m + 1):
            if t == 1:
                p_phase = float(model.phase_factors.initial()[phase])
            else:
                p_phase = _oracle_phase_prob(model, t, phase_prev, phase)
            if p_phase == 0.0:
                continue
            for theta in range(1 << n):
                w = weight * p_phase
                for k in range(1, n + 1):
                    w *= _oracle_task_prob(model, t, k, phase, theta, theta_prev)
                    if w == 0.0:
                        break
                if w == 0.0:
                    continue
                w *= _oracle_emission_prob(model, t, theta, z)
                if w == 0.0:
                    continue
                acc[t][phase] += w
                recurse(t + 1, phase, theta, w)

    recurse(1, -1, 0, 1.0)
    marginals = [acc[t] / acc[t].sum() for t in range(1, T + 1)]
    log_evidence = math.log(acc[T].sum())
    return marginals, log_evidence


def tiny_document() -> dict:
    """A small hand-written document (2 active phases, 2 tasks) for schema
    and validation tests; callers mutate a deep copy before parsing."""
    return {
        "format": "plot-model/1",
        "meta": {"name": "tiny-demo", "horizon": 6},
        "phases": {
            "labels": ["dormant", "planning", "strike-prep"],
            "edges": {"1": [2], "2": []},
            "initial": [0.2, 0.7, 0.1],
        },
        "tasks": {
            "labels": ["recruit", "acquire"],
            "within_parents": {"2": [1]},
            "cross_parents": {"1": [1]},
            "task_sets": {"1": [1], "2": [1, 2]},
        },
        "factors": {
            "phase": {
                "abort_prob": {"1": 0.05, "2": 0.1},
                "move_prob": {"1": 0.3, "2": 0.0},
                "florets": {"s1": {"2": 1.0}, "s2": {}},
            },
            "tasks": {
                "1": {"w0": [0.1, 0.2], "1": [0.7, 0.9], "2": [0.6, 0.8]},
                "2": {"w0": [0.05, 0.1], "2": [0.5, 0.95]},
            },
            "intensities": {
                "1": {
                    "kind": "categorical",
                    "alphabet": 2,
                    "rows": [[0.9, 0.1], [0.2, 0.8]],
                },
                "2": {
                    "kind": "categorical",
                    "alphabet": 2,
                    "rows": [[0.85, 0.15], [0.3, 0.7]],
                },
            },
        },
        "success_spec": {"phases": [2], "required_tasks": {"2": 1}},
        "interventions": [
            {
                "id": "curfew",
                "kind": "blocking",
                "description": "suppress movement",
                "t0": 2,
                "betrayal_prob": 0.2,
                "patch": {"phase_overrides": [["move", 1, 0.05]]},
            },
            {
                "id": "raid",
                "kind": "direct",
                "t0": 3,
                "disable_prob": 0.6,
            },
        ],
        "reactions": [
            {
                "id": "scatter",
                "description": "pause and lie low",
                "patch": {"phase_overrides": [["abort", 1, 0.3]]},
            }
        ],
        "adversary_profiles": {
            "default": {
                "u_a_scenarios": [[0.5, 1.0]],
                "capability": {"blocking": ["scatter"]},
                "epsilon": 0.05,
                "plot_discovery_reaction": "scatter",
            }
        },
    }


def tiny_model():
    """Parsed form of tiny_document()."""
    import json

    from plotsmith.schema import parse_model

    return parse_model(json.dumps(tiny_document()))
