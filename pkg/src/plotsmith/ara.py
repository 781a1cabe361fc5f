"""Adversarial treatment of interventions: awareness, reactions, doubling.

The unintelligent treatment in :mod:`plotsmith.causal` pretends the
adversary never notices being acted upon. This module drops that pretence
in two steps:

* **Local discovery**: does the agent notice the intervention itself?
  Arrests and deportation attempts are impossible to miss (probability 1);
  a blocked passport is overt too; a quietly befriended informant is not.
  A noticing agent picks a reaction from the model's catalogue, weighted
  by the defender's uncertainty over the agent's utility (and tempered by
  a trembling-hand parameter).

* **Plot discovery**: does the agent learn the defender is onto the plot
  at all (an informant betrays, an investigation leaks)? This is modeled
  by doubling every active phase into an unaware and an aware copy. Per
  step, the discovery probability is carved out first (unaware phase i
  crosses to aware phase i), and the remaining mass follows the ordinary
  within-layer law; mass that crossed behaves per the aware layer's
  factors from the next step on, which is where the agent's
  plot-discovery reaction (for a timid agent: abort) lives. Awareness is
  irreversible: no transition leads back to the unaware layer.

The result of :func:`apply_intelligent` is a weighted mixture of models,
one per (discovery outcome, reaction) branch. Scoring averages over the
mixture; it never collapses the branches into one blended model.
"""

from __future__ import annotations

import dataclasses
import warnings
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from . import causal
from .causal import FactorPatch, Intervention, apply_unintelligent
from .errors import InterventionError
from .factors import OverrideOverlapWarning, PhaseFactors, TaskFactors, Window, _at
from .filtering import BeliefState, init_belief
from .model import BipartiteMap, PhaseGraph, PlotModel, SuccessSpec
from .seu import classify_outcomes

# How likely the agent is to notice each intervention kind at enactment,
# absent a profile override. Direct and disabling actions are inherently
# overt and stay at 1 regardless of profile.
LOCAL_DISCOVERY_DEFAULTS = {
    "null": 0.0,
    "clarifying": 0.0,
    "blocking": 1.0,
    "direct": 1.0,
    "disabling": 1.0,
}


@dataclass(frozen=True)
class Reaction:
    """A catalogued behavior change the agent may adopt in response to an
    intervention. Same payload vocabulary as interventions."""

    id: str
    description: str = ""
    patch: FactorPatch = field(default_factory=FactorPatch)


@dataclass(frozen=True)
class AdversaryProfile:
    """The defender's model of the agent as a decision maker.

    u_a_scenarios: (u_a, weight) pairs, the uncertainty over how much the
        agent values escaping with the plot foiled, relative to success=1
        and capture=0. Weights must form a simplex.
    capability: intervention kind -> reaction ids available to the agent;
        kinds not listed default to the whole catalogue.
    discovery: intervention id -> {"betrayal_prob": .., "local_prob": ..}
        overriding the intervention's own betrayal probability and the
        kind-level local-discovery default.
    epsilon: trembling-hand weight: the best response keeps 1 - epsilon,
        the other available reactions split epsilon uniformly.
    plot_discovery_reaction: reaction id applied to the aware layer when
        doubling (None leaves the aware layer's behavior unchanged).
    """

    id: str
    u_a_scenarios: tuple[tuple[float, float], ...]
    capability: Mapping[str, tuple[str, ...]] = field(default_factory=dict)
    discovery: Mapping[str, Mapping[str, float]] = field(default_factory=dict)
    epsilon: float = 0.0
    plot_discovery_reaction: str | None = None

    def __post_init__(self):
        where = f"profiles.{self.id}"
        if not self.u_a_scenarios:
            raise InterventionError("profile needs at least one utility scenario", path=where)
        total = 0.0
        for u_a, weight in self.u_a_scenarios:
            if not 0.0 <= u_a <= 1.0:
                raise InterventionError(f"u_a {u_a!r} outside [0,1]", path=where)
            if weight < 0.0:
                raise InterventionError(f"negative scenario weight {weight!r}", path=where)
            total += weight
        if abs(total - 1.0) > 1e-9:
            raise InterventionError(f"scenario weights sum to {total!r}, expected 1", path=where)
        if not 0.0 <= self.epsilon < 1.0:
            raise InterventionError(f"epsilon must lie in [0,1), got {self.epsilon!r}", path=where)

    def available_reactions(self, kind: str, model: PlotModel) -> tuple[Reaction, ...]:
        """The catalogue reactions the agent can use against this kind, in
        catalogue order."""
        allowed = self.capability.get(kind)
        if allowed is None:
            return tuple(model.reactions)
        allowed_set = set(allowed)
        return tuple(r for r in model.reactions if r.id in allowed_set)


def apply_reaction(
    model: PlotModel, reaction: Reaction | None, t0: int, t1: int | None = None
) -> PlotModel:
    """Overlay a reaction's behavior changes from t0 (through t1, default
    the horizon). Reactions start the step the agent notices: concurrent
    with the intervention window, overriding it cell-by-cell where both
    touch the same factor. That shadowing is the point here, so the
    overlap warning stays quiet."""
    if reaction is None or reaction.patch.is_empty():
        return model
    window = Window(t0, t1 if t1 is not None else model.horizon)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", OverrideOverlapWarning)
        return causal.apply_patch(
            model, reaction.patch, window, where=f"reactions.{reaction.id}"
        )


# ---------------------------------------------------------------------------
# Phase doubling
# ---------------------------------------------------------------------------


def is_doubled(model: PlotModel) -> bool:
    return model.layer_of is not None


def double(
    model: PlotModel,
    pi,
    aware_overrides: Reaction | FactorPatch | None = None,
) -> PlotModel:
    """Double a model's active phases into unaware/aware layers.

    ``pi`` is the per-step plot-discovery probability (scalar or length-T
    series indexed by kernel time): at each step, unaware phase i sends
    probability pi_t across to aware phase i before the remaining mass
    follows the ordinary law, so the aware layer's behavior first applies
    one step after discovery. ``aware_overrides`` (a reaction or bare
    patch) reshapes the aware layer's factors over the whole timeline;
    observation tables cannot differ between layers and are rejected.

    The result is an ordinary model over 2m active phases with
    ``layer_of`` mapping each phase back to its base counterpart, so every
    downstream operation (filtering, classification) works unchanged.
    Unaware phases keep the base indices 1..m; aware phase for base i is
    m + i.
    """
    m = model.m
    T = model.horizon
    g = model.phase_graph

    for t in range(1, T + 1):
        p = _at(pi, t)
        if not 0.0 <= p <= 1.0:
            raise InterventionError(f"discovery probability {p!r} at t={t} outside [0,1]")

    patch = aware_overrides.patch if isinstance(aware_overrides, Reaction) else aware_overrides
    if patch is not None and patch.emission_tables:
        raise InterventionError(
            "aware-layer overrides cannot replace observation tables; the "
            "intensity channel is shared between layers"
        )
    where = "aware overrides"
    if isinstance(aware_overrides, Reaction):
        where = f"reactions.{aware_overrides.id}"
    if patch is not None:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", OverrideOverlapWarning)
            aware_model = causal.apply_patch(model, patch, Window(1, T), where=where)
    else:
        aware_model = model

    labels = (g.labels[0],)
    labels += tuple(f"{name}-" for name in g.labels[1:])
    labels += tuple(f"{name}*" for name in g.labels[1:])
    edges: list[tuple[int, ...]] = [()]
    for i in g.active_phases:  # unaware layer: base targets plus the cross edge
        edges.append(tuple(g.edges[i]) + (m + i,))
    for i in g.active_phases:  # aware layer mirrors the base edges only
        edges.append(tuple(m + j for j in g.edges[i]))
    stage_of = (g.stage_of[0],) + tuple(f"u{i}" for i in g.active_phases) + tuple(
        f"a{i}" for i in g.active_phases
    )
    doubled_graph = PhaseGraph(labels=labels, edges=tuple(edges), stage_of=stage_of)

    # Phase factors: flatten the effective per-time values (base overrides
    # included) into explicit series on the doubled index set.
    pf = model.phase_factors
    af = aware_model.phase_factors
    abort: dict[int, np.ndarray] = {}
    move: dict[int, np.ndarray] = {}
    florets: dict[str, dict[int, np.ndarray]] = {}
    for i in g.active_phases:
        ab_u = np.zeros(T)
        mv_u = np.zeros(T)
        floret_u: dict[int, np.ndarray] = {j: np.zeros(T) for j in g.edges[i]}
        floret_u[m + i] = np.zeros(T)
        for t in range(1, T + 1):
            p = float(_at(pi, t))
            q_ab = pf.abort(t, i)
            q_mv = pf.move(t, i)
            base_floret = pf.floret(t, i)
            cross_total = p + (1.0 - p) * (1.0 - q_ab) * q_mv
            ab_u[t - 1] = (1.0 - p) * q_ab
            stay_like = 1.0 - ab_u[t - 1]
            mv_u[t - 1] = cross_total / stay_like if stay_like > 0.0 else 0.0
            if cross_total > 0.0:
                floret_u[m + i][t - 1] = p / cross_total
                for j in g.edges[i]:
                    floret_u[j][t - 1] = (
                        (1.0 - p) * (1.0 - q_ab) * q_mv * base_floret[j] / cross_total
                    )
            else:
                floret_u[m + i][t - 1] = 1.0
        abort[i] = ab_u
        move[i] = mv_u
        florets[f"u{i}"] = floret_u

        ab_a = np.zeros(T)
        mv_a = np.zeros(T)
        floret_a: dict[int, np.ndarray] = {m + j: np.zeros(T) for j in g.edges[i]}
        for t in range(1, T + 1):
            ab_a[t - 1] = af.abort(t, i)
            mv_a[t - 1] = af.move(t, i)
            aware_floret = af.floret(t, i)
            for j in g.edges[i]:
                floret_a[m + j][t - 1] = aware_floret[j]
        abort[m + i] = ab_a
        move[m + i] = mv_a
        florets[f"a{i}"] = floret_a

    initial = np.concatenate([np.asarray(pf.initial(), dtype=float), np.zeros(m)])
    doubled_pf = PhaseFactors(
        initial=initial,
        abort=abort,
        move=move,
        florets=florets,
        stage_of=stage_of,
        edges=tuple(edges),
    )

    # Task factors: layers share the base columns by reference (and the
    # background column stays the single shared object). World-level
    # overrides apply to both layers; aware-only overrides (the reaction's
    # forcings) map onto the aware indices.
    tf = model.task_factors
    tg = model.task_graph
    columns: list[dict[int, np.ndarray]] = [{}]
    for k in tg.tasks:
        col = {0: tf.base_table(k, 0)}
        for i in model.task_map.indicative_phases(k):
            table = tf.base_table(k, i)
            col[i] = table
            col[m + i] = table
        columns.append(col)
    doubled_tf = TaskFactors(tg.within, tg.cross, columns)
    base_task_overrides = list(tf._overrides)
    entries = []
    for win, k, ph, repl in base_task_overrides:
        entries.append((win, k, ph, repl))
        if ph >= 1:
            entries.append((win, k, m + ph, repl))
    aware_task_overrides = list(aware_model.task_factors._overrides)[len(base_task_overrides):]
    for win, k, ph, repl in aware_task_overrides:
        if ph == 0:
            raise InterventionError(
                "aware-layer overrides cannot touch the shared background column"
            )
        entries.append((win, k, m + ph, repl))
    if entries:
        doubled_tf = doubled_tf.with_overrides(entries)

    task_sets = ((),) + tuple(model.task_map.task_sets[1:]) + tuple(model.task_map.task_sets[1:])
    success = SuccessSpec(
        phases=tuple(model.success.phases) + tuple(m + p for p in model.success.phases),
        required_tasks=model.success.required_tasks,
    )
    layer_of = (0,) + tuple(range(1, m + 1)) + tuple(range(1, m + 1))

    return dataclasses.replace(
        model,
        title=f"{model.title} (doubled)",
        phase_graph=doubled_graph,
        task_map=BipartiteMap(task_sets=task_sets),
        phase_factors=doubled_pf,
        task_factors=doubled_tf,
        success=success,
        layer_of=layer_of,
    )


def fold_marginal(model: PlotModel, marginal) -> np.ndarray:
    """Sum a doubled model's phase marginal back onto the base phases
    (unaware + aware mass per phase). Base-model marginals pass through."""
    marginal = np.asarray(marginal, dtype=float)
    if model.layer_of is None:
        return marginal.copy()
    if len(marginal) != len(model.layer_of):
        raise ValueError(
            f"marginal has {len(marginal)} entries, expected {len(model.layer_of)}"
        )
    out = np.zeros(max(model.layer_of) + 1)
    for idx, base_phase in enumerate(model.layer_of):
        out[base_phase] += marginal[idx]
    return out


# ---------------------------------------------------------------------------
# The agent as a decision maker
# ---------------------------------------------------------------------------


def adversary_seu(
    model: PlotModel,
    reaction: Reaction | None,
    u_a: float,
    horizon: int,
    start_belief: BeliefState | None = None,
    enact_at: int | None = None,
) -> float:
    """The agent's expected utility of adopting a reaction.

    ``model`` is the world as the agent faces it (normally the intervened
    model, arrest events included). Outcomes score success at 1, foiled
    but free at u_a, disabled at 0.
    """
    if start_belief is None:
        start_belief = init_belief(model)
    if horizon < start_belief.slice_index:
        raise ValueError(
            f"horizon {horizon} precedes the belief's time {start_belief.slice_index}"
        )
    if enact_at is None:
        enact_at = start_belief.slice_index + 1
    reacted = apply_reaction(model, reaction, enact_at)
    outcomes = classify_outcomes(reacted, start_belief, horizon)
    return 1.0 * outcomes.success + u_a * outcomes.foiled_free


def best_response(
    model: PlotModel,
    d: Intervention,
    profile: AdversaryProfile,
    latent: tuple[float, tuple[str, ...] | None],
    start_belief: BeliefState | None = None,
    horizon: int | None = None,
) -> Reaction:
    """The reaction maximizing the agent's expected utility for one latent
    scenario (u_a, available reaction ids; None = profile capability).
    Ties keep catalogue order, so a catalogue listing "continue unchanged"
    first makes the status quo win ties."""
    u_a, available_ids = latent
    if available_ids is None:
        available = profile.available_reactions(d.kind, model)
    else:
        wanted = set(available_ids)
        available = tuple(r for r in model.reactions if r.id in wanted)
    if not available:
        raise InterventionError(f"no reactions available against {d.id!r}")
    if horizon is None:
        horizon = model.horizon
    intervened = apply_unintelligent(model, d)
    best = None
    best_score = -1.0
    for reaction in available:
        score = adversary_seu(
            intervened, reaction, u_a, horizon, start_belief, enact_at=d.t0
        )
        if score > best_score:
            best, best_score = reaction, score
    return best


def reaction_distribution(
    model: PlotModel,
    d: Intervention,
    profile: AdversaryProfile,
    start_belief: BeliefState | None = None,
    horizon: int | None = None,
) -> np.ndarray:
    """The defender's distribution over the agent's reaction, given the
    agent noticed the intervention: best responses marginalized over the
    utility scenarios, trembled per the profile. Indexed by the model's
    reaction catalogue (unavailable reactions keep weight 0)."""
    available = profile.available_reactions(d.kind, model)
    weights = np.zeros(len(model.reactions))
    if not available:
        return weights
    index_of = {r.id: idx for idx, r in enumerate(model.reactions)}
    k_avail = len(available)
    for u_a, scenario_weight in profile.u_a_scenarios:
        chosen = best_response(
            model, d, profile, (u_a, None), start_belief=start_belief, horizon=horizon
        )
        if profile.epsilon > 0.0 and k_avail > 1:
            for reaction in available:
                share = (
                    1.0 - profile.epsilon
                    if reaction.id == chosen.id
                    else profile.epsilon / (k_avail - 1)
                )
                weights[index_of[reaction.id]] += scenario_weight * share
        else:
            weights[index_of[chosen.id]] += scenario_weight
    return weights


def _discovery_for(profile: AdversaryProfile, d: Intervention) -> tuple[float, float]:
    """(betrayal probability, local-discovery probability) for one
    intervention under a profile. Direct and disabling actions are always
    noticed and always reveal the defender's awareness."""
    if d.kind in ("direct", "disabling"):
        return 1.0, 1.0
    entry = profile.discovery.get(d.id, {})
    betrayal = float(entry.get("betrayal_prob", d.betrayal_prob))
    local = float(entry.get("local_prob", LOCAL_DISCOVERY_DEFAULTS[d.kind]))
    return betrayal, local


def _discovery_series(d: Intervention, betrayal: float, T: int) -> np.ndarray | None:
    """Per-step plot-discovery probabilities. The earliest the agent can
    know is the step after enactment. Direct and disabling actions reveal
    everything at once; covert channels leak at a constant rate."""
    series = np.zeros(T)
    if d.kind in ("direct", "disabling"):
        if d.t0 + 1 <= T:
            series[d.t0] = 1.0
    elif betrayal > 0.0:
        series[d.t0:] = betrayal
    if not np.any(series):
        return None
    return series


def apply_intelligent(
    model: PlotModel,
    d: Intervention,
    profile: AdversaryProfile,
    start_belief: BeliefState | None = None,
    horizon: int | None = None,
) -> list[tuple[PlotModel, float]]:
    """The mixture of models the defender should score an intervention
    against, one component per (local discovery outcome, reaction):

    * with the local-discovery probability, the agent notices and adopts a
      reaction drawn from :func:`reaction_distribution`;
    * otherwise behavior continues unchanged;
    * independently, every component is doubled for plot discovery when
      the intervention carries a betrayal risk (certainty, for direct and
      disabling actions), with the profile's plot-discovery reaction on
      the aware layer.

    Weights sum to 1. The null intervention returns the unmodified model
    as a singleton mixture.
    """
    if d.kind == "null":
        return [(model, 1.0)]
    intervened = apply_unintelligent(model, d)
    betrayal, local = _discovery_for(profile, d)
    pi = _discovery_series(d, betrayal, model.horizon)
    aware_reaction = (
        model.reaction(profile.plot_discovery_reaction)
        if profile.plot_discovery_reaction is not None
        else None
    )

    def finished(component: PlotModel, label: str) -> PlotModel:
        titled = dataclasses.replace(component, title=f"{model.title} | {label}")
        if pi is None:
            return titled
        return double(titled, pi, aware_reaction)

    rho = None
    if local > 0.0:
        rho = reaction_distribution(model, d, profile, start_belief, horizon)
        if not rho.any():  # nothing in the catalogue to react with
            local = 0.0

    components: list[tuple[PlotModel, float]] = []
    if local < 1.0:
        components.append((finished(intervened, f"{d.id}, unnoticed"), 1.0 - local))
    if local > 0.0:
        for reaction, weight in zip(model.reactions, rho):
            if weight <= 0.0:
                continue
            reacted = apply_reaction(intervened, reaction, d.t0)
            components.append(
                (finished(reacted, f"{d.id} vs {reaction.id}"), local * float(weight))
            )
    return components
