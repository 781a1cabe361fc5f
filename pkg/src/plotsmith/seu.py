"""Outcome classification and defender-side expected utility.

Every analysis bottoms out in three exhaustive outcomes:

* ``success``:         the plot completes (the model's success predicate
                        held at some step; absorption happens at the first
                        hit and is irreversible);
* ``foiled_disabled``: the agent was taken out of play by a direct
                        intervention's arrest/kill event;
* ``foiled_free``:     everything else by the horizon, the agent aborted
                        (inactive phase) or simply ran out of time
                        unfinished.

The defender scores an outcome split as
``1 * foiled_disabled + u_d * foiled_free + 0 * success`` with
0 < u_d < 1, so disabling the agent is the unit-utility outcome and a
completed plot is worthless. Classification is linear in the belief, so a
mixture of models is scored as the weighted average of its components,
never collapsed into a single averaged model.

Horizons throughout are absolute slice indices on the model timeline (so
``horizon=T`` propagates to the end), not step counts.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .filtering import BeliefState, JointEvaluator
from .model import PlotModel, SuccessSpec


@dataclass(frozen=True)
class OutcomeDistribution:
    success: float
    foiled_disabled: float
    foiled_free: float

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.success, self.foiled_disabled, self.foiled_free)

    def total(self) -> float:
        return self.success + self.foiled_disabled + self.foiled_free


@dataclass(frozen=True)
class MixtureComponent:
    """One branch of an adversarial mixture, for report breakdowns."""

    label: str
    weight: float
    outcomes: OutcomeDistribution


@dataclass(frozen=True)
class RankedIntervention:
    """One row of a defender report: candidate, outcome split, score."""

    intervention_id: str
    outcomes: OutcomeDistribution
    seu: float
    rank: int = 0
    components: tuple[MixtureComponent, ...] = ()


def lift_belief(model: PlotModel, belief: BeliefState) -> BeliefState:
    """Embed a base-model belief into a doubled model's state space.

    Doubled models index unaware phases exactly like the base model's
    active phases, so lifting pads zero mass onto the aware layer. A belief
    already sized for the model passes through unchanged.
    """
    size = (model.m + 1) << model.n
    if belief.weights.size == size:
        return belief
    if model.layer_of is None:
        raise ValueError(
            f"belief has {belief.weights.size} states but the model expects {size}"
        )
    padded = np.zeros(size)
    padded[: belief.weights.size] = belief.weights
    return BeliefState(belief.t, padded, belief.log_evidence)


def _classify_single(
    model: PlotModel,
    belief: BeliefState,
    horizon: int,
    success: SuccessSpec,
    disable_events,
) -> OutcomeDistribution:
    belief = lift_belief(model, belief)
    if horizon < belief.slice_index:
        raise ValueError(
            f"horizon {horizon} precedes the belief's time {belief.slice_index}"
        )
    ev = JointEvaluator(model)
    theta_count = 1 << model.n
    size = (model.m + 1) * theta_count

    success_mask = np.zeros(size, dtype=bool)
    for phase in success.phases:
        base = phase * theta_count
        for theta in range(theta_count):
            if success.holds(phase, theta):
                success_mask[base + theta] = True
    active_mask = np.zeros(size, dtype=bool)
    active_mask[theta_count:] = True

    events: dict[int, list[float]] = {}
    for t_event, delta in disable_events:
        events.setdefault(int(t_event), []).append(float(delta))

    weights = belief.weights.copy()
    p_success = 0.0
    p_disabled = 0.0
    start = belief.slice_index
    for t_cur in range(start, horizon + 1):
        hit = float(weights[success_mask].sum())
        if hit > 0.0:
            p_success += hit
            weights[success_mask] = 0.0
        for delta in events.get(t_cur, ()):  # arrests reach active mass only
            caught = delta * float(weights[active_mask].sum())
            p_disabled += caught
            weights[active_mask] *= 1.0 - delta
        if t_cur < horizon:
            weights = ev.propagate(weights, t_cur + 1)
    return OutcomeDistribution(
        success=p_success,
        foiled_disabled=p_disabled,
        foiled_free=float(weights.sum()),
    )


def classify_outcomes(
    model_or_mixture,
    belief: BeliefState,
    horizon: int,
    success: SuccessSpec | None = None,
    disable_events=None,
) -> OutcomeDistribution:
    """Exact outcome split of a belief propagated to the absolute horizon.

    Per step, in order: success mass is absorbed first (a completed plot
    cannot be interrupted retroactively), then any arrest events scheduled
    for that time thin the remaining active-phase mass, then the belief
    advances one step. Whatever survives the horizon, inactive or active
    but unfinished, counts as foiled with the agent free.

    Accepts a single model or a mixture ``[(model, weight), ...]``; a
    mixture's distribution is the weighted average of its components'.
    """
    if isinstance(model_or_mixture, list):
        s = d = f = 0.0
        for component, weight in model_or_mixture:
            part = classify_outcomes(component, belief, horizon, success, disable_events)
            s += weight * part.success
            d += weight * part.foiled_disabled
            f += weight * part.foiled_free
        return OutcomeDistribution(s, d, f)
    model = model_or_mixture
    return _classify_single(
        model,
        belief,
        horizon,
        success if success is not None else model.success,
        disable_events if disable_events is not None else model.disable_events,
    )


def defender_seu(outcomes, u_d: float) -> float:
    """Defender expected utility of an outcome split.

    Accepts an OutcomeDistribution or a plain (success, foiled_disabled,
    foiled_free) triple. ``u_d`` weights the foiled-but-free outcome and
    must lie strictly between the success (0) and disabled (1) utilities.
    """
    if not 0.0 < u_d < 1.0:
        raise ValueError(f"u_d must lie strictly in (0, 1), got {u_d!r}")
    if isinstance(outcomes, OutcomeDistribution):
        _, disabled, free = outcomes.as_tuple()
    else:
        _, disabled, free = outcomes
    return 1.0 * disabled + u_d * free


def rank_interventions(
    model: PlotModel,
    candidates,
    profile,
    u_d: float,
    horizon: int | None = None,
    start_belief: BeliefState | None = None,
) -> list[RankedIntervention]:
    """Score candidate interventions (adversarial treatment) and rank them
    by defender SEU, best first.

    ``candidates`` may mix intervention ids and Intervention objects. The
    do-nothing candidate is prepended when absent, so every report carries
    the status-quo baseline; candidates are re-timed to enact on the first
    step after the starting belief. Ties keep candidate order.
    """
    from . import ara  # deferred: ara builds on this module
    from .causal import NULL_INTERVENTION
    from .filtering import init_belief

    if start_belief is None:
        start_belief = init_belief(model)
    if horizon is None:
        horizon = model.horizon
    if not 0.0 < u_d < 1.0:
        raise ValueError(f"u_d must lie strictly in (0, 1), got {u_d!r}")
    if isinstance(profile, str):
        profile = model.profile(profile)

    resolved = [
        model.intervention(c) if isinstance(c, str) else c for c in candidates
    ]
    if not any(d.kind == "null" for d in resolved):
        resolved.insert(0, NULL_INTERVENTION)

    enact_at = start_belief.slice_index + 1
    rows = []
    for d in resolved:
        timed = d.retimed(enact_at, model.horizon)
        mixture = ara.apply_intelligent(
            model, timed, profile, start_belief=start_belief, horizon=horizon
        )
        parts = []
        s = dis = f = 0.0
        for component, weight in mixture:
            outcomes = classify_outcomes(component, start_belief, horizon)
            parts.append(MixtureComponent(component.title, weight, outcomes))
            s += weight * outcomes.success
            dis += weight * outcomes.foiled_disabled
            f += weight * outcomes.foiled_free
        averaged = OutcomeDistribution(s, dis, f)
        rows.append(
            RankedIntervention(
                d.id, averaged, defender_seu(averaged, u_d), components=tuple(parts)
            )
        )
    rows.sort(key=lambda r: -r.seu)
    return [
        RankedIntervention(r.intervention_id, r.outcomes, r.seu, i + 1, r.components)
        for i, r in enumerate(rows)
    ]
