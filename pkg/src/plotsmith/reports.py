"""What-if projections and score reports shared by the CLI and the service.

A what-if run answers: given everything observed up to a cut point, how do
the phase marginals evolve with no action versus with a candidate action?
Both projections start at the cut itself, repeating the filtered belief as
their first row, so the two series stay row-aligned and the difference at
the cut is exactly zero. The intervened side is the weighted fold of the
adversarial mixture (reaction and discovery components), so what is
plotted is the defender's actual predictive, not a single-component
optimistic view.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import ara
from .causal import Intervention, apply_unintelligent
from .filtering import BeliefState, filter_series, predict_forward
from .model import PlotModel
from .seu import RankedIntervention, lift_belief


@dataclass(frozen=True)
class WhatifResult:
    """Row-aligned projections from the cut point to the horizon.

    times: absolute slice indices, first entry = the cut slice.
    idle/intervened: one phase marginal (length m+1) per time.
    diff: intervened minus idle, same shape.
    """

    times: tuple[int, ...]
    labels: tuple[str, ...]
    idle: tuple[tuple[float, ...], ...]
    intervened: tuple[tuple[float, ...], ...]
    diff: tuple[tuple[float, ...], ...]


def _mixture_forecast(mixture, belief: BeliefState, steps: int) -> list[np.ndarray]:
    """Fold each component's forward prediction back onto the base phases
    and average by component weight."""
    acc: list[np.ndarray] | None = None
    for component, weight in mixture:
        lifted = lift_belief(component, belief)
        rows = predict_forward(component, lifted, steps)
        folded = [ara.fold_marginal(component, row) for row in rows]
        if acc is None:
            acc = [weight * row for row in folded]
        else:
            for i, row in enumerate(folded):
                acc[i] = acc[i] + weight * row
    assert acc is not None
    return acc


def whatif_predictions(
    model: PlotModel,
    observations,
    cut: int,
    intervention: Intervention | str | None,
    profile=None,
    horizon: int | None = None,
) -> WhatifResult:
    """Project idle and intervened phase marginals from a cut point.

    ``observations`` is the full series; only the first ``cut`` rows are
    conditioned on. The intervention (id or object, None for none) is
    re-timed to enact on the first step after the cut. With a profile the
    intervened side is the adversarial mixture; without one the action is
    applied at face value, as if the agent never notices.
    """
    if horizon is None:
        horizon = model.horizon
    if not 0 <= cut <= len(observations):
        raise ValueError(f"cut {cut} outside the observed range 0..{len(observations)}")
    if horizon > model.horizon:
        raise ValueError(f"horizon {horizon} exceeds the model horizon {model.horizon}")

    belief = filter_series(model, list(observations)[:cut])[-1]
    start = belief.slice_index
    if horizon < start:
        raise ValueError(f"horizon {horizon} precedes the cut slice {start}")
    steps = horizon - start

    idle = predict_forward(model, belief, steps)

    if intervention is None:
        intervened = [row.copy() for row in idle]
    else:
        d = model.intervention(intervention) if isinstance(intervention, str) else intervention
        d = d.retimed(start + 1, model.horizon)
        if profile is not None:
            prof = model.profile(profile) if isinstance(profile, str) else profile
            mixture = ara.apply_intelligent(model, d, prof, start_belief=belief, horizon=horizon)
        else:
            mixture = [(apply_unintelligent(model, d), 1.0)]
        intervened = _mixture_forecast(mixture, belief, steps)

    times = tuple(range(start, horizon + 1))
    return WhatifResult(
        times=times,
        labels=model.phase_graph.labels,
        idle=tuple(tuple(float(v) for v in row) for row in idle),
        intervened=tuple(tuple(float(v) for v in row) for row in intervened),
        diff=tuple(
            tuple(float(a - b) for a, b in zip(row_i, row_0))
            for row_i, row_0 in zip(intervened, idle)
        ),
    )


# ---------------------------------------------------------------------------
# Tabular exports
# ---------------------------------------------------------------------------


def marginal_series_csv(times, labels, rows, value_column: str = "probability") -> str:
    """Long-form CSV (t, phase_label, value): one row per time and phase,
    the exact feed for stacked-bar charts."""
    lines = [f"t,phase_label,{value_column}"]
    for t, row in zip(times, rows):
        for label, value in zip(labels, row):
            lines.append(f"{t},{label},{float(value)!r}")
    return "\n".join(lines) + "\n"


def beliefs_csv(model: PlotModel, beliefs) -> str:
    """Filtered phase marginals as long-form CSV: row t conditions on the
    first t observations, so t=0 is the prior over the first slice."""
    from .filtering import phase_marginal

    times = [b.t for b in beliefs]
    rows = [phase_marginal(model, b) for b in beliefs]
    return marginal_series_csv(times, model.phase_graph.labels, rows)


def whatif_csvs(result: WhatifResult) -> dict[str, str]:
    """The three aligned what-if tables keyed by file stem."""
    return {
        "idle_predictions": marginal_series_csv(result.times, result.labels, result.idle),
        "intervened_predictions": marginal_series_csv(
            result.times, result.labels, result.intervened
        ),
        "prediction_diff": marginal_series_csv(
            result.times, result.labels, result.diff, value_column="delta"
        ),
    }


def seu_rows(ranked) -> list[dict]:
    """JSON-friendly rows of a score report, rank order."""
    rows = []
    for r in ranked:
        rows.append(
            {
                "intervention_id": r.intervention_id,
                "p_success": r.outcomes.success,
                "p_foiled_disabled": r.outcomes.foiled_disabled,
                "p_foiled_free": r.outcomes.foiled_free,
                "score": r.seu,
                "rank": r.rank,
                "components": [
                    {
                        "label": c.label,
                        "weight": c.weight,
                        "p_success": c.outcomes.success,
                        "p_foiled_disabled": c.outcomes.foiled_disabled,
                        "p_foiled_free": c.outcomes.foiled_free,
                    }
                    for c in r.components
                ],
            }
        )
    return rows


def seu_csv(ranked) -> str:
    """A score report as CSV, one row per candidate, rank order."""
    lines = ["intervention_id,p_success,p_foiled_disabled,p_foiled_free,score,rank"]
    for r in ranked:
        lines.append(
            f"{r.intervention_id},{r.outcomes.success!r},{r.outcomes.foiled_disabled!r},"
            f"{r.outcomes.foiled_free!r},{r.seu!r},{r.rank}"
        )
    return "\n".join(lines) + "\n"


__all__ = [
    "WhatifResult",
    "whatif_predictions",
    "marginal_series_csv",
    "beliefs_csv",
    "whatif_csvs",
    "seu_rows",
    "seu_csv",
    "RankedIntervention",
]
