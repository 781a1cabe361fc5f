"""Build the bundled demo document and observation series.

Writes src/plotsmith/assets/bombing_plot.json (canonical form) and
src/plotsmith/assets/demo_observations.csv, then round-trips both through
the parser and prints the belief summary at the documentation cut point.
Run from the repository root:

    python3 tools/build_demo.py
"""

from __future__ import annotations

import datetime
import pathlib
import sys

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))

from plotsmith import ensure_valid, filter_series, parse_model, phase_marginal  # noqa: E402
from plotsmith.schema import canonical_json, observations_csv, serialize_model  # noqa: E402

ASSETS = pathlib.Path(__file__).resolve().parents[1] / "src" / "plotsmith" / "assets"

HORIZON = 40

PHASE_LABELS = [
    "inactive",
    "radicalized",
    "training",
    "target-selected",
    "financed",
    "armed",
    "ready",
]

TASK_LABELS = [
    "attend-gatherings",
    "meet-contacts",
    "travel-abroad",
    "train-skills",
    "rehearse",
    "move-money",
    "scout-target",
    "gather-materials",
]


def flat(rows: int, p: float) -> list[float]:
    return [p] * rows

def persistence(base: float, parent_lift: list[float], persist_lift: float) -> list[float]:
    """Rows over (within parents low bits, previous-value high bit)."""
    n_within = len(parent_lift)
    rows = []
    for prev in (0, 1):
        for cfg in range(1 << n_within):
            p = base + (persist_lift if prev else 0.0)
            for b, lift in enumerate(parent_lift):
                if (cfg >> b) & 1:
                    p += lift
            rows.append(round(p, 6))
    # config index = within bits + (prev << n_within); emit in index order
    ordered = [0.0] * (2 << n_within)
    i = 0
    for prev in (0, 1):
        for cfg in range(1 << n_within):
            ordered[cfg + (prev << n_within)] = rows[i]
            i += 1
    return ordered


def build_document() -> dict:
    emission = [[0.97, 0.03], [0.08, 0.92]]
    sharp = [[0.995, 0.005], [0.02, 0.98]]

    monday = datetime.date(2024, 1, 1)
    time_labels = [(monday + datetime.timedelta(weeks=k)).isoformat() for k in range(HORIZON)]

    return {
        "format": "plot-model/1",
        "meta": {
            "name": "bombing-plot-demo",
            "version": "1",
            "time_step": "week",
            "horizon": HORIZON,
            "time_labels": time_labels,
        },
        "phases": {
            "labels": PHASE_LABELS,
            "edges": {
                "1": [2, 4],
                "2": [5],
                "3": [6],
                "4": [3],
                "5": [6],
                "6": [3],
            },
            "stages": {
                "s1": [1],
                "s2": [2],
                "staging": [3, 5],
                "s4": [4],
                "s6": [6],
            },
            "initial": [0.2, 0.8, 0.0, 0.0, 0.0, 0.0, 0.0],
        },
        "tasks": {
            "labels": TASK_LABELS,
            "within_parents": {
                "2": [1],
                "3": [1, 2],
                "4": [2],
                "5": [4],
                "6": [4, 5],
                "7": [6],
                "8": [6, 7],
            },
            "cross_parents": {str(k): [k] for k in range(1, 9)},
            "intensity_parents": {},
            "task_sets": {
                "1": [1, 2, 3],
                "2": [3, 4],
                "3": [2, 7],
                "4": [2, 6],
                "5": [6, 8],
                "6": [5, 7, 8],
            },
        },
        "factors": {
            "phase": {
                "abort_prob": {"1": 0.03, "2": 0.04, "3": 0.03, "4": 0.04, "5": 0.03, "6": 0.02},
                "move_prob": {"1": 0.22, "2": 0.25, "3": 0.20, "4": 0.25, "5": 0.20, "6": 0.05},
                "florets": {
                    "s1": {"2": 0.7, "4": 0.3},
                    "s2": {"5": 1.0},
                    "staging": {"6": 1.0},
                    "s4": {"3": 1.0},
                    "s6": {"3": 1.0},
                },
            },
            "tasks": {
                "1": {"w0": flat(2, 0.02), "1": flat(2, 0.80)},
                "2": {
                    "w0": flat(4, 0.02),
                    "1": persistence(0.72, [0.03], 0.10),
                    "3": persistence(0.80, [0.03], 0.10),
                    "4": persistence(0.76, [0.03], 0.10),
                },
                "3": {
                    "w0": flat(8, 0.02),
                    "1": persistence(0.68, [0.03, 0.03], 0.10),
                    "2": persistence(0.84, [0.03, 0.03], 0.08),
                },
                "4": {"w0": flat(4, 0.02), "2": persistence(0.82, [0.03], 0.10)},
                "5": {"w0": flat(4, 0.02), "6": persistence(0.80, [0.04], 0.10)},
                "6": {
                    "w0": flat(8, 0.02),
                    "4": persistence(0.82, [0.03, 0.03], 0.08),
                    "5": persistence(0.70, [0.03, 0.03], 0.10),
                },
                "7": {
                    "w0": flat(4, 0.02),
                    "3": persistence(0.82, [0.03], 0.10),
                    "6": persistence(0.76, [0.03], 0.10),
                },
                "8": {
                    "w0": flat(8, 0.02),
                    "5": persistence(0.82, [0.03, 0.03], 0.08),
                    "6": persistence(0.76, [0.03, 0.03], 0.08),
                },
            },
            "intensities": {
                str(k): {"kind": "categorical", "alphabet": 2, "rows": emission}
                for k in range(1, 9)
            },
        },
        "success_spec": {"phases": [6], "required_tasks": {"7": 1, "8": 1}},
        "interventions": [
            {
                "id": "befriend-informant",
                "kind": "clarifying",
                "description": "turn a community source; task signals sharpen",
                "t0": 1,
                "betrayal_prob": 0.05,
                "patch": {"emission_tables": {"1": sharp, "3": sharp, "5": sharp, "7": sharp}},
            },
            {
                "id": "confiscate-passport",
                "kind": "blocking",
                "description": "remove travel papers; the recruitment phase collapses",
                "t0": 1,
                "betrayal_prob": 0.15,
                "patch": {
                    "phase_overrides": [["abort", 1, 1.0]],
                    "block": [[1, 3, 0]],
                },
            },
            {
                "id": "raid",
                "kind": "direct",
                "description": "strike the cell at the chosen time",
                "t0": 1,
                "disable_prob": 0.7,
            },
            {
                "id": "extradite",
                "kind": "disabling",
                "description": "attempt removal of the principal from the country",
                "t0": 1,
                "removal_prob": 0.85,
            },
        ],
        "reactions": [
            {"id": "hold-course", "description": "continue as planned"},
            {
                "id": "improvise-training",
                "description": "replace the blocked route with local preparation",
                "patch": {"phase_overrides": [["abort", 1, 0.10], ["move", 1, 0.32]]},
            },
            {
                "id": "abort-plot",
                "description": "stand down and disperse",
                "patch": {"phase_overrides": [["abort", i, 1.0] for i in range(1, 7)]},
            },
        ],
        "adversary_profiles": {
            "default": {
                "u_a_scenarios": [[0.3, 0.5], [0.7, 0.5]],
                "epsilon": 0.0,
                "plot_discovery_reaction": "abort-plot",
            }
        },
    }


# Six weeks of recruitment-looking signal: the three early tasks fire, the
# later ones stay quiet.
OBSERVATIONS = [
    (1, 0, 0, 0, 0, 0, 0, 0),
    (1, 1, 0, 0, 0, 0, 0, 0),
    (0, 1, 1, 0, 0, 0, 0, 0),
    (1, 1, 0, 0, 0, 0, 0, 0),
    (1, 0, 1, 0, 0, 0, 0, 0),
    (1, 1, 1, 0, 0, 0, 0, 0),
]


def main() -> None:
    document = build_document()
    model = ensure_valid(parse_model(canonical_json(document)))
    # ship the canonical fixpoint so serialize(parse(asset)) == asset
    text = serialize_model(model)
    assert serialize_model(parse_model(text)) == text

    ASSETS.mkdir(parents=True, exist_ok=True)
    (ASSETS / "bombing_plot.json").write_text(text, encoding="utf-8")
    (ASSETS / "demo_observations.csv").write_text(observations_csv(OBSERVATIONS), encoding="utf-8")

    beliefs = filter_series(model, OBSERVATIONS)
    marginal = phase_marginal(model, beliefs[-1])
    print(f"model ok: {model.title} m={model.m} n={model.n} T={model.horizon}")
    print("belief after", len(OBSERVATIONS), "obs:")
    for label, p in zip(model.phase_graph.labels, marginal):
        print(f"  {label:16s} {p:.4f}")
    print("log evidence:", beliefs[-1].log_evidence)


if __name__ == "__main__":
    main()
