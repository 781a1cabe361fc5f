"""Inference and decision support for staged-progression plot models.

A plot model couples a phase chain (how far an adversary has progressed,
with an explicit inactive phase) to per-phase binary task variables and
noisy task intensities. This package provides exact joint filtering over
the factored state, causal surgery for candidate interventions,
adversarial scoring that anticipates the agent's reaction, trajectory
simulation, a document format, a CLI, and an HTTP service.
"""

from .ara import (
    AdversaryProfile,
    Reaction,
    adversary_seu,
    apply_intelligent,
    apply_reaction,
    best_response,
    double,
    fold_marginal,
    reaction_distribution,
)
from .causal import (
    NULL_INTERVENTION,
    FactorPatch,
    Intervention,
    apply_unintelligent,
    do_block_tasks,
    graph_invariance_check,
)
from .errors import (
    BlockScalingError,
    InterventionError,
    ModelFormatError,
    ModelValidationError,
    PlotsmithError,
    StateSpaceCapError,
)
from .filtering import (
    BeliefState,
    JointEvaluator,
    filter_series,
    filter_step,
    init_belief,
    map_phase,
    phase_marginal,
    predict_forward,
)
from .model import (
    BipartiteMap,
    Finding,
    PhaseGraph,
    PlotModel,
    SuccessSpec,
    TaskGraph,
    ensure_valid,
    joint_state_space,
    validate,
)
from .reports import WhatifResult, whatif_predictions
from .schema import (
    canonical_json,
    document_of,
    load_demo,
    load_demo_observations,
    load_model,
    parse_model,
    serialize_model,
)
from .seu import (
    MixtureComponent,
    OutcomeDistribution,
    RankedIntervention,
    classify_outcomes,
    defender_seu,
    lift_belief,
    rank_interventions,
)
from .simulate import Trajectory, sample_batch, sample_trajectory

__version__ = "0.1.0"

__all__ = [
    "AdversaryProfile",
    "BeliefState",
    "BipartiteMap",
    "BlockScalingError",
    "FactorPatch",
    "Finding",
    "Intervention",
    "InterventionError",
    "JointEvaluator",
    "MixtureComponent",
    "ModelFormatError",
    "ModelValidationError",
    "NULL_INTERVENTION",
    "OutcomeDistribution",
    "PhaseGraph",
    "PlotModel",
    "PlotsmithError",
    "RankedIntervention",
    "Reaction",
    "StateSpaceCapError",
    "SuccessSpec",
    "TaskGraph",
    "Trajectory",
    "WhatifResult",
    "adversary_seu",
    "apply_intelligent",
    "apply_reaction",
    "apply_unintelligent",
    "best_response",
    "canonical_json",
    "classify_outcomes",
    "defender_seu",
    "do_block_tasks",
    "document_of",
    "double",
    "ensure_valid",
    "filter_series",
    "filter_step",
    "fold_marginal",
    "graph_invariance_check",
    "init_belief",
    "joint_state_space",
    "lift_belief",
    "load_demo",
    "load_demo_observations",
    "load_model",
    "map_phase",
    "parse_model",
    "phase_marginal",
    "predict_forward",
    "rank_interventions",
    "reaction_distribution",
    "sample_batch",
    "sample_trajectory",
    "serialize_model",
    "validate",
    "whatif_predictions",
]
