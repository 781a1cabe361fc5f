"""Adversarial response: reactions, phase doubling, discovery mixtures.

Core claims:
- doubling carves the per-step discovery probability out first (the
  unaware-to-aware transition is exactly pi) and routes the remaining mass
  by the ordinary law, with aware-layer behavior starting the next step;
- a doubled model with pi = 0 filters and predicts exactly like its base
  once the marginal is folded, and a timid aware layer (abort 1) drains to
  inactive in one step;
- aware-layer overrides may reshape behavior but never observation tables;
- best responses maximize the agent's expected utility with catalogue-
  order tie-breaking, and the trembling hand spreads epsilon across the
  losing reactions;
- direct and disabling interventions are always noticed and always reveal
  plot awareness, whatever the profile says;
- apply_intelligent returns a weighted mixture (weights sum to 1) and the
  null intervention passes the model through untouched.
"""

import json

import numpy as np
import pytest
from pytest import approx

from helpers import tiny_document, tiny_model
from plotsmith.ara import (
    LOCAL_DISCOVERY_DEFAULTS,
    AdversaryProfile,
    Reaction,
    adversary_seu,
    apply_intelligent,
    apply_reaction,
    best_response,
    double,
    fold_marginal,
    is_doubled,
    reaction_distribution,
)
from plotsmith.causal import FactorPatch, Intervention, apply_unintelligent
from plotsmith.errors import InterventionError
from plotsmith.factors import transition_matrix
from plotsmith.filtering import filter_series, init_belief, phase_marginal, predict_forward
from plotsmith.schema import parse_model
from plotsmith.seu import classify_outcomes, lift_belief


def _parse(document: dict):
    return parse_model(json.dumps(document))


def _reactive_model():
    """Tiny model with a three-reaction catalogue for choice tests."""
    doc = tiny_document()
    doc["reactions"] = [
        {"id": "continue", "description": "no behavior change"},
        {
            "id": "scatter",
            "description": "pause and lie low",
            "patch": {"phase_overrides": [["abort", 1, 0.3], ["abort", 2, 0.3]]},
        },
        {
            "id": "rush",
            "description": "accelerate to the next phase",
            "patch": {"phase_overrides": [["move", 1, 0.9]]},
        },
    ]
    doc["adversary_profiles"]["default"]["capability"] = {}
    doc["adversary_profiles"]["default"]["plot_discovery_reaction"] = "scatter"
    return _parse(doc)


# == 1. Profiles =============================================================


class TestAdversaryProfile:
    def test_scenario_weights_must_normalize(self):
        with pytest.raises(InterventionError, match="sum to"):
            AdversaryProfile(id="p", u_a_scenarios=((0.5, 0.6), (0.7, 0.6)))

    def test_u_a_range_enforced(self):
        with pytest.raises(InterventionError, match="outside"):
            AdversaryProfile(id="p", u_a_scenarios=((1.5, 1.0),))

    def test_epsilon_range_enforced(self):
        with pytest.raises(InterventionError, match="epsilon"):
            AdversaryProfile(id="p", u_a_scenarios=((0.5, 1.0),), epsilon=1.0)

    def test_capability_defaults_to_whole_catalogue(self):
        model = _reactive_model()
        profile = AdversaryProfile(id="p", u_a_scenarios=((0.5, 1.0),))
        available = profile.available_reactions("blocking", model)
        assert [r.id for r in available] == ["continue", "scatter", "rush"]

    def test_capability_restricts_in_catalogue_order(self):
        model = _reactive_model()
        profile = AdversaryProfile(
            id="p",
            u_a_scenarios=((0.5, 1.0),),
            capability={"blocking": ("rush", "continue")},
        )
        available = profile.available_reactions("blocking", model)
        assert [r.id for r in available] == ["continue", "rush"]


# == 2. Reactions ============================================================


class TestApplyReaction:
    def test_overlay_from_notice_time(self):
        model = _reactive_model()
        reacted = apply_reaction(model, model.reaction("scatter"), t0=3)
        assert reacted.phase_factors.abort(2, 1) == approx(0.05)
        assert reacted.phase_factors.abort(3, 1) == approx(0.3)
        assert reacted.phase_factors.abort(6, 1) == approx(0.3)

    def test_none_and_empty_reactions_are_identity(self):
        model = _reactive_model()
        assert apply_reaction(model, None, t0=2) is model
        assert apply_reaction(model, model.reaction("continue"), t0=2) is model

    def test_reaction_overrides_intervention_quietly(self, recwarn):
        model = _reactive_model()
        intervened = apply_unintelligent(model, model.intervention("curfew"))
        reacted = apply_reaction(intervened, model.reaction("rush"), t0=3)
        # the reaction shadows the curfew's move override from t0 on, and
        # the intended later-wins composition emits no warning
        assert reacted.phase_factors.move(2, 1) == approx(0.05)
        assert reacted.phase_factors.move(3, 1) == approx(0.9)
        assert not [w for w in recwarn.list if "overlaps" in str(w.message)]


# == 3. Doubling =============================================================


class TestDouble:
    def test_structure_of_doubled_graph(self):
        model = tiny_model()
        doubled = double(model, 0.1)
        assert is_doubled(doubled)
        assert doubled.m == 2 * model.m
        g = doubled.phase_graph
        assert g.labels == ("dormant", "planning-", "strike-prep-", "planning*", "strike-prep*")
        assert g.edges[1] == (2, 3)  # base edge plus the awareness cross edge
        assert g.edges[2] == (4,)
        assert g.edges[3] == (4,)  # aware mirror of 1 -> 2
        assert g.edges[4] == ()
        assert g.stage_of == ("", "u1", "u2", "a1", "a2")
        assert doubled.layer_of == (0, 1, 2, 1, 2)
        assert doubled.title.endswith("(doubled)")

    def test_initial_mass_starts_unaware(self):
        model = tiny_model()
        doubled = double(model, 0.25)
        initial = doubled.phase_factors.initial()
        assert initial == approx([0.2, 0.7, 0.1, 0.0, 0.0])

    def test_kernel_carves_discovery_first(self):
        model = tiny_model()
        pi = 0.2
        doubled = double(model, pi)
        mat = transition_matrix(doubled, 1)
        base = transition_matrix(model, 1)
        for i in (1, 2):
            # crossing to the aware twin is exactly pi
            assert mat[i, i + 2] == approx(pi, abs=1e-12)
            # the remaining mass follows the base law scaled by 1 - pi
            assert mat[i, 0] == approx((1.0 - pi) * base[i, 0], abs=1e-12)
            assert mat[i, i] == approx((1.0 - pi) * base[i, i], abs=1e-12)
        assert mat[1, 2] == approx((1.0 - pi) * base[1, 2], abs=1e-12)
        # aware rows mirror the base law on aware indices
        assert mat[3, 0] == approx(base[1, 0], abs=1e-12)
        assert mat[3, 4] == approx(base[1, 2], abs=1e-12)
        assert mat.sum(axis=1) == approx(np.ones(5), abs=1e-12)

    def test_pi_series_resolved_per_step(self):
        model = tiny_model()
        pi = np.array([0.0, 0.5, 0.0, 0.0, 0.0, 0.0])
        doubled = double(model, pi)
        assert transition_matrix(doubled, 1)[1, 3] == approx(0.0, abs=1e-12)
        assert transition_matrix(doubled, 2)[1, 3] == approx(0.5, abs=1e-12)
        assert transition_matrix(doubled, 3)[1, 3] == approx(0.0, abs=1e-12)

    def test_pi_out_of_range_rejected(self):
        model = tiny_model()
        with pytest.raises(InterventionError, match="outside"):
            double(model, 1.5)

    def test_zero_pi_folds_back_to_base(self):
        model = tiny_model()
        doubled = double(model, 0.0)
        base_series = predict_forward(model, init_belief(model), 6)
        doubled_series = predict_forward(doubled, init_belief(doubled), 6)
        for base_marg, doubled_marg in zip(base_series, doubled_series):
            assert fold_marginal(doubled, doubled_marg) == approx(
                base_marg, abs=1e-12
            )

    def test_zero_pi_filtering_matches_base(self):
        model = tiny_model()
        doubled = double(model, 0.0)
        obs = [[0, 0], [1, 0], [1, 1]]
        base_beliefs = filter_series(model, obs)
        doubled_beliefs = filter_series(doubled, obs)
        for b, d in zip(base_beliefs, doubled_beliefs):
            assert fold_marginal(doubled, phase_marginal(doubled, d)) == approx(
                phase_marginal(model, b), abs=1e-12
            )
        assert doubled_beliefs[-1].log_evidence == approx(
            base_beliefs[-1].log_evidence, abs=1e-12
        )

    def test_timid_aware_layer_drains_in_one_step(self):
        model = _reactive_model()
        timid = Reaction(
            id="abort-now",
            patch=FactorPatch(
                phase_overrides=(("abort", 1, 1.0), ("abort", 2, 1.0))
            ),
        )
        doubled = double(model, 0.3, timid)
        mat = transition_matrix(doubled, 2)
        assert mat[3, 0] == approx(1.0)
        assert mat[4, 0] == approx(1.0)
        # one-step mass balance: aware inflow at t+1 equals pi * unaware mass
        series = predict_forward(doubled, init_belief(doubled), 3)
        for step in range(len(series) - 1):
            unaware_mass = series[step][1] + series[step][2]
            aware_next = series[step + 1][3] + series[step + 1][4]
            assert aware_next == approx(0.3 * unaware_mass, abs=1e-12)

    def test_aware_emission_override_rejected(self):
        model = tiny_model()
        leaky = Reaction(
            id="mask",
            patch=FactorPatch(
                emission_tables=((1, ((0.5, 0.5), (0.5, 0.5))),)
            ),
        )
        with pytest.raises(InterventionError, match="intensity channel is shared"):
            double(model, 0.2, leaky)

    def test_task_tables_shared_between_layers(self):
        model = tiny_model()
        doubled = double(model, 0.1)
        tf = doubled.task_factors
        # aware phase m + i aliases the same column object as base phase i
        assert tf.base_table(1, 3) is tf.base_table(1, 1)
        assert tf.base_table(2, 4) is tf.base_table(2, 2)
        assert doubled.intensity_factors is model.intensity_factors

    def test_base_task_overrides_reach_both_layers(self):
        model = tiny_model()
        blocked = apply_unintelligent(
            model,
            Intervention(
                id="force",
                kind="blocking",
                t0=1,
                patch=FactorPatch(block=((2, 2, 0),)),
            ),
        )
        doubled = double(blocked, 0.1)
        assert doubled.task_factors.prob(1, 2, 2, 0) == 0.0
        assert doubled.task_factors.prob(1, 2, 4, 0) == 0.0

    def test_success_spec_covers_both_layers(self):
        model = tiny_model()
        doubled = double(model, 0.1)
        assert doubled.success.phases == (2, 4)
        assert doubled.success.required_tasks == model.success.required_tasks

    def test_serialization_of_doubled_model_refused(self):
        from plotsmith.schema import document_of

        doubled = double(tiny_model(), 0.1)
        with pytest.raises(Exception, match="doubled"):
            document_of(doubled)


# == 4. fold_marginal and lift_belief ========================================


class TestFoldAndLift:
    def test_base_model_passthrough_copies(self):
        model = tiny_model()
        marg = np.array([0.5, 0.3, 0.2])
        out = fold_marginal(model, marg)
        assert out == approx(marg)
        assert out is not marg

    def test_doubled_fold_sums_layers(self):
        doubled = double(tiny_model(), 0.2)
        marg = np.array([0.1, 0.2, 0.3, 0.25, 0.15])
        assert fold_marginal(doubled, marg) == approx([0.1, 0.45, 0.45])

    def test_length_mismatch_raises(self):
        doubled = double(tiny_model(), 0.2)
        with pytest.raises(ValueError, match="entries"):
            fold_marginal(doubled, np.ones(3))

    def test_lift_pads_aware_layer_with_zeros(self):
        model = tiny_model()
        doubled = double(model, 0.2)
        belief = init_belief(model)
        lifted = lift_belief(doubled, belief)
        assert lifted.weights.size == (doubled.m + 1) << doubled.n
        assert float(lifted.weights[belief.weights.size :].sum()) == 0.0
        assert lifted.weights[: belief.weights.size] == approx(belief.weights)

    def test_lift_rejects_mismatched_base_belief(self):
        model = tiny_model()
        doubled = double(model, 0.2)
        with pytest.raises(ValueError, match="states"):
            lift_belief(model, init_belief(doubled))


# == 5. Agent decision making ===============================================


class TestAgentChoice:
    def test_adversary_seu_formula(self):
        model = _reactive_model()
        intervened = apply_unintelligent(model, model.intervention("curfew"))
        outcomes = classify_outcomes(intervened, init_belief(intervened), 6)
        got = adversary_seu(intervened, None, 0.25, 6)
        assert got == approx(outcomes.success + 0.25 * outcomes.foiled_free, abs=1e-12)

    def test_adversary_seu_horizon_check(self):
        model = _reactive_model()
        belief = filter_series(model, [[0, 0], [0, 0], [0, 0]])[-1]
        with pytest.raises(ValueError, match="precedes"):
            adversary_seu(model, None, 0.5, 2, start_belief=belief)

    def test_best_response_ties_keep_catalogue_order(self):
        doc = tiny_document()
        doc["reactions"] = [
            {"id": "first", "patch": {"phase_overrides": [["abort", 1, 0.3]]}},
            {"id": "twin", "patch": {"phase_overrides": [["abort", 1, 0.3]]}},
        ]
        doc["adversary_profiles"]["default"]["capability"] = {}
        doc["adversary_profiles"]["default"]["plot_discovery_reaction"] = "first"
        model = _parse(doc)
        profile = AdversaryProfile(id="p", u_a_scenarios=((0.5, 1.0),))
        chosen = best_response(model, model.intervention("curfew"), profile, (0.5, None))
        assert chosen.id == "first"

    def test_best_response_prefers_higher_utility(self):
        model = _reactive_model()
        d = model.intervention("raid")
        # facing an arrest event, a timid agent (u_a near 1) walks away;
        # scatter dodges more arrest mass than pressing on
        profile = model.profile("default")
        chosen = best_response(model, d, profile, (0.95, None))
        scores = {
            r.id: adversary_seu(
                apply_unintelligent(model, d), r, 0.95, model.horizon, enact_at=d.t0
            )
            for r in model.reactions
        }
        assert scores[chosen.id] == approx(max(scores.values()))

    def test_no_available_reactions_raises(self):
        model = _reactive_model()
        profile = AdversaryProfile(
            id="p", u_a_scenarios=((0.5, 1.0),), capability={"blocking": ()}
        )
        with pytest.raises(InterventionError, match="no reactions available"):
            best_response(model, model.intervention("curfew"), profile, (0.5, None))

    def test_reaction_distribution_is_point_mass_without_trembling(self):
        model = _reactive_model()
        profile = AdversaryProfile(id="p", u_a_scenarios=((0.9, 1.0),))
        rho = reaction_distribution(model, model.intervention("curfew"), profile)
        assert float(rho.sum()) == approx(1.0)
        assert np.count_nonzero(rho) == 1

    def test_trembling_hand_spreads_epsilon(self):
        model = _reactive_model()
        profile = AdversaryProfile(
            id="p", u_a_scenarios=((0.9, 1.0),), epsilon=0.1
        )
        rho = reaction_distribution(model, model.intervention("curfew"), profile)
        assert float(rho.sum()) == approx(1.0)
        assert sorted(rho) == approx([0.05, 0.05, 0.9])

    def test_capability_keeps_unavailable_reactions_at_zero(self):
        model = _reactive_model()
        profile = AdversaryProfile(
            id="p",
            u_a_scenarios=((0.9, 1.0),),
            capability={"blocking": ("continue", "scatter")},
            epsilon=0.2,
        )
        rho = reaction_distribution(model, model.intervention("curfew"), profile)
        assert rho[2] == 0.0  # rush is not available
        assert float(rho.sum()) == approx(1.0)

    def test_scenario_mixture_averages_best_responses(self):
        model = _reactive_model()
        profile = AdversaryProfile(
            id="p", u_a_scenarios=((0.05, 0.5), (0.95, 0.5))
        )
        rho = reaction_distribution(model, model.intervention("raid"), profile)
        assert float(rho.sum()) == approx(1.0)


# == 6. Intelligent mixtures =================================================


class TestApplyIntelligent:
    def _profile(self, **kwargs):
        base = dict(
            id="p",
            u_a_scenarios=((0.5, 1.0),),
            plot_discovery_reaction=None,
        )
        base.update(kwargs)
        return AdversaryProfile(**base)

    def test_null_returns_model_unchanged(self):
        model = _reactive_model()
        from plotsmith.causal import NULL_INTERVENTION

        mixture = apply_intelligent(model, NULL_INTERVENTION, self._profile())
        assert mixture == [(model, 1.0)]

    def test_weights_sum_to_one(self):
        model = _reactive_model()
        for ident in ("curfew", "raid"):
            mixture = apply_intelligent(
                model, model.intervention(ident), self._profile()
            )
            assert sum(w for _, w in mixture) == approx(1.0, abs=1e-12)

    def test_covert_intervention_with_no_betrayal_stays_single(self):
        model = _reactive_model()
        d = Intervention(id="wiretap", kind="clarifying", t0=2)
        mixture = apply_intelligent(model, d, self._profile())
        assert len(mixture) == 1
        component, weight = mixture[0]
        assert weight == approx(1.0)
        assert not is_doubled(component)
        assert "unnoticed" in component.title

    def test_blocking_discovery_defaults_to_noticed(self):
        model = _reactive_model()
        assert LOCAL_DISCOVERY_DEFAULTS["blocking"] == 1.0
        mixture = apply_intelligent(
            model, model.intervention("curfew"), self._profile()
        )
        # local discovery 1 leaves no unnoticed component
        assert all("vs" in component.title for component, _ in mixture)

    def test_direct_intervention_always_noticed_and_doubled(self):
        model = _reactive_model()
        profile = self._profile(
            discovery={"raid": {"betrayal_prob": 0.0, "local_prob": 0.0}},
            plot_discovery_reaction="scatter",
        )
        mixture = apply_intelligent(model, model.intervention("raid"), profile)
        # the profile's zero overrides are ignored for direct actions
        for component, _ in mixture:
            assert is_doubled(component)
            assert "vs" in component.title
            assert "(doubled)" in component.title

    def test_profile_discovery_overrides_covert_kinds(self):
        model = _reactive_model()
        profile = self._profile(
            discovery={"curfew": {"local_prob": 0.4, "betrayal_prob": 0.0}}
        )
        mixture = apply_intelligent(model, model.intervention("curfew"), profile)
        unnoticed = [w for c, w in mixture if "unnoticed" in c.title]
        assert unnoticed == [approx(0.6)]
        assert sum(w for _, w in mixture) == approx(1.0)

    def test_betrayal_doubles_every_component(self):
        model = _reactive_model()
        profile = self._profile(plot_discovery_reaction="scatter")
        # tiny curfew carries betrayal_prob 0.2
        mixture = apply_intelligent(model, model.intervention("curfew"), profile)
        assert all(is_doubled(component) for component, _ in mixture)

    def test_reacted_components_enact_at_t0(self):
        model = _reactive_model()
        profile = self._profile(
            discovery={"curfew": {"local_prob": 1.0, "betrayal_prob": 0.0}}
        )
        mixture = apply_intelligent(model, model.intervention("curfew"), profile)
        labels = [component.title for component, _ in mixture]
        assert any("curfew vs" in label for label in labels)
