"""Document format: parsing, canonical serialization, CSV codecs.

Core claims:
- parse and serialize are mutually inverse: serializing a parsed document
  and re-parsing reproduces the identical canonical text (a fixpoint),
  for the hand-written, bundled and randomly generated models alike;
- structural problems raise ModelFormatError carrying the dotted document
  path, including unknown keys, bad shapes, duplicate ids and task table
  columns for non-indicative phases;
- sharing is structural after parsing: non-indicative task columns alias
  the background column and stage-mates share floret tables by identity;
- canonical JSON output is key-sorted, newline-terminated and stable;
- observation and trajectory CSV round-trip, and observation rows must
  carry consecutive 1-based times.
"""

import json

import numpy as np
import pytest
from pytest import approx

from helpers import random_tiny_model, tiny_document, tiny_model
from plotsmith.causal import FactorPatch, Intervention
from plotsmith.errors import ModelFormatError
from plotsmith.schema import (
    FORMAT,
    canonical_json,
    document_of,
    load_demo,
    observations_csv,
    parse_model,
    parse_observations_csv,
    serialize_model,
    trajectory_csv,
)
from plotsmith.simulate import sample_trajectory


def _parse(document: dict):
    return parse_model(json.dumps(document))


def _format_error(document: dict) -> ModelFormatError:
    with pytest.raises(ModelFormatError) as info:
        _parse(document)
    return info.value


# == 1. Round trips ==========================================================


class TestRoundTrip:
    def test_tiny_document_fixpoint(self):
        text = serialize_model(tiny_model())
        assert serialize_model(parse_model(text)) == text

    def test_demo_asset_is_canonical(self, demo_model):
        from importlib import resources

        raw = (
            resources.files("plotsmith")
            .joinpath("assets/bombing_plot.json")
            .read_text(encoding="utf-8")
        )
        assert serialize_model(demo_model) == raw

    def test_random_models_fixpoint(self):
        rng = np.random.default_rng(2024)
        for _ in range(20):
            model = random_tiny_model(rng)
            text = serialize_model(model)
            assert serialize_model(parse_model(text)) == text

    def test_round_trip_preserves_semantics(self):
        model = tiny_model()
        again = parse_model(serialize_model(model))
        assert again.title == model.title
        assert again.horizon == model.horizon
        assert again.phase_graph == model.phase_graph
        assert again.task_graph == model.task_graph
        assert again.task_map == model.task_map
        assert again.success == model.success
        assert [d.id for d in again.interventions] == [
            d.id for d in model.interventions
        ]
        assert again.phase_factors.initial() == approx(
            model.phase_factors.initial()
        )

    def test_patches_survive_round_trip(self):
        model = tiny_model()
        again = parse_model(serialize_model(model))
        d = again.intervention("curfew")
        assert d.patch.phase_overrides == (("move", 1, 0.05),)
        assert d.betrayal_prob == approx(0.2)

    def test_doubled_model_refused(self):
        from plotsmith.ara import double

        with pytest.raises(ValueError, match="doubled"):
            document_of(double(tiny_model(), 0.1))

    def test_overridden_model_refused(self):
        from plotsmith.causal import apply_unintelligent

        model = tiny_model()
        patched = apply_unintelligent(model, model.intervention("curfew"))
        with pytest.raises(ValueError, match="overrides"):
            document_of(patched)


# == 2. Structural sharing ===================================================


class TestStructuralSharing:
    def test_non_indicative_columns_alias_background(self):
        model = tiny_model()
        tf = model.task_factors
        assert tf.base_table(2, 1) is tf.base_table(2, 0)

    def test_non_indicative_column_in_document_rejected(self):
        doc = tiny_document()
        doc["factors"]["tasks"]["2"]["1"] = [0.4, 0.4]
        err = _format_error(doc)
        assert "not indicative" in str(err)
        assert err.path == "factors.tasks.2.1"

    def test_task_sets_determine_permitted_columns(self, demo_model):
        tf = demo_model.task_factors
        for k in demo_model.task_graph.tasks:
            background = tf.base_table(k, 0)
            for phase in demo_model.phase_graph.active_phases:
                if not demo_model.task_map.is_indicative(k, phase):
                    assert tf.base_table(k, phase) is background


# == 3. Format errors carry paths ===========================================


class TestFormatErrors:
    def test_invalid_json(self):
        with pytest.raises(ModelFormatError, match="invalid JSON"):
            parse_model("{not json")

    def test_wrong_format_tag(self):
        doc = tiny_document()
        doc["format"] = "plot-model/9"
        err = _format_error(doc)
        assert err.path == "format"
        assert FORMAT in str(err)

    def test_unknown_top_level_key(self):
        doc = tiny_document()
        doc["bonus"] = {}
        err = _format_error(doc)
        assert "bonus" in str(err)

    def test_unknown_section_key_with_path(self):
        doc = tiny_document()
        doc["phases"]["extra"] = 1
        err = _format_error(doc)
        assert err.path == "phases.extra"

    def test_missing_required_key(self):
        doc = tiny_document()
        del doc["phases"]["initial"]
        err = _format_error(doc)
        assert err.path == "phases.initial"
        assert "missing" in str(err)

    def test_non_integer_map_key(self):
        doc = tiny_document()
        doc["phases"]["edges"]["two"] = []
        err = _format_error(doc)
        assert err.path.startswith("phases.edges")

    def test_out_of_range_phase_key(self):
        doc = tiny_document()
        doc["phases"]["edges"]["7"] = []
        err = _format_error(doc)
        assert "7" in str(err)

    def test_wrong_row_count(self):
        doc = tiny_document()
        doc["factors"]["tasks"]["1"]["w0"] = [0.1, 0.2, 0.3]
        err = _format_error(doc)
        assert err.path == "factors.tasks.1.w0"
        assert "expected 2 rows" in str(err)

    def test_missing_background_column(self):
        doc = tiny_document()
        del doc["factors"]["tasks"]["1"]["w0"]
        err = _format_error(doc)
        assert err.path == "factors.tasks.1.w0"

    def test_duplicate_intervention_id(self):
        doc = tiny_document()
        doc["interventions"].append(dict(doc["interventions"][0]))
        err = _format_error(doc)
        assert "duplicate" in str(err)

    def test_unknown_profile_reaction(self):
        doc = tiny_document()
        doc["adversary_profiles"]["default"]["plot_discovery_reaction"] = "ghost"
        err = _format_error(doc)
        assert "ghost" in str(err)

    def test_unknown_discovery_intervention(self):
        doc = tiny_document()
        doc["adversary_profiles"]["default"]["discovery"] = {"ghost": {}}
        err = _format_error(doc)
        assert "ghost" in str(err)

    def test_intervention_kind_errors_become_format_errors(self):
        doc = tiny_document()
        doc["interventions"][0]["kind"] = "sideways"
        err = _format_error(doc)
        assert "sideways" in str(err)

    def test_gaussian_alphabet_parent_rejected(self):
        doc = tiny_document()
        doc["factors"]["intensities"]["1"] = {
            "kind": "gaussian",
            "rows": [[0.0, 1.0], [2.0, 1.0]],
        }
        doc["tasks"]["intensity_parents"] = {"2": [1]}
        err = _format_error(doc)
        assert "categorical" in str(err)

    def test_series_length_must_match_horizon(self):
        doc = tiny_document()
        doc["factors"]["phase"]["move_prob"]["1"] = [0.3, 0.2]
        err = _format_error(doc)
        assert "6" in str(err)


# == 4. Canonical JSON =======================================================


class TestCanonicalJson:
    def test_sorted_compact_newline_terminated(self):
        text = canonical_json({"b": 1, "a": [1.5, 2]})
        assert text == '{"a":[1.5,2],"b":1}\n'

    def test_nan_rejected(self):
        with pytest.raises(ValueError):
            canonical_json({"x": float("nan")})

    def test_serialization_is_deterministic(self):
        model = tiny_model()
        assert serialize_model(model) == serialize_model(tiny_model())


# == 5. CSV codecs ===========================================================


class TestCsv:
    def test_observations_round_trip(self):
        rows = [(1, 0), (0, 1), (1, 1)]
        text = observations_csv(rows)
        assert text.splitlines()[0] == "t,z1,z2"
        parsed = parse_observations_csv(text)
        assert parsed == [(1.0, 0.0), (0.0, 1.0), (1.0, 1.0)]

    def test_integral_floats_render_bare(self):
        text = observations_csv([(1.0, 2.5)])
        assert text.splitlines()[1] == "1,1,2.5"

    def test_time_column_must_count_from_one(self):
        with pytest.raises(ModelFormatError, match="expected t=1"):
            parse_observations_csv("t,z1\n2,0\n")
        with pytest.raises(ModelFormatError, match="expected t=2"):
            parse_observations_csv("t,z1\n1,0\n5,1\n")

    def test_header_must_lead_with_t(self):
        with pytest.raises(ModelFormatError, match='"t"'):
            parse_observations_csv("z1,z2\n0,0\n")

    def test_column_count_checked(self):
        with pytest.raises(ModelFormatError, match="columns"):
            parse_observations_csv("t,z1,z2\n1,0\n")

    def test_trajectory_csv_layout(self):
        model = tiny_model()
        traj = sample_trajectory(model, seed=5)
        text = trajectory_csv(traj)
        lines = text.splitlines()
        assert lines[0] == "t,phase,theta1,theta2,z1,z2"
        assert len(lines) == model.horizon + 1
        first = lines[1].split(",")
        assert first[0] == "1"
        assert first[1] == str(traj.phases[0])
        assert first[2] == str(traj.thetas[0] & 1)

    def test_demo_observations_parse(self, demo_model, demo_observations):
        assert len(demo_observations) > 0
        assert all(len(row) == demo_model.n for row in demo_observations)
