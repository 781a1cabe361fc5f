"""Factor tables: lookup semantics, the transition law, and overrides.

Core claims:
- config_index packs within-slice parent bits below cross-slice parent bits
  with the first listed parent least significant;
- the phase transition law routes abort/stay/move mass exactly as
  documented and the inactive phase absorbs;
- scalar-or-series entries resolve per time step and reads past the end of
  a series hold its final value;
- overrides are window-scoped, later entries win inside overlaps, and an
  OverrideOverlapWarning flags user-stacked collisions;
- non-indicative task columns resolve to the background column by
  reference, so one table edit shows through everywhere it should;
- trajectory_log_density agrees with the factored per-slice densities and
  returns -inf (never raises) on impossible trajectories.
"""

import json
import math
import warnings

import numpy as np
import pytest
from pytest import approx

from helpers import tiny_document, tiny_model
from plotsmith.factors import (
    OverrideOverlapWarning,
    Window,
    bit,
    config_index,
    intensity_slice_density,
    is_naive,
    is_regular,
    phase_transition,
    task_slice_density,
    trajectory_log_density,
    transition_matrix,
)
from plotsmith.schema import parse_model


def _parse(document: dict):
    return parse_model(json.dumps(document))


# == 1. Bit packing ==========================================================


class TestConfigIndex:
    def test_within_bits_are_low(self):
        # within parents (1, 3), cross parents (2,): bit order 1,3 then 2
        theta_now = 0b101  # tasks 1 and 3 engaged now
        theta_prev = 0b010  # task 2 engaged previously
        cfg = config_index(theta_now, theta_prev, (1, 3), (2,))
        assert cfg == 0b111
        cfg = config_index(0b100, 0b000, (1, 3), (2,))
        assert cfg == 0b010  # only within parent 3 set -> second bit

    def test_no_parents_is_row_zero(self):
        assert config_index(0b111, 0b111, (), ()) == 0

    def test_bit_reads_task_positions(self):
        assert bit(0b0110, 2) == 1
        assert bit(0b0110, 3) == 1
        assert bit(0b0110, 1) == 0
        assert bit(0b0110, 4) == 0


# == 2. Transition law =======================================================


class TestPhaseTransition:
    def test_inactive_absorbs(self):
        model = tiny_model()
        assert phase_transition(model, 1, 0, 0) == 1.0
        assert phase_transition(model, 1, 0, 1) == 0.0
        assert phase_transition(model, 1, 0, 2) == 0.0

    def test_active_row_decomposition(self):
        model = tiny_model()
        # phase 1: abort 0.05, move 0.3, floret {2: 1.0}
        assert phase_transition(model, 1, 1, 0) == approx(0.05)
        assert phase_transition(model, 1, 1, 1) == approx(0.95 * 0.7)
        assert phase_transition(model, 1, 1, 2) == approx(0.95 * 0.3)

    def test_off_floret_target_gets_zero(self):
        model = tiny_model()
        # phase 2 has no edges: everything is abort-or-stay
        assert phase_transition(model, 1, 2, 1) == 0.0
        assert phase_transition(model, 1, 2, 2) == approx(0.9)
        assert phase_transition(model, 1, 2, 0) == approx(0.1)

    def test_matrix_rows_normalize(self):
        model = tiny_model()
        mat = transition_matrix(model, 1)
        assert mat.shape == (3, 3)
        assert mat.sum(axis=1) == approx(np.ones(3))

    def test_matrix_matches_pointwise_law(self, demo_model):
        mat = transition_matrix(demo_model, 1)
        for i in range(demo_model.m + 1):
            for j in range(demo_model.m + 1):
                assert mat[i, j] == approx(
                    phase_transition(demo_model, 1, i, j), abs=1e-15
                )


# == 3. Series resolution ====================================================


class TestSeriesFactors:
    def _series_model(self):
        doc = tiny_document()
        doc["factors"]["phase"]["move_prob"]["1"] = [0.3, 0.2, 0.1, 0.1, 0.1, 0.0]
        return _parse(doc)

    def test_series_resolve_per_time(self):
        model = self._series_model()
        assert model.phase_factors.move(1, 1) == approx(0.3)
        assert model.phase_factors.move(2, 1) == approx(0.2)
        assert model.phase_factors.move(6, 1) == approx(0.0)

    def test_reads_past_series_end_hold_final_value(self):
        model = self._series_model()
        assert model.phase_factors.move(7, 1) == approx(0.0)
        assert model.phase_factors.move(50, 1) == approx(0.0)

    def test_time_variation_widens_checkable_times(self):
        static = tiny_model()
        varying = self._series_model()
        assert list(static.phase_factors.checkable_times(6)) == [1]
        assert list(varying.phase_factors.checkable_times(6)) == [1, 2, 3, 4, 5, 6]

    def test_signature_distinguishes_times_only_when_varying(self):
        static = tiny_model()
        varying = self._series_model()
        assert static.phase_factors.signature(1) == static.phase_factors.signature(5)
        assert varying.phase_factors.signature(1) != varying.phase_factors.signature(2)


# == 4. Overrides ============================================================


class TestOverrides:
    def test_phase_override_applies_inside_window_only(self):
        model = tiny_model()
        pf = model.phase_factors.with_overrides([(Window(2, 4), "move", 1, 0.9)])
        assert pf.move(1, 1) == approx(0.3)
        assert pf.move(2, 1) == approx(0.9)
        assert pf.move(4, 1) == approx(0.9)
        assert pf.move(5, 1) == approx(0.3)
        # the original object is untouched
        assert model.phase_factors.move(3, 1) == approx(0.3)

    def test_floret_override_replaces_whole_table(self):
        model = tiny_model()
        pf = model.phase_factors.with_overrides(
            [(Window(1, 6), "floret", 1, {2: 1.0})]
        )
        assert pf.floret(3, 1) == {2: approx(1.0)}

    def test_later_override_wins_and_warns(self):
        model = tiny_model()
        pf = model.phase_factors.with_overrides([(Window(1, 6), "move", 1, 0.5)])
        with pytest.warns(OverrideOverlapWarning):
            pf = pf.with_overrides([(Window(3, 6), "move", 1, 0.0)])
        assert pf.move(2, 1) == approx(0.5)
        assert pf.move(3, 1) == approx(0.0)

    def test_disjoint_windows_do_not_warn(self):
        model = tiny_model()
        pf = model.phase_factors.with_overrides([(Window(1, 2), "move", 1, 0.5)])
        with warnings.catch_warnings():
            warnings.simplefilter("error", OverrideOverlapWarning)
            pf = pf.with_overrides([(Window(3, 6), "move", 1, 0.0)])
        assert pf.move(2, 1) == approx(0.5)
        assert pf.move(4, 1) == approx(0.0)

    def test_task_override_shape_checked(self):
        model = tiny_model()
        with pytest.raises(ValueError, match="rows"):
            model.task_factors.with_overrides([(Window(1, 6), 1, 1, np.array([0.5]))])

    def test_task_override_windowed(self):
        model = tiny_model()
        tf = model.task_factors.with_overrides(
            [(Window(2, 3), 1, 1, np.array([0.0, 0.0]))]
        )
        assert tf.prob(1, 1, 1, 0) == approx(0.7)
        assert tf.prob(2, 1, 1, 0) == approx(0.0)
        assert tf.prob(4, 1, 1, 0) == approx(0.7)

    def test_intensity_override_windowed(self):
        model = tiny_model()
        repl = np.array([[0.5, 0.5], [0.5, 0.5]])
        itf = model.intensity_factors.with_overrides([(Window(2, 2), 1, repl)])
        assert itf.density(1, 1, 0, 0, [0, 0]) == approx(0.9)
        assert itf.density(2, 1, 0, 0, [0, 0]) == approx(0.5)
        assert itf.density(3, 1, 0, 0, [0, 0]) == approx(0.9)


# == 5. Task columns =========================================================


class TestTaskColumns:
    def test_non_indicative_phase_aliases_background(self):
        model = tiny_model()
        tf = model.task_factors
        # task 2 is indicative only for phase 2
        assert tf.base_table(2, 1) is tf.base_table(2, 0)
        assert tf.base_table(2, 2) is not tf.base_table(2, 0)

    def test_slice_density_uses_background_for_non_indicative(self):
        model = tiny_model()
        # phase 1: task 2 uses w0 = [0.05, 0.1]; task 1 uses column "1"
        # theta_now = 01 (task 1 on), theta_prev = 00
        p = task_slice_density(model, 1, 0b01, 0b00, 1)
        # task 1: within (), cross (1) -> cfg 0 -> p_on 0.7
        # task 2: within (1,) -> cfg 1 -> w0 p_on 0.1 -> off prob 0.9
        assert p == approx(0.7 * 0.9)

    def test_slice_density_sums_to_one(self, demo_model):
        for phase in (0, 1, demo_model.m):
            total = sum(
                task_slice_density(demo_model, 1, theta, 0, phase)
                for theta in range(1 << demo_model.n)
            )
            assert total == approx(1.0, abs=1e-12)


# == 6. Intensity tables =====================================================


class TestIntensities:
    def test_row_index_mixed_radix(self):
        doc = tiny_document()
        doc["tasks"]["intensity_parents"] = {"2": [1]}
        doc["factors"]["intensities"]["2"]["rows"] = [
            [0.9, 0.1],
            [0.3, 0.7],
            [0.6, 0.4],
            [0.1, 0.9],
        ]
        model = _parse(doc)
        itf = model.intensity_factors
        assert itf.row_count(2) == 4
        # row = theta_k + 2 * z_parent_symbol
        assert itf.row_index(2, 0, [0, 0]) == 0
        assert itf.row_index(2, 1, [0, 0]) == 1
        assert itf.row_index(2, 0, [1, 0]) == 2
        assert itf.row_index(2, 1, [1, 5]) == 3

    def test_out_of_alphabet_symbol_has_zero_mass(self):
        model = tiny_model()
        assert model.intensity_factors.density(1, 1, 2, 0, [2, 0]) == 0.0
        assert model.intensity_factors.density(1, 1, -1, 0, [-1, 0]) == 0.0

    def test_gaussian_density(self):
        doc = tiny_document()
        doc["factors"]["intensities"]["2"] = {
            "kind": "gaussian",
            "rows": [[0.0, 1.0], [3.0, 0.5]],
        }
        model = _parse(doc)
        d = model.intensity_factors.density(1, 2, 0.0, 0, [0, 0.0])
        assert d == approx(1.0 / math.sqrt(2.0 * math.pi))
        d = model.intensity_factors.density(1, 2, 3.0, 1, [0, 3.0])
        assert d == approx(1.0 / (0.5 * math.sqrt(2.0 * math.pi)))

    def test_joint_emission_factorizes(self):
        model = tiny_model()
        z = [1, 0]
        got = intensity_slice_density(model, 1, z, 0b01)
        assert got == approx(0.8 * 0.85)


# == 7. Whole-trajectory density ============================================


class TestTrajectoryDensity:
    def test_matches_factored_slices(self):
        model = tiny_model()
        phases = [1, 1, 2]
        thetas = [0b01, 0b11, 0b11]
        zs = [[1, 0], [1, 1], [1, 1]]
        expected = math.log(model.phase_factors.initial()[1])
        prev_theta = 0
        for t, (w, theta, z) in enumerate(zip(phases, thetas, zs), start=1):
            if t > 1:
                expected += math.log(phase_transition(model, t, phases[t - 2], w))
            expected += math.log(task_slice_density(model, t, theta, prev_theta, w))
            expected += math.log(intensity_slice_density(model, t, z, theta))
            prev_theta = theta
        assert trajectory_log_density(model, phases, thetas, zs) == approx(expected)

    def test_impossible_path_is_neg_inf(self):
        model = tiny_model()
        # phase 2 -> 1 has no edge, so this path has zero probability
        value = trajectory_log_density(
            model, [2, 1], [0, 0], [[0, 0], [0, 0]]
        )
        assert value == -math.inf

    def test_length_mismatch_raises(self):
        model = tiny_model()
        with pytest.raises(ValueError):
            trajectory_log_density(model, [1], [0, 0], [[0, 0], [0, 0]])


# == 8. Structural predicates ================================================


class TestPredicates:
    def test_is_naive_detects_parent_free_background(self):
        doc = tiny_document()
        doc["factors"]["tasks"]["1"]["w0"] = [0.1, 0.1]
        doc["factors"]["tasks"]["2"]["w0"] = [0.05, 0.05]
        assert is_naive(_parse(doc))
        assert not is_naive(tiny_model())

    def test_is_regular_checks_within_connectivity(self):
        # phase 2's tasks {1, 2} are linked by task 2's within-parent 1
        assert is_regular(tiny_model())
        doc = tiny_document()
        doc["tasks"]["within_parents"] = {}
        doc["factors"]["tasks"]["2"] = {"w0": [0.05], "2": [0.5]}
        assert not is_regular(_parse(doc))
