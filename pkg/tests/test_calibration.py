"""Unified scoring, selection, and the two endpoint strategies."""

import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pathcalib import (
    DimensionMismatch,
    MissingGold,
    alpha_sweep,
    calibrate,
    consistency_counts,
    default_alpha_grid,
    select_answer,
    self_consistency,
    self_verification,
    unified_score,
    unified_scores,
)

from calib_helpers import make_ensemble, make_verdicts


class TestConsistencyCounts:
    def test_counts_include_self(self):
        ens = make_ensemble(["a", "a", "b", "b", "c"])
        assert consistency_counts(ens) == [2, 2, 2, 2, 1]

    def test_unanimous(self):
        ens = make_ensemble(["x", "x", "x"])
        assert consistency_counts(ens) == [3, 3, 3]

    def test_all_distinct(self):
        ens = make_ensemble(["a", "b", "c"])
        assert consistency_counts(ens) == [1, 1, 1]


class TestUnifiedScore:
    def test_worked_example(self):
        # alpha 0.5, N 10, M 3, n 6, m 2: 0.5*0.6 + 0.5*(2/3)
        assert unified_score(6, 2, 10, 3, 0.5) == pytest.approx(0.6333333333, abs=1e-9)

    def test_alpha_one_is_pure_agreement(self):
        assert unified_score(6, 2, 10, 3, 1.0) == pytest.approx(0.6)

    def test_alpha_zero_is_pure_verification(self):
        assert unified_score(6, 2, 10, 3, 0.0) == pytest.approx(2 / 3)

    def test_bounds_rejected(self):
        with pytest.raises(ValueError):
            unified_score(6, 2, 10, 3, 1.5)
        with pytest.raises(ValueError):
            unified_score(6, 2, 10, 3, -0.1)

    @given(
        n_paths=st.integers(min_value=1, max_value=20),
        step_budget=st.integers(min_value=1, max_value=8),
        alpha=st.floats(min_value=0.0, max_value=1.0),
        data=st.data(),
    )
    def test_always_in_unit_interval(self, n_paths, step_budget, alpha, data):
        n = data.draw(st.integers(min_value=1, max_value=n_paths))
        m = data.draw(st.integers(min_value=0, max_value=step_budget))
        d = unified_score(n, m, n_paths, step_budget, alpha)
        assert 0.0 <= d <= 1.0

    @given(
        alpha=st.floats(min_value=0.0, max_value=1.0),
        n=st.integers(min_value=1, max_value=9),
        m=st.integers(min_value=0, max_value=2),
    )
    def test_monotone_in_both_signals(self, alpha, n, m):
        base = unified_score(n, m, 10, 3, alpha)
        assert unified_score(n + 1, m, 10, 3, alpha) >= base
        assert unified_score(n, m + 1, 10, 3, alpha) >= base


class TestUnifiedScores:
    def test_scores_line_up_with_paths(self):
        ens = make_ensemble(["a", "a", "b"])
        verdicts = make_verdicts("q1", [[True, True, False],
                                        [True, False, False],
                                        [True, True, True]])
        scores = unified_scores(ens, verdicts, alpha=0.5)
        assert [s.n for s in scores] == [2, 2, 1]
        assert [s.m for s in scores] == [2, 1, 3]
        assert scores[0].d == pytest.approx(0.5 * (2 / 3) + 0.5 * (2 / 3))
        assert scores[2].d == pytest.approx(0.5 * (1 / 3) + 0.5 * 1.0)

    def test_plain_rows_accepted(self):
        ens = make_ensemble(["a", "b"], m=2)
        scores = unified_scores(ens, [[True, False], [True, True]], alpha=0.0)
        assert [s.m for s in scores] == [1, 2]

    def test_row_count_mismatch_rejected(self):
        ens = make_ensemble(["a", "b"], m=2)
        with pytest.raises(DimensionMismatch):
            unified_scores(ens, [[True, False]], alpha=0.5)

    def test_row_width_mismatch_rejected(self):
        ens = make_ensemble(["a", "b"], m=2)
        with pytest.raises(DimensionMismatch):
            unified_scores(ens, [[True], [True]], alpha=0.5)


class TestSelection:
    def test_argmax_selected(self):
        ens = make_ensemble(["a", "a", "b"])
        verdicts = make_verdicts("q1", [[False] * 3, [False] * 3, [True] * 3])
        chosen = calibrate(ens, verdicts, alpha=0.0)
        assert chosen.path_index == 2
        assert chosen.answer.canonical == "b"

    def test_tie_breaks_to_lowest_index(self):
        ens = make_ensemble(["a", "b", "a", "b"])
        verdicts = make_verdicts("q1", [[True] * 3] * 4)
        chosen = calibrate(ens, verdicts, alpha=0.5)
        assert chosen.path_index == 0

    def test_selection_result_records_strategy_and_alpha(self):
        ens = make_ensemble(["a", "a"])
        verdicts = make_verdicts("q1", [[True] * 3] * 2)
        chosen = calibrate(ens, verdicts, alpha=0.25)
        assert chosen.strategy == "unified"
        assert chosen.alpha == 0.25
        assert chosen.question_id == "q1"
        assert len(chosen.scores) == 2


class TestEndpointStrategies:
    def test_self_consistency_majority(self):
        ens = make_ensemble(["a", "b", "a", "c", "a"])
        chosen = self_consistency(ens)
        assert chosen.answer.canonical == "a"
        assert chosen.path_index == 0
        assert chosen.strategy == "sc"

    def test_self_consistency_tie_lowest_index(self):
        ens = make_ensemble(["b", "a", "b", "a"])
        assert self_consistency(ens).path_index == 0

    def test_self_verification_most_verified(self):
        ens = make_ensemble(["a", "b", "c"])
        verdicts = make_verdicts("q1", [[True, False, False],
                                        [True, True, False],
                                        [True, False, False]])
        chosen = self_verification(ens, verdicts)
        assert chosen.answer.canonical == "b"
        assert chosen.strategy == "sv"

    @given(
        n_paths=st.integers(min_value=1, max_value=8),
        data=st.data(),
    )
    @settings(max_examples=60)
    def test_alpha_one_matches_self_consistency(self, n_paths, data):
        answers = data.draw(
            st.lists(st.sampled_from(["a", "b", "c"]), min_size=n_paths, max_size=n_paths)
        )
        rows = data.draw(
            st.lists(
                st.lists(st.booleans(), min_size=3, max_size=3),
                min_size=n_paths, max_size=n_paths,
            )
        )
        ens = make_ensemble(answers)
        verdicts = make_verdicts("q1", rows)
        assert calibrate(ens, verdicts, 1.0).path_index == self_consistency(ens).path_index

    @given(
        n_paths=st.integers(min_value=1, max_value=8),
        data=st.data(),
    )
    @settings(max_examples=60)
    def test_alpha_zero_matches_self_verification(self, n_paths, data):
        answers = data.draw(
            st.lists(st.sampled_from(["a", "b", "c"]), min_size=n_paths, max_size=n_paths)
        )
        rows = data.draw(
            st.lists(
                st.lists(st.booleans(), min_size=3, max_size=3),
                min_size=n_paths, max_size=n_paths,
            )
        )
        ens = make_ensemble(answers)
        verdicts = make_verdicts("q1", rows)
        assert (
            calibrate(ens, verdicts, 0.0).path_index
            == self_verification(ens, verdicts).path_index
        )


class TestAlphaSweep:
    def test_accuracy_per_grid_point(self):
        # verification favors the lone correct path; agreement favors the wrong pair
        ens = make_ensemble(["b", "b", "a"], gold="a")
        verdicts = {"q1": make_verdicts("q1", [[False] * 3,
                                               [False] * 3,
                                               [True] * 3])}
        curve = alpha_sweep([ens], verdicts, [0.0, 0.5, 1.0])
        assert [p.accuracy for p in curve] == [1.0, 1.0, 0.0]
        assert all(p.n_questions == 1 for p in curve)

    def test_missing_gold_raises(self):
        ens = make_ensemble(["a", "b"])
        with pytest.raises(MissingGold):
            alpha_sweep([ens], {"q1": make_verdicts("q1", [[True] * 3] * 2)}, [0.5])

    def test_missing_verdicts_raise(self):
        ens = make_ensemble(["a", "b"], gold="a")
        with pytest.raises(DimensionMismatch):
            alpha_sweep([ens], {}, [0.5])


class TestDefaultGrid:
    def test_grid_is_21_clean_points(self):
        grid = default_alpha_grid()
        assert len(grid) == 21
        assert grid[0] == 0.0
        assert grid[-1] == 1.0
        assert grid[3] == 0.15  # exact, not 0.15000000000000002
        assert math.isclose(grid[1] - grid[0], 0.05)

    def test_custom_step(self):
        assert default_alpha_grid(0.25) == [0.0, 0.25, 0.5, 0.75, 1.0]

    def test_bad_step_rejected(self):
        with pytest.raises(ValueError):
            default_alpha_grid(0.0)
