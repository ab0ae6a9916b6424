"""Path shaping and ensemble loading."""

import io
import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from pathcalib import (
    InvalidShape,
    PathEnsemble,
    ReasoningStep,
    load_ensembles,
    shape_path,
    write_ensembles,
)

from calib_helpers import ensemble_record, freeform, jsonl, make_ensemble


class TestShapePath:
    def test_truncation_keeps_first_m(self):
        path = shape_path(["a.", "b.", "c.", "d."], freeform("x"), 2)
        assert [s.text for s in path.steps] == ["a.", "b."]
        assert path.true_step_count == 4
        assert path.real_step_count == 2

    def test_padding_appends_empty_tail(self):
        path = shape_path(["a."], freeform("x"), 3)
        assert [s.is_pad for s in path.steps] == [False, True, True]
        assert path.true_step_count == 1
        assert path.real_step_count == 1

    def test_exact_fit_unchanged(self):
        path = shape_path(["a.", "b."], freeform("x"), 2)
        assert [s.is_pad for s in path.steps] == [False, False]
        assert path.final_answer == freeform("x")

    def test_zero_steps_rejected(self):
        with pytest.raises(InvalidShape):
            shape_path([], freeform("x"), 3)

    def test_budget_below_one_rejected(self):
        with pytest.raises(InvalidShape):
            shape_path(["a."], freeform("x"), 0)

    def test_step_answers_travel_with_steps(self):
        answers = [freeform("one"), None, freeform("three")]
        path = shape_path(["a.", "b.", "c."], freeform("x"), 2, step_answers=answers)
        assert [s.answer for s in path.steps] == [freeform("one"), None]

    def test_step_answers_length_mismatch_rejected(self):
        with pytest.raises(InvalidShape):
            shape_path(["a.", "b."], freeform("x"), 2, step_answers=[None])


class TestPathInvariants:
    def test_pad_step_with_text_rejected(self):
        with pytest.raises(InvalidShape):
            ReasoningStep(index=1, text="oops", is_pad=True)

    def test_interior_pad_rejected(self):
        good = shape_path(["a.", "b."], freeform("x"), 3)
        steps = (good.steps[2], good.steps[0], good.steps[1])  # pad first
        with pytest.raises(InvalidShape):
            type(good)(steps=steps, final_answer=good.final_answer,
                       raw_text=good.raw_text, true_step_count=2)

    def test_mixed_widths_rejected(self):
        narrow = shape_path(["a."], freeform("x"), 2)
        wide = shape_path(["a."], freeform("x"), 3)
        with pytest.raises(InvalidShape):
            PathEnsemble(question_id="q", question="?", paths=(narrow, wide))

    def test_empty_ensemble_rejected(self):
        with pytest.raises(InvalidShape):
            PathEnsemble(question_id="q", question="?", paths=())


class TestLoadEnsembles:
    def test_single_record_roundtrip(self):
        lines = jsonl(ensemble_record(gold_answer="4"))
        result = load_ensembles(lines, m=3)
        assert len(result) == 1
        assert not result.diagnostics
        ens = result.ensembles[0]
        assert ens.question_id == "q1"
        assert ens.n_paths == 2
        assert ens.step_budget == 3
        assert ens.gold_answer.canonical == "4"
        assert all(a.canonical == "4" for a in ens.final_answers)

    def test_steps_derived_from_raw_text_when_absent(self):
        record = ensemble_record(paths=[
            {"raw_text": "First 3 + 4 = 7. Then 7 - 2 = 5. The answer is 5."},
        ])
        ens = load_ensembles(jsonl(record), m=3).ensembles[0]
        assert ens.paths[0].real_step_count == 3
        assert ens.paths[0].final_answer.canonical == "5"

    def test_explicit_steps_and_final_answer_win(self):
        record = ensemble_record(paths=[
            {
                "raw_text": "irrelevant text",
                "steps": ["a + b = 10.", "10 doubled is 20."],
                "final_answer": "20",
            },
        ])
        ens = load_ensembles(jsonl(record), m=2).ensembles[0]
        assert [s.text for s in ens.paths[0].steps] == ["a + b = 10.", "10 doubled is 20."]
        assert ens.paths[0].final_answer.canonical == "20"

    def test_invalid_json_line_skipped_with_diagnostic(self):
        lines = ["{not json", json.dumps(ensemble_record())]
        result = load_ensembles(lines, m=3)
        assert len(result) == 1
        assert len(result.diagnostics) == 1
        assert result.diagnostics[0].line_no == 1

    def test_missing_required_key_skipped(self):
        bad = ensemble_record()
        del bad["question"]
        result = load_ensembles(jsonl(bad, ensemble_record(question_id="q2")), m=3)
        assert [e.question_id for e in result.ensembles] == ["q2"]
        assert len(result.diagnostics) == 1

    def test_unknown_answer_kind_skipped(self):
        result = load_ensembles(jsonl(ensemble_record(answer_kind="integer")), m=3)
        assert not result.ensembles
        assert "answer_kind" in result.diagnostics[0].message

    def test_duplicate_question_id_keeps_first(self):
        first = ensemble_record(question_id="q1")
        second = ensemble_record(
            question_id="q1",
            paths=[{"raw_text": "The answer is 9."}],
        )
        result = load_ensembles(jsonl(first, second), m=3)
        assert len(result.ensembles) == 1
        assert result.ensembles[0].n_paths == 2
        assert "duplicate" in result.diagnostics[0].message

    def test_expected_n_mismatch_rejected(self):
        result = load_ensembles(jsonl(ensemble_record()), m=3, expected_n=5)
        assert not result.ensembles
        assert "N mismatch" in result.diagnostics[0].message

    def test_unextractable_final_answer_skipped(self):
        record = ensemble_record(paths=[{"raw_text": "No conclusion here whatsoever"}])
        result = load_ensembles(jsonl(record), m=3)
        assert not result.ensembles
        assert len(result.diagnostics) == 1

    def test_blank_lines_ignored(self):
        lines = ["", "  ", json.dumps(ensemble_record()), ""]
        result = load_ensembles(lines, m=3)
        assert len(result) == 1
        assert not result.diagnostics

    def test_gold_answer_normalized(self):
        record = ensemble_record(gold_answer="$1,200.00")
        ens = load_ensembles(jsonl(record), m=3).ensembles[0]
        assert ens.gold_answer.canonical == "1200"


def test_write_then_load_roundtrip():
    ens = make_ensemble(["a", "a", "b"], m=2, gold="a")
    buf = io.StringIO()
    assert write_ensembles([ens], buf) == 1
    buf.seek(0)
    result = load_ensembles(buf, m=2)
    back = result.ensembles[0]
    assert back.question_id == ens.question_id
    assert back.final_answers == ens.final_answers
    assert back.gold_answer == ens.gold_answer
    assert [s.text for s in back.paths[0].steps] == [s.text for s in ens.paths[0].steps]


@given(
    n_steps=st.integers(min_value=1, max_value=9),
    m=st.integers(min_value=1, max_value=6),
)
def test_shaped_width_always_m(n_steps, m):
    texts = [f"s{i}." for i in range(n_steps)]
    path = shape_path(texts, freeform("x"), m)
    assert len(path.steps) == m
    assert path.real_step_count == min(n_steps, m)
    assert path.true_step_count == n_steps
    # pads, if any, form a contiguous tail
    flags = [s.is_pad for s in path.steps]
    assert flags == sorted(flags)
