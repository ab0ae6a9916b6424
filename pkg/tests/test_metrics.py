"""The five reasoning-quality kernels and the sidecar file format."""

import io
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pathcalib import (
    DimensionMismatch,
    EmptyInput,
    EmptySource,
    EmptyTokens,
    MetricReport,
    PositiveLogProb,
    SchemaViolation,
    SidecarHeader,
    ZeroVector,
    aggregate_metrics,
    compute_metric_report,
    consistency_path,
    consistency_steps,
    cosine,
    faithfulness_step,
    informativeness_path,
    load_sidecars,
    perplexity_path,
    r_align,
    sidecar_from_record,
    write_sidecars,
)
from pathcalib.metrics import FLAG_NO_SOURCE, FLAG_SINGLE_STEP

from calib_helpers import (
    make_sidecar,
    naive_consistency_path,
    naive_consistency_steps,
    naive_faithfulness,
    naive_informativeness,
    naive_perplexity,
    random_sidecar,
    unit,
)


class TestCosine:
    def test_identical_vectors(self):
        assert cosine([3.0, 4.0], [3.0, 4.0]) == pytest.approx(1.0)

    def test_orthogonal_vectors(self):
        assert cosine([1.0, 0.0], [0.0, 1.0]) == pytest.approx(0.0)

    def test_opposite_vectors(self):
        assert cosine([1.0, 0.0], [-2.0, 0.0]) == pytest.approx(-1.0)

    def test_zero_vector_rejected(self):
        with pytest.raises(ZeroVector):
            cosine([0.0, 0.0], [1.0, 0.0])

    def test_shape_mismatch_rejected(self):
        with pytest.raises(DimensionMismatch):
            cosine([1.0, 0.0], [1.0, 0.0, 0.0])

    @given(
        scale_u=st.floats(min_value=0.01, max_value=100.0),
        scale_v=st.floats(min_value=0.01, max_value=100.0),
        seed=st.integers(min_value=0, max_value=10**6),
    )
    def test_scale_invariance(self, scale_u, scale_v, seed):
        rng = np.random.default_rng(seed)
        u = rng.normal(size=5) + 0.01
        v = rng.normal(size=5) + 0.01
        assert cosine(scale_u * u, scale_v * v) == pytest.approx(cosine(u, v), abs=1e-12)


class TestRAlign:
    def test_published_mapping(self):
        # cosines 0.8, 0.0, 1.0 map to 0.9, 0.5, 1.0
        source = unit([[1.0, 0.0]])
        assert r_align(unit([[0.8, 0.6]])[0], source) == pytest.approx(0.9)
        assert r_align([0.0, 1.0], source) == pytest.approx(0.5)
        assert r_align([2.0, 0.0], source) == pytest.approx(1.0)

    def test_best_source_step_wins(self):
        source = [[0.0, 1.0], [1.0, 0.0]]
        assert r_align([1.0, 0.0], source) == pytest.approx(1.0)

    def test_empty_source_rejected(self):
        with pytest.raises(EmptySource):
            r_align([1.0, 0.0], np.zeros((0, 2)))


class TestFaithfulness:
    def test_worked_example(self):
        # one step whose best source cosine is 0.5: (1 + 0.5) / 2 = 0.75
        sidecar = make_sidecar(
            steps=[[1.0, 0.0]],
            source_steps=[[0.5, math.sqrt(0.75)], [-0.2, math.sqrt(0.96)]],
            within=[[0.0]],
            vs_source=[[0.0, 0.0]],
        )
        assert faithfulness_step(sidecar) == pytest.approx(0.75)

    def test_mean_over_steps(self):
        sidecar = make_sidecar(
            steps=[[1.0, 0.0], [0.0, 1.0]],
            source_steps=[[1.0, 0.0]],
        )
        # cosines 1.0 and 0.0 give alignments 1.0 and 0.5
        assert faithfulness_step(sidecar) == pytest.approx(0.75)

    def test_source_order_irrelevant(self):
        fwd = make_sidecar(source_steps=[[1.0, 0.0], [0.0, 1.0]])
        rev = make_sidecar(source_steps=[[0.0, 1.0], [1.0, 0.0]])
        assert faithfulness_step(fwd) == pytest.approx(faithfulness_step(rev))

    def test_no_source_rejected(self):
        sidecar = make_sidecar(source_steps=None, source_vec=None)
        with pytest.raises(EmptySource):
            faithfulness_step(sidecar)


class TestInformativeness:
    def test_perfect_alignment(self):
        assert informativeness_path(make_sidecar()) == pytest.approx(1.0)

    def test_orthogonal(self):
        sidecar = make_sidecar(path_vec=(0.0, 1.0), source_vec=(1.0, 0.0))
        assert informativeness_path(sidecar) == pytest.approx(0.5)

    def test_no_source_rejected(self):
        sidecar = make_sidecar(source_vec=None)
        with pytest.raises(EmptySource):
            informativeness_path(sidecar)


class TestConsistencySteps:
    def test_worked_example(self):
        # worst later-vs-earlier contradiction 0.4 gives 0.6; the upper
        # triangle (earlier judged against later) must not participate
        sidecar = make_sidecar(within=[[0.0, 0.9], [0.4, 0.0]])
        assert consistency_steps(sidecar) == pytest.approx(0.6)

    def test_clean_path_scores_one(self):
        assert consistency_steps(make_sidecar()) == pytest.approx(1.0)

    def test_single_step_is_vacuously_consistent(self):
        sidecar = make_sidecar(steps=[[1.0, 0.0]], within=[[0.7]], vs_source=[[0.0]])
        assert consistency_steps(sidecar) == 1.0

    def test_three_steps_max_of_three_pairs(self):
        within = [
            [0.0, 0.0, 0.0],
            [0.1, 0.0, 0.0],
            [0.2, 0.35, 0.0],
        ]
        sidecar = make_sidecar(
            steps=[[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0]],
            within=within,
            vs_source=[[0.0], [0.0], [0.0]],
        )
        assert consistency_steps(sidecar) == pytest.approx(0.65)


class TestConsistencyPath:
    def test_worked_example(self):
        sidecar = make_sidecar(vs_source=[[0.25, 0.1], [0.0, 0.2]],
                               source_steps=[[1.0, 0.0], [0.0, 1.0]])
        assert consistency_path(sidecar) == pytest.approx(0.75)

    def test_no_source_rejected(self):
        sidecar = make_sidecar(source_steps=None, source_vec=None)
        with pytest.raises(EmptySource):
            consistency_path(sidecar)


class TestPerplexity:
    def test_half_probability_tokens(self):
        assert perplexity_path([math.log(0.5)] * 7) == pytest.approx(0.5)

    def test_tenth_probability_tokens(self):
        assert perplexity_path([math.log(0.1)]) == pytest.approx(0.1)

    def test_certain_tokens_score_one(self):
        assert perplexity_path([0.0, 0.0, 0.0]) == pytest.approx(1.0)

    def test_empty_rejected(self):
        with pytest.raises(EmptyTokens):
            perplexity_path([])

    def test_positive_logprob_rejected(self):
        with pytest.raises(PositiveLogProb):
            perplexity_path([math.log(0.5), 0.01])

    @given(st.lists(st.floats(min_value=-20.0, max_value=0.0), min_size=1, max_size=30))
    def test_order_invariant_and_bounded(self, logprobs):
        forward = perplexity_path(logprobs)
        assert perplexity_path(list(reversed(logprobs))) == pytest.approx(forward)
        assert 0.0 < forward <= 1.0


class TestMetricReport:
    def test_full_report(self):
        report = compute_metric_report(make_sidecar())
        scores = report.scores()
        # keys double as the metrics CSV column names
        assert set(scores) == {
            "faithfulness", "informativeness", "consistency_steps",
            "consistency_path", "perplexity",
        }
        assert all(v is not None and 0.0 <= v <= 1.0 for v in scores.values())
        assert report.question_id == "q1"
        assert report.flags == ()

    def test_no_source_flags_and_nones(self):
        sidecar = make_sidecar(source_steps=None, source_vec=None)
        report = compute_metric_report(sidecar)
        assert FLAG_NO_SOURCE in report.flags
        assert report.faithfulness_step is None
        assert report.informativeness_path is None
        assert report.consistency_path is None
        assert report.consistency_steps is not None
        assert report.perplexity_path is not None

    def test_single_step_flag(self):
        sidecar = make_sidecar(steps=[[1.0, 0.0]], within=[[0.0]], vs_source=[[0.0]])
        report = compute_metric_report(sidecar)
        assert FLAG_SINGLE_STEP in report.flags
        assert report.consistency_steps == 1.0

    def test_aggregate_means_and_none_exclusion(self):
        with_gold = compute_metric_report(make_sidecar())
        without_gold = compute_metric_report(make_sidecar(source_steps=None, source_vec=None))
        agg = aggregate_metrics([with_gold, without_gold])
        assert agg.faithfulness_step == pytest.approx(with_gold.faithfulness_step)
        assert agg.consistency_steps == pytest.approx(
            (with_gold.consistency_steps + without_gold.consistency_steps) / 2
        )
        assert agg.n_steps == with_gold.n_steps + without_gold.n_steps

    def test_aggregate_empty_rejected(self):
        with pytest.raises(EmptyInput):
            aggregate_metrics([])


class TestSidecarValidation:
    def test_non_unit_rows_rejected(self):
        sidecar = make_sidecar()
        bad = type(sidecar)(**{**sidecar.__dict__, "step_embeddings": np.array([[2.0, 0.0]]),
                               "contradiction_within": np.zeros((1, 1)),
                               "contradiction_vs_source": np.zeros((1, 1))})
        with pytest.raises(SchemaViolation):
            bad.validate()

    def test_near_unit_rows_accepted(self):
        steps = unit([[1.0, 2.0]]) * (1.0 + 5e-7)
        sidecar = make_sidecar()
        near = type(sidecar)(**{**sidecar.__dict__, "step_embeddings": steps,
                                "contradiction_within": np.zeros((1, 1)),
                                "contradiction_vs_source": np.zeros((1, 1))})
        near.validate()

    def test_contradiction_out_of_range_rejected(self):
        sidecar = make_sidecar(within=[[0.0, 1.3], [0.0, 0.0]])
        with pytest.raises(SchemaViolation):
            sidecar.validate()

    def test_mismatched_source_dim_rejected(self):
        sidecar = make_sidecar()
        bad = type(sidecar)(**{
            **sidecar.__dict__,
            "source_step_embeddings": unit([[1.0, 0.0, 0.0]]),
        })
        with pytest.raises(DimensionMismatch):
            bad.validate()

    def test_random_sidecars_validate(self):
        rng = np.random.default_rng(7)
        for i in range(25):
            random_sidecar(rng, i).validate()


class TestSidecarFile:
    def header(self, dim=2):
        return SidecarHeader(embedding_dim=dim, producer="test")

    def test_roundtrip(self):
        sidecars = [make_sidecar(), make_sidecar(path_index=1)]
        buf = io.StringIO()
        assert write_sidecars(self.header(), sidecars, buf) == 2
        buf.seek(0)
        result = load_sidecars(buf)
        assert not result.diagnostics
        assert result.header.embedding_dim == 2
        assert len(result) == 2
        for orig, back in zip(sidecars, result.sidecars):
            np.testing.assert_allclose(back.step_embeddings, orig.step_embeddings)
            np.testing.assert_allclose(back.token_logprobs, orig.token_logprobs)
            assert back.question_id == orig.question_id

    def test_roundtrip_without_gold(self):
        sidecar = make_sidecar(source_steps=None, source_vec=None)
        buf = io.StringIO()
        write_sidecars(self.header(), [sidecar], buf)
        buf.seek(0)
        result = load_sidecars(buf)
        assert not result.diagnostics
        assert result.sidecars[0].source_embedding is None
        assert result.sidecars[0].n_source_steps == 0

    def test_missing_header_diagnosed(self):
        buf = io.StringIO()
        write_sidecars(self.header(), [make_sidecar()], buf)
        lines = buf.getvalue().splitlines()[1:]  # drop the header line
        result = load_sidecars(lines)
        assert any(d.line_no == 0 for d in result.diagnostics)
        assert len(result) == 1

    def test_dim_conflict_with_header_skipped(self):
        buf = io.StringIO()
        write_sidecars(self.header(dim=5), [make_sidecar()], buf)
        buf.seek(0)
        result = load_sidecars(buf)
        assert len(result.sidecars) == 0
        assert any("dimension" in d.message for d in result.diagnostics)

    def test_invalid_record_skipped_not_fatal(self):
        buf = io.StringIO()
        write_sidecars(self.header(), [make_sidecar()], buf)
        lines = buf.getvalue().splitlines()
        lines.insert(1, "{broken json")
        result = load_sidecars(lines)
        assert len(result.sidecars) == 1
        assert any("invalid JSON" in d.message for d in result.diagnostics)

    def test_missing_field_diagnosed(self):
        with pytest.raises(SchemaViolation):
            sidecar_from_record({"question_id": "q1"})


# the vectorized kernels must agree with definition-direct rewrites
@given(seed=st.integers(min_value=0, max_value=10**9))
@settings(max_examples=40, deadline=None)
def test_kernels_match_naive_twins(seed):
    rng = np.random.default_rng(seed)
    sidecar = random_sidecar(rng)
    steps = sidecar.step_embeddings.tolist()
    source = sidecar.source_step_embeddings.tolist()
    assert faithfulness_step(sidecar) == pytest.approx(
        naive_faithfulness(steps, source), abs=1e-9
    )
    assert informativeness_path(sidecar) == pytest.approx(
        naive_informativeness(sidecar.path_embedding.tolist(),
                              sidecar.source_embedding.tolist()),
        abs=1e-9,
    )
    assert consistency_steps(sidecar) == pytest.approx(
        naive_consistency_steps(sidecar.contradiction_within.tolist()), abs=1e-9
    )
    assert consistency_path(sidecar) == pytest.approx(
        naive_consistency_path(sidecar.contradiction_vs_source.tolist()), abs=1e-9
    )
    assert perplexity_path(sidecar.token_logprobs) == pytest.approx(
        naive_perplexity(sidecar.token_logprobs.tolist()), abs=1e-9
    )
