"""Answer calibration over a path ensemble.

Every path i gets two signals: n_i, how many of the N paths (itself
included) share its normalized final answer, and m_i, how many of its M
intermediate steps were verified correct. A convex combination blends
them into one score

    d_i = alpha * n_i / N + (1 - alpha) * m_i / M

and the calibrated answer is the final answer of the highest-scoring
path, ties broken by lowest path index. alpha = 1 reduces to
self-consistency (majority voting), alpha = 0 to self-verification
(most verified steps); both endpoints are also implemented directly so
the equivalence can be checked rather than assumed.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .answers import NormalizedAnswer
from .ensemble import PathEnsemble
from .errors import DimensionMismatch, MissingGold

TIE_BREAK_LOWEST_INDEX = "lowest_index"

STRATEGY_SC = "sc"
STRATEGY_SV = "sv"
STRATEGY_UNIFIED = "unified"


@dataclass(frozen=True)
class PathScore:
    """Per-path (n, m, d) triple under the alpha it was computed with."""

    path_index: int
    n: int
    m: int
    d: float


@dataclass(frozen=True)
class CalibrationConfig:
    alpha: float
    n_paths: int
    step_budget: int
    tie_break: str = TIE_BREAK_LOWEST_INDEX

    def __post_init__(self) -> None:
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in [0, 1], got {self.alpha}")
        if self.n_paths < 1 or self.step_budget < 1:
            raise ValueError("n_paths and step_budget must be >= 1")
        if self.tie_break != TIE_BREAK_LOWEST_INDEX:
            raise ValueError(f"unknown tie-break policy {self.tie_break!r}")


@dataclass(frozen=True)
class SelectionResult:
    question_id: str
    path_index: int
    answer: NormalizedAnswer
    scores: tuple[PathScore, ...]
    strategy: str
    alpha: float | None = None


def consistency_counts(ensemble: PathEnsemble) -> list[int]:
    """n_i for every path: paths sharing its answer, itself included."""
    tally = Counter(ensemble.final_answers)
    return [tally[answer] for answer in ensemble.final_answers]


def unified_score(n: int, m: int, n_paths: int, step_budget: int, alpha: float) -> float:
    """Single-path blended score alpha*n/N + (1-alpha)*m/M."""
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha}")
    return alpha * (n / n_paths) + (1.0 - alpha) * (m / step_budget)


def _verdict_rows(ensemble: PathEnsemble, verdicts: "StepVerdicts | Sequence[Sequence[bool]]"):
    rows = verdicts.per_path if hasattr(verdicts, "per_path") else verdicts
    if len(rows) != ensemble.n_paths:
        raise DimensionMismatch(
            f"{len(rows)} verdict rows for {ensemble.n_paths} paths"
        )
    m = ensemble.step_budget
    for i, row in enumerate(rows):
        if len(row) != m:
            raise DimensionMismatch(
                f"verdict vector for path {i} has length {len(row)}, expected {m}"
            )
    return rows


def unified_scores(
    ensemble: PathEnsemble,
    verdicts: "StepVerdicts | Sequence[Sequence[bool]]",
    alpha: float,
) -> list[PathScore]:
    """Score every path under the blended criterion."""
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha}")  # before row checks
    rows = _verdict_rows(ensemble, verdicts)
    counts = consistency_counts(ensemble)
    n_paths, budget = ensemble.n_paths, ensemble.step_budget
    return [
        PathScore(i, counts[i], sum(bool(v) for v in rows[i]),
                  unified_score(counts[i], sum(bool(v) for v in rows[i]), n_paths, budget, alpha))
        for i in range(n_paths)
    ]


def select_answer(
    scores: Sequence[PathScore],
    ensemble: PathEnsemble,
    *,
    strategy: str = STRATEGY_UNIFIED,
    alpha: float | None = None,
    tie_break: str = TIE_BREAK_LOWEST_INDEX,
) -> SelectionResult:
    """Pick the highest-d path; ties go to the lowest path index."""
    if not scores:
        raise ValueError("cannot select from an empty score list")
    if tie_break != TIE_BREAK_LOWEST_INDEX:
        raise ValueError(f"unknown tie-break policy {tie_break!r}")
    best = max(range(len(scores)), key=lambda i: (scores[i].d, -scores[i].path_index))
    winner = scores[best]
    return SelectionResult(
        question_id=ensemble.question_id,
        path_index=winner.path_index,
        answer=ensemble.paths[winner.path_index].final_answer,
        scores=tuple(scores),
        strategy=strategy,
        alpha=alpha,
    )


def calibrate(
    ensemble: PathEnsemble,
    verdicts: "StepVerdicts | Sequence[Sequence[bool]]",
    alpha: float,
) -> SelectionResult:
    """unified_scores followed by select_answer, as one call."""
    scores = unified_scores(ensemble, verdicts, alpha)
    return select_answer(scores, ensemble, strategy=STRATEGY_UNIFIED, alpha=alpha)


def self_consistency(ensemble: PathEnsemble) -> SelectionResult:
    """Majority voting: the path whose final answer is most frequent.

    Implemented directly on the counts (not through the blended score) so
    the alpha=1 equivalence stays a checkable property.
    """
    counts = consistency_counts(ensemble)
    best = max(range(len(counts)), key=lambda i: (counts[i], -i))
    n_paths = ensemble.n_paths
    scores = tuple(
        PathScore(i, counts[i], 0, counts[i] / n_paths) for i in range(n_paths)
    )
    return SelectionResult(
        question_id=ensemble.question_id,
        path_index=best,
        answer=ensemble.paths[best].final_answer,
        scores=scores,
        strategy=STRATEGY_SC,
        alpha=None,
    )


def self_verification(
    ensemble: PathEnsemble,
    verdicts: "StepVerdicts | Sequence[Sequence[bool]]",
) -> SelectionResult:
    """The path with the most verified-correct steps wins."""
    rows = _verdict_rows(ensemble, verdicts)
    ms = [sum(bool(v) for v in row) for row in rows]
    best = max(range(len(ms)), key=lambda i: (ms[i], -i))
    counts = consistency_counts(ensemble)
    budget = ensemble.step_budget
    scores = tuple(
        PathScore(i, counts[i], ms[i], ms[i] / budget) for i in range(ensemble.n_paths)
    )
    return SelectionResult(
        question_id=ensemble.question_id,
        path_index=best,
        answer=ensemble.paths[best].final_answer,
        scores=scores,
        strategy=STRATEGY_SV,
        alpha=None,
    )


@dataclass(frozen=True)
class SweepPoint:
    alpha: float
    accuracy: float
    n_questions: int


def alpha_sweep(
    ensembles: Sequence[PathEnsemble],
    verdicts_by_question: Mapping[str, "StepVerdicts | Sequence[Sequence[bool]]"],
    alphas: Iterable[float],
) -> list[SweepPoint]:
    """Accuracy of the calibrated answer at every alpha in the grid."""
    ensembles = list(ensembles)
    for ens in ensembles:
        if ens.gold_answer is None:
            raise MissingGold(f"ensemble {ens.question_id} has no gold answer")
        if ens.question_id not in verdicts_by_question:
            raise DimensionMismatch(f"no verdicts for question {ens.question_id}")

    curve = []
    for alpha in alphas:
        correct = 0
        for ens in ensembles:
            chosen = calibrate(ens, verdicts_by_question[ens.question_id], alpha)
            if chosen.answer == ens.gold_answer:
                correct += 1
        curve.append(SweepPoint(alpha, correct / len(ensembles) if ensembles else 0.0,
                                len(ensembles)))
    return curve


def default_alpha_grid(step: float = 0.05) -> list[float]:
    """0 to 1 inclusive; the default granularity is 0.05."""
    if step <= 0 or step > 1:
        raise ValueError(f"grid step must lie in (0, 1], got {step}")
    n = round(1.0 / step)
    # i/n instead of i*step keeps grid points exactly representable where
    # possible (0.15, not 0.15000000000000002)
    return [i / n for i in range(n + 1)]
