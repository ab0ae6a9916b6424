"""Synthetic ensembles with known gold answers and known step verdicts.

The generative model is deliberately minimal. Per question, each of N
paths is independently correct with probability p_final_correct; wrong
paths draw a distractor answer uniformly from a fixed alphabet
("w1".."wk"), so wrong answers can also cluster. Step verdicts are
conditionally independent given whether the path's final answer is
correct, with different per-step success rates for correct and wrong
paths. Complementary settings of those two rates create the regime where
neither voting alone nor step verification alone is optimal, which is
exactly what the blended score exists for.

Generation is deterministic per (seed, question index), so parameter
sweeps over the same spec reuse identical question streams (common
random numbers) and curve differences are attributable to the strategy,
not to sampling noise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .answers import FREEFORM, NormalizedAnswer
from .calibration import (
    STRATEGY_SC,
    STRATEGY_SV,
    STRATEGY_UNIFIED,
    SelectionResult,
    calibrate,
    self_consistency,
    self_verification,
)
from .ensemble import PathEnsemble, shape_path
from .verification import SOURCE_SYNTHETIC, StepVerdicts

GOLD_CANONICAL = "gold"


@dataclass(frozen=True)
class SynthSpec:
    """Parameters of the synthetic question generator."""

    n_paths: int = 10
    step_budget: int = 3
    p_final_correct: float = 0.55
    p_step_correct_given_final: float = 0.8
    p_step_correct_given_wrong: float = 0.35
    distractor_count: int = 3
    seed: int = 42
    questions: int = 2000

    def __post_init__(self) -> None:
        for name in ("p_final_correct", "p_step_correct_given_final",
                     "p_step_correct_given_wrong"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {value}")
        if self.n_paths < 1 or self.step_budget < 1:
            raise ValueError("n_paths and step_budget must be >= 1")
        if self.distractor_count < 1:
            raise ValueError("distractor_count must be >= 1")
        if self.questions < 0:
            raise ValueError("questions must be >= 0")

    @property
    def informative_step_signal(self) -> bool:
        """False when the step verdicts carry no information about correctness."""
        return self.p_step_correct_given_final >= self.p_step_correct_given_wrong


def generate_ensemble(spec: SynthSpec, index: int) -> tuple[PathEnsemble, StepVerdicts]:
    """One synthetic question; deterministic per (spec.seed, index)."""
    rng = np.random.default_rng([spec.seed, index])
    gold = NormalizedAnswer(FREEFORM, GOLD_CANONICAL)

    paths = []
    verdict_rows = []
    for p in range(spec.n_paths):
        correct = bool(rng.random() < spec.p_final_correct)
        if correct:
            answer = gold
        else:
            distractor = int(rng.integers(1, spec.distractor_count + 1))
            answer = NormalizedAnswer(FREEFORM, f"w{distractor}")
        p_step = (
            spec.p_step_correct_given_final if correct else spec.p_step_correct_given_wrong
        )
        verdicts = tuple(bool(v) for v in rng.random(spec.step_budget) < p_step)
        step_texts = [
            f"path {p} step {s + 1} toward {answer.canonical}"
            for s in range(spec.step_budget)
        ]
        raw = ". ".join(step_texts) + f". The answer is {answer.canonical}."
        paths.append(
            shape_path(step_texts, answer, spec.step_budget, raw_text=raw)
        )
        verdict_rows.append(verdicts)

    qid = f"synth-{spec.seed}-{index}"
    ensemble = PathEnsemble(
        question_id=qid,
        question=f"synthetic question {index}",
        paths=tuple(paths),
        gold_answer=gold,
    )
    verdicts = StepVerdicts(
        question_id=qid, per_path=tuple(verdict_rows), source=SOURCE_SYNTHETIC
    )
    return ensemble, verdicts


def generate_stream(spec: SynthSpec, count: int | None = None):
    """List of (ensemble, verdicts) for indices 0..count-1."""
    total = spec.questions if count is None else count
    return [generate_ensemble(spec, i) for i in range(total)]


@dataclass(frozen=True)
class AccuracyEstimate:
    accuracy: float
    std_error: float
    trials: int
    strategy: str
    alpha: float | None = None


def _select(
    ensemble: PathEnsemble,
    verdicts: StepVerdicts,
    strategy: str,
    alpha: float | None,
) -> SelectionResult:
    if strategy == STRATEGY_SC:
        return self_consistency(ensemble)
    if strategy == STRATEGY_SV:
        return self_verification(ensemble, verdicts)
    if strategy == STRATEGY_UNIFIED:
        if alpha is None:
            raise ValueError("unified strategy needs alpha")
        return calibrate(ensemble, verdicts, alpha)
    raise ValueError(f"unknown strategy {strategy!r}")


def simulate_accuracy(
    spec: SynthSpec,
    strategy: str = STRATEGY_UNIFIED,
    alpha: float | None = None,
    trials: int | None = None,
    stream: Sequence[tuple[PathEnsemble, StepVerdicts]] | None = None,
) -> AccuracyEstimate:
    """Monte-Carlo accuracy of a strategy over generated questions.

    A pregenerated stream may be passed so several strategies share the
    same questions; otherwise the stream is generated from the spec.
    """
    if stream is None:
        total = trials if trials is not None else spec.questions
        if total < 1:
            raise ValueError("trials must be >= 1")
        stream = generate_stream(spec, total)
    correct = 0
    for ensemble, verdicts in stream:
        chosen = _select(ensemble, verdicts, strategy, alpha)
        if chosen.answer == ensemble.gold_answer:
            correct += 1
    n = len(stream)
    p = correct / n
    return AccuracyEstimate(
        accuracy=p,
        std_error=math.sqrt(p * (1.0 - p) / n),
        trials=n,
        strategy=strategy,
        alpha=alpha,
    )


def brute_force_best_alpha(
    spec: SynthSpec,
    grid: Sequence[float],
    trials: int | None = None,
) -> tuple[float, list[AccuracyEstimate]]:
    """Evaluate every grid alpha on one shared question stream.

    Returns (best alpha, full curve); exact ties go to the smaller alpha.
    """
    if not grid:
        raise ValueError("alpha grid must be non-empty")
    stream = generate_stream(spec, trials if trials is not None else spec.questions)
    curve = [
        simulate_accuracy(spec, STRATEGY_UNIFIED, alpha=a, stream=stream) for a in grid
    ]
    best_alpha = None
    best_acc = -1.0
    for estimate in curve:
        a = float(estimate.alpha)
        if estimate.accuracy > best_acc or (
            estimate.accuracy == best_acc and a < best_alpha
        ):
            best_acc = estimate.accuracy
            best_alpha = a
    return best_alpha, curve


def with_seed(spec: SynthSpec, seed: int) -> SynthSpec:
    return replace(spec, seed=seed)
