"""Answer calibration for ensembles of multi-step reasoning paths.

Given N candidate reasoning paths per question, the package counts
answer agreement (n_i), verifies intermediate steps (m_i), blends both
signals into one score d_i = alpha*n_i/N + (1-alpha)*m_i/M, and selects
the calibrated final answer. It also provides the dominance thresholds
on alpha with a brute-force enumeration oracle, a five-score
reasoning-quality evaluator over precomputed sidecar files, a synthetic
laboratory for sweep experiments, and a CLI tying it together.
"""

__version__ = "0.1.0"

from .answers import (
    NormalizedAnswer,
    extract_final_answer,
    normalize_answer,
    segment_steps,
)
from .calibration import (
    CalibrationConfig,
    PathScore,
    SelectionResult,
    SweepPoint,
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
from .dominance import (
    DominancePair,
    DominanceReport,
    DominanceThreshold,
    check_dominance,
    path_dominance_threshold,
    step_dominance_threshold,
)
from .errors import (
    AuthError,
    DegenerateEnsemble,
    DimensionMismatch,
    EmptyInput,
    EmptySource,
    EmptyTokens,
    EndpointNotConfigured,
    InvalidShape,
    InvalidTarget,
    MalformedResponse,
    MissingGold,
    NoRealSteps,
    OracleMissing,
    PathCalibError,
    PositiveLogProb,
    QuestionSetMismatch,
    RateLimited,
    SchemaViolation,
    TemplateNotFound,
    TransportError,
    UnparseableAnswer,
    ValidationError,
    ZeroVector,
)
from .ensemble import (
    Diagnostic,
    LoadResult,
    PathEnsemble,
    ReasoningPath,
    ReasoningStep,
    load_ensembles,
    shape_path,
    write_ensembles,
)
from .metrics import (
    MetricReport,
    ScoreSidecar,
    SidecarHeader,
    SidecarLoadResult,
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
from .reporting import (
    DeltaReport,
    RunSummary,
    accuracy,
    build_delta_report,
    delta_cell,
    emit_delta_report,
    emit_sweep_artifacts,
    pct,
    selection_record,
    sweep_csv,
    sweep_svg,
    write_manifest,
    write_selections,
)
from .synth import (
    AccuracyEstimate,
    SynthSpec,
    brute_force_best_alpha,
    generate_ensemble,
    generate_stream,
    simulate_accuracy,
    with_seed,
)
from .verification import (
    CompletionEnvelope,
    DecodingParams,
    LLMClient,
    LLMVerifier,
    StepVerdicts,
    VerdictCache,
    VerificationRequest,
    build_backward_verification_prompt,
    cache_key,
    llm_complete,
    load_oracle_verdicts,
    parse_verdict,
    verify_ensemble,
    write_verdicts,
)

__all__ = [name for name in dir() if not name.startswith("_")]
