"""Command-line entry point.

Subcommands: shape, verify, calibrate, sweep, thresholds, metrics,
synth, report. Every run that takes --out writes its artifacts under
that directory with fixed filenames plus a machine-readable
manifest.json (inputs, config hash, tool version).

Exit codes: 0 success, 1 validation error, 2 transport error.

A --config FILE in simple KEY=VALUE form may accompany any subcommand;
its entries override the parsed flags.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .answers import NormalizedAnswer
from .calibration import (
    PathScore,
    SelectionResult,
    alpha_sweep,
    calibrate,
    default_alpha_grid,
    self_consistency,
    self_verification,
)
from .dominance import path_dominance_threshold, step_dominance_threshold
from .ensemble import load_ensembles, write_ensembles
from .errors import (
    DegenerateEnsemble,
    PathCalibError,
    TransportError,
    ValidationError,
)
from .metrics import aggregate_metrics, compute_metric_report, load_sidecars
from .reporting import (
    RunSummary,
    accuracy,
    emit_delta_report,
    emit_sweep_artifacts,
    pct,
    write_manifest,
    write_selections,
)
from .synth import SynthSpec, generate_stream
from .verification import (
    LLMClient,
    LLMVerifier,
    VerdictCache,
    load_oracle_verdicts,
    verify_ensemble,
    write_verdicts,
)

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_TRANSPORT = 2


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on usage errors; here that code belongs to transport."""

    def error(self, message: str) -> None:  # type: ignore[override]
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_VALIDATION)


def _build_parser() -> _Parser:
    parser = _Parser(prog="pathcalib", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"pathcalib {__version__}")
    sub = parser.add_subparsers(dest="subcommand", metavar="SUBCOMMAND")

    def common(p: argparse.ArgumentParser, out_required: bool = True) -> None:
        p.add_argument("--config", type=Path, default=None,
                       help="KEY=VALUE file; entries override flags")
        p.add_argument("--out", type=Path, required=out_required,
                       help="output directory")
        p.add_argument("--verbose", action="store_true")

    p_shape = sub.add_parser("shape", help="load, validate and shape an ensemble file")
    p_shape.add_argument("--ensembles", type=Path, required=True)
    p_shape.add_argument("--m", type=int, required=True, help="step budget per path")
    p_shape.add_argument("--n", type=int, default=None, help="expected path count")
    common(p_shape)

    p_verify = sub.add_parser("verify", help="produce step verdicts")
    p_verify.add_argument("--ensembles", type=Path, required=True)
    p_verify.add_argument("--m", type=int, required=True)
    p_verify.add_argument("--oracle", type=Path, default=None,
                          help="oracle verdict file (offline mode)")
    p_verify.add_argument("--model", default="default", help="endpoint model identifier")
    p_verify.add_argument("--template-id", default="backward-v1")
    p_verify.add_argument("--cache", type=Path, default=None, help="verdict cache file")
    p_verify.add_argument("--audit-log", type=Path, default=None)
    p_verify.add_argument("--max-attempts", type=int, default=4)
    p_verify.add_argument("--timeout", type=float, default=30.0)
    common(p_verify)

    p_cal = sub.add_parser("calibrate", help="select a final answer per question")
    p_cal.add_argument("--ensembles", type=Path, required=True)
    p_cal.add_argument("--m", type=int, required=True)
    p_cal.add_argument("--verdicts", type=Path, default=None)
    p_cal.add_argument("--alpha", type=float, default=None)
    p_cal.add_argument("--strategy", choices=["sc", "sv"], default=None)
    common(p_cal)

    p_sweep = sub.add_parser("sweep", help="accuracy across an alpha grid")
    p_sweep.add_argument("--ensembles", type=Path, required=True)
    p_sweep.add_argument("--m", type=int, required=True)
    p_sweep.add_argument("--verdicts", type=Path, required=True)
    p_sweep.add_argument("--grid", default="0:1:0.05",
                         help="start:stop:step or comma-separated alphas")
    common(p_sweep)

    p_thr = sub.add_parser("thresholds", help="print the two dominance thresholds")
    p_thr.add_argument("--n", type=int, required=True, help="path count N")
    p_thr.add_argument("--m", type=int, required=True, help="step budget M")
    common(p_thr, out_required=False)

    p_met = sub.add_parser("metrics", help="reasoning-quality scores from sidecars")
    p_met.add_argument("--sidecars", type=Path, required=True)
    p_met.add_argument("--selections", type=Path, default=None,
                       help="restrict to each question's selected path")
    p_met.add_argument("--all-paths", action="store_true",
                       help="score every path in the sidecar file")
    common(p_met)

    p_synth = sub.add_parser("synth", help="emit synthetic ensembles and verdicts")
    p_synth.add_argument("--n", type=int, default=10)
    p_synth.add_argument("--m", type=int, default=3)
    p_synth.add_argument("--p-final", type=float, default=0.55)
    p_synth.add_argument("--p-step-correct", type=float, default=0.8)
    p_synth.add_argument("--p-step-wrong", type=float, default=0.35)
    p_synth.add_argument("--distractors", type=int, default=3)
    p_synth.add_argument("--questions", type=int, default=2000)
    p_synth.add_argument("--seed", type=int, default=42)
    common(p_synth)

    p_rep = sub.add_parser("report", help="delta table of runs against a baseline")
    p_rep.add_argument("--ensembles", type=Path, required=True,
                       help="ensemble file carrying gold answers")
    p_rep.add_argument("--m", type=int, required=True)
    p_rep.add_argument("--baseline", required=True, metavar="LABEL=SELECTIONS")
    p_rep.add_argument("--variant", action="append", default=[],
                       metavar="LABEL=SELECTIONS")
    common(p_rep)

    return parser


# flags whose values are filesystem paths, for config-file coercion
_PATH_DESTS = {
    "ensembles", "verdicts", "oracle", "cache", "audit_log",
    "sidecars", "selections", "out", "config",
}


def _apply_config_file(args: argparse.Namespace) -> None:
    """KEY=VALUE entries override parsed flags; unknown keys are errors."""
    if getattr(args, "config", None) is None:
        return
    path = Path(args.config)
    if not path.is_file():
        raise ValidationError(f"config file not found: {path}")
    for line_no, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValidationError(f"{path}:{line_no}: expected KEY=VALUE")
        key, _, raw = line.partition("=")
        dest = key.strip().lower().replace("-", "_")
        if not hasattr(args, dest):
            raise ValidationError(f"{path}:{line_no}: unknown config key {key.strip()!r}")
        raw = raw.strip()
        if dest in _PATH_DESTS:
            value: object = Path(raw)
        else:
            try:
                value = json.loads(raw)
            except json.JSONDecodeError:
                value = raw
        setattr(args, dest, value)


def _ensure_out(args: argparse.Namespace) -> Path | None:
    out = getattr(args, "out", None)
    if out is None:
        return None
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load_shaped(args: argparse.Namespace, expected_n: int | None = None):
    path: Path = args.ensembles
    if not path.is_file():
        raise ValidationError(f"ensemble file not found: {path}")
    with path.open("r", encoding="utf-8") as fh:
        result = load_ensembles(fh, args.m, expected_n=expected_n)
    for diag in result.diagnostics:
        print(f"warning: {diag}", file=sys.stderr)
    if not result.ensembles:
        raise ValidationError(f"no usable ensembles in {path}")
    return result


def _load_verdict_file(path: Path, ensembles) -> dict:
    if not path.is_file():
        raise ValidationError(f"verdict file not found: {path}")
    by_id = {e.question_id: e for e in ensembles}
    with path.open("r", encoding="utf-8") as fh:
        verdicts, diagnostics = load_oracle_verdicts(fh, by_id)
    for diag in diagnostics:
        print(f"warning: {diag}", file=sys.stderr)
    return verdicts


def _parse_grid(spec: str) -> list[float]:
    spec = spec.strip()
    if ":" in spec:
        parts = spec.split(":")
        if len(parts) != 3:
            raise ValidationError(f"grid must be start:stop:step, got {spec!r}")
        start, stop, step = (float(p) for p in parts)
        if step <= 0 or stop < start:
            raise ValidationError(f"bad grid {spec!r}")
        if stop == start:
            return [start]
        n = round((stop - start) / step)
        if abs(start + n * step - stop) > 1e-9:
            raise ValidationError(f"grid step does not divide the range: {spec!r}")
        return [start + (stop - start) * i / n for i in range(n + 1)]
    try:
        values = [float(p) for p in spec.split(",") if p.strip()]
    except ValueError as exc:
        raise ValidationError(f"bad grid {spec!r}: {exc}") from exc
    if not values:
        raise ValidationError("empty alpha grid")
    return values


def read_selections(path: Path) -> list[SelectionResult]:
    """Load selections.jsonl back into SelectionResult objects."""
    if not path.is_file():
        raise ValidationError(f"selections file not found: {path}")
    selections = []
    with path.open("r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
                answer = NormalizedAnswer(rec["answer"]["kind"], rec["answer"]["canonical"])
                scores = tuple(
                    PathScore(i, s["n"], s["m"], s["d"])
                    for i, s in enumerate(rec.get("scores", []))
                )
                selections.append(
                    SelectionResult(
                        question_id=str(rec["question_id"]),
                        path_index=int(rec["path_index"]),
                        answer=answer,
                        scores=scores,
                        strategy=rec.get("strategy", "unified"),
                        alpha=rec.get("alpha"),
                    )
                )
            except (KeyError, TypeError, ValueError) as exc:
                raise ValidationError(f"{path}:{line_no}: bad selection record: {exc}")
    return selections


def _cmd_shape(args) -> int:
    out = _ensure_out(args)
    result = _load_shaped(args, expected_n=args.n)
    shaped = out / "shaped.jsonl"
    with shaped.open("w", encoding="utf-8") as fh:
        count = write_ensembles(result.ensembles, fh)
    write_manifest(
        out, "shape",
        {"ensembles": str(args.ensembles), "m": args.m, "n": args.n},
        inputs=[args.ensembles], outputs=["shaped.jsonl"],
    )
    print(f"shaped {count} ensembles -> {shaped} ({len(result.diagnostics)} skipped)")
    return EXIT_OK


def _cmd_verify(args) -> int:
    out = _ensure_out(args)
    result = _load_shaped(args)
    verdicts = []
    transport_failures = 0
    if args.oracle is not None:
        table = _load_verdict_file(args.oracle, result.ensembles)
        for ens in result.ensembles:
            verdicts.append(verify_ensemble(ens, table))
    else:
        client = LLMClient(
            timeout=args.timeout,
            max_attempts=args.max_attempts,
            audit_path=args.audit_log,
        )
        verifier = LLMVerifier(
            client=client,
            model_id=args.model,
            template_id=args.template_id,
            cache=VerdictCache(args.cache),
        )
        for ens in result.ensembles:
            verdicts.append(verify_ensemble(ens, verifier))
        for diag in verifier.diagnostics:
            print(f"warning: {diag}", file=sys.stderr)
        transport_failures = sum(
            "transport failure" in d for d in verifier.diagnostics
        )
    path = out / "verdicts.jsonl"
    with path.open("w", encoding="utf-8") as fh:
        count = write_verdicts(verdicts, fh)
    write_manifest(
        out, "verify",
        {
            "ensembles": str(args.ensembles), "m": args.m,
            "oracle": str(args.oracle) if args.oracle else None,
            "model": args.model, "template_id": args.template_id,
        },
        inputs=[p for p in (args.ensembles, args.oracle) if p],
        outputs=["verdicts.jsonl"],
    )
    print(f"verified {count} ensembles -> {path}")
    if transport_failures:
        print(f"error: {transport_failures} step verdicts lost to transport failures",
              file=sys.stderr)
        return EXIT_TRANSPORT
    return EXIT_OK


def _cmd_calibrate(args) -> int:
    if args.alpha is not None and args.strategy is not None:
        raise ValidationError("--alpha and --strategy are mutually exclusive")
    if args.alpha is None and args.strategy is None:
        raise ValidationError("one of --alpha or --strategy is required")
    if args.alpha is not None and not 0.0 <= args.alpha <= 1.0:
        raise ValidationError(f"alpha must lie in [0, 1], got {args.alpha}")

    out = _ensure_out(args)
    result = _load_shaped(args)
    needs_verdicts = args.strategy != "sc"
    verdicts = {}
    if needs_verdicts:
        if args.verdicts is None:
            raise ValidationError("--verdicts is required except with --strategy sc")
        verdicts = _load_verdict_file(args.verdicts, result.ensembles)

    selections = []
    for ens in result.ensembles:
        if args.strategy == "sc":
            selections.append(self_consistency(ens))
            continue
        if ens.question_id not in verdicts:
            raise ValidationError(f"no verdicts for question {ens.question_id}")
        if args.strategy == "sv":
            selections.append(self_verification(ens, verdicts[ens.question_id]))
        else:
            selections.append(calibrate(ens, verdicts[ens.question_id], args.alpha))

    path = out / "selections.jsonl"
    write_selections(selections, path)
    outputs = ["selections.jsonl"]

    gold = {e.question_id: e.gold_answer for e in result.ensembles if e.gold_answer}
    if len(gold) == len(result.ensembles):
        acc = accuracy(selections, gold)
        label = args.strategy or f"unified(alpha={args.alpha})"
        (out / "report.md").write_text(
            f"# calibration run\n\n- strategy: {label}\n"
            f"- questions: {len(selections)}\n- accuracy: {pct(acc)}\n",
            encoding="utf-8",
        )
        outputs.append("report.md")
        print(f"accuracy {pct(acc)} over {len(selections)} questions")
    write_manifest(
        out, "calibrate",
        {
            "ensembles": str(args.ensembles), "m": args.m,
            "verdicts": str(args.verdicts) if args.verdicts else None,
            "alpha": args.alpha, "strategy": args.strategy,
        },
        inputs=[p for p in (args.ensembles, args.verdicts) if p],
        outputs=outputs,
    )
    print(f"wrote {path}")
    return EXIT_OK


def _cmd_sweep(args) -> int:
    out = _ensure_out(args)
    result = _load_shaped(args)
    verdicts = _load_verdict_file(args.verdicts, result.ensembles)
    grid = _parse_grid(args.grid) if args.grid else default_alpha_grid()
    curve = alpha_sweep(result.ensembles, verdicts, grid)

    n_paths = result.ensembles[0].n_paths
    step = step_dominance_threshold(n_paths, args.m)
    marks = [step.value]
    try:
        marks.append(path_dominance_threshold(n_paths).value)
    except DegenerateEnsemble:
        pass
    emit_sweep_artifacts(curve, marks, out / "sweep.csv", out / "sweep.svg",
                         title=f"accuracy vs alpha (N={n_paths}, M={args.m})")
    best = max(curve, key=lambda p: (p.accuracy, -p.alpha))
    (out / "report.md").write_text(
        "# alpha sweep\n\n"
        f"- questions: {curve[0].n_questions}\n"
        f"- grid points: {len(curve)}\n"
        f"- best alpha: {best.alpha!r} (accuracy {pct(best.accuracy)})\n"
        f"- step-dominance threshold: {step.value:.6f}"
        f"{' (degenerate)' if step.degenerate else ''}\n"
        + (f"- path-dominance threshold: {marks[1]:.6f}\n" if len(marks) > 1 else ""),
        encoding="utf-8",
    )
    write_manifest(
        out, "sweep",
        {"ensembles": str(args.ensembles), "m": args.m,
         "verdicts": str(args.verdicts), "grid": args.grid},
        inputs=[args.ensembles, args.verdicts],
        outputs=["sweep.csv", "sweep.svg", "report.md"],
    )
    print(f"swept {len(curve)} alphas over {curve[0].n_questions} questions -> {out}")
    return EXIT_OK


def _cmd_thresholds(args) -> int:
    step = step_dominance_threshold(args.n, args.m)
    path = path_dominance_threshold(args.n)
    suffix = " (degenerate: fewer than 3 paths)" if step.degenerate else ""
    print(f"step_dominance_threshold {step.value:.6f}{suffix}")
    print(f"path_dominance_threshold {path.value:.6f}")
    out = _ensure_out(args)
    if out is not None:
        write_manifest(out, "thresholds", {"n": args.n, "m": args.m}, outputs=[])
    return EXIT_OK


def _cmd_metrics(args) -> int:
    out = _ensure_out(args)
    if not args.sidecars.is_file():
        raise ValidationError(f"sidecar file not found: {args.sidecars}")
    if args.selections is None and not args.all_paths:
        raise ValidationError("pass --selections SEL or --all-paths")
    with args.sidecars.open("r", encoding="utf-8") as fh:
        loaded = load_sidecars(fh)
    for diag in loaded.diagnostics:
        print(f"warning: {diag}", file=sys.stderr)

    sidecars = loaded.sidecars
    if args.selections is not None:
        wanted = {
            (sel.question_id, sel.path_index) for sel in read_selections(args.selections)
        }
        sidecars = [s for s in sidecars if (s.question_id, s.path_index) in wanted]
    if not sidecars:
        raise ValidationError("no sidecar records to score")

    reports = [compute_metric_report(s) for s in sidecars]
    lines = ["question_id,faithfulness,informativeness,consistency_steps,"
             "consistency_path,perplexity"]
    for rep in reports:
        cells = [rep.question_id or ""]
        for value in rep.scores().values():
            cells.append("" if value is None else repr(value))
        lines.append(",".join(cells))
    (out / "metrics.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")

    overall = aggregate_metrics(reports)
    rows = "\n".join(
        f"- {name}: {pct(value) if value is not None else 'n/a'}"
        for name, value in overall.scores().items()
    )
    (out / "report.md").write_text(
        f"# reasoning-quality metrics\n\n- paths scored: {len(reports)}\n{rows}\n",
        encoding="utf-8",
    )
    write_manifest(
        out, "metrics",
        {"sidecars": str(args.sidecars),
         "selections": str(args.selections) if args.selections else None,
         "all_paths": args.all_paths},
        inputs=[p for p in (args.sidecars, args.selections) if p],
        outputs=["metrics.csv", "report.md"],
    )
    print(f"scored {len(reports)} paths -> {out / 'metrics.csv'}")
    return EXIT_OK


def _cmd_synth(args) -> int:
    out = _ensure_out(args)
    spec = SynthSpec(
        n_paths=args.n,
        step_budget=args.m,
        p_final_correct=args.p_final,
        p_step_correct_given_final=args.p_step_correct,
        p_step_correct_given_wrong=args.p_step_wrong,
        distractor_count=args.distractors,
        seed=args.seed,
        questions=args.questions,
    )
    stream = generate_stream(spec)
    with (out / "ensembles.jsonl").open("w", encoding="utf-8") as fh:
        write_ensembles((e for e, _ in stream), fh)
    with (out / "verdicts.jsonl").open("w", encoding="utf-8") as fh:
        write_verdicts((v for _, v in stream), fh)
    write_manifest(
        out, "synth",
        {
            "n": args.n, "m": args.m, "p_final": args.p_final,
            "p_step_correct": args.p_step_correct, "p_step_wrong": args.p_step_wrong,
            "distractors": args.distractors, "questions": args.questions,
            "seed": args.seed,
        },
        outputs=["ensembles.jsonl", "verdicts.jsonl"],
    )
    print(f"generated {len(stream)} synthetic questions -> {out}")
    return EXIT_OK


def _split_labeled(value: str) -> tuple[str, Path]:
    label, sep, path = value.partition("=")
    if not sep or not label or not path:
        raise ValidationError(f"expected LABEL=SELECTIONS, got {value!r}")
    return label, Path(path)


def _cmd_report(args) -> int:
    out = _ensure_out(args)
    result = _load_shaped(args)
    gold = {}
    for ens in result.ensembles:
        if ens.gold_answer is None:
            raise ValidationError(f"ensemble {ens.question_id} has no gold answer")
        gold[ens.question_id] = ens.gold_answer

    def summarize(label: str, path: Path) -> RunSummary:
        selections = read_selections(path)
        return RunSummary(
            label=label,
            accuracy_pct=accuracy(selections, gold) * 100.0,
            question_ids=frozenset(s.question_id for s in selections),
        )

    base_label, base_path = _split_labeled(args.baseline)
    baseline = summarize(base_label, base_path)
    variants = [summarize(*_split_labeled(v)) for v in args.variant]
    report = emit_delta_report(baseline, variants, out / "report.csv", out / "report.md")
    write_manifest(
        out, "report",
        {"ensembles": str(args.ensembles), "m": args.m,
         "baseline": args.baseline, "variants": list(args.variant)},
        inputs=[args.ensembles, base_path] + [_split_labeled(v)[1] for v in args.variant],
        outputs=["report.csv", "report.md"],
    )
    for row in report.rows:
        print("  ".join(row))
    return EXIT_OK


_COMMANDS = {
    "shape": _cmd_shape,
    "verify": _cmd_verify,
    "calibrate": _cmd_calibrate,
    "sweep": _cmd_sweep,
    "thresholds": _cmd_thresholds,
    "metrics": _cmd_metrics,
    "synth": _cmd_synth,
    "report": _cmd_report,
}


def run(argv: list[str] | None = None) -> int:
    """Parse argv, dispatch, and map failures onto exit codes."""
    parser = _build_parser()
    args = parser.parse_args(argv)
    if args.subcommand is None:
        parser.print_usage(sys.stderr)
        print("error: a subcommand is required", file=sys.stderr)
        return EXIT_VALIDATION
    logging.basicConfig(
        level=logging.DEBUG if getattr(args, "verbose", False) else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        _apply_config_file(args)
        return _COMMANDS[args.subcommand](args)
    except TransportError as exc:
        print(f"transport error: {exc}", file=sys.stderr)
        return EXIT_TRANSPORT
    except (ValidationError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except PathCalibError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


def main() -> int:
    return run(sys.argv[1:])


if __name__ == "__main__":
    raise SystemExit(main())
