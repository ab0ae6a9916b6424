"""Command line entry point: sidecartool export ..."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import __version__
from .errors import SidecarToolError
from .export import export_file
from .providers import (
    resolve_contradiction_scorer,
    resolve_embedder,
    resolve_token_scorer,
)

EXIT_OK = 0
EXIT_VALIDATION = 1

# the hub models the metric numbers are usually attributed to; any
# offline run must pick lexical:* providers explicitly
DEFAULT_EMBED_MODEL = "sentence-transformers/all-MiniLM-L6-v2"
DEFAULT_NLI_MODEL = "roberta-large-mnli"
DEFAULT_LM_MODEL = "gpt2-large"


class _Parser(argparse.ArgumentParser):
    """Usage errors exit with the tool's validation code, not argparse's 2."""

    def error(self, message: str) -> None:  # type: ignore[override]
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_VALIDATION)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="sidecartool",
                     description="export metric sidecar files from ensemble files")
    parser.add_argument("--version", action="version",
                        version=f"sidecartool {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_exp = sub.add_parser("export", help="compute embeddings, contradictions, logprobs")
    p_exp.add_argument("--ensembles", type=Path, required=True,
                       help="ensemble JSONL file")
    p_exp.add_argument("--gold", type=Path, default=None,
                       help="gold rationale JSONL file (question_id + steps)")
    p_exp.add_argument("--out", type=Path, required=True,
                       help="sidecar file to write")
    p_exp.add_argument("--embed-model", default=DEFAULT_EMBED_MODEL)
    p_exp.add_argument("--nli-model", default=DEFAULT_NLI_MODEL)
    p_exp.add_argument("--lm", default=DEFAULT_LM_MODEL)
    p_exp.add_argument("--batch", type=int, default=32,
                       help="inference batch size for hub models")
    return parser


def _cmd_export(args) -> int:
    if not args.ensembles.is_file():
        print(f"ensembles file not found: {args.ensembles}", file=sys.stderr)
        return EXIT_VALIDATION
    if args.gold is not None and not args.gold.is_file():
        print(f"gold file not found: {args.gold}", file=sys.stderr)
        return EXIT_VALIDATION
    if args.batch < 1:
        print(f"batch size must be positive, got {args.batch}", file=sys.stderr)
        return EXIT_VALIDATION

    embedder = resolve_embedder(args.embed_model, batch_size=args.batch)
    contradiction = resolve_contradiction_scorer(args.nli_model, batch_size=args.batch)
    token_scorer = resolve_token_scorer(args.lm)

    args.out.parent.mkdir(parents=True, exist_ok=True)
    result = export_file(
        args.ensembles,
        args.out,
        embedder=embedder,
        contradiction=contradiction,
        token_scorer=token_scorer,
        gold_path=args.gold,
    )
    for diag in result.diagnostics:
        print(f"warning: {diag}", file=sys.stderr)
    print(
        f"exported {result.records} records for {result.questions} questions "
        f"-> {args.out} ({len(result.diagnostics)} diagnostics)"
    )
    if result.records == 0:
        print("nothing exported", file=sys.stderr)
        return EXIT_VALIDATION
    return EXIT_OK


def run(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _cmd_export(args)
    except SidecarToolError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


def main() -> None:
    raise SystemExit(run())


if __name__ == "__main__":
    main()
