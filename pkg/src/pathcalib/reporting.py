"""Report emission: accuracy tables with deltas, sweep artifacts, manifests.

Numbers are carried at full precision everywhere and rounded only at
render time; deltas are computed on the raw values and formatted in the
value(+/-delta) convention, e.g. "87.11(+6.90)". The sweep plot is a
hand-written SVG so identical inputs produce identical bytes.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from . import __version__
from .answers import NormalizedAnswer
from .calibration import SelectionResult, SweepPoint
from .errors import MissingGold, QuestionSetMismatch


def accuracy(
    selections: Sequence[SelectionResult],
    gold: Mapping[str, NormalizedAnswer],
) -> float:
    """Fraction of selections matching gold, in [0, 1]; render with pct()."""
    if not selections:
        return 0.0
    correct = 0
    for sel in selections:
        if sel.question_id not in gold:
            raise MissingGold(f"no gold answer for question {sel.question_id}")
        if sel.answer == gold[sel.question_id]:
            correct += 1
    return correct / len(selections)


def pct(fraction: float) -> str:
    """Render a [0,1] fraction as a percentage with 2 decimals."""
    return f"{fraction * 100.0:.2f}"


def delta_cell(value: float, baseline: float) -> str:
    """value(+/-delta) with 2 decimals each, deltas on unrounded values."""
    return f"{value:.2f}({value - baseline:+.2f})"


@dataclass(frozen=True)
class RunSummary:
    """One strategy's results over a question set, percentages in [0, 100]."""

    label: str
    accuracy_pct: float
    metrics_pct: dict[str, float] = field(default_factory=dict)
    question_ids: frozenset[str] | None = None


@dataclass(frozen=True)
class DeltaReport:
    columns: tuple[str, ...]
    rows: tuple[tuple[str, ...], ...]  # first cell is the strategy label

    def to_markdown(self) -> str:
        header = "| " + " | ".join(("strategy",) + self.columns) + " |"
        rule = "|" + "|".join(["---"] * (len(self.columns) + 1)) + "|"
        lines = [header, rule]
        for row in self.rows:
            lines.append("| " + " | ".join(row) + " |")
        return "\n".join(lines) + "\n"

    def to_csv(self) -> str:
        lines = [",".join(("strategy",) + self.columns)]
        for row in self.rows:
            lines.append(",".join(row))
        return "\n".join(lines) + "\n"


def build_delta_report(
    baseline: RunSummary, variants: Sequence[RunSummary]
) -> DeltaReport:
    """Rows of value(+/-delta) cells against the baseline run."""
    for variant in variants:
        if (
            baseline.question_ids is not None
            and variant.question_ids is not None
            and variant.question_ids != baseline.question_ids
        ):
            raise QuestionSetMismatch(
                f"run {variant.label!r} covers a different question set "
                f"than baseline {baseline.label!r}"
            )
        missing = set(baseline.metrics_pct) - set(variant.metrics_pct)
        if missing:
            raise QuestionSetMismatch(
                f"run {variant.label!r} lacks metric columns {sorted(missing)}"
            )

    metric_names = tuple(sorted(baseline.metrics_pct))
    columns = ("accuracy",) + metric_names
    rows = [
        (baseline.label, f"{baseline.accuracy_pct:.2f}")
        + tuple(f"{baseline.metrics_pct[m]:.2f}" for m in metric_names)
    ]
    for variant in variants:
        rows.append(
            (variant.label, delta_cell(variant.accuracy_pct, baseline.accuracy_pct))
            + tuple(
                delta_cell(variant.metrics_pct[m], baseline.metrics_pct[m])
                for m in metric_names
            )
        )
    return DeltaReport(columns=columns, rows=tuple(rows))


def emit_delta_report(
    baseline: RunSummary,
    variants: Sequence[RunSummary],
    csv_path: str | Path | None = None,
    md_path: str | Path | None = None,
) -> DeltaReport:
    report = build_delta_report(baseline, variants)
    if csv_path is not None:
        Path(csv_path).write_text(report.to_csv(), encoding="utf-8")
    if md_path is not None:
        Path(md_path).write_text(report.to_markdown(), encoding="utf-8")
    return report


def sweep_csv(curve: Sequence[SweepPoint]) -> str:
    lines = ["alpha,accuracy,n_questions"]
    for point in curve:
        lines.append(f"{point.alpha!r},{point.accuracy!r},{point.n_questions}")
    return "\n".join(lines) + "\n"


_SVG_W, _SVG_H = 720, 440
_ML, _MR, _MT, _MB = 64, 24, 28, 56


def _sx(alpha: float) -> float:
    return _ML + alpha * (_SVG_W - _ML - _MR)


def _sy(acc: float) -> float:
    return _SVG_H - _MB - acc * (_SVG_H - _MT - _MB)


def sweep_svg(
    curve: Sequence[SweepPoint],
    thresholds: Sequence[float] = (),
    title: str = "accuracy vs alpha",
) -> str:
    """Self-contained sweep plot; byte-deterministic for identical input."""
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_SVG_W}" height="{_SVG_H}" '
        f'viewBox="0 0 {_SVG_W} {_SVG_H}" font-family="monospace" font-size="12">',
        f'<rect width="{_SVG_W}" height="{_SVG_H}" fill="#ffffff"/>',
        f'<text x="{_ML}" y="{_MT - 8}" font-size="14" fill="#111111">{title}</text>',
    ]
    axis = "#333333"
    parts.append(
        f'<line x1="{_ML}" y1="{_sy(0):.2f}" x2="{_SVG_W - _MR}" y2="{_sy(0):.2f}" '
        f'stroke="{axis}" stroke-width="1"/>'
    )
    parts.append(
        f'<line x1="{_ML}" y1="{_sy(0):.2f}" x2="{_ML}" y2="{_sy(1):.2f}" '
        f'stroke="{axis}" stroke-width="1"/>'
    )
    for i in range(5):
        v = i / 4.0
        parts.append(
            f'<text x="{_sx(v):.2f}" y="{_SVG_H - _MB + 18}" text-anchor="middle" '
            f'fill="{axis}">{v:.2f}</text>'
        )
        parts.append(
            f'<text x="{_ML - 8}" y="{_sy(v) + 4:.2f}" text-anchor="end" '
            f'fill="{axis}">{v:.2f}</text>'
        )
    parts.append(
        f'<text x="{(_ML + _SVG_W - _MR) / 2:.2f}" y="{_SVG_H - 12}" '
        f'text-anchor="middle" fill="{axis}">alpha</text>'
    )

    for t in thresholds:
        x = _sx(t)
        parts.append(
            f'<line x1="{x:.2f}" y1="{_sy(0):.2f}" x2="{x:.2f}" y2="{_sy(1):.2f}" '
            f'stroke="#cc8800" stroke-width="1" stroke-dasharray="4,3"/>'
        )
        parts.append(
            f'<text x="{x:.2f}" y="{_sy(1) - 6:.2f}" text-anchor="middle" '
            f'fill="#cc8800" font-size="16">&#9733;</text>'
        )
        parts.append(
            f'<text x="{x:.2f}" y="{_SVG_H - _MB + 34}" text-anchor="middle" '
            f'fill="#cc8800">{t:.6f}</text>'
        )

    if curve:
        points = " ".join(f"{_sx(p.alpha):.2f},{_sy(p.accuracy):.2f}" for p in curve)
        parts.append(
            f'<polyline points="{points}" fill="none" stroke="#2255cc" stroke-width="2"/>'
        )
        for p in curve:
            parts.append(
                f'<circle cx="{_sx(p.alpha):.2f}" cy="{_sy(p.accuracy):.2f}" r="3" '
                f'fill="#2255cc"/>'
            )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def emit_sweep_artifacts(
    curve: Sequence[SweepPoint],
    thresholds: Sequence[float],
    csv_path: str | Path,
    svg_path: str | Path,
    title: str = "accuracy vs alpha",
) -> None:
    if not curve:
        raise ValueError("sweep curve is empty")
    Path(csv_path).write_text(sweep_csv(curve), encoding="utf-8")
    Path(svg_path).write_text(sweep_svg(curve, thresholds, title), encoding="utf-8")


def selection_record(selection: SelectionResult) -> dict:
    """Wire form of one selection for selections.jsonl."""
    return {
        "question_id": selection.question_id,
        "strategy": selection.strategy,
        "alpha": selection.alpha,
        "path_index": selection.path_index,
        "answer": {"kind": selection.answer.kind, "canonical": selection.answer.canonical},
        "scores": [
            {"n": s.n, "m": s.m, "d": s.d} for s in selection.scores
        ],
    }


def write_selections(selections: Iterable[SelectionResult], path: str | Path) -> int:
    count = 0
    with Path(path).open("w", encoding="utf-8") as fh:
        for sel in selections:
            fh.write(json.dumps(selection_record(sel), ensure_ascii=False) + "\n")
            count += 1
    return count


def _sha256_file(path: Path) -> str:
    digest = hashlib.sha256()
    with path.open("rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


def write_manifest(
    out_dir: str | Path,
    subcommand: str,
    config: Mapping[str, object],
    inputs: Sequence[str | Path] = (),
    outputs: Sequence[str] = (),
) -> Path:
    """Machine-readable run manifest: inputs, config hash, tool version.

    Deliberately timestamp-free so reruns of identical configs produce
    identical manifest bytes.
    """
    canonical_config = json.dumps(config, sort_keys=True, ensure_ascii=False)
    manifest = {
        "tool": "pathcalib",
        "tool_version": __version__,
        "subcommand": subcommand,
        "config": json.loads(canonical_config),
        "config_hash": hashlib.sha256(canonical_config.encode("utf-8")).hexdigest(),
        "inputs": [
            {"path": str(p), "sha256": _sha256_file(Path(p))}
            for p in inputs
            if Path(p).is_file()
        ],
        "outputs": sorted(outputs),
    }
    out = Path(out_dir) / "manifest.json"
    out.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return out
