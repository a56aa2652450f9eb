"""Run metrics: outcome categories A-D, quality bins S1-S3, edit effort.

Category definitions: A = error-free with strict performance improvement,
B = error-free without improvement, C = erroneous code, D = terminated
without generating code. Quality bins over 1-10 manual scores: S1 = 8-10,
S2 = 4-7, S3 = 1-3. Time saving = (1 - repaired/edited) * 100, averaged
per run (never recomputed from averaged line counts).
"""

import csv
import io
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

from .diffing import diff_counts
from .errors import EvaluationError
from .workspace import HIGHER_BETTER, LOWER_BETTER

logger = logging.getLogger(__name__)

CATEGORY_A = "A"
CATEGORY_B = "B"
CATEGORY_C = "C"
CATEGORY_D = "D"
CATEGORIES = (CATEGORY_A, CATEGORY_B, CATEGORY_C, CATEGORY_D)

BIN_S1 = "S1"
BIN_S2 = "S2"
BIN_S3 = "S3"
BINS = (BIN_S1, BIN_S2, BIN_S3)


@dataclass
class RunAssessment:
    run_id: str
    code_generated: bool
    executes_clean: bool
    baseline_performance: float
    perf_direction: str
    final_performance: Optional[float] = None
    manual_score: Optional[int] = None
    lines_edited: int = 0
    lines_repaired: int = 0

    def __post_init__(self) -> None:
        if self.manual_score is not None and not 1 <= self.manual_score <= 10:
            raise EvaluationError(
                f"{self.run_id}: manual score must be in 1..10, got {self.manual_score}"
            )
        if self.perf_direction not in (HIGHER_BETTER, LOWER_BETTER):
            raise EvaluationError(
                f"{self.run_id}: unknown perf direction {self.perf_direction!r}"
            )


def classify_outcome(assessment: RunAssessment) -> str:
    """Map one run to exactly one of the four outcome categories."""
    if not assessment.code_generated:
        return CATEGORY_D
    if not assessment.executes_clean:
        return CATEGORY_C
    if assessment.final_performance is None:
        logger.warning(
            "%s: executed cleanly but no performance value was extracted; "
            "improvement not demonstrated, classifying as B",
            assessment.run_id,
        )
        return CATEGORY_B
    if assessment.perf_direction == HIGHER_BETTER:
        improved = assessment.final_performance > assessment.baseline_performance
    else:
        improved = assessment.final_performance < assessment.baseline_performance
    return CATEGORY_A if improved else CATEGORY_B


def bin_quality(score: int) -> str:
    """1-10 manual score -> quality bin (8-10 S1, 4-7 S2, 1-3 S3)."""
    if not isinstance(score, int) or isinstance(score, bool) or not 1 <= score <= 10:
        raise EvaluationError(f"manual score must be an integer in 1..10, got {score!r}")
    if score >= 8:
        return BIN_S1
    if score >= 4:
        return BIN_S2
    return BIN_S3


def lines_edited(starter_text: str, final_text: str) -> int:
    """Additions plus deletions of the minimal line diff (a replacement is 2)."""
    additions, deletions = diff_counts(starter_text, final_text)
    return additions + deletions


def time_saving(lines_edited_count: int, lines_repaired_count: int) -> float:
    """(1 - repaired/edited) * 100; undefined (raises) when nothing was edited."""
    if lines_edited_count <= 0:
        raise EvaluationError(
            "time saving is undefined when lines edited is 0; exclude the run"
        )
    return (1.0 - lines_repaired_count / lines_edited_count) * 100.0


@dataclass(frozen=True)
class RunMetrics:
    """Derived metrics for one run."""

    run_id: str
    experiment: str
    task: str
    category: str
    quality_bin: Optional[str]
    lines_edited: int
    lines_repaired: int
    time_saving_pct: Optional[float]


@dataclass
class GroupMetrics:
    experiment: str
    task: str
    runs: int
    category_pct: Dict[str, float]
    bin_pct: Dict[str, float]
    scored_runs: int
    avg_lines_edited: Optional[float]
    avg_lines_repaired: Optional[float]
    avg_time_saving: Optional[float]


@dataclass
class MetricsReport:
    runs: List[RunMetrics] = field(default_factory=list)
    rows: List[GroupMetrics] = field(default_factory=list)

    def row_for(self, experiment: str, task: str) -> GroupMetrics:
        for row in self.rows:
            if row.experiment == experiment and row.task == task:
                return row
        raise EvaluationError(f"no metrics row for ({experiment!r}, {task!r})")


def run_metrics(experiment: str, task: str, assessment: RunAssessment) -> RunMetrics:
    saving = None
    if assessment.lines_edited > 0:
        saving = time_saving(assessment.lines_edited, assessment.lines_repaired)
    return RunMetrics(
        run_id=assessment.run_id,
        experiment=experiment,
        task=task,
        category=classify_outcome(assessment),
        quality_bin=(
            bin_quality(assessment.manual_score)
            if assessment.manual_score is not None
            else None
        ),
        lines_edited=assessment.lines_edited,
        lines_repaired=assessment.lines_repaired,
        time_saving_pct=saving,
    )


def _mean(values: Sequence[float]) -> Optional[float]:
    return sum(values) / len(values) if values else None


def _group_metrics(
    experiment: str, task: str, assessments: Sequence[RunAssessment]
) -> GroupMetrics:
    total = len(assessments)
    category_counts = {c: 0 for c in CATEGORIES}
    for assessment in assessments:
        category_counts[classify_outcome(assessment)] += 1
    category_pct = {c: 100.0 * category_counts[c] / total for c in CATEGORIES}

    scored = [a for a in assessments if a.manual_score is not None]
    bin_counts = {b: 0 for b in BINS}
    for assessment in scored:
        bin_counts[bin_quality(assessment.manual_score)] += 1
    bin_pct = {
        b: (100.0 * bin_counts[b] / len(scored)) if scored else 0.0 for b in BINS
    }

    savings: List[float] = []
    for assessment in assessments:
        if assessment.lines_edited > 0:
            savings.append(time_saving(assessment.lines_edited, assessment.lines_repaired))
        else:
            logger.warning(
                "%s: excluded from time-saving average (0 lines edited)",
                assessment.run_id,
            )
    return GroupMetrics(
        experiment=experiment,
        task=task,
        runs=total,
        category_pct=category_pct,
        bin_pct=bin_pct,
        scored_runs=len(scored),
        avg_lines_edited=_mean([float(a.lines_edited) for a in assessments]),
        avg_lines_repaired=_mean([float(a.lines_repaired) for a in assessments]),
        avg_time_saving=_mean(savings),
    )


def aggregate(
    groups: Dict[Tuple[str, str], Sequence[RunAssessment]]
) -> MetricsReport:
    """Per (experiment, task) metrics plus an Average row per experiment.

    Averages are means of per-run values; in particular the time-saving
    average is the mean of per-run percentages.
    """
    report = MetricsReport()
    experiments: Dict[str, List[RunAssessment]] = {}
    for (experiment, task), assessments in sorted(groups.items()):
        if not assessments:
            logger.warning("(%s, %s): empty group omitted", experiment, task)
            continue
        report.runs.extend(run_metrics(experiment, task, a) for a in assessments)
        report.rows.append(_group_metrics(experiment, task, list(assessments)))
        experiments.setdefault(experiment, []).extend(assessments)
    for experiment, assessments in sorted(experiments.items()):
        report.rows.append(_group_metrics(experiment, "Average", assessments))
    return report


# -- scores ingestion ---------------------------------------------------------


@dataclass(frozen=True)
class ScoreRow:
    run_id: str
    manual_score: int
    lines_repaired: int
    reviewer_id: str


def load_scores(path: Path) -> List[ScoreRow]:
    """Reviewer CSV: run_id, manual_score, lines_repaired, reviewer_id."""
    rows: List[ScoreRow] = []
    with open(path, newline="", encoding="utf-8") as handle:
        reader = csv.DictReader(handle)
        required = {"run_id", "manual_score", "lines_repaired", "reviewer_id"}
        if reader.fieldnames is None or not required.issubset(set(reader.fieldnames)):
            raise EvaluationError(
                f"scores file {path} must have columns: {', '.join(sorted(required))}"
            )
        for lineno, raw in enumerate(reader, start=2):
            try:
                rows.append(
                    ScoreRow(
                        run_id=raw["run_id"].strip(),
                        manual_score=int(raw["manual_score"]),
                        lines_repaired=int(raw["lines_repaired"]),
                        reviewer_id=raw["reviewer_id"].strip(),
                    )
                )
            except (TypeError, ValueError) as exc:
                raise EvaluationError(f"{path}: bad scores row at line {lineno}: {exc}")
    return rows


# -- rendering -----------------------------------------------------------------


def _format_cell(value: Optional[float]) -> str:
    return f"{value:.2f}" if value is not None else "-"


def _render_table(title: str, header: List[str], rows: List[List[str]]) -> str:
    widths = [len(h) for h in header]
    for row in rows:
        for i, cell in enumerate(row):
            widths[i] = max(widths[i], len(cell))
    lines = [title, ""]
    lines.append("  ".join(h.ljust(widths[i]) for i, h in enumerate(header)))
    lines.append("  ".join("-" * w for w in widths))
    for row in rows:
        lines.append("  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)))
    return "\n".join(lines)


def render_report_text(report: MetricsReport) -> str:
    """The three-table layout: categories, quality bins, efficiency."""
    categories_rows = [
        [r.experiment, r.task]
        + [_format_cell(r.category_pct[c]) for c in CATEGORIES]
        for r in report.rows
    ]
    bins_rows = [
        [r.experiment, r.task] + [_format_cell(r.bin_pct[b]) for b in BINS]
        for r in report.rows
    ]
    perf_rows = [
        [
            r.experiment,
            r.task,
            _format_cell(r.avg_lines_edited),
            _format_cell(r.avg_lines_repaired),
            _format_cell(r.avg_time_saving),
        ]
        for r in report.rows
    ]
    tables = [
        _render_table(
            "Error Categories Analysis",
            ["Experiment", "Datapoint", "A (%)", "B (%)", "C (%)", "D (%)"],
            categories_rows,
        ),
        _render_table(
            "Code Quality Analysis",
            ["Experiment", "Datapoint", "S1 (%)", "S2 (%)", "S3 (%)"],
            bins_rows,
        ),
        _render_table(
            "Performance Metrics Analysis",
            [
                "Experiment",
                "Datapoint",
                "Avg. #Lines Edited",
                "Avg. #Lines Repaired",
                "Avg. Time Saving (%)",
            ],
            perf_rows,
        ),
    ]
    return "\n\n".join(tables) + "\n"


def render_report_csv(report: MetricsReport) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer)
    writer.writerow(
        ["experiment", "task", "runs", "scored_runs"]
        + [f"category_{c}_pct" for c in CATEGORIES]
        + [f"bin_{b}_pct" for b in BINS]
        + ["avg_lines_edited", "avg_lines_repaired", "avg_time_saving_pct"]
    )
    for r in report.rows:
        writer.writerow(
            [r.experiment, r.task, r.runs, r.scored_runs]
            + [f"{r.category_pct[c]:.4f}" for c in CATEGORIES]
            + [f"{r.bin_pct[b]:.4f}" for b in BINS]
            + [
                _format_cell(r.avg_lines_edited),
                _format_cell(r.avg_lines_repaired),
                _format_cell(r.avg_time_saving),
            ]
        )
    return buffer.getvalue()


def render_runs_csv(report: MetricsReport) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer)
    writer.writerow(
        [
            "run_id",
            "experiment",
            "task",
            "category",
            "quality_bin",
            "lines_edited",
            "lines_repaired",
            "time_saving_pct",
        ]
    )
    for r in report.runs:
        writer.writerow(
            [
                r.run_id,
                r.experiment,
                r.task,
                r.category,
                r.quality_bin or "-",
                r.lines_edited,
                r.lines_repaired,
                _format_cell(r.time_saving_pct),
            ]
        )
    return buffer.getvalue()
