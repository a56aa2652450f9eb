"""Command-line entry points: validate, run, eval, diff.

Exit-code contract: 0 success, 1 run/eval failure, 2 usage or configuration
error. Each run gets its own immutable directory under the runs root with a
workspace copy, per-step records, the rendered research log, the cassette
(when recording) and an atomically written manifest.
"""

import argparse
import hashlib
import json
import os
import secrets
import shutil
import sys
import time
from pathlib import Path
from typing import Dict, List, Optional, Tuple

from . import evaluation, planner
from .config import load_config
from .errors import RcaError, UsageError
from .executor import BACKEND_PLAIN, execute_script
from .gateway import MODE_LIVE, MODE_RECORD, MODE_REPLAY, Gateway, SentinelProvider
from .research_log import ResearchLog
from .workspace import ROLE_STARTER_CODE, Workspace

MANIFEST_FILE = "run_manifest.json"
LOCK_FILE = ".rca.lock"


def _new_run_dir(runs_root: Path) -> Tuple[str, Path]:
    runs_root.mkdir(parents=True, exist_ok=True)
    while True:
        run_id = time.strftime("%Y%m%dT%H%M%SZ", time.gmtime()) + "-" + secrets.token_hex(3)
        run_dir = runs_root / run_id
        try:
            run_dir.mkdir(exist_ok=False)
            return run_id, run_dir
        except FileExistsError:
            continue


def _config_digest(config_path: Optional[Path]) -> str:
    if config_path is None:
        return "defaults"
    return hashlib.sha256(Path(config_path).read_bytes()).hexdigest()


def _write_manifest(run_dir: Path, manifest: dict) -> None:
    for artifact in manifest.get("artifacts", {}).values():
        if artifact and not (run_dir / artifact).exists():
            raise RcaError(f"manifest references a missing artifact: {artifact}")
    path = run_dir / MANIFEST_FILE
    tmp = path.with_suffix(".json.tmp")
    tmp.write_text(json.dumps(manifest, indent=2, ensure_ascii=False), encoding="utf-8")
    tmp.replace(path)


class _WorkspaceLock:
    """Guards a source workspace against concurrent live-mode runs."""

    def __init__(self, workspace_dir: Path, enabled: bool):
        self.path = Path(workspace_dir) / LOCK_FILE
        self.enabled = enabled
        self._fd: Optional[int] = None

    def __enter__(self):
        if not self.enabled:
            return self
        try:
            self._fd = os.open(self.path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
            os.write(self._fd, str(os.getpid()).encode())
        except FileExistsError:
            raise UsageError(
                f"workspace is locked by another live run ({self.path}); remove "
                f"the lock file if that run is no longer active"
            )
        return self

    def __exit__(self, *exc):
        if self._fd is not None:
            os.close(self._fd)
            self.path.unlink(missing_ok=True)
        return False


def cmd_validate(args: argparse.Namespace) -> int:
    try:
        workspace = Workspace.load(Path(args.workspace))
    except RcaError as exc:
        print(f"INVALID: {exc}")
        return 1
    baseline = workspace.read_baseline_performance()
    print(f"workspace: {workspace.root_dir}")
    for known in workspace.manifest:
        print(f"  {known.role}: {known.relative_path}")
    print(f"  interpreter: {workspace.script_interpreter}")
    print(f"  baseline performance: {baseline.value} ({baseline.direction})")
    print("OK")
    return 0


def cmd_run(args: argparse.Namespace) -> int:
    if args.record and args.replay:
        raise UsageError("--record and --replay are mutually exclusive")
    if args.replay and not args.cassette:
        raise UsageError("--replay requires --cassette")
    config = load_config(Path(args.config) if args.config else None)
    if args.max_steps is not None:
        config.max_steps = args.max_steps

    source = Path(args.workspace)
    Workspace.load(source)  # fail fast before creating the run directory

    gateway_mode = MODE_REPLAY if args.replay else MODE_RECORD if args.record else MODE_LIVE
    runs_root = Path(args.runs_dir)
    run_id, run_dir = _new_run_dir(runs_root)
    started_at = time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime())

    workspace_copy = run_dir / "workspace"
    shutil.copytree(source, workspace_copy)
    (workspace_copy / LOCK_FILE).unlink(missing_ok=True)
    workspace = Workspace.load(workspace_copy, history_dir=run_dir / "edit_history")

    if gateway_mode == MODE_REPLAY:
        cassette_path = Path(args.cassette)
        providers = {tag: SentinelProvider(tag) for tag in config.roles}
    elif gateway_mode == MODE_RECORD:
        cassette_path = Path(args.cassette) if args.cassette else run_dir / "cassette.jsonl"
        providers = None
    else:
        cassette_path = None
        providers = None
    gateway = Gateway(
        config, mode=gateway_mode, cassette_path=cassette_path, providers=providers
    )

    with _WorkspaceLock(source, enabled=gateway_mode == MODE_LIVE):
        if args.mode == planner.MODE_SINGLE:
            loop_log: Optional[ResearchLog] = None
            result = planner.run_single_call(workspace, gateway, config, run_dir)
        else:
            loop = planner.PlannerLoop(
                workspace, gateway, config, run_dir, mode=args.mode
            )
            result = loop.run_loop()
            loop_log = loop.log

    log = loop_log if loop_log is not None else ResearchLog(run_dir, config=config)
    (run_dir / "research_log.md").write_text(log.render_log_file(), encoding="utf-8")

    if gateway_mode == MODE_RECORD and args.cassette:
        recorded = Path(args.cassette)
        if recorded.resolve() != (run_dir / "cassette.jsonl").resolve():
            shutil.copyfile(recorded, run_dir / "cassette.jsonl")

    success = result.termination == planner.TERMINATION_FINAL_ANSWER
    if args.mode == planner.MODE_SINGLE:
        success = result.generated_script is not None

    manifest = {
        "run_id": run_id,
        "mode": args.mode,
        "workspace_source": str(source.resolve()),
        "task": source.resolve().name,
        "config_digest": _config_digest(Path(args.config) if args.config else None),
        "cassette": {
            "path": str(cassette_path) if cassette_path else None,
            "mode": gateway_mode,
        },
        "termination": result.termination,
        "steps_taken": result.steps_taken,
        "final_answer_text": result.final_answer_text,
        "generated_script": result.generated_script,
        "started_at": started_at,
        "finished_at": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
        "artifacts": {
            "workspace": "workspace",
            "steps": "steps",
            "research_log": "research_log.md",
        },
    }
    _write_manifest(run_dir, manifest)
    print(f"run directory: {run_dir}")
    print(f"termination: {result.termination} after {result.steps_taken} step(s)")
    if result.generated_script:
        print(f"generated script: {workspace_copy / result.generated_script}")
    return 0 if success else 1


def _discover_runs(runs_dir: Path) -> List[Tuple[Path, dict]]:
    runs = []
    if runs_dir.is_dir():
        for child in sorted(runs_dir.iterdir()):
            manifest_path = child / MANIFEST_FILE
            if manifest_path.is_file():
                runs.append((child, json.loads(manifest_path.read_text(encoding="utf-8"))))
    return runs


def _assess_run(
    run_dir: Path, manifest: dict, scores: Dict[str, evaluation.ScoreRow], timeout: float
) -> evaluation.RunAssessment:
    workspace = Workspace.load(run_dir / "workspace")
    baseline = workspace.read_baseline_performance()
    generated = manifest.get("generated_script")
    code_generated = bool(generated) and workspace.resolve(generated).is_file()
    executes_clean = False
    final_performance = None
    edited = 0
    if code_generated:
        report = execute_script(
            workspace, generated, backend=BACKEND_PLAIN, timeout=timeout
        )
        executes_clean = report.exit_status == 0 and not report.timed_out
        final_performance = report.extracted_performance
        starter = workspace.read_file(workspace.path_for_role(ROLE_STARTER_CODE))
        edited = evaluation.lines_edited(starter, workspace.read_file(generated))
    score = scores.get(manifest["run_id"])
    return evaluation.RunAssessment(
        run_id=manifest["run_id"],
        code_generated=code_generated,
        executes_clean=executes_clean,
        baseline_performance=baseline.value,
        perf_direction=baseline.direction,
        final_performance=final_performance,
        manual_score=score.manual_score if score else None,
        lines_edited=edited,
        lines_repaired=score.lines_repaired if score else 0,
    )


def cmd_eval(args: argparse.Namespace) -> int:
    runs_dir = Path(args.runs_dir)
    runs = _discover_runs(runs_dir)
    if not runs:
        print(f"no runs found under {runs_dir}")
        return 1
    scores: Dict[str, evaluation.ScoreRow] = {}
    if args.scores:
        known_ids = {manifest["run_id"] for _, manifest in runs}
        for row in evaluation.load_scores(Path(args.scores)):
            if row.run_id not in known_ids:
                print(f"scores file references unknown run_id: {row.run_id}")
                return 1
            scores[row.run_id] = row

    groups: Dict[Tuple[str, str], List[evaluation.RunAssessment]] = {}
    for run_dir, manifest in runs:
        assessment = _assess_run(run_dir, manifest, scores, args.timeout)
        key = (manifest.get("mode", "unknown"), manifest.get("task", "unknown"))
        groups.setdefault(key, []).append(assessment)

    report = evaluation.aggregate(groups)
    out_dir = Path(args.out) if args.out else runs_dir / "eval"
    out_dir.mkdir(parents=True, exist_ok=True)
    text = evaluation.render_report_text(report)
    (out_dir / "report.txt").write_text(text, encoding="utf-8")
    (out_dir / "report.csv").write_text(
        evaluation.render_report_csv(report), encoding="utf-8"
    )
    (out_dir / "runs.csv").write_text(
        evaluation.render_runs_csv(report), encoding="utf-8"
    )
    print(text)
    print(f"reports written to {out_dir}")
    return 0


def cmd_diff(args: argparse.Namespace) -> int:
    from .diffing import unified_diff

    a, b = Path(args.file_a), Path(args.file_b)
    for path in (a, b):
        if not path.is_file():
            print(f"file not found: {path}", file=sys.stderr)
            return 2
    diff = unified_diff(
        a.read_text(encoding="utf-8"),
        b.read_text(encoding="utf-8"),
        a_label=str(a),
        b_label=str(b),
    )
    if diff.is_empty:
        return 0
    print(diff.text, end="")
    return 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rca",
        description=(
            "Plan-and-edit agent that implements a described research "
            "methodology on top of starter code."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_validate = sub.add_parser("validate", help="check a workspace's manifest and inputs")
    p_validate.add_argument("workspace")
    p_validate.set_defaults(func=cmd_validate)

    p_run = sub.add_parser("run", help="run the agent (or a baseline mode) on a workspace")
    p_run.add_argument("workspace")
    p_run.add_argument("--mode", choices=list(planner.RUN_MODES), default=planner.MODE_AGENT)
    p_run.add_argument("--config", default=None, help="TOML config path")
    p_run.add_argument("--cassette", default=None, help="cassette file to record to / replay from")
    p_run.add_argument("--record", action="store_true", help="record model calls to the cassette")
    p_run.add_argument("--replay", action="store_true", help="replay model calls from the cassette")
    p_run.add_argument("--max-steps", type=int, default=None)
    p_run.add_argument("--runs-dir", default="runs")
    p_run.set_defaults(func=cmd_run)

    p_eval = sub.add_parser("eval", help="compute metrics over finished runs")
    p_eval.add_argument("runs_dir")
    p_eval.add_argument("--scores", default=None, help="reviewer scores CSV")
    p_eval.add_argument("--out", default=None, help="report output directory")
    p_eval.add_argument("--timeout", type=float, default=300.0)
    p_eval.set_defaults(func=cmd_eval)

    p_diff = sub.add_parser("diff", help="unified diff of two files")
    p_diff.add_argument("file_a")
    p_diff.add_argument("file_b")
    p_diff.set_defaults(func=cmd_diff)

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except RcaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
