"""Produce two offline replay runs (agent + single-call), score them, and
emit the three metric tables.

    python scripts/eval_demo.py [--out DIR]
"""

import argparse
import json
import shutil
import sys
import tempfile
from pathlib import Path

from rca.cli import main as rca_main
from rca.testing import (
    make_toy_workspace,
    record_toy_cassette,
    record_toy_single_call_cassette,
)


def replay(source, cassette, mode, runs_dir):
    code = rca_main(
        [
            "run",
            str(source),
            "--mode",
            mode,
            "--replay",
            "--cassette",
            str(cassette),
            "--runs-dir",
            str(runs_dir),
        ]
    )
    if code != 0:
        raise SystemExit(f"{mode} replay failed with exit code {code}")


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default=None, help="output directory (default: temp)")
    args = parser.parse_args()
    out = Path(args.out) if args.out else Path(tempfile.mkdtemp(prefix="rca-eval-"))
    out.mkdir(parents=True, exist_ok=True)

    source = make_toy_workspace(out / "workspace")
    runs_dir = out / "runs"

    for name, recorder, mode in [
        ("agent", record_toy_cassette, "agent"),
        ("single", record_toy_single_call_cassette, "single"),
    ]:
        scratch = out / f"scratch_{name}"
        if scratch.exists():
            shutil.rmtree(scratch)
        shutil.copytree(source, scratch)
        cassette = out / f"{name}.jsonl"
        recorder(scratch, cassette)
        replay(source, cassette, mode, runs_dir)

    scores = out / "scores.csv"
    rows = ["run_id,manual_score,lines_repaired,reviewer_id"]
    for manifest_path in sorted(runs_dir.glob("*/run_manifest.json")):
        run_id = json.loads(manifest_path.read_text())["run_id"]
        rows.append(f"{run_id},9,1,demo-reviewer")
    scores.write_text("\n".join(rows) + "\n")

    return rca_main(["eval", str(runs_dir), "--scores", str(scores)])


if __name__ == "__main__":
    sys.exit(main())
