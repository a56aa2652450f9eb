"""Record the scripted toy run to a cassette, then replay it via the CLI.

Everything happens offline: recording uses queued fake model responses, and
the replay run is driven purely by the cassette.

    python scripts/record_and_replay_demo.py [--out DIR]
"""

import argparse
import shutil
import sys
import tempfile
from pathlib import Path

from rca.cli import main as rca_main
from rca.testing import make_toy_workspace, record_toy_cassette


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default=None, help="output directory (default: temp)")
    args = parser.parse_args()
    out = Path(args.out) if args.out else Path(tempfile.mkdtemp(prefix="rca-demo-"))
    out.mkdir(parents=True, exist_ok=True)

    source = make_toy_workspace(out / "workspace")
    scratch = out / "workspace_recording_copy"
    if scratch.exists():
        shutil.rmtree(scratch)
    shutil.copytree(source, scratch)

    cassette = out / "toy_run.jsonl"
    result = record_toy_cassette(scratch, cassette)
    print(f"recording: {result.termination} after {result.steps_taken} steps")
    print(f"cassette:  {cassette}")

    code = rca_main(
        [
            "run",
            str(source),
            "--mode",
            "agent",
            "--replay",
            "--cassette",
            str(cassette),
            "--runs-dir",
            str(out / "runs"),
        ]
    )
    print(f"replay exit code: {code}")
    return code


if __name__ == "__main__":
    sys.exit(main())
