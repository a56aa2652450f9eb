"""Command line: trace_shim <script> [args...] --out <dir>

Exits with the traced script's own exit status; usage and spawn problems
exit 2.
"""

import sys
from typing import List, Optional

from .shim import ShimError, shim_run

USAGE = "usage: trace_shim <script> [args...] --out <dir>"


def main(argv: Optional[List[str]] = None) -> int:
    args = list(sys.argv[1:] if argv is None else argv)
    if "--out" not in args:
        print(USAGE, file=sys.stderr)
        return 2
    # the last --out belongs to the shim; everything before it to the script
    out_index = len(args) - 1 - args[::-1].index("--out")
    if out_index + 1 >= len(args):
        print("--out requires a directory", file=sys.stderr)
        return 2
    out_dir = args[out_index + 1]
    rest = args[:out_index] + args[out_index + 2 :]
    if not rest:
        print(USAGE, file=sys.stderr)
        return 2
    script, script_args = rest[0], rest[1:]
    try:
        report = shim_run(script, script_args, out_dir)
    except ShimError as exc:
        print(f"trace_shim: {exc}", file=sys.stderr)
        return 2
    return report.exit_status


if __name__ == "__main__":
    sys.exit(main())
