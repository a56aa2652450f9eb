"""Acceptance for the trace backend: requires the trace_shim package.

The primary suite never needs these; they are skipped wholesale when the
shim is not installed.
"""

import shutil
import sys
import time

import pytest

trace_shim = pytest.importorskip("trace_shim")

from rca.executor import (
    BACKEND_PLAIN,
    BACKEND_TRACED,
    cover_path_for,
    execute_script,
    parse_cover_file,
)

TRACE_COMMAND = f"{sys.executable} -m trace_shim"
FIXTURES = {f.name: f for f in trace_shim.fixture_corpus()}


def install_fixture(workspace, name):
    src = FIXTURES[name].path
    dest = workspace.resolve(src.name)
    shutil.copyfile(src, dest)
    return src.name


def run_traced(workspace, script, timeout=30):
    return execute_script(
        workspace,
        script,
        backend=BACKEND_TRACED,
        timeout=timeout,
        trace_command=TRACE_COMMAND,
    )


def test_trace_fidelity_counts_and_dead_lines(toy_workspace):
    started = time.monotonic()

    # loop5: the loop body line reports exactly 5 executions
    loop5 = install_fixture(toy_workspace, "loop5")
    report = run_traced(toy_workspace, loop5)
    assert report.exit_status == 0
    assert report.trace is not None
    line3 = report.trace.lines[2]
    assert line3.kind == "count" and line3.count == 5

    # deadbranch: the unreachable line carries the never-executed marker
    dead = install_fixture(toy_workspace, "deadbranch")
    report = run_traced(toy_workspace, dead)
    assert report.trace.never_executed_lines() == (
        FIXTURES["deadbranch"].expectation["never_executed_lines"]
    )

    # round trip: parsing the shim's cover file reproduces its line structure
    cover = cover_path_for(toy_workspace.resolve(dead))
    trace = parse_cover_file(cover)
    source_lines = toy_workspace.read_file(dead).splitlines()
    assert trace.total_lines == len(source_lines)
    assert trace.executed_lines() == [1, 2, 3]
    assert trace.never_executed_lines() == [5]
    assert [l.kind for l in trace.lines][3] == "non_executable"  # the else: line

    assert time.monotonic() - started < 10.0


@pytest.mark.parametrize("name", ["loop5", "deadbranch", "clean_perf", "failing"])
def test_traced_and_plain_backends_agree(toy_workspace, name):
    script = install_fixture(toy_workspace, name)
    plain = execute_script(toy_workspace, script, backend=BACKEND_PLAIN, timeout=30)
    traced = run_traced(toy_workspace, script)
    assert traced.exit_status == plain.exit_status
    assert traced.stdout == plain.stdout
    assert traced.stderr == plain.stderr
    assert traced.trace is not None and plain.trace is None


def test_traced_clean_fixture_extracts_performance(toy_workspace):
    script = install_fixture(toy_workspace, "clean_perf")
    report = run_traced(toy_workspace, script)
    assert report.extracted_performance == pytest.approx(0.8)
