import pytest

from rca.config import AgentConfig
from rca.testing import make_toy_workspace
from rca.workspace import Workspace


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One pass/fail line per acceptance criterion."""
    for status in ("passed", "failed"):
        for report in terminalreporter.stats.get(status, []):
            if "test_acceptance" in report.nodeid and report.when == "call":
                name = report.nodeid.split("::")[-1]
                terminalreporter.write_line(f"ACCEPTANCE {status.upper()}: {name}")


@pytest.fixture
def toy_workspace_dir(tmp_path):
    return make_toy_workspace(tmp_path / "workspace")


@pytest.fixture
def toy_workspace(toy_workspace_dir, tmp_path):
    return Workspace.load(toy_workspace_dir, history_dir=tmp_path / "history")


@pytest.fixture
def config():
    return AgentConfig()
