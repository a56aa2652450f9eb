"""Deterministic fixtures: scripted providers and a toy workspace.

Used by the test suite and the demo scripts to record cassettes without any
live model. Scripted providers return queued responses in call order; the
worker variant additionally auto-answers log/observation summarization
prompts so fixture scripts only need to supply action-worker outputs.
"""

import json
import shutil
import tempfile
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

from .config import (
    BASE_PLANNER,
    EXPERT_PLANNER,
    INTERMEDIATE_PLANNER,
    WORKER,
    AgentConfig,
)
from .gateway import MODE_RECORD, Gateway, Provider
from .planner import MODE_AGENT, PlannerLoop, RunResult, run_single_call
from .workspace import MANIFEST_NAME, Workspace

_SUMMARIZE_LOG_PREFIX = "You maintain the running summary"
_SUMMARIZE_OBS_PREFIX = "You summarize long tool observations"


class ScriptedProvider:
    """Returns queued responses in order; records every prompt received."""

    def __init__(self, responses: Sequence[str], name: str = "scripted"):
        self.queue: List[str] = list(responses)
        self.name = name
        self.calls: List[Tuple[str, float]] = []

    def generate(self, prompt: str, temperature: float) -> str:
        self.calls.append((prompt, temperature))
        if not self.queue:
            raise AssertionError(f"{self.name}: scripted responses exhausted")
        return self.queue.pop(0)


class ScriptedWorkerProvider(ScriptedProvider):
    """Scripted worker that answers summarization prompts deterministically."""

    def __init__(self, responses: Sequence[str]):
        super().__init__(responses, name="worker")
        self._log_summaries = 0
        self._obs_summaries = 0

    def generate(self, prompt: str, temperature: float) -> str:
        if prompt.startswith(_SUMMARIZE_LOG_PREFIX):
            self.calls.append((prompt, temperature))
            self._log_summaries += 1
            return f"Summary of the run so far, covering {self._log_summaries} step(s)."
        if prompt.startswith(_SUMMARIZE_OBS_PREFIX):
            self.calls.append((prompt, temperature))
            self._obs_summaries += 1
            return f"Condensed observation #{self._obs_summaries}."
        return super().generate(prompt, temperature)


def planner_response(
    action: str,
    action_input: object,
    thought: str = "Proceeding with the next step of the plan.",
    reflection: str = "The previous observation matches expectations.",
    plan: str = "1. Understand the inputs. 2. Edit the starter code. 3. Verify.",
    fact_check: str = "All statements above are directly confirmed by observations.",
) -> str:
    """A well-formed six-section response with the given action."""
    if not isinstance(action_input, str):
        action_input = json.dumps(action_input)
    return (
        f"Reflection: {reflection}\n"
        f"Research Plan and Status: {plan}\n"
        f"Fact Check: {fact_check}\n"
        f"Thought: {thought}\n"
        f"Action: {action}\n"
        f"Action Input: {action_input}"
    )


# -- toy workspace -------------------------------------------------------------

TOY_BASELINE_ACCURACY = 0.8050

TOY_STARTER_CODE = '''import random


def make_data(count=200, seed=7):
    rng = random.Random(seed)
    data = []
    for _ in range(count):
        x = rng.uniform(-1.0, 1.0)
        y = rng.uniform(-1.0, 1.0)
        label = 1 if x + y > 0 else 0
        data.append((x, y, label))
    return data


def predict(x, y):
    return 1 if x > 0 else 0


def main():
    data = make_data()
    correct = sum(1 for x, y, label in data if predict(x, y) == label)
    print(f"Test accuracy: {correct / len(data):.4f}")


if __name__ == "__main__":
    main()
'''

TOY_IMPROVED_CODE = '''import random


def make_data(count=200, seed=7):
    rng = random.Random(seed)
    data = []
    for _ in range(count):
        x = rng.uniform(-1.0, 1.0)
        y = rng.uniform(-1.0, 1.0)
        label = 1 if x + y > 0 else 0
        data.append((x, y, label))
    return data


def combined_score(x, y):
    return (x + y) / 2.0


def predict(x, y):
    return 1 if combined_score(x, y) > 0 else 0


def main():
    data = make_data()
    correct = sum(1 for x, y, label in data if predict(x, y) == label)
    print(f"Test accuracy: {correct / len(data):.4f}")


if __name__ == "__main__":
    main()
'''

TOY_METHODOLOGY = """The combined-evidence method improves the baseline classifier by using
both input features instead of only the first one. It has three subparts:

1. Compute a combined score s = (x + y) / 2 for every sample.
2. Predict class 1 when the combined score is positive, class 0 otherwise.
3. Report the test accuracy in the format "Test accuracy: <value>".
"""

TOY_DATASET = """Synthetic binary classification data: 200 points with two real-valued
features x and y drawn uniformly from [-1, 1] with a fixed seed. The label
is 1 exactly when x + y > 0. The same generator is used for training and
evaluation, so a classifier that thresholds the feature sum is perfect.
"""

TOY_PSEUDOCODE = """for each sample (x, y):
    s = (x + y) / 2
    prediction = 1 if s > 0 else 0
accuracy = correct / total
print "Test accuracy:", accuracy
"""


def make_toy_workspace(dest: Path) -> Path:
    """Write the five mandatory toy input files plus the manifest."""
    dest = Path(dest)
    dest.mkdir(parents=True, exist_ok=True)
    (dest / "methodology_description.txt").write_text(TOY_METHODOLOGY, encoding="utf-8")
    (dest / "dataset_description.txt").write_text(TOY_DATASET, encoding="utf-8")
    (dest / "pseudocode.txt").write_text(TOY_PSEUDOCODE, encoding="utf-8")
    (dest / "starter_code.py").write_text(TOY_STARTER_CODE, encoding="utf-8")
    (dest / "starter_code_performance.txt").write_text(
        f"Test accuracy: {TOY_BASELINE_ACCURACY:.4f}\n", encoding="utf-8"
    )
    (dest / MANIFEST_NAME).write_text(
        'script_interpreter = "python3"\n'
        'perf_pattern = "Test accuracy: ([0-9.]+)"\n'
        'perf_direction = "higher_better"\n'
        "\n"
        "[files]\n"
        'methodology = "methodology_description.txt"\n'
        'dataset = "dataset_description.txt"\n'
        'pseudocode = "pseudocode.txt"\n'
        'starter_code = "starter_code.py"\n'
        'starter_performance = "starter_code_performance.txt"\n',
        encoding="utf-8",
    )
    return dest


def reset_toy_workspace(workspace_dir: Path) -> Path:
    """Restore the toy workspace to its pristine state (drops generated files)."""
    workspace_dir = Path(workspace_dir)
    if workspace_dir.exists():
        shutil.rmtree(workspace_dir)
    return make_toy_workspace(workspace_dir)


def toy_agent_responses() -> List[str]:
    """Planner script for a six-step toy run ending in Final Answer."""
    fenced = f"```python\n{TOY_IMPROVED_CODE}```"
    return [
        planner_response(
            "List Files",
            {"directory path": "."},
            thought="First list the working directory to see the given files.",
        ),
        planner_response(
            "Understand File",
            {
                "file name": "methodology_description.txt",
                "things to look for": "the subparts of the methodology",
            },
            thought="Read the methodology to know what must be implemented.",
        ),
        planner_response(
            "Copy File",
            {"source": "starter_code.py", "destination": "methodology_implementation.py"},
            thought="Copy the starter code so edits go into the new script.",
        ),
        planner_response(
            "Edit Script",
            {
                "script name": "methodology_implementation.py",
                "edit instructions": (
                    "Add a combined_score(x, y) function returning (x + y) / 2 "
                    "and make predict threshold that score at zero."
                ),
                "save script name": "methodology_implementation.py",
            },
            thought="Implement the combined-evidence method in the copy.",
        ),
        planner_response(
            "Execute Script",
            {"script name": "methodology_implementation.py", "arguments": ""},
            thought="Run the edited script to confirm it works and improves accuracy.",
        ),
        planner_response(
            "Final Answer",
            {
                "description": (
                    "Implemented the combined-evidence method in "
                    "methodology_implementation.py; accuracy improved from "
                    "0.8050 to 1.0000."
                )
            },
            thought="The implementation runs cleanly and beats the baseline.",
        ),
    ], fenced


def toy_worker_responses(fenced_code: str) -> List[str]:
    return [
        (
            "The file describes the combined-evidence method with three "
            "subparts: compute s = (x + y) / 2, predict 1 when s > 0, and "
            "print the accuracy as 'Test accuracy: <value>'."
        ),
        fenced_code,
    ]


def scripted_gateway(
    config: AgentConfig,
    cassette_path: Path,
    base: Sequence[str] = (),
    intermediate: Sequence[str] = (),
    expert: Sequence[str] = (),
    worker: Sequence[str] = (),
    worker_provider: Optional[Provider] = None,
) -> Tuple[Gateway, Dict[str, ScriptedProvider]]:
    """Record-mode gateway wired to scripted providers for every role."""
    providers: Dict[str, Provider] = {
        BASE_PLANNER: ScriptedProvider(base, name=BASE_PLANNER),
        INTERMEDIATE_PLANNER: ScriptedProvider(intermediate, name=INTERMEDIATE_PLANNER),
        EXPERT_PLANNER: ScriptedProvider(expert, name=EXPERT_PLANNER),
        WORKER: worker_provider or ScriptedWorkerProvider(worker),
    }
    gateway = Gateway(config, mode=MODE_RECORD, cassette_path=cassette_path, providers=providers)
    return gateway, providers


def record_toy_cassette(
    workspace_dir: Path,
    cassette_path: Path,
    config: Optional[AgentConfig] = None,
) -> RunResult:
    """Run the scripted toy agent in record mode, producing a replayable cassette.

    The run edits the workspace; callers that want to replay afterwards should
    reset the workspace first (see reset_toy_workspace).
    """
    config = config or AgentConfig()
    responses, fenced = toy_agent_responses()
    with tempfile.TemporaryDirectory(prefix="toy-record-") as scratch:
        gateway, _ = scripted_gateway(
            config,
            cassette_path,
            base=responses,
            worker=toy_worker_responses(fenced),
        )
        workspace = Workspace.load(workspace_dir, history_dir=Path(scratch) / "history")
        loop = PlannerLoop(
            workspace, gateway, config, Path(scratch) / "run", mode=MODE_AGENT
        )
        return loop.run_loop()


def record_toy_single_call_cassette(
    workspace_dir: Path,
    cassette_path: Path,
    config: Optional[AgentConfig] = None,
) -> RunResult:
    """Record the one-pass baseline answering with the improved toy script."""
    config = config or AgentConfig()
    fenced = f"```python\n{TOY_IMPROVED_CODE}```"
    with tempfile.TemporaryDirectory(prefix="toy-single-") as scratch:
        gateway, _ = scripted_gateway(config, cassette_path, base=[fenced])
        workspace = Workspace.load(workspace_dir, history_dir=Path(scratch) / "history")
        return run_single_call(workspace, gateway, config, Path(scratch) / "run")
