import pytest

from rca.config import WORKER, AgentConfig
from rca.errors import (
    InvalidRangeError,
    MissingFileError,
    ValidationError,
    WorkerError,
)
from rca.gateway import MODE_RECORD, MODE_REPLAY, Gateway, load_cassette
from rca.testing import ScriptedProvider
from rca.workers import (
    PERSONAS,
    STATUS_IMPLEMENTED,
    STATUS_MISSING,
    SubpartReport,
    WorkerPool,
    extract_code_block,
    parse_numbered_list,
    parse_subpart_report,
)

TABLE_PERSONAS = {
    "Understand File": (
        "You are an expert in understanding files containing both code and "
        "natural language."
    ),
    "Understand File with Code Context": (
        "You are an expert in understanding files containing both code and "
        "natural language given some context."
    ),
    "Edit Script": "You are an expert in editing code files.",
    "Edit Script with Context": (
        "You are an expert in editing code files given some code or text context."
    ),
    "Reflection": (
        "You are an expert in reflecting on previous actions when implementing "
        "code for a given research methodology."
    ),
    "Check Implementation": (
        "You are an expert in checking the implementation of a methodology in a "
        "piece of edited code given the starter code that was edited to arrive "
        "at the edited code."
    ),
}


def test_personas_match_expected_strings_exactly():
    assert PERSONAS == TABLE_PERSONAS


def pool_with(toy_workspace, tmp_path, responses, config=None):
    config = config or AgentConfig()
    provider = ScriptedProvider(responses, name="worker")
    gateway = Gateway(
        config,
        mode=MODE_RECORD,
        cassette_path=tmp_path / "w.jsonl",
        providers={WORKER: provider},
    )
    return WorkerPool(toy_workspace, gateway, config), provider, gateway


class TestUnderstandFile:
    def test_returns_worker_answer_verbatim(self, toy_workspace, tmp_path):
        pool, provider, gateway = pool_with(
            toy_workspace, tmp_path, ["the file lists three subparts"]
        )
        answer = pool.understand_file("methodology_description.txt", "list the subparts")
        assert answer == "the file lists three subparts"
        prompt, temperature = provider.calls[0]
        assert temperature == 0.2
        assert PERSONAS["Understand File"] in prompt
        assert "list the subparts" in prompt

    def test_replayed_call_is_deterministic(self, toy_workspace, tmp_path, config):
        pool, _, gateway = pool_with(toy_workspace, tmp_path, ["cassette answer"])
        recorded = pool.understand_file("methodology_description.txt", "subparts?")
        replay_gateway = Gateway(
            config, mode=MODE_REPLAY, cassette_path=tmp_path / "w.jsonl"
        )
        replay_pool = WorkerPool(toy_workspace, replay_gateway, config)
        assert (
            replay_pool.understand_file("methodology_description.txt", "subparts?")
            == recorded
        )

    def test_missing_file_errors_before_any_call(self, toy_workspace, tmp_path):
        pool, provider, _ = pool_with(toy_workspace, tmp_path, [])
        with pytest.raises(MissingFileError):
            pool.understand_file("absent.txt", "anything")
        assert provider.calls == []

    def test_empty_query_rejected(self, toy_workspace, tmp_path):
        pool, provider, _ = pool_with(toy_workspace, tmp_path, [])
        with pytest.raises(ValidationError):
            pool.understand_file("methodology_description.txt", "   ")
        assert provider.calls == []

    def test_oversized_file_is_chunked(self, toy_workspace, tmp_path):
        big = toy_workspace.resolve("big.txt")
        big.write_text("word\n" * 3000)  # 15000 chars > 12000 budget
        pool, provider, _ = pool_with(toy_workspace, tmp_path, ["part one", "part two"])
        answer = pool.understand_file("big.txt", "what is this")
        assert answer == "part one\n\npart two"
        assert len(provider.calls) == 2
        assert "(part 1 of 2)" in provider.calls[0][0]


class TestUnderstandWithContext:
    def test_prompt_carries_both_excerpts(self, toy_workspace, tmp_path):
        pool, provider, _ = pool_with(toy_workspace, tmp_path, ["mapped"])
        answer = pool.understand_file_with_context(
            "pseudocode.txt", 1, 3, "starter_code.py", 1, 5, "map loop to code"
        )
        assert answer == "mapped"
        prompt = provider.calls[0][0]
        assert "FILE EXCERPT" in prompt
        assert "CODE CONTEXT" in prompt

    def test_inverted_range_errors_before_call(self, toy_workspace, tmp_path):
        pool, provider, _ = pool_with(toy_workspace, tmp_path, [])
        with pytest.raises(InvalidRangeError):
            pool.understand_file_with_context(
                "pseudocode.txt", 5, 2, "starter_code.py", 1, 5, "q"
            )
        assert provider.calls == []

    def test_oversized_context_range_rejected(self, toy_workspace, tmp_path):
        long_file = toy_workspace.resolve("long.py")
        long_file.write_text("".join(f"r{i}\n" for i in range(200)))
        pool, provider, _ = pool_with(toy_workspace, tmp_path, [])
        with pytest.raises(InvalidRangeError):
            pool.understand_file_with_context(
                "pseudocode.txt", 1, 3, "long.py", 1, 200, "q"
            )
        assert provider.calls == []


class TestEditScript:
    def test_fenced_reply_saved_and_diffed(self, toy_workspace, tmp_path):
        new_content = toy_workspace.read_file("starter_code.py") + "\n\ndef f():\n    pass\n"
        pool, _, _ = pool_with(toy_workspace, tmp_path, [f"```python\n{new_content}```"])
        diff = pool.edit_script("starter_code.py", "add function stub f()", "edited.py")
        assert toy_workspace.resolve("edited.py").is_file()
        assert diff.additions >= 1
        assert toy_workspace.read_file("edited.py") == new_content

    def test_prose_only_replies_exhaust_retries(self, toy_workspace, tmp_path):
        config = AgentConfig()
        config.worker_retry_budget = 3
        pool, provider, _ = pool_with(
            toy_workspace, tmp_path, ["no code here"] * 3, config=config
        )
        with pytest.raises(WorkerError, match="no fenced code block"):
            pool.edit_script("starter_code.py", "do something", "edited.py")
        assert len(provider.calls) == 3
        # the retry prompts carry a corrective nudge
        assert "fenced code block" in provider.calls[1][0]

    def test_in_place_save_pushes_history(self, toy_workspace, tmp_path):
        original = toy_workspace.read_file("starter_code.py")
        pool, _, _ = pool_with(
            toy_workspace, tmp_path, [f"```python\n{original}# tweak\n```"]
        )
        pool.edit_script("starter_code.py", "append a comment", "starter_code.py")
        assert toy_workspace.history.depth("starter_code.py") == 1
        toy_workspace.undo_edit("starter_code.py")
        assert toy_workspace.read_file("starter_code.py") == original

    def test_empty_instructions_rejected(self, toy_workspace, tmp_path):
        pool, provider, _ = pool_with(toy_workspace, tmp_path, [])
        with pytest.raises(ValidationError):
            pool.edit_script("starter_code.py", "", "edited.py")
        assert provider.calls == []


class TestEditScriptWithContext:
    def test_context_excerpt_in_prompt(self, toy_workspace, tmp_path):
        content = toy_workspace.read_file("starter_code.py")
        pool, provider, _ = pool_with(
            toy_workspace, tmp_path, [f"```python\n{content}# ctx\n```"]
        )
        diff = pool.edit_script_with_context(
            "starter_code.py", "apply the loop", "pseudocode.txt", 1, 4, "edited.py"
        )
        assert diff.additions == 1
        prompt = provider.calls[0][0]
        assert "CONTEXT (pseudocode.txt, lines 1-4)" in prompt

    def test_invalid_context_range_before_call(self, toy_workspace, tmp_path):
        pool, provider, _ = pool_with(toy_workspace, tmp_path, [])
        with pytest.raises(InvalidRangeError):
            pool.edit_script_with_context(
                "starter_code.py", "x", "pseudocode.txt", 9, 2, "edited.py"
            )
        assert provider.calls == []


class TestReflect:
    def test_returns_text_with_no_side_effects(self, toy_workspace, tmp_path):
        pool, provider, _ = pool_with(toy_workspace, tmp_path, ["keep going"])
        before = sorted(toy_workspace.list_files("."))
        answer = pool.reflect("why did execution fail", "step one went fine")
        assert answer == "keep going"
        assert sorted(toy_workspace.list_files(".")) == before
        assert PERSONAS["Reflection"] in provider.calls[0][0]

    def test_empty_query_rejected(self, toy_workspace, tmp_path):
        pool, _, _ = pool_with(toy_workspace, tmp_path, [])
        with pytest.raises(ValidationError):
            pool.reflect("", "summary")

    def test_oversized_summary_truncated_to_recent_tail(self, toy_workspace, tmp_path):
        pool, provider, _ = pool_with(toy_workspace, tmp_path, ["ok"])
        summary = "old entries " * 1000 + "FRESH TAIL MARKER"
        pool.reflect("what now", summary)
        prompt = provider.calls[0][0]
        assert "FRESH TAIL MARKER" in prompt
        assert "older entries omitted" in prompt
        embedded = prompt.split("RESEARCH LOG SUMMARY:\n\n")[1].split(
            "\n\nTHINGS TO REFLECT ON:"
        )[0]
        threshold = AgentConfig().memory.observation_threshold
        assert len(embedded) <= threshold + len("... [older entries omitted] ...\n")


NUMBERED_REPLY = """1. Compute the combined score s = (x + y) / 2.
2. Predict class 1 when the score is positive.
3. Print the accuracy line.
"""


class TestDecompose:
    def test_parses_three_subparts(self, toy_workspace, tmp_path):
        pool, _, _ = pool_with(toy_workspace, tmp_path, [NUMBERED_REPLY])
        subparts = pool.decompose_methodology()
        assert len(subparts) == 3
        assert subparts[0].startswith("Compute the combined score")

    def test_second_call_uses_cache(self, toy_workspace, tmp_path):
        pool, provider, _ = pool_with(toy_workspace, tmp_path, [NUMBERED_REPLY])
        pool.decompose_methodology()
        pool.decompose_methodology()
        assert len(provider.calls) == 1

    def test_unnumbered_prose_exhausts_retries(self, toy_workspace, tmp_path):
        config = AgentConfig()
        config.worker_retry_budget = 2
        pool, provider, _ = pool_with(
            toy_workspace, tmp_path, ["prose", "more prose"], config=config
        )
        with pytest.raises(WorkerError, match="numbered"):
            pool.decompose_methodology()
        assert len(provider.calls) == 2


def subpart_reply(status, snippet="the code", edit="add it"):
    return f"STATUS: {status}\nSNIPPET: {snippet}\nPROPOSED EDIT: {edit}\n"


class TestCheckImplementation:
    def test_reports_in_subpart_order(self, toy_workspace, tmp_path):
        replies = [
            NUMBERED_REPLY,
            subpart_reply("implemented", snippet="combined_score", edit="none"),
            subpart_reply("implemented", snippet="predict", edit="none"),
            subpart_reply("missing", snippet="main()", edit="add the print call"),
        ]
        pool, _, _ = pool_with(toy_workspace, tmp_path, replies)
        pool.decompose_methodology()
        reports = pool.check_implementation("starter_code.py")
        assert [r.status for r in reports] == [
            STATUS_IMPLEMENTED,
            STATUS_IMPLEMENTED,
            STATUS_MISSING,
        ]
        assert [r.subpart_id for r in reports] == [1, 2, 3]
        assert reports[2].proposed_edit == "add the print call"

    def test_all_missing_reports_carry_edits(self, toy_workspace, tmp_path):
        replies = [NUMBERED_REPLY] + [
            subpart_reply("missing", snippet=f"location {i}", edit=f"edit {i}")
            for i in range(3)
        ]
        pool, _, _ = pool_with(toy_workspace, tmp_path, replies)
        pool.decompose_methodology()
        reports = pool.check_implementation("starter_code.py")
        assert all(r.proposed_edit for r in reports)

    def test_without_decomposition_is_an_error(self, toy_workspace, tmp_path):
        pool, _, _ = pool_with(toy_workspace, tmp_path, [])
        with pytest.raises(WorkerError, match="decompose"):
            pool.check_implementation("starter_code.py")

    def test_report_count_matches_subparts(self, toy_workspace, tmp_path):
        replies = [NUMBERED_REPLY] + [subpart_reply("implemented")] * 3
        pool, _, _ = pool_with(toy_workspace, tmp_path, replies)
        pool.decompose_methodology()
        reports = pool.check_implementation("starter_code.py")
        assert len(reports) == len(pool.decompose_methodology())


class TestParsers:
    def test_extract_code_block(self):
        assert extract_code_block("before\n```python\nx = 1\n```\nafter") == "x = 1\n"
        assert extract_code_block("no fence") is None

    def test_parse_numbered_list_with_continuations(self):
        text = "intro\n1. first item\n   spanning two lines\n2) second item\n"
        assert parse_numbered_list(text) == [
            "first item spanning two lines",
            "second item",
        ]

    def test_parse_subpart_report_rejects_garbage(self):
        with pytest.raises(WorkerError):
            parse_subpart_report("free-form prose", 1, "desc")

    def test_subpart_invariants(self):
        with pytest.raises(WorkerError):
            SubpartReport(1, "d", STATUS_IMPLEMENTED, snippet="", proposed_edit="x")
        with pytest.raises(WorkerError):
            SubpartReport(1, "d", STATUS_MISSING, snippet="x", proposed_edit="")


def test_every_worker_call_is_temperature_0_2(toy_workspace, tmp_path):
    content = toy_workspace.read_file("starter_code.py")
    replies = [
        "answer",
        f"```python\n{content}# t\n```",
        "reflection",
        NUMBERED_REPLY,
        subpart_reply("implemented"),
        subpart_reply("implemented"),
        subpart_reply("implemented"),
    ]
    pool, provider, gateway = pool_with(toy_workspace, tmp_path, replies)
    pool.understand_file("pseudocode.txt", "q")
    pool.edit_script("starter_code.py", "tweak", "edited.py")
    pool.reflect("r", "s")
    pool.decompose_methodology()
    pool.check_implementation("edited.py")
    assert all(temp == 0.2 for _, temp in provider.calls)
    # the cassette records the same temperatures
    entries = load_cassette(tmp_path / "w.jsonl")
    assert all(e.temperature == 0.2 for e in entries)
