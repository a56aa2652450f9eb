import pytest

from rca.config import BASE_PLANNER, WORKER
from rca.errors import CassetteError, GatewayError
from rca.gateway import (
    MODE_RECORD,
    MODE_REPLAY,
    CassetteEntry,
    Gateway,
    CallableProvider,
    SentinelProvider,
    TransientProviderError,
    load_cassette,
    prompt_digest,
    save_cassette,
)
from rca.testing import ScriptedProvider


def record_two_calls(tmp_path, config):
    cassette = tmp_path / "c.jsonl"
    gateway = Gateway(
        config,
        mode=MODE_RECORD,
        cassette_path=cassette,
        providers={
            BASE_PLANNER: ScriptedProvider(["first", "second"]),
            WORKER: ScriptedProvider(["worker answer"]),
        },
    )
    gateway.complete(BASE_PLANNER, "prompt one")
    gateway.complete(WORKER, "prompt two")
    return cassette


class TestCassetteFile:
    def test_save_load_round_trip(self, tmp_path):
        entries = [
            CassetteEntry(0, BASE_PLANNER, prompt_digest("p"), "p", "r", 0.8),
            CassetteEntry(1, WORKER, prompt_digest("q"), "q", "s", 0.2),
        ]
        path = tmp_path / "c.jsonl"
        save_cassette(path, entries)
        assert load_cassette(path) == entries

    def test_empty_file_is_empty_cassette(self, tmp_path):
        path = tmp_path / "c.jsonl"
        path.write_text("")
        assert load_cassette(path) == []

    def test_truncated_line_reports_line_number(self, tmp_path, config):
        path = record_two_calls(tmp_path, config)
        text = path.read_text()
        path.write_text(text[: len(text) - 10])
        with pytest.raises(CassetteError, match="line 2"):
            load_cassette(path)

    def test_record_appends_in_call_order(self, tmp_path, config):
        path = record_two_calls(tmp_path, config)
        entries = load_cassette(path)
        assert [e.sequence for e in entries] == [0, 1]
        assert [e.role for e in entries] == [BASE_PLANNER, WORKER]
        assert entries[0].response_text == "first"

    def test_recorded_temperatures_follow_roles(self, tmp_path, config):
        entries = load_cassette(record_two_calls(tmp_path, config))
        assert entries[0].temperature == 0.8
        assert entries[1].temperature == 0.2


class TestReplay:
    def test_replay_returns_recorded_responses(self, tmp_path, config):
        path = record_two_calls(tmp_path, config)
        gateway = Gateway(config, mode=MODE_REPLAY, cassette_path=path)
        assert gateway.complete(BASE_PLANNER, "prompt one") == "first"
        assert gateway.complete(WORKER, "prompt two") == "worker answer"

    def test_digest_mismatch_names_sequence(self, tmp_path, config):
        path = record_two_calls(tmp_path, config)
        gateway = Gateway(config, mode=MODE_REPLAY, cassette_path=path)
        gateway.complete(BASE_PLANNER, "prompt one")
        with pytest.raises(CassetteError, match="entry 1"):
            gateway.complete(WORKER, "prompt two TAMPERED")

    def test_role_mismatch_rejected(self, tmp_path, config):
        path = record_two_calls(tmp_path, config)
        gateway = Gateway(config, mode=MODE_REPLAY, cassette_path=path)
        with pytest.raises(CassetteError, match="role"):
            gateway.complete(WORKER, "prompt one")

    def test_exhausted_cassette(self, tmp_path, config):
        path = record_two_calls(tmp_path, config)
        gateway = Gateway(config, mode=MODE_REPLAY, cassette_path=path)
        gateway.complete(BASE_PLANNER, "prompt one")
        gateway.complete(WORKER, "prompt two")
        with pytest.raises(CassetteError, match="exhausted"):
            gateway.complete(WORKER, "prompt three")

    def test_replay_never_touches_providers(self, tmp_path, config):
        path = record_two_calls(tmp_path, config)
        sentinels = {tag: SentinelProvider(tag) for tag in config.roles}
        gateway = Gateway(config, mode=MODE_REPLAY, cassette_path=path, providers=sentinels)
        gateway.complete(BASE_PLANNER, "prompt one")
        gateway.complete(WORKER, "prompt two")
        assert all(p.calls == 0 for p in sentinels.values())

    def test_digest_is_stable(self):
        # frozen sha256 of "hello" must never change across platforms/runs
        assert prompt_digest("hello") == (
            "2cf24dba5fb0a30e26e83b2ac5b9e29e1b161e5c1fa7425e73043362938b9824"
        )


class TestLiveRetries:
    def test_transient_failures_retried_then_succeed(self, config):
        attempts = []

        def flaky(prompt, temperature):
            attempts.append(temperature)
            if len(attempts) < 3:
                raise TransientProviderError("blip")
            return "ok"

        sleeps = []
        gateway = Gateway(
            config,
            providers={BASE_PLANNER: CallableProvider(flaky)},
            sleep=sleeps.append,
        )
        assert gateway.complete(BASE_PLANNER, "p") == "ok"
        assert len(attempts) == 1 + config.transport_retries
        assert sleeps == [1.0, 2.0]

    def test_budget_exhausted_raises(self, config):
        def always_down(prompt, temperature):
            raise TransientProviderError("down")

        gateway = Gateway(
            config,
            providers={BASE_PLANNER: CallableProvider(always_down)},
            sleep=lambda _: None,
        )
        with pytest.raises(GatewayError, match="failed after"):
            gateway.complete(BASE_PLANNER, "p")

    def test_planner_temperature_is_0_8_and_worker_0_2(self, config):
        seen = {}

        def capture(prompt, temperature):
            seen[prompt] = temperature
            return "x"

        gateway = Gateway(
            config,
            providers={
                BASE_PLANNER: CallableProvider(capture),
                WORKER: CallableProvider(capture),
            },
        )
        gateway.complete(BASE_PLANNER, "planner prompt")
        gateway.complete(WORKER, "worker prompt")
        assert seen == {"planner prompt": 0.8, "worker prompt": 0.2}


def test_concurrent_replay_rejected(tmp_path, config):
    path = record_two_calls(tmp_path, config)
    gateway = Gateway(config, mode=MODE_REPLAY, cassette_path=path)
    gateway._replay_lock.acquire()
    try:
        with pytest.raises(CassetteError, match="sequential"):
            gateway.complete(BASE_PLANNER, "prompt one")
    finally:
        gateway._replay_lock.release()


def test_sequence_gap_rejected(tmp_path):
    path = tmp_path / "c.jsonl"
    entry = CassetteEntry(3, BASE_PLANNER, prompt_digest("p"), "p", "r", 0.8)
    path.write_text(entry.to_json() + "\n")
    with pytest.raises(CassetteError, match="sequence"):
        load_cassette(path)
