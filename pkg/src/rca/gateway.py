"""Provider-agnostic model access with record/replay cassettes.

Core code only ever names a role tag (base_planner, intermediate_planner,
expert_planner, worker); the binding to a concrete provider lives in
configuration. Cassettes are JSON-lines transcripts replayed sequentially
with digest checks, so any prompt drift fails loudly at the first
divergent call.
"""

import hashlib
import json
import os
import threading
import time
import urllib.error
import urllib.request
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Dict, List, Optional, Protocol

from .config import AgentConfig, RoleConfig
from .errors import CassetteError, GatewayError

MODE_LIVE = "live"
MODE_RECORD = "record"
MODE_REPLAY = "replay"

_BACKOFF_CAP_SECONDS = 30.0


def prompt_digest(prompt: str) -> str:
    return hashlib.sha256(prompt.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class CassetteEntry:
    sequence: int
    role: str
    prompt_digest: str
    prompt_text: str
    response_text: str
    temperature: float

    def to_json(self) -> str:
        return json.dumps(
            {
                "sequence": self.sequence,
                "role": self.role,
                "prompt_digest": self.prompt_digest,
                "prompt_text": self.prompt_text,
                "response_text": self.response_text,
                "temperature": self.temperature,
            },
            ensure_ascii=False,
        )

    @classmethod
    def from_json(cls, line: str) -> "CassetteEntry":
        data = json.loads(line)
        return cls(
            sequence=int(data["sequence"]),
            role=str(data["role"]),
            prompt_digest=str(data["prompt_digest"]),
            prompt_text=str(data["prompt_text"]),
            response_text=str(data["response_text"]),
            temperature=float(data["temperature"]),
        )


def load_cassette(path: Path) -> List[CassetteEntry]:
    entries: List[CassetteEntry] = []
    text = Path(path).read_text(encoding="utf-8")
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            entry = CassetteEntry.from_json(line)
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise CassetteError(f"{path}: malformed cassette line {lineno}: {exc}")
        entries.append(entry)
    for i, entry in enumerate(entries):
        if entry.sequence != i:
            raise CassetteError(
                f"{path}: entry {i} has sequence {entry.sequence}; expected {i}"
            )
    return entries


def save_cassette(path: Path, entries: List[CassetteEntry]) -> None:
    Path(path).write_text(
        "".join(entry.to_json() + "\n" for entry in entries), encoding="utf-8"
    )


class Provider(Protocol):
    def generate(self, prompt: str, temperature: float) -> str: ...


class TransientProviderError(GatewayError):
    """Provider failure worth retrying (timeouts, 5xx, rate limits)."""


class SentinelProvider:
    """Fails on any call; used to prove replay makes no network requests."""

    def __init__(self, role: str = ""):
        self.role = role
        self.calls = 0

    def generate(self, prompt: str, temperature: float) -> str:
        self.calls += 1
        raise AssertionError(
            f"sentinel provider for role {self.role!r} was invoked; replay must "
            f"not perform live calls"
        )


class CallableProvider:
    """Adapts a plain function to the provider protocol."""

    def __init__(self, fn: Callable[[str, float], str]):
        self._fn = fn

    def generate(self, prompt: str, temperature: float) -> str:
        return self._fn(prompt, temperature)


class HttpChatProvider:
    """Minimal OpenAI-style chat-completions client over urllib."""

    def __init__(self, role: RoleConfig, timeout: float = 120.0):
        self.model = role.model
        self.endpoint = role.endpoint
        self.api_key = os.environ.get(role.credential_env, "") if role.credential_env else ""
        self.timeout = timeout

    def generate(self, prompt: str, temperature: float) -> str:
        payload = json.dumps(
            {
                "model": self.model,
                "messages": [{"role": "user", "content": prompt}],
                "temperature": temperature,
            }
        ).encode("utf-8")
        request = urllib.request.Request(
            self.endpoint,
            data=payload,
            headers={
                "Content-Type": "application/json",
                **({"Authorization": f"Bearer {self.api_key}"} if self.api_key else {}),
            },
        )
        try:
            with urllib.request.urlopen(request, timeout=self.timeout) as response:
                data = json.loads(response.read().decode("utf-8"))
        except urllib.error.HTTPError as exc:  # pragma: no cover - live only
            if exc.code in (408, 409, 429) or exc.code >= 500:
                raise TransientProviderError(f"HTTP {exc.code} from {self.endpoint}")
            raise GatewayError(f"HTTP {exc.code} from {self.endpoint}")
        except OSError as exc:  # pragma: no cover - live only
            raise TransientProviderError(f"transport failure: {exc}")
        try:
            return data["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError):
            raise GatewayError(f"unexpected response shape from {self.endpoint}")


@dataclass
class RoleStats:
    calls: int = 0


class Gateway:
    """Routes completions by role tag through live, record or replay modes."""

    def __init__(
        self,
        config: AgentConfig,
        mode: str = MODE_LIVE,
        cassette_path: Optional[Path] = None,
        providers: Optional[Dict[str, Provider]] = None,
        sleep: Callable[[float], None] = time.sleep,
    ):
        if mode not in (MODE_LIVE, MODE_RECORD, MODE_REPLAY):
            raise GatewayError(f"unknown gateway mode {mode!r}")
        if mode in (MODE_RECORD, MODE_REPLAY) and cassette_path is None:
            raise GatewayError(f"{mode} mode requires a cassette path")
        self.config = config
        self.mode = mode
        self.cassette_path = Path(cassette_path) if cassette_path else None
        self._sleep = sleep
        self._providers: Dict[str, Provider] = dict(providers or {})
        self._entries: List[CassetteEntry] = []
        self._cursor = 0
        self._replay_lock = threading.Lock()
        self.stats: Dict[str, RoleStats] = {tag: RoleStats() for tag in config.roles}
        if mode == MODE_REPLAY:
            self._entries = load_cassette(self.cassette_path)
        if mode == MODE_RECORD and self.cassette_path.exists():
            self.cassette_path.unlink()

    def provider_for(self, role_tag: str) -> Provider:
        if role_tag in self._providers:
            return self._providers[role_tag]
        role = self._role(role_tag)
        if role.provider == "http":
            provider = HttpChatProvider(role)
        else:
            raise GatewayError(
                f"role {role_tag!r} is bound to unknown provider {role.provider!r} "
                f"and no provider instance was supplied"
            )
        self._providers[role_tag] = provider
        return provider

    def _role(self, role_tag: str) -> RoleConfig:
        try:
            return self.config.roles[role_tag]
        except KeyError:
            raise GatewayError(f"role {role_tag!r} is not configured")

    def complete(self, role_tag: str, prompt: str) -> str:
        role = self._role(role_tag)
        self.stats.setdefault(role_tag, RoleStats()).calls += 1
        if self.mode == MODE_REPLAY:
            return self._replay(role_tag, prompt)
        response = self._call_live(role, prompt)
        if self.mode == MODE_RECORD:
            self._record(role_tag, prompt, response, role.temperature)
        return response

    # -- live ------------------------------------------------------------

    def _call_live(self, role: RoleConfig, prompt: str) -> str:
        provider = self.provider_for(role.tag)
        attempts = self.config.transport_retries + 1
        last_error: Optional[Exception] = None
        for attempt in range(attempts):
            try:
                return provider.generate(prompt, role.temperature)
            except TransientProviderError as exc:
                last_error = exc
                if attempt < attempts - 1:
                    self._sleep(min(_BACKOFF_CAP_SECONDS, 1.0 * 2**attempt))
        raise GatewayError(
            f"provider for role {role.tag!r} failed after {attempts} attempts: "
            f"{last_error}"
        )

    # -- record / replay ---------------------------------------------------

    def _record(self, role_tag: str, prompt: str, response: str, temperature: float) -> None:
        entry = CassetteEntry(
            sequence=len(self._entries),
            role=role_tag,
            prompt_digest=prompt_digest(prompt),
            prompt_text=prompt,
            response_text=response,
            temperature=temperature,
        )
        self._entries.append(entry)
        with open(self.cassette_path, "a", encoding="utf-8") as handle:
            handle.write(entry.to_json() + "\n")
            handle.flush()

    def _replay(self, role_tag: str, prompt: str) -> str:
        if not self._replay_lock.acquire(blocking=False):
            raise CassetteError(
                "concurrent replay calls are not supported; replay is strictly "
                "sequential"
            )
        try:
            if self._cursor >= len(self._entries):
                raise CassetteError(
                    f"cassette exhausted after {len(self._entries)} entries; "
                    f"no recording left for role {role_tag!r}"
                )
            entry = self._entries[self._cursor]
            if entry.role != role_tag:
                raise CassetteError(
                    f"cassette entry {entry.sequence} was recorded for role "
                    f"{entry.role!r} but role {role_tag!r} is calling"
                )
            digest = prompt_digest(prompt)
            if digest != entry.prompt_digest:
                raise CassetteError(
                    f"prompt digest mismatch at cassette entry {entry.sequence} "
                    f"(role {role_tag!r}): the request text diverged from the recording"
                )
            self._cursor += 1
            return entry.response_text
        finally:
            self._replay_lock.release()

    @property
    def entries(self) -> List[CassetteEntry]:
        return list(self._entries)

    def remaining_entries(self) -> int:
        return len(self._entries) - self._cursor
