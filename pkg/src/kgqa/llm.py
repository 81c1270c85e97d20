"""LLM access: request/response types, HTTP and scripted-mock backends,
and the gateway that renders prompts, retries transport failures, and
parses strict-JSON replies (with a single re-ask).

The mock backend is keyed by the stable hash of (prompt kind, slots), so
scripted fixtures survive cosmetic template edits. With the mock, the
whole gateway is deterministic and offline.
"""

from __future__ import annotations

import json
import os
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Mapping, Protocol

import requests

from .errors import LoadError, MockMissError, ReplyParseError, TransportError
from .parsing import parse_json_reply
from .prompts import PromptKind, PromptLibrary, slots_hash
from .telemetry import Telemetry


def approx_tokens(text: str) -> int:
    """Whitespace token count; the flagged fallback when a backend does not
    report usage."""
    return len(text.split())


@dataclass(frozen=True, eq=False)
class LlmRequest:
    prompt: str
    temperature: float = 0.3
    kind: PromptKind | None = None
    prompt_hash: str | None = None
    slots: Mapping[str, str] | None = None

    def __post_init__(self):
        if not self.prompt:
            raise ValueError("prompt must be non-empty")
        if not 0.0 <= self.temperature <= 2.0:
            raise ValueError("temperature must be in [0, 2]")


@dataclass(frozen=True)
class LlmResponse:
    text: str
    input_tokens: int
    output_tokens: int
    latency: float = 0.0
    tokens_approximate: bool = False

    def __post_init__(self):
        if self.input_tokens < 0 or self.output_tokens < 0:
            raise ValueError("token counts must be non-negative")


class LlmBackend(Protocol):
    def generate(self, request: LlmRequest) -> LlmResponse: ...


class HttpChatBackend:
    """Chat-completion endpoint client: the prompt goes out as a single
    user message; the API key is read from an environment variable."""

    def __init__(
        self,
        url: str,
        model: str = "gpt-4o-mini",
        api_key_env: str = "LLM_API_KEY",
        timeout: float = 60.0,
    ):
        self.url = url
        self.model = model
        self.api_key_env = api_key_env
        self.timeout = timeout

    def generate(self, request: LlmRequest) -> LlmResponse:
        headers = {"Content-Type": "application/json"}
        key = os.environ.get(self.api_key_env, "")
        if key:
            headers["Authorization"] = f"Bearer {key}"
        body = {
            "model": self.model,
            "messages": [{"role": "user", "content": request.prompt}],
            "temperature": request.temperature,
        }
        start = time.perf_counter()
        try:
            resp = requests.post(self.url, json=body, headers=headers, timeout=self.timeout)
            resp.raise_for_status()
            payload = resp.json()
            text = payload["choices"][0]["message"]["content"]
        except (requests.RequestException, ValueError, LookupError, TypeError) as exc:
            raise TransportError(f"chat endpoint {self.url}: {exc}") from exc
        latency = time.perf_counter() - start
        usage = payload.get("usage") or {}
        input_tokens = usage.get("prompt_tokens")
        output_tokens = usage.get("completion_tokens")
        approximate = input_tokens is None or output_tokens is None
        return LlmResponse(
            text=text,
            input_tokens=input_tokens if input_tokens is not None else approx_tokens(request.prompt),
            output_tokens=output_tokens if output_tokens is not None else approx_tokens(text),
            latency=latency,
            tokens_approximate=approximate,
        )


@dataclass
class MockReply:
    text: str
    input_tokens: int | None = None
    output_tokens: int | None = None
    latency: float = 0.0


class MockLlm:
    """Deterministic scripted backend keyed by prompt hash.

    Script files are JSON: ``{"replies": [{"prompt_hash", "kind",
    "reply_text", "input_tokens"?, "output_tokens"?, "latency"?}, ...]}``.
    Unscripted prompts raise ``MockMissError`` naming the hash. The mock
    keeps its own served totals as ground truth for telemetry checks.
    """

    def __init__(self):
        self._lock = threading.Lock()
        self._replies: dict[str, MockReply] = {}
        self._kinds: dict[str, str] = {}
        self.served_calls = 0
        self.served_input_tokens = 0
        self.served_output_tokens = 0

    def script_reply(
        self,
        kind: PromptKind,
        slots: Mapping[str, str],
        text: str,
        input_tokens: int | None = None,
        output_tokens: int | None = None,
        latency: float = 0.0,
    ) -> str:
        """Register a reply for (kind, slots); returns the prompt hash."""
        h = slots_hash(kind, slots)
        self._replies[h] = MockReply(text, input_tokens, output_tokens, latency)
        self._kinds[h] = kind.value
        return h

    @classmethod
    def from_script(cls, path: str | Path) -> "MockLlm":
        mock = cls()
        try:
            with open(path, encoding="utf-8") as fh:
                payload = json.load(fh)
            for record in payload["replies"]:
                h = record["prompt_hash"]
                mock._replies[h] = MockReply(
                    record["reply_text"],
                    record.get("input_tokens"),
                    record.get("output_tokens"),
                    record.get("latency", 0.0),
                )
                mock._kinds[h] = record.get("kind", "")
        except (OSError, ValueError, KeyError, TypeError) as exc:
            raise LoadError(f"mock script {path}: {exc}") from exc
        return mock

    def save_script(self, path: str | Path) -> None:
        records = [
            {
                "prompt_hash": h,
                "kind": self._kinds.get(h, ""),
                "reply_text": r.text,
                "input_tokens": r.input_tokens,
                "output_tokens": r.output_tokens,
                "latency": r.latency,
            }
            for h, r in sorted(self._replies.items())
        ]
        with open(path, "w", encoding="utf-8") as fh:
            json.dump({"replies": records}, fh, indent=2, sort_keys=True, ensure_ascii=False)
            fh.write("\n")

    def generate(self, request: LlmRequest) -> LlmResponse:
        h = request.prompt_hash
        if h is None or h not in self._replies:
            raise MockMissError(f"no scripted reply for prompt hash {h}")
        r = self._replies[h]
        approximate = r.input_tokens is None or r.output_tokens is None
        response = LlmResponse(
            text=r.text,
            input_tokens=r.input_tokens if r.input_tokens is not None else approx_tokens(request.prompt),
            output_tokens=r.output_tokens if r.output_tokens is not None else approx_tokens(r.text),
            latency=r.latency,
            tokens_approximate=approximate,
        )
        with self._lock:
            self.served_calls += 1
            self.served_input_tokens += response.input_tokens
            self.served_output_tokens += response.output_tokens
        return response


class CallbackLlm:
    """Backend driven by a policy function ``(kind, slots) -> str`` (or a
    ``MockReply``). Used to author mock scripts and to fuzz the pipeline."""

    def __init__(self, policy: Callable[[PromptKind, Mapping[str, str]], "str | MockReply"]):
        self.policy = policy

    def generate(self, request: LlmRequest) -> LlmResponse:
        if request.kind is None:
            raise ValueError("CallbackLlm requires requests rendered by the gateway")
        reply = self.policy(request.kind, request.slots or {})
        if isinstance(reply, str):
            reply = MockReply(reply)
        approximate = reply.input_tokens is None or reply.output_tokens is None
        return LlmResponse(
            text=reply.text,
            input_tokens=reply.input_tokens if reply.input_tokens is not None else approx_tokens(request.prompt),
            output_tokens=reply.output_tokens if reply.output_tokens is not None else approx_tokens(reply.text),
            latency=reply.latency,
            tokens_approximate=approximate,
        )


class RecordingLlm:
    """Wraps a backend and captures every exchange; ``to_mock`` freezes the
    recording into a scripted MockLlm."""

    def __init__(self, inner: LlmBackend):
        self.inner = inner
        self.records: list[tuple[LlmRequest, LlmResponse]] = []

    def generate(self, request: LlmRequest) -> LlmResponse:
        response = self.inner.generate(request)
        self.records.append((request, response))
        return response

    def to_mock(self) -> MockLlm:
        mock = MockLlm()
        for request, response in self.records:
            if request.kind is None or request.prompt_hash is None:
                continue
            # approximated counts stay unscripted so replays re-derive them
            mock._replies[request.prompt_hash] = MockReply(
                response.text,
                None if response.tokens_approximate else response.input_tokens,
                None if response.tokens_approximate else response.output_tokens,
                response.latency,
            )
            mock._kinds[request.prompt_hash] = request.kind.value
        return mock


@dataclass
class AskOutcome:
    """What one ask_json round-trip cost and produced."""

    prompt_hash: str
    parsed: Any = None
    calls: int = 0
    reasked: bool = False


class CallBudget:
    """Hard per-question cap on LLM attempts; thread-safe."""

    class Exhausted(Exception):
        pass

    def __init__(self, limit: int):
        if limit < 1:
            raise ValueError("call budget must be positive")
        self.limit = limit
        self._lock = threading.Lock()
        self.spent = 0

    def spend(self) -> None:
        with self._lock:
            if self.spent >= self.limit:
                raise CallBudget.Exhausted(f"LLM call budget of {self.limit} exhausted")
            self.spent += 1


class LlmGateway:
    """Renders prompts, completes them against a backend with transport
    retries, and parses replies with one re-ask on malformed JSON."""

    def __init__(
        self,
        backend: LlmBackend,
        prompts: PromptLibrary | None = None,
        temperature: float = 0.3,
        max_retries: int = 3,
        backoff_base: float = 0.5,
        sleep: Callable[[float], None] = time.sleep,
    ):
        self.backend = backend
        self.prompts = prompts or PromptLibrary()
        self.temperature = temperature
        self.max_retries = max_retries
        self.backoff_base = backoff_base
        self._sleep = sleep

    def render(self, kind: PromptKind, slots: Mapping[str, str]) -> tuple[str, str]:
        """Render a prompt; returns (prompt text, prompt hash)."""
        return self.prompts.render(kind, slots), slots_hash(kind, slots)

    def complete(
        self,
        request: LlmRequest,
        telemetry: Telemetry | None = None,
        budget: CallBudget | None = None,
    ) -> LlmResponse:
        """One completion with up to ``max_retries`` retries on transport
        errors; every attempt consumes budget, successful ones count in
        telemetry."""
        last_error: TransportError | None = None
        for attempt in range(self.max_retries + 1):
            if budget is not None:
                budget.spend()
            try:
                response = self.backend.generate(request)
            except TransportError as exc:
                last_error = exc
                if attempt < self.max_retries:
                    self._sleep(self.backoff_base * (2**attempt))
                continue
            if telemetry is not None:
                telemetry.record_call(
                    response.input_tokens,
                    response.output_tokens,
                    response.latency,
                    response.tokens_approximate,
                )
            return response
        raise TransportError(
            f"LLM backend failed after {self.max_retries + 1} attempts: {last_error}"
        ) from last_error

    def ask(
        self,
        kind: PromptKind,
        slots: Mapping[str, str],
        telemetry: Telemetry | None = None,
        budget: CallBudget | None = None,
    ) -> tuple[LlmResponse, str]:
        prompt, h = self.render(kind, slots)
        request = LlmRequest(
            prompt=prompt,
            temperature=self.temperature,
            kind=kind,
            prompt_hash=h,
            slots=dict(slots),
        )
        return self.complete(request, telemetry, budget), h

    def ask_json(
        self,
        kind: PromptKind,
        slots: Mapping[str, str],
        telemetry: Telemetry | None = None,
        budget: CallBudget | None = None,
    ) -> AskOutcome:
        """Ask and parse; on a malformed reply the same prompt is asked once
        more before ``ReplyParseError`` escapes."""
        outcome = AskOutcome(prompt_hash=slots_hash(kind, slots))
        last: ReplyParseError | None = None
        for round_no in range(2):
            response, _ = self.ask(kind, slots, telemetry, budget)
            outcome.calls += 1
            outcome.reasked = round_no == 1
            try:
                outcome.parsed = parse_json_reply(response.text, kind)
                return outcome
            except ReplyParseError as exc:
                last = exc
        raise last  # type: ignore[misc]
