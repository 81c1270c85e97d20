"""Per-question telemetry counters and the stage-event trace."""

from __future__ import annotations

import threading
from typing import Any


class Telemetry:
    """Accumulates LLM usage for one question. Counters only grow; updates
    are lock-protected so concurrent exploration calls cannot drop any."""

    def __init__(self):
        self._lock = threading.Lock()
        self.llm_calls = 0
        self.input_tokens = 0
        self.output_tokens = 0
        self.llm_time = 0.0
        self.wall_time = 0.0
        self.tokens_approximate = False

    def record_call(self, input_tokens: int, output_tokens: int,
                    latency: float = 0.0, approximate: bool = False) -> None:
        with self._lock:
            self.llm_calls += 1
            self.input_tokens += input_tokens
            self.output_tokens += output_tokens
            self.llm_time += latency
            if approximate:
                self.tokens_approximate = True

    def set_wall_time(self, seconds: float) -> None:
        with self._lock:
            self.wall_time = max(self.wall_time, seconds)

    def snapshot(self) -> dict[str, Any]:
        with self._lock:
            return {
                "llm_calls": self.llm_calls,
                "input_tokens": self.input_tokens,
                "output_tokens": self.output_tokens,
                "llm_time": round(self.llm_time, 6),
                "wall_time": round(self.wall_time, 6),
                "tokens_approximate": self.tokens_approximate,
            }


class Trace:
    """Ordered event log for one question; events are plain dicts suitable
    for line-delimited JSON."""

    def __init__(self):
        self._lock = threading.Lock()
        self.events: list[dict[str, Any]] = []

    def add(self, event: str, **fields: Any) -> dict[str, Any]:
        record = {"event": event, **fields}
        with self._lock:
            self.events.append(record)
        return record
