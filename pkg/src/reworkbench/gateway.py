"""Chat-completion access: agent/tool loop, token pacing, deadlines, mocks.

The agent loop sends the system and human messages with one declared tool.
If the model calls the tool, the chunk's variant lines go back as a
function result and the model is asked again; the first plain-text reply
ends the run. Every request first passes the sliding-window limiter, and
the whole loop is bounded by ``run_deadline`` seconds.

Time is read through a small clock object so offline runs can use
:class:`VirtualClock` and finish instantly while keeping realistic
timestamps in the transcript.
"""

from __future__ import annotations

import enum
import json
import logging
import math
import os
import threading
import time
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Protocol, Sequence

import httpx

from .eventlog import LabeledDataset, ParseError, parse_variant_line
from .prompting import TOOL_NAME, ChatMessage, PromptBundle, Role, ToolSpec, estimate_tokens
from .rework import DetectMode, DetectPolicy, explain
from .rng import Xoshiro256, derive_seed

log = logging.getLogger(__name__)

WINDOW_SECONDS = 60.0
# added to computed waits so float rounding never lands just inside the window
_EPS = 1e-6


class SystemClock:
    def now(self) -> float:
        return time.monotonic()

    def sleep(self, seconds: float) -> None:
        if seconds > 0:
            time.sleep(seconds)


class VirtualClock:
    """Simulated time: ``sleep`` advances ``now`` without blocking."""

    def __init__(self, start: float = 0.0):
        self._now = start
        self._lock = threading.Lock()

    def now(self) -> float:
        return self._now

    def sleep(self, seconds: float) -> None:
        if seconds > 0:
            with self._lock:
                self._now += seconds


class BudgetError(ValueError):
    pass


class SlidingWindowLimiter:
    """Token-per-minute pacing over a trailing window.

    A request of ``t`` tokens sent at time ``s`` counts against every window
    ``(T - 60, T]`` that contains ``s``. :meth:`pace` returns the smallest
    delay after which sending keeps every such window within budget.
    Callers that share a budget must share one limiter; use :meth:`acquire`
    to pace, sleep and record atomically.
    """

    def __init__(self, budget: int, window: float = WINDOW_SECONDS):
        if budget <= 0:
            raise BudgetError("budget must be positive")
        self.budget = budget
        self.window = window
        self._sent: deque[tuple[float, int]] = deque()
        self._lock = threading.Lock()

    def _expire(self, now: float) -> None:
        while self._sent and self._sent[0][0] <= now - self.window:
            self._sent.popleft()

    def pace(self, tokens: int, now: float) -> float:
        if tokens > self.budget:
            raise BudgetError(f"request of {tokens} tokens can never fit a {self.budget}-token window")
        self._expire(now)
        in_window = sum(t for _, t in self._sent)
        if in_window + tokens <= self.budget:
            return 0.0
        # drop the oldest sends until the remainder plus this request fits
        excess = in_window + tokens - self.budget
        for sent_at, t in self._sent:
            excess -= t
            if excess <= 0:
                return max(0.0, sent_at + self.window - now + _EPS)
        raise AssertionError("unreachable: tokens <= budget")

    def record(self, tokens: int, sent_at: float) -> None:
        if self._sent and sent_at < self._sent[-1][0]:
            raise ValueError("sends must be recorded in time order")
        self._sent.append((sent_at, tokens))

    def acquire(self, tokens: int, clock) -> tuple[float, float]:
        """Wait as needed and record the send. Returns ``(waited, sent_at)``."""
        with self._lock:
            waited = 0.0
            wait = self.pace(tokens, clock.now())
            while wait > 0:
                clock.sleep(wait)
                waited += wait
                wait = self.pace(tokens, clock.now())
            sent_at = clock.now()
            self.record(tokens, sent_at)
            return waited, sent_at

    def history(self) -> list[tuple[float, int]]:
        return list(self._sent)


def pace(limiter: SlidingWindowLimiter, request_tokens: int, now: float) -> float:
    return limiter.pace(request_tokens, now)


@dataclass(frozen=True)
class ProviderConfig:
    endpoint: str = "https://api.openai.com/v1"
    model: str = "gpt-4o-2024-08-06"
    api_key_env: str = "OPENAI_API_KEY"
    tpm_budget: int = 30_000
    request_timeout: float = 120.0
    run_deadline: float = 300.0
    max_agent_steps: int = 4

    def __post_init__(self):
        if self.tpm_budget <= 0:
            raise ValueError("tpm_budget must be positive")
        if self.run_deadline < self.request_timeout:
            raise ValueError("run_deadline must be >= request_timeout")
        if self.max_agent_steps < 1:
            raise ValueError("max_agent_steps must be >= 1")


@dataclass(frozen=True)
class ToolCall:
    id: str
    name: str
    arguments: str = "{}"


@dataclass
class ModelReply:
    text: str | None = None
    tool_calls: list[ToolCall] = field(default_factory=list)
    raw: dict | None = None


class ProviderFailure(RuntimeError):
    """Transport, auth or protocol failure talking to a model."""


class Provider(Protocol):
    def complete(self, messages: Sequence[ChatMessage], tools: Sequence[ToolSpec],
                 timeout: float) -> ModelReply: ...


class RunStatus(str, enum.Enum):
    COMPLETED = "completed"
    DEADLINE_EXCEEDED = "deadline_exceeded"
    PROVIDER_ERROR = "provider_error"


@dataclass
class ToolInvocation:
    at: float
    call_id: str
    name: str
    payload_bytes: int


@dataclass
class RequestRecord:
    sent_at: float
    tokens: int
    waited: float
    duration: float | None = None
    error: str | None = None


@dataclass
class AgentTranscript:
    entries: list[tuple[float, ChatMessage]] = field(default_factory=list)
    tool_invocations: list[ToolInvocation] = field(default_factory=list)
    requests: list[RequestRecord] = field(default_factory=list)

    def add(self, at: float, msg: ChatMessage) -> None:
        if self.entries and at < self.entries[-1][0]:
            raise ValueError("transcript timestamps must be monotone")
        self.entries.append((at, msg))

    @property
    def messages(self) -> list[ChatMessage]:
        return [m for _, m in self.entries]

    @property
    def final_text(self) -> str | None:
        for _, m in reversed(self.entries):
            if m.role is Role.AI:
                return m.content
        return None

    def events(self) -> list[dict]:
        out = [{"type": "message", "t": t, **m.to_dict()} for t, m in self.entries]
        out += [{"type": "tool_call", "t": c.at, "id": c.call_id, "name": c.name,
                 "payload_bytes": c.payload_bytes} for c in self.tool_invocations]
        out += [{"type": "request", "t": r.sent_at, "tokens": r.tokens, "waited": r.waited,
                 "duration": r.duration, "error": r.error} for r in self.requests]
        out.sort(key=lambda e: e["t"])
        return out

    def to_jsonl(self, **extra) -> str:
        return "".join(json.dumps({**extra, **e}) + "\n" for e in self.events())


@dataclass
class RunOutcome:
    status: RunStatus
    final_text: str | None
    transcript: AgentTranscript
    error: str | None = None

    def __post_init__(self):
        if self.status is RunStatus.COMPLETED and self.final_text is None:
            raise ValueError("a completed run needs a final text")


def request_tokens(messages: Sequence[ChatMessage], tools: Sequence[ToolSpec]) -> int:
    return (sum(estimate_tokens(m.content) for m in messages)
            + sum(estimate_tokens(t.name + " " + t.description) for t in tools))


def run_agent_loop(cfg: ProviderConfig, bundle: PromptBundle, provider: Provider,
                   tool_payload: Sequence[str] | None = None,
                   limiter: SlidingWindowLimiter | None = None, clock=None) -> RunOutcome:
    clock = clock or SystemClock()
    limiter = limiter or SlidingWindowLimiter(cfg.tpm_budget)
    payload = "\n".join(bundle.chunk if tool_payload is None else tool_payload)
    tr = AgentTranscript()
    deadline = clock.now() + cfg.run_deadline

    def stop(status: RunStatus, error: str | None = None) -> RunOutcome:
        if error:
            log.warning("agent run stopped (%s): %s", status.value, error)
        return RunOutcome(status, tr.final_text if status is RunStatus.COMPLETED else None, tr, error)

    messages = [bundle.system, bundle.human]
    tr.add(clock.now(), bundle.system)
    tr.add(clock.now(), bundle.human)
    tools = [bundle.tool]

    for _ in range(cfg.max_agent_steps):
        tokens = request_tokens(messages, tools)
        try:
            wait = limiter.pace(tokens, clock.now())
        except BudgetError as e:
            return stop(RunStatus.PROVIDER_ERROR, str(e))
        if clock.now() + wait >= deadline:
            return stop(RunStatus.DEADLINE_EXCEEDED, "pacing delay runs past the deadline")
        attempts = math.ceil(cfg.run_deadline / cfg.request_timeout) + 1
        for attempt in range(attempts):
            waited, sent_at = limiter.acquire(tokens, clock)
            record = RequestRecord(sent_at, tokens, waited)
            tr.requests.append(record)
            timeout = min(cfg.request_timeout, deadline - sent_at)
            try:
                reply = provider.complete(messages, tools, timeout)
                break
            except TimeoutError as e:
                record.duration = clock.now() - sent_at
                record.error = f"timeout: {e}"
            except ProviderFailure as e:
                record.duration = clock.now() - sent_at
                record.error = str(e)
                return stop(RunStatus.PROVIDER_ERROR, str(e))
            # a slow model is waited on until the deadline, then scored as zero
            if clock.now() >= deadline or attempt == attempts - 1:
                return stop(RunStatus.DEADLINE_EXCEEDED, "no answer before the run deadline")
            log.info("request timed out after %.3gs; retrying", timeout)
            try:
                wait = limiter.pace(tokens, clock.now())
            except BudgetError as e:
                return stop(RunStatus.PROVIDER_ERROR, str(e))
            if clock.now() + wait >= deadline:
                return stop(RunStatus.DEADLINE_EXCEEDED, "pacing delay runs past the deadline")
        now = clock.now()
        record.duration = now - sent_at
        if now > deadline:
            return stop(RunStatus.DEADLINE_EXCEEDED, "answer arrived after the run deadline")

        if reply.tool_calls:
            messages.append(ChatMessage(Role.AI, reply.text or "", tool_calls=tuple(
                (c.id, c.name, c.arguments) for c in reply.tool_calls)))
            for call in reply.tool_calls:
                if call.name != TOOL_NAME:
                    return stop(RunStatus.PROVIDER_ERROR, f"model requested unknown tool {call.name!r}")
                tr.tool_invocations.append(ToolInvocation(now, call.id, call.name, len(payload.encode())))
                result = ChatMessage(Role.FUNCTION_RESULT, payload, tool_call_id=call.id)
                messages.append(result)
                tr.add(now, result)
            continue
        if reply.text is None:
            return stop(RunStatus.PROVIDER_ERROR, "reply had neither text nor tool calls")
        answer = ChatMessage(Role.AI, reply.text)
        messages.append(answer)
        tr.add(now, answer)
        return stop(RunStatus.COMPLETED)

    return stop(RunStatus.PROVIDER_ERROR, f"no final answer within {cfg.max_agent_steps} agent steps")


class OpenAICompatibleProvider:
    """Chat-completions over HTTPS with function calling.

    The API key is read from the environment variable named in the config
    and only ever sent in the ``Authorization`` header.
    """

    def __init__(self, cfg: ProviderConfig, client: httpx.Client | None = None,
                 log_sink: Callable[[dict], None] | None = None):
        self.cfg = cfg
        self.client = client or httpx.Client()
        self.log_sink = log_sink

    def _headers(self) -> dict:
        key = os.environ.get(self.cfg.api_key_env)
        if not key:
            raise ProviderFailure(f"environment variable {self.cfg.api_key_env} is not set")
        return {"Authorization": f"Bearer {key}", "Content-Type": "application/json"}

    @staticmethod
    def wire_messages(messages: Sequence[ChatMessage]) -> list[dict]:
        out = []
        for m in messages:
            if m.role is Role.FUNCTION_RESULT:
                out.append({"role": "tool", "tool_call_id": m.tool_call_id, "content": m.content})
            elif m.tool_calls:
                out.append({"role": "assistant", "content": m.content or None, "tool_calls": [
                    {"id": cid, "type": "function", "function": {"name": name, "arguments": args}}
                    for cid, name, args in m.tool_calls]})
            else:
                role = {"system": "system", "human": "user", "ai": "assistant"}[m.role.value]
                out.append({"role": role, "content": m.content})
        return out

    def complete(self, messages, tools, timeout) -> ModelReply:
        body = {"model": self.cfg.model,
                "messages": self.wire_messages(messages),
                "tools": [t.to_openai() for t in tools]}
        url = self.cfg.endpoint.rstrip("/") + "/chat/completions"
        headers = self._headers()
        if self.log_sink:
            self.log_sink({"type": "http_request", "url": url, "body": body,
                           "headers": {**headers, "Authorization": "Bearer ***"}})
        try:
            resp = self.client.post(url, json=body, headers=headers, timeout=timeout)
        except httpx.TimeoutException as e:
            raise TimeoutError(str(e)) from e
        except httpx.HTTPError as e:
            raise ProviderFailure(f"transport error: {e}") from e
        if resp.status_code in (401, 403):
            raise ProviderFailure(f"authentication failed (HTTP {resp.status_code})")
        if resp.status_code >= 400:
            raise ProviderFailure(f"HTTP {resp.status_code}: {resp.text[:200]}")
        try:
            data = resp.json()
            msg = data["choices"][0]["message"]
        except (ValueError, KeyError, IndexError) as e:
            raise ProviderFailure(f"malformed completion response: {e}") from e
        if self.log_sink:
            self.log_sink({"type": "http_response", "status": resp.status_code, "body": data})
        calls = [ToolCall(c["id"], c["function"]["name"], c["function"].get("arguments") or "{}")
                 for c in msg.get("tool_calls") or []]
        return ModelReply(text=msg.get("content"), tool_calls=calls, raw=data)


def _has_tool_result(messages: Sequence[ChatMessage]) -> bool:
    return any(m.role is Role.FUNCTION_RESULT for m in messages)


class ScriptedProvider:
    """Replays a fixed list of replies; handy for exercising the loop."""

    def __init__(self, replies: Sequence[ModelReply]):
        self.replies = list(replies)
        self.calls: list[list[ChatMessage]] = []

    def complete(self, messages, tools, timeout) -> ModelReply:
        self.calls.append(list(messages))
        if not self.replies:
            raise ProviderFailure("script exhausted")
        return self.replies.pop(0)


class OracleMockProvider:
    """Answers from ground-truth labels with independent seeded noise.

    Each true anomaly is reported unless dropped with probability
    ``fn_rate``; each normal variant is falsely reported with probability
    ``fp_rate``. Draws are keyed by ``(seed, variant id)`` so results do not
    depend on how the dataset was chunked.
    """

    _policies = (DetectPolicy(DetectMode.TANDEM), DetectPolicy(DetectMode.RECURRENT))

    def __init__(self, labels: LabeledDataset, fp_rate: float = 0.0, fn_rate: float = 0.0,
                 seed: int = 0):
        if not (0.0 <= fp_rate <= 1.0 and 0.0 <= fn_rate <= 1.0):
            raise ValueError("rates must lie in [0, 1]")
        self.labels = labels
        self.fp_rate = fp_rate
        self.fn_rate = fn_rate
        self.seed = seed

    def _claim(self, activities) -> str:
        for p in self._policies:
            text = explain(activities, p)
            if text is not None:
                return text
        return "->".join(activities[:2])

    def answer(self, payload: str) -> str:
        lines = []
        for raw in payload.splitlines():
            try:
                vid, activities = parse_variant_line(raw)
            except ParseError:
                continue
            lv = self.labels.get(vid)
            if lv is None:
                continue
            g = Xoshiro256(derive_seed(self.seed, vid))
            u_fn, u_fp = g.random(), g.random()
            report = u_fn >= self.fn_rate if lv.is_rework else u_fp < self.fp_rate
            if report:
                lines.append(f"{vid}# {self._claim(activities)}")
        return "\n".join(lines) if lines else "No rework anomalies found."

    def complete(self, messages, tools, timeout) -> ModelReply:
        if not _has_tool_result(messages):
            return ModelReply(tool_calls=[ToolCall("call_1", TOOL_NAME)])
        payload = "\n".join(m.content for m in messages if m.role is Role.FUNCTION_RESULT)
        return ModelReply(text=self.answer(payload))


def oracle_mock(labels: LabeledDataset, fp_rate: float = 0.0, fn_rate: float = 0.0,
                seed: int = 0) -> OracleMockProvider:
    return OracleMockProvider(labels, fp_rate, fn_rate, seed)


class DelayMockProvider:
    """Never answers within ``delay`` seconds; honours the request timeout."""

    def __init__(self, delay: float, clock=None, then: Provider | None = None):
        self.delay = delay
        self.clock = clock or SystemClock()
        self.then = then

    def complete(self, messages, tools, timeout) -> ModelReply:
        if self.delay > timeout:
            self.clock.sleep(timeout)
            raise TimeoutError(f"no reply within {timeout:g}s")
        self.clock.sleep(self.delay)
        if self.then is None:
            return ModelReply(text="No rework anomalies found.")
        return self.then.complete(messages, tools, timeout)
