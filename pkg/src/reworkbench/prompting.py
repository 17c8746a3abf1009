"""Prompt bundles for zero-, one- and few-shot rework detection.

Message texts live in ``prompts/*.txt`` next to this module and are loaded
byte-for-byte; the golden tests pin their hashes. Token counts are a
conservative byte heuristic (``ceil(bytes / 4) + 8`` per message), not a
vendor tokenizer.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from typing import Sequence

from .eventlog import LabeledDataset, format_variant

TOOL_NAME = "get_event_variants"
MESSAGE_OVERHEAD = 8
REPLY_ALLOWANCE = 0.25


class Role(str, enum.Enum):
    SYSTEM = "system"
    HUMAN = "human"
    AI = "ai"
    FUNCTION_RESULT = "function"


class PromptMode(str, enum.Enum):
    ZERO_SHOT = "zero"
    ONE_SHOT = "one"
    FEW_SHOT = "few"

    @property
    def n_examples(self) -> int:
        return {"zero": 0, "one": 1, "few": 3}[self.value]


@dataclass(frozen=True)
class ChatMessage:
    role: Role
    content: str
    tool_call_id: str | None = None
    # (id, name, arguments) triples on an AI message that requests tools
    tool_calls: tuple = ()

    def to_dict(self) -> dict:
        d = {"role": Role(self.role).value, "content": self.content}
        if self.tool_call_id is not None:
            d["tool_call_id"] = self.tool_call_id
        if self.tool_calls:
            d["tool_calls"] = [list(c) for c in self.tool_calls]
        return d


@dataclass(frozen=True)
class ToolSpec:
    name: str
    description: str
    parameters: dict = field(default_factory=lambda: {"type": "object", "properties": {}})

    def to_openai(self) -> dict:
        return {"type": "function",
                "function": {"name": self.name, "description": self.description,
                             "parameters": self.parameters}}


@dataclass(frozen=True)
class PromptBundle:
    mode: PromptMode
    system: ChatMessage
    human: ChatMessage
    tool: ToolSpec
    chunk: tuple[str, ...]

    def tool_payload(self) -> str:
        return "\n".join(self.chunk)


@lru_cache(maxsize=None)
def load_prompt(name: str) -> str:
    """Read ``prompts/<name>.txt`` exactly as stored (UTF-8, no newline fix-up)."""
    ref = resources.files("reworkbench").joinpath("prompts", f"{name}.txt")
    return ref.read_bytes().decode("utf-8")


def tool_spec() -> ToolSpec:
    return ToolSpec(TOOL_NAME, load_prompt("function"))


def build_bundle(mode: PromptMode | str, chunk: Sequence[str]) -> PromptBundle:
    mode = PromptMode(mode)
    chunk = tuple(chunk)
    if not chunk:
        raise ValueError("chunk must contain at least one variant line")
    return PromptBundle(
        mode=mode,
        system=ChatMessage(Role.SYSTEM, load_prompt("system")),
        human=ChatMessage(Role.HUMAN, load_prompt(mode.value)),
        tool=tool_spec(),
        chunk=chunk,
    )


def estimate_tokens(text: str) -> int:
    return math.ceil(len(text.encode("utf-8")) / 4) + MESSAGE_OVERHEAD


def fixed_tokens(mode: PromptMode | str) -> int:
    """Estimate for the parts re-sent with every chunk: system, human, tool spec."""
    mode = PromptMode(mode)
    spec = tool_spec()
    return (estimate_tokens(load_prompt("system")) + estimate_tokens(load_prompt(mode.value))
            + estimate_tokens(spec.name + " " + spec.description))


def chunk_tokens(mode: PromptMode | str, lines: Sequence[str]) -> int:
    """Total request estimate: fixed messages + lines + reply allowance."""
    line_tokens = sum(estimate_tokens(x) for x in lines)
    return fixed_tokens(mode) + line_tokens + math.ceil(REPLY_ALLOWANCE * line_tokens)


class ChunkingError(ValueError):
    pass


def plan_chunks(ds: LabeledDataset, mode: PromptMode | str, budget_tokens: int) -> list[list[str]]:
    """Greedily pack formatted lines, in dataset order, into budget-sized chunks."""
    fixed = fixed_tokens(mode)
    chunks: list[list[str]] = []
    current: list[str] = []
    line_tokens = 0
    for lv in ds:
        line = format_variant(lv)
        t = estimate_tokens(line)
        if fixed + t + math.ceil(REPLY_ALLOWANCE * t) > budget_tokens:
            raise ChunkingError(f"variant {lv.id} alone exceeds the {budget_tokens}-token budget")
        grown = line_tokens + t
        if current and fixed + grown + math.ceil(REPLY_ALLOWANCE * grown) > budget_tokens:
            chunks.append(current)
            current, grown = [], t
        current.append(line)
        line_tokens = grown
    if current:
        chunks.append(current)
    return chunks
