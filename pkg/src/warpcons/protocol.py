"""Per-process consensus automaton and the mode decision rule.

A correct process appends its proposal on its first access, reads the first
``ceil(n/p)`` slots over its following accesses (``r`` per access) and
decides the mode of what it read.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Optional, Union

from .errors import AllNull
from .sticky import AppendAttempt


@dataclass(frozen=True)
class ReadChunkRequest:
    pid: int
    start: int
    count: int


@dataclass(frozen=True)
class Decide:
    pid: int
    value: int


@dataclass(frozen=True)
class Idle:
    pid: int


Action = Union[AppendAttempt, ReadChunkRequest, Decide, Idle]


def action_kind(action: Action) -> str:
    if isinstance(action, AppendAttempt):
        return "append"
    if isinstance(action, ReadChunkRequest):
        return "read"
    if isinstance(action, Decide):
        return "decide"
    if isinstance(action, Idle):
        return "idle"
    raise TypeError(f"not an action: {action!r}")


def mode(values: Iterable[Optional[int]]) -> int:
    """Most frequent non-NULL value; ties go to the smallest value."""
    counts = Counter(v for v in values if v is not None)
    if not counts:
        raise AllNull("mode of a list with no non-NULL entries is undefined")
    top = max(counts.values())
    return min(v for v, c in counts.items() if c == top)


@dataclass
class ProcessState:
    pid: int
    proposal: int
    read_len: int
    chunk: int
    access_count: int = 0
    read_values: list = field(default_factory=list)
    phase_of_append: Optional[int] = None
    decision: Optional[tuple[int, int]] = None
    stuck: bool = False

    @property
    def done(self) -> bool:
        return self.decision is not None or self.stuck


def protocol_step(state: ProcessState) -> Action:
    if state.done:
        return Idle(state.pid)
    if state.access_count == 0:
        return AppendAttempt(state.pid, state.proposal)
    held = len(state.read_values)
    if held < state.read_len:
        return ReadChunkRequest(state.pid, held, min(state.chunk, state.read_len - held))
    return Decide(state.pid, mode(state.read_values))
