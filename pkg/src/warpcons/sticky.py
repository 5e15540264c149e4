"""Idealized StickyCAS: an append-only list of at most ``n`` slots.

At most one append commits per phase.  Reads return a prefix of the slot
array, with uncommitted positions reported as NULL rather than blocking.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable, Optional

from .errors import ArbitrationError, InvalidLength


class AppendResult(enum.Enum):
    WRITE_SUCCESSFUL = "WriteSuccessful"
    WRITE_FAILED = "WriteFailed"
    LIMIT_REACHED = "LimitReached"


@dataclass(frozen=True)
class AppendAttempt:
    pid: int
    val: Optional[int]


@dataclass(frozen=True)
class StickyCasState:
    slots: tuple[Optional[int], ...]
    appended_count: int = 0

    @classmethod
    def empty(cls, capacity: int) -> "StickyCasState":
        return cls(slots=(None,) * capacity, appended_count=0)

    @property
    def capacity(self) -> int:
        return len(self.slots)

    @property
    def full(self) -> bool:
        return self.appended_count >= len(self.slots)

    def committed(self) -> tuple[Optional[int], ...]:
        return self.slots[: self.appended_count]


def resolve_phase_appends(
    state: StickyCasState,
    attempts: Iterable[AppendAttempt],
    winner: Optional[int],
) -> tuple[StickyCasState, dict[int, AppendResult]]:
    attempts = list(attempts)
    if not attempts:
        return state, {}
    pids = [a.pid for a in attempts]
    if len(set(pids)) != len(pids):
        raise ArbitrationError(f"more than one append attempt by the same process: {pids}")
    if winner not in pids:
        raise ArbitrationError(f"winner {winner!r} is not among the attempting processes {pids}")
    if state.full:
        # a full list overrides arbitration, winner included
        return state, {pid: AppendResult.LIMIT_REACHED for pid in pids}

    val = next(a.val for a in attempts if a.pid == winner)
    slots = list(state.slots)
    slots[state.appended_count] = val
    results = {
        pid: AppendResult.WRITE_SUCCESSFUL if pid == winner else AppendResult.WRITE_FAILED
        for pid in pids
    }
    return StickyCasState(tuple(slots), state.appended_count + 1), results


def read_prefix(state: StickyCasState, length: int) -> list[Optional[int]]:
    if not 1 <= length <= state.capacity:
        raise InvalidLength(f"read length {length} outside [1, {state.capacity}]")
    return list(state.slots[:length])


def read_range(state: StickyCasState, start: int, count: int) -> list[Optional[int]]:
    """Slots ``start .. start+count-1``; one chunk of a multi-phase read."""
    if start < 0 or count < 1 or start + count > state.capacity:
        raise InvalidLength(f"read range [{start}, {start + count}) outside capacity {state.capacity}")
    return list(state.slots[start : start + count])
