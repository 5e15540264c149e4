"""Byzantine strategies and crash plans.

Every strategy is a deterministic function of what a Byzantine process is
allowed to see (the public trace prefix and the StickyCAS contents).  The
engine enforces the phase budget again on whatever a strategy returns, so a
buggy strategy surfaces as an error rather than as a silently stronger
adversary.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Any, Iterator, Mapping, Optional

from .errors import IllegalAction, InvalidParameter, TooLarge
from .protocol import Action, Idle, ReadChunkRequest
from .sticky import AppendAttempt, StickyCasState

DEFAULT_STRATEGY_CAP = 10**6


@dataclass(frozen=True)
class Observation:
    """What a Byzantine process may inspect before choosing its action."""

    pid: int
    phase: int
    access: int
    state: StickyCasState
    records: tuple = ()
    may_abstain: bool = False


@dataclass(frozen=True)
class NullProposer:
    kind = "null"

    def validate(self, cfg) -> None:
        pass

    def to_dict(self) -> dict:
        return {"kind": self.kind}


@dataclass(frozen=True)
class DistinctValues:
    assignment: Mapping[int, int]
    kind = "distinct"

    def validate(self, cfg) -> None:
        missing = set(cfg.byzantine_ids) - set(self.assignment)
        if missing:
            raise InvalidParameter(f"distinct-values strategy has no value for processes {sorted(missing)}")
        vals = [self.assignment[pid] for pid in cfg.byzantine_ids]
        if len(set(vals)) != len(vals):
            raise InvalidParameter(f"distinct-values strategy repeats a value: {vals}")
        for v in vals:
            _check_value(v)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "assignment": {str(k): v for k, v in sorted(self.assignment.items())}}


@dataclass(frozen=True)
class Collude:
    value: int
    kind = "collude"

    def validate(self, cfg) -> None:
        _check_value(self.value)
        if self.value in cfg.correct_values:
            raise InvalidParameter(f"collusion value {self.value} is proposed by a correct process")

    def to_dict(self) -> dict:
        return {"kind": self.kind, "value": self.value}


@dataclass(frozen=True)
class EchoCorrect:
    target: int
    kind = "echo"

    def validate(self, cfg) -> None:
        if self.target not in cfg.correct_values:
            raise InvalidParameter(f"echo target {self.target} is not proposed by any correct process")

    def to_dict(self) -> dict:
        return {"kind": self.kind, "target": self.target}


@dataclass(frozen=True)
class AbstainThenAppend:
    """Skip the first access, append ``value`` on access number ``offset``.

    Without abstention permission the append happens on the first access.
    """

    value: Optional[int]
    offset: int = 1
    kind = "abstain_then_append"

    def validate(self, cfg) -> None:
        if self.value is not None:
            _check_value(self.value)
        if self.offset < 1:
            raise InvalidParameter("abstain offset must be >= 1")

    def to_dict(self) -> dict:
        return {"kind": self.kind, "value": self.value, "offset": self.offset}


@dataclass(frozen=True)
class Scripted:
    """Explicit actions: ``actions[pid][phase]`` is a step dict.

    A step is ``{"op": "append", "value": v}``, ``{"op": "read", "start": s,
    "count": c}`` or ``{"op": "idle"}``.  Phases with no entry are idle.
    """

    actions: Mapping[int, Mapping[int, Any]]
    kind = "scripted"

    def validate(self, cfg) -> None:
        for pid in self.actions:
            if pid not in cfg.byzantine_ids:
                raise InvalidParameter(f"scripted actions given for non-Byzantine process {pid}")

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "actions": {
                str(pid): {str(ph): step for ph, step in sorted(steps.items())}
                for pid, steps in sorted(self.actions.items())
            },
        }


@dataclass(frozen=True)
class Mixed:
    per_pid: Mapping[int, Any] = field(default_factory=dict)
    kind = "mixed"

    def validate(self, cfg) -> None:
        missing = set(cfg.byzantine_ids) - set(self.per_pid)
        if missing:
            raise InvalidParameter(f"mixed strategy has no sub-strategy for processes {sorted(missing)}")
        for pid, sub in self.per_pid.items():
            if pid not in cfg.byzantine_ids:
                raise InvalidParameter(f"mixed strategy names non-Byzantine process {pid}")
            if isinstance(sub, Mixed):
                raise InvalidParameter("mixed strategies do not nest")
            sub.validate(cfg)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "per_pid": {str(k): v.to_dict() for k, v in sorted(self.per_pid.items())}}


STRATEGY_KINDS = {
    cls.kind: cls
    for cls in (NullProposer, DistinctValues, Collude, EchoCorrect, AbstainThenAppend, Scripted, Mixed)
}


def _check_value(v) -> None:
    if not isinstance(v, int) or isinstance(v, bool) or v < 0:
        raise InvalidParameter(f"Byzantine values must be non-negative integers, got {v!r}")


def _first_access_append(pid: int, access: int, value) -> Action:
    return AppendAttempt(pid, value) if access == 0 else Idle(pid)


def byzantine_action(strategy, pid: int, phase: int, obs: Observation) -> Action:
    if isinstance(strategy, Mixed):
        strategy = strategy.per_pid[pid]
    access = obs.access

    if isinstance(strategy, NullProposer):
        return _first_access_append(pid, access, None)
    if isinstance(strategy, DistinctValues):
        return _first_access_append(pid, access, strategy.assignment[pid])
    if isinstance(strategy, Collude):
        return _first_access_append(pid, access, strategy.value)
    if isinstance(strategy, EchoCorrect):
        return _first_access_append(pid, access, strategy.target)
    if isinstance(strategy, AbstainThenAppend):
        if not obs.may_abstain:
            return _first_access_append(pid, access, strategy.value)
        return AppendAttempt(pid, strategy.value) if access == strategy.offset else Idle(pid)
    if isinstance(strategy, Scripted):
        step = strategy.actions.get(pid, {}).get(phase, {"op": "idle"})
        action = _scripted_step(pid, step)
        if access == 0 and not obs.may_abstain and not isinstance(action, AppendAttempt):
            raise IllegalAction(
                f"process {pid} must append on its first access when abstention is disabled"
            )
        return action
    raise IllegalAction(f"unknown strategy {strategy!r}")


def _scripted_step(pid: int, step) -> Action:
    if not isinstance(step, Mapping):
        raise IllegalAction(f"scripted step for process {pid} must be a single operation, got {step!r}")
    if step.get("pid", pid) != pid:
        raise IllegalAction(f"process {pid} attempted to act as process {step['pid']}")
    op = step.get("op")
    if op == "append":
        return AppendAttempt(pid, step.get("value"))
    if op == "read":
        return ReadChunkRequest(pid, int(step["start"]), int(step["count"]))
    if op == "idle":
        return Idle(pid)
    raise IllegalAction(f"unknown scripted operation {op!r} for process {pid}")


def strategy_for_value(value: Optional[int], correct_values) -> Any:
    """The named proof-case strategy that appends ``value``."""
    if value is None:
        return NullProposer()
    if value in correct_values:
        return EchoCorrect(value)
    return Collude(value)


def classify_assignment(values, correct_values) -> str:
    """Label a Byzantine value assignment with the proof case it exercises."""
    values = list(values)
    if not values:
        return "none"
    if all(v is None for v in values):
        return "null"
    if any(v is None for v in values):
        return "mixed"
    if all(v in correct_values for v in values):
        return "echo"
    if len(set(values)) == 1:
        return "collude"
    if len(set(values)) == len(values) and not any(v in correct_values for v in values):
        return "distinct"
    return "mixed"


def count_strategy_space(cfg, *, include_abstention: Optional[bool] = None) -> int:
    if include_abstention is None:
        include_abstention = cfg.config.byzantine_may_abstain
    per = len(cfg.config.value_domain) + 1
    return per ** cfg.f * (2 if include_abstention else 1)


def worst_case_strategy_space(
    cfg, *, cap: int = DEFAULT_STRATEGY_CAP, include_abstention: Optional[bool] = None
) -> Iterator[Mixed]:
    """Every assignment of NULL or a domain value to the Byzantine processes."""
    if include_abstention is None:
        include_abstention = cfg.config.byzantine_may_abstain
    total = count_strategy_space(cfg, include_abstention=include_abstention)
    if total > cap:
        raise TooLarge(f"strategy space has {total} members, cap is {cap}", total)
    byz = sorted(cfg.byzantine_ids)
    choices = [None, *sorted(cfg.config.value_domain)]
    for values in itertools.product(choices, repeat=len(byz)):
        yield Mixed({pid: strategy_for_value(v, cfg.correct_values) for pid, v in zip(byz, values)})
        if include_abstention:
            yield Mixed({pid: AbstainThenAppend(v) for pid, v in zip(byz, values)})


def strategy_from_dict(d: Mapping[str, Any]):
    if not isinstance(d, Mapping) or "kind" not in d:
        raise InvalidParameter(f"strategy must be an object with a 'kind', got {d!r}")
    kind = d["kind"]
    allowed = {
        "null": {"kind"},
        "distinct": {"kind", "assignment"},
        "collude": {"kind", "value"},
        "echo": {"kind", "target"},
        "abstain_then_append": {"kind", "value", "offset"},
        "scripted": {"kind", "actions"},
        "mixed": {"kind", "per_pid"},
    }
    if kind not in allowed:
        raise InvalidParameter(f"unknown strategy kind {kind!r}")
    extra = set(d) - allowed[kind]
    if extra:
        raise InvalidParameter(f"unknown key(s) {sorted(extra)} in {kind!r} strategy")
    try:
        if kind == "null":
            return NullProposer()
        if kind == "distinct":
            return DistinctValues({int(k): v for k, v in d["assignment"].items()})
        if kind == "collude":
            return Collude(d["value"])
        if kind == "echo":
            return EchoCorrect(d["target"])
        if kind == "abstain_then_append":
            return AbstainThenAppend(d["value"], d.get("offset", 1))
        if kind == "scripted":
            return Scripted(
                {int(pid): {int(ph): step for ph, step in steps.items()} for pid, steps in d["actions"].items()}
            )
        return Mixed({int(k): strategy_from_dict(v) for k, v in d["per_pid"].items()})
    except KeyError as exc:
        raise InvalidParameter(f"{kind!r} strategy is missing key {exc.args[0]!r}") from None


@dataclass(frozen=True)
class CrashPlan:
    """Processes that halt forever at ``(phase, step)`` in the CAS-level simulation."""

    crashes: Mapping[int, tuple[int, int]]

    def validate(self, pids) -> None:
        pids = set(pids)
        if pids and pids <= set(self.crashes):
            raise InvalidParameter("a crash plan must leave at least one process running")

    def crash_points(self, phase: int) -> dict[int, int]:
        return {pid: step for pid, (ph, step) in self.crashes.items() if ph == phase}

    def crashed_before(self, pid: int, phase: int) -> bool:
        return pid in self.crashes and self.crashes[pid][0] < phase
