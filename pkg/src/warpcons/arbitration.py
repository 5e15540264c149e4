"""Contention policies: who wins when several processes append in one phase."""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

from .errors import ArbitrationError, InvalidParameter
from .sticky import AppendAttempt


@dataclass(frozen=True)
class AdversarialByzantineWins:
    """Any Byzantine attempt wins (lowest pid among them); otherwise lowest pid."""

    kind = "adversarial"

    def start(self, cfg) -> "AdversarialByzantineWins":
        return self

    def choose(self, phase: int, attempts: Sequence[AppendAttempt], byzantine_ids) -> int:
        byz = [a.pid for a in attempts if a.pid in byzantine_ids]
        return min(byz) if byz else min(a.pid for a in attempts)

    def to_dict(self) -> dict:
        return {"policy": self.kind}


@dataclass(frozen=True)
class LowestPid:
    kind = "lowest_pid"

    def start(self, cfg) -> "LowestPid":
        return self

    def choose(self, phase: int, attempts: Sequence[AppendAttempt], byzantine_ids) -> int:
        return min(a.pid for a in attempts)

    def to_dict(self) -> dict:
        return {"policy": self.kind}


@dataclass(frozen=True)
class SeededUniform:
    """Uniform winner from a per-run RNG; ``seed=None`` uses the config seed."""

    seed: Optional[int] = None
    kind = "seeded_uniform"

    def start(self, cfg) -> "_UniformArbiter":
        seed = cfg.config.seed if self.seed is None else self.seed
        return _UniformArbiter(random.Random(seed))

    def to_dict(self) -> dict:
        d = {"policy": self.kind}
        if self.seed is not None:
            d["seed"] = self.seed
        return d


class _UniformArbiter:
    def __init__(self, rng: random.Random):
        self.rng = rng

    def choose(self, phase, attempts, byzantine_ids) -> int:
        pids = sorted(a.pid for a in attempts)
        return pids[self.rng.randrange(len(pids))]


@dataclass(frozen=True)
class ScriptedWinners:
    """Fixed winner per contended phase, used to replay witnesses."""

    winners: Mapping[int, int]
    kind = "scripted"

    def start(self, cfg) -> "ScriptedWinners":
        return self

    def choose(self, phase: int, attempts: Sequence[AppendAttempt], byzantine_ids) -> int:
        if phase not in self.winners:
            return min(a.pid for a in attempts)
        pid = self.winners[phase]
        if pid not in {a.pid for a in attempts}:
            raise ArbitrationError(f"scripted winner {pid} did not attempt an append in phase {phase}")
        return pid

    def to_dict(self) -> dict:
        return {"policy": self.kind, "winners": {str(k): v for k, v in sorted(self.winners.items())}}


@dataclass
class ChoiceSequence:
    """Arbiter driven by an explicit list of winner indices.

    Each contended phase consumes one index into the pid-sorted attempt list
    (missing entries mean 0) and records how many candidates there were, so
    callers can walk every resolution odometer-style.
    """

    choices: Sequence[int] = ()
    arities: list = field(default_factory=list)

    def start(self, cfg) -> "ChoiceSequence":
        return self

    def choose(self, phase, attempts, byzantine_ids) -> int:
        pids = sorted(a.pid for a in attempts)
        i = len(self.arities)
        k = self.choices[i] if i < len(self.choices) else 0
        self.arities.append(len(pids))
        return pids[k]


def next_choices(choices: Sequence[int], arities: Sequence[int]) -> Optional[list[int]]:
    """Advance a choice odometer; None once every resolution has been visited."""
    full = list(choices) + [0] * (len(arities) - len(choices))
    for j in range(len(arities) - 1, -1, -1):
        if full[j] + 1 < arities[j]:
            return full[:j] + [full[j] + 1]
    return None


DEFAULT_POLICY = AdversarialByzantineWins()


def policy_from_dict(d: Mapping) -> object:
    if not isinstance(d, Mapping) or "policy" not in d:
        raise InvalidParameter(f"arbitration must be an object with a 'policy', got {d!r}")
    kind = d["policy"]
    allowed = {
        "adversarial": {"policy"},
        "lowest_pid": {"policy"},
        "seeded_uniform": {"policy", "seed"},
        "scripted": {"policy", "winners"},
    }
    if kind not in allowed:
        raise InvalidParameter(f"unknown arbitration policy {kind!r}")
    extra = set(d) - allowed[kind]
    if extra:
        raise InvalidParameter(f"unknown key(s) {sorted(extra)} in arbitration")
    if kind == "adversarial":
        return AdversarialByzantineWins()
    if kind == "lowest_pid":
        return LowestPid()
    if kind == "seeded_uniform":
        return SeededUniform(d.get("seed"))
    return ScriptedWinners({int(k): int(v) for k, v in d["winners"].items()})
