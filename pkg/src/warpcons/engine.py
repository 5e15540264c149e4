"""Phase-based execution engine.

One warp runs per phase, chosen round-robin by warp id.  Inside a phase each
process of the warp takes exactly one StickyCAS access: an append attempt or
one read chunk of up to ``r`` values.  Appends are arbitrated first, then
read chunks are served from the updated list.  A process whose read
completes decides in the same phase.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any, Optional

from . import model
from .adversary import Observation, byzantine_action
from .arbitration import DEFAULT_POLICY
from .errors import AllNull, BudgetViolation, NonTermination
from .protocol import Action, Decide, Idle, ProcessState, ReadChunkRequest, protocol_step
from .sticky import AppendAttempt, AppendResult, StickyCasState, read_range, resolve_phase_appends

log = logging.getLogger(__name__)


def schedule_warp(phase: int, warp_count: int) -> int:
    return phase % warp_count


@dataclass(frozen=True)
class ActionRecord:
    op: str
    args: tuple
    result: Any = None
    decided: Optional[int] = None

    def to_dict(self) -> dict:
        d = {"op": self.op, "args": list(self.args), "result": _jsonable(self.result)}
        if self.decided is not None:
            d["decided"] = self.decided
        return d


def _jsonable(x):
    if isinstance(x, AppendResult):
        return x.value
    if isinstance(x, tuple):
        return list(x)
    return x


@dataclass(frozen=True)
class PhaseRecord:
    phase: int
    warp: int
    actions: dict
    list_len_after: int
    winner: Optional[int] = None

    def successes(self) -> int:
        return sum(1 for a in self.actions.values() if a.result is AppendResult.WRITE_SUCCESSFUL)

    def to_dict(self) -> dict:
        return {
            "phase": self.phase,
            "warp": self.warp,
            "actions": {str(pid): a.to_dict() for pid, a in sorted(self.actions.items())},
            "list_len_after": self.list_len_after,
            "winner": self.winner,
        }


@dataclass
class Trace:
    config: model.ValidatedConfig
    records: list = field(default_factory=list)
    decisions: dict = field(default_factory=dict)
    stuck: set = field(default_factory=set)
    final_state: Optional[StickyCasState] = None

    @property
    def last_decision_phase(self) -> Optional[int]:
        if not self.decisions:
            return None
        return max(ph for _, ph in self.decisions.values())

    def correct_decisions(self) -> dict:
        return {pid: self.decisions[pid] for pid in self.config.correct_ids if pid in self.decisions}

    def winners(self) -> dict:
        """Winner of every phase in which more than one process attempted an append."""
        out = {}
        for rec in self.records:
            attempts = [a for a in rec.actions.values() if a.op == "append"]
            if len(attempts) > 1 and rec.winner is not None:
                out[rec.phase] = rec.winner
        return out

    def to_dict(self) -> dict:
        from .experiment import config_to_dict

        return {
            "config": config_to_dict(self.config),
            "phases": [r.to_dict() for r in self.records],
            "decisions": {
                str(pid): {"value": v, "phase": ph} for pid, (v, ph) in sorted(self.decisions.items())
            },
            "stuck": sorted(self.stuck),
            "final_list": list(self.final_state.slots) if self.final_state else None,
            "last_decision_phase": self.last_decision_phase,
        }


class WarpEngine:
    def __init__(self, cfg: model.ValidatedConfig, arbiter=None):
        self.cfg = cfg
        c = cfg.config
        self.n, self.p, self.r = c.n, c.p, c.r
        self.warps = cfg.warp_count
        self.state = StickyCasState.empty(c.n)
        self.phase = 0
        policy = c.arbitration if c.arbitration is not None else DEFAULT_POLICY
        self.arbiter = arbiter if arbiter is not None else policy.start(cfg)
        self.procs = {
            pid: ProcessState(pid, c.proposals[pid], read_len=self.warps, chunk=c.r)
            for pid in cfg.correct_ids
        }
        self.byz_access = {pid: 0 for pid in sorted(c.byzantine_ids)}
        self.trace = Trace(cfg)

    @property
    def finished(self) -> bool:
        return all(ps.done for ps in self.procs.values())

    def _action_for(self, pid: int) -> Action:
        c = self.cfg.config
        if pid in self.procs:
            return protocol_step(self.procs[pid])
        obs = Observation(
            pid=pid,
            phase=self.phase,
            access=self.byz_access[pid],
            state=self.state,
            records=tuple(self.trace.records),
            may_abstain=c.byzantine_may_abstain,
        )
        return byzantine_action(c.adversary, pid, self.phase, obs)

    def _check_budget(self, pid: int, action) -> None:
        if not isinstance(action, (AppendAttempt, ReadChunkRequest, Idle, Decide)):
            raise BudgetViolation(f"process {pid} issued {action!r}, which is not a single operation")
        if action.pid != pid:
            raise BudgetViolation(f"process {pid} issued an action as process {action.pid}")
        if isinstance(action, ReadChunkRequest):
            if not 1 <= action.count <= self.r or action.start < 0 or action.start + action.count > self.n:
                raise BudgetViolation(
                    f"process {pid} read [{action.start}, {action.start + action.count}) with r={self.r}"
                )
        if isinstance(action, AppendAttempt) and action.val is not None:
            if not isinstance(action.val, int) or action.val < 0:
                raise BudgetViolation(f"process {pid} appended a non-value {action.val!r}")

    def execute_phase(self) -> PhaseRecord:
        warp = schedule_warp(self.phase, self.warps)
        members = model.warp_members(warp, self.n, self.p)
        actions = {}
        for pid in members:
            action = self._action_for(pid)
            self._check_budget(pid, action)
            actions[pid] = action
        self._check_lockstep(actions)

        attempts = [a for a in actions.values() if isinstance(a, AppendAttempt)]
        winner = None
        append_results = {}
        if attempts:
            winner = attempts[0].pid if len(attempts) == 1 else self.arbiter.choose(
                self.phase, attempts, self.cfg.byzantine_ids
            )
            self.state, append_results = resolve_phase_appends(self.state, attempts, winner)

        recs = {}
        for pid, action in actions.items():
            if isinstance(action, AppendAttempt):
                recs[pid] = ActionRecord("append", (action.val,), append_results[pid])
                if pid in self.procs:
                    self.procs[pid].phase_of_append = self.phase
            elif isinstance(action, ReadChunkRequest):
                values = tuple(read_range(self.state, action.start, action.count))
                decided = None
                if pid in self.procs:
                    decided = self._deliver_chunk(self.procs[pid], values)
                recs[pid] = ActionRecord("read", (action.start, action.count), values, decided)
            else:
                recs[pid] = ActionRecord("idle", ())

        for pid, action in actions.items():
            if pid in self.procs:
                if not isinstance(action, Idle):
                    self.procs[pid].access_count += 1
            else:
                self.byz_access[pid] += 1

        record = PhaseRecord(self.phase, warp, recs, self.state.appended_count, winner)
        self.trace.records.append(record)
        self.phase += 1
        return record

    def _deliver_chunk(self, ps: ProcessState, values) -> Optional[int]:
        ps.read_values.extend(values)
        if len(ps.read_values) < ps.read_len:
            return None
        try:
            action = protocol_step(ps)
        except AllNull:
            ps.stuck = True
            self.trace.stuck.add(ps.pid)
            log.debug("process %d read only NULL values and cannot decide", ps.pid)
            return None
        assert isinstance(action, Decide)
        ps.decision = (action.value, self.phase)
        self.trace.decisions[ps.pid] = ps.decision
        return action.value

    def _check_lockstep(self, actions) -> None:
        kinds = {
            (type(a).__name__, self.procs[pid].access_count)
            for pid, a in actions.items()
            if pid in self.procs and not self.procs[pid].done
        }
        if len(kinds) > 1:
            raise RuntimeError(f"correct processes diverged inside warp at phase {self.phase}: {kinds}")

    def run(self) -> Trace:
        limit = 4 * model.decision_phase_bound(self.n, self.p, self.r)
        while not self.finished:
            if self.phase > limit:
                raise NonTermination(f"no decision after {self.phase} phases (limit {limit})")
            self.execute_phase()
        self.trace.final_state = self.state
        return self.trace


def run_to_completion(cfg: model.ValidatedConfig, arbiter=None) -> Trace:
    return WarpEngine(cfg, arbiter).run()
