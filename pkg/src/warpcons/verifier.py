"""Property checks over traces and the exhaustive small-instance checker.

Checks only ever look at correct processes; whatever a Byzantine process
"decides" is irrelevant.  The exhaustive checker quantifies over Byzantine
placements, correct proposals, Byzantine values and every contention
resolution, not just the default arbitration policy.
"""

from __future__ import annotations

import itertools
import logging
import multiprocessing
import os
import time
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterator, Optional, Sequence

from . import model
from .adversary import (
    AbstainThenAppend,
    Collude,
    NullProposer,
    classify_assignment,
    count_strategy_space,
    worst_case_strategy_space,
)
from .arbitration import ChoiceSequence, LowestPid, ScriptedWinners, next_choices
from .engine import Trace, run_to_completion
from .errors import IncompleteTrace, InvalidParameter, TooLarge

log = logging.getLogger(__name__)

AGREEMENT = "Agreement"
COMMON_VALIDITY = "CommonValidity"
STRONG_VALIDITY = "StrongValidity"
TERMINATION = "Termination"
PROPERTIES = (AGREEMENT, COMMON_VALIDITY, STRONG_VALIDITY, TERMINATION)

PASS, FAIL, NA = "pass", "fail", "not-applicable"

DEFAULT_CASE_CAP = 10**7
F_MODES = ("below-bound", "at-bound", "above-bound")


def case_cap() -> int:
    raw = os.environ.get("WARPCONS_CASE_CAP")
    return int(raw) if raw else DEFAULT_CASE_CAP


@dataclass(frozen=True)
class Verdict:
    property: str
    outcome: str
    witness: Optional[Trace] = None
    detail: str = ""

    def __post_init__(self):
        if self.outcome == FAIL and self.witness is None:
            raise ValueError("a failing verdict needs a witness trace")

    @property
    def passed(self) -> bool:
        return self.outcome == PASS

    def to_dict(self) -> dict:
        d = {"outcome": self.outcome}
        if self.detail:
            d["detail"] = self.detail
        return d


def _require_complete(trace: Trace) -> dict:
    missing = [pid for pid in trace.config.correct_ids if pid not in trace.decisions]
    if missing:
        raise IncompleteTrace(f"correct processes {missing} have not decided")
    return {pid: trace.decisions[pid][0] for pid in trace.config.correct_ids}


def check_agreement(trace: Trace) -> Verdict:
    decided = _require_complete(trace)
    values = set(decided.values())
    if len(values) == 1:
        return Verdict(AGREEMENT, PASS)
    return Verdict(AGREEMENT, FAIL, trace, f"correct processes decided {sorted(values)}")


def check_common_validity(vc, trace: Trace) -> Verdict:
    decided = _require_complete(trace)
    if len(vc) != 1:
        return Verdict(COMMON_VALIDITY, NA)
    (v,) = tuple(vc)
    bad = sorted({d for d in decided.values() if d != v})
    if not bad:
        return Verdict(COMMON_VALIDITY, PASS)
    return Verdict(COMMON_VALIDITY, FAIL, trace, f"all correct proposed {v}, decided {bad}")


def check_strong_validity(vc, trace: Trace) -> Verdict:
    decided = _require_complete(trace)
    bad = sorted({d for d in decided.values() if d not in vc})
    if not bad:
        return Verdict(STRONG_VALIDITY, PASS)
    return Verdict(STRONG_VALIDITY, FAIL, trace, f"decided {bad}, correct values are {sorted(vc)}")


def check_termination(trace: Trace, n: int, p: int, r: int) -> Verdict:
    cfg = trace.config
    undecided = [pid for pid in cfg.correct_ids if pid not in trace.decisions]
    if undecided:
        return Verdict(TERMINATION, FAIL, trace, f"processes {undecided} never decided")
    bound = model.decision_phase_bound(n, p, r)
    last = max(trace.decisions[pid][1] for pid in cfg.correct_ids)
    if last > bound:
        return Verdict(TERMINATION, FAIL, trace, f"last decision at phase {last} > bound {bound}")
    if not cfg.config.byzantine_may_abstain:
        # exact: each correct process decides on the phase fixed by the schedule,
        # so the last one lands on the bound whenever the last warp has a correct member
        late = [
            pid
            for pid in cfg.correct_ids
            if trace.decisions[pid][1] != model.decision_phase_of(pid, n, p, r)
        ]
        if late:
            return Verdict(TERMINATION, FAIL, trace, f"processes {late} decided off schedule")
    return Verdict(TERMINATION, PASS)


def evaluate_trace(trace: Trace) -> dict:
    cfg = trace.config
    c = cfg.config
    verdicts = {TERMINATION: check_termination(trace, c.n, c.p, c.r)}
    try:
        verdicts[AGREEMENT] = check_agreement(trace)
        verdicts[COMMON_VALIDITY] = check_common_validity(cfg.correct_values, trace)
        verdicts[STRONG_VALIDITY] = check_strong_validity(cfg.correct_values, trace)
    except IncompleteTrace as exc:
        for prop in (AGREEMENT, STRONG_VALIDITY):
            verdicts[prop] = Verdict(prop, FAIL, trace, str(exc))
        verdicts[COMMON_VALIDITY] = (
            Verdict(COMMON_VALIDITY, FAIL, trace, str(exc))
            if len(cfg.correct_values) == 1
            else Verdict(COMMON_VALIDITY, NA)
        )
    return verdicts


def witness_config(trace: Trace) -> model.ValidatedConfig:
    """The trace's config with its contention outcomes pinned, for exact replay."""
    c = trace.config.config
    pinned = model.SystemConfig(
        n=c.n,
        p=c.p,
        r=c.r,
        f=c.f,
        value_domain=c.value_domain,
        proposals=c.proposals,
        byzantine_ids=c.byzantine_ids,
        adversary=c.adversary,
        arbitration=ScriptedWinners(trace.winners()),
        byzantine_may_abstain=c.byzantine_may_abstain,
        seed=c.seed,
    )
    return model.validate_config(pinned)


def run_all_resolutions(cfg: model.ValidatedConfig) -> Iterator[Trace]:
    """Run ``cfg`` once for every way the contended appends can be resolved."""
    choices: Optional[list] = []
    while choices is not None:
        arbiter = ChoiceSequence(choices)
        trace = run_to_completion(cfg, arbiter)
        yield trace
        choices = next_choices(choices, arbiter.arities)


# ---------------------------------------------------------------------------
# exhaustive checking


@dataclass(frozen=True)
class CheckSpace:
    n_values: Sequence[int]
    p_set: Sequence[int]
    r_set: Sequence[int]
    domain: Sequence[int] = (0, 1, 2)
    f_mode: str = "below-bound"
    byzantine_may_abstain: bool = False

    def __post_init__(self):
        if self.f_mode not in F_MODES:
            raise InvalidParameter(f"f_mode must be one of {F_MODES}, got {self.f_mode!r}")

    def to_dict(self) -> dict:
        return {
            "n": list(self.n_values),
            "p": list(self.p_set),
            "r": list(self.r_set),
            "domain": list(self.domain),
            "f_mode": self.f_mode,
            "byzantine_may_abstain": self.byzantine_may_abstain,
        }


def f_selected(f: int, limit: int, mode: str) -> bool:
    if mode == "below-bound":
        return f <= limit
    if mode == "at-bound":
        return f == limit
    return f == limit + 1


@dataclass(frozen=True)
class CaseGroup:
    """All strategies and resolutions for one (system, placement, proposals) point."""

    cfg_params: tuple
    proposals: tuple
    byzantine_ids: tuple


def iter_case_groups(space: CheckSpace) -> Iterator[CaseGroup]:
    domain = tuple(sorted(space.domain))
    for n in space.n_values:
        for p in space.p_set:
            if p > n:
                continue
            for r in space.r_set:
                if r > n:
                    continue
                for f in range(n):
                    for byz in itertools.combinations(range(n), f):
                        correct = [pid for pid in range(n) if pid not in byz]
                        for values in itertools.product(domain, repeat=len(correct)):
                            limit = model.resilience_limit(n, p, len(set(values)))
                            if f_selected(f, limit, space.f_mode):
                                yield CaseGroup((n, p, r), tuple(zip(correct, values)), byz)


def _resolutions_estimate(n: int, p: int) -> int:
    out = 1
    for w in range(model.warp_count(n, p)):
        out *= len(model.warp_members(w, n, p))
    return out


def count_cases(space: CheckSpace) -> int:
    strategies_per_f = {}
    total = 0
    per = len(space.domain) + 1
    for g in iter_case_groups(space):
        n, p, _ = g.cfg_params
        f = len(g.byzantine_ids)
        if f not in strategies_per_f:
            strategies_per_f[f] = per**f * (2 if space.byzantine_may_abstain and f else 1)
        total += strategies_per_f[f] * _resolutions_estimate(n, p)
    return total


def group_config(g: CaseGroup, space: CheckSpace, adversary=None) -> model.ValidatedConfig:
    n, p, r = g.cfg_params
    return model.validate_config(
        model.SystemConfig(
            n=n,
            p=p,
            r=r,
            f=len(g.byzantine_ids),
            value_domain=tuple(sorted(space.domain)),
            proposals=dict(g.proposals),
            byzantine_ids=frozenset(g.byzantine_ids),
            adversary=adversary,
            byzantine_may_abstain=space.byzantine_may_abstain,
        )
    )


@dataclass
class CheckReport:
    space: dict
    total_cases: int = 0
    counts: dict = field(default_factory=lambda: {prop: Counter() for prop in PROPERTIES})
    regime_failures: Counter = field(default_factory=Counter)
    witnesses: list = field(default_factory=list)
    rows: dict = field(default_factory=dict)
    elapsed: float = 0.0
    max_witnesses: int = 10

    def failures(self, prop: str) -> int:
        return self.counts[prop][FAIL]

    def merge(self, other: "CheckReport") -> None:
        self.total_cases += other.total_cases
        for prop in PROPERTIES:
            self.counts[prop].update(other.counts[prop])
        self.regime_failures.update(other.regime_failures)
        for key, (count, last) in other.rows.items():
            mine, my_last = self.rows.get(key, (0, -1))
            self.rows[key] = (mine + count, max(my_last, last))
        for w in other.witnesses:
            if sum(1 for x in self.witnesses if x["property"] == w["property"]) < self.max_witnesses:
                self.witnesses.append(w)

    def record(self, trace: Trace, verdicts: dict, label: str, in_regime: bool) -> None:
        self.total_cases += 1
        cfg = trace.config
        c = cfg.config
        for prop, v in verdicts.items():
            self.counts[prop][v.outcome] += 1
            key = (c.n, c.p, c.r, c.f, cfg.vc_size, label, prop, v.outcome)
            count, last = self.rows.get(key, (0, -1))
            ldp = trace.last_decision_phase
            self.rows[key] = (count + 1, max(last, -1 if ldp is None else ldp))
            if v.outcome == FAIL:
                if in_regime:
                    self.regime_failures[prop] += 1
                if sum(1 for w in self.witnesses if w["property"] == prop) < self.max_witnesses:
                    self.witnesses.append(_witness_entry(prop, v, trace, label))

    def to_dict(self) -> dict:
        return {
            "space": self.space,
            "total_cases": self.total_cases,
            "counts": {
                prop: {o: self.counts[prop][o] for o in (PASS, FAIL, NA)} for prop in PROPERTIES
            },
            "regime_failures": {prop: self.regime_failures[prop] for prop in PROPERTIES},
            "witnesses": self.witnesses,
        }

    def csv_rows(self) -> list:
        header = [
            "n", "p", "r", "f", "vc_size", "strategy", "property", "outcome",
            "last_decision_phase", "count",
        ]
        body = []
        for key in sorted(self.rows, key=lambda k: tuple(str(x) if isinstance(x, str) else f"{x:08d}" for x in k)):
            count, last = self.rows[key]
            body.append([*key, "" if last < 0 else last, count])
        return [header, *body]


def _witness_entry(prop: str, verdict: Verdict, trace: Trace, label: str) -> dict:
    from .experiment import config_to_dict

    return {
        "property": prop,
        "strategy_case": label,
        "detail": verdict.detail,
        "config": config_to_dict(witness_config(trace)),
        "decisions": {str(pid): v for pid, (v, _) in sorted(trace.correct_decisions().items())},
        "final_list": list(trace.final_state.slots) if trace.final_state else None,
    }


def _assignment_label(strategy, cfg) -> str:
    values = []
    for pid in sorted(strategy.per_pid):
        sub = strategy.per_pid[pid]
        if isinstance(sub, AbstainThenAppend):
            return "abstain_then_append"
        values.append(getattr(sub, "value", getattr(sub, "target", None)))
    return classify_assignment(values, cfg.correct_values)


def _check_group(job) -> "CheckReport":
    g, space, cap, max_witnesses = job
    part = CheckReport(space={}, max_witnesses=max_witnesses)
    base = group_config(g, space, NullProposer() if g.byzantine_ids else None)
    for strategy in worst_case_strategy_space(base, cap=cap):
        cfg = group_config(g, space, strategy if base.f else None)
        label = _assignment_label(strategy, cfg)
        in_regime = cfg.within_resilience and not space.byzantine_may_abstain
        for trace in run_all_resolutions(cfg):
            part.record(trace, evaluate_trace(trace), label, in_regime)
    return part


def default_workers() -> int:
    raw = os.environ.get("WARPCONS_WORKERS")
    if raw:
        return max(1, int(raw))
    return max(1, min(8, os.cpu_count() or 1))


def exhaustive_check(
    space: CheckSpace,
    *,
    cap: Optional[int] = None,
    max_witnesses: int = 10,
    workers: Optional[int] = None,
) -> CheckReport:
    """Run every case of ``space``; results do not depend on ``workers``."""
    cap = case_cap() if cap is None else cap
    total = count_cases(space)
    if total > cap:
        raise TooLarge(f"check space has about {total} cases, cap is {cap}", total)
    workers = default_workers() if workers is None else workers
    report = CheckReport(space=space.to_dict(), max_witnesses=max_witnesses)
    start = time.perf_counter()
    jobs = ((g, space, cap, max_witnesses) for g in iter_case_groups(space))
    if workers <= 1:
        for job in jobs:
            report.merge(_check_group(job))
    else:
        with multiprocessing.get_context("fork").Pool(workers) as pool:
            # imap keeps group order, so the merged report matches a serial run
            for part in pool.imap(_check_group, jobs, chunksize=16):
                report.merge(part)
    report.elapsed = time.perf_counter() - start
    log.info("checked %d cases in %.1fs", report.total_cases, report.elapsed)
    return report


# ---------------------------------------------------------------------------
# counterexamples


def _balanced(values: Sequence[int]) -> bool:
    counts = Counter(values).values()
    return max(counts) - min(counts) <= 1


def find_violation(
    n: int,
    p: int,
    r: int,
    f: int,
    domain: Sequence[int] = (0, 1, 2),
    vc_size: Optional[int] = None,
    *,
    cap: Optional[int] = None,
) -> Optional[Trace]:
    """Search for a collusion counterexample; None if the space holds none.

    The Byzantine processes collude on the smallest domain value, which is
    withheld from the correct processes; correct proposals range over evenly
    split assignments of the remaining values.
    """
    cap = case_cap() if cap is None else cap
    domain = sorted(domain)
    forged, rest = domain[0], domain[1:]
    if not rest:
        raise InvalidParameter("find_violation needs at least two domain values")
    correct_count = n - f
    assignments = [
        vals
        for vals in itertools.product(rest, repeat=correct_count)
        if _balanced(vals) and (vc_size is None or len(set(vals)) == vc_size)
    ]
    total = len(assignments) * _ncr(n, f) * _resolutions_estimate(n, p)
    if total > cap:
        raise TooLarge(f"violation search has about {total} cases, cap is {cap}", total)
    for byz in itertools.combinations(range(n), f):
        correct = [pid for pid in range(n) if pid not in byz]
        for vals in assignments:
            cfg = model.make_config(
                n, p, r, dict(zip(correct, vals)), byz,
                value_domain=domain, adversary=Collude(forged) if f else None,
            )
            for trace in run_all_resolutions(cfg):
                verdicts = evaluate_trace(trace)
                if any(verdicts[prop].outcome == FAIL for prop in (AGREEMENT, STRONG_VALIDITY)):
                    return trace
    return None


def _ncr(n: int, k: int) -> int:
    from math import comb

    return comb(n, k)


def scenario_witness(cfg: model.ValidatedConfig) -> Optional[Trace]:
    """Run one scripted scenario; the trace if any property fails, else None."""
    trace = run_to_completion(cfg)
    verdicts = evaluate_trace(trace)
    return trace if any(v.outcome == FAIL for v in verdicts.values()) else None


def tightness_config() -> model.ValidatedConfig:
    """Two colluders against four correct processes split 1,1,2,2 (one past the bound)."""
    return model.make_config(
        6, 1, 1, {2: 1, 3: 1, 4: 2, 5: 2}, (0, 1),
        value_domain=(0, 1, 2), adversary=Collude(0),
    )


def model_gap_config(may_abstain: bool) -> model.ValidatedConfig:
    """A fully Byzantine warp that skips its first access and appends late.

    n=20, p=2 gives ten warps; warp 5 (processes 10, 11) is Byzantine.  The
    nine correct warps commit 1,1,1,1,2,2,2,2,2.  With abstention the
    Byzantine warp fills slot 9 with a 1 at phase 15, between the reads of
    warps 0-4 (mode 2) and warps 6-9 (mode 1, by the tie rule).
    """
    proposals = {pid: 1 for pid in range(8)}
    proposals.update({pid: 2 for pid in (8, 9, *range(12, 20))})
    return model.make_config(
        20, 2, 10, proposals, (10, 11),
        value_domain=(0, 1, 2),
        adversary=AbstainThenAppend(1, offset=1),
        arbitration=LowestPid(),
        byzantine_may_abstain=may_abstain,
    )
