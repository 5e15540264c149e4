"""Crash-tolerant StickyCAS built from single-word CAS registers.

Indices are 1-based here and the counter starts at 1; conversion to the
0-based idealized object happens once, in :func:`to_abstract_state`.

An append is four shared-memory steps::

    READ_COUNTER  k <- counter
    READ_SLOT     m <- slots[k]; if k > n: return Limit Reached
    CAS_COUNTER   counter.cas(k, k + 1)
    CAS_SLOT      slots[k].cas(m, val) -> Append Success / Append Failed

The bound check is local and folded into ``READ_SLOT``.  Crashes happen only
between shared steps.
"""

from __future__ import annotations

import enum
import itertools
import logging
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Optional, Sequence

from . import kernels
from .errors import InvalidLength, InvalidParameter, ScheduleError, TooLarge
from .sticky import AppendAttempt, AppendResult, StickyCasState, resolve_phase_appends

log = logging.getLogger(__name__)

NULL = None
COUNTER = "counter"
READER = -1
MAX_PROGRAMS = 3
APPEND_STEPS = 4


class Step(enum.IntEnum):
    READ_COUNTER = 0
    READ_SLOT = 1
    CAS_COUNTER = 2
    CAS_SLOT = 3


class CasResult(enum.Enum):
    APPEND_SUCCESS = "Append Success"
    APPEND_FAILED = "Append Failed"
    LIMIT_REACHED = "Limit Reached"
    CRASHED = "Crashed"

    def to_abstract(self) -> Optional[AppendResult]:
        return {
            CasResult.APPEND_SUCCESS: AppendResult.WRITE_SUCCESSFUL,
            CasResult.APPEND_FAILED: AppendResult.WRITE_FAILED,
            CasResult.LIMIT_REACHED: AppendResult.LIMIT_REACHED,
        }.get(self)


class AtomicRegisterBank:
    """``counter`` plus slots ``1..n``; every mutation goes through :meth:`cas`."""

    def __init__(self, capacity: int):
        if capacity < 1:
            raise InvalidParameter(f"capacity must be >= 1, got {capacity}")
        self.capacity = capacity
        self._counter = 1
        self._slots = [NULL] * (capacity + 1)

    @property
    def counter(self) -> int:
        return self._counter

    def slots(self) -> tuple:
        """Slots ``1..n`` as a tuple (position 0 holds slot 1)."""
        return tuple(self._slots[1:])

    def read(self, register):
        if register == COUNTER:
            return self._counter
        k = self._slot_index(register)
        # slot n+1 does not exist; a reader that got there sees NULL
        return NULL if k > self.capacity else self._slots[k]

    def cas(self, register, expected, new) -> bool:
        if register == COUNTER:
            if self._counter != expected:
                return False
            if not isinstance(new, int) or new < self._counter or new > self.capacity + 1:
                raise ScheduleError(f"counter may only advance within [1, {self.capacity + 1}], got {new}")
            self._counter = new
            return True
        k = self._slot_index(register)
        if k > self.capacity or self._slots[k] != expected:
            return False
        self._slots[k] = new
        return True

    def _slot_index(self, register) -> int:
        if isinstance(register, tuple) and len(register) == 2 and register[0] == "slot":
            k = register[1]
        else:
            k = register
        if not isinstance(k, int) or k < 1:
            raise InvalidParameter(f"no register {register!r}")
        return k

    def __repr__(self) -> str:
        return f"AtomicRegisterBank(counter={self._counter}, slots={list(self.slots())})"


def cas(bank: AtomicRegisterBank, register, expected, new) -> bool:
    return bank.cas(register, expected, new)


@dataclass
class AppendProgram:
    pid: int
    val: Optional[int]
    pc: int = 0
    k: int = 0
    m: Optional[int] = NULL
    result: Optional[CasResult] = None
    shared_steps: int = 0

    @property
    def done(self) -> bool:
        return self.result is not None

    def step(self, bank: AtomicRegisterBank) -> None:
        """Execute the next shared step; a no-op once the program has returned."""
        s = self.pc
        self.pc += 1
        if self.done:
            return
        if s >= APPEND_STEPS:
            raise ScheduleError(f"process {self.pid} has no step {s}")
        self.shared_steps += 1
        if s == Step.READ_COUNTER:
            self.k = bank.read(COUNTER)
        elif s == Step.READ_SLOT:
            self.m = bank.read(("slot", self.k))
            if self.k > bank.capacity:
                self.result = CasResult.LIMIT_REACHED
        elif s == Step.CAS_COUNTER:
            bank.cas(COUNTER, self.k, self.k + 1)
        else:
            ok = bank.cas(("slot", self.k), self.m, self.val)
            self.result = CasResult.APPEND_SUCCESS if ok else CasResult.APPEND_FAILED


@dataclass
class ReadProgram:
    """Reads slots ``1..length``, one cell per step."""

    length: int
    pc: int = 0
    values: list = field(default_factory=list)

    @property
    def done(self) -> bool:
        return self.pc >= self.length

    def step(self, bank: AtomicRegisterBank) -> None:
        if self.done:
            raise ScheduleError("reader has already finished")
        self.pc += 1
        self.values.append(bank.read(("slot", self.pc)))


def read_impl(bank: AtomicRegisterBank, length: int) -> list:
    if not 1 <= length <= bank.capacity:
        raise InvalidLength(f"read length must be in [1, {bank.capacity}], got {length}")
    reader = ReadProgram(length)
    while not reader.done:
        reader.step(bank)
    return reader.values


@dataclass(frozen=True)
class StepSchedule:
    """A total order of shared steps.

    ``entries`` are ``(pid, step)`` pairs; the reader appears as
    ``(READER, cell)``.  ``crashes[pid]`` is how many steps ``pid`` takes
    before it halts.
    """

    entries: tuple
    crashes: Mapping[int, int] = field(default_factory=dict)

    def pids(self) -> list:
        return [pid for pid, _ in self.entries]

    def to_dict(self) -> dict:
        return {
            "entries": [[pid, int(step)] for pid, step in self.entries],
            "crashes": {str(pid): c for pid, c in sorted(self.crashes.items())},
        }


def _validate_schedule(programs: Mapping[int, AppendProgram], reader, schedule: StepSchedule) -> None:
    seen: Counter = Counter()
    for pid, step in schedule.entries:
        if pid == READER:
            if reader is None:
                raise ScheduleError("schedule has reader steps but no reader was given")
        elif pid not in programs:
            raise ScheduleError(f"schedule names unknown process {pid}")
        if int(step) != seen[pid]:
            raise ScheduleError(f"process {pid} step {int(step)} out of order (expected {seen[pid]})")
        seen[pid] += 1
        limit = schedule.crashes.get(pid)
        if limit is not None and seen[pid] > limit:
            raise ScheduleError(f"process {pid} steps after crashing at step {limit}")
    for pid in programs:
        want = schedule.crashes.get(pid, APPEND_STEPS)
        if seen[pid] != want:
            raise ScheduleError(f"schedule gives process {pid} {seen[pid]} steps, expected {want}")
    if reader is not None and seen[READER] != reader.length:
        raise ScheduleError(f"schedule gives the reader {seen[READER]} steps, expected {reader.length}")


def run_append_interleaved(
    bank: AtomicRegisterBank,
    programs: Iterable[AppendProgram],
    schedule: StepSchedule,
    reader: Optional[ReadProgram] = None,
) -> dict:
    """Run ``schedule`` against ``bank``; returns pid -> CasResult."""
    progs = {prog.pid: prog for prog in programs}
    if READER in progs:
        raise InvalidParameter(f"process id {READER} is reserved for the reader")
    _validate_schedule(progs, reader, schedule)
    for pid, _ in schedule.entries:
        (reader if pid == READER else progs[pid]).step(bank)
    out = {}
    for pid, prog in progs.items():
        out[pid] = prog.result if prog.done else CasResult.CRASHED
    return out


# ---------------------------------------------------------------------------
# enumeration


def crash_patterns(pids: Sequence[int], max_crashes: int) -> Iterator[dict]:
    """Every crash assignment with at most ``max_crashes`` crashed programs.

    With two or more programs at least one must survive; a lone program may
    crash.
    """
    pids = list(pids)
    top = min(max_crashes, len(pids) - 1 if len(pids) > 1 else len(pids))
    for c in range(top + 1):
        for crashed in itertools.combinations(pids, c):
            for points in itertools.product(range(APPEND_STEPS), repeat=c):
                yield dict(zip(crashed, points))


def _interleave(counts: list, lockstep: bool, pc: list, prefix: list) -> Iterator[list]:
    live = [i for i, c in enumerate(counts) if pc[i] < c]
    if not live:
        yield list(prefix)
        return
    if lockstep:
        low = min(pc[i] for i in live)
        live = [i for i in live if pc[i] == low]
    for i in live:
        prefix.append((i, pc[i]))
        pc[i] += 1
        yield from _interleave(counts, lockstep, pc, prefix)
        pc[i] -= 1
        prefix.pop()


def enumerate_interleavings(
    programs: Sequence[AppendProgram],
    max_crashes: int,
    reader: Optional[ReadProgram] = None,
    lockstep: bool = False,
) -> Iterator[StepSchedule]:
    """Every interleaving of the programs' steps under every crash pattern.

    ``lockstep`` restricts to synchronous rounds: a participant may take its
    j-th step only when every live participant has taken j-1.
    """
    if len(programs) > MAX_PROGRAMS:
        raise TooLarge(f"at most {MAX_PROGRAMS} programs can be enumerated, got {len(programs)}", len(programs))
    pids = [prog.pid for prog in programs]
    for crashes in crash_patterns(pids, max_crashes):
        owners = pids + ([READER] if reader is not None else [])
        counts = [crashes.get(pid, APPEND_STEPS) for pid in pids]
        if reader is not None:
            counts.append(reader.length)
        for seq in _interleave(counts, lockstep, [0] * len(counts), []):
            yield StepSchedule(tuple((owners[i], _step_tag(owners[i], s)) for i, s in seq), crashes)


def _step_tag(pid: int, s: int):
    return s if pid == READER else Step(s)


def schedule_from_path(path: Sequence[int], pids: Sequence[int], crashes: Mapping[int, int]) -> StepSchedule:
    """Turn a kernel path of participant indices into a StepSchedule."""
    owners = list(pids) + [READER]
    seen: Counter = Counter()
    entries = []
    for i in path:
        pid = owners[i]
        entries.append((pid, _step_tag(pid, seen[pid])))
        seen[pid] += 1
    return StepSchedule(tuple(entries), dict(crashes))


# ---------------------------------------------------------------------------
# conformance


VIOLATIONS = kernels.COUNTER_NAMES


@dataclass
class Execution:
    bank: AtomicRegisterBank
    programs: dict
    reader: Optional[ReadProgram]
    results: dict
    schedule: StepSchedule
    slot_history: list


def execute(values: Mapping[int, Optional[int]], capacity: int, schedule: StepSchedule, reader_len: int = 0) -> Execution:
    """Replay ``schedule`` from a fresh bank, recording every successful slot CAS."""
    bank = AtomicRegisterBank(capacity)
    history = []
    orig = bank.cas

    def traced(register, expected, new):
        ok = orig(register, expected, new)
        if ok and register != COUNTER:
            history.append((register[1], expected, new))
        return ok

    bank.cas = traced  # type: ignore[method-assign]
    programs = [AppendProgram(pid, v) for pid, v in values.items()]
    reader = ReadProgram(reader_len) if reader_len else None
    results = run_append_interleaved(bank, programs, schedule, reader)
    del bank.cas
    return Execution(bank, {p.pid: p for p in programs}, reader, results, schedule, history)


def violations(ex: Execution) -> set:
    """Which conformance properties this execution breaks (kernel semantics)."""
    bad = set()
    succ_per_slot = Counter(k for k, _, _ in ex.slot_history)
    if any(c > 1 for c in succ_per_slot.values()):
        bad.add("double_success")
    first = {}
    for k, _, new in ex.slot_history:
        if k in first and first[k] != new:
            bad.add("overwrite")
        first.setdefault(k, new)
    slots = (NULL, *ex.bank.slots())
    for prog in ex.programs.values():
        if prog.result is CasResult.APPEND_SUCCESS and slots[prog.k] != prog.val:
            bad.add("lost_success")
        if prog.pid not in ex.schedule.crashes:
            if prog.result is CasResult.LIMIT_REACHED:
                ok = prog.shared_steps == 2
            else:
                ok = prog.shared_steps == APPEND_STEPS
            if not ok:
                bad.add("step_count")
    if ex.reader is not None:
        for j, v in enumerate(ex.reader.values, start=1):
            if v is not NULL and v != slots[j]:
                bad.add("unstable_read")
    if not ex.schedule.crashes and all(p.val is not NULL for p in ex.programs.values()):
        if any(slots[j] is NULL for j in range(1, ex.bank.counter)):
            bad.add("hole")
    return bad


@dataclass
class ConformanceCase:
    values: tuple
    capacity: int
    crashes: dict
    schedules: int
    counts: dict
    witness: Optional[StepSchedule] = None


@dataclass
class ConformanceReport:
    lockstep: bool
    implementation: str
    cases: list = field(default_factory=list)

    @property
    def schedules(self) -> int:
        return sum(c.schedules for c in self.cases)

    def total(self, name: str) -> int:
        return sum(c.counts[name] for c in self.cases)

    def totals(self) -> dict:
        return {name: self.total(name) for name in VIOLATIONS}

    def first_witness(self, names: Iterable[str] = VIOLATIONS) -> Optional[ConformanceCase]:
        names = set(names)
        for c in self.cases:
            if c.witness is not None and any(c.counts[n] for n in names):
                return c
        return None


DEFAULT_VALUES = (10, 20, 30)


def conformance_sweep(
    program_counts: Sequence[int] = (1, 2, 3),
    capacities: Sequence[int] = (1, 2, 3),
    max_crashes: int = 2,
    *,
    lockstep: bool = False,
    with_reader: bool = True,
    values: Sequence[Optional[int]] = DEFAULT_VALUES,
    explore=None,
) -> ConformanceReport:
    """Explore every schedule and crash pattern of each (programs, capacity) point.

    The reader reads the whole capacity.  ``explore`` overrides the kernel.
    """
    explore = explore or kernels.explore
    impl = getattr(explore, "__module__", "") or ""
    report = ConformanceReport(lockstep, "python" if impl.endswith("_kernels_py") else kernels.IMPLEMENTATION)
    for k in program_counts:
        if k > MAX_PROGRAMS:
            raise TooLarge(f"at most {MAX_PROGRAMS} programs can be enumerated, got {k}", k)
        vals = tuple(values[:k])
        pids = list(range(k))
        kv = [kernels.NULL if v is NULL else v for v in vals]
        for n in capacities:
            reader_len = n if with_reader else 0
            for crashes in crash_patterns(pids, max_crashes):
                planned = [crashes.get(pid, APPEND_STEPS) for pid in pids]
                leaves, counts, path = explore(kv, n, planned, reader_len, lockstep)
                witness = schedule_from_path(path, pids, crashes) if path is not None else None
                report.cases.append(
                    ConformanceCase(vals, n, dict(crashes), leaves, dict(zip(VIOLATIONS, counts)), witness)
                )
    return report


# ---------------------------------------------------------------------------
# link to the idealized object


def to_abstract_state(bank: AtomicRegisterBank) -> StickyCasState:
    return StickyCasState(slots=bank.slots(), appended_count=bank.counter - 1)


def lockstep_matches_abstract(values: Mapping[int, Optional[int]], capacity: int, prefill: int = 0) -> bool:
    """Check one crash-free lock-step phase against the idealized object.

    ``prefill`` earlier phases each commit one filler value first.  For every
    order of steps within each round, the implementation's results and final
    state must equal those of the idealized object when its winner is the
    process whose slot CAS succeeded.
    """
    pids = list(values)
    fillers = {100 + j: 1000 + j for j in range(prefill)}
    bank = AtomicRegisterBank(capacity)
    state = StickyCasState.empty(capacity)
    for pid, v in fillers.items():
        run_append_interleaved(bank, [AppendProgram(pid, v)], _solo(pid))
        state, _ = resolve_phase_appends(state, [AppendAttempt(pid, v)], pid)
    base_counter, base_slots = bank.counter, list(bank._slots)
    for sched in enumerate_interleavings([AppendProgram(pid, values[pid]) for pid in pids], 0, lockstep=True):
        trial = AtomicRegisterBank(capacity)
        trial._counter, trial._slots = base_counter, list(base_slots)
        results = run_append_interleaved(trial, [AppendProgram(pid, values[pid]) for pid in pids], sched)
        winners = [pid for pid, r in results.items() if r is CasResult.APPEND_SUCCESS]
        if len(winners) > 1:
            return False
        attempts = [AppendAttempt(pid, values[pid]) for pid in pids]
        winner = winners[0] if winners else pids[0]
        want_state, want = resolve_phase_appends(state, attempts, winner)
        got = {pid: r.to_abstract() for pid, r in results.items()}
        if got != want or to_abstract_state(trial) != want_state:
            return False
    return True


def _solo(pid: int) -> StepSchedule:
    return StepSchedule(tuple((pid, Step(s)) for s in range(APPEND_STEPS)))
