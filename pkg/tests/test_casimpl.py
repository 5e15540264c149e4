from collections import Counter

import pytest

from warpcons import _kernels_py, kernels
from warpcons import casimpl as ci
from warpcons.casimpl import CasResult, Step
from warpcons.errors import InvalidLength, ScheduleError, TooLarge

S = CasResult.APPEND_SUCCESS
F = CasResult.APPEND_FAILED


def sched(*pairs, crashes=None):
    return ci.StepSchedule(tuple((pid, Step(s)) for pid, s in pairs), crashes or {})


def solo(pid, steps=4):
    return [(pid, s) for s in range(steps)]


def test_cas_examples():
    bank = ci.AtomicRegisterBank(2)
    assert ci.cas(bank, ci.COUNTER, 1, 2) and bank.counter == 2
    assert not ci.cas(bank, ci.COUNTER, 1, 2) and bank.counter == 2
    assert ci.cas(bank, ("slot", 1), None, None) and bank.slots() == (None, None)


def test_lockstep_two_programs():
    bank = ci.AtomicRegisterBank(3)
    progs = [ci.AppendProgram(0, 5), ci.AppendProgram(1, 7)]
    order = [(pid, s) for s in range(4) for pid in (0, 1)]
    res = ci.run_append_interleaved(bank, progs, sched(*order))
    assert sorted(res.values(), key=lambda r: r.value) == [F, S]
    assert bank.counter == 2


def test_crash_leaves_hole():
    bank = ci.AtomicRegisterBank(3)
    res = ci.run_append_interleaved(bank, [ci.AppendProgram(0, 5)], sched(*solo(0, 3), crashes={0: 3}))
    assert res == {0: CasResult.CRASHED}
    assert bank.counter == 2 and bank.slots() == (None, None, None)
    res = ci.run_append_interleaved(bank, [ci.AppendProgram(1, 6)], sched(*solo(1)))
    assert res == {1: S}
    assert bank.slots() == (None, 6, None)


def test_limit_reached_touches_nothing():
    bank = ci.AtomicRegisterBank(1)
    ci.run_append_interleaved(bank, [ci.AppendProgram(0, 5)], sched(*solo(0)))
    before = (bank.counter, bank.slots())
    prog = ci.AppendProgram(1, 6)
    res = ci.run_append_interleaved(bank, [prog], sched(*solo(1)))
    assert res == {1: CasResult.LIMIT_REACHED}
    assert (bank.counter, bank.slots()) == before
    assert prog.shared_steps == 2


def test_read_impl():
    bank = ci.AtomicRegisterBank(3)
    ci.run_append_interleaved(bank, [ci.AppendProgram(0, 7)], sched(*solo(0)))
    assert ci.read_impl(bank, 1) == [7]
    assert ci.read_impl(ci.AtomicRegisterBank(3), 3) == [None, None, None]
    with pytest.raises(InvalidLength):
        ci.read_impl(bank, 4)


def test_reader_against_one_appender():
    # slot 1 already holds 4; one appender commits 9 at slot 2 while a reader reads both cells
    prog = [ci.AppendProgram(1, 9)]
    outcomes = set()
    for s in ci.enumerate_interleavings(prog, 0, reader=ci.ReadProgram(2)):
        bank = ci.AtomicRegisterBank(2)
        ci.run_append_interleaved(bank, [ci.AppendProgram(0, 4)], sched(*solo(0)))
        reader = ci.ReadProgram(2)
        ci.run_append_interleaved(bank, [ci.AppendProgram(1, 9)], s, reader)
        outcomes.add(tuple(reader.values))
    assert outcomes == {(4, None), (4, 9)}


def test_enumeration_counts():
    one, two = [ci.AppendProgram(0, 1)], [ci.AppendProgram(0, 1), ci.AppendProgram(1, 2)]
    assert sum(1 for _ in ci.enumerate_interleavings(one, 0)) == 1
    assert sum(1 for _ in ci.enumerate_interleavings(two, 0)) == 70
    assert sum(1 for _ in ci.enumerate_interleavings(one, 4)) == 5
    with pytest.raises(TooLarge):
        list(ci.enumerate_interleavings([ci.AppendProgram(i, i) for i in range(4)], 0))


def test_enumeration_respects_order_and_crashes():
    two = [ci.AppendProgram(0, 1), ci.AppendProgram(1, 2)]
    for s in ci.enumerate_interleavings(two, 1):
        per = Counter()
        for pid, step in s.entries:
            assert int(step) == per[pid]
            per[pid] += 1
        assert len(s.crashes) < 2
        for pid in (0, 1):
            assert per[pid] == s.crashes.get(pid, 4)


def test_schedule_errors():
    progs = lambda: [ci.AppendProgram(0, 1)]  # noqa: E731
    with pytest.raises(ScheduleError):
        ci.run_append_interleaved(ci.AtomicRegisterBank(1), progs(), sched((0, 1), (0, 0), (0, 2), (0, 3)))
    with pytest.raises(ScheduleError):
        ci.run_append_interleaved(ci.AtomicRegisterBank(1), progs(), sched(*solo(0), crashes={0: 2}))
    with pytest.raises(ScheduleError):
        ci.run_append_interleaved(ci.AtomicRegisterBank(1), progs(), sched(*solo(0, 3)))
    with pytest.raises(ScheduleError):
        ci.run_append_interleaved(ci.AtomicRegisterBank(1), progs(), sched(*solo(0), (5, 0)))


def test_crash_patterns():
    assert len(list(ci.crash_patterns([0], 2))) == 5
    assert len(list(ci.crash_patterns([0, 1], 2))) == 1 + 2 * 4
    assert len(list(ci.crash_patterns([0, 1, 2], 2))) == 1 + 3 * 4 + 3 * 16


@pytest.mark.parametrize("k,n", [(1, 1), (1, 3), (2, 1), (2, 2), (2, 3)])
@pytest.mark.parametrize("lockstep", [False, True])
def test_python_enumeration_matches_kernel(k, n, lockstep):
    values = dict(zip(range(k), ci.DEFAULT_VALUES))
    progs = [ci.AppendProgram(pid, v) for pid, v in values.items()]
    by_pattern = Counter()
    bad = Counter()
    for s in ci.enumerate_interleavings(progs, 2, reader=ci.ReadProgram(n), lockstep=lockstep):
        by_pattern[tuple(sorted(s.crashes.items()))] += 1
        for name in ci.violations(ci.execute(values, n, s, n)):
            bad[name] += 1
    report = ci.conformance_sweep((k,), (n,), 2, lockstep=lockstep, explore=_kernels_py.explore)
    assert report.schedules == sum(by_pattern.values())
    assert {name: c for name, c in report.totals().items() if c} == dict(bad)


def test_kernel_witness_replays():
    report = ci.conformance_sweep((2,), (2,), 0)
    case = report.first_witness()
    ex = ci.execute(dict(zip(range(2), case.values)), case.capacity, case.witness, case.capacity)
    assert "double_success" in ci.violations(ex)
    assert list(ex.results.values()) == [S, S]


def test_lockstep_has_no_violations():
    report = ci.conformance_sweep(lockstep=True)
    assert report.schedules > 0
    assert not any(report.totals().values())


def test_crash_free_distinct_values_leave_no_holes():
    report = ci.conformance_sweep(max_crashes=0)
    assert report.total("hole") == 0


@pytest.mark.parametrize("k", [1, 2, 3])
def test_lockstep_phase_matches_idealized_object(k):
    values = {pid: 10 * (pid + 1) for pid in range(k)}
    for n in range(1, 7):
        for prefill in range(n + 1):
            assert ci.lockstep_matches_abstract(values, n, prefill), (n, prefill)


def test_null_proposal_breaks_single_winner():
    # CAS(NULL, NULL) succeeds without changing the slot, so a second attempter also succeeds
    assert not ci.lockstep_matches_abstract({0: None, 1: 5}, 2)


def test_abstract_result_mapping():
    assert CasResult.CRASHED.to_abstract() is None
    assert CasResult.LIMIT_REACHED.to_abstract().value == "LimitReached"
