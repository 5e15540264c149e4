import pytest

from warpcons import model
from warpcons.adversary import (
    AbstainThenAppend,
    Collude,
    CrashPlan,
    EchoCorrect,
    Mixed,
    NullProposer,
    Observation,
    byzantine_action,
    classify_assignment,
    strategy_from_dict,
    worst_case_strategy_space,
)
from warpcons.errors import InvalidParameter, TooLarge
from warpcons.protocol import Idle
from warpcons.sticky import AppendAttempt, StickyCasState


def obs(access, may_abstain=False):
    return Observation(pid=0, phase=0, access=access, state=StickyCasState.empty(2), may_abstain=may_abstain)


def test_first_access_actions():
    assert byzantine_action(Collude(0), 0, 0, obs(0)) == AppendAttempt(0, 0)
    assert byzantine_action(NullProposer(), 0, 0, obs(0)) == AppendAttempt(0, None)
    assert byzantine_action(Collude(0), 0, 3, obs(1)) == Idle(0)


def test_abstain_then_append():
    s = AbstainThenAppend(7, offset=1)
    assert byzantine_action(s, 0, 0, obs(0, True)) == Idle(0)
    assert byzantine_action(s, 0, 4, obs(1, True)) == AppendAttempt(0, 7)
    # without permission the append moves to the first access
    assert byzantine_action(s, 0, 0, obs(0, False)) == AppendAttempt(0, 7)


def _cfg(f, domain):
    n = f + 1
    return model.make_config(n, 1, 1, {f: domain[-1]}, range(f), value_domain=domain, adversary=NullProposer() if f else None)


@pytest.mark.parametrize("f,domain,count", [(1, (0, 1), 3), (2, (0, 1), 9), (0, (0, 1), 1)])
def test_strategy_space_size(f, domain, count):
    assert len(list(worst_case_strategy_space(_cfg(f, domain)))) == count


def test_strategy_space_cap():
    with pytest.raises(TooLarge):
        list(worst_case_strategy_space(_cfg(2, (0, 1)), cap=8))


def test_strategy_validation():
    cfg = model.make_config(3, 1, 1, {1: 1, 2: 2}, (0,), value_domain=(0, 1, 2), adversary=NullProposer())
    with pytest.raises(InvalidParameter):
        Collude(1).validate(cfg)
    with pytest.raises(InvalidParameter):
        EchoCorrect(0).validate(cfg)
    with pytest.raises(InvalidParameter):
        Mixed({}).validate(cfg)


def test_classify():
    vc = {1, 2}
    assert classify_assignment([], vc) == "none"
    assert classify_assignment([None, None], vc) == "null"
    assert classify_assignment([1, 2], vc) == "echo"
    assert classify_assignment([0, 0], vc) == "collude"
    assert classify_assignment([0, 3], vc) == "distinct"
    assert classify_assignment([0, None], vc) == "mixed"


def test_roundtrip_dicts():
    for s in (NullProposer(), Collude(0), EchoCorrect(2), AbstainThenAppend(1, 2), Mixed({0: Collude(0), 1: NullProposer()})):
        assert strategy_from_dict(s.to_dict()) == s
    with pytest.raises(InvalidParameter):
        strategy_from_dict({"kind": "collude", "value": 0, "extra": 1})


def test_crash_plan():
    plan = CrashPlan({1: (2, 3)})
    assert plan.crash_points(2) == {1: 3}
    assert plan.crashed_before(1, 3) and not plan.crashed_before(1, 2)
    with pytest.raises(InvalidParameter):
        CrashPlan({0: (0, 0), 1: (0, 0)}).validate([0, 1])
