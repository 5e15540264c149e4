import pytest

from warpcons.arbitration import (
    AdversarialByzantineWins,
    ChoiceSequence,
    LowestPid,
    ScriptedWinners,
    SeededUniform,
    next_choices,
    policy_from_dict,
)
from warpcons.errors import ArbitrationError, InvalidParameter
from warpcons.sticky import AppendAttempt

ATTEMPTS = [AppendAttempt(4, 1), AppendAttempt(2, 1), AppendAttempt(3, 0)]


def test_policies():
    assert AdversarialByzantineWins().choose(0, ATTEMPTS, {3, 4}) == 3
    assert AdversarialByzantineWins().choose(0, ATTEMPTS, set()) == 2
    assert LowestPid().choose(0, ATTEMPTS, {3}) == 2
    assert ScriptedWinners({5: 4}).choose(5, ATTEMPTS, set()) == 4
    assert ScriptedWinners({}).choose(5, ATTEMPTS, set()) == 2
    with pytest.raises(ArbitrationError):
        ScriptedWinners({5: 9}).choose(5, ATTEMPTS, set())


def test_seeded_uniform_repeatable():
    class Cfg:
        class config:
            seed = 7

    a, b = SeededUniform().start(Cfg), SeededUniform().start(Cfg)
    assert [a.choose(i, ATTEMPTS, set()) for i in range(20)] == [b.choose(i, ATTEMPTS, set()) for i in range(20)]


def test_odometer_visits_every_resolution():
    # two contended phases with 2 and 3 candidates
    seen = []
    choices = []
    while choices is not None:
        arb = ChoiceSequence(choices)
        picks = (arb.choose(0, ATTEMPTS[:2], set()), arb.choose(1, ATTEMPTS, set()))
        seen.append(picks)
        choices = next_choices(choices, arb.arities)
    assert len(seen) == len(set(seen)) == 6


def test_policy_dicts():
    for pol in (AdversarialByzantineWins(), LowestPid(), SeededUniform(3), ScriptedWinners({1: 2})):
        assert policy_from_dict(pol.to_dict()) == pol
    with pytest.raises(InvalidParameter):
        policy_from_dict({"policy": "nope"})
