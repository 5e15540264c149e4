import itertools
import random
from collections import Counter

import pytest
from hypothesis import given, strategies as st

from warpcons.errors import AllNull
from warpcons.protocol import Decide, ProcessState, ReadChunkRequest, mode, protocol_step
from warpcons.sticky import AppendAttempt


@pytest.mark.parametrize(
    "values,want",
    [([2, 2, 3], 2), ([1, 1, 2, 2], 1), ([None, 5, None], 5), ([0, 1, 2, 0, 1, 2], 0), ([5, 5, 7, None], 5)],
)
def test_mode_examples(values, want):
    assert mode(values) == want


def test_mode_all_null():
    with pytest.raises(AllNull):
        mode([None, None])


def _brute_mode(values):
    counts = Counter(v for v in values if v is not None)
    best = None
    for v in sorted(counts):
        if best is None or counts[v] > counts[best]:
            best = v
    return best


def test_mode_against_recount_up_to_length_8():
    domain = (0, 1, 2, None)
    for length in range(1, 9):
        for combo in itertools.combinations_with_replacement(range(4), length):
            values = [domain[i] for i in combo]
            if all(v is None for v in values):
                continue
            m = mode(values)
            counts = Counter(v for v in values if v is not None)
            assert counts[m] == max(counts.values())
            assert m == _brute_mode(values)


@given(st.lists(st.one_of(st.none(), st.integers(0, 4)), min_size=1, max_size=10), st.randoms(use_true_random=False))
def test_mode_permutation_invariant(values, rnd):
    if all(v is None for v in values):
        return
    shuffled = list(values)
    rnd.shuffle(shuffled)
    assert mode(shuffled) == mode(values)


def test_protocol_sequence():
    ps = ProcessState(pid=3, proposal=5, read_len=4, chunk=3)
    assert protocol_step(ps) == AppendAttempt(3, 5)
    ps.access_count = 1
    assert protocol_step(ps) == ReadChunkRequest(3, 0, 3)
    ps.read_values = [5, 5, 7]
    assert protocol_step(ps) == ReadChunkRequest(3, 3, 1)
    ps.read_values.append(None)
    assert protocol_step(ps) == Decide(3, 5)
    # deterministic in the state alone
    assert protocol_step(ps) == protocol_step(ps)
