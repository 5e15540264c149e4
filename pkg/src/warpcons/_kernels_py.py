"""Pure-Python interleaving explorer; same algorithm as the compiled ``_kernels``.

Participants ``0..k-1`` are append programs, participant ``k`` (if any) is the
reader.  A schedule is the sequence of participant indices taking a step.
Program ``i`` is scheduled exactly ``planned[i]`` times (4 when it does not
crash); once it has returned, its remaining entries are no-ops.  NULL is -1.
"""

from __future__ import annotations

NULL = -1
SUCCESS, FAILED, LIMIT = 1, 2, 3

# violation counter layout, shared with the compiled kernel
DOUBLE_SUCCESS, OVERWRITE, LOST_SUCCESS, UNSTABLE_READ, STEP_COUNT, COUNTER, HOLE = range(7)
N_COUNTERS = 7

IMPLEMENTATION = "python"


def explore(values, capacity, planned, reader_len=0, lockstep=False):
    """Walk every schedule; returns (schedules, counters, first violating schedule)."""
    k = len(values)
    n = capacity
    parts = k + (1 if reader_len > 0 else 0)
    plan = list(planned) + ([reader_len] if reader_len > 0 else [])
    crashed_any = any(planned[i] < 4 for i in range(k))
    null_proposal = any(v == NULL for v in values)

    slots = [NULL] * (n + 2)
    committed = [0] * (n + 2)
    counter = [1]
    pc = [0] * parts
    kk = [0] * k
    mm = [NULL] * k
    res = [0] * k
    shared = [0] * k
    rout = [NULL] * max(reader_len, 1)
    flags = [0, 0, 0]  # double success, overwrite, counter range
    counts = [0] * N_COUNTERS
    path = []
    witness = [None]
    leaves = [0]

    def step(i):
        """Apply participant i's next step; returns an undo record."""
        if i == k:
            j = pc[i]
            old = rout[j]
            rout[j] = slots[j + 1]
            pc[i] += 1
            return ("r", j, old)
        s = pc[i]
        pc[i] += 1
        if res[i]:
            return ("noop",)
        shared[i] += 1
        if s == 0:
            old = kk[i]
            kk[i] = counter[0]
            return ("rc", old)
        if s == 1:
            old_m, old_r = mm[i], res[i]
            ki = kk[i]
            mm[i] = slots[ki] if ki <= n else NULL
            if ki > n:
                res[i] = LIMIT
            return ("rs", old_m, old_r)
        if s == 2:
            old = counter[0]
            if counter[0] == kk[i]:
                counter[0] = kk[i] + 1
                if counter[0] > n + 1:
                    flags[2] += 1
                    return ("cc", old, 1)
            return ("cc", old, 0)
        ki = kk[i]
        if slots[ki] == mm[i]:
            rec = ("cs", slots[ki], committed[ki], flags[0], flags[1])
            if committed[ki]:
                flags[0] += 1
                if slots[ki] != values[i]:
                    flags[1] += 1
            slots[ki] = values[i]
            committed[ki] = 1
            res[i] = SUCCESS
            return rec
        res[i] = FAILED
        return ("csf",)

    def undo(i, rec):
        pc[i] -= 1
        tag = rec[0]
        if tag == "r":
            rout[rec[1]] = rec[2]
            return
        if tag == "noop":
            return
        shared[i] -= 1
        if tag == "rc":
            kk[i] = rec[1]
        elif tag == "rs":
            mm[i], res[i] = rec[1], rec[2]
        elif tag == "cc":
            counter[0] = rec[1]
            flags[2] -= rec[2]
        elif tag == "cs":
            ki = kk[i]
            slots[ki], committed[ki] = rec[1], rec[2]
            flags[0], flags[1] = rec[3], rec[4]
            res[i] = 0
        else:
            res[i] = 0

    def leaf():
        leaves[0] += 1
        bad = [0] * N_COUNTERS
        bad[DOUBLE_SUCCESS] = flags[0] > 0
        bad[OVERWRITE] = flags[1] > 0
        bad[COUNTER] = flags[2] > 0
        for i in range(k):
            if res[i] == SUCCESS and slots[kk[i]] != values[i]:
                bad[LOST_SUCCESS] = 1
            if planned[i] == 4:
                ok = (res[i] in (SUCCESS, FAILED) and shared[i] == 4) or (res[i] == LIMIT and shared[i] == 2)
                if not ok:
                    bad[STEP_COUNT] = 1
        for j in range(reader_len):
            if rout[j] != NULL and rout[j] != slots[j + 1]:
                bad[UNSTABLE_READ] = 1
        if not crashed_any and not null_proposal:
            for j in range(1, counter[0]):
                if slots[j] == NULL:
                    bad[HOLE] = 1
        if any(bad):
            for c in range(N_COUNTERS):
                counts[c] += bad[c]
            if witness[0] is None:
                witness[0] = list(path)

    def enabled():
        live = [i for i in range(parts) if pc[i] < plan[i]]
        if lockstep and live:
            low = min(pc[i] for i in live)
            return [i for i in live if pc[i] == low]
        return live

    def dfs():
        choices = enabled()
        if not choices:
            leaf()
            return
        for i in choices:
            rec = step(i)
            path.append(i)
            dfs()
            path.pop()
            undo(i, rec)

    dfs()
    return leaves[0], counts, witness[0]
