# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled interleaving explorer; mirrors ``_kernels_py.explore`` step for step."""

DEF MAXP = 8
DEF MAXN = 16
DEF MAXDEPTH = 64
DEF NCOUNT = 7

IMPLEMENTATION = "cython"

cdef enum:
    NULLV = -1
    SUCCESS = 1
    FAILED = 2
    LIMIT = 3

cdef struct Undo:
    int tag
    int a
    int b
    int c
    int d

cdef struct St:
    int k
    int n
    int parts
    int reader_len
    int lockstep
    int crashed_any
    int null_proposal
    int values[MAXP]
    int plan[MAXP]
    int slots[MAXN + 2]
    int committed[MAXN + 2]
    int counter
    int pc[MAXP]
    int kk[MAXP]
    int mm[MAXP]
    int res[MAXP]
    int shared[MAXP]
    int rout[MAXN]
    int f_double
    int f_over
    int f_counter
    long long counts[NCOUNT]
    long long leaves
    int path[MAXDEPTH]
    int depth
    int have_witness
    int witness[MAXDEPTH]
    int witness_len


cdef inline Undo step(St* s, int i) noexcept nogil:
    cdef Undo u
    cdef int st, ki
    u.tag = 0
    u.a = 0
    u.b = 0
    u.c = 0
    u.d = 0
    if i == s.k:
        st = s.pc[i]
        u.tag = 1
        u.a = st
        u.b = s.rout[st]
        s.rout[st] = s.slots[st + 1]
        s.pc[i] += 1
        return u
    st = s.pc[i]
    s.pc[i] += 1
    if s.res[i] != 0:
        u.tag = 2
        return u
    s.shared[i] += 1
    if st == 0:
        u.tag = 3
        u.a = s.kk[i]
        s.kk[i] = s.counter
    elif st == 1:
        u.tag = 4
        u.a = s.mm[i]
        u.b = s.res[i]
        ki = s.kk[i]
        if ki <= s.n:
            s.mm[i] = s.slots[ki]
        else:
            s.mm[i] = NULLV
            s.res[i] = LIMIT
    elif st == 2:
        u.tag = 5
        u.a = s.counter
        u.b = 0
        if s.counter == s.kk[i]:
            s.counter = s.kk[i] + 1
            if s.counter > s.n + 1:
                s.f_counter += 1
                u.b = 1
    else:
        ki = s.kk[i]
        if s.slots[ki] == s.mm[i]:
            u.tag = 6
            u.a = s.slots[ki]
            u.b = s.committed[ki]
            u.c = s.f_double
            u.d = s.f_over
            if s.committed[ki]:
                s.f_double += 1
                if s.slots[ki] != s.values[i]:
                    s.f_over += 1
            s.slots[ki] = s.values[i]
            s.committed[ki] = 1
            s.res[i] = SUCCESS
        else:
            u.tag = 7
            s.res[i] = FAILED
    return u


cdef inline void undo(St* s, int i, Undo u) noexcept nogil:
    cdef int ki
    s.pc[i] -= 1
    if u.tag == 1:
        s.rout[u.a] = u.b
        return
    if u.tag == 2:
        return
    s.shared[i] -= 1
    if u.tag == 3:
        s.kk[i] = u.a
    elif u.tag == 4:
        s.mm[i] = u.a
        s.res[i] = u.b
    elif u.tag == 5:
        s.counter = u.a
        s.f_counter -= u.b
    elif u.tag == 6:
        ki = s.kk[i]
        s.slots[ki] = u.a
        s.committed[ki] = u.b
        s.f_double = u.c
        s.f_over = u.d
        s.res[i] = 0
    else:
        s.res[i] = 0


cdef void leaf(St* s) noexcept nogil:
    cdef int bad[NCOUNT]
    cdef int i, j, c, anybad = 0
    s.leaves += 1
    for c in range(NCOUNT):
        bad[c] = 0
    bad[0] = s.f_double > 0
    bad[1] = s.f_over > 0
    bad[5] = s.f_counter > 0
    for i in range(s.k):
        if s.res[i] == SUCCESS and s.slots[s.kk[i]] != s.values[i]:
            bad[2] = 1
        if s.plan[i] == 4:
            if not ((s.res[i] == SUCCESS or s.res[i] == FAILED) and s.shared[i] == 4) and \
                    not (s.res[i] == LIMIT and s.shared[i] == 2):
                bad[4] = 1
    for j in range(s.reader_len):
        if s.rout[j] != NULLV and s.rout[j] != s.slots[j + 1]:
            bad[3] = 1
    if not s.crashed_any and not s.null_proposal:
        for j in range(1, s.counter):
            if s.slots[j] == NULLV:
                bad[6] = 1
    for c in range(NCOUNT):
        if bad[c]:
            anybad = 1
            s.counts[c] += 1
    if anybad and not s.have_witness:
        s.have_witness = 1
        s.witness_len = s.depth
        for j in range(s.depth):
            s.witness[j] = s.path[j]


cdef void dfs(St* s) noexcept nogil:
    cdef int i, low = 1 << 30, any_live = 0
    cdef Undo u
    for i in range(s.parts):
        if s.pc[i] < s.plan[i]:
            any_live = 1
            if s.pc[i] < low:
                low = s.pc[i]
    if not any_live:
        leaf(s)
        return
    for i in range(s.parts):
        if s.pc[i] >= s.plan[i]:
            continue
        if s.lockstep and s.pc[i] != low:
            continue
        u = step(s, i)
        s.path[s.depth] = i
        s.depth += 1
        dfs(s)
        s.depth -= 1
        undo(s, i, u)


def explore(values, int capacity, planned, int reader_len=0, bint lockstep=False):
    """Walk every schedule; returns (schedules, counters, first violating schedule)."""
    cdef St s
    cdef int i
    k = len(values)
    if k + 1 > MAXP or capacity > MAXN or reader_len > MAXN:
        raise ValueError("explorer instance too large")
    total = sum(planned) + reader_len
    if total > MAXDEPTH:
        raise ValueError("explorer schedule too long")
    s.k = k
    s.n = capacity
    s.reader_len = reader_len
    s.parts = k + (1 if reader_len > 0 else 0)
    s.lockstep = 1 if lockstep else 0
    s.crashed_any = 0
    s.null_proposal = 0
    for i in range(k):
        s.values[i] = values[i]
        s.plan[i] = planned[i]
        if planned[i] < 4:
            s.crashed_any = 1
        if values[i] == NULLV:
            s.null_proposal = 1
    if reader_len > 0:
        s.plan[k] = reader_len
    for i in range(MAXN + 2):
        s.slots[i] = NULLV
        s.committed[i] = 0
    for i in range(MAXN):
        s.rout[i] = NULLV
    for i in range(MAXP):
        s.pc[i] = 0
        s.kk[i] = 0
        s.mm[i] = NULLV
        s.res[i] = 0
        s.shared[i] = 0
    s.counter = 1
    s.f_double = 0
    s.f_over = 0
    s.f_counter = 0
    for i in range(NCOUNT):
        s.counts[i] = 0
    s.leaves = 0
    s.depth = 0
    s.have_witness = 0
    s.witness_len = 0
    with nogil:
        dfs(&s)
    witness = [s.witness[i] for i in range(s.witness_len)] if s.have_witness else None
    return s.leaves, [s.counts[i] for i in range(NCOUNT)], witness
