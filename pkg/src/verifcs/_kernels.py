"""Compiled inner loops for graph construction, measurement and decoding.

Everything here works on CSR arrays (``ptr``/``idx`` pairs) and plain numpy
buffers so it can be jitted. The readable step-by-step decoder lives in
:mod:`verifcs.decoder`; the test suite checks the two agree trial for trial.
"""

import numpy as np
from numba import njit

# outcome codes shared with the Python layer
SUCCESS = 0
STALLED = 1
MAX_ITERATIONS = 2
EXHAUSTED = 3

UNIFORMS_PER_EDGE = 4


@njit(cache=True)
def place_edges(n_vars, n_checks, var_degree, uniforms):
    """Greedy 4-cycle-free placement, lowest check degree first.

    Checks are kept sorted by degree in ``order`` with ``start[d]`` the first
    slot of degree ``d``. A tie among allowed lowest-degree checks is broken
    uniformly: up to three rejection draws inside the lowest bucket, then an
    exact scan. ``uniforms`` holds ``UNIFORMS_PER_EDGE`` draws per edge so the
    consumption is fixed. Returns ``(var_checks, ok)``.
    """
    n_edges = n_vars * var_degree
    var_checks = np.full((n_vars, var_degree), -1, np.int64)
    check_deg = np.zeros(n_checks, np.int64)
    order = np.arange(n_checks)
    pos = np.arange(n_checks)
    # start[d] for d in 0..n_vars+1; bucket d spans order[start[d]:start[d+1]]
    start = np.full(n_vars + 2, n_checks, np.int64)
    start[0] = 0
    lowest = 0
    # per-check singly linked list of incident variables
    head = np.full(n_checks, -1, np.int64)
    nxt = np.full(n_edges, -1, np.int64)
    edge_var = np.empty(n_edges, np.int64)
    stamp = np.full(n_checks, -1, np.int64)
    e = 0
    for v in range(n_vars):
        for j in range(var_degree):
            u = uniforms[UNIFORMS_PER_EDGE * e:UNIFORMS_PER_EDGE * (e + 1)]
            while start[lowest] == start[lowest + 1]:
                lowest += 1
            chosen = -1
            lo = start[lowest]
            size = start[lowest + 1] - lo
            for t in range(UNIFORMS_PER_EDGE - 1):
                c = order[lo + min(int(u[t] * size), size - 1)]
                if stamp[c] != v:
                    chosen = c
                    break
            if chosen < 0:
                d = lowest
                while d <= n_vars and chosen < 0:
                    b0 = start[d]
                    b1 = start[d + 1]
                    allowed = 0
                    for i in range(b0, b1):
                        if stamp[order[i]] != v:
                            allowed += 1
                    if allowed > 0:
                        pick = min(int(u[UNIFORMS_PER_EDGE - 1] * allowed), allowed - 1)
                        for i in range(b0, b1):
                            if stamp[order[i]] != v:
                                if pick == 0:
                                    chosen = order[i]
                                    break
                                pick -= 1
                    d += 1
            if chosen < 0:
                return var_checks, False
            var_checks[v, j] = chosen
            # move chosen to the end of its bucket, then shrink the bucket
            d = check_deg[chosen]
            last = start[d + 1] - 1
            other = order[last]
            pc = pos[chosen]
            order[pc] = other
            pos[other] = pc
            order[last] = chosen
            pos[chosen] = last
            start[d + 1] = last
            check_deg[chosen] = d + 1
            edge_var[e] = v
            nxt[e] = head[chosen]
            head[chosen] = e
            e += 1
            # forbid the chosen check and every check already sharing a
            # variable with it: a second shared variable would close a 4-cycle
            stamp[chosen] = v
            p = head[chosen]
            while p >= 0:
                w = edge_var[p]
                if w != v:
                    for jj in range(var_degree):
                        stamp[var_checks[w, jj]] = v
                p = nxt[p]
    return var_checks, True


@njit(cache=True)
def csr_from_var_checks(var_checks, n_checks):
    """Sorted CSR in both directions from a ``(n_vars, degree)`` table."""
    n_vars, deg = var_checks.shape
    var_ptr = np.arange(0, n_vars * deg + 1, deg).astype(np.int64)
    var_idx = np.empty(n_vars * deg, np.int64)
    counts = np.zeros(n_checks + 1, np.int64)
    for v in range(n_vars):
        row = np.sort(var_checks[v])
        for j in range(deg):
            var_idx[v * deg + j] = row[j]
            counts[row[j] + 1] += 1
    chk_ptr = np.cumsum(counts)
    fill = chk_ptr[:-1].copy()
    chk_idx = np.empty(n_vars * deg, np.int64)
    for v in range(n_vars):
        for j in range(deg):
            c = var_idx[v * deg + j]
            chk_idx[fill[c]] = v
            fill[c] += 1
    return var_ptr, var_idx, chk_ptr, chk_idx


@njit(cache=True)
def measure_csr(chk_ptr, chk_idx, x):
    m = chk_ptr.shape[0] - 1
    out = np.zeros(m)
    for c in range(m):
        acc = 0.0
        for p in range(chk_ptr[c], chk_ptr[c + 1]):
            acc += x[chk_idx[p]]
        out[c] = acc
    return out


@njit(cache=True)
def _propose(n, v, newly_var, newly_val, count, pending, pending_val, k, eps_eq, conflicts):
    # first proposal in an iteration wins; disagreeing ones are only counted
    if pending[n] == k:
        if abs(pending_val[n] - v) > eps_eq:
            conflicts[0] += 1
        return count
    pending[n] = k
    pending_val[n] = v
    newly_var[count] = n
    newly_val[count] = v
    return count + 1


@njit(cache=True)
def _shared_unidentified(chk_ptr, chk_idx, ident, m1, m2):
    a = chk_ptr[m1]
    b = chk_ptr[m2]
    ea = chk_ptr[m1 + 1]
    eb = chk_ptr[m2 + 1]
    shared = 0
    while a < ea and b < eb:
        x = chk_idx[a]
        y = chk_idx[b]
        if x == y:
            if not ident[x]:
                shared += 1
            a += 1
            b += 1
        elif x < y:
            a += 1
        else:
            b += 1
    return shared


@njit(cache=True)
def verify_iteration(var_ptr, var_idx, chk_ptr, chk_idx, residual, rdeg, ident,
                     k, eps_zero, eps_eq, pending, pending_val, newly_var, newly_val, conflicts):
    """Collect verifications of all three rules against the current residual.

    Does not peel. Returns the number of proposals written to ``newly_*``.
    """
    n_vars = var_ptr.shape[0] - 1
    n_checks = chk_ptr.shape[0] - 1
    count = 0
    for c in range(n_checks):
        if rdeg[c] >= 1 and abs(residual[c]) <= eps_zero:
            for p in range(chk_ptr[c], chk_ptr[c + 1]):
                n = chk_idx[p]
                if not ident[n]:
                    count = _propose(n, 0.0, newly_var, newly_val, count,
                                     pending, pending_val, k, eps_eq, conflicts)
    for c in range(n_checks):
        if rdeg[c] == 1:
            for p in range(chk_ptr[c], chk_ptr[c + 1]):
                n = chk_idx[p]
                if not ident[n]:
                    count = _propose(n, residual[c], newly_var, newly_val, count,
                                     pending, pending_val, k, eps_eq, conflicts)
                    break
    for n in range(n_vars):
        if ident[n]:
            continue
        lo = var_ptr[n]
        hi = var_ptr[n + 1]
        done = False
        for i in range(lo, hi):
            if done:
                break
            m1 = var_idx[i]
            r1 = residual[m1]
            if abs(r1) <= eps_zero:
                continue
            for j in range(i + 1, hi):
                m2 = var_idx[j]
                if abs(r1 - residual[m2]) > eps_eq:
                    continue
                if _shared_unidentified(chk_ptr, chk_idx, ident, m1, m2) != 1:
                    continue
                count = _propose(n, r1, newly_var, newly_val, count,
                                 pending, pending_val, k, eps_eq, conflicts)
                for mm in (m1, m2):
                    for p in range(chk_ptr[mm], chk_ptr[mm + 1]):
                        u = chk_idx[p]
                        if u != n and not ident[u]:
                            count = _propose(u, 0.0, newly_var, newly_val, count,
                                             pending, pending_val, k, eps_eq, conflicts)
                done = True
                break
    return count


@njit(cache=True)
def peel_one(var_ptr, var_idx, residual, rdeg, ident, values, n, v):
    ident[n] = True
    values[n] = v
    for p in range(var_ptr[n], var_ptr[n + 1]):
        c = var_idx[p]
        rdeg[c] -= 1
        if v != 0.0:
            residual[c] -= v
    return 0


@njit(cache=True)
def select_location(chk_ptr, chk_idx, rdeg, ident, u1, u2):
    """Min-residual-degree check (uniform tie-break), then a uniform
    unidentified neighbour. Falls back to a uniform unidentified variable
    when no check still has an unidentified neighbour."""
    n_checks = chk_ptr.shape[0] - 1
    best = -1
    ties = 0
    for c in range(n_checks):
        d = rdeg[c]
        if d < 1:
            continue
        if best < 0 or d < best:
            best = d
            ties = 1
        elif d == best:
            ties += 1
    if best < 0:
        n_vars = ident.shape[0]
        left = 0
        for n in range(n_vars):
            if not ident[n]:
                left += 1
        if left == 0:
            return -1
        pick = min(int(u1 * left), left - 1)
        for n in range(n_vars):
            if not ident[n]:
                if pick == 0:
                    return n
                pick -= 1
        return -1
    pick = min(int(u1 * ties), ties - 1)
    chosen = -1
    for c in range(n_checks):
        if rdeg[c] == best:
            if pick == 0:
                chosen = c
                break
            pick -= 1
    pick = min(int(u2 * best), best - 1)
    for p in range(chk_ptr[chosen], chk_ptr[chosen + 1]):
        n = chk_idx[p]
        if not ident[n]:
            if pick == 0:
                return n
            pick -= 1
    return -1


@njit(cache=True)
def decode_incremental(var_ptr, var_idx, chk_ptr, chk_idx, s, truth,
                       kappa0, iota_max, max_iterations, eps_zero, eps_eq,
                       uniforms):
    """Verification decoding with direct sampling from ``truth``.

    ``kappa0 < 0`` selects the on-stall trigger. ``uniforms`` holds two draws
    per sample. Returns ``(outcome, k, l, vu_first_stall, vu_left,
    residual_max, conflicts, values, ident, per_iteration, first_stall_k)``.
    """
    n_vars = var_ptr.shape[0] - 1
    residual = s.copy()
    rdeg = np.empty(chk_ptr.shape[0] - 1, np.int64)
    for c in range(rdeg.shape[0]):
        rdeg[c] = chk_ptr[c + 1] - chk_ptr[c]
    ident = np.zeros(n_vars, np.bool_)
    values = np.zeros(n_vars)
    pending = np.full(n_vars, -1, np.int64)
    pending_val = np.zeros(n_vars)
    newly_var = np.empty(n_vars, np.int64)
    newly_val = np.empty(n_vars)
    conflicts = np.zeros(1, np.int64)
    per_iteration = np.zeros(max_iterations, np.int64)
    left = n_vars
    samples = 0
    vu_first_stall = -1
    first_stall_k = -1
    outcome = MAX_ITERATIONS
    k = 0
    while k < max_iterations:
        k += 1
        count = verify_iteration(var_ptr, var_idx, chk_ptr, chk_idx, residual,
                                 rdeg, ident, k, eps_zero, eps_eq, pending,
                                 pending_val, newly_var, newly_val, conflicts)
        for i in range(count):
            peel_one(var_ptr, var_idx, residual, rdeg, ident, values,
                     newly_var[i], newly_val[i])
        left -= count
        per_iteration[k - 1] = count
        if left == 0:
            outcome = SUCCESS
            break
        stalled = count == 0
        if stalled and vu_first_stall < 0:
            vu_first_stall = left
            first_stall_k = k
        if kappa0 < 0:
            trigger = stalled
        else:
            trigger = k > kappa0
        if trigger and samples < iota_max:
            n = select_location(chk_ptr, chk_idx, rdeg, ident,
                                uniforms[2 * samples], uniforms[2 * samples + 1])
            peel_one(var_ptr, var_idx, residual, rdeg, ident, values, n, truth[n])
            samples += 1
            left -= 1
            if left == 0:
                outcome = SUCCESS
                break
        elif stalled and (samples >= iota_max or iota_max == 0):
            outcome = EXHAUSTED
            break
    if vu_first_stall < 0:
        vu_first_stall = 0
    rmax = 0.0
    for c in range(residual.shape[0]):
        a = abs(residual[c])
        if a > rmax:
            rmax = a
    return (outcome, k, samples, vu_first_stall, left, rmax, conflicts[0],
            values, ident, per_iteration[:k], first_stall_k)
