"""Pure-Python event loop for one simulation replication.

This is the fallback engine and the behavioral reference for the compiled
engine: both implement the identical algorithm, RNG (xoshiro256++ seeded
via splitmix64) and floating-point expression order, so a given seed
produces bit-identical results on either engine.

Processor sharing is simulated exactly through a per-server fluid clock
phi that advances at rate C/n while n jobs are resident: a job of size S
arriving at clock value phi departs when phi reaches phi + S, so each
server keeps a min-heap of departure deadlines in clock units and its
next wall-clock departure is t + (min_deadline - phi) * n / C.  A single
indexed binary heap over the per-server departure times plus one pending
arrival drive the event loop.

Replication statistics: post-warmup sojourn sums, per-class occupancy
tail sums sampled at arrival epochs (PASTA), join counts, per-class busy
time (work conservation), and the occupancy-time integral over the
measurement window (Little's law).
"""

from math import inf, log, sqrt

import numpy as np

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB
_STREAM_SALT = 0xD1B54A32D192ED03
_U53 = 1.0 / 9007199254740992.0  # 2**-53

SCHEME_STATIC = 0
SCHEME_SQD = 1
SCHEME_HYBRID = 2

DIST_EXPONENTIAL = 0
DIST_DETERMINISTIC = 1
DIST_POWER_LAW = 2
DIST_ZERO = 3  # test hook: degenerate zero-size jobs


def mix64(x):
    """splitmix64 finalizer; used for seed derivation."""
    x = (x + _GOLDEN) & _MASK
    x = ((x ^ (x >> 30)) * _MIX1) & _MASK
    x = ((x ^ (x >> 27)) * _MIX2) & _MASK
    return x ^ (x >> 31)


def _stream_state(seed, idx):
    base = mix64((seed + ((idx + 1) * _STREAM_SALT & _MASK)) & _MASK)
    s = [mix64((base + ((i + 1) * _GOLDEN & _MASK)) & _MASK) for i in range(4)]
    if s[0] == 0 and s[1] == 0 and s[2] == 0 and s[3] == 0:
        s[0] = 1
    return s


def _next_u64(s):
    s0, s1, s2, s3 = s
    x = (s0 + s3) & _MASK
    result = ((((x << 23) & _MASK) | (x >> 41)) + s0) & _MASK
    t = (s1 << 17) & _MASK
    s2 ^= s0
    s3 ^= s1
    s1 ^= s2
    s0 ^= s3
    s2 ^= t
    s3 = ((s3 << 45) & _MASK) | (s3 >> 19)
    s[0] = s0
    s[1] = s1
    s[2] = s2
    s[3] = s3
    return result


def _uniform01(s):
    return (_next_u64(s) >> 11) * _U53


def _randbelow(s, n):
    if n <= 1:
        return 0
    mask = (1 << (n - 1).bit_length()) - 1
    while True:
        v = _next_u64(s) & mask
        if v < n:
            return v


def _job_push(dl, al, sl, cl, ddl, at, sz, cf):
    dl.append(ddl)
    al.append(at)
    sl.append(sz)
    cl.append(cf)
    i = len(dl) - 1
    while i > 0:
        p = (i - 1) >> 1
        if dl[i] < dl[p]:
            dl[i], dl[p] = dl[p], dl[i]
            al[i], al[p] = al[p], al[i]
            sl[i], sl[p] = sl[p], sl[i]
            cl[i], cl[p] = cl[p], cl[i]
            i = p
        else:
            break


def _job_pop(dl, al, sl, cl):
    ddl, at, sz, cf = dl[0], al[0], sl[0], cl[0]
    ld, la, ls, lc = dl.pop(), al.pop(), sl.pop(), cl.pop()
    n = len(dl)
    if n > 0:
        dl[0], al[0], sl[0], cl[0] = ld, la, ls, lc
        i = 0
        while True:
            c = 2 * i + 1
            if c >= n:
                break
            if c + 1 < n and dl[c + 1] < dl[c]:
                c += 1
            if dl[c] < dl[i]:
                dl[i], dl[c] = dl[c], dl[i]
                al[i], al[c] = al[c], al[i]
                sl[i], sl[c] = sl[c], sl[i]
                cl[i], cl[c] = cl[c], cl[i]
                i = c
            else:
                break
    return ddl, at, sz, cf


def _dep_update(heap, pos, key, s):
    i = pos[s]
    while i > 0:
        p = (i - 1) >> 1
        if key[heap[i]] < key[heap[p]]:
            heap[i], heap[p] = heap[p], heap[i]
            pos[heap[i]] = i
            pos[heap[p]] = p
            i = p
        else:
            break
    n = len(heap)
    while True:
        c = 2 * i + 1
        if c >= n:
            break
        if c + 1 < n and key[heap[c + 1]] < key[heap[c]]:
            c += 1
        if key[heap[c]] < key[heap[i]]:
            heap[i], heap[c] = heap[c], heap[i]
            pos[heap[i]] = i
            pos[heap[c]] = c
            i = c
        else:
            break


def simulate_replication(
    n_servers,
    class_offset,
    capacities,
    scheme,
    d,
    class_cdf,
    total_arrival_rate,
    dist_code,
    mean_size,
    horizon,
    warmup,
    tail_levels,
    seed,
):
    """Run one replication; see the module docstring for the algorithm.

    Returns a dict of raw accumulators (aggregation is the harness's
    job).  All inputs are plain numbers / index sequences; `class_offset`
    has length M+1 and server s belongs to class j iff
    class_offset[j] <= s < class_offset[j+1].
    """
    n = int(n_servers)
    m = len(capacities)
    K = int(tail_levels)
    off = [int(x) for x in class_offset]
    caps = [float(c) for c in capacities]
    cdf = [float(x) for x in class_cdf]
    rate_inv = 1.0 / float(total_arrival_rate)
    mean_size = float(mean_size)
    horizon = int(horizon)
    warmup = int(warmup)

    sa = _stream_state(seed, 0)  # arrivals
    ss = _stream_state(seed, 1)  # job sizes
    sr = _stream_state(seed, 2)  # routing

    class_of = [0] * n
    cap_srv = [0.0] * n
    for j in range(m):
        for s_i in range(off[j], off[j + 1]):
            class_of[s_i] = j
            cap_srv[s_i] = caps[j]

    occ = [0] * n
    phi = [0.0] * n
    last_t = [0.0] * n
    jd = [[] for _ in range(n)]
    ja = [[] for _ in range(n)]
    js = [[] for _ in range(n)]
    jc = [[] for _ in range(n)]

    dep_time = [inf] * n
    heap = list(range(n))
    pos = list(range(n))

    perm = list(range(n))
    swaps = [0] * max(int(d), 1)

    cnt_ge = [[0] * (K + 1) for _ in range(m)]
    for j in range(m):
        cnt_ge[j][0] = off[j + 1] - off[j]
    cur_max = [0] * m
    tail_sums = [[0] * (K + 1) for _ in range(m)]
    tail_samples = 0
    join_counts = [0] * m
    busy = [0.0] * m

    t = 0.0
    arrivals = 0
    departures = 0
    counted_done = 0
    sum_sojourn = 0.0
    work_arrived = 0.0
    work_departed = 0.0
    area = 0.0
    meas_start = inf
    events = 0
    degenerate = 0
    clamps = 0

    if horizon > 0:
        next_arrival = -log(1.0 - _uniform01(sa)) * rate_inv
    else:
        next_arrival = inf

    while True:
        top = heap[0]
        t_dep = dep_time[top]
        if next_arrival <= t_dep:
            if next_arrival == inf:
                break
            t = next_arrival
            arrivals += 1
            counted = arrivals > warmup
            if counted:
                if meas_start == inf:
                    meas_start = t
                tail_samples += 1
                for j in range(m):
                    row = cnt_ge[j]
                    acc = tail_sums[j]
                    for k in range(1, cur_max[j] + 1):
                        acc[k] += row[k]

            if dist_code == DIST_EXPONENTIAL:
                size = -log(1.0 - _uniform01(ss)) * mean_size
            elif dist_code == DIST_DETERMINISTIC:
                size = mean_size
            elif dist_code == DIST_POWER_LAW:
                size = mean_size * (0.5 / sqrt(1.0 - _uniform01(ss)))
            else:
                size = 0.0

            if scheme == SCHEME_STATIC:
                u = _uniform01(sr)
                j = 0
                while j < m - 1 and u >= cdf[j]:
                    j += 1
                srv = off[j] + _randbelow(sr, off[j + 1] - off[j])
            elif scheme == SCHEME_SQD:
                for i in range(d):
                    r = i + _randbelow(sr, n - i)
                    swaps[i] = r
                    perm[i], perm[r] = perm[r], perm[i]
                srv = perm[0]
                bestocc = occ[srv]
                ties = 1
                for i in range(1, d):
                    c = perm[i]
                    oc = occ[c]
                    if oc < bestocc:
                        srv = c
                        bestocc = oc
                        ties = 1
                    elif oc == bestocc:
                        ties += 1
                if ties > 1:
                    pick = _randbelow(sr, ties)
                    cnt = 0
                    for i in range(d):
                        c = perm[i]
                        if occ[c] == bestocc:
                            if cnt == pick:
                                srv = c
                                break
                            cnt += 1
                for i in range(d - 1, -1, -1):
                    r = swaps[i]
                    perm[i], perm[r] = perm[r], perm[i]
            else:  # SCHEME_HYBRID
                u = _uniform01(sr)
                j = 0
                while j < m - 1 and u >= cdf[j]:
                    j += 1
                nj = off[j + 1] - off[j]
                i1 = _randbelow(sr, nj)
                i2 = _randbelow(sr, nj - 1)
                if i2 >= i1:
                    i2 += 1
                s1 = off[j] + i1
                s2 = off[j] + i2
                if occ[s1] < occ[s2]:
                    srv = s1
                elif occ[s2] < occ[s1]:
                    srv = s2
                else:
                    srv = s1 if _randbelow(sr, 2) == 0 else s2

            j = class_of[srv]
            if counted:
                join_counts[j] += 1

            if size == 0.0:
                degenerate += 1
                departures += 1
                if counted:
                    counted_done += 1  # sojourn 0
            else:
                work_arrived += size
                dt = t - last_t[srv]
                if dt > 0.0 and occ[srv] > 0:
                    phi[srv] += dt * cap_srv[srv] / occ[srv]
                    busy[j] += dt
                    if t > meas_start:
                        lo = last_t[srv] if last_t[srv] > meas_start else meas_start
                        area += occ[srv] * (t - lo)
                last_t[srv] = t
                _job_push(
                    jd[srv], ja[srv], js[srv], jc[srv],
                    phi[srv] + size, t, size, 1 if counted else 0,
                )
                occ[srv] += 1
                nocc = occ[srv]
                if nocc <= K:
                    cnt_ge[j][nocc] += 1
                    if nocc > cur_max[j]:
                        cur_max[j] = nocc
                rem = jd[srv][0] - phi[srv]
                if rem < 0.0:
                    rem = 0.0
                    clamps += 1
                dep_time[srv] = t + rem * nocc / cap_srv[srv]
                _dep_update(heap, pos, dep_time, srv)

            events += 1
            if arrivals < horizon:
                next_arrival = t + (-log(1.0 - _uniform01(sa)) * rate_inv)
            else:
                next_arrival = inf
        else:
            if t_dep == inf:
                break
            srv = top
            t = t_dep
            j = class_of[srv]
            dt = t - last_t[srv]
            if dt > 0.0 and occ[srv] > 0:
                phi[srv] += dt * cap_srv[srv] / occ[srv]
                busy[j] += dt
                if t > meas_start:
                    lo = last_t[srv] if last_t[srv] > meas_start else meas_start
                    area += occ[srv] * (t - lo)
            last_t[srv] = t
            ddl, at, sz, cf = _job_pop(jd[srv], ja[srv], js[srv], jc[srv])
            occ[srv] -= 1
            nocc = occ[srv] + 1
            if nocc <= K:
                cnt_ge[j][nocc] -= 1
                if nocc == cur_max[j]:
                    while cur_max[j] > 0 and cnt_ge[j][cur_max[j]] == 0:
                        cur_max[j] -= 1
            work_departed += sz
            departures += 1
            if cf:
                counted_done += 1
                sum_sojourn += t - at
            if occ[srv] > 0:
                rem = jd[srv][0] - phi[srv]
                if rem < 0.0:
                    rem = 0.0
                    clamps += 1
                dep_time[srv] = t + rem * occ[srv] / cap_srv[srv]
            else:
                phi[srv] = 0.0
                dep_time[srv] = inf
            _dep_update(heap, pos, dep_time, srv)
            events += 1

    return {
        "arrivals": arrivals,
        "departures": departures,
        "counted": counted_done,
        "sum_sojourn": sum_sojourn,
        "join_counts": np.array(join_counts, dtype=np.int64),
        "tail_sums": np.array(tail_sums, dtype=np.int64),
        "tail_samples": tail_samples,
        "busy_time": np.array(busy, dtype=np.float64),
        "work_arrived": work_arrived,
        "work_departed": work_departed,
        "occupancy_area": area,
        "meas_start": meas_start,
        "end_time": t,
        "events": events,
        "degenerate_jobs": degenerate,
        "remainder_clamps": clamps,
    }
