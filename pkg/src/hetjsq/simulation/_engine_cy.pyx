# cython: language_level=3, boundscheck=False, wraparound=False, initializedcheck=False, cdivision=True
"""Compiled event loop for one simulation replication.

Statement-for-statement mirror of _engine_py (same algorithm, same
xoshiro256++ streams, same floating-point expression order); a given
seed yields bit-identical results on either engine.  Compiled with
-ffp-contract=off so no FMA contraction breaks that equality.
"""

from libc.math cimport INFINITY, log, sqrt
from libc.stdlib cimport free, malloc, realloc

import numpy as np

cdef unsigned long long GOLDEN = 0x9E3779B97F4A7C15
cdef unsigned long long MIX1 = 0xBF58476D1CE4E5B9
cdef unsigned long long MIX2 = 0x94D049BB133111EB
cdef unsigned long long STREAM_SALT = 0xD1B54A32D192ED03

SCHEME_STATIC = 0
SCHEME_SQD = 1
SCHEME_HYBRID = 2

DIST_EXPONENTIAL = 0
DIST_DETERMINISTIC = 1
DIST_POWER_LAW = 2
DIST_ZERO = 3


cdef struct Xo:
    unsigned long long s0, s1, s2, s3


cdef inline unsigned long long _mix64(unsigned long long x):
    x = x + GOLDEN
    x = (x ^ (x >> 30)) * MIX1
    x = (x ^ (x >> 27)) * MIX2
    return x ^ (x >> 31)


cdef inline void _stream_state(Xo* st, unsigned long long seed, unsigned long long idx):
    cdef unsigned long long base = _mix64(seed + (idx + 1) * STREAM_SALT)
    st.s0 = _mix64(base + 1 * GOLDEN)
    st.s1 = _mix64(base + 2 * GOLDEN)
    st.s2 = _mix64(base + 3 * GOLDEN)
    st.s3 = _mix64(base + 4 * GOLDEN)
    if st.s0 == 0 and st.s1 == 0 and st.s2 == 0 and st.s3 == 0:
        st.s0 = 1


cdef inline unsigned long long _next_u64(Xo* st):
    cdef unsigned long long s0 = st.s0
    cdef unsigned long long s1 = st.s1
    cdef unsigned long long s2 = st.s2
    cdef unsigned long long s3 = st.s3
    cdef unsigned long long x = s0 + s3
    cdef unsigned long long result = ((x << 23) | (x >> 41)) + s0
    cdef unsigned long long t = s1 << 17
    s2 ^= s0
    s3 ^= s1
    s1 ^= s2
    s0 ^= s3
    s2 ^= t
    s3 = (s3 << 45) | (s3 >> 19)
    st.s0 = s0
    st.s1 = s1
    st.s2 = s2
    st.s3 = s3
    return result


cdef inline double _uniform01(Xo* st):
    return <double>(_next_u64(st) >> 11) * (1.0 / 9007199254740992.0)


cdef inline long _randbelow(Xo* st, long n):
    cdef unsigned long long mask, v
    if n <= 1:
        return 0
    mask = 1
    while mask < <unsigned long long>(n - 1):
        mask = (mask << 1) | 1
    while True:
        v = _next_u64(st) & mask
        if v < <unsigned long long>n:
            return <long>v


cdef inline void _job_sift_up(double* dl, double* al, double* sl, signed char* cl, long i):
    cdef long p
    cdef double td
    cdef signed char tc
    while i > 0:
        p = (i - 1) >> 1
        if dl[i] < dl[p]:
            td = dl[i]; dl[i] = dl[p]; dl[p] = td
            td = al[i]; al[i] = al[p]; al[p] = td
            td = sl[i]; sl[i] = sl[p]; sl[p] = td
            tc = cl[i]; cl[i] = cl[p]; cl[p] = tc
            i = p
        else:
            break


cdef inline void _job_sift_down(double* dl, double* al, double* sl, signed char* cl, long n):
    cdef long i = 0, c
    cdef double td
    cdef signed char tc
    while True:
        c = 2 * i + 1
        if c >= n:
            break
        if c + 1 < n and dl[c + 1] < dl[c]:
            c += 1
        if dl[c] < dl[i]:
            td = dl[i]; dl[i] = dl[c]; dl[c] = td
            td = al[i]; al[i] = al[c]; al[c] = td
            td = sl[i]; sl[i] = sl[c]; sl[c] = td
            tc = cl[i]; cl[i] = cl[c]; cl[c] = tc
            i = c
        else:
            break


cdef inline void _dep_update(long[::1] heap, long[::1] pos, double[::1] key, long s, long n):
    cdef long i = pos[s], p, c, tmp
    while i > 0:
        p = (i - 1) >> 1
        if key[heap[i]] < key[heap[p]]:
            tmp = heap[i]; heap[i] = heap[p]; heap[p] = tmp
            pos[heap[i]] = i
            pos[heap[p]] = p
            i = p
        else:
            break
    while True:
        c = 2 * i + 1
        if c >= n:
            break
        if c + 1 < n and key[heap[c + 1]] < key[heap[c]]:
            c += 1
        if key[heap[c]] < key[heap[i]]:
            tmp = heap[i]; heap[i] = heap[c]; heap[c] = tmp
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
    """Compiled twin of _engine_py.simulate_replication; same contract."""
    cdef long n = n_servers
    cdef long m = len(capacities)
    cdef long K = tail_levels
    cdef long dd = d
    cdef int sch = scheme
    cdef int dist = dist_code
    cdef double rate_inv = 1.0 / <double>total_arrival_rate
    cdef double msize = mean_size
    cdef long hor = horizon
    cdef long warm = warmup

    off_arr = np.ascontiguousarray(class_offset, dtype=np.int64)
    caps_arr = np.ascontiguousarray(capacities, dtype=np.float64)
    cdf_arr = np.ascontiguousarray(class_cdf, dtype=np.float64)
    cdef long[::1] off = off_arr
    cdef double[::1] caps = caps_arr
    cdef double[::1] cdf = cdf_arr

    cdef Xo sa, ss, sr
    _stream_state(&sa, <unsigned long long>seed, 0)
    _stream_state(&ss, <unsigned long long>seed, 1)
    _stream_state(&sr, <unsigned long long>seed, 2)

    class_of_arr = np.zeros(n, dtype=np.int64)
    cap_srv_arr = np.zeros(n, dtype=np.float64)
    cdef long[::1] class_of = class_of_arr
    cdef double[::1] cap_srv = cap_srv_arr
    cdef long j, s_i
    for j in range(m):
        for s_i in range(off[j], off[j + 1]):
            class_of[s_i] = j
            cap_srv[s_i] = caps[j]

    occ_arr = np.zeros(n, dtype=np.int64)
    phi_arr = np.zeros(n, dtype=np.float64)
    last_t_arr = np.zeros(n, dtype=np.float64)
    dep_time_arr = np.full(n, np.inf)
    heap_arr = np.arange(n, dtype=np.int64)
    pos_arr = np.arange(n, dtype=np.int64)
    perm_arr = np.arange(n, dtype=np.int64)
    swaps_arr = np.zeros(max(dd, 1), dtype=np.int64)
    cdef long[::1] occ = occ_arr
    cdef double[::1] phi = phi_arr
    cdef double[::1] last_t = last_t_arr
    cdef double[::1] dep_time = dep_time_arr
    cdef long[::1] heap = heap_arr
    cdef long[::1] pos = pos_arr
    cdef long[::1] perm = perm_arr
    cdef long[::1] swaps = swaps_arr

    cnt_ge_arr = np.zeros((m, K + 1), dtype=np.int64)
    tail_sums_arr = np.zeros((m, K + 1), dtype=np.int64)
    cur_max_arr = np.zeros(m, dtype=np.int64)
    join_counts_arr = np.zeros(m, dtype=np.int64)
    busy_arr = np.zeros(m, dtype=np.float64)
    cdef long[:, ::1] cnt_ge = cnt_ge_arr
    cdef long[:, ::1] tail_sums = tail_sums_arr
    cdef long[::1] cur_max = cur_max_arr
    cdef long[::1] join_counts = join_counts_arr
    cdef double[::1] busy = busy_arr
    for j in range(m):
        cnt_ge[j, 0] = off[j + 1] - off[j]

    # per-server job heaps: deadline / arrival time / size / counted flag
    cdef double** hd = <double**>malloc(n * sizeof(double*))
    cdef double** ha = <double**>malloc(n * sizeof(double*))
    cdef double** hs = <double**>malloc(n * sizeof(double*))
    cdef signed char** hc = <signed char**>malloc(n * sizeof(signed char*))
    cdef long* hlen = <long*>malloc(n * sizeof(long))
    cdef long* hcap = <long*>malloc(n * sizeof(long))
    if hd == NULL or ha == NULL or hs == NULL or hc == NULL or hlen == NULL or hcap == NULL:
        raise MemoryError()
    cdef long i
    for i in range(n):
        hd[i] = <double*>malloc(4 * sizeof(double))
        ha[i] = <double*>malloc(4 * sizeof(double))
        hs[i] = <double*>malloc(4 * sizeof(double))
        hc[i] = <signed char*>malloc(4 * sizeof(signed char))
        if hd[i] == NULL or ha[i] == NULL or hs[i] == NULL or hc[i] == NULL:
            raise MemoryError()
        hlen[i] = 0
        hcap[i] = 4

    cdef double t = 0.0
    cdef long arrivals = 0
    cdef long departures = 0
    cdef long counted_done = 0
    cdef double sum_sojourn = 0.0
    cdef double work_arrived = 0.0
    cdef double work_departed = 0.0
    cdef double area = 0.0
    cdef double meas_start = INFINITY
    cdef long tail_samples = 0
    cdef long events = 0
    cdef long degenerate = 0
    cdef long clamps = 0

    cdef double next_arrival
    if hor > 0:
        next_arrival = -log(1.0 - _uniform01(&sa)) * rate_inv
    else:
        next_arrival = INFINITY

    cdef long top, srv, k, nocc, n1, r, c, i1, i2, s1, s2, nj, ties, pick, cnt
    cdef long bestocc, oc, newcap, tmp
    cdef double t_dep, size, u, dt, lo, rem, ddl, at, sz
    cdef signed char cf
    cdef bint counted

    try:
        while True:
            top = heap[0]
            t_dep = dep_time[top]
            if next_arrival <= t_dep:
                if next_arrival == INFINITY:
                    break
                t = next_arrival
                arrivals += 1
                counted = arrivals > warm
                if counted:
                    if meas_start == INFINITY:
                        meas_start = t
                    tail_samples += 1
                    for j in range(m):
                        for k in range(1, cur_max[j] + 1):
                            tail_sums[j, k] += cnt_ge[j, k]

                if dist == 0:  # exponential
                    size = -log(1.0 - _uniform01(&ss)) * msize
                elif dist == 1:  # deterministic
                    size = msize
                elif dist == 2:  # power law
                    size = msize * (0.5 / sqrt(1.0 - _uniform01(&ss)))
                else:
                    size = 0.0

                if sch == 0:  # static
                    u = _uniform01(&sr)
                    j = 0
                    while j < m - 1 and u >= cdf[j]:
                        j += 1
                    srv = off[j] + _randbelow(&sr, off[j + 1] - off[j])
                elif sch == 1:  # SQ(d)
                    for i in range(dd):
                        r = i + _randbelow(&sr, n - i)
                        swaps[i] = r
                        tmp = perm[i]; perm[i] = perm[r]; perm[r] = tmp
                    srv = perm[0]
                    bestocc = occ[srv]
                    ties = 1
                    for i in range(1, dd):
                        c = perm[i]
                        oc = occ[c]
                        if oc < bestocc:
                            srv = c
                            bestocc = oc
                            ties = 1
                        elif oc == bestocc:
                            ties += 1
                    if ties > 1:
                        pick = _randbelow(&sr, ties)
                        cnt = 0
                        for i in range(dd):
                            c = perm[i]
                            if occ[c] == bestocc:
                                if cnt == pick:
                                    srv = c
                                    break
                                cnt += 1
                    for i in range(dd - 1, -1, -1):
                        r = swaps[i]
                        tmp = perm[i]; perm[i] = perm[r]; perm[r] = tmp
                else:  # hybrid
                    u = _uniform01(&sr)
                    j = 0
                    while j < m - 1 and u >= cdf[j]:
                        j += 1
                    nj = off[j + 1] - off[j]
                    i1 = _randbelow(&sr, nj)
                    i2 = _randbelow(&sr, nj - 1)
                    if i2 >= i1:
                        i2 += 1
                    s1 = off[j] + i1
                    s2 = off[j] + i2
                    if occ[s1] < occ[s2]:
                        srv = s1
                    elif occ[s2] < occ[s1]:
                        srv = s2
                    else:
                        srv = s1 if _randbelow(&sr, 2) == 0 else s2

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
                    if hlen[srv] == hcap[srv]:
                        newcap = hcap[srv] * 2
                        hd[srv] = <double*>realloc(hd[srv], newcap * sizeof(double))
                        ha[srv] = <double*>realloc(ha[srv], newcap * sizeof(double))
                        hs[srv] = <double*>realloc(hs[srv], newcap * sizeof(double))
                        hc[srv] = <signed char*>realloc(hc[srv], newcap * sizeof(signed char))
                        if hd[srv] == NULL or ha[srv] == NULL or hs[srv] == NULL or hc[srv] == NULL:
                            raise MemoryError()
                        hcap[srv] = newcap
                    i = hlen[srv]
                    hd[srv][i] = phi[srv] + size
                    ha[srv][i] = t
                    hs[srv][i] = size
                    hc[srv][i] = 1 if counted else 0
                    hlen[srv] = i + 1
                    _job_sift_up(hd[srv], ha[srv], hs[srv], hc[srv], i)
                    occ[srv] += 1
                    nocc = occ[srv]
                    if nocc <= K:
                        cnt_ge[j, nocc] += 1
                        if nocc > cur_max[j]:
                            cur_max[j] = nocc
                    rem = hd[srv][0] - phi[srv]
                    if rem < 0.0:
                        rem = 0.0
                        clamps += 1
                    dep_time[srv] = t + rem * nocc / cap_srv[srv]
                    _dep_update(heap, pos, dep_time, srv, n)

                events += 1
                if arrivals < hor:
                    next_arrival = t + (-log(1.0 - _uniform01(&sa)) * rate_inv)
                else:
                    next_arrival = INFINITY
            else:
                if t_dep == INFINITY:
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
                ddl = hd[srv][0]
                at = ha[srv][0]
                sz = hs[srv][0]
                cf = hc[srv][0]
                i = hlen[srv] - 1
                hlen[srv] = i
                if i > 0:
                    hd[srv][0] = hd[srv][i]
                    ha[srv][0] = ha[srv][i]
                    hs[srv][0] = hs[srv][i]
                    hc[srv][0] = hc[srv][i]
                    _job_sift_down(hd[srv], ha[srv], hs[srv], hc[srv], i)
                occ[srv] -= 1
                n1 = occ[srv] + 1
                if n1 <= K:
                    cnt_ge[j, n1] -= 1
                    if n1 == cur_max[j]:
                        while cur_max[j] > 0 and cnt_ge[j, cur_max[j]] == 0:
                            cur_max[j] -= 1
                work_departed += sz
                departures += 1
                if cf:
                    counted_done += 1
                    sum_sojourn += t - at
                if occ[srv] > 0:
                    rem = hd[srv][0] - phi[srv]
                    if rem < 0.0:
                        rem = 0.0
                        clamps += 1
                    dep_time[srv] = t + rem * occ[srv] / cap_srv[srv]
                else:
                    phi[srv] = 0.0
                    dep_time[srv] = INFINITY
                _dep_update(heap, pos, dep_time, srv, n)
                events += 1
    finally:
        for i in range(n):
            if hd != NULL and hd[i] != NULL:
                free(hd[i])
            if ha != NULL and ha[i] != NULL:
                free(ha[i])
            if hs != NULL and hs[i] != NULL:
                free(hs[i])
            if hc != NULL and hc[i] != NULL:
                free(hc[i])
        free(hd)
        free(ha)
        free(hs)
        free(hc)
        free(hlen)
        free(hcap)

    return {
        "arrivals": arrivals,
        "departures": departures,
        "counted": counted_done,
        "sum_sojourn": sum_sojourn,
        "join_counts": join_counts_arr,
        "tail_sums": tail_sums_arr,
        "tail_samples": tail_samples,
        "busy_time": busy_arr,
        "work_arrived": work_arrived,
        "work_departed": work_departed,
        "occupancy_area": area,
        "meas_start": meas_start,
        "end_time": t,
        "events": events,
        "degenerate_jobs": degenerate,
        "remainder_clamps": clamps,
    }
