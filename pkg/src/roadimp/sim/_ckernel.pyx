# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled segment run; same algorithm and random-draw order as ``_kernel_py``.

All rule thresholds arrive as small lookup tables computed by the Python
reference functions, so both implementations compare identical numbers.
"""

import numpy as np
cimport numpy as cnp
from cpython.pycapsule cimport PyCapsule_GetPointer
from libc.stdlib cimport calloc, free
from libc.string cimport memmove
from numpy.random cimport bitgen_t

cnp.import_array()

cdef enum:
    N_ROUTES = 3
    MAX_STREAMS = 4

cdef enum:
    RED = 0
    RED_YELLOW = 1
    GREEN = 2
    YELLOW = 3


cdef struct Lane:
    int length
    int n
    int cap
    long next_id
    int* pos
    int* vel
    int* entry
    int* route
    long* vid
    int* ok
    int* new


cdef struct Tables:
    int vmax
    int dv
    int m
    int ls
    int spawn_speed
    double r_s
    int* d_acc
    int* d_keep
    int* d_dec
    double* r_a
    int* comfy
    int* emerg
    int* merge_thr
    int* cross_thr


cdef struct Light:
    int present
    int offset
    int red
    int red_yellow
    int green
    int cycle


cdef struct Counters:
    long vehicle_steps
    long overlaps
    long bad_speed_changes
    long emergency_brakes
    long blocked_overruns
    long spawned
    long dropped_spawns
    long committed
    long forced_passes


cdef int lane_alloc(Lane* L, int length, int ls) except -1:
    L.length = length
    L.n = 0
    L.cap = length // ls + 2
    L.next_id = 0
    L.pos = <int*>calloc(L.cap, sizeof(int))
    L.vel = <int*>calloc(L.cap, sizeof(int))
    L.entry = <int*>calloc(L.cap, sizeof(int))
    L.route = <int*>calloc(L.cap, sizeof(int))
    L.vid = <long*>calloc(L.cap, sizeof(long))
    L.ok = <int*>calloc(L.cap, sizeof(int))
    L.new = <int*>calloc(L.cap, sizeof(int))
    if not (L.pos and L.vel and L.entry and L.route and L.vid and L.ok and L.new):
        raise MemoryError()
    return 0


cdef void lane_free(Lane* L):
    free(L.pos)
    free(L.vel)
    free(L.entry)
    free(L.route)
    free(L.vid)
    free(L.ok)
    free(L.new)


cdef inline int light_state(Light* lt, long t):
    cdef long phase = (t + lt.offset) % lt.cycle
    if phase < lt.red:
        return RED
    phase -= lt.red
    if phase < lt.red_yellow:
        return RED_YELLOW
    phase -= lt.red_yellow
    if phase < lt.green:
        return GREEN
    return YELLOW


cdef inline bint may_pass(int state, int distance, int v, Tables* T):
    if state == GREEN:
        return True
    if state == YELLOW:
        return T.comfy[v] > distance
    return False


cdef inline int approach_cap(int distance, int slow_to, int vmax):
    cdef int v = slow_to if slow_to > 1 else 1
    cdef int used = 0
    while v < vmax and used + v + 1 <= distance:
        used += v + 1
        v += 1
    return v


cdef inline int first_waiting(Lane* L):
    cdef int k
    for k in range(L.n):
        if not L.ok[k]:
            return k
    return -1


cdef int junction_blocker(Lane* L, Lane* streams, int* slow, int* merge, int* cross,
                          Light* lt, long t, Tables* T, Counters* C):
    cdef int k = first_waiting(L)
    if k < 0:
        return -1
    cdef int r = L.route[k]
    cdef int ms = merge[r]
    cdef int cs = cross[r]
    cdef bint ruled = ms >= 0 or cs >= 0
    if not lt.present and not ruled:
        return -1
    cdef int distance = L.length - 1 - L.pos[k]
    cdef int v = L.vel[k]
    cdef bint allowed = True
    cdef int limit, l_x, state
    cdef Lane* s
    if lt.present:
        state = light_state(lt, t)
        allowed = may_pass(state, distance, v, T)
        if allowed and state == YELLOW and not ruled:
            L.ok[k] = 1
    if allowed and ruled:
        limit = slow[r] if slow[r] > 1 else 1
        if v > limit or distance > v + T.dv:
            allowed = False
        else:
            if ms >= 0:
                s = &streams[ms]
                if s.n > 0:
                    l_x = s.length - s.pos[0]
                    allowed = l_x > T.merge_thr[s.vel[0]]
            if allowed and cs >= 0:
                s = &streams[cs]
                if s.n > 0:
                    l_x = s.length - s.pos[0]
                    allowed = l_x > T.cross_thr[v * (T.vmax + 1) + s.vel[0]]
            if allowed:
                L.ok[k] = 1
                C.committed += 1
    if allowed:
        return -1
    if T.emerg[v] > distance:
        L.ok[k] = 1
        C.forced_passes += 1
        return -1
    return k


cdef int stream_blocker(Lane* L, bint has_light, Light* lt, long t, Tables* T):
    if not has_light or not lt.present:
        return -1
    cdef int k = first_waiting(L)
    if k < 0:
        return -1
    cdef int distance = L.length - 1 - L.pos[k]
    cdef int v = L.vel[k]
    cdef int state = light_state(lt, t)
    if may_pass(state, distance, v, T):
        if state == YELLOW:
            L.ok[k] = 1
        return -1
    if T.emerg[v] > distance:
        L.ok[k] = 1
        return -1
    return k


cdef inline int regime(int v, int g, int v_lead, double u, Tables* T, Counters* C):
    cdef int i = v * (T.vmax + 1) + v_lead
    cdef int new
    if g > T.d_acc[i]:
        if u < T.r_a[v]:
            new = v + T.dv
            return T.vmax if new > T.vmax else new
        return v
    if g >= T.d_keep[i]:
        if u < T.r_s:
            new = v - T.dv
            return 0 if new < 0 else new
        return v
    if g >= T.d_dec[i]:
        new = v - T.dv
        return 0 if new < 0 else new
    if C != NULL and v > 0:
        C.emergency_brakes += 1
    new = v - T.m
    return 0 if new < 0 else new


cdef void step_lane(Lane* L, bitgen_t* rng, int blk, int* slow, double intensity, long t,
                    Tables* T, Counters* C, double* cum, bint branching, bint is_subject,
                    long warmup, long* out_entry, long* out_exit, signed char* out_route, long* n_out):
    cdef int n = L.n
    cdef int k, v, g, new, stop, s, cap, change, w = T.vmax + 1
    cdef int line = L.length - 1
    cdef double u
    cdef int e, r, g_entry

    # speeds from the time-t state
    for k in range(n):
        v = L.vel[k]
        u = rng.next_double(rng.state)
        if k == 0:
            new = regime(v, 1 << 30, 0, u, T, NULL)
        else:
            new = regime(v, L.pos[k - 1] - L.pos[k] - T.ls, L.vel[k - 1], u, T, C)
        if k == blk:
            stop = regime(v, line - L.pos[k], 0, u, T, C)
            if k == 0 or stop < new:
                new = stop
        if slow != NULL:
            s = slow[L.route[k]]
            if s >= 0:
                cap = approach_cap(line - L.pos[k], s, T.vmax)
                if v - T.m > cap:
                    cap = v - T.m
                if new > cap:
                    new = cap
        L.new[k] = new

    # move
    for k in range(n):
        new = L.new[k]
        change = new - L.vel[k]
        if not (change == -T.m or change == -T.dv or change == 0 or change == T.dv) or new < 0 or new > T.vmax:
            C.bad_speed_changes += 1
        L.vel[k] = new
        L.pos[k] += new
    C.vehicle_steps += n
    if 0 <= blk < n and L.pos[blk] > line:
        C.blocked_overruns += 1
    for k in range(1, n):
        if L.pos[k - 1] - L.pos[k] - T.ls < 0:
            C.overlaps += 1

    # exits
    e = 0
    while e < n and L.pos[e] >= L.length:
        if is_subject and L.entry[e] >= warmup:
            out_entry[n_out[0]] = L.entry[e]
            out_exit[n_out[0]] = t + 1
            out_route[n_out[0]] = <signed char>L.route[e]
            n_out[0] += 1
        e += 1
    if e > 0:
        n -= e
        memmove(L.pos, L.pos + e, n * sizeof(int))
        memmove(L.vel, L.vel + e, n * sizeof(int))
        memmove(L.entry, L.entry + e, n * sizeof(int))
        memmove(L.route, L.route + e, n * sizeof(int))
        memmove(L.vid, L.vid + e, n * sizeof(long))
        memmove(L.ok, L.ok + e, n * sizeof(int))
        L.n = n

    # entry
    u = rng.next_double(rng.state)
    if u < intensity:
        if n == 0:
            g_entry = 1
        else:
            g = L.pos[n - 1] - (T.ls - 1) - T.ls
            g_entry = g >= T.d_keep[T.spawn_speed * w + L.vel[n - 1]]
        if g_entry and n < L.cap:
            r = 0
            if cum != NULL:
                u = rng.next_double(rng.state) if branching else 0.0
                r = 2
                for k in range(N_ROUTES):
                    if u < cum[k]:
                        r = k
                        break
            L.pos[n] = T.ls - 1
            L.vel[n] = T.spawn_speed
            L.entry[n] = t + 1
            L.route[n] = r
            L.vid[n] = L.next_id
            L.ok[n] = 0
            L.next_id += 1
            L.n = n + 1
            C.spawned += 1
        else:
            C.dropped_spawns += 1


cdef bitgen_t* _bitgen(gen) except NULL:
    capsule = gen.bit_generator.capsule
    return <bitgen_t*>PyCapsule_GetPointer(capsule, "BitGenerator")


def run_segment_tables(
    int length,
    double[::1] route_cum,
    bint branching,
    int[::1] route_slow,
    int[::1] route_merge,
    int[::1] route_cross,
    light,
    int[::1] stream_lengths,
    int[::1] stream_lights,
    dict tables,
    double intensity,
    double stream_intensity,
    long n_steps,
    long warmup,
    list gens,
):
    """Run one road and its conflict streams; arguments are flattened plan tables."""
    cdef int n_streams = stream_lengths.shape[0]
    if n_streams > MAX_STREAMS:
        raise ValueError("too many conflict streams")
    if len(gens) != 1 + n_streams:
        raise ValueError(f"need {1 + n_streams} generators, got {len(gens)}")

    cdef int[::1] d_acc = tables["d_acc"]
    cdef int[::1] d_keep = tables["d_keep"]
    cdef int[::1] d_dec = tables["d_dec"]
    cdef double[::1] r_a = tables["r_a"]
    cdef int[::1] comfy = tables["comfy"]
    cdef int[::1] emerg = tables["emerg"]
    cdef int[::1] merge_thr = tables["merge_thr"]
    cdef int[::1] cross_thr = tables["cross_thr"]
    cdef Tables T
    T.vmax = tables["v_max"]
    T.dv = tables["delta_v"]
    T.m = tables["emergency"]
    T.ls = tables["vehicle_cells"]
    T.spawn_speed = tables["spawn_speed"]
    T.r_s = tables["r_s"]
    T.d_acc = &d_acc[0]
    T.d_keep = &d_keep[0]
    T.d_dec = &d_dec[0]
    T.r_a = &r_a[0]
    T.comfy = &comfy[0]
    T.emerg = &emerg[0]
    T.merge_thr = &merge_thr[0]
    T.cross_thr = &cross_thr[0]

    cdef Light lt
    lt.present = light is not None
    if lt.present:
        lt.offset = light.offset
        lt.red = light.red
        lt.red_yellow = light.red_yellow
        lt.green = light.green
        lt.cycle = light.cycle
    else:
        lt.offset = lt.red = lt.red_yellow = lt.green = 0
        lt.cycle = 1

    cdef bitgen_t* rngs[1 + MAX_STREAMS]
    cdef int k
    for k in range(1 + n_streams):
        rngs[k] = _bitgen(gens[k])

    cdef cnp.ndarray[cnp.int64_t, ndim=1] entry_arr = np.empty(n_steps + 1, dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] exit_arr = np.empty(n_steps + 1, dtype=np.int64)
    cdef cnp.ndarray[cnp.int8_t, ndim=1] route_arr = np.empty(n_steps + 1, dtype=np.int8)
    cdef long n_out = 0
    cdef Counters C
    C.vehicle_steps = C.overlaps = C.bad_speed_changes = C.emergency_brakes = 0
    C.blocked_overruns = C.spawned = C.dropped_spawns = C.committed = C.forced_passes = 0

    cdef Lane road
    cdef Lane streams[MAX_STREAMS]
    cdef int n_alloc = 0
    cdef long t
    cdef int blocker, sb
    lane_alloc(&road, length, T.ls)
    try:
        for k in range(n_streams):
            lane_alloc(&streams[k], stream_lengths[k], T.ls)
            n_alloc += 1
        for t in range(n_steps):
            blocker = junction_blocker(&road, streams, &route_slow[0], &route_merge[0], &route_cross[0],
                                       &lt, t, &T, &C)
            for k in range(n_streams):
                sb = stream_blocker(&streams[k], stream_lights[k] != 0, &lt, t, &T)
                step_lane(&streams[k], rngs[1 + k], sb, NULL, stream_intensity, t, &T, &C,
                          NULL, False, False, warmup, NULL, NULL, NULL, NULL)
            step_lane(&road, rngs[0], blocker, &route_slow[0], intensity, t, &T, &C,
                      &route_cum[0], branching, True, warmup,
                      <long*>&entry_arr[0], <long*>&exit_arr[0], <signed char*>&route_arr[0], &n_out)
    finally:
        lane_free(&road)
        for k in range(n_alloc):
            lane_free(&streams[k])

    stats = {
        "vehicle_steps": C.vehicle_steps,
        "overlaps": C.overlaps,
        "bad_speed_changes": C.bad_speed_changes,
        "emergency_brakes": C.emergency_brakes,
        "blocked_overruns": C.blocked_overruns,
        "spawned": C.spawned,
        "dropped_spawns": C.dropped_spawns,
        "committed": C.committed,
        "forced_passes": C.forced_passes,
    }
    return entry_arr[:n_out].copy(), exit_arr[:n_out].copy(), route_arr[:n_out].copy(), stats
