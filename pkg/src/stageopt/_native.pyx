# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled implementations of the hot kernels.

Semantics, including every tie-break, match stageopt._pure exactly; the
fallback and this module are interchangeable behind stageopt.kernels.
"""

from libc.math cimport INFINITY

import numpy as np

from stageopt.errors import NoSolutionError


def ipa_assign(lat_obj, beta_obj):
    """Greedy best-latency-first assignment of matrix rows to columns."""
    lat_np = np.ascontiguousarray(lat_obj, dtype=np.float64)
    cdef const double[:, ::1] lat = lat_np
    cdef Py_ssize_t m = lat.shape[0]
    cdef Py_ssize_t n = lat.shape[1]
    caps_np = np.array(beta_obj, dtype=np.int64)
    if caps_np.shape[0] != n:
        raise ValueError("beta length must match the number of columns")
    cdef long long[::1] caps = caps_np
    avail_np = (caps_np > 0).astype(np.uint8)
    cdef unsigned char[::1] avail = avail_np
    best_j_np = np.empty(m, dtype=np.int64)
    best_v_np = np.empty(m, dtype=np.float64)
    out_np = np.empty(m, dtype=np.int64)
    remaining_np = np.ones(m, dtype=np.uint8)
    cdef long long[::1] best_j = best_j_np
    cdef double[::1] best_v = best_v_np
    cdef long long[::1] out = out_np
    cdef unsigned char[::1] remaining = remaining_np
    cdef Py_ssize_t i, j, t, t2, bi, bj
    cdef double bv

    for i in range(m):
        bj = -1
        bv = 0.0
        for j in range(n):
            if avail[j] and (bj == -1 or lat[i, j] < bv):
                bv = lat[i, j]
                bj = j
        best_j[i] = bj
        best_v[i] = bv

    for t in range(m):
        bi = -1
        for i in range(m):
            if remaining[i] and best_j[i] >= 0 and (bi == -1 or best_v[i] > best_v[bi]):
                bi = i
        if bi == -1:
            raise NoSolutionError("machines exhausted with instances remaining")
        j = best_j[bi]
        out[bi] = j
        remaining[bi] = 0
        caps[j] -= 1
        if caps[j] == 0:
            avail[j] = 0
            for i in range(m):
                if remaining[i] and best_j[i] == j:
                    bj = -1
                    bv = 0.0
                    for t2 in range(n):
                        if avail[t2] and (bj == -1 or lat[i, t2] < bv):
                            bv = lat[i, t2]
                            bj = t2
                    best_j[i] = bj
                    best_v[i] = bv
    return out_np


cdef inline bint _heap_above(double av, long long ai, double bv, long long bi) nogil:
    # max-heap ordering on value, lowest id first among equals
    return av > bv or (av == bv and ai < bi)


cdef inline void _heap_push(double[::1] hv, long long[::1] hi,
                            Py_ssize_t* size, double v, long long ident) nogil:
    cdef Py_ssize_t idx = size[0]
    cdef Py_ssize_t parent
    hv[idx] = v
    hi[idx] = ident
    size[0] += 1
    while idx > 0:
        parent = (idx - 1) >> 1
        if _heap_above(hv[idx], hi[idx], hv[parent], hi[parent]):
            hv[idx], hv[parent] = hv[parent], hv[idx]
            hi[idx], hi[parent] = hi[parent], hi[idx]
            idx = parent
        else:
            break


cdef inline void _heap_pop(double[::1] hv, long long[::1] hi, Py_ssize_t* size) nogil:
    cdef Py_ssize_t idx = 0
    cdef Py_ssize_t child
    size[0] -= 1
    hv[0] = hv[size[0]]
    hi[0] = hi[size[0]]
    while True:
        child = 2 * idx + 1
        if child >= size[0]:
            break
        if child + 1 < size[0] and _heap_above(hv[child + 1], hi[child + 1], hv[child], hi[child]):
            child += 1
        if _heap_above(hv[child], hi[child], hv[idx], hi[idx]):
            hv[idx], hv[child] = hv[child], hv[idx]
            hi[idx], hi[child] = hi[child], hi[idx]
            idx = child
        else:
            break


def raa_path_walk(lat_obj, cost_obj, offsets_obj):
    """Heap walk over per-instance frontiers emitting the stage frontier."""
    lat_np = np.ascontiguousarray(lat_obj, dtype=np.float64)
    cost_np = np.ascontiguousarray(cost_obj, dtype=np.float64)
    offs_np = np.ascontiguousarray(offsets_obj, dtype=np.int64)
    cdef const double[::1] lat = lat_np
    cdef const double[::1] cost = cost_np
    cdef const long long[::1] offs = offs_np
    cdef Py_ssize_t m = offs.shape[0] - 1
    cdef Py_ssize_t total = offs[m]

    pos_np = np.empty(m, dtype=np.int64)
    cdef long long[::1] pos = pos_np
    heap_v_np = np.empty(m, dtype=np.float64)
    heap_i_np = np.empty(m, dtype=np.int64)
    cdef double[::1] hv = heap_v_np
    cdef long long[::1] hi = heap_i_np
    cdef Py_ssize_t hsize = 0

    emit_lat_np = np.empty(total, dtype=np.float64)
    emit_cost_np = np.empty(total, dtype=np.float64)
    emit_adv_np = np.empty(total, dtype=np.int64)
    adv_np = np.empty(total + 1, dtype=np.int64)
    cdef double[::1] emit_lat = emit_lat_np
    cdef double[::1] emit_cost = emit_cost_np
    cdef long long[::1] emit_adv = emit_adv_np
    cdef long long[::1] adv = adv_np

    cdef double total_cost = 0.0
    cdef Py_ssize_t i
    for i in range(m):
        pos[i] = offs[i]
        total_cost += cost[offs[i]]
        _heap_push(hv, hi, &hsize, lat[offs[i]], i)

    cdef double smax = INFINITY
    cdef double q
    cdef Py_ssize_t applied = 0
    cdef Py_ssize_t ne = 0
    cdef long long nxt
    while True:
        q = hv[0]
        i = hi[0]
        _heap_pop(hv, hi, &hsize)
        if q < smax:
            emit_lat[ne] = q
            emit_cost[ne] = total_cost
            emit_adv[ne] = applied
            ne += 1
            smax = q
        nxt = pos[i] + 1
        if nxt >= offs[i + 1]:
            break
        total_cost += cost[nxt] - cost[pos[i]]
        pos[i] = nxt
        adv[applied] = i
        applied += 1
        _heap_push(hv, hi, &hsize, lat[nxt], i)

    return (
        emit_lat_np[:ne].copy(),
        emit_cost_np[:ne].copy(),
        emit_adv_np[:ne].copy(),
        adv_np[:applied].copy(),
    )


cdef void _search(const double[:, ::1] lat, long long[::1] caps,
                  const long long[::1] order, const long long[:, ::1] mach_order,
                  Py_ssize_t t, double cur_max, double[::1] best) nogil:
    cdef Py_ssize_t m = lat.shape[0]
    cdef Py_ssize_t n = lat.shape[1]
    if t == m:
        best[0] = cur_max
        return
    cdef Py_ssize_t i = order[t]
    cdef Py_ssize_t jj, j
    cdef double v, nm
    for jj in range(n):
        j = mach_order[i, jj]
        if caps[j] <= 0:
            continue
        v = lat[i, j]
        nm = cur_max if cur_max >= v else v
        if nm >= best[0]:
            break  # machines are latency-sorted; later ones are no better
        caps[j] -= 1
        _search(lat, caps, order, mach_order, t + 1, nm, best)
        caps[j] += 1


cdef bint _rebuild(const double[:, ::1] lat, long long[::1] caps,
                   long long[::1] assign, double limit, Py_ssize_t i) nogil:
    cdef Py_ssize_t m = lat.shape[0]
    cdef Py_ssize_t n = lat.shape[1]
    if i == m:
        return True
    cdef Py_ssize_t j
    for j in range(n):
        if caps[j] > 0 and lat[i, j] <= limit:
            caps[j] -= 1
            assign[i] = j
            if _rebuild(lat, caps, assign, limit, i + 1):
                return True
            caps[j] += 1
    assign[i] = -1
    return False


def bruteforce_placement(lat_obj, beta_obj):
    """Exhaustive min-max assignment with capacity limits."""
    lat_np = np.ascontiguousarray(lat_obj, dtype=np.float64)
    cdef const double[:, ::1] lat = lat_np
    cdef Py_ssize_t m = lat.shape[0]
    caps_np = np.array(beta_obj, dtype=np.int64)
    if int(caps_np.sum()) < m:
        raise NoSolutionError("total capacity below instance count")

    order_np = np.argsort(-lat_np.min(axis=1), kind="stable").astype(np.int64)
    mach_order_np = np.argsort(lat_np, axis=1, kind="stable").astype(np.int64)
    best_np = np.array([INFINITY], dtype=np.float64)
    cdef long long[::1] caps = caps_np.copy()
    _search(lat, caps, order_np, mach_order_np, 0, 0.0, best_np)

    assign_np = np.full(m, -1, dtype=np.int64)
    cdef long long[::1] caps2 = caps_np.copy()
    _rebuild(lat, caps2, assign_np, best_np[0], 0)
    return assign_np, float(best_np[0])
