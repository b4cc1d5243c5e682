# cython: language_level=3
"""Compiled backend for the neighbor-search kernels.

Must stay arithmetically identical to aggrsim._core_py: the same
minimal-image formula, squared-distance membership test, bump profile
expression and cone gate, so indicator counts agree bit for bit.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport floor, sqrt

cnp.import_array()


cdef inline double _min_image(double d, double side) noexcept nogil:
    return d - side * floor(d / side + 0.5)


cdef inline double _pair_weight(double dist_sq, double r_sq, int profile) noexcept nogil:
    cdef double t
    if dist_sq > r_sq:
        return 0.0
    if profile == 0:
        return 1.0
    t = 1.0 - dist_sq / r_sq
    return t * t


def perceived_sums_naive(double[:, ::1] pos, vel_arr, double side, double radius,
                         int profile, double cos_alpha):
    """Raw kernel sums over all ordered pairs (i, j != i), O(N^2)."""
    cdef Py_ssize_t n = pos.shape[0]
    cdef int dim = <int> pos.shape[1]
    cdef double r_sq = radius * radius
    cdef bint directed = cos_alpha > -1.0
    out = np.zeros(n)
    cdef double[::1] sums = out
    cdef double[:, ::1] vel
    cdef Py_ssize_t i, j
    cdef double dx, dy, dist_sq, w, acc, dot, v_sq
    if n < 2:
        return out
    if directed:
        vel = vel_arr
        with nogil:
            for i in range(n):
                if dim == 1:
                    v_sq = vel[i, 0] * vel[i, 0]
                else:
                    v_sq = vel[i, 0] * vel[i, 0] + vel[i, 1] * vel[i, 1]
                acc = 0.0
                for j in range(n):
                    if j == i:
                        continue
                    dx = _min_image(pos[i, 0] - pos[j, 0], side)
                    if dim == 1:
                        dist_sq = dx * dx
                        dot = dx * vel[i, 0]
                    else:
                        dy = _min_image(pos[i, 1] - pos[j, 1], side)
                        dist_sq = dx * dx + dy * dy
                        dot = dx * vel[i, 0] + dy * vel[i, 1]
                    w = _pair_weight(dist_sq, r_sq, profile)
                    if w != 0.0 and dot >= cos_alpha * sqrt(dist_sq * v_sq):
                        acc += w
                sums[i] = acc
    else:
        with nogil:
            for i in range(n):
                acc = 0.0
                for j in range(n):
                    if j == i:
                        continue
                    dx = _min_image(pos[i, 0] - pos[j, 0], side)
                    if dim == 1:
                        dist_sq = dx * dx
                    else:
                        dy = _min_image(pos[i, 1] - pos[j, 1], side)
                        dist_sq = dx * dx + dy * dy
                    acc += _pair_weight(dist_sq, r_sq, profile)
                sums[i] = acc
    return out


cdef inline int _axis_cells(long c, long ncells, long* vals) noexcept nogil:
    """Unique wrapped cells {c-1, c, c+1}; returns how many are distinct."""
    cdef int count = 0
    cdef int k, m
    cdef long cand
    cdef bint seen
    for k in range(-1, 2):
        cand = (c + k + ncells) % ncells
        seen = False
        for m in range(count):
            if vals[m] == cand:
                seen = True
                break
        if not seen:
            vals[count] = cand
            count += 1
    return count


cdef inline long _cell_of(double x, double cell_width, long ncells) noexcept nogil:
    cdef long c = <long> (x / cell_width)
    if c >= ncells:
        c = ncells - 1
    if c < 0:
        c = 0
    return c


def perceived_sums_cells(double[:, ::1] pos, vel_arr, double side, double radius,
                         int profile, double cos_alpha,
                         long[::1] order, long[::1] start, long ncells):
    """Raw kernel sums using a prebuilt cell index."""
    cdef Py_ssize_t n = pos.shape[0]
    cdef int dim = <int> pos.shape[1]
    cdef double r_sq = radius * radius
    cdef double cell_width = side / ncells
    cdef bint directed = cos_alpha > -1.0
    out = np.zeros(n)
    cdef double[::1] sums = out
    cdef double[:, ::1] vel
    cdef Py_ssize_t i, j, p
    cdef long cx, cy, cid
    cdef long xcells[3]
    cdef long ycells[3]
    cdef int nx, ny, a, b
    cdef double dx, dy, dist_sq, w, acc, dot, v_sq
    if n == 0:
        return out
    if directed:
        vel = vel_arr
    with nogil:
        for i in range(n):
            if directed:
                if dim == 1:
                    v_sq = vel[i, 0] * vel[i, 0]
                else:
                    v_sq = vel[i, 0] * vel[i, 0] + vel[i, 1] * vel[i, 1]
            acc = 0.0
            cx = _cell_of(pos[i, 0], cell_width, ncells)
            nx = _axis_cells(cx, ncells, xcells)
            if dim == 1:
                ny = 1
            else:
                cy = _cell_of(pos[i, 1], cell_width, ncells)
                ny = _axis_cells(cy, ncells, ycells)
            for a in range(nx):
                for b in range(ny):
                    if dim == 1:
                        cid = xcells[a]
                    else:
                        cid = xcells[a] * ncells + ycells[b]
                    for p in range(start[cid], start[cid + 1]):
                        j = order[p]
                        if j == i:
                            continue
                        dx = _min_image(pos[i, 0] - pos[j, 0], side)
                        if dim == 1:
                            dist_sq = dx * dx
                        else:
                            dy = _min_image(pos[i, 1] - pos[j, 1], side)
                            dist_sq = dx * dx + dy * dy
                        w = _pair_weight(dist_sq, r_sq, profile)
                        if w == 0.0:
                            continue
                        if directed:
                            if dim == 1:
                                dot = dx * vel[i, 0]
                            else:
                                dot = dx * vel[i, 0] + dy * vel[i, 1]
                            if dot < cos_alpha * sqrt(dist_sq * v_sq):
                                continue
                        acc += w
            sums[i] = acc
    return out


cdef long _find(long[::1] parent, long a) noexcept nogil:
    while parent[a] != a:
        parent[a] = parent[parent[a]]
        a = parent[a]
    return a


def cluster_labels(double[:, ::1] pos, double side, double radius,
                   long[::1] order, long[::1] start, long ncells):
    """Union-find root label per particle; an edge is distance <= radius."""
    cdef Py_ssize_t n = pos.shape[0]
    cdef int dim = <int> pos.shape[1]
    cdef double r_sq = radius * radius
    cdef double cell_width = side / ncells
    labels = np.arange(n, dtype=np.int64)
    cdef long[::1] parent = labels
    cdef Py_ssize_t i, j, p
    cdef long cx, cy, cid, ri, rj
    cdef long xcells[3]
    cdef long ycells[3]
    cdef int nx, ny, a, b
    cdef double dx, dy, dist_sq
    if n == 0:
        return labels
    with nogil:
        for i in range(n):
            cx = _cell_of(pos[i, 0], cell_width, ncells)
            nx = _axis_cells(cx, ncells, xcells)
            if dim == 1:
                ny = 1
            else:
                cy = _cell_of(pos[i, 1], cell_width, ncells)
                ny = _axis_cells(cy, ncells, ycells)
            for a in range(nx):
                for b in range(ny):
                    if dim == 1:
                        cid = xcells[a]
                    else:
                        cid = xcells[a] * ncells + ycells[b]
                    for p in range(start[cid], start[cid + 1]):
                        j = order[p]
                        if j <= i:
                            continue
                        dx = _min_image(pos[i, 0] - pos[j, 0], side)
                        if dim == 1:
                            dist_sq = dx * dx
                        else:
                            dy = _min_image(pos[i, 1] - pos[j, 1], side)
                            dist_sq = dx * dx + dy * dy
                        if dist_sq <= r_sq:
                            ri = _find(parent, i)
                            rj = _find(parent, j)
                            if ri != rj:
                                parent[rj] = ri
        for i in range(n):
            parent[i] = _find(parent, i)
    return labels
