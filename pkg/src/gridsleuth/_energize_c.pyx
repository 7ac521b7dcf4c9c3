# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled energization kernel.

Jacobi-style sweeps over a uint8 adjacency matrix with an early exit when
a sweep leaves the energized vector unchanged. Works on typed memoryviews
so any C-contiguous uint8 buffer is accepted.
"""

import numpy as np


def energize_fixed_point(adjacency, sources):
    """Grow the energized set from the sources to its fixed point.

    Returns ``(energized, iterations)`` where ``energized`` is a uint8
    vector and ``iterations`` counts sweeps including the final no-change
    one. The sweep count is capped at |V| + 1, which a correct input can
    never reach.
    """
    adj = np.ascontiguousarray(adjacency, dtype=np.uint8)
    cur = np.ascontiguousarray(sources, dtype=np.uint8).copy()
    nxt = np.empty_like(cur)
    cdef unsigned char[:, ::1] a = adj
    cdef unsigned char[::1] c = cur
    cdef unsigned char[::1] x = nxt
    cdef Py_ssize_t n = a.shape[0]
    cdef Py_ssize_t i, j, it
    cdef unsigned char acc
    cdef bint changed

    if a.shape[1] != n or c.shape[0] != n:
        raise ValueError("adjacency must be square and match the source vector")

    it = 0
    while it <= n:
        it += 1
        changed = False
        for i in range(n):
            acc = c[i]
            if acc == 0:
                for j in range(n):
                    if a[i, j] != 0 and c[j] != 0:
                        acc = 1
                        break
            x[i] = acc
            if acc != c[i]:
                changed = True
        if not changed:
            break
        for i in range(n):
            c[i] = x[i]
    return cur, it
