# cython: language_level=3
"""Compiled Temperley-Lieb diagram kernels; same API as ``_kernels_py``."""

from libc.stdlib cimport malloc, free


def compose(tuple upper, tuple lower, int n):
    cdef int *u = <int *> malloc(2 * n * sizeof(int))
    cdef int *l = <int *> malloc(2 * n * sizeof(int))
    cdef int *o = <int *> malloc(2 * n * sizeof(int))
    cdef char *seen = <char *> malloc(n * sizeof(char))
    cdef int i, start, side, p, j, k, m, loops = 0
    try:
        for i in range(2 * n):
            u[i] = upper[i]
            l[i] = lower[i]
        for i in range(n):
            seen[i] = 0
        for start in range(2 * n):
            if start < n:
                side = 0
                p = u[start]
            else:
                side = 1
                p = l[start]
            while True:
                if side == 0:
                    if p < n:
                        break
                    j = p - n
                    seen[j] = 1
                    side = 1
                    p = l[j]
                else:
                    if p >= n:
                        break
                    seen[p] = 1
                    side = 0
                    p = u[n + p]
            o[start] = p
        for j in range(n):
            if seen[j]:
                continue
            loops += 1
            k = j
            while True:
                seen[k] = 1
                m = l[k]
                seen[m] = 1
                k = u[n + m] - n
                if k == j:
                    break
        return tuple([o[i] for i in range(2 * n)]), loops
    finally:
        free(u)
        free(l)
        free(o)
        free(seen)


def closure_loops(tuple d, int n):
    cdef int *dd = <int *> malloc(2 * n * sizeof(int))
    cdef char *seen = <char *> malloc(2 * n * sizeof(char))
    cdef int s, p, q, loops = 0
    try:
        for s in range(2 * n):
            dd[s] = d[s]
            seen[s] = 0
        for s in range(2 * n):
            if seen[s]:
                continue
            loops += 1
            p = s
            while True:
                seen[p] = 1
                q = dd[p]
                seen[q] = 1
                p = q + n if q < n else q - n
                if p == s:
                    break
        return loops
    finally:
        free(dd)
        free(seen)
