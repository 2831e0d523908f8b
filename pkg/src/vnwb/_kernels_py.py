"""Pure-Python Temperley-Lieb diagram kernels.

A width-``n`` diagram is a tuple ``d`` of length ``2n``: points ``0..n-1`` sit on
the top edge, ``n..2n-1`` on the bottom edge, and ``d[i]`` is the partner of
point ``i``.  Composition stacks the first diagram on top of the second.
"""

from __future__ import annotations


def compose(upper: tuple, lower: tuple, n: int) -> tuple[tuple, int]:
    """Stack ``upper`` over ``lower``; return the reduced diagram and the closed loops."""
    out = [0] * (2 * n)
    seen = [False] * n  # middle points, indexed by position along the seam
    for start in range(2 * n):
        if start < n:
            side, p = 0, upper[start]
        else:
            side, p = 1, lower[start]
        # walk until we exit on an outer edge
        while True:
            if side == 0:
                if p < n:
                    end = p
                    break
                j = p - n
                seen[j] = True
                side, p = 1, lower[j]
            else:
                if p >= n:
                    end = p
                    break
                seen[p] = True
                side, p = 0, upper[n + p]
        out[start] = end
    loops = 0
    for j in range(n):
        if seen[j]:
            continue
        loops += 1
        k = j
        while True:
            seen[k] = True
            m = lower[k]  # stays in the seam for a closed loop
            seen[m] = True
            k = upper[n + m] - n
            if k == j:
                break
    return tuple(out), loops


def closure_loops(d: tuple, n: int) -> int:
    """Number of loops after joining top point ``i`` to bottom point ``n + i``."""
    seen = [False] * (2 * n)
    loops = 0
    for s in range(2 * n):
        if seen[s]:
            continue
        loops += 1
        p = s
        while True:
            seen[p] = True
            q = d[p]
            seen[q] = True
            p = q + n if q < n else q - n
            if p == s:
                break
    return loops
