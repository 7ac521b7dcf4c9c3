"""Pure-numpy energization kernel.

Fallback used when the compiled extension is unavailable. Same contract:
propagate source energy over the adjacency of the switched topology until
the energized set stops growing, returning the final per-node vector and
the number of sweeps taken.
"""

from __future__ import annotations

import numpy as np


def energize_fixed_point(adjacency: np.ndarray, sources: np.ndarray) -> tuple[np.ndarray, int]:
    """Grow the energized set from the sources to its fixed point.

    ``adjacency`` is the |V| x |V| binary adjacency of the switched network
    and ``sources`` the initial energized flags. Each sweep energizes every
    neighbor of an energized node; the loop stops as soon as a sweep changes
    nothing, which happens within |V| sweeps on any input.
    """
    adj = np.asarray(adjacency, dtype=bool)
    cur = np.asarray(sources, dtype=bool).copy()
    iterations = 0
    while True:
        nxt = (adj @ cur) | cur
        iterations += 1
        if np.array_equal(nxt, cur):
            break
        cur = nxt
    return cur.astype(np.uint8), iterations
