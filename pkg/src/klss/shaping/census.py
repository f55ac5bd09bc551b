"""Composition census: the shaping set grouped by level counts.

Every sequence with composition (c_1, ..., c_L) has the same energy and
fourth-power sum, and there are n! / prod(c_j!) of them.  Grouping the whole
amplitude cube this way turns cardinality and occurrence queries for any
(e_max, k_max) into prefix sums, which is what frontier sweeps need.
"""

from bisect import bisect_right
from functools import lru_cache
from math import comb, factorial

import numpy as np

from ..errors import ResourceLimit

DEFAULT_MAX_COMPOSITIONS = 3_000_000


@lru_cache(maxsize=None)
def compositions(n, parts):
    """All nonnegative integer vectors of length ``parts`` summing to ``n``.

    Rows are in descending lexicographic order.  The returned array is shared
    between callers and must not be modified.
    """
    if parts == 1:
        return np.array([[n]], dtype=np.int64)
    blocks = []
    for first in range(n, -1, -1):
        rest = compositions(n - first, parts - 1)
        blocks.append(np.hstack([np.full((len(rest), 1), first, dtype=np.int64), rest]))
    return np.vstack(blocks)


class CompositionCensus:
    def __init__(self, n, alphabet, max_compositions=DEFAULT_MAX_COMPOSITIONS):
        size = comb(n + alphabet.size - 1, alphabet.size - 1)
        if size > max_compositions:
            raise ResourceLimit(
                f"census of n={n}, m={alphabet.m} needs {size} compositions "
                f"(budget {max_compositions})",
                size,
            )
        self.n = n
        self.alphabet = alphabet
        eu, qu = alphabet.energy_unit, alphabet.quartic_unit
        du = np.array([(s - 1) // eu for s in alphabet.squares], dtype=np.int64)
        dw = np.array([(q - 1) // qu for q in alphabet.quartics], dtype=np.int64)

        comp = compositions(n, alphabet.size)
        u = comp @ du
        w = comp @ dw
        fact = np.array([factorial(i) for i in range(n + 1)], dtype=object)
        denom = np.ones(len(comp), dtype=object)
        for j in range(alphabet.size):
            denom = denom * fact[comp[:, j]]
        mult = fact[n] // denom

        order = np.lexsort((w, u))
        comp, u, w, mult = comp[order], u[order], w[order], mult[order]
        self.achievable_w = np.unique(w)

        # one group per energy excess, sorted by quartic excess, with prefix sums
        starts = np.flatnonzero(np.r_[True, u[1:] != u[:-1]])
        ends = np.r_[starts[1:], len(u)]
        self.group_u = u[starts].tolist()
        self.group_w = []
        self.group_count = []
        self.group_occ = []
        for a, b in zip(starts, ends):
            self.group_w.append(w[a:b].tolist())
            m = mult[a:b]
            self.group_count.append([0] + np.cumsum(m).tolist())
            self.group_occ.append(
                [[0] + np.cumsum(m * comp[a:b, j]).tolist() for j in range(alphabet.size)]
            )

    # unit conversion ----------------------------------------------------------
    def u_of(self, e_max):
        return (e_max - self.n) // self.alphabet.energy_unit

    def w_of(self, k_max):
        if k_max is None:
            return int(self.achievable_w[-1])
        return (k_max - self.n) // self.alphabet.quartic_unit

    def e_of(self, u):
        return self.n + self.alphabet.energy_unit * u

    def k_of(self, w):
        return self.n + self.alphabet.quartic_unit * w

    # queries ------------------------------------------------------------------
    def count(self, u_cap, w_cap):
        total = 0
        for gu, gw, gc in zip(self.group_u, self.group_w, self.group_count):
            if gu > u_cap:
                break
            total += gc[bisect_right(gw, w_cap)]
        return total

    def min_u(self, w_cap, target):
        """Smallest energy excess whose set reaches ``target`` sequences, or None."""
        total = 0
        for gu, gw, gc in zip(self.group_u, self.group_w, self.group_count):
            total += gc[bisect_right(gw, w_cap)]
            if total >= target:
                return gu
        return None

    def occurrences(self, u_cap, w_cap):
        """(cardinality, per-level occurrence counts, largest quartic excess present)."""
        total = 0
        occ = [0] * self.alphabet.size
        tight = -1
        for gu, gw, gc, go in zip(self.group_u, self.group_w, self.group_count, self.group_occ):
            if gu > u_cap:
                break
            i = bisect_right(gw, w_cap)
            if i == 0:
                continue
            total += gc[i]
            for j in range(self.alphabet.size):
                occ[j] += go[j][i]
            tight = max(tight, gw[i - 1])
        return total, occ, tight


@lru_cache(maxsize=8)
def census_for(n, alphabet):
    return CompositionCensus(n, alphabet)
