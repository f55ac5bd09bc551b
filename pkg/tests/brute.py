"""Brute-force oracles over explicitly enumerated amplitude sequences."""

import itertools
from fractions import Fraction
from functools import lru_cache

import numpy as np

from klss.shaping import build_alphabet


@lru_cache(maxsize=None)
def cube(n, m):
    """All sequences in lexicographic order with their energies and quartic sums."""
    levels = build_alphabet(m).levels
    seqs = np.array(list(itertools.product(levels, repeat=n)), dtype=np.int64).reshape(-1, n)
    return seqs, (seqs**2).sum(axis=1), (seqs**4).sum(axis=1)


def admissible(n, m, e_max, k_max=None):
    seqs, e, k = cube(n, m)
    keep = e <= e_max
    if k_max is not None:
        keep &= k <= k_max
    return seqs[keep]


def pmf(seqs, m):
    levels = build_alphabet(m).levels
    total = seqs.size
    return tuple(Fraction(int((seqs == a).sum()), total) for a in levels)


def min_emax(n, m, k_bits, k_max=None):
    seqs, e, k = cube(n, m)
    if k_max is not None:
        e = e[k <= k_max]
    e = np.sort(e)
    need = 1 << k_bits
    return None if len(e) < need else int(e[need - 1])


def frontier(n, m, k_bits):
    """Distinct minimum-energy sets over all quartic bounds, largest bound first.

    Returns (e_max, k_max, cardinality) with k_max the largest bound yielding
    that set (None for the unbounded design).
    """
    seqs, e, k = cube(n, m)
    out = []
    seen = set()
    for w in [None] + sorted(set(k.tolist()), reverse=True):
        e_min = min_emax(n, m, k_bits, w)
        if e_min is None:
            break
        keep = e <= e_min if w is None else (e <= e_min) & (k <= w)
        key = (e_min, int(k[keep].max()))
        if key in seen:
            continue
        seen.add(key)
        out.append((e_min, w, int(keep.sum())))
    return out
