"""Sparse counting trellis for energy- and quartic-bounded amplitude sequences.

States are keyed by the prefix *excess* (energy and fourth-power sums above the
all-ones prefix, in lattice units).  Every stored state admits at least one
completion, so only reachable, non-empty states exist.  Counts are exact
Python integers held in numpy object arrays.
"""

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from ..errors import InvalidArgument, ResourceLimit
from .alphabet import AmplitudeAlphabet

UNBOUNDED = None

DEFAULT_MAX_STATES = 20_000_000


@dataclass(frozen=True)
class ShapingSpec:
    n: int
    alphabet: AmplitudeAlphabet
    e_max: int
    k_max: int | None = UNBOUNDED

    def __post_init__(self):
        if self.n < 1:
            raise InvalidArgument(f"blocklength must be >= 1, got {self.n}")
        if self.e_max < self.n:
            raise InvalidArgument(
                f"e_max={self.e_max} excludes the all-ones sequence (needs >= {self.n})"
            )
        if self.k_max is not UNBOUNDED and self.k_max < self.n:
            raise InvalidArgument(
                f"k_max={self.k_max} excludes the all-ones sequence (needs >= {self.n})"
            )

    @property
    def bounded(self):
        return self.k_max is not UNBOUNDED

    def admits(self, seq):
        """Return None if ``seq`` is admissible, else a message naming the violation."""
        if len(seq) != self.n:
            return f"length {len(seq)} != n={self.n}"
        levels = set(self.alphabet.levels)
        for i, a in enumerate(seq):
            if a not in levels:
                return f"amplitude {a!r} at position {i} is not in the alphabet"
        energy = sum(a * a for a in seq)
        if energy > self.e_max:
            return f"energy constraint violated: sum a^2 = {energy} > e_max = {self.e_max}"
        if self.bounded:
            quartic = sum(a**4 for a in seq)
            if quartic > self.k_max:
                return (
                    f"quartic constraint violated: sum a^4 = {quartic} > k_max = {self.k_max}"
                )
        return None


@dataclass(eq=False)
class BoundedTrellis:
    spec: ShapingSpec
    keys: list  # per position: sorted int64 state keys
    children: list  # per position < n: (states, levels) int64, -1 where inadmissible
    counts: list  # per position: object array of completion counts
    total: int
    k_bits: int
    _energy_cap: int = field(repr=False)
    _quartic_cap: int = field(repr=False)
    _lists: tuple | None = field(default=None, repr=False)

    @property
    def n(self):
        return self.spec.n

    @property
    def state_count(self):
        return sum(len(k) for k in self.keys)

    def _key_stride(self):
        return self._quartic_cap + 1

    def counts_map(self, p):
        """Completion counts at position ``p`` keyed by remaining budgets ``(e, f)``.

        ``f`` is None for an unbounded quartic constraint.
        """
        spec, alpha = self.spec, self.spec.alphabet
        stride = self._key_stride()
        out = {}
        for key, c in zip(self.keys[p].tolist(), self.counts[p].tolist()):
            u, w = divmod(key, stride)
            e = spec.e_max - p - alpha.energy_unit * u
            f = None if not spec.bounded else spec.k_max - p - alpha.quartic_unit * w
            out[(e, f)] = c
        return out

    def _as_lists(self):
        if self._lists is None:
            self._lists = (
                [c.tolist() for c in self.children],
                [c.tolist() for c in self.counts],
            )
        return self._lists


def build_trellis(spec, max_states=DEFAULT_MAX_STATES):
    alpha = spec.alphabet
    du = [(s - 1) // alpha.energy_unit for s in alpha.squares]
    energy_cap = (spec.e_max - spec.n) // alpha.energy_unit
    if spec.bounded:
        dw = [(q - 1) // alpha.quartic_unit for q in alpha.quartics]
        quartic_cap = (spec.k_max - spec.n) // alpha.quartic_unit
    else:
        dw = [0] * alpha.size
        quartic_cap = 0
    stride = quartic_cap + 1
    du = np.asarray(du, dtype=np.int64)
    dw = np.asarray(dw, dtype=np.int64)

    keys = [np.zeros(1, dtype=np.int64)]
    children = []
    n_states = 1
    for _ in range(spec.n):
        cur = keys[-1]
        u, w = np.divmod(cur, stride)
        cu = u[:, None] + du[None, :]
        cw = w[:, None] + dw[None, :]
        ok = (cu <= energy_cap) & (cw <= quartic_cap)
        ckeys = cu * stride + cw
        nxt = np.unique(ckeys[ok])
        n_states += len(nxt)
        if n_states > max_states:
            raise ResourceLimit(
                f"trellis exceeds the state budget of {max_states} "
                f"(reached {n_states} states before completing)",
                n_states,
            )
        idx = np.searchsorted(nxt, ckeys)
        idx[~ok] = -1
        children.append(idx)
        keys.append(nxt)

    counts = [None] * (spec.n + 1)
    counts[spec.n] = np.full(len(keys[spec.n]), 1, dtype=object)
    for p in range(spec.n - 1, -1, -1):
        nxt_counts = counts[p + 1]
        acc = np.zeros(len(keys[p]), dtype=object)
        for j in range(alpha.size):
            idx = children[p][:, j]
            ok = idx >= 0
            if ok.any():
                acc[ok] += nxt_counts[idx[ok]]
        counts[p] = acc

    total = int(counts[0][0])
    return BoundedTrellis(
        spec=spec,
        keys=keys,
        children=children,
        counts=counts,
        total=total,
        k_bits=total.bit_length() - 1,
        _energy_cap=energy_cap,
        _quartic_cap=quartic_cap,
    )


def shaping_bits(trellis):
    return trellis.total.bit_length() - 1


def encode_index(trellis, index):
    """Map ``index`` in [0, 2^k) to the admissible sequence of that lexicographic rank."""
    index = int(index)
    if not 0 <= index < (1 << trellis.k_bits):
        raise InvalidArgument(f"index {index} outside [0, 2^{trellis.k_bits})")
    return _unrank(trellis, index)


def sequence_at_rank(trellis, rank):
    """Unrank over the whole admissible set, including ranks >= 2^k."""
    rank = int(rank)
    if not 0 <= rank < trellis.total:
        raise InvalidArgument(f"rank {rank} outside [0, {trellis.total})")
    return _unrank(trellis, rank)


def _unrank(trellis, index):
    children, counts = trellis._as_lists()
    levels = trellis.spec.alphabet.levels
    s = 0
    out = []
    for p in range(trellis.n):
        row = children[p][s]
        nxt = counts[p + 1]
        for j, ci in enumerate(row):
            if ci < 0:
                break
            c = nxt[ci]
            if index < c:
                out.append(levels[j])
                s = ci
                break
            index -= c
        else:
            ci = -1
        if ci < 0 or len(out) != p + 1:
            # only reachable when the count tables disagree with the transitions
            raise RuntimeError(f"trellis inconsistent at position {p}")
    return tuple(out)


def decode_sequence(trellis, seq):
    """Lexicographic rank of an admissible sequence (may exceed 2^k - 1)."""
    seq = tuple(int(a) for a in seq)
    problem = trellis.spec.admits(seq)
    if problem is not None:
        raise InvalidArgument(f"inadmissible sequence: {problem}")
    children, counts = trellis._as_lists()
    pos = {a: j for j, a in enumerate(trellis.spec.alphabet.levels)}
    s = 0
    rank = 0
    for p, a in enumerate(seq):
        row = children[p][s]
        nxt = counts[p + 1]
        for j in range(pos[a]):
            rank += nxt[row[j]]
        s = row[pos[a]]
    return rank


def induced_amplitude_pmf(trellis, limit=None):
    """Exact level probabilities over admissible sequences and positions.

    With ``limit`` the average runs over ranks ``[0, limit)`` only, which for
    ``limit = 2**k_bits`` is the distribution an encoder fed with uniform
    indices actually produces.
    """
    if limit is None or limit == trellis.total:
        occ = _occurrences_all(trellis)
        count = trellis.total
    else:
        if not 0 < limit <= trellis.total:
            raise InvalidArgument(f"limit {limit} outside (0, {trellis.total}]")
        occ = _occurrences_below(trellis, limit)
        count = limit
    denom = trellis.n * count
    return tuple(Fraction(o, denom) for o in occ)


def _occurrences_all(trellis):
    # forward prefix counts times backward completion counts
    size = trellis.spec.alphabet.size
    occ = [0] * size
    fwd = np.full(1, 1, dtype=object)
    for p in range(trellis.n):
        nxt = np.zeros(len(trellis.keys[p + 1]), dtype=object)
        back = trellis.counts[p + 1]
        for j in range(size):
            idx = trellis.children[p][:, j]
            ok = idx >= 0
            if not ok.any():
                continue
            f = fwd[ok]
            child = idx[ok]
            occ[j] += int(np.dot(f, back[child]))
            # distinct parents reach distinct children under one level
            nxt[child] += f
        fwd = nxt
    return occ


def _occurrences_below(trellis, limit):
    size = trellis.spec.alphabet.size
    # tally[p][s, j]: uses of level j over all completions of state s
    tally = [None] * (trellis.n + 1)
    tally[trellis.n] = np.zeros((len(trellis.keys[trellis.n]), size), dtype=object)
    for p in range(trellis.n - 1, -1, -1):
        acc = np.zeros((len(trellis.keys[p]), size), dtype=object)
        for j in range(size):
            idx = trellis.children[p][:, j]
            ok = idx >= 0
            if ok.any():
                acc[ok] += tally[p + 1][idx[ok]]
                acc[ok, j] += trellis.counts[p + 1][idx[ok]]
        tally[p] = acc

    # ranks below `limit` are whole subtrees hanging left of its path
    path = _unrank(trellis, limit)
    level_pos = {a: j for j, a in enumerate(trellis.spec.alphabet.levels)}
    children, counts = trellis._as_lists()
    prefix = [0] * size
    occ = [0] * size
    s = 0
    for p, a in enumerate(path):
        row = children[p][s]
        for j in range(level_pos[a]):
            c = row[j]
            cnt = counts[p + 1][c]
            sub = tally[p + 1][c]
            for t in range(size):
                occ[t] += prefix[t] * cnt + sub[t]
            occ[j] += cnt
        prefix[level_pos[a]] += 1
        s = row[level_pos[a]]
    return occ
