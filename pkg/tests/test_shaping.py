from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from brute import admissible, cube, frontier, min_emax, pmf
from klss.errors import InfeasibleRate, InvalidArgument, ResourceLimit
from klss.shaping import (
    GAUSSIAN_MU4,
    UNBOUNDED,
    ShapingSpec,
    build_alphabet,
    build_trellis,
    census_for,
    compute_moments,
    decode_sequence,
    encode_index,
    induced_amplitude_pmf,
    min_emax_for_rate,
    sequence_at_rank,
    shaping_bits,
    sweep_frontier,
)

A2, A3 = build_alphabet(2), build_alphabet(3)


def trellis(n, m, e_max, k_max=UNBOUNDED):
    return build_trellis(ShapingSpec(n, build_alphabet(m), e_max, k_max))


# alphabet ---------------------------------------------------------------------
def test_alphabet_levels():
    assert build_alphabet(1).levels == (1,)
    assert A2.levels == (1, 3) and A2.squares == (1, 9) and A2.quartics == (1, 81)
    assert A3.levels == (1, 3, 5, 7) and A3.quartics == (1, 81, 625, 2401)
    assert (A3.energy_unit, A3.quartic_unit) == (8, 16)


@pytest.mark.parametrize("m", [0, -1, 9])
def test_alphabet_range(m):
    with pytest.raises(InvalidArgument):
        build_alphabet(m)


# spec validation --------------------------------------------------------------
def test_spec_rejects_bad_bounds():
    with pytest.raises(InvalidArgument, match="all-ones"):
        ShapingSpec(4, A2, 3)
    with pytest.raises(InvalidArgument, match="k_max"):
        ShapingSpec(4, A2, 12, 3)
    with pytest.raises(InvalidArgument):
        ShapingSpec(0, A2, 12)


# worked examples --------------------------------------------------------------
def test_small_totals():
    assert trellis(4, 2, 12).total == 5
    assert trellis(4, 2, 20, 164).total == 11
    assert trellis(4, 2, 20, 84).total == 5


def test_shaping_bits():
    assert shaping_bits(trellis(4, 2, 12)) == 2
    assert shaping_bits(trellis(4, 2, 4)) == 0
    assert shaping_bits(trellis(4, 2, 20, 164)) == 3


def test_encode_examples():
    t = trellis(4, 2, 12)
    assert encode_index(t, 0) == (1, 1, 1, 1)
    assert encode_index(t, 3) == (1, 3, 1, 1)
    with pytest.raises(InvalidArgument):
        encode_index(t, 4)
    # rank 4 exists in the set but lies beyond 2^k, so only the full unrank reaches it
    t84 = trellis(4, 2, 20, 84)
    assert sequence_at_rank(t84, 4) == (3, 1, 1, 1)
    with pytest.raises(InvalidArgument):
        sequence_at_rank(t84, 5)


def test_decode_examples():
    t = trellis(4, 2, 12)
    assert decode_sequence(t, (1, 1, 1, 1)) == 0
    assert decode_sequence(t, (1, 1, 3, 1)) == 2
    assert decode_sequence(t, (3, 1, 1, 1)) == 4


def test_decode_names_violation():
    with pytest.raises(InvalidArgument, match="energy"):
        decode_sequence(trellis(4, 2, 12), (3, 3, 1, 1))
    with pytest.raises(InvalidArgument, match="quartic"):
        decode_sequence(trellis(4, 2, 20, 84), (3, 3, 1, 1))
    with pytest.raises(InvalidArgument, match="alphabet"):
        decode_sequence(trellis(4, 2, 12), (1, 2, 1, 1))
    with pytest.raises(InvalidArgument, match="length"):
        decode_sequence(trellis(4, 2, 12), (1, 1, 1))


def test_pmf_examples():
    assert induced_amplitude_pmf(trellis(4, 2, 12)) == (Fraction(4, 5), Fraction(1, 5))
    assert induced_amplitude_pmf(trellis(5, 3, 5)) == (1, 0, 0, 0)
    assert induced_amplitude_pmf(trellis(3, 3, 3 * 49)) == (Fraction(1, 4),) * 4


def test_pmf_below_limit_matches_brute():
    t = trellis(6, 3, 70, 900)
    seqs = admissible(6, 3, 70, 900)
    for limit in (1, 2, 7, 100, 1 << t.k_bits, t.total):
        assert induced_amplitude_pmf(t, limit) == pmf(seqs[:limit], 3)


def test_moments_examples():
    u = compute_moments([Fraction(1, 4)] * 4, A3)
    assert u.exact_mean_energy == 21
    assert u.exact_mu4 == Fraction(777 + 441, 2 * 441)
    assert u.mu4 == pytest.approx(1.380952, abs=1e-6)
    assert compute_moments([1, 0, 0, 0], A3).mu4 == 1
    assert GAUSSIAN_MU4 == 2.0


def test_moments_rejects_bad_pmf():
    with pytest.raises(InvalidArgument, match="normalized"):
        compute_moments([0.5, 0.2, 0.2, 0.2], A3)
    with pytest.raises(InvalidArgument):
        compute_moments([0.5, 0.5], A3)
    with pytest.raises(InvalidArgument):
        compute_moments([1.5, -0.5, 0, 0], A3)


def test_min_emax_examples():
    assert min_emax_for_rate(4, A2, 2) == 12
    assert min_emax_for_rate(4, A2, 0) == 4
    assert min_emax_for_rate(4, A2, 3, 164) == 20
    with pytest.raises(InfeasibleRate):
        min_emax_for_rate(4, A2, 5)
    with pytest.raises(InfeasibleRate):
        min_emax_for_rate(4, A2, 3, 84)


def test_small_sweeps():
    f = sweep_frontier(4, A2, 2)
    assert [(p.e_max, p.k_max, p.cardinality) for p in f] == [(12, None, 5)]
    # the (20, 84) design is the same five sequences as the unbounded point
    assert np.array_equal(admissible(4, 2, 20, 84), admissible(4, 2, 12))
    g = sweep_frontier(2, A2, 2)
    assert [(p.e_max, p.k_max) for p in g] == [(18, None)]
    assert g[0].minimal


# brute-force equivalence ------------------------------------------------------
@pytest.mark.parametrize("m,n", [(2, n) for n in range(1, 9)] + [(3, n) for n in range(1, 7)])
def test_loose_and_tight_sets_match_brute(m, n):
    top = n * (2**m - 1) ** 2
    rng = np.random.default_rng(n * 10 + m)
    for _ in range(4):
        e = int(rng.integers(n, top + 1))
        k = int(rng.integers(n, n * (2**m - 1) ** 4 + 1)) if rng.random() < 0.7 else None
        t = trellis(n, m, e, k)
        seqs = admissible(n, m, e, k)
        assert t.total == len(seqs)
        assert induced_amplitude_pmf(t) == pmf(seqs, m)
        got = [sequence_at_rank(t, r) for r in range(t.total)]
        assert got == [tuple(s) for s in seqs.tolist()]


@pytest.mark.parametrize("m,n,k", [(2, 6, 3), (2, 8, 5), (3, 4, 5), (3, 5, 7), (3, 6, 6)])
def test_min_emax_and_frontier_match_brute(m, n, k):
    alphabet = build_alphabet(m)
    assert min_emax_for_rate(n, alphabet, k) == min_emax(n, m, k)
    got = sweep_frontier(n, alphabet, k)
    want = frontier(n, m, k)
    assert [(p.e_max, p.k_max, p.cardinality) for p in got] == want
    for p in got:
        assert p.pmf == pmf(admissible(n, m, p.e_max, p.k_max), m)
    assert sum(p.minimal for p in got) == 1


def test_census_counts_match_trellis():
    census = census_for(10, A3)
    for e, k in [(10, None), (90, None), (130, 2000), (250, 5000), (490, None)]:
        u = census.u_of(e)
        assert census.count(u, census.w_of(k)) == trellis(10, 3, e, k).total


def test_counts_recurrence():
    t = trellis(6, 3, 80, 1500)
    for p in range(t.n):
        nxt = t.counts_map(p + 1)
        for (e, f), c in t.counts_map(p).items():
            expect = sum(nxt.get((e - s, f - q), 0)
                         for s, q in zip(A3.squares, A3.quartics) if s <= e and q <= f)
            assert c == expect
    assert set(t.counts_map(t.n).values()) == {1}


def test_monotone_in_bounds():
    totals_e = [trellis(5, 3, e, 2000).total for e in range(5, 200, 8)]
    totals_k = [trellis(5, 3, 150, k).total for k in range(5, 5000, 160)]
    assert totals_e == sorted(totals_e) and totals_k == sorted(totals_k)


def test_unbounded_equals_loosest_bound():
    n, e = 12, 300
    a = trellis(n, 3, e)
    b = trellis(n, 3, e, n * 7**4)
    assert a.total == b.total
    assert induced_amplitude_pmf(a) == induced_amplitude_pmf(b)
    for i in range(0, 1 << a.k_bits, 997):
        assert encode_index(a, i) == encode_index(b, i)


def test_resource_limit_carries_state_count():
    with pytest.raises(ResourceLimit) as info:
        build_trellis(ShapingSpec(60, A3, 1500, 40000), max_states=1000)
    assert info.value.state_count > 1000


def test_deterministic_build():
    a, b = trellis(20, 3, 250, 6000), trellis(20, 3, 250, 6000)
    assert all(np.array_equal(x, y) for x, y in zip(a.keys, b.keys))
    assert a.total == b.total


def test_blocklength_trend():
    mu = []
    for n in (32, 64, 108):
        e = min_emax_for_rate(n, A3, 3 * n // 2)
        mu.append(compute_moments(induced_amplitude_pmf(trellis(n, 3, e)), A3).mu4)
    assert mu[0] < mu[1] < mu[2]


def test_frontier_tradeoff_n108():
    f = sweep_frontier(108, A3, 162)
    best = next(p for p in f if p.minimal)
    assert best.mu4 < f[0].mu4
    assert best.mean_energy >= f[0].mean_energy


def test_exhaustive_brute_cube_is_lexicographic():
    seqs, _, _ = cube(3, 2)
    assert [tuple(s) for s in seqs.tolist()][:3] == [(1, 1, 1), (1, 1, 3), (1, 3, 1)]


# properties -------------------------------------------------------------------
@st.composite
def small_specs(draw):
    m = draw(st.sampled_from([2, 3]))
    n = draw(st.integers(1, 8))
    top = n * (2**m - 1) ** 2
    e = draw(st.integers(n, top))
    k = draw(st.one_of(st.none(), st.integers(n, n * (2**m - 1) ** 4)))
    return ShapingSpec(n, build_alphabet(m), e, k)


@settings(max_examples=60, deadline=None)
@given(small_specs(), st.data())
def test_roundtrip_property(spec, data):
    t = build_trellis(spec)
    i = data.draw(st.integers(0, (1 << t.k_bits) - 1))
    seq = encode_index(t, i)
    assert spec.admits(seq) is None
    assert decode_sequence(t, seq) == i


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 10**45), st.integers(0, 2**64))
def test_large_block_roundtrip_property(offset, salt):
    t = _big()
    i = (offset * 7919 + salt) % (1 << t.k_bits)
    assert decode_sequence(t, encode_index(t, i)) == i


_BIG = []


def _big():
    if not _BIG:
        _BIG.append(trellis(108, 3, min_emax_for_rate(108, A3, 162)))
    return _BIG[0]


def test_big_trellis_rate():
    t = _big()
    assert t.k_bits == 162
    assert sum(len(k) for k in t.keys) < 20_000
