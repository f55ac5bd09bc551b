"""Rate-constrained design search over (e_max, k_max)."""

from bisect import bisect_left
from dataclasses import dataclass, replace
from fractions import Fraction

from ..errors import InfeasibleRate, ResourceLimit
from .census import census_for
from .moments import compute_moments
from .trellis import UNBOUNDED, ShapingSpec, build_trellis


@dataclass(frozen=True)
class SweepPoint:
    e_max: int
    k_max: int | None
    cardinality: int
    k_bits: int
    mean_energy: float
    mu4: float
    mu4_1d: float
    pmf: tuple
    minimal: bool = False


def _cardinality_by_energy(n, alphabet, k_max):
    """Return (u -> |A|) for energy excess u, preferring the census when it fits."""
    try:
        census = census_for(n, alphabet)
    except ResourceLimit:
        census = None
    if census is not None:
        w_cap = census.w_of(k_max)
        return lambda u: census.count(u, w_cap)

    def via_trellis(u):
        spec = ShapingSpec(n, alphabet, n + alphabet.energy_unit * u, k_max)
        return build_trellis(spec).total

    return via_trellis


def min_emax_for_rate(n, alphabet, k_target, k_max=UNBOUNDED):
    """Smallest e_max whose shaping set holds at least 2^k_target sequences."""
    if k_target < 0:
        raise InfeasibleRate(f"negative rate target {k_target}")
    if k_target > n * (alphabet.m - 1):
        raise InfeasibleRate(
            f"{k_target} bits exceed the full cube ({n * (alphabet.m - 1)} bits) at n={n}"
        )
    target = 1 << k_target
    du_max = (alphabet.squares[-1] - 1) // alphabet.energy_unit
    card = _cardinality_by_energy(n, alphabet, k_max)
    lo, hi = 0, n * du_max
    if card(hi) < target:
        raise InfeasibleRate(
            f"k_max={k_max} admits fewer than 2^{k_target} sequences at any e_max"
        )
    while lo < hi:
        mid = (lo + hi) // 2
        if card(mid) >= target:
            hi = mid
        else:
            lo = mid + 1
    return n + alphabet.energy_unit * lo


def _point(census, u, w, k_max):
    total, occ, _ = census.occurrences(u, w)
    pmf = tuple(Fraction(o, census.n * total) for o in occ)
    mom = compute_moments(pmf, census.alphabet)
    return SweepPoint(
        e_max=census.e_of(u),
        k_max=k_max,
        cardinality=total,
        k_bits=total.bit_length() - 1,
        mean_energy=mom.mean_energy_per_amplitude,
        mu4=mom.mu4,
        mu4_1d=mom.mu4_1d,
        pmf=pmf,
    )


def sweep_frontier(n, alphabet, k_target):
    """All distinct rate-feasible designs, ordered by descending k_max.

    The first point is the unbounded (sphere shaping) design.  k_max then steps
    down through achievable fourth-power sums, skipping values that leave the
    minimum-energy set unchanged, until no energy bound reaches the rate.
    """
    census = census_for(n, alphabet)
    target = 1 << k_target
    w_inf = census.w_of(UNBOUNDED)
    u = census.min_u(w_inf, target)
    if u is None:
        raise InfeasibleRate(f"2^{k_target} sequences unreachable at n={n}, m={alphabet.m}")

    points = [_point(census, u, w_inf, UNBOUNDED)]
    _, _, tight = census.occurrences(u, w_inf)
    achievable = census.achievable_w.tolist()
    while True:
        i = _index_below(achievable, tight)
        if i < 0:
            break
        w = achievable[i]
        u = census.min_u(w, target)
        if u is None:
            break
        points.append(_point(census, u, w, census.k_of(w)))
        _, _, tight = census.occurrences(u, w)

    best = min(range(len(points)), key=lambda i: points[i].mu4)
    points[best] = replace(points[best], minimal=True)
    return points


def _index_below(sorted_values, x):
    return bisect_left(sorted_values, x) - 1
