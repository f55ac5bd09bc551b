from dataclasses import dataclass
from math import gcd

from ..errors import InvalidArgument


@dataclass(frozen=True)
class AmplitudeAlphabet:
    """Odd amplitude levels 1, 3, ..., 2^m - 1 with exact powers."""

    m: int
    levels: tuple
    squares: tuple
    quartics: tuple

    @property
    def size(self):
        return len(self.levels)

    @property
    def max_level(self):
        return self.levels[-1]

    @property
    def energy_unit(self):
        # a^2 = 1 (mod 8) for odd a: sequence energies of fixed length live on a lattice
        return _lattice_step(self.squares)

    @property
    def quartic_unit(self):
        return _lattice_step(self.quartics)


def _lattice_step(powers):
    step = 0
    for p in powers:
        step = gcd(step, p - powers[0])
    return step or 1


def build_alphabet(m):
    if not isinstance(m, int) or not 1 <= m <= 8:
        raise InvalidArgument(f"m must be an integer in [1, 8], got {m!r}")
    levels = tuple(range(1, 2**m, 2))
    return AmplitudeAlphabet(
        m=m,
        levels=levels,
        squares=tuple(a * a for a in levels),
        quartics=tuple(a**4 for a in levels),
    )
