from dataclasses import dataclass
from fractions import Fraction

from ..errors import InvalidArgument

UNIFORM_64QAM_MU4 = Fraction(1218, 882)  # (777 + 21^2) / (2 * 21^2)
GAUSSIAN_MU4 = 2.0


@dataclass(frozen=True)
class InputMoments:
    mean_energy_per_amplitude: float
    mu4: float
    mu4_1d: float
    exact_mean_energy: Fraction | None = None
    exact_mu4: Fraction | None = None


def compute_moments(pmf, alphabet):
    """Moments of the zero-mean QAM input with independent I/Q drawn from ``pmf``.

    ``mu4`` is E|X|^4 / (E|X|^2)^2 for X = X_I + jX_Q, which reduces to
    (E[a^4] + E[a^2]^2) / (2 E[a^2]^2).  ``mu4_1d`` is the kurtosis of a single
    signed amplitude, E[a^4] / E[a^2]^2.
    """
    pmf = list(pmf)
    if len(pmf) != alphabet.size:
        raise InvalidArgument(f"pmf has {len(pmf)} entries, alphabet has {alphabet.size}")
    if any(p < 0 for p in pmf):
        raise InvalidArgument("pmf has negative entries")
    exact = all(isinstance(p, (Fraction, int)) for p in pmf)
    total = sum(pmf)
    if (exact and total != 1) or (not exact and abs(total - 1) > 1e-9):
        raise InvalidArgument(f"pmf is not normalized (sums to {float(total)!r})")

    e2 = sum(p * s for p, s in zip(pmf, alphabet.squares))
    e4 = sum(p * q for p, q in zip(pmf, alphabet.quartics))
    mu4 = (e4 + e2 * e2) / (2 * e2 * e2)
    return InputMoments(
        mean_energy_per_amplitude=float(e2),
        mu4=float(mu4),
        mu4_1d=float(e4 / (e2 * e2)),
        exact_mean_energy=Fraction(e2) if exact else None,
        exact_mu4=Fraction(mu4) if exact else None,
    )
