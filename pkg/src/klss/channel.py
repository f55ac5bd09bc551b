"""AWGN channel and a kurtosis-aware effective-SNR surrogate.

The surrogate models nonlinear interference as a cubic term whose coefficient
grows linearly with the input kurtosis:

    SNR_eff(P) = P / (ase + (eta0 + eta1 * (mu4 - mu4_ref)) * P^3)

It is a calibration device for launch-power experiments, not a fiber model.
"""

import json
from dataclasses import asdict, dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import ConfigurationError, InvalidArgument
from .shaping.moments import UNIFORM_64QAM_MU4

SNR_PENALTY_DB = 0.35  # sphere shaping vs uniform at optimum launch power
KURTOSIS_RECOVERY_DB = 0.26  # portion of that penalty recovered by the kurtosis bound


def frame_rng(seed, *stream):
    """Independent generator for one (seed, grid index, frame index, ...) stream."""
    return np.random.default_rng([int(seed), *map(int, stream)])


def awgn_apply(symbols, snr_db, seed=None, rng=None):
    """Add circular Gaussian noise of total variance 10^(-snr_db/10) per complex sample."""
    if rng is None:
        rng = np.random.default_rng(seed)
    symbols = np.asarray(symbols)
    var = 10 ** (-snr_db / 10)
    noise = rng.standard_normal(symbols.shape + (2,)) * np.sqrt(var / 2)
    return symbols + noise[..., 0] + 1j * noise[..., 1]


@dataclass(frozen=True)
class SurrogateLinkParams:
    ase_power: float
    eta0: float
    eta1: float
    mu4_ref: float = float(UNIFORM_64QAM_MU4)

    def __post_init__(self):
        if not self.ase_power > 0:
            raise ConfigurationError(f"ase_power must be > 0, got {self.ase_power}")
        if not self.eta0 > 0:
            raise ConfigurationError(f"eta0 must be > 0, got {self.eta0}")
        if not self.eta1 >= 0:
            raise ConfigurationError(f"eta1 must be >= 0, got {self.eta1}")

    def nli_coefficient(self, mu4):
        eta = self.eta0 + self.eta1 * (mu4 - self.mu4_ref)
        if not eta > 0:
            raise InvalidArgument(
                f"effective NLI coefficient {eta} <= 0 at mu4={mu4}; "
                "eta1 is too large for this kurtosis"
            )
        return eta

    def save(self, path):
        with open(path, "w") as fh:
            json.dump(asdict(self), fh, indent=2, sort_keys=True)
            fh.write("\n")


def load_link_params(path):
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigurationError(f"cannot read link parameters from {path}: {exc}") from None
    required = {"ase_power", "eta0", "eta1"}
    if not isinstance(raw, dict) or not required <= raw.keys():
        raise ConfigurationError(f"link parameter file needs keys {sorted(required)}")
    extra = set(raw) - required - {"mu4_ref"}
    if extra:
        raise ConfigurationError(f"unknown link parameter keys {sorted(extra)}")
    try:
        return SurrogateLinkParams(**{k: float(v) for k, v in raw.items()})
    except (TypeError, ValueError) as exc:
        raise ConfigurationError(f"invalid link parameters: {exc}") from None


def effective_snr(p_launch, params, mu4):
    p = np.asarray(p_launch, dtype=float)
    if (p <= 0).any():
        raise InvalidArgument("launch power must be positive")
    eta = params.nli_coefficient(mu4)
    return p / (params.ase_power + eta * p**3)


def analytic_optimum(params, mu4):
    """Closed-form (P*, SNR(P*)) of the cubic surrogate."""
    eta = params.nli_coefficient(mu4)
    p_opt = (params.ase_power / (2 * eta)) ** (1 / 3)
    return p_opt, p_opt / (1.5 * params.ase_power)


def optimal_launch_power(params, mu4, grid):
    """Grid argmax of the effective SNR.

    ``grid`` is either an array of launch powers or a ``(start, stop, step)``
    triple (stop inclusive).
    """
    if isinstance(grid, tuple) and len(grid) == 3:
        start, stop, step = grid
        grid = np.arange(start, stop + step / 2, step)
    grid = np.asarray(grid, dtype=float)
    if grid.size == 0:
        raise InvalidArgument("empty launch-power grid")
    snr = effective_snr(grid, params, mu4)
    i = int(np.argmax(snr))
    return float(grid[i]), float(snr[i])


def snr_gap_db(params, mu4_a, mu4_b):
    """Optimum-power SNR of input ``a`` minus that of input ``b``, in dB."""
    _, sa = analytic_optimum(params, mu4_a)
    _, sb = analytic_optimum(params, mu4_b)
    return 10 * np.log10(sa / sb)


@dataclass(frozen=True)
class Calibration:
    params: SurrogateLinkParams
    penalty_db: float  # uniform minus sphere shaping
    recovery_db: float  # kurtosis-limited minus sphere shaping
    penalty_error_db: float
    recovery_error_db: float


def calibrate_link(mu4_uniform, mu4_ess, mu4_kess, ase_power, eta0,
                   penalty_db=SNR_PENALTY_DB, recovery_db=KURTOSIS_RECOVERY_DB):
    """Fit eta1 (with mu4_ref at the uniform kurtosis) to the two SNR gaps.

    Only the ratio eta1/eta0 affects optimum-power SNR gaps, so the two targets
    are matched in the least-squares sense; the residuals are reported.
    """
    if not mu4_uniform < mu4_kess < mu4_ess:
        raise InvalidArgument("expected mu4 ordering uniform < kurtosis-limited < sphere shaping")

    def gaps(ratio):
        p = SurrogateLinkParams(ase_power, eta0, ratio * eta0, mu4_uniform)
        pen = snr_gap_db(p, mu4_uniform, mu4_ess)
        rec = snr_gap_db(p, mu4_kess, mu4_ess)
        return p, pen, rec

    def loss(log_ratio):
        _, pen, rec = gaps(np.exp(log_ratio))
        return (pen - penalty_db) ** 2 + (rec - recovery_db) ** 2

    res = minimize_scalar(loss, bounds=(-12.0, 6.0), method="bounded",
                          options={"xatol": 1e-12})
    params, pen, rec = gaps(float(np.exp(res.x)))
    return Calibration(params, pen, rec, pen - penalty_db, rec - recovery_db)
