from .alphabet import AmplitudeAlphabet, build_alphabet
from .census import CompositionCensus, census_for
from .frontier import SweepPoint, min_emax_for_rate, sweep_frontier
from .moments import GAUSSIAN_MU4, UNIFORM_64QAM_MU4, InputMoments, compute_moments
from .trellis import (
    UNBOUNDED,
    BoundedTrellis,
    ShapingSpec,
    build_trellis,
    decode_sequence,
    encode_index,
    induced_amplitude_pmf,
    sequence_at_rank,
    shaping_bits,
)

__all__ = [
    "AmplitudeAlphabet",
    "BoundedTrellis",
    "CompositionCensus",
    "GAUSSIAN_MU4",
    "InputMoments",
    "ShapingSpec",
    "SweepPoint",
    "UNBOUNDED",
    "UNIFORM_64QAM_MU4",
    "build_alphabet",
    "build_trellis",
    "census_for",
    "compute_moments",
    "decode_sequence",
    "encode_index",
    "induced_amplitude_pmf",
    "min_emax_for_rate",
    "sequence_at_rank",
    "shaping_bits",
    "sweep_frontier",
]
