"""Probabilistic amplitude shaping transceiver for square QAM.

Codeword layout (both modes, N = 648, m = 3):

    [ amplitude labels (432) | sign bits (216) ]

In shaped mode the sign bits are 108 uniform data bits (systematic info)
followed by the 108 parity bits of the rate-5/6 code.  In uniform mode all
432 info bits are amplitude labels and the 216 parity bits of the rate-2/3
code are the signs.  Real amplitude ``i`` carries label bits
``[(m-1) i, (m-1) (i+1))`` and sign bit ``amplitude_bit_count + i``; even ``i``
is the in-phase part of symbol ``i // 2``, odd ``i`` the quadrature part.
"""

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import ConfigurationError, InvalidArgument
from .ldpc import ldpc_decode, ldpc_encode, load_code
from .shaping import (
    build_alphabet,
    decode_sequence,
    encode_index,
    induced_amplitude_pmf,
)

SHAPED = "shaped"
UNIFORM = "uniform"
TARGET_BITS_PER_4D = 8


def gray_labels(m):
    """Reflected Gray label (MSB first) of each amplitude level, shape (levels, m-1)."""
    j = np.arange(2 ** (m - 1))
    g = j ^ (j >> 1)
    shifts = np.arange(m - 2, -1, -1)
    return ((g[:, None] >> shifts[None, :]) & 1).astype(np.uint8)


@dataclass(eq=False)
class PasFrameConfig:
    mode: str
    qam_bits_per_real: int
    fec: object
    shaping_blocklength: int | None
    shaping_bits_per_block: int | None
    blocks_per_codeword: int
    amplitude_bit_count: int
    uniform_sign_info_bits: int
    data_bits_per_codeword: int
    pmf: tuple
    scale: float
    trellis: object = field(default=None, repr=False)
    closure: list = field(default_factory=list, repr=False)

    @property
    def amplitudes_per_codeword(self):
        return self.fec.codeword_length // self.qam_bits_per_real

    @property
    def symbols_per_codeword(self):
        return self.amplitudes_per_codeword // 2

    @property
    def alphabet(self):
        return build_alphabet(self.qam_bits_per_real)

    @property
    def bits_per_4d(self):
        return Fraction(4 * self.data_bits_per_codeword, self.amplitudes_per_codeword)


def _require(closure, name, lhs, rhs):
    ok = lhs == rhs
    closure.append((name, lhs, rhs, ok))
    if not ok:
        raise ConfigurationError(f"frame closure violated: {name} ({lhs} != {rhs})")


def build_frame_config(mode, trellis=None, target_bits_per_4d=TARGET_BITS_PER_4D):
    """Bind shaper, FEC and constellation into one codeword frame, checking the bit budget."""
    closure = []
    if mode == UNIFORM:
        m = 3
        fec = load_code("2/3")
        amplitudes = fec.codeword_length // m
        _require(closure, "amplitudes * m = codeword length", amplitudes * m, fec.codeword_length)
        amp_bits = amplitudes * (m - 1)
        _require(closure, "amplitude bits = FEC info bits", amp_bits, fec.info_bits)
        _require(closure, "signs = parity bits", amplitudes, fec.parity_bits)
        data = fec.info_bits
        _require(closure, "bits per 4D", Fraction(4 * data, amplitudes), Fraction(target_bits_per_4d))
        alphabet = build_alphabet(m)
        pmf = tuple(Fraction(1, alphabet.size) for _ in alphabet.levels)
        return PasFrameConfig(
            mode=mode, qam_bits_per_real=m, fec=fec,
            shaping_blocklength=None, shaping_bits_per_block=None, blocks_per_codeword=0,
            amplitude_bit_count=amp_bits, uniform_sign_info_bits=0,
            data_bits_per_codeword=data, pmf=pmf, scale=_scale(pmf, alphabet),
            closure=closure,
        )
    if mode != SHAPED:
        raise ConfigurationError(f"unknown mode {mode!r}; use 'shaped' or 'uniform'")
    if trellis is None:
        raise ConfigurationError("shaped mode needs a trellis")

    alphabet = trellis.spec.alphabet
    m, n, k = alphabet.m, trellis.n, trellis.k_bits
    fec = load_code("5/6")
    if fec.codeword_length % m:
        raise ConfigurationError(f"frame closure violated: {fec.codeword_length} bits do not split into m={m} labels")
    amplitudes = fec.codeword_length // m
    if amplitudes % n:
        raise ConfigurationError(
            f"frame closure violated: {amplitudes} amplitudes per codeword not divisible into blocks of n={n}"
        )
    blocks = amplitudes // n
    _require(closure, "amplitudes = blocks * n", amplitudes, blocks * n)
    amp_bits = amplitudes * (m - 1)
    sign_info = fec.info_bits - amp_bits
    if sign_info < 0:
        raise ConfigurationError(
            f"frame closure violated: {amp_bits} amplitude bits exceed {fec.info_bits} FEC info bits"
        )
    _require(closure, "FEC info = amplitude bits + sign info bits", fec.info_bits, amp_bits + sign_info)
    _require(closure, "signs = parity + sign info bits", amplitudes, fec.parity_bits + sign_info)
    data = blocks * k + sign_info
    _require(closure, "bits per 4D", Fraction(4 * data, amplitudes), Fraction(target_bits_per_4d))
    pmf = induced_amplitude_pmf(trellis, 1 << k)
    return PasFrameConfig(
        mode=mode, qam_bits_per_real=m, fec=fec,
        shaping_blocklength=n, shaping_bits_per_block=k, blocks_per_codeword=blocks,
        amplitude_bit_count=amp_bits, uniform_sign_info_bits=sign_info,
        data_bits_per_codeword=data, pmf=pmf, scale=_scale(pmf, alphabet),
        trellis=trellis, closure=closure,
    )


def _scale(pmf, alphabet):
    e2 = sum(float(p) * s for p, s in zip(pmf, alphabet.squares))
    return 1.0 / np.sqrt(2.0 * e2)


@dataclass
class QamSymbolBlock:
    symbols: np.ndarray  # lattice points, odd-integer I and Q
    scale: float

    def normalized(self):
        return self.symbols * self.scale

    def to_csv(self, path, normalized=False):
        x = self.normalized() if normalized else self.symbols
        rows = np.atleast_2d(x).reshape(-1)
        fmt = "%.10g" if normalized else "%d"
        np.savetxt(path, np.column_stack([rows.real, rows.imag]), fmt=fmt, delimiter=",",
                   header="I,Q", comments="")


def _bits_to_int(bits):
    return int("".join("1" if b else "0" for b in bits), 2) if len(bits) else 0


def _int_to_bits(value, width):
    return [(value >> (width - 1 - i)) & 1 for i in range(width)]


def _amplitude_labels(config, amps):
    """Label bits for a flat array of amplitudes."""
    labels = gray_labels(config.qam_bits_per_real)
    return labels[(np.asarray(amps) - 1) // 2].reshape(-1)


def pas_transmit(config, data):
    """Map ``data`` bits (one frame, or frames x bits) to 64-QAM lattice symbols."""
    data = np.asarray(data, dtype=np.uint8)
    single = data.ndim == 1
    frames = np.atleast_2d(data)
    if frames.shape[1] != config.data_bits_per_codeword:
        raise InvalidArgument(
            f"expected {config.data_bits_per_codeword} data bits, got {frames.shape[1]}"
        )
    amp_bits = config.amplitude_bit_count
    info = np.zeros((len(frames), config.fec.info_bits), dtype=np.uint8)
    if config.mode == UNIFORM:
        info[:] = frames
    else:
        k = config.shaping_bits_per_block
        for f, bits in enumerate(frames):
            amps = []
            for b in range(config.blocks_per_codeword):
                index = _bits_to_int(bits[b * k:(b + 1) * k])
                amps.extend(encode_index(config.trellis, index))
            info[f, :amp_bits] = _amplitude_labels(config, amps)
            info[f, amp_bits:] = bits[config.blocks_per_codeword * k:]
    codewords = ldpc_encode(config.fec, info)

    symbols = _codeword_to_symbols(config, codewords)
    return QamSymbolBlock(symbols=symbols[0] if single else symbols, scale=config.scale)


def _codeword_to_symbols(config, codewords):
    amp_bits = config.amplitude_bit_count
    amps = _labels_to_amplitudes(codewords[:, :amp_bits], config.qam_bits_per_real)
    signs = 1 - 2 * codewords[:, amp_bits:].astype(np.int64)
    reals = amps * signs
    return reals[:, 0::2] + 1j * reals[:, 1::2]


def _axis_points(config):
    """Signed normalized amplitudes of one real axis and their (sign, label) bits."""
    m = config.qam_bits_per_real
    levels = np.array(config.alphabet.levels)
    labels = gray_labels(m)
    pts = np.concatenate([levels, -levels]) * config.scale
    bits = np.vstack([
        np.hstack([np.zeros((len(levels), 1), np.uint8), labels]),
        np.hstack([np.ones((len(levels), 1), np.uint8), labels]),
    ])
    return pts, bits


def _axis_llrs(y, noise_variance, config, exact):
    pts, bits = _axis_points(config)
    # per-real noise variance is half the complex variance
    metric = -((y[..., None] - pts) ** 2) / noise_variance
    out = np.empty(y.shape + (bits.shape[1],))
    for b in range(bits.shape[1]):
        zero, one = metric[..., bits[:, b] == 0], metric[..., bits[:, b] == 1]
        if exact:
            out[..., b] = np.logaddexp.reduce(zero, axis=-1) - np.logaddexp.reduce(one, axis=-1)
        else:
            out[..., b] = zero.max(axis=-1) - one.max(axis=-1)
    return out


def llr_demap(symbols, noise_variance, config, exact=False):
    """Bit LLRs per received normalized symbol.

    Returns shape (..., 2m): (sign, label bits) of the in-phase axis followed
    by those of the quadrature axis.  ``noise_variance`` is the complex noise
    variance; priors over points are uniform.  ``exact`` marginalizes with
    log-sum-exp instead of the max-log approximation.
    """
    if not noise_variance > 0:
        raise InvalidArgument(f"noise variance must be positive, got {noise_variance}")
    symbols = np.asarray(symbols)
    li = _axis_llrs(symbols.real, noise_variance, config, exact)
    lq = _axis_llrs(symbols.imag, noise_variance, config, exact)
    return np.concatenate([li, lq], axis=-1)


def codeword_llrs(config, symbols, noise_variance, exact=False):
    """Demap frames of symbols into LLRs in codeword bit order."""
    symbols = np.atleast_2d(symbols)
    m = config.qam_bits_per_real
    frames = len(symbols)
    per = llr_demap(symbols, noise_variance, config, exact)  # (F, S, 2m)
    per_real = per.reshape(frames, -1, m)  # I and Q interleave into real order
    out = np.empty((frames, config.fec.codeword_length))
    amp_bits = config.amplitude_bit_count
    out[:, :amp_bits] = per_real[:, :, 1:].reshape(frames, -1)
    out[:, amp_bits:] = per_real[:, :, 0]
    return out


@dataclass
class ReceiveResult:
    data: np.ndarray
    fec_converged: np.ndarray
    shaper_ok: np.ndarray


def pas_receive(config, noisy, noise_variance, max_iters=50):
    """Demap, decode and deshape one frame or a batch of frames.

    A decoded amplitude block outside the shaping set (or ranked beyond the
    index range) cannot be deshaped; its data bits are zeroed and
    ``shaper_ok`` is False for that frame.
    """
    symbols = noisy.normalized() if isinstance(noisy, QamSymbolBlock) else np.asarray(noisy)
    single = symbols.ndim == 1
    llrs = codeword_llrs(config, symbols, noise_variance)
    dec = ldpc_decode(config.fec, llrs, max_iters=max_iters)
    bits = np.atleast_2d(dec.bits)
    converged = np.atleast_1d(dec.converged)
    amp_bits = config.amplitude_bit_count
    frames = len(bits)
    data = np.zeros((frames, config.data_bits_per_codeword), dtype=np.uint8)
    shaper_ok = np.ones(frames, dtype=bool)

    if config.mode == UNIFORM:
        data[:] = bits[:, : config.fec.info_bits]
    else:
        k, n = config.shaping_bits_per_block, config.shaping_blocklength
        m = config.qam_bits_per_real
        amps = _labels_to_amplitudes(bits[:, :amp_bits], m)
        data[:, config.blocks_per_codeword * k:] = bits[:, amp_bits:config.fec.info_bits]
        limit = 1 << k
        for f in range(frames):
            for b in range(config.blocks_per_codeword):
                seq = amps[f, b * n:(b + 1) * n].tolist()
                try:
                    index = decode_sequence(config.trellis, seq)
                except InvalidArgument:
                    shaper_ok[f] = False
                    continue
                if index >= limit:
                    shaper_ok[f] = False
                    continue
                data[f, b * k:(b + 1) * k] = _int_to_bits(index, k)

    if single:
        return ReceiveResult(data=data[0], fec_converged=bool(converged[0]), shaper_ok=bool(shaper_ok[0]))
    return ReceiveResult(data=data, fec_converged=converged, shaper_ok=shaper_ok)


def _labels_to_amplitudes(label_bits, m):
    frames = len(label_bits)
    labels = label_bits.reshape(frames, -1, m - 1).astype(np.int64)
    gray = labels @ (1 << np.arange(m - 2, -1, -1))
    # invert the reflected Gray code
    index = gray.copy()
    shift = gray >> 1
    while shift.any():
        index ^= shift
        shift >>= 1
    return 2 * index + 1
