"""IEEE 802.11n quasi-cyclic LDPC codes (n = 648) with a layered min-sum decoder.

Base-matrix files: first line ``z nrows ncols``, then ``nrows`` lines of
``ncols`` whitespace-separated integers, -1 for an all-zero block and
``0 <= s < z`` for the identity cyclically shifted by ``s`` (row ``r`` of the
block has its one in column ``(r + s) mod z``).

LLR convention: positive means bit 0.
"""

from dataclasses import dataclass, field
from functools import cached_property
from fractions import Fraction
from importlib import resources

import os

import numba
import numpy as np
from numba import njit, prange

from .errors import ConfigurationError, InvalidArgument

CODE_FILES = {
    Fraction(2, 3): "ieee80211n_n648_r23.txt",
    Fraction(5, 6): "ieee80211n_n648_r56.txt",
}

# skip the TBB probe, which only warns on hosts with an old TBB
numba.config.THREADING_LAYER_PRIORITY = ["omp", "workqueue", "tbb"]

DEFAULT_MAX_ITERS = 50
DEFAULT_SCALING = 0.75


def parse_rate(rate):
    if isinstance(rate, str):
        rate = Fraction(rate.strip())
    elif isinstance(rate, float):
        rate = Fraction(rate).limit_denominator(12)
    return Fraction(rate)


@dataclass(frozen=True, eq=False)
class LdpcCode:
    rate: Fraction
    z: int
    base_matrix: np.ndarray
    parity_check: np.ndarray = field(repr=False)
    layers: tuple = field(repr=False)  # per base row: (z, row degree) column indices

    @cached_property
    def layer_degrees(self):
        return np.array([c.shape[1] for c in self.layers], dtype=np.int64)

    @cached_property
    def packed_layers(self):
        """Layers padded to a common degree as one (layers, z, dmax) array."""
        dmax = max(c.shape[1] for c in self.layers)
        out = np.full((len(self.layers), self.z, dmax), -1, dtype=np.int64)
        for i, c in enumerate(self.layers):
            out[i, :, : c.shape[1]] = c
        return out

    @property
    def codeword_length(self):
        return self.parity_check.shape[1]

    @property
    def parity_bits(self):
        return self.parity_check.shape[0]

    @property
    def info_bits(self):
        return self.codeword_length - self.parity_bits


def read_base_matrix(text):
    lines = [ln.split() for ln in text.strip().splitlines() if ln.strip()]
    try:
        z, nrows, ncols = (int(v) for v in lines[0])
        base = np.array([[int(v) for v in row] for row in lines[1:]], dtype=np.int64)
    except (ValueError, IndexError) as exc:
        raise ConfigurationError(f"malformed base-matrix file: {exc}") from None
    if base.shape != (nrows, ncols):
        raise ConfigurationError(
            f"malformed base-matrix file: header says {nrows}x{ncols}, body is {base.shape}"
        )
    if ((base < -1) | (base >= z)).any():
        raise ConfigurationError(f"malformed base-matrix file: shift outside [-1, {z})")
    return z, base


def expand(base, z):
    rows, cols = base.shape
    h = np.zeros((rows * z, cols * z), dtype=np.uint8)
    r = np.arange(z)
    for i in range(rows):
        for j in range(cols):
            s = base[i, j]
            if s >= 0:
                h[i * z + r, j * z + (r + s) % z] = 1
    return h


def _check_encodable(base):
    """Require the 802.11n parity layout: a weight-3 column then a dual diagonal."""
    mb, nb = base.shape
    kb = nb - mb
    first = base[:, kb]
    hits = np.flatnonzero(first >= 0)
    ok = len(hits) == 3 and hits[0] == 0 and hits[-1] == mb - 1 and first[0] == first[-1]
    for i in range(1, mb):
        col = base[:, kb + i]
        ok = ok and col[i - 1] == 0 and col[i] == 0 and (col >= 0).sum() == 2
    if not ok:
        raise ConfigurationError("base matrix lacks the dual-diagonal parity structure")


def load_code(rate, path=None):
    rate = parse_rate(rate)
    if path is None:
        if rate not in CODE_FILES:
            raise InvalidArgument(f"unsupported code rate {rate}; choose 2/3 or 5/6")
        text = resources.files("klss.data").joinpath(CODE_FILES[rate]).read_text()
    else:
        with open(path) as fh:
            text = fh.read()
    z, base = read_base_matrix(text)
    _check_encodable(base)
    h = expand(base, z)
    actual = Fraction(h.shape[1] - h.shape[0], h.shape[1])
    if actual != rate:
        raise ConfigurationError(f"base matrix has rate {actual}, expected {rate}")

    r = np.arange(z)
    layers = []
    for i in range(base.shape[0]):
        blocks = [(j, s) for j, s in enumerate(base[i]) if s >= 0]
        layers.append(np.stack([j * z + (r + s) % z for j, s in blocks], axis=1))
    return LdpcCode(rate=rate, z=z, base_matrix=base, parity_check=h, layers=tuple(layers))


def _shift(x, s):
    # (P^s x)[r] = x[(r + s) mod z]
    return np.roll(x, -int(s), axis=-1)


def ldpc_encode(code, info):
    """Systematic encoding, info bits first.  Accepts (k,) or (frames, k)."""
    info = np.asarray(info, dtype=np.uint8)
    single = info.ndim == 1
    u = np.atleast_2d(info)
    if u.shape[1] != code.info_bits:
        raise InvalidArgument(f"info length {u.shape[1]} != {code.info_bits}")
    base, z = code.base_matrix, code.z
    mb, nb = base.shape
    kb = nb - mb
    ub = u.reshape(len(u), kb, z)

    lam = np.zeros((len(u), mb, z), dtype=np.uint8)
    for i in range(mb):
        for j in range(kb):
            if base[i, j] >= 0:
                lam[:, i] ^= _shift(ub[:, j], base[i, j])

    pcol = base[:, kb]
    mid = [i for i in range(1, mb - 1) if pcol[i] >= 0][0]
    # the two equal outer shifts cancel in the sum of all block rows
    p = [_shift(np.bitwise_xor.reduce(lam, axis=1), -pcol[mid])]
    p0_top = _shift(p[0], pcol[0])
    p.append(lam[:, 0] ^ p0_top)
    for i in range(1, mb - 1):
        nxt = lam[:, i] ^ p[i]
        if pcol[i] >= 0:
            nxt ^= _shift(p[0], pcol[i])
        p.append(nxt)

    cw = np.concatenate([u] + p, axis=1)
    return cw[0] if single else cw


def syndrome(code, bits):
    bits = np.asarray(bits, dtype=np.uint8)
    return (bits @ code.parity_check.T.astype(np.int64)) % 2


@dataclass
class DecodeResult:
    bits: np.ndarray
    converged: np.ndarray | bool
    iterations: np.ndarray | int


@njit(cache=True)
def _decode_frame(lch, cols, degs, max_iters, scaling, out, msg):
    n_layers, z, _ = cols.shape
    post = lch.copy()
    msg[:] = 0.0
    for it in range(1, max_iters + 1):
        for layer in range(n_layers):
            d = degs[layer]
            for r in range(z):
                min1 = np.inf
                min2 = np.inf
                first = -1
                parity = False
                for t in range(d):
                    v = cols[layer, r, t]
                    q = post[v] - msg[layer, r, t]
                    a = abs(q)
                    if q < 0:
                        parity = not parity
                    if a < min1:
                        min2 = min1
                        min1 = a
                        first = t
                    elif a < min2:
                        min2 = a
                for t in range(d):
                    v = cols[layer, r, t]
                    q = post[v] - msg[layer, r, t]
                    m = min2 if t == first else min1
                    neg = (q < 0) != parity
                    new = -scaling * m if neg else scaling * m
                    msg[layer, r, t] = new
                    post[v] = q + new

        ok = True
        for v in range(post.shape[0]):
            # an exactly-zero posterior is an erasure, never a decision
            if post[v] == 0.0:
                ok = False
            out[v] = 1 if post[v] < 0 else 0
        if ok:
            for layer in range(n_layers):
                for r in range(z):
                    acc = 0
                    for t in range(degs[layer]):
                        acc ^= out[cols[layer, r, t]]
                    if acc:
                        ok = False
                        break
                if not ok:
                    break
        if ok:
            return True, it
    return False, max_iters


@njit(parallel=True, cache=True)
def _decode_batch(lch, cols, degs, max_iters, scaling, bits, converged, iterations):
    n_layers, z, dmax = cols.shape
    for f in prange(lch.shape[0]):
        msg = np.empty((n_layers, z, dmax))
        ok, it = _decode_frame(lch[f], cols, degs, max_iters, scaling, bits[f], msg)
        converged[f] = ok
        iterations[f] = it


def set_threads(count=None):
    """Limit decoder threads; ``None`` reads KLSS_THREADS from the environment."""
    if count is None:
        count = os.environ.get("KLSS_THREADS")
        if not count:
            return numba.get_num_threads()
    count = max(1, min(int(count), numba.config.NUMBA_NUM_THREADS))
    numba.set_num_threads(count)
    return count


def ldpc_decode(code, llrs, max_iters=DEFAULT_MAX_ITERS, scaling=DEFAULT_SCALING):
    """Layered normalized min-sum over the block rows of the base matrix.

    Accepts (n,) or (frames, n); frames are decoded in parallel.  Each frame
    stops as soon as its hard decisions satisfy every check.
    """
    if max_iters < 1:
        raise InvalidArgument("max_iters must be >= 1")
    llrs = np.asarray(llrs, dtype=np.float64)
    single = llrs.ndim == 1
    lch = np.ascontiguousarray(np.atleast_2d(llrs))
    if lch.shape[1] != code.codeword_length:
        raise InvalidArgument(f"expected {code.codeword_length} LLRs, got {lch.shape[1]}")
    frames = len(lch)
    bits = np.zeros((frames, code.codeword_length), dtype=np.uint8)
    converged = np.zeros(frames, dtype=np.bool_)
    iterations = np.zeros(frames, dtype=np.int64)
    _decode_batch(lch, code.packed_layers, code.layer_degrees, int(max_iters),
                  float(scaling), bits, converged, iterations)
    if single:
        return DecodeResult(bits=bits[0], converged=bool(converged[0]), iterations=int(iterations[0]))
    return DecodeResult(bits=bits, converged=converged, iterations=iterations)
