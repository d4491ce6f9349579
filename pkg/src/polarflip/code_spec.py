"""Polar code definition: frozen-set construction, encoding, and CRC handling.

A code instance is a :class:`CodeSpec`: block length ``N = 2**n``, ``K``
information bits, ``C`` CRC remainder bits, a frozen mask over the ``N``
synthetic channels, and the CRC generator polynomial.  The ``K + C``
non-frozen positions carry the CRC-extended message in ascending index
order; frozen positions are fixed to zero.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

# x^8 + x^2 + x + 1, coefficients MSB first.
CRC8_DEFAULT = (1, 0, 0, 0, 0, 0, 1, 1, 1)

# Fit constants for the mean-LLR transfer function of the check-node side
# of the density-evolution recursion (valid below x = 10; an asymptotic
# expansion is used above).
_GA_ALPHA = -0.4527
_GA_BETA = 0.86
_GA_GAMMA = 0.0218


def _as_bits(bits) -> np.ndarray:
    out = np.asarray(bits, dtype=np.uint8)
    if out.ndim != 1:
        raise ValueError("bit vector must be one-dimensional")
    if np.any(out > 1):
        raise ValueError("bit vector entries must be 0 or 1")
    return out


# ---------------------------------------------------------------------------
# Construction: Gaussian-approximation density evolution
# ---------------------------------------------------------------------------

def _ln_phi(x: np.ndarray) -> np.ndarray:
    """log of the mean-to-E[tanh] proxy used by the density-evolution fit."""
    x = np.asarray(x, dtype=np.float64)
    out = np.empty_like(x)
    small = x <= 10.0
    xs = x[small]
    out[small] = _GA_ALPHA * xs**_GA_BETA + _GA_GAMMA
    xl = x[~small]
    out[~small] = (
        0.5 * (np.log(np.pi) - np.log(xl)) - xl / 4.0 + np.log1p(-10.0 / (7.0 * xl))
    )
    return out


_LN_PHI_AT_10 = _GA_ALPHA * 10.0**_GA_BETA + _GA_GAMMA


def _ln_phi_inv(y: np.ndarray) -> np.ndarray:
    y = np.asarray(y, dtype=np.float64)
    out = np.empty_like(y)
    analytic = y >= _LN_PHI_AT_10
    ya = y[analytic]
    out[analytic] = ((_GA_GAMMA - ya) / (-_GA_ALPHA)) ** (1.0 / _GA_BETA)
    yb = y[~analytic]
    if yb.size:
        lo = np.full_like(yb, 10.0)
        hi = np.maximum(20.0, -4.0 * yb)  # ln phi(x) < -x/4, so phi(hi) < target
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            too_high = _ln_phi(mid) > yb
            lo = np.where(too_high, mid, lo)
            hi = np.where(too_high, hi, mid)
        out[~analytic] = 0.5 * (lo + hi)
    return out


def _check_node_update(means: np.ndarray) -> np.ndarray:
    """Mean-LLR degradation through the min-magnitude (f) branch."""
    t = _ln_phi(means)
    # target = ln(1 - (1 - phi)^2) = ln(phi * (2 - phi)), stable for tiny phi
    target = t + np.log(2.0 - np.exp(t))
    return _ln_phi_inv(target)


def channel_llr_means(n: int, design_snr_db: float, rate: float) -> np.ndarray:
    """Mean decision LLR of each synthetic channel under density evolution.

    The channel LLR of BPSK over AWGN has mean ``2 / sigma**2`` for the
    all-zero codeword; the recursion halves reliability through the
    f-branch and doubles it through the g-branch, following the decoding
    tree top-down (index bit 0 = f, 1 = g, most significant bit first).
    """
    if rate <= 0:
        raise ValueError("rate must be positive")
    mu = 4.0 * rate * 10.0 ** (design_snr_db / 10.0)
    means = np.array([mu], dtype=np.float64)
    for _ in range(n):
        nxt = np.empty(2 * means.size, dtype=np.float64)
        nxt[0::2] = _check_node_update(means)
        nxt[1::2] = 2.0 * means
        means = nxt
    return means


def construct_frozen_set(n: int, non_frozen_count: int, design_snr_db: float) -> np.ndarray:
    """Build the length-``2**n`` frozen mask (True = frozen).

    The ``non_frozen_count`` most reliable synthetic channels under
    density evolution at ``design_snr_db`` (Eb/N0, rate
    ``non_frozen_count / N``) are left open; ties go to the lower index.
    """
    N = 1 << n
    if not 0 <= non_frozen_count <= N:
        raise ValueError(f"non_frozen_count must be in [0, {N}], got {non_frozen_count}")
    mask = np.ones(N, dtype=bool)
    if non_frozen_count == 0:
        return mask
    means = channel_llr_means(n, design_snr_db, rate=non_frozen_count / N)
    order = np.lexsort((np.arange(N), -means))
    mask[order[:non_frozen_count]] = False
    return mask


# ---------------------------------------------------------------------------
# Encoding
# ---------------------------------------------------------------------------

def polar_transform(u) -> np.ndarray:
    """Multiply ``u`` by the n-fold Kronecker power of [[1,0],[1,1]] over GF(2)."""
    x = _as_bits(u).copy()
    N = x.size
    if N & (N - 1):
        raise ValueError(f"length must be a power of two, got {N}")
    h = 1
    while h < N:
        view = x.reshape(-1, 2 * h)
        view[:, :h] ^= view[:, h:]
        h *= 2
    return x


def polar_transform_many(u_rows) -> np.ndarray:
    """Row-wise :func:`polar_transform` for a (frames, N) bit matrix."""
    x = np.array(u_rows, dtype=np.uint8, copy=True)
    if x.ndim != 2:
        raise ValueError("expected a 2-D bit matrix")
    rows, N = x.shape
    if N == 0 or N & (N - 1):
        raise ValueError(f"row length must be a power of two, got {N}")
    h = 1
    while h < N:
        view = x.reshape(rows, -1, 2 * h)
        view[:, :, :h] ^= view[:, :, h:]
        h *= 2
    return x


def encode(message_with_crc, spec: "CodeSpec") -> np.ndarray:
    """Map K+C payload bits onto the non-frozen positions and polar-encode."""
    bits = _as_bits(message_with_crc)
    if bits.size != spec.k + spec.c:
        raise ValueError(
            f"payload must have {spec.k + spec.c} bits, got {bits.size}"
        )
    u = np.zeros(spec.block_length, dtype=np.uint8)
    u[spec.unfrozen_indices] = bits
    return polar_transform(u)


# ---------------------------------------------------------------------------
# CRC over GF(2)
# ---------------------------------------------------------------------------

def _validate_poly(poly) -> tuple[int, ...]:
    poly = tuple(int(b) for b in poly)
    if not poly or any(b not in (0, 1) for b in poly):
        raise ValueError("CRC polynomial must be a non-empty 0/1 sequence")
    if poly[0] != 1:
        raise ValueError("CRC polynomial must have leading coefficient 1")
    if poly[-1] != 1:
        raise ValueError("CRC polynomial must have a nonzero constant term")
    return poly


@lru_cache(maxsize=None)
def _power_remainders(length: int, poly: tuple[int, ...]) -> np.ndarray:
    """Row j = remainder of x^(length-1-j) modulo ``poly``, as C bits MSB first.

    CRC attach/check reduce to GF(2) matrix products against this table,
    which keeps the per-frame cost flat in the simulator hot loop.
    """
    c = len(poly) - 1
    reduction = np.array(poly[1:], dtype=np.uint8)
    state = np.zeros(c, dtype=np.uint8)
    state[-1] = 1  # x^0
    rows = np.empty((length, c), dtype=np.uint8)
    for d in range(length):
        rows[length - 1 - d] = state
        carry = state[0]
        state = np.roll(state, -1)
        state[-1] = 0
        if carry:
            state ^= reduction
    rows.setflags(write=False)
    return rows


def crc_attach(info, poly) -> np.ndarray:
    """Append the C-bit remainder of ``info * x^C`` divided by ``poly``."""
    poly = _validate_poly(poly)
    bits = _as_bits(info)
    c = len(poly) - 1
    if c == 0:
        return bits.copy()
    table = _power_remainders(bits.size + c, poly)
    remainder = (bits @ table[: bits.size].astype(np.int64)) & 1
    return np.concatenate([bits, remainder.astype(np.uint8)])


def crc_attach_many(info_rows, poly) -> np.ndarray:
    """Row-wise :func:`crc_attach` for an (frames, K) bit matrix."""
    poly = _validate_poly(poly)
    rows = np.asarray(info_rows, dtype=np.uint8)
    if rows.ndim != 2:
        raise ValueError("expected a 2-D bit matrix")
    c = len(poly) - 1
    if c == 0:
        return rows.copy()
    table = _power_remainders(rows.shape[1] + c, poly)
    remainders = (rows @ table[: rows.shape[1]].astype(np.int64)) & 1
    return np.concatenate([rows, remainders.astype(np.uint8)], axis=1)


def crc_check(word, poly) -> bool:
    """True iff ``word`` is divisible by ``poly`` over GF(2)."""
    poly = _validate_poly(poly)
    bits = _as_bits(word)
    c = len(poly) - 1
    if c == 0:
        return True
    if bits.size < c:
        raise ValueError("word shorter than the CRC remainder")
    table = _power_remainders(bits.size, poly)
    return not ((bits @ table.astype(np.int64)) & 1).any()


# ---------------------------------------------------------------------------
# Code definition
# ---------------------------------------------------------------------------

@dataclass(eq=False)
class CodeSpec:
    """Static definition of one polar code instance.

    Attributes
    ----------
    n : int
        Block-length exponent; ``N = 2**n``.
    k : int
        Number of information bits.
    c : int
        Number of CRC remainder bits (0 disables the CRC).
    frozen_mask : ndarray of bool, length N
        True marks a frozen position.
    crc_poly : tuple of int
        Generator polynomial, coefficients MSB first, degree ``c``.
    design_snr_db : float
        Eb/N0 target the frozen set was constructed for.
    """

    n: int
    k: int
    c: int
    frozen_mask: np.ndarray
    crc_poly: tuple[int, ...] = CRC8_DEFAULT
    design_snr_db: float = 2.5
    unfrozen_indices: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        N = 1 << self.n
        if self.k < 1 or self.c < 0 or self.k + self.c > N:
            raise ValueError(f"need 1 <= K and K + C <= {N}")
        self.frozen_mask = np.asarray(self.frozen_mask, dtype=bool)
        if self.frozen_mask.shape != (N,):
            raise ValueError(f"frozen_mask must have length {N}")
        frozen_count = int(self.frozen_mask.sum())
        if frozen_count != N - (self.k + self.c):
            raise ValueError(
                f"frozen_mask marks {frozen_count} positions, expected {N - self.k - self.c}"
            )
        self.crc_poly = _validate_poly(self.crc_poly)
        if len(self.crc_poly) - 1 != self.c:
            raise ValueError(
                f"crc_poly has degree {len(self.crc_poly) - 1}, expected {self.c}"
            )
        self.unfrozen_indices = np.flatnonzero(~self.frozen_mask)

    @property
    def block_length(self) -> int:
        return 1 << self.n

    @property
    def payload_bits(self) -> int:
        """Non-frozen bit count K + C."""
        return self.k + self.c

    def fingerprint(self) -> str:
        """Short stable identifier over every code-defining field."""
        h = hashlib.sha256()
        h.update(f"{self.n},{self.k},{self.c},{self.design_snr_db},".encode())
        h.update(bytes(self.crc_poly))
        h.update(np.packbits(self.frozen_mask).tobytes())
        return h.hexdigest()[:12]


def default_crc_poly(c: int) -> tuple[int, ...]:
    """Pinned polynomial for a given remainder width."""
    if c == 0:
        return (1,)
    if c == 8:
        return CRC8_DEFAULT
    # x^C + x + 1: valid degree-C polynomial with nonzero constant term
    return (1,) + (0,) * (c - 2) + (1, 1) if c >= 2 else (1, 1)


def make_code(
    N: int,
    K: int,
    crc_bits: int = 8,
    design_snr_db: float = 2.5,
    crc_poly=None,
    frozen_mask=None,
) -> CodeSpec:
    """Convenience constructor for PC(N, K) with a ``crc_bits``-bit CRC."""
    if N < 2 or N & (N - 1):
        raise ValueError(f"N must be a power of two >= 2, got {N}")
    n = N.bit_length() - 1
    if crc_poly is None:
        crc_poly = default_crc_poly(crc_bits)
    if frozen_mask is None:
        frozen_mask = construct_frozen_set(n, K + crc_bits, design_snr_db)
    return CodeSpec(
        n=n,
        k=K,
        c=crc_bits,
        frozen_mask=frozen_mask,
        crc_poly=crc_poly,
        design_snr_db=design_snr_db,
    )


# ---------------------------------------------------------------------------
# Frozen-mask files: header "index,frozen", one "index,0|1" row per position
# ---------------------------------------------------------------------------

def save_frozen_mask(out, mask, meta=None) -> None:
    """``out`` may be a path or a writable file object; ``meta`` entries
    are emitted as leading ``# key=value`` comment lines."""
    mask = np.asarray(mask, dtype=bool)

    def _emit(fh):
        for key, value in (meta or {}).items():
            fh.write(f"# {key}={value}\n")
        fh.write("index,frozen\n")
        for i, bit in enumerate(mask):
            fh.write(f"{i},{int(bit)}\n")

    if hasattr(out, "write"):
        _emit(out)
    else:
        with open(out, "w", encoding="ascii") as fh:
            _emit(fh)


def load_frozen_mask(path) -> np.ndarray:
    with open(path, encoding="ascii") as fh:
        lines = [ln.strip() for ln in fh if ln.strip() and not ln.startswith("#")]
    if not lines or lines[0] != "index,frozen":
        raise ValueError(f"unexpected frozen-mask header: {lines[0] if lines else None!r}")
    entries = {}
    for line in lines[1:]:
        idx_s, bit_s = line.split(",")
        entries[int(idx_s)] = int(bit_s)
    if sorted(entries) != list(range(len(entries))):
        raise ValueError("frozen-mask file must cover indices 0..N-1 exactly once")
    return np.array([bool(entries[i]) for i in range(len(entries))])
