"""BPSK over AWGN: modulation, noise, and LLR demapping.

Noise uses counter-based per-frame substreams: the generator for frame
``i`` is keyed by ``(master_seed, i)``, so any subset of frames can be
regenerated bit-exactly in any order — the property that makes
frame-parallel campaigns independent of worker scheduling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# Stand-in LLR magnitude for a noiseless channel: far beyond any sum the
# decoding tree can accumulate at practical block lengths.
LLR_SAT = 1.0e6

_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class ChannelConfig:
    """Eb/N0 operating point, code rate used for noise normalization,
    and the master RNG seed."""

    ebn0_db: float
    rate: float
    seed: int

    def __post_init__(self):
        if not math.isfinite(self.ebn0_db):
            raise ValueError("ebn0_db must be finite")
        if not 0.0 < self.rate <= 1.0:
            raise ValueError(f"rate must be in (0, 1], got {self.rate}")

    @property
    def sigma(self) -> float:
        return ebn0_to_sigma(self.ebn0_db, self.rate)


def modulate(x) -> np.ndarray:
    """BPSK: bit 0 -> +1, bit 1 -> -1."""
    bits = np.asarray(x, dtype=np.float64)
    if np.any((bits != 0) & (bits != 1)):
        raise ValueError("modulate expects a 0/1 bit vector")
    return 1.0 - 2.0 * bits


def ebn0_to_sigma(ebn0_db: float, rate: float) -> float:
    """Noise standard deviation for unit symbol energy at the given Eb/N0."""
    if rate <= 0:
        raise ValueError("rate must be positive")
    return math.sqrt(1.0 / (2.0 * rate * 10.0 ** (ebn0_db / 10.0)))


def transmit(s, sigma: float, rng: np.random.Generator) -> np.ndarray:
    """Add i.i.d. Gaussian noise of standard deviation ``sigma``."""
    if sigma < 0:
        raise ValueError("sigma must be >= 0")
    s = np.asarray(s, dtype=np.float64)
    if sigma == 0:
        return s.copy()
    return s + sigma * rng.standard_normal(s.size)


def demap_llr(y, sigma: float) -> np.ndarray:
    """Channel LLR 2y/sigma^2; positive favors bit 0."""
    if sigma <= 0:
        raise ValueError("sigma must be positive; use saturated_llrs for sigma=0")
    return (2.0 / (sigma * sigma)) * np.asarray(y, dtype=np.float64)


def saturated_llrs(x) -> np.ndarray:
    """Noiseless-channel LLRs: +LLR_SAT for bit 0, -LLR_SAT for bit 1."""
    return LLR_SAT * modulate(x)


def frame_rng(seed: int, frame_index: int) -> np.random.Generator:
    """Independent substream for one frame, keyed by (seed, frame index)."""
    if frame_index < 0:
        raise ValueError("frame_index must be >= 0")
    return np.random.Generator(
        np.random.Philox(key=[seed & _MASK64, frame_index & _MASK64])
    )


def channel_llrs(codeword, config: ChannelConfig, frame_index: int, rng=None) -> np.ndarray:
    """Modulate, add noise for this frame's substream, and demap.

    A pre-built ``rng`` may be supplied when the caller draws other
    per-frame randomness (e.g. the message) from the same substream.
    """
    s = modulate(codeword)
    sigma = config.sigma
    if sigma == 0:
        return LLR_SAT * s
    if rng is None:
        rng = frame_rng(config.seed, frame_index)
    return demap_llr(transmit(s, sigma, rng), sigma)
