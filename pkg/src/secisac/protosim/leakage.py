"""Exact message leakage to the eavesdropper at enumerable scale."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import reduce

import numpy as np

from ..probcore import InvalidInputError, Seed, as_kernel, as_pmf, rounded_counts, uniform
from .codebook import constant_composition_words

ENUMERATION_LIMIT = 10**8


@dataclass(frozen=True, eq=False)
class TinyLeakageConfig:
    """A fixed number of blocks, each carrying a padded message over ``eve_channel``.

    Per block the message has ``message_bits`` bits; its low ``key_bits`` are
    XORed with a fresh uniform key and ``local_bits`` of uniform randomness
    select among the words of each padded message.
    """

    eve_channel: np.ndarray
    message_bits: int = 2
    key_bits: int = 0
    local_bits: int = 0
    block_len: int = 8
    blocks: int = 1
    composition: np.ndarray = field(default_factory=lambda: uniform(2))
    seed: Seed = field(default_factory=lambda: Seed(0))

    def __post_init__(self):
        w = as_kernel(self.eve_channel)
        object.__setattr__(self, "eve_channel", w)
        object.__setattr__(self, "composition", as_pmf(self.composition))
        if self.composition.size != w.shape[0]:
            raise InvalidInputError("composition and channel input alphabets differ")
        if not 1 <= self.block_len <= 8:
            raise InvalidInputError(f"block_len must lie in [1, 8], got {self.block_len}")
        if not 0 <= self.message_bits <= 2:
            raise InvalidInputError("at most 4 messages per block")
        if not 0 <= self.key_bits <= self.message_bits:
            raise InvalidInputError("key_bits must lie in [0, message_bits]")
        if self.local_bits < 0 or self.blocks < 1:
            raise InvalidInputError("local_bits >= 0 and blocks >= 1 required")
        terms = (
            2 ** ((self.message_bits + self.key_bits + self.local_bits) * self.blocks)
            * w.shape[1] ** (self.block_len * self.blocks)
        )
        if terms > ENUMERATION_LIMIT:
            raise InvalidInputError(f"enumeration needs {terms} terms, above the limit {ENUMERATION_LIMIT}")

    def words(self) -> np.ndarray:
        """Codewords indexed by ``padded_message * 2**local_bits + r``."""
        counts = rounded_counts(self.composition, self.block_len)
        size = 2 ** (self.message_bits + self.local_bits)
        return constant_composition_words(counts, size, self.seed.generator())


def _sequence_likelihoods(words: np.ndarray, w: np.ndarray) -> np.ndarray:
    """``P(y^L | word)`` for every word and every output sequence (row-major in y)."""
    length = words.shape[1]
    out = np.ones((words.shape[0], 1))
    for t in range(length):
        out = (out[:, :, None] * w[words[:, t]][:, None, :]).reshape(words.shape[0], -1)
    return out


def block_channel(cfg: TinyLeakageConfig) -> np.ndarray:
    """``P(y^L | message)`` for one block, marginalising key and local randomness."""
    words = cfg.words()
    lik = _sequence_likelihoods(words, cfg.eve_channel)
    nm, nk, nr = 2**cfg.message_bits, 2**cfg.key_bits, 2**cfg.local_bits
    out = np.zeros((nm, lik.shape[1]))
    for m in range(nm):
        for k in range(nk):
            for r in range(nr):
                out[m] += lik[(m ^ k) * nr + r]
    return out / (nk * nr)


def _mutual_information(chan: np.ndarray) -> float:
    """``I(W; Y)`` in nats for a uniform ``W`` and row-stochastic ``chan[w, y]``."""
    py = chan.mean(axis=0)
    total = 0.0
    for row in chan:
        mask = row > 0
        total += float(np.sum(row[mask] * (np.log(row[mask]) - np.log(py[mask]))))
    return max(total / chan.shape[0], 0.0)


def estimate_leakage(cfg: TinyLeakageConfig) -> float:
    """Exact ``I(W; Y2^tau)`` in nats by enumerating the joint law over all blocks."""
    per_block = block_channel(cfg)
    joint = reduce(np.kron, [per_block] * cfg.blocks)
    return _mutual_information(joint)


def leakage_monte_carlo(cfg: TinyLeakageConfig, samples: int, seed: Seed) -> tuple[float, float]:
    """Sample-mean estimate of the leakage and its standard error.

    Each sample draws message, key, randomness and outputs, then scores the
    exact information density ``ln P(y|w) - ln P(y)``.
    """
    rng = seed.generator()
    per_block = block_channel(cfg)
    py = per_block.mean(axis=0)
    words = cfg.words()
    w = cfg.eve_channel
    nm, nk, nr = 2**cfg.message_bits, 2**cfg.key_bits, 2**cfg.local_bits
    dens = np.zeros(samples)
    base = w.shape[1] ** np.arange(cfg.block_len - 1, -1, -1)
    for _ in range(cfg.blocks):
        m = rng.integers(nm, size=samples)
        k = rng.integers(nk, size=samples)
        r = rng.integers(nr, size=samples)
        x = words[(m ^ k) * nr + r]
        cdf = np.cumsum(w, axis=1)
        cdf[:, -1] = 1.0
        y = np.minimum((rng.random(x.shape)[..., None] >= cdf[x]).sum(axis=-1), w.shape[1] - 1)
        yi = y @ base
        dens += np.log(per_block[m, yi]) - np.log(py[yi])
    return float(dens.mean()), float(dens.std(ddof=1) / math.sqrt(samples))
