"""Constant-composition codebooks indexed by (message, bin, local randomness)."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..chanfam import StateChannelFamily, universal_input
from ..probcore import InvalidInputError, Seed, as_pmf, rounded_counts
from ..region import InputPolicy, r1_r2_rkey

SCHEMES = ("resolvability", "otp")
# stream ids above every chunk id, so codebook draws never reuse a trial stream
_CODEBOOK_STREAM = 2**62
_SIGNAL_STREAM = 2**62 + 2**40


@dataclass(frozen=True, eq=False)
class Codebook:
    """Words of one constant composition, flat-indexed by ``(m * |n| + n) * |r1| + r1``.

    ``requested_dims`` are the sizes before the cap was applied; ``capped`` is
    true when they differ from ``index_dims``.
    """

    block_len: int
    composition: np.ndarray
    counts: np.ndarray
    index_dims: tuple
    words: np.ndarray
    requested_dims: tuple

    @property
    def size(self) -> int:
        return self.words.shape[0]

    @property
    def capped(self) -> bool:
        return tuple(self.index_dims) != tuple(self.requested_dims)

    def index(self, m, n, r1):
        _, dn, dr = self.index_dims
        return (np.asarray(m) * dn + np.asarray(n)) * dr + np.asarray(r1)

    def split(self, idx):
        _, dn, dr = self.index_dims
        idx = np.asarray(idx)
        return idx // (dn * dr), (idx // dr) % dn, idx % dr


def _dim(log_size: float) -> int:
    # tolerate exp() round-off just above an integer
    return max(1, math.ceil(math.exp(log_size) - 1e-9))


def capped_dims(log_sizes, cap: int) -> tuple[tuple, tuple]:
    """Per-index sizes ``ceil(exp(.))`` and their proportionally shrunk version under ``cap``."""
    if cap < 2:
        raise InvalidInputError(f"codebook cap must be at least 2, got {cap}")
    want = tuple(_dim(v) for v in log_sizes)
    if math.prod(want) <= cap:
        return want, want
    logs = [math.log(d) for d in want]
    scale = math.log(cap) / sum(logs)
    dims = [max(1, math.floor(math.exp(scale * v) + 1e-9)) for v in logs]
    while math.prod(dims) > cap:  # floor round-off guard
        i = int(np.argmax(dims))
        dims[i] -= 1
    return tuple(dims), want


def type_class_log_size(counts) -> float:
    total = int(np.sum(counts))
    return math.lgamma(total + 1) - sum(math.lgamma(int(c) + 1) for c in counts)


def constant_composition_words(counts, size: int, rng: np.random.Generator) -> np.ndarray:
    """``size`` random permutations of the type sequence, distinct whenever the type class allows."""
    counts = np.asarray(counts, dtype=np.int64)
    base = np.repeat(np.arange(counts.size, dtype=np.int64), counts)
    words = rng.permuted(np.tile(base, (size, 1)), axis=1)
    distinct_possible = type_class_log_size(counts) >= math.log(size) - 1e-12
    if distinct_possible and size > 1:
        for _ in range(1000):
            _, first = np.unique(words, axis=0, return_index=True)
            if first.size == size:
                break
            dup = np.setdiff1d(np.arange(size), first)
            words[dup] = rng.permuted(np.tile(base, (dup.size, 1)), axis=1)
    return words


def build_codebook(type_p, block_len: int, rates_triple, cap: int, seed: Seed) -> Codebook:
    """Draw a constant-composition codebook with index sizes ``ceil(exp(rate * block_len))``.

    Rates are in nats.  When the product of the three sizes exceeds ``cap``
    every size is shrunk by the same power so the product fits.
    """
    p = as_pmf(type_p)
    if block_len < p.size:
        raise InvalidInputError(f"block_len {block_len} shorter than the input alphabet {p.size}")
    rates = tuple(float(r) for r in rates_triple)
    if len(rates) != 3 or any(r < 0 or not math.isfinite(r) for r in rates):
        raise InvalidInputError(f"rates_triple must be three finite non-negative rates, got {rates_triple}")
    dims, want = capped_dims([r * block_len for r in rates], cap)
    counts = rounded_counts(p, block_len)
    words = constant_composition_words(counts, math.prod(dims), seed.generator())
    words.setflags(write=False)
    return Codebook(block_len, p, counts, dims, words, want)


def rate_triple(fam: StateChannelFamily, policy: InputPolicy, s: int, scheme: str) -> tuple:
    """Index rates (message, bin, local randomness) for state ``s`` in nats.

    The resolvability scheme splits ``R2`` as ``(R1 + R_key - R2)^+``,
    ``(R2 - R_key)^+``, ``(R2 - R1)^+``; the one-time-pad scheme carries
    ``min(R1, R_key)`` of message and nothing else.
    """
    r = r1_r2_rkey(fam, policy, s)
    if scheme == "otp":
        return (min(r.r1, r.r_key), 0.0, 0.0)
    if scheme == "resolvability":
        return (max(r.r1 + r.r_key - r.r2, 0.0), max(r.r2 - r.r_key, 0.0), max(r.r2 - r.r1, 0.0))
    raise InvalidInputError(f"unknown scheme {scheme!r}")


def block_scheme(adaptive_index: int, rho: float) -> str:
    """Deterministic time sharing: a ``rho`` fraction of adaptive blocks use the pad scheme."""
    j = adaptive_index
    return "otp" if math.floor((j + 1) * rho + 1e-12) > math.floor(j * rho + 1e-12) else "resolvability"


@dataclass(frozen=True, eq=False)
class CodebookSet:
    """Everything the transmitter draws once per campaign.

    ``books[(s, scheme)]`` is the message codebook used when the transmitter's
    estimate is ``s``; ``signal_words[j]`` is the ``j``-th type-signalling word.
    """

    books: dict
    signal_words: np.ndarray
    signal_counts: np.ndarray

    def book(self, s: int, scheme: str) -> Codebook:
        return self.books[(s, scheme)]


def build_codebook_set(cfg) -> CodebookSet:
    """Draw the message codebooks and the signalling words of a campaign.

    States whose input pmfs coincide share one codebook per scheme, sized by
    the smallest of their rate triples, so the codebook itself carries no
    information about which of them the transmitter believes in.
    """
    fam, policy = cfg.family, cfg.policy
    theta = fam.num_states
    schemes = [sc for sc in SCHEMES if (sc == "otp" and policy.rho > 0) or (sc == "resolvability" and policy.rho < 1)]
    groups = {}
    for s in range(theta):
        groups.setdefault(policy.per_state_inputs[s].tobytes(), []).append(s)
    books = {}
    for members in groups.values():
        lead = members[0]
        for k, scheme in enumerate(SCHEMES):
            if scheme not in schemes:
                continue
            triple = np.min([rate_triple(fam, policy, s, scheme) for s in members], axis=0)
            book = build_codebook(
                policy.per_state_inputs[lead],
                cfg.message_len,
                tuple(triple),
                cfg.codebook_cap,
                Seed(cfg.seed.master_seed, _CODEBOOK_STREAM + 2 * lead + k),
            )
            for s in members:
                books[(s, scheme)] = book
    p_tilde = universal_input(fam).p_tilde
    counts = rounded_counts(p_tilde, cfg.signal_len)
    words = constant_composition_words(counts, theta, Seed(cfg.seed.master_seed, _SIGNAL_STREAM).generator())
    words.setflags(write=False)
    return CodebookSet(books, words, counts)
