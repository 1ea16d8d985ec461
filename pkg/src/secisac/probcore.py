"""Finite-alphabet probability primitives.

Pmfs are 1-D float arrays and stochastic kernels are 2-D row-stochastic
arrays ``w[x, y]``.  Product alphabets are flattened row-major, so the pair
``(a, b)`` over ``A x B`` lives at index ``a * |B| + b``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

PROB_TOL = 1e-12


class InvalidInputError(ValueError):
    """Input violates a shape or normalisation contract."""


class DegenerateModelError(ValueError):
    """Channel model violates a distinguishability assumption."""


def as_pmf(p, tol: float = PROB_TOL) -> np.ndarray:
    """Validate ``p`` and return it as a float64 array."""
    arr = np.asarray(p, dtype=np.float64)
    if arr.ndim != 1 or arr.size < 1:
        raise InvalidInputError(f"pmf must be a non-empty vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)) or np.any(arr < 0):
        raise InvalidInputError("pmf entries must be finite and non-negative")
    if abs(arr.sum() - 1.0) > tol:
        raise InvalidInputError(f"pmf sums to {arr.sum():.15g}, not 1")
    return arr


def as_kernel(w, tol: float = PROB_TOL) -> np.ndarray:
    """Validate a row-stochastic matrix and return it as a float64 array."""
    arr = np.asarray(w, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise InvalidInputError(f"kernel must be a non-empty matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)) or np.any(arr < 0):
        raise InvalidInputError("kernel entries must be finite and non-negative")
    sums = arr.sum(axis=1)
    bad = np.nonzero(np.abs(sums - 1.0) > tol)[0]
    if bad.size:
        raise InvalidInputError(f"kernel row {bad[0]} sums to {sums[bad[0]]:.15g}, not 1")
    return arr


def _check_rows(p: np.ndarray, w: np.ndarray) -> None:
    if p.size != w.shape[0]:
        raise InvalidInputError(
            f"input alphabet mismatch: pmf has {p.size} entries, kernel has {w.shape[0]} rows"
        )


def push_forward(p, w) -> np.ndarray:
    """Output distribution ``q(y) = sum_x p(x) w(y|x)``."""
    p, w = as_pmf(p), as_kernel(w)
    _check_rows(p, w)
    return p @ w


def joint(p, w) -> np.ndarray:
    """Joint pmf of ``(x, y)`` flattened row-major over ``X x Y``."""
    p, w = as_pmf(p), as_kernel(w)
    _check_rows(p, w)
    return (p[:, None] * w).reshape(-1)


def bsc(crossover: float) -> np.ndarray:
    """Binary symmetric channel kernel."""
    if not 0.0 <= crossover <= 1.0:
        raise InvalidInputError(f"crossover {crossover} outside [0, 1]")
    return np.array([[1.0 - crossover, crossover], [crossover, 1.0 - crossover]])


def bern(p1: float) -> np.ndarray:
    """Pmf on {0, 1} with mass ``p1`` on 1."""
    return as_pmf([1.0 - p1, p1])


def point_mass(index: int, size: int) -> np.ndarray:
    out = np.zeros(size)
    out[index] = 1.0
    return out


def uniform(size: int) -> np.ndarray:
    return np.full(size, 1.0 / size)


def empirical_type(sequence, alphabet_size: int) -> np.ndarray:
    """Normalised symbol counts of ``sequence``."""
    seq = np.asarray(sequence, dtype=np.int64).reshape(-1)
    if seq.size == 0:
        raise InvalidInputError("empirical type of an empty sequence")
    if seq.min() < 0 or seq.max() >= alphabet_size:
        raise InvalidInputError(f"symbols must lie in [0, {alphabet_size})")
    return np.bincount(seq, minlength=alphabet_size) / seq.size


def rounded_counts(p, length: int) -> np.ndarray:
    """Nearest realizable type for ``length`` symbols, as integer counts.

    Largest-remainder rounding; ties go to the smaller index.
    """
    p = as_pmf(p)
    raw = p * length
    counts = np.floor(raw).astype(np.int64)
    short = length - int(counts.sum())
    if short > 0:
        # stable sort keeps the smaller index first among equal remainders
        order = np.argsort(-(raw - counts), kind="stable")
        counts[order[:short]] += 1
    return counts


@dataclass(frozen=True)
class Seed:
    """Deterministic random stream handle.

    ``(master_seed, stream_id)`` maps to a PCG64 generator through numpy's
    ``SeedSequence`` spawn keys, so distinct streams are independent and the
    same pair always reproduces the same draws.
    """

    master_seed: int
    stream_id: int = 0

    def __post_init__(self):
        for name in ("master_seed", "stream_id"):
            v = getattr(self, name)
            if not (isinstance(v, (int, np.integer)) and 0 <= v < 2**64):
                raise InvalidInputError(f"{name} must be a 64-bit unsigned integer, got {v!r}")

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(int(self.master_seed), spawn_key=(int(self.stream_id),))
        return np.random.Generator(np.random.PCG64(ss))

    def child(self, stream_id: int) -> "Seed":
        return Seed(self.master_seed, stream_id)


def sample(p, seed: Seed, size: int | None = None):
    """Draw from ``p`` using the stream fixed by ``seed``.

    With ``size=None`` a single index is returned, otherwise an int array.
    """
    p = as_pmf(p)
    rng = seed.generator()
    return sample_with(rng, p, size)


def sample_with(rng: np.random.Generator, p: np.ndarray, size=None):
    """Inverse-CDF draw from an already validated pmf."""
    cdf = np.cumsum(p)
    cdf[-1] = 1.0
    u = rng.random(size)
    idx = np.searchsorted(cdf, u, side="right")
    # guard against zero-mass trailing symbols
    idx = np.minimum(idx, p.size - 1)
    if size is None:
        return int(idx)
    return idx


def pmf_to_json(p) -> str:
    return json.dumps([float(v) for v in as_pmf(p)])


def pmf_from_json(text: str) -> np.ndarray:
    return as_pmf(json.loads(text))


def kernel_to_json(w) -> str:
    return json.dumps([[float(v) for v in row] for row in as_kernel(w)])


def kernel_from_json(text: str) -> np.ndarray:
    return as_kernel(json.loads(text))
