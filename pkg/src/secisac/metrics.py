"""Scalar information measures on finite alphabets, all in nats.

Divergences that are infinite return ``math.inf``.  Weighted sums only ever
include rows with positive weight, so ``0 * inf`` never reaches arithmetic.
"""

from __future__ import annotations

import math

import numpy as np

from .probcore import (
    DegenerateModelError,
    InvalidInputError,
    as_kernel,
    as_pmf,
)

INF = math.inf
GOLDEN_TOL = 1e-10
_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


def _same_size(p: np.ndarray, q: np.ndarray) -> None:
    if p.shape != q.shape:
        raise InvalidInputError(f"alphabet mismatch: {p.shape} vs {q.shape}")


def _pair_kernels(w1, w2, p):
    w1, w2, p = as_kernel(w1), as_kernel(w2), as_pmf(p)
    if w1.shape != w2.shape:
        raise InvalidInputError(f"kernel shapes differ: {w1.shape} vs {w2.shape}")
    if p.size != w1.shape[0]:
        raise InvalidInputError(f"pmf has {p.size} entries, kernels have {w1.shape[0]} rows")
    return w1, w2, p


def golden_max(f, lo: float, hi: float, tol: float = GOLDEN_TOL) -> tuple[float, float]:
    """Maximise a unimodal ``f`` on ``[lo, hi]``; returns ``(value, argmax)``.

    The endpoints are also evaluated, so boundary maxima are found exactly.
    """
    a, b = lo, hi
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = f(d)
    x = 0.5 * (a + b)
    best = (f(x), x)
    for cand in (lo, hi):
        v = f(cand)
        if v > best[0]:
            best = (v, cand)
    return best


def kl(p, q) -> float:
    """D(p||q) with ``0 ln 0 = 0``; ``inf`` when p is not dominated by q."""
    p, q = as_pmf(p), as_pmf(q)
    _same_size(p, q)
    return _kl_raw(p, q)


def _kl_raw(p: np.ndarray, q: np.ndarray) -> float:
    mask = p > 0
    if np.any(q[mask] == 0):
        return INF
    val = float(np.sum(p[mask] * (np.log(p[mask]) - np.log(q[mask]))))
    return max(val, 0.0)


def _row_kls(w1: np.ndarray, w2: np.ndarray) -> np.ndarray:
    return np.array([_kl_raw(r1, r2) for r1, r2 in zip(w1, w2)])


def conditional_kl(w1, w2, p) -> float:
    """D(w1||w2|p) = sum_x p(x) D(w1(.|x)||w2(.|x))."""
    w1, w2, p = _pair_kernels(w1, w2, p)
    rows = _row_kls(w1, w2)
    used = p > 0
    if np.any(np.isinf(rows[used])):
        return INF
    return float(np.dot(p[used], rows[used]))


def _log_moment_rows(w1: np.ndarray, w2: np.ndarray):
    """Per-row closure ``lam -> ln sum_y w1^lam w2^(1-lam)`` over common support.

    Also returns a mask of rows whose supports are disjoint.
    """
    both = (w1 > 0) & (w2 > 0)
    l1 = np.where(both, np.log(np.where(both, w1, 1.0)), 0.0)
    l2 = np.where(both, np.log(np.where(both, w2, 1.0)), 0.0)
    disjoint = ~both.any(axis=1)

    def f(lam: float) -> np.ndarray:
        e = np.where(both, np.exp(lam * l1 + (1.0 - lam) * l2), 0.0)
        with np.errstate(divide="ignore"):
            return np.log(e.sum(axis=1))

    return f, disjoint


def chernoff(p, q) -> tuple[float, float]:
    """Chernoff information max_{lam in [0,1]} -ln sum p^lam q^(1-lam).

    Returns ``(value, lambda_star)``.  Disjoint supports give ``(inf, 0.5)``.
    """
    p, q = as_pmf(p), as_pmf(q)
    _same_size(p, q)
    f, disjoint = _log_moment_rows(p[None, :], q[None, :])
    if disjoint[0]:
        return INF, 0.5
    value, lam = golden_max(lambda t: -float(f(t)[0]), 0.0, 1.0)
    return max(value, 0.0), lam


def conditional_chernoff(w1, w2, p) -> float:
    """max over a shared lam of -sum_x p(x) ln sum_y w1^lam w2^(1-lam)."""
    return conditional_chernoff_full(w1, w2, p)[0]


def conditional_chernoff_full(w1, w2, p) -> tuple[float, float]:
    """Like :func:`conditional_chernoff` but also returns the maximising lam."""
    w1, w2, p = _pair_kernels(w1, w2, p)
    used = p > 0
    f, disjoint = _log_moment_rows(w1[used], w2[used])
    if np.any(disjoint):
        return INF, 0.5
    weights = p[used]
    value, lam = golden_max(lambda t: -float(weights @ f(t)), 0.0, 1.0)
    return max(value, 0.0), lam


def entropy(p) -> float:
    return _h(as_pmf(p))


def mutual_information(p, w) -> float:
    """I(p; w) = D(w || p∘w | p)."""
    p, w = as_pmf(p), as_kernel(w)
    if p.size != w.shape[0]:
        raise InvalidInputError(f"pmf has {p.size} entries, kernel has {w.shape[0]} rows")
    q = p @ w
    const = np.broadcast_to(q, w.shape)
    return conditional_kl(w, const, p)


def key_rate(p, w_joint, y1_size: int, y2_size: int) -> float:
    """H(Y1 | X, Y2) under ``p(x) w_joint(y1, y2 | x)``.

    ``w_joint`` columns index ``y1 * y2_size + y2``.
    """
    p, wj = as_pmf(p), as_kernel(w_joint)
    if wj.shape[1] != y1_size * y2_size:
        raise InvalidInputError(
            f"joint kernel has {wj.shape[1]} columns, expected {y1_size}*{y2_size}"
        )
    if p.size != wj.shape[0]:
        raise InvalidInputError(f"pmf has {p.size} entries, kernel has {wj.shape[0]} rows")
    pxyz = (p[:, None, None] * wj.reshape(-1, y1_size, y2_size)).reshape(-1)
    pxz = (p[:, None, None] * wj.reshape(-1, y1_size, y2_size)).sum(axis=1).reshape(-1)
    return max(_h(pxyz) - _h(pxz), 0.0)


def _h(v: np.ndarray) -> float:
    nz = v[v > 0]
    return float(-np.sum(nz * np.log(nz)))


def total_variation(p, q) -> float:
    p, q = as_pmf(p), as_pmf(q)
    _same_size(p, q)
    return 0.5 * float(np.abs(p - q).sum())


def mgf_log(p, w1, w2, lam: float) -> float:
    """ln sum_{x,y} p(x) w1(y|x) (w1(y|x)/w2(y|x))^lam, for lam <= 0."""
    w1, w2, p = _pair_kernels(w1, w2, p)
    return _mgf_log_raw(p, w1, w2, lam)


def _mgf_log_raw(p, w1, w2, lam):
    mask = (p[:, None] > 0) & (w1 > 0)
    # lam <= 0: terms with w2 == 0 vanish (w2^{-lam}), except at lam == 0
    with np.errstate(divide="ignore"):
        lw1 = np.log(np.where(mask, w1, 1.0))
        lw2 = np.log(np.where(mask, w2, 1.0))
    if lam == 0.0:
        terms = np.where(mask, w1, 0.0)
    else:
        terms = np.where(mask & (w2 > 0), np.exp((1.0 + lam) * lw1 - lam * lw2), 0.0)
    return float(np.log(np.sum(p[:, None] * terms)))


def mgf_exponent(p, w1, w2, lam_min: float = -20.0) -> tuple[float, float]:
    """Chernoff-bound exponent for the event that the LLR of w1 vs w2 is <= 0.

    ``c0 = -min_{lam in [lam_min, 0)} ln E_{p w1}[(w1/w2)^lam]``; the log-MGF is
    convex in ``lam`` so a golden-section search suffices.  Returns
    ``(c0, lambda_star)``.
    """
    w1, w2, p = _pair_kernels(w1, w2, p)
    d = conditional_kl(w1, w2, p)
    if not d > 0:
        raise DegenerateModelError("channels are indistinguishable under the input (D = 0)")
    neg, lam = golden_max(lambda t: -_mgf_log_raw(p, w1, w2, t), lam_min, 0.0)
    if lam <= lam_min + 1e-6:
        h = 1e-6
        slope = (_mgf_log_raw(p, w1, w2, lam_min + h) - _mgf_log_raw(p, w1, w2, lam_min)) / h
        if slope < 0:
            raise DegenerateModelError("log-MGF still decreasing at the search boundary")
    return neg, lam


def llr_range_about(w1, w2, center: float) -> float:
    """max_{x,y} |ln(w1/w2) - center| over entries where both are positive."""
    w1, w2 = as_kernel(w1), as_kernel(w2)
    if np.any(w1 <= 0) or np.any(w2 <= 0):
        raise DegenerateModelError("zero channel entry: log-likelihood ratio unbounded")
    return float(np.max(np.abs(np.log(w1) - np.log(w2) - center)))


def azuma_params(p, w1, w2, delta: float, eps: float) -> tuple[float, float]:
    """Increment bound ``phi`` and drift margin ``psi`` of the stopping-time tail.

    ``phi = max_{x,y} |ln(w1/w2) - D(w1||w2|p)|``.  The accumulated conditional
    drift over the horizon is at least ``(1 - delta) D`` per symbol, so the
    margin over the threshold slope ``D - eps`` is ``psi = eps - delta * D``.
    The tail bound then reads ``exp(-n psi^2 / (2 phi^2))`` when ``psi > 0``.
    """
    w1, w2, p = _pair_kernels(w1, w2, p)
    if not 0.0 <= delta < 1.0:
        raise InvalidInputError(f"delta must lie in [0, 1), got {delta}")
    d = conditional_kl(w1, w2, p)
    phi = llr_range_about(w1, w2, d)
    psi = eps - delta * d
    return phi, psi
