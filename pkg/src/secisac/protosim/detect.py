"""Transmitter and eavesdropper state detectors."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from ..chanfam import StateChannelFamily, universal_input
from ..metrics import conditional_kl
from ..probcore import InvalidInputError
from ..region import InputPolicy
from .codebook import CodebookSet, block_scheme


def _as_seq(seq, size: int, name: str) -> np.ndarray:
    arr = np.asarray(seq, dtype=np.int64).reshape(-1)
    if arr.size and (arr.min() < 0 or arr.max() >= size):
        raise InvalidInputError(f"{name} symbols must lie in [0, {size})")
    return arr


def tx_log_likelihoods(x_seq, y1_seq, fam: StateChannelFamily) -> np.ndarray:
    """Per-state ``sum_t ln w1[s](y1_t | x_t)``."""
    x = _as_seq(x_seq, fam.input_size, "x")
    y = _as_seq(y1_seq, fam.y1_size, "y1")
    if x.size != y.size:
        raise InvalidInputError(f"x has {x.size} symbols, y1 has {y.size}")
    return np.log(fam.w1[:, x, y]).sum(axis=1)


def tx_mle(x_seq, y1_seq, fam: StateChannelFamily) -> int:
    """Maximum-likelihood state from the transmitter's inputs and feedback; ties go to the smaller index."""
    if np.asarray(x_seq).size == 0:
        raise InvalidInputError("tx_mle needs at least one symbol")
    return int(np.argmax(tx_log_likelihoods(x_seq, y1_seq, fam)))


def stop_thresholds(fam: StateChannelFamily, policy: InputPolicy, epsilon: float, n: int) -> np.ndarray:
    """``c_s = n (min_{s' != s} D(w1[s] || w1[s'] | P_s) - epsilon)`` for every state."""
    theta = fam.num_states
    out = np.empty(theta)
    for s in range(theta):
        p = policy.per_state_inputs[s]
        d = min(conditional_kl(fam.w1[s], fam.w1[t], p) for t in range(theta) if t != s)
        out[s] = n * (d - epsilon)
    return out


def llr_leads(ll: np.ndarray) -> np.ndarray:
    """``ll[..., s] - max_{s' != s} ll[..., s']`` along the last axis."""
    ll = np.asarray(ll, dtype=np.float64)
    order = np.sort(ll, axis=-1)
    top, second = order[..., -1:], order[..., -2:-1]
    rival = np.where(ll == top, second, top)
    return ll - rival


def stop_rule(ll: np.ndarray, thresholds: np.ndarray):
    """Vectorised stopping decision on rows of per-state log-likelihoods.

    Returns ``(stop, leading)``: ``stop`` is true when some state's lead is at
    least its threshold; ``leading`` is the maximum-likelihood state.
    """
    leads = llr_leads(ll)
    stop = np.any(leads >= thresholds, axis=-1)
    return stop, np.argmax(ll, axis=-1)


def stopping_check(x_seq, y1_seq, fam: StateChannelFamily, policy: InputPolicy, epsilon: float, n: int):
    """Whether the transmitter stops after observing ``(x^t, y1^t)``.

    The transmitter's input law is the same function of the past under every
    hypothesis, so its factors cancel and only the channel terms enter.  At
    ``t = 0`` the answer is always ``(False, 0)``.
    """
    x = np.asarray(x_seq)
    if x.size == 0:
        return False, 0
    ll = tx_log_likelihoods(x_seq, y1_seq, fam)
    stop, lead = stop_rule(ll[None, :], stop_thresholds(fam, policy, epsilon, n))
    return bool(stop[0]), int(lead[0])


@dataclass(frozen=True)
class Segment:
    kind: str  # "universal" | "message" | "signal"
    start: int
    stop: int
    block: int
    scheme: str | None = None


@dataclass(frozen=True)
class Schedule:
    """Which channel uses carry universal, message and signalling symbols."""

    segments: tuple
    block_len: int

    @property
    def length(self) -> int:
        return self.segments[-1].stop if self.segments else 0

    def count(self, kind: str) -> int:
        return sum(seg.stop - seg.start for seg in self.segments if seg.kind == kind)

    @classmethod
    def build(cls, num_blocks: int, block_len: int, universal_blocks: int, message_len: int, rho: float):
        segs = []
        for k in range(num_blocks):
            t0 = k * block_len
            if k < universal_blocks:
                segs.append(Segment("universal", t0, t0 + block_len, k))
                continue
            scheme = block_scheme(k - universal_blocks, rho)
            segs.append(Segment("message", t0, t0 + message_len, k, scheme))
            segs.append(Segment("signal", t0 + message_len, t0 + block_len, k))
        return cls(tuple(segs), block_len)

    @classmethod
    def for_config(cls, cfg, tau: int) -> "Schedule":
        if tau % cfg.block_len:
            raise InvalidInputError("stopping times fall on block boundaries")
        return cls.build(tau // cfg.block_len, cfg.block_len, cfg.universal_blocks, cfg.message_len, cfg.policy.rho)


def eve_surrogate_marginals(fam: StateChannelFamily, policy: InputPolicy):
    """Single-letter output laws Eve assigns to (universal/signal, message) symbols per state."""
    p_tilde = universal_input(fam).p_tilde
    q_u = np.stack([p_tilde @ fam.w2[s] for s in range(fam.num_states)])
    q_m = np.stack([policy.per_state_inputs[s] @ fam.w2[s] for s in range(fam.num_states)])
    return q_u, q_m


def _mixture_loglik(y2: np.ndarray, words: np.ndarray, log_w2: np.ndarray) -> float:
    """``ln (1/|C|) sum_w prod_t w2(y_t | x_t(w))`` for one segment."""
    per_word = log_w2[words, y2[None, :]].sum(axis=1)
    return float(logsumexp(per_word) - np.log(words.shape[0]))


def eve_log_likelihoods(
    y2_seq,
    fam: StateChannelFamily,
    policy: InputPolicy,
    schedule: Schedule,
    mode: str = "iid-surrogate",
    codebooks: CodebookSet | None = None,
) -> np.ndarray:
    """Per-hypothesis log-likelihood of Eve's observation under the public schedule.

    Under hypothesis ``s`` Eve assumes the transmitter used state ``s``'s input
    type in every adaptive block.  Universal-phase symbols are i.i.d. so their
    law is exact in both modes.
    """
    y2 = _as_seq(y2_seq, fam.y2_size, "y2")
    if y2.size != schedule.length:
        raise InvalidInputError(f"y2 has {y2.size} symbols, schedule covers {schedule.length}")
    theta = fam.num_states
    q_u, q_m = eve_surrogate_marginals(fam, policy)
    if mode == "iid-surrogate":
        out = np.zeros(theta)
        for seg in schedule.segments:
            q = q_m if seg.kind == "message" else q_u
            out += np.log(q[:, y2[seg.start : seg.stop]]).sum(axis=1)
        return out
    if mode != "exact-mixture":
        raise InvalidInputError(f"unknown eve mode {mode!r}")
    if codebooks is None:
        raise InvalidInputError("exact-mixture detection needs the codebooks")
    check_exact_feasible(codebooks)
    out = np.zeros(theta)
    log_w2 = np.log(fam.w2)
    for s in range(theta):
        for seg in schedule.segments:
            ys = y2[seg.start : seg.stop]
            if seg.kind == "universal":
                out[s] += np.log(q_u[s, ys]).sum()
            elif seg.kind == "message":
                out[s] += _mixture_loglik(ys, codebooks.book(s, seg.scheme).words, log_w2[s])
            else:
                out[s] += _mixture_loglik(ys, codebooks.signal_words, log_w2[s])
    return out


def check_exact_feasible(codebooks: CodebookSet) -> None:
    for key, book in codebooks.books.items():
        if book.capped:
            raise InvalidInputError(
                f"exact-mixture detection needs the full codebook, but codebook {key} was capped "
                f"from {book.requested_dims} to {book.index_dims}"
            )


def eve_detect(
    y2_seq,
    fam: StateChannelFamily,
    policy: InputPolicy,
    schedule: Schedule,
    mode: str = "iid-surrogate",
    codebooks: CodebookSet | None = None,
) -> int:
    """Eve's maximum-likelihood state; ties go to the smaller index."""
    return int(np.argmax(eve_log_likelihoods(y2_seq, fam, policy, schedule, mode, codebooks)))
