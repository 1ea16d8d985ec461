"""Vectorised Monte Carlo engine for the block-adaptive sensing protocol.

Trials are processed in chunks of ``CHUNK``; chunk ``c`` draws from the stream
``Seed(master, c)``, so a campaign is reproducible and chunks may run in any
order.  Two samplers share the same control logic:

* the *count* sampler draws per-block joint type counts of ``(x, y1, y2)``
  directly (multinomial per input letter for the constant-composition parts),
  which is exact in law whenever nothing downstream needs symbol order;
* the *symbol* sampler draws actual codewords and outputs, and is used for
  the exact-mixture eavesdropper and for decoding.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from ..chanfam import universal_input
from ..probcore import Seed, rounded_counts, sample_with
from ..region import r1_r2_rkey, state_rate_bound
from .codebook import SCHEMES, CodebookSet, block_scheme, build_codebook_set
from .config import SimConfig
from .report import SimReport
from .detect import check_exact_feasible, eve_surrogate_marginals, stop_rule, stop_thresholds

CHUNK = 2048
_MATMUL_BUDGET = 2**22  # trials x words per mixture sub-batch


@dataclass(frozen=True, eq=False)
class _Tables:
    """Per-campaign constants shared by every chunk."""

    cfg: SimConfig
    books: CodebookSet
    p_tilde: np.ndarray
    cells: int
    l1: np.ndarray  # (cells, states) ln w1[s](y1|x)
    l2_univ: np.ndarray  # (cells, states) ln of Eve's universal/signal marginal
    l2_msg: np.ndarray  # (cells, states) ln of Eve's message marginal
    q_univ: np.ndarray  # (states, |Y2|)
    q_msg: np.ndarray  # (states, |Y2|)
    p_univ: np.ndarray  # (cells,) law of one universal-phase symbol under the true state
    msg_counts: np.ndarray  # (states, |X|)
    sig_counts: np.ndarray  # (|X|,)
    thresholds: np.ndarray
    block_bits: dict  # (s_hat, scheme) -> bits credited per block
    symbol_path: bool


def _tables(cfg: SimConfig) -> _Tables:
    fam, pol = cfg.family, cfg.policy
    theta, nx, ny1, ny2 = fam.num_states, fam.input_size, fam.y1_size, fam.y2_size
    x, y1, y2 = np.meshgrid(np.arange(nx), np.arange(ny1), np.arange(ny2), indexing="ij")
    x, y1, y2 = x.ravel(), y1.ravel(), y2.ravel()
    q_u, q_m = eve_surrogate_marginals(fam, pol)
    p_tilde = universal_input(fam).p_tilde
    wj = fam.w_joint[cfg.true_state]
    books = build_codebook_set(cfg)
    bits = {}
    for s in range(theta):
        r = r1_r2_rkey(fam, pol, s)
        for scheme in SCHEMES:
            rate = state_rate_bound(r, 1.0 if scheme == "otp" else 0.0)
            bits[(s, scheme)] = int(math.floor(cfg.message_len * rate / math.log(2) + 1e-9))
    symbol_path = cfg.eve_mode == "exact-mixture" or cfg.decode
    if cfg.eve_mode == "exact-mixture":
        check_exact_feasible(books)
    return _Tables(
        cfg=cfg,
        books=books,
        p_tilde=p_tilde,
        cells=nx * ny1 * ny2,
        l1=np.log(fam.w1[:, x, y1]).T,
        l2_univ=np.log(q_u[:, y2]).T,
        l2_msg=np.log(q_m[:, y2]).T,
        q_univ=q_u,
        q_msg=q_m,
        p_univ=(p_tilde[:, None] * wj).ravel(),
        msg_counts=np.stack([rounded_counts(pol.per_state_inputs[s], cfg.message_len) for s in range(theta)]),
        sig_counts=rounded_counts(p_tilde, cfg.signal_len),
        thresholds=stop_thresholds(fam, pol, cfg.epsilon, cfg.n),
        block_bits=bits,
        symbol_path=symbol_path,
    )


@dataclass
class ChunkResult:
    first_trial: int
    tau: np.ndarray
    censored: np.ndarray
    s_hat_tx: np.ndarray
    s_hat_eve: np.ndarray
    bits_sent: np.ndarray
    decode_ok: np.ndarray  # 1 all blocks decoded, 0 some failure, -1 decoding off
    tx_ll: np.ndarray
    eve_ll: np.ndarray
    adaptive_blocks: np.ndarray
    correct_blocks: np.ndarray
    block_estimates: np.ndarray | None = None  # (trials, max_blocks), -1 outside adaptive blocks
    block_decoded: np.ndarray | None = None  # (trials, max_blocks), 1/0, -1 not decoded


def _count_block(rng, tb: _Tables, kind: str, shat: np.ndarray):
    """Joint-type counts of one block for every active trial: (message-like, signal-like)."""
    cfg = tb.cfg
    a = shat.size
    wj = cfg.family.w_joint[cfg.true_state]
    per_x = wj.shape[1]
    if kind == "universal":
        return None, rng.multinomial(cfg.block_len, tb.p_univ, size=a)
    cm = np.zeros((a, tb.cells), dtype=np.int64)
    for g in range(cfg.family.num_states):
        sel = np.nonzero(shat == g)[0]
        if sel.size == 0:
            continue
        for xv, cnt in enumerate(tb.msg_counts[g]):
            if cnt:
                cm[sel, xv * per_x : (xv + 1) * per_x] = rng.multinomial(cnt, wj[xv], size=sel.size)
    cs = np.zeros((a, tb.cells), dtype=np.int64)
    for xv, cnt in enumerate(tb.sig_counts):
        if cnt:
            cs[:, xv * per_x : (xv + 1) * per_x] = rng.multinomial(cnt, wj[xv], size=a)
    return cm, cs


def _sample_outputs(rng, wj: np.ndarray, x: np.ndarray) -> np.ndarray:
    cdf = np.cumsum(wj, axis=1)
    cdf[:, -1] = 1.0
    u = rng.random(x.shape)
    y = (u[..., None] >= cdf[x]).sum(axis=-1)
    return np.minimum(y, wj.shape[1] - 1)


def _mixture(y: np.ndarray, words: np.ndarray, log_w: np.ndarray) -> np.ndarray:
    """Row-wise ``ln (1/|C|) sum_w prod_t w(y_t | x_t(w))`` for a batch of outputs."""
    out = np.empty(y.shape[0])
    nw = words.shape[0]
    onehots = [(words == v).astype(np.float64) for v in range(log_w.shape[0])]
    step = max(1, _MATMUL_BUDGET // max(nw, 1))
    for lo in range(0, y.shape[0], step):
        yy = y[lo : lo + step]
        ll = sum(log_w[v][yy] @ onehots[v].T for v in range(log_w.shape[0]))
        out[lo : lo + step] = logsumexp(ll, axis=1) - math.log(nw)
    return out


def _best_words(y: np.ndarray, words: np.ndarray, log_w: np.ndarray) -> np.ndarray:
    out = np.empty(y.shape[0], dtype=np.int64)
    step = max(1, _MATMUL_BUDGET // max(words.shape[0], 1))
    onehots = [(words == v).astype(np.float64) for v in range(log_w.shape[0])]
    for lo in range(0, y.shape[0], step):
        yy = y[lo : lo + step]
        ll = sum(log_w[v][yy] @ onehots[v].T for v in range(log_w.shape[0]))
        out[lo : lo + step] = np.argmax(ll, axis=1)
    return out


def _symbol_block(rng, tb: _Tables, kind: str, scheme, shat: np.ndarray):
    """Draw one block of symbols; returns (tx_ll, eve_ll, decoded) increments."""
    cfg = tb.cfg
    fam = cfg.family
    theta = fam.num_states
    a = shat.size
    wj = fam.w_joint[cfg.true_state]
    log_w1 = np.log(fam.w1)
    log_w2 = np.log(fam.w2)
    ny2 = fam.y2_size
    if kind == "universal":
        x = sample_with(rng, tb.p_tilde, (a, cfg.block_len))
        y = _sample_outputs(rng, wj, x)
        y1, y2 = y // ny2, y % ny2
        tx = log_w1[:, x, y1].sum(axis=2).T
        eve = np.log(tb.q_univ)[:, y2].sum(axis=2).T
        return tx, eve, None
    lm = cfg.message_len
    dims = {g: tb.books.book(g, scheme).index_dims for g in range(theta)}
    m = np.zeros(a, dtype=np.int64)
    nb = np.zeros(a, dtype=np.int64)
    key = np.zeros(a, dtype=np.int64)
    xm = np.zeros((a, lm), dtype=np.int64)
    for g in range(theta):
        sel = np.nonzero(shat == g)[0]
        if sel.size == 0:
            continue
        book = tb.books.book(g, scheme)
        dm, dn, dr = dims[g]
        m[sel] = rng.integers(dm, size=sel.size)
        nb[sel] = rng.integers(dn, size=sel.size)
        r1 = rng.integers(dr, size=sel.size)
        key[sel] = rng.integers(dm, size=sel.size)
        xm[sel] = book.words[book.index((m[sel] + key[sel]) % dm, nb[sel], r1)]
    sig_key = rng.integers(theta, size=a)
    xs = tb.books.signal_words[(shat + sig_key) % theta]
    x = np.concatenate([xm, xs], axis=1)
    y = _sample_outputs(rng, wj, x)
    y1, y2 = y // ny2, y % ny2
    tx = log_w1[:, x, y1].sum(axis=2).T
    if cfg.eve_mode == "iid-surrogate":
        eve = (np.log(tb.q_msg)[:, y2[:, :lm]].sum(axis=2) + np.log(tb.q_univ)[:, y2[:, lm:]].sum(axis=2)).T
    else:
        eve = np.empty((a, theta))
        for s in range(theta):
            eve[:, s] = _mixture(y2[:, :lm], tb.books.book(s, scheme).words, log_w2[s])
            eve[:, s] += _mixture(y2[:, lm:], tb.books.signal_words, log_w2[s])
    decoded = None
    if cfg.decode:
        scores = np.empty((a, theta))
        for j in range(theta):
            sj = (j - sig_key) % theta
            scores[:, j] = log_w1[sj[:, None], tb.books.signal_words[j][None, :], y1[:, lm:]].sum(axis=1)
        s_rx = (np.argmax(scores, axis=1) - sig_key) % theta
        decoded = np.zeros(a, dtype=bool)
        for g in range(theta):
            sel = np.nonzero((s_rx == g) & (shat == g))[0]
            if sel.size == 0:
                continue
            book = tb.books.book(g, scheme)
            idx = _best_words(y1[sel, :lm], book.words, log_w1[g])
            m_pad, n_hat, _ = book.split(idx)
            dm, dn, _ = book.index_dims
            decoded[sel] = (((m_pad - key[sel]) % dm) == m[sel]) & (n_hat == nb[sel])
    return tx, eve, decoded


def run_chunk(cfg: SimConfig, chunk_id: int, size: int, tables: _Tables | None = None, record: bool = False):
    tb = tables or _tables(cfg)
    theta = cfg.family.num_states
    rng = Seed(cfg.seed.master_seed, chunk_id).generator()
    tx_ll = np.zeros((size, theta))
    eve_ll = np.zeros((size, theta))
    tau = np.zeros(size, dtype=np.int64)
    censored = np.zeros(size, dtype=bool)
    s_tx = np.zeros(size, dtype=np.int64)
    s_eve = np.zeros(size, dtype=np.int64)
    bits = np.zeros(size, dtype=np.int64)
    decode_ok = np.full(size, 1 if cfg.decode else -1, dtype=np.int8)
    adaptive = np.zeros(size, dtype=np.int64)
    correct = np.zeros(size, dtype=np.int64)
    est = np.full((size, cfg.max_blocks), -1, dtype=np.int8) if record else None
    dec = np.full((size, cfg.max_blocks), -1, dtype=np.int8) if record else None
    active = np.arange(size)
    shat = np.zeros(size, dtype=np.int64)
    for k in range(cfg.max_blocks):
        if active.size == 0:
            break
        universal = k < cfg.universal_blocks
        kind = "universal" if universal else "adaptive"
        scheme = None if universal else block_scheme(k - cfg.universal_blocks, cfg.policy.rho)
        cur = shat[active]
        if tb.symbol_path:
            d_tx, d_eve, decoded = _symbol_block(rng, tb, kind, scheme, cur)
        else:
            cm, cs = _count_block(rng, tb, kind, cur)
            d_tx = cs @ tb.l1
            d_eve = cs @ tb.l2_univ
            if cm is not None:
                d_tx = d_tx + cm @ tb.l1
                d_eve = d_eve + cm @ tb.l2_msg
            decoded = None
        tx_ll[active] += d_tx
        eve_ll[active] += d_eve
        if not universal:
            adaptive[active] += 1
            hit = cur == cfg.true_state
            correct[active] += hit
            bits[active] += np.array([tb.block_bits[(g, scheme)] for g in range(theta)])[cur] * hit
            if record:
                est[active, k] = cur
            if decoded is not None:
                decode_ok[active[~decoded]] = 0
                if record:
                    dec[active, k] = decoded
        stop, lead = stop_rule(tx_ll[active], tb.thresholds)
        last = k == cfg.max_blocks - 1
        done = stop | last
        fin = active[done]
        tau[fin] = (k + 1) * cfg.block_len
        censored[active[~stop & last]] = True
        s_tx[fin] = lead[done]
        s_eve[fin] = np.argmax(eve_ll[fin], axis=1)
        shat[active] = lead  # tx MLE at this block boundary drives the next block
        active = active[~done]
    return ChunkResult(
        chunk_id * CHUNK, tau, censored, s_tx, s_eve, bits, decode_ok, tx_ll, eve_ll, adaptive, correct, est, dec
    )


@dataclass(frozen=True)
class TrialTrace:
    trial_id: int
    tau: int
    censored: bool
    s_hat_tx: int
    s_hat_eve: int
    bits_sent: int
    bits_correct: tuple  # per decoded adaptive block
    per_block_estimates: tuple  # estimate in force during each adaptive block
    n_universal: int
    n_message: int
    n_signal: int
    tx_ll: tuple
    eve_ll: tuple


def run_trial(cfg: SimConfig, trial_id: int) -> TrialTrace:
    """Replay one trial of a campaign, with its per-block record."""
    chunk, row = divmod(int(trial_id), CHUNK)
    size = min(CHUNK, cfg.trials - chunk * CHUNK) if trial_id < cfg.trials else row + 1
    res = run_chunk(cfg, chunk, size, record=True)
    tau = int(res.tau[row])
    blocks = tau // cfg.block_len
    n_univ = min(blocks, cfg.universal_blocks) * cfg.block_len
    n_adapt = max(blocks - cfg.universal_blocks, 0)
    ests = tuple(int(v) for v in res.block_estimates[row, cfg.universal_blocks : blocks])
    decs = tuple(bool(v) for v in res.block_decoded[row, cfg.universal_blocks : blocks] if v >= 0)
    return TrialTrace(
        trial_id=int(trial_id),
        tau=tau,
        censored=bool(res.censored[row]),
        s_hat_tx=int(res.s_hat_tx[row]),
        s_hat_eve=int(res.s_hat_eve[row]),
        bits_sent=int(res.bits_sent[row]),
        bits_correct=decs,
        per_block_estimates=ests,
        n_universal=n_univ,
        n_message=n_adapt * cfg.message_len,
        n_signal=n_adapt * cfg.signal_len,
        tx_ll=tuple(float(v) for v in res.tx_ll[row]),
        eve_ll=tuple(float(v) for v in res.eve_ll[row]),
    )


def _chunk_job(args):
    cfg, chunk_id, size = args
    return run_chunk(cfg, chunk_id, size)


def simulate(cfg: SimConfig, threads: int = 1) -> SimReport:
    """Run every trial of ``cfg`` and aggregate into a :class:`SimReport`."""
    jobs = []
    for c in range(math.ceil(cfg.trials / CHUNK)):
        jobs.append((cfg, c, min(CHUNK, cfg.trials - c * CHUNK)))
    if threads > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(_chunk_job, jobs))
    else:
        tb = _tables(cfg)
        parts = [run_chunk(cfg, c, size, tb) for _, c, size in jobs]
    parts.sort(key=lambda r: r.first_trial)
    return SimReport.from_chunks(cfg, parts)
