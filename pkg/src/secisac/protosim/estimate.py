"""Exponent fits across horizons and stopping-time tail diagnostics."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..chanfam import universal_input
from ..metrics import conditional_kl, llr_range_about, mgf_exponent
from ..probcore import InvalidInputError
from .detect import stop_thresholds
from .report import SimReport

ESTIMABLE_COUNT = 100
SAFETY_FACTOR = 3.0


@dataclass(frozen=True)
class ExponentFit:
    slope: float
    intercept: float
    ci_low: float
    ci_high: float
    ns: tuple
    p_hats: tuple
    trials: tuple
    used: tuple  # which grid points entered the fit
    flags: tuple

    @property
    def ok(self) -> bool:
        return not self.flags


def _ls_slope(x: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    xm = x.mean()
    slope = float(np.dot(x - xm, y - y.mean()) / np.dot(x - xm, x - xm))
    return slope, float(y.mean() - slope * xm)


def fit_exponent(ns, p_hats, trials=None, resamples: int = 1000, seed: int = 0, level: float = 0.95) -> ExponentFit:
    """Least-squares slope of ``-ln P_hat`` against ``n`` with a parametric bootstrap interval.

    Points with fewer than ``ESTIMABLE_COUNT`` errors are left out and the fit
    is flagged.  ``trials=None`` treats ``p_hats`` as exact (no interval).
    """
    ns = np.asarray(ns, dtype=np.float64)
    ps = np.asarray(p_hats, dtype=np.float64)
    if ns.shape != ps.shape or ns.ndim != 1:
        raise InvalidInputError("ns and p_hats must be vectors of equal length")
    if trials is None:
        tr = np.full(ns.shape, np.inf)
    else:
        tr = np.broadcast_to(np.asarray(trials, dtype=np.float64), ns.shape).copy()
    flags = []
    used = (ps > 0) & (ps * tr >= ESTIMABLE_COUNT - 1e-9) if trials is not None else ps > 0
    if not np.all(used):
        flags.append("below_estimability_floor")
    if used.sum() < 3:
        flags.append("fewer_than_3_points")
    if used.sum() < 2:
        return ExponentFit(math.nan, math.nan, math.nan, math.nan, tuple(ns), tuple(ps), tuple(tr), tuple(used), tuple(flags))
    x, y = ns[used], -np.log(ps[used])
    slope, icept = _ls_slope(x, y)
    lo = hi = slope
    if trials is not None and resamples > 0:
        rng = np.random.default_rng(seed)
        counts = rng.binomial(tr[used].astype(np.int64), ps[used], size=(resamples, x.size))
        sim = counts / tr[used]
        good = np.all(sim > 0, axis=1)
        ys = -np.log(sim[good])
        xm = x - x.mean()
        slopes = (ys - ys.mean(axis=1, keepdims=True)) @ xm / np.dot(xm, xm)
        alpha = (1.0 - level) / 2.0
        lo, hi = (float(v) for v in np.quantile(slopes, [alpha, 1.0 - alpha]))
    if slope <= 1e-12 or lo <= 0.0:
        flags.append("non_exponential_decay")
    return ExponentFit(slope, icept, lo, hi, tuple(ns), tuple(ps), tuple(tr), tuple(bool(u) for u in used), tuple(flags))


@dataclass(frozen=True)
class ExponentEstimates:
    d1: ExponentFit
    d2: ExponentFit


def estimate_exponents(reports, resamples: int = 1000, seed: int = 0) -> ExponentEstimates:
    """Fit the transmitter and eavesdropper detection exponents over an ``n`` grid of reports."""
    reports = sorted(reports, key=lambda r: r.config.n)
    ns = [r.config.n for r in reports]
    tr = [r.trials for r in reports]
    d1 = fit_exponent(ns, [r.p_d1 for r in reports], tr, resamples, seed)
    d2 = fit_exponent(ns, [r.p_d2 for r in reports], tr, resamples, seed)
    return ExponentEstimates(d1, d2)


@dataclass(frozen=True)
class TailComparison:
    grid: np.ndarray
    empirical: np.ndarray
    azuma: np.ndarray
    settle: np.ndarray  # (|S| - 1) exp(-c0 t) for the transmitter's estimate
    estimable: np.ndarray
    within_bound: bool
    strictly_decreasing: bool
    trials: int

    def p_tau_at_most(self, t: float) -> float:
        i = np.searchsorted(self.grid, t, side="right") - 1
        return 1.0 if i < 0 else float(1.0 - self.empirical[i])


def azuma_curve(cfg, grid) -> np.ndarray:
    """Union of Azuma bounds on ``P(tau > t)`` at block boundaries ``t``.

    For each rival ``s'`` the accumulated log-likelihood lead of the true
    state has mean at least ``(1 - delta) D_min t`` and increments within
    ``phi`` of their mean, where ``D_min`` is the smallest conditional
    divergence over the input laws the schedule can use.
    """
    fam, pol = cfg.family, cfg.policy
    s = cfg.true_state
    c = stop_thresholds(fam, pol, cfg.epsilon, cfg.n)[s]
    laws = [universal_input(fam).p_tilde] + list(pol.per_state_inputs)
    t = np.asarray(grid, dtype=np.float64)
    total = np.zeros_like(t)
    for r in range(fam.num_states):
        if r == s:
            continue
        d_min = min(conditional_kl(fam.w1[s], fam.w1[r], p) for p in laws)
        phi = max(llr_range_about(fam.w1[s], fam.w1[r], conditional_kl(fam.w1[s], fam.w1[r], p)) for p in laws)
        gap = (1.0 - cfg.delta) * d_min * t - c
        with np.errstate(divide="ignore", invalid="ignore"):
            term = np.where((gap > 0) & (t > 0), np.exp(-(gap**2) / (2.0 * np.maximum(t, 1.0) * phi**2)), 1.0)
        total += term
    return np.minimum(total, 1.0)


def settle_curve(cfg, grid) -> np.ndarray:
    fam = cfg.family
    s = cfg.true_state
    p = universal_input(fam).p_tilde
    c0 = min(mgf_exponent(p, fam.w1[s], fam.w1[r])[0] for r in range(fam.num_states) if r != s)
    return np.minimum((fam.num_states - 1) * np.exp(-c0 * np.asarray(grid, dtype=np.float64)), 1.0)


def stopping_tail(report: SimReport, safety: float = SAFETY_FACTOR) -> TailComparison:
    """Empirical stopping-time tail against the Azuma and settling-time curves.

    A grid point is estimable when at least ``ESTIMABLE_COUNT`` trials are
    still running there and at least one has already stopped.
    """
    cfg = report.config
    grid, emp = report.tail(np.arange(1, cfg.max_blocks + 1) * cfg.block_len)
    above = np.rint(emp * report.trials)
    estimable = (above >= ESTIMABLE_COUNT) & (emp < 1.0)
    az = azuma_curve(cfg, grid)
    within = bool(np.all(emp[estimable] <= safety * az[estimable]))
    e = emp[estimable]
    decreasing = bool(np.all(np.diff(np.log(e)) < 0))
    return TailComparison(grid, emp, az, settle_curve(cfg, grid), estimable, within, decreasing, report.trials)
