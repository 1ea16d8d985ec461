"""Campaign-level aggregation of simulated trials."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import binomtest

from .config import SimConfig

RATE_QUANTILES = (0.05, 0.25, 0.5, 0.75, 0.95)


def exact_interval(errors: int, trials: int, level: float = 0.95) -> tuple[float, float]:
    """Clopper-Pearson interval for a binomial proportion."""
    ci = binomtest(int(errors), int(trials)).proportion_ci(confidence_level=level, method="exact")
    return float(ci.low), float(ci.high)


def exponent_estimate(errors: int, trials: int, n: int) -> dict:
    """``-ln(P_hat) / n`` with the exact interval mapped through the same transform."""
    p = errors / trials
    lo, hi = exact_interval(errors, trials)
    tr = lambda v: (math.inf if v <= 0 else -math.log(v) / n)  # noqa: E731
    return {"estimate": tr(p), "ci_low": tr(hi), "ci_high": tr(lo), "errors": int(errors), "trials": int(trials)}


@dataclass(eq=False)
class SimReport:
    """Per-trial outcomes of a campaign plus derived estimates.

    Censored trials (no stop within the horizon) count as detection errors
    for both the transmitter and the eavesdropper and are left out of the
    rate quantiles.
    """

    config: SimConfig
    tau: np.ndarray
    censored: np.ndarray
    s_hat_tx: np.ndarray
    s_hat_eve: np.ndarray
    bits_sent: np.ndarray
    decode_ok: np.ndarray
    tx_ll: np.ndarray
    eve_ll: np.ndarray
    adaptive_blocks: np.ndarray
    correct_blocks: np.ndarray

    @classmethod
    def from_chunks(cls, cfg: SimConfig, parts) -> "SimReport":
        cat = lambda name: np.concatenate([getattr(p, name) for p in parts])  # noqa: E731
        return cls(
            cfg,
            cat("tau"),
            cat("censored"),
            cat("s_hat_tx"),
            cat("s_hat_eve"),
            cat("bits_sent"),
            cat("decode_ok"),
            cat("tx_ll"),
            cat("eve_ll"),
            cat("adaptive_blocks"),
            cat("correct_blocks"),
        )

    @property
    def trials(self) -> int:
        return int(self.tau.size)

    @property
    def tx_errors(self) -> int:
        return int(np.sum(self.censored | (self.s_hat_tx != self.config.true_state)))

    @property
    def eve_errors(self) -> int:
        return int(np.sum(self.censored | (self.s_hat_eve != self.config.true_state)))

    @property
    def p_d1(self) -> float:
        return self.tx_errors / self.trials

    @property
    def p_d2(self) -> float:
        return self.eve_errors / self.trials

    @property
    def p_c(self) -> float | None:
        if np.all(self.decode_ok < 0):
            return None
        return float(np.mean(self.decode_ok == 0))

    def tail(self, grid=None) -> tuple[np.ndarray, np.ndarray]:
        """Empirical ``P(tau > t)`` on ``grid`` (default: every block boundary in the horizon)."""
        if grid is None:
            grid = np.arange(0, self.config.max_blocks + 1) * self.config.block_len
        grid = np.asarray(grid)
        st = np.sort(self.tau)
        above = self.trials - np.searchsorted(st, grid, side="right")
        return grid, above / self.trials

    def p_tau_above(self, t: float) -> float:
        return float(np.mean(self.tau > t))

    def rate_quantiles(self) -> dict:
        done = ~self.censored
        if not np.any(done):
            return {str(q): None for q in RATE_QUANTILES}
        r = self.bits_sent[done] / self.config.n
        return {str(q): float(v) for q, v in zip(RATE_QUANTILES, np.quantile(r, RATE_QUANTILES))}

    def summary(self) -> dict:
        n = self.config.n
        return {
            "config_digest": self.config.digest(),
            "trials": self.trials,
            "block_len": self.config.block_len,
            "universal_blocks": self.config.universal_blocks,
            "censored": int(self.censored.sum()),
            "p_d1": self.p_d1,
            "p_d2": self.p_d2,
            "p_c": self.p_c,
            "p_tau_gt_n": self.p_tau_above(n),
            "mean_tau": float(self.tau.mean()),
            "E_d1": exponent_estimate(self.tx_errors, self.trials, n),
            "E_d2": exponent_estimate(self.eve_errors, self.trials, n),
            "rate_bits_per_use_quantiles": self.rate_quantiles(),
            "post_universal_block_accuracy": float(self.correct_blocks.sum() / max(self.adaptive_blocks.sum(), 1)),
        }

    def to_json(self) -> str:
        return json.dumps({"config": self.config.to_dict(), "summary": self.summary()}, indent=2, sort_keys=True)

    def trials_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["trial_id", "tau", "censored", "s_hat_tx", "s_hat_eve", "bits_sent", "decode_ok"])
        for i in range(self.trials):
            w.writerow(
                [
                    i,
                    int(self.tau[i]),
                    int(self.censored[i]),
                    int(self.s_hat_tx[i]),
                    int(self.s_hat_eve[i]),
                    int(self.bits_sent[i]),
                    int(self.decode_ok[i]),
                ]
            )
        return buf.getvalue()
