"""Monte Carlo simulation of the block-adaptive sensing and secrecy protocol."""

from .codebook import Codebook, CodebookSet, build_codebook, build_codebook_set, rate_triple
from .config import SimConfig, default_policy
from .decode import decode_signal, decode_small
from .detect import Schedule, eve_detect, eve_log_likelihoods, stopping_check, tx_mle
from .engine import TrialTrace, run_trial, simulate
from .report import SimReport

__all__ = [
    "Codebook",
    "CodebookSet",
    "Schedule",
    "SimConfig",
    "SimReport",
    "TrialTrace",
    "build_codebook",
    "build_codebook_set",
    "decode_signal",
    "decode_small",
    "default_policy",
    "eve_detect",
    "eve_log_likelihoods",
    "rate_triple",
    "run_trial",
    "simulate",
    "stopping_check",
    "tx_mle",
]
