"""Exhaustive maximum-likelihood decoding for desk-scale codebooks."""

from __future__ import annotations

import numpy as np

from ..chanfam import StateChannelFamily
from ..probcore import InvalidInputError
from .codebook import Codebook


def word_log_likelihoods(y_block, words: np.ndarray, log_w: np.ndarray) -> np.ndarray:
    y = np.asarray(y_block, dtype=np.int64).reshape(-1)
    if y.size != words.shape[1]:
        raise InvalidInputError(f"received block has {y.size} symbols, words have {words.shape[1]}")
    return log_w[words, y[None, :]].sum(axis=1)


def decode_small(y1_block, codebook: Codebook, fam: StateChannelFamily, s: int, key: int, message=None):
    """ML-decode one message block under ``w1[s]`` and strip the pad.

    The message index is ``m * |n| + n``; the transmitted first index is
    ``(m + key) mod |m|``.  Returns ``(m_hat, success)`` where ``success`` is
    ``None`` when ``message`` is not given.
    """
    ll = word_log_likelihoods(y1_block, codebook.words, np.log(fam.w1[s]))
    idx = int(np.argmax(ll))
    m_pad, n_bin, _ = (int(v) for v in codebook.split(idx))
    dm, dn, _ = codebook.index_dims
    m_hat = ((m_pad - key) % dm) * dn + n_bin
    return m_hat, (None if message is None else m_hat == int(message))


def decode_signal(y1_block, signal_words: np.ndarray, fam: StateChannelFamily, key: int) -> int:
    """Recover the transmitter's state estimate from the padded signalling word.

    Word ``j`` stands for state ``(j - key) mod |S|`` and is scored under that
    state's channel.
    """
    theta = fam.num_states
    scores = np.empty(theta)
    for j in range(theta):
        s = (j - key) % theta
        scores[j] = word_log_likelihoods(y1_block, signal_words[j : j + 1], np.log(fam.w1[s]))[0]
    j = int(np.argmax(scores))
    return (j - key) % theta
