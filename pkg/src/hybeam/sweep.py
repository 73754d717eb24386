"""Beam-sweep training: effective channels under a codebook and feedback sparsification."""

from dataclasses import dataclass

import numpy as np


@dataclass
class EffectiveChannel:
    """Per-user effective channels h_eff = F^H h seen through a codebook.

    ``support`` lists, per user, the codeword indices whose coefficients were
    fed back; entries of ``h_eff`` outside the support are exactly zero.
    ``gram`` caches F^H F for the power accounting downstream.
    """

    h_eff: np.ndarray          # (K, N) complex
    support: list              # K arrays of sorted indices into 0..N-1
    gram: np.ndarray           # (N, N) complex

    @property
    def n_users(self):
        return self.h_eff.shape[0]

    @property
    def n_codewords(self):
        return self.h_eff.shape[1]

    def user_outer(self, k):
        """Rank-one matrix F^H h_k h_k^H F for user k."""
        v = self.h_eff[k]
        return np.outer(v, v.conj())


def effective_channels(codebook, channels):
    """Compute the effective channels of every user with full feedback.

    ``channels`` is a ChannelRealization or a (K, M) complex array.
    """
    h = channels.h if hasattr(channels, "h") else np.asarray(channels)
    if h.ndim != 2 or h.shape[1] != codebook.m:
        raise ValueError(
            f"channel dimension {h.shape} does not match codebook antennas {codebook.m}"
        )
    f = codebook.entries
    h_eff = h @ f.conj()          # row k = (F^H h_k)^T
    n = codebook.n
    support = [np.arange(n) for _ in range(h.shape[0])]
    return EffectiveChannel(h_eff=h_eff, support=support, gram=codebook.gram())


def sparsify_feedback(eff, policy, value):
    """Restrict feedback to the largest coefficients; returns a new object.

    policy 'top_b': keep the ``value`` largest-magnitude coefficients per user
    (ties broken toward the lower index). policy 'threshold': keep entries
    with magnitude >= value * max magnitude of that user.
    """
    k, n = eff.h_eff.shape
    out = np.zeros_like(eff.h_eff)
    support = []
    for u in range(k):
        mag = np.abs(eff.h_eff[u])
        if policy == "top_b":
            b = int(value)
            if b < 0 or b > n:
                raise ValueError("top_b size must be in 0..N")
            # stable sort on (-magnitude) keeps the lower index on ties
            order = np.argsort(-mag, kind="stable")
            keep = np.sort(order[:b])
        elif policy == "threshold":
            eta = float(value)
            if eta < 0:
                raise ValueError("threshold must be nonnegative")
            top = mag.max()
            keep = np.flatnonzero(mag >= eta * top) if top > 0 else np.arange(n)
        else:
            raise ValueError(f"unknown feedback policy {policy!r}")
        out[u, keep] = eff.h_eff[u, keep]
        support.append(keep)
    return EffectiveChannel(h_eff=out, support=support, gram=eff.gram)


def feedback_records(eff):
    """Rows (user, codeword_index, re, im) for every reported coefficient."""
    rows = []
    for u in range(eff.n_users):
        for idx in eff.support[u]:
            c = eff.h_eff[u, idx]
            rows.append((u, int(idx), float(c.real), float(c.imag)))
    return rows


def write_feedback_csv(path, eff):
    with open(path, "w") as f:
        f.write("user,codeword_index,re,im\n")
        for u, idx, re, im in feedback_records(eff):
            f.write(f"{u},{idx},{re!r},{im!r}\n")
