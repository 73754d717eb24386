"""Transmit power-consumption model and reported rate / energy-efficiency metrics.

All powers are in mW with noise power sigma2 = 1 mW by default, so
SNR_dB = 10*log10(P). Optimizers work in nats; only the reported metrics
here convert to bits (division by ln 2).
"""

from dataclasses import dataclass

import numpy as np

LN2 = float(np.log(2.0))


@dataclass(frozen=True)
class PowerModel:
    """Circuit power terms (mW), PA inefficiency, and the link budget."""

    p_rfc: float = 43.0
    p_ps: float = 30.0
    p_dac: float = 200.0
    p_pa: float = 20.0
    p_mixer: float = 19.0
    p_bb: float = 300.0
    p_cool: float = 200.0
    epsilon: float = 1.0
    p_max: float = 100.0
    sigma2: float = 1.0

    def __post_init__(self):
        for name in ("p_rfc", "p_ps", "p_dac", "p_pa", "p_mixer", "p_bb", "p_cool"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")
        if self.epsilon < 1:
            raise ValueError("PA inefficiency epsilon must be >= 1")

    def static_power(self, m):
        return m * (self.p_pa + self.p_mixer) + self.p_bb + self.p_cool

    def per_chain_power(self, m):
        return self.p_rfc + m * self.p_ps + self.p_dac

    @staticmethod
    def with_snr_db(snr_db, **kwargs):
        model = PowerModel(**kwargs)
        p = model.sigma2 * 10.0 ** (snr_db / 10.0)
        return PowerModel(**{**kwargs, "p_max": p})


def dynamic_power(active_chains, m, model):
    """Total consumed circuit power with ``active_chains`` RF chains on."""
    if active_chains < 0:
        raise ValueError("active chain count must be >= 0")
    return active_chains * model.per_chain_power(m) + model.static_power(m)


def user_sinrs(h, f_hat, g_bar, sigma2):
    """Per-user downlink SINR on true channels.

    h: (K, M) true channels; f_hat: (M, L) RF codewords; g_bar: (K, L)
    baseband vectors (user k's vector in row k).
    """
    h = np.asarray(h)
    k = h.shape[0]
    # rx[k, l] = h_k^H F g_l
    rx = h.conj() @ (np.asarray(f_hat) @ np.asarray(g_bar).T)
    p = np.abs(rx) ** 2
    sig = np.diag(p)
    interf = p.sum(axis=1) - sig
    return sig / (interf + sigma2), sig, interf


def sum_rate(h, f_hat, g_bar, sigma2):
    """Sum rate on true channels; returns (nats, bits)."""
    sinr, _, _ = user_sinrs(h, f_hat, g_bar, sigma2)
    nats = float(np.sum(np.log1p(sinr)))
    return nats, nats / LN2


def transmit_power(f_hat, g_bar):
    """Radiated power sum_k ||F_hat g_k||^2."""
    tx = np.asarray(f_hat) @ np.asarray(g_bar).T
    return float(np.sum(np.abs(tx) ** 2))


def system_ee(h, f_hat, g_bar, model, active_chains):
    """Hybrid-precoder energy efficiency in bits/Hz/Joule on true channels."""
    m = np.asarray(h).shape[1]
    sinr, _, _ = user_sinrs(h, f_hat, g_bar, model.sigma2)
    rate_bits = float(np.sum(np.log1p(sinr))) / LN2
    denom = model.epsilon * transmit_power(f_hat, g_bar) + dynamic_power(
        active_chains, m, model
    )
    return rate_bits / denom


def digital_ee(h, g, model, m):
    """Fully digital precoder EE: one RF chain per antenna, no phase shifters."""
    g = np.asarray(g)
    if g.shape[1] != m:
        raise ValueError("digital precoder must have one entry per antenna")
    sinr, _, _ = user_sinrs(h, np.eye(m), g, model.sigma2)
    rate_bits = float(np.sum(np.log1p(sinr))) / LN2
    denom = (
        model.epsilon * float(np.sum(np.abs(g) ** 2))
        + m * (model.p_rfc + model.p_dac + model.p_pa)
        + model.p_bb
        + model.p_cool
    )
    return rate_bits / denom
