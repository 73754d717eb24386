"""RF beamforming codebooks and their array-factor patterns.

All codebooks are M x N matrices whose columns are constant-modulus
beamforming vectors with entries of modulus 1/sqrt(M).
"""

from dataclasses import dataclass

import numpy as np

from .channel import steering


@dataclass(frozen=True)
class Codebook:
    entries: np.ndarray  # (M, N) complex, constant modulus
    kind: str

    @property
    def m(self):
        return self.entries.shape[0]

    @property
    def n(self):
        return self.entries.shape[1]

    def column(self, n):
        return self.entries[:, n]

    def gram(self):
        return self.entries.conj().T @ self.entries


def _check_dims(m, n):
    if m < 1 or n < 1:
        raise ValueError("codebook dimensions must be positive")


def quantized_beam_codebook(m, n, q):
    """q-bit resolution beam codebook with uniform maximum gain.

    Entry (row i, col j, 1-based) is j_unit**((4*(i-1)*(j-1) - 2*n) / 2**q)
    scaled by 1/sqrt(m), where fractional powers of the imaginary unit are
    taken on the principal branch: j**x = exp(1j * x * pi / 2).
    """
    _check_dims(m, n)
    if q < 1:
        raise ValueError("phase resolution q must be >= 1")
    mi = np.arange(m)[:, None]
    ni = np.arange(n)[None, :]
    expo = (4.0 * mi * ni - 2.0 * n) / 2.0**q
    f = np.exp(1j * expo * np.pi / 2.0) / np.sqrt(m)
    return Codebook(entries=f, kind=f"quantized_beam_q{q}")


def ieee802153c_codebook(m, n):
    """90-degree phase resolution codebook (entries in {1, j, -1, -j}/sqrt(m))."""
    _check_dims(m, n)
    if n % 4 != 0:
        raise ValueError("codebook size must be divisible by 4")
    mi = np.arange(m)[:, None]
    ni = np.arange(n)[None, :]
    expo = np.floor(4.0 * mi * np.mod(ni + n // 4, n) / n)
    f = np.exp(1j * expo * np.pi / 2.0) / np.sqrt(m)
    return Codebook(entries=f, kind="ieee802153c")


def dft_codebook(m, n):
    """DFT codebook: entry (i, j) = exp(-2j*pi*(i-1)*(j-1)/m) / sqrt(m)."""
    _check_dims(m, n)
    mi = np.arange(m)[:, None]
    ni = np.arange(n)[None, :]
    f = np.exp(-2j * np.pi * mi * ni / m) / np.sqrt(m)
    return Codebook(entries=f, kind="dft")


def make_codebook(kind, m, n, q=3):
    """Factory by kind name: 'dft', 'ieee802153c', or 'quantized_beam'."""
    if kind == "dft":
        return dft_codebook(m, n)
    if kind == "ieee802153c":
        return ieee802153c_codebook(m, n)
    if kind in ("quantized_beam", "beam"):
        return quantized_beam_codebook(m, n, q)
    raise ValueError(f"unknown codebook kind {kind!r}")


def array_factor(codeword, geometry, angles):
    """Beam gain |a(phi)^H f|^2 over a list of azimuth angles.

    Normalized so a codeword perfectly steered at phi0 (i.e. f = a(phi0))
    has unit gain there; any constant-modulus codeword peaks at <= 1.
    """
    codeword = np.asarray(codeword)
    if codeword.shape[0] != geometry.m:
        raise ValueError("codeword length must match antenna count")
    gains = np.empty(len(angles))
    for i, phi in enumerate(angles):
        a = steering(geometry, phi)
        gains[i] = np.abs(np.vdot(a, codeword)) ** 2
    return gains
