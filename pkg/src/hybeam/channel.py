"""Array response vectors and clustered mmWave channel generation.

The channel is a narrowband clustered model: each user's vector is a sum of
``n_clusters * n_rays`` propagation paths, with Laplacian-distributed angles
around uniformly drawn cluster centers and complex Gaussian path gains.
"""

from dataclasses import dataclass, field

import numpy as np

TWO_PI = 2.0 * np.pi


def wrap_angle(x):
    """Wrap angle(s) to [-pi, pi)."""
    return np.mod(np.asarray(x) + np.pi, TWO_PI) - np.pi


@dataclass(frozen=True)
class ArrayGeometry:
    """Transmit array layout: 'ula' with m elements, or 'upa' with m1 x m2."""

    kind: str = "ula"
    m: int = 16
    m1: int = 0
    m2: int = 0
    spacing_ratio: float = 0.5  # element spacing over wavelength

    def __post_init__(self):
        if self.kind not in ("ula", "upa"):
            raise ValueError(f"unknown array kind {self.kind!r}")
        if self.kind == "upa":
            if self.m1 < 1 or self.m2 < 1:
                raise ValueError("UPA requires m1 >= 1 and m2 >= 1")
            object.__setattr__(self, "m", self.m1 * self.m2)
        if self.m < 1:
            raise ValueError("antenna count must be >= 1")
        if self.spacing_ratio <= 0:
            raise ValueError("spacing_ratio must be positive")

    @staticmethod
    def ula(m, spacing_ratio=0.5):
        return ArrayGeometry(kind="ula", m=m, spacing_ratio=spacing_ratio)

    @staticmethod
    def upa(m1, m2, spacing_ratio=0.5):
        return ArrayGeometry(kind="upa", m1=m1, m2=m2, spacing_ratio=spacing_ratio)


@dataclass(frozen=True)
class ChannelParams:
    """Clustered channel parameters.

    ``cluster_power`` is the per-cluster gain variance; a scalar applies the
    same variance to every cluster. ``elevation_spread`` defaults to the
    azimuth spread when not given.
    """

    n_clusters: int = 6
    n_rays: int = 8
    angular_spread: float = np.deg2rad(7.5)
    elevation_spread: float = None
    cluster_power: object = 1.0

    def __post_init__(self):
        if self.n_clusters < 1 or self.n_rays < 1:
            raise ValueError("cluster and ray counts must be >= 1")
        if self.angular_spread <= 0:
            raise ValueError("angular_spread must be positive")
        if self.elevation_spread is None:
            object.__setattr__(self, "elevation_spread", self.angular_spread)
        if self.elevation_spread <= 0:
            raise ValueError("elevation_spread must be positive")
        powers = np.atleast_1d(np.asarray(self.cluster_power, dtype=float))
        if powers.size == 1:
            powers = np.full(self.n_clusters, powers[0])
        if powers.size != self.n_clusters:
            raise ValueError("cluster_power must be scalar or length n_clusters")
        if np.any(powers <= 0):
            raise ValueError("cluster powers must be positive")
        object.__setattr__(self, "cluster_power", powers)


@dataclass
class ChannelRealization:
    """K user channel vectors plus the per-path draw that produced them."""

    h: np.ndarray            # (K, M) complex
    azimuth: np.ndarray      # (K, n_clusters, n_rays)
    elevation: np.ndarray    # (K, n_clusters, n_rays); zeros for ULA
    gains: np.ndarray        # (K, n_clusters, n_rays) complex
    seed: int
    geometry: ArrayGeometry = None
    params: ChannelParams = None

    @property
    def n_users(self):
        return self.h.shape[0]

    @property
    def n_antennas(self):
        return self.h.shape[1]


def ula_response(geometry, phi):
    """Normalized uniform-linear-array response at azimuth ``phi``."""
    if geometry.kind != "ula":
        raise ValueError("ula_response requires ULA geometry")
    m = np.arange(geometry.m)
    phase = TWO_PI * geometry.spacing_ratio * np.sin(phi)
    return np.exp(1j * phase * m) / np.sqrt(geometry.m)


def upa_response(geometry, phi, theta):
    """Normalized uniform-planar-array response at azimuth/elevation.

    Element order runs the first axis fastest: flat index = n2 * m1 + n1 for
    axis indices 0 <= n1 < m1, 0 <= n2 < m2.
    """
    if geometry.kind != "upa":
        raise ValueError("upa_response requires UPA geometry")
    n1 = np.arange(geometry.m1)
    n2 = np.arange(geometry.m2)
    c = TWO_PI * geometry.spacing_ratio
    phase = c * (np.sin(phi) * np.sin(theta) * n1[None, :] + np.cos(theta) * n2[:, None])
    vec = np.exp(1j * phase).reshape(-1)
    return vec / np.sqrt(geometry.m)


def steering(geometry, phi, theta=0.5 * np.pi):
    """Array response for either geometry (theta ignored for ULA)."""
    if geometry.kind == "ula":
        return ula_response(geometry, phi)
    return upa_response(geometry, phi, theta)


def sample_laplacian_angle(mean, spread, rng):
    """Draw one angle from Laplacian(mean, std=spread), wrapped to [-pi, pi)."""
    if spread <= 0:
        raise ValueError("spread must be positive")
    # scale b = spread / sqrt(2) so the standard deviation equals spread
    return float(wrap_angle(rng.laplace(mean, spread / np.sqrt(2.0))))


def _laplacian_angles(means, spread, shape, rng):
    draws = rng.laplace(0.0, spread / np.sqrt(2.0), size=shape)
    return wrap_angle(means[..., None] + draws)


def gen_channel(params, geometry, n_users, rng):
    """Generate a ChannelRealization for ``n_users`` single-antenna users.

    ``rng`` may be an integer seed or a numpy Generator; in the latter case a
    child seed is drawn so the realization stays reproducible from the stored
    seed alone.
    """
    if isinstance(rng, (int, np.integer)):
        seed = int(rng)
    else:
        seed = int(rng.integers(0, 2**63 - 1))
    gen = np.random.default_rng(seed)

    ncl, nray = params.n_clusters, params.n_rays
    shape = (n_users, ncl, nray)

    mean_az = gen.uniform(-np.pi, np.pi, size=(n_users, ncl))
    azimuth = _laplacian_angles(mean_az, params.angular_spread, shape, gen)
    if geometry.kind == "upa":
        mean_el = gen.uniform(-np.pi, np.pi, size=(n_users, ncl))
        elevation = _laplacian_angles(mean_el, params.elevation_spread, shape, gen)
    else:
        elevation = np.zeros(shape)

    std = np.sqrt(params.cluster_power / 2.0)[None, :, None]
    gains = std * (gen.standard_normal(shape) + 1j * gen.standard_normal(shape))

    scale = np.sqrt(geometry.m / (ncl * nray))
    h = np.zeros((n_users, geometry.m), dtype=complex)
    for k in range(n_users):
        for c in range(ncl):
            for r in range(nray):
                h[k] += gains[k, c, r] * steering(geometry, azimuth[k, c, r], elevation[k, c, r])
    h *= scale

    return ChannelRealization(
        h=h, azimuth=azimuth, elevation=elevation, gains=gains, seed=seed,
        geometry=geometry, params=params,
    )


def save_channels(path, real):
    """Write a realization as CSV: one header line, then K rows of re,im pairs.

    Header: M,K,n_clusters,n_rays,seed. Each following row holds user k's
    vector as re(h[0]),im(h[0]),re(h[1]),im(h[1]),...
    """
    k, m = real.h.shape
    with open(path, "w") as f:
        f.write(f"{m},{k},{real.params.n_clusters if real.params else 0},"
                f"{real.params.n_rays if real.params else 0},{real.seed}\n")
        for row in real.h:
            parts = []
            for v in row:
                parts.append(repr(float(v.real)))
                parts.append(repr(float(v.imag)))
            f.write(",".join(parts) + "\n")


def load_channels(path):
    """Read channel vectors written by save_channels; draw record is not kept."""
    with open(path) as f:
        header = f.readline().strip().split(",")
        m, k, ncl, nray, seed = (int(x) for x in header)
        h = np.zeros((k, m), dtype=complex)
        for i in range(k):
            vals = [float(x) for x in f.readline().strip().split(",")]
            if len(vals) != 2 * m:
                raise ValueError(f"row {i}: expected {2 * m} values, got {len(vals)}")
            arr = np.asarray(vals).reshape(m, 2)
            h[i] = arr[:, 0] + 1j * arr[:, 1]
    real = ChannelRealization(
        h=h, azimuth=np.zeros((k, max(ncl, 1), max(nray, 1))),
        elevation=np.zeros((k, max(ncl, 1), max(nray, 1))),
        gains=np.zeros((k, max(ncl, 1), max(nray, 1)), dtype=complex),
        seed=seed,
    )
    return real
