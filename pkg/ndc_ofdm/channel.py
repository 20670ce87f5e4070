"""
Indoor line-of-sight optical MIMO channel.

Features:
- Lambertian DC-gain evaluation for a single LED/photodiode pair
- Gain matrices assembled from per-pair link geometry
- Preset ideal (H1-H8) and practical (HPrac1-HPrac4) 2x2 matrices
- Propagation with real-valued AWGN per receive branch
- Plain-text matrix import/export (row-major, whitespace separated)
"""

import logging
import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, Optional, Union

import numpy as np

from ndc_ofdm.errors import ChannelLookupError, DomainError, InputSizeError, MatrixInversionError
from ndc_ofdm.results import atomic_write

logger = logging.getLogger(__name__)

# Matrices with a larger condition number are treated as singular
MAX_CONDITION_NUMBER = 1e12


@dataclass
class LinkGeometry:
    """
    Geometry of one transmitter/receiver pair.

    Attributes:
        semiangle: LED half-power semiangle in degrees
        detector_area: Photodiode area in m^2
        distance: Transmitter to receiver distance in m
        radiant_angle: Angle of emission in degrees
        incident_angle: Angle of incidence in degrees
        filter_gain: Optical filter gain
        concentrator_gain: Optical concentrator gain
        fov: Receiver field of view in degrees
    """
    semiangle: float
    detector_area: float
    distance: float
    radiant_angle: float = 0.0
    incident_angle: float = 0.0
    filter_gain: float = 1.0
    concentrator_gain: float = 1.0
    fov: float = 90.0

    def validate(self) -> None:
        if self.detector_area <= 0:
            raise DomainError(f"Detector area must be positive, got {self.detector_area}")
        if self.distance <= 0:
            raise DomainError(f"Distance must be positive, got {self.distance}")
        if not 0 < self.semiangle < 90:
            raise DomainError(f"Semiangle must lie in (0, 90) degrees, got {self.semiangle}")
        if self.incident_angle < 0 or self.radiant_angle < 0:
            raise DomainError("Radiant and incident angles must be nonnegative")


@dataclass
class NoiseModel:
    """Real AWGN per receive branch; sigma_n = sqrt(N0 / 2)."""
    sigma_n: float

    def __post_init__(self):
        if not self.sigma_n >= 0:
            raise DomainError(f"Noise standard deviation must be >= 0, got {self.sigma_n}")

    @classmethod
    def from_n0(cls, n0: float) -> "NoiseModel":
        return cls(sigma_n=math.sqrt(n0 / 2.0))

    @property
    def n0(self) -> float:
        return 2.0 * self.sigma_n ** 2


@dataclass
class ChannelMatrix:
    """
    N_r x N_t real DC-gain matrix with its cached inverse.

    The inverse is None when the matrix is not square or is numerically
    singular.
    """
    gains: np.ndarray
    name: str = "custom"
    inverse: Optional[np.ndarray] = field(init=False, default=None, repr=False)

    def __post_init__(self):
        self.gains = np.atleast_2d(np.asarray(self.gains, dtype=np.float64))
        if self.gains.ndim != 2:
            raise InputSizeError(f"Channel matrix must be 2-D, got shape {self.gains.shape}")
        rows, cols = self.gains.shape
        if rows == cols and np.all(np.isfinite(self.gains)):
            if np.linalg.cond(self.gains) < MAX_CONDITION_NUMBER:
                self.inverse = np.linalg.inv(self.gains)

    @property
    def n_receivers(self) -> int:
        return int(self.gains.shape[0])

    @property
    def n_transmitters(self) -> int:
        return int(self.gains.shape[1])

    @property
    def is_invertible(self) -> bool:
        return self.inverse is not None

    def require_inverse(self) -> np.ndarray:
        if self.inverse is None:
            raise MatrixInversionError(
                f"Channel {self.name} with shape {self.gains.shape} is not invertible")
        return self.inverse


def lambertian_order(semiangle: float) -> float:
    """
    Lambertian order beta = -ln 2 / ln(cos(semiangle)).

    Args:
        semiangle: Half-power semiangle in degrees, strictly inside (0, 90)

    Returns:
        Lambertian order
    """
    if not 0 < semiangle < 90:
        raise DomainError(f"Semiangle must lie in (0, 90) degrees, got {semiangle}")
    return -math.log(2.0) / math.log(math.cos(math.radians(semiangle)))


def los_gain(geometry: LinkGeometry) -> float:
    """
    LOS DC gain of one link; zero outside the receiver field of view.
    """
    geometry.validate()
    if geometry.incident_angle > geometry.fov:
        return 0.0
    beta = lambertian_order(geometry.semiangle)
    phi = math.radians(geometry.radiant_angle)
    psi = math.radians(geometry.incident_angle)
    return ((beta + 1.0) * geometry.detector_area / (2.0 * math.pi * geometry.distance ** 2)
            * math.cos(phi) ** beta * geometry.filter_gain * geometry.concentrator_gain
            * math.cos(psi))


def gain_matrix(links: Dict[tuple, LinkGeometry], name: str = "geometry") -> ChannelMatrix:
    """
    Assemble H from per-pair geometry.

    Args:
        links: Mapping of (receiver, transmitter), both 1-based, to geometry.
            Every pair of the implied N_r x N_t grid must be present.
        name: Name attached to the matrix

    Returns:
        ChannelMatrix with h[r-1, t-1] = los_gain(links[(r, t)])
    """
    if not links:
        raise InputSizeError("No links given")
    n_r = max(r for r, _ in links)
    n_t = max(t for _, t in links)
    missing = [(r, t) for r in range(1, n_r + 1) for t in range(1, n_t + 1) if (r, t) not in links]
    if missing:
        raise InputSizeError(f"Missing geometry for (rx, tx) pairs: {missing}")
    gains = np.zeros((n_r, n_t))
    for (r, t), geometry in links.items():
        gains[r - 1, t - 1] = los_gain(geometry)
        if gains[r - 1, t - 1] == 0.0:
            logger.info(f"Link rx{r}-tx{t} is outside the field of view, gain set to 0")
    return ChannelMatrix(gains=gains, name=name)


_PRESETS = {
    "H1": [[1.0, 0.0], [0.0, 1.0]],
    "H2": [[1.0, 0.3], [0.3, 1.0]],
    "H3": [[1.0, 0.5], [0.5, 1.0]],
    "H4": [[1.0, 0.7], [0.7, 1.0]],
    "H5": [[1.0, 0.0], [0.0, 0.7]],
    "H6": [[1.0, 0.0], [0.3, 0.7]],
    "H7": [[1.0, 0.5], [0.0, 0.7]],
    "H8": [[1.0, 0.5], [0.3, 0.7]],
    "HPrac1": [[0.1889e-5, 0.0713e-5], [0.0713e-5, 0.1889e-5]],
    "HPrac2": [[0.3847e-5, 0.1889e-5], [0.1889e-5, 0.3847e-5]],
    "HPrac3": [[0.1889e-5, 0.0713e-5], [0.1157e-5, 0.1889e-5]],
    "HPrac4": [[0.3847e-5, 0.2691e-5], [0.1889e-5, 0.3847e-5]],
}

IDEAL_CHANNELS = ("H1", "H2", "H3", "H4", "H5", "H6", "H7", "H8")
PRACTICAL_CHANNELS = ("HPrac1", "HPrac2", "HPrac3", "HPrac4")


def preset_channels() -> Dict[str, ChannelMatrix]:
    """The twelve preset 2x2 matrices, keyed H1..H8 and HPrac1..HPrac4."""
    return {name: ChannelMatrix(gains=np.array(gains), name=name) for name, gains in _PRESETS.items()}


def _normalize_channel_id(name: str) -> str:
    return re.sub(r"[\s_\-]", "", str(name)).lower()


def get_channel(name: str) -> ChannelMatrix:
    """
    Look up a preset by id; 'HPrac1', 'H_Prac1' and 'hprac1' are equivalent.

    Raises:
        ChannelLookupError: if the id is unknown
    """
    wanted = _normalize_channel_id(name)
    for preset, gains in _PRESETS.items():
        if _normalize_channel_id(preset) == wanted:
            return ChannelMatrix(gains=np.array(gains), name=preset)
    raise ChannelLookupError(f"Unknown channel id: {name} (known: {', '.join(_PRESETS)})")


def propagate(channel: ChannelMatrix, s: np.ndarray, noise: NoiseModel,
              rng: Optional[np.random.Generator] = None) -> np.ndarray:
    """
    Received block y = H s + w.

    Args:
        channel: Channel matrix H
        s: Transmitted vector (N_t,) or block (N_t, N)
        noise: Noise model; sigma_n = 0 disables noise
        rng: Random stream used for the noise draws

    Returns:
        Received vector or block with N_r rows
    """
    s = np.asarray(s, dtype=np.float64)
    if s.shape[0] != channel.n_transmitters:
        raise InputSizeError(
            f"Signal has {s.shape[0]} rows but the channel has {channel.n_transmitters} transmitters")
    y = channel.gains @ s
    if noise.sigma_n > 0:
        if rng is None:
            raise InputSizeError("A random stream is required when sigma_n > 0")
        y = y + rng.normal(0.0, noise.sigma_n, size=y.shape)
    return y


def load_matrix(path: Union[str, Path]) -> ChannelMatrix:
    """Read a row-major, whitespace-separated matrix file."""
    path = Path(path)
    gains = np.loadtxt(path, dtype=np.float64, ndmin=2)
    return ChannelMatrix(gains=gains, name=path.stem)


def format_matrix(matrix: Union[ChannelMatrix, np.ndarray]) -> str:
    """Row-major text form of a gain matrix, one row per line."""
    gains = matrix.gains if isinstance(matrix, ChannelMatrix) else np.atleast_2d(matrix)
    return "".join(" ".join(f"{value:.10e}" for value in row) + "\n" for row in gains)


def save_matrix(path: Union[str, Path], matrix: Union[ChannelMatrix, np.ndarray]) -> Path:
    """Write a gain matrix file readable by load_matrix; the write is atomic."""
    return atomic_write(path, format_matrix(matrix))


def link_geometries(entries: Iterable[dict], defaults: Optional[dict] = None) -> Dict[tuple, LinkGeometry]:
    """
    Build a (rx, tx) -> LinkGeometry mapping from plain dictionaries.

    Each entry needs 'rx' and 'tx' (1-based) plus any LinkGeometry field;
    missing fields fall back to ``defaults``.
    """
    defaults = dict(defaults or {})
    links = {}
    for entry in entries:
        merged = {**defaults, **entry}
        rx, tx = int(merged.pop("rx")), int(merged.pop("tx"))
        geometry = LinkGeometry(**merged)
        geometry.validate()
        links[(rx, tx)] = geometry
    return links
