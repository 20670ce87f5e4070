"""
Bit-to-waveform conversion for optical OFDM.

This module turns information bits into nonnegative LED drive waveforms:
- Gray-coded M-QAM mapping and maximum-likelihood demapping
- Hermitian-symmetric OFDM framing and unitary inverse/forward transforms
- DC-biased (DCO), asymmetrically clipped (ACO) and non-DC-biased (NDC)
  unipolar modulators
- Optical spatial modulation (OSM) assignment of samples to LEDs

Every function is a pure function of its arguments.
"""

import logging
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import Tuple, Union

import numpy as np
import scipy.fft

from ndc_ofdm.errors import DomainError, FrameInvariantError, InputSizeError

logger = logging.getLogger(__name__)

HERMITIAN_TOLERANCE = 1e-9

ArrayLike = Union[np.ndarray, list, tuple]


class Scheme(Enum):
    """Unipolar OFDM schemes compared by the toolkit."""
    NDC = "NDC"
    DCO_OSM = "DCO-OSM"
    ACO_OSM = "ACO-OSM"

    @classmethod
    def parse(cls, value: Union[str, "Scheme"]) -> "Scheme":
        """Accept 'NDC', 'DCO', 'dco-osm', 'ACO_OSM' and similar spellings."""
        if isinstance(value, Scheme):
            return value
        key = str(value).strip().upper().replace("_", "-")
        aliases = {"NDC": cls.NDC, "NDC-OFDM": cls.NDC,
                   "DCO": cls.DCO_OSM, "DCO-OSM": cls.DCO_OSM, "DCO-OFDM": cls.DCO_OSM,
                   "ACO": cls.ACO_OSM, "ACO-OSM": cls.ACO_OSM, "ACO-OFDM": cls.ACO_OSM}
        if key not in aliases:
            raise DomainError(f"Unknown scheme: {value}")
        return aliases[key]


@dataclass(frozen=True, eq=False)
class QamConstellation:
    """
    Unit-energy M-QAM constellation.

    Attributes:
        order: Constellation size M (power of two, at least 4)
        points: Complex points indexed by label value
        labels: (M, log2 M) bit patterns, row i is the MSB-first binary of i
    """
    order: int
    points: np.ndarray
    labels: np.ndarray

    @property
    def bits_per_symbol(self) -> int:
        return int(self.labels.shape[1])

    @property
    def min_distance(self) -> float:
        diffs = np.abs(self.points[:, None] - self.points[None, :])
        return float(np.min(diffs[diffs > 0]))


def _is_power_of_two(value: int) -> bool:
    return value >= 1 and (value & (value - 1)) == 0


def _gray(values: np.ndarray) -> np.ndarray:
    return values ^ (values >> 1)


@lru_cache(maxsize=None)
def qam_constellation(order: int) -> QamConstellation:
    """
    Build a Gray-coded QAM constellation normalised to unit average energy.

    Square orders use a square grid. Non-square orders use a rectangular grid
    with one more bit on the in-phase axis (8 = 4x2, 32 = 8x4, ...). Labels
    are Gray-coded per axis, in-phase bits first.

    Args:
        order: Constellation size M

    Returns:
        QamConstellation instance
    """
    if not isinstance(order, (int, np.integer)) or order < 4 or not _is_power_of_two(int(order)):
        raise DomainError(f"QAM order must be a power of two >= 4, got {order}")
    order = int(order)
    k = order.bit_length() - 1
    bits_i = (k + 1) // 2
    bits_q = k // 2
    n_i, n_q = 1 << bits_i, 1 << bits_q

    ii, qq = np.meshgrid(np.arange(n_i), np.arange(n_q), indexing="ij")
    label_values = (_gray(ii) << bits_q) | _gray(qq)
    points = np.empty(order, dtype=np.complex128)
    points[label_values.ravel()] = ((2 * ii - n_i + 1) + 1j * (2 * qq - n_q + 1)).ravel()
    points /= np.sqrt(np.mean(np.abs(points) ** 2))

    labels = labels_to_bits(np.arange(order), k).reshape(order, k)
    return QamConstellation(order=order, points=points, labels=labels)


def bits_to_labels(bits: ArrayLike, bits_per_label: int) -> np.ndarray:
    """Pack an MSB-first bit sequence into integer labels."""
    bits = np.asarray(bits, dtype=np.int64).ravel()
    if bits_per_label == 0:
        if bits.size:
            raise InputSizeError("No bits expected for a zero-width label")
        return np.zeros(0, dtype=np.int64)
    if bits.size % bits_per_label:
        raise InputSizeError(
            f"Bit count {bits.size} is not divisible by {bits_per_label}")
    weights = 1 << np.arange(bits_per_label - 1, -1, -1, dtype=np.int64)
    return bits.reshape(-1, bits_per_label) @ weights


def labels_to_bits(labels: ArrayLike, bits_per_label: int) -> np.ndarray:
    """Unpack integer labels into a flat MSB-first bit sequence."""
    labels = np.asarray(labels, dtype=np.int64).ravel()
    shifts = np.arange(bits_per_label - 1, -1, -1, dtype=np.int64)
    return ((labels[:, None] >> shifts[None, :]) & 1).astype(np.int8).ravel()


def qam_map(bits: ArrayLike, constellation: QamConstellation) -> np.ndarray:
    """
    Map bits to constellation points, log2(M) bits per symbol.

    Args:
        bits: Bit sequence whose length is a multiple of log2(M)
        constellation: Target constellation

    Returns:
        Complex symbol array of length len(bits) / log2(M)
    """
    labels = bits_to_labels(bits, constellation.bits_per_symbol)
    return constellation.points[labels]


def demap_labels(symbols: ArrayLike, constellation: QamConstellation) -> np.ndarray:
    """Labels of the Euclidean-nearest points; ties go to the lowest label."""
    symbols = np.atleast_1d(np.asarray(symbols, dtype=np.complex128))
    diff = symbols[:, None] - constellation.points[None, :]
    distances = diff.real ** 2 + diff.imag ** 2
    # argmin returns the first minimum, and points are stored in label order
    return np.argmin(distances, axis=1)


def qam_demap(symbols: ArrayLike, constellation: QamConstellation) -> np.ndarray:
    """
    Maximum-likelihood hard demapping.

    A scalar symbol yields one bit group; an array yields the concatenated
    bit groups.
    """
    labels = demap_labels(symbols, constellation)
    return labels_to_bits(labels, constellation.bits_per_symbol)


@dataclass(frozen=True, eq=False)
class SpectralFrame:
    """Frequency-domain OFDM frame with Hermitian symmetry."""
    bins: np.ndarray

    @property
    def size(self) -> int:
        return int(self.bins.size)

    def hermitian_error(self) -> float:
        """Largest deviation from the zero-DC, zero-Nyquist, Hermitian invariants."""
        n = self.size
        half = n // 2
        mirror = np.abs(self.bins[half + 1:] - np.conj(self.bins[1:half][::-1]))
        worst = max(abs(self.bins[0]), abs(self.bins[half]))
        if mirror.size:
            worst = max(worst, float(np.max(mirror)))
        return float(worst)

    def validate(self, tolerance: float = HERMITIAN_TOLERANCE) -> None:
        scale = max(1.0, float(np.max(np.abs(self.bins)))) if self.size else 1.0
        error = self.hermitian_error()
        if error > tolerance * scale:
            raise FrameInvariantError(
                f"Spectral frame violates Hermitian symmetry (deviation {error:.3e})")


@dataclass(frozen=True, eq=False)
class TimeFrame:
    """Real time-domain OFDM samples."""
    samples: np.ndarray

    @property
    def size(self) -> int:
        return int(self.samples.size)


@dataclass(frozen=True, eq=False)
class SmFrame:
    """
    Per-LED drive waveforms of a spatially modulated frame.

    Attributes:
        rows: (N_t, N) nonnegative drive values, one row per LED
        active_index: Per-sample active LED, 1-based
    """
    rows: np.ndarray
    active_index: np.ndarray

    @property
    def n_transmitters(self) -> int:
        return int(self.rows.shape[0])

    @property
    def size(self) -> int:
        return int(self.rows.shape[1])

    def emitted_energy(self) -> float:
        return float(np.sum(self.rows ** 2))


def _as_samples(samples: Union[TimeFrame, ArrayLike]) -> np.ndarray:
    if isinstance(samples, TimeFrame):
        return samples.samples
    return np.asarray(samples, dtype=np.float64)


def check_frame_size(n: int) -> int:
    """Validate an OFDM frame size (power of two, at least 8)."""
    if not isinstance(n, (int, np.integer)) or n < 8 or not _is_power_of_two(int(n)):
        raise InputSizeError(f"Frame size must be a power of two >= 8, got {n}")
    return int(n)


def build_spectral_frame(symbols: ArrayLike, n: int) -> SpectralFrame:
    """
    Place N/2-1 symbols on bins 1..N/2-1 and mirror them onto the upper half.

    Args:
        symbols: Exactly N/2-1 complex symbols
        n: Frame size N

    Returns:
        SpectralFrame with zero DC and Nyquist bins
    """
    n = check_frame_size(n)
    symbols = np.asarray(symbols, dtype=np.complex128).ravel()
    half = n // 2
    if symbols.size != half - 1:
        raise InputSizeError(f"Expected {half - 1} symbols for N={n}, got {symbols.size}")
    bins = np.zeros(n, dtype=np.complex128)
    bins[1:half] = symbols
    bins[half + 1:] = np.conj(symbols[::-1])
    return SpectralFrame(bins=bins)


def build_aco_frame(symbols: ArrayLike, n: int) -> SpectralFrame:
    """Hermitian frame with the N/4 symbols on odd bins 1, 3, ..., N/2-1 only."""
    n = check_frame_size(n)
    symbols = np.asarray(symbols, dtype=np.complex128).ravel()
    half = n // 2
    if symbols.size != n // 4:
        raise InputSizeError(f"Expected {n // 4} symbols for ACO with N={n}, got {symbols.size}")
    bins = np.zeros(n, dtype=np.complex128)
    bins[1:half:2] = symbols
    bins[half + 1:] = np.conj(bins[1:half][::-1])
    return SpectralFrame(bins=bins)


def inverse_transform(frame: SpectralFrame) -> TimeFrame:
    """
    Unitary inverse DFT, x(k) = 1/sqrt(N) sum X(m) exp(j 2 pi k m / N).

    Raises:
        FrameInvariantError: if the frame is not Hermitian or the imaginary
            residue of the result exceeds tolerance
    """
    frame.validate()
    x = scipy.fft.ifft(frame.bins, norm="ortho")
    scale = max(1.0, float(np.max(np.abs(x)))) if x.size else 1.0
    residue = float(np.max(np.abs(x.imag))) if x.size else 0.0
    if residue > HERMITIAN_TOLERANCE * scale:
        raise FrameInvariantError(f"Imaginary residue {residue:.3e} after inverse transform")
    return TimeFrame(samples=np.ascontiguousarray(x.real))


def forward_transform(samples: Union[TimeFrame, ArrayLike]) -> np.ndarray:
    """Unitary forward DFT, the inverse of inverse_transform."""
    return scipy.fft.fft(_as_samples(samples), norm="ortho")


def bias_alpha(bias_db: float) -> float:
    """Invert the bias level 10 log10(alpha^2 + 1) dB."""
    if bias_db < 0:
        raise DomainError(f"Bias level must be >= 0 dB, got {bias_db}")
    return float(np.sqrt(10.0 ** (bias_db / 10.0) - 1.0))


def modulate_dco(samples: Union[TimeFrame, ArrayLike], bias_db: float) -> Tuple[TimeFrame, float]:
    """
    Add a DC bias and clip the remaining negative samples at zero.

    The bias is alpha times the frame's empirical RMS value, with alpha taken
    from the bias level in dB.

    Args:
        samples: Bipolar OFDM samples
        bias_db: Bias level in dB

    Returns:
        Tuple of (nonnegative waveform, bias value used)
    """
    x = _as_samples(samples)
    alpha = bias_alpha(bias_db)
    bias = alpha * float(np.sqrt(np.mean(x ** 2))) if x.size else 0.0
    return TimeFrame(samples=np.maximum(x + bias, 0.0)), bias


def modulate_aco(symbols: ArrayLike, n: int) -> TimeFrame:
    """Odd-subcarrier OFDM frame clipped at zero."""
    x = inverse_transform(build_aco_frame(symbols, n)).samples
    return TimeFrame(samples=np.maximum(x, 0.0))


def modulate_ndc(samples: Union[TimeFrame, ArrayLike]) -> SmFrame:
    """
    Split a bipolar frame over two LEDs by sign.

    LED 1 carries the nonnegative samples (zero included), LED 2 the
    magnitudes of the negative ones.
    """
    x = _as_samples(samples)
    positive = x >= 0
    rows = np.vstack([np.where(positive, x, 0.0), np.where(positive, 0.0, -x)])
    active_index = np.where(positive, 1, 2).astype(np.int64)
    return SmFrame(rows=rows, active_index=active_index)


def slot_of_sample(n: int, slot_length: int = 1) -> np.ndarray:
    """
    Index slot of every sample.

    A slot of length L groups the interleaved samples j, j + N/L, j + 2N/L, ...
    With L = 1 every sample is its own slot.
    """
    if slot_length < 1 or n % slot_length:
        raise InputSizeError(f"Slot length {slot_length} does not divide frame size {n}")
    n_slots = n // slot_length
    return np.arange(n) % n_slots


def index_bits_per_frame(n: int, n_transmitters: int, slot_length: int = 1) -> int:
    """Number of index bits one OSM frame carries."""
    if not _is_power_of_two(n_transmitters):
        raise DomainError(f"Transmitter count must be a power of two, got {n_transmitters}")
    return (n // slot_length) * (n_transmitters.bit_length() - 1)


def osm_assign(samples: Union[TimeFrame, ArrayLike], index_bits: ArrayLike,
               n_transmitters: int, slot_length: int = 1) -> SmFrame:
    """
    Route each sample of a unipolar waveform to the LED chosen by index bits.

    Args:
        samples: Nonnegative waveform of length N
        index_bits: log2(N_t) bits per index slot, MSB first; bit group value
            v selects LED v + 1
        n_transmitters: Number of LEDs N_t (power of two)
        slot_length: Samples sharing one index group (1 = per sample)

    Returns:
        SmFrame with exactly one active LED per sample

    Raises:
        DomainError: if any sample is negative
        InputSizeError: if the index bit count does not match
    """
    x = _as_samples(samples)
    if np.any(x < 0):
        raise DomainError("OSM assignment needs a unipolar (nonnegative) waveform")
    n = x.size
    expected = index_bits_per_frame(n, n_transmitters, slot_length)
    index_bits = np.asarray(index_bits, dtype=np.int64).ravel()
    if index_bits.size != expected:
        raise InputSizeError(f"Expected {expected} index bits, got {index_bits.size}")

    slots = slot_of_sample(n, slot_length)
    bits_per_slot = n_transmitters.bit_length() - 1
    if bits_per_slot:
        slot_led = bits_to_labels(index_bits, bits_per_slot)
    else:
        slot_led = np.zeros(n // slot_length, dtype=np.int64)
    led = slot_led[slots]

    rows = np.zeros((n_transmitters, n), dtype=np.float64)
    rows[led, np.arange(n)] = x
    return SmFrame(rows=rows, active_index=led + 1)
