"""
Receiver chain: zero-forcing equalisation, spatial index detection,
bipolar reconstruction and OFDM demodulation.
"""

import logging
from dataclasses import dataclass
from typing import Tuple, Union

import numpy as np

from ndc_ofdm.channel import ChannelMatrix
from ndc_ofdm.errors import DomainError, InputSizeError, MatrixInversionError
from ndc_ofdm.modem import (
    QamConstellation,
    Scheme,
    TimeFrame,
    forward_transform,
    labels_to_bits,
    qam_demap,
    slot_of_sample,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class EqualizedBlock:
    """N_t x N matrix G of per-LED estimates after ZF."""
    G: np.ndarray

    @property
    def n_transmitters(self) -> int:
        return int(self.G.shape[0])

    @property
    def size(self) -> int:
        return int(self.G.shape[1])


@dataclass(frozen=True, eq=False)
class IndexEstimate:
    """Estimated active LED per sample, 1-based."""
    indices: np.ndarray


def zf_equalize(channel: ChannelMatrix, Y: np.ndarray) -> EqualizedBlock:
    """
    Zero-forcing equalisation G = H^-1 Y.

    Args:
        channel: Square, invertible channel matrix known at the receiver
        Y: (N_r, N) received block

    Returns:
        EqualizedBlock

    Raises:
        MatrixInversionError: if H is singular or not square
    """
    if channel.n_receivers != channel.n_transmitters:
        raise MatrixInversionError(f"ZF needs a square channel, got {channel.gains.shape}")
    inverse = channel.require_inverse()
    Y = np.asarray(Y, dtype=np.float64)
    if Y.ndim == 1:
        Y = Y[:, None]
    if Y.shape[0] != channel.n_receivers:
        raise InputSizeError(f"Received block has {Y.shape[0]} rows, expected {channel.n_receivers}")
    return EqualizedBlock(G=inverse @ Y)


def _as_matrix(G: Union[EqualizedBlock, np.ndarray]) -> np.ndarray:
    if isinstance(G, EqualizedBlock):
        return G.G
    return np.atleast_2d(np.asarray(G, dtype=np.float64))


def _as_indices(indices: Union[IndexEstimate, np.ndarray]) -> np.ndarray:
    if isinstance(indices, IndexEstimate):
        return indices.indices
    return np.asarray(indices, dtype=np.int64)


def detect_active_index(G: Union[EqualizedBlock, np.ndarray], slot_length: int = 1) -> IndexEstimate:
    """
    Spatial detector: the LED with the largest equalised value is active.

    With slot_length > 1 the per-LED values are summed over each interleaved
    slot first and the decision is shared by all samples of the slot.
    Ties resolve to the lowest index.
    """
    G = _as_matrix(G)
    if slot_length == 1:
        return IndexEstimate(indices=np.argmax(G, axis=0) + 1)
    n = G.shape[1]
    slots = slot_of_sample(n, slot_length)
    n_slots = n // slot_length
    scores = np.zeros((G.shape[0], n_slots))
    for row in range(G.shape[0]):
        scores[row] = np.bincount(slots, weights=G[row], minlength=n_slots)
    slot_led = np.argmax(scores, axis=0)
    return IndexEstimate(indices=slot_led[slots] + 1)


def _require_two_leds(G: np.ndarray) -> None:
    if G.shape[0] != 2:
        raise InputSizeError(f"Bipolar reconstruction needs N_t = 2, got {G.shape[0]}")


def reconstruct_sign_select(G: Union[EqualizedBlock, np.ndarray],
                            indices: Union[IndexEstimate, np.ndarray]) -> TimeFrame:
    """x'(k) = G(1, k) when LED 1 was detected, -G(2, k) when LED 2 was."""
    G = _as_matrix(G)
    _require_two_leds(G)
    l_hat = _as_indices(indices)
    return TimeFrame(samples=np.where(l_hat == 1, G[0], -G[1]))


def reconstruct_subtract(G: Union[EqualizedBlock, np.ndarray]) -> TimeFrame:
    """x'(k) = G(1, k) - G(2, k); doubles the noise variance."""
    G = _as_matrix(G)
    _require_two_leds(G)
    return TimeFrame(samples=G[0] - G[1])


def data_bins(spectrum: np.ndarray, scheme: Scheme) -> np.ndarray:
    """Data-carrying bins of a demodulated frame, ACO bins rescaled by 2."""
    half = spectrum.size // 2
    if scheme is Scheme.ACO_OSM:
        # clipping halves the odd-bin amplitudes
        return 2.0 * spectrum[1:half:2]
    return spectrum[1:half]


def demodulate_frame(x_hat: Union[TimeFrame, np.ndarray], constellation: QamConstellation,
                     scheme: Union[Scheme, str], n: int = None) -> np.ndarray:
    """
    FFT the reconstructed frame, extract the data bins and ML-demap them.

    Args:
        x_hat: Reconstructed time-domain frame
        constellation: Constellation used at the transmitter
        scheme: NDC and DCO-OSM use bins 1..N/2-1, ACO-OSM the odd ones
        n: Expected frame size (checked when given)

    Returns:
        Recovered data bits
    """
    scheme = Scheme.parse(scheme)
    samples = x_hat.samples if isinstance(x_hat, TimeFrame) else np.asarray(x_hat, dtype=np.float64)
    if n is not None and samples.size != n:
        raise InputSizeError(f"Frame has {samples.size} samples, expected {n}")
    spectrum = forward_transform(samples)
    return qam_demap(data_bins(spectrum, scheme), constellation)


def recover_osm_bits(G: Union[EqualizedBlock, np.ndarray], indices: Union[IndexEstimate, np.ndarray],
                     constellation: QamConstellation, scheme: Union[Scheme, str],
                     slot_length: int = 1) -> Tuple[np.ndarray, np.ndarray]:
    """
    Split an OSM frame into index bits and data bits.

    Args:
        G: Equalised block
        indices: Detected LED per sample
        constellation: Data constellation
        scheme: DCO-OSM or ACO-OSM
        slot_length: Samples sharing one index group, as used at the transmitter

    Returns:
        Tuple of (index bits, data bits)
    """
    scheme = Scheme.parse(scheme)
    if scheme is Scheme.NDC:
        raise DomainError("NDC frames carry no index bits; use sign-select reconstruction")
    G = _as_matrix(G)
    l_hat = _as_indices(indices)
    n_t, n = G.shape
    if n_t & (n_t - 1):
        raise DomainError(f"Transmitter count must be a power of two, got {n_t}")
    bits_per_slot = n_t.bit_length() - 1
    n_slots = n // slot_length
    # the first n_slots samples cover every slot exactly once
    index_bits = labels_to_bits(l_hat[:n_slots] - 1, bits_per_slot)
    selected = G[l_hat - 1, np.arange(n)]
    data_bits = demodulate_frame(selected, constellation, scheme)
    return index_bits, data_bits
