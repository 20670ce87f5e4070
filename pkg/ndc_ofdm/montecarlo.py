"""
Monte Carlo bit-error-rate engine.

Frames are simulated end to end (bits -> waveform -> channel -> ZF ->
detection -> demodulation) under one energy convention shared with the
analytical pipeline. Every frame draws from its own counter-based random
stream keyed by (master seed, point index, frame index), and frames are
reduced in fixed-size rounds, so results do not depend on the number of
workers.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import partial
from typing import List, Optional, Sequence, Tuple

import numpy as np

from ndc_ofdm.channel import ChannelMatrix, NoiseModel, get_channel, propagate
from ndc_ofdm.config import (
    CALIBRATION_FRAMES,
    DEFAULT_FRAME_SIZE,
    DEFAULT_SEED,
    MAX_FRAMES,
    MIN_BITS,
    MIN_ERRORS,
    ROUND_FRAMES,
)
from ndc_ofdm.errors import DomainError, InputSizeError
from ndc_ofdm.modem import (
    Scheme,
    SmFrame,
    build_spectral_frame,
    check_frame_size,
    index_bits_per_frame,
    inverse_transform,
    modulate_aco,
    modulate_dco,
    modulate_ndc,
    osm_assign,
    qam_constellation,
    qam_map,
)
from ndc_ofdm.receiver import (
    detect_active_index,
    demodulate_frame,
    recover_osm_bits,
    reconstruct_sign_select,
    reconstruct_subtract,
    zf_equalize,
)
from ndc_ofdm.results import BerCurve, BerPoint

logger = logging.getLogger(__name__)

RECONSTRUCTIONS = ("sign-select", "subtract")

# Index slot length per scheme; see osm_assign
DEFAULT_SLOT_LENGTH = {Scheme.NDC: 1, Scheme.DCO_OSM: 2, Scheme.ACO_OSM: 4}

# Stream key reserved for energy calibration; point indices stay below it
CALIBRATION_STREAM = 2 ** 31 - 1


@dataclass
class SweepConfig:
    """
    One BER sweep: a scheme, a channel and an Eb/N0 grid.

    Attributes:
        scheme: NDC, DCO-OSM or ACO-OSM
        channel: Channel matrix (or a preset id)
        M: Constellation order
        ebn0_points: Eb/N0 grid in dB
        N: Frame size
        N_t: Number of LEDs
        bias_db: DC bias level in dB (DCO-OSM only)
        reconstruction: 'sign-select' or 'subtract' (NDC only)
        seed: Master seed
        slot_length: OSM index slot length (None = scheme default)
    """
    scheme: Scheme
    channel: ChannelMatrix
    M: int
    ebn0_points: List[float]
    N: int = DEFAULT_FRAME_SIZE
    N_t: int = 2
    bias_db: Optional[float] = None
    reconstruction: str = "sign-select"
    seed: int = DEFAULT_SEED
    min_bits: int = MIN_BITS
    min_errors: int = MIN_ERRORS
    max_frames: int = MAX_FRAMES
    round_frames: int = ROUND_FRAMES
    calibration_frames: int = CALIBRATION_FRAMES
    slot_length: Optional[int] = None

    def __post_init__(self):
        self.scheme = Scheme.parse(self.scheme)
        if isinstance(self.channel, str):
            self.channel = get_channel(self.channel)
        if self.slot_length is None:
            self.slot_length = DEFAULT_SLOT_LENGTH[self.scheme]
        self.ebn0_points = [float(x) for x in self.ebn0_points]

    def validate(self) -> None:
        check_frame_size(self.N)
        qam_constellation(self.M)
        if not self.ebn0_points:
            raise InputSizeError("The Eb/N0 grid is empty")
        if self.channel.gains.shape != (self.N_t, self.N_t):
            raise InputSizeError(
                f"Channel {self.channel.name} is {self.channel.gains.shape}, expected {self.N_t}x{self.N_t}")
        if self.scheme is Scheme.NDC:
            if self.N_t != 2:
                raise DomainError(f"NDC reconstruction needs N_t = 2, got {self.N_t}")
            if self.reconstruction not in RECONSTRUCTIONS:
                raise DomainError(f"Unknown reconstruction {self.reconstruction!r}")
            if self.slot_length != 1:
                raise DomainError("NDC detects the active LED per sample (slot_length = 1)")
        if self.scheme is Scheme.DCO_OSM and self.bias_db is None:
            raise DomainError("DCO-OSM needs a bias level")
        if self.bias_db is not None and self.bias_db < 0:
            raise DomainError(f"Bias level must be >= 0 dB, got {self.bias_db}")
        if self.N % self.slot_length:
            raise InputSizeError(f"Slot length {self.slot_length} does not divide N={self.N}")
        if self.min_bits < 1 or self.min_errors < 1 or self.max_frames < 1 or self.round_frames < 1:
            raise DomainError("Stopping thresholds must be positive")
        if self.min_errors < 100:
            logger.warning(f"min_errors={self.min_errors} is below 100; points are not publishable")

    @property
    def data_symbols(self) -> int:
        return self.N // 4 if self.scheme is Scheme.ACO_OSM else self.N // 2 - 1

    @property
    def data_bits(self) -> int:
        return self.data_symbols * (self.M.bit_length() - 1)

    @property
    def index_bits(self) -> int:
        if self.scheme is Scheme.NDC:
            return 0
        return index_bits_per_frame(self.N, self.N_t, self.slot_length)


@dataclass
class FrameOutcome:
    """
    Counts for one frame.

    index_decisions / index_errors are per-sample LED decisions for NDC and
    index bits for the OSM schemes; OSM index errors are part of ``errors``.
    """
    bits: int
    errors: int
    energy: float
    index_decisions: int = 0
    index_errors: int = 0


def bits_per_frame(config: SweepConfig) -> int:
    """Information bits per frame, index bits included for OSM schemes."""
    return config.data_bits + config.index_bits


def frame_stream(seed: int, point_index: int, frame_index: int) -> np.random.Generator:
    """Counter-based random stream for one frame."""
    sequence = np.random.SeedSequence(seed, spawn_key=(point_index, frame_index))
    return np.random.Generator(np.random.Philox(sequence))


def transmit(config: SweepConfig, rng: np.random.Generator) -> Tuple[np.ndarray, np.ndarray, SmFrame]:
    """
    Draw the information bits of one frame and build the LED waveforms.

    Returns:
        Tuple of (data bits, index bits, SmFrame)
    """
    constellation = qam_constellation(config.M)
    data_bits = rng.integers(0, 2, size=config.data_bits, dtype=np.int8)
    index_bits = rng.integers(0, 2, size=config.index_bits, dtype=np.int8)
    symbols = qam_map(data_bits, constellation)

    if config.scheme is Scheme.ACO_OSM:
        waveform = modulate_aco(symbols, config.N)
        return data_bits, index_bits, osm_assign(waveform, index_bits, config.N_t, config.slot_length)

    samples = inverse_transform(build_spectral_frame(symbols, config.N))
    if config.scheme is Scheme.NDC:
        return data_bits, index_bits, modulate_ndc(samples)
    waveform, _ = modulate_dco(samples, config.bias_db)
    return data_bits, index_bits, osm_assign(waveform, index_bits, config.N_t, config.slot_length)


def simulate_frame(config: SweepConfig, noise: NoiseModel, rng: np.random.Generator) -> FrameOutcome:
    """Send one frame through the channel and count bit errors."""
    constellation = qam_constellation(config.M)
    data_bits, index_bits, frame = transmit(config, rng)
    received = propagate(config.channel, frame.rows, noise, rng)
    equalized = zf_equalize(config.channel, received)
    estimate = detect_active_index(equalized, config.slot_length)

    if config.scheme is Scheme.NDC:
        if config.reconstruction == "subtract":
            x_hat = reconstruct_subtract(equalized)
        else:
            x_hat = reconstruct_sign_select(equalized, estimate)
        data_hat = demodulate_frame(x_hat, constellation, config.scheme, config.N)
        errors = int(np.count_nonzero(data_hat != data_bits))
        return FrameOutcome(bits=data_bits.size, errors=errors, energy=frame.emitted_energy(),
                            index_decisions=config.N,
                            index_errors=int(np.count_nonzero(estimate.indices != frame.active_index)))

    index_hat, data_hat = recover_osm_bits(equalized, estimate, constellation, config.scheme,
                                           config.slot_length)
    index_errors = int(np.count_nonzero(index_hat != index_bits))
    errors = int(np.count_nonzero(data_hat != data_bits)) + index_errors
    return FrameOutcome(bits=data_bits.size + index_bits.size, errors=errors,
                        energy=frame.emitted_energy(),
                        index_decisions=index_bits.size, index_errors=index_errors)


def energy_per_bit(frames: Sequence[SmFrame], config: SweepConfig) -> float:
    """
    Electrical energy per information bit at the LEDs.

    Eb = N_t * (sum of squared drive values over LEDs, samples and frames)
    / (frames * bits per frame). For NDC this inverts
    sigma_s^2 = Eb log2(M) (N-2) / (2 N N_t); DC bias and clipping are
    included for the OSM schemes because they are part of the emitted signal.
    """
    if not frames:
        raise InputSizeError("At least one frame is needed to measure Eb")
    total_bits = len(frames) * bits_per_frame(config)
    if total_bits == 0:
        raise ZeroDivisionError("No information bits in the given frames")
    energy = sum(frame.emitted_energy() for frame in frames)
    return config.N_t * energy / total_bits


def calibrate_energy_per_bit(config: SweepConfig) -> float:
    """Measure Eb on a dedicated stream so every point uses the same noise reference."""
    frames = []
    for frame_index in range(config.calibration_frames):
        rng = frame_stream(config.seed, CALIBRATION_STREAM, frame_index)
        frames.append(transmit(config, rng)[2])
    eb = energy_per_bit(frames, config)
    logger.debug(f"Calibrated Eb={eb:.6e} over {len(frames)} frames")
    return eb


def noise_sigma_for(ebn0_db: float, eb: float) -> float:
    """
    Noise standard deviation per receive branch for a target Eb/N0.

    N0 = Eb / 10^(ebn0_db/10) and sigma_n = sqrt(N0 / 2); +inf dB gives 0.
    """
    if not eb > 0:
        raise DomainError(f"Eb must be positive, got {eb}")
    if math.isinf(ebn0_db) and ebn0_db > 0:
        return 0.0
    n0 = eb / 10.0 ** (ebn0_db / 10.0)
    return math.sqrt(n0 / 2.0)


def _run_frame(config: SweepConfig, noise: NoiseModel, point_index: int, frame_index: int) -> FrameOutcome:
    return simulate_frame(config, noise, frame_stream(config.seed, point_index, frame_index))


def run_point(config: SweepConfig, ebn0_db: float, eb: float, point_index: int = 0,
              executor: Optional[ThreadPoolExecutor] = None) -> BerPoint:
    """
    Simulate frames at one Eb/N0 until the stopping rule is met.

    Frames run in rounds of ``round_frames``; after each round the point
    stops once it has min_bits bits and min_errors errors, or when the frame
    cap is reached (the point is then flagged low-confidence). A noiseless
    point stops as soon as min_bits is reached.

    Args:
        config: Sweep configuration
        ebn0_db: Eb/N0 in dB
        eb: Calibrated energy per bit
        point_index: Position of the point in the sweep (selects the streams)
        executor: Optional worker pool; frames are mapped over it in order

    Returns:
        BerPoint
    """
    noise = NoiseModel(sigma_n=noise_sigma_for(ebn0_db, eb))
    run = partial(_run_frame, config, noise, point_index)
    bits = errors = frames = index_decisions = index_errors = 0

    while True:
        batch = range(frames, min(frames + config.round_frames, config.max_frames))
        outcomes = executor.map(run, batch) if executor is not None else map(run, batch)
        for outcome in outcomes:
            bits += outcome.bits
            errors += outcome.errors
            index_decisions += outcome.index_decisions
            index_errors += outcome.index_errors
        frames = batch.stop
        logger.debug(f"Eb/N0={ebn0_db:g} dB: {frames} frames, {bits} bits, {errors} errors")

        if bits >= config.min_bits and (errors >= config.min_errors or noise.sigma_n == 0):
            low_confidence = False
            break
        if frames >= config.max_frames:
            low_confidence = errors < config.min_errors
            break

    ber = errors / bits
    if low_confidence:
        logger.warning(f"Eb/N0={ebn0_db:g} dB hit the frame cap with {errors} errors; "
                       f"BER {ber:.3e} is low-confidence")
    return BerPoint(ebn0_db=ebn0_db, bits=bits, errors=errors, ber=ber, low_confidence=low_confidence,
                    frames=frames, index_bits=index_decisions, index_errors=index_errors)


def _check_monotone(curve: BerCurve) -> None:
    for before, after in zip(curve.points, curve.points[1:]):
        if after.ber > before.ber and after.errors > 0:
            # allow for the statistical spread of the two estimates
            spread = 3.0 * math.sqrt(after.errors) / after.bits + 3.0 * math.sqrt(max(before.errors, 1)) / before.bits
            if after.ber - before.ber > spread:
                logger.warning(f"{curve.label}: BER rises from {before.ber:.3e} at {before.ebn0_db:g} dB "
                               f"to {after.ber:.3e} at {after.ebn0_db:g} dB")


def run_sweep(config: SweepConfig, workers: int = 1) -> BerCurve:
    """
    Run every Eb/N0 point of a sweep.

    Args:
        config: Sweep configuration
        workers: Number of frame-level worker threads

    Returns:
        BerCurve with source 'montecarlo'
    """
    config.validate()
    eb = calibrate_energy_per_bit(config)
    points = []
    executor = ThreadPoolExecutor(max_workers=workers) if workers > 1 else None
    try:
        for point_index, ebn0_db in enumerate(config.ebn0_points):
            point = run_point(config, ebn0_db, eb, point_index, executor)
            logger.info(f"{config.scheme.value} {config.channel.name} M={config.M} Eb/N0={ebn0_db:g} dB: "
                        f"bits={point.bits} errors={point.errors} BER={point.ber:.4e}")
            points.append(point)
    finally:
        if executor is not None:
            executor.shutdown(wait=True)

    curve = BerCurve(
        source="montecarlo",
        scheme=config.scheme.value,
        channel=config.channel.name,
        M=config.M,
        bias_db=config.bias_db if config.scheme is Scheme.DCO_OSM else None,
        reconstruction=config.reconstruction if config.scheme is Scheme.NDC else None,
        seed=config.seed,
        points=points,
    )
    _check_monotone(curve)
    return curve
