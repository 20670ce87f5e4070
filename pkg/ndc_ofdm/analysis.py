"""
Closed-form performance analysis of NDC-OFDM over a 2x2 channel.

Features:
- Q-function and the correct/wrong spatial-detection densities
- Conditional moments of the reconstructed sample given the detection
  outcome (truncated-Gaussian closed form, 2-D quadrature cross-check)
- Signal-averaged variances, Bussgang gains and distortion variances
- Effective electrical SNR (factorized or joint outcome averaging) and the
  M-QAM BER expression
- Index-bit error floor of DCO-OSM from all-clipped index slots
- Spectral efficiency of NDC, DCO-OSM and ACO-OSM and SE-matched
  constellation orders
"""

import logging
import math
from dataclasses import dataclass, replace
from typing import Callable, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from scipy import integrate
from scipy.special import log_ndtr
from scipy.stats import norm

from ndc_ofdm.channel import ChannelMatrix
from ndc_ofdm.config import ANALYSIS_SIGMA_N, QUADRATURE_EPSABS, QUADRATURE_SPAN
from ndc_ofdm.errors import DomainError, InputSizeError, NoSolutionError, NumericalDegeneracyError
from ndc_ofdm.modem import Scheme, bias_alpha
from ndc_ofdm.results import BerCurve, BerPoint

logger = logging.getLogger(__name__)

# Conditioning probabilities below this are treated as underflow
UNDERFLOW_PROBABILITY = 1e-300
_LOG_UNDERFLOW = math.log(UNDERFLOW_PROBABILITY)
_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)

# How the two detection outcomes are merged into one gain and one noise term
COMBINATIONS = ("factorized", "joint")
DEFAULT_COMBINATION = "factorized"

Matrix = Union[ChannelMatrix, np.ndarray, Sequence[Sequence[float]]]


def q_function(x):
    """Gaussian tail probability Q(x) = 1 - Phi(x)."""
    return norm.sf(x)


def _zf_matrix(C: Matrix) -> np.ndarray:
    """
    Return the 2x2 matrix C used by the analysis.

    A ChannelMatrix is replaced by its ZF inverse; plain arrays are taken to
    be C already.
    """
    if isinstance(C, ChannelMatrix):
        C = C.require_inverse()
    C = np.asarray(C, dtype=np.float64)
    if C.shape != (2, 2):
        raise InputSizeError(f"The analysis covers 2x2 systems only, got shape {C.shape}")
    return C


def _branch_vectors(s, C: np.ndarray):
    """
    Per-sample coefficient vectors for the two detection branches.

    Returns (p, r, q): p is the row of C feeding the active LED, r the other
    row, and q = p - r is the indicator direction (correct iff |s| + q.n > 0).
    """
    s = np.asarray(s, dtype=np.float64)
    positive = (s >= 0)[..., None]
    p = np.where(positive, C[0], C[1])
    r = np.where(positive, C[1], C[0])
    return p, r, p - r


def _gaussian_pair(n1, n2, sigma_n: float):
    return norm.pdf(n1, scale=sigma_n) * norm.pdf(n2, scale=sigma_n)


def detection_density_correct(s, n1, n2, C: Matrix, sigma_n: float):
    """
    Joint density of (n1, n2) restricted to the correct-detection region.

    Args:
        s: Bipolar OFDM sample(s)
        n1, n2: Noise values on the two receive branches
        C: ZF inverse H^-1 (or a ChannelMatrix)
        sigma_n: Noise standard deviation, > 0

    Returns:
        (1/sigma_n^2) phi(n1/sigma_n) phi(n2/sigma_n) where the active LED
        wins the comparison, 0 elsewhere
    """
    C = _zf_matrix(C)
    s = np.asarray(s, dtype=np.float64)
    _, _, q = _branch_vectors(s, C)
    margin = np.abs(s) + q[..., 0] * n1 + q[..., 1] * n2
    return np.where(margin > 0, _gaussian_pair(n1, n2, sigma_n), 0.0)


def detection_density_wrong(s, n1, n2, C: Matrix, sigma_n: float):
    """Complement of detection_density_correct over the noise plane."""
    C = _zf_matrix(C)
    s = np.asarray(s, dtype=np.float64)
    _, _, q = _branch_vectors(s, C)
    margin = np.abs(s) + q[..., 0] * n1 + q[..., 1] * n2
    return np.where(margin > 0, 0.0, _gaussian_pair(n1, n2, sigma_n))


@dataclass
class ConditionalMoments:
    """
    Reconstructed-sample moments given the bipolar sample s.

    f_c, v_c: mean and variance of x' given a correct spatial decision,
    f_w, v_w: the same given a wrong decision. p_c and p_w = 1 - p_c are the
    probabilities of the two outcomes, each taken from its own log-CDF.
    underflow_c / underflow_w mark values of s whose conditioning
    probability underflowed; their moments are reported as 0.
    """
    s: np.ndarray
    p_c: np.ndarray
    p_w: np.ndarray
    f_c: np.ndarray
    v_c: np.ndarray
    f_w: np.ndarray
    v_w: np.ndarray
    underflow_c: np.ndarray
    underflow_w: np.ndarray


def _log_pdf(x):
    return -0.5 * np.square(x) - _LOG_SQRT_2PI


def conditional_moments(s, C: Matrix, sigma_n: float) -> ConditionalMoments:
    """
    Closed-form conditional moments of the sign-selected sample.

    The indicator depends on the noise only through u = q.n, so both moments
    follow from the moments of a Gaussian truncated at -|s|/sigma_u.

    Args:
        s: Scalar or array of bipolar samples
        C: ZF inverse H^-1 (or a ChannelMatrix)
        sigma_n: Noise standard deviation, > 0

    Returns:
        ConditionalMoments with arrays shaped like s
    """
    if not sigma_n > 0:
        raise DomainError(f"sigma_n must be positive, got {sigma_n}")
    C = _zf_matrix(C)
    s = np.atleast_1d(np.asarray(s, dtype=np.float64))
    p, r, q = _branch_vectors(s, C)

    q_norm = np.linalg.norm(q, axis=-1)
    if np.any(q_norm == 0):
        raise DomainError("C has identical rows; spatial detection is undefined")
    sign = np.where(s >= 0, 1.0, -1.0)
    tau = np.abs(s) / (sigma_n * q_norm)

    log_pc = log_ndtr(tau)
    log_pw = log_ndtr(-tau)
    lam = np.exp(_log_pdf(tau) - log_pc)  # E[z | z > -tau]
    mu = np.exp(_log_pdf(tau) - log_pw)   # -E[z | z < -tau]

    pq = np.sum(p * q, axis=-1) / q_norm
    rq = np.sum(r * q, axis=-1) / q_norm
    p_sq = np.sum(p * p, axis=-1)
    r_sq = np.sum(r * r, axis=-1)
    var_n = sigma_n ** 2

    mean_c = np.abs(s) + sigma_n * pq * lam
    v_c = var_n * (p_sq - pq ** 2 * (tau * lam + lam ** 2))
    mean_w = -sigma_n * rq * mu
    v_w = var_n * (r_sq - rq ** 2 * mu * (mu - tau))

    underflow_c = log_pc < _LOG_UNDERFLOW
    underflow_w = log_pw < _LOG_UNDERFLOW
    if np.any(underflow_c) or np.any(underflow_w):
        logger.debug(f"Conditioning underflow at {int(underflow_c.sum() + underflow_w.sum())} sample values")

    return ConditionalMoments(
        s=s,
        p_c=np.exp(log_pc),
        p_w=np.exp(log_pw),
        f_c=np.where(underflow_c, 0.0, sign * mean_c),
        v_c=np.where(underflow_c, 0.0, np.maximum(v_c, 0.0)),
        f_w=np.where(underflow_w, 0.0, -sign * mean_w),
        v_w=np.where(underflow_w, 0.0, np.maximum(v_w, 0.0)),
        underflow_c=underflow_c,
        underflow_w=underflow_w,
    )


def _decision_regions(s: float, q: np.ndarray, bound: float):
    """
    Integration layout for the two detection regions of the noise plane.

    Returns (inner, outer, region_limits): the noise coordinate integrated
    innermost, the outer one, and a function giving the inner limits of the
    correct (True) or wrong (False) region as functions of the outer value.
    """
    # integrate the coordinate with the larger indicator coefficient innermost
    inner = 1 if abs(q[1]) >= abs(q[0]) else 0
    outer = 1 - inner

    def region_limits(correct: bool) -> Tuple[Callable, Callable]:
        def crossing(x):
            return (-abs(s) - q[outer] * x) / q[inner]

        # inner variable above the crossing is correct when q[inner] > 0
        above_is_correct = q[inner] > 0
        take_above = above_is_correct == correct
        if take_above:
            return (lambda x: min(max(crossing(x), -bound), bound)), (lambda x: bound)
        return (lambda x: -bound), (lambda x: max(min(crossing(x), bound), -bound))

    return inner, outer, region_limits


def conditional_moments_quadrature(s: float, C: Matrix, sigma_n: float,
                                   span: float = QUADRATURE_SPAN,
                                   epsabs: float = 1e-12) -> Tuple[float, float, float, float, float]:
    """
    The same moments by 2-D quadrature over the exact detection regions.

    The noise plane is truncated to [-span*sigma_n, span*sigma_n]^2 and split
    along the decision line, so each integrand is smooth on its region.

    Returns:
        (P_c, f_c, v_c, f_w, v_w) for the scalar sample s
    """
    C = _zf_matrix(C)
    s = float(s)
    p, r, q = (v[0] for v in _branch_vectors(np.array([s]), C))
    sign = 1.0 if s >= 0 else -1.0
    bound = span * sigma_n
    inner, outer, region_limits = _decision_regions(s, q, bound)

    def integrate_region(correct: bool, weight_row: np.ndarray, offset: float):
        lower, upper = region_limits(correct)

        def moment(order):
            def integrand(y, x):
                n = np.empty(2)
                n[inner], n[outer] = y, x
                value = offset + weight_row @ n
                return value ** order * norm.pdf(x, scale=sigma_n) * norm.pdf(y, scale=sigma_n)
            result, _ = integrate.dblquad(integrand, -bound, bound, lower, upper,
                                          epsabs=epsabs, epsrel=1e-10)
            return result

        mass = moment(0)
        if mass <= 0:
            return mass, 0.0, 0.0
        mean = moment(1) / mass
        return mass, mean, max(moment(2) / mass - mean ** 2, 0.0)

    p_c, mean_c, v_c = integrate_region(True, p, abs(s))
    _, mean_w, v_w = integrate_region(False, r, 0.0)
    return p_c, sign * mean_c, v_c, -sign * mean_w, v_w


def detection_probabilities_quadrature(s: float, C: Matrix, sigma_n: float,
                                       span: float = QUADRATURE_SPAN,
                                       epsabs: float = 1e-12) -> Tuple[float, float]:
    """
    Integrate detection_density_correct and detection_density_wrong over
    their own regions of the truncated noise plane.

    Returns:
        (P_c, P_w); they sum to the Gaussian mass of the square
    """
    C = _zf_matrix(C)
    s = float(s)
    q = _branch_vectors(np.array([s]), C)[2][0]
    bound = span * sigma_n
    inner, outer, region_limits = _decision_regions(s, q, bound)

    def mass(correct: bool) -> float:
        density = detection_density_correct if correct else detection_density_wrong
        lower, upper = region_limits(correct)

        def integrand(y, x):
            n = [0.0, 0.0]
            n[inner], n[outer] = y, x
            return float(density(s, n[0], n[1], C, sigma_n))

        result, _ = integrate.dblquad(integrand, -bound, bound, lower, upper,
                                      epsabs=epsabs, epsrel=1e-10)
        return result

    return mass(True), mass(False)


@dataclass
class SignalStats:
    """
    Statistics of the bipolar OFDM signal feeding the LEDs.

    sigma_s and eb are tied by sigma_s = sqrt(eb log2(M) (N-2) / (2 N N_t)).
    """
    sigma_s: float
    eb: float
    M: int
    N: int
    N_t: int = 2

    def __post_init__(self):
        if not (self.sigma_s > 0 and self.eb > 0):
            raise DomainError("sigma_s and Eb must be positive")
        expected = self.sigma_for(self.eb, self.M, self.N, self.N_t)
        if not math.isclose(self.sigma_s, expected, rel_tol=1e-9):
            raise DomainError(f"sigma_s={self.sigma_s} is inconsistent with Eb={self.eb} (expected {expected})")

    @staticmethod
    def sigma_for(eb: float, M: int, N: int, N_t: int) -> float:
        return math.sqrt(eb * math.log2(M) * (N - 2) / (2.0 * N * N_t))

    @classmethod
    def from_eb(cls, eb: float, M: int, N: int, N_t: int = 2) -> "SignalStats":
        return cls(sigma_s=cls.sigma_for(eb, M, N, N_t), eb=eb, M=M, N=N, N_t=N_t)

    @classmethod
    def from_ebn0(cls, ebn0_db: float, sigma_n: float, M: int, N: int, N_t: int = 2) -> "SignalStats":
        """Signal statistics for a given Eb/N0 at fixed noise, N0 = 2 sigma_n^2."""
        n0 = 2.0 * sigma_n ** 2
        return cls.from_eb(10.0 ** (ebn0_db / 10.0) * n0, M, N, N_t)

    @property
    def eb_elec(self) -> float:
        """Electrical energy per bit on a data subcarrier, N sigma_s^2 / ((N-2) log2 M)."""
        return self.N * self.sigma_s ** 2 / ((self.N - 2) * math.log2(self.M))


@dataclass
class BussgangResult:
    """
    Averaged quantities of the analytical pipeline.

    The per-outcome terms (alpha_c ... d_c) feed the factorized combination.
    alpha_joint and n_joint are the gain and distortion-plus-noise power of
    the sign-selected sample averaged over both outcomes at once, so the
    dependence of the detection probability on s is kept. alpha_bar, n_bar
    and snr_elec stay None until effective_snr has run and follow
    ``combination``.
    """
    alpha_c: float
    alpha_w: float
    y_c: float
    y_w: float
    v_c_bar: float
    v_w_bar: float
    d_c: float
    alpha_bar: Optional[float] = None
    n_bar: Optional[float] = None
    snr_elec: Optional[float] = None
    alpha_joint: Optional[float] = None
    n_joint: Optional[float] = None
    combination: str = DEFAULT_COMBINATION


def _signal_average(func: Callable[[float], float], sigma_s: float) -> float:
    """Integral of func(s) against the N(0, sigma_s^2) density over +/- span sigma_s."""
    bound = QUADRATURE_SPAN * sigma_s

    def weighted(s):
        return func(s) * norm.pdf(s, scale=sigma_s)

    # split at 0 where the sign convention makes the moments jump
    left, _ = integrate.quad(weighted, -bound, 0.0, epsabs=QUADRATURE_EPSABS, limit=200)
    right, _ = integrate.quad(weighted, 0.0, bound, epsabs=QUADRATURE_EPSABS, limit=200)
    return left + right


def _moment_function(C: np.ndarray, sigma_n: float, field_name: str) -> Callable[[float], float]:
    def value(s: float) -> float:
        return float(getattr(conditional_moments(s, C, sigma_n), field_name)[0])
    return value


def averaged_variances(C: Matrix, sigma_n: float, stats: SignalStats) -> Tuple[float, float]:
    """
    Conditional variances averaged over the signal distribution.

    Returns:
        (v_c_bar, v_w_bar)
    """
    C = _zf_matrix(C)
    v_c_bar = _signal_average(_moment_function(C, sigma_n, "v_c"), stats.sigma_s)
    v_w_bar = _signal_average(_moment_function(C, sigma_n, "v_w"), stats.sigma_s)
    return v_c_bar, v_w_bar


def bussgang_factors(C: Matrix, sigma_n: float, stats: SignalStats) -> Tuple[float, float, float, float]:
    """
    Bussgang gains and distortion variances for both detection outcomes.

    alpha = E[s f(s)] / sigma_s^2 and y = E[f(s)^2] - alpha^2 sigma_s^2, with
    f the conditional mean of the reconstructed sample.

    Returns:
        (alpha_c, y_c, alpha_w, y_w)
    """
    C = _zf_matrix(C)
    var_s = stats.sigma_s ** 2
    factors = []
    for name in ("f_c", "f_w"):
        f = _moment_function(C, sigma_n, name)
        alpha = _signal_average(lambda s: s * f(s), stats.sigma_s) / var_s
        power = _signal_average(lambda s: f(s) ** 2, stats.sigma_s)
        y = power - alpha ** 2 * var_s
        # quadrature noise can leave a tiny negative variance
        factors.extend([alpha, max(y, 0.0)])
    alpha_c, y_c, alpha_w, y_w = factors
    return alpha_c, y_c, alpha_w, y_w


def correct_detection_prob(C: Matrix, sigma_n: float, stats: SignalStats) -> float:
    """Probability d_c that the spatial detector picks the active LED."""
    C = _zf_matrix(C)
    d_c = _signal_average(_moment_function(C, sigma_n, "p_c"), stats.sigma_s)
    return float(min(max(d_c, 0.0), 1.0))


def joint_factors(C: Matrix, sigma_n: float, stats: SignalStats) -> Tuple[float, float]:
    """
    Gain and distortion-plus-noise power of x' over both detection outcomes.

    alpha_joint = E[s (p_c f_c + p_w f_w)] / sigma_s^2 and
    n_joint = E[p_c (v_c + f_c^2) + p_w (v_w + f_w^2)] - alpha_joint^2 sigma_s^2,
    so the residual x' - alpha_joint s is uncorrelated with s.

    Returns:
        (alpha_joint, n_joint)
    """
    C = _zf_matrix(C)
    var_s = stats.sigma_s ** 2

    def mean(s: float) -> float:
        m = conditional_moments(s, C, sigma_n)
        return float(m.p_c[0] * m.f_c[0] + m.p_w[0] * m.f_w[0])

    def power(s: float) -> float:
        m = conditional_moments(s, C, sigma_n)
        return float(m.p_c[0] * (m.v_c[0] + m.f_c[0] ** 2) + m.p_w[0] * (m.v_w[0] + m.f_w[0] ** 2))

    alpha = _signal_average(lambda s: s * mean(s), stats.sigma_s) / var_s
    total = _signal_average(power, stats.sigma_s)
    return alpha, total - alpha ** 2 * var_s


def combine_outcomes(bussgang: BussgangResult, combination: Optional[str] = None) -> Tuple[float, float]:
    """
    Merge the detection outcomes into one gain and one noise term.

    'factorized': alpha_bar = d_c alpha_c + (1 - d_c) alpha_w and
    N_bar = d_c (v_c_bar + y_c) + (1 - d_c)(v_w_bar + y_w).
    'joint': alpha_bar = alpha_joint and N_bar = n_joint.

    Returns:
        (alpha_bar, N_bar)
    """
    combination = combination or bussgang.combination
    if combination not in COMBINATIONS:
        raise DomainError(f"Unknown combination {combination!r}; expected one of {COMBINATIONS}")
    if combination == "joint":
        if bussgang.alpha_joint is None or bussgang.n_joint is None:
            raise DomainError("Joint combination needs alpha_joint and n_joint (see joint_factors)")
        return bussgang.alpha_joint, bussgang.n_joint
    d_c = bussgang.d_c
    alpha_bar = d_c * bussgang.alpha_c + (1.0 - d_c) * bussgang.alpha_w
    n_bar = (d_c * (bussgang.v_c_bar + bussgang.y_c)
             + (1.0 - d_c) * (bussgang.v_w_bar + bussgang.y_w))
    return alpha_bar, n_bar


def effective_snr(stats: SignalStats, bussgang: BussgangResult, combination: Optional[str] = None) -> float:
    """
    Electrical SNR per bit after detection, alpha_bar^2 Eb_elec / N_bar.

    Args:
        stats: Signal statistics
        bussgang: Averaged pipeline quantities
        combination: 'factorized' or 'joint'; defaults to bussgang.combination

    Raises:
        NumericalDegeneracyError: if N_bar <= 0
    """
    alpha_bar, n_bar = combine_outcomes(bussgang, combination)
    if not n_bar > 0:
        raise NumericalDegeneracyError(f"Average noise variance is not positive ({n_bar})")
    return alpha_bar ** 2 * stats.eb_elec / n_bar


def analyze(C: Matrix, sigma_n: float, stats: SignalStats,
            combination: str = DEFAULT_COMBINATION) -> BussgangResult:
    """Run the full pipeline for one operating point."""
    if combination not in COMBINATIONS:
        raise DomainError(f"Unknown combination {combination!r}; expected one of {COMBINATIONS}")
    v_c_bar, v_w_bar = averaged_variances(C, sigma_n, stats)
    alpha_c, y_c, alpha_w, y_w = bussgang_factors(C, sigma_n, stats)
    d_c = correct_detection_prob(C, sigma_n, stats)
    alpha_joint, n_joint = joint_factors(C, sigma_n, stats)
    result = BussgangResult(alpha_c=alpha_c, alpha_w=alpha_w, y_c=y_c, y_w=y_w,
                            v_c_bar=v_c_bar, v_w_bar=v_w_bar, d_c=d_c,
                            alpha_joint=alpha_joint, n_joint=n_joint, combination=combination)
    snr = effective_snr(stats, result)
    alpha_bar, n_bar = combine_outcomes(result)
    return replace(result, alpha_bar=alpha_bar, n_bar=n_bar, snr_elec=snr)


def theoretical_ber(M: int, snr):
    """
    M-QAM bit error rate at per-bit SNR ``snr`` (linear).

    Non-square orders use the real square root of M in the coefficients.
    """
    if M < 4 or M & (M - 1):
        raise DomainError(f"M must be a power of two >= 4, got {M}")
    root = math.sqrt(M)
    k = math.log2(M)
    arg = np.sqrt(3.0 * k / (M - 1) * np.asarray(snr, dtype=np.float64))
    ber = (4.0 * (root - 1.0) / (root * k) * q_function(arg)
           + 4.0 * (root - 2.0) / (root * k) * q_function(3.0 * arg))
    return float(ber) if np.ndim(ber) == 0 else ber


def bipolar_ber(M: int, ebn0_db, n_transmitters: int = 2):
    """
    Bipolar O-OFDM reference curve under the same Eb accounting as NDC.

    Eb is charged N_t times, so a perfectly detected NDC link sees a per-bit
    SNR of (Eb/N0) / N_t on its data subcarriers.
    """
    ebn0 = 10.0 ** (np.asarray(ebn0_db, dtype=np.float64) / 10.0)
    return theoretical_ber(M, ebn0 / n_transmitters)


def spectral_efficiency(scheme: Union[Scheme, str], M: int, N_t: int, N: Optional[int] = None,
                        asymptotic: bool = False) -> float:
    """
    Spectral efficiency in b/s/Hz.

    Args:
        scheme: NDC, DCO-OSM or ACO-OSM
        M: Constellation order
        N_t: Number of LEDs
        N: Frame size; required unless asymptotic
        asymptotic: Replace (N-2)/2N by 1/2

    Returns:
        Bits per second per hertz
    """
    scheme = Scheme.parse(scheme)
    if scheme is Scheme.NDC and N_t % 2:
        raise DomainError(f"NDC needs an even number of LEDs, got {N_t}")
    if asymptotic:
        coefficient = 0.5
    else:
        if N is None:
            raise DomainError("Frame size N is required for the exact spectral efficiency")
        coefficient = (N - 2) / (2.0 * N)
    bits = math.log2(M * N_t)
    if scheme is Scheme.NDC:
        return coefficient * (bits - 1.0)
    if scheme is Scheme.DCO_OSM:
        return coefficient * bits
    return 0.25 * bits


def _order_for(exponent: float, what: str) -> int:
    rounded = round(exponent)
    if abs(exponent - rounded) > 1e-9 or rounded < 1:
        raise NoSolutionError(f"No power-of-two {what} constellation (log2 M = {exponent:g})")
    return 1 << int(rounded)


def matched_order(scheme: Union[Scheme, str], target_se: float, N_t: int = 2) -> int:
    """
    Constellation order giving ``scheme`` the asymptotic SE ``target_se``.

    Raises:
        NoSolutionError: if log2 M is not an integer >= 1
    """
    scheme = Scheme.parse(scheme)
    log_nt = math.log2(N_t)
    if scheme is Scheme.NDC:
        exponent = 2.0 * target_se + 1.0 - log_nt
    elif scheme is Scheme.DCO_OSM:
        exponent = 2.0 * target_se - log_nt
    else:
        exponent = 4.0 * target_se - log_nt
    return _order_for(exponent, scheme.value)


def matched_constellations(target_se: float, N_t: int = 2) -> Tuple[int, int, int]:
    """
    Constellation orders giving NDC, DCO-OSM and ACO-OSM the same asymptotic SE.

    Returns:
        (M_ndc, M_dco, M_aco)

    Raises:
        NoSolutionError: if any order is not a power of two >= 2
    """
    return tuple(matched_order(scheme, target_se, N_t) for scheme in Scheme)


def se_table(points: Iterable[float] = (3.5, 4.0, 4.5, 5.0, 5.5), N_t: int = 2) -> pd.DataFrame:
    """
    Matched constellation orders for a list of spectral efficiencies.

    A scheme with no power-of-two order at some SE gets a missing cell.
    """
    rows = []
    for se in points:
        row = {"se": float(se)}
        for column, scheme in zip(("ndc", "dco", "aco"), Scheme):
            try:
                row[column] = matched_order(scheme, se, N_t)
            except NoSolutionError as e:
                logger.info(f"SE {se:g}: {e}")
                row[column] = pd.NA
        rows.append(row)
    table = pd.DataFrame(rows, columns=["se", "ndc", "dco", "aco"])
    return table.astype({"se": "float64", "ndc": "Int64", "dco": "Int64", "aco": "Int64"})


def dco_empty_slot_probability(bias_db: float, slot_length: int = 2) -> float:
    """
    Probability that every sample of a DCO-OSM index slot is clipped to zero.

    The interleaved samples of a slot are treated as independent Gaussians,
    each clipped with probability Q(alpha) at bias 10 log10(alpha^2 + 1) dB.
    """
    if slot_length < 1:
        raise DomainError(f"Slot length must be >= 1, got {slot_length}")
    return float(q_function(bias_alpha(bias_db)) ** slot_length)


def dco_index_error_floor(bias_db: float, slot_length: int = 2) -> float:
    """
    Index-bit error rate of two-LED DCO-OSM that no SNR removes.

    An all-zero slot gives both LEDs the same score; the tie goes to LED 1,
    so the slot's index bit is wrong whenever LED 2 was chosen.
    """
    return 0.5 * dco_empty_slot_probability(bias_db, slot_length)


@dataclass
class AnalyticPoint:
    """Every intermediate of the pipeline at one Eb/N0 value."""
    ebn0_db: float
    sigma_s: float
    sigma_n: float
    result: BussgangResult
    ber: float


def analytic_point(C: Matrix, M: int, ebn0_db: float, N: int, N_t: int = 2,
                   sigma_n: float = ANALYSIS_SIGMA_N,
                   combination: str = DEFAULT_COMBINATION) -> AnalyticPoint:
    stats = SignalStats.from_ebn0(ebn0_db, sigma_n, M, N, N_t)
    result = analyze(C, sigma_n, stats, combination)
    return AnalyticPoint(ebn0_db=ebn0_db, sigma_s=stats.sigma_s, sigma_n=sigma_n,
                         result=result, ber=theoretical_ber(M, result.snr_elec))


def analytic_curve(channel: ChannelMatrix, M: int, ebn0_points: Iterable[float], N: int,
                   N_t: int = 2, sigma_n: float = ANALYSIS_SIGMA_N,
                   combination: str = DEFAULT_COMBINATION) -> Tuple[BerCurve, List[AnalyticPoint]]:
    """
    Analytical NDC BER curve over an Eb/N0 grid.

    Returns:
        Tuple of (BerCurve with source 'analytic', per-point intermediates)
    """
    C = channel.require_inverse()
    details = []
    points = []
    for ebn0_db in ebn0_points:
        point = analytic_point(C, M, float(ebn0_db), N, N_t, sigma_n, combination)
        details.append(point)
        points.append(BerPoint(ebn0_db=float(ebn0_db), bits=0, errors=0, ber=point.ber))
        logger.info(f"analytic {channel.name} M={M} Eb/N0={ebn0_db:g} dB ({combination}): "
                    f"d_c={point.result.d_c:.6f} SNR={point.result.snr_elec:.4g} BER={point.ber:.4e}")
    curve = BerCurve(source="analytic", scheme=Scheme.NDC.value, channel=channel.name, M=M,
                     reconstruction="sign-select", points=points)
    return curve, details
