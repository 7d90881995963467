"""Signal conditioning: wavelet denoising, IIR baseline removal, min-max
normalization, and Welch spectral estimation for the bandpower features.

All operations are pure; heavy inner loops live in afdetect.kernels.
"""

from dataclasses import dataclass
import math

import numpy as np

from . import kernels
from .errors import (
    BadBandError,
    BadCutoffError,
    ConfigError,
    DegenerateSignalError,
    NegativeThresholdError,
    NumericError,
    TooShortError,
)

# Daubechies scaling filter with 4 vanishing moments (8 taps), orthonormal
# to machine precision (values from exact spectral factorization).
DB4_LO = np.array([
    0.2303778133088965,
    0.7148465705529157,
    0.6308807679298589,
    -0.027983769416859854,
    -0.18703481171909309,
    0.030841381835560764,
    0.0328830116668852,
    -0.010597401785069032,
])
# Quadrature-mirror high-pass: g[m] = (-1)^m * lo[taps-1-m]
DB4_HI = ((-1.0) ** np.arange(8)) * DB4_LO[::-1]

DENOISE_LEVELS = 4


@dataclass
class WaveletDecomposition:
    """Multilevel wavelet coefficients; details ordered finest first."""
    approximation: np.ndarray
    details: list
    levels: int
    original_length: int


@dataclass
class IirFilter:
    """Digital IIR filter as numerator/denominator coefficients (a[0] == 1)."""
    numerator: np.ndarray
    denominator: np.ndarray
    order: int
    cutoff_hz: float
    fs_hz: float


@dataclass
class PsdEstimate:
    """One-sided Welch power spectral density."""
    frequencies: np.ndarray
    power: np.ndarray
    resolution_hz: float


def _level_lengths(n, levels):
    lengths = [n]
    for _ in range(levels):
        lengths.append((lengths[-1] + 1) // 2)
    return lengths


def dwt_decompose(x, levels):
    """Multilevel periodized DWT with the 8-tap db4 pair.

    Coefficient lengths follow ceil(n/2) per level. Odd intermediate lengths
    are padded by repeating the last sample; reconstruction is exact whenever
    the input length is divisible by 2**levels.
    """
    x = np.asarray(x, dtype=np.float64)
    if levels < 1:
        raise ConfigError("levels must be >= 1")
    if x.shape[0] < DB4_LO.shape[0] * 2 ** levels:
        raise TooShortError(
            f"need at least {DB4_LO.shape[0] * 2 ** levels} samples for "
            f"{levels} levels, got {x.shape[0]}")
    details = []
    cur = x
    for _ in range(levels):
        if cur.shape[0] % 2:
            cur = np.append(cur, cur[-1])
        cur, d = kernels.dwt_periodic(cur, DB4_LO, DB4_HI)
        details.append(d)
    return WaveletDecomposition(
        approximation=cur,
        details=details,
        levels=levels,
        original_length=x.shape[0],
    )


def wavelet_reconstruct(w):
    """Inverse of dwt_decompose back to the original length."""
    lengths = _level_lengths(w.original_length, w.levels)
    cur = w.approximation
    for j in range(w.levels - 1, -1, -1):
        cur = kernels.idwt_periodic(cur, w.details[j], DB4_LO, DB4_HI)
        cur = cur[:lengths[j]]
    return cur


def soft_threshold(w, threshold):
    """Shrink every detail coefficient by sign(c) * max(|c| - t, 0).

    The approximation band is left untouched. Returns a new decomposition.
    """
    if threshold < 0:
        raise NegativeThresholdError(f"threshold must be >= 0, got {threshold}")
    details = [np.sign(d) * np.maximum(np.abs(d) - threshold, 0.0)
               for d in w.details]
    return WaveletDecomposition(
        approximation=w.approximation.copy(),
        details=details,
        levels=w.levels,
        original_length=w.original_length,
    )


def wavelet_denoise(x, levels=DENOISE_LEVELS):
    """Level-4 db4 denoising with soft universal thresholding.

    Noise scale sigma is the median absolute finest-detail coefficient
    divided by 0.6745; the threshold is sigma * sqrt(2 ln n).
    """
    x = np.asarray(x, dtype=np.float64)
    w = dwt_decompose(x, levels)
    sigma = np.median(np.abs(w.details[0])) / 0.6745
    threshold = sigma * math.sqrt(2.0 * math.log(x.shape[0]))
    return wavelet_reconstruct(soft_threshold(w, threshold))


def _butter_analog_prototype(order):
    k = np.arange(1, order + 1)
    return np.exp(1j * np.pi * (2 * k + order - 1) / (2 * order))


def _zpk_to_ba(zeros, poles, ref_z):
    """Polynomial coefficients from digital zeros/poles, gain pinned to 1
    at the reference point on the unit circle."""
    b = np.real(np.poly(zeros))
    a = np.real(np.poly(poles))
    href = np.polyval(b, ref_z) / np.polyval(a, ref_z)
    b = b / np.real(href)
    return b, a


def _check_stable(a):
    poles = np.roots(a)
    if np.any(np.abs(poles) >= 1.0):
        raise NumericError("designed filter is unstable")


def design_butterworth_lowpass(order, cutoff_hz, fs_hz):
    """Digital Butterworth low-pass via the bilinear transform.

    Cutoff is prewarped so the -3 dB point lands exactly on cutoff_hz; DC
    gain is normalized to 1.
    """
    if order < 1:
        raise ConfigError(f"order must be >= 1, got {order}")
    if not 0.0 < cutoff_hz < fs_hz / 2.0:
        raise BadCutoffError(
            f"cutoff {cutoff_hz} Hz outside (0, {fs_hz / 2.0}) Hz")
    warped = 2.0 * fs_hz * math.tan(math.pi * cutoff_hz / fs_hz)
    fs2 = 2.0 * fs_hz
    analog_poles = warped * _butter_analog_prototype(order)
    digital_poles = (fs2 + analog_poles) / (fs2 - analog_poles)
    digital_zeros = -np.ones(order)
    b, a = _zpk_to_ba(digital_zeros, digital_poles, 1.0)
    _check_stable(a)
    return IirFilter(numerator=b, denominator=a, order=order,
                     cutoff_hz=cutoff_hz, fs_hz=fs_hz)


def design_butterworth_highpass(order, cutoff_hz, fs_hz):
    """Digital Butterworth high-pass (unit gain at Nyquist)."""
    if order < 1:
        raise ConfigError(f"order must be >= 1, got {order}")
    if not 0.0 < cutoff_hz < fs_hz / 2.0:
        raise BadCutoffError(
            f"cutoff {cutoff_hz} Hz outside (0, {fs_hz / 2.0}) Hz")
    warped = 2.0 * fs_hz * math.tan(math.pi * cutoff_hz / fs_hz)
    fs2 = 2.0 * fs_hz
    analog_poles = warped / _butter_analog_prototype(order)
    digital_poles = (fs2 + analog_poles) / (fs2 - analog_poles)
    digital_zeros = np.ones(order)
    b, a = _zpk_to_ba(digital_zeros, digital_poles, -1.0)
    _check_stable(a)
    return IirFilter(numerator=b, denominator=a, order=order,
                     cutoff_hz=cutoff_hz, fs_hz=fs_hz)


def frequency_response(f, freqs_hz):
    """Complex response of an IirFilter at the given frequencies in Hz."""
    w = 2.0 * np.pi * np.asarray(freqs_hz, dtype=np.float64) / f.fs_hz
    z = np.exp(1j * w)
    num = np.polyval(f.numerator, z)
    den = np.polyval(f.denominator, z)
    return num / den


def _lfilter_zi(b, a):
    """Steady-state filter state for a unit-step input (solve (I - A) z = B)."""
    n = b.shape[0]
    if n == 1:
        return np.zeros(0)
    comp = np.zeros((n - 1, n - 1))
    comp[0, :] = -a[1:]
    comp[1:, :-1] += np.eye(n - 2)
    i_minus_a = np.eye(n - 1) - comp.T
    rhs = b[1:] - a[1:] * b[0]
    return np.linalg.solve(i_minus_a, rhs)


def _pad_ba(f):
    n = max(f.numerator.shape[0], f.denominator.shape[0])
    b = np.zeros(n)
    a = np.zeros(n)
    b[:f.numerator.shape[0]] = f.numerator
    a[:f.denominator.shape[0]] = f.denominator
    return b, a


def filtfilt(f, x):
    """Zero-phase filtering: forward pass, reverse, forward, reverse.

    Edge transients are mitigated by odd-reflected padding of 3x the filter
    length plus steady-state initial conditions scaled to the edge samples.
    """
    x = np.asarray(x, dtype=np.float64)
    b, a = _pad_ba(f)
    n_filt = b.shape[0]
    pad = 3 * n_filt
    if x.shape[0] <= pad:
        raise TooShortError(
            f"signal of length {x.shape[0]} too short for padding {pad}")
    front = 2.0 * x[0] - x[pad:0:-1]
    back = 2.0 * x[-1] - x[-2:-pad - 2:-1]
    ext = np.concatenate([front, x, back])
    zi = _lfilter_zi(b, a)
    y, _ = kernels.lfilter(b, a, ext, zi * ext[0])
    y = y[::-1].copy()
    y, _ = kernels.lfilter(b, a, y, zi * y[0])
    return y[::-1][pad:-pad].copy()


def remove_baseline(x, fs_hz):
    """Subtract the drift estimated by a zero-phase 0.5 Hz order-4 low-pass."""
    f = design_butterworth_lowpass(4, 0.5, fs_hz)
    return np.asarray(x, dtype=np.float64) - filtfilt(f, x)


def minmax_normalize(x):
    """Rescale to [0, 1]; the output minimum is exactly 0 and maximum 1."""
    x = np.asarray(x, dtype=np.float64)
    lo = x.min()
    hi = x.max()
    if hi <= lo:
        raise DegenerateSignalError("constant signal cannot be normalized")
    return (x - lo) / (hi - lo)


WELCH_SEGMENT = 1024
WELCH_OVERLAP = 512


def welch_psd(x, fs_hz):
    """Welch PSD: Hann-windowed 1024-point segments, 50% overlap.

    Each segment is mean-removed before windowing, so integrating the
    estimate over [0, fs/2] approximates the signal variance.
    """
    x = np.asarray(x, dtype=np.float64)
    n = x.shape[0]
    if n < WELCH_SEGMENT:
        raise TooShortError(f"need >= {WELCH_SEGMENT} samples, got {n}")
    step = WELCH_SEGMENT - WELCH_OVERLAP
    n_segments = 1 + (n - WELCH_SEGMENT) // step
    k = np.arange(WELCH_SEGMENT)
    window = 0.5 - 0.5 * np.cos(2.0 * np.pi * k / WELCH_SEGMENT)
    scale = 1.0 / (fs_hz * np.sum(window ** 2))
    acc = np.zeros(WELCH_SEGMENT // 2 + 1)
    for s in range(n_segments):
        seg = x[s * step:s * step + WELCH_SEGMENT]
        seg = (seg - seg.mean()) * window
        spec = np.fft.rfft(seg)
        acc += (spec.real ** 2 + spec.imag ** 2) * scale
    psd = acc / n_segments
    psd[1:-1] *= 2.0  # one-sided; DC and Nyquist bins are not doubled
    freqs = np.fft.rfftfreq(WELCH_SEGMENT, d=1.0 / fs_hz)
    return PsdEstimate(frequencies=freqs, power=psd,
                       resolution_hz=fs_hz / WELCH_SEGMENT)


def bandpower(x, fs_hz, f_lo, f_hi):
    """Trapezoidal integral of the Welch PSD over [f_lo, f_hi].

    Band edges are linearly interpolated between PSD bins, which makes the
    integral exactly additive over adjacent bands.
    """
    if not 0.0 <= f_lo < f_hi <= fs_hz / 2.0:
        raise BadBandError(f"band [{f_lo}, {f_hi}] invalid for fs {fs_hz}")
    est = welch_psd(x, fs_hz)
    return bandpower_from_psd(est, f_lo, f_hi)


def bandpower_from_psd(est, f_lo, f_hi):
    """Band integral of an existing PSD estimate (shared by both bandpowers)."""
    freqs = est.frequencies
    if not freqs[0] <= f_lo < f_hi <= freqs[-1]:
        raise BadBandError(f"band [{f_lo}, {f_hi}] outside PSD support")
    inner = (freqs > f_lo) & (freqs < f_hi)
    pts_f = np.concatenate([[f_lo], freqs[inner], [f_hi]])
    pts_p = np.interp(pts_f, freqs, est.power)
    return float(np.trapezoid(pts_p, pts_f))


def preprocess_channel(x, fs_hz, denoise=True, baseline=True, normalize=True):
    """Conditioning chain for one channel: denoise, remove drift, rescale."""
    out = np.asarray(x, dtype=np.float64)
    if denoise:
        out = wavelet_denoise(out)
    if baseline:
        out = remove_baseline(out, fs_hz)
    if normalize:
        out = minmax_normalize(out)
    return out
