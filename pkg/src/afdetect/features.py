"""Per-segment feature extraction: 8 time-domain statistics per channel,
2 bandpowers, and 4 heart-rate-variability metrics from detected R peaks.

The 22-entry feature order is fixed (see FEATURE_NAMES) so model files and
CSV exports stay stable.
"""

from dataclasses import dataclass
import math

import numpy as np

from . import dsp
from .dataset import Dataset, Label
from .errors import DataError, DegenerateSignalError, EmptyDatasetError

FEATURE_NAMES = [
    "ppg_mean", "ppg_std", "ppg_min", "ppg_max", "ppg_median",
    "ppg_skew", "ppg_kurt", "ppg_rms",
    "ecg_mean", "ecg_std", "ecg_min", "ecg_max", "ecg_median",
    "ecg_skew", "ecg_kurt", "ecg_rms",
    "ppg_bandpower_0p5_4", "ecg_bandpower_0p5_40",
    "hr_mean_bpm", "hr_std_bpm", "sdnn_ms", "rmssd_ms",
]

PPG_BAND = (0.5, 4.0)
ECG_BAND = (0.5, 40.0)


@dataclass
class FeatureVector:
    values: np.ndarray
    label: Label
    quality_flags: set


@dataclass
class FeatureToggles:
    time_stats: bool = True
    bandpower: bool = True
    hrv: bool = True


@dataclass
class RPeakList:
    """Detected R-peak sample indices; strictly increasing with gaps of at
    least the 200 ms refractory period."""
    sample_indices: np.ndarray
    fs_hz: float

    def __post_init__(self):
        idx = np.asarray(self.sample_indices, dtype=np.int64)
        self.sample_indices = idx
        if idx.size > 1:
            gaps = np.diff(idx)
            refractory = int(round(0.2 * self.fs_hz))
            if (gaps <= 0).any():
                raise DataError("peak indices must be strictly increasing")
            if (gaps < refractory).any():
                raise DataError("peak gaps below the 200 ms refractory period")


@dataclass
class HrvMetrics:
    hr_mean_bpm: float
    hr_std_bpm: float
    sdnn_ms: float
    rmssd_ms: float
    low_peak_count: bool = False


def time_stats(x):
    """mean, sample std, min, max, median, skewness, kurtosis, RMS.

    Skewness is m3/m2^1.5 and kurtosis m4/m2^2 on population moments
    (kurtosis of a normal is 3); both are undefined for constant input.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.shape[0] < 2:
        raise DataError(f"need >= 2 samples, got {x.shape[0]}")
    if not np.isfinite(x).all():
        raise DataError("input contains non-finite samples")
    mu = float(np.mean(x))
    centered = x - mu
    m2 = float(np.mean(centered ** 2))
    if m2 == 0.0:
        raise DegenerateSignalError("skewness/kurtosis undefined for constant input")
    m3 = float(np.mean(centered ** 3))
    m4 = float(np.mean(centered ** 4))
    return np.array([
        mu,
        float(np.std(x, ddof=1)),
        float(np.min(x)),
        float(np.max(x)),
        float(np.median(x)),
        m3 / m2 ** 1.5,
        m4 / m2 ** 2,
        math.sqrt(float(np.mean(x ** 2))),
    ])


# -- R-peak detection ----------------------------------------------------------

def _moving_average(x, width):
    return np.convolve(x, np.ones(width) / width, mode="same")


def detect_r_peaks(ecg, fs_hz):
    """Batch QRS detector in the Pan-Tompkins style.

    Chain: zero-phase 5-15 Hz band-pass, centered five-point derivative,
    squaring, 150 ms moving-window integration, then adaptive thresholding
    of the integrator peaks with running signal/noise averages, a 200 ms
    refractory period, and a 1.66x-average-RR search-back at half threshold.
    Each accepted integrator peak is refined to the local maximum of the
    input signal within +/-50 ms. Since the whole segment is available, the
    signal-peak estimate is floored at a quarter of the global integrator
    maximum, which keeps sparse signals from seeding a zero threshold.
    """
    ecg = np.asarray(ecg, dtype=np.float64)
    n = ecg.shape[0]
    refractory = int(round(0.2 * fs_hz))
    min_len = 3 * 7 + 1  # filtfilt padding for the order-2 designs
    if n <= max(min_len, refractory):
        return RPeakList(np.empty(0, dtype=np.int64), fs_hz)

    lp = dsp.design_butterworth_lowpass(2, 15.0, fs_hz)
    hp = dsp.design_butterworth_highpass(2, 5.0, fs_hz)
    bp = dsp.filtfilt(hp, dsp.filtfilt(lp, ecg))
    deriv = np.convolve(bp, np.array([2.0, 1.0, 0.0, -1.0, -2.0]) / 8.0,
                        mode="same")
    sq = deriv * deriv
    width = int(round(0.150 * fs_hz))
    if width % 2 == 0:
        width += 1
    integ = _moving_average(sq, width)

    rising = (integ[1:-1] > integ[:-2]) & (integ[1:-1] >= integ[2:])
    cand = np.flatnonzero(rising) + 1
    cand = cand[integ[cand] > 0.0]
    if cand.size == 0:
        return RPeakList(np.empty(0, dtype=np.int64), fs_hz)
    # merge local maxima closer than the refractory period, keeping the
    # larger; integrator shoulders would otherwise shadow the true peak
    merged = []
    for i in cand:
        i = int(i)
        if merged and i - merged[-1] < refractory:
            if integ[i] > integ[merged[-1]]:
                merged[-1] = i
        else:
            merged.append(i)
    cand = np.array(merged, dtype=np.int64)

    global_max = float(integ.max())
    learn = integ[:int(round(2.0 * fs_hz))]
    spki = max(float(learn.max()) if learn.size else 0.0, 0.25 * global_max)
    npki = 0.5 * float(learn.mean()) if learn.size else 0.0
    accepted = []
    rr_recent = []

    def _accept(idx, height, searchback):
        nonlocal spki
        if searchback:
            spki = 0.25 * height + 0.75 * spki
        else:
            spki = 0.125 * height + 0.875 * spki
        if accepted:
            rr_recent.append(idx - accepted[-1])
            del rr_recent[:-8]
        accepted.append(idx)

    for i, v in zip(cand, integ[cand]):
        i = int(i)
        v = float(v)
        if accepted and i - accepted[-1] < refractory:
            continue
        thr1 = npki + 0.25 * (spki - npki)
        if v >= thr1:
            if accepted and rr_recent:
                rr_avg = sum(rr_recent) / len(rr_recent)
                if i - accepted[-1] > 1.66 * rr_avg:
                    lo = accepted[-1] + refractory
                    gap = cand[(cand >= lo) & (cand <= i - refractory)]
                    gap = gap[integ[gap] >= 0.5 * thr1]
                    if gap.size:
                        back = int(gap[np.argmax(integ[gap])])
                        _accept(back, float(integ[back]), searchback=True)
                        if i - accepted[-1] < refractory:
                            continue
            _accept(i, v, searchback=False)
        else:
            npki = 0.125 * v + 0.875 * npki

    half_w = int(round(0.050 * fs_hz))
    peaks = []
    for i in accepted:
        lo = max(0, i - half_w)
        hi = min(n, i + half_w + 1)
        r = lo + int(np.argmax(ecg[lo:hi]))
        if peaks and r - peaks[-1] < refractory:
            if ecg[r] > ecg[peaks[-1]]:
                peaks[-1] = r
        else:
            peaks.append(r)
    return RPeakList(np.array(peaks, dtype=np.int64), fs_hz)


def hrv_metrics(peaks):
    """HR and RR-interval statistics from an R-peak list.

    With fewer than 3 peaks all four metrics are zero and the low_peak_count
    flag is set instead of failing.
    """
    idx = peaks.sample_indices
    if idx.size < 3:
        return HrvMetrics(0.0, 0.0, 0.0, 0.0, low_peak_count=True)
    rr_ms = np.diff(idx) * (1000.0 / peaks.fs_hz)
    hr_bpm = 60000.0 / rr_ms
    return HrvMetrics(
        hr_mean_bpm=float(np.mean(hr_bpm)),
        hr_std_bpm=float(np.std(hr_bpm, ddof=1)),
        sdnn_ms=float(np.std(rr_ms, ddof=1)),
        rmssd_ms=math.sqrt(float(np.mean(np.diff(rr_ms) ** 2))),
    )


# -- segment-level assembly ----------------------------------------------------

def preprocess_segment(segment, denoise=True, baseline=True, normalize=True):
    """Apply the conditioning chain to both channels; returns a new Segment."""
    return type(segment)(
        subject_id=segment.subject_id,
        segment_id=segment.segment_id,
        label=segment.label,
        ppg=dsp.preprocess_channel(segment.ppg, segment.fs, denoise, baseline,
                                   normalize),
        ecg=dsp.preprocess_channel(segment.ecg, segment.fs, denoise, baseline,
                                   normalize),
        fs=segment.fs,
        beat_times=segment.beat_times,
    )


def preprocess_dataset(d, denoise=True, baseline=True, normalize=True):
    return Dataset.from_segments([
        preprocess_segment(s, denoise, baseline, normalize) for s in d.segments])


def _stats_block(x, prefix, flags):
    try:
        return time_stats(x)
    except DegenerateSignalError:
        flags.add(f"{prefix}_stats_degenerate")
        return np.zeros(8)


def extract_features(segment, toggles=FeatureToggles()):
    """Assemble the fixed-order 22-entry feature vector for one segment.

    The segment is expected to be cleaned and preprocessed. Degenerate
    statistics become flagged zeros so batch extraction never aborts;
    disabled groups are likewise zero-filled and flagged.
    """
    flags = set()
    if toggles.time_stats:
        ppg_stats = _stats_block(segment.ppg, "ppg", flags)
        ecg_stats = _stats_block(segment.ecg, "ecg", flags)
    else:
        flags.add("time_stats_disabled")
        ppg_stats = np.zeros(8)
        ecg_stats = np.zeros(8)
    if toggles.bandpower:
        bp = np.array([
            dsp.bandpower(segment.ppg, segment.fs, *PPG_BAND),
            dsp.bandpower(segment.ecg, segment.fs, *ECG_BAND),
        ])
    else:
        flags.add("bandpower_disabled")
        bp = np.zeros(2)
    if toggles.hrv:
        hrv = hrv_metrics(detect_r_peaks(segment.ecg, segment.fs))
        if hrv.low_peak_count:
            flags.add("low_peak_count")
        hrv_vals = np.array([hrv.hr_mean_bpm, hrv.hr_std_bpm,
                             hrv.sdnn_ms, hrv.rmssd_ms])
    else:
        flags.add("hrv_disabled")
        hrv_vals = np.zeros(4)
    values = np.concatenate([ppg_stats, ecg_stats, bp, hrv_vals])
    return FeatureVector(values=values, label=segment.label,
                         quality_flags=flags)


@dataclass
class FeatureTable:
    values: np.ndarray       # (n_segments, 22)
    labels: np.ndarray       # uint8, 1 = AF
    subject_ids: list
    segment_ids: list
    flags: list


def feature_matrix(d, toggles=FeatureToggles()):
    """One feature row per segment, ordered by (subject_id, segment_id)."""
    if not d.segments:
        raise EmptyDatasetError("no segments to extract features from")
    ordered = sorted(d.segments, key=lambda s: (s.subject_id, s.segment_id))
    vectors = [extract_features(s, toggles) for s in ordered]
    return FeatureTable(
        values=np.vstack([v.values for v in vectors]),
        labels=np.array([1 if v.label is Label.AF else 0 for v in vectors],
                        dtype=np.uint8),
        subject_ids=[s.subject_id for s in ordered],
        segment_ids=[s.segment_id for s in ordered],
        flags=[v.quality_flags for v in vectors],
    )


def correlation_matrix(values):
    """Pearson correlations between feature columns.

    Zero-variance columns get correlation 0 off the diagonal and 1 on it,
    so the heatmap stays well defined when a feature is constant.
    """
    x = np.asarray(values, dtype=np.float64)
    centered = x - x.mean(axis=0)
    cov = centered.T @ centered
    sd = np.sqrt(np.diag(cov))
    denom = np.outer(sd, sd)
    with np.errstate(invalid="ignore", divide="ignore"):
        corr = np.where(denom > 0.0, cov / np.where(denom == 0.0, 1.0, denom), 0.0)
    np.fill_diagonal(corr, 1.0)
    return corr
