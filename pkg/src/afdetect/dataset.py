"""Segment ingestion, dataset assembly/cleaning, stratified splitting, and
the synthetic PPG+ECG generator used in place of the private recordings.

File formats owned here: a per-segment CSV with header ``index,ppg,ecg`` and
one sample per row, plus a sidecar ``manifest.csv`` with columns
``subject_id,segment_id,label,path``. Lines starting with ``#`` are comments
(used to embed provenance) and are skipped on read.
"""

import csv
from dataclasses import dataclass
from enum import Enum
import math
from pathlib import Path

import numpy as np

from .errors import (
    BadLabelError,
    ConfigError,
    DegenerateClassError,
    DuplicateSegmentError,
    EmptyDatasetError,
    MalformedRowError,
)

SEGMENT_LENGTH = 10000
SAMPLE_RATE_HZ = 125.0
SEGMENT_SECONDS = SEGMENT_LENGTH / SAMPLE_RATE_HZ  # 80 s
DRIFT_FREQ_HZ = 0.2


class Label(Enum):
    AF = "AF"
    NAF = "NAF"


def parse_label(text):
    t = text.strip()
    try:
        return Label(t)
    except ValueError:
        raise BadLabelError(f"label must be AF or NAF, got {text!r}") from None


@dataclass
class Segment:
    """One 80-second record: paired PPG and ECG channels at 125 Hz.

    beat_times carries the generator's ground-truth beat instants in seconds
    (None for ingested data). Channels may contain NaN missing markers until
    cleaning has run.
    """
    subject_id: str
    segment_id: int
    label: Label
    ppg: np.ndarray
    ecg: np.ndarray
    fs: float = SAMPLE_RATE_HZ
    beat_times: np.ndarray | None = None


@dataclass
class Dataset:
    segments: list
    counts: dict

    @classmethod
    def from_segments(cls, segments):
        if not segments:
            raise EmptyDatasetError("dataset has no segments")
        seen = set()
        for s in segments:
            key = (s.subject_id, s.segment_id)
            if key in seen:
                raise DuplicateSegmentError(f"duplicate segment {key}")
            seen.add(key)
        counts = {Label.AF: 0, Label.NAF: 0}
        for s in segments:
            counts[s.label] += 1
        return cls(segments=segments, counts=counts)

    def labels_array(self):
        """uint8 vector with 1 for AF, 0 for NAF, in segment order."""
        return np.array([1 if s.label is Label.AF else 0
                         for s in self.segments], dtype=np.uint8)


@dataclass
class SplitIndices:
    train: np.ndarray
    test: np.ndarray
    seed: int


@dataclass
class CleaningReport:
    discarded: list          # (subject_id, segment_id, reason)
    reason_counts: dict      # reason -> count
    kept_counts: dict        # Label -> count


@dataclass
class SynthConfig:
    n_subjects: int
    segments_per_subject: int
    label_ratio_af: float = 0.5
    noise_snr_db: float = math.inf
    drift_amplitude: float = 0.0
    seed: int = 0


@dataclass
class ManifestEntry:
    subject_id: str
    segment_id: int
    label_raw: str
    path: Path


# -- CSV ingestion -------------------------------------------------------------

def _data_rows(path):
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.reader(fh):
            if row and row[0].lstrip().startswith("#"):
                continue
            yield row


def _cell_to_float(cell):
    """Empty or unparseable cells become NaN markers, never silent zeros."""
    t = cell.strip()
    if not t:
        return math.nan
    try:
        return float(t)
    except ValueError:
        return math.nan


def parse_segment_csv(path, subject_id, segment_id, label):
    """Read one segment sample file; metadata comes from the manifest sidecar."""
    lbl = label if isinstance(label, Label) else parse_label(label)
    rows = _data_rows(path)
    try:
        header = next(rows)
    except StopIteration:
        raise MalformedRowError(f"{path}: empty file") from None
    if [c.strip() for c in header] != ["index", "ppg", "ecg"]:
        raise MalformedRowError(f"{path}: expected header index,ppg,ecg")
    ppg = []
    ecg = []
    for i, row in enumerate(rows):
        if len(row) != 3:
            raise MalformedRowError(
                f"{path}: row {i + 2} has {len(row)} columns, expected 3")
        ppg.append(_cell_to_float(row[1]))
        ecg.append(_cell_to_float(row[2]))
    return Segment(
        subject_id=subject_id,
        segment_id=int(segment_id),
        label=lbl,
        ppg=np.array(ppg, dtype=np.float64),
        ecg=np.array(ecg, dtype=np.float64),
    )


def load_manifest(path):
    path = Path(path)
    entries = []
    rows = _data_rows(path)
    try:
        header = next(rows)
    except StopIteration:
        raise MalformedRowError(f"{path}: empty manifest") from None
    if [c.strip() for c in header] != ["subject_id", "segment_id", "label", "path"]:
        raise MalformedRowError(
            f"{path}: expected header subject_id,segment_id,label,path")
    for i, row in enumerate(rows):
        if len(row) != 4:
            raise MalformedRowError(
                f"{path}: row {i + 2} has {len(row)} columns, expected 4")
        try:
            seg_id = int(row[1])
        except ValueError:
            raise MalformedRowError(
                f"{path}: row {i + 2} segment_id {row[1]!r} is not an integer"
            ) from None
        entries.append(ManifestEntry(
            subject_id=row[0].strip(),
            segment_id=seg_id,
            label_raw=row[2],
            path=path.parent / row[3].strip(),
        ))
    return entries


def merge_dataset(entries):
    """Parse all manifest entries into one Dataset, sorted by (subject, segment)."""
    if not entries:
        raise EmptyDatasetError("manifest lists no segments")
    seen = set()
    for e in entries:
        key = (e.subject_id, e.segment_id)
        if key in seen:
            raise DuplicateSegmentError(f"duplicate segment {key}")
        seen.add(key)
    ordered = sorted(entries, key=lambda e: (e.subject_id, e.segment_id))
    segments = [parse_segment_csv(e.path, e.subject_id, e.segment_id, e.label_raw)
                for e in ordered]
    return Dataset.from_segments(segments)


def load_dataset(manifest_path):
    return merge_dataset(load_manifest(manifest_path))


# -- cleaning ------------------------------------------------------------------

REASON_WRONG_LENGTH = "wrong_length"
REASON_MISSING = "missing_values"
REASON_ZERO_VARIANCE = "zero_variance"


def _discard_reason(segment, expected_length):
    if segment.ppg.shape[0] != expected_length or segment.ecg.shape[0] != expected_length:
        return REASON_WRONG_LENGTH
    if np.isnan(segment.ppg).any() or np.isnan(segment.ecg).any():
        return REASON_MISSING
    if segment.ppg.max() <= segment.ppg.min() or segment.ecg.max() <= segment.ecg.min():
        return REASON_ZERO_VARIANCE
    return None


def clean_dataset(d, expected_length=SEGMENT_LENGTH):
    """Keep only full-length segments with no missing values and nonzero
    variance in both channels; idempotent."""
    kept = []
    discarded = []
    reason_counts = {REASON_WRONG_LENGTH: 0, REASON_MISSING: 0,
                     REASON_ZERO_VARIANCE: 0}
    for s in d.segments:
        reason = _discard_reason(s, expected_length)
        if reason is None:
            kept.append(s)
        else:
            discarded.append((s.subject_id, s.segment_id, reason))
            reason_counts[reason] += 1
    if not kept:
        raise EmptyDatasetError("cleaning discarded every segment")
    cleaned = Dataset.from_segments(kept)
    report = CleaningReport(discarded=discarded, reason_counts=reason_counts,
                            kept_counts=dict(cleaned.counts))
    return cleaned, report


# -- stratified splitting ------------------------------------------------------

def _round_half_up(x):
    return int(math.floor(x + 0.5))


def split_indices(labels, test_fraction, seed):
    """Per-class uniform test selection; test count is round(fraction * size).

    labels is a uint8 array (1 = AF). Returns (train, test) sorted index arrays.
    """
    if not 0.0 < test_fraction < 1.0:
        raise ConfigError(f"test_fraction must be in (0, 1), got {test_fraction}")
    labels = np.asarray(labels)
    rng = np.random.default_rng(seed)
    test_parts = []
    for cls in (1, 0):  # AF first, fixed order for determinism
        idx = np.flatnonzero(labels == cls)
        if idx.size < 2:
            raise DegenerateClassError(
                f"class {'AF' if cls else 'NAF'} has {idx.size} members, need >= 2")
        k = _round_half_up(test_fraction * idx.size)
        perm = rng.permutation(idx.size)
        test_parts.append(idx[perm[:k]])
    test = np.sort(np.concatenate(test_parts))
    mask = np.ones(labels.shape[0], dtype=bool)
    mask[test] = False
    return np.flatnonzero(mask), test


def stratified_split(d, test_fraction, seed):
    train, test = split_indices(d.labels_array(), test_fraction, seed)
    return SplitIndices(train=train, test=test, seed=int(seed))


# -- synthetic generator -------------------------------------------------------

def _raised_cosine(tau, width):
    return 0.5 * (1.0 - np.cos(2.0 * np.pi * tau / width))


def ppg_pulse_train(beat_times, n_samples, fs_hz):
    """Noise-free PPG template: per-beat raised-cosine systolic pulse plus a
    smaller dicrotic bump, widths scaled by the local beat interval."""
    x = np.zeros(n_samples)
    beats = np.asarray(beat_times, dtype=np.float64)
    if beats.size == 0:
        return x
    rr = np.diff(beats)
    last_rr = float(np.median(rr)) if rr.size else 0.8
    rr = np.append(rr, last_rr)
    for t0, beat_rr in zip(beats, rr):
        for start, width, amp in (
                (0.0, 0.5 * beat_rr, 1.0),          # systolic upstroke
                (0.5 * beat_rr, 0.35 * beat_rr, 0.3)):  # dicrotic bump
            i0 = max(0, int(math.ceil((t0 + start) * fs_hz)))
            i1 = min(n_samples, int(math.floor((t0 + start + width) * fs_hz)) + 1)
            if i0 >= i1:
                continue
            tau = np.arange(i0, i1) / fs_hz - (t0 + start)
            x[i0:i1] += amp * _raised_cosine(tau, width)
    return x


def _add_gaussian(x, center_s, sigma_s, amp, fs_hz):
    n = x.shape[0]
    i0 = max(0, int(math.ceil((center_s - 4.0 * sigma_s) * fs_hz)))
    i1 = min(n, int(math.floor((center_s + 4.0 * sigma_s) * fs_hz)) + 1)
    if i0 >= i1:
        return
    t = np.arange(i0, i1) / fs_hz
    x[i0:i1] += amp * np.exp(-0.5 * ((t - center_s) / sigma_s) ** 2)


def ecg_waveform(beat_times, n_samples, fs_hz, include_p_t):
    """Noise-free ECG template: 10 ms-sigma Gaussian QRS per beat; P and T
    waves are added only when include_p_t is set (normal rhythm)."""
    x = np.zeros(n_samples)
    for t0 in np.asarray(beat_times, dtype=np.float64):
        _add_gaussian(x, t0, 0.010, 1.0, fs_hz)
        if include_p_t:
            _add_gaussian(x, t0 - 0.16, 0.020, 0.15, fs_hz)
            _add_gaussian(x, t0 + 0.25, 0.040, 0.35, fs_hz)
    return x


def _validate_synth_config(cfg):
    if cfg.n_subjects < 1:
        raise ConfigError("n_subjects must be >= 1")
    if cfg.segments_per_subject < 1:
        raise ConfigError("segments_per_subject must be >= 1")
    if not 0.0 <= cfg.label_ratio_af <= 1.0:
        raise ConfigError("label_ratio_af must be in [0, 1]")
    if cfg.drift_amplitude < 0.0:
        raise ConfigError("drift_amplitude must be >= 0")
    if math.isnan(cfg.noise_snr_db):
        raise ConfigError("noise_snr_db must be a real number or inf")
    if cfg.seed < 0:
        raise ConfigError("seed must be >= 0")


def synth_generate(cfg):
    """Generate a synthetic dataset; bit-reproducible for a fixed config.

    Normal-rhythm beat intervals are Normal(0.8 s, 0.03 s) clipped to
    [0.6, 1.0]; AF intervals are Uniform(0.4 s, 1.2 s). White noise is scaled
    per channel to noise_snr_db against the clean template power, and a
    0.2 Hz sinusoidal drift of amplitude drift_amplitude is added with a
    random phase per channel. Ground-truth beat times ride along on each
    segment.
    """
    _validate_synth_config(cfg)
    n_af_subjects = _round_half_up(cfg.label_ratio_af * cfg.n_subjects)
    children = np.random.SeedSequence(cfg.seed).spawn(
        cfg.n_subjects * cfg.segments_per_subject)
    n = SEGMENT_LENGTH
    fs = SAMPLE_RATE_HZ
    t = np.arange(n) / fs
    max_beats = int(SEGMENT_SECONDS / 0.4) + 4
    segments = []
    for s in range(cfg.n_subjects):
        label = Label.AF if s < n_af_subjects else Label.NAF
        for g in range(cfg.segments_per_subject):
            rng = np.random.default_rng(children[s * cfg.segments_per_subject + g])
            if label is Label.AF:
                rr = rng.uniform(0.4, 1.2, size=max_beats)
            else:
                rr = np.clip(rng.normal(0.8, 0.03, size=max_beats), 0.6, 1.0)
            t0 = 0.3 + rng.uniform(0.0, 0.7)
            beats = t0 + np.concatenate([[0.0], np.cumsum(rr[:-1])])
            beats = beats[beats < SEGMENT_SECONDS - 1.0]
            ppg = ppg_pulse_train(beats, n, fs)
            ecg = ecg_waveform(beats, n, fs, include_p_t=(label is Label.NAF))
            phases = rng.uniform(0.0, 2.0 * np.pi, size=2)
            noise = rng.normal(size=(2, n))
            snr_linear = 10.0 ** (cfg.noise_snr_db / 10.0)
            for chan, phase, nz in ((ppg, phases[0], noise[0]),
                                    (ecg, phases[1], noise[1])):
                sigma = math.sqrt(float(np.var(chan)) / snr_linear)
                chan += cfg.drift_amplitude * np.sin(
                    2.0 * np.pi * DRIFT_FREQ_HZ * t + phase)
                chan += sigma * nz
            segments.append(Segment(
                subject_id=f"S{s:03d}",
                segment_id=g,
                label=label,
                ppg=ppg,
                ecg=ecg,
                beat_times=beats,
            ))
    return Dataset.from_segments(segments)


# -- writers -------------------------------------------------------------------

def segment_filename(subject_id, segment_id):
    return f"{subject_id}_seg{segment_id:03d}.csv"


def write_segment_csv(path, segment, header_comment=None):
    with open(path, "w", newline="\n", encoding="utf-8") as fh:
        if header_comment:
            fh.write(f"# {header_comment}\n")
        fh.write("index,ppg,ecg\n")
        for i, (p, e) in enumerate(zip(segment.ppg, segment.ecg)):
            fh.write(f"{i},{p:.12g},{e:.12g}\n")


def write_manifest(path, dataset, segment_paths, header_comment=None):
    """segment_paths maps (subject_id, segment_id) to a path relative to the
    manifest's directory."""
    with open(path, "w", newline="\n", encoding="utf-8") as fh:
        if header_comment:
            fh.write(f"# {header_comment}\n")
        fh.write("subject_id,segment_id,label,path\n")
        for s in dataset.segments:
            rel = segment_paths[(s.subject_id, s.segment_id)]
            fh.write(f"{s.subject_id},{s.segment_id},{s.label.value},{rel}\n")
