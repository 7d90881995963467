"""Declarative pipeline configuration.

A single YAML file is the source of truth; CLI flags may only override the
master seed and the output directory. Unknown keys are rejected, and the
config hash is a SHA-256 digest of the canonicalized effective content, so
equal hashes imply identical runs.
"""

from dataclasses import dataclass
import hashlib
import json
import math

import yaml

from .classify import MODEL_DEFAULTS
from .dataset import SynthConfig
from .errors import ConfigError
from .features import FeatureToggles


@dataclass
class PreprocessToggles:
    denoise: bool = True
    remove_baseline: bool = True
    normalize: bool = True


@dataclass
class PipelineConfig:
    seed: int
    output_dir: str
    manifest: str | None
    synth: SynthConfig | None
    preprocess: PreprocessToggles
    features: FeatureToggles
    models: list  # ordered (name, params) pairs
    test_fraction: float
    cv_folds: int
    config_hash: str


def _require_mapping(value, path):
    if value is None:
        return {}
    if not isinstance(value, dict):
        raise ConfigError(f"{path}: expected a mapping")
    return value


def _reject_unknown(d, allowed, path):
    unknown = sorted(set(d) - set(allowed))
    if unknown:
        raise ConfigError(f"{path}: unknown keys {unknown}")


def _to_bool(v, path):
    if isinstance(v, bool):
        return v
    raise ConfigError(f"{path}: expected a boolean, got {v!r}")


def _to_int(v, path, minimum=None):
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigError(f"{path}: expected an integer, got {v!r}")
    if minimum is not None and v < minimum:
        raise ConfigError(f"{path}: must be >= {minimum}, got {v}")
    return v


def _to_float(v, path):
    # YAML requires '1.0e-3' for floats; accept plain '1e-3' strings too
    if isinstance(v, bool):
        raise ConfigError(f"{path}: expected a number, got {v!r}")
    if isinstance(v, (int, float)):
        return float(v)
    if isinstance(v, str):
        try:
            return float(v)
        except ValueError:
            pass
    raise ConfigError(f"{path}: expected a number, got {v!r}")


def load_config_file(path):
    with open(path, encoding="utf-8") as fh:
        raw = yaml.safe_load(fh)
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: config root must be a mapping")
    return raw


def validate_config(raw, seed_override=None, output_override=None):
    """Validate a raw config mapping into a PipelineConfig; overrides for
    seed and output directory are applied before hashing."""
    _reject_unknown(raw, ["seed", "output_dir", "dataset", "preprocess",
                          "features", "models", "split"], "config")

    seed = _to_int(raw.get("seed", 0), "seed", minimum=0)
    if seed_override is not None:
        seed = _to_int(seed_override, "--seed", minimum=0)
    output_dir = raw.get("output_dir", "out")
    if output_override is not None:
        output_dir = output_override
    if not isinstance(output_dir, str) or not output_dir:
        raise ConfigError("output_dir: expected a non-empty string")

    ds = _require_mapping(raw.get("dataset"), "dataset")
    _reject_unknown(ds, ["manifest", "synth"], "dataset")
    manifest = ds.get("manifest")
    synth_raw = ds.get("synth")
    if (manifest is None) == (synth_raw is None):
        raise ConfigError("dataset: set exactly one of manifest or synth")
    synth = None
    if synth_raw is not None:
        s = _require_mapping(synth_raw, "dataset.synth")
        _reject_unknown(s, ["n_subjects", "segments_per_subject",
                            "label_ratio_af", "noise_snr_db",
                            "drift_amplitude", "seed"], "dataset.synth")
        ratio = _to_float(s.get("label_ratio_af", 0.5), "dataset.synth.label_ratio_af")
        if not 0.0 <= ratio <= 1.0:
            raise ConfigError("dataset.synth.label_ratio_af: must be in [0, 1]")
        snr = _to_float(s.get("noise_snr_db", math.inf), "dataset.synth.noise_snr_db")
        if math.isnan(snr):
            raise ConfigError("dataset.synth.noise_snr_db: must not be NaN")
        drift = _to_float(s.get("drift_amplitude", 0.0), "dataset.synth.drift_amplitude")
        if drift < 0:
            raise ConfigError("dataset.synth.drift_amplitude: must be >= 0")
        synth = SynthConfig(
            n_subjects=_to_int(s.get("n_subjects", 1), "dataset.synth.n_subjects", 1),
            segments_per_subject=_to_int(s.get("segments_per_subject", 1),
                                         "dataset.synth.segments_per_subject", 1),
            label_ratio_af=ratio,
            noise_snr_db=snr,
            drift_amplitude=drift,
            seed=_to_int(s["seed"], "dataset.synth.seed", 0)
            if "seed" in s else seed,
        )
    elif not isinstance(manifest, str) or not manifest:
        raise ConfigError("dataset.manifest: expected a non-empty path string")

    pp = _require_mapping(raw.get("preprocess"), "preprocess")
    _reject_unknown(pp, ["denoise", "remove_baseline", "normalize"], "preprocess")
    preprocess = PreprocessToggles(
        denoise=_to_bool(pp.get("denoise", True), "preprocess.denoise"),
        remove_baseline=_to_bool(pp.get("remove_baseline", True),
                                 "preprocess.remove_baseline"),
        normalize=_to_bool(pp.get("normalize", True), "preprocess.normalize"),
    )

    fe = _require_mapping(raw.get("features"), "features")
    _reject_unknown(fe, ["time_stats", "bandpower", "hrv"], "features")
    features = FeatureToggles(
        time_stats=_to_bool(fe.get("time_stats", True), "features.time_stats"),
        bandpower=_to_bool(fe.get("bandpower", True), "features.bandpower"),
        hrv=_to_bool(fe.get("hrv", True), "features.hrv"),
    )

    mo = _require_mapping(raw.get("models"), "models")
    _reject_unknown(mo, list(MODEL_DEFAULTS), "models")
    if not mo:
        mo = {name: {} for name in MODEL_DEFAULTS}
    models = []
    numeric_fields = {"c", "tol"}
    for name in mo:
        given = _require_mapping(mo[name], f"models.{name}")
        _reject_unknown(given, list(MODEL_DEFAULTS[name]), f"models.{name}")
        params = dict(MODEL_DEFAULTS[name])
        for key, value in given.items():
            path = f"models.{name}.{key}"
            if key in numeric_fields:
                v = _to_float(value, path)
                if v <= 0:
                    raise ConfigError(f"{path}: must be positive")
            else:
                v = _to_int(value, path, minimum=1)
            params[key] = v
        models.append((name, params))

    sp = _require_mapping(raw.get("split"), "split")
    _reject_unknown(sp, ["test_fraction", "cv_folds"], "split")
    test_fraction = _to_float(sp.get("test_fraction", 0.2), "split.test_fraction")
    if not 0.0 < test_fraction < 1.0:
        raise ConfigError("split.test_fraction: must be in (0, 1)")
    cv_folds = _to_int(sp.get("cv_folds", 10), "split.cv_folds", minimum=2)

    cfg = PipelineConfig(
        seed=seed,
        output_dir=output_dir,
        manifest=manifest,
        synth=synth,
        preprocess=preprocess,
        features=features,
        models=models,
        test_fraction=test_fraction,
        cv_folds=cv_folds,
        config_hash="",
    )
    cfg.config_hash = _hash_config(cfg)
    return cfg


def _canonical_dict(cfg):
    # output_dir is deliberately excluded: it affects where outputs land,
    # never their content, and equal hashes must imply identical outputs
    return {
        "seed": cfg.seed,
        "dataset": {
            "manifest": cfg.manifest,
            "synth": None if cfg.synth is None else {
                "n_subjects": cfg.synth.n_subjects,
                "segments_per_subject": cfg.synth.segments_per_subject,
                "label_ratio_af": cfg.synth.label_ratio_af,
                "noise_snr_db": repr(cfg.synth.noise_snr_db),
                "drift_amplitude": cfg.synth.drift_amplitude,
                "seed": cfg.synth.seed,
            },
        },
        "preprocess": {
            "denoise": cfg.preprocess.denoise,
            "remove_baseline": cfg.preprocess.remove_baseline,
            "normalize": cfg.preprocess.normalize,
        },
        "features": {
            "time_stats": cfg.features.time_stats,
            "bandpower": cfg.features.bandpower,
            "hrv": cfg.features.hrv,
        },
        "models": [[name, params] for name, params in cfg.models],
        "split": {
            "test_fraction": cfg.test_fraction,
            "cv_folds": cfg.cv_folds,
        },
    }


def _hash_config(cfg):
    blob = json.dumps(_canonical_dict(cfg), sort_keys=True,
                      separators=(",", ":")).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()


def load_config(path, seed_override=None, output_override=None):
    return validate_config(load_config_file(path), seed_override,
                           output_override)
