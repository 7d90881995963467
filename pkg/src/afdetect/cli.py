"""Command-line interface.

Commands: synth (write a synthetic dataset to disk), run (full pipeline to
report files), features (feature table + correlation CSV), preprocess
(before/after traces with --dump). Exit codes: 1 config, 2 I/O, 3 data,
4 numeric. Every output file embeds the config hash and master seed.
"""

import argparse
import json
import logging
import os
from pathlib import Path
import sys

from . import dsp, evaluate, features as ft
from .config import load_config
from .dataset import (
    clean_dataset,
    load_dataset,
    segment_filename,
    synth_generate,
    write_manifest,
    write_segment_csv,
)
from .errors import ConfigError, DataError, NumericError

log = logging.getLogger("afdetect")


def _setup_logging():
    level = os.environ.get("AFDETECT_LOG", "warning").strip().upper()
    logging.basicConfig(
        level=getattr(logging, level, logging.WARNING),
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )


def _provenance(cfg):
    return f"config_hash={cfg.config_hash} seed={cfg.seed}"


def _out_dir(cfg):
    out = Path(cfg.output_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except (FileExistsError, NotADirectoryError) as e:
        raise OSError(f"cannot create output directory {out}: {e}") from e
    return out


def cmd_synth(cfg):
    if cfg.synth is None:
        raise ConfigError("synth command needs a dataset.synth section")
    out = _out_dir(cfg)
    seg_dir = out / "segments"
    seg_dir.mkdir(exist_ok=True)
    dataset = synth_generate(cfg.synth)
    comment = _provenance(cfg)
    paths = {}
    beats = {}
    for s in dataset.segments:
        name = segment_filename(s.subject_id, s.segment_id)
        write_segment_csv(seg_dir / name, s, header_comment=comment)
        paths[(s.subject_id, s.segment_id)] = f"segments/{name}"
        beats[f"{s.subject_id}/{s.segment_id}"] = [float(t) for t in s.beat_times]
    write_manifest(out / "manifest.csv", dataset, paths, header_comment=comment)
    with open(out / "beats.json", "w", encoding="utf-8") as fh:
        json.dump({"format": "afdetect-beats", "version": 1,
                   "config_hash": cfg.config_hash, "seed": cfg.seed,
                   "beat_times_s": beats},
                  fh, sort_keys=True, separators=(",", ":"))
        fh.write("\n")
    log.info("wrote %d segments to %s", len(dataset.segments), out)
    print(f"wrote {len(dataset.segments)} segments, manifest.csv and "
          f"beats.json under {out}")
    return 0


def _load_input_dataset(cfg):
    if cfg.manifest is not None:
        return load_dataset(cfg.manifest)
    return synth_generate(cfg.synth)


def _build_feature_table(cfg):
    raw = _load_input_dataset(cfg)
    cleaned, cleaning = clean_dataset(raw)
    log.info("cleaning kept %d of %d segments", len(cleaned.segments),
             len(raw.segments))
    pre = ft.preprocess_dataset(
        cleaned,
        denoise=cfg.preprocess.denoise,
        baseline=cfg.preprocess.remove_baseline,
        normalize=cfg.preprocess.normalize,
    )
    table = ft.feature_matrix(pre, cfg.features)
    return table, cleaning


def _write_features_csv(path, table, comment):
    with open(path, "w", newline="\n", encoding="utf-8") as fh:
        fh.write(f"# {comment}\n")
        fh.write(",".join(ft.FEATURE_NAMES + ["subject_id", "segment_id",
                                              "label"]) + "\n")
        for row, sub, seg, lab in zip(table.values, table.subject_ids,
                                      table.segment_ids, table.labels):
            cells = [repr(float(v)) for v in row]
            cells += [sub, str(seg), "AF" if lab else "NAF"]
            fh.write(",".join(cells) + "\n")


def _write_correlation_csv(path, table, comment):
    corr = ft.correlation_matrix(table.values)
    with open(path, "w", newline="\n", encoding="utf-8") as fh:
        fh.write(f"# {comment}\n")
        fh.write("feature," + ",".join(ft.FEATURE_NAMES) + "\n")
        for name, row in zip(ft.FEATURE_NAMES, corr):
            fh.write(name + "," + ",".join(repr(float(v)) for v in row) + "\n")


def _write_cleaning_json(path, cleaning, cfg):
    doc = {
        "format": "afdetect-cleaning",
        "version": 1,
        "config_hash": cfg.config_hash,
        "seed": cfg.seed,
        "discarded": [{"subject_id": s, "segment_id": g, "reason": r}
                      for s, g, r in cleaning.discarded],
        "reason_counts": cleaning.reason_counts,
        "kept_counts": {k.value: v for k, v in cleaning.kept_counts.items()},
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, sort_keys=True, separators=(",", ":"))
        fh.write("\n")


def cmd_run(cfg):
    out = _out_dir(cfg)
    table, cleaning = _build_feature_table(cfg)
    reports = evaluate.run_experiment(
        table, cfg.models, seed=cfg.seed,
        test_fraction=cfg.test_fraction, cv_folds=cfg.cv_folds,
        config_hash=cfg.config_hash,
    )
    comment = _provenance(cfg)
    with open(out / "report.json", "w", newline="\n", encoding="utf-8") as fh:
        fh.write(evaluate.reports_to_json(reports, cfg.seed, cfg.config_hash))
    with open(out / "report.txt", "w", newline="\n", encoding="utf-8") as fh:
        fh.write(evaluate.render_table(reports, cfg.seed, cfg.config_hash))
    _write_features_csv(out / "features.csv", table, comment)
    _write_correlation_csv(out / "correlation.csv", table, comment)
    _write_cleaning_json(out / "cleaning.json", cleaning, cfg)
    print(evaluate.render_table(reports, cfg.seed, cfg.config_hash), end="")
    return 0


def cmd_features(cfg):
    out = _out_dir(cfg)
    table, _cleaning = _build_feature_table(cfg)
    comment = _provenance(cfg)
    _write_features_csv(out / "features.csv", table, comment)
    _write_correlation_csv(out / "correlation.csv", table, comment)
    print(f"wrote features.csv ({table.values.shape[0]} rows) and "
          f"correlation.csv under {out}")
    return 0


def cmd_preprocess(cfg, dump, subject, segment_id):
    raw = _load_input_dataset(cfg)
    cleaned, _ = clean_dataset(raw)
    ordered = sorted(cleaned.segments, key=lambda s: (s.subject_id, s.segment_id))
    pick = ordered[0]
    if subject is not None:
        matches = [s for s in ordered if s.subject_id == subject
                   and (segment_id is None or s.segment_id == segment_id)]
        if not matches:
            raise DataError(f"no segment for subject {subject!r}"
                            + ("" if segment_id is None else f" segment {segment_id}"))
        pick = matches[0]

    stages = [("raw", pick.ppg.copy(), pick.ecg.copy())]
    ppg, ecg = pick.ppg, pick.ecg
    if cfg.preprocess.denoise:
        ppg, ecg = dsp.wavelet_denoise(ppg), dsp.wavelet_denoise(ecg)
        stages.append(("denoised", ppg, ecg))
    if cfg.preprocess.remove_baseline:
        ppg = dsp.remove_baseline(ppg, pick.fs)
        ecg = dsp.remove_baseline(ecg, pick.fs)
        stages.append(("baseline_removed", ppg, ecg))
    if cfg.preprocess.normalize:
        ppg, ecg = dsp.minmax_normalize(ppg), dsp.minmax_normalize(ecg)
        stages.append(("normalized", ppg, ecg))

    if not dump:
        print(f"preprocessed {pick.subject_id}/{pick.segment_id}: stages "
              + " -> ".join(name for name, _, _ in stages))
        return 0
    out = _out_dir(cfg)
    path = out / f"trace_{pick.subject_id}_seg{pick.segment_id:03d}.csv"
    header = ["index"]
    for name, _, _ in stages:
        header += [f"ppg_{name}", f"ecg_{name}"]
    with open(path, "w", newline="\n", encoding="utf-8") as fh:
        fh.write(f"# {_provenance(cfg)}\n")
        fh.write(",".join(header) + "\n")
        n = stages[0][1].shape[0]
        for i in range(n):
            cells = [str(i)]
            for _, p, e in stages:
                cells += [f"{p[i]:.12g}", f"{e[i]:.12g}"]
            fh.write(",".join(cells) + "\n")
    print(f"wrote {path}")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="afdetect",
        description="AF detection pipeline: synthetic data, preprocessing, "
                    "features, classifiers, evaluation.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", required=True, help="YAML config file")
        p.add_argument("--seed", type=int, default=None,
                       help="override the master seed")
        p.add_argument("--out", default=None, help="override the output dir")

    common(sub.add_parser("synth", help="write a synthetic dataset to disk"))
    common(sub.add_parser("run", help="run the full pipeline and write reports"))
    common(sub.add_parser("features", help="write feature and correlation CSVs"))
    p = sub.add_parser("preprocess", help="preprocess one segment")
    common(p)
    p.add_argument("--dump", action="store_true",
                   help="write before/after traces as CSV")
    p.add_argument("--subject", default=None, help="subject id to select")
    p.add_argument("--segment", type=int, default=None,
                   help="segment id to select")
    return parser


def main(argv=None):
    _setup_logging()
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, seed_override=args.seed,
                          output_override=args.out)
        if args.command == "synth":
            return cmd_synth(cfg)
        if args.command == "run":
            return cmd_run(cfg)
        if args.command == "features":
            return cmd_features(cfg)
        return cmd_preprocess(cfg, args.dump, args.subject, args.segment)
    except ConfigError as e:
        print(f"error (config): {e}", file=sys.stderr)
        return 1
    except OSError as e:
        print(f"error (io): {e}", file=sys.stderr)
        return 2
    except DataError as e:
        print(f"error (data): {e}", file=sys.stderr)
        return 3
    except NumericError as e:
        print(f"error (numeric): {e}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
