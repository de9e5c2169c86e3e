"""Command line interface.

Subcommands: synth, train-generic, augment, personalize, evaluate, fuse,
experiment. Exit codes: 0 success, 2 configuration error, 3 data error,
4 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import sys
from pathlib import Path

import numpy as np

from .augment import DwaConfig, augment_individual, build_pool, \
    export_augmentation_report
from .corpus import (
    SynthConfig,
    apply_scaler,
    fit_scaler,
    generate_synthetic,
    load_corpus,
    save_corpus,
)
from .errors import (
    ConfigError,
    DataError,
    DwaError,
    InvalidConfig,
    LengthMismatch,
    MissingFile,
    NumericalError,
    UnknownConfigKey,
)
from .metrics import DistanceMetric
from .pipeline import (
    BASELINE_METRIC,
    ExperimentConfig,
    evaluate,
    experiment_config_from_dict,
    late_fuse,
    personalize,
    predict_span,
    run_experiment,
    train_generic,
)
from .regressor import load_params, save_params

METRIC_CHOICES = [m.value for m in DistanceMetric]
TARGET_CHOICES = ["valence", "arousal"]
SPAN_CHOICES = ["train_i", "devel_i", "test", "full"]


def _load_json(path) -> dict:
    p = Path(path)
    if not p.is_file():
        raise MissingFile(str(p))
    try:
        return json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise InvalidConfig(f"{p}: invalid JSON ({exc})") from None


def _synth_config(path) -> SynthConfig:
    if path is None:
        return SynthConfig()
    data = _load_json(path)
    fields = {f.name for f in dataclasses.fields(SynthConfig)}
    unknown = set(data) - fields
    if unknown:
        raise UnknownConfigKey(f"synth config: unknown keys "
                               f"{sorted(unknown)}")
    return SynthConfig(**data)


def _experiment_config(path) -> ExperimentConfig:
    if path is None:
        return ExperimentConfig()
    return experiment_config_from_dict(_load_json(path))


def _standardized(corpus_dir):
    corpus = load_corpus(corpus_dir)
    stats = fit_scaler(corpus)
    return apply_scaler(corpus, stats)


def _write_predictions(path, indices, values, sample_period):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["timestamp", "prediction"])
        for i, v in zip(indices, values):
            writer.writerow([repr(float(i * sample_period)),
                             repr(float(v))])


def _read_predictions(path):
    p = Path(path)
    if not p.is_file():
        raise MissingFile(str(p))
    ts, vals = [], []
    with open(p, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["timestamp", "prediction"]:
            raise DataError(f"{p}: expected header timestamp,prediction")
        for row in reader:
            ts.append(float(row[0]))
            vals.append(float(row[1]))
    return np.array(ts), np.array(vals)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def _cmd_synth(args) -> int:
    config = _synth_config(args.config)
    corpus = generate_synthetic(config, args.seed)
    save_corpus(corpus, args.out)
    print(f"wrote corpus with {len(corpus.individuals)} individuals "
          f"to {args.out}")
    return 0


def _cmd_train_generic(args) -> int:
    config = _experiment_config(args.config)
    if args.seed is not None:
        config = dataclasses.replace(
            config, train_generic=dataclasses.replace(
                config.train_generic, seed=args.seed))
    corpus = _standardized(args.corpus)
    params, trace = train_generic(corpus, config, args.target)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    ckpt = out / f"generic_{args.target}.json"
    save_params(params, ckpt)
    with open(out / f"generic_{args.target}_trace.json", "w") as fh:
        json.dump({"train_loss": trace.train_loss,
                   "dev_ccc": trace.dev_ccc,
                   "best_epoch": trace.best_epoch,
                   "stopped_early": trace.stopped_early}, fh, indent=2)
        fh.write("\n")
    print(f"generic {args.target}: best epoch {trace.best_epoch}, "
          f"dev ccc {trace.best_dev_ccc:.4f} -> {ckpt}")
    return 0


def _cmd_augment(args) -> int:
    config = _experiment_config(args.config)
    corpus = _standardized(args.corpus)
    pool = build_pool(corpus, config.seg)
    dwa_cfg = DwaConfig(metric=DistanceMetric.from_string(args.metric),
                        n=args.n)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    from .segmentation import segment_series
    for ind in corpus.test_members:
        segments = segment_series(ind.features, ind.labels, config.seg,
                                  ind.span("train_i"))
        dataset = augment_individual(pool, segments, dwa_cfg)
        report = out / f"augment_{ind.id}.csv"
        export_augmentation_report(dataset, pool, report)
        print(f"{ind.id}: {len(dataset.original)} segments + "
              f"{len(dataset.augmentations)} selections -> {report}")
    return 0


def _cmd_personalize(args) -> int:
    config = _experiment_config(args.config)
    if args.metric is not None:
        config = dataclasses.replace(
            config, dwa=DwaConfig(
                metric=DistanceMetric.from_string(args.metric), n=args.n))
    if args.seed is not None:
        config = dataclasses.replace(
            config, train_personal=dataclasses.replace(
                config.train_personal, seed=args.seed))
    corpus = _standardized(args.corpus)
    generic = load_params(args.generic)
    pool = build_pool(corpus, config.seg) if config.dwa is not None else None
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    for ind in corpus.test_members:
        params, record = personalize(generic, ind, pool, config, args.target)
        save_params(params, out / f"personal_{ind.id}_{args.target}.json")
        rows.append(record)
        print(f"{ind.id} {args.target}: devel ccc "
              f"{record.ccc_report.ccc:.4f}")
    with open(out / "devel_records.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["metric", "n", "individual_id", "target", "split",
                         "ccc", "pcc", "bcf"])
        metric = config.dwa.metric.value if config.dwa else BASELINE_METRIC
        n = config.dwa.n if config.dwa else 0
        for rec in rows:
            writer.writerow([metric, n, rec.individual_id, rec.target,
                             rec.split, repr(rec.ccc_report.ccc),
                             repr(rec.ccc_report.pcc),
                             repr(rec.ccc_report.bcf)])
    return 0


def _cmd_evaluate(args) -> int:
    config = _experiment_config(args.config)
    corpus = _standardized(args.corpus)
    ind = corpus.by_id(args.individual)
    model = load_params(args.model)
    record = evaluate(model, ind, args.span, args.target, config.seg)
    print(f"{ind.id} {args.span} {args.target}: "
          f"ccc {record.ccc_report.ccc:.6f} "
          f"pcc {record.ccc_report.pcc:.6f} "
          f"bcf {record.ccc_report.bcf:.6f} "
          f"(n={record.ccc_report.n_points})")
    if args.out is not None:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        indices, values = predict_span(model, ind, args.span, config.seg)
        _write_predictions(
            out / f"pred_{ind.id}_{args.span}_{args.target}.csv",
            indices, values, corpus.sample_period)
    return 0


def _cmd_fuse(args) -> int:
    ts_a, vals_a = _read_predictions(args.pred_a)
    ts_b, vals_b = _read_predictions(args.pred_b)
    if len(ts_a) != len(ts_b):
        raise LengthMismatch(
            f"{len(ts_a)} vs {len(ts_b)} prediction rows")
    if not np.allclose(ts_a, ts_b):
        raise DataError("prediction files disagree on timestamps")
    fused = late_fuse(vals_a, vals_b, args.ccc_a, args.ccc_b)
    with open(args.out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["timestamp", "prediction"])
        for t, v in zip(ts_a, fused):
            writer.writerow([repr(float(t)), repr(float(v))])
    print(f"fused {len(fused)} predictions -> {args.out}")
    return 0


def _cmd_experiment(args) -> int:
    config = _experiment_config(args.config)
    corpus = load_corpus(args.corpus)
    summary = run_experiment(corpus, config, output_dir=args.out)
    print(f"wrote records.csv, grid.csv, summary.json to {args.out} "
          f"({len(summary['aggregates'])} aggregate rows)")
    return 0


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dwa",
        description="Distance-weighted augmentation for personalized "
                    "valence/arousal regression")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic corpus")
    p.add_argument("--config", help="SynthConfig JSON file")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="corpus directory to write")
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("train-generic", help="train the generic model")
    p.add_argument("--corpus", required=True)
    p.add_argument("--config", help="ExperimentConfig JSON file")
    p.add_argument("--seed", type=int)
    p.add_argument("--target", choices=TARGET_CHOICES, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_train_generic)

    p = sub.add_parser("augment",
                       help="emit augmentation reports for test individuals")
    p.add_argument("--corpus", required=True)
    p.add_argument("--config", help="ExperimentConfig JSON file")
    p.add_argument("--metric", choices=METRIC_CHOICES, required=True)
    p.add_argument("--n", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_augment)

    p = sub.add_parser("personalize",
                       help="fine-tune per-individual models")
    p.add_argument("--corpus", required=True)
    p.add_argument("--config", help="ExperimentConfig JSON file")
    p.add_argument("--generic", required=True,
                   help="generic model checkpoint")
    p.add_argument("--target", choices=TARGET_CHOICES, required=True)
    p.add_argument("--metric", choices=METRIC_CHOICES,
                   help="enable augmentation with this metric")
    p.add_argument("--n", type=int, default=1)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_personalize)

    p = sub.add_parser("evaluate", help="evaluate a checkpoint on a span")
    p.add_argument("--corpus", required=True)
    p.add_argument("--config", help="ExperimentConfig JSON file")
    p.add_argument("--model", required=True)
    p.add_argument("--individual", required=True)
    p.add_argument("--span", choices=SPAN_CHOICES, default="devel_i")
    p.add_argument("--target", choices=TARGET_CHOICES, required=True)
    p.add_argument("--out", help="also dump per-timestamp predictions here")
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("fuse", help="ccc-weighted fusion of two prediction "
                                    "files")
    p.add_argument("--pred-a", required=True)
    p.add_argument("--pred-b", required=True)
    p.add_argument("--ccc-a", type=float, required=True,
                   help="development ccc of the first model")
    p.add_argument("--ccc-b", type=float, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_fuse)

    p = sub.add_parser("experiment", help="run the full grid")
    p.add_argument("--corpus", required=True)
    p.add_argument("--config", help="ExperimentConfig JSON file")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_experiment)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 4
    except DwaError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
