"""Experimental protocol: generic training on the global split,
per-individual augmentation and fine-tuning, span evaluation with
overlap-aware reassembly, proportional late fusion, and the grid runner
over metrics x n x seeds that writes deterministic CSV/JSON reports."""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .augment import AugmentationPool, DwaConfig, augment_individual, build_pool
from .corpus import (
    AROUSAL,
    TARGETS,
    VALENCE,
    Corpus,
    Individual,
    Split,
    apply_scaler,
    fit_scaler,
)
from .errors import (
    DataError,
    DwaError,
    EmptyGlobalSplit,
    EmptyPersonalSplit,
    InvalidConfig,
    LengthMismatch,
    MissingPool,
    UnknownConfigKey,
    UnlabeledSpan,
)
from .metrics import CccReport, DistanceMetric, ccc
from .regressor import (
    RegressorParams,
    TrainConfig,
    TrainTrace,
    _forward_batch,
    init_params,
    train,
)
from .segmentation import SegmentationConfig, concat_predictions, segment_series

FUSION_EPS = 1e-6
BASELINE_METRIC = "none"


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GridSpec:
    metrics: tuple[DistanceMetric, ...] = (
        DistanceMetric.CENTROID_L2, DistanceMetric.CENTROID_DP,
        DistanceMetric.COSINE)
    n_values: tuple[int, ...] = (1, 2, 3)

    def __post_init__(self):
        if not self.metrics or not self.n_values:
            raise InvalidConfig("grid needs at least one metric and one n")
        if min(self.n_values) < 1:
            raise InvalidConfig("grid n values must be >= 1")


@dataclass(frozen=True)
class ExperimentConfig:
    seg: SegmentationConfig = SegmentationConfig()
    dwa: DwaConfig | None = None
    train_generic: TrainConfig = TrainConfig()
    train_personal: TrainConfig = TrainConfig()
    grid: GridSpec | None = GridSpec()
    seeds: tuple[int, ...] = (0,)
    targets: tuple[str, ...] = TARGETS
    output_dir: str | None = None

    def __post_init__(self):
        if not self.seeds:
            raise InvalidConfig("at least one seed required")
        for t in self.targets:
            if t not in TARGETS:
                raise InvalidConfig(f"unknown target {t!r}")
        if not self.targets:
            raise InvalidConfig("at least one target required")


def _strict_keys(data: dict, allowed, where: str):
    unknown = set(data) - set(allowed)
    if unknown:
        raise UnknownConfigKey(
            f"{where}: unknown keys {sorted(unknown)}")


def _train_config_from(data: dict, where: str) -> TrainConfig:
    fields = {f.name for f in dataclasses.fields(TrainConfig)}
    _strict_keys(data, fields, where)
    return TrainConfig(**data)


def _dwa_config_from(data: dict, where: str) -> DwaConfig:
    _strict_keys(data, {"metric", "n", "exclude_source_ids"}, where)
    return DwaConfig(
        metric=DistanceMetric.from_string(data["metric"]),
        n=int(data.get("n", 1)),
        exclude_source_ids=frozenset(data.get("exclude_source_ids", ())),
    )


def experiment_config_from_dict(data: dict) -> ExperimentConfig:
    """Parse the JSON form of ExperimentConfig; unknown keys rejected."""
    _strict_keys(data, {"seg", "dwa", "train_generic", "train_personal",
                        "grid", "seeds", "targets", "output_dir"}, "config")
    kwargs = {}
    if "seg" in data:
        _strict_keys(data["seg"], {"winlen", "hop"}, "config.seg")
        kwargs["seg"] = SegmentationConfig(**data["seg"])
    if data.get("dwa") is not None:
        kwargs["dwa"] = _dwa_config_from(data["dwa"], "config.dwa")
    elif "dwa" in data:
        kwargs["dwa"] = None
    for key in ("train_generic", "train_personal"):
        if key in data:
            kwargs[key] = _train_config_from(data[key], f"config.{key}")
    if data.get("grid") is not None:
        _strict_keys(data["grid"], {"metrics", "n"}, "config.grid")
        kwargs["grid"] = GridSpec(
            metrics=tuple(DistanceMetric.from_string(m)
                          for m in data["grid"]["metrics"]),
            n_values=tuple(int(n) for n in data["grid"]["n"]),
        )
    elif "grid" in data:
        kwargs["grid"] = None
    if "seeds" in data:
        kwargs["seeds"] = tuple(int(s) for s in data["seeds"])
    if "targets" in data:
        kwargs["targets"] = tuple(data["targets"])
    if "output_dir" in data:
        kwargs["output_dir"] = data["output_dir"]
    try:
        return ExperimentConfig(**kwargs)
    except TypeError as exc:
        raise InvalidConfig(str(exc)) from None


def experiment_config_to_dict(config: ExperimentConfig) -> dict:
    return {
        "seg": {"winlen": config.seg.winlen, "hop": config.seg.hop},
        "dwa": None if config.dwa is None else {
            "metric": config.dwa.metric.value,
            "n": config.dwa.n,
            "exclude_source_ids": sorted(config.dwa.exclude_source_ids),
        },
        "train_generic": dataclasses.asdict(config.train_generic),
        "train_personal": dataclasses.asdict(config.train_personal),
        "grid": None if config.grid is None else {
            "metrics": [m.value for m in config.grid.metrics],
            "n": list(config.grid.n_values),
        },
        "seeds": list(config.seeds),
        "targets": list(config.targets),
        "output_dir": config.output_dir,
    }


def fingerprint(**parts) -> str:
    blob = json.dumps(parts, sort_keys=True, default=str)
    return hashlib.sha256(blob.encode()).hexdigest()[:12]


# ---------------------------------------------------------------------------
# records and fusion weights
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EvaluationRecord:
    individual_id: str
    target: str
    split: str  # devel_i or test
    ccc_report: CccReport
    config_fingerprint: str


@dataclass(frozen=True)
class FusionWeights:
    w_a: float
    w_b: float
    dev_ccc_a: float
    dev_ccc_b: float

    @classmethod
    def from_dev_ccc(cls, dev_ccc_a: float, dev_ccc_b: float
                     ) -> "FusionWeights":
        a = max(dev_ccc_a, FUSION_EPS)
        b = max(dev_ccc_b, FUSION_EPS)
        return cls(w_a=a / (a + b), w_b=b / (a + b),
                   dev_ccc_a=dev_ccc_a, dev_ccc_b=dev_ccc_b)


def late_fuse(preds_a, preds_b, dev_ccc_a: float, dev_ccc_b: float
              ) -> np.ndarray:
    """Elementwise blend weighted by development-set ccc."""
    a = np.asarray(preds_a, dtype=np.float64)
    b = np.asarray(preds_b, dtype=np.float64)
    if a.shape != b.shape:
        raise LengthMismatch(f"prediction shapes {a.shape} vs {b.shape}")
    w = FusionWeights.from_dev_ccc(dev_ccc_a, dev_ccc_b)
    return w.w_a * a + w.w_b * b


# ---------------------------------------------------------------------------
# protocol stages
# ---------------------------------------------------------------------------

def _all_segments(corpus: Corpus, split: Split, seg: SegmentationConfig):
    out = []
    for ind in corpus.members(split):
        out.extend(segment_series(ind.features, ind.labels, seg))
    return out


def train_generic(corpus: Corpus, config: ExperimentConfig, target: str
                  ) -> tuple[RegressorParams, TrainTrace]:
    """Train the generic model on the global training individuals with
    the global development individuals as early-stopping set."""
    tcfg = dataclasses.replace(config.train_generic, target=target)
    train_set = _all_segments(corpus, Split.TRAIN_G, config.seg)
    dev_set = _all_segments(corpus, Split.DEVEL_G, config.seg)
    if not train_set or not dev_set:
        raise EmptyGlobalSplit(
            "generic training needs segments in both global splits")
    params0 = init_params(corpus.feature_dim, tcfg.hidden_dim, tcfg.seed)
    return train(params0, train_set, dev_set, tcfg)


def personalize(generic: RegressorParams, individual: Individual,
                pool: AugmentationPool | None, config: ExperimentConfig,
                target: str) -> tuple[RegressorParams, EvaluationRecord]:
    """Fine-tune a copy of the generic model on one test individual's
    personal-training span (augmented when configured), early-stopped on
    the personal-development span. Returns the personalized parameters
    and the development-span evaluation."""
    if individual.split is not Split.TEST:
        raise EmptyPersonalSplit(
            f"{individual.id!r} is not a test individual")
    if config.dwa is not None and pool is None:
        raise MissingPool("augmentation configured but no pool given")
    if config.dwa is None and pool is not None:
        raise InvalidConfig("pool given but augmentation not configured")
    tune_set = segment_series(individual.features, individual.labels,
                              config.seg, individual.span("train_i"))
    dev_set = segment_series(individual.features, individual.labels,
                             config.seg, individual.span("devel_i"))
    if not tune_set or not dev_set:
        raise EmptyPersonalSplit(
            f"{individual.id!r}: personal spans admit no full window")
    if config.dwa is not None:
        assert pool is not None
        tune_set = list(augment_individual(pool, tune_set,
                                           config.dwa).combined)
    tcfg = dataclasses.replace(config.train_personal, target=target)
    params, _ = train(generic, tune_set, dev_set, tcfg)
    record = evaluate(params, individual, "devel_i", target, config.seg,
                      config_fingerprint=fingerprint(
                          winlen=config.seg.winlen, hop=config.seg.hop,
                          metric=(config.dwa.metric.value
                                  if config.dwa else BASELINE_METRIC),
                          n=config.dwa.n if config.dwa else 0,
                          seed=tcfg.seed, target=target))
    return params, record


def predict_span(model: RegressorParams, individual: Individual, span: str,
                 seg: SegmentationConfig) -> tuple[np.ndarray, np.ndarray]:
    """Per-timestamp predictions over a named span, averaging windows
    where they overlap. Returns (absolute indices, values)."""
    lo, hi = individual.span(span)
    segments = segment_series(individual.features, None, seg, (lo, hi))
    if not segments:
        raise DataError(
            f"{individual.id!r}: span {span!r} shorter than one window")
    frames = np.ascontiguousarray(
        np.stack([s.frames for s in segments]))
    preds, _, _, _, _ = _forward_batch(model, frames)
    indices, values, _ = concat_predictions(segments, list(preds), seg.hop)
    return indices, values


def evaluate(model: RegressorParams, individual: Individual, span: str,
             target: str, seg: SegmentationConfig,
             config_fingerprint: str = "") -> EvaluationRecord:
    """ccc between the reassembled span predictions and the labels."""
    lo, hi = individual.span(span)
    if hi > individual.labeled_len:
        raise UnlabeledSpan(
            f"{individual.id!r}: span {span!r} has no labels beyond "
            f"{individual.labeled_len}")
    indices, values = predict_span(model, individual, span, seg)
    labels = individual.labels.column(target)[indices]
    return EvaluationRecord(
        individual_id=individual.id,
        target=target,
        split=span,
        ccc_report=ccc(values, labels),
        config_fingerprint=config_fingerprint,
    )


# ---------------------------------------------------------------------------
# grid runner
# ---------------------------------------------------------------------------

def _record_row(metric: str, n: int, seed: int, rec: EvaluationRecord):
    return {
        "metric": metric,
        "n": n,
        "seed": seed,
        "target": rec.target,
        "split": rec.split,
        "individual_id": rec.individual_id,
        "ccc": rec.ccc_report.ccc,
        "pcc": rec.ccc_report.pcc,
        "bcf": rec.ccc_report.bcf,
    }


def _write_records(path: Path, rows: list[dict]) -> None:
    cols = ["metric", "n", "seed", "target", "split", "individual_id",
            "ccc", "pcc", "bcf"]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(cols)
        for row in rows:
            writer.writerow([
                row["metric"], row["n"], row["seed"], row["target"],
                row["split"], row["individual_id"],
                repr(row["ccc"]), repr(row["pcc"]), repr(row["bcf"]),
            ])


def _aggregate(rows: list[dict]):
    """Mean per-individual ccc per (metric, n, seed, target, split), and
    the combined score (mean of the arousal and valence aggregates)."""
    groups: dict[tuple, list[float]] = {}
    for row in rows:
        key = (row["metric"], row["n"], row["seed"], row["target"],
               row["split"])
        groups.setdefault(key, []).append(row["ccc"])
    aggregates = {key: float(np.mean(v)) for key, v in groups.items()}
    combined: dict[tuple, float] = {}
    cells = {(m, n, s, sp) for (m, n, s, _t, sp) in aggregates}
    for m, n, s, sp in sorted(cells, key=str):
        pair = [(m, n, s, t, sp) for t in (AROUSAL, VALENCE)]
        if all(k in aggregates for k in pair):
            combined[(m, n, s, sp)] = float(
                np.mean([aggregates[k] for k in pair]))
    return aggregates, combined


def _write_grid(path: Path, cells, aggregates, combined, seeds) -> None:
    """One row per (split, metric, n) with per-target scores averaged
    over seeds."""

    def seed_mean(table, key_fn):
        vals = [table[key_fn(s)] for s in seeds if key_fn(s) in table]
        return repr(float(np.mean(vals))) if vals else ""

    splits = sorted({sp for (_m, _n, _s, _t, sp) in aggregates})
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["split", "metric", "n", "arousal", "valence",
                         "combined"])
        for sp in splits:
            for metric, n in cells:
                writer.writerow([
                    sp, metric, n,
                    seed_mean(aggregates,
                              lambda s: (metric, n, s, AROUSAL, sp)),
                    seed_mean(aggregates,
                              lambda s: (metric, n, s, VALENCE, sp)),
                    seed_mean(combined, lambda s: (metric, n, s, sp)),
                ])


def run_experiment(corpus: Corpus, config: ExperimentConfig,
                   output_dir=None) -> dict:
    """Full protocol over the grid: per (seed, target) a cached generic
    model, then per cell (baseline first) per test individual a
    personalized model with development and, where labels exist,
    held-out-span evaluation. Writes records.csv, grid.csv and
    summary.json; deterministic per config."""
    out = Path(output_dir if output_dir is not None
               else config.output_dir or ".")
    out.mkdir(parents=True, exist_ok=True)
    (out / "checkpoints").mkdir(exist_ok=True)

    if not corpus.test_members:
        raise EmptyPersonalSplit("corpus has no test individuals")
    stats = fit_scaler(corpus)
    std_corpus = apply_scaler(corpus, stats)

    cells: list[tuple[str, int, DwaConfig | None]] = [
        (BASELINE_METRIC, 0, None)]
    if config.grid is not None:
        for metric in config.grid.metrics:
            for n in config.grid.n_values:
                cells.append((metric.value, n, DwaConfig(metric=metric, n=n)))
    pool = (build_pool(std_corpus, config.seg)
            if any(c[2] is not None for c in cells) else None)

    from .regressor import save_params  # local import avoids cycle at top

    rows: list[dict] = []
    failures: list[dict] = []
    generic_cache: dict[tuple[str, int], RegressorParams] = {}
    try:
        for seed in config.seeds:
            for target in config.targets:
                key = (target, seed)
                if key not in generic_cache:
                    gcfg = dataclasses.replace(config.train_generic,
                                               seed=seed)
                    run_cfg = dataclasses.replace(config, train_generic=gcfg)
                    params, _ = train_generic(std_corpus, run_cfg, target)
                    generic_cache[key] = params
                    save_params(params, out / "checkpoints" /
                                f"generic_{target}_{seed}.json")
                generic = generic_cache[key]
                for metric_name, n, dwa_cfg in cells:
                    pcfg = dataclasses.replace(
                        config,
                        dwa=dwa_cfg,
                        train_personal=dataclasses.replace(
                            config.train_personal, seed=seed))
                    for ind in std_corpus.test_members:
                        model, devel_rec = personalize(
                            generic, ind,
                            pool if dwa_cfg is not None else None,
                            pcfg, target)
                        rows.append(_record_row(metric_name, n, seed,
                                                devel_rec))
                        if ind.labeled_len == ind.features.length:
                            test_rec = evaluate(
                                model, ind, "test", target, config.seg,
                                config_fingerprint=devel_rec
                                .config_fingerprint)
                            rows.append(_record_row(metric_name, n, seed,
                                                    test_rec))
    except DwaError as exc:
        failures.append({"error": type(exc).__name__, "message": str(exc)})
        _write_records(out / "records.csv", rows)
        with open(out / "failures.json", "w") as fh:
            json.dump(failures, fh, indent=2, sort_keys=True)
            fh.write("\n")
        raise

    _write_records(out / "records.csv", rows)
    aggregates, combined = _aggregate(rows)
    _write_grid(out / "grid.csv", [(m, n) for m, n, _ in cells],
                aggregates, combined, config.seeds)

    summary = {
        "corpus_fingerprint": corpus.fingerprint(),
        "scaler_fingerprint": stats.fingerprint(),
        "config": experiment_config_to_dict(config),
        "aggregates": [
            {"metric": m, "n": n, "seed": s, "target": t, "split": sp,
             "mean_ccc": aggregates[(m, n, s, t, sp)]}
            for (m, n, s, t, sp) in sorted(aggregates, key=str)
        ],
        "combined": [
            {"metric": m, "n": n, "seed": s, "split": sp,
             "mean_ccc": combined[(m, n, s, sp)]}
            for (m, n, s, sp) in sorted(combined, key=str)
        ],
    }
    with open(out / "summary.json", "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return summary
