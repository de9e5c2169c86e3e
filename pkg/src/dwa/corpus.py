"""Dataset model: individuals with multivariate feature series and
continuous valence/arousal labels, split into a global pool (training +
development individuals) and target (test) individuals whose series are
divided into personal-training, personal-development and held-out spans.

Includes a deterministic synthetic corpus generator, a CSV/manifest
loader and writer, and per-dimension feature standardization.
"""

from __future__ import annotations

import csv
import enum
import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    DataError,
    DimensionMismatch,
    EmptySplit,
    InvalidConfig,
    MalformedRow,
    MissingFile,
    PortionOutOfRange,
)

VALENCE = "valence"
AROUSAL = "arousal"
TARGETS = (VALENCE, AROUSAL)


class Split(enum.Enum):
    TRAIN_G = "train_g"
    DEVEL_G = "devel_g"
    TEST = "test"


GLOBAL_SPLITS = frozenset({Split.TRAIN_G, Split.DEVEL_G})


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=np.float64)
    a.setflags(write=False)
    return a


@dataclass(eq=False)
class FeatureSeries:
    """One individual's feature matrix: T timestamps by d dimensions."""

    individual_id: str
    values: np.ndarray
    sample_period: float

    def __post_init__(self):
        self.values = _freeze(self.values)
        if self.values.ndim != 2 or self.values.shape[0] < 1 \
                or self.values.shape[1] < 1:
            raise DataError(
                f"feature series {self.individual_id!r}: need a T x d matrix "
                f"with T, d >= 1, got shape {self.values.shape}")
        if not np.isfinite(self.values).all():
            raise DataError(
                f"feature series {self.individual_id!r}: non-finite entries")
        if not self.sample_period > 0:
            raise DataError("sample_period must be positive")

    @property
    def length(self) -> int:
        return self.values.shape[0]

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    def __eq__(self, other):
        return (isinstance(other, FeatureSeries)
                and self.individual_id == other.individual_id
                and self.sample_period == other.sample_period
                and np.array_equal(self.values, other.values))


@dataclass(eq=False)
class LabelSeries:
    """Per-timestamp valence and arousal targets in [-1, 1].

    May cover only a labeled prefix of the paired feature series
    (held-out spans of test individuals carry no labels in the real
    protocol).
    """

    individual_id: str
    valence: np.ndarray
    arousal: np.ndarray

    def __post_init__(self):
        self.valence = _freeze(self.valence)
        self.arousal = _freeze(self.arousal)
        if self.valence.ndim != 1 or self.arousal.ndim != 1 \
                or len(self.valence) != len(self.arousal):
            raise DataError(
                f"labels {self.individual_id!r}: valence/arousal must be "
                "1-D and equally long")
        if len(self.valence) < 1:
            raise DataError(f"labels {self.individual_id!r}: empty")
        for name, arr in ((VALENCE, self.valence), (AROUSAL, self.arousal)):
            if not np.isfinite(arr).all():
                raise DataError(
                    f"labels {self.individual_id!r}: non-finite {name}")
            if arr.min() < -1.0 or arr.max() > 1.0:
                raise DataError(
                    f"labels {self.individual_id!r}: {name} outside [-1, 1]")

    @property
    def length(self) -> int:
        return len(self.valence)

    def column(self, target: str) -> np.ndarray:
        if target == VALENCE:
            return self.valence
        if target == AROUSAL:
            return self.arousal
        raise DataError(f"unknown target {target!r}")

    def __eq__(self, other):
        return (isinstance(other, LabelSeries)
                and self.individual_id == other.individual_id
                and np.array_equal(self.valence, other.valence)
                and np.array_equal(self.arousal, other.arousal))


@dataclass(frozen=True)
class Portions:
    """Boundary indices splitting a test individual's series into the
    personal-training span [0, train_end), the personal-development span
    [train_end, devel_end) and the held-out span [devel_end, T)."""

    train_end: int
    devel_end: int


@dataclass(eq=False)
class Individual:
    id: str
    split: Split
    features: FeatureSeries
    labels: LabelSeries
    portions: Portions | None = None

    def __post_init__(self):
        if self.features.individual_id != self.id \
                or self.labels.individual_id != self.id:
            raise DataError(f"individual {self.id!r}: series id mismatch")
        T = self.features.length
        L = self.labels.length
        if L > T:
            raise DataError(
                f"individual {self.id!r}: {L} label rows for {T} "
                "feature rows")
        if self.split is Split.TEST:
            p = self.portions
            if p is None:
                raise PortionOutOfRange(
                    f"test individual {self.id!r}: portions required")
            if not (0 < p.train_end < p.devel_end <= T):
                raise PortionOutOfRange(
                    f"individual {self.id!r}: need 0 < train_end < "
                    f"devel_end <= {T}, got ({p.train_end}, {p.devel_end})")
            if L < p.devel_end:
                raise DataError(
                    f"individual {self.id!r}: labels must cover the "
                    f"personal spans, got {L} < {p.devel_end}")
        else:
            if self.portions is not None:
                raise DataError(
                    f"individual {self.id!r}: portions only apply to the "
                    "test split")
            if L != T:
                raise DataError(
                    f"individual {self.id!r}: global individuals need "
                    f"labels on the full series ({L} != {T})")

    @property
    def labeled_len(self) -> int:
        return self.labels.length

    def span(self, name: str) -> tuple[int, int]:
        """Index range of a named span: full, train_i, devel_i or test."""
        T = self.features.length
        if name == "full":
            return 0, T
        if self.split is not Split.TEST:
            raise DataError(
                f"span {name!r} only applies to test individuals")
        assert self.portions is not None
        if name == "train_i":
            return 0, self.portions.train_end
        if name == "devel_i":
            return self.portions.train_end, self.portions.devel_end
        if name == "test":
            return self.portions.devel_end, T
        raise DataError(f"unknown span {name!r}")

    def __eq__(self, other):
        return (isinstance(other, Individual)
                and self.id == other.id
                and self.split == other.split
                and self.features == other.features
                and self.labels == other.labels
                and self.portions == other.portions)


@dataclass(eq=False)
class Corpus:
    individuals: tuple[Individual, ...]
    feature_dim: int
    metadata: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        self.individuals = tuple(
            sorted(self.individuals, key=lambda ind: ind.id))
        ids = [ind.id for ind in self.individuals]
        if len(set(ids)) != len(ids):
            raise DataError("duplicate individual ids")
        periods = {ind.features.sample_period for ind in self.individuals}
        if len(periods) > 1:
            raise DataError("individuals disagree on sample_period")
        for ind in self.individuals:
            if ind.features.dim != self.feature_dim:
                raise DimensionMismatch(
                    f"individual {ind.id!r}: expected {self.feature_dim} "
                    f"feature dimensions, found {ind.features.dim}")

    @property
    def sample_period(self) -> float:
        return self.individuals[0].features.sample_period

    def members(self, splits) -> tuple[Individual, ...]:
        if isinstance(splits, Split):
            splits = {splits}
        return tuple(ind for ind in self.individuals if ind.split in splits)

    @property
    def global_members(self) -> tuple[Individual, ...]:
        return self.members(GLOBAL_SPLITS)

    @property
    def test_members(self) -> tuple[Individual, ...]:
        return self.members(Split.TEST)

    def by_id(self, individual_id: str) -> Individual:
        for ind in self.individuals:
            if ind.id == individual_id:
                return ind
        raise DataError(f"no individual {individual_id!r}")

    def fingerprint(self) -> str:
        h = hashlib.sha256()
        h.update(repr(self.feature_dim).encode())
        h.update(repr(self.sample_period).encode())
        for key in sorted(self.metadata):
            h.update(f"{key}={self.metadata[key]};".encode())
        for ind in self.individuals:
            h.update(f"{ind.id}:{ind.split.value}:"
                     f"{ind.features.length}".encode())
        return h.hexdigest()[:12]

    def __eq__(self, other):
        return (isinstance(other, Corpus)
                and self.feature_dim == other.feature_dim
                and self.metadata == other.metadata
                and self.individuals == other.individuals)


# ---------------------------------------------------------------------------
# synthetic corpus generation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SynthConfig:
    """Knobs for the synthetic corpus generator.

    Each individual carries a latent style (one of n_styles random
    affine maps); styles are assigned round-robin in creation order so
    test individuals share styles with global ones. Labels are smooth
    bounded random walks; features mix (valence, arousal, nuisance
    latents) through the style map. Nuisance latents and the additive
    noise both scale with `noise`, so a noiseless corpus is a pure
    function of style and labels.

    With opposed_styles, all styles share one mixing map and offset but
    alternate the sign of the label columns. Feature distributions are
    then identical across styles, so no single generic map can fit both
    sign groups and per-individual adaptation has real headroom.
    """

    n_train_g: int = 4
    n_devel_g: int = 2
    n_test: int = 2
    t_train_g: int = 300
    t_devel_g: int = 300
    t_test: int = 300
    feature_dim: int = 6
    sample_period: float = 0.5
    n_styles: int = 2
    noise: float = 0.05
    n_nuisance: int = 2
    nuisance_gain: float = 1.0
    label_halflife: float = 5.0
    opposed_styles: bool = False

    def validate(self):
        if min(self.n_train_g, self.n_devel_g, self.n_test) < 1:
            raise InvalidConfig("split counts must be >= 1")
        if min(self.t_train_g, self.t_devel_g) < 1 or self.t_test < 5:
            raise InvalidConfig(
                "series lengths must be >= 1 (>= 5 for the test split so "
                "portion boundaries are non-degenerate)")
        if self.feature_dim < 1:
            raise InvalidConfig("feature_dim must be >= 1")
        if self.sample_period <= 0:
            raise InvalidConfig("sample_period must be positive")
        if self.n_styles < 1:
            raise InvalidConfig("n_styles must be >= 1")
        if self.noise < 0:
            raise InvalidConfig("noise must be >= 0")
        if self.n_nuisance < 0:
            raise InvalidConfig("n_nuisance must be >= 0")
        if self.nuisance_gain < 0:
            raise InvalidConfig("nuisance_gain must be >= 0")
        if self.label_halflife <= 0:
            raise InvalidConfig("label_halflife must be positive")


def _smooth_walk(rng: np.random.Generator, length: int, halflife: float,
                 step: float = 0.2) -> np.ndarray:
    """Bounded random walk in [-1, 1], reflective at the ends, smoothed
    with an exponential filter of the given half-life (in timestamps)."""
    beta = 0.5 ** (1.0 / halflife)
    out = np.empty(length)
    x = rng.uniform(-0.5, 0.5)
    y = x
    steps = rng.standard_normal(length) * step
    for t in range(length):
        x += steps[t]
        while x > 1.0 or x < -1.0:
            x = 2.0 - x if x > 1.0 else -2.0 - x
        y = beta * y + (1.0 - beta) * x
        out[t] = y
    return out


@dataclass(frozen=True)
class _Style:
    mixing: np.ndarray  # (d, 2 + n_nuisance)
    offset: np.ndarray  # (d,)


def _draw_style(rng: np.random.Generator, d: int, n_nuisance: int) -> _Style:
    width = 2 + n_nuisance
    mixing = rng.normal(0.0, 1.0, (d, width)) / math.sqrt(width)
    # label columns dominate so the labels stay recoverable per style
    mixing[:, :2] *= 2.0
    offset = rng.normal(0.0, 0.5, d)
    return _Style(mixing=mixing, offset=offset)


def _features_from_latents(style: _Style, valence: np.ndarray,
                           arousal: np.ndarray, nuisance: np.ndarray,
                           noise: float, nuisance_gain: float,
                           rng: np.random.Generator) -> np.ndarray:
    """Affine style map over (valence, arousal, noise-scaled nuisance)
    plus iid noise. Nuisance enters scaled by noise * nuisance_gain, so
    with noise == 0 this depends on (style, labels) only."""
    latents = np.column_stack([valence, arousal,
                               noise * nuisance_gain * nuisance])
    values = latents @ style.mixing.T + style.offset
    if noise > 0:
        values = values + noise * rng.standard_normal(values.shape)
    return values


def generate_synthetic(config: SynthConfig, seed: int) -> Corpus:
    """Deterministic synthetic corpus; a pure function of (config, seed)."""
    config.validate()
    plan = (
        [(Split.TRAIN_G, f"train{i:02d}", config.t_train_g)
         for i in range(config.n_train_g)]
        + [(Split.DEVEL_G, f"devel{i:02d}", config.t_devel_g)
           for i in range(config.n_devel_g)]
        + [(Split.TEST, f"test{i:02d}", config.t_test)
           for i in range(config.n_test)]
    )
    root = np.random.SeedSequence(seed)
    children = root.spawn(config.n_styles + len(plan))
    if config.opposed_styles:
        base = _draw_style(np.random.default_rng(children[0]),
                           config.feature_dim, config.n_nuisance)
        styles = []
        for s in range(config.n_styles):
            mixing = base.mixing.copy()
            mixing[:, :2] *= 1.0 if s % 2 == 0 else -1.0
            styles.append(_Style(mixing=mixing, offset=base.offset))
    else:
        styles = [
            _draw_style(np.random.default_rng(children[s]),
                        config.feature_dim, config.n_nuisance)
            for s in range(config.n_styles)
        ]

    individuals = []
    for idx, (split, ind_id, length) in enumerate(plan):
        rng = np.random.default_rng(children[config.n_styles + idx])
        style = styles[idx % config.n_styles]
        valence = _smooth_walk(rng, length, config.label_halflife)
        arousal = _smooth_walk(rng, length, config.label_halflife)
        nuisance = np.column_stack([
            _smooth_walk(rng, length, config.label_halflife)
            for _ in range(config.n_nuisance)
        ]) if config.n_nuisance else np.zeros((length, 0))
        values = _features_from_latents(style, valence, arousal, nuisance,
                                        config.noise, config.nuisance_gain,
                                        rng)
        portions = None
        if split is Split.TEST:
            fifth = length // 5
            portions = Portions(train_end=fifth, devel_end=2 * fifth)
        individuals.append(Individual(
            id=ind_id,
            split=split,
            features=FeatureSeries(ind_id, values, config.sample_period),
            labels=LabelSeries(ind_id, valence, arousal),
            portions=portions,
        ))

    metadata = {
        "generator": "synth-v1",
        "seed": str(seed),
        "n_styles": str(config.n_styles),
        "noise": repr(config.noise),
        "feature": "style-affine",
    }
    return Corpus(individuals=tuple(individuals),
                  feature_dim=config.feature_dim, metadata=metadata)


# ---------------------------------------------------------------------------
# directory i/o
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CorpusSchema:
    """Optional expectations checked while loading a corpus directory."""

    feature_dim: int | None = None
    sample_period: float | None = None


def _fmt(x: float) -> str:
    return repr(float(x))


def _read_header(path: Path, reader) -> list[str]:
    try:
        return next(reader)
    except StopIteration:
        raise MalformedRow(str(path), 1, "missing header") from None


def _read_rows(path: Path, reader, n_cols: int) -> list[list[float]]:
    rows = []
    for lineno, row in enumerate(reader, start=2):
        if len(row) != n_cols:
            raise MalformedRow(str(path), lineno,
                               f"expected {n_cols} columns, found {len(row)}")
        try:
            rows.append([float(v) for v in row])
        except ValueError:
            raise MalformedRow(str(path), lineno,
                               "non-numeric value") from None
    if not rows:
        raise MalformedRow(str(path), 2, "no data rows")
    return rows


def _read_feature_csv(path: Path, expected_d: int) -> list[list[float]]:
    if not path.is_file():
        raise MissingFile(str(path))
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = _read_header(path, reader)
        if not header or header[0] != "timestamp" \
                or header[1:] != [f"f{j}" for j in range(len(header) - 1)]:
            raise MalformedRow(str(path), 1,
                               "expected header timestamp,f0,...,f{d-1}")
        found_d = len(header) - 1
        if found_d != expected_d:
            raise DimensionMismatch(
                f"{path}: expected {expected_d} feature columns, "
                f"found {found_d}")
        return _read_rows(path, reader, len(header))


def _read_label_csv(path: Path) -> list[list[float]]:
    if not path.is_file():
        raise MissingFile(str(path))
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = _read_header(path, reader)
        if header != ["timestamp", "valence", "arousal"]:
            raise MalformedRow(str(path), 1,
                               "expected header timestamp,valence,arousal")
        return _read_rows(path, reader, 3)


def _check_timestamps(path: Path, ts: np.ndarray, sample_period: float):
    if abs(ts[0]) > 1e-9 * max(sample_period, 1.0):
        raise MalformedRow(str(path), 2, "timestamps must start at 0")
    gaps = np.diff(ts)
    bad = np.nonzero(np.abs(gaps - sample_period)
                     > 1e-9 * max(sample_period, 1.0))[0]
    if bad.size:
        # +3: 1-based lines, header line, and diff offset
        raise MalformedRow(str(path), int(bad[0]) + 3,
                           "timestamp not uniformly spaced")


def load_corpus(root_directory, schema: CorpusSchema | None = None) -> Corpus:
    """Read a corpus directory (manifest.json plus per-individual
    features/<id>.csv and labels/<id>.csv).

    Raises MissingFile, MalformedRow (with file and line),
    DimensionMismatch or PortionOutOfRange on violations.
    """
    root = Path(root_directory)
    manifest_path = root / "manifest.json"
    if not manifest_path.is_file():
        raise MissingFile(str(manifest_path))
    try:
        manifest = json.loads(manifest_path.read_text())
    except json.JSONDecodeError as exc:
        raise MalformedRow(str(manifest_path), exc.lineno, exc.msg) from None

    try:
        d = int(manifest["feature_dim"])
        sample_period = float(manifest["sample_period"])
        entries = manifest["individuals"]
        metadata = dict(manifest.get("metadata", {}))
    except (KeyError, TypeError, ValueError) as exc:
        raise DataError(f"{manifest_path}: bad manifest ({exc})") from None
    if schema is not None:
        if schema.feature_dim is not None and schema.feature_dim != d:
            raise DimensionMismatch(
                f"expected {schema.feature_dim} feature dimensions, "
                f"manifest declares {d}")
        if schema.sample_period is not None \
                and schema.sample_period != sample_period:
            raise DataError(
                f"expected sample_period {schema.sample_period}, "
                f"manifest declares {sample_period}")

    individuals = []
    for entry in entries:
        ind_id = str(entry["id"])
        try:
            split = Split(entry["split"])
        except ValueError:
            raise DataError(
                f"{manifest_path}: unknown split {entry['split']!r} "
                f"for {ind_id!r}") from None

        fpath = root / entry["features"]
        fmat = np.array(_read_feature_csv(fpath, d))
        _check_timestamps(fpath, fmat[:, 0], sample_period)
        values = fmat[:, 1:]

        lpath = root / entry["labels"]
        lmat = np.array(_read_label_csv(lpath))
        _check_timestamps(lpath, lmat[:, 0], sample_period)
        if lmat.shape[0] > values.shape[0]:
            raise MalformedRow(str(lpath), values.shape[0] + 2,
                               "more label rows than feature rows")
        if split is not Split.TEST and lmat.shape[0] != values.shape[0]:
            raise MalformedRow(str(lpath), lmat.shape[0] + 2,
                               "labels must cover the full series")

        portions = None
        if split is Split.TEST:
            try:
                p = entry["portions"]
                portions = Portions(train_end=int(p["train_end"]),
                                    devel_end=int(p["devel_end"]))
            except (KeyError, TypeError, ValueError):
                raise PortionOutOfRange(
                    f"{manifest_path}: test individual {ind_id!r} needs "
                    "portions.train_end/devel_end") from None
        try:
            labels = LabelSeries(ind_id, lmat[:, 1], lmat[:, 2])
        except DataError as exc:
            raise MalformedRow(str(lpath), 2, str(exc)) from None
        individuals.append(Individual(
            id=ind_id,
            split=split,
            features=FeatureSeries(ind_id, values, sample_period),
            labels=labels,
            portions=portions,
        ))

    return Corpus(individuals=tuple(individuals), feature_dim=d,
                  metadata=metadata)


def save_corpus(corpus: Corpus, root_directory) -> None:
    """Write a corpus directory that load_corpus reads back equal."""
    root = Path(root_directory)
    (root / "features").mkdir(parents=True, exist_ok=True)
    (root / "labels").mkdir(parents=True, exist_ok=True)
    sp = corpus.sample_period
    entries = []
    for ind in corpus.individuals:
        entry = {
            "id": ind.id,
            "split": ind.split.value,
            "features": f"features/{ind.id}.csv",
            "labels": f"labels/{ind.id}.csv",
        }
        if ind.portions is not None:
            entry["portions"] = {"train_end": ind.portions.train_end,
                                 "devel_end": ind.portions.devel_end}
        entries.append(entry)

        with open(root / entry["features"], "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["timestamp"]
                            + [f"f{j}" for j in range(corpus.feature_dim)])
            for i, row in enumerate(ind.features.values):
                writer.writerow([_fmt(i * sp)] + [_fmt(v) for v in row])
        with open(root / entry["labels"], "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["timestamp", "valence", "arousal"])
            for i in range(ind.labels.length):
                writer.writerow([_fmt(i * sp), _fmt(ind.labels.valence[i]),
                                 _fmt(ind.labels.arousal[i])])

    manifest = {
        "feature_dim": corpus.feature_dim,
        "sample_period": sp,
        "metadata": corpus.metadata,
        "individuals": entries,
    }
    with open(root / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


# ---------------------------------------------------------------------------
# feature standardization
# ---------------------------------------------------------------------------

@dataclass(eq=False)
class ScalerStats:
    """Per-dimension mean and population standard deviation. Dimensions
    with zero variance are recorded as std 0 and applied as 1."""

    mean: np.ndarray
    std: np.ndarray

    def __post_init__(self):
        self.mean = _freeze(self.mean)
        self.std = _freeze(self.std)
        if self.mean.shape != self.std.shape or self.mean.ndim != 1:
            raise DataError("scaler mean/std must be matching 1-D vectors")
        if (self.std < 0).any():
            raise DataError("scaler std entries must be >= 0")

    @property
    def dim(self) -> int:
        return len(self.mean)

    @property
    def zero_variance_dims(self) -> np.ndarray:
        return np.nonzero(self.std == 0.0)[0]

    def effective_std(self) -> np.ndarray:
        return np.where(self.std == 0.0, 1.0, self.std)

    def fingerprint(self) -> str:
        h = hashlib.sha256()
        h.update(self.mean.tobytes())
        h.update(self.std.tobytes())
        return h.hexdigest()[:12]

    def __eq__(self, other):
        return (isinstance(other, ScalerStats)
                and np.array_equal(self.mean, other.mean)
                and np.array_equal(self.std, other.std))


def fit_scaler(corpus: Corpus, on_split=GLOBAL_SPLITS) -> ScalerStats:
    """Per-dimension moments over all timestamps of all individuals in
    the given splits (population 1/N variance)."""
    members = corpus.members(on_split)
    if not members:
        raise EmptySplit(f"no individuals in splits {on_split}")
    stacked = np.concatenate([ind.features.values for ind in members], axis=0)
    return ScalerStats(mean=stacked.mean(axis=0), std=stacked.std(axis=0))


def apply_scaler(corpus: Corpus, stats: ScalerStats) -> Corpus:
    """Standardize every feature entry; labels untouched."""
    if stats.dim != corpus.feature_dim:
        raise DimensionMismatch(
            f"scaler has {stats.dim} dimensions, corpus {corpus.feature_dim}")
    std = stats.effective_std()
    individuals = []
    for ind in corpus.individuals:
        scaled = (ind.features.values - stats.mean) / std
        individuals.append(Individual(
            id=ind.id,
            split=ind.split,
            features=FeatureSeries(ind.id, scaled,
                                   ind.features.sample_period),
            labels=ind.labels,
            portions=ind.portions,
        ))
    metadata = dict(corpus.metadata)
    metadata["scaler"] = stats.fingerprint()
    return Corpus(individuals=tuple(individuals),
                  feature_dim=corpus.feature_dim, metadata=metadata)
