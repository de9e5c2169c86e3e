"""Distance-weighted augmentation: build a pool of labeled segments from
the global individuals, then grow a target individual's training set by
selecting, for each of its segments, the n nearest pool segments under a
chosen distance metric (binary weights; duplicates kept, selection is
with replacement across targets)."""

from __future__ import annotations

import csv
import hashlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import kernels
from .corpus import Corpus
from .errors import (
    EmptyGlobalSplit,
    FingerprintMismatch,
    InvalidConfig,
    IoError,
    PoolTooSmall,
)
from .metrics import DistanceMetric
from .segmentation import Segment, SegmentationConfig, segment_series


@dataclass(eq=False)
class AugmentationPool:
    """All labeled segments of the global split, in deterministic order
    (individuals sorted by id, segments by start index). Stacked copies
    of the frames plus precomputed centroids and row norms back the
    distance scans."""

    segments: tuple[Segment, ...]
    winlen: int
    dim: int
    config_fingerprint: str
    frames: np.ndarray = field(init=False)      # (P, winlen, d)
    centroids: np.ndarray = field(init=False)   # (P, d)
    norms: np.ndarray = field(init=False)       # (P, winlen)
    source_ids: tuple[str, ...] = field(init=False)

    def __post_init__(self):
        self.frames = np.ascontiguousarray(
            np.stack([seg.frames for seg in self.segments]))
        self.centroids = self.frames.mean(axis=1)
        self.norms = kernels.row_norms(self.frames)
        self.source_ids = tuple(seg.source_id for seg in self.segments)

    def __len__(self) -> int:
        return len(self.segments)


@dataclass(frozen=True)
class DwaConfig:
    metric: DistanceMetric
    n: int = 1
    exclude_source_ids: frozenset[str] = frozenset()

    def __post_init__(self):
        if self.n < 1:
            raise InvalidConfig("n must be >= 1")


@dataclass(eq=False)
class AugmentedDataset:
    """A target's original segments plus the selected pool segments.

    augmentations holds (target_segment_index, pool_index, distance)
    triples, n per target; combined lists the originals followed by the
    selections in target-then-rank order, duplicates preserved."""

    original: tuple[Segment, ...]
    augmentations: tuple[tuple[int, int, float], ...]
    combined: tuple[Segment, ...]


def build_pool(corpus: Corpus, seg_config: SegmentationConfig
               ) -> AugmentationPool:
    """Segment every global individual's full labeled series into the pool."""
    members = corpus.global_members
    if not members:
        raise EmptyGlobalSplit("corpus has no global individuals")
    segments: list[Segment] = []
    for ind in members:  # corpus keeps individuals sorted by id
        segments.extend(
            segment_series(ind.features, ind.labels, seg_config,
                           span=(0, ind.features.length)))
    if not segments:
        raise EmptyGlobalSplit(
            f"no global series admits a full window of {seg_config.winlen}")
    fp = hashlib.sha256(
        f"{seg_config.winlen}:{seg_config.hop}:"
        f"{corpus.fingerprint()}".encode()).hexdigest()[:12]
    return AugmentationPool(
        segments=tuple(segments),
        winlen=seg_config.winlen,
        dim=corpus.feature_dim,
        config_fingerprint=fp,
    )


def pool_distances(pool: AugmentationPool, target: Segment,
                   metric: DistanceMetric) -> np.ndarray:
    """Distance from the target to every pool segment, by pool index."""
    if target.dim != pool.dim or target.winlen != pool.winlen:
        raise FingerprintMismatch(
            f"target segment shape {target.frames.shape} does not match "
            f"pool (winlen={pool.winlen}, d={pool.dim})")
    if metric is DistanceMetric.CENTROID_L2:
        diff = pool.centroids - target.frames.mean(axis=0)
        return np.sqrt((diff * diff).sum(axis=1))
    if metric is DistanceMetric.CENTROID_DP:
        return -(pool.centroids @ target.frames.mean(axis=0))
    target_frames = np.ascontiguousarray(target.frames)
    return kernels.cosine_scan(pool.frames, pool.norms, target_frames,
                               kernels.row_norms(target_frames))


def nearest(pool: AugmentationPool, target: Segment, metric: DistanceMetric,
            n: int, exclude_source_ids=frozenset()
            ) -> list[tuple[int, float]]:
    """The n nearest non-excluded pool segments, ascending by distance,
    ties broken by ascending pool index. Exact scan, no approximation."""
    distances = pool_distances(pool, target, metric)
    if exclude_source_ids:
        keep = np.array([sid not in exclude_source_ids
                         for sid in pool.source_ids])
        candidates = np.nonzero(keep)[0]
    else:
        candidates = np.arange(len(pool))
    if n > len(candidates):
        raise PoolTooSmall(
            f"requested n={n} but only {len(candidates)} candidate "
            "segments after exclusion")
    # stable sort on distance keeps pool-index order among ties
    order = candidates[np.argsort(distances[candidates], kind="stable")]
    return [(int(i), float(distances[i])) for i in order[:n]]


def augment_individual(pool: AugmentationPool, train_segments,
                       config: DwaConfig) -> AugmentedDataset:
    """Select the n nearest pool segments for every training segment."""
    train_segments = tuple(train_segments)
    if not train_segments:
        raise PoolTooSmall("no training segments to augment")
    triples: list[tuple[int, int, float]] = []
    selected: list[Segment] = []
    for t_idx, target in enumerate(train_segments):
        picks = nearest(pool, target, config.metric, config.n,
                        config.exclude_source_ids)
        for pool_index, distance in picks:
            triples.append((t_idx, pool_index, distance))
            selected.append(pool.segments[pool_index])
    return AugmentedDataset(
        original=train_segments,
        augmentations=tuple(triples),
        combined=train_segments + tuple(selected),
    )


def export_augmentation_report(dataset: AugmentedDataset, pool: AugmentationPool,
                               path) -> None:
    """CSV audit of the selections, one row per (target, rank)."""
    ranks_per_target = (len(dataset.augmentations) // len(dataset.original)
                        if dataset.original else 0)
    try:
        with open(Path(path), "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["target_segment_index", "rank", "pool_index",
                             "source_id", "start_index", "distance"])
            for row_idx, (t_idx, pool_index, distance) in enumerate(
                    dataset.augmentations):
                seg = pool.segments[pool_index]
                rank = row_idx % ranks_per_target if ranks_per_target else 0
                writer.writerow([t_idx, rank, pool_index, seg.source_id,
                                 seg.start_index, repr(distance)])
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from None
