import numpy as np
import pytest

from dwa.augment import (
    AugmentationPool,
    AugmentedDataset,
    DwaConfig,
    augment_individual,
    build_pool,
    export_augmentation_report,
    nearest,
)
from dwa.corpus import (
    Corpus,
    FeatureSeries,
    Individual,
    LabelSeries,
    Portions,
    Split,
    SynthConfig,
    generate_synthetic,
)
from dwa.errors import (
    EmptyGlobalSplit,
    FingerprintMismatch,
    InvalidConfig,
    PoolTooSmall,
)
from dwa.metrics import DistanceMetric
from dwa.segmentation import Segment, SegmentationConfig, segment_series

from corpora import clone_into_global
from oracles import oracle_nearest

METRICS = list(DistanceMetric)


def _global_corpus(n=2, T=10, d=3, seed=0):
    rng = np.random.default_rng(seed)
    individuals = []
    for i in range(n):
        iid = f"g{i:02d}"
        individuals.append(Individual(
            iid, Split.TRAIN_G,
            FeatureSeries(iid, rng.standard_normal((T, d)), 1.0),
            LabelSeries(iid, rng.uniform(-1, 1, T), rng.uniform(-1, 1, T)),
        ))
    return Corpus(tuple(individuals), d)


def _random_pool(rng, size, winlen=4, d=3):
    segments = []
    for i in range(size):
        frames = rng.standard_normal((winlen, d))
        labels = rng.uniform(-1, 1, (winlen, 2))
        segments.append(Segment(f"g{i % 5:02d}", i, frames, labels))
    return AugmentationPool(segments=tuple(segments), winlen=winlen, dim=d,
                            config_fingerprint="test")


def _target(rng, winlen=4, d=3):
    return Segment("t", 0, rng.standard_normal((winlen, d)))


def test_build_pool_window_count():
    corpus = _global_corpus(n=2, T=10)
    pool = build_pool(corpus, SegmentationConfig(10, 5))
    assert len(pool) == 2
    assert all(seg.labeled for seg in pool.segments)


def test_build_pool_order_and_determinism():
    corpus = generate_synthetic(SynthConfig(), seed=1)
    seg_cfg = SegmentationConfig(10, 5)
    pool_a = build_pool(corpus, seg_cfg)
    pool_b = build_pool(corpus, seg_cfg)
    assert pool_a.config_fingerprint == pool_b.config_fingerprint
    ids_a = [(s.source_id, s.start_index) for s in pool_a.segments]
    ids_b = [(s.source_id, s.start_index) for s in pool_b.segments]
    assert ids_a == ids_b
    assert ids_a == sorted(ids_a)  # individuals by id, segments by start


def test_build_pool_requires_global_split():
    rng = np.random.default_rng(0)
    ind = Individual(
        "t00", Split.TEST,
        FeatureSeries("t00", rng.standard_normal((20, 2)), 1.0),
        LabelSeries("t00", rng.uniform(-1, 1, 20), rng.uniform(-1, 1, 20)),
        portions=__import__("dwa.corpus", fromlist=["Portions"])
        .Portions(5, 10))
    corpus = Corpus((ind,), 2)
    with pytest.raises(EmptyGlobalSplit):
        build_pool(corpus, SegmentationConfig(5, 5))


def test_nearest_identity_at_zero():
    rng = np.random.default_rng(3)
    pool = _random_pool(rng, 10)
    target = Segment("t", 0, pool.segments[4].frames.copy())
    for metric in (DistanceMetric.CENTROID_L2, DistanceMetric.COSINE):
        picks = nearest(pool, target, metric, 1)
        assert picks[0][0] == 4
        assert abs(picks[0][1]) < 1e-12


def test_nearest_matches_oracle():
    rng = np.random.default_rng(4)
    for case in range(60):
        pool = _random_pool(rng, int(rng.integers(5, 50)))
        target = _target(rng)
        n = int(rng.integers(1, 4))
        for metric in METRICS:
            got = nearest(pool, target, metric, n)
            want = oracle_nearest(pool.segments, target, metric.value, n)
            assert [g[0] for g in got] == [w[0] for w in want]


def test_nearest_tie_breaks_by_pool_index():
    rng = np.random.default_rng(5)
    frames = rng.standard_normal((4, 3))
    segments = (
        Segment("a", 0, rng.standard_normal((4, 3)) + 5.0,
                np.zeros((4, 2))),
        Segment("b", 1, frames.copy(), np.zeros((4, 2))),
        Segment("c", 2, frames.copy(), np.zeros((4, 2))),
    )
    pool = AugmentationPool(segments, winlen=4, dim=3,
                            config_fingerprint="t")
    target = Segment("t", 0, frames.copy())
    for metric in METRICS:
        picks = nearest(pool, target, metric, 1)
        assert picks[0][0] == 1  # duplicate at index 1 beats index 2


def test_nearest_exclusion_and_pool_too_small():
    rng = np.random.default_rng(6)
    pool = _random_pool(rng, 10)  # source ids g00..g04 cycling
    target = _target(rng)
    picks = nearest(pool, target, DistanceMetric.CENTROID_L2, 3,
                    exclude_source_ids={"g00", "g01"})
    assert all(pool.segments[i].source_id not in ("g00", "g01")
               for i, _ in picks)
    with pytest.raises(PoolTooSmall):
        nearest(pool, target, DistanceMetric.CENTROID_L2, 7,
                exclude_source_ids={"g00", "g01"})


def test_nearest_monotone_prefix():
    rng = np.random.default_rng(7)
    pool = _random_pool(rng, 30)
    target = _target(rng)
    for metric in METRICS:
        seq = [tuple(i for i, _ in nearest(pool, target, metric, n))
               for n in (1, 2, 3, 4)]
        for small, big in zip(seq, seq[1:]):
            assert big[:len(small)] == small


def test_nearest_argmin_invariances():
    rng = np.random.default_rng(8)
    pool = _random_pool(rng, 25)
    target = _target(rng)
    base = [i for i, _ in nearest(pool, target, DistanceMetric.COSINE, 5)]
    # positive per-row rescaling leaves the cosine ranking unchanged
    scaled_segments = tuple(
        Segment(s.source_id, s.start_index,
                s.frames * rng.uniform(0.2, 5.0, (4, 1)), s.label_frames)
        for s in pool.segments)
    scaled_pool = AugmentationPool(scaled_segments, winlen=4, dim=3,
                                   config_fingerprint="t")
    scaled_target = Segment("t", 0,
                            target.frames * rng.uniform(0.2, 5.0, (4, 1)))
    assert [i for i, _ in nearest(scaled_pool, scaled_target,
                                  DistanceMetric.COSINE, 5)] == base

    base_l2 = [i for i, _ in nearest(pool, target,
                                     DistanceMetric.CENTROID_L2, 5)]
    shift = rng.standard_normal(3)
    shifted_segments = tuple(
        Segment(s.source_id, s.start_index, s.frames + shift, s.label_frames)
        for s in pool.segments)
    shifted_pool = AugmentationPool(shifted_segments, winlen=4, dim=3,
                                    config_fingerprint="t")
    shifted_target = Segment("t", 0, target.frames + shift)
    assert [i for i, _ in nearest(shifted_pool, shifted_target,
                                  DistanceMetric.CENTROID_L2, 5)] == base_l2


def test_augment_counts():
    rng = np.random.default_rng(9)
    pool = _random_pool(rng, 20)
    targets = [_target(rng) for _ in range(4)]
    ds = augment_individual(pool, targets,
                            DwaConfig(DistanceMetric.CENTROID_L2, n=2))
    assert len(ds.original) == 4
    assert len(ds.augmentations) == 8
    assert len(ds.combined) == 12
    assert list(ds.combined[:4]) == targets


def test_augment_weight_semantics():
    rng = np.random.default_rng(10)
    pool = _random_pool(rng, 15)
    targets = [_target(rng) for _ in range(5)]
    ds = augment_individual(pool, targets,
                            DwaConfig(DistanceMetric.COSINE, n=3))
    counts = {}
    for _, pidx, _ in ds.augmentations:
        counts[pidx] = counts.get(pidx, 0) + 1
    for pidx, count in counts.items():
        appearances = sum(1 for s in ds.combined[5:]
                          if s is pool.segments[pidx])
        assert appearances == count


def test_augment_twin_distance_zero():
    corpus = generate_synthetic(SynthConfig(noise=0.0, n_test=1), seed=2)
    twin = clone_into_global(corpus, "test00", "twin00")
    seg_cfg = SegmentationConfig(10, 5)
    pool = build_pool(twin, seg_cfg)
    ind = twin.by_id("test00")
    targets = segment_series(ind.features, ind.labels, seg_cfg,
                             ind.span("train_i"))
    ds = augment_individual(pool, targets,
                            DwaConfig(DistanceMetric.COSINE, n=1))
    for _, pidx, distance in ds.augmentations:
        assert pool.segments[pidx].source_id == "twin00"
        assert abs(distance) < 1e-9


def test_augment_exhaustive_selection():
    rng = np.random.default_rng(11)
    pool = _random_pool(rng, 6)
    target = _target(rng)
    ds = augment_individual(pool, [target],
                            DwaConfig(DistanceMetric.CENTROID_DP, n=6))
    assert sorted(p for _, p, _ in ds.augmentations) == list(range(6))
    assert len(ds.combined) == 7


def test_augment_fingerprint_mismatch():
    rng = np.random.default_rng(12)
    pool = _random_pool(rng, 10, winlen=4)
    bad = Segment("t", 0, rng.standard_normal((5, 3)))
    with pytest.raises(FingerprintMismatch):
        augment_individual(pool, [bad],
                           DwaConfig(DistanceMetric.CENTROID_L2, n=1))


def test_dwa_config_validation():
    with pytest.raises(InvalidConfig):
        DwaConfig(DistanceMetric.COSINE, n=0)


def test_export_report(tmp_path):
    rng = np.random.default_rng(13)
    pool = _random_pool(rng, 20)
    targets = [_target(rng) for _ in range(4)]
    ds = augment_individual(pool, targets,
                            DwaConfig(DistanceMetric.COSINE, n=2))
    path_a = tmp_path / "a.csv"
    path_b = tmp_path / "b.csv"
    export_augmentation_report(ds, pool, path_a)
    export_augmentation_report(ds, pool, path_b)
    lines = path_a.read_text().splitlines()
    assert lines[0] == ("target_segment_index,rank,pool_index,source_id,"
                        "start_index,distance")
    assert len(lines) == 9  # header + 4 targets x 2
    assert path_a.read_bytes() == path_b.read_bytes()


def test_export_report_empty(tmp_path):
    rng = np.random.default_rng(14)
    pool = _random_pool(rng, 3)
    empty = __import__("dwa.augment", fromlist=["AugmentedDataset"]) \
        .AugmentedDataset(original=(), augmentations=(), combined=())
    path = tmp_path / "empty.csv"
    export_augmentation_report(empty, pool, path)
    assert path.read_text().splitlines() == [
        "target_segment_index,rank,pool_index,source_id,start_index,distance"]
