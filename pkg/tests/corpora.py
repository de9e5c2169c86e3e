"""Shared corpus builders for the test suite."""

from __future__ import annotations

import numpy as np

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


def toy_linear_corpus(seed: int = 0, n_train: int = 4, n_dev: int = 2,
                      n_test: int = 0, T: int = 240, d: int = 4) -> Corpus:
    """Learnable toy: smooth unit-variance features, labels a bounded
    linear function of the feature vector (one map per target)."""
    rng = np.random.default_rng(seed)
    wv = rng.normal(0.0, 1.0, d)
    wa = rng.normal(0.0, 1.0, d)
    plan = [(Split.TRAIN_G, n_train, "train"), (Split.DEVEL_G, n_dev, "devel"),
            (Split.TEST, n_test, "test")]
    individuals = []
    for split, count, prefix in plan:
        for i in range(count):
            iid = f"{prefix}{i:02d}"
            x = rng.standard_normal((T, d))
            for t in range(1, T):
                x[t] = 0.85 * x[t - 1] + 0.15 * x[t]
            x = x / x.std(axis=0)
            v = x @ wv
            a = x @ wa
            v = v / (np.abs(v).max() + 1e-9)
            a = a / (np.abs(a).max() + 1e-9)
            portions = None
            if split is Split.TEST:
                portions = Portions(T // 5, 2 * (T // 5))
            individuals.append(Individual(
                iid, split, FeatureSeries(iid, x, 0.5),
                LabelSeries(iid, v, a), portions))
    return Corpus(tuple(individuals), d, {"generator": "toy-linear"})


def conflict_corpus(seed: int) -> Corpus:
    """Opposed-style corpus: a generic model cannot serve both sign
    groups, so personalization has real headroom."""
    return generate_synthetic(SynthConfig(
        n_train_g=4, n_devel_g=2, n_test=2,
        t_train_g=250, t_devel_g=250, t_test=250,
        feature_dim=6, n_styles=2, noise=0.05, opposed_styles=True,
    ), seed=seed)


def confound_corpus(seed: int) -> Corpus:
    """Style-twin corpus with strong smooth nuisance confounders: every
    test individual's style recurs in the global split, and a truncated
    personal-training span underdetermines the label direction."""
    return generate_synthetic(SynthConfig(
        n_train_g=8, n_devel_g=2, n_test=6,
        t_train_g=250, t_devel_g=250, t_test=250,
        feature_dim=12, n_styles=4, noise=0.15,
        n_nuisance=6, nuisance_gain=6.0,
    ), seed=seed)


def truncate_train_i(corpus: Corpus, train_end: int) -> Corpus:
    """Shrink every test individual's personal-training span."""
    individuals = []
    for ind in corpus.individuals:
        if ind.split is Split.TEST:
            ind = Individual(ind.id, ind.split, ind.features, ind.labels,
                             Portions(train_end, ind.portions.devel_end))
        individuals.append(ind)
    return Corpus(tuple(individuals), corpus.feature_dim,
                  dict(corpus.metadata))


def clone_into_global(corpus: Corpus, individual_id: str,
                      clone_id: str) -> Corpus:
    """Add a verbatim copy of an individual as a global training member
    (full labels, no portions)."""
    src = corpus.by_id(individual_id)
    clone = Individual(
        clone_id, Split.TRAIN_G,
        FeatureSeries(clone_id, src.features.values.copy(),
                      src.features.sample_period),
        LabelSeries(clone_id, src.labels.valence.copy(),
                    src.labels.arousal.copy()),
    )
    return Corpus(corpus.individuals + (clone,), corpus.feature_dim,
                  dict(corpus.metadata))
