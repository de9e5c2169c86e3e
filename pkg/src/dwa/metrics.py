"""Segment distance metrics and the concordance correlation family.

Distances between two equal-shape segments:

* centroid L2: Euclidean distance between the per-segment mean vectors.
* centroid DP: negated dot product of the mean vectors (a similarity
  negation, may be negative).
* cosine: sum over aligned rows of 1 - cos(row_a, row_b), each term in
  [0, 2]. A row pair with exactly one zero vector contributes 1, with
  two zero vectors 0.

Agreement between a prediction and a label sequence is measured by the
concordance correlation coefficient

    ccc = 2 * cov(x, y) / (var(x) + var(y) + (mean(x) - mean(y))^2)

with population (1/N) moments, equal to pcc * bcf where pcc is the
Pearson correlation and bcf = 2*sd(x)*sd(y) / denominator is the bias
correction factor in [0, 1]. Degenerate cases: both sequences constant
and equal -> 1; any other constant sequence -> 0.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, EmptyInput, LengthMismatch
from .segmentation import Segment


class DistanceMetric(enum.Enum):
    CENTROID_L2 = "centroid-l2"
    CENTROID_DP = "centroid-dp"
    COSINE = "cosine"

    @classmethod
    def from_string(cls, name: str) -> "DistanceMetric":
        for metric in cls:
            if metric.value == name:
                return metric
        raise ValueError(
            f"unknown metric {name!r}; choose from "
            f"{[m.value for m in cls]}")


def _check_pair(a: Segment, b: Segment):
    if a.dim != b.dim or a.winlen != b.winlen:
        raise DimensionMismatch(
            f"segment shapes differ: {a.frames.shape} vs {b.frames.shape}")


def centroid(segment: Segment) -> np.ndarray:
    """Arithmetic mean of the segment's rows."""
    return segment.frames.mean(axis=0)


def centroid_l2(a: Segment, b: Segment) -> float:
    _check_pair(a, b)
    return float(np.linalg.norm(centroid(a) - centroid(b)))


def centroid_dp(a: Segment, b: Segment) -> float:
    _check_pair(a, b)
    return float(-np.dot(centroid(a), centroid(b)))


def cosine_distance(a: Segment, b: Segment) -> float:
    _check_pair(a, b)
    na = np.sqrt((a.frames * a.frames).sum(axis=1))
    nb = np.sqrt((b.frames * b.frames).sum(axis=1))
    dots = (a.frames * b.frames).sum(axis=1)
    denom = na * nb
    cos = np.zeros_like(dots)
    np.divide(dots, denom, out=cos, where=denom > 0.0)
    terms = 1.0 - cos
    terms[(na == 0.0) & (nb == 0.0)] = 0.0
    return float(terms.sum())


def segment_distance(a: Segment, b: Segment,
                     metric: DistanceMetric) -> float:
    if metric is DistanceMetric.CENTROID_L2:
        return centroid_l2(a, b)
    if metric is DistanceMetric.CENTROID_DP:
        return centroid_dp(a, b)
    return cosine_distance(a, b)


@dataclass(frozen=True)
class CccReport:
    ccc: float
    pcc: float
    bcf: float
    mean_pred: float
    mean_label: float
    std_pred: float
    std_label: float
    n_points: int
    degenerate_pred: bool
    degenerate_label: bool

    @property
    def degenerate(self) -> bool:
        return self.degenerate_pred or self.degenerate_label


def ccc(pred, label) -> CccReport:
    """Concordance correlation between two equal-length sequences."""
    x = np.asarray(pred, dtype=np.float64)
    y = np.asarray(label, dtype=np.float64)
    if x.ndim != 1 or y.ndim != 1:
        raise LengthMismatch("ccc expects 1-D sequences")
    if len(x) != len(y):
        raise LengthMismatch(f"length {len(x)} vs {len(y)}")
    if len(x) == 0:
        raise EmptyInput("ccc of empty sequences")
    n = len(x)
    mx = x.mean()
    my = y.mean()
    xc = x - mx
    yc = y - my
    cov = float(xc @ yc) / n
    var_x = float(xc @ xc) / n
    var_y = float(yc @ yc) / n
    sx = float(np.sqrt(var_x))
    sy = float(np.sqrt(var_y))
    denom = var_x + var_y + (mx - my) ** 2
    deg_pred = sx == 0.0
    deg_label = sy == 0.0
    if denom == 0.0:
        # both constant with equal means: perfect agreement by convention
        ccc_value = 1.0
    elif deg_pred or deg_label:
        ccc_value = 0.0
    else:
        ccc_value = 2.0 * cov / denom
    if deg_pred or deg_label:
        pcc = 0.0
        bcf = 0.0
    else:
        pcc = cov / (sx * sy)
        bcf = 2.0 * sx * sy / denom
    return CccReport(
        ccc=float(np.clip(ccc_value, -1.0, 1.0)),
        pcc=float(np.clip(pcc, -1.0, 1.0)),
        bcf=float(np.clip(bcf, 0.0, 1.0)),
        mean_pred=float(mx),
        mean_label=float(my),
        std_pred=sx,
        std_label=sy,
        n_points=n,
        degenerate_pred=deg_pred,
        degenerate_label=deg_label,
    )


def ccc_loss(pred, label) -> float:
    """1 - ccc, in [0, 2]."""
    return 1.0 - ccc(pred, label).ccc
