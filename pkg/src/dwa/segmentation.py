"""Fixed-length windowing of feature/label series and reassembly of
per-segment predictions into a per-timestamp sequence."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .corpus import FeatureSeries, LabelSeries
from .errors import InvalidConfig, InvalidSpan, LengthMismatch


@dataclass(frozen=True)
class SegmentationConfig:
    winlen: int = 10
    hop: int = 5

    def __post_init__(self):
        if self.winlen < 1 or self.hop < 1:
            raise InvalidConfig("winlen and hop must be >= 1")


@dataclass(eq=False)
class Segment:
    """winlen consecutive feature frames with aligned labels (when the
    labeled range covers the window) and provenance."""

    source_id: str
    start_index: int
    frames: np.ndarray  # (winlen, d)
    label_frames: np.ndarray | None = None  # (winlen, 2): valence, arousal

    @property
    def winlen(self) -> int:
        return self.frames.shape[0]

    @property
    def dim(self) -> int:
        return self.frames.shape[1]

    @property
    def labeled(self) -> bool:
        return self.label_frames is not None

    def labels_for(self, target: str) -> np.ndarray:
        if self.label_frames is None:
            raise LengthMismatch(
                f"segment {self.source_id}@{self.start_index} is unlabeled")
        col = 0 if target == "valence" else 1
        return self.label_frames[:, col]


def segment_count(span_len: int, winlen: int, hop: int) -> int:
    """Number of full windows in a span: max(0, floor((L - w)/h) + 1)."""
    if span_len < winlen:
        return 0
    return (span_len - winlen) // hop + 1


def segment_series(features: FeatureSeries, labels: LabelSeries | None,
                   config: SegmentationConfig,
                   span: tuple[int, int] | None = None) -> list[Segment]:
    """Cut the span into windows of winlen rows starting every hop rows.

    A trailing window shorter than winlen is dropped. Label frames are
    attached only when the labeled prefix covers the whole window.
    """
    T = features.length
    if span is None:
        span = (0, T)
    start, stop = span
    if not (0 <= start <= stop <= T):
        raise InvalidSpan(f"span {span} outside series of length {T}")
    labeled_len = labels.length if labels is not None else 0
    values = features.values
    out = []
    for s in range(start, stop - config.winlen + 1, config.hop):
        end = s + config.winlen
        label_frames = None
        if labels is not None and end <= labeled_len:
            label_frames = np.column_stack([labels.valence[s:end],
                                            labels.arousal[s:end]])
        out.append(Segment(
            source_id=features.individual_id,
            start_index=s,
            frames=values[s:end],
            label_frames=label_frames,
        ))
    return out


def concat_predictions(segments: list[Segment], per_segment_predictions,
                       hop: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Merge per-segment predictions back into a per-timestamp sequence.

    Overlapping timestamps are averaged over all covering windows.
    Returns (indices, values, uncovered): the absolute timestamps that
    received at least one prediction, their averaged values, and the
    indices inside the overall extent that no window covered.
    """
    if len(segments) != len(per_segment_predictions):
        raise LengthMismatch(
            f"{len(segments)} segments but "
            f"{len(per_segment_predictions)} prediction blocks")
    if not segments:
        empty = np.empty(0)
        return empty.astype(int), empty, empty.astype(int)
    lo = min(seg.start_index for seg in segments)
    hi = max(seg.start_index + seg.winlen for seg in segments)
    acc = np.zeros(hi - lo)
    cover = np.zeros(hi - lo, dtype=int)
    for seg, preds in zip(segments, per_segment_predictions):
        preds = np.asarray(preds, dtype=np.float64)
        if preds.shape != (seg.winlen,):
            raise LengthMismatch(
                f"prediction block of shape {preds.shape} for a window of "
                f"{seg.winlen} rows")
        a = seg.start_index - lo
        acc[a:a + seg.winlen] += preds
        cover[a:a + seg.winlen] += 1
    covered = cover > 0
    indices = np.nonzero(covered)[0] + lo
    values = acc[covered] / cover[covered]
    uncovered = np.nonzero(~covered)[0] + lo
    return indices, values, uncovered
