"""Independent brute-force references used only by the test suite.

These deliberately share no computational code with the library: the
ccc oracle evaluates the defining formula term by term in two passes,
the nearest oracle materializes every distance with its own arithmetic
and stable-sorts, and the gradient oracle runs central finite
differences through an independently coded forward pass.
"""

from __future__ import annotations

import math

import numpy as np


def oracle_ccc(x, y) -> float:
    """Literal two-pass evaluation of 2*rho*sx*sy / (vx + vy + (mx-my)^2)
    with the same degenerate rules as the library."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n = len(x)
    mx = sum(x) / n
    my = sum(y) / n
    vx = sum((xi - mx) ** 2 for xi in x) / n
    vy = sum((yi - my) ** 2 for yi in y) / n
    sx = math.sqrt(vx)
    sy = math.sqrt(vy)
    if sx == 0.0 and sy == 0.0:
        return 1.0 if mx == my else 0.0
    if sx == 0.0 or sy == 0.0:
        return 0.0
    rho = sum((xi - mx) * (yi - my) for xi, yi in zip(x, y)) / (n * sx * sy)
    return 2.0 * rho * sx * sy / (vx + vy + (mx - my) ** 2)


# ---------------------------------------------------------------------------
# nearest-neighbor oracle
# ---------------------------------------------------------------------------

def _oracle_centroid(frames: np.ndarray) -> np.ndarray:
    return frames.sum(axis=0) / frames.shape[0]


def _oracle_distance(a_frames: np.ndarray, b_frames: np.ndarray,
                     metric: str) -> float:
    if metric == "centroid-l2":
        diff = _oracle_centroid(a_frames) - _oracle_centroid(b_frames)
        return math.sqrt(float(np.dot(diff, diff)))
    if metric == "centroid-dp":
        return -float(np.dot(_oracle_centroid(a_frames),
                             _oracle_centroid(b_frames)))
    if metric == "cosine":
        total = 0.0
        for j in range(a_frames.shape[0]):
            na = math.sqrt(float(np.dot(a_frames[j], a_frames[j])))
            nb = math.sqrt(float(np.dot(b_frames[j], b_frames[j])))
            if na == 0.0 and nb == 0.0:
                continue
            if na == 0.0 or nb == 0.0:
                total += 1.0
                continue
            total += 1.0 - float(np.dot(a_frames[j], b_frames[j])) / (na * nb)
        return total
    raise ValueError(metric)


def oracle_nearest(pool_segments, target, metric: str, n: int,
                   exclude_source_ids=frozenset()):
    """Compute every distance, stable-sort by (distance, pool_index),
    take the first n non-excluded entries."""
    scored = []
    for idx, seg in enumerate(pool_segments):
        if seg.source_id in exclude_source_ids:
            continue
        scored.append((_oracle_distance(seg.frames, target.frames, metric),
                       idx))
    scored.sort(key=lambda pair: (pair[0], pair[1]))
    return [(idx, dist) for dist, idx in scored[:n]]


# ---------------------------------------------------------------------------
# gradient oracle
# ---------------------------------------------------------------------------

def _oracle_forward(params, frames: np.ndarray) -> list[float]:
    """Per-timestep recurrence written independently of the kernels."""
    h = np.zeros(params.hidden_dim)
    outputs = []
    for t in range(frames.shape[0]):
        x = frames[t]
        z = 1.0 / (1.0 + np.exp(-(params.wz @ x + params.uz @ h
                                  + params.bz)))
        r = 1.0 / (1.0 + np.exp(-(params.wr @ x + params.ur @ h
                                  + params.br)))
        c = np.tanh(params.wc @ x + params.uc @ (r * h) + params.bc)
        h = (1.0 - z) * h + z * c
        outputs.append(float(params.w_out @ h + params.b_out))
    return outputs


def oracle_loss(params, batch, target: str) -> float:
    preds = []
    labels = []
    for seg in batch:
        preds.extend(_oracle_forward(params, seg.frames))
        labels.extend(seg.labels_for(target))
    return 1.0 - oracle_ccc(np.array(preds), np.array(labels))


def oracle_grad(params, batch, target: str, step: float = 1e-5) -> np.ndarray:
    """Central finite differences of the independent loss, flat layout."""
    base = params.flatten()
    grad = np.zeros_like(base)
    for i in range(len(base)):
        up = base.copy()
        up[i] += step
        dn = base.copy()
        dn[i] -= step
        grad[i] = (oracle_loss(params.with_flat(up), batch, target)
                   - oracle_loss(params.with_flat(dn), batch, target)) \
            / (2.0 * step)
    return grad


def enumerate_windows(span_len: int, winlen: int, hop: int) -> list[int]:
    """Naive full-window enumerator for the segmentation count formula."""
    starts = []
    s = 0
    while s + winlen <= span_len:
        starts.append(s)
        s += hop
    return starts
