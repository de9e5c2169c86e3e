"""Hot numeric kernels: gated-recurrent forward/backward and the cosine
distance scan over a segment pool.

Each kernel has two implementations with identical contracts:

* a pure-numpy version (``*_np``), vectorized over the batch/pool axis,
* a numba ``@njit`` version (``*_nb``), explicit loops, compiled lazily.

The public aliases (``gru_forward``, ``gru_backward``, ``cosine_scan``)
point at the numba versions when numba imports and the environment
variable ``DWA_NO_NUMBA`` is unset/falsy; otherwise at the numpy ones.
Both paths are deterministic; results agree to floating-point roundoff
(the numba loops and BLAS reductions may differ in the last ulps).

All kernels expect C-contiguous float64 arrays.

Recurrence (single gated cell, hidden size H, input dim d):

    z_t = sigmoid(Wz x_t + Uz h_{t-1} + bz)          update gate
    r_t = sigmoid(Wr x_t + Ur h_{t-1} + br)          reset gate
    c_t = tanh(Wc x_t + Uc (r_t * h_{t-1}) + bc)     candidate
    h_t = (1 - z_t) * h_{t-1} + z_t * c_t
    y_t = w_out . h_t + b_out

with h_0 = 0.
"""

from __future__ import annotations

import os

import numpy as np


def _sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


def row_norms(frames: np.ndarray) -> np.ndarray:
    """L2 norm of each row vector along the last axis."""
    return np.sqrt((frames * frames).sum(axis=-1))


# ---------------------------------------------------------------------------
# numpy implementations
# ---------------------------------------------------------------------------

def gru_forward_np(wz, wr, wc, uz, ur, uc, bz, br, bc, w_out, b_out, frames):
    """Run the recurrence over a batch of segments.

    frames: (B, W, d). Returns (preds (B, W), h (B, W+1, H), z, r, c
    each (B, W, H)); h[:, 0] is the zero initial state.
    """
    B, W, _ = frames.shape
    H = wz.shape[0]
    preds = np.empty((B, W))
    h = np.zeros((B, W + 1, H))
    z = np.empty((B, W, H))
    r = np.empty((B, W, H))
    c = np.empty((B, W, H))
    for t in range(W):
        x_t = frames[:, t, :]
        h_prev = h[:, t, :]
        zt = _sigmoid(x_t @ wz.T + h_prev @ uz.T + bz)
        rt = _sigmoid(x_t @ wr.T + h_prev @ ur.T + br)
        ct = np.tanh(x_t @ wc.T + (rt * h_prev) @ uc.T + bc)
        ht = (1.0 - zt) * h_prev + zt * ct
        z[:, t] = zt
        r[:, t] = rt
        c[:, t] = ct
        h[:, t + 1] = ht
        preds[:, t] = ht @ w_out + b_out
    return preds, h, z, r, c


def gru_backward_np(wz, wr, wc, uz, ur, uc, bz, br, bc, w_out, b_out,
                    frames, h, z, r, c, dpred):
    """Reverse accumulation through the recurrence.

    dpred: (B, W) gradient of the loss w.r.t. each prediction. Returns
    gradients in parameter order (dwz, dwr, dwc, duz, dur, duc, dbz,
    dbr, dbc, dw_out, db_out), summed over the batch.
    """
    B, W, _ = frames.shape
    H = wz.shape[0]
    dwz = np.zeros_like(wz)
    dwr = np.zeros_like(wr)
    dwc = np.zeros_like(wc)
    duz = np.zeros_like(uz)
    dur = np.zeros_like(ur)
    duc = np.zeros_like(uc)
    dbz = np.zeros_like(bz)
    dbr = np.zeros_like(br)
    dbc = np.zeros_like(bc)
    dw_out = np.zeros_like(w_out)
    db_out = 0.0
    dh_next = np.zeros((B, H))
    for t in range(W - 1, -1, -1):
        x_t = frames[:, t, :]
        h_prev = h[:, t, :]
        ht = h[:, t + 1, :]
        zt = z[:, t, :]
        rt = r[:, t, :]
        ct = c[:, t, :]
        dy = dpred[:, t]

        dw_out += dy @ ht
        db_out += dy.sum()
        dh = dh_next + dy[:, None] * w_out[None, :]

        dz = dh * (ct - h_prev)
        dc = dh * zt
        dh_prev = dh * (1.0 - zt)

        dac = dc * (1.0 - ct * ct)
        dwc += dac.T @ x_t
        dbc += dac.sum(axis=0)
        duc += dac.T @ (rt * h_prev)
        tmp = dac @ uc
        dr = tmp * h_prev
        dh_prev = dh_prev + tmp * rt

        dar = dr * rt * (1.0 - rt)
        dwr += dar.T @ x_t
        dbr += dar.sum(axis=0)
        dur += dar.T @ h_prev
        dh_prev = dh_prev + dar @ ur

        daz = dz * zt * (1.0 - zt)
        dwz += daz.T @ x_t
        dbz += daz.sum(axis=0)
        duz += daz.T @ h_prev
        dh_prev = dh_prev + daz @ uz

        dh_next = dh_prev
    return dwz, dwr, dwc, duz, dur, duc, dbz, dbr, dbc, dw_out, float(db_out)


def cosine_scan_np(pool_frames, pool_norms, target, target_norms):
    """Summed per-row cosine distance from one target segment to every
    pool segment.

    pool_frames: (P, W, d), pool_norms: (P, W) precomputed row norms,
    target: (W, d), target_norms: (W,). Per row the term is
    1 - cos(angle); a row pair with exactly one zero vector contributes
    1, with two zero vectors 0.
    """
    dots = np.einsum("pwd,wd->pw", pool_frames, target)
    denom = pool_norms * target_norms[None, :]
    cos = np.zeros_like(dots)
    np.divide(dots, denom, out=cos, where=denom > 0.0)
    terms = 1.0 - cos
    both_zero = (pool_norms == 0.0) & (target_norms[None, :] == 0.0)
    terms[both_zero] = 0.0
    return terms.sum(axis=1)


# ---------------------------------------------------------------------------
# numba implementations
# ---------------------------------------------------------------------------

def _numba_requested() -> bool:
    return os.environ.get("DWA_NO_NUMBA", "").strip().lower() not in (
        "1", "true", "yes", "on",
    )


_HAVE_NUMBA = False
if _numba_requested():
    try:
        from numba import njit

        _HAVE_NUMBA = True
    except ImportError:
        _HAVE_NUMBA = False

if _HAVE_NUMBA:

    @njit(cache=True)
    def gru_forward_nb(wz, wr, wc, uz, ur, uc, bz, br, bc, w_out, b_out,
                       frames):
        B, W, d = frames.shape
        H = wz.shape[0]
        preds = np.empty((B, W))
        h = np.zeros((B, W + 1, H))
        z = np.empty((B, W, H))
        r = np.empty((B, W, H))
        c = np.empty((B, W, H))
        for b in range(B):
            for t in range(W):
                # gates first: every candidate unit reads all reset units
                for j in range(H):
                    az = bz[j]
                    ar = br[j]
                    for i in range(d):
                        x = frames[b, t, i]
                        az += wz[j, i] * x
                        ar += wr[j, i] * x
                    for k in range(H):
                        hp = h[b, t, k]
                        az += uz[j, k] * hp
                        ar += ur[j, k] * hp
                    z[b, t, j] = 1.0 / (1.0 + np.exp(-az))
                    r[b, t, j] = 1.0 / (1.0 + np.exp(-ar))
                for j in range(H):
                    ac = bc[j]
                    for i in range(d):
                        ac += wc[j, i] * frames[b, t, i]
                    for k in range(H):
                        ac += uc[j, k] * (r[b, t, k] * h[b, t, k])
                    c[b, t, j] = np.tanh(ac)
                y = b_out
                for j in range(H):
                    ht = (1.0 - z[b, t, j]) * h[b, t, j] \
                        + z[b, t, j] * c[b, t, j]
                    h[b, t + 1, j] = ht
                    y += w_out[j] * ht
                preds[b, t] = y
        return preds, h, z, r, c

    @njit(cache=True)
    def gru_backward_nb(wz, wr, wc, uz, ur, uc, bz, br, bc, w_out, b_out,
                        frames, h, z, r, c, dpred):
        B, W, d = frames.shape
        H = wz.shape[0]
        dwz = np.zeros((H, d))
        dwr = np.zeros((H, d))
        dwc = np.zeros((H, d))
        duz = np.zeros((H, H))
        dur = np.zeros((H, H))
        duc = np.zeros((H, H))
        dbz = np.zeros(H)
        dbr = np.zeros(H)
        dbc = np.zeros(H)
        dw_out = np.zeros(H)
        db_out = 0.0
        dh = np.empty(H)
        dh_acc = np.empty(H)  # incoming dL/dh_t, reused as dL/dh_{t-1}
        dac = np.empty(H)
        dar = np.empty(H)
        daz = np.empty(H)
        tmp = np.empty(H)
        for b in range(B):
            for j in range(H):
                dh_acc[j] = 0.0
            for t in range(W - 1, -1, -1):
                dy = dpred[b, t]
                db_out += dy
                for j in range(H):
                    ht = h[b, t + 1, j]
                    dw_out[j] += dy * ht
                    dh[j] = dh_acc[j] + dy * w_out[j]
                    dh_acc[j] = 0.0
                for j in range(H):
                    zt = z[b, t, j]
                    ct = c[b, t, j]
                    hp = h[b, t, j]
                    dz = dh[j] * (ct - hp)
                    dc = dh[j] * zt
                    dh_acc[j] += dh[j] * (1.0 - zt)
                    dac[j] = dc * (1.0 - ct * ct)
                    daz[j] = dz * zt * (1.0 - zt)
                for j in range(H):
                    a = dac[j]
                    dbc[j] += a
                    for i in range(d):
                        dwc[j, i] += a * frames[b, t, i]
                    for k in range(H):
                        duc[j, k] += a * (r[b, t, k] * h[b, t, k])
                for k in range(H):
                    s = 0.0
                    for j in range(H):
                        s += uc[j, k] * dac[j]
                    tmp[k] = s
                for k in range(H):
                    rt = r[b, t, k]
                    hp = h[b, t, k]
                    dr = tmp[k] * hp
                    dh_acc[k] += tmp[k] * rt
                    dar[k] = dr * rt * (1.0 - rt)
                for j in range(H):
                    a = dar[j]
                    dbr[j] += a
                    for i in range(d):
                        dwr[j, i] += a * frames[b, t, i]
                    for k in range(H):
                        dur[j, k] += a * h[b, t, k]
                for k in range(H):
                    s = 0.0
                    for j in range(H):
                        s += ur[j, k] * dar[j]
                    dh_acc[k] += s
                for j in range(H):
                    a = daz[j]
                    dbz[j] += a
                    for i in range(d):
                        dwz[j, i] += a * frames[b, t, i]
                    for k in range(H):
                        duz[j, k] += a * h[b, t, k]
                for k in range(H):
                    s = 0.0
                    for j in range(H):
                        s += uz[j, k] * daz[j]
                    dh_acc[k] += s
        return dwz, dwr, dwc, duz, dur, duc, dbz, dbr, dbc, dw_out, db_out

    @njit(cache=True)
    def cosine_scan_nb(pool_frames, pool_norms, target, target_norms):
        P, W, d = pool_frames.shape
        out = np.empty(P)
        for p in range(P):
            total = 0.0
            for t in range(W):
                pn = pool_norms[p, t]
                tn = target_norms[t]
                if pn == 0.0 and tn == 0.0:
                    continue
                if pn == 0.0 or tn == 0.0:
                    total += 1.0
                    continue
                dot = 0.0
                for i in range(d):
                    dot += pool_frames[p, t, i] * target[t, i]
                total += 1.0 - dot / (pn * tn)
            out[p] = total
        return out

    gru_forward = gru_forward_nb
    gru_backward = gru_backward_nb
    cosine_scan = cosine_scan_nb
    BACKEND = "numba"
else:
    gru_forward = gru_forward_np
    gru_backward = gru_backward_np
    cosine_scan = cosine_scan_np
    BACKEND = "numpy"


def backend() -> str:
    """Name of the active kernel backend: 'numba' or 'numpy'."""
    return BACKEND
