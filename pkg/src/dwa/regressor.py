"""Single-layer gated recurrent sequence regressor trained on the
concordance loss (1 - ccc), with analytic gradients through both the
loss and the recurrence, an adaptive-moment optimizer, and early
stopping on development ccc. Serves as generic model and as the
starting point for per-individual fine-tuning."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import kernels
from .errors import (
    DataError,
    EmptyBatch,
    EmptySet,
    InvalidConfig,
    InvalidDims,
    IoError,
    MissingFile,
)
from .metrics import ccc
from .segmentation import Segment

CHECKPOINT_VERSION = 1

_ARRAY_FIELDS = ("wz", "wr", "wc", "uz", "ur", "uc", "bz", "br", "bc",
                 "w_out")


@dataclass(eq=False)
class RegressorParams:
    """Weights of the gated recurrent cell plus the affine output head.

    Parameter count is 3*(h*d + h*h + h) + h + 1.
    """

    input_dim: int
    hidden_dim: int
    seed: int
    wz: np.ndarray
    wr: np.ndarray
    wc: np.ndarray
    uz: np.ndarray
    ur: np.ndarray
    uc: np.ndarray
    bz: np.ndarray
    br: np.ndarray
    bc: np.ndarray
    w_out: np.ndarray
    b_out: float

    def __post_init__(self):
        d, h = self.input_dim, self.hidden_dim
        shapes = {"wz": (h, d), "wr": (h, d), "wc": (h, d),
                  "uz": (h, h), "ur": (h, h), "uc": (h, h),
                  "bz": (h,), "br": (h,), "bc": (h,), "w_out": (h,)}
        for name, shape in shapes.items():
            arr = np.ascontiguousarray(getattr(self, name), dtype=np.float64)
            if arr.shape != shape:
                raise InvalidDims(f"{name}: expected {shape}, "
                                  f"got {arr.shape}")
            if not np.isfinite(arr).all():
                raise DataError(f"{name}: non-finite entries")
            setattr(self, name, arr)
        self.b_out = float(self.b_out)
        if not math.isfinite(self.b_out):
            raise DataError("b_out: non-finite")

    @property
    def n_params(self) -> int:
        d, h = self.input_dim, self.hidden_dim
        return 3 * (h * d + h * h + h) + h + 1

    def arrays(self) -> tuple:
        return tuple(getattr(self, name) for name in _ARRAY_FIELDS)

    def copy(self) -> "RegressorParams":
        return RegressorParams(
            input_dim=self.input_dim, hidden_dim=self.hidden_dim,
            seed=self.seed,
            **{name: getattr(self, name).copy() for name in _ARRAY_FIELDS},
            b_out=self.b_out)

    def flatten(self) -> np.ndarray:
        parts = [getattr(self, name).ravel() for name in _ARRAY_FIELDS]
        parts.append(np.array([self.b_out]))
        return np.concatenate(parts)

    def with_flat(self, flat: np.ndarray) -> "RegressorParams":
        if flat.shape != (self.n_params,):
            raise InvalidDims(f"flat vector of {flat.shape}, expected "
                              f"({self.n_params},)")
        out = {}
        k = 0
        for name in _ARRAY_FIELDS:
            shape = getattr(self, name).shape
            size = int(np.prod(shape))
            out[name] = flat[k:k + size].reshape(shape).copy()
            k += size
        return RegressorParams(input_dim=self.input_dim,
                               hidden_dim=self.hidden_dim, seed=self.seed,
                               **out, b_out=float(flat[k]))

    def __eq__(self, other):
        return (isinstance(other, RegressorParams)
                and self.input_dim == other.input_dim
                and self.hidden_dim == other.hidden_dim
                and self.seed == other.seed
                and self.b_out == other.b_out
                and all(np.array_equal(getattr(self, n), getattr(other, n))
                        for n in _ARRAY_FIELDS))


def init_params(d: int, h: int, seed: int) -> RegressorParams:
    """Uniform fan-in-scaled weights, zero biases, deterministic in seed."""
    if d < 1 or h < 1:
        raise InvalidDims(f"need d, h >= 1, got d={d}, h={h}")
    rng = np.random.default_rng(seed)
    sd = 1.0 / math.sqrt(d)
    sh = 1.0 / math.sqrt(h)
    return RegressorParams(
        input_dim=d, hidden_dim=h, seed=seed,
        wz=rng.uniform(-sd, sd, (h, d)),
        wr=rng.uniform(-sd, sd, (h, d)),
        wc=rng.uniform(-sd, sd, (h, d)),
        uz=rng.uniform(-sh, sh, (h, h)),
        ur=rng.uniform(-sh, sh, (h, h)),
        uc=rng.uniform(-sh, sh, (h, h)),
        bz=np.zeros(h), br=np.zeros(h), bc=np.zeros(h),
        w_out=rng.uniform(-sh, sh, h),
        b_out=0.0,
    )


def forward(params: RegressorParams, frames: np.ndarray) -> np.ndarray:
    """Per-timestep predictions for one segment (winlen x d)."""
    frames = np.ascontiguousarray(frames, dtype=np.float64)
    if frames.ndim != 2 or frames.shape[1] != params.input_dim:
        raise InvalidDims(
            f"frames of shape {frames.shape}, expected (*, "
            f"{params.input_dim})")
    if not np.isfinite(frames).all():
        raise DataError("frames contain non-finite values")
    preds, _, _, _, _ = kernels.gru_forward(
        *params.arrays(), params.b_out, frames[None, :, :])
    return preds[0]


def _forward_batch(params: RegressorParams, stacked: np.ndarray):
    return kernels.gru_forward(*params.arrays(), params.b_out, stacked)


def _stack_batch(batch, target: str):
    frames = np.ascontiguousarray(
        np.stack([seg.frames for seg in batch]))
    labels = np.concatenate([seg.labels_for(target) for seg in batch])
    return frames, labels


def _ccc_loss_grad(preds: np.ndarray, labels: np.ndarray):
    """Loss 1 - ccc over flat sequences and its gradient w.r.t. preds.

    Derivative of ccc = 2*cov/denom with population moments:
      d ccc / d x_i = (2 / (N * denom)) *
                      ((y_i - my) - ccc * ((x_i - mx) + (mx - my)))
    Constant labels make the gradient identically zero.
    """
    n = len(preds)
    mx = preds.mean()
    my = labels.mean()
    xc = preds - mx
    yc = labels - my
    cov = float(xc @ yc) / n
    var_x = float(xc @ xc) / n
    var_y = float(yc @ yc) / n
    denom = var_x + var_y + (mx - my) ** 2
    if denom == 0.0:
        return 0.0, np.zeros_like(preds)  # both constant, equal: ccc = 1
    ccc_value = 2.0 * cov / denom
    dccc = (2.0 / (n * denom)) * (yc - ccc_value * (xc + (mx - my)))
    return 1.0 - ccc_value, -dccc


@dataclass(eq=False)
class GradientSet:
    """Parameter-shaped gradients, same field layout as RegressorParams."""

    wz: np.ndarray
    wr: np.ndarray
    wc: np.ndarray
    uz: np.ndarray
    ur: np.ndarray
    uc: np.ndarray
    bz: np.ndarray
    br: np.ndarray
    bc: np.ndarray
    w_out: np.ndarray
    b_out: float

    def flatten(self) -> np.ndarray:
        parts = [getattr(self, name).ravel() for name in _ARRAY_FIELDS]
        parts.append(np.array([self.b_out]))
        return np.concatenate(parts)


def loss_and_gradient(params: RegressorParams, batch, target: str
                      ) -> tuple[float, GradientSet, bool]:
    """Concordance loss over the batch's concatenated predictions and
    labels, with the exact analytic gradient.

    Returns (loss, gradients, degenerate_labels). A batch whose labels
    are all identical gets the degenerate loss and a zero gradient.
    """
    batch = list(batch)
    if not batch:
        raise EmptyBatch("empty batch")
    for seg in batch:
        if not seg.labeled:
            raise DataError(
                f"segment {seg.source_id}@{seg.start_index} is unlabeled")
    frames, labels = _stack_batch(batch, target)
    preds, h, z, r, c = _forward_batch(params, frames)
    flat_preds = preds.ravel()

    degenerate = bool((labels == labels[0]).all())
    if degenerate:
        loss = 1.0 - ccc(flat_preds, labels).ccc
        zero = GradientSet(
            **{name: np.zeros_like(getattr(params, name))
               for name in _ARRAY_FIELDS}, b_out=0.0)
        return loss, zero, True

    loss, dflat = _ccc_loss_grad(flat_preds, labels)
    dpred = np.ascontiguousarray(dflat.reshape(preds.shape))
    grads = kernels.gru_backward(*params.arrays(), params.b_out,
                                 frames, h, z, r, c, dpred)
    names = _ARRAY_FIELDS + ("b_out",)
    return loss, GradientSet(**dict(zip(names, grads))), False


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-3
    max_epochs: int = 100
    patience: int = 10
    batch: int = 8
    seed: int = 0
    target: str = "valence"
    hidden_dim: int = 16

    def __post_init__(self):
        if self.learning_rate <= 0 or self.max_epochs < 1 \
                or self.patience < 1 or self.batch < 1 or self.hidden_dim < 1:
            raise InvalidConfig(
                "learning_rate, max_epochs, patience, batch and hidden_dim "
                "must be positive")
        if self.target not in ("valence", "arousal"):
            raise InvalidConfig(f"unknown target {self.target!r}")


@dataclass
class TrainTrace:
    train_loss: list[float] = field(default_factory=list)
    dev_ccc: list[float] = field(default_factory=list)
    best_epoch: int = 0
    stopped_early: bool = False

    @property
    def best_dev_ccc(self) -> float:
        return self.dev_ccc[self.best_epoch - 1]


class _Adam:
    """Adaptive moment estimation over the flat parameter vector.

    Fixed decay rates 0.9 / 0.999 and epsilon 1e-8.
    """

    def __init__(self, n: int, learning_rate: float):
        self.lr = learning_rate
        self.m = np.zeros(n)
        self.v = np.zeros(n)
        self.t = 0

    def step(self, flat_params: np.ndarray, flat_grad: np.ndarray
             ) -> np.ndarray:
        self.t += 1
        self.m = 0.9 * self.m + 0.1 * flat_grad
        self.v = 0.999 * self.v + 0.001 * flat_grad * flat_grad
        m_hat = self.m / (1.0 - 0.9 ** self.t)
        v_hat = self.v / (1.0 - 0.999 ** self.t)
        return flat_params - self.lr * m_hat / (np.sqrt(v_hat) + 1e-8)


def dev_ccc_of(params: RegressorParams, dev_set, target: str) -> float:
    """ccc over the concatenated predictions of all dev segments."""
    frames, labels = _stack_batch(dev_set, target)
    preds, _, _, _, _ = _forward_batch(params, frames)
    return ccc(preds.ravel(), labels).ccc


def train(params: RegressorParams, train_set, dev_set, config: TrainConfig
          ) -> tuple[RegressorParams, TrainTrace]:
    """First-order training with early stopping.

    Shuffles the training segments each epoch (deterministic in
    config.seed), evaluates dev ccc after every epoch, stops when it has
    not improved for `patience` epochs, and returns the parameters of
    the best epoch.
    """
    train_set = list(train_set)
    dev_set = list(dev_set)
    if not train_set or not dev_set:
        raise EmptySet("train and dev sets must be non-empty")
    rng = np.random.default_rng(config.seed)
    opt = _Adam(params.n_params, config.learning_rate)
    current = params.copy()
    best = current.copy()
    trace = TrainTrace()
    best_ccc = -np.inf
    since_best = 0
    for epoch in range(1, config.max_epochs + 1):
        order = rng.permutation(len(train_set))
        losses = []
        for lo in range(0, len(order), config.batch):
            batch = [train_set[i] for i in order[lo:lo + config.batch]]
            loss, grads, _ = loss_and_gradient(current, batch, config.target)
            losses.append(loss)
            flat = opt.step(current.flatten(), grads.flatten())
            current = current.with_flat(flat)
        trace.train_loss.append(float(np.mean(losses)))
        dev = dev_ccc_of(current, dev_set, config.target)
        trace.dev_ccc.append(dev)
        if dev > best_ccc:
            best_ccc = dev
            best = current.copy()
            trace.best_epoch = epoch
            since_best = 0
        else:
            since_best += 1
            if since_best >= config.patience:
                trace.stopped_early = True
                break
    return best, trace


# ---------------------------------------------------------------------------
# checkpoints
# ---------------------------------------------------------------------------

def save_params(params: RegressorParams, path) -> None:
    """JSON checkpoint; floats round-trip exactly."""
    doc = {
        "version": CHECKPOINT_VERSION,
        "input_dim": params.input_dim,
        "hidden_dim": params.hidden_dim,
        "seed": params.seed,
        "weights": {name: getattr(params, name).tolist()
                    for name in _ARRAY_FIELDS},
        "b_out": params.b_out,
    }
    try:
        with open(Path(path), "w") as fh:
            json.dump(doc, fh)
            fh.write("\n")
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from None


def load_params(path) -> RegressorParams:
    path = Path(path)
    if not path.is_file():
        raise MissingFile(str(path))
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: invalid checkpoint ({exc})") from None
    if doc.get("version") != CHECKPOINT_VERSION:
        raise DataError(f"{path}: unsupported checkpoint version "
                        f"{doc.get('version')!r}")
    weights = doc["weights"]
    return RegressorParams(
        input_dim=int(doc["input_dim"]),
        hidden_dim=int(doc["hidden_dim"]),
        seed=int(doc["seed"]),
        **{name: np.array(weights[name], dtype=np.float64)
           for name in _ARRAY_FIELDS},
        b_out=float(doc["b_out"]),
    )
