"""From-scratch dense neural network in float64 numpy.

The layer stack is ``input -> inverted dropout -> [dense -> ReLU -> batchnorm]
per hidden width -> dense -> softmax``. Batch normalization sits after the
activation by default (flippable via ``NetworkConfig.batchnorm_after_activation``
to the more common dense -> batchnorm -> ReLU order).

Training uses Adam with bias correction, categorical cross-entropy, and a
reduce-on-plateau learning-rate schedule monitoring validation accuracy.
Train-mode forward passes are pure (running batch-norm statistics are folded
in by an explicit :func:`apply_batchnorm_updates` call), which keeps finite
difference gradient checks exact and keeps repeated evaluations side-effect
free.

Initialization is He-uniform for the ReLU hidden layers and Glorot-uniform
for the softmax output layer. All randomness flows from explicit seeds
through numpy PCG64 generators; a full training run is bit-reproducible
single-threaded.
"""

from __future__ import annotations

import copy
import struct
from dataclasses import dataclass, field

import numpy as np

from .dataset import DatasetSplit, FeatureDataset, Scaler

CHECKPOINT_MAGIC = b"LYMM"
CHECKPOINT_VERSION = 1
BN_EPS = 1e-8


class TrainingDivergedError(RuntimeError):
    """Loss became non-finite; carries the epoch and batch where it happened."""

    def __init__(self, message: str, epoch: int, batch: int):
        super().__init__(message)
        self.epoch = epoch
        self.batch = batch


@dataclass
class NetworkConfig:
    input_dim: int
    hidden_widths: tuple[int, ...] = (256, 128, 64)
    output_classes: int = 3
    input_dropout_rate: float = 0.5
    batchnorm_momentum: float = 0.9
    weight_init_seed: int = 0
    batchnorm_after_activation: bool = True

    def __post_init__(self) -> None:
        self.hidden_widths = tuple(int(w) for w in self.hidden_widths)
        if self.input_dim < 1:
            raise ValueError("input_dim must be >= 1")
        if not self.hidden_widths or any(w < 1 for w in self.hidden_widths):
            raise ValueError("hidden widths must all be >= 1")
        if self.output_classes < 2:
            raise ValueError("output_classes must be >= 2")
        if not 0.0 <= self.input_dropout_rate < 1.0:
            raise ValueError("dropout rate must be in [0, 1)")
        if not 0.0 < self.batchnorm_momentum < 1.0:
            raise ValueError("batchnorm momentum must be in (0, 1)")


@dataclass
class DenseLayerParams:
    weights: np.ndarray  # (out, in)
    biases: np.ndarray  # (out,)


@dataclass
class BatchNormState:
    gamma: np.ndarray
    beta: np.ndarray
    running_mean: np.ndarray
    running_var: np.ndarray
    momentum: float


@dataclass
class AdamState:
    m: list[np.ndarray]
    v: list[np.ndarray]
    t: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8


@dataclass
class TrainingSchedule:
    initial_lr: float = 1e-3
    plateau_factor: float = 0.5
    plateau_patience: int = 5
    plateau_min_delta: float = 1e-4
    min_lr: float = 1e-6
    max_epochs: int = 100
    batch_size: int = 64

    def __post_init__(self) -> None:
        if self.initial_lr <= 0:
            raise ValueError("initial_lr must be > 0")
        if not 0.0 < self.plateau_factor < 1.0:
            raise ValueError("plateau_factor must be in (0, 1)")
        if self.plateau_patience < 1:
            raise ValueError("plateau_patience must be >= 1")
        if self.min_lr < 0 or self.min_lr > self.initial_lr:
            raise ValueError("min_lr must be in [0, initial_lr]")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")


@dataclass
class EpochStats:
    epoch: int
    train_loss: float
    train_acc: float
    val_loss: float
    val_acc: float
    lr: float


@dataclass
class TrainedModel:
    config: NetworkConfig
    hidden: list[tuple[DenseLayerParams, BatchNormState]]
    output: DenseLayerParams
    history: list[EpochStats] = field(default_factory=list)


def init_network(config: NetworkConfig) -> TrainedModel:
    """Build an untrained model with seeded weight initialization."""
    rng = np.random.default_rng(config.weight_init_seed)
    hidden = []
    fan_in = config.input_dim
    for width in config.hidden_widths:
        limit = np.sqrt(6.0 / fan_in)  # He-uniform for ReLU
        weights = rng.uniform(-limit, limit, size=(width, fan_in))
        dense = DenseLayerParams(weights, np.zeros(width))
        bn = BatchNormState(
            gamma=np.ones(width),
            beta=np.zeros(width),
            running_mean=np.zeros(width),
            running_var=np.ones(width),
            momentum=config.batchnorm_momentum,
        )
        hidden.append((dense, bn))
        fan_in = width
    limit = np.sqrt(6.0 / (fan_in + config.output_classes))  # Glorot-uniform
    output = DenseLayerParams(
        rng.uniform(-limit, limit, size=(config.output_classes, fan_in)),
        np.zeros(config.output_classes),
    )
    return TrainedModel(config, hidden, output)


def trainable_parameters(model: TrainedModel) -> list[np.ndarray]:
    """Parameter arrays in declaration order: per hidden layer W, b, gamma,
    beta; then output W, b. Views, not copies."""
    params: list[np.ndarray] = []
    for dense, bn in model.hidden:
        params.extend([dense.weights, dense.biases, bn.gamma, bn.beta])
    params.extend([model.output.weights, model.output.biases])
    return params


def parameter_counts(model: TrainedModel) -> tuple[int, int]:
    """(dense trainable count, batchnorm trainable count)."""
    dense = sum(d.weights.size + d.biases.size for d, _ in model.hidden)
    dense += model.output.weights.size + model.output.biases.size
    bn = sum(s.gamma.size + s.beta.size for _, s in model.hidden)
    return int(dense), int(bn)


def softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=1, keepdims=True)


def inverted_dropout(x: np.ndarray, rate: float, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Zero a `rate` fraction of entries and scale survivors by 1/(1-rate),
    so the expected activation is unchanged. Returns (output, scaled mask)."""
    if rate == 0.0:
        mask = np.ones_like(x)
        return x.copy(), mask
    keep = rng.random(x.shape) >= rate
    mask = keep.astype(np.float64) / (1.0 - rate)
    return x * mask, mask


@dataclass
class _LayerCache:
    x: np.ndarray  # dense input
    z: np.ndarray  # dense output (pre-activation)
    bn_input: np.ndarray
    bn_mean: np.ndarray
    bn_var: np.ndarray
    bn_xhat: np.ndarray
    bn_output: np.ndarray
    relu_input: np.ndarray
    activation: np.ndarray  # layer output fed to the next layer


@dataclass
class ForwardCache:
    mode: str
    batch_size: int
    dropout_mask: np.ndarray
    dropped_input: np.ndarray
    layers: list[_LayerCache]
    logits: np.ndarray
    probs: np.ndarray
    frozen_stats: bool = False


def _batchnorm_train(bn: BatchNormState, x: np.ndarray, frozen_stats: bool):
    if frozen_stats:
        mean, var = bn.running_mean, bn.running_var
    else:
        mean = x.mean(axis=0)
        var = x.var(axis=0)
    xhat = (x - mean) / np.sqrt(var + BN_EPS)
    return bn.gamma * xhat + bn.beta, mean, var, xhat


def _batchnorm_infer(bn: BatchNormState, x: np.ndarray) -> np.ndarray:
    xhat = (x - bn.running_mean) / np.sqrt(bn.running_var + BN_EPS)
    return bn.gamma * xhat + bn.beta


def forward(
    model: TrainedModel,
    batch: np.ndarray,
    mode: str = "infer",
    dropout_seed: int | None = None,
    frozen_stats: bool = False,
):
    """Run the network on an (n, D) batch.

    ``infer`` mode uses running batch-norm statistics, applies no dropout,
    and returns the (n, K) probability matrix. ``train`` mode normalizes
    with batch statistics, applies inverted dropout at the input, and
    returns ``(probs, cache)``; it does NOT touch the running statistics
    (see :func:`apply_batchnorm_updates`). ``frozen_stats`` makes a
    train-mode pass normalize with the running statistics instead of batch
    statistics, which removes the batch-coupling terms from the loss
    surface; gradient checks use it.
    """
    cfg = model.config
    batch = np.asarray(batch, dtype=np.float64)
    if batch.ndim != 2 or batch.shape[1] != cfg.input_dim:
        raise ValueError(f"batch must be (n, {cfg.input_dim}), got {batch.shape}")
    if batch.shape[0] < 1:
        raise ValueError("batch must contain at least one record")
    if mode not in ("train", "infer"):
        raise ValueError(f"unknown mode {mode!r}")
    train = mode == "train"
    if train and not frozen_stats and batch.shape[0] < 2:
        raise ValueError("train-mode batch normalization needs a batch of size >= 2")

    if train:
        rng = np.random.default_rng(0 if dropout_seed is None else dropout_seed)
        x, mask = inverted_dropout(batch, cfg.input_dropout_rate, rng)
    else:
        x, mask = batch, np.ones(0)
    dropped = x

    layer_caches: list[_LayerCache] = []
    for dense, bn in model.hidden:
        z = x @ dense.weights.T + dense.biases
        if cfg.batchnorm_after_activation:
            relu_in = z
            a = np.maximum(z, 0.0)
            if train:
                y, mean, var, xhat = _batchnorm_train(bn, a, frozen_stats)
            else:
                y, mean, var, xhat = _batchnorm_infer(bn, a), np.zeros(0), np.zeros(0), np.zeros(0)
            bn_in, out = a, y
        else:
            if train:
                h, mean, var, xhat = _batchnorm_train(bn, z, frozen_stats)
            else:
                h, mean, var, xhat = _batchnorm_infer(bn, z), np.zeros(0), np.zeros(0), np.zeros(0)
            relu_in = h
            out = np.maximum(h, 0.0)
            bn_in, y = z, h
        if train:
            layer_caches.append(_LayerCache(x, z, bn_in, mean, var, xhat, y, relu_in, out))
        x = out

    logits = x @ model.output.weights.T + model.output.biases
    probs = softmax(logits)
    if not train:
        return probs
    cache = ForwardCache(mode, batch.shape[0], mask, dropped, layer_caches, logits, probs, frozen_stats)
    return probs, cache


def apply_batchnorm_updates(model: TrainedModel, cache: ForwardCache) -> None:
    """Fold the cached batch statistics into the running statistics:
    running = momentum * running + (1 - momentum) * batch."""
    if cache.frozen_stats:
        return
    for (_, bn), layer in zip(model.hidden, cache.layers):
        m = bn.momentum
        bn.running_mean[...] = m * bn.running_mean + (1.0 - m) * layer.bn_mean
        bn.running_var[...] = m * bn.running_var + (1.0 - m) * layer.bn_var


def cross_entropy_loss(probs: np.ndarray, labels) -> float:
    """Mean -ln p[true class], probabilities clamped to [1e-12, 1]."""
    labels = np.asarray(labels, dtype=np.int64)
    p = np.clip(probs[np.arange(len(labels)), labels], 1e-12, 1.0)
    return float(np.mean(-np.log(p)))


def _batchnorm_backward(bn: BatchNormState, layer: _LayerCache, dy: np.ndarray, frozen_stats: bool):
    n = dy.shape[0]
    xhat = layer.bn_xhat
    inv_std = 1.0 / np.sqrt(layer.bn_var + BN_EPS)
    dgamma = np.sum(dy * xhat, axis=0)
    dbeta = np.sum(dy, axis=0)
    dxhat = dy * bn.gamma
    if frozen_stats:
        # mean/var are constants, so only the direct path remains
        return dxhat * inv_std, dgamma, dbeta
    dx = (inv_std / n) * (
        n * dxhat - dxhat.sum(axis=0) - xhat * np.sum(dxhat * xhat, axis=0)
    )
    return dx, dgamma, dbeta


def backward(model: TrainedModel, cache: ForwardCache, labels) -> list[np.ndarray]:
    """Gradients for every trainable parameter, aligned with
    :func:`trainable_parameters` order. Requires a train-mode cache from
    the same batch."""
    if cache is None or cache.mode != "train":
        raise ValueError("backward requires the cache from a train-mode forward pass")
    labels = np.asarray(labels, dtype=np.int64)
    n = cache.batch_size
    if labels.shape != (n,):
        raise ValueError("labels must match the cached batch size")

    # softmax + cross-entropy combined gradient at the logits
    delta = cache.probs.copy()
    delta[np.arange(n), labels] -= 1.0
    delta /= n

    last_activation = cache.layers[-1].activation if cache.layers else cache.dropped_input
    d_out_w = delta.T @ last_activation
    d_out_b = delta.sum(axis=0)
    dx = delta @ model.output.weights

    grads_reversed: list[np.ndarray] = [d_out_b, d_out_w]
    for (dense, bn), layer in zip(reversed(model.hidden), reversed(cache.layers)):
        if model.config.batchnorm_after_activation:
            da, dgamma, dbeta = _batchnorm_backward(bn, layer, dx, cache.frozen_stats)
            dz = da * (layer.relu_input > 0.0)
        else:
            da = dx * (layer.relu_input > 0.0)
            dz, dgamma, dbeta = _batchnorm_backward(bn, layer, da, cache.frozen_stats)
        dw = dz.T @ layer.x
        db = dz.sum(axis=0)
        grads_reversed.extend([dbeta, dgamma, db, dw])
        dx = dz @ dense.weights
    return list(reversed(grads_reversed))


def init_adam(params: list[np.ndarray], beta1: float = 0.9, beta2: float = 0.999, epsilon: float = 1e-8) -> AdamState:
    return AdamState(
        m=[np.zeros_like(p) for p in params],
        v=[np.zeros_like(p) for p in params],
        t=0,
        beta1=beta1,
        beta2=beta2,
        epsilon=epsilon,
    )


def adam_step(state: AdamState, params: list[np.ndarray], grads: list[np.ndarray], lr: float):
    """One bias-corrected Adam update. Parameters are modified in place."""
    if lr <= 0:
        raise ValueError("lr must be > 0")
    if len(params) != len(state.m) or len(params) != len(grads):
        raise ValueError("params/grads do not match the optimizer state")
    state.t += 1
    b1, b2 = state.beta1, state.beta2
    bc1 = 1.0 - b1**state.t
    bc2 = 1.0 - b2**state.t
    for p, g, m, v in zip(params, grads, state.m, state.v):
        m[...] = b1 * m + (1.0 - b1) * g
        v[...] = b2 * v + (1.0 - b2) * g * g
        p -= lr * (m / bc1) / (np.sqrt(v / bc2) + state.epsilon)
    return params, state


class PlateauScheduler:
    """Reduce the learning rate by ``factor`` after ``patience`` consecutive
    epochs without the monitored accuracy improving by more than
    ``min_delta``; never below ``min_lr``, never upward."""

    def __init__(self, schedule: TrainingSchedule):
        self.schedule = schedule
        self.lr = schedule.initial_lr
        self.best = -np.inf
        self.wait = 0

    def step(self, val_accuracy: float) -> float:
        s = self.schedule
        if val_accuracy > self.best + s.plateau_min_delta:
            self.best = val_accuracy
            self.wait = 0
        else:
            self.wait += 1
            if self.wait >= s.plateau_patience:
                self.lr = max(self.lr * s.plateau_factor, s.min_lr)
                self.wait = 0
        return self.lr


def reduce_lr_on_plateau(val_accuracies, schedule: TrainingSchedule) -> float:
    """Replay an accuracy history through a fresh scheduler; returns the lr
    in effect after the last epoch."""
    if len(val_accuracies) == 0:
        raise ValueError("history must be non-empty")
    sched = PlateauScheduler(schedule)
    lr = sched.lr
    for acc in val_accuracies:
        lr = sched.step(acc)
    return lr


def _snapshot_params(model: TrainedModel):
    return copy.deepcopy((model.hidden, model.output))


def _restore_params(model: TrainedModel, snapshot) -> None:
    model.hidden, model.output = copy.deepcopy(snapshot)


def _evaluate(model: TrainedModel, features: np.ndarray, labels: np.ndarray) -> tuple[float, float]:
    probs = forward(model, features, mode="infer")
    loss = cross_entropy_loss(probs, labels)
    acc = float(np.mean(np.argmax(probs, axis=1) == labels))
    return loss, acc


def train(
    config: NetworkConfig,
    schedule: TrainingSchedule,
    split: DatasetSplit,
    seed: int = 0,
) -> TrainedModel:
    """Mini-batch training with Adam and the plateau schedule.

    Shuffling and dropout masks derive from ``seed``; weight init from
    ``config.weight_init_seed``. Returns the parameter snapshot from the
    epoch with the best validation accuracy (earliest on ties), with the
    full per-epoch history attached. A trailing batch of size 1 is dropped
    (train-mode batch normalization needs n >= 2).
    """
    if len(split.train) == 0 or len(split.validation) == 0:
        raise ValueError("training requires non-empty train and validation parts")
    if split.train.dim != config.input_dim:
        raise ValueError(
            f"input_dim {config.input_dim} does not match dataset dim {split.train.dim}"
        )
    model = init_network(config)
    params = trainable_parameters(model)
    adam = init_adam(params)
    plateau = PlateauScheduler(schedule)
    shuffle_ss, mask_ss = np.random.SeedSequence(seed).spawn(2)
    shuffle_rng = np.random.default_rng(shuffle_ss)
    mask_rng = np.random.default_rng(mask_ss)

    x_train, y_train = split.train.features, split.train.labels
    x_val, y_val = split.validation.features, split.validation.labels
    n = len(split.train)
    lr = schedule.initial_lr
    best_acc = -np.inf
    best_snapshot = None

    for epoch in range(schedule.max_epochs):
        order = shuffle_rng.permutation(n)
        loss_sum = 0.0
        correct = 0
        seen = 0
        for start in range(0, n, schedule.batch_size):
            batch_idx = order[start : start + schedule.batch_size]
            dropout_seed = int(mask_rng.integers(0, 2**63))
            if batch_idx.size < 2:
                continue
            xb, yb = x_train[batch_idx], y_train[batch_idx]
            probs, cache = forward(model, xb, mode="train", dropout_seed=dropout_seed)
            loss = cross_entropy_loss(probs, yb)
            if not np.isfinite(loss):
                raise TrainingDivergedError(
                    f"non-finite loss at epoch {epoch}, batch {start // schedule.batch_size}",
                    epoch,
                    start // schedule.batch_size,
                )
            grads = backward(model, cache, yb)
            adam_step(adam, params, grads, lr)
            apply_batchnorm_updates(model, cache)
            loss_sum += loss * batch_idx.size
            correct += int(np.sum(np.argmax(probs, axis=1) == yb))
            seen += batch_idx.size
        val_loss, val_acc = _evaluate(model, x_val, y_val)
        if not np.isfinite(val_loss):
            raise TrainingDivergedError(f"non-finite validation loss at epoch {epoch}", epoch, -1)
        model.history.append(
            EpochStats(epoch, loss_sum / max(seen, 1), correct / max(seen, 1), val_loss, val_acc, lr)
        )
        if val_acc > best_acc:
            best_acc = val_acc
            best_snapshot = _snapshot_params(model)
        lr = plateau.step(val_acc)

    if best_snapshot is not None:
        _restore_params(model, best_snapshot)
    return model


def predict(model: TrainedModel, dataset: FeatureDataset) -> tuple[np.ndarray, np.ndarray]:
    """Infer-mode probabilities and argmax labels (ties -> lowest index)."""
    if dataset.dim != model.config.input_dim:
        raise ValueError(
            f"dataset dim {dataset.dim} does not match model input_dim {model.config.input_dim}"
        )
    probs = forward(model, dataset.features, mode="infer")
    return probs, np.argmax(probs, axis=1)


def best_epoch(model: TrainedModel) -> EpochStats:
    """History entry with the highest validation accuracy (earliest on ties)."""
    if not model.history:
        raise ValueError("model has no training history")
    best = model.history[0]
    for stats in model.history[1:]:
        if stats.val_acc > best.val_acc:
            best = stats
    return best


# ---------------------------------------------------------------------------
# checkpoint and history files


def _write_string(out: bytearray, text: str) -> None:
    encoded = text.encode("utf-8")
    out += struct.pack("<H", len(encoded)) + encoded


@dataclass
class Checkpoint:
    model: TrainedModel
    class_names: list[str]
    scaler: Scaler | None
    training_accuracy: float | None


def save_checkpoint(
    model: TrainedModel,
    path: str,
    class_names: list[str] | None = None,
    scaler: Scaler | None = None,
) -> None:
    """Versioned binary checkpoint: magic, config block (including class
    names, any input scaler, and the best-epoch training accuracy), then
    parameters in declaration order as little-endian f64."""
    cfg = model.config
    names = class_names if class_names is not None else [f"class_{i}" for i in range(cfg.output_classes)]
    out = bytearray()
    out += CHECKPOINT_MAGIC
    out += struct.pack("<H", CHECKPOINT_VERSION)
    out += struct.pack("<II", cfg.input_dim, len(cfg.hidden_widths))
    for w in cfg.hidden_widths:
        out += struct.pack("<I", w)
    out += struct.pack("<I", cfg.output_classes)
    out += struct.pack("<ddB", cfg.input_dropout_rate, cfg.batchnorm_momentum, int(cfg.batchnorm_after_activation))
    out += struct.pack("<q", cfg.weight_init_seed)
    out += struct.pack("<I", len(names))
    for name in names:
        _write_string(out, name)
    out += struct.pack("<d", best_epoch(model).train_acc if model.history else np.nan)
    has_scaler = scaler is not None and scaler.mode != "none"
    out += struct.pack("<B", int(has_scaler))
    if has_scaler:
        out += np.ascontiguousarray(scaler.mean, dtype="<f8").tobytes()
        out += np.ascontiguousarray(scaler.std, dtype="<f8").tobytes()
    for dense, bn in model.hidden:
        for arr in (dense.weights, dense.biases, bn.gamma, bn.beta, bn.running_mean, bn.running_var):
            out += np.ascontiguousarray(arr, dtype="<f8").tobytes()
    for arr in (model.output.weights, model.output.biases):
        out += np.ascontiguousarray(arr, dtype="<f8").tobytes()
    with open(path, "wb") as fh:
        fh.write(bytes(out))


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise ValueError("truncated checkpoint file")
        chunk = self.data[self.pos : self.pos + n]
        self.pos += n
        return chunk

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))

    def array(self, shape) -> np.ndarray:
        count = int(np.prod(shape))
        return np.frombuffer(self.take(8 * count), dtype="<f8").reshape(shape).copy()


def load_checkpoint(path: str) -> Checkpoint:
    with open(path, "rb") as fh:
        reader = _Reader(fh.read())
    if reader.take(4) != CHECKPOINT_MAGIC:
        raise ValueError(f"not a model checkpoint: {path}")
    (version,) = reader.unpack("<H")
    if version != CHECKPOINT_VERSION:
        raise ValueError(f"unsupported checkpoint version {version}")
    input_dim, n_hidden = reader.unpack("<II")
    widths = tuple(reader.unpack("<I")[0] for _ in range(n_hidden))
    (output_classes,) = reader.unpack("<I")
    dropout, momentum, bn_after = reader.unpack("<ddB")
    (seed,) = reader.unpack("<q")
    config = NetworkConfig(
        input_dim=input_dim,
        hidden_widths=widths,
        output_classes=output_classes,
        input_dropout_rate=dropout,
        batchnorm_momentum=momentum,
        weight_init_seed=seed,
        batchnorm_after_activation=bool(bn_after),
    )
    (n_names,) = reader.unpack("<I")
    names = []
    for _ in range(n_names):
        (length,) = reader.unpack("<H")
        names.append(reader.take(length).decode("utf-8"))
    (train_acc,) = reader.unpack("<d")
    (has_scaler,) = reader.unpack("<B")
    scaler = None
    if has_scaler:
        scaler = Scaler("zscore", reader.array((input_dim,)), reader.array((input_dim,)))
    model = init_network(config)
    for dense, bn in model.hidden:
        width, fan_in = dense.weights.shape
        dense.weights = reader.array((width, fan_in))
        dense.biases = reader.array((width,))
        bn.gamma = reader.array((width,))
        bn.beta = reader.array((width,))
        bn.running_mean = reader.array((width,))
        bn.running_var = reader.array((width,))
    k, fan_in = model.output.weights.shape
    model.output.weights = reader.array((k, fan_in))
    model.output.biases = reader.array((k,))
    if reader.pos != len(reader.data):
        raise ValueError("trailing bytes in checkpoint file")
    return Checkpoint(model, names, scaler, None if np.isnan(train_acc) else float(train_acc))


def write_history_csv(history: list[EpochStats], path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("epoch,train_loss,train_acc,val_loss,val_acc,lr\n")
        for s in history:
            fh.write(
                f"{s.epoch},{repr(s.train_loss)},{repr(s.train_acc)},"
                f"{repr(s.val_loss)},{repr(s.val_acc)},{repr(s.lr)}\n"
            )
