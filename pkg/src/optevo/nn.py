"""Small dense classifiers trained from scratch.

The training loop treats the optimizer as an opaque stepper (begin_epoch /
update / failed), so the same network code scores evolved update rules,
evolved schedules, and the hand-written baselines.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .data import Dataset
from .tensor import Rng, Tensor


class NetworkError(ValueError):
    pass


@dataclass
class Dense:
    weights: Tensor  # (fan_in, fan_out)
    bias: Tensor  # (fan_out,)
    activation: str  # "relu" for hidden layers, "linear" for the output layer

    def __post_init__(self):
        if self.weights.ndim != 2:
            raise NetworkError("weights must be a matrix")
        if self.bias.shape != (self.weights.shape[1],):
            raise NetworkError(
                f"bias shape {self.bias.shape} does not match fan_out "
                f"{self.weights.shape[1]}"
            )
        if self.activation not in ("relu", "linear"):
            raise NetworkError(f"unknown activation {self.activation!r}")


class Network:
    """Fully-connected stack; the final layer feeds softmax cross-entropy."""

    def __init__(self, layer_sizes, seed: int = 0):
        sizes = list(layer_sizes)
        if len(sizes) < 2:
            raise NetworkError("need at least input and output sizes")
        if any(s < 1 for s in sizes):
            raise NetworkError("layer sizes must be positive")
        self.layer_sizes = sizes
        self.seed = seed
        rng = Rng(seed).child("init")
        self.layers: list[Dense] = []
        for i, (fan_in, fan_out) in enumerate(zip(sizes, sizes[1:])):
            limit = np.sqrt(6.0 / fan_in)
            w = rng.child("layer", i).uniform(-limit, limit, size=(fan_in, fan_out))
            act = "linear" if i == len(sizes) - 2 else "relu"
            self.layers.append(Dense(w, np.zeros(fan_out), act))

    @property
    def params(self) -> list[Tensor]:
        """Flat view [w0, b0, w1, b1, ...] — steppers update these in place."""
        out = []
        for layer in self.layers:
            out.append(layer.weights)
            out.append(layer.bias)
        return out

    def set_params(self, values) -> None:
        values = list(values)
        if len(values) != 2 * len(self.layers):
            raise NetworkError("wrong number of parameter tensors")
        for i, layer in enumerate(self.layers):
            layer.weights = np.array(values[2 * i], dtype=np.float64)
            layer.bias = np.array(values[2 * i + 1], dtype=np.float64)


def forward(net: Network, batch_x: Tensor):
    """Return (logits, cache); the cache feeds backward()."""
    x = np.asarray(batch_x, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != net.layer_sizes[0]:
        raise NetworkError(
            f"expected inputs of shape (B, {net.layer_sizes[0]}), got {x.shape}"
        )
    activations = [x]
    pre = []
    out = x
    with np.errstate(all="ignore"):
        for layer in net.layers:
            z = out @ layer.weights + layer.bias
            pre.append(z)
            out = np.maximum(z, 0.0) if layer.activation == "relu" else z
            activations.append(out)
    return out, {"activations": activations, "pre": pre}


def _log_softmax(logits: Tensor) -> Tensor:
    with np.errstate(all="ignore"):  # non-finite logits surface as failed runs
        shifted = logits - logits.max(axis=1, keepdims=True)
        return shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))


def mean_loss(logits: Tensor, labels: Tensor) -> float:
    """Softmax cross-entropy averaged over the batch."""
    labels = np.asarray(labels, dtype=np.int64)
    log_probs = _log_softmax(np.asarray(logits, dtype=np.float64))
    return float(-log_probs[np.arange(len(labels)), labels].mean())


def backward(net: Network, cache: dict, labels: Tensor) -> list[Tensor]:
    """Gradients of the mean cross-entropy, ordered like net.params."""
    labels = np.asarray(labels, dtype=np.int64)
    activations, pre = cache["activations"], cache["pre"]
    batch = len(labels)
    logits = activations[-1]
    if labels.min() < 0 or labels.max() >= logits.shape[1]:
        raise NetworkError("label outside the network's class range")
    with np.errstate(all="ignore"):
        probs = np.exp(_log_softmax(logits))
        delta = probs
        delta[np.arange(batch), labels] -= 1.0
        delta /= batch
        grads: list[Tensor] = []
        for i in range(len(net.layers) - 1, -1, -1):
            grads.append(delta.sum(axis=0))  # bias
            grads.append(activations[i].T @ delta)  # weights
            if i > 0:
                delta = (delta @ net.layers[i].weights.T) * (pre[i - 1] > 0)
    grads.reverse()
    return grads


def evaluate(net: Network, data: Dataset) -> float:
    """Accuracy under argmax prediction; ties resolve to the lowest class."""
    if len(data) == 0:
        raise NetworkError("cannot evaluate on an empty dataset")
    logits, _ = forward(net, data.x)
    return float((logits.argmax(axis=1) == data.y).mean())


@dataclass
class TrainConfig:
    batch_size: int = 1000
    max_epochs: int = 100
    early_stop: bool = True
    patience: int = 5
    shuffle_seed: int = 0

    def __post_init__(self):
        if self.batch_size < 1:
            raise NetworkError("batch_size must be >= 1")
        if self.max_epochs < 1:
            raise NetworkError("max_epochs must be >= 1")
        if self.early_stop and self.patience < 1:
            raise NetworkError("patience must be >= 1")


@dataclass
class TrainHistory:
    train_loss: list = field(default_factory=list)
    val_loss: list = field(default_factory=list)
    val_accuracy: list = field(default_factory=list)
    epochs_run: int = 0
    stopped_early: bool = False
    failed: bool = False


class EarlyStopTracker:
    """Stop once validation loss has gone `patience` epochs without a strict
    improvement over the best seen so far."""

    def __init__(self, patience: int):
        self.patience = patience
        self.best = np.inf
        self.bad_epochs = 0

    def update(self, val_loss: float) -> bool:
        if val_loss < self.best:
            self.best = val_loss
            self.bad_epochs = 0
        else:
            self.bad_epochs += 1
        return self.bad_epochs >= self.patience


def train(net: Network, stepper, data, cfg: TrainConfig | None = None):
    """Mini-batch training loop; returns (net, TrainHistory).

    `data` is a (train, validation) Dataset pair.  Any non-finite loss or
    parameter aborts the run with history.failed set — callers treat that
    as a zero-fitness outcome rather than an exception.
    """
    cfg = cfg or TrainConfig()
    train_set, val_set = data
    if len(train_set) == 0:
        raise NetworkError("cannot train on an empty dataset")
    history = TrainHistory()
    tracker = EarlyStopTracker(cfg.patience)
    shuffle_rng = Rng(cfg.shuffle_seed).child("shuffle")
    for epoch in range(cfg.max_epochs):
        stepper.begin_epoch(epoch)
        order = shuffle_rng.child("epoch", epoch).permutation(len(train_set))
        total_loss = 0.0
        for lo in range(0, len(order), cfg.batch_size):
            idx = order[lo : lo + cfg.batch_size]
            logits, cache = forward(net, train_set.x[idx])
            total_loss += mean_loss(logits, train_set.y[idx]) * len(idx)
            grads = backward(net, cache, train_set.y[idx])
            stepper.update(net.params, grads)
            if stepper.failed:
                history.failed = True
                return net, history
        epoch_train_loss = total_loss / len(order)
        val_logits, _ = forward(net, val_set.x)
        epoch_val_loss = mean_loss(val_logits, val_set.y)
        if not (np.isfinite(epoch_train_loss) and np.isfinite(epoch_val_loss)):
            history.failed = True
            return net, history
        history.train_loss.append(epoch_train_loss)
        history.val_loss.append(epoch_val_loss)
        history.val_accuracy.append(evaluate(net, val_set))
        history.epochs_run += 1
        if cfg.early_stop and tracker.update(epoch_val_loss):
            history.stopped_early = True
            break
    return net, history
