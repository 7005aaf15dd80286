"""LSTM valence classifier: two LSTM layers, a dense layer and softmax.

Training follows the schedule: SGD from lr 0.002, halved after 5 epochs
without eval improvement, stopping once the rate drops below 1e-5.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DimensionMismatch,
    EmptyDataset,
    SingleClassTrainingSet,
)
from .features import FeatureSequence
from .lstm import init_lstm, lstm_backward, lstm_forward

NUM_CLASSES = 2


@dataclass
class ModelParams:
    """All classifier weights plus the shape metadata."""

    lstm1: dict
    lstm2: dict
    dense: dict
    hidden_sizes: tuple
    input_dim: int

    def copy(self) -> "ModelParams":
        return ModelParams(
            {k: v.copy() for k, v in self.lstm1.items()},
            {k: v.copy() for k, v in self.lstm2.items()},
            {k: v.copy() for k, v in self.dense.items()},
            self.hidden_sizes,
            self.input_dim,
        )


@dataclass(frozen=True)
class TrainConfig:
    initial_lr: float = 0.002
    halve_every: int = 5
    stop_lr: float = 1e-5
    batch_size: int = 32
    max_epochs: int = 200
    seed: int = 0

    def __post_init__(self):
        if not (self.initial_lr > self.stop_lr > 0):
            raise ValueError("need initial_lr > stop_lr > 0")


@dataclass(frozen=True)
class Metrics:
    """Unweighted accuracy (mean per-class recall) and its complement."""

    unweighted_accuracy: float
    error_rate: float
    confusion: np.ndarray


def init_model(
    rng: np.random.Generator, input_dim: int, hidden_sizes=(64, 64)
) -> ModelParams:
    h1, h2 = hidden_sizes
    bound = 1.0 / np.sqrt(h2)
    dense = {
        "W": rng.uniform(-bound, bound, (h2, NUM_CLASSES)),
        "b": np.zeros(NUM_CLASSES),
    }
    return ModelParams(
        init_lstm(rng, input_dim, h1),
        init_lstm(rng, h1, h2),
        dense,
        (h1, h2),
        input_dim,
    )


def _seq_array(seq) -> np.ndarray:
    if isinstance(seq, FeatureSequence):
        return seq.frames
    return np.asarray(seq, dtype=np.float64)


def _softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def forward_batch(params: ModelParams, x: np.ndarray):
    """Probabilities for a (B, T, D) batch, plus caches for backprop."""
    if x.shape[2] != params.input_dim:
        raise DimensionMismatch(
            f"feature dim {x.shape[2]} != model input dim {params.input_dim}"
        )
    h1, cache1 = lstm_forward(params.lstm1, x)
    h2, cache2 = lstm_forward(params.lstm2, h1)
    last = h2[:, -1]
    logits = last @ params.dense["W"] + params.dense["b"]
    probs = _softmax(logits)
    return probs, (cache1, cache2, last)


def forward(params: ModelParams, seq) -> np.ndarray:
    """Class probabilities (length 2) for a single sequence."""
    x = _seq_array(seq)[None]
    probs, _ = forward_batch(params, x)
    return probs[0]


def _zero_grads(params: ModelParams) -> dict:
    return {
        "lstm1": {k: np.zeros_like(v) for k, v in params.lstm1.items()},
        "lstm2": {k: np.zeros_like(v) for k, v in params.lstm2.items()},
        "dense": {k: np.zeros_like(v) for k, v in params.dense.items()},
    }


def _batch_grads(params: ModelParams, x: np.ndarray, labels: np.ndarray):
    """Summed loss and gradients for one equal-length (B, T, D) group."""
    batch = x.shape[0]
    probs, (cache1, cache2, last) = forward_batch(params, x)
    picked = np.clip(probs[np.arange(batch), labels], 1e-300, None)
    loss_sum = float(-np.log(picked).sum())

    dlogits = probs.copy()
    dlogits[np.arange(batch), labels] -= 1.0
    grads = {
        "dense": {
            "W": last.T @ dlogits,
            "b": dlogits.sum(axis=0),
        }
    }
    dlast = dlogits @ params.dense["W"].T
    dh2 = np.zeros_like(cache2["h_seq"])
    dh2[:, -1] = dlast
    grads["lstm2"], dh1 = lstm_backward(params.lstm2, cache2, dh2)
    grads["lstm1"], _ = lstm_backward(params.lstm1, cache1, dh1)
    return loss_sum, grads


def _group_by_length(items):
    groups = {}
    for seq, label in items:
        arr = _seq_array(seq)
        groups.setdefault(arr.shape[0], ([], []))
        groups[arr.shape[0]][0].append(arr)
        groups[arr.shape[0]][1].append(int(label))
    return groups


def loss_and_gradients(params: ModelParams, batch):
    """Mean cross-entropy and full BPTT gradients over a batch.

    Sequences of different lengths are grouped and processed per length;
    the result is the mean over all items either way.
    """
    items = list(batch)
    if not items:
        raise EmptyDataset("empty batch")
    total_loss = 0.0
    total = _zero_grads(params)
    for _, (arrs, labels) in sorted(_group_by_length(items).items()):
        x = np.stack(arrs)
        loss_sum, grads = _batch_grads(params, x, np.asarray(labels))
        total_loss += loss_sum
        for part in total:
            for k in total[part]:
                total[part][k] += grads[part][k]
    n = len(items)
    for part in total:
        for k in total[part]:
            total[part][k] /= n
    return total_loss / n, total


def evaluate(params: ModelParams, dataset) -> Metrics:
    """Unweighted accuracy over a labeled dataset."""
    items = list(dataset)
    if not items:
        raise EmptyDataset("empty evaluation dataset")
    confusion = np.zeros((NUM_CLASSES, NUM_CLASSES), dtype=np.int64)
    for _, (arrs, labels) in sorted(_group_by_length(items).items()):
        probs, _ = forward_batch(params, np.stack(arrs))
        preds = probs.argmax(axis=1)
        for label, pred in zip(labels, preds):
            confusion[label, pred] += 1
    supports = confusion.sum(axis=1)
    present = np.flatnonzero(supports > 0)
    recalls = confusion[present, present] / supports[present]
    ua = float(recalls.mean() * 100.0)
    return Metrics(ua, 100.0 - ua, confusion)


def _apply_sgd(params: ModelParams, grads: dict, lr: float) -> None:
    for part_name, part in (
        ("lstm1", params.lstm1),
        ("lstm2", params.lstm2),
        ("dense", params.dense),
    ):
        for k in part:
            part[k] -= lr * grads[part_name][k]


def train(train_set, eval_set, config: TrainConfig, hidden_sizes=(64, 64)):
    """Mini-batch SGD with the halving LR schedule.

    Returns the parameters achieving the best eval UA together with the
    per-epoch history (epoch, lr, train loss, eval metrics).
    """
    train_items = list(train_set)
    eval_items = list(eval_set)
    if not train_items or not eval_items:
        raise EmptyDataset("train and eval sets must be nonempty")
    labels = {int(label) for _, label in train_items}
    if len(labels) < 2:
        raise SingleClassTrainingSet("training set holds a single class")

    rng = np.random.default_rng(config.seed)
    input_dim = _seq_array(train_items[0][0]).shape[1]
    params = init_model(rng, input_dim, hidden_sizes)

    best_params = params.copy()
    best_ua = -1.0
    stale_epochs = 0
    lr = config.initial_lr
    history = []

    for epoch in range(config.max_epochs):
        if lr < config.stop_lr:
            break
        order = rng.permutation(len(train_items))
        epoch_loss = 0.0
        for start in range(0, len(order), config.batch_size):
            batch = [train_items[i] for i in order[start : start + config.batch_size]]
            loss, grads = loss_and_gradients(params, batch)
            _apply_sgd(params, grads, lr)
            epoch_loss += loss * len(batch)
        epoch_loss /= len(train_items)

        metrics = evaluate(params, eval_items)
        history.append(
            {
                "epoch": epoch,
                "lr": lr,
                "train_loss": epoch_loss,
                "eval_ua": metrics.unweighted_accuracy,
            }
        )
        if metrics.unweighted_accuracy > best_ua:
            best_ua = metrics.unweighted_accuracy
            best_params = params.copy()
            stale_epochs = 0
        else:
            stale_epochs += 1
            if stale_epochs >= config.halve_every:
                lr *= 0.5
                stale_epochs = 0
    return best_params, history


def save_model(params: ModelParams, path) -> None:
    """Versioned npz checkpoint: shapes plus flat parameter arrays."""
    np.savez(
        path,
        format_version=np.array([1]),
        input_dim=np.array([params.input_dim]),
        hidden_sizes=np.array(params.hidden_sizes),
        **{f"lstm1_{k}": v for k, v in params.lstm1.items()},
        **{f"lstm2_{k}": v for k, v in params.lstm2.items()},
        **{f"dense_{k}": v for k, v in params.dense.items()},
    )


def load_model(path) -> ModelParams:
    data = np.load(path)
    if int(data["format_version"][0]) != 1:
        raise ValueError("unknown checkpoint version")
    return ModelParams(
        {k: data[f"lstm1_{k}"] for k in ("Wx", "Wh", "b")},
        {k: data[f"lstm2_{k}"] for k in ("Wx", "Wh", "b")},
        {k: data[f"dense_{k}"] for k in ("W", "b")},
        tuple(int(v) for v in data["hidden_sizes"]),
        int(data["input_dim"][0]),
    )
