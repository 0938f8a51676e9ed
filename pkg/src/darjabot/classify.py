"""Intent classifiers trained from scratch.

Multinomial logistic regression (ridge-regularized, mini-batch gradient
descent) and a two-hidden-layer MLP (256/128 ReLU units, inverted dropout,
momentum SGD). Both early-stop on validation loss and are fully seeded:
the same seed and data give bit-identical parameters.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import sparse

from .corpus import LabelCodec
from .errors import DataError, DivergenceError, IndexFormatError
from .features import SparseVector

_LR_MAGIC = b"LRM1"
_MLP_MAGIC = b"MLP1"


@dataclass
class LinearModel:
    W: np.ndarray  # (K, V)
    b: np.ndarray  # (K,)
    codec: LabelCodec
    l2: float

    @property
    def num_classes(self) -> int:
        return self.W.shape[0]

    @property
    def dim(self) -> int:
        return self.W.shape[1]


@dataclass
class MlpModel:
    layers: list[tuple[np.ndarray, np.ndarray]]  # [(W1,b1),(W2,b2),(W3,b3)]
    codec: LabelCodec
    dropout: float

    @property
    def num_classes(self) -> int:
        return self.layers[-1][0].shape[0]

    @property
    def dim(self) -> int:
        return self.layers[0][0].shape[1]


@dataclass(frozen=True)
class Prediction:
    intent_id: int
    confidence: float
    distribution: np.ndarray


@dataclass(frozen=True)
class ClassMetrics:
    name: str
    precision: float
    recall: float
    f1: float
    support: int


@dataclass(frozen=True)
class Metrics:
    accuracy: float
    weighted_f1: float
    macro_f1: float
    per_class: tuple[ClassMetrics, ...]


@dataclass
class TrainingLog:
    """Optional per-epoch record of (train_loss, val_loss)."""

    epochs: list[tuple[float, float]] = field(default_factory=list)


def to_csr(vectors: list[SparseVector]) -> sparse.csr_matrix:
    if not vectors:
        raise ValueError("no vectors")
    dim = vectors[0].dim
    indptr = np.zeros(len(vectors) + 1, dtype=np.int64)
    for i, v in enumerate(vectors):
        if v.dim != dim:
            raise DataError(f"vector {i} has dim {v.dim}, expected {dim}")
        indptr[i + 1] = indptr[i] + v.nnz
    indices = np.concatenate([v.indices for v in vectors]) if vectors else np.empty(0)
    data = np.concatenate([v.values for v in vectors])
    return sparse.csr_matrix((data, indices, indptr), shape=(len(vectors), dim))


def softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=-1, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=-1, keepdims=True)


def _cross_entropy(probs: np.ndarray, y: np.ndarray) -> float:
    eps = 1e-300
    return float(-np.log(probs[np.arange(len(y)), y] + eps).mean())


def logreg_loss(W: np.ndarray, b: np.ndarray, X, y: np.ndarray, l2: float) -> float:
    """Mean cross-entropy plus (l2/2)*||W||_F^2."""
    probs = softmax(X @ W.T + b)
    with np.errstate(over="ignore"):  # divergence is reported via the finiteness check
        return _cross_entropy(probs, y) + 0.5 * l2 * float((W * W).sum())


def logreg_gradients(
    W: np.ndarray, b: np.ndarray, X, y: np.ndarray, l2: float
) -> tuple[np.ndarray, np.ndarray]:
    n = X.shape[0]
    probs = softmax(X @ W.T + b)
    delta = probs
    delta[np.arange(n), y] -= 1.0
    grad_W = (X.T @ delta).T / n + l2 * W
    grad_b = delta.mean(axis=0)
    return grad_W, grad_b


def train_logreg(
    train: tuple[list[SparseVector], list[int]],
    val: tuple[list[SparseVector], list[int]],
    codec: LabelCodec,
    l2: float = 1e-4,
    lr: float = 0.5,
    batch: int = 64,
    max_epochs: int = 200,
    patience: int = 5,
    seed: int = 0,
    log: TrainingLog | None = None,
) -> LinearModel:
    """Seeded mini-batch descent on mean cross-entropy + ridge penalty.

    Keeps the parameters with the best validation loss; stops after
    ``patience`` epochs without improvement.
    """
    X = to_csr(train[0])
    y = np.asarray(train[1], dtype=np.int64)
    Xv = to_csr(val[0])
    yv = np.asarray(val[1], dtype=np.int64)
    n, dim = X.shape
    k = codec.num_classes
    rng = np.random.Generator(np.random.PCG64(seed))
    W = np.zeros((k, dim))
    b = np.zeros(k)
    best = (np.inf, W.copy(), b.copy())
    stale = 0
    for _ in range(max_epochs):
        order = rng.permutation(n)
        for start in range(0, n, batch):
            idx = order[start : start + batch]
            grad_W, grad_b = logreg_gradients(W, b, X[idx], y[idx], l2)
            W -= lr * grad_W
            b -= lr * grad_b
        val_loss = logreg_loss(W, b, Xv, yv, l2)
        if not np.isfinite(val_loss) or not np.isfinite(W).all() or not np.isfinite(b).all():
            raise DivergenceError(
                f"training diverged (non-finite loss or parameters); try a smaller lr than {lr}"
            )
        if log is not None:
            log.epochs.append((logreg_loss(W, b, X, y, l2), val_loss))
        if val_loss < best[0]:
            best = (val_loss, W.copy(), b.copy())
            stale = 0
        else:
            stale += 1
            if stale >= patience:
                break
    return LinearModel(best[1], best[2], codec, l2)


def _he_init(rng: np.random.Generator, fan_out: int, fan_in: int) -> np.ndarray:
    return rng.normal(0.0, np.sqrt(2.0 / fan_in), size=(fan_out, fan_in))


def mlp_forward(
    model: MlpModel,
    X,
    train_mode: bool = False,
    rng: np.random.Generator | None = None,
) -> tuple[np.ndarray, list]:
    """Forward pass; returns (logits, cache for backprop).

    Inverted dropout scales kept activations by 1/(1-p) at train time so
    inference needs no rescaling; dropout is disabled outside training.
    """
    cache: list = []
    h = X
    last = len(model.layers) - 1
    for i, (W, b) in enumerate(model.layers):
        z = h @ W.T + b
        if i == last:
            cache.append((h, z, None))
            return z, cache
        a = np.maximum(z, 0.0)
        mask = None
        if train_mode and model.dropout > 0.0:
            keep = 1.0 - model.dropout
            mask = (rng.random(a.shape) < keep) / keep
            a = a * mask
        cache.append((h, z, mask))
        h = a
    raise AssertionError("unreachable")


def mlp_loss(model: MlpModel, X, y: np.ndarray) -> float:
    logits, _ = mlp_forward(model, X)
    return _cross_entropy(softmax(logits), y)


def mlp_gradients(
    model: MlpModel,
    X,
    y: np.ndarray,
    train_mode: bool = False,
    rng: np.random.Generator | None = None,
) -> list[tuple[np.ndarray, np.ndarray]]:
    """Backprop gradients of mean cross-entropy, one (dW, db) per layer."""
    n = X.shape[0]
    logits, cache = mlp_forward(model, X, train_mode=train_mode, rng=rng)
    delta = softmax(logits)
    delta[np.arange(n), y] -= 1.0
    delta /= n
    grads: list[tuple[np.ndarray, np.ndarray]] = [None] * len(model.layers)  # type: ignore[list-item]
    for i in range(len(model.layers) - 1, -1, -1):
        h, z, mask = cache[i]
        grads[i] = ((h.T @ delta).T, delta.sum(axis=0))
        if i > 0:
            delta = delta @ model.layers[i][0]
            prev_mask = cache[i - 1][2]
            if prev_mask is not None:
                delta = delta * prev_mask
            delta = delta * (cache[i - 1][1] > 0.0)
    return grads


def train_mlp(
    train: tuple[list[SparseVector], list[int]],
    val: tuple[list[SparseVector], list[int]],
    codec: LabelCodec,
    hidden: tuple[int, int] = (256, 128),
    dropout: float = 0.3,
    lr: float = 0.01,
    momentum: float = 0.9,
    batch: int = 64,
    max_epochs: int = 200,
    patience: int = 5,
    seed: int = 0,
    log: TrainingLog | None = None,
) -> MlpModel:
    X = to_csr(train[0])
    y = np.asarray(train[1], dtype=np.int64)
    Xv = to_csr(val[0])
    yv = np.asarray(val[1], dtype=np.int64)
    _, dim = X.shape
    k = codec.num_classes
    rng = np.random.Generator(np.random.PCG64(seed))
    sizes = [dim, hidden[0], hidden[1], k]
    layers = [
        (_he_init(rng, sizes[i + 1], sizes[i]), np.zeros(sizes[i + 1]))
        for i in range(len(sizes) - 1)
    ]
    model = MlpModel(layers, codec, dropout)
    velocity = [(np.zeros_like(W), np.zeros_like(b)) for W, b in layers]
    best_loss = np.inf
    best_layers = [(W.copy(), b.copy()) for W, b in layers]
    stale = 0
    n = X.shape[0]
    for _ in range(max_epochs):
        order = rng.permutation(n)
        for start in range(0, n, batch):
            idx = order[start : start + batch]
            grads = mlp_gradients(model, X[idx], y[idx], train_mode=True, rng=rng)
            for i, ((gW, gb), (vW, vb)) in enumerate(zip(grads, velocity)):
                vW *= momentum
                vW -= lr * gW
                vb *= momentum
                vb -= lr * gb
                model.layers[i][0][...] += vW
                model.layers[i][1][...] += vb
        val_loss = mlp_loss(model, Xv, yv)
        if not np.isfinite(val_loss) or not all(
            np.isfinite(W).all() and np.isfinite(b).all() for W, b in model.layers
        ):
            raise DivergenceError(
                f"training diverged (non-finite loss or parameters); try a smaller lr than {lr}"
            )
        if log is not None:
            log.epochs.append((mlp_loss(model, X, y), val_loss))
        if val_loss < best_loss:
            best_loss = val_loss
            best_layers = [(W.copy(), b.copy()) for W, b in model.layers]
            stale = 0
        else:
            stale += 1
            if stale >= patience:
                break
    return MlpModel(best_layers, codec, dropout)


def predict(model: LinearModel | MlpModel, vector: SparseVector) -> Prediction:
    """Softmax prediction with max-logit subtraction for stability."""
    if vector.dim != model.dim:
        raise DataError(f"vector dim {vector.dim} does not match model dim {model.dim}")
    if isinstance(model, LinearModel):
        if vector.nnz:
            logits = model.W[:, vector.indices] @ vector.values + model.b
        else:
            logits = model.b.copy()
    else:
        dense = vector.to_dense()[None, :]
        logits = mlp_forward(model, dense)[0][0]
    dist = softmax(logits)
    intent_id = int(np.argmax(dist))
    return Prediction(intent_id, float(dist[intent_id]), dist)


def confusion_matrix(y_true: list[int], y_pred: list[int], k: int) -> np.ndarray:
    cm = np.zeros((k, k), dtype=np.int64)
    for t, p in zip(y_true, y_pred):
        cm[t, p] += 1
    return cm


def metrics_from_confusion(cm: np.ndarray, codec: LabelCodec) -> Metrics:
    """Accuracy, weighted and macro F1 from a confusion matrix.

    Per-class F1 is defined as 0 when precision + recall is 0.
    """
    k = cm.shape[0]
    total = int(cm.sum())
    accuracy = float(np.trace(cm)) / total if total else 0.0
    per_class: list[ClassMetrics] = []
    for c in range(k):
        tp = float(cm[c, c])
        fp = float(cm[:, c].sum() - cm[c, c])
        fn = float(cm[c, :].sum() - cm[c, c])
        precision = tp / (tp + fp) if tp + fp > 0 else 0.0
        recall = tp / (tp + fn) if tp + fn > 0 else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
        per_class.append(ClassMetrics(codec.decode(c), precision, recall, f1, int(cm[c, :].sum())))
    supports = np.array([m.support for m in per_class], dtype=np.float64)
    f1s = np.array([m.f1 for m in per_class])
    weighted = float((supports / supports.sum()) @ f1s) if supports.sum() else 0.0
    macro = float(f1s.mean())
    return Metrics(accuracy, weighted, macro, tuple(per_class))


def evaluate(
    model: LinearModel | MlpModel,
    test: tuple[list[SparseVector], list[int]],
    codec: LabelCodec,
) -> Metrics:
    if not test[0]:
        raise DataError("cannot evaluate on an empty test set")
    y_pred = [predict(model, v).intent_id for v in test[0]]
    cm = confusion_matrix(list(test[1]), y_pred, codec.num_classes)
    return metrics_from_confusion(cm, codec)


def save_linear(model: LinearModel, path: str | Path) -> None:
    with open(path, "wb") as fh:
        fh.write(_LR_MAGIC)
        fh.write(struct.pack("<IId", model.num_classes, model.dim, model.l2))
        fh.write(np.ascontiguousarray(model.W, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(model.b, dtype="<f8").tobytes())


def load_linear(path: str | Path, codec: LabelCodec) -> LinearModel:
    data = Path(path).read_bytes()
    if data[:4] != _LR_MAGIC:
        raise IndexFormatError(f"{path}: bad magic at offset 0 (not a linear model)")
    k, dim, l2 = struct.unpack_from("<IId", data, 4)
    offset = 4 + struct.calcsize("<IId")
    expected = offset + 8 * (k * dim + k)
    if len(data) != expected:
        raise IndexFormatError(f"{path}: expected {expected} bytes, found {len(data)}")
    W = np.frombuffer(data, dtype="<f8", count=k * dim, offset=offset).reshape(k, dim).copy()
    b = np.frombuffer(data, dtype="<f8", count=k, offset=offset + 8 * k * dim).copy()
    if k != codec.num_classes:
        raise IndexFormatError(f"{path}: model has {k} classes, codec has {codec.num_classes}")
    return LinearModel(W, b, codec, float(l2))


def save_mlp(model: MlpModel, path: str | Path) -> None:
    sizes = [model.dim] + [W.shape[0] for W, _ in model.layers]
    with open(path, "wb") as fh:
        fh.write(_MLP_MAGIC)
        fh.write(struct.pack("<IIIId", *sizes, model.dropout))
        for W, b in model.layers:
            fh.write(np.ascontiguousarray(W, dtype="<f8").tobytes())
            fh.write(np.ascontiguousarray(b, dtype="<f8").tobytes())


def load_mlp(path: str | Path, codec: LabelCodec) -> MlpModel:
    data = Path(path).read_bytes()
    if data[:4] != _MLP_MAGIC:
        raise IndexFormatError(f"{path}: bad magic at offset 0 (not an MLP model)")
    v, h1, h2, k, dropout = struct.unpack_from("<IIIId", data, 4)
    offset = 4 + struct.calcsize("<IIIId")
    sizes = [v, h1, h2, k]
    layers = []
    for i in range(3):
        fan_out, fan_in = sizes[i + 1], sizes[i]
        need = 8 * (fan_out * fan_in + fan_out)
        if offset + need > len(data):
            raise IndexFormatError(f"{path}: truncated at offset {offset}")
        W = np.frombuffer(data, dtype="<f8", count=fan_out * fan_in, offset=offset)
        offset += 8 * fan_out * fan_in
        b = np.frombuffer(data, dtype="<f8", count=fan_out, offset=offset)
        offset += 8 * fan_out
        layers.append((W.reshape(fan_out, fan_in).copy(), b.copy()))
    if offset != len(data):
        raise IndexFormatError(f"{path}: {len(data) - offset} trailing bytes at offset {offset}")
    if k != codec.num_classes:
        raise IndexFormatError(f"{path}: model has {k} classes, codec has {codec.num_classes}")
    return MlpModel(layers, codec, float(dropout))
