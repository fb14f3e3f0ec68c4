"""Trainable gesture classifier on normalized landmark features.

A single-hidden-layer feedforward net (63 -> H -> 5, relu, softmax) trained
with plain mini-batch SGD on cross-entropy, early-stopped on validation
loss. Everything is seeded and bit-reproducible.
"""

from __future__ import annotations

import enum
import json
import struct
from dataclasses import dataclass, field

import numpy as np

INPUT_DIM = 63
MODEL_MAGIC = b"HLMODEL1"


class GestureClass(enum.Enum):
    """The five recognized gestures plus the absence marker.

    Enum values double as wire names. NO_GESTURE is never a classifier
    output class; it is assigned downstream by thresholding/absence logic.
    """

    FIST = "fist"
    OK = "ok"
    STOP = "stop"
    TWO_UP = "two_up"
    PEACE = "peace"
    NO_GESTURE = "none"


# Fixed classifier output order; index into probability vectors.
CLASS_ORDER: tuple[GestureClass, ...] = (
    GestureClass.FIST,
    GestureClass.OK,
    GestureClass.STOP,
    GestureClass.TWO_UP,
    GestureClass.PEACE,
)

NUM_CLASSES = len(CLASS_ORDER)


def class_index(gesture: GestureClass) -> int:
    return CLASS_ORDER.index(gesture)


class ShapeMismatch(ValueError):
    pass


class InsufficientData(ValueError):
    pass


class NonFiniteLoss(RuntimeError):
    """Training diverged; usually the learning rate is too large."""


class EmptyDataset(ValueError):
    pass


@dataclass
class TrainingConfig:
    batch_size: int = 64
    learning_rate: float = 1e-3
    max_epochs: int = 100
    patience: int = 5
    seed: int = 0
    optimizer: str = "sgd"

    def __post_init__(self):
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.patience < 1:
            raise ValueError("patience must be >= 1")
        if self.max_epochs < 1:
            raise ValueError("max_epochs must be >= 1")
        if self.optimizer != "sgd":
            raise ValueError(f"unsupported optimizer {self.optimizer!r}")


@dataclass
class LandmarkClassifier:
    """Weights of the 63 -> hidden -> 5 net, in row-major float64 arrays."""

    w1: np.ndarray  # (hidden, 63)
    b1: np.ndarray  # (hidden,)
    w2: np.ndarray  # (5, hidden)
    b2: np.ndarray  # (5,)
    classes: tuple[GestureClass, ...] = CLASS_ORDER

    def __post_init__(self):
        self.w1 = np.asarray(self.w1, dtype=np.float64)
        self.b1 = np.asarray(self.b1, dtype=np.float64)
        self.w2 = np.asarray(self.w2, dtype=np.float64)
        self.b2 = np.asarray(self.b2, dtype=np.float64)
        h = self.w1.shape[0]
        if (
            self.w1.shape != (h, INPUT_DIM)
            or self.b1.shape != (h,)
            or self.w2.shape != (NUM_CLASSES, h)
            or self.b2.shape != (NUM_CLASSES,)
        ):
            raise ShapeMismatch(
                f"inconsistent layer shapes: {self.w1.shape} {self.b1.shape} "
                f"{self.w2.shape} {self.b2.shape}"
            )

    @property
    def hidden_dim(self) -> int:
        return self.w1.shape[0]

    @classmethod
    def init_random(cls, hidden_dim: int = 64, seed: int = 0) -> "LandmarkClassifier":
        """Glorot-uniform init (+-sqrt(6/(fan_in+fan_out))), seeded."""
        rng = np.random.default_rng(seed)
        lim1 = np.sqrt(6.0 / (INPUT_DIM + hidden_dim))
        lim2 = np.sqrt(6.0 / (hidden_dim + NUM_CLASSES))
        return cls(
            w1=rng.uniform(-lim1, lim1, size=(hidden_dim, INPUT_DIM)),
            b1=np.zeros(hidden_dim),
            w2=rng.uniform(-lim2, lim2, size=(NUM_CLASSES, hidden_dim)),
            b2=np.zeros(NUM_CLASSES),
        )

    def copy(self) -> "LandmarkClassifier":
        return LandmarkClassifier(
            self.w1.copy(), self.b1.copy(), self.w2.copy(), self.b2.copy(), self.classes
        )

    def predict(self, features: np.ndarray) -> np.ndarray:
        """Probability vector over the five classes for one feature vector."""
        x = np.asarray(features, dtype=np.float64)
        if x.shape != (INPUT_DIM,):
            raise ShapeMismatch(f"expected ({INPUT_DIM},) features, got {x.shape}")
        return self.predict_batch(x[None, :])[0]

    def predict_batch(self, features: np.ndarray) -> np.ndarray:
        """(n, 63) -> (n, 5) softmax probabilities."""
        x = np.asarray(features, dtype=np.float64)
        if x.ndim != 2 or x.shape[1] != INPUT_DIM:
            raise ShapeMismatch(f"expected (n, {INPUT_DIM}) features, got {x.shape}")
        hidden = np.maximum(x @ self.w1.T + self.b1, 0.0)
        logits = hidden @ self.w2.T + self.b2
        logits -= logits.max(axis=1, keepdims=True)
        exp = np.exp(logits)
        return exp / exp.sum(axis=1, keepdims=True)

    def save(self, path) -> None:
        """Versioned binary format; see module docs for the byte layout."""
        header = json.dumps(
            {
                "classes": [g.value for g in self.classes],
                "input_dim": INPUT_DIM,
                "hidden_dim": self.hidden_dim,
                "output_dim": NUM_CLASSES,
            },
            sort_keys=True,
        ).encode("utf-8")
        with open(path, "wb") as fh:
            fh.write(MODEL_MAGIC)
            fh.write(struct.pack("<I", len(header)))
            fh.write(header)
            for arr in (self.w1, self.b1, self.w2, self.b2):
                fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())

    @classmethod
    def load(cls, path) -> "LandmarkClassifier":
        with open(path, "rb") as fh:
            blob = fh.read()
        if blob[:8] != MODEL_MAGIC:
            raise ValueError("not a model file (bad magic)")
        (header_len,) = struct.unpack("<I", blob[8:12])
        header = json.loads(blob[12 : 12 + header_len].decode("utf-8"))
        h = header["hidden_dim"]
        if header["input_dim"] != INPUT_DIM or header["output_dim"] != NUM_CLASSES:
            raise ValueError("model dimensions do not match this build")
        classes = tuple(GestureClass(name) for name in header["classes"])
        offset = 12 + header_len
        shapes = [(h, INPUT_DIM), (h,), (NUM_CLASSES, h), (NUM_CLASSES,)]
        arrays = []
        for shape in shapes:
            count = int(np.prod(shape))
            arrays.append(
                np.frombuffer(blob, dtype="<f8", count=count, offset=offset)
                .reshape(shape)
                .astype(np.float64)
            )
            offset += count * 8
        return cls(*arrays, classes=classes)


def _cross_entropy(probs: np.ndarray, labels: np.ndarray) -> float:
    # clip keeps log finite; divergence is caught by the NonFiniteLoss check
    p = np.clip(probs[np.arange(len(labels)), labels], 1e-300, None)
    return float(-np.mean(np.log(p)))


def loss_and_gradients(model: LandmarkClassifier, x: np.ndarray, y: np.ndarray):
    """Mean cross-entropy over a batch and its analytic parameter gradients."""
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    y = np.atleast_1d(np.asarray(y, dtype=np.int64))
    n = len(y)
    pre = x @ model.w1.T + model.b1
    hidden = np.maximum(pre, 0.0)
    logits = hidden @ model.w2.T + model.b2
    logits_shifted = logits - logits.max(axis=1, keepdims=True)
    exp = np.exp(logits_shifted)
    probs = exp / exp.sum(axis=1, keepdims=True)
    loss = _cross_entropy(probs, y)

    dlogits = probs.copy()
    dlogits[np.arange(n), y] -= 1.0
    dlogits /= n
    grad_w2 = dlogits.T @ hidden
    grad_b2 = dlogits.sum(axis=0)
    dhidden = dlogits @ model.w2
    dpre = dhidden * (pre > 0.0)
    grad_w1 = dpre.T @ x
    grad_b1 = dpre.sum(axis=0)
    return loss, (grad_w1, grad_b1, grad_w2, grad_b2)


def train(
    features: np.ndarray,
    labels: np.ndarray,
    config: TrainingConfig | None = None,
    val_data: tuple[np.ndarray, np.ndarray] | None = None,
    val_fraction: float = 0.15,
    hidden_dim: int = 64,
):
    """Mini-batch SGD with early stopping on validation cross-entropy.

    When val_data is not supplied, a seeded random val_fraction split is
    taken from the input. Returns (model, history) where history holds the
    per-epoch train and validation losses; the returned weights are those
    of the best validation epoch.
    """
    config = config or TrainingConfig()
    x = np.asarray(features, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    if x.ndim != 2 or x.shape[1] != INPUT_DIM or len(x) != len(y):
        raise ShapeMismatch(f"bad dataset shapes {x.shape} / {y.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError("features must be finite")

    rng = np.random.default_rng(config.seed)
    if val_data is None:
        perm = rng.permutation(len(x))
        n_val = max(1, int(round(len(x) * val_fraction)))
        val_idx, train_idx = perm[:n_val], perm[n_val:]
        x_train, y_train = x[train_idx], y[train_idx]
        x_val, y_val = x[val_idx], y[val_idx]
    else:
        x_train, y_train = x, y
        x_val = np.asarray(val_data[0], dtype=np.float64)
        y_val = np.asarray(val_data[1], dtype=np.int64)

    if len(np.unique(y_train)) < 2:
        raise InsufficientData("need at least 2 distinct labels in the train split")

    model = LandmarkClassifier.init_random(hidden_dim=hidden_dim, seed=config.seed)
    best = model.copy()
    best_val = np.inf
    epochs_since_improvement = 0
    history = {"train_loss": [], "val_loss": []}

    for _ in range(config.max_epochs):
        order = rng.permutation(len(x_train))
        epoch_loss = 0.0
        for start in range(0, len(order), config.batch_size):
            batch = order[start : start + config.batch_size]
            loss, (gw1, gb1, gw2, gb2) = loss_and_gradients(model, x_train[batch], y_train[batch])
            if not np.isfinite(loss):
                raise NonFiniteLoss(f"training loss became {loss}")
            lr = config.learning_rate
            model.w1 -= lr * gw1
            model.b1 -= lr * gb1
            model.w2 -= lr * gw2
            model.b2 -= lr * gb2
            epoch_loss += loss * len(batch)
        history["train_loss"].append(epoch_loss / len(x_train))

        val_loss = _cross_entropy(model.predict_batch(x_val), y_val)
        if not np.isfinite(val_loss):
            raise NonFiniteLoss(f"validation loss became {val_loss}")
        history["val_loss"].append(val_loss)

        if val_loss < best_val:
            best_val = val_loss
            best = model.copy()
            epochs_since_improvement = 0
        else:
            epochs_since_improvement += 1
            if epochs_since_improvement >= config.patience:
                break

    return best, history


def gradient_check(
    model: LandmarkClassifier,
    features: np.ndarray,
    label: int,
    epsilon: float = 1e-5,
) -> float:
    """Max relative error between analytic and central-difference gradients."""
    if not 0 < epsilon <= 1e-2:
        raise ValueError("epsilon must be in (0, 1e-2]")
    x = np.asarray(features, dtype=np.float64)
    _, analytic = loss_and_gradients(model, x, np.array([label]))
    params = [model.w1, model.b1, model.w2, model.b2]
    worst = 0.0
    for arr, grad in zip(params, analytic):
        flat = arr.reshape(-1)
        grad_flat = grad.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + epsilon
            loss_plus, _ = loss_and_gradients(model, x, np.array([label]))
            flat[i] = orig - epsilon
            loss_minus, _ = loss_and_gradients(model, x, np.array([label]))
            flat[i] = orig
            numeric = (loss_plus - loss_minus) / (2.0 * epsilon)
            denom = max(abs(grad_flat[i]), abs(numeric), 1e-8)
            worst = max(worst, abs(grad_flat[i] - numeric) / denom)
    return worst


@dataclass
class EvaluationReport:
    precision: list[float]
    recall: list[float]
    f1: list[float]
    macro_f1: float
    confusion: np.ndarray  # (5, 5) counts, rows = true, cols = predicted
    n_samples: int
    classes: tuple[GestureClass, ...] = CLASS_ORDER

    def to_dict(self) -> dict:
        return {
            "classes": [g.value for g in self.classes],
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "macro_f1": self.macro_f1,
            "f1_average": "macro",
            "confusion": self.confusion.tolist(),
            "n_samples": self.n_samples,
        }


def evaluate(model: LandmarkClassifier, features: np.ndarray, labels: np.ndarray) -> EvaluationReport:
    """Per-class precision/recall/F1 and macro F1 from argmax predictions.

    Argmax ties break toward the lowest class index; a zero denominator
    yields 0 for the affected statistic.
    """
    x = np.asarray(features, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    if len(y) == 0:
        raise EmptyDataset("cannot evaluate on an empty dataset")
    predicted = np.argmax(model.predict_batch(x), axis=1)
    confusion = np.zeros((NUM_CLASSES, NUM_CLASSES), dtype=np.int64)
    for true, pred in zip(y, predicted):
        confusion[true, pred] += 1
    precision, recall, f1 = [], [], []
    for k in range(NUM_CLASSES):
        col = confusion[:, k].sum()
        row = confusion[k, :].sum()
        p = confusion[k, k] / col if col else 0.0
        r = confusion[k, k] / row if row else 0.0
        f = 2 * p * r / (p + r) if p + r else 0.0
        precision.append(float(p))
        recall.append(float(r))
        f1.append(float(f))
    return EvaluationReport(
        precision=precision,
        recall=recall,
        f1=f1,
        macro_f1=float(np.mean(f1)),
        confusion=confusion,
        n_samples=len(y),
    )
