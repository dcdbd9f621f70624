"""Logistic regression and primal linear SVM trained by full-batch gradient descent."""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import DimensionMismatch, DivergenceDetected, EmptyData, NonBinaryLabel, ParameterError

log = logging.getLogger(__name__)

KINDS = ("logistic", "svm")
MODEL_VERSION = "darkwatch-model/1"


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.1
    epochs: int = 2000
    l2_strength: float = 1e-4  # logistic
    svm_lambda: float = 1e-2
    tolerance: float = 1e-9
    seed: int = 0  # reserved; initialization is deterministic zeros

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ParameterError(f"learning_rate must be > 0, got {self.learning_rate}")
        if int(self.epochs) != self.epochs or self.epochs < 1:
            raise ParameterError(f"epochs must be a positive integer, got {self.epochs}")
        if self.l2_strength < 0:
            raise ParameterError("l2_strength must be >= 0")
        if self.tolerance < 0:
            raise ParameterError("tolerance must be >= 0")


@dataclass(frozen=True, eq=False)
class LinearModel:
    kind: str
    weights: np.ndarray
    bias: float
    config_echo: TrainConfig
    history: tuple[float, ...]
    column_names: tuple[str, ...] = ()
    encoders: dict = field(default_factory=dict)
    scaling: dict = field(default_factory=dict)
    notes: tuple[str, ...] = ()

    def decision_function(self, features) -> np.ndarray:
        x = _as_matrix(features)
        if x.shape[1] != self.weights.shape[0]:
            raise DimensionMismatch(
                f"model expects {self.weights.shape[0]} features, got {x.shape[1]}"
            )
        return x @ self.weights + self.bias

    def to_dict(self) -> dict:
        return {
            "version": MODEL_VERSION,
            "kind": self.kind,
            "weights": [float(w) for w in self.weights],
            "bias": float(self.bias),
            "column_names": list(self.column_names),
            "encoders": {k: list(v) for k, v in self.encoders.items()},
            "scaling": {k: list(v) for k, v in self.scaling.items()},
            "config_echo": asdict(self.config_echo),
            "history": [float(h) for h in self.history],
            "notes": list(self.notes),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "LinearModel":
        if doc.get("version") != MODEL_VERSION:
            raise DimensionMismatch(f"unsupported model version {doc.get('version')!r}")
        if doc["kind"] not in KINDS:
            raise DimensionMismatch(f"unknown model kind {doc['kind']!r}")
        return cls(
            kind=doc["kind"],
            weights=np.array(doc["weights"], dtype=float),
            bias=float(doc["bias"]),
            config_echo=TrainConfig(**doc["config_echo"]),
            history=tuple(doc["history"]),
            column_names=tuple(doc.get("column_names", ())),
            encoders={k: tuple(v) for k, v in doc.get("encoders", {}).items()},
            scaling={k: tuple(v) for k, v in doc.get("scaling", {}).items()},
            notes=tuple(doc.get("notes", ())),
        )


def _as_matrix(features) -> np.ndarray:
    x = np.asarray(features, dtype=float)
    if x.ndim == 1:
        x = x.reshape(1, -1)
    if x.ndim != 2:
        raise DimensionMismatch(f"features must be 2-D, got shape {x.shape}")
    return x


def _check(weights, features, labels):
    w = np.asarray(weights, dtype=float).reshape(-1)
    x = _as_matrix(features)
    y = np.asarray(labels).reshape(-1)
    if x.shape[1] != w.shape[0]:
        raise DimensionMismatch(f"{x.shape[1]} feature columns but {w.shape[0]} weights")
    if x.shape[0] != y.shape[0]:
        raise DimensionMismatch(f"{x.shape[0]} rows but {y.shape[0]} labels")
    if x.shape[0] == 0:
        raise EmptyData("no rows")
    if not np.all((y == 0) | (y == 1)):
        raise NonBinaryLabel("labels must be 0 or 1")
    return w, x, y.astype(float)


def sigmoid(z):
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def logistic_loss_grad(weights, bias, features, labels, l2=0.0):
    """Mean cross-entropy plus ``l2/2 * ||w||^2`` and its exact gradient.

    Returns ``(loss, grad_w, grad_b)``.
    """
    w, x, y = _check(weights, features, labels)
    z = x @ w + bias
    # -log(sigmoid(z)) = logaddexp(0, -z); -log(1 - sigmoid(z)) = logaddexp(0, z)
    nll = y * np.logaddexp(0.0, -z) + (1.0 - y) * np.logaddexp(0.0, z)
    loss = nll.mean() + 0.5 * l2 * float(w @ w)
    resid = (sigmoid(z) - y) / x.shape[0]
    return float(loss), x.T @ resid + l2 * w, float(resid.sum())


def svm_loss_grad(weights, bias, features, labels, lam=1e-2):
    """Hinge loss with ``lam/2 * ||w||^2``; subgradient 0 where the margin is exactly 1."""
    w, x, y = _check(weights, features, labels)
    ys = 2.0 * y - 1.0
    margin = ys * (x @ w + bias)
    hinge = np.maximum(0.0, 1.0 - margin)
    loss = 0.5 * lam * float(w @ w) + hinge.mean()
    active = (margin < 1.0).astype(float) * ys / x.shape[0]
    return float(loss), lam * w - x.T @ active, float(-active.sum())


def loss_grad(kind: str, weights, bias, features, labels, config: TrainConfig):
    if kind == "logistic":
        return logistic_loss_grad(weights, bias, features, labels, config.l2_strength)
    if kind == "svm":
        return svm_loss_grad(weights, bias, features, labels, config.svm_lambda)
    raise ParameterError(f"kind must be one of {KINDS}, got {kind!r}")


def train(data, kind: str, config: TrainConfig = TrainConfig()) -> LinearModel:
    """Full-batch gradient descent from the zero model.

    ``data`` is an :class:`~darkwatch.dataset.EncodedDataset` or any object
    with ``features`` and ``labels``. Stops after ``config.epochs`` steps or
    once successive losses differ by less than ``config.tolerance``.
    """
    if kind not in KINDS:
        raise ParameterError(f"kind must be one of {KINDS}, got {kind!r}")
    if kind == "svm" and not config.svm_lambda > 0:
        raise ParameterError("svm_lambda must be > 0")
    x = _as_matrix(data.features)
    y = np.asarray(data.labels)
    if x.shape[0] < 2:
        raise EmptyData(f"need at least 2 rows to train, got {x.shape[0]}")

    notes = []
    if len(np.unique(y)) < 2:
        notes.append("single-class training data")
        log.warning("training %s on single-class data", kind)

    w = np.zeros(x.shape[1])
    b = 0.0
    history = []
    for epoch in range(config.epochs):
        with np.errstate(over="ignore", invalid="ignore"):
            loss, gw, gb = loss_grad(kind, w, b, x, y, config)
            if not math.isfinite(loss):
                raise DivergenceDetected(f"{kind} loss became {loss} at epoch {epoch}")
            history.append(loss)
            if len(history) > 1 and abs(history[-1] - history[-2]) < config.tolerance:
                break
            w = w - config.learning_rate * gw
            b = b - config.learning_rate * gb
        if not (np.all(np.isfinite(w)) and math.isfinite(b)):
            raise DivergenceDetected(f"{kind} parameters became non-finite at epoch {epoch}")

    return LinearModel(
        kind=kind,
        weights=w,
        bias=float(b),
        config_echo=config,
        history=tuple(history),
        column_names=tuple(getattr(data, "column_names", ())),
        encoders=dict(getattr(data, "encoders", {}) or {}),
        scaling=dict(getattr(data, "scaling", {}) or {}),
        notes=tuple(notes),
    )


def predict(model: LinearModel, features, threshold: float = 0.5):
    """Return ``(labels, scores)``.

    Logistic scores are probabilities and a row is positive when its score is
    at least ``threshold``. SVM scores are raw margins, positive when >= 0.
    """
    z = model.decision_function(features)
    if model.kind == "logistic":
        scores = sigmoid(z)
        return (scores >= threshold).astype(np.int64), scores
    return (z >= 0.0).astype(np.int64), z
