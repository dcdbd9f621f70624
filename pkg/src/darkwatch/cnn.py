"""A one-convolution network: conv -> relu -> 2x2 max-pool -> dense -> softmax.

Tensors are channels-last: a batch has shape ``(n, height, width, channels)``
and convolution kernels have shape ``(k, k, in_channels, out_channels)``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import BadLabel, DivergenceDetected, EmptyDataset, ParameterError, ShapeMismatch

log = logging.getLogger(__name__)

CNN_VERSION = "darkwatch-cnn/1"
PARAM_NAMES = ("conv_w", "conv_b", "dense_w", "dense_b")


@dataclass(frozen=True)
class NetSpec:
    input_shape: tuple[int, int, int]
    n_kernels: int = 4
    kernel_size: int = 3
    n_classes: int = 2

    def __post_init__(self):
        object.__setattr__(self, "input_shape", tuple(int(v) for v in self.input_shape))
        h, w, c = self.input_shape
        if min(h, w, c, self.n_kernels, self.kernel_size) < 1 or self.n_classes < 2:
            raise ParameterError(f"invalid network spec {self}")
        if self.kernel_size > min(h, w):
            raise ShapeMismatch(f"kernel {self.kernel_size} larger than input {h}x{w}")
        if min(self.conv_shape[:2]) < 2:
            raise ShapeMismatch("convolution output too small to pool")

    @property
    def conv_shape(self) -> tuple[int, int, int]:
        h, w, _ = self.input_shape
        k = self.kernel_size
        return (h - k + 1, w - k + 1, self.n_kernels)

    @property
    def pool_shape(self) -> tuple[int, int, int]:
        ch, cw, o = self.conv_shape
        return (ch // 2, cw // 2, o)

    @property
    def flat_size(self) -> int:
        return int(np.prod(self.pool_shape))

    def param_shapes(self) -> dict[str, tuple[int, ...]]:
        k, c = self.kernel_size, self.input_shape[2]
        return {
            "conv_w": (k, k, c, self.n_kernels),
            "conv_b": (self.n_kernels,),
            "dense_w": (self.flat_size, self.n_classes),
            "dense_b": (self.n_classes,),
        }


@dataclass(frozen=True)
class CnnTrainConfig:
    learning_rate: float = 0.05
    epochs: int = 200
    batch_size: int = 16
    seed: int = 0

    def __post_init__(self):
        if not self.learning_rate > 0 or self.epochs < 1 or self.batch_size < 1:
            raise ParameterError(f"invalid training config {self}")


@dataclass(frozen=True, eq=False)
class CnnNetwork:
    spec: NetSpec
    params: dict
    seed: int = 0

    def __post_init__(self):
        shapes = self.spec.param_shapes()
        params = {}
        for name in PARAM_NAMES:
            arr = np.array(self.params[name], dtype=float)
            if arr.shape != shapes[name]:
                raise ShapeMismatch(f"{name} has shape {arr.shape}, expected {shapes[name]}")
            if not np.all(np.isfinite(arr)):
                raise DivergenceDetected(f"{name} contains non-finite values")
            arr.setflags(write=False)
            params[name] = arr
        object.__setattr__(self, "params", params)

    @property
    def layers(self) -> list[dict]:
        p = self.params
        return [
            {"type": "conv", "kernels": p["conv_w"].tolist(), "bias": p["conv_b"].tolist(), "stride": 1},
            {"type": "relu"},
            {"type": "maxpool", "size": 2, "stride": 2},
            {"type": "flatten"},
            {"type": "dense", "weights": p["dense_w"].tolist(), "bias": p["dense_b"].tolist()},
            {"type": "softmax"},
        ]

    def to_dict(self) -> dict:
        return {
            "version": CNN_VERSION,
            "spec": asdict(self.spec) | {"input_shape": list(self.spec.input_shape)},
            "input_shape": list(self.spec.input_shape),
            "layers": self.layers,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "CnnNetwork":
        if doc.get("version") != CNN_VERSION:
            raise ShapeMismatch(f"unsupported network version {doc.get('version')!r}")
        spec = NetSpec(**doc["spec"])
        by_type = {layer["type"]: layer for layer in doc["layers"]}
        params = {
            "conv_w": by_type["conv"]["kernels"],
            "conv_b": by_type["conv"]["bias"],
            "dense_w": by_type["dense"]["weights"],
            "dense_b": by_type["dense"]["bias"],
        }
        return cls(spec, params, int(doc.get("seed", 0)))


def init_network(spec: NetSpec, seed: int = 0) -> CnnNetwork:
    """Weights uniform on ``(-1, 1) / sqrt(fan_in)``; biases start at zero."""
    rng = np.random.default_rng(seed)
    k, c = spec.kernel_size, spec.input_shape[2]
    shapes = spec.param_shapes()
    params = {
        "conv_w": rng.uniform(-1.0, 1.0, shapes["conv_w"]) / math.sqrt(k * k * c),
        "conv_b": np.zeros(shapes["conv_b"]),
        "dense_w": rng.uniform(-1.0, 1.0, shapes["dense_w"]) / math.sqrt(spec.flat_size),
        "dense_b": np.zeros(shapes["dense_b"]),
    }
    return CnnNetwork(spec, params, seed)


def zero_network(spec: NetSpec) -> CnnNetwork:
    return CnnNetwork(spec, {n: np.zeros(s) for n, s in spec.param_shapes().items()})


def _as_batch(spec: NetSpec, batch) -> np.ndarray:
    x = np.asarray(batch, dtype=float)
    h, w, c = spec.input_shape
    if x.ndim == 3 and c == 1:
        x = x[..., None]
    if x.ndim != 4 or x.shape[1:] != (h, w, c):
        raise ShapeMismatch(f"batch shape {x.shape} does not match input {spec.input_shape}")
    return x


def conv2d_valid(x: np.ndarray, kernels: np.ndarray, bias: np.ndarray) -> np.ndarray:
    k = kernels.shape[0]
    win = sliding_window_view(x, (k, k), axis=(1, 2))  # (n, oh, ow, c, k, k)
    return np.tensordot(win, kernels.transpose(2, 0, 1, 3), axes=([3, 4, 5], [0, 1, 2])) + bias


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def forward(net: CnnNetwork, batch):
    """Class probabilities for ``batch`` plus the activations needed for backprop."""
    p = net.params
    x = _as_batch(net.spec, batch)
    n = x.shape[0]
    z = conv2d_valid(x, p["conv_w"], p["conv_b"])
    a = np.maximum(z, 0.0)
    ph, pw, o = net.spec.pool_shape
    cropped = a[:, :2 * ph, :2 * pw, :]
    windows = cropped.reshape(n, ph, 2, pw, 2, o).transpose(0, 1, 3, 5, 2, 4).reshape(n, ph, pw, o, 4)
    # argmax returns the first maximum, i.e. row-major tie-breaking inside each window
    arg = windows.argmax(axis=-1)
    pooled = np.take_along_axis(windows, arg[..., None], axis=-1)[..., 0]
    flat = pooled.reshape(n, -1)
    logits = flat @ p["dense_w"] + p["dense_b"]
    probs = softmax(logits)
    cache = {"x": x, "z": z, "arg": arg, "flat": flat, "logits": logits}
    return probs, cache


def _check_labels(net: CnnNetwork, labels, n: int) -> np.ndarray:
    y = np.asarray(labels).reshape(-1)
    if y.shape[0] != n:
        raise ShapeMismatch(f"{n} samples but {y.shape[0]} labels")
    if not np.all((y >= 0) & (y < net.spec.n_classes) & (y == np.floor(y))):
        raise BadLabel(f"labels must be integers in [0, {net.spec.n_classes})")
    return y.astype(np.int64)


def loss_gradients(net: CnnNetwork, batch, labels):
    """Mean softmax cross-entropy and its gradient for every parameter tensor."""
    probs, cache = forward(net, batch)
    p = net.params
    n = probs.shape[0]
    y = _check_labels(net, labels, n)
    logits = cache["logits"]
    shifted = logits - logits.max(axis=1, keepdims=True)
    log_probs = shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    loss = float(-log_probs[np.arange(n), y].mean())

    dlogits = probs.copy()
    dlogits[np.arange(n), y] -= 1.0
    dlogits /= n
    grads = {
        "dense_w": cache["flat"].T @ dlogits,
        "dense_b": dlogits.sum(axis=0),
    }
    ph, pw, o = net.spec.pool_shape
    dpooled = (dlogits @ p["dense_w"].T).reshape(n, ph, pw, o)
    dwin = np.zeros((n, ph, pw, o, 4))
    np.put_along_axis(dwin, cache["arg"][..., None], dpooled[..., None], axis=-1)
    da = np.zeros_like(cache["z"])
    da[:, :2 * ph, :2 * pw, :] = (
        dwin.reshape(n, ph, pw, o, 2, 2).transpose(0, 1, 4, 2, 5, 3).reshape(n, 2 * ph, 2 * pw, o)
    )
    dz = da * (cache["z"] > 0.0)
    k = net.spec.kernel_size
    win = sliding_window_view(cache["x"], (k, k), axis=(1, 2))  # (n, oh, ow, c, k, k)
    dw = np.tensordot(win, dz, axes=([0, 1, 2], [0, 1, 2]))  # (c, k, k, o)
    grads["conv_w"] = dw.transpose(1, 2, 0, 3)
    grads["conv_b"] = dz.sum(axis=(0, 1, 2))
    return loss, grads


def predict_proba(net: CnnNetwork, batch) -> np.ndarray:
    return forward(net, batch)[0]


def predict_classes(net: CnnNetwork, batch) -> np.ndarray:
    return predict_proba(net, batch).argmax(axis=1)


def train_cnn(images, labels, spec: NetSpec, config: CnnTrainConfig = CnnTrainConfig()):
    """Mini-batch gradient descent with a seeded shuffle each epoch.

    Returns ``(network, history)`` where ``history[e]`` is the sample-weighted
    mean batch loss of epoch ``e``.
    """
    x = np.asarray(images, dtype=float)
    if x.size == 0 or x.shape[0] == 0:
        raise EmptyDataset("no training images")
    net = init_network(spec, config.seed)
    x = _as_batch(spec, x)
    y = _check_labels(net, labels, x.shape[0])
    missing = sorted(set(range(spec.n_classes)) - set(y.tolist()))
    if missing:
        log.warning("classes %s have no training samples", missing)

    rng = np.random.default_rng(config.seed + 1)
    params = {k: v.copy() for k, v in net.params.items()}
    n = x.shape[0]
    history = []
    for epoch in range(config.epochs):
        order = rng.permutation(n)
        total = 0.0
        for start in range(0, n, config.batch_size):
            idx = order[start:start + config.batch_size]
            current = CnnNetwork(spec, params, config.seed)
            with np.errstate(over="ignore", invalid="ignore"):
                loss, grads = loss_gradients(current, x[idx], y[idx])
            if not math.isfinite(loss):
                raise DivergenceDetected(f"cnn loss became {loss} at epoch {epoch}")
            total += loss * idx.size
            for name in PARAM_NAMES:
                params[name] = params[name] - config.learning_rate * grads[name]
        history.append(total / n)
    trained = CnnNetwork(spec, params, config.seed)
    return trained, history
