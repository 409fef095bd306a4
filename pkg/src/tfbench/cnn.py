"""A small numpy CNN with the fixed layer stack used for the comparison.

Layer order (widths configurable, defaults shown)::

    rescale 1/255
    conv 16 3x3 + relu, maxpool 2x2
    conv 32 3x3 + relu, maxpool 2x2
    conv 64 3x3 + relu, maxpool 2x2
    flatten
    dense 128 + relu, dropout 0.25
    dense 256 + relu, dropout 0.25
    dense 2 + softmax

Convolutions use valid padding and stride 1; pooling is 2x2 with stride 2,
dropping an odd trailing row/column. Arrays are NHWC float64.
"""

from __future__ import annotations

import json
import math
import struct
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from tfbench.metrics import auc_trapezoid
from tfbench.seeds import derive_seed, make_rng

LOG_EPS = 1e-12
WEIGHTS_MAGIC = b"CNNW"


@dataclass(frozen=True)
class ModelConfig:
    input_height: int = 64
    input_width: int = 64
    input_channels: int = 3
    conv_filters: tuple[int, int, int] = (16, 32, 64)
    dense_units: tuple[int, int] = (128, 256)
    dropout_rate: float = 0.25
    n_classes: int = 2

    def __post_init__(self):
        object.__setattr__(self, "conv_filters", tuple(int(f) for f in self.conv_filters))
        object.__setattr__(self, "dense_units", tuple(int(u) for u in self.dense_units))
        if len(self.conv_filters) != 3 or len(self.dense_units) != 2:
            raise ValueError("the layer stack has exactly three conv stages and two hidden dense layers")
        if self.n_classes != 2:
            raise ValueError("the output layer has exactly 2 units")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ValueError("dropout_rate must be in [0, 1)")
        if self.input_channels != 3:
            raise ValueError("inputs are RGB images (3 channels)")

    def feature_shapes(self) -> list[tuple[int, int]]:
        """Spatial size after each conv and each pool, in order."""
        h, w = self.input_height, self.input_width
        shapes = []
        for _ in self.conv_filters:
            h, w = h - 2, w - 2
            shapes.append((h, w))
            h, w = h // 2, w // 2
            shapes.append((h, w))
        return shapes

    @property
    def flatten_size(self) -> int:
        h, w = self.feature_shapes()[-1]
        return h * w * self.conv_filters[-1]

    def layers(self) -> list[str]:
        f1, f2, f3 = self.conv_filters
        d1, d2 = self.dense_units
        r = self.dropout_rate
        return [
            "rescale(1/255)",
            f"conv2d({f1}, 3x3, relu)", "maxpool(2x2)",
            f"conv2d({f2}, 3x3, relu)", "maxpool(2x2)",
            f"conv2d({f3}, 3x3, relu)", "maxpool(2x2)",
            "flatten",
            f"dense({d1}, relu)", f"dropout({r})",
            f"dense({d2}, relu)", f"dropout({r})",
            f"dense({self.n_classes}, softmax)",
        ]

    def param_shapes(self) -> dict[str, tuple[int, ...]]:
        shapes: dict[str, tuple[int, ...]] = {}
        c_in = self.input_channels
        for i, f in enumerate(self.conv_filters):
            shapes[f"conv{i}.w"] = (3, 3, c_in, f)
            shapes[f"conv{i}.b"] = (f,)
            c_in = f
        n_in = self.flatten_size
        for i, u in enumerate((*self.dense_units, self.n_classes)):
            shapes[f"dense{i}.w"] = (n_in, u)
            shapes[f"dense{i}.b"] = (u,)
            n_in = u
        return shapes


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 20
    batch_size: int = 32
    learning_rate: float = 1e-3
    optimizer: str = "adam"
    seed: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-7

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")
        if self.optimizer not in ("adam", "sgd"):
            raise ValueError(f"unknown optimizer {self.optimizer!r}")


@dataclass
class Model:
    config: ModelConfig
    params: dict[str, np.ndarray]
    seed: int = 0

    def copy(self) -> "Model":
        return Model(self.config, {k: v.copy() for k, v in self.params.items()}, self.seed)

    def n_params(self) -> int:
        return sum(v.size for v in self.params.values())


@dataclass
class TrainReport:
    epoch_loss: list[float] = field(default_factory=list)
    val_auc: list[float | None] = field(default_factory=list)
    train_accuracy: float = float("nan")
    epochs_run: int = 0
    diverged: bool = False
    message: str = ""

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2) + "\n"


def build_model(config: ModelConfig, seed: int = 0) -> Model:
    """Glorot-uniform weights from a seeded PCG64 stream, zero biases."""
    for h, w in config.feature_shapes():
        if h < 1 or w < 1:
            raise ValueError(
                f"input {config.input_height}x{config.input_width} is too small for three "
                f"conv(3x3, valid) + maxpool(2x2) stages; spatial sizes {config.feature_shapes()}"
            )
    rng = make_rng(seed)
    params = {}
    for name, shape in config.param_shapes().items():
        if name.endswith(".b"):
            params[name] = np.zeros(shape)
            continue
        if len(shape) == 4:
            receptive = shape[0] * shape[1]
            fan_in, fan_out = receptive * shape[2], receptive * shape[3]
        else:
            fan_in, fan_out = shape
        limit = math.sqrt(6.0 / (fan_in + fan_out))
        params[name] = rng.uniform(-limit, limit, size=shape)
    return Model(config, params, seed)


# layer primitives ----------------------------------------------------------


def conv2d_forward(x: np.ndarray, w: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Valid 3x3 convolution (cross-correlation); returns output and im2col buffer."""
    bsz, h, wd, c = x.shape
    kh, kw, _, f = w.shape
    ho, wo = h - kh + 1, wd - kw + 1
    win = np.lib.stride_tricks.sliding_window_view(x, (kh, kw), axis=(1, 2))
    # (B, Ho, Wo, C, kh, kw) -> (B*Ho*Wo, kh*kw*C) in (kh, kw, C) order to match w
    cols = win.transpose(0, 1, 2, 4, 5, 3).reshape(bsz * ho * wo, kh * kw * c)
    out = cols @ w.reshape(kh * kw * c, f) + b
    return out.reshape(bsz, ho, wo, f), cols


def conv2d_backward(dout, x_shape, cols, w, need_dx: bool = True):
    bsz, h, wd, c = x_shape
    kh, kw, _, f = w.shape
    ho, wo = h - kh + 1, wd - kw + 1
    d2 = dout.reshape(-1, f)
    dw = (cols.T @ d2).reshape(w.shape)
    db = d2.sum(axis=0)
    if not need_dx:
        return None, dw, db
    dcols = (d2 @ w.reshape(kh * kw * c, f).T).reshape(bsz, ho, wo, kh, kw, c)
    dx = np.zeros(x_shape)
    for i in range(kh):
        for j in range(kw):
            dx[:, i : i + ho, j : j + wo, :] += dcols[:, :, :, i, j, :]
    return dx, dw, db


def maxpool_forward(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """2x2 stride-2 max pool; the mask marks the first maximum of each window."""
    bsz, h, w, c = x.shape
    h2, w2 = h // 2, w // 2
    blocks = x[:, : 2 * h2, : 2 * w2, :].reshape(bsz, h2, 2, w2, 2, c).transpose(0, 1, 3, 5, 2, 4)
    blocks = blocks.reshape(bsz, h2, w2, c, 4)
    idx = blocks.argmax(axis=-1)
    out = np.take_along_axis(blocks, idx[..., None], axis=-1)[..., 0]
    return out, idx


def maxpool_backward(dout: np.ndarray, idx: np.ndarray, x_shape) -> np.ndarray:
    bsz, h, w, c = x_shape
    h2, w2 = h // 2, w // 2
    routed = np.zeros((bsz, h2, w2, c, 4))
    np.put_along_axis(routed, idx[..., None], dout[..., None], axis=-1)
    routed = routed.reshape(bsz, h2, w2, c, 2, 2).transpose(0, 1, 4, 2, 5, 3).reshape(bsz, 2 * h2, 2 * w2, c)
    dx = np.zeros(x_shape)
    dx[:, : 2 * h2, : 2 * w2, :] = routed
    return dx


def softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def dropout_mask(shape, rate: float, rng: np.random.Generator) -> np.ndarray:
    """Inverted-dropout mask: kept units are scaled by 1/(1 - rate)."""
    return (rng.random(shape) >= rate) / (1.0 - rate)


# network ----------------------------------------------------------------------


def _check_batch(model: Model, batch: np.ndarray) -> np.ndarray:
    x = np.asarray(batch, dtype=np.float64)
    cfg = model.config
    expected = (cfg.input_height, cfg.input_width, cfg.input_channels)
    if x.ndim != 4 or x.shape[1:] != expected:
        raise ValueError(f"expected batch of shape (B, {expected[0]}, {expected[1]}, {expected[2]}), got {x.shape}")
    return x


def forward(model: Model, batch: np.ndarray, training: bool = False, seed: int = 0):
    """Class probabilities (B, 2) and the activations needed by ``backward``.

    Dropout is applied only when ``training`` is true, with masks drawn from
    a PCG64 stream seeded by ``seed``.
    """
    p = model.params
    x = _check_batch(model, batch) / 255.0
    cache: dict = {"training": training}
    rng = make_rng(seed) if training else None
    for i in range(3):
        z, cols = conv2d_forward(x, p[f"conv{i}.w"], p[f"conv{i}.b"])
        cache[f"conv{i}"] = (x.shape, cols, z)
        a = np.maximum(z, 0.0)
        x, idx = maxpool_forward(a)
        cache[f"pool{i}"] = (a.shape, idx)
    cache["flat_shape"] = x.shape
    h = x.reshape(x.shape[0], -1)
    for i in range(2):
        cache[f"dense{i}.in"] = h
        z = h @ p[f"dense{i}.w"] + p[f"dense{i}.b"]
        cache[f"dense{i}.z"] = z
        h = np.maximum(z, 0.0)
        if training and model.config.dropout_rate > 0:
            mask = dropout_mask(h.shape, model.config.dropout_rate, rng)
            cache[f"drop{i}"] = mask
            h = h * mask
    cache["dense2.in"] = h
    logits = h @ p["dense2.w"] + p["dense2.b"]
    probs = softmax(logits)
    cache["probs"] = probs
    return probs, cache


def backward(model: Model, cache: dict, dlogits: np.ndarray) -> dict[str, np.ndarray]:
    p = model.params
    grads: dict[str, np.ndarray] = {}
    h = cache["dense2.in"]
    grads["dense2.w"] = h.T @ dlogits
    grads["dense2.b"] = dlogits.sum(axis=0)
    dh = dlogits @ p["dense2.w"].T
    for i in (1, 0):
        if f"drop{i}" in cache:
            dh = dh * cache[f"drop{i}"]
        dz = dh * (cache[f"dense{i}.z"] > 0)
        hin = cache[f"dense{i}.in"]
        grads[f"dense{i}.w"] = hin.T @ dz
        grads[f"dense{i}.b"] = dz.sum(axis=0)
        dh = dz @ p[f"dense{i}.w"].T
    dx = dh.reshape(cache["flat_shape"])
    for i in (2, 1, 0):
        a_shape, idx = cache[f"pool{i}"]
        da = maxpool_backward(dx, idx, a_shape)
        x_shape, cols, z = cache[f"conv{i}"]
        dz = da * (z > 0)
        dx, grads[f"conv{i}.w"], grads[f"conv{i}.b"] = conv2d_backward(
            dz, x_shape, cols, p[f"conv{i}.w"], need_dx=i > 0
        )
    return {k: grads[k] for k in p}


def cross_entropy(probs: np.ndarray, onehot: np.ndarray) -> float:
    return float(np.mean(-np.sum(onehot * np.log(probs + LOG_EPS), axis=1)))


def one_hot(labels, n_classes: int = 2) -> np.ndarray:
    labels = np.asarray(labels)
    if labels.ndim == 2:
        return labels.astype(np.float64)
    out = np.zeros((labels.size, n_classes))
    out[np.arange(labels.size), labels.astype(int)] = 1.0
    return out


def loss_and_gradients(model: Model, batch, labels, training: bool = True, seed: int = 0):
    """Mean categorical cross-entropy and its gradient for every parameter.

    ``labels`` may be class indices or one-hot rows.
    """
    y = one_hot(labels, model.config.n_classes)
    probs, cache = forward(model, batch, training=training, seed=seed)
    loss = cross_entropy(probs, y)
    if not math.isfinite(loss):
        raise FloatingPointError(f"non-finite loss {loss}; max |prob| {np.abs(probs).max()}")
    bsz = probs.shape[0]
    # exact derivative of -sum y*log(p + eps), pushed through the softmax
    dp = -y / (probs + LOG_EPS) / bsz
    dlogits = probs * (dp - np.sum(probs * dp, axis=1, keepdims=True))
    return loss, backward(model, cache, dlogits)


def predict_proba(model: Model, images, batch_size: int = 64) -> np.ndarray:
    images = np.asarray(images)
    out = [forward(model, images[i : i + batch_size], training=False)[0] for i in range(0, len(images), batch_size)]
    return np.concatenate(out, axis=0)


def predict(model: Model, images, batch_size: int = 64) -> np.ndarray:
    """Probability of the abnormal class (index 1) for each image."""
    return predict_proba(model, images, batch_size)[:, 1]


class Adam:
    def __init__(self, params: dict[str, np.ndarray], cfg: TrainConfig):
        self.cfg = cfg
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}
        self.t = 0

    def step(self, params, grads):
        c = self.cfg
        self.t += 1
        lr_t = c.learning_rate * math.sqrt(1 - c.beta2**self.t) / (1 - c.beta1**self.t)
        for k in params:
            g = grads[k]
            self.m[k] = c.beta1 * self.m[k] + (1 - c.beta1) * g
            self.v[k] = c.beta2 * self.v[k] + (1 - c.beta2) * g * g
            params[k] -= lr_t * self.m[k] / (np.sqrt(self.v[k]) + c.adam_eps)


class SGD:
    def __init__(self, params, cfg: TrainConfig):
        self.cfg = cfg

    def step(self, params, grads):
        for k in params:
            params[k] -= self.cfg.learning_rate * grads[k]


def accuracy(model: Model, images, labels) -> float:
    pred = predict_proba(model, images).argmax(axis=1)
    return float(np.mean(pred == np.asarray(labels)))


def train(
    model: Model,
    images,
    labels,
    config: TrainConfig,
    val_images=None,
    val_labels=None,
    stop_at_accuracy: float | None = None,
):
    """Mini-batch training; returns a trained copy of ``model`` and a TrainReport.

    Shuffling and dropout masks derive from ``config.seed`` so the result is
    fully determined by (model, data, config). If the loss becomes
    non-finite, training stops and the partial report is returned with
    ``diverged`` set. With ``stop_at_accuracy``, training accuracy is
    measured after every epoch and training ends once it is reached.
    """
    images = np.asarray(images)
    labels = np.asarray(labels).astype(int)
    if len(images) == 0:
        raise ValueError("training set is empty")
    model = model.copy()
    opt = Adam(model.params, config) if config.optimizer == "adam" else SGD(model.params, config)
    shuffle_rng = make_rng(derive_seed(config.seed, "shuffle"))
    report = TrainReport()
    has_val = val_images is not None and len(np.unique(val_labels)) == 2
    step = 0
    for epoch in range(config.epochs):
        order = shuffle_rng.permutation(len(images))
        total, count = 0.0, 0
        for start in range(0, len(order), config.batch_size):
            sel = order[start : start + config.batch_size]
            try:
                loss, grads = loss_and_gradients(
                    model, images[sel], labels[sel], training=True, seed=derive_seed(config.seed, "dropout", step)
                )
            except FloatingPointError as exc:
                report.diverged = True
                report.message = f"epoch {epoch}, step {step}: {exc}"
                return model, report
            opt.step(model.params, grads)
            total += loss * len(sel)
            count += len(sel)
            step += 1
        report.epoch_loss.append(total / count)
        report.val_auc.append(auc_trapezoid(predict(model, val_images), val_labels) if has_val else None)
        report.epochs_run = epoch + 1
        if stop_at_accuracy is not None and accuracy(model, images, labels) >= stop_at_accuracy:
            break
    report.train_accuracy = accuracy(model, images, labels)
    return model, report


# serialization --------------------------------------------------------------


def save_model(path: str | Path, model: Model) -> None:
    """``CNNW`` magic, uint32 header length, JSON header, float64 LE parameters."""
    names = list(model.params)
    header = {
        "config": asdict(model.config),
        "layers": model.config.layers(),
        "params": [{"name": n, "shape": list(model.params[n].shape)} for n in names],
        "seed": model.seed,
        "dtype": "<f8",
    }
    hbytes = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(WEIGHTS_MAGIC)
        fh.write(struct.pack("<I", len(hbytes)))
        fh.write(hbytes)
        for n in names:
            fh.write(np.ascontiguousarray(model.params[n], dtype="<f8").tobytes())


def load_model(path: str | Path) -> Model:
    raw = Path(path).read_bytes()
    if raw[:4] != WEIGHTS_MAGIC:
        raise ValueError(f"{path}: not a weights file")
    (hlen,) = struct.unpack("<I", raw[4:8])
    header = json.loads(raw[8 : 8 + hlen].decode("utf-8"))
    cfg = ModelConfig(**header["config"])
    offset = 8 + hlen
    params = {}
    for entry in header["params"]:
        shape = tuple(entry["shape"])
        n = int(np.prod(shape))
        params[entry["name"]] = np.frombuffer(raw, dtype="<f8", count=n, offset=offset).reshape(shape).copy()
        offset += 8 * n
    return Model(cfg, params, int(header["seed"]))
