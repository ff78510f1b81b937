"""A small 1-D CNN with hand-written backpropagation.

Architecture (per block): conv -> batch norm -> ReLU -> max pool(2, 2),
repeated ``n_blocks`` times, then global max pooling, one dense layer and
softmax.

Feature maps are kept channels-last, ``(batch, length, channels)``,
internally; conv weights are stored as ``(out_channels, in_channels,
kernel)``. Parameters live in float32 by default (float64 for gradient
checks); batch reductions (batch-norm statistics, loss, bias gradients)
accumulate in float64.
"""

from __future__ import annotations

import io
import logging
import math
import struct
from dataclasses import dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import FormatError, NumericError, UsageError

log = logging.getLogger(__name__)

BN_EPS = 1e-5
BN_MOMENTUM = 0.1


@dataclass(frozen=True)
class ModelArch:
    channels: tuple[int, ...] = (16, 32, 64)
    kernels: tuple[int, ...] = (9, 7, 5)
    n_classes: int = 3
    input_length: int = 1536
    pool: int = 2

    def __post_init__(self):
        if len(self.channels) != len(self.kernels) or not self.channels:
            raise UsageError("channels and kernels must be non-empty and of equal length")
        if any(k % 2 == 0 or k < 1 for k in self.kernels):
            raise UsageError(f"kernel sizes must be odd, got {self.kernels}")
        if any(c < 1 for c in self.channels):
            raise UsageError("channel counts must be positive")
        if self.pool != 2:
            raise UsageError("only pool size/stride 2 is supported")
        if self.input_length % (self.pool ** self.n_blocks):
            raise UsageError(
                f"input length {self.input_length} not divisible by {self.pool ** self.n_blocks}"
            )
        if self.n_classes < 2:
            raise UsageError("need at least two classes")

    @property
    def n_blocks(self) -> int:
        return len(self.channels)

    @property
    def feature_length(self) -> int:
        return self.input_length // self.pool ** self.n_blocks

    @property
    def stride(self) -> int:
        """Input bins per last-layer feature position."""
        return self.pool ** self.n_blocks

    def param_shapes(self) -> list[tuple[str, tuple[int, ...]]]:
        shapes = []
        cin = 1
        for l, (cout, k) in enumerate(zip(self.channels, self.kernels)):
            shapes += [
                (f"conv{l}.weight", (cout, cin, k)),
                (f"conv{l}.bias", (cout,)),
                (f"bn{l}.gamma", (cout,)),
                (f"bn{l}.beta", (cout,)),
            ]
            cin = cout
        shapes += [("fc.weight", (self.n_classes, cin)), ("fc.bias", (self.n_classes,))]
        return shapes


@dataclass
class BNStats:
    running_mean: np.ndarray
    running_var: np.ndarray
    n_updates: int = 0


@dataclass
class Model:
    arch: ModelArch
    params: dict[str, np.ndarray]
    bn_stats: list[BNStats]
    mode: str = "train"

    @property
    def dtype(self):
        return self.params["fc.weight"].dtype

    def copy(self) -> "Model":
        return Model(
            arch=self.arch,
            params={k: v.copy() for k, v in self.params.items()},
            bn_stats=[BNStats(s.running_mean.copy(), s.running_var.copy(), s.n_updates)
                      for s in self.bn_stats],
            mode=self.mode,
        )

    def astype(self, dtype) -> "Model":
        m = self.copy()
        m.params = {k: v.astype(dtype) for k, v in m.params.items()}
        for s in m.bn_stats:
            s.running_mean = s.running_mean.astype(dtype)
            s.running_var = s.running_var.astype(dtype)
        return m


def init_model(arch: ModelArch = ModelArch(), seed: int = 0, dtype=np.float32) -> Model:
    """He-uniform conv/dense weights, zero biases, BN scale 1 and shift 0."""
    rng = np.random.Generator(np.random.Philox(seed))
    params = {}
    for name, shape in arch.param_shapes():
        if name.endswith(".weight"):
            fan_in = int(np.prod(shape[1:]))
            bound = math.sqrt(6.0 / fan_in)
            params[name] = rng.uniform(-bound, bound, size=shape).astype(dtype)
        elif name.endswith(".gamma"):
            params[name] = np.ones(shape, dtype=dtype)
        else:
            params[name] = np.zeros(shape, dtype=dtype)
    stats = [BNStats(np.zeros(c, dtype=dtype), np.ones(c, dtype=dtype)) for c in arch.channels]
    return Model(arch=arch, params=params, bn_stats=stats)


# ---------------------------------------------------------------- layer ops


def conv1d_forward(x: np.ndarray, w: np.ndarray, b: np.ndarray):
    """Same-padded cross-correlation. x: (B, L, Cin), w: (Cout, Cin, k)."""
    if x.ndim != 3 or w.ndim != 3 or x.shape[2] != w.shape[1] or b.shape != (w.shape[0],):
        raise UsageError(f"conv shape mismatch: x{x.shape} w{w.shape} b{b.shape}")
    bsz, length, cin = x.shape
    cout, _, k = w.shape
    pad = k // 2
    xp = np.pad(x, ((0, 0), (pad, pad), (0, 0)))
    cols = sliding_window_view(xp, k, axis=1).reshape(bsz * length, cin * k)
    wmat = w.reshape(cout, cin * k)
    y = (cols @ wmat.T).reshape(bsz, length, cout) + b
    return y, (cols, w, x.shape)


def conv1d_backward(dy: np.ndarray, cache, need_dx: bool = True):
    """Gradients ``(dx, dw, db)``; ``dx`` is None when not requested."""
    cols, w, xshape = cache
    bsz, length, cin = xshape
    cout, _, k = w.shape
    pad = k // 2
    dy2 = dy.reshape(bsz * length, cout)
    dw = (dy2.T @ cols).reshape(w.shape)
    db = dy2.sum(axis=0, dtype=np.float64).astype(w.dtype)
    if not need_dx:
        return None, dw, db
    dcols = (dy2 @ w.reshape(cout, cin * k)).reshape(bsz, length, cin, k)
    dxp = np.zeros((bsz, length + 2 * pad, cin), dtype=dy.dtype)
    for j in range(k):
        dxp[:, j : j + length, :] += dcols[:, :, :, j]
    return dxp[:, pad : pad + length, :], dw, db


def relu(z):
    return np.maximum(z, 0)


def batchnorm_forward(x: np.ndarray, gamma, beta, stats: BNStats | None, mode: str):
    """Per-channel normalization over (batch, length).

    Train mode uses batch statistics (biased variance) and returns them in
    the cache for the caller to fold into running statistics; eval mode uses
    the running statistics.
    """
    shape = x.shape
    flat = x.reshape(-1, shape[-1])
    count = flat.shape[0]
    if mode == "train":
        if shape[0] < 2:
            raise UsageError("batch norm in train mode needs a batch of at least 2")
        mean = flat.sum(axis=0, dtype=np.float64) / count
        centered = flat - mean.astype(x.dtype)
        var = np.einsum("ij,ij->j", centered, centered, dtype=np.float64) / count
    elif mode == "eval":
        if stats is None or stats.n_updates == 0:
            raise UsageError("batch norm running statistics were never updated")
        mean = stats.running_mean.astype(np.float64)
        var = stats.running_var.astype(np.float64)
        centered = flat - mean.astype(x.dtype)
    else:
        raise UsageError(f"unknown mode {mode!r}")
    inv_std = 1.0 / np.sqrt(var + BN_EPS)
    xhat = centered * inv_std.astype(x.dtype)
    y = (xhat * gamma + beta).reshape(shape)
    return y, (xhat, inv_std, gamma, mode, mean, var, count)


def update_running_stats(stats: BNStats, cache, momentum: float = BN_MOMENTUM):
    _, _, _, mode, mean, var, count = cache
    if mode != "train":
        return
    unbiased = var * count / max(count - 1, 1)
    dt = stats.running_mean.dtype
    stats.running_mean = ((1 - momentum) * stats.running_mean + momentum * mean).astype(dt)
    stats.running_var = ((1 - momentum) * stats.running_var + momentum * unbiased).astype(dt)
    stats.n_updates += 1


def batchnorm_backward(dy: np.ndarray, cache):
    xhat, inv_std, gamma, mode, _, _, count = cache
    shape = dy.shape
    dy = dy.reshape(-1, shape[-1])
    dgamma = np.einsum("ij,ij->j", dy, xhat, dtype=np.float64)
    dbeta = dy.sum(axis=0, dtype=np.float64)
    dt = dy.dtype
    if mode == "eval":
        dx = dy * (gamma * inv_std.astype(dt))
    else:
        # dxhat = dy * gamma; sums factored so gamma multiplies once
        s1 = (dbeta / count).astype(dt)
        s2 = (dgamma / count).astype(dt)
        dx = (dy - s1 - xhat * s2) * (gamma * inv_std.astype(dt))
    return dx.reshape(shape), dgamma.astype(dt), dbeta.astype(dt)


def maxpool1d(x: np.ndarray, size: int = 2):
    """Max pool with window 2, stride 2 along length; ties go to the first index.

    Returns the pooled map and, per output position, a boolean mask that is
    True where the second element of the window was selected.
    """
    if size != 2:
        raise UsageError("only pool size 2 is supported")
    bsz, length, c = x.shape
    if length % 2:
        raise UsageError(f"length {length} not divisible by pool size 2")
    first, second = x[:, 0::2, :], x[:, 1::2, :]
    return np.maximum(first, second), second > first


def pool_argmax(took_second: np.ndarray) -> np.ndarray:
    """Absolute input indices selected by :func:`maxpool1d`."""
    return 2 * np.arange(took_second.shape[1])[None, :, None] + took_second


def maxpool1d_backward(dy: np.ndarray, took_second: np.ndarray, length: int):
    bsz, _, c = dy.shape
    to_second = dy * took_second
    return np.stack((dy - to_second, to_second), axis=2).reshape(bsz, length, c)


def global_maxpool(x: np.ndarray):
    """Per-channel maximum over length: (B, L, C) -> (B, C), plus argmax."""
    idx = x.argmax(axis=1)
    return np.take_along_axis(x, idx[:, None, :], axis=1)[:, 0, :], idx


def global_maxpool_backward(dy: np.ndarray, idx: np.ndarray, length: int):
    bsz, c = dy.shape
    dx = np.zeros((bsz, length, c), dtype=dy.dtype)
    np.put_along_axis(dx, idx[:, None, :], dy[:, None, :], axis=1)
    return dx


def softmax(logits: np.ndarray) -> np.ndarray:
    z = np.asarray(logits, dtype=np.float64)
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def dense_softmax(features: np.ndarray, w: np.ndarray, b: np.ndarray):
    """Logits and class probabilities for (B, K) features."""
    logits = features @ w.T + b
    return logits, softmax(logits)


def cross_entropy(probs: np.ndarray, labels: np.ndarray) -> float:
    p = probs[np.arange(len(labels)), labels]
    return float(-np.mean(np.log(np.maximum(p, 1e-300))))


# ------------------------------------------------------------ whole network


@dataclass
class ForwardTrace:
    x: np.ndarray
    mode: str
    block_caches: list = field(default_factory=list)
    feature_map: np.ndarray | None = None  # last block output, (B, Z, K)
    gmp_index: np.ndarray | None = None
    features: np.ndarray | None = None
    logits: np.ndarray | None = None
    probs: np.ndarray | None = None

    @property
    def A(self) -> np.ndarray:
        """Last-conv feature map as (B, K, Z)."""
        return self.feature_map.transpose(0, 2, 1)


def _as_batch(model: Model, x) -> np.ndarray:
    x = np.asarray(x)
    if x.ndim == 1:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] != model.arch.input_length:
        raise UsageError(
            f"input length {x.shape[-1]} does not match model input length "
            f"{model.arch.input_length}"
        )
    return x.astype(model.dtype, copy=False)[:, :, None]


def forward(model: Model, x, mode: str | None = None, update_stats: bool = False) -> ForwardTrace:
    """Run the network on a spectrum (n_bins,) or a batch (B, n_bins).

    With ``update_stats`` (train mode only) the batch statistics are folded
    into the model's running statistics.
    """
    mode = mode or model.mode
    h = _as_batch(model, x)
    trace = ForwardTrace(x=h, mode=mode)
    p = model.params
    for l in range(model.arch.n_blocks):
        z, conv_c = conv1d_forward(h, p[f"conv{l}.weight"], p[f"conv{l}.bias"])
        zn, bn_c = batchnorm_forward(z, p[f"bn{l}.gamma"], p[f"bn{l}.beta"],
                                     model.bn_stats[l], mode)
        if update_stats and mode == "train":
            update_running_stats(model.bn_stats[l], bn_c)
        # relu(maxpool(z)) == maxpool(relu(z)); pooling first halves the relu work
        pooled, took_second = maxpool1d(zn)
        h = relu(pooled)
        trace.block_caches.append((conv_c, bn_c, pooled, took_second, zn.shape[1]))
    trace.feature_map = h
    return head_forward(model, trace)


def head_forward(model: Model, trace: ForwardTrace) -> ForwardTrace:
    """Global max pool + dense + softmax on ``trace.feature_map``."""
    trace.features, trace.gmp_index = global_maxpool(trace.feature_map)
    trace.logits, trace.probs = dense_softmax(
        trace.features, model.params["fc.weight"], model.params["fc.bias"])
    return trace


def _head_backward(model: Model, trace: ForwardTrace, dlogits: np.ndarray):
    dlogits = dlogits.astype(model.dtype)
    grads = {
        "fc.weight": dlogits.T @ trace.features,
        "fc.bias": dlogits.sum(axis=0, dtype=np.float64).astype(model.dtype),
    }
    dfeat = dlogits @ model.params["fc.weight"]
    dA = global_maxpool_backward(dfeat, trace.gmp_index, trace.feature_map.shape[1])
    return grads, dA


def logit_grad_wrt_A(model: Model, trace: ForwardTrace, cls) -> np.ndarray:
    """d logit[cls] / dA for each sample, shape (B, K, Z).

    ``cls`` is a class index or one index per sample.
    """
    bsz = trace.logits.shape[0]
    onehot = np.zeros((bsz, model.arch.n_classes), dtype=model.dtype)
    onehot[np.arange(bsz), np.broadcast_to(np.asarray(cls), (bsz,))] = 1
    _, dA = _head_backward(model, trace, onehot)
    return dA.transpose(0, 2, 1)


def backward(model: Model, trace: ForwardTrace, labels) -> tuple[dict[str, np.ndarray], float]:
    """Gradients of the mean softmax cross-entropy over the batch.

    Returns ``(grads, loss)``; ``grads`` has one entry per parameter.
    """
    labels = np.broadcast_to(np.asarray(labels, dtype=np.int64), (trace.logits.shape[0],))
    bsz = len(labels)
    loss = cross_entropy(trace.probs, labels)
    dlogits = trace.probs.copy()
    dlogits[np.arange(bsz), labels] -= 1.0
    dlogits /= bsz
    grads, dh = _head_backward(model, trace, dlogits)
    p = model.params
    for l in reversed(range(model.arch.n_blocks)):
        conv_c, bn_c, pooled, took_second, length = trace.block_caches[l]
        dzn = maxpool1d_backward(dh * (pooled > 0), took_second, length)
        dz, grads[f"bn{l}.gamma"], grads[f"bn{l}.beta"] = batchnorm_backward(dzn, bn_c)
        dh, grads[f"conv{l}.weight"], grads[f"conv{l}.bias"] = conv1d_backward(dz, conv_c, need_dx=l > 0)
    return grads, loss


def predict(model: Model, x, batch_size: int = 256):
    """Predicted class indices and probabilities (eval mode).

    Ties in probability resolve to the lowest class index.
    """
    x = np.asarray(x)
    single = x.ndim == 1
    xb = x[None, :] if single else x
    probs = np.concatenate([
        forward(model, xb[i : i + batch_size], mode="eval").probs
        for i in range(0, len(xb), batch_size)
    ]) if len(xb) else np.zeros((0, model.arch.n_classes))
    pred = probs.argmax(axis=1)
    if single:
        return int(pred[0]), probs[0]
    return pred, probs


def evaluate(model: Model, x, labels, batch_size: int = 256) -> tuple[float, float]:
    """(accuracy, mean cross-entropy) in eval mode."""
    pred, probs = predict(model, x, batch_size)
    labels = np.asarray(labels)
    return float(np.mean(pred == labels)), cross_entropy(probs, labels)


# ---------------------------------------------------------------- training


@dataclass(frozen=True)
class TrainConfig:
    lr: float = 1e-3
    batch_size: int = 32
    max_epochs: int = 50
    patience: int = 8
    optimizer: str = "adam"
    momentum: float = 0.9
    val_fraction: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if not self.lr > 0:
            raise UsageError("learning rate must be positive")
        if self.batch_size < 1:
            raise UsageError("batch size must be >= 1")
        if self.optimizer not in ("sgd", "adam"):
            raise UsageError(f"unknown optimizer {self.optimizer!r}")
        if not 0 <= self.val_fraction < 1:
            raise UsageError("val_fraction must lie in [0, 1)")


class SGDMomentum:
    def __init__(self, params, lr, momentum=0.9):
        self.lr, self.momentum = lr, momentum
        self.velocity = {k: np.zeros_like(v) for k, v in params.items()}

    def step(self, params, grads):
        for k, g in grads.items():
            v = self.velocity[k]
            v *= self.momentum
            v -= self.lr * g
            params[k] += v


class Adam:
    def __init__(self, params, lr, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr, self.b1, self.b2, self.eps = lr, beta1, beta2, eps
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}
        self.t = 0

    def step(self, params, grads):
        self.t += 1
        c1 = 1 - self.b1 ** self.t
        c2 = 1 - self.b2 ** self.t
        for k, g in grads.items():
            m, v = self.m[k], self.v[k]
            m *= self.b1
            m += (1 - self.b1) * g
            v *= self.b2
            v += (1 - self.b2) * g * g
            step = (self.lr / c1) * m / (np.sqrt(v / c2) + self.eps)
            params[k] -= step.astype(params[k].dtype)


@dataclass
class EpochRecord:
    epoch: int
    train_loss: float
    train_accuracy: float
    val_loss: float
    val_accuracy: float


def stratified_holdout(labels: np.ndarray, fraction: float, rng) -> tuple[np.ndarray, np.ndarray]:
    """Split indices into (keep, holdout), holding out ``floor(fraction*n_c)`` per class."""
    labels = np.asarray(labels)
    keep, held = [], []
    for c in np.unique(labels):
        idx = np.flatnonzero(labels == c)
        idx = idx[rng.permutation(len(idx))]
        n_hold = int(math.floor(fraction * len(idx)))
        held.append(idx[:n_hold])
        keep.append(idx[n_hold:])
    return np.sort(np.concatenate(keep)), np.sort(np.concatenate(held))


def train(model: Model, x, labels, cfg: TrainConfig = TrainConfig(), callback=None):
    """Mini-batch training with early stopping on held-out validation loss.

    A stratified ``cfg.val_fraction`` of the samples is held out for early
    stopping (skipped when it would be empty). The parameters from the best
    validation epoch are restored at the end. Returns ``(model, history)``;
    ``model`` is trained in place and returned in eval mode.
    """
    x = np.asarray(x, dtype=model.dtype)
    labels = np.asarray(labels, dtype=np.int64)
    if len(x) != len(labels) or len(x) < 2:
        raise UsageError("need at least two labelled training samples")
    rng = np.random.Generator(np.random.Philox(cfg.seed))
    tr_idx, val_idx = stratified_holdout(labels, cfg.val_fraction, rng)
    if len(val_idx) == 0:
        val_idx = tr_idx
    xt, yt = x[tr_idx], labels[tr_idx]
    xv, yv = x[val_idx], labels[val_idx]
    opt = (Adam(model.params, cfg.lr) if cfg.optimizer == "adam"
           else SGDMomentum(model.params, cfg.lr, cfg.momentum))

    history: list[EpochRecord] = []
    best = (math.inf, None)
    stale = 0
    n = len(xt)
    for epoch in range(cfg.max_epochs):
        model.mode = "train"
        order = rng.permutation(n)
        loss_sum, correct, seen = 0.0, 0, 0
        for start in range(0, n, cfg.batch_size):
            batch = order[start : start + cfg.batch_size]
            if len(batch) < 2:
                # batch norm cannot normalize a single sample
                continue
            tr = forward(model, xt[batch], mode="train", update_stats=True)
            grads, loss = backward(model, tr, yt[batch])
            if not math.isfinite(loss):
                raise NumericError(f"training diverged: loss={loss} at epoch {epoch}")
            opt.step(model.params, grads)
            loss_sum += loss * len(batch)
            correct += int(np.sum(tr.probs.argmax(axis=1) == yt[batch]))
            seen += len(batch)
        model.mode = "eval"
        val_acc, val_loss = evaluate(model, xv, yv)
        if not math.isfinite(val_loss):
            raise NumericError(f"validation loss is {val_loss} at epoch {epoch}")
        rec = EpochRecord(epoch, loss_sum / max(seen, 1), correct / max(seen, 1), val_loss, val_acc)
        history.append(rec)
        if callback is not None:
            callback(rec)
        log.debug("epoch %d loss %.4f acc %.3f val_loss %.4f val_acc %.3f", epoch,
                  rec.train_loss, rec.train_accuracy, val_loss, val_acc)
        if val_loss < best[0]:
            best = (val_loss, model.copy())
            stale = 0
        else:
            stale += 1
            if stale >= cfg.patience:
                break
    restored = best[1]
    model.params, model.bn_stats = restored.params, restored.bn_stats
    model.mode = "eval"
    return model, history


# ------------------------------------------------------------ serialization

MODEL_MAGIC = b"BXMW"
MODEL_VERSION = 1


def model_to_bytes(model: Model) -> bytes:
    arch = model.arch
    buf = io.BytesIO()
    buf.write(MODEL_MAGIC)
    buf.write(struct.pack("<HI", MODEL_VERSION, arch.n_blocks))
    for c, k in zip(arch.channels, arch.kernels):
        buf.write(struct.pack("<II", c, k))
    buf.write(struct.pack("<II", arch.input_length, arch.n_classes))
    for name, shape in arch.param_shapes():
        buf.write(np.ascontiguousarray(model.params[name], dtype="<f4").tobytes())
    for s in model.bn_stats:
        buf.write(np.ascontiguousarray(s.running_mean, dtype="<f4").tobytes())
        buf.write(np.ascontiguousarray(s.running_var, dtype="<f4").tobytes())
        buf.write(struct.pack("<Q", s.n_updates))
    return buf.getvalue()


def model_from_bytes(data: bytes) -> Model:
    view = memoryview(data)
    pos = 0

    def take(n):
        nonlocal pos
        if pos + n > len(view):
            raise FormatError("model file is truncated")
        out = view[pos : pos + n]
        pos += n
        return out

    if bytes(take(4)) != MODEL_MAGIC:
        raise FormatError("not a model file (bad magic)")
    version, n_blocks = struct.unpack("<HI", take(6))
    if version != MODEL_VERSION:
        raise FormatError(f"unsupported model file version {version}")
    if not 1 <= n_blocks <= 16:
        raise FormatError(f"implausible block count {n_blocks}")
    ck = [struct.unpack("<II", take(8)) for _ in range(n_blocks)]
    input_length, n_classes = struct.unpack("<II", take(8))
    try:
        arch = ModelArch(channels=tuple(c for c, _ in ck), kernels=tuple(k for _, k in ck),
                         n_classes=n_classes, input_length=input_length)
    except UsageError as exc:
        raise FormatError(f"invalid architecture in model file: {exc}") from exc
    params = {}
    for name, shape in arch.param_shapes():
        n = int(np.prod(shape))
        params[name] = np.frombuffer(take(4 * n), dtype="<f4").astype(np.float32).reshape(shape)
    stats = []
    for c in arch.channels:
        mean = np.frombuffer(take(4 * c), dtype="<f4").astype(np.float32)
        var = np.frombuffer(take(4 * c), dtype="<f4").astype(np.float32)
        (n_up,) = struct.unpack("<Q", take(8))
        if np.any(var <= 0):
            raise FormatError("model file has non-positive running variance")
        stats.append(BNStats(mean, var, n_up))
    if pos != len(view):
        raise FormatError("trailing bytes after model payload")
    return Model(arch=arch, params=params, bn_stats=stats, mode="eval")


def save_model(model: Model, path) -> bytes:
    data = model_to_bytes(model)
    with open(path, "wb") as fh:
        fh.write(data)
    return data


def load_model(path) -> Model:
    with open(path, "rb") as fh:
        return model_from_bytes(fh.read())
