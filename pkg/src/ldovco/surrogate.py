"""Online multi-output neural surrogate: a small ensemble of single-hidden-
layer tanh networks trained with an adaptive-moment update, used to
prescreen candidate designs before spending a true evaluation.

All members share one z-score scaler and train on the same split; they
differ only in their init seeds. Training is vectorized across members
(weights carry a leading member axis)."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

EPS_STD = 1e-12


@dataclass(frozen=True)
class ScalerStats:
    x_mean: np.ndarray
    x_std: np.ndarray
    y_mean: np.ndarray
    y_std: np.ndarray

    @classmethod
    def from_data(cls, x: np.ndarray, y: np.ndarray) -> "ScalerStats":
        return cls(
            x_mean=x.mean(axis=0),
            x_std=np.maximum(x.std(axis=0), EPS_STD),
            y_mean=y.mean(axis=0),
            y_std=np.maximum(y.std(axis=0), EPS_STD),
        )

    def scale_x(self, x: np.ndarray) -> np.ndarray:
        return (x - self.x_mean) / self.x_std

    def scale_y(self, y: np.ndarray) -> np.ndarray:
        return (y - self.y_mean) / self.y_std

    def unscale_y(self, y: np.ndarray) -> np.ndarray:
        return y * self.y_std + self.y_mean


@dataclass(frozen=True)
class MlpConfig:
    hidden_width: int | None = None  # None -> max(10, 2 * input dim)
    epochs: int = 2000
    learning_rate: float = 1e-3
    patience: int = 100
    val_fraction: float = 0.2
    n_members: int = 5
    min_delta: float = 1e-6  # smallest val-loss drop that counts as progress

    def __post_init__(self):
        if self.epochs <= 0 or self.patience <= 0 or self.learning_rate <= 0:
            raise ValueError("epochs, patience and learning_rate must be positive")
        if not 0.0 < self.val_fraction <= 0.5:
            raise ValueError("val_fraction must be in (0, 0.5]")
        if self.n_members < 1:
            raise ValueError("need at least one ensemble member")

    def resolve_width(self, input_dim: int) -> int:
        return self.hidden_width if self.hidden_width else max(10, 2 * input_dim)


@dataclass
class EnsembleModel:
    w1: np.ndarray  # (members, d, h)
    b1: np.ndarray  # (members, h)
    w2: np.ndarray  # (members, h, k)
    b2: np.ndarray  # (members, k)
    scaler: ScalerStats
    cfg: MlpConfig
    train_log: dict = field(default_factory=dict)

    @property
    def n_members(self) -> int:
        return self.w1.shape[0]

    @property
    def input_dim(self) -> int:
        return self.w1.shape[1]

    @property
    def output_dim(self) -> int:
        return self.w2.shape[2]


def _forward(w1, b1, w2, b2, x):
    # x: (n, d) -> (members, n, k)
    h = np.tanh(x[None, :, :] @ w1 + b1[:, None, :])
    return h @ w2 + b2[:, None, :], h


def fit(x: np.ndarray, y: np.ndarray, cfg: MlpConfig, seed: int) -> EnsembleModel:
    """Train the ensemble on (x, y) with early stopping on a held-out split.

    Deterministic for a given seed; the returned weights are each member's
    best-validation-epoch snapshot.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.ndim != 2 or y.ndim != 2 or len(x) != len(y):
        raise ValueError("x and y must be 2-D with matching row counts")
    n, d = x.shape
    k = y.shape[1]
    if n < 10:
        raise ValueError(f"need at least 10 samples to fit, got {n}")
    if not (np.isfinite(x).all() and np.isfinite(y).all()):
        raise ValueError("fit requires finite inputs and targets")

    scaler = ScalerStats.from_data(x, y)
    xs, ys = scaler.scale_x(x), scaler.scale_y(y)

    split_rng = np.random.default_rng(np.random.SeedSequence([seed, 0]))
    perm = split_rng.permutation(n)
    n_val = min(max(1, int(round(cfg.val_fraction * n))), n - 1)
    val_idx, train_idx = perm[:n_val], perm[n_val:]
    xt, yt = xs[train_idx], ys[train_idx]
    xv, yv = xs[val_idx], ys[val_idx]

    m = cfg.n_members
    h = cfg.resolve_width(d)
    w1 = np.empty((m, d, h))
    b1 = np.empty((m, h))
    w2 = np.empty((m, h, k))
    for i in range(m):
        init_rng = np.random.default_rng(np.random.SeedSequence([seed, 1 + i]))
        w1[i] = init_rng.normal(0.0, 1.0 / math.sqrt(d), size=(d, h))
        # random hidden biases break odd symmetry (even targets stall otherwise)
        b1[i] = init_rng.uniform(-1.0, 1.0, size=h)
        w2[i] = init_rng.normal(0.0, 1.0 / math.sqrt(h), size=(h, k))
    b2 = np.zeros((m, k))

    params = [w1, b1, w2, b2]
    adam_m = [np.zeros_like(p) for p in params]
    adam_v = [np.zeros_like(p) for p in params]
    beta1, beta2, eps = 0.9, 0.999, 1e-8

    best_val = np.full(m, np.inf)
    best_snap = [p.copy() for p in params]
    stall = np.zeros(m, dtype=int)
    active = np.ones(m, dtype=bool)
    n_train = len(xt)
    epochs_run = 0

    for epoch in range(cfg.epochs):
        epochs_run = epoch + 1
        pred, hidden = _forward(w1, b1, w2, b2, xt)
        err = pred - yt[None, :, :]  # (m, n, k)

        g_out = 2.0 * err / (n_train * k)
        g_w2 = np.swapaxes(hidden, 1, 2) @ g_out
        g_b2 = g_out.sum(axis=1)
        g_hidden = (g_out @ np.swapaxes(w2, 1, 2)) * (1.0 - hidden**2)
        g_w1 = np.swapaxes(np.broadcast_to(xt, (m, n_train, d)), 1, 2) @ g_hidden
        g_b1 = g_hidden.sum(axis=1)

        t = epoch + 1
        corr1 = 1.0 - beta1**t
        corr2 = 1.0 - beta2**t
        for p, g, am, av in zip(params, [g_w1, g_b1, g_w2, g_b2], adam_m, adam_v):
            am += (1.0 - beta1) * (g - am)
            av += (1.0 - beta2) * (g * g - av)
            step = cfg.learning_rate * (am / corr1) / (np.sqrt(av / corr2) + eps)
            # frozen members stop moving once out of patience
            p -= step * active.reshape((-1,) + (1,) * (p.ndim - 1))

        val_pred, _ = _forward(w1, b1, w2, b2, xv)
        val_loss = np.mean((val_pred - yv[None, :, :]) ** 2, axis=(1, 2))

        improved = active & (val_loss < best_val - cfg.min_delta)
        for i in np.flatnonzero(improved):
            for snap, p in zip(best_snap, params):
                snap[i] = p[i]
        best_val = np.where(improved, val_loss, best_val)
        stall = np.where(improved, 0, stall + 1)
        active &= stall < cfg.patience
        if not active.any():
            break

    w1, b1, w2, b2 = best_snap
    train_pred, _ = _forward(w1, b1, w2, b2, xt)
    train_loss = np.mean((train_pred - yt[None, :, :]) ** 2, axis=(1, 2))
    return EnsembleModel(
        w1=w1, b1=b1, w2=w2, b2=b2, scaler=scaler, cfg=cfg,
        train_log={
            "epochs_run": epochs_run,
            "best_val_loss": best_val.tolist(),
            "final_train_loss": train_loss.tolist(),
            "n_train": int(n_train),
            "n_val": int(n_val),
        },
    )


def _remap_scaler(model: EnsembleModel, new: ScalerStats) -> tuple[np.ndarray, ...]:
    """Re-express the weights under a new z-score scaler. The scaler change
    is affine in both inputs and outputs, so the remap is exact."""
    old = model.scaler
    rx = new.x_std / old.x_std  # (d,)
    dx = (new.x_mean - old.x_mean) / old.x_std
    w1 = model.w1 * rx[None, :, None]
    b1 = model.b1 + np.einsum("mdh,d->mh", model.w1, dx)
    ry = old.y_std / new.y_std  # (k,)
    w2 = model.w2 * ry[None, None, :]
    b2 = (model.b2 * old.y_std + old.y_mean - new.y_mean) / new.y_std
    return w1, b1, w2, b2


def update(model: EnsembleModel, x: np.ndarray, y: np.ndarray, epochs: int,
           seed: int) -> EnsembleModel:
    """Continue training an existing ensemble on the (grown) dataset for a
    bounded number of epochs. The scaler is recomputed from the data and the
    inherited weights are remapped to it, so the warm start is exact.

    Keeps the best-validation snapshot semantics of fit(); deterministic for
    a given (model, data, seed). The inner loop is the per-step hot path of
    the optimizer, hence the flat parameter buffer and fused train+val pass.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if not (np.isfinite(x).all() and np.isfinite(y).all()):
        raise ValueError("update requires finite inputs and targets")
    n = len(x)
    cfg = model.cfg
    scaler = ScalerStats.from_data(x, y)
    rw1, rb1, rw2, rb2 = _remap_scaler(model, scaler)
    xs, ys = scaler.scale_x(x), scaler.scale_y(y)

    split_rng = np.random.default_rng(np.random.SeedSequence([seed, 0]))
    perm = split_rng.permutation(n)
    n_val = min(max(1, int(round(cfg.val_fraction * n))), n - 1)
    val_idx, train_idx = perm[:n_val], perm[n_val:]
    xt, yt = xs[train_idx], ys[train_idx]
    xv, yv = xs[val_idx], ys[val_idx]
    n_train = len(xt)
    m, k = model.n_members, model.output_dim
    d = xt.shape[1]
    h = model.w1.shape[2]

    # all parameters live in one flat buffer so the adam update is three
    # vector ops instead of a dozen small ones
    sizes = [m * d * h, m * h, m * h * k, m * k]
    offs = np.cumsum([0] + sizes)
    flat = np.empty(offs[-1])
    w1 = flat[offs[0]:offs[1]].reshape(m, d, h)
    b1 = flat[offs[1]:offs[2]].reshape(m, h)
    w2 = flat[offs[2]:offs[3]].reshape(m, h, k)
    b2 = flat[offs[3]:offs[4]].reshape(m, k)
    w1[...], b1[...], w2[...], b2[...] = rw1, rb1, rw2, rb2

    grad = np.empty_like(flat)
    g_w1 = grad[offs[0]:offs[1]].reshape(m, d, h)
    g_b1 = grad[offs[1]:offs[2]].reshape(m, h)
    g_w2 = grad[offs[2]:offs[3]].reshape(m, h, k)
    g_b2 = grad[offs[3]:offs[4]].reshape(m, k)

    adam_m = np.zeros_like(flat)
    adam_v = np.zeros_like(flat)
    beta1, beta2, eps = 0.9, 0.999, 1e-8

    x_all = np.ascontiguousarray(np.concatenate([xt, xv], axis=0))
    x_all_t = np.swapaxes(np.broadcast_to(x_all[:n_train], (m, n_train, d)), 1, 2)

    pred, _ = _forward(w1, b1, w2, b2, xv)
    best_val = np.mean((pred - yv[None, :, :]) ** 2, axis=(1, 2))
    best_snap = flat.copy()

    def snapshot(improved: np.ndarray) -> None:
        for o, size, shape in zip(offs, sizes, ((m, d, h), (m, h), (m, h, k), (m, k))):
            dst = best_snap[o:o + size].reshape(shape)
            src = flat[o:o + size].reshape(shape)
            dst[improved] = src[improved]

    for epoch in range(epochs):
        out, hidden = _forward(w1, b1, w2, b2, x_all)
        pred, val_pred = out[:, :n_train, :], out[:, n_train:, :]
        hidden_t = hidden[:, :n_train, :]

        # val loss belongs to the current weights: snapshot before stepping
        val_loss = np.mean((val_pred - yv[None, :, :]) ** 2, axis=(1, 2))
        improved = val_loss < best_val
        if improved.any():
            snapshot(improved)
            best_val = np.where(improved, val_loss, best_val)

        err = pred - yt[None, :, :]
        np.multiply(err, 2.0 / (n_train * k), out=err)
        g_w2[...] = np.swapaxes(hidden_t, 1, 2) @ err
        g_b2[...] = err.sum(axis=1)
        g_hidden = (err @ np.swapaxes(w2, 1, 2)) * (1.0 - hidden_t**2)
        g_w1[...] = x_all_t @ g_hidden
        g_b1[...] = g_hidden.sum(axis=1)

        t = epoch + 1
        adam_m += (1.0 - beta1) * (grad - adam_m)
        adam_v += (1.0 - beta2) * (grad * grad - adam_v)
        flat -= cfg.learning_rate * (adam_m / (1.0 - beta1**t)) / (
            np.sqrt(adam_v / (1.0 - beta2**t)) + eps
        )

    # the final post-step weights have not been scored yet
    pred, _ = _forward(w1, b1, w2, b2, xv)
    val_loss = np.mean((pred - yv[None, :, :]) ** 2, axis=(1, 2))
    improved = val_loss < best_val
    if improved.any():
        snapshot(improved)
        best_val = np.where(improved, val_loss, best_val)

    fw1 = best_snap[offs[0]:offs[1]].reshape(m, d, h).copy()
    fb1 = best_snap[offs[1]:offs[2]].reshape(m, h).copy()
    fw2 = best_snap[offs[2]:offs[3]].reshape(m, h, k).copy()
    fb2 = best_snap[offs[3]:offs[4]].reshape(m, k).copy()
    return EnsembleModel(
        w1=fw1, b1=fb1, w2=fw2, b2=fb2, scaler=scaler, cfg=cfg,
        train_log={
            "epochs_run": epochs,
            "best_val_loss": best_val.tolist(),
            "n_train": int(n_train),
            "n_val": int(n_val),
            "warm_start": True,
        },
    )


def _member_predictions(model: EnsembleModel, x: np.ndarray) -> np.ndarray:
    """(members, n, k) predictions in original units."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    if x.shape[1] != model.input_dim:
        raise ValueError(f"input has {x.shape[1]} dims, model expects {model.input_dim}")
    xs = model.scaler.scale_x(x)
    pred, _ = _forward(model.w1, model.b1, model.w2, model.b2, xs)
    return model.scaler.unscale_y(pred)


def predict(model: EnsembleModel, x: np.ndarray) -> np.ndarray:
    """Ensemble-mean prediction in original units; (k,) for a single input
    vector, (n, k) for a batch."""
    single = np.asarray(x).ndim == 1
    out = _member_predictions(model, x).mean(axis=0)
    return out[0] if single else out


def predict_conservative(
    model: EnsembleModel, x: np.ndarray, beta: float, senses: np.ndarray | None = None
) -> np.ndarray:
    """Per-output beta-quantile across members, oriented pessimistically.

    senses: +1 for outputs where larger is worse (upper-bounded metrics take
    the upper quantile), -1 where smaller is worse (lower-bounded metrics and
    the objective take the lower quantile). Default: all -1. beta = 0.5 is
    the member median either way.
    """
    if not 0.0 <= beta <= 1.0:
        raise ValueError("beta must lie in [0, 1]")
    single = np.asarray(x).ndim == 1
    preds = _member_predictions(model, x)  # (m, n, k)
    if senses is None:
        senses = -np.ones(model.output_dim)
    senses = np.asarray(senses)
    if senses.shape != (model.output_dim,):
        raise ValueError("senses must have one entry per output")
    hi = np.quantile(preds, beta, axis=0)
    lo = np.quantile(preds, 1.0 - beta, axis=0)
    out = np.where(senses > 0, hi, lo)
    return out[0] if single else out


def dump_model(model: EnsembleModel) -> str:
    """Plain-text model dump (topology, scaler, weights) for post-mortems."""
    lines = [
        "# ensemble model dump",
        f"members {model.n_members}",
        f"input_dim {model.input_dim}",
        f"hidden {model.w1.shape[2]}",
        f"output_dim {model.output_dim}",
    ]

    def emit(name, arr):
        flat = np.asarray(arr).ravel()
        lines.append(f"{name} {' '.join(repr(float(v)) for v in flat)}")

    emit("x_mean", model.scaler.x_mean)
    emit("x_std", model.scaler.x_std)
    emit("y_mean", model.scaler.y_mean)
    emit("y_std", model.scaler.y_std)
    for i in range(model.n_members):
        emit(f"w1.{i}", model.w1[i])
        emit(f"b1.{i}", model.b1[i])
        emit(f"w2.{i}", model.w2[i])
        emit(f"b2.{i}", model.b2[i])
    return "\n".join(lines) + "\n"
