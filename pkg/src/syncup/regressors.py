"""Overall pose similarity (OPS) prediction from 13-dim BPD vectors.

Four interchangeable methods: an analytic additive baseline, a linear
epsilon-insensitive SVR trained by deterministic full-batch subgradient
descent, and two small MLPs (13->1 and 13->10->5->1) trained with Adam.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .audio_beats import Segment
from .errors import TooFewSamples, UntrainedModel, VersionMismatch
from .pose_similarity import BpdSeries, bpd_max

METHODS = ("addition", "svr", "nn_short", "nn_long")
NN_ARCHS = {"nn_short": (13, 1), "nn_long": (13, 10, 5, 1)}
LEAKY_SLOPE = 0.01
MODEL_FORMAT_VERSION = 1

MIN_TRAINING_SAMPLES = 20


@dataclass(frozen=True)
class RegressorModel:
    """A trained (or analytic) OPS predictor; immutable and shareable."""

    method: str
    lam: float
    params: dict[str, np.ndarray] = field(default_factory=dict)
    seed: int = 0
    epochs: int = 0
    loss_curve: tuple[float, ...] = ()

    def predict(self, x: np.ndarray) -> np.ndarray:
        """Raw predictions for (..., 13) inputs; no clamping, no imputation."""
        x = np.asarray(x, dtype=float)
        if self.method == "addition":
            return 1.0 - x.sum(axis=-1) / (13.0 * bpd_max(self.lam))
        if self.method == "svr":
            self._require("w", "b")
            return x @ self.params["w"] + self.params["b"][0]
        if self.method in NN_ARCHS:
            self._require("w0", "b0")
            return _nn_forward(self.params, x, len(NN_ARCHS[self.method]) - 1)[0]
        raise UntrainedModel(f"unknown method {self.method!r}")

    def _require(self, *names: str) -> None:
        for name in names:
            if name not in self.params:
                raise UntrainedModel(f"{self.method} model missing parameter {name!r}")


@dataclass(frozen=True)
class OpsSeries:
    """Per-frame OPS in [0, 1] plus reliability flags and segment means."""

    method: str
    values: np.ndarray              # (T,)
    occluded: np.ndarray            # (T,) any body part missing
    missing: np.ndarray             # (T,) no body part usable; value carried
    segment_means: tuple[float, ...] = ()


def make_addition_model(lam: float) -> RegressorModel:
    return RegressorModel(method="addition", lam=lam)


def ops_predict(model: RegressorModel, bpd: np.ndarray) -> float:
    """OPS for a single 13-dim BPD vector, clamped to [0, 1].

    NaN entries (occluded parts) are imputed with the mean of the present
    entries before prediction.
    """
    x = np.asarray(bpd, dtype=float).copy()
    present = ~np.isnan(x)
    if not present.any():
        raise ValueError("all 13 BPD entries missing; frame must be flagged, not predicted")
    if not present.all():
        x[~present] = x[present].mean()
    return float(np.clip(model.predict(x), 0.0, 1.0))


def ops_series(model: RegressorModel, series: BpdSeries,
               segments: list[Segment] | None = None) -> OpsSeries:
    """OPS per frame of a BPD series, with occlusion flags.

    Frames with no usable part carry the previous frame's value (0.5 when
    there is none) and are flagged missing.
    """
    values_in = series.values
    t_total = values_in.shape[0]
    present = series.valid
    n_present = present.sum(axis=1)
    occluded = n_present < 13
    missing = n_present == 0

    imputed = values_in.copy()
    row_mean = np.where(n_present > 0,
                        np.nansum(np.where(present, values_in, 0.0), axis=1) / np.maximum(n_present, 1),
                        0.0)
    fill = np.broadcast_to(row_mean[:, None], imputed.shape)
    imputed = np.where(present, imputed, fill)

    raw = np.clip(model.predict(imputed), 0.0, 1.0)
    values = np.empty(t_total)
    prev = 0.5
    for t in range(t_total):
        if missing[t]:
            values[t] = prev
        else:
            values[t] = raw[t]
            prev = raw[t]

    means: tuple[float, ...] = ()
    if segments is not None:
        means = tuple(
            float(values[s.frame_first:s.frame_last + 1].mean()) for s in segments
        )
    return OpsSeries(
        method=model.method,
        values=values,
        occluded=occluded,
        missing=missing,
        segment_means=means,
    )


# --- SVR ----------------------------------------------------------------------

def svr_loss(w: np.ndarray, b: float, x: np.ndarray, y: np.ndarray,
             c: float, epsilon: float) -> float:
    err = x @ w + b - y
    hinge = np.clip(np.abs(err) - epsilon, 0.0, None)
    return float(0.5 * w @ w + c * hinge.sum())


def train_svr(x: np.ndarray, y: np.ndarray, *, lam: float, c: float = 1.0,
              epsilon: float = 0.01, seed: int = 0, epochs: int = 2000,
              lr: float = 0.05, lr_decay: float = 0.02) -> RegressorModel:
    """Linear epsilon-insensitive SVR by full-batch subgradient descent.

    The update is deterministic: zero init, gradient direction clipped to
    unit norm, step size lr / (1 + lr_decay * t). The recorded loss curve is
    non-increasing up to subgradient oscillation, which the decaying step
    averages out.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(x) < MIN_TRAINING_SAMPLES:
        raise TooFewSamples(f"{len(x)} samples; need >= {MIN_TRAINING_SAMPLES}")

    w = np.zeros(x.shape[1])
    b = 0.0
    curve = []
    for t in range(epochs):
        err = x @ w + b - y
        outside = np.abs(err) > epsilon
        sign = np.sign(err) * outside
        g_w = w + c * (sign @ x)
        g_b = c * sign.sum()
        norm = float(np.sqrt(g_w @ g_w + g_b * g_b))
        if norm > 1.0:
            g_w /= norm
            g_b /= norm
        step = lr / (1.0 + lr_decay * t)
        w = w - step * g_w
        b = b - step * g_b
        curve.append(svr_loss(w, b, x, y, c, epsilon))

    return RegressorModel(
        method="svr",
        lam=lam,
        params={"w": w, "b": np.array([b])},
        seed=seed,
        epochs=epochs,
        loss_curve=tuple(curve),
    )


# --- Neural networks -----------------------------------------------------------

def _leaky(z: np.ndarray) -> np.ndarray:
    return np.where(z > 0, z, LEAKY_SLOPE * z)


def _leaky_grad(z: np.ndarray) -> np.ndarray:
    return np.where(z > 0, 1.0, LEAKY_SLOPE)


def _nn_forward(params: dict[str, np.ndarray], x: np.ndarray, n_layers: int):
    """Returns (predictions (...,), [pre-activations], [activations])."""
    a = np.atleast_2d(np.asarray(x, dtype=float))
    pre, acts = [], [a]
    for layer in range(n_layers):
        z = a @ params[f"w{layer}"].T + params[f"b{layer}"]
        pre.append(z)
        a = _leaky(z) if layer < n_layers - 1 else z
        acts.append(a)
    pred = a[..., 0]
    if np.asarray(x).ndim == 1:
        return pred[0], pre, acts
    return pred, pre, acts


def nn_loss_and_grads(params: dict[str, np.ndarray], x: np.ndarray, y: np.ndarray,
                      arch: tuple[int, ...]) -> tuple[float, dict[str, np.ndarray]]:
    """RMSE loss over a batch and its analytic gradients."""
    n_layers = len(arch) - 1
    x = np.atleast_2d(np.asarray(x, dtype=float))
    y = np.asarray(y, dtype=float).ravel()
    pred, pre, acts = _nn_forward(params, x, n_layers)
    r = pred - y
    mse = float(np.mean(r ** 2))
    loss = float(np.sqrt(mse))
    grads = {k: np.zeros_like(v) for k, v in params.items()}
    if loss < 1e-15:
        return loss, grads
    da = (r / (len(y) * loss))[:, None]
    for layer in reversed(range(n_layers)):
        dz = da if layer == n_layers - 1 else da * _leaky_grad(pre[layer])
        grads[f"w{layer}"] = dz.T @ acts[layer]
        grads[f"b{layer}"] = dz.sum(axis=0)
        da = dz @ params[f"w{layer}"]
    return loss, grads


def _init_params(arch: tuple[int, ...], rng: np.random.Generator) -> dict[str, np.ndarray]:
    params = {}
    for layer in range(len(arch) - 1):
        fan_in, fan_out = arch[layer], arch[layer + 1]
        bound = 1.0 / np.sqrt(fan_in)
        params[f"w{layer}"] = rng.uniform(-bound, bound, size=(fan_out, fan_in))
        params[f"b{layer}"] = rng.uniform(-bound, bound, size=fan_out)
    return params


def train_nn(x: np.ndarray, y: np.ndarray, *, arch: str, lam: float, seed: int = 0,
             epochs: int = 50, lr: float = 0.01, batch_size: int = 32,
             beta1: float = 0.9, beta2: float = 0.999, adam_eps: float = 1e-8,
             init_params: dict[str, np.ndarray] | None = None) -> RegressorModel:
    """Train an MLP on RMSE loss with Adam; deterministic given the seed."""
    if arch not in NN_ARCHS:
        raise ValueError(f"arch must be one of {sorted(NN_ARCHS)}, got {arch!r}")
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(x) < MIN_TRAINING_SAMPLES:
        raise TooFewSamples(f"{len(x)} samples; need >= {MIN_TRAINING_SAMPLES}")

    layout = NN_ARCHS[arch]
    rng = np.random.default_rng(seed)
    params = {k: v.astype(float).copy() for k, v in init_params.items()} if init_params \
        else _init_params(layout, rng)

    m = {k: np.zeros_like(v) for k, v in params.items()}
    v = {k: np.zeros_like(p) for k, p in params.items()}
    step = 0
    curve = []
    n = len(x)
    for _ in range(epochs):
        order = rng.permutation(n)
        epoch_losses = []
        for start in range(0, n, batch_size):
            idx = order[start:start + batch_size]
            loss, grads = nn_loss_and_grads(params, x[idx], y[idx], layout)
            epoch_losses.append(loss)
            step += 1
            for k in params:
                m[k] = beta1 * m[k] + (1 - beta1) * grads[k]
                v[k] = beta2 * v[k] + (1 - beta2) * grads[k] ** 2
                m_hat = m[k] / (1 - beta1 ** step)
                v_hat = v[k] / (1 - beta2 ** step)
                params[k] = params[k] - lr * m_hat / (np.sqrt(v_hat) + adam_eps)
        curve.append(float(np.mean(epoch_losses)))

    return RegressorModel(
        method=arch,
        lam=lam,
        params=params,
        seed=seed,
        epochs=epochs,
        loss_curve=tuple(curve),
    )


# --- serialization --------------------------------------------------------------

def model_to_text(model: RegressorModel) -> str:
    """Versioned text format; floats round-trip exactly through json."""
    doc = {
        "format": "ops-regressor",
        "version": MODEL_FORMAT_VERSION,
        "method": model.method,
        "lambda": model.lam,
        "seed": model.seed,
        "epochs": model.epochs,
        "loss_curve": list(model.loss_curve),
        "params": {k: v.ravel().tolist() for k, v in model.params.items()},
        "shapes": {k: list(v.shape) for k, v in model.params.items()},
    }
    return json.dumps(doc, indent=1)


def model_from_text(text: str) -> RegressorModel:
    doc = json.loads(text)
    if doc.get("format") != "ops-regressor":
        raise UntrainedModel("not a regressor model file")
    if doc.get("version") != MODEL_FORMAT_VERSION:
        raise VersionMismatch(doc.get("version"), MODEL_FORMAT_VERSION)
    params = {
        k: np.array(doc["params"][k], dtype=float).reshape(doc["shapes"][k])
        for k in doc["params"]
    }
    return RegressorModel(
        method=doc["method"],
        lam=doc["lambda"],
        params=params,
        seed=doc["seed"],
        epochs=doc["epochs"],
        loss_curve=tuple(doc["loss_curve"]),
    )
