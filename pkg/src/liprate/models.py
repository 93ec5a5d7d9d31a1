"""Dense networks with hand-derived forward/backward passes.

Classical models are the zero-hidden-layer special case: logistic
regression is widths (n, 1) with a sigmoid output, softmax regression is
(n, k) with a softmax output, linear regression is (n, 1) linear.  The
forward pass keeps every layer's activations so the penultimate batch is
available for the per-epoch activation bound.

Layer l computes a_l = g(a_{l-1} @ W_l + b_l); W_l has shape
(fan_in, fan_out).  ReLU's derivative at 0 is taken as 0.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from .data import Task
from .errors import ConfigurationError, DimensionError
from .lipschitz import (
    LipschitzEstimate,
    LossKind,
    LossSpec,
    RegKind,
    lc_binary,
    lc_multiclass,
    loss_value,
)
from .numeric import Rng

ACTIVATIONS = ("linear", "relu", "sigmoid", "softmax")

_LOSS_OUTPUT = {
    LossKind.LEAST_SQUARES: "linear",
    LossKind.BINARY_CE: "sigmoid",
    LossKind.MULTICLASS_CE: "softmax",
}

PARAMS_FORMAT_VERSION = 1


def sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def softmax(z: np.ndarray) -> np.ndarray:
    e = np.exp(z - z.max(axis=1, keepdims=True))
    return e / e.sum(axis=1, keepdims=True)


def _apply_activation(name: str, z: np.ndarray) -> np.ndarray:
    if name == "linear":
        return z
    if name == "relu":
        return np.maximum(z, 0.0)
    if name == "sigmoid":
        return sigmoid(z)
    if name == "softmax":
        return softmax(z)
    raise ConfigurationError(f"unknown activation {name!r}")


@dataclass
class ModelParams:
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    activations: tuple[str, ...]
    use_bias: bool = True

    @property
    def n_layers(self) -> int:
        return len(self.weights)

    @property
    def widths(self) -> tuple[int, ...]:
        return (self.weights[0].shape[0],) + tuple(w.shape[1] for w in self.weights)

    def copy(self) -> "ModelParams":
        return ModelParams(
            weights=[w.copy() for w in self.weights],
            biases=[b.copy() for b in self.biases],
            activations=self.activations,
            use_bias=self.use_bias,
        )

    def max_weight_norm(self) -> float:
        return max(float(np.linalg.norm(w)) for w in self.weights)

    def tensors(self) -> list[np.ndarray]:
        """Trainable tensors in update order (biases only when enabled)."""
        if self.use_bias:
            return list(self.weights) + list(self.biases)
        return list(self.weights)


@dataclass
class ForwardTrace:
    """Pre-activations and activations for one batch; activations[0] is the input."""

    zs: list[np.ndarray]
    activations: list[np.ndarray]

    @property
    def outputs(self) -> np.ndarray:
        return self.activations[-1]

    @property
    def penultimate(self) -> np.ndarray:
        return self.activations[-2]


@dataclass
class Gradients:
    weights: list[np.ndarray]
    biases: list[np.ndarray]

    def tensors(self, use_bias: bool = True) -> list[np.ndarray]:
        if use_bias:
            return list(self.weights) + list(self.biases)
        return list(self.weights)

    def all_finite(self) -> bool:
        return all(np.isfinite(t).all() for t in self.weights + self.biases)


def _validate_chain(widths, activations) -> None:
    if len(widths) < 2:
        raise ConfigurationError("need at least input and output widths")
    if any(w < 1 for w in widths):
        raise ConfigurationError("layer widths must be >= 1")
    if len(activations) != len(widths) - 1:
        raise ConfigurationError(
            f"{len(widths) - 1} layers need {len(widths) - 1} activations, "
            f"got {len(activations)}"
        )
    for i, a in enumerate(activations):
        if a not in ACTIVATIONS:
            raise ConfigurationError(f"unknown activation {a!r}")
        if a == "softmax" and i != len(activations) - 1:
            raise ConfigurationError("softmax is only valid as the output activation")


def init_params(
    widths,
    activations,
    rng: Rng,
    scale: float = 0.05,
    use_bias: bool = True,
) -> ModelParams:
    """Uniform weights in [-scale, scale], zero biases; deterministic per seed."""
    widths = tuple(int(w) for w in widths)
    activations = tuple(activations)
    _validate_chain(widths, activations)
    weights = [
        rng.uniform(-scale, scale, (widths[i], widths[i + 1]))
        for i in range(len(widths) - 1)
    ]
    biases = [np.zeros(widths[i + 1]) for i in range(len(widths) - 1)]
    return ModelParams(weights, biases, activations, use_bias=use_bias)


def check_loss_compatible(params: ModelParams, spec: LossSpec) -> None:
    expected = _LOSS_OUTPUT[spec.kind]
    if params.activations[-1] != expected:
        raise ConfigurationError(
            f"{spec.kind.value} expects a {expected} output layer, "
            f"got {params.activations[-1]!r}"
        )
    if spec.reg.kind is RegKind.TIKHONOV and params.n_layers != 1:
        raise ConfigurationError(
            "Tikhonov regularization is only supported for single-layer models"
        )


def forward(params: ModelParams, batch: np.ndarray) -> ForwardTrace:
    """Run the network on a batch of rows, keeping all intermediate values."""
    a = np.asarray(batch, dtype=np.float64)
    if a.ndim != 2 or a.shape[1] != params.weights[0].shape[0]:
        raise DimensionError(
            f"batch shape {a.shape} does not match input width "
            f"{params.weights[0].shape[0]}"
        )
    zs, activations = [], [a]
    for W, b, g in zip(params.weights, params.biases, params.activations):
        z = activations[-1] @ W + b
        zs.append(z)
        activations.append(_apply_activation(g, z))
    return ForwardTrace(zs=zs, activations=activations)


def _as_target_matrix(targets, task_width: int) -> np.ndarray:
    t = np.asarray(targets, dtype=np.float64)
    if t.ndim == 1:
        t = t[:, None]
    if t.shape[1] != task_width:
        raise ConfigurationError(
            f"target width {t.shape[1]} does not match output width {task_width}"
        )
    return t


def backward(
    params: ModelParams,
    trace: ForwardTrace,
    targets,
    spec: LossSpec,
    m: int,
) -> Gradients:
    """Analytic gradients of loss_value, regularization included.

    The output-layer delta is (prediction - target) / m for every
    supported loss/output pairing; hidden deltas chain through the layer
    derivatives.
    """
    check_loss_compatible(params, spec)
    out = trace.outputs
    T = _as_target_matrix(targets, out.shape[1])
    delta = (out - T) / m

    gw: list[np.ndarray] = [None] * params.n_layers
    gb: list[np.ndarray] = [None] * params.n_layers
    for layer in range(params.n_layers - 1, -1, -1):
        gw[layer] = trace.activations[layer].T @ delta
        gb[layer] = delta.sum(axis=0)
        if layer > 0:
            upstream = delta @ params.weights[layer].T
            g = params.activations[layer - 1]
            z = trace.zs[layer - 1]
            if g == "relu":
                upstream = np.where(z > 0, upstream, 0.0)
            elif g == "sigmoid":
                a = trace.activations[layer]
                upstream = upstream * a * (1.0 - a)
            elif g != "linear":
                raise ConfigurationError(f"{g!r} is not usable as a hidden activation")
            delta = upstream

    if spec.reg.kind is RegKind.L2 and spec.reg.lam != 0.0:
        for layer in range(params.n_layers):
            gw[layer] = gw[layer] + spec.reg.lam * params.weights[layer]
    elif spec.reg.kind is RegKind.TIKHONOV:
        W = params.weights[0]
        if spec.reg.gamma.shape[0] != W.size:
            raise DimensionError(
                f"Tikhonov matrix side {spec.reg.gamma.shape[0]} does not match "
                f"parameter count {W.size}"
            )
        gtg = spec.reg.gamma.T @ spec.reg.gamma
        gw[0] = gw[0] + 2.0 * (gtg @ W.ravel()).reshape(W.shape)

    if not params.use_bias:
        gb = [np.zeros_like(b) for b in params.biases]
    return Gradients(weights=gw, biases=gb)


def predict_classes(params: ModelParams, X: np.ndarray, task: Task) -> np.ndarray:
    out = forward(params, X).outputs
    if Task(task) is Task.MULTICLASS:
        return out.argmax(axis=1)
    if Task(task) is Task.BINARY:
        return (out[:, 0] >= 0.5).astype(int)
    raise ConfigurationError("regression task has no classes to predict")


def accuracy(params: ModelParams, X: np.ndarray, labels: np.ndarray, task: Task) -> float:
    pred = predict_classes(params, X, task)
    return float(np.mean(pred == np.asarray(labels).astype(int)))


def batch_loss(params: ModelParams, X, targets, spec: LossSpec, m: int | None = None) -> float:
    out = forward(params, X).outputs
    if m is None:
        m = len(X)
    t = _as_target_matrix(targets, out.shape[1])
    return loss_value(spec, out, t, params.weights, m)


def params_checksum(params: ModelParams) -> str:
    h = hashlib.sha256()
    h.update(repr(params.activations).encode())
    h.update(b"bias:1" if params.use_bias else b"bias:0")
    for t in params.weights + params.biases:
        h.update(np.ascontiguousarray(t).tobytes())
    return h.hexdigest()


def save_params(params: ModelParams, path) -> None:
    doc = {
        "format_version": PARAMS_FORMAT_VERSION,
        "activations": list(params.activations),
        "use_bias": params.use_bias,
        "weights": [w.tolist() for w in params.weights],
        "biases": [b.tolist() for b in params.biases],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh)


def load_params(path) -> ModelParams:
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("format_version") != PARAMS_FORMAT_VERSION:
        raise ConfigurationError(
            f"unsupported checkpoint version {doc.get('format_version')!r}"
        )
    return ModelParams(
        weights=[np.asarray(w, dtype=np.float64) for w in doc["weights"]],
        biases=[np.asarray(b, dtype=np.float64) for b in doc["biases"]],
        activations=tuple(doc["activations"]),
        use_bias=bool(doc["use_bias"]),
    )


@dataclass
class BoundCheckReport:
    """Sampled gradient statistics against the analytic constant.

    ``sup_tensor_norm_last`` is the largest last-layer gradient norm seen,
    ``sup_tensor_norm_all`` the largest over all layers, and
    ``sup_abs_entry_last`` / ``sup_class_col_norm_last`` the per-entry and
    per-class-column variants.  ``norm_violations`` counts draws whose
    last-layer gradient norm exceeded the constant; ``dominance_violations``
    counts draws where some earlier layer's largest gradient entry beat the
    last layer's.
    """

    samples: int
    radius: float
    lipschitz: float
    sup_abs_entry_last: float
    sup_class_col_norm_last: float
    sup_tensor_norm_last: float
    sup_tensor_norm_all: float
    norm_violations: int
    entry_violations: int
    dominance_violations: int


def _sample_radii(rng: Rng, count: int, radius: float, dim: int) -> np.ndarray:
    # uniform in the ball: radius ~ R * U^(1/dim)
    return radius * rng.uniform(0.0, 1.0, count) ** (1.0 / dim)


def _bound_check_single_layer(
    X: np.ndarray,
    targets: np.ndarray,
    task: Task,
    est: LipschitzEstimate,
    samples: int,
    radius: float,
    rng: Rng,
    chunk: int = 500,
) -> BoundCheckReport:
    m, n = X.shape
    binary = Task(task) is Task.BINARY
    k = 1 if binary else targets.shape[1]
    dim = n * k
    sup_entry = sup_col = sup_norm = 0.0
    viol_norm = viol_entry = 0
    done = 0
    while done < samples:
        c = min(chunk, samples - done)
        W = rng.normal(0.0, 1.0, (n, k * c))
        Wv = W.reshape(n, k, c)
        norms = np.sqrt((Wv**2).sum(axis=(0, 1)))
        radii = _sample_radii(rng, c, radius, dim)
        Wv *= (radii / norms)[None, None, :]
        Z = (X @ W).reshape(m, k, c)
        if binary:
            A = sigmoid(Z)
            D = A - targets[:, None, None]
        else:
            Z = Z - Z.max(axis=1, keepdims=True)
            A = np.exp(Z)
            A /= A.sum(axis=1, keepdims=True)
            D = A - targets[:, :, None]
        G = (X.T @ D.reshape(m, k * c)).reshape(n, k, c) / m
        entry = np.abs(G).max(axis=(0, 1))
        col = np.sqrt((G**2).sum(axis=0)).max(axis=1)
        full = np.sqrt((G**2).sum(axis=(0, 1)))
        sup_entry = max(sup_entry, float(entry.max()))
        sup_col = max(sup_col, float(col.max()))
        sup_norm = max(sup_norm, float(full.max()))
        viol_norm += int(np.count_nonzero(full > est.lipschitz))
        viol_entry += int(np.count_nonzero(entry > est.lipschitz))
        done += c
    return BoundCheckReport(
        samples=samples,
        radius=radius,
        lipschitz=est.lipschitz,
        sup_abs_entry_last=sup_entry,
        sup_class_col_norm_last=sup_col,
        sup_tensor_norm_last=sup_norm,
        sup_tensor_norm_all=sup_norm,
        norm_violations=viol_norm,
        entry_violations=viol_entry,
        dominance_violations=0,
    )


def grad_sup_bound_check(
    params: ModelParams,
    dataset,
    spec: LossSpec,
    samples: int,
    rng: Rng,
    radius: float = 10.0,
) -> BoundCheckReport:
    """Sample weight settings and compare gradient norms to the constant.

    Report-only: violations are counted, never raised.  Weights are drawn
    uniformly from the Frobenius ball of the given radius (biases stay 0).
    Single-layer classification models use a vectorized path.
    """
    task = dataset.task
    X = dataset.X
    m = dataset.m
    kz = float(np.linalg.norm(X)) if params.n_layers == 1 else None
    if task is Task.BINARY:
        est = lc_binary(np.linalg.norm(X), m) if params.n_layers == 1 else None
    elif task is Task.MULTICLASS:
        est = lc_multiclass(np.linalg.norm(X), dataset.k, m) if params.n_layers == 1 else None
    else:
        raise ConfigurationError("bound check is defined for classification tasks")

    if params.n_layers == 1:
        targets = dataset.y if task is Task.BINARY else dataset.Y
        return _bound_check_single_layer(
            X, targets, task, est, samples, radius, rng
        )

    # generic network: loop draws, using the constant from the penultimate
    # activations of each draw
    T = _as_target_matrix(dataset.targets(), params.weights[-1].shape[1])
    dims = sum(w.size for w in params.weights)
    sup_entry = sup_col = sup_norm_last = sup_norm_all = 0.0
    viol_norm = viol_entry = dominance = 0
    worst_L = None
    for _ in range(samples):
        draw = params.copy()
        flat = rng.normal(0.0, 1.0, dims)
        flat *= _sample_radii(rng, 1, radius, dims)[0] / np.linalg.norm(flat)
        pos = 0
        for i, w in enumerate(draw.weights):
            draw.weights[i] = flat[pos : pos + w.size].reshape(w.shape)
            pos += w.size
        trace = forward(draw, X)
        kz_draw = float(np.linalg.norm(trace.penultimate))
        if kz_draw > 0:
            if task is Task.BINARY:
                L = lc_binary(kz_draw, m).lipschitz
            else:
                L = lc_multiclass(kz_draw, dataset.k, m).lipschitz
        else:
            L = np.inf
        worst_L = L if worst_L is None else min(worst_L, L)
        grads = backward(draw, trace, T, spec, m)
        last = grads.weights[-1]
        entry_last = float(np.abs(last).max())
        norm_last = float(np.linalg.norm(last))
        col_last = float(np.sqrt((last**2).sum(axis=0)).max())
        entry_all = max(float(np.abs(g).max()) for g in grads.weights)
        norm_all = max(float(np.linalg.norm(g)) for g in grads.weights)
        sup_entry = max(sup_entry, entry_last)
        sup_col = max(sup_col, col_last)
        sup_norm_last = max(sup_norm_last, norm_last)
        sup_norm_all = max(sup_norm_all, norm_all)
        if norm_last > L:
            viol_norm += 1
        if entry_last > L:
            viol_entry += 1
        if entry_all > entry_last * (1.0 + 1e-12):
            dominance += 1
    return BoundCheckReport(
        samples=samples,
        radius=radius,
        lipschitz=float(worst_L),
        sup_abs_entry_last=sup_entry,
        sup_class_col_norm_last=sup_col,
        sup_tensor_norm_last=sup_norm_last,
        sup_tensor_norm_all=sup_norm_all,
        norm_violations=viol_norm,
        entry_violations=viol_entry,
        dominance_violations=dominance,
    )
