"""Loss definitions and the closed-form Lipschitz constants.

The learning rate is the inverse of the constant.  Constants by loss:

* least squares, direct form:        (K/m)|X'X| + (1/m)|y'X|
* least squares, network form:       (1/m)(K_a + |y|) * K_z
* binary cross-entropy (sigmoid):    K_z / (2m)
* multiclass cross-entropy (softmax): ((k-1)/(k m)) * K_z

where K bounds the weight norm, K_z bounds the penultimate-activation
norm (equal to |X| when there are no hidden layers), K_a bounds the
output-activation norm, and m is the batch size used for the gradient.
An L2 penalty (lam/2)|w|^2 adds lam*K; a Tikhonov penalty |G w|^2 adds
2K|G.G|.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DimensionError,
    InvalidBoundError,
    InvalidClassCountError,
)
from .numeric import as_matrix, frobenius_norm, matmul, vector_2norm

PROB_CLAMP = 1e-12


class LossKind(str, enum.Enum):
    LEAST_SQUARES = "least_squares"
    BINARY_CE = "binary_ce"
    MULTICLASS_CE = "multiclass_ce"


class RegKind(str, enum.Enum):
    NONE = "none"
    L2 = "l2"
    TIKHONOV = "tikhonov"


@dataclass(frozen=True)
class Regularization:
    kind: RegKind = RegKind.NONE
    lam: float = 0.0
    gamma: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", RegKind(self.kind))
        if self.kind is RegKind.L2 and self.lam < 0:
            raise InvalidBoundError("L2 strength must be >= 0")
        if self.kind is RegKind.TIKHONOV:
            if self.gamma is None:
                raise InvalidBoundError("Tikhonov regularization needs a matrix")
            g = as_matrix(self.gamma)
            if g.shape[0] != g.shape[1]:
                raise DimensionError("Tikhonov matrix must be square")
            object.__setattr__(self, "gamma", g)


NO_REG = Regularization()


@dataclass(frozen=True)
class LossSpec:
    kind: LossKind
    reg: Regularization = NO_REG


@dataclass(frozen=True)
class LipschitzEstimate:
    """A constant L > 0, the learning rate 1/L, and the numbers behind it."""

    lipschitz: float
    weight_bound: float | None = None       # K
    activation_bound: float | None = None   # K_z
    output_bound: float | None = None       # K_a
    data_norm: float | None = None          # |X|
    target_norm: float | None = None        # |y|
    batch_size: int | None = None
    n_classes: int | None = None
    reg_increment: float = 0.0

    def __post_init__(self):
        if not self.lipschitz > 0 or not np.isfinite(self.lipschitz):
            raise InvalidBoundError(
                f"Lipschitz constant must be positive and finite, got {self.lipschitz}"
            )

    @property
    def lr(self) -> float:
        return 1.0 / self.lipschitz

    def with_reg(self, increment: float) -> "LipschitzEstimate":
        if increment == 0.0:
            return self
        return LipschitzEstimate(
            lipschitz=self.lipschitz + increment,
            weight_bound=self.weight_bound,
            activation_bound=self.activation_bound,
            output_bound=self.output_bound,
            data_norm=self.data_norm,
            target_norm=self.target_norm,
            batch_size=self.batch_size,
            n_classes=self.n_classes,
            reg_increment=increment,
        )


def _check_batch(m: int) -> int:
    m = int(m)
    if m < 1:
        raise DimensionError(f"batch size must be >= 1, got {m}")
    return m


def lc_linear_regression(X, y, weight_bound: float, m: int) -> LipschitzEstimate:
    """Least-squares constant (K/m)|X'X| + (1/m)|y'X|."""
    if weight_bound <= 0:
        raise InvalidBoundError(f"weight bound must be positive, got {weight_bound}")
    m = _check_batch(m)
    Xm = as_matrix(X)
    yv = np.asarray(y, dtype=np.float64).reshape(-1)
    gram = frobenius_norm(matmul(Xm.T, Xm))
    cross = vector_2norm(yv @ Xm)
    L = (weight_bound / m) * gram + cross / m
    return LipschitzEstimate(
        lipschitz=L,
        weight_bound=float(weight_bound),
        data_norm=frobenius_norm(Xm),
        target_norm=vector_2norm(yv) if yv.size else 0.0,
        batch_size=m,
    )


def lc_nn_regression(
    output_bound: float, y, activation_bound: float, m: int
) -> LipschitzEstimate:
    """Least-squares constant for a network: (1/m)(K_a + |y|) K_z."""
    if output_bound <= 0 or activation_bound <= 0:
        raise InvalidBoundError("activation bounds must be positive")
    m = _check_batch(m)
    yv = np.asarray(y, dtype=np.float64).reshape(-1)
    y_norm = vector_2norm(yv) if yv.size else 0.0
    L = (output_bound + y_norm) * activation_bound / m
    return LipschitzEstimate(
        lipschitz=L,
        activation_bound=float(activation_bound),
        output_bound=float(output_bound),
        target_norm=y_norm,
        batch_size=m,
    )


def lc_binary(activation_bound: float, m: int) -> LipschitzEstimate:
    """Binary cross-entropy constant K_z / (2m)."""
    if activation_bound <= 0:
        raise InvalidBoundError("activation bound must be positive")
    m = _check_batch(m)
    return LipschitzEstimate(
        lipschitz=activation_bound / (2.0 * m),
        activation_bound=float(activation_bound),
        batch_size=m,
        n_classes=2,
    )


def lc_multiclass(activation_bound: float, k: int, m: int) -> LipschitzEstimate:
    """Multiclass cross-entropy constant ((k-1)/(k m)) K_z."""
    if k < 2:
        raise InvalidClassCountError(f"need at least 2 classes, got {k}")
    if activation_bound <= 0:
        raise InvalidBoundError("activation bound must be positive")
    m = _check_batch(m)
    return LipschitzEstimate(
        lipschitz=(k - 1) / (k * m) * activation_bound,
        activation_bound=float(activation_bound),
        batch_size=m,
        n_classes=int(k),
    )


def reg_increment(reg: Regularization, weight_bound: float) -> float:
    """Additive Lipschitz increase of the penalty term."""
    if weight_bound <= 0:
        raise InvalidBoundError(f"weight bound must be positive, got {weight_bound}")
    if reg.kind is RegKind.NONE:
        return 0.0
    if reg.kind is RegKind.L2:
        return reg.lam * weight_bound
    return 2.0 * weight_bound * frobenius_norm(matmul(reg.gamma, reg.gamma))


def compute_kz(penultimate) -> float:
    """Frobenius norm of the penultimate-activation matrix.

    With no hidden layers the penultimate activations are the input batch,
    so this is |X|.  Callers must reject a zero result before inverting.
    """
    return frobenius_norm(penultimate)


def _flat_weights(weights) -> np.ndarray:
    if isinstance(weights, np.ndarray):
        return weights.ravel()
    return np.concatenate([np.asarray(w).ravel() for w in weights])


def reg_penalty(reg: Regularization, weights) -> float:
    """Penalty value added to the data loss: (lam/2)|w|^2 or |G w|^2."""
    if reg.kind is RegKind.NONE:
        return 0.0
    w = _flat_weights(weights)
    if reg.kind is RegKind.L2:
        return 0.5 * reg.lam * float(w @ w)
    if reg.gamma.shape[0] != w.size:
        raise DimensionError(
            f"Tikhonov matrix side {reg.gamma.shape[0]} does not match "
            f"parameter count {w.size}"
        )
    gw = reg.gamma @ w
    return float(gw @ gw)


def loss_value(spec: LossSpec, predictions, targets, weights, m: int) -> float:
    """Mean loss for the given kind plus the regularization penalty.

    Predicted probabilities are clamped away from 0 and 1 before any log,
    so the value is always finite; gradients are unaffected by the clamp.
    """
    m = _check_batch(m)
    p = np.asarray(predictions, dtype=np.float64)
    t = np.asarray(targets, dtype=np.float64)
    if spec.kind is LossKind.LEAST_SQUARES:
        d = p.reshape(t.shape) - t
        base = 0.5 * float(np.sum(d * d)) / m
    elif spec.kind is LossKind.BINARY_CE:
        pc = np.clip(p.reshape(t.shape), PROB_CLAMP, 1.0 - PROB_CLAMP)
        base = -float(np.sum(t * np.log(pc) + (1.0 - t) * np.log(1.0 - pc))) / m
    else:
        if p.shape != t.shape:
            raise DimensionError(
                f"prediction shape {p.shape} does not match one-hot shape {t.shape}"
            )
        pc = np.clip(p, PROB_CLAMP, 1.0 - PROB_CLAMP)
        base = -float(np.sum(t * np.log(pc))) / m
    return base + (reg_penalty(spec.reg, weights) if weights is not None else 0.0)


def loss_kind_for_task(task) -> LossKind:
    from .data import Task

    return {
        Task.REGRESSION: LossKind.LEAST_SQUARES,
        Task.BINARY: LossKind.BINARY_CE,
        Task.MULTICLASS: LossKind.MULTICLASS_CE,
    }[Task(task)]
