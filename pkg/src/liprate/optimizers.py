"""Optimizer family with tracked gradient-norm constants.

Plain gradient descent steps at the inverse of an analytic constant.  The
momentum / RMSprop / Adam variants keep exponentially weighted averages of
gradients and of the gradient-norm maxima, and use the inverse of the
tracked norm as the step scale:

* momentum:  K <- b K + (1-b) max|grad|;      W <- W - (1/K) V
* RMSprop:   K <- b K + (1-b) max|grad^2|;    W <- W - ((sqrt(K)+e)/max|grad|) * grad/(sqrt(S)+e)
* Adam:      K1, K2 as above;                 W <- W - ((sqrt(K2)+e)/K1) * V/(sqrt(S)+e)

max|.| is the largest Frobenius norm over the parameter tensors.  For
classification the Adam K2 feed uses the two-term estimate
((k-1)^2/(k^2 m^2)) kz^2 + lam^2 max_w^2 instead of the raw squared-norm.
Optional bias correction divides every average by 1 - b^t, t being the
epoch number by default.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .data import Task
from .errors import (
    ConfigurationError,
    DegenerateGradientError,
    DivergenceError,
    InvalidBoundError,
)
from .lipschitz import (
    LipschitzEstimate,
    LossSpec,
    compute_kz,
    lc_binary,
    lc_linear_regression,
    lc_multiclass,
    lc_nn_regression,
    reg_increment,
)
from .models import Gradients, ModelParams, forward


class OptimizerKind(str, enum.Enum):
    SGD = "sgd"
    ADAMO = "adamo"
    ADA_RMSPROP = "adarmsprop"
    AUTO_ADAM = "autoadam"


@dataclass
class OptimizerConfig:
    kind: OptimizerKind = OptimizerKind.SGD
    beta1: float = 0.9
    beta2: float = 0.999
    eps_stab: float = 1e-8
    bias_correction: bool = False
    correction_unit: str = "epoch"  # or "step"
    # momentum: fixed learning rate for epoch 1 (also seeds K); None disables
    first_epoch_lr: float | None = None
    # RMSprop: fall back to this rate when the first-epoch step scale is large
    fallback_lr: float = 1e-3
    fallback_trigger: float = 10.0
    # Adam diagnostic mode: pin the two tracked constants
    fixed_k1: float | None = None
    fixed_k2: float | None = None

    def __post_init__(self):
        if not (0.0 <= self.beta1 < 1.0 and 0.0 <= self.beta2 < 1.0):
            raise InvalidBoundError("betas must lie in [0, 1)")
        if self.eps_stab <= 0:
            raise InvalidBoundError("stability epsilon must be positive")
        if self.correction_unit not in ("epoch", "step"):
            raise ConfigurationError("correction unit must be 'epoch' or 'step'")


@dataclass
class OptimizerState:
    """Per-run mutable state: EWA tensors, tracked constants, counters."""

    config: OptimizerConfig
    velocity: list[np.ndarray] | None = None   # EWA of gradients
    sq_avg: list[np.ndarray] | None = None     # EWA of squared gradients
    k: float = 0.0                             # EWA of max gradient norm
    k1: float = 0.0
    k2: float = 0.0
    t: int = 0                                 # step counter
    epoch: int = 1
    last_lr: float | None = None               # scalar step scale actually used
    fallback_applied: bool = False

    def start_epoch(self, epoch: int) -> None:
        self.epoch = int(epoch)
        cfg = self.config
        if (
            cfg.kind is OptimizerKind.ADAMO
            and cfg.first_epoch_lr is not None
            and epoch == 1
        ):
            self.k = cfg.first_epoch_lr

    def _correction(self, beta: float) -> float:
        if not self.config.bias_correction:
            return 1.0
        t = self.epoch if self.config.correction_unit == "epoch" else self.t
        t = max(t, 1)
        return 1.0 - beta**t


def _check_finite(grads: Gradients) -> None:
    if not grads.all_finite():
        raise DivergenceError("nonfinite gradients; training diverged")


def _max_tensor_norm(tensors) -> float:
    return max(float(np.linalg.norm(t)) for t in tensors)


def _max_sq_tensor_norm(tensors) -> float:
    return max(float(np.linalg.norm(t * t)) for t in tensors)


def _ewa_update(avg, beta: float, values) -> list[np.ndarray]:
    if avg is None:
        return [(1.0 - beta) * v for v in values]
    return [beta * a + (1.0 - beta) * v for a, v in zip(avg, values)]


def _apply(params: ModelParams, scale: float, direction) -> None:
    for tensor, d in zip(params.tensors(), direction):
        tensor -= scale * d


def sgd_step(params: ModelParams, grads: Gradients, est: LipschitzEstimate) -> ModelParams:
    """One descent step at the inverse constant, biases included."""
    _check_finite(grads)
    lr = est.lr
    if not np.isfinite(lr) or lr <= 0:
        raise InvalidBoundError(f"learning rate must be positive and finite, got {lr}")
    _apply(params, lr, grads.tensors(params.use_bias))
    return params


def adamo_step(
    state: OptimizerState, params: ModelParams, grads: Gradients
) -> tuple[OptimizerState, ModelParams]:
    """Momentum step scaled by the tracked max-gradient-norm average."""
    _check_finite(grads)
    cfg = state.config
    tensors = grads.tensors(params.use_bias)
    state.t += 1
    state.velocity = _ewa_update(state.velocity, cfg.beta1, tensors)
    state.k = cfg.beta1 * state.k + (1.0 - cfg.beta1) * _max_tensor_norm(tensors)
    corr = state._correction(cfg.beta1)
    v_hat = [v / corr for v in state.velocity]
    if cfg.first_epoch_lr is not None and state.epoch == 1:
        lr = cfg.first_epoch_lr
    else:
        k_hat = state.k / corr
        if k_hat == 0.0:
            raise DegenerateGradientError("tracked gradient norm is zero")
        lr = 1.0 / k_hat
    state.last_lr = lr
    _apply(params, lr, v_hat)
    return state, params


def adarmsprop_step(
    state: OptimizerState, params: ModelParams, grads: Gradients
) -> tuple[OptimizerState, ModelParams]:
    """RMSprop step; the scalar scale is (sqrt(K)+e)/max|grad|."""
    _check_finite(grads)
    cfg = state.config
    tensors = grads.tensors(params.use_bias)
    state.t += 1
    state.sq_avg = _ewa_update(state.sq_avg, cfg.beta2, [t * t for t in tensors])
    state.k = cfg.beta2 * state.k + (1.0 - cfg.beta2) * _max_sq_tensor_norm(tensors)
    gmax = _max_tensor_norm(tensors)
    if gmax == 0.0:
        raise DegenerateGradientError("zero gradient; cannot scale the step")
    corr = state._correction(cfg.beta2)
    k_hat = state.k / corr
    s_hat = [s / corr for s in state.sq_avg]
    scale = (np.sqrt(k_hat) + cfg.eps_stab) / gmax
    if state.epoch == 1 and scale > cfg.fallback_trigger:
        scale = cfg.fallback_lr
        state.fallback_applied = True
    state.last_lr = float(scale)
    direction = [g / (np.sqrt(s) + cfg.eps_stab) for g, s in zip(tensors, s_hat)]
    _apply(params, scale, direction)
    return state, params


def autoadam_kz_feed(
    kz: float, k: int, m: int, lam: float, max_w: float
) -> float:
    """Two-term estimate of the squared max gradient norm for classification."""
    if k < 2:
        raise ConfigurationError("class-count-dependent estimate needs k >= 2")
    return ((k - 1) ** 2 / (k**2 * m**2)) * kz**2 + lam**2 * max_w**2


def autoadam_step(
    state: OptimizerState,
    params: ModelParams,
    grads: Gradients,
    kz: float,
    k: int,
    m: int,
    lam: float,
    max_w: float,
) -> tuple[OptimizerState, ModelParams]:
    """Adam step with both tracked constants; K2 is fed by the estimate."""
    _check_finite(grads)
    cfg = state.config
    tensors = grads.tensors(params.use_bias)
    state.t += 1
    state.velocity = _ewa_update(state.velocity, cfg.beta1, tensors)
    state.sq_avg = _ewa_update(state.sq_avg, cfg.beta2, [t * t for t in tensors])
    state.k1 = cfg.beta1 * state.k1 + (1.0 - cfg.beta1) * _max_tensor_norm(tensors)
    state.k2 = cfg.beta2 * state.k2 + (1.0 - cfg.beta2) * autoadam_kz_feed(
        kz, k, m, lam, max_w
    )
    c1 = state._correction(cfg.beta1)
    c2 = state._correction(cfg.beta2)
    k1 = cfg.fixed_k1 if cfg.fixed_k1 is not None else state.k1 / c1
    k2 = cfg.fixed_k2 if cfg.fixed_k2 is not None else state.k2 / c2
    if k1 == 0.0:
        raise DegenerateGradientError("tracked gradient norm is zero")
    v_hat = [v / c1 for v in state.velocity]
    s_hat = [s / c2 for s in state.sq_avg]
    scale = (np.sqrt(k2) + cfg.eps_stab) / k1
    state.last_lr = float(scale)
    direction = [v / (np.sqrt(s) + cfg.eps_stab) for v, s in zip(v_hat, s_hat)]
    _apply(params, scale, direction)
    return state, params


@dataclass
class LrTrace:
    """Per-epoch record of the effective rate and its ingredients."""

    epochs: list[int] = field(default_factory=list)
    lrs: list[float] = field(default_factory=list)
    kz: list[float | None] = field(default_factory=list)
    max_w: list[float | None] = field(default_factory=list)
    lipschitz: list[float | None] = field(default_factory=list)

    def append(self, epoch, lr, kz=None, max_w=None, lipschitz=None):
        if not (np.isfinite(lr) and lr > 0):
            raise InvalidBoundError(f"recorded rate must be positive and finite, got {lr}")
        self.epochs.append(int(epoch))
        self.lrs.append(float(lr))
        self.kz.append(None if kz is None else float(kz))
        self.max_w.append(None if max_w is None else float(max_w))
        self.lipschitz.append(None if lipschitz is None else float(lipschitz))


def epoch_lr_recompute(
    params: ModelParams,
    batch_X: np.ndarray,
    targets,
    task: Task,
    spec: LossSpec,
    m: int | None = None,
    weight_bound: float | None = None,
) -> LipschitzEstimate:
    """Fresh constant from the current penultimate activations.

    Runs a forward pass to bound the penultimate activations, measures the
    largest weight-tensor norm, dispatches on task, and adds the
    regularization increment.  ``m`` defaults to the batch row count.
    """
    task = Task(task)
    trace = forward(params, batch_X)
    kz = compute_kz(trace.penultimate)
    if kz <= 0.0:
        raise DegenerateGradientError(
            "penultimate activations are all zero; the rate would be infinite. "
            "Use a first-epoch override or rescale the data."
        )
    if m is None:
        m = len(batch_X)
    max_w = params.max_weight_norm()
    if task is Task.BINARY:
        est = lc_binary(kz, m)
    elif task is Task.MULTICLASS:
        k = np.asarray(targets).shape[1]
        est = lc_multiclass(kz, k, m)
    else:
        bound = weight_bound if weight_bound is not None else max_w
        if bound <= 0.0:
            raise InvalidBoundError(
                "regression constant needs a positive weight bound; "
                "pass weight_bound explicitly for zero-initialized models"
            )
        y = np.asarray(targets, dtype=np.float64).reshape(-1)
        if params.n_layers == 1:
            # no hidden layers: the penultimate batch is the input, use the
            # direct least-squares form
            est = lc_linear_regression(batch_X, y, bound, m)
        else:
            est = lc_nn_regression(bound * kz, y, kz, m)
    if spec.reg.kind.value != "none":
        bound = weight_bound if weight_bound is not None else max(max_w, 1e-12)
        est = est.with_reg(reg_increment(spec.reg, bound))
    return est
