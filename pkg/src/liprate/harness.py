"""Experiment runner: epochs-to-threshold and accuracy-after-N comparisons
between a fixed rate and the inverse-constant rate, plus the convergence
checks on random convex quadratics.

Both arms of a comparison share the dataset, the split, the initial
weights (asserted by checksum) and the batch order.  Threshold runs stop
when the full training loss reaches the threshold; budget runs go for a
fixed number of epochs.  Metric CSVs are written with ``repr`` floats so
same-seed runs are byte-identical and values round-trip exactly.
"""

from __future__ import annotations

import csv
import json
import math
import time
from dataclasses import dataclass, field, asdict

import numpy as np

from .data import Dataset, Task, apply_scaling, estimate_k_bound, load_csv
from .errors import (
    ConfigurationError,
    InvalidToleranceError,
    UnsupportedMetricError,
)
from .lipschitz import (
    LipschitzEstimate,
    LossSpec,
    Regularization,
    RegKind,
    loss_kind_for_task,
)
from .models import (
    ModelParams,
    accuracy,
    batch_loss,
    backward,
    forward,
    init_params,
    params_checksum,
    _LOSS_OUTPUT,
)
from .numeric import Rng
from .optimizers import (
    LrTrace,
    OptimizerConfig,
    OptimizerKind,
    OptimizerState,
    adamo_step,
    adarmsprop_step,
    autoadam_step,
    epoch_lr_recompute,
    sgd_step,
)

HARD_EPOCH_CAP = 10_000_000


@dataclass
class ExperimentConfig:
    """Everything a run needs; seeds fix data order, split, and init."""

    task: Task
    data_path: str | None = None
    target: str | int = "target"
    header: bool = True
    scaling: str = "none"            # none | sum_to_one | center_max
    drop_degenerate: bool = True
    hidden: tuple[int, ...] = ()
    hidden_activation: str = "relu"
    use_bias: bool = True
    init_scale: float = 0.05
    optimizer: OptimizerKind = OptimizerKind.SGD
    lr_policy: str = "adaptive"      # adaptive | fixed
    alpha: float = 0.1
    loss_threshold: float | None = None
    epochs: int | None = None
    max_epochs: int = HARD_EPOCH_CAP
    batch_size: int | None = None    # None = full batch
    seed: int = 0
    split_fraction: float = 0.0      # validation share; 0 = train on everything
    reg_kind: RegKind = RegKind.NONE
    reg_lambda: float = 0.0
    beta1: float = 0.9
    beta2: float = 0.999
    eps_stab: float = 1e-8
    bias_correction: bool = False
    first_epoch_lr: float | None = None
    fixed_k1: float | None = None
    fixed_k2: float | None = None
    weight_bound: float | None = None  # regression K; estimated when None

    def __post_init__(self):
        self.task = Task(self.task)
        self.optimizer = OptimizerKind(self.optimizer)
        self.reg_kind = RegKind(self.reg_kind)
        self.hidden = tuple(int(h) for h in self.hidden)
        if self.lr_policy not in ("adaptive", "fixed"):
            raise ConfigurationError(f"unknown lr policy {self.lr_policy!r}")
        if self.loss_threshold is None and self.epochs is None:
            raise ConfigurationError("set a loss threshold or an epoch budget")
        if not 0.0 <= self.split_fraction < 1.0:
            raise ConfigurationError("split fraction must be in [0, 1)")

    def loss_spec(self) -> LossSpec:
        reg = Regularization(kind=self.reg_kind, lam=self.reg_lambda)
        return LossSpec(kind=loss_kind_for_task(self.task), reg=reg)

    def optimizer_config(self) -> OptimizerConfig:
        return OptimizerConfig(
            kind=self.optimizer,
            beta1=self.beta1,
            beta2=self.beta2,
            eps_stab=self.eps_stab,
            bias_correction=self.bias_correction,
            first_epoch_lr=self.first_epoch_lr,
            fixed_k1=self.fixed_k1,
            fixed_k2=self.fixed_k2,
        )


@dataclass
class TrainReport:
    """Per-epoch metrics plus the rate trace; row 0 is the initial state."""

    losses: list[float] = field(default_factory=list)
    train_acc: list[float | None] = field(default_factory=list)
    val_acc: list[float | None] = field(default_factory=list)
    trace: LrTrace = field(default_factory=LrTrace)
    epochs_run: int = 0
    epochs_to_threshold: int | None = None
    censored: bool = False
    final_train_acc: float | None = None
    final_val_acc: float | None = None
    init_checksum: str = ""
    wall_time: float = 0.0
    lr_label: str = ""

    @property
    def final_loss(self) -> float:
        return self.losses[-1]


def _split_dataset(ds: Dataset, fraction: float, rng: Rng) -> tuple[Dataset, Dataset | None]:
    if fraction <= 0.0:
        return ds, None
    idx = rng.permutation(ds.m)
    n_train = int(round((1.0 - fraction) * ds.m))
    return ds.select_rows(idx[:n_train]), ds.select_rows(idx[n_train:])


def _model_widths(cfg: ExperimentConfig, ds: Dataset) -> tuple[tuple[int, ...], tuple[str, ...]]:
    out_width = ds.k if cfg.task is Task.MULTICLASS else 1
    widths = (ds.n,) + cfg.hidden + (out_width,)
    spec = cfg.loss_spec()
    acts = tuple([cfg.hidden_activation] * len(cfg.hidden)) + (_LOSS_OUTPUT[spec.kind],)
    return widths, acts


def prepare_run(cfg: ExperimentConfig, dataset: Dataset | None = None):
    """Load/scale/split data and build the initial model for a config.

    Returns (train_set, val_set, params).  Separate from the loop so both
    comparison arms can reuse identical inputs.
    """
    if dataset is None:
        if cfg.data_path is None:
            raise ConfigurationError("config has no dataset and no data path")
        dataset = load_csv(cfg.data_path, cfg.task, cfg.target, header=cfg.header)
    if cfg.drop_degenerate:
        bad = dataset.degenerate_columns()
        if bad:
            dataset = dataset.drop_columns(bad)
    dataset = apply_scaling(dataset, cfg.scaling)
    rng = Rng(cfg.seed)
    train, val = _split_dataset(dataset, cfg.split_fraction, rng.spawn(0))
    widths, acts = _model_widths(cfg, dataset)
    params = init_params(widths, acts, rng.spawn(1), scale=cfg.init_scale, use_bias=cfg.use_bias)
    return train, val, params


def _epoch_batches(m: int, batch_size: int | None, rng: Rng | None):
    if batch_size is None or batch_size >= m:
        yield np.arange(m)
        return
    order = rng.permutation(m) if rng is not None else np.arange(m)
    for start in range(0, m, batch_size):
        yield order[start : start + batch_size]


def train_model(
    cfg: ExperimentConfig,
    train: Dataset,
    val: Dataset | None,
    params: ModelParams,
    lr_label: str = "",
) -> TrainReport:
    """Run one arm to its threshold or budget; params are updated in place."""
    t0 = time.perf_counter()
    spec = cfg.loss_spec()
    targets = train.targets()
    m_full = train.m
    batch_m = cfg.batch_size if cfg.batch_size is not None else m_full
    classify = cfg.task is not Task.REGRESSION

    weight_bound = cfg.weight_bound
    if cfg.task is Task.REGRESSION and weight_bound is None:
        weight_bound = estimate_k_bound(train)

    report = TrainReport(init_checksum=params_checksum(params), lr_label=lr_label)

    def record(epoch_loss):
        report.losses.append(epoch_loss)
        report.train_acc.append(
            accuracy(params, train.X, train.class_indices(), cfg.task) if classify else None
        )
        report.val_acc.append(
            accuracy(params, val.X, val.class_indices(), cfg.task)
            if (classify and val is not None)
            else None
        )

    record(batch_loss(params, train.X, targets, spec, m_full))
    threshold = cfg.loss_threshold
    if threshold is not None and report.losses[0] <= threshold:
        report.epochs_to_threshold = 0
        report.final_train_acc = report.train_acc[-1]
        report.final_val_acc = report.val_acc[-1]
        report.wall_time = time.perf_counter() - t0
        return report

    state = OptimizerState(config=cfg.optimizer_config())
    batch_rng = Rng(cfg.seed).spawn(2)
    budget = cfg.epochs if cfg.epochs is not None else cfg.max_epochs
    budget = min(budget, cfg.max_epochs)

    fixed_est = None
    if cfg.lr_policy == "fixed":
        fixed_est = LipschitzEstimate(lipschitz=1.0 / cfg.alpha, batch_size=batch_m)

    for epoch in range(1, budget + 1):
        state.start_epoch(epoch)
        if cfg.optimizer is OptimizerKind.SGD:
            est = fixed_est
            if est is None:
                est = epoch_lr_recompute(
                    params, train.X, targets, cfg.task, spec,
                    m=batch_m, weight_bound=weight_bound,
                )
            report.trace.append(
                epoch, est.lr,
                kz=est.activation_bound,
                max_w=params.max_weight_norm(),
                lipschitz=est.lipschitz,
            )
            for idx in _epoch_batches(m_full, cfg.batch_size, batch_rng):
                tr = forward(params, train.X[idx])
                grads = backward(params, tr, _batch_targets(targets, idx), spec, len(idx))
                sgd_step(params, grads, est)
        else:
            first = True
            for idx in _epoch_batches(m_full, cfg.batch_size, batch_rng):
                tr = forward(params, train.X[idx])
                grads = backward(params, tr, _batch_targets(targets, idx), spec, len(idx))
                if cfg.optimizer is OptimizerKind.ADAMO:
                    adamo_step(state, params, grads)
                elif cfg.optimizer is OptimizerKind.ADA_RMSPROP:
                    adarmsprop_step(state, params, grads)
                else:
                    if not classify:
                        raise ConfigurationError(
                            "the tracked-Adam estimate needs a classification task"
                        )
                    kz = float(np.linalg.norm(tr.penultimate))
                    autoadam_step(
                        state, params, grads,
                        kz=kz, k=train.k, m=len(idx),
                        lam=cfg.reg_lambda, max_w=params.max_weight_norm(),
                    )
                if first:
                    report.trace.append(epoch, state.last_lr, max_w=params.max_weight_norm())
                    first = False
        record(batch_loss(params, train.X, targets, spec, m_full))
        report.epochs_run = epoch
        if threshold is not None and report.losses[-1] <= threshold:
            report.epochs_to_threshold = epoch
            break
    if threshold is not None and report.epochs_to_threshold is None:
        report.censored = True

    report.final_train_acc = report.train_acc[-1]
    report.final_val_acc = report.val_acc[-1]
    report.wall_time = time.perf_counter() - t0
    return report


def _batch_targets(targets: np.ndarray, idx: np.ndarray) -> np.ndarray:
    return targets[idx]


@dataclass
class PairedReport:
    fixed: TrainReport
    adaptive: TrainReport

    def speedup(self) -> float | None:
        """Epochs ratio fixed/adaptive; None when either arm never converged
        (a censored fixed arm gives a lower bound instead)."""
        ea = self.adaptive.epochs_to_threshold
        ef = self.fixed.epochs_to_threshold
        if ea in (None, 0):
            return None
        if ef is None:
            ef = self.fixed.epochs_run  # lower bound from the censor point
        return ef / ea


def _paired_arms(cfg: ExperimentConfig):
    train, val, params0 = prepare_run(cfg)
    fixed_cfg = _arm_config(cfg, "fixed")
    adaptive_cfg = _arm_config(cfg, "adaptive")
    return train, val, params0, fixed_cfg, adaptive_cfg


def _arm_config(cfg: ExperimentConfig, policy: str) -> ExperimentConfig:
    fields = asdict(cfg)
    fields["lr_policy"] = policy
    fields["hidden"] = cfg.hidden
    arm = ExperimentConfig(**fields)
    return arm


def run_threshold_experiment(
    cfg: ExperimentConfig,
    fixed_cap: int | None = None,
    adaptive_cap: int | None = None,
) -> PairedReport:
    """Epochs-to-threshold for the fixed rate vs the inverse constant.

    Optional caps bound each arm separately; a run that hits its cap is
    reported censored, which still lower-bounds the ratio.
    """
    if cfg.loss_threshold is None:
        raise ConfigurationError("threshold experiment needs a loss threshold")
    train, val, params0, fixed_cfg, adaptive_cfg = _paired_arms(cfg)
    if fixed_cap is not None:
        fixed_cfg.max_epochs = fixed_cap
    if adaptive_cap is not None:
        adaptive_cfg.max_epochs = adaptive_cap
    adaptive = train_model(adaptive_cfg, train, val, params0.copy(), lr_label="adaptive")
    fixed = train_model(fixed_cfg, train, val, params0.copy(), lr_label=f"fixed_{cfg.alpha}")
    assert fixed.init_checksum == adaptive.init_checksum
    return PairedReport(fixed=fixed, adaptive=adaptive)


def run_accuracy_experiment(cfg: ExperimentConfig) -> PairedReport:
    """Accuracy after a fixed epoch budget for both arms."""
    if cfg.task is Task.REGRESSION:
        raise UnsupportedMetricError("accuracy is undefined for regression")
    if cfg.epochs is None:
        raise ConfigurationError("accuracy experiment needs an epoch budget")
    cfg_local = _arm_config(cfg, cfg.lr_policy)
    cfg_local.loss_threshold = None
    if cfg_local.split_fraction == 0.0:
        cfg_local.split_fraction = 0.3
    train, val, params0, fixed_cfg, adaptive_cfg = _paired_arms(cfg_local)
    adaptive = train_model(adaptive_cfg, train, val, params0.copy(), lr_label="adaptive")
    fixed = train_model(fixed_cfg, train, val, params0.copy(), lr_label=f"fixed_{cfg.alpha}")
    assert fixed.init_checksum == adaptive.init_checksum
    return PairedReport(fixed=fixed, adaptive=adaptive)


# ---------------------------------------------------------------------------
# convex-quadratic suite


@dataclass
class Quadratic:
    """f(w) = 0.5 w'Aw - b'w with A positive definite."""

    A: np.ndarray
    b: np.ndarray

    @property
    def dim(self) -> int:
        return len(self.b)

    @property
    def smoothness(self) -> float:
        return float(np.linalg.eigvalsh(self.A)[-1])

    def minimizer(self) -> np.ndarray:
        return np.linalg.solve(self.A, self.b)

    def value(self, w: np.ndarray) -> float:
        return 0.5 * float(w @ self.A @ w) - float(self.b @ w)

    def grad(self, w: np.ndarray) -> np.ndarray:
        return self.A @ w - self.b


def random_quadratic(rng: Rng, dim: int) -> Quadratic:
    G = rng.normal(0.0, 1.0, (dim, dim))
    A = G.T @ G + 0.1 * np.eye(dim)
    b = rng.normal(0.0, 1.0, dim)
    return Quadratic(A=A, b=b)


def min_iterations_bound(L: float, f0: float, fstar: float, eps: float) -> int:
    """ceil(2 L (f0 - fstar) / eps): iterations sufficient to drive the
    smallest squared gradient norm below eps."""
    if eps <= 0:
        raise InvalidToleranceError(f"tolerance must be positive, got {eps}")
    if L <= 0:
        raise InvalidToleranceError(f"smoothness constant must be positive, got {L}")
    if f0 < fstar:
        raise InvalidToleranceError("initial value below the optimum")
    return math.ceil(2.0 * L * (f0 - fstar) / eps)


@dataclass
class QuadraticCheck:
    decrease_ok: bool
    bound_ok: dict[float, bool]
    observed_iterations: dict[float, int]
    bound_iterations: dict[float, int]
    worst_decrease_slack: float


def check_quadratic_descent(
    q: Quadratic,
    w0: np.ndarray,
    eps_values=(1e-2, 1e-4),
    slack: float = 1e-10,
) -> QuadraticCheck:
    """Run descent at 1/L and verify the per-step decrease inequality and
    the iteration bound for each tolerance."""
    L = q.smoothness
    fstar = q.value(q.minimizer())
    f0 = q.value(w0)
    eps_sorted = sorted(eps_values, reverse=True)
    bounds = {e: min_iterations_bound(L, f0, fstar, e) for e in eps_sorted}
    observed: dict[float, int] = {}
    pending = list(eps_sorted)

    w = w0.copy()
    decrease_ok = True
    worst = -np.inf
    fk = f0
    k = 0
    min_sq = float(q.grad(w) @ q.grad(w))
    while pending and min_sq <= pending[0]:
        observed[pending.pop(0)] = 0
    while pending and k < max(bounds.values()):
        g = q.grad(w)
        w = w - g / L
        k += 1
        fk1 = q.value(w)
        gap = fk1 - (fk - (g @ g) / (2.0 * L))
        worst = max(worst, gap)
        if gap > slack:
            decrease_ok = False
        fk = fk1
        min_sq = min(min_sq, float(q.grad(w) @ q.grad(w)))
        while pending and min_sq <= pending[0]:
            observed[pending.pop(0)] = k
    for e in pending:
        observed[e] = k + 1  # never reached within the bound: a violation
    return QuadraticCheck(
        decrease_ok=decrease_ok,
        bound_ok={e: observed[e] <= bounds[e] for e in eps_sorted},
        observed_iterations=observed,
        bound_iterations=bounds,
        worst_decrease_slack=worst,
    )


def divergence_boundary_demo(L: float = 2.0, w0: float = 1.0, steps: int = 25):
    """|w| is constant at rate 2/L and grows at 2.1/L on f(w) = (L/2) w^2."""
    traj = {}
    for factor in (2.0, 2.1):
        w = w0
        seq = [abs(w)]
        for _ in range(steps):
            w = w - (factor / L) * (L * w)
            seq.append(abs(w))
        traj[factor] = seq
    return traj


def run_bound_check(n_quadratics: int, seed: int, max_dim: int = 10) -> dict:
    """Quadratic-suite verification; the data behind the bound-check command."""
    rng = Rng(seed)
    all_decrease = True
    all_bounds = True
    worst_slack = -np.inf
    for i in range(n_quadratics):
        dim = int(rng.integers(1, max_dim + 1))
        q = random_quadratic(rng, dim)
        w0 = rng.normal(0.0, 2.0, q.dim)
        res = check_quadratic_descent(q, w0)
        all_decrease &= res.decrease_ok
        all_bounds &= all(res.bound_ok.values())
        worst_slack = max(worst_slack, res.worst_decrease_slack)
    traj = divergence_boundary_demo()
    const_ok = abs(traj[2.0][-1] - traj[2.0][0]) < 1e-9
    grow_ok = all(b > a for a, b in zip(traj[2.1], traj[2.1][1:]))
    return {
        "quadratics": n_quadratics,
        "seed": seed,
        "decrease_inequality_ok": bool(all_decrease),
        "iteration_bound_ok": bool(all_bounds),
        "worst_decrease_slack": float(worst_slack),
        "boundary_constant_ok": bool(const_ok),
        "boundary_growth_ok": bool(grow_ok),
        "all_ok": bool(all_decrease and all_bounds and const_ok and grow_ok),
    }


# ---------------------------------------------------------------------------
# oscillation probe


@dataclass
class ProbeReport:
    samples: list[float]
    cadence: int
    tail_flat_or_decreasing: bool


def tail_is_settled(samples, tail_fraction: float = 0.2, tolerance: float = 0.01) -> bool:
    """True when the last fraction of samples never rises by more than
    tolerance (relative) over its own minimum-so-far."""
    if len(samples) < 2:
        return True
    tail = samples[-max(2, int(math.ceil(tail_fraction * len(samples)))):]
    seen_min = tail[0]
    for v in tail[1:]:
        if not np.isfinite(v):
            return False
        if v > seen_min * (1.0 + tolerance) + 1e-15:
            return False
        seen_min = min(seen_min, v)
    return True


def oscillation_probe(cfg: ExperimentConfig, checkpoint_every: int = 500) -> ProbeReport:
    """Sample the training loss every ``checkpoint_every`` steps of an
    adaptive run and test whether the tail has settled."""
    train, val, params = prepare_run(cfg)
    spec = cfg.loss_spec()
    targets = train.targets()
    m = train.m
    weight_bound = cfg.weight_bound
    if cfg.task is Task.REGRESSION and weight_bound is None:
        weight_bound = estimate_k_bound(train)
    budget = cfg.epochs if cfg.epochs is not None else 10_000
    samples = []
    est = None
    for step in range(1, budget + 1):
        if cfg.lr_policy == "adaptive":
            est = epoch_lr_recompute(
                params, train.X, targets, cfg.task, spec, m=m, weight_bound=weight_bound
            )
        elif est is None:
            est = LipschitzEstimate(lipschitz=1.0 / cfg.alpha)
        tr = forward(params, train.X)
        grads = backward(params, tr, targets, spec, m)
        sgd_step(params, grads, est)
        if step % checkpoint_every == 0:
            samples.append(batch_loss(params, train.X, targets, spec, m))
    return ProbeReport(
        samples=samples,
        cadence=checkpoint_every,
        tail_flat_or_decreasing=tail_is_settled(samples),
    )


# ---------------------------------------------------------------------------
# emission

def _fmt(v) -> str:
    if v is None:
        return ""
    return repr(float(v))


def write_metrics_csv(report: TrainReport, path) -> None:
    """Schema: epoch,loss,train_acc,val_acc,lr,kz,max_w,L (row 0 = init)."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["epoch", "loss", "train_acc", "val_acc", "lr", "kz", "max_w", "L"])
        trace_by_epoch = {
            e: (lr, kz, mw, L)
            for e, lr, kz, mw, L in zip(
                report.trace.epochs, report.trace.lrs, report.trace.kz,
                report.trace.max_w, report.trace.lipschitz,
            )
        }
        for i, loss in enumerate(report.losses):
            lr = kz = mw = L = None
            if i in trace_by_epoch:
                lr, kz, mw, L = trace_by_epoch[i]
            w.writerow([
                i, _fmt(loss), _fmt(report.train_acc[i]), _fmt(report.val_acc[i]),
                _fmt(lr), _fmt(kz), _fmt(mw), _fmt(L),
            ])


def read_metrics_csv(path) -> list[dict]:
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        for rec in csv.DictReader(fh):
            rows.append(
                {
                    k: (None if v == "" else (int(v) if k == "epoch" else float(v)))
                    for k, v in rec.items()
                }
            )
    return rows


def write_lr_trace_csv(trace: LrTrace, path) -> None:
    """Schema: epoch,lr,kz,max_w,L."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["epoch", "lr", "kz", "max_w", "L"])
        for e, lr, kz, mw, L in zip(
            trace.epochs, trace.lrs, trace.kz, trace.max_w, trace.lipschitz
        ):
            w.writerow([e, _fmt(lr), _fmt(kz), _fmt(mw), _fmt(L)])


def summary_dict(cfg: ExperimentConfig, report: TrainReport) -> dict:
    c = asdict(cfg)
    c["task"] = cfg.task.value
    c["optimizer"] = cfg.optimizer.value
    c["reg_kind"] = cfg.reg_kind.value
    c["hidden"] = list(cfg.hidden)
    return {
        "config": c,
        "lr_label": report.lr_label,
        "init_checksum": report.init_checksum,
        "epochs_run": report.epochs_run,
        "epochs_to_threshold": report.epochs_to_threshold,
        "censored": report.censored,
        "final_loss": report.final_loss,
        "final_train_acc": report.final_train_acc,
        "final_val_acc": report.final_val_acc,
        "wall_time": report.wall_time,
    }


def write_summary_json(cfg: ExperimentConfig, report: TrainReport, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(summary_dict(cfg, report), fh, indent=2)
        fh.write("\n")
