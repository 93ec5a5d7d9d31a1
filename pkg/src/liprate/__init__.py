"""Learning rates from analytic Lipschitz constants of the training loss."""

from .data import (
    CenterScaleRecord,
    Dataset,
    ScalingRecord,
    Task,
    apply_scaling,
    center_scale_features,
    estimate_k_bound,
    load_csv,
    scale_features,
    write_csv,
)
from .harness import (
    ExperimentConfig,
    PairedReport,
    TrainReport,
    min_iterations_bound,
    oscillation_probe,
    run_accuracy_experiment,
    run_bound_check,
    run_threshold_experiment,
    train_model,
)
from .lipschitz import (
    LipschitzEstimate,
    LossKind,
    LossSpec,
    RegKind,
    Regularization,
    compute_kz,
    lc_binary,
    lc_linear_regression,
    lc_multiclass,
    lc_nn_regression,
    loss_value,
    reg_increment,
)
from .models import (
    ForwardTrace,
    Gradients,
    ModelParams,
    backward,
    forward,
    grad_sup_bound_check,
    init_params,
    load_params,
    save_params,
)
from .numeric import Rng, frobenius_norm, matmul, vector_2norm
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

__version__ = "0.1.0"
