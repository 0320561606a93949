"""Variational PINN solver for convection-dominated CDR problems."""

from .boundary import (
    AdaptiveExpIndicator,
    ExtensionFunction,
    ProductExpIndicator,
    TauMask,
    hard_ansatz,
    indicator_eval,
    tau_field,
)
from .geometry import (
    DegenerateCellError,
    JacobianInfo,
    Mesh,
    QuadCell,
    bilinear_map,
    build_structured_mesh,
    jacobian,
    map_reference_gradient,
)
from .loss import (
    Coefficients,
    FieldBundle,
    LossConfig,
    SoftBoundaryConfig,
    assemble_residual,
    assemble_residual_loop,
    l2_weight_regularization,
    supg_residual,
    supg_residual_loop,
    total_loss,
    variational_loss,
)
from .network import (
    AdamState,
    DenseNetwork,
    EvalBatch,
    NonFiniteLossError,
    adam_init,
    adam_step,
    forward_with_gradients,
    init_network,
    load_checkpoint,
    loss_gradient,
    save_checkpoint,
)
from .problems import (
    CDRProblem,
    PecletReport,
    make_eriksson_johnson,
    make_outflow_layer,
    make_parabolic_layer,
    make_problem,
    peclet,
)
from .quadrature import (
    NumericError,
    PrecomputedTensors,
    QuadratureRule1D,
    QuadratureRule2D,
    TestFunctionSet,
    gll_rule,
    legendre,
    precompute_tensors,
    tensor_rule_2d,
    test_function_1d,
)
from .trainer import (
    ErrorMetric,
    IndicatorConfig,
    TrainingConfig,
    TrainingRecord,
    UnsupportedMetricError,
    default_indicator,
    evaluate_errors,
    multi_seed,
    sweep_tau,
    train,
)

__version__ = "0.1.0"
