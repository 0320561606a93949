"""Training loop, error metrics, parameter sweeps and multi-seed statistics."""

import time
from dataclasses import dataclass, field, replace

import numpy as np

from . import network as net_mod
from .boundary import (
    AdaptiveExpIndicator,
    ExtensionFunction,
    ProductExpIndicator,
    TauMask,
    hard_ansatz,
)
from .geometry import build_structured_mesh
from .loss import LossConfig, make_boundary_setup, total_loss
from .network import NonFiniteLossError
from .problems import make_problem
from .quadrature import TestFunctionSet, gll_rule, precompute_tensors, tensor_rule_2d

ERROR_GRID_N = 100


@dataclass(frozen=True)
class IndicatorConfig:
    """Indicator selection: fixed per-edge slopes or learnable exponents."""

    kind: str  # "product_exp" | "adaptive_exp"
    kappa: dict = None  # product_exp: edge -> kappa
    edges: dict = None  # adaptive_exp: edge -> scalar name
    initial: dict = None  # adaptive_exp: scalar name -> initial value

    def __post_init__(self):
        if self.kind not in ("product_exp", "adaptive_exp"):
            raise ValueError(f"unknown indicator kind {self.kind!r}")
        if self.kind == "product_exp" and self.kappa is None:
            raise ValueError("product_exp indicator needs a kappa table")
        if self.kind == "adaptive_exp" and (self.edges is None or self.initial is None):
            raise ValueError("adaptive_exp indicator needs edges and initial values")


def build_indicator(cfg):
    """Instantiate the indicator and its initial learnable scalars."""
    if cfg.kind == "product_exp":
        return ProductExpIndicator(dict(cfg.kappa)), {}
    ind = AdaptiveExpIndicator(dict(cfg.edges))
    missing = [s for s in ind.scalar_names if s not in cfg.initial]
    if missing:
        raise ValueError(f"missing initial values for scalars {missing}")
    return ind, {k: float(v) for k, v in cfg.initial.items()}


# initial exponents for the adaptive indicator of the parabolic-layer problem
_PARA_ADAPTIVE_INIT = {1e-4: (1.0, 0.0, 2.0), 1e-6: (1.0, 0.0, 3.0), 1e-8: (2.0, 0.0, 4.0)}


def default_indicator(problem_name, epsilon, variant="modified"):
    """Per-edge slope tables used for the shipped benchmark problems.

    ``variant`` is one of "symmetric" (equal steep slopes on all edges),
    "modified" (steep slopes only where the solution has layers), or
    "adaptive" (learnable exponents).
    """
    steep = 10.0 / epsilon
    if problem_name == "eriksson_johnson":
        if variant == "adaptive":
            raise ValueError("no adaptive indicator is defined for this problem")
        return IndicatorConfig(
            "product_exp",
            kappa={"left": 30.0, "bottom": 30.0, "right": steep, "top": 30.0},
        )
    if problem_name == "outflow_layer":
        if variant == "symmetric":
            return IndicatorConfig(
                "product_exp",
                kappa={"left": steep, "bottom": steep, "right": steep, "top": steep},
            )
        if variant == "adaptive":
            return IndicatorConfig(
                "adaptive_exp",
                edges={"left": "alpha", "bottom": "alpha", "right": "beta", "top": "beta"},
                initial={"alpha": 1.0, "beta": -np.log10(epsilon) / 2.0},
            )
        return IndicatorConfig(
            "product_exp",
            kappa={"left": 30.0, "bottom": 30.0, "right": steep, "top": steep},
        )
    if problem_name == "parabolic_layer":
        if variant == "adaptive":
            alpha, beta, gamma = _PARA_ADAPTIVE_INIT.get(
                epsilon, (1.0, 0.0, -np.log10(epsilon) / 2.0)
            )
            return IndicatorConfig(
                "adaptive_exp",
                edges={"left": "alpha", "bottom": "beta", "right": "gamma", "top": "beta"},
                initial={"alpha": alpha, "beta": beta, "gamma": gamma},
            )
        return IndicatorConfig(
            "product_exp",
            kappa={"left": 30.0, "bottom": steep, "right": steep, "top": steep},
        )
    raise ValueError(f"unknown problem {problem_name!r}")


def default_extension(problem_name):
    if problem_name == "eriksson_johnson":
        return ExtensionFunction("ej_sine")
    return ExtensionFunction("zero")


@dataclass(frozen=True)
class TrainingConfig:
    problem: str
    epsilon: float
    nx: int
    ny: int
    n_quad_per_dim: int
    n_test_per_dim: int
    layer_sizes: tuple
    learning_rate: float
    epochs: int
    seed: int
    loss: LossConfig = field(default_factory=LossConfig)
    indicator: IndicatorConfig = None
    eval_every: int = 100

    def __post_init__(self):
        object.__setattr__(self, "layer_sizes", tuple(self.layer_sizes))
        for name in ("nx", "ny", "n_quad_per_dim", "n_test_per_dim"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.n_quad_per_dim < 2:
            raise ValueError("n_quad_per_dim must be >= 2")
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")
        if self.epochs < 0 or self.eval_every < 1:
            raise ValueError("epochs must be >= 0 and eval_every >= 1")
        if self.indicator is None:
            object.__setattr__(
                self, "indicator", default_indicator(self.problem, self.epsilon)
            )


@dataclass
class ErrorMetric:
    """Errors on the closed-domain evaluation grid."""

    grid_n: int
    l2_err: float
    linf_err: float


@dataclass
class TrainingRecord:
    config: TrainingConfig
    loss_history: np.ndarray
    error_history: list  # (epoch, l2_err, linf_err)
    best_l2_err: float
    best_epoch: int
    final_scalars: dict
    network: object
    wall_time: float
    checkpoint_path: str = None


class UnsupportedMetricError(ValueError):
    """Requested an error metric for a problem without an exact solution."""


def evaluation_grid(bounds, n=ERROR_GRID_N):
    """n x n equidistant points covering the closed domain, y-major rows."""
    x0, x1, y0, y1 = bounds
    xs = np.linspace(x0, x1, n)
    ys = np.linspace(y0, y1, n)
    gx, gy = np.meshgrid(xs, ys, indexing="xy")
    return np.column_stack([gx.ravel(), gy.ravel()])


def make_predictor(network, indicator, extension):
    """Hard-constrained prediction u_hard at arbitrary points."""

    def predict(points):
        batch = net_mod.forward_with_gradients(network, points)
        u_hard, _, _ = hard_ansatz(
            batch.u[:, 0],
            batch.du_dx[:, 0],
            batch.du_dy[:, 0],
            indicator,
            network.extra_scalars,
            extension,
            points,
        )
        return u_hard

    return predict


def evaluate_errors(predict_fn, problem, grid_n=ERROR_GRID_N):
    """Root-mean-square and max-abs error against the exact solution."""
    if problem.exact is None:
        raise UnsupportedMetricError(
            f"problem {problem.name!r} has no exact solution"
        )
    points = evaluation_grid(problem.domain_bounds, grid_n)
    diff = predict_fn(points) - problem.exact.u(points)
    l2 = float(np.sqrt(np.mean(diff**2)))
    linf = float(np.max(np.abs(diff)))
    return ErrorMetric(grid_n, l2, linf)


@dataclass
class TrainingSetup:
    """Assembled ingredients of one training run."""

    problem: object
    mesh: object
    rule: object
    tests: object
    tensors: object
    network: object
    indicator: object
    extension: object
    bsetup: object


def prepare(config):
    """Build problem, mesh, tensors, network and boundary setup for a run."""
    problem = make_problem(config.problem, config.epsilon)
    mesh = build_structured_mesh(config.nx, config.ny, problem.domain_bounds)
    rule = tensor_rule_2d(gll_rule(config.n_quad_per_dim))
    tests = TestFunctionSet(config.n_test_per_dim)
    tensors = precompute_tensors(mesh, rule, tests, problem)
    network = net_mod.init_network(list(config.layer_sizes), config.seed)
    indicator, scalars = build_indicator(config.indicator)
    network.extra_scalars.update(scalars)
    extension = default_extension(config.problem)
    bsetup = make_boundary_setup(
        problem,
        indicator,
        extension,
        tensors,
        tau_mask=TauMask(),
        soft=config.loss.soft_boundary,
    )
    return TrainingSetup(
        problem, mesh, rule, tests, tensors, network, indicator, extension, bsetup
    )


def train(config, setup=None):
    """Full-batch Adam training; deterministic for a given config.

    ``setup`` may carry a prebuilt TrainingSetup for the same config (used by
    the CLI to reuse tensors when exporting fields afterwards).
    """
    start = time.perf_counter()
    if setup is None:
        setup = prepare(config)
    problem, tensors, network = setup.problem, setup.tensors, setup.network
    bsetup = setup.bsetup

    predictor = make_predictor(network, setup.indicator, setup.extension)
    error_history = []

    def record_errors(epoch):
        if problem.exact is None:
            return
        metric = evaluate_errors(predictor, problem)
        error_history.append((epoch, metric.l2_err, metric.linf_err))

    record_errors(0)
    params = net_mod.flatten_parameters(network)
    adam = net_mod.adam_init(params, config.learning_rate)
    loss_history = np.empty(config.epochs)
    last_finite = None

    def loss_fn(traced):
        return total_loss(config.loss, tensors, network, problem, bsetup, traced)

    for epoch in range(config.epochs):
        try:
            loss_value, grads = net_mod.loss_gradient(network, loss_fn)
        except NonFiniteLossError as err:
            raise NonFiniteLossError(err.loss_value, epoch, last_finite) from None
        loss_history[epoch] = loss_value
        last_finite = loss_value
        params = net_mod.flatten_parameters(network)
        flat_grads = net_mod.flatten_gradients(network, grads)
        params, adam = net_mod.adam_step(adam, params, flat_grads)
        net_mod.unflatten_into(network, params)
        if (epoch + 1) % config.eval_every == 0 or epoch == config.epochs - 1:
            record_errors(epoch + 1)

    if error_history:
        best_epoch, best_l2, _ = min(error_history, key=lambda row: row[1])
    else:
        best_epoch, best_l2 = None, None
    return TrainingRecord(
        config=config,
        loss_history=loss_history,
        error_history=error_history,
        best_l2_err=best_l2,
        best_epoch=best_epoch,
        final_scalars=dict(network.extra_scalars),
        network=network,
        wall_time=time.perf_counter() - start,
    )


SWEEP_PARAMS = {
    "tau": "tau_const",
    "tau_growth": "tau_growth",
    "lambda": "lam",
}


@dataclass
class SweepRow:
    value: float
    mean_best_l2: float
    min_best_l2: float
    max_best_l2: float
    failed: bool = False


def sweep_tau(config, values, seeds_per_value, param="tau"):
    """Re-run training over a list of parameter values, averaging over seeds.

    Failed runs (non-finite loss) mark their row and the sweep continues.
    """
    if not values:
        raise ValueError("sweep needs at least one value")
    if param not in SWEEP_PARAMS:
        raise ValueError(f"unknown sweep parameter {param!r}")
    attr = SWEEP_PARAMS[param]
    rows = []
    for value in values:
        bests = []
        failed = False
        for seed in range(seeds_per_value):
            run_cfg = replace(
                config,
                seed=seed,
                loss=replace(config.loss, **{attr: float(value)}),
            )
            try:
                record = train(run_cfg)
            except NonFiniteLossError:
                failed = True
                continue
            bests.append(record.best_l2_err)
        if bests and not any(b is None for b in bests):
            rows.append(
                SweepRow(
                    float(value),
                    float(np.mean(bests)),
                    float(np.min(bests)),
                    float(np.max(bests)),
                    failed,
                )
            )
        else:
            rows.append(SweepRow(float(value), np.nan, np.nan, np.nan, True))
    return rows


def multi_seed(config, n_seeds):
    """Aggregate best errors over seeds 0..n_seeds-1."""
    if n_seeds < 1:
        raise ValueError("n_seeds must be >= 1")
    records = []
    for seed in range(n_seeds):
        records.append(train(replace(config, seed=seed)))
    bests = [r.best_l2_err for r in records]
    stats = {
        "mean": float(np.mean(bests)),
        "min": float(np.min(bests)),
        "max": float(np.max(bests)),
    }
    return stats, records
