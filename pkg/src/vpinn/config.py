"""YAML run configuration: parsing, strict validation, and defaults.

Unknown keys anywhere in the document are rejected with the offending key
path, so typos fail loudly instead of silently using defaults.
"""

import os
from dataclasses import dataclass

import yaml

from .loss import LossConfig, SoftBoundaryConfig
from .trainer import IndicatorConfig, TrainingConfig, default_indicator

OUTPUT_ROOT_ENV = "VPINN_OUTPUT_ROOT"


class ConfigError(ValueError):
    """Invalid or malformed run configuration."""


@dataclass
class OutputOptions:
    directory: str
    csv_fields: bool = True
    image: bool = False
    image_resolution: int = 100


@dataclass
class RunConfig:
    training: TrainingConfig
    output: OutputOptions


def _require_keys(mapping, allowed, required, path):
    unknown = set(mapping) - set(allowed)
    if unknown:
        raise ConfigError(f"unknown key(s) {sorted(unknown)} under '{path}'")
    missing = set(required) - set(mapping)
    if missing:
        raise ConfigError(f"missing key(s) {sorted(missing)} under '{path}'")


def _parse_loss(node):
    if node is None:
        return LossConfig()
    _require_keys(
        node,
        ("mode", "tau_const", "tau_growth", "lambda", "supg_composition", "soft_boundary"),
        (),
        "loss",
    )
    soft = None
    if node.get("soft_boundary") is not None:
        sb = node["soft_boundary"]
        _require_keys(sb, ("weight", "n_points"), ("weight",), "loss.soft_boundary")
        soft = SoftBoundaryConfig(float(sb["weight"]), int(sb.get("n_points", 400)))
    try:
        return LossConfig(
            mode=node.get("mode", "variational"),
            tau_const=float(node.get("tau_const", 0.0)),
            tau_growth=float(node.get("tau_growth", 1.0)),
            lam=float(node.get("lambda", 0.0)),
            supg_composition=node.get("supg_composition", "in_residual"),
            soft_boundary=soft,
        )
    except ValueError as err:
        raise ConfigError(f"invalid loss config: {err}") from None


def _parse_indicator(node, problem, epsilon):
    if node is None:
        return default_indicator(problem, epsilon)
    _require_keys(node, ("kind", "variant", "kappa", "edges", "initial"), (), "indicator")
    if "variant" in node:
        if set(node) - {"variant"}:
            raise ConfigError("indicator: 'variant' cannot be combined with other keys")
        return default_indicator(problem, epsilon, node["variant"])
    kind = node.get("kind")
    try:
        if kind == "product_exp":
            _require_keys(node, ("kind", "kappa"), ("kappa",), "indicator")
            return IndicatorConfig(
                "product_exp", kappa={k: float(v) for k, v in node["kappa"].items()}
            )
        if kind == "adaptive_exp":
            _require_keys(node, ("kind", "edges", "initial"), ("edges", "initial"), "indicator")
            return IndicatorConfig(
                "adaptive_exp",
                edges=dict(node["edges"]),
                initial={k: float(v) for k, v in node["initial"].items()},
            )
    except (ValueError, AttributeError) as err:
        raise ConfigError(f"invalid indicator config: {err}") from None
    raise ConfigError(f"indicator.kind must be product_exp or adaptive_exp, got {kind!r}")


_TOP_KEYS = (
    "problem",
    "epsilon",
    "mesh",
    "n_quad_per_dim",
    "n_test_per_dim",
    "layer_sizes",
    "learning_rate",
    "epochs",
    "seed",
    "eval_every",
    "loss",
    "indicator",
    "output",
)

_REQUIRED = (
    "problem",
    "epsilon",
    "mesh",
    "n_quad_per_dim",
    "n_test_per_dim",
    "layer_sizes",
    "learning_rate",
    "epochs",
)


def load_run_config(path):
    """Parse and validate a YAML run configuration file."""
    try:
        with open(path) as fh:
            doc = yaml.safe_load(fh)
    except OSError as err:
        raise ConfigError(f"cannot read config file: {err}") from None
    except yaml.YAMLError as err:
        raise ConfigError(f"malformed YAML in {path}: {err}") from None
    if not isinstance(doc, dict):
        raise ConfigError(f"config root must be a mapping, got {type(doc).__name__}")
    _require_keys(doc, _TOP_KEYS, _REQUIRED, "<root>")

    mesh = doc["mesh"]
    _require_keys(mesh, ("nx", "ny"), ("nx", "ny"), "mesh")

    loss_cfg = _parse_loss(doc.get("loss"))
    indicator = _parse_indicator(
        doc.get("indicator"), doc["problem"], float(doc["epsilon"])
    )
    try:
        training = TrainingConfig(
            problem=doc["problem"],
            epsilon=float(doc["epsilon"]),
            nx=int(mesh["nx"]),
            ny=int(mesh["ny"]),
            n_quad_per_dim=int(doc["n_quad_per_dim"]),
            n_test_per_dim=int(doc["n_test_per_dim"]),
            layer_sizes=tuple(int(s) for s in doc["layer_sizes"]),
            learning_rate=float(doc["learning_rate"]),
            epochs=int(doc["epochs"]),
            seed=int(doc.get("seed", 0)),
            loss=loss_cfg,
            indicator=indicator,
            eval_every=int(doc.get("eval_every", 100)),
        )
    except ValueError as err:
        raise ConfigError(f"invalid training config: {err}") from None

    out_node = doc.get("output") or {}
    _require_keys(
        out_node, ("dir", "csv_fields", "image", "image_resolution"), (), "output"
    )
    directory = out_node.get("dir", "runs/" + training.problem)
    root = os.environ.get(OUTPUT_ROOT_ENV)
    if root:
        directory = os.path.join(root, directory)
    output = OutputOptions(
        directory=directory,
        csv_fields=bool(out_node.get("csv_fields", True)),
        image=bool(out_node.get("image", False)),
        image_resolution=int(out_node.get("image_resolution", 100)),
    )
    return RunConfig(training, output)
