"""Weak-form residual assembly and the training loss functionals.

The hot path assembles the (N_test, N_elem) residual matrix with three
batched tensor contractions against the precomputed premultiplier stacks --
no per-cell Python loop.  A deliberately naive double-loop reference
implementation (loop over cells, loop over test functions, fresh Jacobian
and test-function evaluations at every quadrature point) is kept alongside
as the independent oracle and for the loop-vs-tensor benchmark.

Loss modes:
  variational              mean over cells of the summed squared residual
  variational+supg_const   streamline-stabilization term with constant tau
  variational+supg_learnt  tau predicted pointwise by the second network head
  variational+l2reg        variational plus (lambda/N) sum of squared weights
An optional soft Dirichlet penalty on the raw network output can be added to
any mode.  The stabilization entries are added to the weak residual entries
before squaring ("in_residual"); a variant that sums their squares separately
is available behind ``supg_composition="separate"``.
"""

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from . import geometry
from . import quadrature
from .boundary import boundary_points, hard_ansatz, tau_field
from .network import forward_fields

LOSS_MODES = (
    "variational",
    "variational+supg_const",
    "variational+supg_learnt",
    "variational+l2reg",
)

SUPG_COMPOSITIONS = ("in_residual", "separate")


@dataclass(frozen=True)
class SoftBoundaryConfig:
    weight: float
    n_points: int = 400

    def __post_init__(self):
        if self.weight < 0:
            raise ValueError(f"soft boundary weight must be >= 0, got {self.weight}")


@dataclass(frozen=True)
class LossConfig:
    mode: str = "variational"
    tau_const: float = 0.0
    tau_growth: float = 1.0
    lam: float = 0.0
    supg_composition: str = "in_residual"
    soft_boundary: SoftBoundaryConfig | None = None

    def __post_init__(self):
        if self.mode not in LOSS_MODES:
            raise ValueError(f"unknown loss mode {self.mode!r}")
        if self.supg_composition not in SUPG_COMPOSITIONS:
            raise ValueError(f"unknown supg_composition {self.supg_composition!r}")
        for name in ("tau_const", "tau_growth", "lam"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")


@dataclass
class FieldBundle:
    """Solution field and gradient at quadrature points, each (N_elem, N_quad)."""

    u: object
    du_dx: object
    du_dy: object


@dataclass(frozen=True)
class Coefficients:
    """Problem coefficients at quadrature points (constants broadcast)."""

    epsilon: float
    b: tuple
    c: float
    f_quad: np.ndarray = None  # (N_elem, N_quad), needed by the SUPG residual


def assemble_residual(tensors, fields, coeffs):
    """Weak residual matrix (N_test, N_elem) via batched contractions.

    Entry (j, k) = sum_q w|J| [eps grad u . grad v_j + (b . grad u) v_j
    + c u v_j] - force(j, k).
    """
    _check_field_shapes(tensors, fields)
    b1, b2 = coeffs.b
    diff = ad.cell_contract(tensors.grad_x, fields.du_dx) + ad.cell_contract(
        tensors.grad_y, fields.du_dy
    )
    convec = b1 * fields.du_dx + b2 * fields.du_dy + coeffs.c * fields.u
    bulk = coeffs.epsilon * diff + ad.cell_contract(tensors.shape_val, convec)
    return ad.transpose(bulk) - tensors.force


def supg_residual(tensors, fields, tau, coeffs):
    """Streamline-stabilization matrix (N_test, N_elem).

    Entry (j, k) = sum_q w|J| tau (b . grad u + c u - f)(b . grad v_j); the
    diffusive part of the strong residual is omitted (convection-dominated
    regime).  ``tau`` is a scalar or an (N_elem, N_quad) field.
    """
    _check_field_shapes(tensors, fields)
    if coeffs.f_quad is None:
        raise ValueError("SUPG residual needs the forcing values at quad points")
    b1, b2 = coeffs.b
    streamline_premul = b1 * tensors.grad_x + b2 * tensors.grad_y
    strong = b1 * fields.du_dx + b2 * fields.du_dy + coeffs.c * fields.u - coeffs.f_quad
    return ad.transpose(ad.cell_contract(streamline_premul, tau * strong))


def _check_field_shapes(tensors, fields):
    expect = (tensors.n_elem, tensors.n_quad)
    for name in ("u", "du_dx", "du_dy"):
        shape = getattr(fields, name).shape
        if shape != expect:
            raise ValueError(f"field {name} has shape {shape}, expected {expect}")


def variational_loss(residual):
    """Mean over cells of the summed squared test residuals."""
    n_elem = residual.shape[1]
    return ad.tsum(residual * residual) / n_elem


def l2_weight_regularization(weights, lam):
    """(lambda / N) sum of squared weight-matrix entries; biases excluded."""
    if lam < 0:
        raise ValueError(f"lambda must be >= 0, got {lam}")
    n = sum(int(np.prod(ad.value_of(w).shape)) for w in weights)
    total = 0.0
    for w in weights:
        total = total + ad.tsum(w * w)
    return total * (lam / n)


@dataclass
class BoundarySetup:
    """Boundary descriptors and per-run constant fields for the loss."""

    indicator: object
    extension: object
    tau_mask: object
    f_quad: np.ndarray  # (N_elem, N_quad)
    soft_points: np.ndarray = None
    soft_values: np.ndarray = None


def make_boundary_setup(problem, indicator, extension, tensors, tau_mask=None, soft=None):
    f_quad = problem.f(tensors.stacked_points()).reshape(
        tensors.n_elem, tensors.n_quad
    )
    soft_pts = soft_vals = None
    if soft is not None:
        soft_pts = boundary_points(soft.n_points, problem.domain_bounds)
        soft_vals = problem.g(soft_pts)
    return BoundarySetup(indicator, extension, tau_mask, f_quad, soft_pts, soft_vals)


def total_loss(config, tensors, network, problem, bsetup, params=None):
    """Scalar training loss for the configured mode.

    With ``params`` (traced parameter bundle) the evaluation is recorded for
    reverse-mode differentiation; otherwise it runs on the network's plain
    arrays.  Both paths execute identical floating-point operations.
    """
    if params is not None:
        weights, biases, scalars = params.weights, params.biases, params.scalars
    else:
        weights, biases, scalars = (
            network.weights,
            network.biases,
            network.extra_scalars,
        )
    if config.mode == "variational+supg_learnt" and network.n_out < 2:
        raise ValueError("learnt-tau stabilization needs a two-head network")

    pts = tensors.stacked_points()
    out, out_dx, out_dy = forward_fields(weights, biases, pts)
    u = ad.column(out, 0)
    ux = ad.column(out_dx, 0)
    uy = ad.column(out_dy, 0)
    u_hard, ux_hard, uy_hard = hard_ansatz(
        u, ux, uy, bsetup.indicator, scalars, bsetup.extension, pts
    )
    shape = (tensors.n_elem, tensors.n_quad)
    fields = FieldBundle(
        ad.reshape(u_hard, shape),
        ad.reshape(ux_hard, shape),
        ad.reshape(uy_hard, shape),
    )
    coeffs = Coefficients(problem.epsilon, problem.b, problem.c, bsetup.f_quad)
    residual = assemble_residual(tensors, fields, coeffs)

    if config.mode == "variational":
        loss = variational_loss(residual)
    elif config.mode == "variational+supg_const":
        stab = supg_residual(tensors, fields, config.tau_const, coeffs)
        loss = _compose_supg(config, residual, stab)
    elif config.mode == "variational+supg_learnt":
        tau_tilde = ad.column(out, 1)
        tau = tau_field(tau_tilde, bsetup.tau_mask, config.tau_growth, pts)
        stab = supg_residual(tensors, fields, ad.reshape(tau, shape), coeffs)
        loss = _compose_supg(config, residual, stab)
    else:  # variational+l2reg
        loss = variational_loss(residual) + l2_weight_regularization(
            weights, config.lam
        )

    if config.soft_boundary is not None and config.soft_boundary.weight > 0:
        bpts = bsetup.soft_points
        b_out, _, _ = forward_fields(weights, biases, bpts)
        mismatch = ad.column(b_out, 0) - bsetup.soft_values
        loss = loss + config.soft_boundary.weight * (
            ad.tsum(mismatch * mismatch) / len(bpts)
        )
    return loss


def _compose_supg(config, residual, stab):
    if config.supg_composition == "in_residual":
        return variational_loss(residual + stab)
    return variational_loss(residual) + variational_loss(stab)


# -- double-loop reference implementations (oracle + benchmark baseline) -----


def assemble_residual_loop(mesh, rule, tests, fields, coeffs, f_fn):
    """Naive per-cell, per-test assembly of the weak residual matrix.

    Recomputes Jacobians and test functions point by point, independent of
    the precomputed tensor stacks.  Plain ndarray fields only.
    """
    n_quad = rule.n_quad
    out = np.empty((tests.n_test, mesh.n_elem))
    for k, cell in enumerate(mesh.cells):
        u, ux, uy = fields.u[k], fields.du_dx[k], fields.du_dy[k]
        phys = geometry.bilinear_map(cell, rule.points)
        f_vals = f_fn(phys)
        for j in range(tests.n_test):
            j_xi = j % tests.n_per_dim
            j_eta = j // tests.n_per_dim
            acc = 0.0
            for q in range(n_quad):
                xi, eta = rule.points[q]
                jac = geometry.jacobian(cell, (xi, eta))
                v_xi, dv_xi = quadrature.test_function_1d(j_xi + 1, xi)
                v_eta, dv_eta = quadrature.test_function_1d(j_eta + 1, eta)
                v = v_xi * v_eta
                g_phys = geometry.map_reference_gradient(
                    jac, (dv_xi * v_eta, v_xi * dv_eta)
                )
                wdet = rule.weights[q] * jac.det
                acc += wdet * (
                    coeffs.epsilon * (g_phys[0] * ux[q] + g_phys[1] * uy[q])
                    + (coeffs.b[0] * ux[q] + coeffs.b[1] * uy[q]) * v
                    + coeffs.c * u[q] * v
                    - f_vals[q] * v
                )
            out[j, k] = acc
    return out


def supg_residual_loop(mesh, rule, tests, fields, tau, coeffs, f_fn):
    """Naive assembly of the streamline-stabilization matrix."""
    tau = np.broadcast_to(np.asarray(tau, dtype=np.float64), fields.u.shape)
    out = np.empty((tests.n_test, mesh.n_elem))
    for k, cell in enumerate(mesh.cells):
        u, ux, uy = fields.u[k], fields.du_dx[k], fields.du_dy[k]
        phys = geometry.bilinear_map(cell, rule.points)
        f_vals = f_fn(phys)
        for j in range(tests.n_test):
            j_xi = j % tests.n_per_dim
            j_eta = j // tests.n_per_dim
            acc = 0.0
            for q in range(rule.n_quad):
                xi, eta = rule.points[q]
                jac = geometry.jacobian(cell, (xi, eta))
                v_xi, dv_xi = quadrature.test_function_1d(j_xi + 1, xi)
                v_eta, dv_eta = quadrature.test_function_1d(j_eta + 1, eta)
                g_phys = geometry.map_reference_gradient(
                    jac, (dv_xi * v_eta, v_xi * dv_eta)
                )
                strong = (
                    coeffs.b[0] * ux[q]
                    + coeffs.b[1] * uy[q]
                    + coeffs.c * u[q]
                    - f_vals[q]
                )
                streamline = coeffs.b[0] * g_phys[0] + coeffs.b[1] * g_phys[1]
                acc += rule.weights[q] * jac.det * tau[k, q] * strong * streamline
            out[j, k] = acc
    return out
