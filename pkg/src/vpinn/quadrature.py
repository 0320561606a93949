"""Legendre polynomials, Legendre-difference test functions, GLL quadrature,
and precomputation of the stacked premultiplier tensors used by the
tensorized residual assembly.

Test functions are v_k = P_{k+1} - P_{k-1} for k >= 1; they vanish exactly at
+-1, and their derivative collapses to (2k+1) P_k.  Two-dimensional test
functions and quadrature points are tensor products indexed row-major with
the xi index fastest.
"""

from dataclasses import dataclass

import numpy as np

from . import geometry
from .geometry import DegenerateCellError  # noqa: F401  (re-exported)

GLL_NEWTON_TOL = 1e-14
GLL_NEWTON_MAX_ITER = 100


class NumericError(RuntimeError):
    """A numerical routine failed to converge."""


def legendre(k, x):
    """Value and derivative of the Legendre polynomial P_k at x.

    Uses the Bonnet recurrence (k+1) P_{k+1} = (2k+1) x P_k - k P_{k-1} and
    the derivative recurrence P'_{k+1} = P'_{k-1} + (2k+1) P_k, which is
    stable at the endpoints.  Vectorized over x.
    """
    if k < 0:
        raise ValueError(f"degree must be >= 0, got {k}")
    x = np.asarray(x, dtype=np.float64)
    p_prev, p = np.ones_like(x), x.copy()
    d_prev, d = np.zeros_like(x), np.ones_like(x)
    if k == 0:
        return p_prev, d_prev
    for m in range(1, k):
        p_next = ((2 * m + 1) * x * p - m * p_prev) / (m + 1)
        d_next = d_prev + (2 * m + 1) * p
        p_prev, p = p, p_next
        d_prev, d = d, d_next
    return p, d


def legendre_table(k_max, x):
    """Values and derivatives of P_0..P_k_max at points x, shape (k_max+1, m)."""
    x = np.asarray(x, dtype=np.float64)
    vals = np.empty((k_max + 1,) + x.shape)
    ders = np.empty_like(vals)
    vals[0], ders[0] = 1.0, 0.0
    if k_max >= 1:
        vals[1], ders[1] = x, 1.0
    for m in range(1, k_max):
        vals[m + 1] = ((2 * m + 1) * x * vals[m] - m * vals[m - 1]) / (m + 1)
        ders[m + 1] = ders[m - 1] + (2 * m + 1) * vals[m]
    return vals, ders


def test_function_1d(k, x):
    """Value and derivative of v_k = P_{k+1} - P_{k-1} (k >= 1) at x."""
    if k < 1:
        raise ValueError(f"test-function index must be >= 1, got {k}")
    p_hi, d_hi = legendre(k + 1, x)
    p_lo, d_lo = legendre(k - 1, x)
    return p_hi - p_lo, d_hi - d_lo


@dataclass(frozen=True)
class QuadratureRule1D:
    """Nodes and weights on [-1, 1]; n = order = node count."""

    nodes: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "nodes", np.asarray(self.nodes, dtype=np.float64))
        object.__setattr__(self, "weights", np.asarray(self.weights, dtype=np.float64))
        if abs(self.weights.sum() - 2.0) > 1e-12:
            raise ValueError("weights must sum to the interval length 2")
        if np.any(np.diff(self.nodes) <= 0):
            raise ValueError("nodes must be strictly increasing")
        if self.nodes[0] != -1.0 or self.nodes[-1] != 1.0:
            raise ValueError("Lobatto rules must include the endpoints -1 and 1")

    @property
    def order(self):
        return len(self.nodes)


def gll_rule(n):
    """Gauss-Lobatto-Legendre rule with n nodes (exact up to degree 2n-3).

    Interior nodes are the roots of P'_{n-1}, found by Newton iteration on
    g(x) = x P_N(x) - P_{N-1}(x) (whose roots are exactly the GLL nodes,
    g' = (N+1) P_N) starting from Chebyshev-Lobatto points.
    """
    if n < 2:
        raise ValueError(f"GLL rule needs at least 2 nodes, got {n}")
    big_n = n - 1
    x = -np.cos(np.pi * np.arange(n) / big_n)
    for _ in range(GLL_NEWTON_MAX_ITER):
        table, _ = legendre_table(big_n, x)
        p_n, p_nm1 = table[big_n], table[big_n - 1]
        dx = (x * p_n - p_nm1) / ((big_n + 1) * p_n)
        x = x - dx
        if np.max(np.abs(dx)) < GLL_NEWTON_TOL:
            break
    else:
        raise NumericError(f"GLL Newton iteration did not converge for n={n}")
    x[0], x[-1] = -1.0, 1.0
    p_n, _ = legendre(big_n, x)
    w = 2.0 / (n * big_n * p_n**2)
    return QuadratureRule1D(x, w)


@dataclass(frozen=True)
class QuadratureRule2D:
    """Tensor-product rule on [-1, 1]^2: points (N_quad, 2), weights (N_quad,)."""

    points: np.ndarray
    weights: np.ndarray
    order_1d: int

    @property
    def n_quad(self):
        return len(self.weights)


def tensor_rule_2d(rule):
    """Tensor product of a 1-D rule; point q = qy * n + qx (xi fastest)."""
    n = rule.order
    xi, eta = np.meshgrid(rule.nodes, rule.nodes, indexing="xy")
    wx, wy = np.meshgrid(rule.weights, rule.weights, indexing="xy")
    points = np.column_stack([xi.ravel(), eta.ravel()])
    weights = (wx * wy).ravel()
    return QuadratureRule2D(points, weights, n)


@dataclass(frozen=True)
class TestFunctionSet:
    """Tensor-product Legendre-difference test functions on [-1, 1]^2."""

    n_per_dim: int

    def __post_init__(self):
        if self.n_per_dim < 1:
            raise ValueError(f"n_per_dim must be >= 1, got {self.n_per_dim}")

    @property
    def n_test(self):
        return self.n_per_dim**2

    @property
    def max_legendre_degree(self):
        return self.n_per_dim + 1

    def eval_1d(self, x):
        """Values and derivatives of v_1..v_n at points x, shape (n, m)."""
        vals, _ = legendre_table(self.n_per_dim + 1, x)
        ks = np.arange(1, self.n_per_dim + 1)
        v = vals[2:] - vals[:-2]
        dv = (2 * ks + 1)[:, None] * vals[1:-1]
        return v, dv

    def eval_2d(self, points):
        """Values and reference gradients of all n_test functions.

        ``points`` is (Q, 2); returns (vals, d_xi, d_eta), each (N_test, Q),
        with 2-D index j = j_eta * n_per_dim + j_xi (xi fastest).
        """
        points = np.asarray(points, dtype=np.float64)
        vx, dvx = self.eval_1d(points[:, 0])
        vy, dvy = self.eval_1d(points[:, 1])
        n, q = self.n_per_dim, points.shape[0]
        vals = (vy[:, None, :] * vx[None, :, :]).reshape(n * n, q)
        d_xi = (vy[:, None, :] * dvx[None, :, :]).reshape(n * n, q)
        d_eta = (dvy[:, None, :] * vx[None, :, :]).reshape(n * n, q)
        return vals, d_xi, d_eta


@dataclass(frozen=True)
class PrecomputedTensors:
    """Stacked premultiplier tensors for the tensorized assembly.

    shape_val, grad_x, grad_y: (N_elem, N_test, N_quad) holding
    w_q |det J| v_j(x_q) and the physical-gradient analogues; force is
    (N_test, N_elem); quad_points_physical is (N_elem, N_quad, 2).
    """

    shape_val: np.ndarray
    grad_x: np.ndarray
    grad_y: np.ndarray
    quad_points_physical: np.ndarray
    force: np.ndarray

    def __post_init__(self):
        k, j, q = self.shape_val.shape
        ok = (
            self.grad_x.shape == (k, j, q)
            and self.grad_y.shape == (k, j, q)
            and self.quad_points_physical.shape == (k, q, 2)
            and self.force.shape == (j, k)
        )
        if not ok:
            raise ValueError("inconsistent tensor shapes")

    @property
    def n_elem(self):
        return self.shape_val.shape[0]

    @property
    def n_test(self):
        return self.shape_val.shape[1]

    @property
    def n_quad(self):
        return self.shape_val.shape[2]

    def stacked_points(self):
        """All quadrature points as one (N_elem * N_quad, 2) batch."""
        return self.quad_points_physical.reshape(-1, 2)


def precompute_tensors(mesh, rule, tests, problem, method="generic"):
    """Build the stacked premultiplier tensors and the forcing matrix.

    ``method="generic"`` evaluates the Jacobian at every quadrature point
    (required for skewed cells); ``method="affine"`` uses the cell-centre
    Jacobian, valid only when the map is affine (axis-aligned or
    parallelogram cells).
    """
    if method not in ("generic", "affine"):
        raise ValueError(f"unknown method {method!r}")
    vals, d_xi, d_eta = tests.eval_2d(rule.points)
    k_cells, j_tests, q_pts = mesh.n_elem, tests.n_test, rule.n_quad

    shape_val = np.empty((k_cells, j_tests, q_pts))
    grad_x = np.empty_like(shape_val)
    grad_y = np.empty_like(shape_val)
    phys = np.empty((k_cells, q_pts, 2))

    for k, cell in enumerate(mesh.cells):
        phys[k] = geometry.bilinear_map(cell, rule.points)
        if method == "generic":
            dets, inv_t = geometry.jacobian_batch(cell, rule.points)
        else:
            jac = geometry.jacobian(cell, np.zeros(2))
            dets = np.full(q_pts, jac.det)
            inv_t = np.broadcast_to(jac.inverse_transpose, (q_pts, 2, 2))
        wdet = rule.weights * dets  # (Q,)
        shape_val[k] = wdet * vals
        grad_x[k] = wdet * (inv_t[:, 0, 0] * d_xi + inv_t[:, 0, 1] * d_eta)
        grad_y[k] = wdet * (inv_t[:, 1, 0] * d_xi + inv_t[:, 1, 1] * d_eta)

    f_vals = problem.f(phys.reshape(-1, 2)).reshape(k_cells, q_pts)
    force = np.einsum("kjq,kq->jk", shape_val, f_vals)
    return PrecomputedTensors(shape_val, grad_x, grad_y, phys, force)
