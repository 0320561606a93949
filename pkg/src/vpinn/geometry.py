"""Quadrilateral element decomposition and bilinear reference maps.

The reference element is [-1, 1]^2 with the standard 4-node shape functions
N_i(xi, eta) = (1 +/- xi)(1 +/- eta)/4, vertices ordered counter-clockwise
from the bottom-left corner.  All types are immutable after construction.
"""

from dataclasses import dataclass, field

import numpy as np

REF_CORNERS = np.array([(-1.0, -1.0), (1.0, -1.0), (1.0, 1.0), (-1.0, 1.0)])

DEGENERACY_TOL = 1e-14


class DegenerateCellError(ValueError):
    """Raised when a cell's Jacobian determinant is not safely positive."""


def _shape_values(ref):
    xi, eta = ref[..., 0], ref[..., 1]
    return 0.25 * np.stack(
        [
            (1 - xi) * (1 - eta),
            (1 + xi) * (1 - eta),
            (1 + xi) * (1 + eta),
            (1 - xi) * (1 + eta),
        ],
        axis=-1,
    )


def _shape_gradients(ref):
    xi, eta = ref[..., 0], ref[..., 1]
    d_xi = 0.25 * np.stack([-(1 - eta), (1 - eta), (1 + eta), -(1 + eta)], axis=-1)
    d_eta = 0.25 * np.stack([-(1 - xi), -(1 + xi), (1 + xi), (1 - xi)], axis=-1)
    return d_xi, d_eta


@dataclass(frozen=True)
class QuadCell:
    """Convex quadrilateral with counter-clockwise vertices (4, 2)."""

    vertices: np.ndarray

    def __post_init__(self):
        verts = np.asarray(self.vertices, dtype=np.float64)
        if verts.shape != (4, 2):
            raise ValueError(f"expected 4 vertices of shape (4, 2), got {verts.shape}")
        object.__setattr__(self, "vertices", verts)
        if self.signed_area() <= 0:
            raise ValueError("vertices must be in counter-clockwise order")
        dets = jacobian_determinants(self, REF_CORNERS)
        if np.any(dets <= DEGENERACY_TOL):
            raise DegenerateCellError(
                f"cell degenerate: corner Jacobian determinants {dets}"
            )

    def signed_area(self):
        x, y = self.vertices[:, 0], self.vertices[:, 1]
        return 0.5 * np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y)


@dataclass(frozen=True)
class Mesh:
    """Ordered collection of non-overlapping cells covering the domain."""

    cells: tuple
    domain_bounds: tuple  # (x_min, x_max, y_min, y_max)

    def __post_init__(self):
        object.__setattr__(self, "cells", tuple(self.cells))
        object.__setattr__(self, "domain_bounds", tuple(map(float, self.domain_bounds)))

    @property
    def n_elem(self):
        return len(self.cells)


@dataclass(frozen=True)
class JacobianInfo:
    """Jacobian d(x,y)/d(xi,eta) of the bilinear map at one reference point."""

    matrix: np.ndarray
    det: float
    inverse_transpose: np.ndarray = field(init=False)

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=np.float64)
        object.__setattr__(self, "matrix", m)
        inv = np.array([[m[1, 1], -m[1, 0]], [-m[0, 1], m[0, 0]]]) / self.det
        object.__setattr__(self, "inverse_transpose", inv)


def build_structured_mesh(nx, ny, bounds):
    """Axis-aligned nx-by-ny mesh of ``bounds`` in row-major order (x fastest)."""
    if nx < 1 or ny < 1:
        raise ValueError(f"nx and ny must be >= 1, got ({nx}, {ny})")
    x_min, x_max, y_min, y_max = map(float, bounds)
    if not (x_max > x_min and y_max > y_min):
        raise ValueError(f"degenerate bounds {bounds}")
    xs = np.linspace(x_min, x_max, nx + 1)
    ys = np.linspace(y_min, y_max, ny + 1)
    cells = []
    for j in range(ny):
        for i in range(nx):
            cells.append(
                QuadCell(
                    np.array(
                        [
                            (xs[i], ys[j]),
                            (xs[i + 1], ys[j]),
                            (xs[i + 1], ys[j + 1]),
                            (xs[i], ys[j + 1]),
                        ]
                    )
                )
            )
    mesh = Mesh(cells, (x_min, x_max, y_min, y_max))
    total = sum(c.signed_area() for c in mesh.cells)
    domain_area = (x_max - x_min) * (y_max - y_min)
    assert abs(total - domain_area) <= 1e-12 * domain_area
    return mesh


def bilinear_map(cell, ref):
    """Map reference coordinates in [-1, 1]^2 to physical coordinates.

    ``ref`` may be a single point (2,) or a batch (m, 2); the result has the
    same leading shape.
    """
    ref = np.asarray(ref, dtype=np.float64)
    return _shape_values(ref) @ cell.vertices


def jacobian(cell, ref):
    """JacobianInfo of the bilinear map at one reference point."""
    ref = np.asarray(ref, dtype=np.float64)
    d_xi, d_eta = _shape_gradients(ref)
    verts = cell.vertices
    matrix = np.array(
        [
            [d_xi @ verts[:, 0], d_eta @ verts[:, 0]],
            [d_xi @ verts[:, 1], d_eta @ verts[:, 1]],
        ]
    )
    det = matrix[0, 0] * matrix[1, 1] - matrix[0, 1] * matrix[1, 0]
    if det <= DEGENERACY_TOL:
        raise DegenerateCellError(f"Jacobian determinant {det} at ref {ref}")
    return JacobianInfo(matrix, float(det))


def jacobian_determinants(cell, refs):
    """Jacobian determinants at a batch of reference points (m, 2) -> (m,)."""
    d_xi, d_eta = _shape_gradients(np.asarray(refs, dtype=np.float64))
    verts = cell.vertices
    dx_dxi = d_xi @ verts[:, 0]
    dx_deta = d_eta @ verts[:, 0]
    dy_dxi = d_xi @ verts[:, 1]
    dy_deta = d_eta @ verts[:, 1]
    return dx_dxi * dy_deta - dx_deta * dy_dxi


def jacobian_batch(cell, refs):
    """Vectorized Jacobian data at reference points (m, 2).

    Returns (dets (m,), inverse_transpose (m, 2, 2)).
    """
    d_xi, d_eta = _shape_gradients(np.asarray(refs, dtype=np.float64))
    verts = cell.vertices
    dx_dxi = d_xi @ verts[:, 0]
    dx_deta = d_eta @ verts[:, 0]
    dy_dxi = d_xi @ verts[:, 1]
    dy_deta = d_eta @ verts[:, 1]
    dets = dx_dxi * dy_deta - dx_deta * dy_dxi
    if np.any(dets <= DEGENERACY_TOL):
        raise DegenerateCellError(f"non-positive Jacobian determinant in cell {cell}")
    inv_t = np.empty(dets.shape + (2, 2))
    inv_t[..., 0, 0] = dy_deta / dets
    inv_t[..., 0, 1] = -dy_dxi / dets
    inv_t[..., 1, 0] = -dx_deta / dets
    inv_t[..., 1, 1] = dx_dxi / dets
    return dets, inv_t


def map_reference_gradient(jac, grad_ref):
    """Push a reference-space gradient to physical space."""
    return jac.inverse_transpose @ np.asarray(grad_ref, dtype=np.float64)
