"""Hard-constrained Dirichlet boundary machinery on the unit square.

The solution ansatz is u_hard = j(x) + h(x) u_NN(x) with an extension
function j matching the boundary data and an indicator h vanishing on the
boundary.  Indicators are products of per-edge factors 1 - e^{-kappa d} with
d the distance to that edge; kappa is either a fixed table or 10^s with s a
learnable scalar.  The learnt stabilization field is masked to zero on the
boundary by a fixed tanh product.

All evaluation functions accept plain arrays or autodiff tensors for the
learnable quantities, so they can sit inside a traced loss.
"""

from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad

EDGES = ("left", "bottom", "right", "top")

LN10 = np.log(10.0)


@dataclass(frozen=True)
class ProductExpIndicator:
    """Fixed per-edge slopes: h = prod_e (1 - e^{-kappa_e d_e})."""

    kappa: dict  # edge name -> positive float

    def __post_init__(self):
        missing = [e for e in EDGES if e not in self.kappa]
        if missing:
            raise ValueError(f"missing kappa for edges {missing}")
        bad = {e: k for e, k in self.kappa.items() if not (k > 0 and np.isfinite(k))}
        if bad:
            raise ValueError(f"kappa must be positive and finite, got {bad}")


@dataclass(frozen=True)
class AdaptiveExpIndicator:
    """Per-edge slopes kappa_e = 10^{s_e} drawn from named learnable scalars."""

    edge_scalars: dict  # edge name -> scalar name (e.g. "alpha")

    def __post_init__(self):
        missing = [e for e in EDGES if e not in self.edge_scalars]
        if missing:
            raise ValueError(f"missing scalar assignment for edges {missing}")

    @property
    def scalar_names(self):
        return sorted(set(self.edge_scalars.values()))


def _edge_kappas(indicator, scalars):
    if isinstance(indicator, ProductExpIndicator):
        return {e: indicator.kappa[e] for e in EDGES}
    if isinstance(indicator, AdaptiveExpIndicator):
        out = {}
        for e in EDGES:
            name = indicator.edge_scalars[e]
            if name not in scalars:
                raise ValueError(f"indicator needs scalar {name!r}")
            out[e] = ad.exp(scalars[name] * LN10)  # 10^s, differentiable in s
        return out
    raise TypeError(f"unknown indicator type {type(indicator).__name__}")


def indicator_eval(indicator, scalars, points):
    """(h, dh/dx, dh/dy) of the indicator at ``points`` (n, 2).

    ``scalars`` supplies the current values of the learnable exponents for
    adaptive indicators (floats or traced tensors); it is ignored for fixed
    indicators.  Exponential factors whose argument falls below the shared
    clamp evaluate to exactly 1 with zero slope.
    """
    points = np.asarray(points, dtype=np.float64)
    x, y = points[:, 0], points[:, 1]
    kap = _edge_kappas(indicator, scalars or {})
    # per-edge distance and the sign of d(distance)/d(coordinate)
    e_l = ad.exp_clamped(-kap["left"] * x)
    e_b = ad.exp_clamped(-kap["bottom"] * y)
    e_r = ad.exp_clamped(-kap["right"] * (1.0 - x))
    e_t = ad.exp_clamped(-kap["top"] * (1.0 - y))
    f_l, f_b, f_r, f_t = 1.0 - e_l, 1.0 - e_b, 1.0 - e_r, 1.0 - e_t
    h = f_l * f_b * f_r * f_t
    dh_dx = (kap["left"] * e_l * f_r - kap["right"] * e_r * f_l) * f_b * f_t
    dh_dy = (kap["bottom"] * e_b * f_t - kap["top"] * e_t * f_b) * f_l * f_r
    return h, dh_dx, dh_dy


@dataclass(frozen=True)
class ExtensionFunction:
    """Closed-form lift of the Dirichlet data: j and its analytic gradient."""

    kind: str  # "zero" | "ej_sine"

    def __post_init__(self):
        if self.kind not in ("zero", "ej_sine"):
            raise ValueError(f"unknown extension kind {self.kind!r}")

    def j(self, points):
        points = np.asarray(points, dtype=np.float64)
        x, y = points[:, 0], points[:, 1]
        if self.kind == "zero":
            return np.zeros_like(x)
        return np.sin(np.pi * y) * np.cos(0.5 * np.pi * x)

    def grad_j(self, points):
        points = np.asarray(points, dtype=np.float64)
        x, y = points[:, 0], points[:, 1]
        if self.kind == "zero":
            z = np.zeros_like(x)
            return z, z
        jx = -0.5 * np.pi * np.sin(np.pi * y) * np.sin(0.5 * np.pi * x)
        jy = np.pi * np.cos(np.pi * y) * np.cos(0.5 * np.pi * x)
        return jx, jy


@dataclass(frozen=True)
class TauMask:
    """w = tanh(sx) tanh(sy) tanh(s(1-x)) tanh(s(1-y)); zero on the boundary."""

    scale: float = 50.0

    def w(self, points):
        points = np.asarray(points, dtype=np.float64)
        x, y = points[:, 0], points[:, 1]
        s = self.scale
        return np.tanh(s * x) * np.tanh(s * y) * np.tanh(s * (1 - x)) * np.tanh(s * (1 - y))

    def grad_w(self, points):
        points = np.asarray(points, dtype=np.float64)
        x, y = points[:, 0], points[:, 1]
        s = self.scale
        tx, ty = np.tanh(s * x), np.tanh(s * y)
        tmx, tmy = np.tanh(s * (1 - x)), np.tanh(s * (1 - y))
        dx = s * ((1 - tx**2) * tmx - (1 - tmx**2) * tx) * ty * tmy
        dy = s * ((1 - ty**2) * tmy - (1 - tmy**2) * ty) * tx * tmx
        return dx, dy


def hard_ansatz(u, du_dx, du_dy, indicator, scalars, extension, points):
    """u_hard = j + h u and its spatial gradient by the product rule.

    ``u, du_dx, du_dy`` are the head-0 fields at ``points``; traced inputs
    give a traced result.
    """
    h, hx, hy = indicator_eval(indicator, scalars, points)
    j = extension.j(points)
    jx, jy = extension.grad_j(points)
    u_hard = j + h * u
    ux_hard = jx + hx * u + h * du_dx
    uy_hard = jy + hy * u + h * du_dy
    return u_hard, ux_hard, uy_hard


def tau_field(tau_tilde, mask, tau_growth, points):
    """Stabilization field tau = tau_growth * w(x) * sigmoid(tau_tilde)."""
    if tau_growth < 0:
        raise ValueError(f"tau_growth must be >= 0, got {tau_growth}")
    return tau_growth * (mask.w(points) * ad.sigmoid(tau_tilde))


def tau_field_gradient(tau_tilde, dtau_dx, dtau_dy, mask, tau_growth, points):
    """Spatial gradient of tau_field (product + chain rule)."""
    w = mask.w(points)
    wx, wy = mask.grad_w(points)
    sig = ad.sigmoid(tau_tilde)
    dsig = sig * (1.0 - sig)
    gx = tau_growth * (wx * sig + w * dsig * dtau_dx)
    gy = tau_growth * (wy * sig + w * dsig * dtau_dy)
    return gx, gy


def boundary_points(n, bounds=(0.0, 1.0, 0.0, 1.0)):
    """n points distributed over the four edges (n // 4 each, corners once)."""
    x0, x1, y0, y1 = bounds
    per_edge = max(n // 4, 1)
    t = np.linspace(0.0, 1.0, per_edge, endpoint=False)
    xs = x0 + (x1 - x0) * t
    ys = y0 + (y1 - y0) * t
    bottom = np.column_stack([xs, np.full(per_edge, y0)])
    right = np.column_stack([np.full(per_edge, x1), ys])
    top = np.column_stack([x0 + (x1 - x0) * (1.0 - t), np.full(per_edge, y1)])
    left = np.column_stack([np.full(per_edge, x0), y0 + (y1 - y0) * (1.0 - t)])
    return np.vstack([bottom, right, top, left])
