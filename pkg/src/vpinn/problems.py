"""Benchmark convection-diffusion-reaction problems on the unit square.

Each problem provides -eps*Lap(u) + b.grad(u) + c*u = f with Dirichlet data
g, a constant convection field b, and (where known) the closed-form solution
with analytic first derivatives.
"""

from dataclasses import dataclass

import numpy as np

from .autodiff import exp_clamped

UNIT_SQUARE = (0.0, 1.0, 0.0, 1.0)


@dataclass(frozen=True)
class ExactSolution:
    """Closed-form solution u(x, y) with analytic gradient."""

    u: callable  # (n, 2) -> (n,)
    grad: callable  # (n, 2) -> (ux, uy)


@dataclass(frozen=True)
class CDRProblem:
    name: str
    epsilon: float
    b: tuple  # constant convection field (b1, b2)
    c: float  # constant reaction coefficient
    f: callable  # forcing, (n, 2) -> (n,)
    g: callable  # Dirichlet data on the boundary, (n, 2) -> (n,)
    exact: ExactSolution | None = None
    domain_bounds: tuple = UNIT_SQUARE

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")


@dataclass(frozen=True)
class PecletReport:
    length: float
    b_norm: float
    peclet: float


def peclet(problem):
    """Peclet number L * ||b|| / eps with L = 1 for the unit square."""
    b_norm = float(np.hypot(problem.b[0], problem.b[1]))
    return PecletReport(1.0, b_norm, b_norm / problem.epsilon)


def make_eriksson_johnson(epsilon):
    """Boundary-layer problem with b = (1, 0), c = 0, f = 0.

    The solution ((e^{r1(x-1)} - e^{r2(x-1)}) / (e^{-r1} - e^{-r2})) sin(pi y)
    solves the homogeneous equation because both exponents satisfy
    eps r^2 - r - eps pi^2 = 0; a layer of width O(eps) sits at x = 1.
    """
    if not epsilon > 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    eps = float(epsilon)
    disc = np.sqrt(1.0 + 4.0 * eps**2 * np.pi**2)
    r1 = (1.0 + disc) / (2.0 * eps)
    # root product of eps r^2 - r - eps pi^2: avoids cancellation in 1 - disc
    r2 = -np.pi**2 / r1
    for r in (r1, r2):
        resid = -eps * (r**2 - np.pi**2) + r
        scale = max(abs(eps) * r**2, abs(r), 1.0)
        assert abs(resid) <= 1e-10 * scale, "exponents must solve the PDE"
    denom = np.exp(-r1) - np.exp(-r2)

    def profile(x):
        return (exp_clamped(r1 * (x - 1.0)) - exp_clamped(r2 * (x - 1.0))) / denom

    def profile_dx(x):
        return (
            r1 * exp_clamped(r1 * (x - 1.0)) - r2 * exp_clamped(r2 * (x - 1.0))
        ) / denom

    def u(points):
        points = np.asarray(points, dtype=np.float64)
        return profile(points[:, 0]) * np.sin(np.pi * points[:, 1])

    def grad(points):
        points = np.asarray(points, dtype=np.float64)
        x, y = points[:, 0], points[:, 1]
        return (
            profile_dx(x) * np.sin(np.pi * y),
            np.pi * profile(x) * np.cos(np.pi * y),
        )

    def f(points):
        points = np.asarray(points, dtype=np.float64)
        return np.zeros(points.shape[0])

    return CDRProblem(
        "eriksson_johnson", eps, (1.0, 0.0), 0.0, f, u, ExactSolution(u, grad)
    )


def make_outflow_layer(epsilon):
    """Two outflow layers at x = 1 and y = 1; b = (2, 3), c = 1.

    The prescribed solution is x y^2 - y^2 E2(x) - x E3(y) + E2(x) E3(y) with
    E2(x) = e^{2(x-1)/eps}, E3(y) = e^{3(y-1)/eps}.  The forcing below is the
    symbolically cancelled application of the operator: for every exponential
    mode the O(1/eps^2) diffusion contribution cancels exactly against the
    convection term, leaving O(1) coefficients only.
    """
    if not epsilon > 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    eps = float(epsilon)

    def e2(x):
        return exp_clamped(2.0 * (x - 1.0) / eps)

    def e3(y):
        return exp_clamped(3.0 * (y - 1.0) / eps)

    def u(points):
        # factored form of x y^2 - y^2 E2 - x E3 + E2 E3; exact 0 at x=1, y=1
        points = np.asarray(points, dtype=np.float64)
        x, y = points[:, 0], points[:, 1]
        return (x - e2(x)) * (y**2 - e3(y))

    def grad(points):
        points = np.asarray(points, dtype=np.float64)
        x, y = points[:, 0], points[:, 1]
        ux = (1.0 - (2.0 / eps) * e2(x)) * (y**2 - e3(y))
        uy = (x - e2(x)) * (2.0 * y - (3.0 / eps) * e3(y))
        return ux, uy

    def f(points):
        points = np.asarray(points, dtype=np.float64)
        x, y = points[:, 0], points[:, 1]
        smooth = -2.0 * eps * x + 2.0 * y**2 + 6.0 * x * y + x * y**2
        return (
            smooth
            + (2.0 * eps - 6.0 * y - y**2) * e2(x)
            + (-2.0 - x) * e3(y)
            + e2(x) * e3(y)
        )

    return CDRProblem(
        "outflow_layer", eps, (2.0, 3.0), 1.0, f, u, ExactSolution(u, grad)
    )


def make_parabolic_layer(epsilon=1e-8):
    """b = (1, 0), c = 0, f = 1, homogeneous Dirichlet data; no closed form.

    An exponential layer sits at the outflow x = 1 and parabolic layers at
    the characteristic boundaries y = 0 and y = 1.
    """
    eps = float(epsilon)

    def f(points):
        points = np.asarray(points, dtype=np.float64)
        return np.ones(points.shape[0])

    def g(points):
        points = np.asarray(points, dtype=np.float64)
        return np.zeros(points.shape[0])

    return CDRProblem("parabolic_layer", eps, (1.0, 0.0), 0.0, f, g, None)


PROBLEM_FACTORIES = {
    "eriksson_johnson": make_eriksson_johnson,
    "outflow_layer": make_outflow_layer,
    "parabolic_layer": make_parabolic_layer,
}


def make_problem(name, epsilon):
    if name not in PROBLEM_FACTORIES:
        raise ValueError(
            f"unknown problem {name!r}; expected one of {sorted(PROBLEM_FACTORIES)}"
        )
    return PROBLEM_FACTORIES[name](epsilon)
