"""Fast self-check suite: independently verifiable properties of the core
numerics, runnable from the CLI.  Each check returns (name, passed, detail).
"""

import numpy as np

from . import network as net_mod
from .boundary import (
    ExtensionFunction,
    ProductExpIndicator,
    boundary_points,
    hard_ansatz,
)
from .geometry import QuadCell, Mesh, build_structured_mesh
from .loss import (
    Coefficients,
    FieldBundle,
    LossConfig,
    assemble_residual,
    assemble_residual_loop,
    make_boundary_setup,
    total_loss,
)
from .problems import make_eriksson_johnson, make_outflow_layer
from .quadrature import (
    TestFunctionSet,
    gll_rule,
    precompute_tensors,
    tensor_rule_2d,
    test_function_1d,
)
from .trainer import build_indicator, default_indicator


def check_quadrature_exactness():
    worst = 0.0
    for n in range(2, 13):
        rule = gll_rule(n)
        for degree in range(0, 2 * n - 2):
            exact = 0.0 if degree % 2 else 2.0 / (degree + 1)
            err = abs(np.sum(rule.weights * rule.nodes**degree) - exact)
            worst = max(worst, err)
    return worst <= 1e-12, f"worst monomial error {worst:.2e} (tol 1e-12)"


def check_test_function_boundary_zeros():
    ends = np.array([-1.0, 1.0])
    worst = max(
        float(np.max(np.abs(test_function_1d(k, ends)[0]))) for k in range(1, 21)
    )
    return worst <= 1e-12, f"max |v_k(+-1)| = {worst:.2e} for k <= 20 (tol 1e-12)"


def _random_assembly_case(rng, skewed=False):
    if skewed:
        cell = QuadCell(np.array([(0.0, 0.0), (2.0, 0.0), (3.0, 2.0), (1.0, 1.0)]))
        mesh = Mesh((cell,), (0.0, 3.0, 0.0, 2.0))
    else:
        nx, ny = rng.integers(1, 4, size=2)
        mesh = build_structured_mesh(int(nx), int(ny), (0.0, 1.0, 0.0, 1.0))
    rule = tensor_rule_2d(gll_rule(int(rng.integers(2, 5))))
    tests = TestFunctionSet(int(rng.integers(1, 4)))
    eps = float(rng.uniform(1e-3, 1.0))
    b = (float(rng.normal()), float(rng.normal()))
    c = float(rng.normal())
    shape = (mesh.n_elem, rule.n_quad)
    fields = FieldBundle(
        rng.standard_normal(shape), rng.standard_normal(shape), rng.standard_normal(shape)
    )
    return mesh, rule, tests, eps, b, c, fields


def check_assembly_oracle(n_cases=20, flip_jacobian_sign=False):
    """Tensorized assembly vs the double-loop reference on random cases.

    ``flip_jacobian_sign`` is a negative-control hook: it corrupts the
    tensorized path so the comparison must fail.
    """
    rng = np.random.default_rng(2024)
    worst = 0.0
    for case in range(n_cases):
        mesh, rule, tests, eps, b, c, fields = _random_assembly_case(
            rng, skewed=(case == 0)
        )

        def f_fn(points):
            return np.sin(points[:, 0]) + points[:, 1] ** 2

        class _P:
            f = staticmethod(f_fn)

        tensors = precompute_tensors(mesh, rule, tests, _P)
        if flip_jacobian_sign:
            tensors = type(tensors)(
                tensors.shape_val,
                -tensors.grad_x,
                tensors.grad_y,
                tensors.quad_points_physical,
                tensors.force,
            )
        coeffs = Coefficients(eps, b, c)
        fast = assemble_residual(tensors, fields, coeffs)
        slow = assemble_residual_loop(mesh, rule, tests, fields, coeffs, f_fn)
        scale = max(np.max(np.abs(slow)), 1.0)
        worst = max(worst, float(np.max(np.abs(fast - slow)) / scale))
    return worst <= 1e-12, f"worst tensor-vs-loop deviation {worst:.2e} (tol 1e-12)"


def check_loss_gradients():
    """Directional parameter derivative vs central differences, two modes."""
    problem = make_eriksson_johnson(0.1)
    mesh = build_structured_mesh(2, 2, problem.domain_bounds)
    rule = tensor_rule_2d(gll_rule(4))
    tests = TestFunctionSet(2)
    tensors = precompute_tensors(mesh, rule, tests, problem)
    ext = ExtensionFunction("ej_sine")
    ind, _ = build_indicator(default_indicator("eriksson_johnson", 0.1))
    from .boundary import TauMask

    rng = np.random.default_rng(7)
    worst = 0.0
    for mode, n_out in (("variational", 1), ("variational+supg_learnt", 2)):
        cfg = LossConfig(mode, tau_growth=0.5)
        net = net_mod.init_network([2, 8, 8, n_out], seed=5)
        bsetup = make_boundary_setup(problem, ind, ext, tensors, TauMask())
        _, grads = net_mod.loss_gradient(
            net, lambda tp: total_loss(cfg, tensors, net, problem, bsetup, tp)
        )
        params = net_mod.flatten_parameters(net)
        direction = [rng.standard_normal(p.shape) for p in params]
        advalue = sum(
            float(np.sum(g * d))
            for g, d in zip(net_mod.flatten_gradients(net, grads), direction)
        )
        h = 1e-6

        def loss_at(shift):
            saved = [p.copy() for p in params]
            net_mod.unflatten_into(net, [p + shift * d for p, d in zip(saved, direction)])
            value = float(total_loss(cfg, tensors, net, problem, bsetup))
            net_mod.unflatten_into(net, saved)
            return value

        fd = (loss_at(h) - loss_at(-h)) / (2 * h)
        rel = abs(fd - advalue) / max(abs(fd), abs(advalue), 1e-10)
        worst = max(worst, rel)
    return worst <= 1e-5, f"worst directional-derivative error {worst:.2e} (tol 1e-5)"


def check_hard_bc_exactness():
    worst = 0.0
    cases = [
        (make_eriksson_johnson(0.1), "eriksson_johnson", 0.1),
        (make_outflow_layer(1e-8), "outflow_layer", 1e-8),
    ]
    for problem, name, eps in cases:
        ind, scalars = build_indicator(default_indicator(name, eps))
        ext = (
            ExtensionFunction("ej_sine")
            if name == "eriksson_johnson"
            else ExtensionFunction("zero")
        )
        net = net_mod.init_network([2, 8, 8, 1], seed=1)
        pts = boundary_points(400, problem.domain_bounds)
        batch = net_mod.forward_with_gradients(net, pts)
        u_hard, _, _ = hard_ansatz(
            batch.u[:, 0], batch.du_dx[:, 0], batch.du_dy[:, 0], ind, scalars, ext, pts
        )
        worst = max(worst, float(np.max(np.abs(u_hard - problem.g(pts)))))
    return worst <= 1e-12, f"max |u_hard - g| = {worst:.2e} on 400 samples (tol 1e-12)"


def check_problem_residuals():
    # Eriksson-Johnson: analytic strong residual of the closed form
    rng = np.random.default_rng(3)
    worst_ej = 0.0
    for eps in (0.1, 0.01, 0.001):
        problem = make_eriksson_johnson(eps)
        pts = rng.uniform(0.05, 0.95, size=(100, 2))
        x, y = pts[:, 0], pts[:, 1]
        disc = np.sqrt(1.0 + 4.0 * eps**2 * np.pi**2)
        r1 = (1.0 + disc) / (2.0 * eps)
        r2 = -np.pi**2 / r1
        denom = np.exp(-r1) - np.exp(-r2)
        amp = np.sin(np.pi * y)
        a_val = (np.exp(r1 * (x - 1)) - np.exp(r2 * (x - 1))) / denom
        a_dx = (r1 * np.exp(r1 * (x - 1)) - r2 * np.exp(r2 * (x - 1))) / denom
        a_dxx = (r1**2 * np.exp(r1 * (x - 1)) - r2**2 * np.exp(r2 * (x - 1))) / denom
        resid = -eps * (a_dxx * amp - np.pi**2 * a_val * amp) + a_dx * amp
        worst_ej = max(worst_ej, float(np.max(np.abs(resid))))
    ok_ej = worst_ej <= 1e-8

    # Outflow layer: constructed forcing vs finite-difference operator
    problem = make_outflow_layer(1e-2)
    pts = rng.uniform(0.2, 0.78, size=(20, 2))
    h = 1e-5

    def u_of(p):
        return problem.exact.u(p)

    lap = (
        u_of(pts + [h, 0]) + u_of(pts - [h, 0]) + u_of(pts + [0, h]) + u_of(pts - [0, h])
        - 4 * u_of(pts)
    ) / h**2
    ux = (u_of(pts + [h, 0]) - u_of(pts - [h, 0])) / (2 * h)
    uy = (u_of(pts + [0, h]) - u_of(pts - [0, h])) / (2 * h)
    applied = -problem.epsilon * lap + 2 * ux + 3 * uy + u_of(pts)
    f_vals = problem.f(pts)
    rel = float(np.max(np.abs(applied - f_vals) / np.maximum(np.abs(f_vals), 1e-10)))
    ok_out = rel <= 1e-4
    detail = f"EJ strong residual {worst_ej:.2e} (tol 1e-8); outflow f FD error {rel:.2e} (tol 1e-4)"
    return ok_ej and ok_out, detail


def run_bench(cells, n_quad=4, n_test=3, repeats=3):
    """Time tensorized vs double-loop assembly on identical random inputs.

    ``cells`` is a list of (nx, ny).  Each row reports wall times and checks
    that both paths give the same variational loss to 1e-12 relative.
    """
    import time

    from .loss import variational_loss

    rng = np.random.default_rng(99)
    rows = []
    for nx, ny in cells:
        mesh = build_structured_mesh(nx, ny, (0.0, 1.0, 0.0, 1.0))
        rule = tensor_rule_2d(gll_rule(n_quad))
        tests = TestFunctionSet(n_test)

        def f_fn(points):
            return np.cos(points[:, 0]) * points[:, 1]

        class _P:
            f = staticmethod(f_fn)

        tensors = precompute_tensors(mesh, rule, tests, _P)
        shape = (mesh.n_elem, rule.n_quad)
        fields = FieldBundle(
            rng.standard_normal(shape),
            rng.standard_normal(shape),
            rng.standard_normal(shape),
        )
        coeffs = Coefficients(0.5, (1.0, 2.0), 0.7)

        t0 = time.perf_counter()
        for _ in range(repeats):
            fast = assemble_residual(tensors, fields, coeffs)
        tensor_ms = (time.perf_counter() - t0) / repeats * 1e3

        t0 = time.perf_counter()
        slow = assemble_residual_loop(mesh, rule, tests, fields, coeffs, f_fn)
        loop_ms = (time.perf_counter() - t0) * 1e3

        loss_fast = float(variational_loss(fast))
        loss_slow = float(variational_loss(slow))
        rel = abs(loss_fast - loss_slow) / max(abs(loss_slow), 1.0)
        if rel > 1e-12:
            raise AssertionError(
                f"loop/tensor loss mismatch {rel:.2e} on {nx}x{ny} mesh"
            )
        rows.append(
            {
                "n_cells": mesh.n_elem,
                "loop_ms": loop_ms,
                "tensor_ms": tensor_ms,
                "speedup": loop_ms / tensor_ms,
            }
        )
    return rows


def run_suite(flip_jacobian_sign=False):
    """Run all checks; returns a list of (name, passed, detail)."""
    checks = [
        ("quadrature_exactness", check_quadrature_exactness, {}),
        ("test_function_boundary_zeros", check_test_function_boundary_zeros, {}),
        (
            "assembly_tensor_vs_loop",
            check_assembly_oracle,
            {"flip_jacobian_sign": flip_jacobian_sign},
        ),
        ("loss_gradient_fd", check_loss_gradients, {}),
        ("hard_bc_exactness", check_hard_bc_exactness, {}),
        ("problem_residual_oracles", check_problem_residuals, {}),
    ]
    results = []
    for name, fn, kwargs in checks:
        passed, detail = fn(**kwargs)
        results.append((name, passed, detail))
    return results
