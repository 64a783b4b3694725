import math

import numpy as np
import pytest

from znn import problems
from znn.errors import UnknownProblem


def central(fn, t, d=1e-6):
    return (fn(t + d) - fn(t - d)) / (2 * d)


def test_example1_at_zero():
    sig = problems.example1()
    np.testing.assert_array_equal(sig(0.0), [[0, 1, 0], [-1, 0, 1]])


def test_example1_derivative_at_zero():
    # d/dt of [sin .5t, cos .1t, -sin .1t; -cos .1t, sin .1t, cos .1t] at 0
    np.testing.assert_allclose(problems.example1().derivative(0.0),
                               [[0.5, 0, -0.1], [0.0, 0.1, 0.0]], atol=1e-15)


def test_example1_full_row_rank_on_grid():
    sig = problems.example1()
    for t in range(31):
        assert np.linalg.svd(sig(float(t)), compute_uv=False).min() > 0.1


def test_example2_at_zero_and_inverse():
    sig = problems.example2()
    np.testing.assert_array_equal(sig(0.0), [[2, 1], [1, 2]])
    np.testing.assert_allclose(problems.example2_inverse(0.0), [[2 / 3, -1 / 3], [-1 / 3, 2 / 3]], atol=1e-15)


def test_example2_determinant_bound():
    bound = (2 - math.sqrt(2)) ** 2
    for t in np.linspace(0, 30, 3001):
        assert np.linalg.det(problems.example2()(t)) >= bound - 1e-12


@pytest.mark.parametrize("t", [0.0, 1.3, 7.7, 29.0])
def test_example2_inverse_oracle(t):
    a = problems.example2()(t)
    np.testing.assert_allclose(a @ problems.example2_inverse(t), np.eye(2), atol=1e-12)


def _signals():
    opt = problems.example_opt()
    lin = problems.synthetic_scalar()
    return {
        "example1": problems.example1(), "example2": problems.example2(),
        "opt.A": opt.a, "opt.b": opt.b, "scalar.a": lin.a, "scalar.b": lin.b,
    }


@pytest.mark.parametrize("name", sorted(_signals()))
def test_analytic_derivatives_match_central_differences(name):
    sig = _signals()[name]
    r = np.random.default_rng(7)
    for t in r.uniform(0, 30, size=100):
        fd = central(sig.sample, t)
        an = sig.derivative(t)
        assert np.max(np.abs(fd - an)) <= 1e-6 * max(1.0, np.max(np.abs(an)))


def test_example_opt_values_at_zero():
    p = problems.example_opt()
    np.testing.assert_array_equal(p.hess_f(np.zeros(2), 0.0), [[6, 0], [0, 6]])
    np.testing.assert_array_equal(p.a(0.0), [[0, 1]])
    assert p.b(0.0)[0, 0] == 1.0
    x, l = p.oracle(0.0)
    np.testing.assert_allclose(x, [0, 1], atol=1e-14)
    np.testing.assert_allclose(l, [-7], atol=1e-14)


def test_example_opt_gradient_matches_objective():
    def f(x, t):
        c, s = math.cos(0.1 * t) + 2, math.sin(t)
        return c * x[0] ** 2 + c * x[1] ** 2 + 2 * s * x[0] * x[1] + s * x[0] + math.cos(t) * x[1]

    p = problems.example_opt()
    r = np.random.default_rng(3)
    for _ in range(20):
        x, t, d = r.normal(size=2), r.uniform(0, 10), 1e-6
        fd = [(f(x + d * e, t) - f(x - d * e, t)) / (2 * d) for e in np.eye(2)]
        np.testing.assert_allclose(p.grad_f(x, t), fd, atol=1e-7)


def test_example_opt_hessian_matches_gradient_differences():
    p = problems.example_opt()
    r = np.random.default_rng(4)
    for _ in range(20):
        x, t = r.normal(size=2), r.uniform(0, 10)
        errs = []
        for d in (1e-3, 5e-4):
            fd = np.column_stack([(p.grad_f(x + d * e, t) - p.grad_f(x, t)) / d for e in np.eye(2)])
            errs.append(np.max(np.abs(fd - p.hess_f(x, t))))
        assert errs[1] <= errs[0] + 1e-9  # forward differences: O(δ), exact here up to round-off
        assert errs[0] <= 1e-8


def test_example_opt_grad_time_derivative():
    p = problems.example_opt()
    r = np.random.default_rng(5)
    for _ in range(20):
        x, t = r.normal(size=2), r.uniform(0, 10)
        fd = central(lambda s: p.grad_f(x, s), t)
        np.testing.assert_allclose(p.grad_f_t(x, t), fd, atol=1e-7)


def test_example_opt_hessian_positive_definite():
    p = problems.example_opt()
    for t in np.linspace(0, 10, 1001):
        hs = p.hess_f(None, t)
        np.testing.assert_array_equal(hs, hs.T)
        assert hs[0, 0] > abs(hs[0, 1])  # diagonal dominance with positive diagonal


def test_example_opt_kkt_oracle_satisfies_conditions():
    p = problems.example_opt()
    for t in np.linspace(0, 10, 41):
        y = p.solution(t)
        assert np.linalg.norm(p.h(y, t)) <= 1e-10
        x, l = p.oracle(t)
        kkt = np.block([[p.hess_f(x, t), p.a(t).T], [p.a(t), np.zeros((1, 1))]])
        ref = np.linalg.solve(kkt, [-math.sin(t), -math.cos(t), math.cos(t)])
        np.testing.assert_allclose(y, ref, atol=1e-12)


def test_scalar_oracle():
    p = problems.synthetic_scalar()
    assert p.solution(0.0)[0] == 0.5
    assert p.solution(math.pi / 2)[0] == pytest.approx(0.0, abs=1e-16)
    for t in np.linspace(0, 20, 200):
        assert p.a(t)[0, 0] >= 1.0


def test_pinv_oracle():
    sig = problems.example1()
    for t in np.linspace(0, 30, 31):
        np.testing.assert_allclose(sig(t) @ problems.pinv_oracle(sig, t), np.eye(2), atol=1e-10)


def test_static_qp_kkt_point():
    p = problems.static_qp()
    assert np.linalg.norm(p.h(p.solution(0.0), 0.0)) == 0.0
    np.testing.assert_allclose(np.linalg.solve(p.jacobian(np.zeros(3), 0.0), [0, 0, 1]),
                               [0.5, 0.5, -1.0])


def test_frozen_signal_is_constant():
    sig = problems.frozen(problems.example1(), 2.0)
    np.testing.assert_array_equal(sig(0.0), sig(17.0))
    np.testing.assert_array_equal(sig.derivative(3.0), np.zeros((2, 3)))


def test_unknown_problem():
    with pytest.raises(UnknownProblem):
        problems.get_problem("nope")
