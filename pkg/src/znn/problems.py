"""Benchmark problems with analytic samples, derivatives and ground truth."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import UnknownProblem
from .linalg import inv, lu_solve, pinv


@dataclass(frozen=True)
class MatrixSignal:
    """A matrix-valued function of time. Samples are always 2-D arrays."""

    shape: tuple[int, int]
    sample: Callable[[float], np.ndarray]
    derivative: Optional[Callable[[float], np.ndarray]] = None
    description: str = ""

    def __call__(self, t: float) -> np.ndarray:
        return self.sample(t)


@dataclass(frozen=True)
class LinearProblem:
    """``A(t) x(t) = b(t)``; ``b`` is an n x 1 signal, iterates are 1-D."""

    a: MatrixSignal
    b: MatrixSignal
    oracle: Optional[Callable[[float], np.ndarray]] = None
    description: str = ""

    @property
    def n(self) -> int:
        return self.a.shape[0]

    def solution(self, t: float) -> np.ndarray:
        if self.oracle is not None:
            return np.asarray(self.oracle(t), dtype=float).reshape(-1)
        return lu_solve(self.a(t), self.b(t)[:, 0])


@dataclass(frozen=True)
class OptProblem:
    """``min f(x, t)`` subject to ``A(t) x = b(t)``.

    ``grad_f_t`` is the partial time derivative of the gradient; it is only
    needed for the analytic derivative mode.
    """

    n: int
    m: int
    grad_f: Callable[[np.ndarray, float], np.ndarray]
    hess_f: Callable[[np.ndarray, float], np.ndarray]
    a: MatrixSignal
    b: MatrixSignal
    grad_f_t: Optional[Callable[[np.ndarray, float], np.ndarray]] = None
    oracle: Optional[Callable[[float], tuple[np.ndarray, np.ndarray]]] = None
    description: str = ""

    def split(self, y):
        y = np.asarray(y, dtype=float)
        return y[: self.n], y[self.n:]

    def h(self, y, t: float) -> np.ndarray:
        """Stacked stationarity/feasibility residual."""
        x, l = self.split(y)
        a = self.a(t)
        return np.concatenate([self.grad_f(x, t) + a.T @ l, a @ x - self.b(t)[:, 0]])

    def jacobian(self, y, t: float) -> np.ndarray:
        x, _ = self.split(y)
        a = self.a(t)
        return np.block([[self.hess_f(x, t), a.T], [a, np.zeros((self.m, self.m))]])

    def h_t(self, y, t: float) -> np.ndarray:
        """Analytic partial time derivative of :meth:`h` at fixed y."""
        if self.grad_f_t is None or self.a.derivative is None or self.b.derivative is None:
            raise ValueError("problem has no analytic time derivatives")
        x, l = self.split(y)
        da = self.a.derivative(t)
        return np.concatenate([self.grad_f_t(x, t) + da.T @ l, da @ x - self.b.derivative(t)[:, 0]])

    def solution(self, t: float) -> np.ndarray:
        if self.oracle is None:
            raise ValueError("problem has no oracle")
        x, l = self.oracle(t)
        return np.concatenate([np.asarray(x, float), np.asarray(l, float)])


def example1() -> MatrixSignal:
    def sample(t):
        return np.array([
            [math.sin(0.5 * t), math.cos(0.1 * t), -math.sin(0.1 * t)],
            [-math.cos(0.1 * t), math.sin(0.1 * t), math.cos(0.1 * t)],
        ])

    def derivative(t):
        return np.array([
            [0.5 * math.cos(0.5 * t), -0.1 * math.sin(0.1 * t), -0.1 * math.cos(0.1 * t)],
            [0.1 * math.sin(0.1 * t), 0.1 * math.cos(0.1 * t), -0.1 * math.sin(0.1 * t)],
        ])

    return MatrixSignal((2, 3), sample, derivative, "2x3 full-row-rank B(t) for generalized inversion")


def example2() -> MatrixSignal:
    def sample(t):
        s, c = math.sin(0.5 * t), math.cos(0.5 * t)
        return np.array([[s + 2, c], [c, s + 2]])

    def derivative(t):
        ds, dc = 0.5 * math.cos(0.5 * t), -0.5 * math.sin(0.5 * t)
        return np.array([[ds, dc], [dc, ds]])

    return MatrixSignal((2, 2), sample, derivative, "2x2 nonsingular A(t) for matrix inversion")


def example2_inverse(t: float) -> np.ndarray:
    """Adjugate formula for the inverse of the :func:`example2` matrix."""
    s, c = math.sin(0.5 * t), math.cos(0.5 * t)
    det = (s + 2) ** 2 - c ** 2
    return np.array([[s + 2, -c], [-c, s + 2]]) / det


def example_opt() -> OptProblem:
    def grad_f(x, t):
        c, s = math.cos(0.1 * t) + 2, math.sin(t)
        return np.array([2 * c * x[0] + 2 * s * x[1] + s, 2 * s * x[0] + 2 * c * x[1] + math.cos(t)])

    def hess_f(x, t):
        c, s = math.cos(0.1 * t) + 2, math.sin(t)
        return np.array([[2 * c, 2 * s], [2 * s, 2 * c]])

    def grad_f_t(x, t):
        dc, ds = -0.1 * math.sin(0.1 * t), math.cos(t)
        return np.array([2 * dc * x[0] + 2 * ds * x[1] + ds, 2 * ds * x[0] + 2 * dc * x[1] - math.sin(t)])

    a = MatrixSignal(
        (1, 2),
        lambda t: np.array([[math.sin(0.2 * t), math.cos(0.2 * t)]]),
        lambda t: np.array([[0.2 * math.cos(0.2 * t), -0.2 * math.sin(0.2 * t)]]),
        "constraint row",
    )
    b = MatrixSignal((1, 1), lambda t: np.array([[math.cos(t)]]), lambda t: np.array([[-math.sin(t)]]))

    def oracle(t):
        # quadratic objective: the KKT system is linear in (x, l)
        kkt = np.block([[hess_f(None, t), a(t).T], [a(t), np.zeros((1, 1))]])
        y = lu_solve(kkt, np.array([-math.sin(t), -math.cos(t), math.cos(t)]))
        return y[:2], y[2:]

    return OptProblem(2, 1, grad_f, hess_f, a, b, grad_f_t, oracle,
                      "time-varying convex quadratic with one linear constraint")


def static_qp() -> OptProblem:
    """``min x^T x`` s.t. ``x1 + x2 = 1``; KKT point (1/2, 1/2, -1)."""
    const = lambda v: (lambda t: v)  # noqa: E731
    zero_row = np.zeros((1, 2))
    return OptProblem(
        2, 1,
        grad_f=lambda x, t: 2.0 * np.asarray(x, float),
        hess_f=lambda x, t: 2.0 * np.eye(2),
        a=MatrixSignal((1, 2), const(np.array([[1.0, 1.0]])), const(zero_row)),
        b=MatrixSignal((1, 1), const(np.array([[1.0]])), const(np.zeros((1, 1)))),
        grad_f_t=lambda x, t: np.zeros(2),
        oracle=lambda t: (np.array([0.5, 0.5]), np.array([-1.0])),
        description="time-invariant quadratic program",
    )


def synthetic_scalar() -> LinearProblem:
    a = MatrixSignal((1, 1), lambda t: np.array([[2.0 + math.sin(t)]]),
                     lambda t: np.array([[math.cos(t)]]), "a(t) = 2 + sin t")
    b = MatrixSignal((1, 1), lambda t: np.array([[math.cos(t)]]),
                     lambda t: np.array([[-math.sin(t)]]), "b(t) = cos t")
    return LinearProblem(a, b, lambda t: np.array([math.cos(t) / (2.0 + math.sin(t))]),
                         "scalar a(t) x = b(t)")


def pinv_oracle(sig: MatrixSignal, t: float) -> np.ndarray:
    return pinv(sig(t))


def inverse_oracle(sig: MatrixSignal, t: float) -> np.ndarray:
    return inv(sig(t))


def frozen(sig: MatrixSignal, t0: float = 0.0) -> MatrixSignal:
    """The signal held constant at its value at ``t0``."""
    value = sig(t0)
    zero = np.zeros_like(value)
    return MatrixSignal(sig.shape, lambda t: value.copy(), lambda t: zero.copy(),
                        f"{sig.description} frozen at t={t0}")


def frozen_linear(p: LinearProblem, t0: float = 0.0) -> LinearProblem:
    a, b = frozen(p.a, t0), frozen(p.b, t0)
    x = lu_solve(a(0.0), b(0.0)[:, 0])
    return LinearProblem(a, b, lambda t: x.copy(), f"{p.description} frozen at t={t0}")


def frozen_opt(p: OptProblem, t0: float = 0.0) -> OptProblem:
    """Time-invariant version of a quadratic problem: gradient pinned at t0."""
    g, hs = p.grad_f, p.hess_f
    frozen_oracle = None
    if p.oracle is not None:
        x0, l0 = p.oracle(t0)
        frozen_oracle = lambda t: (x0.copy(), l0.copy())  # noqa: E731
    return OptProblem(
        p.n, p.m,
        grad_f=lambda x, t: g(x, t0),
        hess_f=lambda x, t: hs(x, t0),
        a=frozen(p.a, t0), b=frozen(p.b, t0),
        grad_f_t=lambda x, t: np.zeros(p.n),
        oracle=frozen_oracle,
        description=f"{p.description} frozen at t={t0}",
    )


@dataclass(frozen=True)
class NamedProblem:
    name: str
    factory: Callable[[], object]
    solvers: tuple[str, ...]
    default_solver: str
    t_end: float
    entry_oracle: Optional[Callable[[float], np.ndarray]] = field(default=None)


PROBLEMS = {
    p.name: p
    for p in [
        NamedProblem("example1", example1, ("tvpinv",), "tvpinv", 30.0),
        NamedProblem("example2", example2, ("tvinv", "tvpinv"), "tvinv", 30.0, example2_inverse),
        NamedProblem("example_opt", example_opt, ("tvopt",), "tvopt", 10.0),
        NamedProblem("scalar", synthetic_scalar, ("tvlin",), "tvlin", 10.0),
        NamedProblem("static_qp", static_qp, ("tvopt",), "tvopt", 10.0),
    ]
}


def get_problem(name: str) -> NamedProblem:
    try:
        return PROBLEMS[name]
    except KeyError:
        raise UnknownProblem(f"unknown problem {name!r}; known: {', '.join(PROBLEMS)}") from None
