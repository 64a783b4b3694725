"""Discrete-time ZNN solvers.

Every solver follows the same recipe. The continuous model gives a slope
``x'(t_k)`` computed from data at instants ``<= t_k`` only. A one-step-ahead
stencil, solved for the newest sample, then turns that slope into

    x_{k+1} = c * tau * x'(t_k) + sum_i a_i * x_{k-i}

(see :class:`~znn.fdforms.UpdateWeights`). Coefficient derivatives come
either from the problem's analytic derivative or from the backward stencil
paired with the chosen formula.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import fdforms
from .errors import ConfigError, Divergence, HistoryUnderflow, RealTimeViolation, ShapeMismatch
from .linalg import fro_norm, inv, lu_solve, pinv
from .problems import LinearProblem, MatrixSignal, OptProblem

SOLVERS = ("tvlin", "tvinv", "tvpinv", "tvopt")
DERIVATIVE_MODES = ("analytic", "backward")
DEFAULT_H = 0.1
DEFAULT_LAMBDA = 10.0
RANDOM_INIT_HALF_WIDTH = 0.5


@dataclass(frozen=True)
class DecaySpec:
    """Decay rate ``lam`` (1/s), sampling gap ``tau`` (s) and step gain ``h = tau * lam``."""

    lam: float
    tau: float
    h: float

    def __post_init__(self):
        if not all(math.isfinite(v) and v > 0 for v in (self.lam, self.tau, self.h)):
            raise ConfigError(f"lambda, tau and h must be positive and finite (got {self.lam}, {self.tau}, {self.h})")

    @classmethod
    def from_h(cls, h: float, tau: float) -> DecaySpec:
        return cls(h / tau, tau, h)

    @classmethod
    def from_lambda(cls, lam: float, tau: float) -> DecaySpec:
        return cls(lam, tau, tau * lam)


class ZnnRun:
    """Stepper state for one solver run.

    ``iterates`` holds the newest ``depth`` iterates (newest last) and ``k``
    is the instant index of the newest one. Coefficient samples are memoized
    per instant and dropped once they fall out of the widest stencil.

    During a step every sample must go through :meth:`sample`, which refuses
    instants later than ``k``: the next iterate has to be ready before its
    own data arrives.
    """

    def __init__(self, solver: str, problem, formula="ifd5", decay: DecaySpec | None = None,
                 derivative_mode: str = "backward", t_end: float | None = None,
                 init: str = "exact", seed: int = 1, t0: float = 0.0, hinv: str = "lu"):
        if solver not in SOLVERS:
            raise ConfigError(f"unknown solver {solver!r}; choose from {SOLVERS}")
        if derivative_mode not in DERIVATIVE_MODES:
            raise ConfigError(f"derivative mode must be one of {DERIVATIVE_MODES}")
        if init not in ("exact", "random"):
            raise ConfigError("init must be 'exact' or 'random'")
        if hinv not in ("lu", "znn"):
            raise ConfigError("hinv must be 'lu' or 'znn'")
        _check_problem(solver, problem)
        self.solver = solver
        self.problem = problem
        self.formula = fdforms.get(formula) if isinstance(formula, str) else formula
        self.update = fdforms.one_step_ahead_update(self.formula)
        self.backward = fdforms.backward_for(self.formula)
        self.decay = decay or DecaySpec.from_h(DEFAULT_H, 0.1)
        self.derivative_mode = derivative_mode
        self.t_end = t_end
        self.init_mode = init
        self.seed = seed
        self.t0 = t0
        self.hinv = hinv
        self.depth = max(len(self.update.history_coeffs), self.backward.depth)
        self.iterates: deque = deque(maxlen=self.depth)
        self.k: int | None = None
        self._memo: dict = {}
        self._in_step = False
        self._hinv_tracker = None
        self._weights = (float(self.update.tau_dot_coeff),
                         [float(a) for a in self.update.history_coeffs])

    @property
    def tau(self) -> float:
        return self.decay.tau

    def time(self, j: int) -> float:
        return self.t0 + j * self.decay.tau

    @property
    def n_steps(self) -> int:
        if self.t_end is None:
            raise ConfigError("run has no horizon")
        return int(round((self.t_end - self.t0) / self.tau))

    # -- sampling ---------------------------------------------------------

    def sample(self, key: str, fn: Callable[[float], np.ndarray], j: int) -> np.ndarray:
        """Sample ``fn`` at instant ``j`` (memoized under ``key``)."""
        if self._in_step and j > self.k:
            raise RealTimeViolation(f"sample at instant {j} requested while computing step {self.k} -> {self.k + 1}")
        cache = self._memo.setdefault(key, {})
        try:
            return cache[j]
        except KeyError:
            value = cache[j] = np.asarray(fn(self.time(j)), dtype=float)
            return value

    def derivative(self, key: str, sig: MatrixSignal, j: int) -> np.ndarray:
        """Derivative of a coefficient signal at instant ``j`` per ``derivative_mode``."""
        if self.derivative_mode == "analytic":
            if sig.derivative is None:
                raise ConfigError(f"signal {key!r} has no analytic derivative")
            return self.sample(key + "'", sig.derivative, j)
        f = self.backward
        return fdforms.apply(f, [self.sample(key, sig.sample, j + o) for o in f.offsets], self.tau)

    def _prune(self):
        horizon = self.k - self.depth
        for cache in self._memo.values():
            for j in [j for j in cache if j < horizon]:
                del cache[j]

    # -- lifecycle ----------------------------------------------------------

    def initialize(self, values=None) -> list:
        """Seed instants ``0..depth-1``; returns the seeded iterates.

        ``values`` (oldest first, ``depth`` of them) overrides the init mode.
        """
        self.iterates.clear()
        self._memo.clear()
        rng = np.random.default_rng(self.seed)
        if values is not None and len(values) != self.depth:
            raise HistoryUnderflow(f"need {self.depth} seed values, got {len(values)}")
        for j in range(self.depth):
            if values is not None:
                value = np.array(values[j], dtype=float)
                if value.shape != iterate_shape(self):
                    raise ShapeMismatch(f"seed value {j} has shape {value.shape}, want {iterate_shape(self)}")
            elif self.init_mode == "random":
                value = rng.uniform(-RANDOM_INIT_HALF_WIDTH, RANDOM_INIT_HALF_WIDTH, size=iterate_shape(self))
            else:
                value = exact_solution(self, j)
            self.iterates.append(value)
        self.k = self.depth - 1
        if self.solver == "tvopt" and self.hinv == "znn":
            self._hinv_tracker = InverseTracker(self)
        return list(self.iterates)

    def combine(self, slope: np.ndarray) -> np.ndarray:
        c, history = self._weights
        nxt = c * self.tau * slope
        for i, a in enumerate(history):
            if a:
                nxt = nxt + a * self.iterates[-1 - i]
        return nxt

    def advance(self, nxt: np.ndarray) -> np.ndarray:
        if not np.all(np.isfinite(nxt)):
            raise Divergence(f"non-finite iterate at instant {self.k + 1}")
        self.iterates.append(nxt)
        self.k += 1
        self._prune()
        return nxt

    def _check_ready(self):
        if self.k is None or len(self.iterates) < self.depth:
            raise HistoryUnderflow(f"need {self.depth} seeded iterates before stepping")

    def step(self) -> np.ndarray:
        return STEPPERS[self.solver](self)


def _check_problem(solver, problem):
    if solver in ("tvinv", "tvpinv"):
        if not isinstance(problem, MatrixSignal):
            raise ConfigError(f"{solver} needs a matrix signal")
        m, n = problem.shape
        if solver == "tvinv" and m != n:
            raise ShapeMismatch(f"tvinv needs a square matrix, got {problem.shape}")
        if m > n:
            raise ShapeMismatch(f"tvpinv needs rows <= cols, got {problem.shape}")
    elif solver == "tvlin" and not isinstance(problem, LinearProblem):
        raise ConfigError("tvlin needs a LinearProblem")
    elif solver == "tvopt" and not isinstance(problem, OptProblem):
        raise ConfigError("tvopt needs an OptProblem")


def exact_solution(run: ZnnRun, j: int) -> np.ndarray:
    t = run.time(j)
    p = run.problem
    if run.solver == "tvpinv":
        return pinv(p(t))
    if run.solver == "tvinv":
        return inv(p(t))
    if run.solver == "tvopt" and p.oracle is None:
        raise ConfigError("exact initialization needs a problem with an oracle")
    return p.solution(t)


def iterate_shape(run: ZnnRun) -> tuple:
    p = run.problem
    if run.solver in ("tvpinv", "tvinv"):
        return (p.shape[1], p.shape[0])
    if run.solver == "tvlin":
        return (p.n,)
    return (p.n + p.m,)


class _Stepping:
    def __init__(self, run):
        self.run = run

    def __enter__(self):
        self.run._check_ready()
        self.run._in_step = True

    def __exit__(self, *exc):
        self.run._in_step = False


def _matrix_slope(run: ZnnRun) -> np.ndarray:
    k, lam = run.k, run.decay.lam
    b = run.sample("B", run.problem.sample, k)
    db = run.derivative("B", run.problem, k)
    y = run.iterates[-1]
    yb = y @ b
    return -lam * (yb @ y - y) - y @ db @ y


def tvpinv_step(run: ZnnRun) -> np.ndarray:
    """Advance the generalized-inverse tracker ``B(t) Y(t) = I`` by one instant."""
    with _Stepping(run), np.errstate(over="ignore", invalid="ignore"):
        nxt = run.combine(_matrix_slope(run))
    return run.advance(nxt)


def tvinv_step(run: ZnnRun) -> np.ndarray:
    m, n = run.problem.shape
    if m != n:
        raise ShapeMismatch(f"tvinv needs a square matrix, got {run.problem.shape}")
    return tvpinv_step(run)


def tvlin_step(run: ZnnRun) -> np.ndarray:
    """``A x' = -A' x + b' - lam (A x - b)``, solved for ``x'`` at t_k by LU."""
    p: LinearProblem = run.problem
    with _Stepping(run), np.errstate(over="ignore", invalid="ignore"):
        k = run.k
        a = run.sample("A", p.a.sample, k)
        b = run.sample("b", p.b.sample, k)[:, 0]
        da = run.derivative("A", p.a, k)
        db = run.derivative("b", p.b, k)[:, 0]
        x = run.iterates[-1]
        rhs = -da @ x + db - run.decay.lam * (a @ x - b)
        nxt = run.combine(lu_solve(a, rhs))
    return run.advance(nxt)


def _h_at(run: ZnnRun, y, j):
    p: OptProblem = run.problem
    if run._in_step and j > run.k:
        raise RealTimeViolation(f"h requested at instant {j} during step from {run.k}")
    return p.h(y, run.time(j))


def tvopt_step(run: ZnnRun) -> np.ndarray:
    """``y' = -H^-1 (lam h + dh/dt)`` on the stacked KKT residual."""
    p: OptProblem = run.problem
    with _Stepping(run), np.errstate(over="ignore", invalid="ignore"):
        k = run.k
        t = run.time(k)
        y = run.iterates[-1]
        h = _h_at(run, y, k)
        if run.derivative_mode == "analytic":
            dh = p.h_t(y, t)
        else:
            f = run.backward
            dh = fdforms.apply(f, [_h_at(run, y, k + o) for o in f.offsets], run.tau)
        jac = p.jacobian(y, t)
        rhs = run.decay.lam * h + dh
        if run._hinv_tracker is not None:
            direction = run._hinv_tracker.inverse(jac) @ rhs
        else:
            direction = lu_solve(jac, rhs)
        nxt = run.combine(-direction)
    return run.advance(nxt)


class InverseTracker:
    """Real-time inverse of the KKT Jacobian by the Euler ZNN inversion model.

    Holds ``X_k ≈ H_k^-1`` and, each time a new ``H_k`` is fed in, predicts
    ``X_{k+1}`` with gain ``h`` (``h = 1`` makes the update a Newton-Schulz
    step, which is the default).
    """

    def __init__(self, run: ZnnRun, gain: float = 1.0):
        p = run.problem
        self.gain = gain
        y0 = run.iterates[-1]
        self.prev_h = p.jacobian(y0, run.time(run.k))
        self.x = inv(self.prev_h)

    def inverse(self, h_now: np.ndarray) -> np.ndarray:
        x = self.x
        current = x
        # Euler ZNN inversion model; backward difference for the Jacobian derivative.
        self.x = -self.gain * (x @ h_now @ x - x) - x @ (h_now - self.prev_h) @ x + x
        self.prev_h = h_now
        return current


STEPPERS = {
    "tvpinv": tvpinv_step,
    "tvinv": tvinv_step,
    "tvlin": tvlin_step,
    "tvopt": tvopt_step,
}


def residual(run: ZnnRun, iterate, k: int | None = None) -> float:
    """Residual of ``iterate`` at instant ``k`` (defaults to the newest instant)."""
    k = run.k if k is None else k
    t = run.time(k)
    p = run.problem
    if run.solver in ("tvpinv", "tvinv"):
        b = p(t)
        return fro_norm(b @ iterate - np.eye(b.shape[0]))
    if run.solver == "tvlin":
        return float(np.linalg.norm(p.a(t) @ iterate - p.b(t)[:, 0]))
    if p.oracle is not None:
        return float(np.linalg.norm(iterate - p.solution(t)))
    return float(np.linalg.norm(p.h(iterate, t)))


def pinv_derivative(y: np.ndarray, dy: np.ndarray) -> np.ndarray:
    """``d(Y^+)/dt = -Y^+ Y' Y^+``; exact for invertible paths."""
    yp = pinv(y) if y.shape[0] <= y.shape[1] else pinv(y.T).T
    return -yp @ dy @ yp


# -- printed closed forms ---------------------------------------------------
# Written out term by term, independent of the stencil machinery; used to
# cross-check the generic stepper.

def closed_form_euler(ys, bs, h):
    """ys = [Y_k], bs = [B_k, B_{k-1}]."""
    y, = ys
    b0, b1 = bs
    return -h * (y @ b0 @ y - y) - y @ (b0 - b1) @ y + y


def closed_form_ifd4(ys, bs, h):
    """ys = [Y_k, Y_{k-1}, Y_{k-2}], bs = [B_k, B_{k-1}, B_{k-2}]."""
    y0, y1, y2 = ys
    b0, b1, b2 = bs
    return (-h * (y0 @ b0 @ y0 - y0)
            - y0 @ (1.5 * b0 - 2.0 * b1 + 0.5 * b2) @ y0
            + 1.5 * y0 - y1 + 0.5 * y2)


def closed_form_ifd5(ys, bs, h):
    """ys = [Y_k .. Y_{k-3}], bs = [B_k .. B_{k-3}]."""
    y0, y1, y2, y3 = ys
    b0, b1, b2, b3 = bs
    return (-9.0 / 4.0 * h * (y0 @ b0 @ y0 - y0)
            - 9.0 / 4.0 * y0 @ (11.0 / 6.0 * b0 - 3.0 * b1 + 1.5 * b2 - 1.0 / 3.0 * b3) @ y0
            - 1.0 / 8.0 * y0 + 3.0 / 4.0 * y1 + 5.0 / 8.0 * y2 - 1.0 / 4.0 * y3)


CLOSED_FORMS = {
    "euler_fwd": (closed_form_euler, 1, 2),
    "ifd4_a": (closed_form_ifd4, 3, 3),
    "ifd5": (closed_form_ifd5, 4, 4),
}
