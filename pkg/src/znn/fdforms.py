"""Finite-difference stencils for first derivatives.

A stencil approximates ``x'(t_k) ≈ sum(w_i * x_{k+o_i}) / (d * tau)``.
Weights are kept as exact :class:`~fractions.Fraction` values and only turned
into floats inside :func:`apply`.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from types import MappingProxyType
from typing import Mapping, Sequence

import numpy as np

from .errors import Inconsistent, NotOneStepAhead, ShapeMismatch, UnknownFormula

MAX_ORDER = 8


@dataclass(frozen=True)
class FdFormula:
    name: str
    offsets: tuple[int, ...]
    weights: tuple[Fraction, ...]
    denom_tau_factor: Fraction
    declared_order: int
    description: str = ""

    def __post_init__(self):
        if len(self.offsets) != len(self.weights):
            raise ShapeMismatch(f"{self.name}: {len(self.offsets)} offsets, {len(self.weights)} weights")
        object.__setattr__(self, "offsets", tuple(int(o) for o in self.offsets))
        object.__setattr__(self, "weights", tuple(Fraction(w) for w in self.weights))
        object.__setattr__(self, "denom_tau_factor", Fraction(self.denom_tau_factor))

    @property
    def kind(self) -> str:
        return "one-step-ahead" if self.is_one_step_ahead else "backward"

    @property
    def is_one_step_ahead(self) -> bool:
        ahead = [w for o, w in zip(self.offsets, self.weights) if o == 1]
        return (len(ahead) == 1 and ahead[0] != 0
                and all(o <= 1 for o in self.offsets))

    @property
    def depth(self) -> int:
        """Number of instants at or before t_k the stencil touches."""
        return -min(self.offsets) + 1

    def moment(self, q: int) -> Fraction:
        return sum((w * Fraction(o) ** q for o, w in zip(self.offsets, self.weights)), Fraction(0))

    def __str__(self):
        parts = []
        for o, w in zip(self.offsets, self.weights):
            idx = "k" if o == 0 else f"k{o:+d}"
            parts.append(f"{w}*x[{idx}]")
        return f"({' + '.join(parts)}) / ({self.denom_tau_factor}*tau)"


@dataclass(frozen=True)
class UpdateWeights:
    """``x_{k+1} = tau_dot_coeff * tau * x'(t_k) + sum_i history_coeffs[i] * x_{k-i}``."""

    tau_dot_coeff: Fraction
    history_coeffs: tuple[Fraction, ...]


def _f(name, offsets, weights, d, order, description):
    return FdFormula(name, tuple(offsets), tuple(Fraction(w) for w in weights),
                     Fraction(d), order, description)


_REGISTRY = {
    f.name: f
    for f in [
        _f("euler_fwd", [1, 0], [1, -1], 1, 1, "forward Euler"),
        _f("ifd4_a", [1, 0, -1, -2], [2, -3, 2, -1], 2, 2, "4-instant forward (matrix-inverse models)"),
        _f("ifd4_alt", [1, 0, -1, -2], [6, -3, -2, -1], 10, 2, "alternative 4-instant forward"),
        _f("ifd5", [1, 0, -1, -2, -3], [8, 1, -6, -5, 2], 18, 3, "5-instant forward"),
        _f("ifd4_opt", [1, 0, -1, -2], [5, -3, -1, -1], 8, 2, "4-instant forward (optimization models)"),
        _f("euler_bwd", [0, -1], [1, -1], 1, 1, "backward Euler"),
        _f("bwd3", [0, -1, -2], [3, -4, 1], 2, 2, "3-instant backward"),
    ]
}

#: 4-instant backward stencil (11/6, -3, 3/2, -1/3)/tau; paired with ifd5, not a registry entry.
BWD4 = _f("bwd4", [0, -1, -2, -3], [11, -18, 9, -2], 6, 3, "4-instant backward")

#: Backward stencil of matching order used for coefficient derivatives.
BACKWARD_PAIR = MappingProxyType({
    "euler_fwd": "euler_bwd",
    "ifd4_a": "bwd3",
    "ifd4_alt": "bwd3",
    "ifd5": "bwd4",
    "ifd4_opt": "bwd3",
})


def registry() -> Mapping[str, FdFormula]:
    return MappingProxyType(_REGISTRY)


def get(name: str) -> FdFormula:
    if name == BWD4.name:
        return BWD4
    try:
        return _REGISTRY[name]
    except KeyError:
        raise UnknownFormula(f"unknown formula {name!r}; known: {', '.join(_REGISTRY)}") from None


def one_step_ahead_names() -> list[str]:
    return [n for n, f in _REGISTRY.items() if f.is_one_step_ahead]


def backward_for(f: FdFormula | str) -> FdFormula:
    name = f if isinstance(f, str) else f.name
    try:
        return get(BACKWARD_PAIR[name])
    except KeyError:
        raise UnknownFormula(f"no backward pairing for {name!r}") from None


def verify_order(f: FdFormula) -> int:
    """Truncation order by exact Taylor moments.

    The stencil is order p when it reproduces the derivative of every
    monomial up to degree p: moment 0 vanishes, moment 1 equals ``d``, and
    moments 2..p vanish.
    """
    if f.moment(0) != 0:
        raise Inconsistent(f"{f.name}: weights sum to {f.moment(0)}, not 0")
    if f.moment(1) != f.denom_tau_factor:
        raise Inconsistent(f"{f.name}: first moment {f.moment(1)} != d = {f.denom_tau_factor}")
    p = 1
    while p < MAX_ORDER and f.moment(p + 1) == 0:
        p += 1
    return p


def apply(f: FdFormula, samples: Sequence, tau: float) -> np.ndarray:
    """Entrywise stencil application; ``samples`` aligned with ``f.offsets``."""
    if tau <= 0:
        raise ValueError("tau must be positive")
    if len(samples) != len(f.offsets):
        raise ShapeMismatch(f"{f.name} needs {len(f.offsets)} samples, got {len(samples)}")
    arrs = [np.asarray(s, dtype=float) for s in samples]
    shape = arrs[0].shape
    if any(a.shape != shape for a in arrs):
        raise ShapeMismatch(f"{f.name}: samples have differing shapes")
    acc = np.zeros(shape)
    for w, a in zip(f.weights, arrs):
        acc = acc + float(w) * a
    return acc / (float(f.denom_tau_factor) * tau)


def one_step_ahead_update(f: FdFormula) -> UpdateWeights:
    """Solve the stencil for x_{k+1}. History runs x_k, x_{k-1}, ... with zeros for gaps."""
    if not f.is_one_step_ahead:
        raise NotOneStepAhead(f"{f.name} is not a one-step-ahead formula")
    by_offset = dict(zip(f.offsets, f.weights))
    lead = by_offset[1]
    depth = -min(f.offsets)
    history = tuple(-by_offset.get(-i, Fraction(0)) / lead for i in range(depth + 1))
    return UpdateWeights(f.denom_tau_factor / lead, history)


def stencil_from_update(u: UpdateWeights, lead=1) -> tuple[tuple[int, ...], tuple[Fraction, ...], Fraction]:
    """Inverse of :func:`one_step_ahead_update` for a chosen x_{k+1} weight."""
    lead = Fraction(lead)
    offsets = (1,) + tuple(-i for i in range(len(u.history_coeffs)))
    weights = (lead,) + tuple(-a * lead for a in u.history_coeffs)
    return offsets, weights, u.tau_dot_coeff * lead
