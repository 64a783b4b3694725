"""Root-condition (0-stability) analysis of the ZNN update recurrences."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .fdforms import FdFormula, UpdateWeights, one_step_ahead_update
from .linalg import RealPoly, Root, poly_roots

BOUNDARY_TOL = 1e-8


def characteristic_polynomial(u: UpdateWeights) -> RealPoly:
    """Monic ``θ^m - sum_i a_i θ^(m-1-i)`` of the homogeneous recurrence, exact."""
    desc = [Fraction(1)] + [-Fraction(a) for a in u.history_coeffs]
    return RealPoly.from_descending(desc)


@dataclass(frozen=True)
class StabilityReport:
    char_poly: RealPoly
    roots: tuple[Root, ...]
    zero_stable: bool
    consistent: bool

    def render(self) -> str:
        lines = [f"P(θ) = {self.char_poly}", "roots:"]
        for r in self.roots:
            z = r.value
            val = f"{z.real:+.4f}" if z.imag == 0 else f"{z.real:+.4f} {z.imag:+.4f}i"
            lines.append(f"  {val}   |θ| = {r.modulus:.4f}   multiplicity {r.multiplicity}")
        lines.append(f"consistent (P(1) = 0): {'yes' if self.consistent else 'no'}")
        lines.append(f"0-stable: {'yes' if self.zero_stable else 'no'}")
        return "\n".join(lines)


def root_condition(roots) -> bool:
    for r in roots:
        if r.modulus > 1 + BOUNDARY_TOL:
            return False
        if r.modulus >= 1 - BOUNDARY_TOL and r.multiplicity > 1:
            return False
    return True


def zero_stability(p: RealPoly) -> StabilityReport:
    roots = tuple(sorted(poly_roots(p), key=lambda r: (r.modulus, r.value.imag)))
    at_one = p(1)
    if isinstance(at_one, (int, Fraction)):
        consistent = at_one == 0
    else:
        consistent = abs(at_one) <= BOUNDARY_TOL * p.scale()
    return StabilityReport(p, roots, root_condition(roots), consistent)


def formula_stability(f: FdFormula) -> StabilityReport:
    return zero_stability(characteristic_polynomial(one_step_ahead_update(f)))
