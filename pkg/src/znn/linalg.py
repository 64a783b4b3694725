"""Small dense real linear algebra and polynomial roots.

Matrices are plain 2-D ``float64`` numpy arrays; :func:`as_mat` is the
validating constructor. Everything here is sized for n <= 50.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .errors import RankDeficient, ShapeMismatch, SingularMatrix, ZeroPolynomial

PIVOT_RTOL = 1e-12
CLUSTER_RADIUS = 1e-6


def as_mat(x) -> np.ndarray:
    """Coerce to a finite 2-D float array (scalars -> 1x1, vectors -> column)."""
    a = np.array(x, dtype=float)
    if a.ndim == 0:
        a = a.reshape(1, 1)
    elif a.ndim == 1:
        a = a.reshape(-1, 1)
    elif a.ndim != 2:
        raise ShapeMismatch(f"expected a matrix, got ndim={a.ndim}")
    if a.size == 0:
        raise ShapeMismatch("empty matrix")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    return a


def fro_norm(m) -> float:
    m = np.asarray(m, dtype=float)
    with np.errstate(over="ignore"):
        return float(np.sqrt(np.sum(m * m)))


def lu_factor(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """LU with partial pivoting. Returns the packed factors and the row permutation.

    Raises SingularMatrix when a pivot falls below ``PIVOT_RTOL * ||a||_F``.
    """
    a = np.array(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ShapeMismatch(f"lu needs a square matrix, got {a.shape}")
    n = a.shape[0]
    tol = PIVOT_RTOL * fro_norm(a)
    perm = np.arange(n)
    for j in range(n):
        p = j + int(np.argmax(np.abs(a[j:, j])))
        if abs(a[p, j]) <= tol or a[p, j] == 0.0:
            raise SingularMatrix(f"pivot {abs(a[p, j]):.3e} at column {j} below {tol:.3e}")
        if p != j:
            a[[j, p]] = a[[p, j]]
            perm[[j, p]] = perm[[p, j]]
        a[j + 1:, j] /= a[j, j]
        a[j + 1:, j + 1:] -= np.outer(a[j + 1:, j], a[j, j + 1:])
    return a, perm


def lu_solve(a, rhs) -> np.ndarray:
    """Solve ``a @ X = rhs``. A 1-D ``rhs`` gives a 1-D result."""
    rhs = np.asarray(rhs, dtype=float)
    vector = rhs.ndim == 1
    b = rhs.reshape(-1, 1) if vector else rhs
    lu, perm = lu_factor(a)
    n = lu.shape[0]
    if b.shape[0] != n:
        raise ShapeMismatch(f"rhs has {b.shape[0]} rows, matrix is {n}x{n}")
    x = b[perm].copy()
    for i in range(1, n):
        x[i] -= lu[i, :i] @ x[:i]
    for i in range(n - 1, -1, -1):
        x[i] -= lu[i, i + 1:] @ x[i + 1:]
        x[i] /= lu[i, i]
    return x[:, 0] if vector else x


def inv(a) -> np.ndarray:
    return lu_solve(a, np.eye(np.shape(a)[0]))


def pinv(b) -> np.ndarray:
    """Right inverse ``B^T (B B^T)^-1`` of a full-row-rank ``m x n`` matrix, m <= n."""
    b = as_mat(b)
    m, n = b.shape
    if m > n:
        raise ShapeMismatch(f"pinv expects m <= n, got {b.shape}")
    try:
        return lu_solve(b @ b.T, b).T
    except SingularMatrix as exc:
        raise RankDeficient(f"B B^T is singular: {exc}") from None


@dataclass(frozen=True)
class RealPoly:
    """Real polynomial, coefficients in ascending degree.

    Coefficients may be floats or Fractions; trailing zeros are trimmed so
    ``coefficients[-1]`` is the leading coefficient (the zero polynomial is
    ``(0,)``).
    """

    coefficients: tuple

    def __init__(self, coefficients: Sequence):
        c = list(coefficients) or [0]
        while len(c) > 1 and c[-1] == 0:
            c.pop()
        object.__setattr__(self, "coefficients", tuple(c))

    @classmethod
    def from_descending(cls, coefficients: Sequence) -> RealPoly:
        return cls(list(coefficients)[::-1])

    @property
    def degree(self) -> int:
        return len(self.coefficients) - 1

    @property
    def is_zero(self) -> bool:
        return self.degree == 0 and self.coefficients[0] == 0

    def __call__(self, x):
        acc = 0
        for c in reversed(self.coefficients):
            acc = acc * x + c
        return acc

    def derivative(self) -> RealPoly:
        return RealPoly([k * c for k, c in enumerate(self.coefficients)][1:])

    def scale(self) -> float:
        return max(abs(float(c)) for c in self.coefficients)

    def __str__(self):
        terms = []
        for k in range(self.degree, -1, -1):
            c = self.coefficients[k]
            if c == 0:
                continue
            mag = abs(c)
            coef = "" if (mag == 1 and k > 0) else str(mag)
            if "/" in coef and k > 0:
                coef = f"({coef})"
            var = "" if k == 0 else ("θ" if k == 1 else f"θ^{k}")
            sign = "-" if c < 0 else "+"
            terms.append((sign, f"{coef}{var}"))
        if not terms:
            return "0"
        head_sign, head = terms[0]
        out = ("-" if head_sign == "-" else "") + head
        for sign, body in terms[1:]:
            out += f" {sign} {body}"
        return out


class Root(NamedTuple):
    value: complex
    multiplicity: int

    @property
    def modulus(self) -> float:
        return abs(self.value)


def _polish(coeffs: np.ndarray, z: complex, steps: int = 3) -> complex:
    # Newton on the descending-order coefficients; only accept improvements.
    dc = np.polyder(coeffs)
    best, best_res = z, abs(np.polyval(coeffs, z))
    for _ in range(steps):
        d = np.polyval(dc, z)
        if d == 0:
            break
        z = z - np.polyval(coeffs, z) / d
        res = abs(np.polyval(coeffs, z))
        if res < best_res:
            best, best_res = z, res
    return complex(best)


def _cluster(points, radius):
    clusters: list[list[complex]] = []
    for z in sorted(points, key=lambda z: (z.real, z.imag)):
        for cl in clusters:
            if abs(np.mean(cl) - z) < radius:
                cl.append(z)
                break
        else:
            clusters.append([z])
    return clusters


def _merge_confirmed(clusters, asc, radius=1e-3, tol=1e-10):
    # Higher multiplicities scatter eigenvalues by ~eps**(1/m); merge a wider
    # group only if p and its first s-1 Taylor coefficients vanish at its mean.
    desc = asc[::-1]
    scale = np.max(np.abs(asc))
    centers = [complex(np.mean(c)) for c in clusters]
    used = [False] * len(clusters)
    out = []
    for i in range(len(clusters)):
        if used[i]:
            continue
        idx = [j for j in range(i, len(clusters)) if not used[j] and abs(centers[j] - centers[i]) < radius]
        members = [z for j in idx for z in clusters[j]]
        if len(idx) > 1:
            zbar = complex(np.mean(members))
            bound = tol * scale * max(1.0, abs(zbar)) ** (len(desc) - 1)
            d, fact, ok = desc, 1.0, True
            for j in range(len(members)):
                if abs(np.polyval(d, zbar)) / fact > bound:
                    ok = False
                    break
                d = np.polyder(d)
                fact *= j + 1
            if not ok:
                idx = [i]
            else:
                members = [zbar] * len(members)
        if len(idx) == 1:
            members = clusters[i]
        for j in idx:
            used[j] = True
        out.append(members)
    return out


def poly_roots(p: RealPoly) -> list[Root]:
    """Roots via companion-matrix eigenvalues, Newton-polished and clustered.

    Roots closer than ``CLUSTER_RADIUS`` are merged into one entry whose
    ``multiplicity`` counts them.
    """
    if p.is_zero:
        raise ZeroPolynomial("the zero polynomial has no isolated roots")
    if p.degree < 1:
        raise ValueError("constant polynomial has no roots")
    asc = np.array([float(c) for c in p.coefficients])
    desc = asc[::-1] / asc[-1]
    n = p.degree
    companion = np.zeros((n, n))
    companion[0, :] = -desc[1:]
    companion[1:, :-1] = np.eye(n - 1)
    raw = [complex(z) for z in np.linalg.eigvals(companion)]
    clusters = _merge_confirmed(_cluster(raw, CLUSTER_RADIUS), asc)
    roots = []
    for cl in clusters:
        z = complex(np.mean(cl))
        if len(cl) == 1:
            z = _polish(desc, z)
        if abs(z.imag) < CLUSTER_RADIUS * max(1.0, abs(z)):
            z = complex(z.real, 0.0)
        roots.append(Root(z, len(cl)))
    return roots


def poly_from_roots(roots: Sequence[Root], leading=1.0) -> np.ndarray:
    """Ascending real coefficients of ``leading * prod (θ - r)`` counted with multiplicity."""
    acc = np.array([complex(leading)])
    for r in roots:
        for _ in range(r.multiplicity):
            acc = np.convolve(acc, [-r.value, 1.0])
    return acc.real

