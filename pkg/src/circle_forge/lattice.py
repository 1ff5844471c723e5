"""Exact geometry-of-numbers primitives for integer sublattices of Z^n.

The lattice determinant is generally irrational, so only its square is ever
stored.  Rows of ``basis`` are the basis vectors.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import _caps

Matrix = tuple[tuple[int, ...], ...]


def bareiss_det(m: Sequence[Sequence[int]]) -> int:
    """Determinant of a square integer matrix by fraction-free elimination."""
    a = [list(map(int, row)) for row in m]
    k = len(a)
    if k == 0:
        return 1
    sign, prev = 1, 1
    for i in range(k - 1):
        if a[i][i] == 0:
            for j in range(i + 1, k):
                if a[j][i] != 0:
                    a[i], a[j] = a[j], a[i]
                    sign = -sign
                    break
            else:
                return 0
        for j in range(i + 1, k):
            for c in range(i + 1, k):
                a[j][c] = (a[j][c] * a[i][i] - a[j][i] * a[i][c]) // prev
        prev = a[i][i]
    return sign * a[k - 1][k - 1]


def gram(basis: Sequence[Sequence[int]]) -> list[list[int]]:
    return [[sum(x * y for x, y in zip(u, v)) for v in basis] for u in basis]


class LatticeError(ValueError):
    pass


@dataclass(frozen=True)
class IntegerLattice:
    basis: Matrix

    def __post_init__(self):
        rows = tuple(tuple(int(v) for v in row) for row in self.basis)
        object.__setattr__(self, "basis", rows)
        if not rows:
            raise LatticeError("a lattice needs at least one basis vector")
        n = len(rows[0])
        if any(len(row) != n for row in rows):
            raise LatticeError("basis rows have different lengths")
        if len(rows) > n:
            raise LatticeError(f"rank {len(rows)} exceeds ambient dimension {n}")
        if bareiss_det(gram(rows)) <= 0:
            raise LatticeError("basis rows are linearly dependent")

    @property
    def ambient_dim(self) -> int:
        return len(self.basis[0])

    @property
    def rank(self) -> int:
        return len(self.basis)

    def to_json(self) -> str:
        return json.dumps({"n": self.ambient_dim, "basis": [[str(v) for v in row] for row in self.basis]})

    @classmethod
    def from_json(cls, text: str) -> "IntegerLattice":
        obj = json.loads(text)
        lat = cls(tuple(tuple(int(v) for v in row) for row in obj["basis"]))
        if "n" in obj and int(obj["n"]) != lat.ambient_dim:
            raise LatticeError("declared n does not match basis width")
        return lat


@dataclass(frozen=True)
class LatticeInvariants:
    det_squared: int
    minor_gcd: int


def maximal_minors(L: IntegerLattice):
    """Yield ``(column subset, det)`` for all r x r minors."""
    r = L.rank
    for cols in itertools.combinations(range(L.ambient_dim), r):
        yield cols, bareiss_det([[row[c] for c in cols] for row in L.basis])


def det_squared_minors(L: IntegerLattice) -> int:
    return sum(m * m for _, m in maximal_minors(L))


def det_squared_gram(L: IntegerLattice) -> int:
    return bareiss_det(gram(L.basis))


def det_squared(L: IntegerLattice) -> int:
    """Squared determinant; the minor sum and the Gram determinant must agree."""
    via_minors = det_squared_minors(L)
    via_gram = det_squared_gram(L)
    if via_minors != via_gram:
        raise ArithmeticError(f"Cauchy-Binet mismatch: {via_minors} != {via_gram}")
    return via_minors


def minor_gcd(L: IntegerLattice) -> int:
    g = 0
    for _, m in maximal_minors(L):
        g = math.gcd(g, m)
    return g


def invariants(L: IntegerLattice) -> LatticeInvariants:
    return LatticeInvariants(det_squared(L), minor_gcd(L))


def _egcd(a: int, b: int) -> tuple[int, int, int]:
    x0, x1, y0, y1 = 1, 0, 0, 1
    while b:
        q, a, b = a // b, b, a % b
        x0, x1 = x1, x0 - q * x1
        y0, y1 = y1, y0 - q * y1
    return a, x0, y0


def hermite_rows(rows: Sequence[Sequence[int]]) -> list[list[int]]:
    """Row Hermite normal form (positive pivots, reduced above) of a full-rank matrix."""
    a = [list(r) for r in rows]
    m = len(a)
    if m == 0:
        return a
    n = len(a[0])
    pr = 0
    for col in range(n):
        if pr == m:
            break
        for i in range(pr + 1, m):
            if a[i][col] == 0:
                continue
            g, s, t = _egcd(a[pr][col], a[i][col])
            u, v = a[pr][col] // g, a[i][col] // g
            top = [s * x + t * y for x, y in zip(a[pr], a[i])]
            bot = [-v * x + u * y for x, y in zip(a[pr], a[i])]
            a[pr], a[i] = top, bot
        if a[pr][col] == 0:
            continue
        if a[pr][col] < 0:
            a[pr] = [-x for x in a[pr]]
        p = a[pr][col]
        for i in range(pr):
            q = a[i][col] // p
            if q:
                a[i] = [x - q * y for x, y in zip(a[i], a[pr])]
        pr += 1
    return a


def integer_kernel(basis: Sequence[Sequence[int]]) -> list[list[int]]:
    """Basis of ``{x in Z^n : <x, b_i> = 0}`` via unimodular column reduction.

    Column operations ``M -> M U`` with ``U`` unimodular bring the basis matrix
    to ``[H | 0]``; the trailing columns of ``U`` then span the full integer
    kernel, not just a finite-index sublattice of it.
    """
    m = [list(row) for row in basis]
    r = len(m)
    n = len(m[0])
    u = [[int(i == j) for j in range(n)] for i in range(n)]

    def colop(c: int, j: int, s: int, t: int, p: int, q: int) -> None:
        # col_c <- s col_c + t col_j ; col_j <- p col_c + q col_j
        for mat in (m, u):
            for row in mat:
                x, y = row[c], row[j]
                row[c], row[j] = s * x + t * y, p * x + q * y

    piv = 0
    for i in range(r):
        if piv == n:
            break
        for j in range(piv + 1, n):
            b = m[i][j]
            if b == 0:
                continue
            a = m[i][piv]
            g, s, t = _egcd(a, b)
            colop(piv, j, s, t, -b // g, a // g)
        if m[i][piv] != 0:
            piv += 1
    kernel = [[u[row][col] for row in range(n)] for col in range(piv, n)]
    return hermite_rows(kernel) if kernel else kernel


def orthogonal_lattice(L: IntegerLattice) -> IntegerLattice | None:
    """The orthogonal lattice, or ``None`` when ``rank == n`` (only the zero vector)."""
    if L.rank == L.ambient_dim:
        return None
    perp = IntegerLattice(tuple(tuple(row) for row in integer_kernel(L.basis)))
    if perp.rank != L.ambient_dim - L.rank:
        raise ArithmeticError("kernel has the wrong rank")
    g = minor_gcd(L)
    if det_squared(perp) * g * g != det_squared(L):
        raise ArithmeticError("d(perp)^2 * G^2 != d^2 for the computed kernel")
    return perp


def _solve_fraction(m: list[list[Fraction]], rhs: list[list[Fraction]]) -> list[list[Fraction]]:
    k = len(m)
    aug = [row[:] + rr[:] for row, rr in zip(m, rhs)]
    for col in range(k):
        pivot = next(i for i in range(col, k) if aug[i][col] != 0)
        aug[col], aug[pivot] = aug[pivot], aug[col]
        pv = aug[col][col]
        aug[col] = [v / pv for v in aug[col]]
        for i in range(k):
            if i != col and aug[i][col] != 0:
                f = aug[i][col]
                aug[i] = [x - f * y for x, y in zip(aug[i], aug[col])]
    return [row[k:] for row in aug]


def coefficient_bounds(L: IntegerLattice, A: int) -> list[int]:
    """Bounds ``|c_j| <= bound_j`` for every ``v = c B`` in the box ``|v| <= A``.

    With ``P = B^T (B B^T)^{-1}`` one has ``c = v P``, so
    ``|c_j| <= A * sum_i |P_ij|``; rounded outward.
    """
    G = [[Fraction(v) for v in row] for row in gram(L.basis)]
    # (B B^T)^{-1} B, an r x n matrix whose transpose is P
    pinv_t = _solve_fraction(G, [[Fraction(v) for v in row] for row in L.basis])
    return [math.floor(A * sum(abs(v) for v in row)) for row in pinv_t]


def count_points_in_box(L: IntegerLattice, A: int, cap: int | None = None) -> int:
    """Exact number of lattice points with sup-norm at most ``A`` (zero included)."""
    if A < 0:
        return 0
    bounds = coefficient_bounds(L, A)
    estimate = math.prod(2 * b + 1 for b in bounds)
    _caps.check("count_points_in_box", estimate, cap)
    biggest = max(bounds) * max(abs(v) for row in L.basis for v in row) * L.rank if bounds else 0
    use_int64 = biggest < 2**62
    basis_arr = np.array(L.basis, dtype=np.int64 if use_int64 else object)
    rest = [np.arange(-b, b + 1, dtype=np.int64) for b in bounds[1:]]
    if rest:
        grid = np.stack([g.ravel() for g in np.meshgrid(*rest, indexing="ij")], axis=1)
    else:
        grid = np.zeros((1, 0), dtype=np.int64)
    if not use_int64:
        grid = grid.astype(object)
    tail = grid @ basis_arr[1:] if rest else np.zeros((1, L.ambient_dim), dtype=basis_arr.dtype)
    total = 0
    for c0 in range(-bounds[0], bounds[0] + 1):
        v = tail + c0 * basis_arr[0]
        total += int(np.count_nonzero(np.max(np.abs(v), axis=1) <= A))
    return total


def box_bound_probe(L: IntegerLattice, A_values: Sequence[int], cap: int | None = None) -> list[dict]:
    """Compare box counts with ``A^r / d(L)``, split by the regime ``A >= d(L)``.

    The implied constant is reported, never asserted.
    """
    d2 = det_squared(L)
    d = math.sqrt(d2)
    rows = []
    for A in A_values:
        count = count_points_in_box(L, A, cap)
        scale = A**L.rank / d
        rows.append({
            "A": A,
            "count": count,
            "scale": scale,
            "ratio": count / scale,
            "regime": "A>=d" if A * A >= d2 else "A<d",
        })
    return rows
