"""Monomial bases, the Veronese embedding and parameter bookkeeping.

Exponent tuples are listed in strictly decreasing lexicographic order with
``x_1`` most significant, so for ``n=2, d=3`` the basis is
``x1^3, x1^2 x2, x1 x2^2, x2^3``.  All arithmetic here is exact.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Sequence

MAX_BASIS_SIZE = 10**7


class BasisSizeError(OverflowError):
    pass


class ParameterError(ValueError):
    pass


def _exponent_tuples(n: int, d: int) -> list[tuple[int, ...]]:
    if n == 1:
        return [(d,)]
    out = []
    for e in range(d, -1, -1):
        for rest in _exponent_tuples(n - 1, d - e):
            out.append((e,) + rest)
    return out


@dataclass(frozen=True)
class MonomialBasis:
    n: int
    d: int
    exponents: tuple[tuple[int, ...], ...] = field(repr=False)

    @property
    def N(self) -> int:
        return len(self.exponents)

    @property
    def pure_positions(self) -> tuple[int, ...]:
        """Basis positions of ``x_1^d, ..., x_n^d`` in variable order."""
        return _pure_positions(self.n, self.d)

    @property
    def mixed_positions(self) -> tuple[int, ...]:
        pure = set(self.pure_positions)
        return tuple(i for i in range(self.N) if i not in pure)

    def index(self, exps: Sequence[int]) -> int:
        return _index_map(self.n, self.d)[tuple(exps)]


@lru_cache(maxsize=None)
def build_basis(n: int, d: int) -> MonomialBasis:
    if n < 1 or d < 1:
        raise ParameterError(f"need n >= 1 and d >= 1, got n={n}, d={d}")
    size = math.comb(n + d - 1, d)
    if size > MAX_BASIS_SIZE:
        raise BasisSizeError(f"basis for n={n}, d={d} has {size} monomials (limit {MAX_BASIS_SIZE})")
    return MonomialBasis(n, d, tuple(_exponent_tuples(n, d)))


@lru_cache(maxsize=None)
def _index_map(n: int, d: int) -> dict[tuple[int, ...], int]:
    return {e: i for i, e in enumerate(build_basis(n, d).exponents)}


@lru_cache(maxsize=None)
def _pure_positions(n: int, d: int) -> tuple[int, ...]:
    idx = _index_map(n, d)
    return tuple(idx[tuple(d if j == i else 0 for j in range(n))] for i in range(n))


def veronese(basis: MonomialBasis, x: Sequence[int]) -> list[int]:
    if len(x) != basis.n:
        raise ParameterError(f"expected {basis.n} coordinates, got {len(x)}")
    powers = [[xi**e for e in range(basis.d + 1)] for xi in x]
    out = []
    for exps in basis.exponents:
        v = 1
        for j, e in enumerate(exps):
            if e:
                v *= powers[j][e]
        out.append(v)
    return out


@dataclass(frozen=True)
class CoeffVector:
    basis: MonomialBasis
    entries: tuple[int, ...]

    def __post_init__(self):
        if len(self.entries) != self.basis.N:
            raise ParameterError(f"need {self.basis.N} coefficients, got {len(self.entries)}")
        object.__setattr__(self, "entries", tuple(int(v) for v in self.entries))

    @property
    def n(self) -> int:
        return self.basis.n

    @property
    def d(self) -> int:
        return self.basis.d

    def is_zero(self) -> bool:
        return not any(self.entries)

    def terms(self) -> list[tuple[tuple[int, ...], int]]:
        """Non-zero ``(exponents, coefficient)`` pairs."""
        return [(e, c) for e, c in zip(self.basis.exponents, self.entries) if c]

    def __neg__(self) -> "CoeffVector":
        return CoeffVector(self.basis, tuple(-v for v in self.entries))

    def to_json(self) -> str:
        return json.dumps([str(v) for v in self.entries])


def coeffs(n: int, d: int, entries: Iterable[int]) -> CoeffVector:
    return CoeffVector(build_basis(n, d), tuple(entries))


def coeffs_from_json(n: int, d: int, text: str) -> CoeffVector:
    return coeffs(n, d, (int(v) for v in json.loads(text)))


def evaluate_form(a: CoeffVector, x: Sequence[int]) -> int:
    return sum(c * v for c, v in zip(a.entries, veronese(a.basis, x)) if c)


def gradient(a: CoeffVector, x: Sequence[int]) -> list[int]:
    """Exact partial derivatives of ``f_a`` at the integer point ``x``."""
    grad = [0] * a.n
    for exps, c in a.terms():
        for j, e in enumerate(exps):
            if not e:
                continue
            v = c * e
            for k, ek in enumerate(exps):
                p = ek - 1 if k == j else ek
                if p:
                    v *= x[k] ** p
            grad[j] += v
    return grad


@dataclass(frozen=True)
class SplitCoeff:
    """Coefficients split into pure powers ``b`` and mixed monomials ``c``."""

    b: tuple[int, ...]
    c: tuple[int, ...]


def merge_split(s: SplitCoeff, d: int) -> CoeffVector:
    n = len(s.b)
    basis = build_basis(n, d)
    if len(s.c) != basis.N - n:
        raise ParameterError(f"mixed part needs {basis.N - n} entries, got {len(s.c)}")
    entries = [0] * basis.N
    for pos, v in zip(basis.pure_positions, s.b):
        entries[pos] = int(v)
    for pos, v in zip(basis.mixed_positions, s.c):
        entries[pos] = int(v)
    return CoeffVector(basis, tuple(entries))


def split_merge(a: CoeffVector) -> SplitCoeff:
    basis = a.basis
    return SplitCoeff(
        tuple(a.entries[i] for i in basis.pure_positions),
        tuple(a.entries[i] for i in basis.mixed_positions),
    )


def mixed_monomials(basis: MonomialBasis, x: Sequence[int]) -> list[int]:
    v = veronese(basis, x)
    return [v[i] for i in basis.mixed_positions]


# -- parameters -------------------------------------------------------------


def primes_upto(m: int) -> list[int]:
    if m < 2:
        return []
    sieve = bytearray([1]) * (m + 1)
    sieve[0] = sieve[1] = 0
    for p in range(2, math.isqrt(m) + 1):
        if sieve[p]:
            sieve[p * p :: p] = bytearray(len(sieve[p * p :: p]))
    return [i for i, flag in enumerate(sieve) if flag]


def prime_power_factors(w: float) -> dict[int, int]:
    """``{p: r}`` with ``p^r`` the largest power of ``p`` not exceeding ``w``."""
    m = math.floor(w) if w >= 1 else 0
    out = {}
    for p in primes_upto(m):
        r, pk = 0, 1
        while pk * p <= m:
            pk *= p
            r += 1
        out[p] = r
    return out


def modulus_W(w: float) -> int:
    W = 1
    for p, r in prime_power_factors(w).items():
        W *= p**r
    return W


@dataclass(frozen=True)
class ExperimentParams:
    n: int
    d: int
    k: int
    A: Fraction
    X: Fraction

    def __post_init__(self):
        object.__setattr__(self, "A", Fraction(self.A))
        object.__setattr__(self, "X", Fraction(self.X))
        if self.n < 1 or self.d < 1 or self.k < 1:
            raise ParameterError("n, d, k must be positive")
        if self.A <= 0 or self.X <= 0:
            raise ParameterError("A and X must be positive")

    @property
    def N(self) -> int:
        return math.comb(self.n + self.d - 1, self.d)

    @property
    def w(self) -> float:
        return _log(self.X)

    @property
    def W(self) -> int:
        return modulus_W(self.w)

    @property
    def zeta(self) -> float:
        return zeta_of(self)

    @property
    def X_int(self) -> int:
        """Integer side length of the box ``[1, X]^n``."""
        return math.floor(self.X)

    def to_dict(self) -> dict:
        out = {"n": self.n, "d": self.d, "k": self.k, "A": str(self.A), "X": str(self.X),
               "N": self.N, "w": self.w, "W": self.W}
        out["zeta"] = self.zeta if self.w > 1 else None
        return out


def _log(v: Fraction) -> float:
    # exact for huge rationals where float(v) would overflow
    return math.log(v.numerator) - math.log(v.denominator)


def zeta_of(params: ExperimentParams) -> float:
    w = params.w
    if w <= 1:
        raise ParameterError(f"zeta needs w = log X > 1, got w={w:.6g}")
    return w ** (-4.0 - 1.0 / (8 * params.d))


# -- hypothesis gate --------------------------------------------------------


@dataclass(frozen=True)
class GateReport:
    n: int
    d: int
    k: int
    s: int
    r: int
    s_at_least_3d: bool
    d_at_least_4: bool
    A_window: bool | None
    N_vs_k_quadratic: bool
    N_vs_n_squared: bool
    variance_gate: bool | None
    threshold_gate: bool | None
    reduction_triple: bool
    reduction_chain: dict

    @property
    def theorem_scale(self) -> bool:
        return bool(self.variance_gate) and bool(self.threshold_gate)

    def to_dict(self) -> dict:
        out = {k: getattr(self, k) for k in self.__dataclass_fields__}
        out["theorem_scale"] = self.theorem_scale
        return out


def reduction_chain(n: int, d: int, k: int) -> dict:
    """Check the big-integer inequality chain used to reduce to ``d >= 17, n > 24d``.

    ``1000 n^2 8^k <= 1000 8^d (n+d-1)^2 <= ((n+d-1)/d)^d <= C(n+d-1, d)`` plus
    the base inequality ``1000 8^d d^2 <= 25^(d-2)``.
    """
    m = n + d - 1
    N = math.comb(m, d)
    lhs = 1000 * n * n * 8**k
    mid = 1000 * 8**d * m * m
    ratio_pow = Fraction(m, d) ** d
    steps = {
        "base_25": 1000 * 8**d * d * d <= 25 ** (d - 2) if d >= 2 else False,
        "n2_8k_le_8d_m2": lhs <= mid,
        "8d_m2_le_ratio_pow": mid <= ratio_pow,
        "ratio_pow_le_binom": ratio_pow <= N,
        "N_ge_200k": N >= 200 * k * (k - 1) * 2 ** (k - 1),
        "s_ge_3d": (n - 1) // 8 >= 3 * d,
    }
    steps["all"] = all(steps.values())
    return steps


def hypothesis_gate(params: ExperimentParams) -> GateReport:
    n, d, k = params.n, params.d, params.k
    s = (n - 1) // 8
    r = n - 8 * s
    N = params.N
    A, X = params.A, params.X
    s_ok = s >= 1 and s >= 3 * d
    a_window = (X ** (2 * d) <= A <= X ** (s - d)) if s >= 1 else None
    n_k = N >= 200 * k * (k - 1) * 2 ** (k - 1)
    n_n2 = N >= 1000 * n * n * 8**k
    variance_ok = s_ok and d >= 4 and bool(a_window) and n_k
    threshold_ok = (X**3 <= A) and n > d + 1 and d >= 2 and n_n2
    triple = d >= 17 and k <= d and n > 24 * d
    return GateReport(
        n=n, d=d, k=k, s=s, r=r,
        s_at_least_3d=s_ok,
        d_at_least_4=d >= 4,
        A_window=a_window,
        N_vs_k_quadratic=n_k,
        N_vs_n_squared=n_n2,
        variance_gate=variance_ok,
        threshold_gate=threshold_ok,
        reduction_triple=triple,
        reduction_chain=reduction_chain(n, d, k),
    )
