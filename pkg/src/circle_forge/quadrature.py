"""The Fejer weight pair and quadrature for the two singular integrals.

Both integrals are estimated with scrambled Sobol' point sets: ``K``
independently scrambled replicates give an unbiased mean and a standard error
from the spread of replicate means.  Everything is deterministic for a fixed
seed.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.stats import qmc

from .monomial import CoeffVector, ExperimentParams, ParameterError, zeta_of

__all__ = [
    "QuadratureResult",
    "fejer_weight",
    "fejer_hat",
    "form_values",
    "prefactor",
    "singular_integral_star",
    "singular_integral_star_1d",
    "singular_integral_w",
    "singular_integral_w_grid",
    "dirichlet_kernel",
    "zeta_of",
]

MIN_SAMPLES = 1000
DEFAULT_REPLICATES = 16
SINC_SERIES_CUTOFF = 1e-4
KERNEL_ZERO_CUTOFF = 1e-8
# the default 30-bit lattice biases smooth 1D integrands by about 2^-31
SOBOL_BITS = 64


@dataclass(frozen=True)
class QuadratureResult:
    value: float
    std_error: float
    samples: int
    method: str

    def to_dict(self) -> dict:
        return {"value": self.value, "std_error": self.std_error,
                "samples": self.samples, "method": self.method}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def fejer_weight(beta, zeta: float):
    """``zeta * sinc^2(zeta beta)`` with the normalised sinc; works on arrays."""
    if zeta <= 0:
        raise ParameterError("zeta must be positive")
    t = np.pi * zeta * np.asarray(beta, dtype=float)
    small = np.abs(t) < SINC_SERIES_CUTOFF
    safe = np.where(small, 1.0, t)
    # sinc(t)^2 = 1 - t^2/3 + O(t^4) near zero
    sinc2 = np.where(small, 1.0 - t * t / 3.0, (np.sin(safe) / safe) ** 2)
    out = zeta * sinc2
    return float(out) if out.ndim == 0 else out


def fejer_hat(xi, zeta: float):
    """The tent ``max(0, 1 - |xi| / zeta)``; the Fourier transform of :func:`fejer_weight`."""
    if zeta <= 0:
        raise ParameterError("zeta must be positive")
    out = np.maximum(0.0, 1.0 - np.abs(np.asarray(xi, dtype=float)) / zeta)
    return float(out) if out.ndim == 0 else out


def form_values(a: CoeffVector, gamma: np.ndarray) -> np.ndarray:
    """``f_a`` at each row of ``gamma`` in double precision."""
    gamma = np.atleast_2d(np.asarray(gamma, dtype=float))
    out = np.zeros(gamma.shape[0])
    for exps, c in a.terms():
        term = np.full(gamma.shape[0], float(c))
        for j, e in enumerate(exps):
            if e:
                term *= gamma[:, j] ** e
        out += term
    return out


def _log(v: Fraction) -> float:
    return math.log(v.numerator) - math.log(v.denominator)


def prefactor(params: ExperimentParams, n: int, d: int) -> float:
    """``A^{-1} X^{n-d}``, computed in logs so huge ``A`` and ``X`` do not overflow."""
    return math.exp((n - d) * _log(params.X) - _log(params.A))


def _replicate_means(integrand, n: int, samples: int, replicates: int, seed: int) -> tuple[np.ndarray, int]:
    if samples < MIN_SAMPLES:
        raise ParameterError(f"need at least {MIN_SAMPLES} samples, got {samples}")
    if replicates < 2:
        raise ParameterError("need at least two replicates for an error estimate")
    # balanced Sobol' blocks need a power-of-two length
    m = max(1, math.ceil(math.log2(math.ceil(samples / replicates))))
    children = np.random.SeedSequence(seed).spawn(replicates)
    means = np.empty(replicates)
    for i, child in enumerate(children):
        pts = qmc.Sobol(d=n, scramble=True, bits=SOBOL_BITS, seed=np.random.default_rng(child)).random_base2(m)
        vals = integrand(pts)
        means[i] = math.fsum(vals) / vals.size
    return means, replicates * 2**m


def _summarise(means: np.ndarray, scale: float, total: int) -> QuadratureResult:
    mean = math.fsum(means) / means.size
    spread = float(np.std(means, ddof=1)) / math.sqrt(means.size)
    return QuadratureResult(scale * mean, abs(scale) * spread, total, "low-discrepancy")


def singular_integral_star(a: CoeffVector, params: ExperimentParams, samples: int = 2**16,
                           replicates: int = DEFAULT_REPLICATES, seed: int = 0) -> QuadratureResult:
    """``A^{-1} X^{n-d} int_{[0,1]^n} zeta^{-1} tent(f_a(g) / A) dg``."""
    zeta = zeta_of(params)
    scale = prefactor(params, a.n, a.d) / zeta
    if a.is_zero():
        return QuadratureResult(scale, 0.0, 0, "closed-form")
    A = float(params.A)

    def integrand(pts):
        return fejer_hat(form_values(a, pts) / A, zeta)

    means, total = _replicate_means(integrand, a.n, samples, replicates, seed)
    return _summarise(means, scale, total)


def singular_integral_star_1d(a1: int, params: ExperimentParams, d: int) -> QuadratureResult:
    """Closed form for ``f = a1 g^d`` in one variable."""
    zeta = zeta_of(params)
    scale = prefactor(params, 1, d) / zeta
    t = abs(a1) / (float(params.A) * zeta)
    if t <= 1:
        inner = 1.0 - t / (d + 1)
    else:
        # tent vanishes past g0 = t^(-1/d)
        inner = t ** (-1.0 / d) * d / (d + 1)
    return QuadratureResult(scale * inner, 0.0, 0, "closed-form")


def dirichlet_kernel(u, w: float):
    """``int_{|b| <= w} e(b u) db = sin(2 pi w u) / (pi u)``, equal to ``2w`` at ``u = 0``."""
    u = np.asarray(u, dtype=float)
    small = np.abs(u) < KERNEL_ZERO_CUTOFF
    safe = np.where(small, 1.0, u)
    out = np.where(small, 2.0 * w, np.sin(2.0 * np.pi * w * safe) / (np.pi * safe))
    return float(out) if out.ndim == 0 else out


def singular_integral_w(a: CoeffVector, params: ExperimentParams, samples: int = 2**16,
                        w: float | None = None, replicates: int = DEFAULT_REPLICATES,
                        seed: int = 0) -> QuadratureResult:
    """``X^{n-d} A^{-1} int_{|b| <= w} int_{[0,1]^n} e(b f_a(g) / A) dg db``.

    The ``b`` integral is done in closed form, leaving an ``n``-dimensional
    integral of :func:`dirichlet_kernel`.
    """
    w = params.w if w is None else w
    scale = prefactor(params, a.n, a.d)
    if a.is_zero():
        return QuadratureResult(2.0 * w * scale, 0.0, 0, "closed-form")
    A = float(params.A)

    def integrand(pts):
        return dirichlet_kernel(form_values(a, pts) / A, w)

    means, total = _replicate_means(integrand, a.n, samples, replicates, seed)
    return _summarise(means, scale, total)


def _gauss_legendre(lo: float, hi: float, panels: int, order: int) -> tuple[np.ndarray, np.ndarray]:
    x, wt = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(lo, hi, panels + 1)
    half = np.diff(edges) / 2
    mid = (edges[:-1] + edges[1:]) / 2
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * wt[None, :]).ravel()
    return nodes, weights


def singular_integral_w_grid(a: CoeffVector, params: ExperimentParams, w: float | None = None,
                             panels: int = 16, order: int = 12) -> QuadratureResult:
    """Direct tensor Gauss-Legendre over ``(b, g)`` without the kernel reduction; ``n <= 2``.

    The imaginary part integrates to zero over the symmetric ``b`` range, so
    only ``cos`` is summed.
    """
    if a.n > 2:
        raise ParameterError("tensor grid is only offered for n <= 2")
    w = params.w if w is None else w
    scale = prefactor(params, a.n, a.d)
    A = float(params.A)
    bn, bw = _gauss_legendre(-w, w, panels, order)
    gn, gw = _gauss_legendre(0.0, 1.0, panels, order)
    if a.n == 1:
        pts, pw = gn[:, None], gw
    else:
        g1, g2 = np.meshgrid(gn, gn, indexing="ij")
        pts = np.stack([g1.ravel(), g2.ravel()], axis=1)
        pw = np.outer(gw, gw).ravel()
    u = form_values(a, pts) / A
    rows = [math.fsum(pw * np.cos(2.0 * np.pi * b * u)) for b in bn]
    value = math.fsum(np.asarray(rows) * bw)
    return QuadratureResult(scale * value, 0.0, bn.size * pw.size, "tensor-grid")
