"""End-to-end pipelines over a thin set of coefficient vectors.

Every pipeline is a pure function of ``(config, seed)``: records come back in
enumeration order whatever the worker count, floating reductions use
``math.fsum`` and no timings enter the output.
"""

from __future__ import annotations

import itertools
import json
import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Sequence

import numpy as np

from . import _caps
from ._parallel import ordered_map
from .circle import truncated_singular_series
from .counting import ThinSetSpec, count_I, thin_set_from_json, thin_set_vectors
from .lattice import bareiss_det
from .monomial import (CoeffVector, ExperimentParams, ParameterError, evaluate_form, gradient,
                       hypothesis_gate, primes_upto)
from .quadrature import QuadratureResult, singular_integral_star


@dataclass(frozen=True)
class ExperimentConfig:
    params: ExperimentParams
    thin_set: ThinSetSpec
    sample_limit: int = 1000
    seed: int = 0
    p_max: int = 7
    lift_depth: int = 3
    quadrature_samples: int = 4096
    delta_probe: tuple[float, ...] = (0.0,)
    eta_probe: tuple[float, ...] = (0.0,)

    def __post_init__(self):
        if self.sample_limit < 1:
            raise ParameterError("sample_limit must be at least 1")
        if self.p_max < 2:
            raise ParameterError("p_max must be at least 2")
        if self.quadrature_samples < 1000:
            raise ParameterError("quadrature_samples must be at least 1000")

    @property
    def A_int(self) -> int:
        return math.floor(self.params.A)

    def with_seed(self, seed: int) -> "ExperimentConfig":
        return ExperimentConfig(self.params, self.thin_set, self.sample_limit, seed, self.p_max,
                                self.lift_depth, self.quadrature_samples, self.delta_probe,
                                self.eta_probe)

    def to_dict(self) -> dict:
        return {"params": self.params.to_dict(), "P": self.thin_set.to_json_obj(),
                "sample_limit": self.sample_limit, "seed": self.seed, "p_max": self.p_max,
                "lift_depth": self.lift_depth, "quadrature_samples": self.quadrature_samples,
                "delta_probe": list(self.delta_probe), "eta_probe": list(self.eta_probe)}


def config_from_dict(obj: dict) -> ExperimentConfig:
    try:
        params = ExperimentParams(int(obj["n"]), int(obj["d"]), int(obj.get("k", 1)),
                                  Fraction(str(obj["A"])), Fraction(str(obj["X"])))
        thin = thin_set_from_json(obj["P"])
    except KeyError as exc:
        raise ParameterError(f"config is missing {exc.args[0]!r}") from None
    return ExperimentConfig(
        params=params,
        thin_set=thin,
        sample_limit=int(obj.get("sample_limit", 1000)),
        seed=int(obj.get("seed", 0)),
        p_max=int(obj.get("p_max", 7)),
        lift_depth=int(obj.get("lift_depth", 3)),
        quadrature_samples=int(obj.get("quadrature_samples", 4096)),
        delta_probe=tuple(float(v) for v in obj.get("delta_probe", [0.0])),
        eta_probe=tuple(float(v) for v in obj.get("eta_probe", [0.0])),
    )


def load_config(path: str) -> ExperimentConfig:
    with open(path) as fh:
        return config_from_dict(json.load(fh))


# -- local solubility -------------------------------------------------------


@dataclass(frozen=True)
class Certificate:
    """A primitive point ``x`` proving a non-trivial ``p``-adic zero.

    ``kind == "integer_zero"``: ``f_a(x) = 0`` exactly.  ``kind == "hensel"``:
    ``v_p(f_a(x)) > 2 v_p(df_a/dx_i (x))`` for the recorded coordinate ``i``.
    """

    p: int
    x: tuple[int, ...]
    kind: str
    coordinate: int | None = None

    def to_dict(self) -> dict:
        return {"p": self.p, "x": list(self.x), "kind": self.kind, "coordinate": self.coordinate}


def p_valuation(v: int, p: int) -> float:
    if v == 0:
        return math.inf
    k = 0
    while v % p == 0:
        v //= p
        k += 1
    return k


def verify_certificate(a: CoeffVector, cert: Certificate) -> bool:
    p, x = cert.p, cert.x
    if all(v % p == 0 for v in x):
        return False
    fx = evaluate_form(a, x)
    if cert.kind == "integer_zero":
        return fx == 0
    if cert.kind != "hensel" or cert.coordinate is None:
        return False
    g = gradient(a, x)[cert.coordinate]
    return g != 0 and p_valuation(fx, p) > 2 * p_valuation(g, p)


def _hensel_certificate(a: CoeffVector, x: tuple[int, ...], p: int) -> Certificate | None:
    fx = evaluate_form(a, x)
    if fx == 0:
        return Certificate(p, x, "integer_zero")
    vf = p_valuation(fx, p)
    best = None
    for i, g in enumerate(gradient(a, x)):
        if g == 0:
            continue
        vg = p_valuation(g, p)
        if vf > 2 * vg and (best is None or vg < best[1]):
            best = (i, vg)
    return Certificate(p, x, "hensel", best[0]) if best else None


def prime_verdict(a: CoeffVector, p: int, lift_depth: int,
                  cap: int | None = None) -> tuple[str, Certificate | None]:
    """Search primitive zeros modulo ``p^j`` for ``j <= lift_depth``.

    An empty set of primitive zeros at some depth rules out non-trivial
    ``p``-adic zeros; a Hensel certificate proves one.
    """
    n = a.n
    _caps.check(f"residues mod {p}", p**n, cap)
    layer = [x for x in itertools.product(range(p), repeat=n)
             if any(x) and evaluate_form(a, x) % p == 0]
    for j in range(1, lift_depth + 1):
        if not layer:
            return "insoluble", None
        for x in layer:
            cert = _hensel_certificate(a, x, p)
            if cert is not None:
                return "soluble", cert
        if j == lift_depth:
            break
        _caps.check(f"lift mod {p}^{j + 1}", len(layer) * p**n, cap)
        pj, pj1 = p**j, p ** (j + 1)
        layer = [tuple(xi + pj * ti for xi, ti in zip(x, t))
                 for x in layer for t in itertools.product(range(p), repeat=n)
                 if evaluate_form(a, tuple(xi + pj * ti for xi, ti in zip(x, t))) % pj1 == 0]
    return "undetermined", None


def _quadratic_matrix(a: CoeffVector) -> list[list[int]]:
    """Twice the Gram matrix of a quadratic form, so entries stay integral."""
    n = a.n
    m = [[0] * n for _ in range(n)]
    for exps, c in a.terms():
        idx = [i for i, e in enumerate(exps) for _ in range(e)]
        i, j = idx
        if i == j:
            m[i][i] += 2 * c
        else:
            m[i][j] += c
            m[j][i] += c
    return m


def _definite(m: list[list[int]]) -> bool:
    return all(bareiss_det([row[:k] for row in m[:k]]) > 0 for k in range(1, len(m) + 1))


def real_verdict(a: CoeffVector, samples: int = 4096) -> str:
    """Is there a non-zero real ``x`` with ``f_a(x) = 0``?"""
    n, d = a.n, a.d
    if a.is_zero():
        return "soluble"
    if n == 1:
        return "insoluble"
    if d % 2 == 1:
        # f(-x) = -f(x) and the sphere is connected
        return "soluble"
    if d == 2:
        m = _quadratic_matrix(a)
        neg = [[-v for v in row] for row in m]
        return "insoluble" if _definite(m) or _definite(neg) else "soluble"
    pure = set(a.basis.pure_positions)
    if all(i in pure for i, c in enumerate(a.entries) if c):
        b = [a.entries[i] for i in a.basis.pure_positions]
        if 0 in b or min(b) < 0 < max(b):
            return "soluble"
        return "insoluble"
    for x in itertools.product((-1, 0, 1), repeat=n):
        if any(x) and evaluate_form(a, x) == 0:
            return "soluble"
    rng = np.random.default_rng(0)
    pts = rng.standard_normal((samples, n))
    vals = np.zeros(samples)
    for exps, c in a.terms():
        term = np.full(samples, float(c))
        for j, e in enumerate(exps):
            if e:
                term *= pts[:, j] ** e
        vals += term
    if vals.min() < 0 < vals.max():
        return "soluble"
    return "undetermined"


@dataclass(frozen=True)
class SolubilityVerdict:
    real_place: str
    per_prime: dict[int, str]
    certificates: dict[int, Certificate] = field(default_factory=dict)

    @property
    def overall(self) -> str:
        if self.real_place == "insoluble" or "insoluble" in self.per_prime.values():
            return "locally_obstructed"
        if self.real_place == "soluble" and all(v == "soluble" for v in self.per_prime.values()):
            return "locally_soluble"
        return "undetermined"

    def to_dict(self) -> dict:
        return {"real_place": self.real_place,
                "per_prime": {str(p): v for p, v in self.per_prime.items()},
                "certificates": {str(p): c.to_dict() for p, c in self.certificates.items()},
                "overall": self.overall}


def check_local_solubility(a: CoeffVector, p_max: int = 7, lift_depth: int = 3,
                           cap: int | None = None) -> SolubilityVerdict:
    per_prime, certs = {}, {}
    for p in primes_upto(p_max):
        verdict, cert = prime_verdict(a, p, lift_depth, cap)
        per_prime[p] = verdict
        if cert is not None:
            certs[p] = cert
    return SolubilityVerdict(real_verdict(a), per_prime, certs)


# -- sampling ---------------------------------------------------------------


@dataclass(frozen=True)
class ThinSample:
    vectors: list[CoeffVector]
    seen: int
    complete: bool

    @property
    def fraction(self) -> Fraction:
        return Fraction(len(self.vectors), self.seen) if self.seen else Fraction(1)


def sample_thin_set(cfg: ExperimentConfig) -> ThinSample:
    """All of the thin set if it fits in ``sample_limit``, else a seeded reservoir sample.

    The sample is uniform over everything enumerated and is returned in
    enumeration order.
    """
    p = cfg.params
    stream: Iterator[CoeffVector] = thin_set_vectors(cfg.thin_set, cfg.A_int, p.n, p.d)
    rng = random.Random(cfg.seed)
    reservoir: list[tuple[int, CoeffVector]] = []
    seen = 0
    for idx, a in enumerate(stream):
        seen += 1
        if len(reservoir) < cfg.sample_limit:
            reservoir.append((idx, a))
        else:
            j = rng.randrange(seen)
            if j < cfg.sample_limit:
                reservoir[j] = (idx, a)
    reservoir.sort(key=lambda t: t[0])
    return ThinSample([a for _, a in reservoir], seen, seen <= cfg.sample_limit)


def record_seed(seed: int, index: int) -> int:
    return int(np.random.SeedSequence([seed, index]).generate_state(1)[0])


# -- variance ---------------------------------------------------------------


@dataclass(frozen=True)
class VarianceRecord:
    a: CoeffVector
    I_value: int
    S_star: Fraction
    J_star: QuadratureResult
    residual: float

    def to_dict(self) -> dict:
        return {"a": list(self.a.entries), "I": self.I_value,
                "S_star": f"{self.S_star.numerator}/{self.S_star.denominator}",
                "J_star": self.J_star.value, "J_star_err": self.J_star.std_error,
                "residual": self.residual}

    def csv_row(self) -> list:
        return [";".join(str(v) for v in self.a.entries), self.I_value, self.S_star.numerator,
                self.S_star.denominator, repr(self.J_star.value), repr(self.J_star.std_error),
                repr(self.residual)]


VARIANCE_CSV_HEADER = ["a", "I", "S_star_num", "S_star_den", "J_star", "J_star_err", "residual"]


@dataclass(frozen=True)
class VarianceReport:
    records: list[VarianceRecord]
    summary: dict


def _log_fraction(v: Fraction) -> float:
    return math.log(v.numerator) - math.log(v.denominator)


def _pow_log(value: float) -> float:
    try:
        return math.exp(value)
    except OverflowError:
        return math.inf


def log_power(logA: float, exponent: float) -> float:
    """``(log A)^{-exponent}``; at ``log A = 0`` a positive exponent gives infinity."""
    if exponent == 0:
        return 1.0
    if logA <= 0:
        return math.inf
    return logA ** (-exponent)


def run_variance_experiment(cfg: ExperimentConfig, workers: int = 1,
                            cap: int | None = None) -> VarianceReport:
    p = cfg.params
    sample = sample_thin_set(cfg)
    X = p.X_int

    def one(item: tuple[int, CoeffVector]) -> VarianceRecord:
        idx, a = item
        I = count_I(a, X, cap=cap)
        S = truncated_singular_series(a, p, cap)
        J = singular_integral_star(a, p, samples=cfg.quadrature_samples, seed=record_seed(cfg.seed, idx))
        residual = (I - float(S) * J.value) ** 2
        return VarianceRecord(a, I, S, J, residual)

    records = ordered_map(one, list(enumerate(sample.vectors)), workers)
    total = math.fsum(r.residual for r in records)
    N, n, d, k = p.N, p.n, p.d, p.k
    logA, logX = _log_fraction(p.A), _log_fraction(p.X)
    comparator = _pow_log((N - 4) * logA + (2 * n - 2 * d) * logX)
    comparator_k = _pow_log((N - k - 2) * logA + (2 * n - 2 * d) * logX)
    curve = []
    for delta in cfg.delta_probe:
        scaled = comparator * log_power(logA, delta)
        curve.append({"delta": delta, "ratio": total / scaled if scaled not in (0, math.inf) else None})
    summary = {
        "records": len(records),
        "thin_set_seen": sample.seen,
        "complete": sample.complete,
        "sampling_fraction": str(sample.fraction),
        "residual_sum": total,
        "comparator": comparator,
        "ratio": total / comparator if comparator not in (0, math.inf) else None,
        "comparator_k": comparator_k,
        "ratio_k": total / comparator_k if comparator_k not in (0, math.inf) else None,
        "delta_curve": curve,
        "gate": hypothesis_gate(p).to_dict(),
        "config": cfg.to_dict(),
    }
    return VarianceReport(records, summary)


# -- census -----------------------------------------------------------------


@dataclass(frozen=True)
class CensusEntry:
    a: CoeffVector
    verdict: SolubilityVerdict
    I_value: int
    predictor: float

    def to_dict(self) -> dict:
        return {"a": list(self.a.entries), "overall": self.verdict.overall,
                "I": self.I_value, "predictor": self.predictor}


@dataclass(frozen=True)
class CensusReport:
    entries: list[CensusEntry]
    summary: dict


def _fraction_str(v: Fraction) -> str:
    return f"{v.numerator}/{v.denominator}"


def run_threshold_census(cfg: ExperimentConfig, workers: int = 1,
                         cap: int | None = None) -> CensusReport:
    """Tally locally soluble ``a`` whose predictor or true count falls below the thresholds."""
    p = cfg.params
    sample = sample_thin_set(cfg)
    X = p.X_int

    def one(item: tuple[int, CoeffVector]) -> CensusEntry:
        idx, a = item
        verdict = check_local_solubility(a, cfg.p_max, cfg.lift_depth, cap)
        I = count_I(a, X, cap=cap)
        S = truncated_singular_series(a, p, cap)
        J = singular_integral_star(a, p, samples=cfg.quadrature_samples, seed=record_seed(cfg.seed, idx))
        return CensusEntry(a, verdict, I, float(S) * J.value)

    entries = ordered_map(one, list(enumerate(sample.vectors)), workers)
    total = len(entries)
    logA = _log_fraction(p.A)
    base = _pow_log((p.n - p.d) * _log_fraction(p.X) - logA)
    local = [e for e in entries if e.verdict.overall == "locally_soluble"]

    def prop(count: int) -> str:
        return _fraction_str(Fraction(count, total)) if total else "0/1"

    eta_rows = []
    for eta in cfg.eta_probe:
        threshold = base * log_power(logA, eta)
        below = sum(1 for e in local if e.predictor <= threshold)
        eta_rows.append({"eta": eta, "threshold": threshold, "below": below, "proportion": prop(below)})
    count_threshold = base * log_power(logA, 0.2)
    below_count = sum(1 for e in local if e.I_value < count_threshold)
    summary = {
        "thin_set_size": total,
        "thin_set_seen": sample.seen,
        "complete": sample.complete,
        "locally_soluble": len(local),
        "locally_obstructed": sum(1 for e in entries if e.verdict.overall == "locally_obstructed"),
        "undetermined": sum(1 for e in entries if e.verdict.overall == "undetermined"),
        "predictor_below": eta_rows,
        "count_below": {"threshold": count_threshold, "below": below_count, "proportion": prop(below_count)},
        "gate": hypothesis_gate(p).to_dict(),
        "config": cfg.to_dict(),
    }
    return CensusReport(entries, summary)


def dumps(obj) -> str:
    """Canonical JSON: sorted keys, no whitespace variance, non-finite floats as strings."""
    return json.dumps(_clean(obj), sort_keys=True, separators=(",", ":"))


def _clean(obj):
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else str(obj)
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, Fraction):
        return _fraction_str(obj)
    return obj
