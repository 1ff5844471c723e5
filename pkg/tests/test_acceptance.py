"""Acceptance suite: one check per primary criterion, each printing a PASS/FAIL line.

Run directly with ``python tests/test_acceptance.py`` or through pytest; the
collected lines are printed in the pytest terminal summary.
"""

import itertools
import math
import random
import sys
import time
from fractions import Fraction
from pathlib import Path

import pytest

from circle_forge.circle import (Region, arc_restricted_count, build_arcs, classify, classify_scan, divisors,
                                 local_density, local_exp_sum, moment_count, moment_count_naive, tail_terms)
from circle_forge.cli import main as cli_main
from circle_forge.counting import (CountingInstance, count_I, count_I_naive, count_N, count_N_naive, count_U,
                                   enumerate_thin_set, thin_set_spec)
from circle_forge.lattice import (IntegerLattice, LatticeError, det_squared_gram, det_squared_minors,
                                  minor_gcd, orthogonal_lattice)
from circle_forge.monomial import (ExperimentParams, build_basis, coeffs, reduction_chain, evaluate_form, veronese,
                                   zeta_of)
from circle_forge.probes import run_all
from circle_forge.quadrature import (singular_integral_star, singular_integral_star_1d, singular_integral_w,
                                     singular_integral_w_grid)

CONFIGS = Path(__file__).resolve().parent.parent / "configs"
REPORT: list[str] = []
# values that are exact in theory but computed in double precision
FLOAT_FLOOR = 1e-12


def record(name, ok, detail, elapsed):
    REPORT.append(f"{'PASS' if ok else 'FAIL'} {name}: {detail} [{elapsed:.2f}s]")
    print(REPORT[-1])
    return ok


def random_form(rng, n, d, bound=3):
    return coeffs(n, d, [rng.randint(-bound, bound) for _ in range(build_basis(n, d).N)])


def random_lattice(rng, n, r, bound=9):
    while True:
        try:
            return IntegerLattice([[rng.randint(-bound, bound) for _ in range(n)] for _ in range(r)])
        except LatticeError:
            continue


def fraction_det(m):
    m = [[Fraction(v) for v in row] for row in m]
    k, det = len(m), Fraction(1)
    for c in range(k):
        piv = next((r for r in range(c, k) if m[r][c]), None)
        if piv is None:
            return Fraction(0)
        if piv != c:
            m[c], m[piv] = m[piv], m[c]
            det = -det
        det *= m[c][c]
        for r in range(c + 1, k):
            f = m[r][c] / m[c][c]
            m[r] = [x - f * y for x, y in zip(m[r], m[c])]
    return det


def test_basis_correctness():
    t = time.perf_counter()
    sizes = all(build_basis(n, d).N == math.comb(n + d - 1, d) == len(set(build_basis(n, d).exponents))
                for n in range(1, 7) for d in range(1, 6))
    b = build_basis(2, 3)
    v = veronese(b, (2, 3))
    split = ([v[i] for i in b.pure_positions] == [8, 27]
             and [v[i] for i in b.mixed_positions] == [2 * 2 * 3, 2 * 3 * 3])
    ok = sizes and split and b.exponents == ((3, 0), (2, 1), (1, 2), (0, 3))
    assert record("basis correctness", ok, "sizes n<=6 d<=5, (2,3) pure/mixed ordering", time.perf_counter() - t)


def test_geometry_of_numbers():
    t = time.perf_counter()
    rng = random.Random(2024)
    ortho = 0
    for _ in range(200):
        n = rng.randint(2, 6)
        L = random_lattice(rng, n, rng.randint(1, n - 1))
        perp = orthogonal_lattice(L)
        g = minor_gcd(L)
        ortho += det_squared_minors(perp) * g * g == det_squared_gram(L)
    cb = 0
    for _ in range(500):
        n = rng.randint(1, 6)
        L = random_lattice(rng, n, rng.randint(1, n))
        minors = sum(fraction_det([[row[c] for c in cols] for row in L.basis]) ** 2
                     for cols in itertools.combinations(range(n), L.rank))
        cb += minors == det_squared_gram(L)
    ok = ortho == 200 and cb == 500
    assert record("geometry of numbers", ok, f"orthogonal identity {ortho}/200, Cauchy-Binet {cb}/500",
                  time.perf_counter() - t)


N_INSTANCES: list = []


def test_counting_oracle_equivalence():
    t = time.perf_counter()
    rng = random.Random(7)
    tallies = {}

    def tally(name, ok):
        good, total = tallies.get(name, (0, 0))
        tallies[name] = (good + ok, total + 1)

    for _ in range(30):
        n, d, X = rng.randint(1, 3), rng.randint(1, 3), rng.randint(1, 6)
        a = random_form(rng, n, d)
        tally("count_I", count_I(a, X) == count_I_naive(a, X))
    for _ in range(30):
        inst = CountingInstance(rng.randint(1, 2), rng.randint(1, 3), rng.randint(1, 3), rng.randint(1, 4))
        tally("count_U", count_U(inst, "hash") == count_U(inst, "naive"))
    for _ in range(30):
        s = rng.randint(1, 2)
        inst = CountingInstance(s, rng.randint(1, 3), rng.randint(1, 3 if s == 1 else 2), rng.randint(1, 6 if s == 1 else 4))
        fast, slow = count_N(inst, "hash"), count_N_naive(inst)
        N_INSTANCES.append((inst, fast))
        tally("count_N", fast == slow)
    for _ in range(30):
        s = rng.randint(1, 2)
        args = (s, rng.randint(1, 3), rng.randint(1, 6 if s == 1 else 3), rng.randint(1, 3))
        tally("moment_count", moment_count(*args) == moment_count_naive(*args))
    for _ in range(30):
        N, k = rng.randint(2, 4), rng.randint(1, 3)
        if rng.random() < 0.5:
            terms = [(tuple(k if j == i else 0 for j in range(N)), rng.choice([-2, -1, 1, 2])) for i in range(N)]
        else:
            monos = [e for e in itertools.product(range(k + 1), repeat=N) if sum(e) == k]
            terms = [(e, rng.randint(-2, 2)) for e in rng.sample(monos, min(3, len(monos)))]
            if not any(c for _, c in terms):
                terms[0] = (terms[0][0], 1)
        spec = thin_set_spec(terms)
        A = rng.randint(1, 3)
        naive = list(enumerate_thin_set(spec, A, "naive"))
        tally("enumerate_thin_set", list(enumerate_thin_set(spec, A)) == naive)
    ok = all(good == total >= 25 for good, total in tallies.values())
    detail = ", ".join(f"{k} {g}/{n}" for k, (g, n) in tallies.items())
    assert record("counting oracle equivalence", ok, detail, time.perf_counter() - t)


def test_partition_identity():
    t = time.perf_counter()
    if not N_INSTANCES:
        rng = random.Random(8)
        for _ in range(25):
            inst = CountingInstance(rng.randint(1, 2), rng.randint(1, 3), rng.randint(1, 2), rng.randint(1, 4))
            N_INSTANCES.append((inst, count_N(inst)))
    split = all(r.total == r.dependent + r.independent for _, r in N_INSTANCES)
    s1 = all(r.independent == 0 for inst, r in N_INSTANCES if inst.s == 1)
    ok = split and s1
    assert record("partition identity", ok, f"{len(N_INSTANCES)} instances, N2 = 0 for every s = 1",
                  time.perf_counter() - t)


def test_singular_series_identities():
    t = time.perf_counter()
    rng = random.Random(11)
    pairs = [(q1, q2) for q1 in range(2, 101) for q2 in range(q1 + 1, 101)
             if q1 * q2 <= 200 and math.gcd(q1, q2) == 1]
    chosen = rng.sample(pairs, 100) if len(pairs) >= 100 else pairs
    crt = 0
    for q1, q2 in chosen:
        a = random_form(rng, rng.randint(1, 2), rng.randint(1, 3))
        crt += local_density(a, q1 * q2, "direct") == local_density(a, q1) * local_density(a, q2)
    worst_div = 0.0
    for _ in range(3):
        a = random_form(rng, 2, rng.randint(1, 3))
        for q in range(1, 61):
            lhs = float(local_density(a, q))
            rhs = math.fsum(local_exp_sum(a, e).real for e in divisors(q))
            worst_div = max(worst_div, abs(lhs - rhs))
    p = ExperimentParams(2, 2, 1, 10, Fraction(math.exp(3)) + Fraction(1, 10**6))
    worst_tail = max(tail_terms(random_form(rng, 2, 2), p, tol=math.inf).residual for _ in range(50))
    ok = crt == len(chosen) == 100 and worst_div <= 1e-8 and worst_tail <= 1e-8
    detail = (f"CRT {crt}/{len(chosen)} pairs, divisor identity max err {worst_div:.1e} (q<=60), "
              f"tail identity max err {worst_tail:.1e} (w={p.w:.4f}, W={p.W})")
    assert record("singular-series identities", ok, detail, time.perf_counter() - t)


def test_quadrature_oracles():
    t = time.perf_counter()
    rng = random.Random(13)
    hits, worst_z = 0, 0.0
    for i in range(20):
        d = rng.randint(1, 5)
        p = ExperimentParams(1, d, 1, rng.choice([50, 300, 2000, 10**4]), Fraction(math.exp(rng.uniform(2, 4))))
        top = p.A * Fraction(zeta_of(p))
        a1 = rng.randint(1, max(1, math.floor(top)))
        got = singular_integral_star(coeffs(1, d, [a1]), p, seed=i)
        ref = singular_integral_star_1d(a1, p, d)
        diff = abs(got.value - ref.value)
        hits += diff <= 3 * got.std_error + FLOAT_FLOOR * abs(ref.value)
        if got.std_error:
            worst_z = max(worst_z, diff / got.std_error)
    battery = [(1, 1, [2]), (1, 2, [1]), (1, 3, [3]), (2, 2, [1, 0, -1]), (2, 2, [1, 1, -2]), (2, 3, [1, 0, 0, -1])]
    worst_rel = 0.0
    for n, d, entries in battery:
        p = ExperimentParams(n, d, 1, 1, Fraction(math.exp(3)))
        a = coeffs(n, d, entries)
        k, g = singular_integral_w(a, p), singular_integral_w_grid(a, p)
        worst_rel = max(worst_rel, abs(k.value - g.value) / abs(g.value))
    ok = hits == 20 and worst_rel <= 1e-3
    detail = (f"1D closed form {hits}/20 within 3 SE (max |z| {worst_z:.2f}), "
              f"kernel vs grid max rel {worst_rel:.1e} on {len(battery)} forms")
    assert record("quadrature oracles", ok, detail, time.perf_counter() - t)


def test_full_circle_identity():
    t = time.perf_counter()
    rng = random.Random(17)
    exact, worst = 0, 0.0
    for _ in range(20):
        d, X = rng.randint(1, 3), rng.randint(1, 4)
        a = random_form(rng, 2, d)
        M = 2 * max(abs(evaluate_form(a, x)) for x in itertools.product(range(1, X + 1), repeat=2)) + 1
        v = arc_restricted_count(a, X, Region.full(), M)
        truth = count_I(a, X)
        worst = max(worst, abs(v - truth))
        exact += round(v) == truth and abs(v - truth) < 1e-9
    ok = exact == 20
    assert record("full-circle identity", ok, f"{exact}/20 forms, max float deviation {worst:.1e}",
                  time.perf_counter() - t)


def arc_sweep():
    """Configurations ``B <= 20`` meeting ``2 B^2 < A X^d`` (with ``X = d = 1``)."""
    for B in range(1, 21):
        for AX in sorted({2 * B * B + 1, 2 * B * B + 7, 3 * B * B, 2 * B**3 + 1, 10 * B**3}):
            yield B, AX


def pairwise_disjoint(arcs):
    spans = sorted((a.lo, a.hi) for a in arcs.arcs)
    return all(hi < lo2 for (_, hi), (lo2, _) in zip(spans, spans[1:]))


def test_arc_bookkeeping_on_disjoint_configurations():
    t = time.perf_counter()
    disjoint = equal = 0
    bounded = True
    for B, AX in arc_sweep():
        arcs = build_arcs(B, AX, 1, 1)
        bounded &= arcs.measure() <= arcs.phi_measure()
        if pairwise_disjoint(arcs):
            disjoint += 1
            equal += arcs.measure() == arcs.phi_measure()
    rng = random.Random(19)
    agree = 0
    configs = [build_arcs(B, 2 * B**3 + 1, 1, 1) for B in (3, 7, 12, 20)]
    for i in range(10**4):
        alpha = Fraction(rng.randrange(10**12), 10**12)
        arcs = configs[i % len(configs)]
        agree += classify(alpha, arcs) == classify_scan(alpha, arcs)
    ok = equal == disjoint > 0 and bounded and agree == 10**4
    detail = f"measure == phi-sum on {equal}/{disjoint} disjoint configurations, classify vs scan {agree}/10000"
    assert record("arc bookkeeping (disjoint arcs)", ok, detail, time.perf_counter() - t)


@pytest.mark.xfail(strict=True, reason="2B^2 < AX^d does not force disjoint arcs; 2B^3 < AX^d does")
def test_arc_bookkeeping_under_stated_hypothesis():
    t = time.perf_counter()
    configs = list(arc_sweep())
    bad = [(B, AX) for B, AX in configs if build_arcs(B, AX, 1, 1).measure() != build_arcs(B, AX, 1, 1).phi_measure()]
    ok = not bad
    detail = (f"measure == phi-sum on {len(configs) - len(bad)}/{len(configs)} configurations with 2B^2 < AX^d; "
              f"overlaps e.g. B={bad[0][0]}, AX^d={bad[0][1]}" if bad else f"{len(configs)} configurations")
    assert record("arc bookkeeping (stated hypothesis)", ok, detail, time.perf_counter() - t)


def test_reduction_chain_gate():
    t = time.perf_counter()
    checks = [(d, k) for d in range(17, 21) for k in range(1, d + 1)]
    passed = sum(reduction_chain(24 * d + 1, d, k)["all"] for d, k in checks)
    ok = passed == len(checks)
    assert record("reduction-chain gate", ok, f"chain holds for {passed}/{len(checks)} (d, k), n = 24d+1",
                  time.perf_counter() - t)


def test_empirical_probes(tmp_path):
    t = time.perf_counter()
    results = run_all(str(tmp_path))
    elapsed = time.perf_counter() - t
    files = all(Path(r.csv_path).stat().st_size > 0 and Path(r.png_path).stat().st_size > 0 for r in results)
    by = {r.name: r.summary for r in results}
    slopes = ", ".join(f"d={d} slope {v['fitted_slope']:.2f} vs {v['claimed']}" for d, v in by["xi"]["slopes"].items())
    eta = by["minor_arc"]["min_eta_hat"]
    detail = (f"xi {slopes}; minor-arc min eta_hat {eta:.2f}; "
              f"major-arc max error/(2Q)^2 {by['major_arc']['max_ratio']:.3f}; CSV+PNG written")
    ok = files and elapsed < 300
    assert record("empirical probes (reported)", ok, detail, elapsed)


def test_end_to_end_determinism(tmp_path):
    t = time.perf_counter()
    outcomes = []
    for cfg in ("toy.json", "census.json"):
        for command in ("variance", "census"):
            blobs = set()
            for threads in ("1", "2", "4"):
                out = tmp_path / f"{cfg}.{command}.{threads}.jsonl"
                code = cli_main([command, "--config", str(CONFIGS / cfg), "--seed", "7", "--threads", threads,
                                 "--out", str(out)])
                blobs.add((code, out.read_bytes()))
            outcomes.append(len(blobs) == 1 and next(iter(blobs))[0] == 0)
    ok = all(outcomes)
    assert record("end-to-end determinism", ok,
                  f"{sum(outcomes)}/{len(outcomes)} runs byte-identical across 1/2/4 threads",
                  time.perf_counter() - t)


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
