import itertools
import json
import math
import random
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from circle_forge.monomial import (BasisSizeError, ExperimentParams, ParameterError, SplitCoeff, build_basis,
                                   coeffs, coeffs_from_json, reduction_chain, evaluate_form, gradient,
                                   hypothesis_gate, merge_split, mixed_monomials, modulus_W,
                                   prime_power_factors, split_merge, veronese, zeta_of)


def pascal(n, d):
    # C(n+d-1, d) by Pascal's rule on the table of monomial counts
    row = [1] * (d + 1)
    for _ in range(n - 1):
        row = list(itertools.accumulate(row))
    return row[d]


def brute_exponents(n, d):
    tuples = [e for e in itertools.product(range(d + 1), repeat=n) if sum(e) == d]
    return sorted(tuples, reverse=True)


def test_basis_examples():
    assert build_basis(2, 3).exponents == ((3, 0), (2, 1), (1, 2), (0, 3))
    assert build_basis(1, 5).exponents == ((5,),)
    b = build_basis(3, 2)
    assert b.N == 6 and b.exponents[0] == (2, 0, 0) and b.exponents[-1] == (0, 0, 2)


@pytest.mark.parametrize("n", range(1, 9))
@pytest.mark.parametrize("d", range(1, 9))
def test_basis_size_matches_pascal(n, d):
    assert build_basis(n, d).N == pascal(n, d) == math.comb(n + d - 1, d)


@pytest.mark.parametrize("n,d", [(1, 1), (2, 4), (3, 3), (4, 2)])
def test_basis_matches_brute_force_lex(n, d):
    assert list(build_basis(n, d).exponents) == brute_exponents(n, d)


def test_basis_rejects_bad_input():
    with pytest.raises(ParameterError):
        build_basis(0, 2)
    with pytest.raises(BasisSizeError):
        build_basis(200, 10)


def test_veronese_examples():
    assert veronese(build_basis(2, 3), (1, 1)) == [1, 1, 1, 1]
    assert veronese(build_basis(2, 3), (2, 1)) == [8, 4, 2, 1]
    assert veronese(build_basis(2, 2), (0, 3)) == [0, 0, 9]


def test_evaluate_examples():
    a = coeffs(2, 2, [1, 0, -1])
    assert evaluate_form(a, (3, 3)) == 0
    assert evaluate_form(a, (3, 2)) == 5
    assert evaluate_form(coeffs(2, 2, [0, 0, 0]), (7, -4)) == 0


small = st.integers(-5, 5)


@given(st.integers(1, 3), st.integers(1, 4), st.data())
def test_homogeneity(n, d, data):
    b = build_basis(n, d)
    a = coeffs(n, d, data.draw(st.lists(small, min_size=b.N, max_size=b.N)))
    x = data.draw(st.lists(small, min_size=n, max_size=n))
    t = data.draw(st.integers(-4, 4))
    assert evaluate_form(a, [t * v for v in x]) == t**d * evaluate_form(a, x)


@given(st.integers(1, 3), st.integers(1, 4), st.data())
def test_gradient_matches_finite_difference(n, d, data):
    b = build_basis(n, d)
    a = coeffs(n, d, data.draw(st.lists(small, min_size=b.N, max_size=b.N)))
    x = data.draw(st.lists(small, min_size=n, max_size=n))
    g = gradient(a, x)
    # exact polynomial derivative via Euler's identity: sum x_i df/dx_i = d f
    assert sum(xi * gi for xi, gi in zip(x, g)) == d * evaluate_form(a, x)


def test_merge_split_example():
    a = merge_split(SplitCoeff((1, 2), (3, 4)), 3)
    assert a.entries == (1, 3, 4, 2)
    diag = merge_split(SplitCoeff((5, -1, 2), (0,) * 7), 3)
    assert evaluate_form(diag, (1, 2, 3)) == 5 - 8 + 54


@given(st.integers(1, 4), st.integers(1, 4), st.data())
def test_merge_split_round_trip_and_evaluation(n, d, data):
    N = build_basis(n, d).N
    b = tuple(data.draw(st.lists(small, min_size=n, max_size=n)))
    c = tuple(data.draw(st.lists(small, min_size=N - n, max_size=N - n)))
    s = SplitCoeff(b, c)
    a = merge_split(s, d)
    assert split_merge(a) == s
    x = data.draw(st.lists(small, min_size=n, max_size=n))
    w = mixed_monomials(a.basis, x)
    assert evaluate_form(a, x) == sum(bi * xi**d for bi, xi in zip(b, x)) + sum(ci * wi for ci, wi in zip(c, w))


def test_merge_split_dimension_mismatch():
    with pytest.raises(ParameterError):
        merge_split(SplitCoeff((1, 2), (3,)), 3)


def test_coeff_json_round_trip():
    a = coeffs(2, 2, [10**30, -1, 0])
    assert json.loads(a.to_json()) == [str(10**30), "-1", "0"]
    assert coeffs_from_json(2, 2, a.to_json()) == a


def test_modulus_W_small_values():
    assert modulus_W(1.5) == 1
    assert modulus_W(3.2) == 6
    assert modulus_W(4.0) == 12
    assert prime_power_factors(10) == {2: 3, 3: 2, 5: 1, 7: 1}


@pytest.mark.parametrize("X", [3, 10, 100, 10**5, 10**12])
def test_log_W_at_most_2w(X):
    p = ExperimentParams(2, 2, 1, 10, X)
    assert math.log(p.W) <= 2 * p.w


def test_zeta():
    p = ExperimentParams(2, 2, 1, 10, Fraction(math.exp(math.e)))
    assert zeta_of(p) == pytest.approx(math.exp(-(4 + 1 / 16)), rel=1e-12)
    assert 0 < zeta_of(ExperimentParams(2, 5, 1, 10, 100)) < 1
    with pytest.raises(ParameterError):
        zeta_of(ExperimentParams(2, 2, 1, 10, 2))


def test_zeta_large_degree_approaches_w_minus_4():
    p = ExperimentParams(2, 10**6, 1, 10, 1000)
    assert zeta_of(p) < p.w ** -4
    assert zeta_of(p) == pytest.approx(p.w ** -4, rel=1e-5)


def test_params_accept_strings_for_huge_values():
    p = ExperimentParams(409, 17, 17, "1e40", "1e2")
    assert p.A == 10**40 and p.X == 100


def test_gate_reduction_scale():
    r = hypothesis_gate(ExperimentParams(409, 17, 17, "1e40", "1e2"))
    assert r.s == 51 and r.s_at_least_3d and r.d_at_least_4
    assert r.N_vs_k_quadratic and r.N_vs_n_squared and r.reduction_triple
    assert r.reduction_chain["all"]
    assert 1000 * 8**17 * 17**2 <= 25**15


def test_gate_toy_scale_fails():
    r = hypothesis_gate(ExperimentParams(8, 4, 2, 100, 3))
    assert not r.reduction_triple and not r.variance_gate and not r.theorem_scale


def test_gate_N_vs_k_example():
    assert math.comb(425, 17) >= 800
    assert hypothesis_gate(ExperimentParams(409, 17, 2, 10, 10)).N_vs_k_quadratic


@given(st.integers(1, 60), st.integers(1, 6), st.integers(1, 6), st.integers(2, 50), st.integers(2, 6))
def test_gate_monotone_in_n(n, d, k, A, X):
    before = hypothesis_gate(ExperimentParams(n, d, k, A, X))
    after = hypothesis_gate(ExperimentParams(n + 8, d, k, A, X))
    if before.s_at_least_3d:
        assert after.s_at_least_3d
    if before.N_vs_k_quadratic:
        assert after.N_vs_k_quadratic


def test_reduction_chain_range():
    for d in range(17, 21):
        for k in range(1, d + 1):
            assert reduction_chain(24 * d + 1, d, k)["all"]
    assert not reduction_chain(24 * 5 + 1, 5, 5)["all"]
