import json
import math
import random
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from circle_forge import ParameterError
from circle_forge.monomial import ExperimentParams, coeffs
from circle_forge.quadrature import (dirichlet_kernel, fejer_hat, fejer_weight, prefactor,
                                     singular_integral_star, singular_integral_star_1d, singular_integral_w,
                                     singular_integral_w_grid, zeta_of)

X_E3 = Fraction(math.exp(3))


def params(n, d, A, X=X_E3):
    return ExperimentParams(n, d, 1, A, X)


def trapezoid(y, dx):
    return dx * (math.fsum(y) - 0.5 * (y[0] + y[-1]))


def test_fejer_weight_examples():
    z = 0.3
    assert fejer_weight(0.0, z) == z
    assert abs(fejer_weight(1 / z, z)) < 1e-15
    assert fejer_weight(1e-9, z) == pytest.approx(z, rel=1e-12)
    with pytest.raises(ParameterError):
        fejer_weight(1.0, 0.0)


@given(st.floats(-1e4, 1e4), st.floats(1e-3, 1.0))
def test_fejer_weight_range(beta, z):
    v = fejer_weight(beta, z)
    assert 0.0 <= v <= z * (1 + 1e-12)


def test_fejer_weight_series_branch_is_continuous():
    z = 0.5
    edge = 1e-4 / (math.pi * z)
    assert fejer_weight(edge * (1 - 1e-9), z) == pytest.approx(fejer_weight(edge * (1 + 1e-9), z), rel=1e-9)


def test_fejer_mass():
    z = zeta_of(params(2, 2, 1))
    beta = np.linspace(-1e6, 1e6, 4_000_001)
    assert abs(trapezoid(fejer_weight(beta, z), beta[1] - beta[0]) - 1) < 1e-3


@pytest.mark.parametrize("frac", [0.0, 0.5, -0.5, 2.0, -2.0])
def test_fourier_pairing(frac):
    z = zeta_of(params(2, 2, 1))
    xi = frac * z
    beta = np.linspace(-1e3 / z, 1e3 / z, 400_001)
    vals = fejer_weight(beta, z) * np.cos(2 * math.pi * beta * xi)
    assert abs(trapezoid(vals, beta[1] - beta[0]) - fejer_hat(xi, z)) < 1e-3


def test_fejer_hat_examples():
    z = 0.2
    assert fejer_hat(0.0, z) == 1
    assert fejer_hat(z, z) == 0 and fejer_hat(-3 * z, z) == 0
    assert fejer_hat(z / 2, z) == pytest.approx(0.5)


def test_zeta_examples():
    p = ExperimentParams(1, 2, 1, 1, Fraction(math.exp(math.e)))
    assert zeta_of(p) == pytest.approx(math.exp(-(4 + 1 / 16)), rel=1e-12)
    assert zeta_of(p) < 1
    w = p.w
    limits = [zeta_of(ExperimentParams(1, d, 1, 1, p.X)) for d in (1, 10, 100, 1000)]
    assert all(x < y for x, y in zip(limits, limits[1:])) and limits[-1] < w**-4
    assert limits[-1] == pytest.approx(w**-4, rel=1e-3)
    with pytest.raises(ParameterError):
        zeta_of(ExperimentParams(1, 2, 1, 1, 2))


def test_star_zero_form_exact():
    p = params(3, 2, 5)
    r = singular_integral_star(coeffs(3, 2, [0] * 6), p)
    assert r.value == pytest.approx(X_E3 ** 1 / 5 / zeta_of(p), rel=1e-12)
    assert r.std_error == 0


@pytest.mark.parametrize("seed", range(4))
def test_star_matches_1d_closed_form(seed):
    rng = random.Random(seed)
    d = rng.randint(1, 4)
    A = rng.choice([100, 1000, 10**4])
    p = params(1, d, A)
    a1 = rng.randint(1, max(1, int(A * zeta_of(p))))
    got = singular_integral_star(coeffs(1, d, [a1]), p, samples=2**14, seed=seed)
    ref = singular_integral_star_1d(a1, p, d)
    assert abs(got.value - ref.value) <= 3 * got.std_error + 1e-12 * ref.value


def test_star_closed_form_past_tent_support():
    # a1 > A zeta: the tent dies at g0 < 1
    p = params(1, 2, 10)
    a1 = 5
    got = singular_integral_star(coeffs(1, 2, [a1]), p, samples=2**14)
    ref = singular_integral_star_1d(a1, p, 2)
    assert abs(got.value - ref.value) <= 3 * got.std_error + 1e-12


def test_star_monotone_in_coefficient():
    p = params(1, 3, 10**4)
    vals = [singular_integral_star_1d(a1, p, 3).value for a1 in range(0, 300, 10)]
    assert all(x >= y for x, y in zip(vals, vals[1:]))
    mc = [singular_integral_star(coeffs(1, 3, [a1]), p, samples=2**12).value for a1 in (1, 50, 150)]
    assert mc[0] >= mc[1] >= mc[2]


def test_star_prefactor_scaling():
    a = coeffs(2, 2, [1, -2, 1])
    one = singular_integral_star(a, params(2, 2, 50), samples=2**12)
    two = singular_integral_star(coeffs(2, 2, [2, -4, 2]), params(2, 2, 100), samples=2**12)
    assert two.value == pytest.approx(one.value / 2, rel=1e-12)


@given(st.lists(st.integers(-50, 50), min_size=3, max_size=3))
def test_star_non_negative(entries):
    r = singular_integral_star(coeffs(2, 2, entries), params(2, 2, 10), samples=2**10, replicates=4)
    assert r.value >= 0


def test_star_deterministic_and_sample_floor():
    a = coeffs(2, 2, [1, 0, -1])
    p = params(2, 2, 10)
    assert singular_integral_star(a, p, samples=2**12, seed=3) == singular_integral_star(a, p, samples=2**12, seed=3)
    with pytest.raises(ParameterError):
        singular_integral_star(a, p, samples=999)


def test_dirichlet_kernel():
    assert dirichlet_kernel(0.0, 2.5) == 5.0
    u = 0.37
    b = np.linspace(-2.5, 2.5, 200_001)
    assert trapezoid(np.cos(2 * math.pi * b * u), b[1] - b[0]) == pytest.approx(dirichlet_kernel(u, 2.5), abs=1e-8)


def test_w_zero_form_exact():
    p = params(2, 3, 4)
    r = singular_integral_w(coeffs(2, 3, [0] * 4), p)
    assert r.value == pytest.approx(2 * p.w * float(X_E3) ** -1 / 4, rel=1e-12)
    assert prefactor(p, 2, 3) == pytest.approx(float(X_E3) ** -1 / 4, rel=1e-12)


@pytest.mark.parametrize("entries,d", [([1], 2), ([3], 3), ([-2], 1)])
def test_w_kernel_vs_grid_1d(entries, d):
    a = coeffs(1, d, entries)
    p = params(1, d, 1)
    kernel = singular_integral_w(a, p)
    grid = singular_integral_w_grid(a, p)
    assert abs(kernel.value - grid.value) <= 1e-3 * abs(grid.value)


def test_w_kernel_vs_grid_2d():
    a = coeffs(2, 2, [1, 0, -1])
    p = params(2, 2, 1)
    kernel = singular_integral_w(a, p)
    grid = singular_integral_w_grid(a, p)
    assert abs(kernel.value - grid.value) <= 1e-3 * abs(grid.value)


def test_w_grid_refuses_high_dimension():
    with pytest.raises(ParameterError):
        singular_integral_w_grid(coeffs(3, 2, [1] * 6), params(3, 2, 1))


def test_result_json_shape():
    r = singular_integral_star(coeffs(1, 2, [1]), params(1, 2, 10), samples=2**10, replicates=4)
    obj = json.loads(r.to_json())
    assert set(obj) == {"value", "std_error", "samples", "method"}
    assert obj["samples"] >= 1000
