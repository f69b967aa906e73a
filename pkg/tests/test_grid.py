import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from wavedecay import Grid1D, GridFunction, WeightSpec, antiderivative, compute_shift, weighted_norm
from wavedecay.errors import DegenerateProfileError, InvalidInputError, NormOverflowError
from wavedecay.grid import derivative, integrate, read_csv, write_csv

from conftest import logistic

P_VALUES = [1, 2, 4, math.inf]
WEIGHTS = [WeightSpec.none(), WeightSpec.polynomial(2.0), WeightSpec.exponential(0.5)]


def test_grid_invariants():
    g = Grid1D(-1.0, 1.0, 5)
    assert g.dx == 0.5
    np.testing.assert_allclose(g.x, [-1.0, -0.5, 0.0, 0.5, 1.0])
    with pytest.raises(InvalidInputError):
        Grid1D(1.0, -1.0, 5)
    with pytest.raises(InvalidInputError):
        Grid1D(0.0, 1.0, 2)


def test_grid_function_rejects_nonfinite():
    g = Grid1D(0.0, 1.0, 4)
    with pytest.raises(InvalidInputError, match="index 2"):
        GridFunction(g, [0.0, 1.0, np.nan, 2.0])
    with pytest.raises(InvalidInputError):
        GridFunction(g, [0.0, 1.0])


def test_weight_spec_validation():
    with pytest.raises(InvalidInputError):
        WeightSpec("polynomial")
    with pytest.raises(InvalidInputError):
        WeightSpec.exponential(-1.0)
    assert np.all(WeightSpec.polynomial(1.5)(np.linspace(-5, 5, 11)) >= 1.0)


@pytest.mark.parametrize("p", P_VALUES)
@pytest.mark.parametrize("w", WEIGHTS)
def test_zero_function_has_zero_norm(p, w):
    assert weighted_norm(GridFunction.zeros(Grid1D(-10, 10, 101)), p, w).value == 0.0


def test_weight_cancels_integrand():
    f = GridFunction.from_callable(Grid1D(-30, 30, 601), lambda x: (1 + np.abs(x)) ** -2.0)
    assert weighted_norm(f, math.inf, WeightSpec.polynomial(2)).value == pytest.approx(1.0, abs=1e-14)


def test_l1_norm_of_two_sided_exponential():
    f = GridFunction.from_callable(Grid1D(-40, 40, 80001), lambda x: np.exp(-np.abs(x)))
    assert abs(weighted_norm(f, 1).value - 2.0 * (1.0 - math.exp(-40.0))) < 1e-6


def test_exponential_weight_in_log_space_does_not_overflow():
    g = Grid1D(-800, 800, 1601)
    f = GridFunction.from_callable(g, lambda x: np.exp(-1.5 * np.abs(x)))
    val = weighted_norm(f, math.inf, WeightSpec.exponential(1.0)).value
    assert val == pytest.approx(1.0)
    with pytest.raises(NormOverflowError) as info:
        weighted_norm(GridFunction(g, np.ones(g.n)), 2, WeightSpec.exponential(1.0))
    assert abs(info.value.x) == pytest.approx(800.0)


def test_truncation_tail_is_reported():
    f = GridFunction.from_callable(Grid1D(-10, 10, 201), lambda x: (1 + x * x) ** -1.0)
    nv = weighted_norm(f, 2, WeightSpec.polynomial(1.0))
    assert nv.tail > 0


def test_antiderivative_of_zero():
    out = antiderivative(GridFunction.zeros(Grid1D(-1, 1, 11)))
    assert np.all(out.values == 0)


def test_antiderivative_matches_gaussian():
    g = Grid1D(-10.0, 10.0, 2001)
    f = GridFunction.from_callable(g, lambda x: -2 * x * np.exp(-x * x))
    psi = antiderivative(f)
    assert np.max(np.abs(psi.values - np.exp(-g.x**2))) <= 1e-8
    # independent adaptive-quadrature oracle at a few points
    for xi in (-1.3, 0.0, 0.7, 2.2):
        i = int(round((xi - g.xmin) / g.dx))
        ref = quad(lambda s: -2 * s * np.exp(-s * s), g.xmin, g.x[i], epsabs=1e-13)[0]
        assert abs(psi.values[i] - ref) <= 1e-8


def test_antiderivative_of_profile_derivative(burgers_profile):
    phi = burgers_profile
    dphi = GridFunction(phi.grid, phi.derivative_values())
    psi = antiderivative(dphi)
    assert np.max(np.abs(psi.values - (phi.phi.values - phi.phi.values[0]))) < 1e-6
    assert np.max(np.abs(psi.values - (phi.phi.values - 1.0))) < 1e-6


def test_antiderivative_warns_without_left_decay():
    with pytest.warns(RuntimeWarning, match="left boundary"):
        antiderivative(GridFunction(Grid1D(0, 1, 11), np.ones(11)))


def test_antiderivative_then_difference_is_second_order():
    errs = []
    for n in (501, 1001):
        g = Grid1D(-10, 10, n)
        f = GridFunction.from_callable(g, lambda x: np.cos(x) * np.exp(-x * x / 4))
        back = derivative(antiderivative(f))
        errs.append(np.max(np.abs(back.values - f.values)[5:-5]))
    assert errs[1] < errs[0] / 3.0


def test_shift_examples(burgers_profile):
    g = burgers_profile.grid
    assert compute_shift(burgers_profile.phi, burgers_profile) == pytest.approx(0.0, abs=1e-14)
    shifted = GridFunction(g, logistic(g.x - 2.0))
    assert abs(compute_shift(shifted, burgers_profile) - 2.0) < 1e-6
    bump = GridFunction.from_callable(g, lambda x: -2 * x * np.exp(-x * x))
    assert abs(compute_shift(burgers_profile.phi + bump, burgers_profile)) < 1e-12


def test_reshift_gives_zero_mass(burgers_profile):
    g = burgers_profile.grid
    u0 = burgers_profile.phi + GridFunction.from_callable(g, lambda x: 0.3 * np.exp(-((x - 1) ** 2)))
    h = compute_shift(u0, burgers_profile)
    residual = integrate(u0 - burgers_profile.shifted(h).phi)
    assert abs(residual) < 1e-8


def test_shift_degenerate_profile(burgers_profile):
    from dataclasses import replace

    flat = replace(burgers_profile, phi_plus=burgers_profile.phi_minus)
    with pytest.raises(DegenerateProfileError):
        compute_shift(burgers_profile.phi, flat)


def test_csv_round_trip_is_bit_exact(tmp_path):
    rng = np.random.default_rng(1)
    g = Grid1D(-3.0, 5.0, 33)
    f = GridFunction(g, rng.standard_normal(g.n) * 10.0 ** rng.integers(-30, 30, g.n))
    write_csv(f, tmp_path / "f.csv")
    back = read_csv(tmp_path / "f.csv")
    assert back.grid == g
    assert np.array_equal(back.values, f.values)
    assert (tmp_path / "f.csv").read_text().splitlines()[0] == "x,value"


finite = st.floats(-1e3, 1e3, allow_nan=False)
GRID = Grid1D(-20.0, 20.0, 161)


def _random_fn(seed):
    rng = np.random.default_rng(seed)
    return GridFunction(GRID, rng.standard_normal(GRID.n) * np.exp(-0.05 * GRID.x**2))


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10_000), c=finite, p=st.sampled_from(P_VALUES), wi=st.integers(0, 2))
def test_norm_homogeneity(seed, c, p, wi):
    f = _random_fn(seed)
    a = weighted_norm(c * f, p, WEIGHTS[wi]).value
    b = abs(c) * weighted_norm(f, p, WEIGHTS[wi]).value
    assert a == pytest.approx(b, rel=1e-12, abs=1e-300)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10_000), k1=st.floats(0, 4), dk=st.floats(0, 4), p=st.sampled_from(P_VALUES))
def test_norm_monotone_in_weight(seed, k1, dk, p):
    f = _random_fn(seed)
    lo = weighted_norm(f, p, WeightSpec.polynomial(k1)).value
    hi = weighted_norm(f, p, WeightSpec.polynomial(k1 + dk)).value
    assert lo <= hi * (1 + 1e-14)


@settings(max_examples=40, deadline=None)
@given(s1=st.integers(0, 10_000), s2=st.integers(0, 10_000), p=st.sampled_from(P_VALUES), wi=st.integers(0, 2))
def test_triangle_inequality(s1, s2, p, wi):
    f, g = _random_fn(s1), _random_fn(s2)
    w = WEIGHTS[wi]
    lhs = weighted_norm(f + g, p, w).value
    rhs = weighted_norm(f, p, w).value + weighted_norm(g, p, w).value
    assert lhs <= rhs * (1 + 1e-12)
