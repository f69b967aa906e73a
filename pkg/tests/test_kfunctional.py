import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wavedecay import Grid1D, GridFunction, WeightSpec, k_functional_closed, k_functional_inf, star_norm, verify_interpolation, weighted_norm
from wavedecay.errors import DomainCoverageError, InvalidInputError
from wavedecay.experiments import random_test_functions
from wavedecay.kfunctional import (
    H_bound_ratio,
    equivalence_constants,
    halfline_sharp_value,
    halfline_shift_evaluator,
    m_p,
    shift_semigroup_halfline,
)

GRID = Grid1D(-30.0, 30.0, 1201)
FUNCS = random_test_functions(GRID, 6, seed=3)
P_FINITE = [1.0, 2.0, 4.0]


def test_m_p_examples():
    assert m_p(0.5, 1) == 0.5
    for p in (1, 2, 4, math.inf):
        assert m_p(0.0, p) == 0.0
    assert m_p(1.0, 2) == pytest.approx(1 / math.sqrt(2), rel=1e-15)
    assert m_p(1e300, 2) == pytest.approx(1.0)
    with pytest.raises(InvalidInputError):
        m_p(-1.0, 2)


@settings(max_examples=60, deadline=None)
@given(r=st.floats(0, 1e6), p=st.sampled_from([1, 2, 4, math.inf]))
def test_m_p_sandwich(r, p):
    m1 = min(1.0, r)
    mp = m_p(r, p)
    assert m1 <= 2 * mp * (1 + 1e-14)
    assert 2 * mp <= 2 * m1 * (1 + 1e-14)


def test_k_of_zero():
    z = GridFunction.zeros(GRID)
    for p in P_FINITE:
        assert k_functional_closed(z, 0.3, p).value == 0.0
        assert k_functional_inf(z, 0.3, p).value == 0.0


@pytest.mark.parametrize("p", P_FINITE)
def test_closed_equals_infimum(p):
    for u in FUNCS:
        for s in (-2.0, 0.0, 1.5):
            a = k_functional_closed(u, s, p).value
            b = k_functional_inf(u, s, p, method="minimizer").value
            c = k_functional_inf(u, s, p, method="golden").value
            assert abs(a - b) <= 1e-6 * a
            assert abs(b - c) <= 1e-8 * b


def test_infimum_rejects_p_inf():
    with pytest.raises(InvalidInputError):
        k_functional_inf(FUNCS[0], 0.0, math.inf)


@pytest.mark.parametrize("p", [1.0, 2.0, 4.0, math.inf])
def test_k_monotone_and_bounded(p):
    s = np.linspace(-10, 10, 41)
    for u in FUNCS[:3]:
        ks = np.array([k_functional_closed(u, si, p).value for si in s])
        assert np.all(np.diff(ks) >= -1e-14 * ks[-1])
        assert np.all(ks <= weighted_norm(u, p).value * (1 + 1e-12))


def test_k_tends_to_lp_norm_for_compact_support():
    u = GridFunction.from_callable(GRID, lambda x: np.where(np.abs(x) < 2, (4 - x * x) ** 2, 0.0))
    for p in (1.0, 2.0, 4.0):
        assert k_functional_closed(u, 40.0, p).value == pytest.approx(weighted_norm(u, p).value, rel=1e-12)


@pytest.mark.parametrize("p", P_FINITE)
def test_k_sandwich(p):
    x = GRID.x
    for u in FUNCS[:3]:
        for s in (-3.0, 0.0, 2.0):
            kp = k_functional_closed(u, s, p).value ** p
            upper = weighted_norm(GridFunction(GRID, np.abs(u.values) * np.minimum(1.0, np.exp(s + np.abs(x)))), p).value ** p
            assert 2.0**-p * upper <= kp * (1 + 1e-12)
            assert kp <= upper * (1 + 1e-12)


def test_star_norm_zero_and_homogeneous():
    assert star_norm(GridFunction.zeros(GRID), 2, 1.0).value == 0.0
    u = FUNCS[0]
    for p in P_FINITE:
        assert star_norm(2 * u, p, 1.0).value == pytest.approx(2 * star_norm(u, p, 1.0).value, rel=1e-12)


def test_star_norm_equivalent_to_weighted_norm():
    g = Grid1D(-200, 200, 4001)
    fam = [GridFunction(g, (1 + np.abs(g.x)) ** -a) for a in (2.0, 2.5, 3.0, 4.0)]
    lo, hi = equivalence_constants(fam, 2, 1.0)
    assert 0 < lo <= hi < 2 * lo
    lo1, hi1 = equivalence_constants(fam, 1, 0.5)
    assert 0 < lo1 <= hi1 < 2 * lo1


def test_tail_function_bound():
    s = np.linspace(-20, 20, 81)
    t = np.linspace(0, 50, 51)
    for p in (1.0, 2.0, 4.0):
        assert H_bound_ratio(3.0, 1.5, p, s, t) < 5.0
        assert H_bound_ratio(2.0, 1.0, p, s, t) < 5.0


HALF = Grid1D(-2000.0, 0.0, 20001)


def test_shift_identity_and_coverage():
    v = GridFunction(HALF, np.exp(HALF.x / 5))
    assert shift_semigroup_halfline(v, 0.0) is v
    w = GridFunction(HALF, (1 - HALF.x) ** -1.0)
    with pytest.raises(DomainCoverageError):
        shift_semigroup_halfline(w, 3.0)
    with pytest.raises(InvalidInputError):
        shift_semigroup_halfline(v, -1.0)


@pytest.mark.parametrize("p", [1.0, 2.0, math.inf])
def test_shift_contracts_exponential_weight(p):
    v = lambda x: np.exp(x)  # noqa: E731
    g = Grid1D(-40.0, 0.0, 4001)
    base = weighted_norm(GridFunction(g, v(g.x)), p, WeightSpec.exponential(1.0)).value
    for t in (0.5, 2.0, 7.0):
        val = weighted_norm(shift_semigroup_halfline(v, t, g), p, WeightSpec.exponential(1.0)).value
        assert val <= math.exp(-t) * base * (1 + 1e-12)


def test_shift_sharp_oracle():
    k, l = 3.0, 1.5
    v = lambda x: (1.0 - x) ** -k  # noqa: E731
    g = Grid1D(-4000.0, 0.0, 200001)
    t = np.geomspace(1, 1000, 13)
    scaled = np.array([weighted_norm(shift_semigroup_halfline(v, ti, g), math.inf, WeightSpec.polynomial(l)).value for ti in t])
    scaled *= (1 + t) ** (k - l)
    oracle = np.array([halfline_sharp_value(ti, k, l) for ti in t]) * (1 + t) ** (k - l)
    np.testing.assert_allclose(scaled, oracle, rtol=1e-4)
    assert scaled.max() / scaled.min() < 4.0


def _tolerant_shift(v, ts):
    return [shift_semigroup_halfline(v, t, tol=1e-8) for t in ts]


def test_verify_interpolation_halfline():
    v = GridFunction(HALF, (1 - HALF.x) ** -3.0)
    probe = GridFunction(HALF, np.exp(2 * HALF.x))
    rep = verify_interpolation(_tolerant_shift, 3, 1.5, [v], np.geomspace(1, 100, 15), bound=4, probe=probe)
    assert rep.passed
    assert rep.min_ratio > 0.1
    assert rep.precondition["probe_rate"] > 1.0
    t0 = verify_interpolation(_tolerant_shift, 3, 1.5, [v], [0.0, 1.0], bound=4)
    assert t0.ratios[0] <= 1.0 + 1e-12


def test_verify_interpolation_reports_precondition_failure():
    v = GridFunction(HALF, (1 - HALF.x) ** -3.0)

    def growing(u, ts):
        return [u * math.exp(t) for t in ts]

    rep = verify_interpolation(growing, 3, 1.5, [v], [0.0, 1.0, 5.0])
    assert rep.status == "precondition-violated"


def test_verify_interpolation_writes_tables(tmp_path):
    v = GridFunction(HALF, (1 - HALF.x) ** -3.0)
    rep = verify_interpolation(_tolerant_shift, 3, 1.5, [v], [1.0, 10.0], bound=4)
    rep.write(tmp_path)
    assert (tmp_path / "interpolation.csv").read_text().splitlines()[0] == "t,norm_ratio,pass"
    assert (tmp_path / "interpolation.json").exists()


def test_halfline_evaluator_matches_shift():
    v = GridFunction(Grid1D(-100, 0, 1001), np.exp(Grid1D(-100, 0, 1001).x))
    outs = halfline_shift_evaluator(v, [0.0, 1.0])
    assert outs[0] is v
    assert outs[1].values[-1] == pytest.approx(math.exp(-1.0), rel=1e-6)
