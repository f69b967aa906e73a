import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wavedecay import FluxSpec, Grid1D, construct_burgers_profile, construct_kdvb_profile
from wavedecay.errors import DegenerateProfileError, InvalidInputError, NoMonotoneProfileError
from wavedecay.profiles import (
    _five_point,
    fkpp_reduction,
    fkpp_residual,
    kdvb_threshold,
    load_profile,
    normalize_problem,
    profile_residual,
    save_profile,
)

from conftest import logistic


def test_normalize_already_normalized_is_identity():
    f = FluxSpec.burgers_quadratic()
    g, rec = normalize_problem(f, 1.0, 0.0)
    assert g is f
    assert rec.is_identity


def test_normalize_removes_chord_speed():
    g, rec = normalize_problem(FluxSpec.polynomial([0, 0, 1]), 1.0, 0.0)
    assert rec.frame_speed == pytest.approx(1.0)
    assert g.coeffs == pytest.approx((0.0, -1.0, 1.0))


def test_normalize_rescaled_end_states():
    f = FluxSpec.polynomial([0, 0, 0.5])
    g, rec = normalize_problem(f, 2.0, 0.0)
    assert g(0.0) == pytest.approx(0.0, abs=1e-15)
    assert g(1.0) == pytest.approx(0.0, abs=1e-15)
    assert rec.scale == 2.0


def test_normalization_inverse_reproduces_original_profile():
    # u_t + (u^2/2)_x = u_xx with end states (2, 0) travels at speed 1 with
    # profile u(x) = 1 - tanh(x/2) = 2 logistic(x).
    f = FluxSpec.polynomial([0, 0, 0.5])
    g, rec = normalize_problem(f, 2.0, 0.0)
    prof = construct_burgers_profile(g, Grid1D(-30, 30, 601))
    original = rec.to_original(prof.phi.values)
    assert np.max(np.abs(original - (1.0 - np.tanh(prof.grid.x / 2)))) < 1e-10
    assert rec.frame_speed == pytest.approx(1.0)
    np.testing.assert_allclose(rec.from_original(original), prof.phi.values, atol=1e-15)


def test_normalize_degenerate():
    with pytest.raises(DegenerateProfileError):
        normalize_problem(FluxSpec.burgers_quadratic(), 1.0, 1.0)


@settings(max_examples=30, deadline=None)
@given(
    coeffs=st.lists(st.floats(-3, 3), min_size=2, max_size=4),
    lo=st.floats(-2, 2),
    jump=st.floats(0.2, 3),
)
def test_normalization_idempotent(coeffs, lo, jump):
    g, _ = normalize_problem(FluxSpec.polynomial(coeffs), lo + jump, lo)
    assert abs(g(0.0)) < 1e-9 and abs(g(1.0)) < 1e-9
    g2, rec2 = normalize_problem(g, 1.0, 0.0)
    # g is normalized only up to round-off, so the second pass is the identity up to round-off
    assert (rec2.scale, rec2.offset) == (1.0, 0.0)
    assert abs(rec2.frame_speed) < 1e-12 and abs(rec2.linear_const) < 1e-12
    np.testing.assert_allclose(np.pad(g2.coeffs, (0, 5))[:5], np.pad(g.coeffs, (0, 5))[:5], atol=1e-12)


@settings(max_examples=25, deadline=None)
@given(coeffs=st.lists(st.floats(-3, 3), min_size=1, max_size=5), r=st.floats(-2, 2))
def test_flux_derivatives_match_differences(coeffs, r):
    f = FluxSpec.polynomial(coeffs)
    h = 1e-4
    assert f.d1(r) == pytest.approx((f(r + h) - f(r - h)) / (2 * h), abs=1e-6)
    assert f.d2(r) == pytest.approx((f.d1(r + h) - f.d1(r - h)) / (2 * h), abs=1e-6)


def test_fkpp_reduction_examples():
    f, slope = fkpp_reduction(FluxSpec.polynomial([0, 0, 1]), 1.0, 1.0)
    assert f.coeffs[:3] == pytest.approx((0.0, 1.0, -1.0))
    assert slope == pytest.approx(1.0)
    rng = np.random.default_rng(0)
    for _ in range(5):
        g = FluxSpec.polynomial(rng.uniform(-2, 2, 4))
        f, _ = fkpp_reduction(g, rng.uniform(-1, 1), rng.uniform(0.5, 2))
        assert f(0.0) == 0.0


def test_fkpp_reduction_concave_for_convex_g():
    g = FluxSpec.polynomial([0.3, -1.0, 2.0, 0.5])
    r = np.linspace(0, 1, 101)
    phi_minus = 1.0
    f, _ = fkpp_reduction(g, 0.2, phi_minus)
    np.testing.assert_allclose(f.d2(r), -g.d2(phi_minus - r), atol=1e-12)
    assert np.all(g.d2(phi_minus - r) > 0)
    assert np.all(f.d2(r) < 0)


def test_burgers_profile_is_logistic():
    prof = construct_burgers_profile(FluxSpec.burgers_quadratic(), Grid1D(-20, 20, 4001))
    assert np.max(np.abs(prof.phi.values - logistic(prof.grid.x))) <= 1e-8
    i0 = int(np.argmin(np.abs(prof.grid.x)))
    assert prof.phi.values[i0] == 0.5


def test_burgers_sign_condition():
    f = FluxSpec.polynomial([0, 0.5, -1.5, 1.0])  # r (r - 1)(r - 1/2)
    with pytest.raises(NoMonotoneProfileError) as info:
        construct_burgers_profile(f, Grid1D(-10, 10, 101))
    assert 0 < info.value.point < 0.5


def test_burgers_needs_normalized_flux():
    with pytest.raises(InvalidInputError, match="normalize"):
        construct_burgers_profile(FluxSpec.polynomial([0, 0, 1]), Grid1D(-10, 10, 101))


def _strictly_decreasing(profile):
    # finite differences < 0 wherever phi is not yet saturated at 1 in double precision
    v = profile.phi.values
    resolved = 1.0 - v[1:] > 1e-12
    return bool(np.all(np.diff(v)[resolved] < 0) and np.all(np.diff(v) <= 0) and resolved.mean() > 0.6)


def test_burgers_profile_properties(burgers_profile):
    v = burgers_profile.phi.values
    assert _strictly_decreasing(burgers_profile)
    assert abs(v[0] - 1) + abs(v[-1]) <= 1e-6
    assert np.max(np.abs(profile_residual(burgers_profile))) <= 1e-6


@pytest.fixture(scope="module")
def fine_kdvb(kdvb_flux):
    # the third-derivative stencil is second order, so the residual check needs dx ~ 2e-3
    return construct_kdvb_profile(kdvb_flux, 3.0, Grid1D(-20, 20, 20001))


def test_kdvb_profile_is_logistic(fine_kdvb):
    assert np.max(np.abs(fine_kdvb.phi.values - logistic(fine_kdvb.grid.x))) <= 1e-6
    assert np.max(np.abs(profile_residual(fine_kdvb))) <= 1e-6


def test_kdvb_profile_properties(kdvb_profile, fine_kdvb):
    v = kdvb_profile.phi.values
    assert _strictly_decreasing(kdvb_profile)
    assert abs(v[0] - 1) + abs(v[-1]) <= 1e-6
    assert np.max(np.abs(fkpp_residual(fine_kdvb))) <= 1e-6


def test_kdvb_threshold_rejection():
    g = FluxSpec.kdvb_cubic(2.0)
    assert kdvb_threshold(g) == pytest.approx(2 * math.sqrt(2))
    with pytest.raises(NoMonotoneProfileError) as info:
        construct_kdvb_profile(g, 1.0, Grid1D(-40, 40, 801))
    assert info.value.threshold == pytest.approx(2 * math.sqrt(2))


def test_kdvb_other_alpha_satisfies_equation():
    prof = construct_kdvb_profile(FluxSpec.kdvb_cubic(2.0), 4.0, Grid1D(-30, 30, 30001))
    assert _strictly_decreasing(prof)
    assert np.max(np.abs(profile_residual(prof))) <= 1e-6
    assert np.max(np.abs(fkpp_residual(prof))) <= 1e-6


def test_kdvb_shift_matches_translated_logistic(kdvb_profile):
    moved = kdvb_profile.shifted(1.5)
    assert np.max(np.abs(moved.phi.values - logistic(moved.grid.x - 1.5))) <= 1e-6


def test_five_point_stencils_fourth_order():
    errs = []
    for n in (101, 201):
        x = np.linspace(0, 2, n)
        d1, d2, _ = _five_point(np.sin(x), x[1] - x[0])
        errs.append(max(np.max(np.abs(d1 - np.cos(x[2:-2]))), np.max(np.abs(d2 + np.sin(x[2:-2])))))
    assert errs[0] / errs[1] > 12


def test_profile_round_trip(tmp_path, kdvb_profile):
    csv_path, json_path = save_profile(kdvb_profile, tmp_path / "prof")
    back = load_profile(tmp_path / "prof")
    assert np.array_equal(back.phi.values, kdvb_profile.phi.values)
    assert back.alpha == 3.0 and back.family == "kdvb"
    assert back.flux == kdvb_profile.flux
