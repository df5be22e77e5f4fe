import math

import numpy as np
import pytest
from hypothesis import example, given, strategies as st

from screensig.coefficients import Piece, PiecewiseField, SurfaceCoefficients
from screensig.errors import AdmissibilityError, DomainError

PI = math.pi


def test_unit_coefficients_admissible():
    rep = SurfaceCoefficients.constant(PI, 1, 1, 1, 0).validate()
    assert rep.inf_abs_alpha == 1 and rep.inf_mu == 1 and rep.sup_im_beta == 0


def test_vanishing_mu_rejected():
    mu = PiecewiseField.from_list([{"s0": 0, "s1": 1, "value": 1.0},
                                   {"s0": 1, "s1": PI, "value": 0.0}])
    one = PiecewiseField.constant(1.0, PI)
    c = SurfaceCoefficients(one, mu, one, PiecewiseField.constant(0.0, PI))
    with pytest.raises(AdmissibilityError, match="inf mu = 0"):
        c.validate()


def test_gaining_beta_rejected():
    # beta = 1 + 0.5i at k = 1 means beta_i = 0.5
    c = SurfaceCoefficients.constant(PI, beta_r=1.0, beta_i=0.5)
    assert c.evaluate(1.0, 1.0)[2] == pytest.approx(1 + 0.5j)
    with pytest.raises(AdmissibilityError, match="Im beta"):
        c.validate()


def test_zero_alpha_rejected():
    with pytest.raises(AdmissibilityError, match="alpha"):
        SurfaceCoefficients.constant(PI, alpha=0.0).validate()


def test_left_limit_at_breakpoint():
    mu = PiecewiseField.from_list([{"s0": 0, "s1": PI / 2, "value": 1.0},
                                   {"s0": PI / 2, "s1": PI, "value": 2.0}])
    assert mu(PI / 2) == 1.0
    assert mu(PI / 2 + 1e-9) == 2.0
    assert mu(0.0) == 1.0 and mu(PI) == 2.0


def test_constant_fields_at_random_points():
    c = SurfaceCoefficients.constant(PI, 0.5, 2.0, -3.0, -1.0)
    s = np.random.default_rng(0).uniform(0, PI, 100)
    a, m, b = c.evaluate(s, 2.0)
    assert np.all(a == 0.5) and np.all(m == 2.0) and np.allclose(b, -3.0 - 0.5j)


def test_outside_arc_is_domain_error():
    c = SurfaceCoefficients.constant(PI)
    with pytest.raises(DomainError):
        c.evaluate(PI + 0.1, 1.0)
    with pytest.raises(DomainError):
        c.evaluate(-0.1, 1.0)


def test_damage_patch_exact():
    c = SurfaceCoefficients.constant(PI, beta_r=-4.0, beta_i=-1.0)
    d = c.patched("beta", PI / 3, 2 * PI / 3, 1.25)
    s = np.linspace(0, PI, 1001)
    inside = (s > PI / 3) & (s <= 2 * PI / 3)
    _, _, b0 = c.evaluate(s, 2.0)
    _, _, b1 = d.evaluate(s, 2.0)
    assert np.array_equal(b1[inside], 1.25 * b0[inside])
    assert np.array_equal(b1[~inside], b0[~inside])
    # alpha and mu untouched
    assert d.alpha == c.alpha and d.mu == c.mu


def test_linear_piece():
    f = PiecewiseField.from_list([{"s0": 0, "s1": 2, "value": [1.0, 3.0]}])
    assert f(1.0) == pytest.approx(2.0)
    assert f.bounds()[1:3] == (1.0, 3.0)


def test_pieces_must_tile():
    with pytest.raises(ValueError):
        PiecewiseField([Piece(0, 1, 1, 1), Piece(1.5, 2, 1, 1)])


pieces = st.lists(st.tuples(st.floats(0.05, 1.0), st.floats(-3, 3), st.floats(-3, 3),
                            st.booleans()), min_size=1, max_size=6)


def _field(spec):
    s, out = 0.0, []
    for ln, v0, v1, linear in spec:
        out.append({"s0": s, "s1": s + ln, "value": [v0, v1] if linear else v0})
        s += ln
    return PiecewiseField.from_list(out)


@given(pieces)
def test_round_trip(spec):
    f = _field(spec)
    g = PiecewiseField.from_list(f.to_list())
    assert g == f
    c = SurfaceCoefficients(f, f, f, f)
    assert SurfaceCoefficients.from_dict(c.to_dict()) == c


@given(pieces)
@example([(1.0, 1e-241, 0.0, True)])  # slope whose square underflows
def test_bounds_match_brute_force(spec):
    f = _field(spec)
    s = np.linspace(0, f.length, 10_000)
    v = f(s)
    inf_abs, lo, hi, _, _ = f.bounds()
    assert lo <= v.min() + 1e-12 and hi >= v.max() - 1e-12
    # endpoints and zero crossings are sampled up to the grid spacing
    slope = max(abs(p.v1 - p.v0) / (p.s1 - p.s0) for p in f.pieces)
    gap = slope * f.length / 9_999
    assert v.min() - lo <= gap + 1e-12 and hi - v.max() <= gap + 1e-12
    assert inf_abs <= np.abs(v).min() + 1e-12
    assert np.abs(v).min() - inf_abs <= gap + 1e-12


@given(st.floats(0.1, 5), st.floats(0.1, 5), st.floats(-5, 5), st.floats(-5, 0))
def test_validate_reports_bounds(alpha, mu, br, bi):
    rep = SurfaceCoefficients.constant(PI, alpha, mu, br, bi).validate()
    assert rep.inf_abs_alpha == pytest.approx(alpha)
    assert rep.inf_mu == pytest.approx(mu)
    assert rep.sup_im_beta == pytest.approx(bi)
