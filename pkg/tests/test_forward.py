import math
import warnings

import mpmath
import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.special import hankel1

from screensig import fem, forward
from screensig.coefficients import SurfaceCoefficients
from screensig.detection import point_source_far_field
from screensig.errors import IncompatibilityError, ParameterError
from screensig.forward import (FarFieldMatrix, Incidence, far_field_constant, far_field_matrix,
                               uniform_angles)
from screensig.geometry import ANNULUS, GAMMA_PLUS, REST, build_screen_disk_mesh
from screensig.verify import mie_far_field, reciprocity_defect, unitarity_defect


def coeffs_for(mesh, **kw):
    base = dict(alpha=1.0, mu=1.0, beta_r=-4.0, beta_i=0.0)
    base.update(kw)
    return SurfaceCoefficients.constant(mesh.arc_length, **base)


# ---------------------------------------------------------------------------
# DtN symbol
# ---------------------------------------------------------------------------
def mp_dtn(k, R, n):
    mpmath.mp.dps = 40
    z = mpmath.mpf(k) * R
    h = lambda m: mpmath.besselj(m, z) + 1j * mpmath.bessely(m, z)
    return complex(k * (h(n - 1) - n / z * h(n)) / h(n))


@pytest.mark.parametrize("k,R", [(1.0, 2.0), (2.0, 2.0), (5.0, 1.5)])
def test_dtn_matches_mpmath(k, R):
    got = fem.dtn_symbols(k, R, 40)
    ref = np.array([mp_dtn(k, R, n) for n in range(41)])
    assert np.max(np.abs(got - ref) / np.abs(ref)) < 1e-12


def test_dtn_n0_value():
    # k H0'(kR)/H0(kR) = -k H1/H0
    ref = -hankel1(1, 2.0) / hankel1(0, 2.0)
    assert abs(forward.fem.dtn_symbol(1.0, 2.0, 0) - ref) < 1e-14


@given(st.floats(0.1, 10), st.floats(0.5, 4), st.integers(0, 60))
def test_dtn_symmetric_in_n(k, R, n):
    assert fem.dtn_symbol(k, R, n) == fem.dtn_symbol(k, R, -n)


@pytest.mark.parametrize("k,R", [(1.0, 2.0), (2.0, 2.0), (4.0, 2.0)])
def test_dtn_large_n(k, R):
    n = math.ceil(10 * k * R)
    ratio = fem.dtn_symbol(k, R, n) / (-n / R)
    assert abs(ratio - 1) < 0.02


def test_dtn_stays_finite_for_huge_orders():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        s = fem.dtn_symbols(1e-3, 2.0, 2000)
    assert np.all(np.isfinite(s))
    assert abs(s[-1] / (-2000 / 2.0) - 1) < 1e-3


# ---------------------------------------------------------------------------
# assembly
# ---------------------------------------------------------------------------
def test_no_screen_no_scattering(mesh01):
    F = far_field_matrix(mesh01, None, 2.0, uniform_angles(16))
    assert np.abs(F.data).max() < 1e-8
    sol = forward.assemble_screen_system(mesh01, None, 2.0).solve(Incidence.plane_waves([0.2]))
    assert np.abs(sol.scattered).max() < 1e-8


def test_blocks_complex_symmetric(mesh01):
    sys = forward.assemble_screen_system(mesh01, coeffs_for(mesh01, beta_i=-1.0), 2.0)
    for m in (sys.volume, sys.surface, sys.dtn):
        assert abs(m - m.T).max() < 1e-13 * max(abs(m).max(), 1)
    assert np.iscomplexobj(sys.surface.data)


def test_surface_split_into_jump_and_average(mesh01):
    """alpha only sees jumps, beta only sees averages."""
    k = 2.0
    a = forward._screen_surface_matrix(mesh01, coeffs_for(mesh01, alpha=1.0), k)
    b = forward._screen_surface_matrix(mesh01, coeffs_for(mesh01, alpha=0.25), k)
    c = forward._screen_surface_matrix(mesh01, coeffs_for(mesh01, beta_r=3.0), k)
    dn = mesh01.double_nodes
    rng = np.random.default_rng(1)
    vals = rng.standard_normal(len(dn))
    no_jump = np.zeros(mesh01.n_dofs)
    no_jump[dn[:, 0]] = no_jump[dn[:, 1]] = vals
    no_avg = np.zeros(mesh01.n_dofs)
    no_avg[dn[:, 0]], no_avg[dn[:, 1]] = vals, -vals
    assert np.abs((a - b) @ no_jump).max() < 1e-12
    assert np.abs((a - c) @ no_avg).max() < 1e-12
    assert np.abs((a - b) @ no_avg).max() > 1e-3


def test_zero_incidence_zero_solution(mesh01):
    sys = forward.assemble_screen_system(mesh01, coeffs_for(mesh01), 2.0)
    inc = Incidence(uniform_angles(8), np.zeros((8, 1), dtype=complex))
    assert np.abs(sys.solve(inc).scattered).max() == 0


def test_superposition_and_residual(mesh01):
    sys = forward.assemble_screen_system(mesh01, coeffs_for(mesh01), 2.0)
    angles = uniform_angles(8)
    single = sys.solve(Incidence.plane_waves(angles))
    combo = np.zeros((8, 1), dtype=complex)
    combo[[0, 1], 0] = 1.0
    both = sys.solve(Incidence(angles, combo))
    ref = single.scattered[:, 0] + single.scattered[:, 1]
    assert np.abs(both.scattered[:, 0] - ref).max() < 1e-10 * np.abs(ref).max()
    assert single.residual < 1e-10


def test_tips_carry_zero_total_field(mesh01):
    sol = forward.assemble_screen_system(mesh01, coeffs_for(mesh01), 2.0).solve(
        Incidence.plane_waves(uniform_angles(8)))
    assert np.abs(sol.total()[mesh01.tips]).max() < 1e-12


def test_self_convergence_outer_trace():
    k = 2.0
    traces = []
    for h in (0.1, 0.05, 0.025):
        m = build_screen_disk_mesh(target_h=h)
        sol = forward.assemble_screen_system(m, coeffs_for(m), k).solve(
            Incidence.plane_waves([0.7]))
        traces.append(sol.outer_modes()[1][:, 0])
    # Fourier coefficients: L2 norm on |x| = R up to 2 pi R
    d1 = np.linalg.norm(traces[0] - traces[1])
    d2 = np.linalg.norm(traces[1] - traces[2])
    assert d1 / d2 >= 3


def test_dtn_truncation_stable(mesh01):
    c = coeffs_for(mesh01)
    n0 = forward.default_n_modes(2.0, 2.0)
    a = far_field_matrix(mesh01, c, 2.0, uniform_angles(8), n_modes=n0).data
    b = far_field_matrix(mesh01, c, 2.0, uniform_angles(8), n_modes=n0 + 10).data
    assert np.abs(a - b).max() / np.abs(a).max() < 1e-6


def test_doubling_directions_keeps_columns(mesh01):
    c = coeffs_for(mesh01)
    a = far_field_matrix(mesh01, c, 2.0, uniform_angles(16)).data
    b = far_field_matrix(mesh01, c, 2.0, uniform_angles(32)).data
    assert np.abs(b[::2, ::2] - a).max() < 1e-10 * np.abs(a).max()


def test_at_least_eight_directions(mesh01):
    with pytest.raises(ParameterError):
        far_field_matrix(mesh01, coeffs_for(mesh01), 2.0, uniform_angles(7))


# ---------------------------------------------------------------------------
# far field
# ---------------------------------------------------------------------------
def point_source_on_circle(z, k, r, m=256):
    t = 2 * math.pi * np.arange(m) / m
    y = r * np.stack([np.cos(t), np.sin(t)], axis=1)
    d = y - z
    rho = np.linalg.norm(d, axis=1)
    u = 0.25j * hankel1(0, k * rho)
    grad = (-0.25j * k * hankel1(1, k * rho) / rho)[:, None] * d
    return u, np.einsum("ij,ij->i", grad, y / r)


def test_far_field_constant_from_hankel_asymptotics():
    k, r = 2.0, 1e6
    # (i/4) H0(kr) sqrt(r) e^{-ikr} -> C2
    fit = 0.25j * hankel1(0, k * r) * math.sqrt(r) * np.exp(-1j * k * r)
    assert abs(fit - far_field_constant(k)) < 1e-6


def test_point_source_at_origin_is_isotropic():
    k = 2.0
    u, du = point_source_on_circle(np.zeros(2), k, 1.5)
    ff = forward.far_field_from_circle(u, du, 1.5, k, uniform_angles(24))
    assert np.ptp(np.abs(ff)) / np.abs(ff).max() < 1e-6


@pytest.mark.parametrize("z", [(0.3, 0.0), (-0.2, 0.45), (0.0, -0.6)])
def test_green_route_matches_point_source_formula(z):
    k = 2.0
    z = np.array(z)
    u, du = point_source_on_circle(z, k, 1.5)
    obs = uniform_angles(24)
    ff = forward.far_field_from_circle(u, du, 1.5, k, obs)
    ref = point_source_far_field(z, obs, k)
    assert np.abs(ff - ref).max() < 1e-6 * np.abs(ref).max()


def test_phase_slope_from_large_r_fit():
    k, r = 2.0, 1e3
    z = np.array([0.3, 0.0])
    obs = uniform_angles(36)
    x = r * np.stack([np.cos(obs), np.sin(obs)], axis=1)
    fit = 0.25j * hankel1(0, k * np.linalg.norm(x - z, axis=1)) * math.sqrt(r) * np.exp(-1j * k * r)
    phase = np.unwrap(np.angle(fit / far_field_constant(k)))
    assert np.abs(phase - (-k * 0.3 * np.cos(obs))).max() < 1e-4


def test_green_and_series_paths_agree(mesh005):
    sol = forward.assemble_screen_system(mesh005, coeffs_for(mesh005), 2.0).solve(
        Incidence.plane_waves([0.3, 2.0]))
    obs = uniform_angles(20)
    a, b = sol.far_field(obs), sol.far_field_series(obs)
    assert np.abs(a - b).max() < 1e-8 * np.abs(a).max()
    assert np.abs(sol.far_field(obs, r_ff=1.2) - a).max() < 1e-8 * np.abs(a).max()


@pytest.mark.parametrize("r", [1.0, 0.5, 2.0, 2.5])
def test_far_field_radius_checked(mesh01, r):
    sol = forward.assemble_screen_system(mesh01, coeffs_for(mesh01), 2.0).solve(
        Incidence.plane_waves([0.3]))
    with pytest.raises(ParameterError):
        sol.far_field(uniform_angles(8), r_ff=r)


def test_reciprocity_and_unitarity(mesh005):
    F = far_field_matrix(mesh005, coeffs_for(mesh005), 2.0, uniform_angles(16))
    assert reciprocity_defect(F) < 1e-2
    assert unitarity_defect(F) < 1e-2


def test_absorbing_screen_contracts(mesh005):
    F = far_field_matrix(mesh005, coeffs_for(mesh005, beta_i=-2.0), 2.0, uniform_angles(16))
    ev = np.abs(np.linalg.eigvals(forward.scattering_operator(F)))
    assert np.all(ev < 1 + 1e-2) and ev.min() < 0.99


def test_scattering_operator_needs_full_aperture(mesh01):
    F = far_field_matrix(mesh01, coeffs_for(mesh01), 2.0, uniform_angles(8, 0, math.pi))
    with pytest.raises(ParameterError):
        forward.scattering_operator(F)


# ---------------------------------------------------------------------------
# auxiliary problem
# ---------------------------------------------------------------------------
def test_mie_sound_soft_disk():
    m = build_screen_disk_mesh(arc=(0, 2 * math.pi), target_h=0.05, closed=True)
    obs = uniform_angles(16)
    sol = forward.solve_auxiliary(m, 1.0, 0.0, [0.3])
    ref = mie_far_field(1.0, obs, 0.3)
    assert np.abs(sol.far_field(obs)[:, 0] - ref).max() / np.abs(ref).max() < 1e-3


def test_mie_oracle_against_mpmath():
    k, obs = 1.0, np.array([0.0, 1.0, 2.5])
    mpmath.mp.dps = 30
    ref = []
    for t in obs:
        s = 0
        for n in range(-40, 41):
            h = mpmath.besselj(n, k) + 1j * mpmath.bessely(n, k)
            s += mpmath.besselj(n, k) / h * mpmath.exp(1j * n * (t - 0.3))
        ref.append(complex(-mpmath.sqrt(2 / (mpmath.pi * k)) * mpmath.exp(-1j * mpmath.pi / 4) * s))
    assert np.abs(mie_far_field(k, obs, 0.3) - np.array(ref)).max() < 1e-12


def test_aux_trace_vanishes_on_screen(mesh01):
    sol = forward.solve_auxiliary(mesh01, 2.0, 1.5, uniform_angles(8))
    gp = mesh01.boundary_dofs(GAMMA_PLUS)
    assert np.abs(sol.total()[gp]).max() == 0


def test_aux_lambda_dependence(mesh01, closed01):
    inc = uniform_angles(8)
    a = forward.aux_far_field_matrix(mesh01, 2.0, 0.0, inc).data
    b = forward.aux_far_field_matrix(mesh01, 2.0, 1.0, inc).data
    assert np.abs(a - b).max() > 1e-3
    c = forward.aux_far_field_matrix(closed01, 2.0, 0.0, inc).data
    d = forward.aux_far_field_matrix(closed01, 2.0, 3.0 + 1.0j, inc).data
    assert np.array_equal(c, d)


def test_aux_reciprocity(mesh005):
    F = forward.aux_far_field_matrix(mesh005, 2.0, 0.7, uniform_angles(16))
    assert reciprocity_defect(F) < 1e-2


def test_aux_rejects_lower_half_plane(mesh01):
    with pytest.raises(ParameterError):
        forward.solve_auxiliary(mesh01, 2.0, 1.0 - 0.1j, [0.0])


def robin_residual(mesh, sol, lam):
    """int over dD minus Gamma of |d_nu h + lam h|^2 from the annulus side."""
    tot = sol.total()[:, 0]
    tris = mesh.triangles[mesh.regions == ANNULUS]
    owner = {}
    for t in tris:
        for a, b in ((t[0], t[1]), (t[1], t[2]), (t[2], t[0])):
            owner[(min(a, b), max(a, b))] = t
    e = mesh.edges_with(REST)
    ell, _, nrm = fem.edge_geometry(mesh.vertices, e)
    out = 0.0
    for (a, b), l, n in zip(e, ell, nrm):
        t = owner[(min(a, b), max(a, b))]
        p = mesh.vertices[t]
        jac = np.array([p[1] - p[0], p[2] - p[0]]).T
        grad = np.linalg.solve(jac.T, [tot[t[1]] - tot[t[0]], tot[t[2]] - tot[t[0]]])
        g = grad @ n
        for x, w in zip(*fem.GAUSS3):
            out += w * l * abs(g + lam * ((1 - x) * tot[a] + x * tot[b])) ** 2
    return out


def test_robin_residual_decreases():
    lam = 0.8
    res = []
    for h in (0.1, 0.05, 0.025):
        m = build_screen_disk_mesh(target_h=h)
        res.append(robin_residual(m, forward.solve_auxiliary(m, 2.0, lam, [0.4]), lam))
    assert res[0] > res[1] > res[2]


# ---------------------------------------------------------------------------
# FarFieldMatrix
# ---------------------------------------------------------------------------
def test_far_field_file_round_trip(tmp_path, mesh01):
    F = forward.aux_far_field_matrix(mesh01, 2.0, 0.5 + 0.25j, uniform_angles(8))
    F.save(tmp_path / "f.json")
    G = FarFieldMatrix.load(tmp_path / "f.json")
    assert np.array_equal(F.data, G.data) and G.lam == F.lam and G.kind == "F_lambda"
    assert (tmp_path / "f.csv").read_text().startswith("i,j,re,im\n")


def test_direction_lists_validated():
    with pytest.raises(ParameterError):
        FarFieldMatrix(np.array([0.0, 2.0, 1.0]), np.array([0.0, 1.0]), np.zeros((3, 2)), 1.0)
    with pytest.raises(ParameterError):
        FarFieldMatrix(np.array([0.0, 1.0]), np.array([0.0, 1.0]), np.zeros((3, 2)), 1.0)


def test_incompatible_matrices():
    a = FarFieldMatrix(uniform_angles(8), uniform_angles(8), np.zeros((8, 8)), 1.0)
    b = FarFieldMatrix(uniform_angles(8), uniform_angles(8), np.zeros((8, 8)), 2.0)
    with pytest.raises(IncompatibilityError):
        forward.require_compatible(a, b)


def test_quadrature_weights():
    assert np.allclose(forward.quadrature_weights(uniform_angles(10)), 2 * math.pi / 10)
    w = forward.quadrature_weights(uniform_angles(10, 0, math.pi / 2))
    assert w.sum() == pytest.approx(math.pi / 2)
