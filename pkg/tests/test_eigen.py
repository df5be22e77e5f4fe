import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.optimize import brentq
from scipy.special import jv, jvp

from screensig import eigen
from screensig.coefficients import PiecewiseField, SurfaceCoefficients
from screensig.errors import SpectralError
from screensig.geometry import GAMMA_MINUS, REST, build_screen_disk_mesh
from screensig.verify import steklov_oracle


def coeffs_for(mesh, **kw):
    base = dict(alpha=1.0, mu=1.0, beta_r=-4.0, beta_i=0.0)
    base.update(kw)
    return SurfaceCoefficients.constant(mesh.arc_length, **base)


@pytest.fixture(scope="module")
def forms005(mesh005):
    return eigen.assemble_eigen_forms(mesh005, coeffs_for(mesh005), 2.0)


@pytest.fixture(scope="module")
def spec005(forms005):
    return eigen.solve_spectrum(forms005)


def test_steklov_oracle_values():
    mpmath.mp.dps = 30
    ref = float(mpmath.besselj(1, 1) / mpmath.besselj(0, 1))
    assert steklov_oracle(1.0, 1)[0] == pytest.approx(ref, rel=1e-14)
    assert ref == pytest.approx(0.575081, abs=1e-6)


def test_k_support_is_rest_boundary(forms005, mesh005):
    K = forms005.K.tocoo()
    rest = set(np.searchsorted(forms005.dofs, mesh005.rest_dofs()).tolist())
    assert set(K.row.tolist()) <= rest and set(K.col.tolist()) <= rest
    assert set(forms005.boundary.tolist()) == rest


def test_tips_excluded(forms005, mesh005):
    assert not set(mesh005.tips.tolist()) & set(forms005.dofs.tolist())


def test_real_forms_symmetric(forms005):
    assert forms005.is_real
    for m in (forms005.A, forms005.B, forms005.K):
        assert not np.iscomplexobj(m.data)
        assert abs(m - m.T).max() < 1e-13


def test_closed_screen_has_no_robin_part():
    m = build_screen_disk_mesh(arc=(0, 2 * math.pi), target_h=0.1, closed=True)
    forms = eigen.assemble_eigen_forms(m, coeffs_for(m), 2.0)
    assert forms.K.nnz == 0 or abs(forms.K).max() == 0
    assert len(eigen.solve_spectrum(forms)) == 0


def test_boundary_operator_symmetric(forms005):
    R, _, _ = eigen.boundary_operator(forms005, 1.0)
    assert np.linalg.norm(R - R.conj().T) / np.linalg.norm(R) < 1e-10


def test_real_spectrum(spec005):
    lam = spec005.eigenvalues
    assert np.all(np.abs(lam.imag) <= 1e-8 * (1 + np.abs(lam)))
    assert np.all(np.diff(lam.real) <= 0)
    assert spec005.residuals.max() < 1e-8


def test_absorbing_spectrum_upper_half_plane(mesh005):
    forms = eigen.assemble_eigen_forms(mesh005, coeffs_for(mesh005, beta_i=-1.0), 2.0)
    spec = eigen.solve_spectrum(forms)
    lam = spec.eigenvalues
    assert np.all(lam.imag >= -1e-8 * (1 + np.abs(lam)))
    assert lam.imag.max() > 1e-4
    for i, l in enumerate(lam):
        assert eigen.energy_identity_residual(forms, l, spec.vectors[:, i]) < 1e-6


def test_energy_identity_real_case(forms005, spec005):
    for i, l in enumerate(spec005.eigenvalues[:5]):
        assert eigen.energy_identity_residual(forms005, l, spec005.vectors[:, i]) < 1e-6


def test_energy_identity_discriminates(mesh005):
    forms = eigen.assemble_eigen_forms(mesh005, coeffs_for(mesh005, beta_i=-1.0), 2.0)
    rng = np.random.default_rng(3)
    h = rng.standard_normal(len(forms.dofs)) + 1j * rng.standard_normal(len(forms.dofs))
    assert eigen.energy_identity_residual(forms, 1.0 + 0.5j, h) > 0.1


def test_direct_route_agrees(forms005, spec005):
    direct = eigen.solve_spectrum_direct(forms005, n_eigs=5, sigma=1.0)
    near = spec005.eigenvalues[np.argsort(np.abs(spec005.eigenvalues - 1.0))[:5]]
    assert np.allclose(np.sort(direct.real), np.sort(near.real), atol=1e-8)


def test_tau_choice_irrelevant(forms005, spec005):
    other = eigen.solve_spectrum(forms005, tau=2.5)
    a, b = spec005.real_in(-5, 5), other.real_in(-5, 5)
    assert len(a) == len(b) and np.allclose(a, b, atol=1e-8)


def test_tau_retry_exhaustion(forms005, monkeypatch):
    monkeypatch.setattr(eigen, "boundary_operator", lambda forms, tau: None)
    with pytest.raises(SpectralError):
        eigen.solve_spectrum(forms005)


def test_tau_retry_recovers(forms005, spec005, monkeypatch):
    real = eigen.boundary_operator
    calls = []

    def flaky(forms, tau):
        calls.append(tau)
        return None if len(calls) < 3 else real(forms, tau)

    monkeypatch.setattr(eigen, "boundary_operator", flaky)
    spec = eigen.solve_spectrum(forms005)
    assert calls == [1.0, 1.5, 2.0] and spec.tau == 2.0
    assert np.allclose(spec.real_in(-5, 5), spec005.real_in(-5, 5), atol=1e-8)


def test_positive_count_stable_under_refinement():
    from screensig.geometry import refine
    m = build_screen_disk_mesh(target_h=0.1)
    counts, leading = [], []
    for mesh in (m, refine(m)):
        spec = eigen.solve_spectrum(eigen.assemble_eigen_forms(mesh, coeffs_for(mesh), 2.0))
        lam = spec.eigenvalues.real
        counts.append(int(np.sum(lam > 0)))
        leading.append(lam[:5])
    assert counts[0] == counts[1]
    assert np.max(np.abs(leading[0] - leading[1])) < 0.1


def test_spectrum_file_round_trip(tmp_path, spec005):
    spec005.scenario_hash = "abc"
    spec005.save(tmp_path / "s.json")
    back = eigen.EigenSpectrum.load(tmp_path / "s.json")
    assert np.array_equal(back.eigenvalues, spec005.eigenvalues)
    assert back.tau == spec005.tau and back.scenario_hash == "abc"


# ---------------------------------------------------------------------------
# eta_0, eta_1, Rayleigh
# ---------------------------------------------------------------------------
def test_eta0_unit_and_radius_two():
    j01 = brentq(lambda x: jv(0, x), 2, 3)
    assert j01 == pytest.approx(2.404826, abs=1e-6)
    m1 = build_screen_disk_mesh(target_h=0.05)
    assert eigen.dirichlet_eta0(m1) == pytest.approx(j01 ** 2, rel=2e-3)
    m2 = build_screen_disk_mesh(disk_radius=2.0, outer_radius=3.0, target_h=0.1)
    assert eigen.dirichlet_eta0(m2) == pytest.approx(j01 ** 2 / 4, rel=2e-3)


def robin_disk_eta(tau):
    """Smallest root of sqrt(eta) J0'(sqrt(eta)) + tau J0(sqrt(eta)) = 0."""
    f = lambda x: x * jvp(0, x) + tau * jv(0, x)
    return brentq(f, 1e-6, 2.4048) ** 2


def test_eta1_no_screen_bessel():
    m = build_screen_disk_mesh(target_h=0.05)
    assert eigen.eta1(m, None, 1.0) == pytest.approx(robin_disk_eta(1.0), rel=2e-3)


def test_eta1_positive_and_monotone_in_tau(mesh005):
    mu = PiecewiseField.constant(1.0, mesh005.arc_length)
    a, b = eigen.eta1(mesh005, mu, 0.5), eigen.eta1(mesh005, mu, 2.0)
    assert 0 < a < b


def test_rayleigh_under_hypotheses(mesh005):
    forms = eigen.assemble_eigen_forms(mesh005, coeffs_for(mesh005, beta_r=1.0), 1.0)
    spec = eigen.solve_spectrum(forms)
    rep = eigen.rayleigh_lambda1(spec, forms)
    assert rep.applicable, rep.reason
    assert rep.defect < 1e-6 * (1 + abs(rep.lambda1))
    rng = np.random.default_rng(0)
    for _ in range(100):
        u = rng.standard_normal(len(forms.dofs))
        assert eigen.rayleigh_quotient(forms, u) <= rep.lambda1 + 1e-6


def test_rayleigh_not_applicable_when_k_large(forms005, spec005):
    rep = eigen.rayleigh_lambda1(spec005, forms005)
    assert not rep.applicable


@given(st.floats(0.3, 3.0), st.floats(0.3, 3.0), st.floats(-3.0, 3.0))
def test_real_coefficients_give_real_spectrum(alpha, mu, beta):
    m = _coarse()
    forms = eigen.assemble_eigen_forms(m, coeffs_for(m, alpha=alpha, mu=mu, beta_r=beta), 1.5)
    lam = eigen.solve_spectrum(forms, keep_vectors=False).eigenvalues
    assert np.all(lam.imag == 0)


@given(st.floats(-3.0, -0.1))
def test_absorption_pushes_spectrum_up(beta_i):
    m = _coarse()
    forms = eigen.assemble_eigen_forms(m, coeffs_for(m, beta_i=beta_i), 1.5)
    lam = eigen.solve_spectrum(forms, keep_vectors=False).eigenvalues
    assert np.all(lam.imag >= -1e-8 * (1 + np.abs(lam)))


_COARSE = []


def _coarse():
    if not _COARSE:
        _COARSE.append(build_screen_disk_mesh(target_h=0.2))
    return _COARSE[0]
