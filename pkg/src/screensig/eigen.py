"""Target-signature eigenvalues and related spectral quantities on ``D``.

The eigenproblem is posed on the interior disk (minus-side dofs):

    (A + B + lam K) h = 0,

with ``A = S - k^2 M``, ``B`` the screen form
``(1/4) int_Gamma mu h' phi' + (k^2 beta + 4/alpha) h phi`` and ``K`` the
boundary mass on ``dD \\ Gamma``; ``h`` vanishes at the screen tips.
Eigenvalues are obtained from the compact boundary operator
``R = trace o (A + B + tau K)^{-1} o K`` via ``lam = tau - 1/rho``.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
from scipy.sparse.linalg import LinearOperator, eigs, eigsh, splu

from . import fem
from .coefficients import SurfaceCoefficients
from .errors import ParameterError, SpectralError
from .geometry import GAMMA_MINUS, INTERIOR, REST, CrackMesh

logger = logging.getLogger(__name__)

DEFAULT_TAU = 1.0
TAU_STEP = 0.5
TAU_RETRIES = 5
LAMBDA_MAX = 20.0


def screen_form(mesh: CrackMesh, k: float, stiff_weight, mass_weight):
    """``int_Gamma a(s) h' phi' + b(s) h phi`` on the minus-side screen dofs.

    ``stiff_weight`` and ``mass_weight`` map arc parameters to values;
    two-point Gauss rule per edge.
    """
    n = mesh.n_dofs
    e = mesh.edges_with(GAMMA_MINUS)
    if len(e) == 0:
        return sp.csr_matrix((n, n))
    ell, _, _ = fem.edge_geometry(mesh.vertices, e)
    s_edges = mesh.screen_edge_parameters()
    loc = np.zeros((len(e), 2, 2), dtype=complex)
    d = np.array([-1.0, 1.0])
    for x, w in zip(*fem.GAUSS2):
        s = s_edges[:, 0] + x * (s_edges[:, 1] - s_edges[:, 0])
        a, b = stiff_weight(s), mass_weight(s)
        phi = np.array([1 - x, x])
        loc += (w * a / ell)[:, None, None] * np.outer(d, d)[None]
        loc += (w * b * ell)[:, None, None] * np.outer(phi, phi)[None]
    rows = np.repeat(e, 2, axis=1).ravel()
    cols = np.tile(e, (1, 2)).ravel()
    mat = sp.coo_matrix((loc.ravel(), (rows, cols)), shape=(n, n)).tocsr()
    if np.all(mat.data.imag == 0):
        mat = mat.real.tocsr()
    return mat


@dataclass
class EigenForms:
    """Discrete forms on ``V_0(D)``, restricted to the free dofs.

    ``dofs`` lists the global dofs kept (interior-region dofs minus tips);
    ``boundary`` indexes, within ``dofs``, the dofs of ``dD \\ Gamma``.
    """

    mesh: CrackMesh
    coeffs: SurfaceCoefficients | None
    k: float
    dofs: np.ndarray
    boundary: np.ndarray
    A: sp.csr_matrix = field(repr=False)   # S - k^2 M
    B: sp.csr_matrix = field(repr=False)   # screen form
    K: sp.csr_matrix = field(repr=False)   # mass on dD \ Gamma
    M: sp.csr_matrix = field(repr=False)   # volume mass
    S: sp.csr_matrix = field(repr=False)   # volume stiffness
    B_mu: sp.csr_matrix = field(repr=False)       # (1/4) int mu h' phi'
    B_im_beta: sp.csr_matrix = field(repr=False)  # int Im(beta) h phi
    B_im_alpha: sp.csr_matrix = field(repr=False) # int Im(1/alpha) h phi

    @property
    def is_real(self) -> bool:
        return not np.iscomplexobj(self.B.data) or np.all(self.B.data.imag == 0)

    def pencil(self, lam):
        return (self.A + self.B + lam * self.K).tocsc()

    def shifted(self, tau):
        """``A + B + tau K``."""
        return self.pencil(tau)

    def lift(self, h):
        """Extend a reduced vector to all mesh dofs (zero elsewhere)."""
        out = np.zeros(self.mesh.n_dofs, dtype=np.result_type(h, float))
        out[self.dofs] = h
        return out


def assemble_eigen_forms(mesh: CrackMesh, coeffs: SurfaceCoefficients | None, k: float,
                         tau: float = DEFAULT_TAU) -> EigenForms:
    """Assemble ``A``, ``B`` and ``K`` on the interior disk.

    ``coeffs=None`` removes the screen: the whole of ``dD`` carries the
    Robin condition and there are no tip constraints.
    """
    if not k > 0:
        raise ParameterError("k must be positive")
    if not tau > 0:
        raise ParameterError("tau must be positive")
    n = mesh.n_dofs
    tris = mesh.triangles[mesh.regions == INTERIOR]
    if len(tris) == 0:
        raise ParameterError("mesh has no interior-disk elements")
    stiff, mass = fem.stiffness_mass(mesh.vertices, tris, n)
    zero = sp.csr_matrix((n, n))
    if coeffs is None:
        robin_edges = np.vstack([mesh.edges_with(REST), mesh.edges_with(GAMMA_MINUS)])
        fixed = np.empty(0, dtype=np.int64)
        B = B_mu = B_ib = B_ia = zero
    else:
        coeffs.validate()
        robin_edges = mesh.edges_with(REST)
        fixed = mesh.tips
        alpha = coeffs.alpha
        mu = lambda s: coeffs.mu(s)
        beta = lambda s: coeffs.evaluate(s, k)[2]
        B = 0.25 * screen_form(mesh, k, mu, lambda s: k ** 2 * beta(s) + 4.0 / alpha(s))
        B_mu = 0.25 * screen_form(mesh, k, mu, lambda s: 0.0 * s)
        B_ib = screen_form(mesh, k, lambda s: 0.0 * s, lambda s: np.imag(beta(s)))
        B_ia = screen_form(mesh, k, lambda s: 0.0 * s, lambda s: np.imag(1.0 / alpha(s)))
    K = fem.edge_mass(mesh.vertices, robin_edges, n)
    dofs = np.setdiff1d(np.unique(tris), fixed)
    bnd_global = np.setdiff1d(np.unique(robin_edges), fixed)
    boundary = np.searchsorted(dofs, bnd_global)
    r = lambda m: m.tocsr()[dofs][:, dofs].tocsr()
    return EigenForms(mesh, coeffs, float(k), dofs, boundary, r(stiff - k ** 2 * mass), r(B),
                      r(K), r(mass), r(stiff), r(B_mu), r(B_ib), r(B_ia))


# ---------------------------------------------------------------------------
# spectrum
# ---------------------------------------------------------------------------
@dataclass
class EigenSpectrum:
    """Eigenvalues sorted by real part, descending."""

    eigenvalues: np.ndarray
    residuals: np.ndarray
    tau: float
    h: float
    vectors: np.ndarray | None = field(default=None, repr=False)  # reduced dofs, columns
    scenario_hash: str | None = None

    def __len__(self):
        return len(self.eigenvalues)

    def real_in(self, lo, hi) -> np.ndarray:
        lam = self.eigenvalues
        return np.sort(lam.real[(lam.real >= lo) & (lam.real <= hi)])

    def to_dict(self) -> dict:
        return {"tau": self.tau, "h": self.h, "scenario_hash": self.scenario_hash,
                "eigenvalues": [{"re": float(z.real), "im": float(z.imag), "residual": float(r)}
                                for z, r in zip(self.eigenvalues, self.residuals)]}

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1))

    @classmethod
    def from_dict(cls, data) -> "EigenSpectrum":
        ev = data["eigenvalues"]
        return cls(np.array([complex(e["re"], e["im"]) for e in ev], dtype=complex),
                   np.array([e["residual"] for e in ev], dtype=float),
                   float(data["tau"]), float(data["h"]), None, data.get("scenario_hash"))

    @classmethod
    def load(cls, path) -> "EigenSpectrum":
        return cls.from_dict(json.loads(Path(path).read_text()))


def _factor(forms: EigenForms, tau: float):
    g = forms.shifted(tau)
    try:
        lu = splu(g)
    except RuntimeError:
        return None
    # a numerically singular pivot also counts as failure
    diag = np.abs(lu.U.diagonal())
    if diag.min() <= 1e-13 * diag.max():
        return None
    return lu


def boundary_operator(forms: EigenForms, tau: float):
    """Symmetrized ``R``: ``L^T E^T (A+B+tau K)^{-1} E L`` with ``K_bb = L L^T``.

    Returns ``(R_sym, L, lu)``; ``R_sym`` is similar to ``R`` and is
    (complex) symmetric because the forms are.
    """
    lu = _factor(forms, tau)
    if lu is None:
        return None
    b = forms.boundary
    kbb = forms.K[b][:, b].toarray()
    L = np.linalg.cholesky(kbb)
    rhs = np.zeros((len(forms.dofs), len(b)), dtype=complex if not forms.is_real else float)
    rhs[b] = L
    sol = lu.solve(rhs)
    return L.T @ sol[b], L, lu


def solve_spectrum(forms: EigenForms, n_eigs: int | None = None, tau: float = DEFAULT_TAU,
                   lambda_max: float = LAMBDA_MAX, keep_vectors: bool = True) -> EigenSpectrum:
    """Eigenvalues from the boundary operator, retrying ``tau`` if singular.

    Only ``|Re lam| <= lambda_max`` is reported; with ``n_eigs`` the
    eigenvalues closest to ``tau`` are kept.
    """
    if len(forms.boundary) == 0:
        return EigenSpectrum(np.empty(0, complex), np.empty(0), tau, forms.mesh.h_max)
    for attempt in range(TAU_RETRIES + 1):
        out = boundary_operator(forms, tau)
        if out is not None:
            break
        logger.info("A+B+tau K singular at tau=%g, retrying", tau)
        tau += TAU_STEP
    else:
        raise SpectralError(f"no regular shift found after {TAU_RETRIES} retries")
    R, L, lu = out
    if forms.is_real:
        R = 0.5 * (R + R.T)
        rho, Y = np.linalg.eigh(R.real)
    else:
        rho, Y = np.linalg.eig(R)
    keep = np.abs(rho) > 1e-12 * np.abs(rho).max()
    rho, Y = rho[keep], Y[:, keep]
    lam = tau - 1.0 / rho
    sel = np.abs(lam.real) <= lambda_max
    lam, Y = lam[sel], Y[:, sel]
    order = np.argsort(np.abs(tau - lam))
    if n_eigs is not None:
        order = order[:n_eigs]
    lam, Y = lam[order], Y[:, order]
    # eigenfunctions on all reduced dofs: h = G^{-1} E L y
    rhs = np.zeros((len(forms.dofs), Y.shape[1]), dtype=np.result_type(Y, L))
    rhs[forms.boundary] = L @ Y
    H = lu.solve(rhs)
    H /= np.linalg.norm(H, axis=0)[None, :]
    res = np.array([np.linalg.norm(forms.pencil(l) @ H[:, j]) for j, l in enumerate(lam)])
    if forms.is_real:
        lam = lam.real.astype(complex)
    order = np.argsort(-lam.real, kind="stable")
    return EigenSpectrum(lam[order], res[order], float(tau), forms.mesh.h_max,
                         H[:, order] if keep_vectors else None)


def solve_spectrum_direct(forms: EigenForms, n_eigs: int = 5, sigma: float = DEFAULT_TAU):
    """Cross-check: eigenvalues of the pencil ``(A+B) h = -lam K h`` nearest ``sigma``.

    Solved as ``K h = mu (A + B + sigma K) h`` with ``mu = 1/(sigma - lam)``,
    which keeps the singular ``K`` on the harmless side.
    """
    G = forms.shifted(sigma).astype(complex)
    lu = splu(G)
    n = G.shape[0]
    op = LinearOperator((n, n), matvec=lambda x: lu.solve(forms.K @ x), dtype=complex)
    mu = eigs(op, k=n_eigs, which="LM", return_eigenvectors=False, tol=1e-13)
    lam = sigma - 1.0 / mu
    return lam[np.argsort(-lam.real)]


# ---------------------------------------------------------------------------
# diagnostics
# ---------------------------------------------------------------------------
def energy_identity_residual(forms: EigenForms, lam: complex, h: np.ndarray) -> float:
    """Relative defect of ``int_Gamma (k^2/4 Im beta + Im 1/alpha)|h|^2 = -Im lam int |h|^2``.

    The second integral runs over ``dD \\ Gamma``; ``h`` lives on the
    reduced dofs.
    """
    h = np.asarray(h, dtype=complex)
    h = h / np.linalg.norm(h)
    hc = h.conj()
    lhs = (forms.k ** 2 / 4) * (hc @ (forms.B_im_beta @ h)).real
    lhs += (hc @ (forms.B_im_alpha @ h)).real
    kk = (hc @ (forms.K @ h)).real
    rhs = -np.imag(lam) * kk
    scale = max(abs(lhs), abs(rhs), 1e-12 * (1 + abs(lam)) * kk)
    if scale == 0:
        return 0.0
    return float(abs(lhs - rhs) / scale)


def _smallest_eig(Amat, Mmat) -> float:
    n = Amat.shape[0]
    if n <= 400:
        return float(sla.eigh(Amat.toarray(), Mmat.toarray(), eigvals_only=True,
                              subset_by_index=[0, 0])[0])
    vals = eigsh(Amat.tocsc(), k=1, M=Mmat.tocsc(), sigma=0.0, which="LM",
                 return_eigenvectors=False, tol=1e-12)
    return float(vals[0])


def eta1(mesh: CrackMesh, mu=None, tau: float = DEFAULT_TAU) -> float:
    """First eigenvalue of ``-Lap u = eta u`` with the screen-diffusion
    condition on ``Gamma``, Robin ``tau`` on ``dD \\ Gamma`` and ``u = 0``
    at the tips.

    ``mu`` is a :class:`~screensig.coefficients.PiecewiseField`; ``None``
    removes the screen (full Robin circle).
    """
    if not tau > 0:
        raise ParameterError("tau must be positive")
    n = mesh.n_dofs
    tris = mesh.triangles[mesh.regions == INTERIOR]
    stiff, mass = fem.stiffness_mass(mesh.vertices, tris, n)
    if mu is None:
        robin = np.vstack([mesh.edges_with(REST), mesh.edges_with(GAMMA_MINUS)])
        fixed = np.empty(0, dtype=np.int64)
        surf = sp.csr_matrix((n, n))
    else:
        robin, fixed = mesh.edges_with(REST), mesh.tips
        surf = 0.25 * screen_form(mesh, 1.0, lambda s: mu(s), lambda s: 0.0 * s).real
    K = fem.edge_mass(mesh.vertices, robin, n)
    dofs = np.setdiff1d(np.unique(tris), fixed)
    r = lambda m: m.tocsr()[dofs][:, dofs]
    return _smallest_eig(r(stiff + tau * K + surf), r(mass))


def dirichlet_eta0(mesh: CrackMesh) -> float:
    """First Dirichlet eigenvalue of ``-Lap`` on the interior disk."""
    n = mesh.n_dofs
    tris = mesh.triangles[mesh.regions == INTERIOR]
    stiff, mass = fem.stiffness_mass(mesh.vertices, tris, n)
    on_bdry = np.unique(np.vstack([mesh.edges_with(REST), mesh.edges_with(GAMMA_MINUS)]))
    dofs = np.setdiff1d(np.unique(tris), on_bdry)
    r = lambda m: m.tocsr()[dofs][:, dofs]
    return _smallest_eig(r(stiff), r(mass))


@dataclass(frozen=True)
class RayleighReport:
    applicable: bool
    reason: str
    lambda1: float | None = None
    quotient: float | None = None
    defect: float | None = None
    eta1: float | None = None


def rayleigh_quotient(forms: EigenForms, u) -> float:
    """``-(A + B)(u, u) / K(u, u)`` for a real trial vector on reduced dofs."""
    u = np.asarray(u)
    num = -(u.conj() @ ((forms.A + forms.B) @ u))
    den = u.conj() @ (forms.K @ u)
    return float(np.real(num / den))


def rayleigh_lambda1(spectrum: EigenSpectrum, forms: EigenForms,
                     tau: float = DEFAULT_TAU) -> RayleighReport:
    """Check that the leading eigenvalue is the sup of the Rayleigh quotient.

    Applicable only for real coefficients with
    ``inf (k^2 beta + 4/alpha) > 0`` and ``k^2 < eta_1``.
    """
    c = forms.coeffs
    if c is None or not forms.is_real:
        return RayleighReport(False, "requires real screen coefficients")
    s = np.linspace(0.0, c.length, 2001)
    _, _, beta = c.evaluate(s, forms.k)
    if not np.min(forms.k ** 2 * beta.real + 4.0 / c.alpha(s).real) > 0:
        return RayleighReport(False, "inf(k^2 beta + 4/alpha) <= 0")
    e1 = eta1(forms.mesh, c.mu, tau)
    if not forms.k ** 2 < e1:
        return RayleighReport(False, f"k^2 >= eta_1 = {e1:.6g}", eta1=e1)
    if spectrum.vectors is None or len(spectrum) == 0:
        return RayleighReport(False, "spectrum has no eigenvectors", eta1=e1)
    lam1 = float(spectrum.eigenvalues[0].real)
    h = spectrum.vectors[:, 0]
    h = h.real if np.linalg.norm(h.real) >= np.linalg.norm(h.imag) else h.imag
    q = rayleigh_quotient(forms, h)
    return RayleighReport(True, "ok", lam1, q, abs(q - lam1), e1)
