"""Forward scattering by the screen and the auxiliary Robin/Dirichlet problem.

Both problems are solved for the *scattered* field on the truncated disk
``|x| < R`` with the exact DtN closure on ``|x| = R``.  Far-field patterns
use the normalization ``u^s ~ e^{ikr} / sqrt(r) * u_inf``; the far field of
the fundamental solution ``(i/4) H_0^(1)(k|x - z|)`` is then
``far_field_constant(k) * exp(-ik xhat . z)``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu
from scipy.special import hankel1, h1vp

from . import fem
from .coefficients import SurfaceCoefficients
from .errors import IncompatibilityError, ParameterError, SolverError
from .geometry import ANNULUS, GAMMA_MINUS, GAMMA_PLUS, OUTER, REST, CrackMesh

RESIDUAL_TOL = 1e-10


def far_field_constant(k: float) -> complex:
    """Far-field amplitude of ``(i/4) H_0^(1)(k|x|)``: ``e^{i pi/4} / sqrt(8 pi k)``."""
    return np.exp(1j * math.pi / 4) / math.sqrt(8 * math.pi * k)


def default_n_modes(k: float, outer_radius: float) -> int:
    return max(20, math.ceil(2 * k * outer_radius))


def uniform_angles(n: int, start: float = 0.0, stop: float = 2 * math.pi) -> np.ndarray:
    """``n`` equally spaced angles on ``[start, stop)``."""
    return start + (stop - start) * np.arange(n) / n


def quadrature_weights(angles) -> np.ndarray:
    """Trapezoid weights for direction sums.

    A uniform grid covering the whole circle gets ``2 pi / N``; otherwise
    each direction carries the local grid spacing (limited aperture).
    """
    a = np.asarray(angles, dtype=float)
    n = len(a)
    if n == 1:
        return np.array([2 * math.pi])
    d = np.diff(a)
    if np.allclose(d, 2 * math.pi / n, rtol=1e-9, atol=1e-12):
        return np.full(n, 2 * math.pi / n)
    w = np.empty(n)
    w[1:-1] = 0.5 * (d[1:] + d[:-1])
    w[0], w[-1] = d[0], d[-1]
    return w


def _check_angles(angles):
    a = np.asarray(angles, dtype=float)
    if a.ndim != 1 or len(a) == 0:
        raise ParameterError("direction list must be a non-empty 1-D array")
    if np.any(np.diff(a) <= 0):
        raise ParameterError("direction angles must be strictly increasing")
    return a


# ---------------------------------------------------------------------------
# incident fields
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class Incidence:
    """Superpositions of plane waves ``sum_j c[j, r] exp(ik x . d_j)``.

    Each column ``r`` of ``coefficients`` is one right-hand side.
    """

    angles: np.ndarray
    coefficients: np.ndarray

    @classmethod
    def plane_waves(cls, angles) -> "Incidence":
        a = np.atleast_1d(np.asarray(angles, dtype=float))
        return cls(a, np.eye(len(a), dtype=complex))

    @classmethod
    def herglotz(cls, angles, kernels, weights=None) -> "Incidence":
        """Discrete Herglotz wave functions ``int g(d) e^{ikx.d} ds(d)``."""
        a = np.asarray(angles, dtype=float)
        g = np.asarray(kernels, dtype=complex)
        if g.ndim == 1:
            g = g[:, None]
        w = quadrature_weights(a) if weights is None else np.asarray(weights)
        return cls(a, w[:, None] * g)

    @property
    def n_rhs(self) -> int:
        return self.coefficients.shape[1]

    def directions(self):
        return np.stack([np.cos(self.angles), np.sin(self.angles)], axis=1)

    def evaluate(self, k, points):
        """Values ``(npts, nrhs)`` and gradients ``(npts, nrhs, 2)``."""
        d = self.directions()
        waves = np.exp(1j * k * points @ d.T)  # (npts, ndirs)
        vals = waves @ self.coefficients
        grads = np.einsum("pj,jr,jc->prc", waves, self.coefficients, 1j * k * d)
        return vals, grads


# ---------------------------------------------------------------------------
# solutions and far fields
# ---------------------------------------------------------------------------
def far_field_from_circle(values, radial_derivs, radius, k, obs_angles):
    """Green-representation far field from samples on ``|y| = radius``.

    ``values`` and ``radial_derivs`` are ``(M, ...)`` samples at the
    uniform angles ``2 pi m / M``; the trapezoid rule is spectrally
    accurate for these periodic integrands.
    """
    values = np.asarray(values)
    m = values.shape[0]
    theta = 2 * math.pi * np.arange(m) / m
    obs = np.asarray(obs_angles, dtype=float)
    cosd = np.cos(obs[:, None] - theta[None, :])  # xhat . yhat
    kernel = np.exp(-1j * k * radius * cosd)
    dkernel = -1j * k * cosd * kernel
    ds = radius * 2 * math.pi / m
    integrand = dkernel @ values.reshape(m, -1) - kernel @ np.asarray(radial_derivs).reshape(m, -1)
    out = far_field_constant(k) * ds * integrand
    return out.reshape((len(obs),) + values.shape[1:])


@dataclass
class FieldSolution:
    """Scattered field on the mesh dofs for one or more incidences."""

    mesh: CrackMesh
    k: float
    kind: str  # "screen" or "auxiliary"
    incidence: Incidence
    scattered: np.ndarray  # (n_dofs, n_rhs); zero on inactive dofs
    active: np.ndarray
    n_modes: int
    lam: complex | None = None
    residual: float = 0.0

    def total(self) -> np.ndarray:
        ui, _ = self.incidence.evaluate(self.k, self.mesh.vertices)
        tot = self.scattered + ui
        mask = np.zeros(self.mesh.n_dofs, dtype=bool)
        mask[self.active] = True
        tot[~mask] = 0.0
        return tot

    def outer_modes(self):
        """Fourier coefficients of the scattered trace on ``|x| = R``."""
        modes, C = fem.fourier_projector(self.mesh.vertices, self.mesh.edges_with(OUTER),
                                         self.n_modes)
        return modes, C @ self.scattered

    def exterior_coefficients(self):
        """``a_n`` with ``u^s = sum a_n H_n(kr) e^{in theta}`` outside ``D``."""
        modes, w = self.outer_modes()
        kr = self.k * self.mesh.outer_radius
        return modes, w / hankel1(modes, kr)[:, None]

    def far_field(self, obs_angles, r_ff=None) -> np.ndarray:
        """Far-field pattern ``(n_obs, n_rhs)`` by the Green representation
        on the circle ``|x| = r_ff`` (default: midway between ``dD`` and the
        truncation circle)."""
        rd, R = self.mesh.disk_radius, self.mesh.outer_radius
        r_ff = 0.5 * (rd + R) if r_ff is None else float(r_ff)
        if not rd < r_ff < R:
            raise ParameterError(f"r_ff={r_ff} must lie in ({rd}, {R})")
        modes, a = self.exterior_coefficients()
        m = 2 * (self.n_modes + math.ceil(self.k * r_ff) + 24)
        theta = 2 * math.pi * np.arange(m) / m
        e = np.exp(1j * np.outer(theta, modes))
        x = self.k * r_ff
        u = e @ (hankel1(modes, x)[:, None] * a)
        dudr = e @ (self.k * h1vp(modes, x)[:, None] * a)
        return far_field_from_circle(u, dudr, r_ff, self.k, obs_angles)

    def far_field_series(self, obs_angles) -> np.ndarray:
        """Far field from the exterior Hankel expansion (cross-check path)."""
        modes, a = self.exterior_coefficients()
        obs = np.asarray(obs_angles, dtype=float)
        pref = math.sqrt(2 / (math.pi * self.k)) * np.exp(-1j * math.pi / 4)
        e = np.exp(1j * np.outer(obs, modes)) * (-1j) ** modes[None, :]
        return pref * (e @ a)


# ---------------------------------------------------------------------------
# linear systems
# ---------------------------------------------------------------------------
class _Factorized:
    """Dirichlet-reduced sparse system with a reusable LU factorization."""

    def __init__(self, matrix, active, dirichlet):
        self.matrix = matrix.tocsr()
        self.active = np.asarray(active)
        self.dirichlet = np.asarray(dirichlet)
        self.free = np.setdiff1d(self.active, self.dirichlet)
        self._lu = None

    @property
    def lu(self):
        if self._lu is None:
            a = self.matrix[self.free][:, self.free].tocsc()
            try:
                self._lu = splu(a)
            except RuntimeError as exc:
                raise SolverError(
                    f"singular system ({exc}); k may sit on a spurious resonance of "
                    "the truncated problem, change R or n_modes") from exc
        return self._lu

    def solve(self, rhs, dirichlet_values):
        """Solve with full-length ``rhs`` ``(n, nrhs)`` and prescribed values."""
        n, nrhs = rhs.shape
        x = np.zeros((n, nrhs), dtype=complex)
        if len(self.dirichlet):
            x[self.dirichlet] = dirichlet_values
        b = rhs[self.free] - self.matrix[self.free][:, self.dirichlet] @ x[self.dirichlet]
        x[self.free] = self.lu.solve(np.ascontiguousarray(b))
        if not np.all(np.isfinite(x)):
            raise SolverError("non-finite solution; factorization is singular")
        a = self.matrix[self.free][:, self.free]
        res = np.linalg.norm(a @ x[self.free] - b) / max(np.linalg.norm(b), 1e-300)
        if res > RESIDUAL_TOL and np.linalg.norm(b) > 0:
            raise SolverError(f"relative residual {res:.2e} exceeds {RESIDUAL_TOL:g}")
        return x, res


@dataclass
class ScreenSystem:
    """Assembled screen-scattering system on a :class:`CrackMesh`.

    With ``coeffs=None`` the screen is removed: plus and minus dofs are
    welded and the tip constraint dropped, leaving the plain Helmholtz
    discretization.
    """

    mesh: CrackMesh
    coeffs: SurfaceCoefficients | None
    k: float
    n_modes: int
    volume: sp.csr_matrix = field(repr=False)
    surface: sp.csr_matrix = field(repr=False)
    dtn: sp.csr_matrix = field(repr=False)
    weld: np.ndarray = field(repr=False)
    _solver: _Factorized | None = field(default=None, repr=False)

    @property
    def matrix(self) -> sp.csr_matrix:
        return (self.volume + self.surface + self.dtn).tocsr()

    @property
    def solver(self) -> _Factorized:
        if self._solver is None:
            active = np.unique(self.weld)
            tips = np.empty(0, dtype=np.int64) if self.coeffs is None else self.mesh.tips
            self._solver = _Factorized(self.matrix, active, tips)
        return self._solver

    def rhs(self, inc: Incidence) -> np.ndarray:
        n = self.mesh.n_dofs
        b = np.zeros((n, inc.n_rhs), dtype=complex)
        if self.coeffs is None:
            return b
        mesh, k = self.mesh, self.k
        minus_idx = np.flatnonzero(mesh.edge_tags == GAMMA_MINUS)
        plus_idx = mesh.edge_pairs[minus_idx]
        em, ep = mesh.edges[minus_idx], mesh.edges[plus_idx]
        ell, tang, nrm = fem.edge_geometry(mesh.vertices, em)
        s_edges = mesh.screen_edge_parameters()
        xi, wq = fem.GAUSS3
        p, q = mesh.vertices[em[:, 0]], mesh.vertices[em[:, 1]]
        for x, w in zip(xi, wq):
            pts = p + x * (q - p)
            s = s_edges[:, 0] + x * (s_edges[:, 1] - s_edges[:, 0])
            _, mu, beta = self.coeffs.evaluate(s, k)
            ui, gi = inc.evaluate(k, pts)
            dn = np.einsum("erc,ec->er", gi, nrm)
            dt = np.einsum("erc,ec->er", gi, tang)
            n1, n2 = 1 - x, x
            wl = (w * ell)[:, None]
            jump_terms = wl * dn
            avg_terms = -wl * (k ** 2 * beta)[:, None] * ui * 0.5
            grad_terms = -(w * mu)[:, None] * dt * 0.5  # d/ds<phi> = +-1/(2 ell), times ell
            np.add.at(b, ep[:, 0], n1 * jump_terms + n1 * avg_terms - grad_terms)
            np.add.at(b, ep[:, 1], n2 * jump_terms + n2 * avg_terms + grad_terms)
            np.add.at(b, em[:, 0], -n1 * jump_terms + n1 * avg_terms - grad_terms)
            np.add.at(b, em[:, 1], -n2 * jump_terms + n2 * avg_terms + grad_terms)
        return b

    def solve(self, inc: Incidence) -> FieldSolution:
        b = self.rhs(inc)
        solver = self.solver
        if self.coeffs is None:
            # welded unknowns: sum plus-side rows into their minus partners
            bw = np.zeros_like(b)
            np.add.at(bw, self.weld, b)
            x, res = solver.solve(bw, np.zeros((0, inc.n_rhs)))
            x = x[self.weld]
        else:
            ui, _ = inc.evaluate(self.k, self.mesh.vertices[self.mesh.tips])
            x, res = solver.solve(b, -ui)
        return FieldSolution(self.mesh, self.k, "screen", inc, x,
                             np.arange(self.mesh.n_dofs), self.n_modes, residual=res)


def _screen_surface_matrix(mesh: CrackMesh, coeffs: SurfaceCoefficients, k: float):
    minus_idx = np.flatnonzero(mesh.edge_tags == GAMMA_MINUS)
    plus_idx = mesh.edge_pairs[minus_idx]
    em, ep = mesh.edges[minus_idx], mesh.edges[plus_idx]
    dofs = np.stack([ep[:, 0], ep[:, 1], em[:, 0], em[:, 1]], axis=1)
    ell, _, _ = fem.edge_geometry(mesh.vertices, em)
    s_edges = mesh.screen_edge_parameters()
    xi, wq = fem.GAUSS2
    loc = np.zeros((len(em), 4, 4), dtype=complex)
    dav = np.array([-1.0, 1.0, -1.0, 1.0]) * 0.5
    for x, w in zip(xi, wq):
        s = s_edges[:, 0] + x * (s_edges[:, 1] - s_edges[:, 0])
        alpha, mu, beta = coeffs.evaluate(s, k)
        jump = np.array([1 - x, x, -(1 - x), -x])
        avg = 0.5 * np.array([1 - x, x, 1 - x, x])
        loc += (w * ell / alpha)[:, None, None] * np.outer(jump, jump)[None]
        loc += (w * ell * k ** 2 * beta)[:, None, None] * np.outer(avg, avg)[None]
        loc += (w * mu / ell)[:, None, None] * np.outer(dav, dav)[None]
    n = mesh.n_dofs
    rows = np.repeat(dofs, 4, axis=1).ravel()
    cols = np.tile(dofs, (1, 4)).ravel()
    return sp.coo_matrix((loc.ravel(), (rows, cols)), shape=(n, n)).tocsr()


def assemble_screen_system(mesh: CrackMesh, coeffs: SurfaceCoefficients | None, k: float,
                           n_modes: int | None = None) -> ScreenSystem:
    """Assemble ``a(u, v)`` for the scattered field of the screen problem."""
    if not k > 0:
        raise ParameterError("k must be positive")
    n_modes = default_n_modes(k, mesh.outer_radius) if n_modes is None else int(n_modes)
    n = mesh.n_dofs
    weld = np.arange(n)
    tris = mesh.triangles
    if coeffs is None:
        if len(mesh.double_nodes):
            weld[mesh.double_nodes[:, 0]] = mesh.double_nodes[:, 1]
        tris = weld[tris]
        surface = sp.csr_matrix((n, n), dtype=complex)
    else:
        coeffs.validate()
        surface = _screen_surface_matrix(mesh, coeffs, k)
    stiff, mass = fem.stiffness_mass(mesh.vertices, tris, n)
    dtn = fem.dtn_matrix(mesh.vertices, mesh.edges_with(OUTER), k, mesh.outer_radius, n_modes)
    return ScreenSystem(mesh, coeffs, k, n_modes, (stiff - k ** 2 * mass).tocsr(), surface,
                        dtn, weld)


def solve_scattering(system: ScreenSystem, incidence) -> FieldSolution:
    """Scattered field for a plane-wave angle (or array of angles) or an
    :class:`Incidence`."""
    if not isinstance(incidence, Incidence):
        incidence = Incidence.plane_waves(incidence)
    return system.solve(incidence)


@dataclass
class AuxiliarySystem:
    """Exterior problem ``h = 0`` on the screen, ``dh/dnu + lam h = 0`` on
    the rest of ``dD``, posed on the annulus ``disk_radius < |x| < R``."""

    mesh: CrackMesh
    k: float
    n_modes: int
    base: sp.csr_matrix = field(repr=False)
    robin: sp.csr_matrix = field(repr=False)
    active: np.ndarray = field(repr=False)
    dirichlet: np.ndarray = field(repr=False)

    def rhs(self, inc: Incidence, lam: complex) -> np.ndarray:
        mesh, k = self.mesh, self.k
        b = np.zeros((mesh.n_dofs, inc.n_rhs), dtype=complex)
        e = mesh.edges_with(REST)
        if len(e) == 0:
            return b
        ell, _, nrm = fem.edge_geometry(mesh.vertices, e)
        p, q = mesh.vertices[e[:, 0]], mesh.vertices[e[:, 1]]
        for x, w in zip(*fem.GAUSS3):
            ui, gi = inc.evaluate(k, p + x * (q - p))
            g = (np.einsum("erc,ec->er", gi, nrm) + lam * ui) * (w * ell)[:, None]
            np.add.at(b, e[:, 0], (1 - x) * g)
            np.add.at(b, e[:, 1], x * g)
        return b

    def factorize(self, lam: complex) -> _Factorized:
        if np.imag(lam) < 0:
            raise ParameterError("the auxiliary problem requires Im(lambda) >= 0")
        return _Factorized(self.base - lam * self.robin, self.active, self.dirichlet)

    def solve(self, inc: Incidence, lam: complex, solver: _Factorized | None = None):
        solver = self.factorize(lam) if solver is None else solver
        ui, _ = inc.evaluate(self.k, self.mesh.vertices[self.dirichlet])
        x, res = solver.solve(self.rhs(inc, lam), -ui)
        return FieldSolution(self.mesh, self.k, "auxiliary", inc, x, self.active,
                             self.n_modes, lam=complex(lam), residual=res)


def assemble_auxiliary_system(mesh: CrackMesh, k: float, n_modes: int | None = None):
    if not k > 0:
        raise ParameterError("k must be positive")
    n_modes = default_n_modes(k, mesh.outer_radius) if n_modes is None else int(n_modes)
    n = mesh.n_dofs
    ann = mesh.triangles[mesh.regions == ANNULUS]
    stiff, mass = fem.stiffness_mass(mesh.vertices, ann, n)
    dtn = fem.dtn_matrix(mesh.vertices, mesh.edges_with(OUTER), k, mesh.outer_radius, n_modes)
    robin = fem.edge_mass(mesh.vertices, mesh.edges_with(REST), n)
    return AuxiliarySystem(mesh, k, n_modes, (stiff - k ** 2 * mass + dtn).tocsr(), robin,
                           mesh.region_dofs(ANNULUS), mesh.boundary_dofs(GAMMA_PLUS))


def solve_auxiliary(mesh: CrackMesh, k: float, lam: complex, incidence,
                    n_modes: int | None = None) -> FieldSolution:
    if not isinstance(incidence, Incidence):
        incidence = Incidence.plane_waves(incidence)
    return assemble_auxiliary_system(mesh, k, n_modes).solve(incidence, lam)


# ---------------------------------------------------------------------------
# far-field matrices
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class FarFieldMatrix:
    """Samples ``u_inf(xhat_i, d_j)``; rows observation, columns incidence."""

    obs_angles: np.ndarray
    inc_angles: np.ndarray
    data: np.ndarray
    k: float
    kind: str = "F"  # "F", "F_lambda" or "modified"
    lam: complex | None = None
    noise: float = 0.0
    seed: int | None = None

    def __post_init__(self):
        _check_angles(self.obs_angles)
        _check_angles(self.inc_angles)
        if self.data.shape != (len(self.obs_angles), len(self.inc_angles)):
            raise ParameterError("far-field matrix shape does not match direction lists")

    @property
    def obs_weights(self):
        return quadrature_weights(self.obs_angles)

    @property
    def inc_weights(self):
        return quadrature_weights(self.inc_angles)

    @property
    def limited_aperture(self) -> bool:
        full = lambda a: np.allclose(quadrature_weights(a), 2 * math.pi / len(a))
        return not (full(self.obs_angles) and full(self.inc_angles))

    def operator(self) -> np.ndarray:
        """Discrete operator ``(Fg)_i = sum_j u_inf(x_i, d_j) g_j w_j``."""
        return self.data * self.inc_weights[None, :]

    def compatible_with(self, other: "FarFieldMatrix") -> bool:
        return (math.isclose(self.k, other.k)
                and np.array_equal(self.obs_angles, other.obs_angles)
                and np.array_equal(self.inc_angles, other.inc_angles))

    def with_data(self, data, **changes) -> "FarFieldMatrix":
        return replace(self, data=np.asarray(data), **changes)

    def metadata(self) -> dict:
        lam = None if self.lam is None else [float(np.real(self.lam)), float(np.imag(self.lam))]
        return {"k": self.k, "noise": self.noise, "seed": self.seed, "kind": self.kind,
                "lambda": lam, "obs_angles": self.obs_angles.tolist(),
                "inc_angles": self.inc_angles.tolist()}

    def save(self, json_path, csv_path=None) -> None:
        json_path = Path(json_path)
        csv_path = json_path.with_suffix(".csv") if csv_path is None else Path(csv_path)
        meta = self.metadata()
        meta["payload"] = csv_path.name
        json_path.write_text(json.dumps(meta, indent=1))
        lines = ["i,j,re,im"]
        for i in range(self.data.shape[0]):
            for j in range(self.data.shape[1]):
                z = self.data[i, j]
                lines.append(f"{i},{j},{float(z.real)!r},{float(z.imag)!r}")
        csv_path.write_text("\n".join(lines) + "\n")

    @classmethod
    def load(cls, json_path) -> "FarFieldMatrix":
        json_path = Path(json_path)
        meta = json.loads(json_path.read_text())
        obs = np.asarray(meta["obs_angles"], dtype=float)
        inc = np.asarray(meta["inc_angles"], dtype=float)
        data = np.zeros((len(obs), len(inc)), dtype=complex)
        rows = np.loadtxt(json_path.parent / meta["payload"], delimiter=",", skiprows=1, ndmin=2)
        for i, j, re, im in rows:
            data[int(i), int(j)] = complex(re, im)
        lam = None if meta["lambda"] is None else complex(*meta["lambda"])
        return cls(obs, inc, data, float(meta["k"]), meta["kind"], lam,
                   float(meta["noise"]), meta["seed"])


def far_field_matrix(mesh: CrackMesh, coeffs: SurfaceCoefficients | None, k: float,
                     directions, obs_angles=None, n_modes=None, system=None) -> FarFieldMatrix:
    """Far-field matrix of the screen; one factorization serves all columns."""
    inc = _check_angles(directions)
    if len(inc) < 8:
        raise ParameterError("at least 8 incident directions are required")
    obs = inc if obs_angles is None else _check_angles(obs_angles)
    system = assemble_screen_system(mesh, coeffs, k, n_modes) if system is None else system
    sol = system.solve(Incidence.plane_waves(inc))
    return FarFieldMatrix(obs, inc, sol.far_field(obs), float(k), "F")


def aux_far_field_matrix(mesh: CrackMesh, k: float, lam: complex, directions,
                         obs_angles=None, n_modes=None, system=None) -> FarFieldMatrix:
    """Far-field matrix of the auxiliary problem for Robin parameter ``lam``."""
    inc = _check_angles(directions)
    if len(inc) < 8:
        raise ParameterError("at least 8 incident directions are required")
    obs = inc if obs_angles is None else _check_angles(obs_angles)
    system = assemble_auxiliary_system(mesh, k, n_modes) if system is None else system
    sol = system.solve(Incidence.plane_waves(inc), lam)
    return FarFieldMatrix(obs, inc, sol.far_field(obs), float(k), "F_lambda", complex(lam))


def require_compatible(a: FarFieldMatrix, b: FarFieldMatrix) -> None:
    if not a.compatible_with(b):
        raise IncompatibilityError("far-field matrices differ in k or directions")


def scattering_operator(F: FarFieldMatrix) -> np.ndarray:
    """Discrete ``S = I + 2ik conj(C2) F``; unitary for a lossless screen.

    Needs matching full-aperture direction sets.
    """
    if F.limited_aperture or not np.array_equal(F.obs_angles, F.inc_angles):
        raise ParameterError("the scattering operator needs full, matching apertures")
    c = 2j * F.k * np.conj(far_field_constant(F.k))
    return np.eye(len(F.inc_angles)) + c * F.operator()
