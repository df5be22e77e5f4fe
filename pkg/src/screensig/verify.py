"""Oracle checks behind the ``verify`` command.

Each check compares a computed quantity with an independent reference
(Bessel functions, closed-form spectra, SVD) and reports the measured
defect next to its tolerance.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np
from scipy.special import hankel1, jv, jvp, jn_zeros

from . import detection, eigen, fem, forward
from .coefficients import SurfaceCoefficients
from .geometry import build_screen_disk_mesh

SUITES = ("unit", "physics", "all")


@dataclass
class Check:
    name: str
    tolerance: float
    measured: float
    seconds: float = 0.0
    note: str = ""

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.measured) and self.measured < self.tolerance)


@dataclass
class VerifyTable:
    suite: str
    checks: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.checks)

    def table(self) -> str:
        rows = [f"{'check':<28} {'tolerance':>10} {'measured':>11} {'time[s]':>8}  result"]
        for c in self.checks:
            rows.append(f"{c.name:<28} {c.tolerance:10.1e} {c.measured:11.3e} {c.seconds:8.2f}  "
                        f"{'PASS' if c.passed else 'FAIL'}"
                        + (f"  ({c.note})" if c.note else ""))
        return "\n".join(rows)


# ---------------------------------------------------------------------------
# unit oracles
# ---------------------------------------------------------------------------
def check_herglotz(n=64, k=1.0, r=0.7):
    """Trapezoid Herglotz function with g = 1 against 2 pi J0(k r)."""
    inc = forward.Incidence.herglotz(forward.uniform_angles(n), np.ones(n))
    x = r * np.array([[math.cos(0.4), math.sin(0.4)]])
    val = inc.evaluate(k, x)[0][0, 0]
    return Check("herglotz 2*pi*J0", 1e-8, abs(val - 2 * math.pi * jv(0, k * r)))


def check_bessel(k=2.0, radius=2.0, n_max=40):
    """DtN recurrence against direct Hankel ratios."""
    n = np.arange(n_max + 1)
    z = k * radius
    ref = k * (hankel1(n - 1, z) - n / z * hankel1(n, z)) / hankel1(n, z)
    got = fem.dtn_symbols(k, radius, n_max)
    return Check("dtn symbols vs hankel", 1e-10, float(np.max(np.abs(got - ref) / np.abs(ref))))


def check_dtn_asymptote(k=2.0, radius=2.0, n=400):
    """Symbol tends to -n/R with relative gap ~ (kR)^2 / (2 n^2)."""
    sym = fem.dtn_symbol(k, radius, n)
    return Check("dtn large-n asymptote", 1e-3, abs(sym + n / radius) / (n / radius))


def check_filter_factors(seed=0, n=24, eps=1e-3):
    """Tikhonov solve equals the SVD filter-factor formula."""
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    a[:, -4:] *= 1e-4  # small singular values so regularization matters
    b = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    u, s, vh = np.linalg.svd(a)
    ref = vh.conj().T @ (s / (s ** 2 + eps) * (u.conj().T @ b))
    got = detection.tikhonov_solve(a, b, eps).g
    return Check("tikhonov svd filter", 1e-10,
                 float(np.linalg.norm(got - ref) / np.linalg.norm(ref)))


def check_eta0(h=0.02):
    mesh = build_screen_disk_mesh(target_h=h)
    ref = jn_zeros(0, 1)[0] ** 2
    return Check("dirichlet eta0 = j01^2", 1e-3, abs(eigen.dirichlet_eta0(mesh) - ref) / ref)


# ---------------------------------------------------------------------------
# physics oracles
# ---------------------------------------------------------------------------
def steklov_oracle(k, count):
    """Robin parameters of the Bessel modes ``-k J_n'(k) / J_n(k)``, sorted descending."""
    n = np.arange(count + 4)
    lam = -k * jvp(n, k) / jv(n, k)
    return np.sort(lam)[::-1][:count]


def check_steklov(h=0.02, k=1.0, count=3):
    mesh = build_screen_disk_mesh(target_h=h)
    forms = eigen.assemble_eigen_forms(mesh, None, k)
    lam = eigen.solve_spectrum(forms, keep_vectors=False).eigenvalues.real
    # Modes n >= 1 are double; keep one representative per distinct value.
    distinct = [lam[0]]
    for v in lam[1:]:
        if abs(v - distinct[-1]) > 1e-3 * (1 + abs(v)):
            distinct.append(v)
    ref = steklov_oracle(k, count)
    err = np.max(np.abs(np.array(distinct[:count]) - ref) / np.abs(ref))
    return Check("steklov (no screen)", 1e-3, float(err))


def _physics_matrix(h, k, n=16, beta_i=0.0):
    mesh = build_screen_disk_mesh(target_h=h)
    coeffs = SurfaceCoefficients.constant(mesh.arc_length, 1.0, 1.0, -4.0, beta_i)
    return forward.far_field_matrix(mesh, coeffs, k, forward.uniform_angles(n))


def reciprocity_defect(F) -> float:
    """``max |u(x, d) - u(-d, -x)| / max |u|`` on a uniform grid."""
    n = len(F.inc_angles)
    p = (np.arange(n) + n // 2) % n
    d = F.data
    return float(np.abs(d - d[np.ix_(p, p)].T).max() / np.abs(d).max())


def unitarity_defect(F) -> float:
    return float(np.max(np.abs(np.abs(np.linalg.eigvals(forward.scattering_operator(F))) - 1)))


def check_reciprocity(h=0.05, k=2.0):
    return Check("far-field reciprocity", 1e-2, reciprocity_defect(_physics_matrix(h, k)))


def check_unit_circle(h=0.05, k=2.0):
    return Check("scattering op. unit circle", 1e-2, unitarity_defect(_physics_matrix(h, k)))


def mie_far_field(k, obs, d_angle, n_max=40):
    """Sound-soft unit disk far field for incidence angle ``d_angle``."""
    n = np.arange(-n_max, n_max + 1)
    c = -math.sqrt(2 / (math.pi * k)) * np.exp(-1j * math.pi / 4)
    return c * np.sum(jv(n, k) / hankel1(n, k) * np.exp(1j * np.outer(obs - d_angle, n)), axis=1)


def check_mie(h=0.05, k=1.0):
    mesh = build_screen_disk_mesh(arc=(0, 2 * math.pi), target_h=h, closed=True)
    obs = forward.uniform_angles(16)
    sol = forward.solve_auxiliary(mesh, k, 0.0, [0.3])
    ref = mie_far_field(k, obs, 0.3)
    err = np.abs(sol.far_field(obs)[:, 0] - ref).max() / np.abs(ref).max()
    return Check("sound-soft disk (mie)", 1e-3, float(err))


def check_energy_identity(h=0.05, k=2.0):
    mesh = build_screen_disk_mesh(target_h=h)
    coeffs = SurfaceCoefficients.constant(mesh.arc_length, 1.0, 1.0, -4.0, -1.0)
    forms = eigen.assemble_eigen_forms(mesh, coeffs, k)
    spec = eigen.solve_spectrum(forms)
    res = [eigen.energy_identity_residual(forms, lam, spec.vectors[:, i])
           for i, lam in enumerate(spec.eigenvalues)]
    return Check("energy identity", 1e-6, float(max(res)))


UNIT_CHECKS = (check_herglotz, check_bessel, check_dtn_asymptote, check_filter_factors,
               check_eta0)
PHYSICS_CHECKS = (check_steklov, check_reciprocity, check_unit_circle, check_mie,
                  check_energy_identity)


def verify(suite: str = "all") -> VerifyTable:
    """Run a named suite and collect the results."""
    if suite not in SUITES:
        raise ValueError(f"unknown suite {suite!r}; expected one of {SUITES}")
    checks = {"unit": UNIT_CHECKS, "physics": PHYSICS_CHECKS,
              "all": UNIT_CHECKS + PHYSICS_CHECKS}[suite]
    table = VerifyTable(suite)
    for fn in checks:
        t0 = time.perf_counter()
        try:
            c = fn()
        except Exception as exc:  # a crashing check is a failing check
            c = Check(fn.__name__.removeprefix("check_"), 0.0, math.nan, note=repr(exc))
        c.seconds = time.perf_counter() - t0
        table.checks.append(c)
    return table
