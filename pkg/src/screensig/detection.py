"""Eigenvalue detection from far-field data by the modified far-field equation.

For each ``lam`` on a sweep grid the modified operator ``F - F^(lam)`` is
formed and the equation ``(F - F^(lam)) g = Phi_inf(., z)`` is solved by
Tikhonov regularization for a few sampling points ``z`` inside ``D``.
Eigenvalues show up as peaks of ``median_z ||g_z||``.
"""

from __future__ import annotations

import csv
import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from scipy.signal import find_peaks

from .errors import DomainError, IncompatibilityError, ParameterError, SolverError
from .forward import FarFieldMatrix, far_field_constant, quadrature_weights, require_compatible

logger = logging.getLogger(__name__)

DEFAULT_PROMINENCE = 0.3
RELATIVE_EPS = 1e-6
EPS_RULES = ("relative", "noise")


def point_source_far_field(z, obs_angles, k, disk_radius=1.0) -> np.ndarray:
    """Far field of ``(i/4) H_0^(1)(k|x - z|)``: ``C2 exp(-ik xhat . z)``."""
    z = np.asarray(z, dtype=float)
    if not np.hypot(*z) < disk_radius:
        raise DomainError(f"sampling point {z.tolist()} is not inside D")
    a = np.asarray(obs_angles, dtype=float)
    return far_field_constant(k) * np.exp(-1j * k * (np.cos(a) * z[0] + np.sin(a) * z[1]))


def sampling_points(n=8, radius=0.5, offset=0.0) -> np.ndarray:
    """``n`` points on a circle, at deterministic angles."""
    t = offset + 2 * math.pi * np.arange(n) / n
    return radius * np.stack([np.cos(t), np.sin(t)], axis=1)


def modified_operator(F: FarFieldMatrix, F_lam: FarFieldMatrix) -> FarFieldMatrix:
    """Entry-wise ``F - F^(lam)``."""
    require_compatible(F, F_lam)
    return F.with_data(F.data - F_lam.data, kind="modified", lam=F_lam.lam)


def add_noise(F: FarFieldMatrix, delta: float, seed: int | None = 0) -> FarFieldMatrix:
    """Multiplicative noise ``F_ij (1 + delta xi_ij)``, ``Re xi, Im xi ~ U[-1, 1]``."""
    if delta < 0:
        raise ParameterError("noise level must be non-negative")
    if delta == 0:
        return F.with_data(F.data.copy(), noise=0.0, seed=seed)
    rng = np.random.default_rng(seed)
    shape = F.data.shape
    xi = rng.uniform(-1, 1, shape) + 1j * rng.uniform(-1, 1, shape)
    return F.with_data(F.data * (1 + delta * xi), noise=float(delta), seed=seed)


# ---------------------------------------------------------------------------
# Tikhonov
# ---------------------------------------------------------------------------
@dataclass
class TikhonovResult:
    g: np.ndarray             # (n_inc, n_rhs) kernel values at the incident directions
    norms: np.ndarray         # weighted L2 norms of g
    residuals: np.ndarray     # weighted data misfit ||F g - rhs||
    normal_residual: float    # relative residual of the normal equations


def weighted_operator(op, obs_weights, inc_weights):
    """``W_x^{1/2} op W_d^{-1/2}`` for the discrete operator ``op``."""
    return np.sqrt(obs_weights)[:, None] * op / np.sqrt(inc_weights)[None, :]


def tikhonov_solve(op, rhs, eps, obs_weights=None, inc_weights=None) -> TikhonovResult:
    """Solve ``(F* F + eps I) g = F* rhs`` in the weighted direction inner products.

    ``op`` is the discrete operator (quadrature weights already applied),
    ``rhs`` has shape ``(n_obs,)`` or ``(n_obs, n_rhs)``.  Uniform weights
    are assumed when none are given.
    """
    op = np.asarray(op)
    rhs = np.asarray(rhs)
    single = rhs.ndim == 1
    rhs = rhs[:, None] if single else rhs
    n_obs, n_inc = op.shape
    wx = np.ones(n_obs) if obs_weights is None else np.asarray(obs_weights, dtype=float)
    wd = np.ones(n_inc) if inc_weights is None else np.asarray(inc_weights, dtype=float)
    if eps < 0:
        raise ParameterError("regularization parameter must be non-negative")
    a = weighted_operator(op, wx, wd)
    r = np.sqrt(wx)[:, None] * rhs
    normal = a.conj().T @ a + eps * np.eye(n_inc)
    b = a.conj().T @ r
    gt = np.linalg.solve(normal, b)
    nres = np.linalg.norm(normal @ gt - b) / max(np.linalg.norm(b), 1e-300)
    if nres > 1e-10 and np.linalg.norm(b) > 0:
        raise SolverError(f"normal-equation residual {nres:.2e} exceeds 1e-10")
    g = gt / np.sqrt(wd)[:, None]
    norms = np.linalg.norm(gt, axis=0)
    misfit = np.linalg.norm(a @ gt - r, axis=0)
    if single:
        g = g[:, 0]
    return TikhonovResult(g, norms, misfit, float(nres))


def epsilon_rule(op_weighted, delta: float | None = None, rule: str = "relative",
                 factor: float = RELATIVE_EPS) -> float:
    """Regularization parameter for one modified operator.

    ``"relative"``: ``factor * ||F||_2``.  ``"noise"``: ``delta * ||F||_2``,
    falling back to ``factor * ||F||_2`` when the noise level is unknown.
    The noise rule over-smooths: with 1% data noise it splits each peak
    in two, so it is not the default.
    """
    if rule not in EPS_RULES:
        raise ParameterError(f"unknown epsilon rule {rule!r}; expected one of {EPS_RULES}")
    nrm = np.linalg.norm(op_weighted, 2)
    level = delta if (rule == "noise" and delta) else factor
    return float(level * nrm)


# ---------------------------------------------------------------------------
# indicator curve
# ---------------------------------------------------------------------------
@dataclass
class IndicatorCurve:
    lambdas: np.ndarray       # complex grid (real sweep: zero imaginary part)
    values: np.ndarray        # NaN where a grid point failed
    epsilons: np.ndarray
    z: np.ndarray
    noise: float = 0.0
    limited_aperture: bool = False

    def __post_init__(self):
        if len(self.lambdas) == 0:
            raise ParameterError("empty lambda grid")
        if len(self.lambdas) > 1 and np.any(np.diff(self.lambdas.real) <= 0):
            raise ParameterError("lambda grid must be strictly increasing")

    @property
    def step(self) -> float:
        return float(np.median(np.diff(self.lambdas.real))) if len(self.lambdas) > 1 else 0.0

    def save_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["lambda_re", "lambda_im", "indicator", "epsilon"])
            for lam, v, e in zip(self.lambdas, self.values, self.epsilons):
                w.writerow([repr(float(lam.real)), repr(float(lam.imag)), repr(float(v)),
                            repr(float(e))])

    @classmethod
    def load_csv(cls, path, z=None, noise=0.0) -> "IndicatorCurve":
        rows = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        lam = rows[:, 0] + 1j * rows[:, 1]
        z = np.zeros((0, 2)) if z is None else np.asarray(z)
        return cls(lam, rows[:, 2], rows[:, 3], z, noise)


def lambda_grid(lo, hi, step, im=0.0) -> np.ndarray:
    if not step > 0:
        raise ParameterError("grid step must be positive")
    if not hi > lo:
        raise ParameterError("empty lambda window")
    n = int(round((hi - lo) / step)) + 1
    return np.round(lo + step * np.arange(n), 12) + 1j * im


def indicator_at(F: FarFieldMatrix, F_lam: FarFieldMatrix, z, delta=None,
                 disk_radius=1.0, eps=None, rule="relative", factor=RELATIVE_EPS):
    """Median of ``||g_z||`` over sampling points for one modified operator."""
    mod = modified_operator(F, F_lam)
    wx, wd = F.obs_weights, F.inc_weights
    op = mod.operator()
    if eps is None:
        eps = epsilon_rule(weighted_operator(op, wx, wd), delta, rule, factor)
    rhs = np.stack([point_source_far_field(p, F.obs_angles, F.k, disk_radius) for p in z],
                   axis=1)
    res = tikhonov_solve(op, rhs, eps, wx, wd)
    return float(np.median(res.norms)), eps, res.norms


def indicator_curve(F: FarFieldMatrix, lambdas, aux_far_field, z=None, delta=None,
                    disk_radius=1.0, threads: int = 1, rule: str = "relative",
                    factor: float = RELATIVE_EPS) -> IndicatorCurve:
    """Sweep the indicator over ``lambdas``.

    ``aux_far_field(lam)`` must return the matching ``F^(lam)``; it is
    called once per grid point, possibly from worker threads.
    """
    lambdas = np.asarray(lambdas, dtype=complex)
    if np.any(lambdas.imag < 0):
        raise ParameterError("lambda grid must satisfy Im(lambda) >= 0")
    z = sampling_points(radius=0.5 * disk_radius) if z is None else np.asarray(z)
    delta = F.noise if delta is None else delta

    def task(lam):
        try:
            val, eps, _ = indicator_at(F, aux_far_field(lam), z, delta, disk_radius,
                                       rule=rule, factor=factor)
            return val, eps
        except SolverError as exc:
            logger.warning("indicator failed at lambda=%s: %s", lam, exc)
            return math.nan, math.nan

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            out = list(pool.map(task, lambdas))
    else:
        out = [task(l) for l in lambdas]
    vals = np.array([o[0] for o in out])
    eps = np.array([o[1] for o in out])
    return IndicatorCurve(lambdas, vals, eps, z, float(delta or 0.0), F.limited_aperture)


# ---------------------------------------------------------------------------
# peaks
# ---------------------------------------------------------------------------
@dataclass
class Peak:
    location: float
    prominence: float
    index: int
    unresolved: bool = False


@dataclass
class DetectionReport:
    peaks: list
    grid_step: float
    prominence_threshold: float
    matched: list = field(default_factory=list)    # (reference, peak) pairs
    missed: list = field(default_factory=list)     # reference values with no peak
    spurious: list = field(default_factory=list)   # peaks with no reference
    limited_aperture: bool = False
    noise: float = 0.0
    k: float | None = None
    geometry_hash: str | None = None

    @property
    def locations(self) -> np.ndarray:
        return np.array([p.location for p in self.peaks])

    def to_dict(self) -> dict:
        d = asdict(self)
        d["locations"] = self.locations.tolist()
        return d

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1))

    @classmethod
    def from_dict(cls, d) -> "DetectionReport":
        peaks = [Peak(**p) for p in d["peaks"]]
        return cls(peaks, d["grid_step"], d["prominence_threshold"],
                   [tuple(m) for m in d.get("matched", [])], d.get("missed", []),
                   d.get("spurious", []), d.get("limited_aperture", False), d.get("noise", 0.0),
                   d.get("k"), d.get("geometry_hash"))

    @classmethod
    def load(cls, path) -> "DetectionReport":
        return cls.from_dict(json.loads(Path(path).read_text()))


def detect_peaks(curve: IndicatorCurve, prominence: float = DEFAULT_PROMINENCE,
                 reference=None, window=None) -> DetectionReport:
    """Local maxima of ``log(indicator / median)`` with prominence above threshold.

    Peaks at most two grid steps apart (a single sample between them) are
    merged into the higher one and flagged unresolved.  ``reference`` (real eigenvalues) is matched within
    one grid step; only references inside ``window`` (default: the grid
    range) count as missed.
    """
    lam = curve.lambdas.real
    if len(lam) < 5:
        raise ParameterError("peak detection needs at least 5 grid points")
    vals = np.asarray(curve.values, dtype=float)
    ok = np.isfinite(vals) & (vals > 0)
    y = np.full(len(vals), -np.inf)
    y[ok] = np.log(vals[ok] / np.median(vals[ok]))
    idx, props = find_peaks(np.where(ok, y, np.min(y[ok])), prominence=prominence)
    step = curve.step
    peaks = [Peak(float(lam[i]), float(p), int(i)) for i, p in zip(idx, props["prominences"])]
    merged: list[Peak] = []
    for pk in peaks:
        if merged and pk.location - merged[-1].location <= 2 * step + 1e-12:
            prev = merged[-1]
            keep = pk if vals[pk.index] > vals[prev.index] else prev
            merged[-1] = Peak(keep.location, max(pk.prominence, prev.prominence),
                              keep.index, True)
        else:
            merged.append(pk)
    report = DetectionReport(merged, step, prominence, limited_aperture=curve.limited_aperture,
                             noise=curve.noise)
    if reference is not None:
        _match(report, np.sort(np.real(np.asarray(reference))),
               (lam[0], lam[-1]) if window is None else window)
    return report


def _match(report: DetectionReport, ref, window):
    tol = report.grid_step * (1 + 1e-9)
    locs = report.locations
    inside = ref[(ref >= window[0]) & (ref <= window[1])]
    used = set()
    for r in inside:
        d = np.abs(locs - r) if len(locs) else np.array([])
        j = int(np.argmin(d)) if len(d) else -1
        if j >= 0 and d[j] <= tol:
            report.matched.append((float(r), float(locs[j])))
            used.add(j)
        else:
            report.missed.append(float(r))
    for j, loc in enumerate(locs):
        if j not in used and not (len(ref) and np.min(np.abs(ref - loc)) <= tol):
            report.spurious.append(float(loc))
