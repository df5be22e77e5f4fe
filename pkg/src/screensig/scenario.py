"""Scenario files and the end-to-end pipeline.

A scenario is a single JSON document; :func:`run` turns it into an
artifact bundle (mesh, far-field matrices, spectrum, indicator curve,
detection report) plus a ``manifest.json`` with content hashes.  Stages
whose inputs and outputs are unchanged are skipped on rerun.
"""

from __future__ import annotations

import copy
import hashlib
import io
import json
import logging
import math
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import detection, eigen, forward
from .coefficients import PiecewiseField, SurfaceCoefficients
from .errors import ConfigError, IncompatibilityError
from .geometry import CrackMesh, build_screen_disk_mesh

logger = logging.getLogger(__name__)

CACHE_ENV = "SCREENSIG_CACHE_DIR"
STAGES = ("mesh", "forward", "eigs", "detect")
TWO_PI = 2 * math.pi


# ---------------------------------------------------------------------------
# schema helpers
# ---------------------------------------------------------------------------
def _section(data, path, allowed):
    if not isinstance(data, dict):
        raise ConfigError(path, "expected an object")
    extra = set(data) - set(allowed)
    if extra:
        raise ConfigError(f"{path}.{sorted(extra)[0]}", "unknown field")
    return data


def _num(data, key, path, default=None, positive=False, nonneg=False):
    if key not in data:
        if default is None:
            raise ConfigError(f"{path}.{key}", "missing required field")
        return default
    v = data[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise ConfigError(f"{path}.{key}", f"expected a finite number, got {v!r}")
    if positive and not v > 0:
        raise ConfigError(f"{path}.{key}", "must be > 0")
    if nonneg and v < 0:
        raise ConfigError(f"{path}.{key}", "must be >= 0")
    return float(v)


def _int(data, key, path, default, minimum=1):
    v = data.get(key, default)
    if isinstance(v, bool) or not isinstance(v, int) or v < minimum:
        raise ConfigError(f"{path}.{key}", f"expected an integer >= {minimum}")
    return v


def _pair(data, key, path, default):
    v = data.get(key, default)
    if (not isinstance(v, (list, tuple)) or len(v) != 2
            or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in v)):
        raise ConfigError(f"{path}.{key}", "expected a pair of numbers")
    return (float(v[0]), float(v[1]))


def canonical_hash(obj) -> str:
    text = json.dumps(obj, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()


# ---------------------------------------------------------------------------
# scenario blocks
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class GeometrySpec:
    arc: tuple = (0.0, math.pi)
    disk_radius: float = 1.0
    outer_radius: float = 2.0
    h: float = 0.05
    tip_grading: float = 2.0
    closed: bool = False

    @classmethod
    def parse(cls, d, path="geometry"):
        _section(d, path, ("arc", "disk_radius", "outer_radius", "h", "tip_grading", "closed"))
        closed = d.get("closed", False)
        if not isinstance(closed, bool):
            raise ConfigError(f"{path}.closed", "expected true or false")
        g = cls(_pair(d, "arc", path, cls.arc), _num(d, "disk_radius", path, 1.0, positive=True),
                _num(d, "outer_radius", path, 2.0, positive=True), _num(d, "h", path, 0.05, positive=True),
                _num(d, "tip_grading", path, 2.0, positive=True), closed)
        if not g.outer_radius > g.disk_radius:
            raise ConfigError(f"{path}.outer_radius", "must exceed disk_radius")
        if not 0 < g.arc[1] - g.arc[0] <= TWO_PI + 1e-12:
            raise ConfigError(f"{path}.arc", "arc must satisfy 0 < end - start <= 2 pi")
        return g

    def to_dict(self):
        return {"arc": list(self.arc), "disk_radius": self.disk_radius,
                "outer_radius": self.outer_radius, "h": self.h,
                "tip_grading": self.tip_grading, "closed": self.closed}

    def build(self) -> CrackMesh:
        return build_screen_disk_mesh(self.arc, self.disk_radius, self.outer_radius, self.h,
                                      self.tip_grading, closed=self.closed)

    @property
    def arc_length(self) -> float:
        return self.disk_radius * (self.arc[1] - self.arc[0])


@dataclass(frozen=True)
class Patch:
    field: str
    s0: float
    s1: float
    factor: float


_COEFF_NAMES = ("alpha", "mu", "beta_re", "beta_im")
_FIELD_FOR = {"alpha": "alpha", "mu": "mu", "beta_re": "beta_r", "beta_im": "beta_i",
              "beta": "beta"}


@dataclass(frozen=True)
class CoefficientSpec:
    """Each coefficient is a number (constant over the screen) or a list of
    pieces ``{"s0", "s1", "value"}``; ``patches`` multiply a field on a
    sub-interval."""

    values: dict = field(default_factory=lambda: {"alpha": 1.0, "mu": 1.0, "beta_re": -4.0,
                                                  "beta_im": 0.0})
    patches: tuple = ()

    @classmethod
    def parse(cls, d, path="coefficients"):
        _section(d, path, _COEFF_NAMES + ("patches",))
        defaults = cls().values
        values = {}
        for name in _COEFF_NAMES:
            v = d.get(name, defaults[name])
            if isinstance(v, list):
                try:
                    PiecewiseField.from_list(v)
                except (KeyError, TypeError, ValueError) as exc:
                    raise ConfigError(f"{path}.{name}", f"invalid piece list ({exc})") from exc
            elif isinstance(v, bool) or not isinstance(v, (int, float)):
                raise ConfigError(f"{path}.{name}", "expected a number or a list of pieces")
            values[name] = copy.deepcopy(v) if isinstance(v, list) else float(v)
        patches = []
        for i, p in enumerate(d.get("patches", [])):
            pp = f"{path}.patches[{i}]"
            _section(p, pp, ("field", "s0", "s1", "factor"))
            if p.get("field") not in _FIELD_FOR:
                raise ConfigError(f"{pp}.field", f"expected one of {sorted(_FIELD_FOR)}")
            patches.append(Patch(p["field"], _num(p, "s0", pp), _num(p, "s1", pp),
                                 _num(p, "factor", pp)))
        return cls(values, tuple(patches))

    def to_dict(self):
        d = copy.deepcopy(self.values)
        if self.patches:
            d["patches"] = [{"field": p.field, "s0": p.s0, "s1": p.s1, "factor": p.factor}
                            for p in self.patches]
        return d

    def build(self, length: float) -> SurfaceCoefficients:
        fields = {}
        for name in _COEFF_NAMES:
            v = self.values[name]
            fields[_FIELD_FOR[name]] = (PiecewiseField.from_list(v) if isinstance(v, list)
                                        else PiecewiseField.constant(v, length))
        c = SurfaceCoefficients(**fields)
        for p in self.patches:
            c = c.patched(_FIELD_FOR[p.field], p.s0, p.s1, p.factor)
        return c


@dataclass(frozen=True)
class Aperture:
    count: int = 32
    arc: tuple = (0.0, TWO_PI)

    @classmethod
    def parse(cls, d, path):
        _section(d, path, ("count", "arc"))
        a = cls(_int(d, "count", path, 32, minimum=8), _pair(d, "arc", path, (0.0, TWO_PI)))
        if not 0 < a.arc[1] - a.arc[0] <= TWO_PI + 1e-12:
            raise ConfigError(f"{path}.arc", "aperture arc must be non-empty and at most 2 pi")
        return a

    def to_dict(self):
        return {"count": self.count, "arc": list(self.arc)}

    def angles(self) -> np.ndarray:
        return forward.uniform_angles(self.count, *self.arc)

    @property
    def full(self) -> bool:
        return abs(self.arc[1] - self.arc[0] - TWO_PI) < 1e-12


@dataclass(frozen=True)
class SweepSpec:
    window: tuple = (-2.5, 3.5)
    step: float = 0.05
    im: float = 0.0

    @classmethod
    def parse(cls, d, path="sweep"):
        _section(d, path, ("window", "step", "im"))
        s = cls(_pair(d, "window", path, cls.window), _num(d, "step", path, 0.05, positive=True),
                _num(d, "im", path, 0.0, nonneg=True))
        if not s.window[1] > s.window[0]:
            raise ConfigError(f"{path}.window", "window must be increasing")
        return s

    def to_dict(self):
        return {"window": list(self.window), "step": self.step, "im": self.im}

    def grid(self) -> np.ndarray:
        return detection.lambda_grid(*self.window, self.step, self.im)


@dataclass(frozen=True)
class DetectionSpec:
    z_count: int = 8
    z_radius: float = 0.5
    eps_rule: str = "relative"
    eps_factor: float = detection.RELATIVE_EPS
    prominence: float = detection.DEFAULT_PROMINENCE

    @classmethod
    def parse(cls, d, path="detection"):
        _section(d, path, ("z_count", "z_radius", "eps_rule", "eps_factor", "prominence"))
        rule = d.get("eps_rule", "relative")
        if rule not in detection.EPS_RULES:
            raise ConfigError(f"{path}.eps_rule", f"expected one of {list(detection.EPS_RULES)}")
        s = cls(_int(d, "z_count", path, 8), _num(d, "z_radius", path, 0.5, positive=True), rule,
                _num(d, "eps_factor", path, detection.RELATIVE_EPS, positive=True),
                _num(d, "prominence", path, detection.DEFAULT_PROMINENCE, positive=True))
        if not s.z_radius < 1:
            raise ConfigError(f"{path}.z_radius", "sampling radius is relative to D and must be < 1")
        return s

    def to_dict(self):
        return {"z_count": self.z_count, "z_radius": self.z_radius, "eps_rule": self.eps_rule,
                "eps_factor": self.eps_factor, "prominence": self.prominence}


@dataclass(frozen=True)
class Scenario:
    geometry: GeometrySpec = GeometrySpec()
    coefficients: CoefficientSpec = CoefficientSpec()
    k: float = 2.0
    incident: Aperture = Aperture()
    observation: Aperture = Aperture()
    sweep: SweepSpec = SweepSpec()
    noise: float = 0.01
    seed: int = 1
    detection: DetectionSpec = DetectionSpec()
    tau: float = eigen.DEFAULT_TAU
    lambda_max: float = eigen.LAMBDA_MAX
    n_modes: int | None = None
    output: str = "out"
    stages: tuple = STAGES

    _KEYS = ("geometry", "coefficients", "k", "directions", "sweep", "noise", "detection",
             "eigen", "n_modes", "output", "stages")

    @classmethod
    def from_dict(cls, d) -> "Scenario":
        _section(d, "scenario", cls._KEYS)
        k = _num(d, "k", "scenario", 2.0, positive=True)
        dirs = _section(d.get("directions", {}), "directions", ("incident", "observation"))
        noise = _section(d.get("noise", {}), "noise", ("delta", "seed"))
        eig = _section(d.get("eigen", {}), "eigen", ("tau", "lambda_max"))
        stages = d.get("stages", list(STAGES))
        if not isinstance(stages, list) or any(s not in STAGES for s in stages):
            raise ConfigError("stages", f"expected a list drawn from {list(STAGES)}")
        n_modes = d.get("n_modes")
        if n_modes is not None and (isinstance(n_modes, bool) or not isinstance(n_modes, int)
                                    or n_modes < 1):
            raise ConfigError("n_modes", "expected a positive integer or null")
        output = d.get("output", "out")
        if not isinstance(output, str):
            raise ConfigError("output", "expected a path string")
        return cls(GeometrySpec.parse(d.get("geometry", {})),
                   CoefficientSpec.parse(d.get("coefficients", {})), k,
                   Aperture.parse(dirs.get("incident", {}), "directions.incident"),
                   Aperture.parse(dirs.get("observation", {}), "directions.observation"),
                   SweepSpec.parse(d.get("sweep", {})),
                   _num(noise, "delta", "noise", 0.01, nonneg=True),
                   _int(noise, "seed", "noise", 1, minimum=0),
                   DetectionSpec.parse(d.get("detection", {})),
                   _num(eig, "tau", "eigen", eigen.DEFAULT_TAU, positive=True),
                   _num(eig, "lambda_max", "eigen", eigen.LAMBDA_MAX, positive=True),
                   n_modes, output, tuple(stages))

    def to_dict(self) -> dict:
        return {"geometry": self.geometry.to_dict(), "coefficients": self.coefficients.to_dict(),
                "k": self.k,
                "directions": {"incident": self.incident.to_dict(),
                               "observation": self.observation.to_dict()},
                "sweep": self.sweep.to_dict(), "noise": {"delta": self.noise, "seed": self.seed},
                "detection": self.detection.to_dict(),
                "eigen": {"tau": self.tau, "lambda_max": self.lambda_max},
                "n_modes": self.n_modes, "output": self.output, "stages": list(self.stages)}

    @classmethod
    def load(cls, path) -> "Scenario":
        try:
            data = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(str(path), f"invalid JSON ({exc})") from exc
        return cls.from_dict(data)

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=1)

    def surface_coefficients(self) -> SurfaceCoefficients:
        return self.coefficients.build(self.geometry.arc_length)

    @property
    def geometry_hash(self) -> str:
        return canonical_hash(self.geometry.to_dict())

    @property
    def hash(self) -> str:
        return canonical_hash(self.to_dict())

    @property
    def limited_aperture(self) -> bool:
        return not (self.incident.full and self.observation.full)


def default_scenario(**changes) -> Scenario:
    from dataclasses import replace
    return replace(Scenario(), **changes)


# ---------------------------------------------------------------------------
# file plumbing
# ---------------------------------------------------------------------------
def atomic_write(path, data) -> None:
    """Write ``data`` (str or bytes) via a temporary file and rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    mode = "wb" if isinstance(data, bytes) else "w"
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, mode) as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def file_hash(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _capture(write, *names):
    """Run ``write(dir)`` in a temp dir and atomically move files into place."""
    tmp = Path(tempfile.mkdtemp())
    try:
        write(tmp)
        return {n: (tmp / n).read_bytes() for n in names}
    finally:
        for p in tmp.iterdir():
            p.unlink()
        tmp.rmdir()


def field_snapshot_csv(values) -> str:
    buf = io.StringIO()
    buf.write("vertex,re,im\n")
    for i, z in enumerate(values):
        buf.write(f"{i},{float(z.real)!r},{float(z.imag)!r}\n")
    return buf.getvalue()


class FarFieldCache:
    """On-disk cache of auxiliary far-field matrices ``F^(lam)``.

    Keys combine the geometry hash, ``k``, ``lam``, the direction lists and
    the DtN order.  Files are written atomically, so concurrent readers
    never observe partial entries.
    """

    def __init__(self, root):
        self.root = Path(root)

    def key(self, geometry_hash, k, lam, inc, obs, n_modes) -> str:
        lam = complex(lam)
        return canonical_hash({"geometry": geometry_hash, "k": float(k),
                               "lambda": [lam.real, lam.imag], "inc": np.asarray(inc).tolist(),
                               "obs": np.asarray(obs).tolist(), "n_modes": n_modes})

    def get(self, key):
        path = self.root / f"{key}.npz"
        if not path.exists():
            return None
        with np.load(path) as z:
            return z["data"]

    def put(self, key, data) -> None:
        buf = io.BytesIO()
        np.savez(buf, data=data)
        atomic_write(self.root / f"{key}.npz", buf.getvalue())


# ---------------------------------------------------------------------------
# pipeline
# ---------------------------------------------------------------------------
class Pipeline:
    """Stage runner bound to one scenario and output directory."""

    def __init__(self, scenario: Scenario, out_dir=None, threads: int = 1, cache_dir=None):
        self.sc = scenario
        self.out = Path(out_dir if out_dir is not None else scenario.output)
        self.threads = max(1, int(threads))
        # Shared by sibling output directories, so healthy and damaged runs reuse F^(lam).
        cache = cache_dir or os.environ.get(CACHE_ENV) or self.out.parent / "fcache"
        self.cache = FarFieldCache(cache)
        self._mesh = None
        self.manifest_path = self.out / "manifest.json"
        self.manifest = self._load_manifest()

    # -- manifest ---------------------------------------------------------
    def _load_manifest(self):
        if self.manifest_path.exists():
            try:
                m = json.loads(self.manifest_path.read_text())
                if m.get("scenario_hash") == self.sc.hash:
                    return m
            except json.JSONDecodeError:
                pass
        return {"scenario_hash": self.sc.hash, "stages": {}}

    def _save_manifest(self):
        self.manifest["stages"] = dict(sorted(self.manifest["stages"].items()))
        atomic_write(self.manifest_path, json.dumps(self.manifest, indent=1, sort_keys=True))

    def _inputs(self, stage) -> str:
        sc = self.sc.to_dict()
        keys = {"mesh": ["geometry"],
                "forward": ["geometry", "coefficients", "k", "directions", "noise", "n_modes"],
                "eigs": ["geometry", "coefficients", "k", "eigen"],
                "detect": ["geometry", "coefficients", "k", "directions", "noise", "n_modes",
                           "sweep", "detection", "eigen"]}[stage]
        return canonical_hash({k: sc[k] for k in keys})

    def is_current(self, stage) -> bool:
        rec = self.manifest["stages"].get(stage)
        if not rec or rec.get("status") != "complete" or rec.get("inputs") != self._inputs(stage):
            return False
        for name, h in rec["artifacts"].items():
            p = self.out / name
            if not p.exists() or file_hash(p) != h:
                return False
        return True

    def _commit(self, stage, files: dict):
        for name, data in files.items():
            atomic_write(self.out / name, data)
        self.manifest["stages"][stage] = {
            "status": "complete", "inputs": self._inputs(stage),
            "artifacts": {n: hashlib.sha256(d if isinstance(d, bytes) else d.encode()).hexdigest()
                          for n, d in sorted(files.items())}}
        self._save_manifest()

    # -- shared objects ----------------------------------------------------
    @property
    def mesh(self) -> CrackMesh:
        if self._mesh is None:
            path = self.out / "mesh.json"
            if self.is_current("mesh"):
                self._mesh = CrackMesh.from_json(path.read_text())
            else:
                self._mesh = self.sc.geometry.build()
        return self._mesh

    def _angles(self):
        return self.sc.incident.angles(), self.sc.observation.angles()

    # -- stages -------------------------------------------------------------
    def stage_mesh(self):
        self._commit("mesh", {"mesh.json": self.mesh.to_json()})

    def stage_forward(self):
        sc, mesh = self.sc, self.mesh
        inc, obs = self._angles()
        coeffs = sc.surface_coefficients()
        system = forward.assemble_screen_system(mesh, coeffs, sc.k, sc.n_modes)
        sol = system.solve(forward.Incidence.plane_waves(inc))
        F = forward.FarFieldMatrix(obs, inc, sol.far_field(obs), sc.k, "F")
        Fn = detection.add_noise(F, sc.noise, sc.seed)
        files = {}
        files.update(_capture(lambda d: F.save(d / "F.json", d / "F.csv"), "F.json", "F.csv"))
        files.update(_capture(lambda d: Fn.save(d / "F_noisy.json", d / "F_noisy.csv"),
                              "F_noisy.json", "F_noisy.csv"))
        files["field_d0.csv"] = field_snapshot_csv(sol.total()[:, 0])
        self._commit("forward", files)
        return F, Fn

    def stage_eigs(self):
        sc = self.sc
        forms = eigen.assemble_eigen_forms(self.mesh, sc.surface_coefficients(), sc.k, sc.tau)
        spec = eigen.solve_spectrum(forms, tau=sc.tau, lambda_max=sc.lambda_max,
                                    keep_vectors=False)
        spec.scenario_hash = sc.hash
        self._commit("eigs", {"spectrum.json": json.dumps(spec.to_dict(), indent=1)})
        return spec

    def aux_far_field(self, system):
        inc, obs = self._angles()
        sc = self.sc

        def compute(lam):
            key = self.cache.key(sc.geometry_hash, sc.k, lam, inc, obs, sc.n_modes)
            data = self.cache.get(key)
            if data is None:
                data = forward.aux_far_field_matrix(self.mesh, sc.k, lam, inc, obs,
                                                    system=system).data
                self.cache.put(key, data)
            return forward.FarFieldMatrix(obs, inc, data, sc.k, "F_lambda", complex(lam))

        return compute

    def stage_detect(self):
        sc = self.sc
        if not self.is_current("forward"):
            self.run_stage("forward")
        Fn = forward.FarFieldMatrix.load(self.out / "F_noisy.json")
        system = forward.assemble_auxiliary_system(self.mesh, sc.k, sc.n_modes)
        ds = sc.detection
        z = detection.sampling_points(ds.z_count, ds.z_radius * sc.geometry.disk_radius)
        curve = detection.indicator_curve(Fn, sc.sweep.grid(), self.aux_far_field(system), z,
                                          sc.noise, sc.geometry.disk_radius, self.threads,
                                          ds.eps_rule, ds.eps_factor)
        ref = None
        if self.is_current("eigs"):
            ref = eigen.EigenSpectrum.load(self.out / "spectrum.json").eigenvalues.real
        report = detection.detect_peaks(curve, ds.prominence, ref)
        report.k = sc.k
        report.geometry_hash = sc.geometry_hash
        files = _capture(lambda d: curve.save_csv(d / "indicator.csv"), "indicator.csv")
        files["report.json"] = json.dumps(report.to_dict(), indent=1)
        self._commit("detect", files)
        return curve, report

    def run_stage(self, stage):
        fn = getattr(self, f"stage_{stage}")
        try:
            return fn()
        except Exception:
            self.manifest["stages"][stage] = {"status": "failed", "inputs": self._inputs(stage),
                                              "artifacts": {}}
            self._save_manifest()
            raise

    def run(self, stages=None, force=False) -> dict:
        stages = list(self.sc.stages if stages is None else stages)
        for s in stages:
            if s not in STAGES:
                raise ConfigError("stage", f"unknown stage {s!r}")
        ran = {}
        self.out.mkdir(parents=True, exist_ok=True)
        atomic_write(self.out / "scenario.json", self.sc.dumps())
        for s in STAGES:
            if s not in stages:
                continue
            if not force and self.is_current(s):
                logger.info("stage %s up to date", s)
                ran[s] = "skipped"
                continue
            self.run_stage(s)
            ran[s] = "ran"
        return ran


def run(scenario, out_dir=None, stages=None, threads=1, cache_dir=None, force=False) -> dict:
    """Run the pipeline for a :class:`Scenario` or a scenario file path."""
    sc = scenario if isinstance(scenario, Scenario) else Scenario.load(scenario)
    return Pipeline(sc, out_dir, threads, cache_dir).run(stages, force)


# ---------------------------------------------------------------------------
# compare
# ---------------------------------------------------------------------------
@dataclass
class Drift:
    baseline: float
    perturbed: float
    shift: float
    flagged: bool


@dataclass
class DriftSummary:
    drifts: list
    unmatched_baseline: list
    unmatched_perturbed: list
    grid_step: float

    @property
    def max_shift(self) -> float:
        return max((abs(d.shift) for d in self.drifts), default=0.0)

    def table(self) -> str:
        lines = [f"{'baseline':>10} {'perturbed':>10} {'shift':>8}  flag"]
        for d in self.drifts:
            lines.append(f"{d.baseline:10.4f} {d.perturbed:10.4f} {d.shift:+8.4f}  "
                         f"{'SHIFTED' if d.flagged else ''}")
        for b in self.unmatched_baseline:
            lines.append(f"{b:10.4f} {'-':>10} {'':>8}  LOST")
        for p in self.unmatched_perturbed:
            lines.append(f"{'-':>10} {p:10.4f} {'':>8}  NEW")
        return "\n".join(lines)


def compare_locations(base, pert, grid_step, max_pair=None) -> DriftSummary:
    """Pair eigenvalue locations by minimal total displacement.

    Pairs further apart than ``max_pair`` (default: no limit) count as
    unmatched.
    """
    from scipy.optimize import linear_sum_assignment
    base, pert = np.sort(np.asarray(base, float)), np.sort(np.asarray(pert, float))
    max_pair = math.inf if max_pair is None else max_pair
    drifts, ub, up = [], set(range(len(base))), set(range(len(pert)))
    if len(base) and len(pert):
        cost = np.abs(base[:, None] - pert[None, :])
        rows, cols = linear_sum_assignment(cost)
        for i, j in zip(rows, cols):
            if cost[i, j] <= max_pair:
                s = pert[j] - base[i]
                drifts.append(Drift(float(base[i]), float(pert[j]), float(s),
                                    bool(abs(s) > grid_step * (1 + 1e-9))))
                ub.discard(i)
                up.discard(j)
    drifts.sort(key=lambda d: d.baseline)
    return DriftSummary(drifts, [float(base[i]) for i in sorted(ub)],
                        [float(pert[j]) for j in sorted(up)], grid_step)


def compare(report_a, report_b, max_pair=None) -> DriftSummary:
    """Eigenvalue drift between a baseline and a perturbed detection report."""
    a = report_a if isinstance(report_a, detection.DetectionReport) else \
        detection.DetectionReport.load(report_a)
    b = report_b if isinstance(report_b, detection.DetectionReport) else \
        detection.DetectionReport.load(report_b)
    if a.geometry_hash and b.geometry_hash and a.geometry_hash != b.geometry_hash:
        raise IncompatibilityError("reports come from different geometries")
    if a.k is not None and b.k is not None and not math.isclose(a.k, b.k):
        raise IncompatibilityError(f"reports use different wave numbers ({a.k} vs {b.k})")
    if not math.isclose(a.grid_step, b.grid_step, rel_tol=1e-9):
        raise IncompatibilityError("reports use different grid steps")
    return compare_locations(a.locations, b.locations, a.grid_step, max_pair)
