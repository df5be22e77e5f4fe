import math
from dataclasses import dataclass

import numpy as np
import pytest
from hypothesis import settings

from screensig import detection, eigen, forward
from screensig.geometry import build_screen_disk_mesh
from screensig.scenario import Patch, Scenario

settings.register_profile("ci", max_examples=25, deadline=None)
settings.load_profile("ci")


@pytest.fixture(scope="session")
def mesh01():
    return build_screen_disk_mesh(target_h=0.1)


@pytest.fixture(scope="session")
def mesh005():
    return build_screen_disk_mesh(target_h=0.05)


@pytest.fixture(scope="session")
def closed01():
    return build_screen_disk_mesh(arc=(0, 2 * math.pi), target_h=0.1, closed=True)


@dataclass
class SweepData:
    scenario: Scenario
    mesh: object
    grid: np.ndarray
    F: object              # noisy data, healthy screen
    F_damaged: object      # noisy data, beta x1.25 on the middle third
    F_lam: list            # auxiliary matrices, one per grid point
    spectrum: object
    spectrum_damaged: object

    def aux(self, lam):
        i = int(np.argmin(np.abs(self.grid - lam)))
        return self.F_lam[i]


@pytest.fixture(scope="session")
def sweep(mesh005):
    """Everything the detection tests share for the default scenario."""
    sc = Scenario()
    mesh = mesh005
    inc = sc.incident.angles()
    grid = sc.sweep.grid()
    coeffs = sc.surface_coefficients()
    L = mesh.arc_length
    damaged = coeffs.patched("beta", L / 3, 2 * L / 3, 1.25)
    F = detection.add_noise(forward.far_field_matrix(mesh, coeffs, sc.k, inc), sc.noise, sc.seed)
    Fd = detection.add_noise(forward.far_field_matrix(mesh, damaged, sc.k, inc), sc.noise,
                             sc.seed)
    system = forward.assemble_auxiliary_system(mesh, sc.k)
    F_lam = [forward.aux_far_field_matrix(mesh, sc.k, lam, inc, system=system) for lam in grid]
    spec = eigen.solve_spectrum(eigen.assemble_eigen_forms(mesh, coeffs, sc.k))
    spec_d = eigen.solve_spectrum(eigen.assemble_eigen_forms(mesh, damaged, sc.k))
    return SweepData(sc, mesh, grid, F, Fd, F_lam, spec, spec_d)


# ---------------------------------------------------------------------------
# acceptance summary: one line per criterion at the end of the run
# ---------------------------------------------------------------------------
ACCEPTANCE = {}


@pytest.fixture
def record_criterion():
    def record(number, title, passed, detail, seconds):
        ACCEPTANCE[number] = (title, bool(passed), detail, seconds)
    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        title, ok, detail, secs = ACCEPTANCE[n]
        tr.write_line(f"criterion {n} [{'PASS' if ok else 'FAIL'}] {title}: {detail} "
                      f"({secs:.1f} s)")
