"""P1 finite element primitives and the circular DtN closure."""

from __future__ import annotations

import logging
import math

import numpy as np
import scipy.sparse as sp
from scipy.special import hankel1, h1vp

logger = logging.getLogger(__name__)

# 2- and 3-point Gauss-Legendre rules on [0, 1]
GAUSS2 = (np.array([0.5 - 0.5 / math.sqrt(3), 0.5 + 0.5 / math.sqrt(3)]), np.array([0.5, 0.5]))
GAUSS3 = (0.5 + 0.5 * np.array([-math.sqrt(0.6), 0.0, math.sqrt(0.6)]),
          np.array([5.0, 8.0, 5.0]) / 18.0)


def stiffness_mass(vertices, triangles, n=None):
    """Global P1 stiffness and mass matrices (CSR) over ``triangles``."""
    n = len(vertices) if n is None else n
    p = vertices[triangles]
    d1 = p[:, 1] - p[:, 0]
    d2 = p[:, 2] - p[:, 0]
    det = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]
    area = 0.5 * det
    # gradients of barycentric coordinates
    g1 = np.stack([d2[:, 1], -d2[:, 0]], axis=1) / det[:, None]
    g2 = np.stack([-d1[:, 1], d1[:, 0]], axis=1) / det[:, None]
    g0 = -g1 - g2
    g = np.stack([g0, g1, g2], axis=1)
    k_loc = area[:, None, None] * np.einsum("tik,tjk->tij", g, g)
    m_ref = (np.ones((3, 3)) + np.eye(3)) / 12.0
    m_loc = area[:, None, None] * m_ref[None]
    rows = np.repeat(triangles, 3, axis=1).ravel()
    cols = np.tile(triangles, (1, 3)).ravel()
    stiff = sp.coo_matrix((k_loc.ravel(), (rows, cols)), shape=(n, n)).tocsr()
    mass = sp.coo_matrix((m_loc.ravel(), (rows, cols)), shape=(n, n)).tocsr()
    return stiff, mass


def edge_mass(vertices, edges, n=None, weight=None):
    """P1 boundary mass ``int_edges w u v ds``; ``weight`` per edge (constant)."""
    n = len(vertices) if n is None else n
    if len(edges) == 0:
        return sp.csr_matrix((n, n))
    ell = np.linalg.norm(vertices[edges[:, 1]] - vertices[edges[:, 0]], axis=1)
    w = ell if weight is None else ell * weight
    loc = np.array([[2.0, 1.0], [1.0, 2.0]]) / 6.0
    vals = w[:, None, None] * loc[None]
    rows = np.repeat(edges, 2, axis=1).ravel()
    cols = np.tile(edges, (1, 2)).ravel()
    return sp.coo_matrix((vals.ravel(), (rows, cols)), shape=(n, n)).tocsr()


def edge_geometry(vertices, edges):
    """Lengths, unit tangents and right-hand unit normals of oriented edges."""
    d = vertices[edges[:, 1]] - vertices[edges[:, 0]]
    ell = np.linalg.norm(d, axis=1)
    t = d / ell[:, None]
    nrm = np.stack([t[:, 1], -t[:, 0]], axis=1)
    return ell, t, nrm


# ---------------------------------------------------------------------------
# Dirichlet-to-Neumann map on |x| = R
# ---------------------------------------------------------------------------
def dtn_symbols(k, radius, n_max):
    """``k H_n'(kR) / H_n(kR)`` for ``n = 0..n_max``.

    Uses the forward recurrence of ``H_{n-1}/H_n``, which is stable because
    the Hankel function is the dominant solution of the Bessel recurrence
    for ``n > kR``; no Hankel value is ever formed, so nothing overflows.
    """
    if not (k > 0 and radius > 0):
        raise ValueError("k and R must be positive")
    x = k * radius
    out = np.empty(n_max + 1, dtype=complex)
    out[0] = k * h1vp(0, x) / hankel1(0, x)
    if n_max == 0:
        return out
    ratio = hankel1(0, x) / hankel1(1, x)  # H_{n-1}/H_n at n = 1
    for n in range(1, n_max + 1):
        out[n] = k * (ratio - n / x)
        ratio = 1.0 / (2.0 * n / x - ratio)
    bad = ~np.isfinite(out)
    if np.any(bad):
        n = np.arange(n_max + 1)
        out[bad] = -n[bad] / radius
        logger.warning("DtN symbol saturated to -|n|/R for %d modes", int(bad.sum()))
    return out


def dtn_symbol(k, radius, n):
    """Exact DtN eigenvalue for the Fourier mode ``exp(i n theta)``."""
    return complex(dtn_symbols(k, radius, abs(int(n)))[-1])


def _phi1(y):
    small = np.abs(y) < 1e-3
    ys = np.where(small, 1.0, y)
    big = np.expm1(ys) / ys
    ser = 1 + y / 2 + y ** 2 / 6 + y ** 3 / 24
    return np.where(small, ser, big)


def _phi2(y):
    small = np.abs(y) < 1e-2
    ys = np.where(small, 1.0, y)
    big = (np.expm1(ys) - ys) / ys ** 2
    ser = 0.5 + y / 6 + y ** 2 / 24 + y ** 3 / 120 + y ** 4 / 720
    return np.where(small, ser, big)


def fourier_projector(vertices, outer_edges, n_max):
    """Matrix ``C`` with ``(C w)_n = (1/2pi) int_0^{2pi} w(theta) e^{-in theta}``.

    ``w`` is piecewise linear in the polar angle between the nodes of the
    (counter-clockwise) outer edges; rows are ordered ``n = -n_max..n_max``.
    Integrals are evaluated in closed form.
    """
    n_dofs = len(vertices)
    modes = np.arange(-n_max, n_max + 1)
    a = outer_edges[:, 0]
    b = outer_edges[:, 1]
    ta = np.arctan2(vertices[a, 1], vertices[a, 0])
    tb = np.arctan2(vertices[b, 1], vertices[b, 0])
    delta = np.mod(tb - ta, 2 * math.pi)
    y = -1j * np.outer(modes, delta)
    base = np.exp(-1j * np.outer(modes, ta)) * delta[None, :] / (2 * math.pi)
    falling = base * _phi2(y)          # hat of node a
    rising = base * (_phi1(y) - _phi2(y))  # hat of node b
    C = np.zeros((len(modes), n_dofs), dtype=complex)
    np.add.at(C.T, a, falling.T)
    np.add.at(C.T, b, rising.T)
    return modes, C


def dtn_matrix(vertices, outer_edges, k, radius, n_max):
    """Sparse matrix of ``-int_{|x|=R} (DtN w) v ds`` on P1 outer traces."""
    modes, C = fourier_projector(vertices, outer_edges, n_max)
    sym = dtn_symbols(k, radius, n_max)[np.abs(modes)]
    dofs = np.unique(outer_edges)
    Cd = C[:, dofs]
    block = -2 * math.pi * radius * (Cd.conj().T * sym[None, :]) @ Cd
    n = len(vertices)
    rows = np.repeat(dofs, len(dofs))
    cols = np.tile(dofs, len(dofs))
    return sp.coo_matrix((block.ravel(), (rows, cols)), shape=(n, n)).tocsr()
