"""Structured polar meshes of a disk with a screen on its boundary.

The computational domain is the disk ``|x| < R`` split by the circle
``|x| = disk_radius`` into the interior region ``D`` (tag 0) and the
annulus (tag 1).  The screen is an arc of ``dD``.  Vertices strictly
inside the arc are duplicated: the original id carries the trace from
inside ``D`` (minus side), the duplicate carries the trace from the
annulus (plus side, the side the outward normal of ``D`` points into).
Tip vertices keep a single id.

Meshes are built on a single-valued "geometric" triangulation first
(rings zipped together, then longest-edge bisection toward the tips) and
unzipped along the screen at the very end, so refinement never has to
reason about duplicated nodes.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import GeometryError, MeshIntegrityError

TWO_PI = 2.0 * math.pi

INTERIOR, ANNULUS = 0, 1
GAMMA_PLUS, GAMMA_MINUS, REST, OUTER = 0, 1, 2, 3
EDGE_TAG_NAMES = {GAMMA_PLUS: "gamma_plus", GAMMA_MINUS: "gamma_minus",
                  REST: "rest", OUTER: "outer"}

# geometric (pre-unzip) edge tags
_G_GAMMA, _G_REST, _G_OUTER = "gamma", "rest", "outer"


@dataclass(frozen=True, eq=False)
class CrackMesh:
    """Conforming P1 triangulation with the screen realized by double nodes.

    Attributes
    ----------
    vertices : (n, 2) float array
        Dof coordinates. Paired plus/minus dofs have bitwise equal rows.
    triangles : (m, 3) int array
        Counter-clockwise dof triples.
    regions : (m,) int array
        ``INTERIOR`` (inside D) or ``ANNULUS``.
    edges : (e, 2) int array
        Tagged edges, each oriented counter-clockwise around the origin.
    edge_tags : (e,) int array
        One of ``GAMMA_PLUS``, ``GAMMA_MINUS``, ``REST``, ``OUTER``.
    edge_pairs : (e,) int array
        Index of the coincident edge on the other side of the screen, -1
        for non-screen edges.
    double_nodes : (p, 2) int array
        Rows ``(plus_dof, minus_dof)`` for every screen vertex off the tips.
    tips : (t,) int array
        Dofs at the screen end points (empty for a closed screen).
    """

    vertices: np.ndarray
    triangles: np.ndarray
    regions: np.ndarray
    edges: np.ndarray
    edge_tags: np.ndarray
    edge_pairs: np.ndarray
    double_nodes: np.ndarray
    tips: np.ndarray
    disk_radius: float
    outer_radius: float
    arc: tuple[float, float]
    closed: bool
    target_h: float
    tip_grading: float = 1.0
    meta: dict = field(default_factory=dict, compare=False)

    # -- basic sizes -------------------------------------------------------
    @property
    def n_dofs(self) -> int:
        return len(self.vertices)

    @property
    def arc_length(self) -> float:
        """Analytic length of the screen."""
        return self.disk_radius * (self.arc[1] - self.arc[0])

    def edges_with(self, tag: int) -> np.ndarray:
        return self.edges[self.edge_tags == tag]

    @property
    def h_max(self) -> float:
        """Largest element diameter (longest edge)."""
        p = self.vertices[self.triangles]
        lengths = np.linalg.norm(p - np.roll(p, 1, axis=1), axis=2)
        return float(lengths.max())

    # -- screen helpers ----------------------------------------------------
    def arc_parameter(self, points: np.ndarray) -> np.ndarray:
        """Arc-length parameter ``s`` of points lying on ``dD``.

        Points near the screen are mapped to ``[0, arc_length]``; the seam of
        a closed screen is placed at ``s = 0``.
        """
        pts = np.atleast_2d(points)
        theta = np.arctan2(pts[:, 1], pts[:, 0])
        span = self.arc[1] - self.arc[0]
        rel = np.mod(theta - self.arc[0], TWO_PI)
        if not self.closed:
            gap = TWO_PI - span
            rel = np.where(rel > span + 0.5 * gap, rel - TWO_PI, rel)
            rel = np.clip(rel, 0.0, span)
        return self.disk_radius * rel

    def screen_point(self, s) -> np.ndarray:
        """Map arc length to a point on the circle carrying the screen."""
        t = self.arc[0] + np.asarray(s, dtype=float) / self.disk_radius
        return self.disk_radius * np.stack([np.cos(t), np.sin(t)], axis=-1)

    def screen_edge_parameters(self) -> np.ndarray:
        """``(n_gamma, 2)`` arc parameters of the minus-side screen edges."""
        e = self.edges_with(GAMMA_MINUS)
        s = self.arc_parameter(self.vertices[e.ravel()]).reshape(-1, 2)
        # closed screen: last edge wraps across the seam
        wrap = s[:, 1] <= s[:, 0]
        s[wrap, 1] += self.arc_length if self.closed else 0.0
        return s

    def region_dofs(self, region: int) -> np.ndarray:
        return np.unique(self.triangles[self.regions == region])

    def boundary_dofs(self, tag: int) -> np.ndarray:
        """Dofs on edges of the given tag (tip dofs included)."""
        return np.unique(self.edges_with(tag))

    def rest_dofs(self) -> np.ndarray:
        """Dofs strictly inside ``dD \\ Gamma`` (tips excluded)."""
        d = self.boundary_dofs(REST)
        return np.setdiff1d(d, self.tips)

    # -- serialization -----------------------------------------------------
    def to_dict(self) -> dict:
        edges = []
        for (a, b), tag, pair in zip(self.edges.tolist(), self.edge_tags.tolist(),
                                     self.edge_pairs.tolist()):
            edges.append({"endpoints": [a, b], "tag": EDGE_TAG_NAMES[tag],
                          "pair": pair})
        return {
            "vertices": self.vertices.tolist(),
            "triangles": [{"vertices": t, "region": int(r)} for t, r in
                          zip(self.triangles.tolist(), self.regions.tolist())],
            "edges": edges,
            "double_nodes": self.double_nodes.tolist(),
            "tips": self.tips.tolist(),
            "meta": {
                "disk_radius": self.disk_radius,
                "outer_radius": self.outer_radius,
                "arc": list(self.arc),
                "closed": self.closed,
                "h": self.target_h,
                "tip_grading": self.tip_grading,
            },
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, data: dict) -> "CrackMesh":
        names = {v: k for k, v in EDGE_TAG_NAMES.items()}
        meta = data["meta"]
        tris = data["triangles"]
        edges = data["edges"]
        mesh = cls(
            vertices=np.asarray(data["vertices"], dtype=float).reshape(-1, 2),
            triangles=np.asarray([t["vertices"] for t in tris], dtype=np.int64).reshape(-1, 3),
            regions=np.asarray([t["region"] for t in tris], dtype=np.int64),
            edges=np.asarray([e["endpoints"] for e in edges], dtype=np.int64).reshape(-1, 2),
            edge_tags=np.asarray([names[e["tag"]] for e in edges], dtype=np.int64),
            edge_pairs=np.asarray([e["pair"] for e in edges], dtype=np.int64),
            double_nodes=np.asarray(data["double_nodes"], dtype=np.int64).reshape(-1, 2),
            tips=np.asarray(data["tips"], dtype=np.int64),
            disk_radius=float(meta["disk_radius"]),
            outer_radius=float(meta["outer_radius"]),
            arc=(float(meta["arc"][0]), float(meta["arc"][1])),
            closed=bool(meta["closed"]),
            target_h=float(meta["h"]),
            tip_grading=float(meta.get("tip_grading", 1.0)),
        )
        check_mesh(mesh)
        return mesh

    @classmethod
    def from_json(cls, text: str) -> "CrackMesh":
        return cls.from_dict(json.loads(text))


# ---------------------------------------------------------------------------
# geometric (single-valued) triangulation
# ---------------------------------------------------------------------------
class _Geo:
    """Mutable single-valued triangulation used during construction."""

    def __init__(self, points, tris, regions, edge_tags, radii):
        self.points = [tuple(p) for p in points]
        self.tris = {i: list(t) for i, t in enumerate(tris)}
        self.regions = {i: r for i, r in enumerate(regions)}
        self.edge_tags = dict(edge_tags)
        self.radii = radii  # curve radius per edge tag, for midpoint projection
        self.next_id = len(self.tris)
        self.edge2tri: dict[tuple[int, int], set[int]] = {}
        for i, t in self.tris.items():
            for e in _tri_edges(t):
                self.edge2tri.setdefault(e, set()).add(i)

    def _length(self, e):
        (x0, y0), (x1, y1) = self.points[e[0]], self.points[e[1]]
        return math.hypot(x1 - x0, y1 - y0)

    def longest_edge(self, t):
        return max(_tri_edges(self.tris[t]), key=lambda e: (round(self._length(e), 12), e))

    def diameter(self, t):
        return max(self._length(e) for e in _tri_edges(self.tris[t]))

    def centroid(self, t):
        p = [self.points[v] for v in self.tris[t]]
        return (sum(q[0] for q in p) / 3.0, sum(q[1] for q in p) / 3.0)

    def _bisect_edge(self, e):
        a, b = e
        (x0, y0), (x1, y1) = self.points[a], self.points[b]
        mx, my = 0.5 * (x0 + x1), 0.5 * (y0 + y1)
        tag = self.edge_tags.pop(e, None)
        if tag is not None:
            r = self.radii[tag]
            scale = r / math.hypot(mx, my)
            mx, my = mx * scale, my * scale
        m = len(self.points)
        self.points.append((mx, my))
        if tag is not None:
            self.edge_tags[_key(a, m)] = tag
            self.edge_tags[_key(m, b)] = tag
        for t in list(self.edge2tri.pop(e)):
            tri = self.tris.pop(t)
            region = self.regions.pop(t)
            for ed in _tri_edges(tri):
                if ed != e:
                    self.edge2tri[ed].discard(t)
            # rotate so the bisected edge is (tri[0], tri[1]) in cyclic order
            while _key(tri[0], tri[1]) != e:
                tri = tri[1:] + tri[:1]
            p, q, c = tri
            for child in ([p, m, c], [m, q, c]):
                cid = self.next_id
                self.next_id += 1
                self.tris[cid] = child
                self.regions[cid] = region
                for ed in _tri_edges(child):
                    self.edge2tri.setdefault(ed, set()).add(cid)

    def refine_triangle(self, t):
        """Rivara longest-edge bisection of ``t`` keeping conformity."""
        while t in self.tris:
            e = self.longest_edge(t)
            others = self.edge2tri[e] - {t}
            if not others:
                self._bisect_edge(e)
                return
            nb = next(iter(others))
            if self.longest_edge(nb) == e:
                self._bisect_edge(e)
                return
            self.refine_triangle(nb)

    def arrays(self):
        ids = sorted(self.tris)
        tris = np.array([self.tris[i] for i in ids], dtype=np.int64)
        regions = np.array([self.regions[i] for i in ids], dtype=np.int64)
        return np.array(self.points, dtype=float), tris, regions, dict(self.edge_tags)


def _key(a, b):
    return (a, b) if a < b else (b, a)


def _tri_edges(t):
    return (_key(t[0], t[1]), _key(t[1], t[2]), _key(t[2], t[0]))


def _zip_rings(inner, inner_phi, outer, outer_phi):
    """Triangulate the band between two closed rings of nodes."""
    mi, mo = len(inner), len(outer)
    tris = []
    if mi == 1:
        for q in range(mo):
            tris.append((inner[0], outer[q], outer[(q + 1) % mo]))
        return tris
    p = q = 0
    while p < mi or q < mo:
        nxt_in = inner_phi[p + 1] if p + 1 < mi else TWO_PI
        nxt_out = outer_phi[q + 1] if q + 1 < mo else TWO_PI
        if q >= mo or (p < mi and nxt_in <= nxt_out):
            tris.append((inner[p], outer[q % mo], inner[(p + 1) % mi]))
            p += 1
        else:
            tris.append((inner[p % mi], outer[q], outer[(q + 1) % mo]))
            q += 1
    return tris


def _orient(points, tris):
    p = points[tris]
    area = 0.5 * ((p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1])
                  - (p[:, 2, 0] - p[:, 0, 0]) * (p[:, 1, 1] - p[:, 0, 1]))
    tris = tris.copy()
    flip = area < 0
    tris[flip] = tris[flip][:, [0, 2, 1]]
    return tris


def _polar_rings(arc, closed, r_d, r_out, h):
    """Nodes and triangles of the ring-zipped mesh (before tip grading)."""
    a, b = arc
    span = b - a
    n_in = max(2, math.ceil(r_d / h))
    n_out = max(2, math.ceil((r_out - r_d) / h))
    radii = [r_d * i / n_in for i in range(n_in + 1)]
    radii += [r_d + (r_out - r_d) * j / n_out for j in range(1, n_out + 1)]
    disk_ring = n_in

    points = []
    rings = []  # (ids, relative angles)
    gamma_edges, rest_edges, outer_edges = [], [], []
    for i, r in enumerate(radii):
        if i == 0:
            phi = np.zeros(1)
        elif i == disk_ring and not closed:
            n_g = max(2, math.ceil(r * span / h))
            n_c = max(2, math.ceil(r * (TWO_PI - span) / h))
            phi = np.concatenate([span * np.arange(n_g) / n_g,
                                  span + (TWO_PI - span) * np.arange(n_c) / n_c])
        else:
            m = max(8, math.ceil(TWO_PI * r / h))
            phi = TWO_PI * np.arange(m) / m
        ids = list(range(len(points), len(points) + len(phi)))
        for f in phi:
            points.append((r * math.cos(a + f), r * math.sin(a + f)) if r > 0 else (0.0, 0.0))
        rings.append((ids, phi))
        if i == disk_ring:
            for j, f in enumerate(phi):
                e = _key(ids[j], ids[(j + 1) % len(ids)])
                f_next = phi[j + 1] if j + 1 < len(phi) else TWO_PI
                mid = 0.5 * (f + f_next)
                (gamma_edges if closed or mid < span else rest_edges).append(e)
        if i == len(radii) - 1:
            outer_edges = [_key(ids[j], ids[(j + 1) % len(ids)]) for j in range(len(ids))]

    tris, regions = [], []
    for i in range(len(rings) - 1):
        band = _zip_rings(rings[i][0], rings[i][1], rings[i + 1][0], rings[i + 1][1])
        tris += band
        regions += [INTERIOR if i < disk_ring else ANNULUS] * len(band)
    points = np.asarray(points)
    tris = _orient(points, np.asarray(tris, dtype=np.int64))
    tags = {e: _G_GAMMA for e in gamma_edges}
    tags.update({e: _G_REST for e in rest_edges})
    tags.update({e: _G_OUTER for e in outer_edges})
    return points, tris, np.asarray(regions), tags


def _grade_tips(geo: _Geo, tips, h, grading, layers):
    if grading <= 1.0 or not tips:
        return
    for j in range(1, layers + 1):
        size = h / grading ** j
        radius = h * (layers + 1 - j)
        while True:
            marked = []
            for t in sorted(geo.tris):
                cx, cy = geo.centroid(t)
                d = min(math.hypot(cx - x, cy - y) for x, y in tips)
                if d < radius and geo.diameter(t) > size * (1 + 1e-9):
                    marked.append(t)
            if not marked:
                break
            for t in marked:
                if t in geo.tris:
                    geo.refine_triangle(t)


def _red_refine(points, tris, regions, edge_tags, radii):
    """Uniform red refinement; tagged midpoints are projected to their circle."""
    e_all = np.sort(np.concatenate([tris[:, [0, 1]], tris[:, [1, 2]], tris[:, [2, 0]]]), axis=1)
    uniq, inv = np.unique(e_all, axis=0, return_inverse=True)
    inv = inv.ravel()
    mids = 0.5 * (points[uniq[:, 0]] + points[uniq[:, 1]])
    index = {tuple(e): i for i, e in enumerate(uniq.tolist())}
    new_tags = {}
    n = len(points)
    for e, tag in edge_tags.items():
        i = index[e]
        mids[i] *= radii[tag] / np.hypot(*mids[i])
        new_tags[_key(e[0], n + i)] = tag
        new_tags[_key(n + i, e[1])] = tag
    m = len(tris)
    mab, mbc, mca = (n + inv[:m], n + inv[m:2 * m], n + inv[2 * m:])
    a, b, c = tris[:, 0], tris[:, 1], tris[:, 2]
    children = np.concatenate([
        np.stack([a, mab, mca], 1), np.stack([mab, b, mbc], 1),
        np.stack([mca, mbc, c], 1), np.stack([mab, mbc, mca], 1)])
    return np.vstack([points, mids]), children, np.tile(regions, 4), new_tags


def _ccw(points, e):
    p, q = points[e[0]], points[e[1]]
    return e if p[0] * q[1] - p[1] * q[0] > 0 else (e[1], e[0])


def _unzip(points, tris, regions, edge_tags, *, disk_radius, outer_radius, arc, closed,
           target_h, tip_grading) -> CrackMesh:
    gamma = [_ccw(points, e) for e, t in edge_tags.items() if t == _G_GAMMA]
    rest = [_ccw(points, e) for e, t in edge_tags.items() if t == _G_REST]
    outer = [_ccw(points, e) for e, t in edge_tags.items() if t == _G_OUTER]
    gamma_vertices = {v for e in gamma for v in e}
    rest_vertices = {v for e in rest for v in e}
    tips = sorted(gamma_vertices & rest_vertices)
    interior_gamma = sorted(gamma_vertices - set(tips))

    n = len(points)
    plus_of = {v: n + i for i, v in enumerate(interior_gamma)}
    vertices = np.vstack([points, points[interior_gamma]]) if interior_gamma else points.copy()
    tris = tris.copy()
    ann = regions == ANNULUS
    sub = tris[ann]
    for v, pv in plus_of.items():
        sub[sub == v] = pv
    tris[ann] = sub

    def _param(e):
        th = math.atan2(*(0.5 * (points[e[0]] + points[e[1]]))[::-1])
        return (th - arc[0]) % TWO_PI

    gamma.sort(key=_param)
    rest.sort(key=_param)
    outer.sort(key=lambda e: math.atan2(*(points[e[0]] + points[e[1]])[::-1]) % TWO_PI)

    edges, tags, pairs = [], [], []
    for e in gamma:
        i = len(edges)
        edges.append((plus_of.get(e[0], e[0]), plus_of.get(e[1], e[1])))
        tags.append(GAMMA_PLUS)
        pairs.append(i + 1)
        edges.append(e)
        tags.append(GAMMA_MINUS)
        pairs.append(i)
    for e in rest:
        edges.append(e)
        tags.append(REST)
        pairs.append(-1)
    for e in outer:
        edges.append(e)
        tags.append(OUTER)
        pairs.append(-1)

    mesh = CrackMesh(
        vertices=vertices,
        triangles=tris,
        regions=regions.astype(np.int64),
        edges=np.asarray(edges, dtype=np.int64).reshape(-1, 2),
        edge_tags=np.asarray(tags, dtype=np.int64),
        edge_pairs=np.asarray(pairs, dtype=np.int64),
        double_nodes=np.asarray([(plus_of[v], v) for v in interior_gamma],
                                dtype=np.int64).reshape(-1, 2),
        tips=np.asarray(tips, dtype=np.int64),
        disk_radius=float(disk_radius),
        outer_radius=float(outer_radius),
        arc=(float(arc[0]), float(arc[1])),
        closed=bool(closed),
        target_h=float(target_h),
        tip_grading=float(tip_grading),
    )
    check_mesh(mesh)
    return mesh


def _zip_back(mesh: CrackMesh):
    """Inverse of the unzip: merge plus dofs into their minus partners."""
    merge = np.arange(mesh.n_dofs)
    if len(mesh.double_nodes):
        merge[mesh.double_nodes[:, 0]] = mesh.double_nodes[:, 1]
    keep = np.setdiff1d(np.arange(mesh.n_dofs), mesh.double_nodes[:, 0])
    renum = -np.ones(mesh.n_dofs, dtype=np.int64)
    renum[keep] = np.arange(len(keep))
    points = mesh.vertices[keep]
    tris = renum[merge[mesh.triangles]]
    g = {GAMMA_MINUS: _G_GAMMA, REST: _G_REST, OUTER: _G_OUTER}
    tags = {}
    for e, t in zip(mesh.edges.tolist(), mesh.edge_tags.tolist()):
        if t in g:
            a, b = renum[merge[e[0]]], renum[merge[e[1]]]
            tags[_key(int(a), int(b))] = g[t]
    return points, tris, mesh.regions.copy(), tags


# ---------------------------------------------------------------------------
# public operations
# ---------------------------------------------------------------------------
def _check_arc(arc, closed):
    a, b = float(arc[0]), float(arc[1])
    span = b - a
    if closed:
        if not math.isclose(span, TWO_PI, rel_tol=0, abs_tol=1e-12):
            raise GeometryError("a closed screen must span exactly 2*pi")
        return a, a + TWO_PI
    if not (0.0 < span < TWO_PI):
        raise GeometryError(f"degenerate screen arc of angular length {span!r}; "
                            "use closed=True for the full circle")
    return a, b


def build_screen_disk_mesh(arc=(0.0, math.pi), disk_radius=1.0, outer_radius=2.0,
                           target_h=0.1, tip_grading=2.0, *, closed=False,
                           grading_layers=3) -> CrackMesh:
    """Mesh the disk ``|x| < outer_radius`` with a screen on ``|x| = disk_radius``.

    The element size is ``target_h`` away from the tips; within
    ``grading_layers`` bands around each tip it shrinks by ``tip_grading``
    per band.
    """
    a, b = _check_arc(arc, closed)
    if not disk_radius > 0:
        raise GeometryError("disk_radius must be positive")
    if not outer_radius > disk_radius:
        raise GeometryError("outer_radius must exceed disk_radius")
    if not target_h > 0:
        raise GeometryError("target_h must be positive")
    if tip_grading < 1:
        raise GeometryError("tip_grading must be >= 1")
    h = min(target_h, 0.5 * (outer_radius - disk_radius), 0.5 * disk_radius)

    points, tris, regions, tags = _polar_rings((a, b), closed, disk_radius, outer_radius, h)
    radii = {_G_GAMMA: disk_radius, _G_REST: disk_radius, _G_OUTER: outer_radius}
    if not closed and tip_grading > 1:
        geo = _Geo(points, tris, regions, tags, radii)
        tip_xy = [(disk_radius * math.cos(t), disk_radius * math.sin(t)) for t in (a, b)]
        _grade_tips(geo, tip_xy, h, tip_grading, grading_layers)
        points, tris, regions, tags = geo.arrays()
        tris = _orient(points, tris)
    return _unzip(points, tris, regions, tags, disk_radius=disk_radius,
                  outer_radius=outer_radius, arc=(a, b), closed=closed,
                  target_h=target_h, tip_grading=tip_grading)


def refine(mesh: CrackMesh) -> CrackMesh:
    """Uniform red refinement with tags, pairings and double nodes carried over."""
    points, tris, regions, tags = _zip_back(mesh)
    radii = {_G_GAMMA: mesh.disk_radius, _G_REST: mesh.disk_radius,
             _G_OUTER: mesh.outer_radius}
    points, tris, regions, tags = _red_refine(points, tris, regions, tags, radii)
    return _unzip(points, tris, regions, tags, disk_radius=mesh.disk_radius,
                  outer_radius=mesh.outer_radius, arc=mesh.arc, closed=mesh.closed,
                  target_h=mesh.target_h / 2, tip_grading=mesh.tip_grading)


@dataclass(frozen=True)
class BoundaryReport:
    counts: dict
    lengths: dict

    @property
    def gamma_length(self) -> float:
        return self.lengths["gamma_minus"]

    @property
    def rest_length(self) -> float:
        return self.lengths["rest"]


def classify_boundary(mesh: CrackMesh) -> BoundaryReport:
    """Per-tag edge counts and polygonal lengths; verifies that every
    topological boundary edge carries a tag."""
    tagged = {tuple(sorted(e)) for e in mesh.edges.tolist()}
    for e in _topological_boundary(mesh.triangles):
        if e not in tagged:
            raise MeshIntegrityError(f"untagged boundary edge {e}")
    counts, lengths = {}, {}
    for tag, name in EDGE_TAG_NAMES.items():
        e = mesh.edges_with(tag)
        counts[name] = int(len(e))
        d = mesh.vertices[e[:, 1]] - mesh.vertices[e[:, 0]]
        lengths[name] = float(np.linalg.norm(d, axis=1).sum())
    return BoundaryReport(counts, lengths)


def _topological_boundary(tris):
    e = np.sort(np.concatenate([tris[:, [0, 1]], tris[:, [1, 2]], tris[:, [2, 0]]]), axis=1)
    uniq, cnt = np.unique(e, axis=0, return_counts=True)
    return [tuple(x) for x in uniq[cnt == 1].tolist()]


def signed_areas(vertices, triangles) -> np.ndarray:
    p = vertices[triangles]
    return 0.5 * ((p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1])
                  - (p[:, 2, 0] - p[:, 0, 0]) * (p[:, 1, 1] - p[:, 0, 1]))


def check_mesh(mesh: CrackMesh) -> None:
    """Raise :class:`MeshIntegrityError` if any structural invariant fails."""
    if np.any(signed_areas(mesh.vertices, mesh.triangles) <= 0):
        raise MeshIntegrityError("non-positive triangle area")
    e = np.sort(np.concatenate([mesh.triangles[:, [0, 1]], mesh.triangles[:, [1, 2]],
                                mesh.triangles[:, [2, 0]]]), axis=1)
    _, cnt = np.unique(e, axis=0, return_counts=True)
    if np.any(cnt > 2):
        raise MeshIntegrityError("non-conforming triangulation: edge shared by >2 triangles")
    dn = mesh.double_nodes
    if len(dn) and not np.array_equal(mesh.vertices[dn[:, 0]], mesh.vertices[dn[:, 1]]):
        raise MeshIntegrityError("double-node coordinates differ")
    if len(dn) and np.any(dn[:, 0] == dn[:, 1]):
        raise MeshIntegrityError("double node with a single dof")
    plus = mesh.edges_with(GAMMA_PLUS)
    minus = mesh.edges_with(GAMMA_MINUS)
    if len(plus) != len(minus):
        raise MeshIntegrityError("unpaired screen edges")
    for i in np.flatnonzero(mesh.edge_tags == GAMMA_PLUS):
        j = mesh.edge_pairs[i]
        if j < 0 or mesh.edge_pairs[j] != i or mesh.edge_tags[j] != GAMMA_MINUS:
            raise MeshIntegrityError("broken screen edge pairing")
        if not np.array_equal(mesh.vertices[mesh.edges[i]], mesh.vertices[mesh.edges[j]]):
            raise MeshIntegrityError("paired screen edges are not coincident")
    tips = set(mesh.tips.tolist())
    if not mesh.closed and len(minus) and len(tips) != 2:
        raise MeshIntegrityError("an open screen must have exactly two tips")
    if tips & set(dn.ravel().tolist()):
        raise MeshIntegrityError("tip vertex carries two dofs")
    # dD = Gamma + (dD \ Gamma) must be a closed curve
    ring = np.concatenate([minus, mesh.edges_with(REST)])
    if len(ring):
        deg = np.bincount(ring.ravel(), minlength=mesh.n_dofs)
        if np.any(deg[np.unique(ring)] != 2):
            raise MeshIntegrityError("dD is not a closed curve")
