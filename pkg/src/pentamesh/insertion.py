"""Incremental anisotropic Delaunay point insertion (4D Bowyer-Watson).

The kernel walks to a base element through facet neighbors, grows the
cavity of elements whose metric circumhyperspheres strictly contain the
new point, repairs the cavity until every boundary facet is visible from
the point, and retessellates the cavity boundary against the point.
The metric is evaluated once per insertion, at the inserted point.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field as dc_field

import numpy as np

from .geometry import (
    CANONICAL_FACETS,
    as_point4,
    resolve_field,
)
from .mesh import (
    CavityError,
    DuplicateVertexError,
    GhostPointError,
    Mesh4,
)
from .bounding import build_bounding_mesh
from .predicates import inhypersphere_m_d, orientation4
from .geometry import _det4

__all__ = [
    "AuditReport",
    "Cavity",
    "InsertionReport",
    "WalkStats",
    "audit_delaunay",
    "build_cavity",
    "enforce_visibility",
    "find_base_element",
    "inside_element",
    "insert_point",
    "triangulate",
]

DEFAULT_Q_TOL = 1e-16       # visibility threshold on the normalized product
DEFAULT_TOL_FACTOR = 1e-13  # walk tolerance, scaled by (local scale)^4
DEFAULT_SNAP_RTOL = 1e-12   # duplicate-vertex snap, relative to the box diagonal


@dataclass(frozen=True)
class WalkStats:
    steps: int
    fallback_used: bool


@dataclass
class Cavity:
    """Facet-connected element set plus its enclosing boundary facets."""

    elements: set[int]
    boundary: list[tuple[tuple[int, int, int, int], int, int]] = dc_field(default_factory=list)


@dataclass(frozen=True)
class InsertionReport:
    vertex: int
    new_elements: tuple[int, ...]
    cavity_size: int
    walk: WalkStats


@dataclass
class AuditReport:
    """Outcome of the empty-circumhypersphere audit."""

    violations: list[tuple[int, int, float]]
    n_checked: int

    @property
    def ok(self) -> bool:
        return not self.violations


# ---------------------------------------------------------------------------
# walking
# ---------------------------------------------------------------------------

def _facet_orientations(mesh: Mesh4, eid: int, p):
    """Orientation of each canonical facet against p, plus the walk tolerance."""
    verts = mesh.elements[eid]
    pts = [mesh.vertices[v] for v in verts]
    px, py, pz, pt = p
    scale = max(1.0, abs(px), abs(py), abs(pz), abs(pt),
                *(abs(c) for q in pts for c in q))
    diffs = [(q[0] - px, q[1] - py, q[2] - pz, q[3] - pt) for q in pts]
    thetas = [_det4(diffs[i0], diffs[i1], diffs[i2], diffs[i3])
              for i0, i1, i2, i3 in CANONICAL_FACETS]
    return thetas, scale ** 4


def inside_element(mesh: Mesh4, eid: int, p, tol_factor: float = DEFAULT_TOL_FACTOR):
    """Containment test via the five facet orientations.

    Returns ``(True, None)`` when every orientation clears the tolerance
    band (points exactly on shared facets count as inside, which avoids
    ghost points), otherwise ``(False, exit)`` where ``exit`` is the local
    facet whose violated orientation has the smallest magnitude - the
    facet closest to p.
    """
    thetas, s4 = _facet_orientations(mesh, eid, p)
    tol = tol_factor * s4
    if all(th >= -tol for th in thetas) or all(th <= tol for th in thetas):
        return True, None
    exit_li = min((i for i, th in enumerate(thetas) if th < -tol),
                  key=lambda i: abs(thetas[i]))
    return False, exit_li


def find_base_element(mesh: Mesh4, p, start: int | None = None,
                      tol_factor: float = DEFAULT_TOL_FACTOR):
    """Walk from ``start`` to an element containing p.

    A visited set keeps the path from cycling; if the walk exceeds the
    number of alive elements (or dead-ends), an exhaustive scan takes
    over.  Raises :class:`GhostPointError` when no element contains p.
    """
    if start is None or not mesh.alive(start):
        start = mesh.last_created
        if start is None or not mesh.alive(start):
            start = next(mesh.alive_elements(), None)
            if start is None:
                raise GhostPointError("mesh has no alive elements")
    current = start
    visited = {current}
    steps = 0
    limit = mesh.n_alive
    while True:
        thetas, s4 = _facet_orientations(mesh, current, p)
        tol = tol_factor * s4
        if all(th >= -tol for th in thetas) or all(th <= tol for th in thetas):
            return current, WalkStats(steps, False)
        moved = False
        for li in sorted((i for i, th in enumerate(thetas) if th < -tol),
                         key=lambda i: abs(thetas[i])):
            nb = mesh.neighbor(current, li)
            if nb is not None and nb[0] not in visited:
                current = nb[0]
                visited.add(current)
                steps += 1
                moved = True
                break
        if not moved or steps > limit:
            break
    for eid in mesh.alive_elements():
        ok, _ = inside_element(mesh, eid, p, tol_factor)
        if ok:
            return eid, WalkStats(steps, True)
    raise GhostPointError(f"no element contains point {p}")


# ---------------------------------------------------------------------------
# cavity
# ---------------------------------------------------------------------------

def _strictly_in_sphere(mesh: Mesh4, eid: int, p, metric) -> bool:
    pts = list(mesh.element_points(eid)) + [p]
    return inhypersphere_m_d(metric, pts).sign > 0


def cavity_boundary(mesh: Mesh4, elements: set[int]):
    """Boundary facets of an element set, each carried once by its owner."""
    boundary = []
    for eid in elements:
        verts = mesh.elements[eid]
        for li, pat in enumerate(CANONICAL_FACETS):
            nb = mesh.neighbor(eid, li)
            if nb is None or nb[0] not in elements:
                boundary.append((tuple(verts[i] for i in pat), eid, li))
    return boundary


def build_cavity(mesh: Mesh4, base: int, p, metric) -> Cavity:
    """Breadth-first growth of the strictly-in-sphere element set.

    The metric tensor is the one evaluated at the inserted point; the base
    element joins unconditionally, every other element joins exactly when
    its metric circumhypersphere strictly contains p.
    """
    elements = {base}
    front = deque()
    for li in range(5):
        nb = mesh.neighbor(base, li)
        if nb is not None:
            front.append(nb[0])
    seen = {base} | set(front)
    while front:
        eid = front.popleft()
        if not _strictly_in_sphere(mesh, eid, p, metric):
            continue
        elements.add(eid)
        for li in range(5):
            nb = mesh.neighbor(eid, li)
            if nb is not None and nb[0] not in seen:
                seen.add(nb[0])
                front.append(nb[0])
    cav = Cavity(elements)
    cav.boundary = cavity_boundary(mesh, elements)
    return cav


def _inward_normal(pts):
    """Inward Euclidean normal of an owner's canonical facet (plain tuples)."""
    a, b, c, d = pts
    u = (b[0] - a[0], b[1] - a[1], b[2] - a[2], b[3] - a[3])
    v = (c[0] - a[0], c[1] - a[1], c[2] - a[2], c[3] - a[3])
    w = (d[0] - a[0], d[1] - a[1], d[2] - a[2], d[3] - a[3])

    def minor(i, j, k):
        return (u[i] * (v[j] * w[k] - v[k] * w[j])
                - u[j] * (v[i] * w[k] - v[k] * w[i])
                + u[k] * (v[i] * w[j] - v[j] * w[i]))

    # negated (+,-,+,-) cofactors: canonical facet normals face outward
    return (-minor(1, 2, 3), minor(0, 2, 3), -minor(0, 1, 3), minor(0, 1, 2))


def _visibility_product(mesh: Mesh4, facet, owner_eid: int, p, metric) -> float:
    """Normalized Q = N^T M CP with N the owner's inward facet normal.

    N is the inward normal *in metric space*, M^{-1} times the Euclidean
    normal, so that Q vanishes exactly when reconnecting the facet to p
    would produce a zero-hypervolume element; both vectors are normalized
    to metric-unit length, which keeps the threshold meaningful across
    scales and metrics.  With those substitutions
    Q = (N_e . CP) / sqrt((N_e^T M^{-1} N_e) (CP^T M CP)).
    """
    pts = [mesh.vertices[v] for v in facet]
    ne = _inward_normal(pts)
    cen = tuple((pts[0][j] + pts[1][j] + pts[2][j] + pts[3][j]) / 4.0 for j in range(4))
    cp = (p[0] - cen[0], p[1] - cen[1], p[2] - cen[2], p[3] - cen[3])
    nc = ne[0] * cp[0] + ne[1] * cp[1] + ne[2] * cp[2] + ne[3] * cp[3]
    if metric is None:
        nn = ne[0] * ne[0] + ne[1] * ne[1] + ne[2] * ne[2] + ne[3] * ne[3]
        cc = cp[0] * cp[0] + cp[1] * cp[1] + cp[2] * cp[2] + cp[3] * cp[3]
    else:
        inv = metric.inv_rows
        nn = sum(ne[i] * (inv[i][0] * ne[0] + inv[i][1] * ne[1]
                          + inv[i][2] * ne[2] + inv[i][3] * ne[3]) for i in range(4))
        cc = metric.quad(cp)
    if nn <= 0.0 or cc <= 0.0:
        return -1.0
    q = nc / math.sqrt(nn * cc)
    if abs(q) < 1e-12:
        # near the visibility threshold: redo the pairing in extended precision
        ld = np.longdouble
        pts_ld = [np.array(v, dtype=ld) for v in pts]
        p_ld = np.array(p, dtype=ld)
        u, v_, w = pts_ld[1] - pts_ld[0], pts_ld[2] - pts_ld[0], pts_ld[3] - pts_ld[0]
        m = np.array([u, v_, w])

        def minor(i, j, k):
            return (m[0][i] * (m[1][j] * m[2][k] - m[1][k] * m[2][j])
                    - m[0][j] * (m[1][i] * m[2][k] - m[1][k] * m[2][i])
                    + m[0][k] * (m[1][i] * m[2][j] - m[1][j] * m[2][i]))

        ne_ld = np.array([-minor(1, 2, 3), minor(0, 2, 3),
                          -minor(0, 1, 3), minor(0, 1, 2)], dtype=ld)
        cp_ld = p_ld - sum(pts_ld) / ld(4)
        nc_ld = float(ne_ld @ cp_ld)
        q = nc_ld / math.sqrt(nn * cc)
    return q


def enforce_visibility(mesh: Mesh4, cavity: Cavity, p, metric,
                       q_tol: float = DEFAULT_Q_TOL, base: int | None = None) -> Cavity:
    """Shrink the cavity until p is visible from every boundary facet.

    Owners of invisible facets (normalized product at or below ``q_tol``)
    leave the cavity in queue order.  Visibility is a property of the facet
    alone, so each facet needs checking exactly once: removing an owner
    only exposes that owner's remaining facets, which join the queue.
    Elements are only ever removed, so this terminates; removing the base
    (or emptying the cavity) means the kernel itself is inconsistent,
    which raises :class:`CavityError`.
    """
    elements = cavity.elements
    queue = deque(cavity.boundary)
    changed = False
    while queue:
        facet, owner, li = queue.popleft()
        if owner not in elements:
            continue  # exposed facet of an element removed meanwhile
        q = _visibility_product(mesh, facet, owner, p, metric)
        if q > q_tol:
            continue
        if owner == base or len(elements) == 1:
            raise CavityError(
                "visibility repair attempted to remove the base element; "
                "check element orientations")
        elements.discard(owner)
        changed = True
        for li2 in range(5):
            nb = mesh.neighbor(owner, li2)
            if nb is not None and nb[0] in elements:
                nverts = mesh.elements[nb[0]]
                npat = CANONICAL_FACETS[nb[1]]
                queue.append((tuple(nverts[i] for i in npat), nb[0], nb[1]))
    if changed:
        cavity.boundary = cavity_boundary(mesh, elements)
    return cavity


# ---------------------------------------------------------------------------
# insertion
# ---------------------------------------------------------------------------

def _positive_tuple(mesh: Mesh4, facet, new_vid: int):
    """Order (facet + new vertex) positively; None if exactly degenerate."""
    pts = [mesh.vertices[v] for v in facet]
    p = mesh.vertices[new_vid]
    diffs = [(q[0] - p[0], q[1] - p[1], q[2] - p[2], q[3] - p[3]) for q in pts]
    theta = _det4(*diffs)
    scale = max(1.0, *(abs(c) for q in pts for c in q), *(abs(c) for c in p))
    if abs(theta) <= 1e-13 * scale ** 4:
        res = orientation4(*pts, p)
        if res.sign == 0:
            return None
        theta = res.sign
    if theta > 0:
        return (*facet, new_vid)
    return (facet[1], facet[0], facet[2], facet[3], new_vid)


def insert_point(mesh: Mesh4, p, field=None, *,
                 q_tol: float = DEFAULT_Q_TOL,
                 tol_factor: float = DEFAULT_TOL_FACTOR,
                 snap_rtol: float = DEFAULT_SNAP_RTOL,
                 start: int | None = None) -> InsertionReport:
    """Insert one point: locate, carve the cavity, repair, reconnect.

    Raises :class:`GhostPointError` if p lies outside the bounding
    tesseract (or no element contains it) and :class:`DuplicateVertexError`
    if p coincides with an existing vertex within the snap tolerance.
    """
    p = as_point4(p)
    fld = resolve_field(field)
    if mesh.bounding_lo is not None:
        lo, hi = mesh.bounding_lo, mesh.bounding_hi
        if not all(lo[j] < p[j] < hi[j] for j in range(4)):
            raise GhostPointError(f"point {p} is outside the bounding tesseract")

    base, walk = find_base_element(mesh, p, start=start, tol_factor=tol_factor)
    metric = None if fld.kind == "identity" else fld(p)
    cavity = build_cavity(mesh, base, p, metric)

    if mesh.bounding_lo is not None:
        diag = math.sqrt(sum((hi[j] - lo[j]) ** 2 for j in range(4)))
    else:
        diag = 1.0
    snap2 = (snap_rtol * diag) ** 2
    for eid in cavity.elements:
        for v in mesh.elements[eid]:
            q = mesh.vertices[v]
            d2 = sum((p[j] - q[j]) ** 2 for j in range(4))
            if d2 <= snap2:
                raise DuplicateVertexError(f"point {p} duplicates vertex {v}")

    enforce_visibility(mesh, cavity, p, metric, q_tol=q_tol, base=base)

    new_vid = mesh.add_vertex(p)
    boundary = cavity.boundary
    for eid in cavity.elements:
        mesh.remove_element(eid)
    created = []
    for facet, _owner, _li in boundary:
        tup = _positive_tuple(mesh, facet, new_vid)
        if tup is None:
            raise CavityError(
                f"degenerate reconnection of facet {facet} to vertex {new_vid}")
        created.append(mesh.add_element(tup))
    return InsertionReport(new_vid, tuple(created), len(cavity.elements), walk)


def triangulate(points, field=None, *, n_b: int = 24, margin: float = 1.0,
                strip_super: bool = True, shuffle: bool = False, seed: int = 0,
                q_tol: float = DEFAULT_Q_TOL,
                tol_factor: float = DEFAULT_TOL_FACTOR,
                snap_rtol: float = DEFAULT_SNAP_RTOL,
                skip_duplicates: bool = False) -> Mesh4:
    """Mesh a point cloud by incremental insertion into a bounding tesseract.

    With ``strip_super`` the 16 bounding vertices and every element that
    touches them are removed afterwards and the mesh is compacted, leaving
    a tessellation of the convex hull of the inputs.
    """
    pts = np.asarray(points, dtype=float)
    fld = resolve_field(field)
    mesh = build_bounding_mesh(pts, n_b=n_b, margin=margin)
    order = np.arange(len(pts))
    if shuffle:
        order = np.random.default_rng(seed).permutation(len(pts))
    for idx in order:
        try:
            insert_point(mesh, pts[idx], fld,
                         q_tol=q_tol, tol_factor=tol_factor, snap_rtol=snap_rtol)
        except DuplicateVertexError:
            if not skip_duplicates:
                raise
    if strip_super:
        mesh.strip_super()
        mesh = mesh.compact()
    return mesh


# ---------------------------------------------------------------------------
# audit
# ---------------------------------------------------------------------------

_AUDIT_BAND = 1e-7  # relative width of the float band escalated to exact


def _audit_pairs_exact(mesh, pairs, fld, tol, violations):
    for vid, eid in pairs:
        metric = None if fld.kind == "identity" else fld(mesh.vertices[vid])
        pts = list(mesh.element_points(eid)) + [mesh.vertices[vid]]
        res = inhypersphere_m_d(metric, pts)
        if res.sign > 0 and abs(res.value) > tol:
            violations.append((vid, eid, res.value))


def audit_delaunay(mesh: Mesh4, field=None, tol: float = 0.0) -> AuditReport:
    """Empty-circumhypersphere audit of a mesh under a metric field.

    For every alive vertex v and alive element E not containing v, the
    metric in-hypersphere test (metric evaluated at v) must not report v
    strictly inside beyond ``tol``.  Ties (exactly cospherical) pass.
    Constant fields take a vectorized circumcenter path, with near-ties
    escalated to exact arithmetic.
    """
    fld = resolve_field(field)
    elems = [(eid, mesh.elements[eid]) for eid in mesh.alive_elements()]
    verts_alive = [vid for vid in range(len(mesh.vertices)) if mesh.vertex_alive[vid]]
    violations: list[tuple[int, int, float]] = []
    n_checked = 0
    if not elems or not verts_alive:
        return AuditReport(violations, 0)

    if fld.is_constant:
        V = mesh.vertex_array()
        if fld.kind != "identity":
            G = np.linalg.cholesky(fld.constant_metric.m).T
            V = V @ G.T
        E = np.array([verts for _, verts in elems], dtype=np.int64)
        P = V[E]                       # (m, 5, 4) scaled element corners
        A = 2.0 * (P[:, 1:, :] - P[:, :1, :])
        rhs = (P[:, 1:, :] ** 2).sum(axis=2) - (P[:, :1, :] ** 2).sum(axis=2)
        centers = np.empty((len(elems), 4))
        bad = []
        try:
            centers = np.linalg.solve(A, rhs[..., None])[..., 0]
        except np.linalg.LinAlgError:
            for k in range(len(elems)):
                try:
                    centers[k] = np.linalg.solve(A[k], rhs[k])
                except np.linalg.LinAlgError:
                    centers[k] = np.nan
                    bad.append(k)
        r2 = ((P[:, 0, :] - centers) ** 2).sum(axis=1)
        Vv = V[np.array(verts_alive)]
        pending: list[tuple[int, int]] = []
        chunk = 2048
        for k0 in range(0, len(elems), chunk):
            k1 = min(k0 + chunk, len(elems))
            d2 = ((Vv[None, :, :] - centers[k0:k1, None, :]) ** 2).sum(axis=2)
            margin = r2[k0:k1, None] - d2
            band = _AUDIT_BAND * (r2[k0:k1, None] + d2) + 1e-300
            inside = margin > band
            near = np.abs(margin) <= band
            for krel, jrel in zip(*np.nonzero(inside | near)):
                k = k0 + int(krel)
                vid = verts_alive[int(jrel)]
                if vid in elems[k][1]:
                    continue
                pending.append((vid, elems[k][0]))
            n_checked += (k1 - k0) * len(verts_alive)
        for k in bad:
            for vid in verts_alive:
                if vid not in elems[k][1]:
                    pending.append((vid, elems[k][0]))
        _audit_pairs_exact(mesh, pending, fld, tol, violations)
        return AuditReport(violations, n_checked)

    # varying field: per-vertex metric, batched circumcenters in scaled space
    V = mesh.vertex_array()
    E = np.array([verts for _, verts in elems], dtype=np.int64)
    for vid in verts_alive:
        metric = fld(mesh.vertices[vid])
        G = np.linalg.cholesky(metric.m).T
        W = V @ G.T
        P = W[E]
        A = 2.0 * (P[:, 1:, :] - P[:, :1, :])
        rhs = (P[:, 1:, :] ** 2).sum(axis=2) - (P[:, :1, :] ** 2).sum(axis=2)
        try:
            centers = np.linalg.solve(A, rhs[..., None])[..., 0]
        except np.linalg.LinAlgError:
            centers = np.full((len(elems), 4), np.nan)
            for k in range(len(elems)):
                try:
                    centers[k] = np.linalg.solve(A[k], rhs[k])
                except np.linalg.LinAlgError:
                    pass
        r2 = ((P[:, 0, :] - centers) ** 2).sum(axis=1)
        d2 = ((W[vid][None, :] - centers) ** 2).sum(axis=1)
        margin = r2 - d2
        band = _AUDIT_BAND * (r2 + d2) + 1e-300
        pending = []
        for k in np.nonzero((margin > band) | (np.abs(margin) <= band) | ~np.isfinite(margin))[0]:
            if vid in elems[int(k)][1]:
                continue
            pending.append((vid, elems[int(k)][0]))
        n_checked += len(elems)
        _audit_pairs_exact(mesh, pending, fld, tol, violations)
    return AuditReport(violations, n_checked)
