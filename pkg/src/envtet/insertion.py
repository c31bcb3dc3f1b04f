"""Incremental insertion of one input triangle into the tet mesh.

Pipeline per triangle: find the cut tets (the triangle shares interior points
with a face, or sits inside a tet), snap mesh vertices within delta onto the
triangle's plane where validity and the envelope allow, compute the plane-edge
cut points, subdivide every tet carrying a cut edge through the subdivision
table, and tag the faces that end up covering the triangle. Every mutation is
journaled so a failed insertion restores the mesh exactly.
"""

import numpy as np
from gmpy2 import mpq

from . import predicates as pred
from .mesh import face_key
from .predicates import DEFAULT_TOLERANCES, Sign
from .table import EDGES, choose_secondary, cut_point_id, is_realizable

_TET_EDGE_LOCAL = EDGES  # e0..e5 in local vertex order


class InsertionRejected(Exception):
    pass


class UndoLog:
    """Journal of mesh mutations for exact rollback."""

    def __init__(self, mesh):
        self.mesh = mesh
        self.nv0 = mesh.nv
        self.nt0 = mesh.nt
        self.moved = {}
        self.killed = []
        self.tracked_old = {}
        self.flags = []
        self.n_open0 = len(mesh.open_segments)
        self.openmap_old = {}

    def record_move(self, v):
        if v not in self.moved:
            self.moved[v] = self.mesh.vertices[v].copy()

    def record_kill(self, t):
        self.killed.append(t)

    def record_tag(self, key):
        if key not in self.tracked_old:
            cur = self.mesh.tracked.get(key)
            self.tracked_old[key] = None if cur is None else list(cur)

    def record_flag(self, name, v):
        self.flags.append((name, v, bool(getattr(self.mesh, name)[v])))

    def record_openmap(self, v):
        if v not in self.openmap_old:
            self.openmap_old[v] = self.mesh.open_segment_of_vertex.get(v)

    def undo(self):
        m = self.mesh
        while m.nt > self.nt0:
            m.pop_tet()
        for t in self.killed:
            if t < self.nt0 and not m._alive[t]:
                m.revive_tet(t)
        while m.nv > self.nv0:
            m.pop_vertex()
        for v, pos in self.moved.items():
            m.move_vertex(v, pos)
        for key, old in self.tracked_old.items():
            if old is None:
                m.tracked.pop(key, None)
            else:
                m.tracked[key] = old
        for name, v, val in self.flags:
            if v < self.nv0:
                getattr(m, name)[v] = val
        del m.open_segments[self.n_open0:]
        for v, old in self.openmap_old.items():
            if v >= self.nv0:
                continue
            if old is None:
                m.open_segment_of_vertex.pop(v, None)
            else:
                m.open_segment_of_vertex[v] = old


# ---------------------------------------------------------------------------
# cut-tet detection


def _sat_possible_cut(tri_pts, tet_pts_batch):
    """Vectorized separating-axis prefilter: False entries are certified not
    to intersect the triangle (with a conservative float margin)."""
    T = tet_pts_batch  # (n, 4, 3)
    n = len(T)
    tri_e = np.array([tri_pts[1] - tri_pts[0], tri_pts[2] - tri_pts[1],
                      tri_pts[0] - tri_pts[2]])  # (3, 3)
    tet_edges = T[:, [1, 2, 3, 2, 3, 3], :] - T[:, [0, 0, 0, 1, 1, 2], :]  # (n,6,3)
    axes = [np.broadcast_to(np.cross(tri_e[0], -tri_e[2]), (n, 1, 3))]
    f = T[:, [(1, 2, 3), (0, 2, 3), (0, 1, 3), (0, 1, 2)], :]  # (n,4,3,3)
    axes.append(np.cross(f[:, :, 1] - f[:, :, 0], f[:, :, 2] - f[:, :, 0]))
    axes.append(np.cross(tri_e[None, :, None, :],
                         tet_edges[:, None, :, :]).reshape(n, 18, 3))
    A = np.concatenate(axes, axis=1)  # (n, 23, 3)
    pt = np.einsum("nkj,mj->nkm", A, tri_pts)     # (n, 23, 3)
    pq = np.einsum("nkj,nmj->nkm", A, T)          # (n, 23, 4)
    scale = np.abs(A).sum(axis=2) * (np.abs(tri_pts).max() + np.abs(T).max() + 1.0)
    m = 1e-10 * scale
    sep = ((pt.max(axis=2) < pq.min(axis=2) - m)
           | (pt.min(axis=2) > pq.max(axis=2) + m))
    return ~sep.any(axis=1)


_FACE_IDX = ((1, 2, 3), (0, 2, 3), (0, 1, 3), (0, 1, 2))


def _tet_cut_by_triangle(tri_pts, tet_pts):
    try:
        if pred.orient3d(*tet_pts) == Sign.POSITIVE and \
                pred.triangle_inside_tet(tri_pts, tet_pts):
            return True
    except ValueError:
        pass
    for skip in range(4):
        face = [tet_pts[j] for j in range(4) if j != skip]
        try:
            if pred.triangle_cuts_through_triangle(tri_pts, face):
                return True
        except ValueError:
            continue
    return False


def _screen_candidates(tri_pts, P):
    """Exact sign screening of candidate tets against the triangle.

    P: (n, 4, 3) tet corner coordinates. Returns (resolved, value, face_open)
    where resolved[i] means the cut decision is value[i] without further
    tests; otherwise face_open[i] lists the faces still needing the full
    intersection test."""
    n = len(P)
    a, b, c = tri_pts
    flat = P.reshape(-1, 3)
    uniq, inv = np.unique(flat, axis=0, return_inverse=True)
    sv = pred.orient3d_batch(a[None], b[None], c[None], uniq)[inv].reshape(n, 4)
    separated = np.all(sv > 0, axis=1) | np.all(sv < 0, axis=1)
    # signs of the 3 triangle corners against each face plane, plus the sign
    # of the opposite tet corner (the inside reference)
    st = np.empty((n, 4, 3), dtype=np.int8)
    so = np.empty((n, 4), dtype=np.int8)
    for fi, (i, j, k) in enumerate(_FACE_IDX):
        fa, fb, fc = P[:, i], P[:, j], P[:, k]
        for ti, tv in enumerate((a, b, c)):
            st[:, fi, ti] = pred.orient3d_batch(fa, fb, fc, tv[None])
        so[:, fi] = pred.orient3d_batch(fa, fb, fc, P[:, fi])
    face_sep = np.all(st > 0, axis=2) | np.all(st < 0, axis=2)
    # a face cut-through requires each triangle to strictly straddle the
    # other's plane (or full coplanarity, left to the exact test)
    st_str = np.any(st > 0, axis=2) & np.any(st < 0, axis=2)
    st_cop = np.all(st == 0, axis=2)
    svf = np.stack([sv[:, list(f)] for f in _FACE_IDX], axis=1)  # (n,4,3)
    sv_str = np.any(svf > 0, axis=2) & np.any(svf < 0, axis=2)
    sv_cop = np.all(svf == 0, axis=2)
    face_sep |= (~st_str & ~st_cop) | (~sv_str & ~sv_cop)
    inside = np.all((st == 0) | (st == so[:, :, None]), axis=(1, 2)) \
        & np.all(so != 0, axis=1)
    resolved = np.zeros(n, dtype=bool)
    value = np.zeros(n, dtype=bool)
    resolved |= separated
    resolved |= inside & ~separated
    value[inside & ~separated] = True
    all_faces_closed = face_sep.all(axis=1)
    undecided = ~resolved & all_faces_closed
    resolved |= undecided  # no face can be cut through, not inside: no cut
    face_open = [np.nonzero(~face_sep[i])[0] if not resolved[i] else ()
                 for i in range(n)]
    return resolved, value, face_open


def find_cut_tets(tri_pts, mesh):
    """Alive tets the triangle cuts (shares interior points with a face of,
    or is contained in)."""
    tri_pts = np.asarray(tri_pts, dtype=float)
    ids = mesh.alive_tet_ids()
    if not len(ids):
        raise ValueError("empty mesh")
    lo, hi = mesh._tet_lo[ids], mesh._tet_hi[ids]
    tlo, thi = tri_pts.min(axis=0), tri_pts.max(axis=0)
    overlap = np.all(lo <= thi, axis=1) & np.all(hi >= tlo, axis=1)
    cand = ids[overlap]
    if len(cand):
        # plane prefilter: a tet strictly on one side of the triangle's
        # plane (with float safety margin) cannot be cut
        a, b, c = tri_pts
        n = np.cross(b - a, c - a)
        nn = np.linalg.norm(n)
        if nn > 0:
            n = n / nn
            d = np.einsum("tkj,j->tk", mesh._verts[mesh._tets[cand]] - a, n)
            scale = np.abs(mesh._verts[mesh._tets[cand]]).max() + 1.0
            margin = 1e-12 * scale
            keep = ~((d.min(axis=1) > margin) | (d.max(axis=1) < -margin))
            cand = cand[keep]
    if len(cand):
        cand = cand[_sat_possible_cut(tri_pts, mesh._verts[mesh._tets[cand]])]
    out = []
    if len(cand):
        P = mesh._verts[mesh._tets[cand]]
        resolved, value, face_open = _screen_candidates(tri_pts, P)
        for i, t in enumerate(cand):
            if resolved[i]:
                if value[i]:
                    out.append(int(t))
                continue
            hit = False
            for fi in face_open[i]:
                face = P[i][list(_FACE_IDX[fi])]
                try:
                    if pred.triangle_cuts_through_triangle(tri_pts, face):
                        hit = True
                        break
                except ValueError:
                    continue
            if hit:
                out.append(int(t))
    if not out:
        raise ValueError("triangle cuts no tet (outside the mesh?)")
    return out


def find_cut_tets_bruteforce(tri_pts, mesh):
    """O(n) oracle without spatial filtering (tests only)."""
    return [int(t) for t in mesh.alive_tet_ids()
            if _tet_cut_by_triangle(tri_pts, mesh.tet_points(t))]


# ---------------------------------------------------------------------------
# 2D overlap helper (exact on the given float coordinates)


def _overlap_2d_float(A, B):
    """Float filter for the exact 2D interior-overlap test. Returns True or
    False when the answer is certified with margin, else None."""
    scale = max(abs(v) for p in A for v in p)
    scale = max(scale, max(abs(v) for p in B for v in p)) + 1.0
    m = 1e-12 * scale * scale

    def area2(t):
        return ((t[1][0] - t[0][0]) * (t[2][1] - t[0][1])
                - (t[1][1] - t[0][1]) * (t[2][0] - t[0][0]))

    a2, b2 = area2(A), area2(B)
    if abs(a2) <= m or abs(b2) <= m:
        return None
    if a2 < 0:
        A = (A[0], A[2], A[1])
    if b2 < 0:
        B = (B[0], B[2], B[1])
    for poly, other in ((A, B), (B, A)):
        for i in range(3):
            p, q = poly[i], poly[(i + 1) % 3]
            ex, ey = q[0] - p[0], q[1] - p[1]
            vals = [(r[0] - p[0]) * ey - (r[1] - p[1]) * ex for r in other]
            lo = min(vals)
            if lo >= m:
                return False  # robustly separated on this axis
            if lo > -m:
                return None  # too close to call in float
    return True


def _interiors_overlap_2d(A, B):
    res = _overlap_2d_float(tuple(tuple(map(float, p)) for p in A),
                            tuple(tuple(map(float, p)) for p in B))
    if res is not None:
        return res
    A = [(mpq(x), mpq(y)) for x, y in A]
    B = [(mpq(x), mpq(y)) for x, y in B]

    def area2(t):
        return ((t[1][0] - t[0][0]) * (t[2][1] - t[0][1])
                - (t[1][1] - t[0][1]) * (t[2][0] - t[0][0]))

    a2, b2 = area2(A), area2(B)
    if a2 == 0 or b2 == 0:
        return False
    if a2 < 0:
        A = [A[0], A[2], A[1]]
    if b2 < 0:
        B = [B[0], B[2], B[1]]
    for poly, other in ((A, B), (B, A)):
        for i in range(3):
            p, q = poly[i], poly[(i + 1) % 3]
            ex, ey = q[0] - p[0], q[1] - p[1]
            if all((r[0] - p[0]) * ey - (r[1] - p[1]) * ex >= 0 for r in other):
                return False
    return True


def _plane_basis(tri_pts):
    a, b, c = (np.asarray(p, dtype=float) for p in tri_pts)
    e1 = b - a
    e1 = e1 / np.linalg.norm(e1)
    n = np.cross(b - a, c - a)
    n = n / np.linalg.norm(n)
    e2 = np.cross(n, e1)
    return a, e1, e2, n


def _project2(points, origin, e1, e2):
    p = np.asarray(points, dtype=float) - origin
    return np.column_stack([p @ e1, p @ e2])


# ---------------------------------------------------------------------------
# snapping


def snap_and_expand(tri_pts, cut_tets, mesh, delta, env, log,
                    tol=DEFAULT_TOLERANCES):
    """Snap vertices within delta of the triangle's plane; expand the cut-tet
    set around snapped vertices. Returns (T_I set, V_delta set)."""
    a, e1, e2, n = _plane_basis(tri_pts)
    tri2 = _project2(tri_pts, a, e1, e2)
    T_I = set(cut_tets)
    V = set()

    def plane_dist(p):
        return abs(float(np.dot(p - a, n)))

    def try_snap(v):
        pos = mesh.vertices[v].copy()
        d = float(np.dot(pos - a, n))
        V.add(v)
        if mesh.on_bbox[v]:
            return
        new_pos = pos - d * n
        if np.array_equal(new_pos, pos):
            return
        # moving a vertex on the boundary of the cut region drags its whole
        # 1-ring into the region
        ring = {t for t in mesh.v2t[v] if mesh._alive[t]}
        # validity: no incident tet may lose Positive orientation
        for t in ring:
            quad = mesh._tets[t]
            pts = [new_pos if int(q) == v else mesh.vertices[int(q)] for q in quad]
            if pred.orient3d(*pts) != Sign.POSITIVE:
                return
        if mesh.on_tracked[v]:
            ok = True
            for t in ring:
                for key in mesh.tet_faces(t):
                    if v in key and key in mesh.tracked:
                        fpts = [new_pos if q == v else mesh.vertices[q] for q in key]
                        if not env.triangle_in_envelope(np.array(fpts)):
                            ok = False
                            break
                if not ok:
                    break
            if not ok:
                return
        log.record_move(v)
        mesh.move_vertex(v, new_pos)
        T_I.update(ring)

    while True:
        changed = False
        verts = sorted({int(q) for t in T_I if mesh._alive[t]
                        for q in mesh._tets[t]})
        for v in verts:
            if v in V:
                continue
            if plane_dist(mesh.vertices[v]) < delta:
                try_snap(v)
                changed = True
        # expansion: tets around snapped vertices that the plane cuts with
        # faces whose projection overlaps the triangle
        ring_tets = sorted({t for v in V for t in mesh.v2t[v]
                            if t not in T_I and mesh._alive[t]})
        if ring_tets:
            P = mesh._verts[mesh._tets[ring_tets]]
            sv = pred.orient3d_batch(tri_pts[0][None], tri_pts[1][None],
                                     tri_pts[2][None],
                                     P.reshape(-1, 3)).reshape(len(ring_tets), 4)
            straddle = np.any(sv > 0, axis=1) & np.any(sv < 0, axis=1)
            for i, t in enumerate(ring_tets):
                if not straddle[i]:
                    continue
                quad = [int(q) for q in mesh._tets[t]]
                hit = False
                for skip in range(4):
                    fv = [quad[j] for j in range(4) if j != skip]
                    f2 = _project2(mesh.vertices[fv], a, e1, e2)
                    if _interiors_overlap_2d(f2, tri2):
                        hit = True
                        break
                if hit:
                    T_I.add(t)
                    changed = True
        if not changed:
            break
    return T_I, V


# ---------------------------------------------------------------------------
# subdivision


def _edge_key(u, v):
    return (u, v) if u < v else (v, u)


def _redistribute_tags(mesh, tet, dec, lmap, log):
    """Move tracked tags of tet's faces onto the child faces produced by the
    decomposition. lmap: local point id -> global vertex id."""
    from .table import FACES, _FACE_EDGES

    quad = [int(q) for q in mesh._tets[tet]]
    for fi, f in enumerate(FACES):
        key = face_key(*(quad[i] for i in f))
        entries = mesh.tracked.get(key)
        if not entries:
            continue
        fset = set(f)
        for e in _FACE_EDGES[fi]:
            pid = cut_point_id(e)
            if pid in lmap:
                fset.add(pid)
        children = set()
        for st in dec.sub_tets:
            for skip in range(4):
                facet = tuple(st[j] for j in range(4) if j != skip)
                if all(p in fset for p in facet):
                    children.add(tuple(sorted(lmap[p] for p in facet)))
        if children == {key}:
            continue  # face not actually split
        log.record_tag(key)
        del mesh.tracked[key]
        for child in children:
            pa, pb, pc = (mesh.vertices[v] for v in child)
            cn = np.cross(pb - pa, pc - pa)
            for sid, oriented in entries:
                po = [mesh.vertices[v] for v in oriented]
                on = np.cross(po[1] - po[0], po[2] - po[0])
                tri = child if float(np.dot(cn, on)) >= 0 else (child[0], child[2], child[1])
                log.record_tag(child)
                mesh.tag_face(child, sid, tri)


def subdivide_with_cuts(mesh, edge_cuts, table, log, tol=DEFAULT_TOLERANCES):
    """Split every alive tet carrying a cut edge.

    edge_cuts: (u, v) sorted global edge -> cut point coordinates. Returns
    (new_tet_ids, vertex_of_edge) or raises InsertionRejected."""
    vertex_of_edge = {}
    for ek in sorted(edge_cuts):
        v = mesh.add_vertex(edge_cuts[ek])
        vertex_of_edge[ek] = v
    affected = set()
    for (u, v) in edge_cuts:
        affected.update(t for t in mesh.v2t[u] & mesh.v2t[v] if mesh._alive[t])
    new_ids = []
    for t in sorted(affected):
        quad = [int(q) for q in mesh._tets[t]]
        mask = 0
        lmap = {i: quad[i] for i in range(4)}
        for e, (i, j) in enumerate(_TET_EDGE_LOCAL):
            ek = _edge_key(quad[i], quad[j])
            if ek in edge_cuts:
                mask |= 1 << e
                lmap[cut_point_id(e)] = vertex_of_edge[ek]
        if mask == 0:
            continue
        if not is_realizable(mask):
            raise InsertionRejected(f"unrealizable mask {mask} in tet {t}")
        dec = choose_secondary(table, mask, tuple(quad))
        sub = []
        for st in dec.sub_tets:
            g = tuple(lmap[p] for p in st)
            pts = [mesh.vertices[x] for x in g]
            if pred.orient3d(*pts) != Sign.POSITIVE:
                raise InsertionRejected("non-positive sub-tet")
            d = np.linalg.det(np.array(pts[1:]) - pts[0]) / 6.0
            if d <= tol.eps_zero_cubed:
                raise InsertionRejected("sub-tet below volume tolerance")
            sub.append(g)
        _redistribute_tags(mesh, t, dec, lmap, log)
        log.record_kill(t)
        mesh.kill_tet(t)
        for g in sub:
            new_ids.append(mesh.add_tet(g))
    return new_ids, vertex_of_edge


def subdivide_front(tri_pts, T_I, V_delta, mesh, table, log, delta,
                    surface_id, provenance_id, env=None,
                    tol=DEFAULT_TOLERANCES):
    """Cut-point computation + table subdivision + cover tagging."""
    a, e1, e2, n = _plane_basis(tri_pts)
    tri2 = _project2(tri_pts, a, e1, e2)
    plane = tuple(tri_pts)
    edge_cuts = {}
    verts_needed = sorted({int(q) for t in T_I if mesh._alive[t]
                           for q in mesh._tets[t]})
    signs = pred.orient3d_batch(tri_pts[0], tri_pts[1], tri_pts[2],
                                mesh.vertices[verts_needed])
    sign_cache = dict(zip(verts_needed, (int(s) for s in signs)))

    def psign(v):
        if v not in sign_cache:
            sign_cache[v] = pred.orient3d(*plane, mesh.vertices[v])
        return sign_cache[v]

    for t in sorted(T_I):
        if not mesh._alive[t]:
            continue
        quad = [int(q) for q in mesh._tets[t]]
        for (i, j) in _TET_EDGE_LOCAL:
            u, v = quad[i], quad[j]
            if u in V_delta or v in V_delta:
                continue
            ek = _edge_key(u, v)
            if ek in edge_cuts:
                continue
            su, sv = psign(u), psign(v)
            if su * sv < 0:
                pt = pred.plane_edge_intersection(
                    plane, (mesh.vertices[u], mesh.vertices[v]))
                if pt is None:
                    raise InsertionRejected("inconsistent edge cut")
                edge_cuts[ek] = pt

    new_ids, vertex_of_edge = subdivide_with_cuts(mesh, edge_cuts, table, log, tol)

    # cover tagging: faces of the affected region whose vertices all lie
    # within delta of the plane and whose projection overlaps the triangle
    cand_tets = set(new_ids)
    for t in T_I:
        if mesh._alive[t]:
            cand_tets.add(t)
    keys = sorted({key for t in sorted(cand_tets)
                   for key in mesh.tet_faces(t)})
    vids = sorted({v for key in keys for v in key})
    vdist = dict(zip(vids, np.abs((mesh.vertices[vids] - a) @ n)))
    cover = []
    for key in keys:
        if any(vdist[v] > delta for v in key):
            continue
        pts = mesh.vertices[list(key)]
        f2 = _project2(pts, a, e1, e2)
        if not _interiors_overlap_2d(f2, tri2):
            continue
        # faces sticking out past the triangle boundary (the cut plane is
        # unbounded) are excluded so every tag stays inside the envelope
        if env is not None and not env.triangle_in_envelope(pts):
            continue
        pa, pb, pc = pts
        fn = np.cross(pb - pa, pc - pa)
        tri = key if float(np.dot(fn, n)) >= 0 else (key[0], key[2], key[1])
        log.record_tag(key)
        mesh.tag_face(key, provenance_id, tri)
        cover.append(key)
    if not cover:
        raise InsertionRejected("no cover faces found")
    for key in cover:
        for v in key:
            log.record_flag("on_tracked", v)
            mesh.on_tracked[v] = True
    return cover


# ---------------------------------------------------------------------------
# open boundary


def detect_open_boundary_edges(soup):
    """Edges with one incident triangle, or only coplanar incident triangles
    all on the same side."""
    inc = {}
    for t, tri in enumerate(soup.triangles):
        for k in range(3):
            u, v = int(tri[k]), int(tri[(k + 1) % 3])
            inc.setdefault(_edge_key(u, v), []).append(t)
    out = set()
    for (u, v), ts in inc.items():
        if len(ts) == 1:
            out.add((u, v))
            continue
        pu = soup.vertices[u]
        pv = soup.vertices[v]
        thirds = []
        for t in ts:
            w = next(int(x) for x in soup.triangles[t] if int(x) not in (u, v))
            thirds.append(w)
        ref = soup.vertices[thirds[0]]
        if any(pred.orient3d(pu, pv, ref, soup.vertices[w]) != Sign.ZERO
               for w in thirds[1:]):
            continue
        # coplanar: same-side test in the common plane
        nq = pred._qcross(pred._qsub(pred._q(pv), pred._q(pu)),
                          pred._qsub(pred._q(ref), pred._q(pu)))
        sides = []
        for w in thirds:
            c = pred._qcross(pred._qsub(pred._q(pv), pred._q(pu)),
                             pred._qsub(pred._q(soup.vertices[w]), pred._q(pu)))
            sides.append(pred._sign(pred._qdot(c, nq)))
        if all(s > 0 for s in sides) or all(s < 0 for s in sides):
            out.add((u, v))
    return out


def _segment_intersect_2d(p, q, r, s):
    """Proper 2D intersection of open segments pq and rs; returns the
    parameter along rs or None."""
    def cross(o, a2, b2):
        return (a2[0] - o[0]) * (b2[1] - o[1]) - (a2[1] - o[1]) * (b2[0] - o[0])
    d1 = cross(r, s, p)
    d2 = cross(r, s, q)
    d3 = cross(p, q, r)
    d4 = cross(p, q, s)
    if ((d1 > 0) != (d2 > 0)) and ((d3 > 0) != (d4 > 0)) \
            and d1 != d2 and d3 != d4:
        t = d3 / (d3 - d4)
        if 0.0 < t < 1.0:
            return t
    return None


def insert_open_boundary_edges(tri_pts, open_edges_pts, cover, mesh, table,
                               log, delta, tol=DEFAULT_TOLERANCES):
    """Conform the mesh to the triangle's open-boundary edges.

    open_edges_pts: list of (p, q) coordinate pairs. The cover faces are
    projected onto their best-fit plane; open edges are intersected with the
    projected face edges, intersections lifted back to the 3D mesh edges, and
    the affected tets subdivided. Vertices on the open edges are flagged."""
    vset = sorted({v for key in cover for v in key})
    if not vset:
        return
    pts = mesh.vertices[vset]
    centroid = pts.mean(axis=0)
    _, _, vt = np.linalg.svd(pts - centroid, full_matrices=False)
    e1, e2 = vt[0], vt[1]

    def proj(p):
        p = np.asarray(p, dtype=float) - centroid
        return np.array([p @ e1, p @ e2])

    face_edges = set()
    for key in cover:
        for i in range(3):
            face_edges.add(_edge_key(key[i], key[(i + 1) % 3]))
    edge_cuts = {}
    for (pa, pb) in open_edges_pts:
        a2, b2 = proj(pa), proj(pb)
        for (u, v) in sorted(face_edges):
            if _edge_key(u, v) in edge_cuts:
                continue
            u2, v2 = proj(mesh.vertices[u]), proj(mesh.vertices[v])
            t = _segment_intersect_2d(a2, b2, u2, v2)
            if t is None:
                continue
            lifted = mesh.vertices[u] + t * (mesh.vertices[v] - mesh.vertices[u])
            edge_cuts[_edge_key(u, v)] = lifted
    new_ids, vertex_of_edge = subdivide_with_cuts(mesh, edge_cuts, table, log, tol)

    # flag vertices lying on the open edges; register the segments for later
    # projection during smoothing
    for (pa, pb) in open_edges_pts:
        seg_idx = len(mesh.open_segments)
        mesh.open_segments.append((np.asarray(pa, dtype=float).copy(),
                                   np.asarray(pb, dtype=float).copy()))
        pa = np.asarray(pa, dtype=float)
        pb = np.asarray(pb, dtype=float)
        ab = pb - pa
        denom = float(ab @ ab)
        check = set(vertex_of_edge.values())
        for key in cover:
            check.update(key)
        for v in sorted(check):
            p = mesh.vertices[v]
            t = 0.0 if denom == 0 else float(np.clip((p - pa) @ ab / denom, 0, 1))
            d = float(np.linalg.norm(p - (pa + t * ab)))
            if d <= delta:
                log.record_flag("on_open_boundary", v)
                log.record_openmap(v)
                mesh.on_open_boundary[v] = True
                mesh.open_segment_of_vertex[v] = seg_idx


# ---------------------------------------------------------------------------
# driver


def insert_triangle(tri_pts, mesh, table, env, delta, provenance_id=0,
                    open_edges_pts=None, tol=DEFAULT_TOLERANCES):
    """Insert one triangle. Returns (status, cover_faces); status is True for
    Inserted, False for Rejected (mesh untouched)."""
    tri_pts = np.asarray(tri_pts, dtype=float)
    n = np.cross(tri_pts[1] - tri_pts[0], tri_pts[2] - tri_pts[0])
    if 0.5 * np.linalg.norm(n) <= tol.eps_zero_sq:
        raise ValueError("degenerate triangle")
    log = UndoLog(mesh)
    try:
        cut = find_cut_tets(tri_pts, mesh)
        T_I, V_delta = snap_and_expand(tri_pts, cut, mesh, delta, env, log, tol)
        cover = subdivide_front(tri_pts, T_I, V_delta, mesh, table, log,
                                delta, provenance_id, provenance_id, env, tol)
        if open_edges_pts:
            insert_open_boundary_edges(tri_pts, open_edges_pts, cover, mesh,
                                       table, log, delta, tol)
        return True, cover
    except (InsertionRejected, ValueError):
        log.undo()
        return False, []
