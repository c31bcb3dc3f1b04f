"""Local quality optimization of the tet mesh.

Each iteration runs ordered sweeps of edge splitting, edge collapsing, edge
and face swapping, and vertex smoothing. Every operation validates exactly (no tet may
lose Positive orientation), keeps tracked faces inside the envelope, and
rolls back on failure. Work is targeted at the bad region: edges and vertices
of tets whose distortion energy exceeds the stop threshold, plus short edges
anywhere (collapsing them shrinks the mesh). Every reinsertion_period
iterations the still-uninserted triangles are re-attempted with the snapping
tolerance dropped to the zero tolerance.
"""

import logging
from dataclasses import dataclass

import numpy as np

from . import predicates as pred
from .energy import amips_energies, amips_energy, amips_gradient
from .mesh import face_key
from .predicates import DEFAULT_TOLERANCES, Sign

logger = logging.getLogger(__name__)

SPLIT_FACTOR = 4.0 / 3.0
COLLAPSE_FACTOR = 4.0 / 5.0


@dataclass
class ImprovementConfig:
    stop_energy: float = 10.0
    max_iterations: int = 80
    target_edge_length: float = 1.0 / 20.0
    reinsertion_period: int = 3

    def __post_init__(self):
        if not self.stop_energy > 3:
            raise ValueError("stop_energy must exceed 3 (the energy minimum)")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")


def _edge_key(u, v):
    return (u, v) if u < v else (v, u)


def _edge_tets(mesh, a, b):
    return sorted(t for t in mesh.v2t[a] & mesh.v2t[b] if mesh._alive[t])


def _tet_energies(mesh, tets):
    if not len(tets):
        return np.empty(0)
    return amips_energies(mesh._verts[mesh._tets[list(tets)]])


def _tracked_keys_with(mesh, *vids):
    vids = set(vids)
    out = []
    for v in vids:
        for t in mesh.v2t[v]:
            for key in mesh.tet_faces(t):
                if vids <= set(key) and key in mesh.tracked:
                    out.append(key)
    return sorted(set(out))


def _rewrite_is_clean(mesh, new_quads, gone):
    """Audit a proposed star rewrite: no duplicate tets (among the new quads
    or against surviving tets) and no face used by more than two tets.
    Boundary rewrites can otherwise glue sheets together."""
    seen = {tuple(sorted(q)) for q in new_quads}
    if len(seen) < len(new_quads):
        return False
    face_use = {}
    for quad in new_quads:
        for skip in range(4):
            f = face_key(*(quad[i] for i in range(4) if i != skip))
            face_use[f] = face_use.get(f, 0) + 1
    ring = {q for quad in new_quads for q in quad}
    others = set()
    for x in ring:
        others |= {tt for tt in mesh.v2t[x]
                   if mesh._alive[tt] and tt not in gone}
    for tt in others:
        if tuple(sorted(int(q) for q in mesh._tets[tt])) in seen:
            return False
        for f in mesh.tet_faces(tt):
            if f in face_use:
                face_use[f] += 1
    return all(c <= 2 for c in face_use.values())


def _boundary_faces_of(mesh, v):
    """Faces through v that bound the mesh (exactly one alive tet)."""
    faces = set()
    for t in mesh.v2t[v]:
        if not mesh._alive[t]:
            continue
        for f in mesh.tet_faces(t):
            if v not in f:
                continue
            n_alive = sum(1 for x in (mesh.v2t[f[0]] & mesh.v2t[f[1]]
                                      & mesh.v2t[f[2]]) if mesh._alive[x])
            if n_alive == 1:
                faces.add(f)
    return sorted(faces)


def _positive(mesh, quad, override=None):
    pts = [override[q] if override and q in override else mesh.vertices[q]
           for q in quad]
    return pred.orient3d(*pts) == Sign.POSITIVE


# ---------------------------------------------------------------------------
# edge split


def edge_split(mesh, a, b, tol=DEFAULT_TOLERANCES):
    """Insert the edge midpoint, splitting every incident tet in two.

    Committed only if all replacement tets are Positive under the exact
    orientation test. New faces produced on the tracked surface are exact
    sub-triangles of in-envelope faces, so they inherit envelope membership.
    """
    ets = _edge_tets(mesh, a, b)
    if not ets:
        return False
    mid = (mesh.vertices[a] + mesh.vertices[b]) / 2.0
    new_quads = []
    for t in ets:
        quad = [int(q) for q in mesh._tets[t]]
        for old in (a, b):
            cand = [(-1 if q == old else q) for q in quad]
            pts = [mid if q == -1 else mesh.vertices[q] for q in cand]
            if pred.orient3d(*pts) != Sign.POSITIVE:
                return False
            new_quads.append(cand)
    m = mesh.add_vertex(mid)
    seg_a = mesh.open_segment_of_vertex.get(a)
    both_open = (mesh.on_open_boundary[a] and mesh.on_open_boundary[b]
                 and seg_a is not None
                 and seg_a == mesh.open_segment_of_vertex.get(b))
    tracked_edge = _tracked_keys_with(mesh, a, b)
    mesh.on_tracked[m] = bool(tracked_edge)
    mesh.on_bbox[m] = bool(mesh.on_bbox[a] and mesh.on_bbox[b])
    if both_open:
        mesh.on_open_boundary[m] = True
        mesh.open_segment_of_vertex[m] = seg_a
    for key in tracked_edge:
        entries = mesh.tracked.pop(key)
        x = next(v for v in key if v not in (a, b))
        for old, new_key in ((b, face_key(a, m, x)), (a, face_key(m, b, x))):
            for sid, oriented in entries:
                tri = tuple(m if v == old else v for v in oriented)
                mesh.tag_face(new_key, sid, tri)
    for t in ets:
        mesh.kill_tet(t)
    for cand in new_quads:
        mesh.add_tet([m if q == -1 else q for q in cand])
    return True


# ---------------------------------------------------------------------------
# edge collapse


def _link_condition(mesh, a, b, dying):
    """Vertex-link test: every common tet-neighbor vertex of a and b must be
    a vertex of a tet containing the edge, or the collapse pinches the
    complex."""
    na = {int(q) for t in mesh.v2t[a] if mesh._alive[t] for q in mesh._tets[t]}
    nb = {int(q) for t in mesh.v2t[b] if mesh._alive[t] for q in mesh._tets[t]}
    link_edge = {int(q) for t in dying for q in mesh._tets[t]} - {a, b}
    return (na & nb) - {a, b} <= link_edge


def edge_collapse(mesh, a, b, env, tol=DEFAULT_TOLERANCES):
    """Merge the edge endpoints at one of their positions.

    Tries removing a into b, then b into a. Committed iff the link condition
    holds, no rewritten tet loses Positive orientation, the max incident
    energy does not increase, and all migrated tracked faces stay in the
    envelope."""
    for remove, keep in ((a, b), (b, a)):
        if mesh.on_open_boundary[remove] and not mesh.on_open_boundary[keep]:
            continue
        dying = _edge_tets(mesh, remove, keep)
        if not dying:
            return False
        if not _link_condition(mesh, remove, keep, dying):
            continue
        affected = sorted(t for t in mesh.v2t[remove]
                          if mesh._alive[t] and t not in dying)
        before = sorted(set(affected)
                        | {t for t in mesh.v2t[keep] if mesh._alive[t]})
        override = {remove: mesh.vertices[keep]}
        ok = True
        new_quads = []
        for t in affected:
            quad = [int(q) for q in mesh._tets[t]]
            if not _positive(mesh, quad, override):
                ok = False
                break
            new_quads.append([keep if q == remove else q for q in quad])
        if not ok:
            continue
        if not _rewrite_is_clean(mesh, new_quads, set(dying) | set(affected)):
            continue
        e_before = _tet_energies(mesh, before).max() if before else 0.0
        after_pts = [[mesh.vertices[q] for q in quad] for quad in new_quads]
        survivors = [t for t in mesh.v2t[keep]
                     if mesh._alive[t] and t not in dying]
        e_after_parts = []
        if after_pts:
            e_after_parts.append(amips_energies(np.array(after_pts)).max())
        if survivors:
            e_after_parts.append(_tet_energies(mesh, survivors).max())
        e_after = max(e_after_parts) if e_after_parts else 0.0
        if e_after > e_before:
            continue
        # when remove sits on the mesh boundary, keep must lie on the inner
        # side of (or on) every old cap plane, so the re-spanned star stays
        # inside the old one and the boundary never sweeps outward over
        # other tets
        contained = True
        for key in _boundary_faces_of(mesh, remove):
            if keep in key:
                continue
            t = next(x for x in (mesh.v2t[key[0]] & mesh.v2t[key[1]]
                                 & mesh.v2t[key[2]]) if mesh._alive[x])
            w = next(int(q) for q in mesh._tets[t] if int(q) not in key)
            fp = mesh._verts[list(key)]
            inner = pred.orient3d(fp[0], fp[1], fp[2], mesh.vertices[w])
            s = pred.orient3d(fp[0], fp[1], fp[2], mesh.vertices[keep])
            if s != Sign.ZERO and s != inner:
                contained = False
                break
        if not contained:
            continue
        # tracked-face migration and envelope gate
        moves = []
        for key in _tracked_keys_with(mesh, remove):
            if keep in key:
                moves.append((key, None))  # face dies with the edge
                continue
            new_key = face_key(*(keep if v == remove else v for v in key))
            pts = np.array([mesh.vertices[v] if v != remove
                            else mesh.vertices[keep] for v in key])
            if not env.triangle_in_envelope(pts):
                ok = False
                break
            moves.append((key, new_key))
        if not ok:
            continue
        for key, new_key in moves:
            entries = mesh.tracked.pop(key)
            if new_key is None:
                continue
            for sid, oriented in entries:
                tri = tuple(keep if v == remove else v for v in oriented)
                if len(set(tri)) == 3:
                    mesh.tag_face(new_key, sid, tri)
        for t in dying:
            mesh.kill_tet(t)
        for t in affected:
            mesh.kill_tet(t)
        for quad in new_quads:
            mesh.add_tet(quad)
        if mesh.on_tracked[remove]:
            mesh.on_tracked[keep] = True
        mesh.on_tracked[remove] = False
        mesh.on_bbox[remove] = False
        mesh.on_open_boundary[remove] = False
        mesh.open_segment_of_vertex.pop(remove, None)
        return True
    return False


# ---------------------------------------------------------------------------
# edge swap


def _ring_around_edge(mesh, a, b, ets):
    """Ordered cycle of the shell vertices around edge (a, b), or None if the
    shell does not close up."""
    pairs = []
    for t in ets:
        other = [int(q) for q in mesh._tets[t] if int(q) not in (a, b)]
        if len(other) != 2:
            return None
        pairs.append(other)
    adj = {}
    for x, y in pairs:
        adj.setdefault(x, []).append(y)
        adj.setdefault(y, []).append(x)
    if any(len(v) != 2 for v in adj.values()):
        return None
    start = min(adj)
    ring = [start, min(adj[start])]
    while True:
        x, y = ring[-2], ring[-1]
        nxt = adj[y][0] if adj[y][1] == x else adj[y][1]
        if nxt == start:
            break
        if nxt in ring:
            return None
        ring.append(nxt)
    return ring if len(ring) == len(ets) else None


def edge_swap(mesh, a, b, tol=DEFAULT_TOLERANCES, max_ring=5):
    """Remove edge (a, b) by re-triangulating its shell (3-2, 4-4, 5-6, ...).

    All fan triangulations of the ring polygon are tried; the one with the
    lowest max energy is committed iff it strictly improves on the old shell
    and every new tet is Positive. Edges carrying tracked faces are left
    alone (the swap would delete the tagged face)."""
    ets = _edge_tets(mesh, a, b)
    if len(ets) < 3 or len(ets) > max_ring:
        return False
    if _tracked_keys_with(mesh, a, b):
        return False
    ring = _ring_around_edge(mesh, a, b, ets)
    if ring is None:
        return False
    n = len(ring)
    e_old = _tet_energies(mesh, ets).max()
    best = None
    for apex_i in range(n):
        apex = ring[apex_i]
        rest = ring[apex_i + 1:] + ring[:apex_i]
        tris = [(apex, rest[i], rest[i + 1]) for i in range(n - 2)]
        # every fan triangle must see a on one side and b on the other, with
        # the same side for the whole fan; flipping individual tets to force
        # positivity would tile a different region than the old shell
        quads = []
        ok = True
        sign_a = None
        for (p, q, r) in tris:
            sa = pred.orient3d(mesh.vertices[p], mesh.vertices[q],
                               mesh.vertices[r], mesh.vertices[a])
            sb = pred.orient3d(mesh.vertices[p], mesh.vertices[q],
                               mesh.vertices[r], mesh.vertices[b])
            if sa == Sign.ZERO or sb != -sa:
                ok = False
                break
            if sign_a is None:
                sign_a = sa
            elif sa != sign_a:
                ok = False
                break
            if sa == Sign.POSITIVE:
                quads.append([p, q, r, a])
                quads.append([q, p, r, b])
            else:
                quads.append([q, p, r, a])
                quads.append([p, q, r, b])
        if not ok:
            continue
        e_new = amips_energies(
            np.array([[mesh.vertices[v] for v in quad] for quad in quads])).max()
        if e_new < e_old and (best is None or e_new < best[0]):
            best = (e_new, quads)
    if best is None:
        return False
    if not _rewrite_is_clean(mesh, best[1], set(ets)):
        return False
    for t in ets:
        mesh.kill_tet(t)
    for quad in best[1]:
        mesh.add_tet(quad)
    return True


# ---------------------------------------------------------------------------
# face swap


def face_swap(mesh, f, tol=DEFAULT_TOLERANCES):
    """Replace the two tets sharing face f by three around the edge joining
    their apices (2-3 swap).

    Legal only when that edge pierces the face interior, which shows up as
    the three candidate tets sharing one orientation sign. Committed iff the
    max energy strictly drops. Tracked faces are never swapped away."""
    if f in mesh.tracked:
        return False
    a, b, c = f
    ts = [t for t in (mesh.v2t[a] & mesh.v2t[b] & mesh.v2t[c])
          if mesh._alive[t]]
    if len(ts) != 2:
        return False
    d, e = (next(int(q) for q in mesh._tets[t] if int(q) not in f)
            for t in ts)
    if d == e:
        return False
    signs = [pred.orient3d(mesh.vertices[p], mesh.vertices[q],
                           mesh.vertices[d], mesh.vertices[e])
             for p, q in ((a, b), (b, c), (c, a))]
    if all(s == Sign.POSITIVE for s in signs):
        new_quads = [[a, b, d, e], [b, c, d, e], [c, a, d, e]]
    elif all(s == Sign.NEGATIVE for s in signs):
        new_quads = [[b, a, d, e], [c, b, d, e], [a, c, d, e]]
    else:
        return False
    e_old = _tet_energies(mesh, ts).max()
    e_new = amips_energies(np.array(
        [[mesh.vertices[v] for v in quad] for quad in new_quads])).max()
    if not e_new < e_old:
        return False
    if not _rewrite_is_clean(mesh, new_quads, set(ts)):
        return False
    for t in ts:
        mesh.kill_tet(t)
    for quad in new_quads:
        mesh.add_tet(quad)
    return True


# ---------------------------------------------------------------------------
# vertex smoothing


def _project_to_segment(p, seg):
    pa, pb = seg
    ab = pb - pa
    denom = float(ab @ ab)
    if denom == 0:
        return pa.copy()
    t = float(np.clip((p - pa) @ ab / denom, 0.0, 1.0))
    return pa + t * ab


def vertex_smooth(mesh, v, env, tol=DEFAULT_TOLERANCES, max_backtracks=8,
                  objective="sum"):
    """Gradient descent with backtracking on the incident energies.

    objective "sum" descends the summed star energy; "max" follows only the
    worst incident tet's gradient and accepts only a strict drop of the star
    maximum, which is what a stuck high-energy tet needs when its gradient
    drowns in an otherwise good star. Open-boundary vertices are projected
    back onto their stored boundary segment before validation. Tracked
    vertices additionally require every incident tracked face to stay inside
    the envelope. Vertices on the mesh boundary move only tangentially to
    every boundary sheet through them; free normal motion inflates the hull
    until boundary sheets sweep through the interior and tets overlap."""
    tets = sorted(t for t in mesh.v2t[v] if mesh._alive[t])
    if not tets:
        return False
    pts0 = mesh._verts[mesh._tets[tets]]
    e0 = amips_energies(pts0)
    if objective == "max":
        total0 = float(e0.max())
    else:
        total0 = float(e0.sum())
    if not np.isfinite(total0):
        total0 = float(np.finfo(float).max)
    if objective == "max":
        grad_tets = [tets[int(np.argmax(np.where(np.isfinite(e0), e0,
                                                 -np.inf)))]]
    else:
        grad_tets = tets
    grad = np.zeros(3)
    for t in grad_tets:
        quad = [int(q) for q in mesh._tets[t]]
        p = np.array([mesh.vertices[q] for q in quad])
        try:
            g = amips_gradient(p)
        except (ValueError, np.linalg.LinAlgError):
            continue
        if not np.all(np.isfinite(g)):
            continue
        grad += g[quad.index(v)]
    gn = float(np.linalg.norm(grad))
    if gn == 0.0:
        return False
    # first trial step moves about a tenth of the shortest incident edge
    old = mesh.vertices[v].copy()
    elen = min(float(np.linalg.norm(mesh.vertices[q] - old))
               for t in tets for q in mesh._tets[t] if int(q) != v)
    step = 0.1 * elen / gn
    seg = None
    if mesh.on_open_boundary[v]:
        si = mesh.open_segment_of_vertex.get(v)
        if si is not None:
            seg = mesh.open_segments[si]
    tracked = _tracked_keys_with(mesh, v) if mesh.on_tracked[v] else []
    if tracked and seg is None:
        # move tracked vertices tangentially to their surface patch so the
        # incident tracked faces stay (near) coplanar with the input and the
        # envelope gate passes without refinement
        normal = np.zeros(3)
        for key in tracked:
            p = mesh._verts[list(key)]
            n = np.cross(p[1] - p[0], p[2] - p[0])
            ln = float(np.linalg.norm(n))
            if ln > 0:
                n /= ln
                if normal @ n < 0:
                    n = -n
                normal += n
        ln = float(np.linalg.norm(normal))
        if ln > 0:
            normal /= ln
            grad = grad - (grad @ normal) * normal
            gn = float(np.linalg.norm(grad))
            if gn == 0.0:
                return False
            step = 0.1 * elen / gn
    # positivity only fences the link faces; the boundary cap moves with v,
    # so without this containment check v can drift outward through the cap
    # and inflate the hull until boundary sheets overlap interior tets
    caps = []
    if not tracked:
        for key in _boundary_faces_of(mesh, v):
            t = next(x for x in (mesh.v2t[key[0]] & mesh.v2t[key[1]]
                                 & mesh.v2t[key[2]]) if mesh._alive[x])
            w = next(int(q) for q in mesh._tets[t] if int(q) not in key)
            fp = mesh._verts[list(key)].copy()
            inner = pred.orient3d(fp[0], fp[1], fp[2], mesh.vertices[w])
            caps.append((fp, inner))
    envelope_rounds = 0
    for _ in range(max_backtracks):
        cand = old - step * grad
        if seg is not None:
            cand = _project_to_segment(cand, seg)
        step *= 0.5
        if np.array_equal(cand, old):
            continue
        ok = True
        for t in tets:
            quad = [int(q) for q in mesh._tets[t]]
            pts = [cand if q == v else mesh.vertices[q] for q in quad]
            if pred.orient3d(*pts) != Sign.POSITIVE:
                ok = False
                break
        if not ok:
            continue
        for fp, inner in caps:
            s = pred.orient3d(fp[0], fp[1], fp[2], cand)
            if s != Sign.ZERO and s != inner:
                ok = False
                break
        if not ok:
            continue
        new_pts = pts0.copy()
        loc = (mesh._tets[tets] == v)
        new_pts[loc] = cand
        e_cand = amips_energies(new_pts)
        cand_total = float(e_cand.max() if objective == "max" else e_cand.sum())
        if cand_total >= total0:
            continue
        if tracked:
            if envelope_rounds >= 3:
                return False
            envelope_rounds += 1
            good = True
            for key in tracked:
                fp = np.array([cand if q == v else mesh.vertices[q] for q in key])
                if not env.triangle_in_envelope(fp):
                    good = False
                    break
            if not good:
                continue
        mesh.move_vertex(v, cand)
        return True
    return False


# ---------------------------------------------------------------------------
# scheduling


def color_vertices(mesh):
    """Greedy coloring of the shared-tet vertex graph; vertices of one color
    touch no common tet."""
    colors = {}
    for v in range(mesh.nv):
        if not any(mesh._alive[t] for t in mesh.v2t[v]):
            continue
        used = set()
        for t in mesh.v2t[v]:
            if not mesh._alive[t]:
                continue
            for q in mesh._tets[t]:
                q = int(q)
                if q in colors:
                    used.add(colors[q])
        c = 0
        while c in used:
            c += 1
        colors[v] = c
    classes = {}
    for v, c in colors.items():
        classes.setdefault(c, []).append(v)
    return [sorted(classes[c]) for c in sorted(classes)]


def _bad_tets(mesh, threshold):
    ids = mesh.alive_tet_ids()
    if not len(ids):
        return ids, np.empty(0)
    e = amips_energies(mesh._verts[mesh._tets[ids]])
    return ids[e > threshold], e


def _edges_of_tets(mesh, tets):
    edges = set()
    for t in tets:
        quad = [int(q) for q in mesh._tets[t]]
        for i in range(4):
            for j in range(i + 1, 4):
                edges.add(_edge_key(quad[i], quad[j]))
    return edges


def _edge_lengths(mesh, edges):
    edges = sorted(edges)
    if not edges:
        return edges, np.empty(0)
    e = np.array(edges)
    d = np.linalg.norm(mesh._verts[e[:, 0]] - mesh._verts[e[:, 1]], axis=1)
    return edges, d


def _short_edges(mesh, limit):
    edges, d = _edge_lengths(mesh, _edges_of_tets(mesh, mesh.alive_tet_ids()))
    order = np.argsort(d, kind="stable")
    return [edges[i] for i in order if d[i] < limit]


def _repair_tet(mesh, t, config, env, tol):
    """Try the local operations on one bad tet until one commits: collapse
    its shortest edge first, then swap, then smooth its vertices, and as a
    last resort split an oversized edge so a later collapse can bite."""
    if not mesh._alive[t]:
        return True
    quad = [int(q) for q in mesh._tets[t]]
    edges = []
    for i in range(4):
        for j in range(i + 1, 4):
            u, v = quad[i], quad[j]
            edges.append((float(np.linalg.norm(mesh.vertices[u]
                                               - mesh.vertices[v])), _edge_key(u, v)))
    edges.sort()
    for _, (u, v) in edges:
        if edge_collapse(mesh, u, v, env, tol):
            return True
        if not mesh._alive[t]:
            return True
    for _, (u, v) in edges:
        if edge_swap(mesh, u, v, tol):
            return True
        if not mesh._alive[t]:
            return True
    for f in mesh.tet_faces(t):
        if face_swap(mesh, f, tol):
            return True
        if not mesh._alive[t]:
            return True
    improved = False
    for v in sorted(set(quad)):
        if vertex_smooth(mesh, v, env, tol):
            improved = True
        elif vertex_smooth(mesh, v, env, tol, objective="max"):
            improved = True
        if not mesh._alive[t]:
            return True
    if improved:
        return True
    ln, (u, v) = edges[-1]
    if ln > SPLIT_FACTOR * config.target_edge_length:
        return edge_split(mesh, u, v, tol)
    return False


def improvement_pass(mesh, config, env, pending=(), table=None,
                     tol=DEFAULT_TOLERANCES, delta_reinsert=None):
    """Run improvement iterations until max energy < stop_energy (with no
    pending insertions) or the iteration budget is exhausted.

    pending: list of (triangle points, provenance id, open edge point pairs)
    for triangles rejected during insertion; re-attempted every
    reinsertion_period iterations with the tight snapping tolerance. Returns
    a report dict with the energy trace and the remaining pending list."""
    from .insertion import insert_triangle

    if delta_reinsert is None:
        delta_reinsert = tol.eps_zero
    pending = list(pending)
    ell = config.target_edge_length
    trace = []
    iterations = 0
    for it in range(1, config.max_iterations + 1):
        ids = mesh.alive_tet_ids()
        energies = amips_energies(mesh._verts[mesh._tets[ids]])
        max_e = float(energies.max()) if len(energies) else 0.0
        if max_e < config.stop_energy and not pending:
            break
        iterations = it
        # targeted repair, worst tets first
        order = np.argsort(energies, kind="stable")[::-1]
        for k in order:
            if energies[k] <= config.stop_energy:
                break
            t = int(ids[k])
            if not mesh._alive[t]:
                continue
            if amips_energy(mesh.tet_points(t)) <= config.stop_energy:
                continue
            _repair_tet(mesh, t, config, env, tol)

        if pending and table is not None and it % config.reinsertion_period == 0:
            still = []
            for tri_pts, prov, open_edges in pending:
                okflag, _ = insert_triangle(tri_pts, mesh, table, env,
                                            delta_reinsert, provenance_id=prov,
                                            open_edges_pts=open_edges, tol=tol)
                if not okflag:
                    still.append((tri_pts, prov, open_edges))
            pending = still

        ids = mesh.alive_tet_ids()
        energies = amips_energies(mesh._verts[mesh._tets[ids]])
        max_e = float(energies.max()) if len(energies) else 0.0
        avg_e = float(energies.mean()) if len(energies) else 0.0
        trace.append(max_e)
        logger.info("iteration %d: max energy %.3g, avg %.3g, %d tets, "
                    "%d pending", it, max_e, avg_e, len(ids), len(pending))
    ids = mesh.alive_tet_ids()
    energies = amips_energies(mesh._verts[mesh._tets[ids]])
    return {
        "iterations": iterations,
        "max_energy": float(energies.max()) if len(energies) else 0.0,
        "avg_energy": float(energies.mean()) if len(energies) else 0.0,
        "trace": trace,
        "pending": pending,
    }
