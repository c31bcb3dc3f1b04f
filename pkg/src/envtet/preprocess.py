"""Input soup simplification.

Vertices closer than the zero tolerance are merged (union-find closure, so
chains collapse to one representative), degenerate triangles are dropped, and
manifold edges are greedily collapsed as long as the result stays inside the
preprocessing envelope (built at 0.8 eps to leave room for later snapping).
A serial 2-coloring pass over faces yields rounds of pairwise independent
edges; collapses within a round have disjoint footprints.
"""

import numpy as np
from scipy.spatial import cKDTree

from .mesh import TriangleSoup
from .predicates import DEFAULT_TOLERANCES

PREP_EPS_FACTOR = 0.8
STALL_FRACTION = 1e-4  # stop when a round removes < 0.01% of original vertices


class _UnionFind:
    def __init__(self, n):
        self.parent = list(range(n))

    def find(self, x):
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            # keep the smaller index as representative for determinism
            if ra > rb:
                ra, rb = rb, ra
            self.parent[rb] = ra


def _triangle_areas(vertices, triangles):
    p = vertices[triangles]
    n = np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0])
    return 0.5 * np.linalg.norm(n, axis=1)


def merge_close_vertices(soup, tol=DEFAULT_TOLERANCES):
    """Merge vertices within eps_zero (transitively) and drop degenerate
    triangles. Surviving vertex coordinates are bitwise those of the cluster
    representative (smallest original index); unreferenced vertices are
    dropped."""
    v = soup.vertices
    uf = _UnionFind(len(v))
    if len(v) > 1:
        tree = cKDTree(v)
        for i, j in tree.query_pairs(tol.eps_zero):
            uf.union(i, j)
    rep = np.array([uf.find(i) for i in range(len(v))], dtype=np.int64)
    tris = rep[soup.triangles]
    ok = ((tris[:, 0] != tris[:, 1]) & (tris[:, 1] != tris[:, 2])
          & (tris[:, 0] != tris[:, 2]))
    tris = tris[ok]
    prov = soup.provenance[ok]
    areas = _triangle_areas(v, tris) if len(tris) else np.empty(0)
    good = areas > tol.eps_zero_sq
    tris, prov = tris[good], prov[good]
    # merging can fold faces of one input onto the same triangle; keep the
    # first copy (coincident faces of different inputs both stay, each input
    # surface must remain complete for its winding number)
    seen = set()
    keep = []
    for t, tri in enumerate(tris):
        key = (tuple(sorted(int(x) for x in tri)), int(prov[t]))
        if key not in seen:
            seen.add(key)
            keep.append(t)
    tris, prov = tris[keep], prov[keep]
    used = np.unique(tris) if len(tris) else np.zeros(0, dtype=np.int64)
    remap = np.full(len(v), -1, dtype=np.int64)
    remap[used] = np.arange(len(used))
    return TriangleSoup(v[used], remap[tris], prov)


def _edge_incidence(triangles):
    """edge (a<b) -> list of triangle indices."""
    inc = {}
    for t, tri in enumerate(triangles):
        for k in range(3):
            a, b = int(tri[k]), int(tri[(k + 1) % 3])
            key = (a, b) if a < b else (b, a)
            inc.setdefault(key, []).append(t)
    return inc


def color_independent_edges(soup):
    """Rounds of parallel-independent edges.

    Within one round all triangles start white; an edge is selected iff every
    triangle incident to either endpoint is still white, and selecting it
    blackens those triangles. Selected edges are excluded from later rounds;
    rounds repeat until no edge remains. Within one round no two edges share
    a vertex-adjacent triangle."""
    tris = soup.triangles
    v2t = {}
    for t, tri in enumerate(tris):
        for v in tri:
            v2t.setdefault(int(v), set()).add(t)
    edges = sorted(_edge_incidence(tris).keys())
    remaining = list(edges)
    rounds = []
    while remaining:
        white = np.ones(len(tris), dtype=bool)
        selected = []
        rest = []
        for (a, b) in remaining:
            touched = v2t.get(a, set()) | v2t.get(b, set())
            if all(white[t] for t in touched):
                selected.append((a, b))
                for t in touched:
                    white[t] = False
            else:
                rest.append((a, b))
        if not selected:
            break
        rounds.append(set(selected))
        remaining = rest
    return rounds


def simplify(soup, env_prep, tol=DEFAULT_TOLERANCES):
    """Envelope-constrained edge collapsing.

    A collapse commits only when the edge and all edges touching its
    endpoints are manifold (at most two incident triangles) and every
    post-collapse triangle passes the envelope at eps_prep. Shorter edges are
    tried first; rounds stop when fewer than 0.01% of the original vertices
    go away."""
    verts = [tuple(p) for p in soup.vertices]
    tris = [tuple(int(x) for x in t) for t in soup.triangles]
    prov = list(soup.provenance)
    alive = [True] * len(tris)
    n_orig = max(1, len(verts))

    v2t = {}
    for t, tri in enumerate(tris):
        for v in tri:
            v2t.setdefault(v, set()).add(t)

    def edge_tris(a, b):
        return [t for t in v2t.get(a, set()) & v2t.get(b, set()) if alive[t]]

    def vertex_edges(v):
        es = set()
        for t in v2t.get(v, set()):
            if not alive[t]:
                continue
            tri = tris[t]
            for k in range(3):
                x, y = tri[k], tri[(k + 1) % 3]
                if v in (x, y):
                    es.add((x, y) if x < y else (y, x))
        return es

    def is_manifold_edge(a, b):
        return len(edge_tris(a, b)) <= 2

    removed_total = 0
    while True:
        edge_set = set()
        edge_count = {}
        for t in range(len(tris)):
            if not alive[t]:
                continue
            tri = tris[t]
            for k in range(3):
                a, b = tri[k], tri[(k + 1) % 3]
                key = (a, b) if a < b else (b, a)
                edge_set.add(key)
                edge_count[key] = edge_count.get(key, 0) + 1
        # vertices on open-boundary edges must not move, or the boundary
        # itself would erode away
        boundary_verts = set()
        for (a, b), c in edge_count.items():
            if c == 1:
                boundary_verts.add(a)
                boundary_verts.add(b)
        order = sorted(
            edge_set,
            key=lambda e: (np.sum((np.array(verts[e[0]]) - np.array(verts[e[1]])) ** 2),
                           e))
        removed = 0
        dead_verts = set()
        for (a, b) in order:
            if a in dead_verts or b in dead_verts:
                continue
            ets = edge_tris(a, b)
            if not ets or len(ets) > 2:
                continue
            neigh_edges = vertex_edges(a) | vertex_edges(b)
            if any(not is_manifold_edge(x, y) for (x, y) in neigh_edges):
                continue
            pa, pb = np.array(verts[a]), np.array(verts[b])
            a_bnd, b_bnd = a in boundary_verts, b in boundary_verts
            if a_bnd and b_bnd:
                continue
            if a_bnd:
                targets = (pa,)
            elif b_bnd:
                targets = (pb,)
            else:
                targets = ((pa + pb) / 2.0, pa, pb)
            committed = False
            for target in targets:
                new_tris = []
                feasible = True
                affected = [t for t in (v2t.get(a, set()) | v2t.get(b, set()))
                            if alive[t] and t not in ets]
                # collapsing away the last ring of a component, or folding two
                # faces onto one triangle, silently punches holes or creates
                # zero-volume pillows; both are topology damage, not cleanup
                if not affected:
                    continue
                new_keys = [tuple(sorted(a if vv == b else vv
                                         for vv in tris[t])) for t in affected]
                if len(set(new_keys)) < len(new_keys):
                    continue
                for t in affected:
                    pts = []
                    for vv in tris[t]:
                        if vv == a or vv == b:
                            pts.append(target)
                        else:
                            pts.append(np.array(verts[vv]))
                    n = np.cross(pts[1] - pts[0], pts[2] - pts[0])
                    if 0.5 * np.linalg.norm(n) <= tol.eps_zero_sq:
                        feasible = False
                        break
                    new_tris.append(np.array(pts))
                if not feasible:
                    continue
                if all(env_prep.triangle_in_envelope(ntri) for ntri in new_tris):
                    # commit: a absorbs b at the target position
                    verts[a] = tuple(target)
                    for t in ets:
                        alive[t] = False
                    for t in list(v2t.get(b, set())):
                        if not alive[t]:
                            continue
                        tris[t] = tuple(a if vv == b else vv for vv in tris[t])
                        v2t.setdefault(a, set()).add(t)
                    v2t.pop(b, None)
                    dead_verts.add(b)
                    dead_verts.add(a)  # footprint changed; retry next round
                    removed += 1
                    committed = True
                    break
            if committed:
                continue
        removed_total += removed
        if removed < STALL_FRACTION * n_orig:
            break

    out_tris = [tris[t] for t in range(len(tris)) if alive[t]]
    out_prov = [int(prov[t]) for t in range(len(tris)) if alive[t]]
    if not out_tris:
        return TriangleSoup(np.zeros((0, 3)), np.zeros((0, 3), dtype=np.int64),
                            np.zeros(0, dtype=np.int64))
    used = sorted({v for tri in out_tris for v in tri})
    remap = {v: i for i, v in enumerate(used)}
    va = np.array([verts[v] for v in used])
    ta = np.array([[remap[v] for v in tri] for tri in out_tris], dtype=np.int64)
    return TriangleSoup(va, ta, np.array(out_prov, dtype=np.int64))


def preprocess(soup, env_prep, tol=DEFAULT_TOLERANCES):
    """merge + simplify, the full preprocessing stage."""
    merged = merge_close_vertices(soup, tol)
    if len(merged.triangles) == 0:
        return merged
    return simplify(merged, env_prep, tol)
