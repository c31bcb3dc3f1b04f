"""Boundary surface extraction and manifold repair.

The boundary of the filtered tet mesh consists of the faces incident to
exactly one alive tet, oriented outward. Filtering can leave that surface
non-manifold (edges with more than two faces, vertices whose face fan is not
a single disk); repair splits over-shared edges and duplicates non-manifold
vertices, one output vertex per fan component, changing connectivity only.
"""

import numpy as np

from .mesh import TriangleSoup, face_key


def extract_boundary(mesh):
    """Triangle soup of faces with exactly one alive incident tet, wound so
    the normal points out of that tet."""
    count = {}
    owner = {}
    for t in mesh.alive_tet_ids():
        t = int(t)
        quad = [int(q) for q in mesh._tets[t]]
        for skip in range(4):
            fv = tuple(quad[j] for j in range(4) if j != skip)
            key = face_key(*fv)
            count[key] = count.get(key, 0) + 1
            owner[key] = (t, skip)
    tris = []
    for key in sorted(count):
        if count[key] != 1:
            continue
        t, skip = owner[key]
        quad = [int(q) for q in mesh._tets[t]]
        fv = [quad[j] for j in range(4) if j != skip]
        # a Positive tet (a,b,c,d) has outward-facing boundary triangles
        # (b,c,d), (a,d,c), (a,b,d), (a,c,b)
        if skip in (0, 2):
            tris.append((fv[0], fv[1], fv[2]))
        else:
            tris.append((fv[0], fv[2], fv[1]))
    if not tris:
        return TriangleSoup(np.zeros((0, 3)),
                            np.zeros((0, 3), dtype=np.int64))
    tris = np.asarray(tris, dtype=np.int64)
    used = np.unique(tris)
    remap = {int(v): i for i, v in enumerate(used)}
    out = np.array([[remap[int(v)] for v in tri] for tri in tris],
                   dtype=np.int64)
    return TriangleSoup(mesh.vertices[used].copy(), out)


def _edge_key(u, v):
    return (u, v) if u < v else (v, u)


def split_nonmanifold_edges(soup):
    """Give each face its own copy of every edge vertex pair on edges shared
    by three or more faces, via whole-vertex duplication handled by the fan
    split; here we only mark: returns the set of non-manifold edges."""
    inc = {}
    for i, tri in enumerate(soup.triangles):
        for k in range(3):
            inc.setdefault(_edge_key(int(tri[k]), int(tri[(k + 1) % 3])),
                           []).append(i)
    return {e for e, faces in inc.items() if len(faces) > 2}


def make_manifold(soup):
    """Duplicate vertices until the surface is edge- and vertex-manifold.

    Faces are grouped around each vertex into components connected through
    manifold edges (exactly two incident faces); each component keeps its own
    copy of the vertex. This simultaneously separates the wedges meeting at a
    non-manifold edge and the fans meeting at a non-manifold vertex. Geometry
    is unchanged: duplicated vertices share their position."""
    orig = [list(int(v) for v in t) for t in soup.triangles]
    bad_edges = split_nonmanifold_edges(soup)
    v2f = {}
    for i, tri in enumerate(orig):
        for v in tri:
            v2f.setdefault(v, set()).add(i)
    edge_faces = {}
    for i, tri in enumerate(orig):
        for k in range(3):
            edge_faces.setdefault(_edge_key(tri[k], tri[(k + 1) % 3]),
                                  []).append(i)
    # components are decided per vertex on the original connectivity and all
    # renames are applied afterwards, so adjacent bad vertices stay independent
    new_verts = [soup.vertices[i].copy() for i in range(len(soup.vertices))]
    renames = []  # (face, old vertex, replacement)
    for v in sorted(v2f):
        faces = sorted(v2f[v])
        # union components through manifold edges incident to v
        parent = {f: f for f in faces}

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for f in faces:
            tri = orig[f]
            for k in range(3):
                a, b = tri[k], tri[(k + 1) % 3]
                if v not in (a, b):
                    continue
                e = _edge_key(a, b)
                if e in bad_edges:
                    continue
                ef = [x for x in edge_faces[e] if v in orig[x]]
                if len(ef) == 2:
                    ra, rb = find(ef[0]), find(ef[1])
                    if ra != rb:
                        parent[max(ra, rb)] = min(ra, rb)
        comps = {}
        for f in faces:
            comps.setdefault(find(f), []).append(f)
        roots = sorted(comps)
        for r in roots[1:]:
            nv = len(new_verts)
            new_verts.append(soup.vertices[v].copy())
            for f in comps[r]:
                renames.append((f, v, nv))
    tris = [list(t) for t in orig]
    for f, v, nv in renames:
        tris[f] = [nv if x == v else x for x in tris[f]]
    out_tris = np.asarray(tris, dtype=np.int64)
    return TriangleSoup(np.asarray(new_verts), out_tris,
                        soup.provenance.copy())


def manifold_report(soup):
    """Audit dict: edges with more than two faces and vertices whose face
    fan is not one component."""
    inc = {}
    for i, tri in enumerate(soup.triangles):
        for k in range(3):
            inc.setdefault(_edge_key(int(tri[k]), int(tri[(k + 1) % 3])),
                           []).append(i)
    bad_edges = sorted(e for e, fs in inc.items() if len(fs) > 2)
    v2f = {}
    for i, tri in enumerate(soup.triangles):
        for v in tri:
            v2f.setdefault(int(v), set()).add(i)
    bad_verts = []
    for v in sorted(v2f):
        faces = sorted(v2f[v])
        parent = {f: f for f in faces}

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for f in faces:
            tri = [int(x) for x in soup.triangles[f]]
            for k in range(3):
                a, b = tri[k], tri[(k + 1) % 3]
                if v not in (a, b):
                    continue
                for g in inc[_edge_key(a, b)]:
                    if g != f and v in [int(x) for x in soup.triangles[g]]:
                        ra, rb = find(f), find(g)
                        if ra != rb:
                            parent[max(ra, rb)] = min(ra, rb)
        if len({find(f) for f in faces}) > 1:
            bad_verts.append(v)
    return {"nonmanifold_edges": bad_edges, "nonmanifold_vertices": bad_verts}


def is_manifold(soup):
    rep = manifold_report(soup)
    return not rep["nonmanifold_edges"] and not rep["nonmanifold_vertices"]
