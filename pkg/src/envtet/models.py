"""Procedural test surfaces.

Small closed/open/broken triangle soups used by the test suite and the demo
scripts. All generators are deterministic.
"""

import numpy as np

from .mesh import TriangleSoup

_CUBE_FACES = np.array([
    [0, 2, 1], [0, 3, 2],   # z = lo
    [4, 5, 6], [4, 6, 7],   # z = hi
    [0, 1, 5], [0, 5, 4],   # y = lo
    [2, 3, 7], [2, 7, 6],   # y = hi
    [0, 4, 7], [0, 7, 3],   # x = lo
    [1, 2, 6], [1, 6, 5],   # x = hi
])


def cube(center=(0.0, 0.0, 0.0), size=1.0):
    c = np.asarray(center, dtype=float)
    h = size / 2.0
    corners = np.array([
        [-h, -h, -h], [h, -h, -h], [h, h, -h], [-h, h, -h],
        [-h, -h, h], [h, -h, h], [h, h, h], [-h, h, h],
    ]) + c
    return TriangleSoup(corners, _CUBE_FACES.copy())


def tet_surface(scale=1.0):
    v = scale * np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1.0]])
    f = np.array([[0, 2, 1], [0, 1, 3], [0, 3, 2], [1, 2, 3]])
    return TriangleSoup(v, f)


def octahedron(radius=1.0):
    v = radius * np.array([
        [1, 0, 0], [-1, 0, 0], [0, 1, 0], [0, -1, 0], [0, 0, 1], [0, 0, -1.0]])
    f = np.array([
        [0, 2, 4], [2, 1, 4], [1, 3, 4], [3, 0, 4],
        [2, 0, 5], [1, 2, 5], [3, 1, 5], [0, 3, 5]])
    return TriangleSoup(v, f)


def icosphere(subdivisions=1, radius=1.0):
    phi = (1.0 + np.sqrt(5.0)) / 2.0
    v = np.array([
        [-1, phi, 0], [1, phi, 0], [-1, -phi, 0], [1, -phi, 0],
        [0, -1, phi], [0, 1, phi], [0, -1, -phi], [0, 1, -phi],
        [phi, 0, -1], [phi, 0, 1], [-phi, 0, -1], [-phi, 0, 1.0]])
    f = np.array([
        [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
        [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
        [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
        [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1]])
    verts = [tuple(x) for x in v]
    for _ in range(subdivisions):
        cache = {}
        idx = {tuple(p): i for i, p in enumerate(verts)}

        def midpoint(i, j):
            key = (min(i, j), max(i, j))
            if key not in cache:
                m = tuple((np.array(verts[i]) + np.array(verts[j])) / 2.0)
                if m not in idx:
                    idx[m] = len(verts)
                    verts.append(m)
                cache[key] = idx[m]
            return cache[key]

        nf = []
        for a, b, c in f:
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            nf += [[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]
        f = np.array(nf)
    v = np.array(verts)
    v = radius * v / np.linalg.norm(v, axis=1, keepdims=True)
    return TriangleSoup(v, f)


def torus(major=1.0, minor=0.35, n_major=24, n_minor=12):
    verts = []
    for i in range(n_major):
        u = 2 * np.pi * i / n_major
        for j in range(n_minor):
            w = 2 * np.pi * j / n_minor
            r = major + minor * np.cos(w)
            verts.append([r * np.cos(u), r * np.sin(u), minor * np.sin(w)])
    faces = []
    for i in range(n_major):
        for j in range(n_minor):
            a = i * n_minor + j
            b = ((i + 1) % n_major) * n_minor + j
            c = ((i + 1) % n_major) * n_minor + (j + 1) % n_minor
            d = i * n_minor + (j + 1) % n_minor
            faces += [[a, b, c], [a, c, d]]
    return TriangleSoup(np.array(verts), np.array(faces))


def open_half_sphere(radius=1.0, n_lat=6, n_lon=16):
    """Upper hemisphere with an open equator rim."""
    verts = [[0.0, 0.0, radius]]
    for i in range(1, n_lat + 1):
        th = (np.pi / 2) * i / n_lat
        for j in range(n_lon):
            ph = 2 * np.pi * j / n_lon
            verts.append([radius * np.sin(th) * np.cos(ph),
                          radius * np.sin(th) * np.sin(ph),
                          radius * np.cos(th)])
    faces = []
    for j in range(n_lon):
        faces.append([0, 1 + j, 1 + (j + 1) % n_lon])
    for i in range(n_lat - 1):
        ring0 = 1 + i * n_lon
        ring1 = 1 + (i + 1) * n_lon
        for j in range(n_lon):
            a, b = ring0 + j, ring0 + (j + 1) % n_lon
            c, d = ring1 + j, ring1 + (j + 1) % n_lon
            faces += [[a, c, d], [a, d, b]]
    return TriangleSoup(np.array(verts), np.array(faces))


def merge_soups(soups):
    """Concatenate soups; each keeps its own provenance id 0..k-1."""
    verts, tris, prov = [], [], []
    off = 0
    for k, s in enumerate(soups):
        verts.append(s.vertices)
        tris.append(s.triangles + off)
        prov.append(np.full(len(s.triangles), k, dtype=np.int64))
        off += len(s.vertices)
    return TriangleSoup(np.vstack(verts), np.vstack(tris), np.concatenate(prov))


def intersecting_cube_pair():
    """Two unit cubes offset by half their side: a self-intersecting soup."""
    a = cube(center=(0.0, 0.0, 0.0))
    b = cube(center=(0.5, 0.35, 0.25))
    s = merge_soups([a, b])
    s.provenance[:] = 0
    return s


def dirty_cube():
    """A cube with duplicated vertices, duplicated and degenerate faces."""
    base = cube()
    v = base.vertices
    t = base.triangles
    extra_v = np.vstack([v, v[:3] + 2e-10, [[0.0, 0.0, 0.0]]])
    dup = t[:4].copy()
    deg = np.array([[0, 1, 1], [2, 2, 5], [0, 8, 9]])  # repeated / near-zero area
    tris = np.vstack([t, dup, deg])
    return TriangleSoup(extra_v, tris)


def jittered_cube(subdiv=2, amplitude=0.04):
    """Subdivided cube with a deterministic vertex jitter (bumpy surface)."""
    s = cube()
    v, f = s.vertices, s.triangles
    for _ in range(subdiv):
        verts = [tuple(p) for p in v]
        idx = {p: i for i, p in enumerate(verts)}
        cache = {}

        def midpoint(i, j):
            key = (min(i, j), max(i, j))
            if key not in cache:
                m = tuple((np.array(verts[i]) + np.array(verts[j])) / 2.0)
                if m not in idx:
                    idx[m] = len(verts)
                    verts.append(m)
                cache[key] = idx[m]
            return cache[key]

        nf = []
        for a, b, c in f:
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            nf += [[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]
        f = np.array(nf)
        v = np.array(verts)
    rng = np.random.default_rng(1234)
    bump = amplitude * (rng.random(v.shape) - 0.5)
    # keep the cube corners fixed so the bbox stays predictable
    on_edge = (np.abs(np.abs(v) - 0.5) < 1e-12).sum(axis=1) >= 2
    bump[on_edge] = 0.0
    return TriangleSoup(v + bump, f)


def desk_suite():
    """Name -> soup map used by the end-to-end validity tests."""
    return {
        "cube": cube(),
        "tet": tet_surface(),
        "octahedron": octahedron(),
        "icosphere1": icosphere(1),
        "icosphere2": icosphere(2),
        "torus": torus(),
        "cube_pair": intersecting_cube_pair(),
        "half_sphere": open_half_sphere(),
        "dirty_cube": dirty_cube(),
        "jittered_cube": jittered_cube(),
    }
