"""Triangle soup and tetrahedral mesh containers.

The TetMesh is the evolving volumetric state: growable vertex/tet arrays with
tombstoned deletion, per-vertex flags, vertex-to-tet incidence, and the
tracked-surface tags that remember which tet faces stand in for inserted
input triangles. Faces are identified by their sorted global vertex triple,
which survives the heavy re-indexing done by subdivision and the local
improvement operations.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import predicates as pred
from .energy import amips_energy


@dataclass
class TriangleSoup:
    """Indexed triangle set with no connectivity assumptions."""

    vertices: np.ndarray
    triangles: np.ndarray
    provenance: np.ndarray = None

    def __post_init__(self):
        self.vertices = np.ascontiguousarray(self.vertices, dtype=float).reshape(-1, 3)
        self.triangles = np.ascontiguousarray(self.triangles, dtype=np.int64).reshape(-1, 3)
        if self.provenance is None:
            self.provenance = np.zeros(len(self.triangles), dtype=np.int64)
        else:
            self.provenance = np.ascontiguousarray(self.provenance, dtype=np.int64)
        if len(self.triangles) and (self.triangles.min() < 0
                                    or self.triangles.max() >= len(self.vertices)):
            raise ValueError("triangle index out of range")
        if len(self.provenance) != len(self.triangles):
            raise ValueError("provenance length mismatch")

    def triangle_points(self, i):
        return self.vertices[self.triangles[i]]

    def all_triangle_points(self):
        return self.vertices[self.triangles]


def face_key(a, b, c):
    return tuple(sorted((int(a), int(b), int(c))))


class TetMesh:
    """Growable tet mesh with tombstones, flags, incidence and face tags."""

    def __init__(self, vertices, tets):
        vertices = np.asarray(vertices, dtype=float).reshape(-1, 3)
        tets = np.asarray(tets, dtype=np.int64).reshape(-1, 4)
        n, m = len(vertices), len(tets)
        self.nv = n
        self.nt = m
        self._verts = np.empty((max(n, 8), 3))
        self._verts[:n] = vertices
        self._tets = np.empty((max(m, 8), 4), dtype=np.int64)
        self._tets[:m] = tets
        self._alive = np.zeros(max(m, 8), dtype=bool)
        self._alive[:m] = True
        self.on_tracked = np.zeros(max(n, 8), dtype=bool)
        self.on_open_boundary = np.zeros(max(n, 8), dtype=bool)
        self.on_bbox = np.zeros(max(n, 8), dtype=bool)
        # tracked faces: sorted vertex triple -> list of (surface_id, oriented triple)
        self.tracked = {}
        # open-boundary geometry: list of (p, q) float endpoints; vertex -> segment index
        self.open_segments = []
        self.open_segment_of_vertex = {}
        self.v2t = [set() for _ in range(n)]
        for t in range(m):
            for v in tets[t]:
                self.v2t[v].add(t)
        # per-tet bounding boxes, maintained incrementally
        self._tet_lo = np.empty((max(m, 8), 3))
        self._tet_hi = np.empty((max(m, 8), 3))
        if m:
            p = self._verts[self._tets[:m]]
            self._tet_lo[:m] = p.min(axis=1)
            self._tet_hi[:m] = p.max(axis=1)

    # -- views -------------------------------------------------------------

    @property
    def vertices(self):
        return self._verts[:self.nv]

    @property
    def tets(self):
        return self._tets[:self.nt]

    @property
    def alive(self):
        return self._alive[:self.nt]

    def alive_tet_ids(self):
        return np.nonzero(self.alive)[0]

    def tet_points(self, t):
        return self._verts[self._tets[t]]

    # -- growth ------------------------------------------------------------

    def _grow_vertices(self):
        cap = len(self._verts)
        if self.nv < cap:
            return
        new = max(8, cap * 2)
        for name in ("_verts",):
            arr = getattr(self, name)
            fresh = np.empty((new,) + arr.shape[1:], dtype=arr.dtype)
            fresh[:cap] = arr
            setattr(self, name, fresh)
        for name in ("on_tracked", "on_open_boundary", "on_bbox"):
            arr = getattr(self, name)
            fresh = np.zeros(new, dtype=bool)
            fresh[:cap] = arr
            setattr(self, name, fresh)

    def add_vertex(self, pos):
        self._grow_vertices()
        v = self.nv
        self._verts[v] = pos
        self.v2t.append(set())
        self.nv += 1
        return v

    def pop_vertex(self):
        """Remove the most recently added vertex (must be unused)."""
        v = self.nv - 1
        if self.v2t[v]:
            raise ValueError("vertex still referenced")
        self.v2t.pop()
        self.on_tracked[v] = False
        self.on_open_boundary[v] = False
        self.on_bbox[v] = False
        self.open_segment_of_vertex.pop(v, None)
        self.nv -= 1

    def add_tet(self, quad):
        cap = len(self._tets)
        if self.nt >= cap:
            new = max(8, cap * 2)
            fresh = np.empty((new, 4), dtype=np.int64)
            fresh[:cap] = self._tets
            self._tets = fresh
            fa = np.zeros(new, dtype=bool)
            fa[:cap] = self._alive
            self._alive = fa
            bl = np.empty((new, 3))
            bl[:cap] = self._tet_lo
            self._tet_lo = bl
            bh = np.empty((new, 3))
            bh[:cap] = self._tet_hi
            self._tet_hi = bh
        t = self.nt
        self._tets[t] = quad
        self._alive[t] = True
        p = self._verts[self._tets[t]]
        self._tet_lo[t] = p.min(axis=0)
        self._tet_hi[t] = p.max(axis=0)
        for v in quad:
            self.v2t[int(v)].add(t)
        self.nt += 1
        return t

    def move_vertex(self, v, pos):
        """Reposition a vertex and refresh the bboxes of its tets."""
        self._verts[v] = pos
        for t in self.v2t[v]:
            p = self._verts[self._tets[t]]
            self._tet_lo[t] = p.min(axis=0)
            self._tet_hi[t] = p.max(axis=0)

    def kill_tet(self, t):
        if not self._alive[t]:
            raise ValueError("tet already dead")
        self._alive[t] = False
        for v in self._tets[t]:
            self.v2t[int(v)].discard(t)

    def revive_tet(self, t):
        if self._alive[t]:
            raise ValueError("tet already alive")
        self._alive[t] = True
        for v in self._tets[t]:
            self.v2t[int(v)].add(t)

    def pop_tet(self):
        """Remove the most recently added tet slot entirely."""
        t = self.nt - 1
        if self._alive[t]:
            for v in self._tets[t]:
                self.v2t[int(v)].discard(t)
        self.nt -= 1

    # -- faces and tags ----------------------------------------------------

    def tet_faces(self, t):
        """The 4 faces of tet t as sorted-key tuples."""
        a, b, c, d = (int(x) for x in self._tets[t])
        return [face_key(b, c, d), face_key(a, c, d),
                face_key(a, b, d), face_key(a, b, c)]

    def tag_face(self, key, surface_id, oriented):
        lst = self.tracked.setdefault(key, [])
        entry = (int(surface_id), tuple(int(v) for v in oriented))
        if entry not in lst:
            lst.append(entry)

    def total_volume(self):
        ids = self.alive_tet_ids()
        if not len(ids):
            return 0.0
        p = self._verts[self._tets[ids]]
        d = p[:, 1:] - p[:, :1]
        det = np.linalg.det(d)
        return float(np.sum(det)) / 6.0

    def centroids(self, ids=None):
        if ids is None:
            ids = self.alive_tet_ids()
        return self._verts[self._tets[ids]].mean(axis=1)

    def compact(self):
        """Drop dead tets. Vertex ids are preserved."""
        keep = self.alive_tet_ids()
        self._tets[:len(keep)] = self._tets[keep]
        self._tet_lo[:len(keep)] = self._tet_lo[keep]
        self._tet_hi[:len(keep)] = self._tet_hi[keep]
        self.nt = len(keep)
        self._alive[:self.nt] = True
        self._alive[self.nt:] = False
        self.v2t = [set() for _ in range(self.nv)]
        for t in range(self.nt):
            for v in self._tets[t]:
                self.v2t[int(v)].add(t)


def tet_volume(tet):
    """Signed volume det[v1-v0, v2-v0, v3-v0] / 6 in floating point."""
    p = np.asarray(tet, dtype=float)
    return float(np.linalg.det(p[1:] - p[0])) / 6.0


def quality_report(tet):
    """The five quality measures of one positively oriented tet."""
    p = np.asarray(tet, dtype=float)
    vol = tet_volume(p)
    if vol <= 0:
        raise ValueError("quality report requires a positively oriented tet")
    edges = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]
    elens = [float(np.linalg.norm(p[i] - p[j])) for i, j in edges]
    lmax = max(elens)
    faces = [(1, 2, 3), (0, 2, 3), (0, 1, 3), (0, 1, 2)]
    areas = []
    normals = []
    for opp, (i, j, k) in enumerate(faces):
        n = np.cross(p[j] - p[i], p[k] - p[i])
        areas.append(0.5 * float(np.linalg.norm(n)))
        n = n / np.linalg.norm(n)
        if np.dot(n, p[opp] - p[i]) > 0:
            n = -n  # outward
        normals.append(n)
    h_min = min(3.0 * vol / a for a in areas)
    r_in = 3.0 * vol / sum(areas)
    dihedrals = []
    for a in range(4):
        for b in range(a + 1, 4):
            # the faces not containing the edge's two opposite vertices share
            # that edge; faces list is indexed by opposite vertex
            cosang = -float(np.dot(normals[a], normals[b]))
            cosang = max(-1.0, min(1.0, cosang))
            dihedrals.append(math.acos(cosang))
    return QualityReport(
        amips=amips_energy(p),
        min_dihedral=min(dihedrals),
        volume_edge_ratio=6.0 * math.sqrt(2.0) * vol / lmax ** 3,
        aspect_ratio=math.sqrt(1.5) * h_min / lmax,
        radius_edge_ratio=2.0 * math.sqrt(6.0) * r_in / lmax,
    )


@dataclass
class QualityReport:
    amips: float
    min_dihedral: float
    volume_edge_ratio: float
    aspect_ratio: float
    radius_edge_ratio: float


def validate_mesh(mesh):
    """Empty list iff every alive tet is Positive and adjacency is sane."""
    violations = []
    ids = mesh.alive_tet_ids()
    if len(ids):
        p = mesh._verts[mesh._tets[ids]]
        signs = pred.orient3d_batch(p[:, 0], p[:, 1], p[:, 2], p[:, 3])
        for t, s in zip(ids, signs):
            if s <= 0:
                violations.append(("orientation", int(t)))
    face_count = {}
    for t in ids:
        for f in mesh.tet_faces(t):
            face_count[f] = face_count.get(f, 0) + 1
    for f, c in face_count.items():
        if c > 2:
            violations.append(("face_overuse", f))
    for t in ids:
        for v in mesh._tets[t]:
            if t not in mesh.v2t[int(v)]:
                violations.append(("incidence", int(t), int(v)))
    for key in mesh.tracked:
        if key not in face_count:
            violations.append(("dangling_tag", key))
    return violations
