"""Container behavior: soup validation, tet mesh bookkeeping, quality."""

import math

import numpy as np
import pytest

from envtet import mesh as msh
from envtet.mesh import TetMesh, TriangleSoup, face_key, validate_mesh

REGULAR = np.array([
    [0.0, 0.0, 0.0],
    [1.0, 0.0, 0.0],
    [0.5, math.sqrt(3) / 2, 0.0],
    [0.5, math.sqrt(3) / 6, math.sqrt(6) / 3],
])


def two_tet_mesh():
    verts = np.array([
        [0.0, 0.0, 0.0],
        [1.0, 0.0, 0.0],
        [0.0, 1.0, 0.0],
        [0.0, 0.0, 1.0],
        [0.0, 0.0, -1.0],
    ])
    # both positively oriented, sharing face (0, 1, 2)
    return TetMesh(verts, [[0, 1, 2, 3], [0, 2, 1, 4]])


class TestTriangleSoup:
    def test_basic(self):
        s = TriangleSoup(np.zeros((3, 3)), [[0, 1, 2]])
        assert s.triangles.shape == (1, 3)
        assert list(s.provenance) == [0]

    def test_index_out_of_range(self):
        with pytest.raises(ValueError):
            TriangleSoup(np.zeros((3, 3)), [[0, 1, 3]])
        with pytest.raises(ValueError):
            TriangleSoup(np.zeros((3, 3)), [[0, 1, -1]])

    def test_provenance_length_checked(self):
        with pytest.raises(ValueError):
            TriangleSoup(np.zeros((3, 3)), [[0, 1, 2]], provenance=[0, 1])

    def test_triangle_points(self):
        v = np.arange(9.0).reshape(3, 3)
        s = TriangleSoup(v, [[2, 0, 1]])
        assert np.array_equal(s.triangle_points(0), v[[2, 0, 1]])
        assert np.array_equal(s.all_triangle_points()[0], v[[2, 0, 1]])


class TestFaceKey:
    def test_sorted(self):
        assert face_key(3, 1, 2) == (1, 2, 3)
        assert face_key(np.int64(2), 1, 3) == (1, 2, 3)
        assert all(isinstance(x, int) for x in face_key(np.int64(2), 1, 3))


class TestTetMesh:
    def test_incidence_built(self):
        m = two_tet_mesh()
        assert m.v2t[0] == {0, 1}
        assert m.v2t[3] == {0}
        assert m.v2t[4] == {1}

    def test_add_vertex_and_tet(self):
        m = two_tet_mesh()
        v = m.add_vertex([0.25, 0.25, 0.25])
        assert v == 5
        t = m.add_tet([0, 1, 2, v])
        assert m._alive[t]
        assert t in m.v2t[v]

    def test_growth_preserves_flags(self):
        m = two_tet_mesh()
        m.on_tracked[2] = True
        for _ in range(20):
            m.add_vertex([0, 0, 0])
        assert m.on_tracked[2]
        assert not m.on_tracked[10]

    def test_kill_and_revive(self):
        m = two_tet_mesh()
        m.kill_tet(0)
        assert not m._alive[0]
        assert m.v2t[3] == set()
        with pytest.raises(ValueError):
            m.kill_tet(0)
        m.revive_tet(0)
        assert m.v2t[3] == {0}
        with pytest.raises(ValueError):
            m.revive_tet(0)

    def test_pop_vertex_guard(self):
        m = two_tet_mesh()
        with pytest.raises(ValueError):
            m.pop_vertex()  # vertex 4 is still used by tet 1
        m.add_vertex([9, 9, 9])
        m.pop_vertex()
        assert m.nv == 5

    def test_pop_tet(self):
        m = two_tet_mesh()
        m.pop_tet()
        assert m.nt == 1
        assert m.v2t[4] == set()

    def test_move_vertex_updates_boxes(self):
        m = two_tet_mesh()
        m.move_vertex(3, [0, 0, 5.0])
        assert m._tet_hi[0][2] == 5.0
        assert m._tet_hi[1][2] == 0.0

    def test_tet_faces(self):
        m = two_tet_mesh()
        faces = m.tet_faces(0)
        assert face_key(0, 1, 2) in faces
        assert len(set(faces)) == 4

    def test_tag_face_dedup(self):
        m = two_tet_mesh()
        key = face_key(0, 1, 2)
        m.tag_face(key, 0, (0, 1, 2))
        m.tag_face(key, 0, (0, 1, 2))
        m.tag_face(key, 1, (0, 1, 2))
        assert len(m.tracked[key]) == 2

    def test_total_volume(self):
        m = two_tet_mesh()
        assert abs(m.total_volume() - 2.0 / 6.0) < 1e-15
        m.kill_tet(1)
        assert abs(m.total_volume() - 1.0 / 6.0) < 1e-15

    def test_centroids(self):
        m = two_tet_mesh()
        c = m.centroids()
        assert np.allclose(c[0], m.vertices[[0, 1, 2, 3]].mean(axis=0))

    def test_compact(self):
        m = two_tet_mesh()
        m.kill_tet(0)
        m.compact()
        assert m.nt == 1
        assert list(m.tets[0]) == [0, 2, 1, 4]
        assert m.v2t[3] == set()
        assert m.v2t[4] == {0}


class TestTetVolume:
    def test_signed(self):
        t = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1.0]])
        assert abs(msh.tet_volume(t) - 1.0 / 6.0) < 1e-15
        assert abs(msh.tet_volume(t[[0, 2, 1, 3]]) + 1.0 / 6.0) < 1e-15


class TestQualityReport:
    def test_regular_tet(self):
        q = msh.quality_report(REGULAR)
        assert abs(q.amips - 3.0) < 1e-9
        assert abs(q.min_dihedral - math.acos(1.0 / 3.0)) < 1e-9
        assert abs(q.volume_edge_ratio - 1.0) < 1e-9
        assert abs(q.aspect_ratio - 1.0) < 1e-9
        assert abs(q.radius_edge_ratio - 1.0) < 1e-9

    def test_inverted_raises(self):
        with pytest.raises(ValueError):
            msh.quality_report(REGULAR[[0, 2, 1, 3]])


class TestValidateMesh:
    def test_clean(self):
        assert validate_mesh(two_tet_mesh()) == []

    def test_inverted_flagged(self):
        m = two_tet_mesh()
        m._tets[1] = [0, 1, 2, 4]  # vertex 4 is below the shared face
        kinds = {v[0] for v in validate_mesh(m)}
        assert "orientation" in kinds

    def test_face_overuse_flagged(self):
        m = two_tet_mesh()
        v = m.add_vertex([0.3, 0.3, 0.3])
        m.add_tet([0, 1, 2, v])  # third tet on face (0,1,2)
        kinds = {v[0] for v in validate_mesh(m)}
        assert "face_overuse" in kinds

    def test_dangling_tag_flagged(self):
        m = two_tet_mesh()
        m.tracked[(0, 1, 4)] = [(0, (0, 1, 4))]
        m.tracked[(11, 12, 13)] = [(0, (11, 12, 13))]
        kinds = [v for v in validate_mesh(m) if v[0] == "dangling_tag"]
        assert kinds == [("dangling_tag", (11, 12, 13))]
