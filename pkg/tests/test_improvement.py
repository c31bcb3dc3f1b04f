"""Local operations: splits, collapses, swaps, smoothing, scheduling."""

import numpy as np
import pytest

from envtet import improvement as imp
from envtet.background import generate_background_mesh
from envtet.energy import amips_energies, amips_energy
from envtet.envelope import build_envelope
from envtet.mesh import TetMesh, face_key, validate_mesh
from envtet.models import cube


def star_energy(mesh, v):
    tets = sorted(t for t in mesh.v2t[v] if mesh._alive[t])
    return float(amips_energies(mesh._verts[mesh._tets[tets]]).sum())


def two_tet_mesh():
    verts = np.array([
        [0.0, 0.0, 0.0],
        [1.0, 0.0, 0.0],
        [0.0, 1.0, 0.0],
        [0.0, 0.0, 1.0],
        [0.0, 0.0, -1.0],
    ])
    return TetMesh(verts, [[0, 1, 2, 3], [0, 2, 1, 4]])


def ring3_mesh(half_height=0.1):
    """Three tets around a central vertical edge (the 3-2 swap setup)."""
    verts = np.array([
        [0.0, 0.0, half_height],
        [0.0, 0.0, -half_height],
        [1.0, 0.0, 0.0],
        [-0.5, np.sqrt(3) / 2, 0.0],
        [-0.5, -np.sqrt(3) / 2, 0.0],
    ])
    tets = []
    for (i, j) in ((2, 3), (3, 4), (4, 2)):
        quad = [i, j, 0, 1]
        p = verts[quad]
        if np.linalg.det(p[1:] - p[0]) < 0:
            quad = [j, i, 0, 1]
        tets.append(quad)
    return TetMesh(verts, tets)


@pytest.fixture
def dummy_env():
    return build_envelope(cube(), 1e-3)


class TestEdgeSplit:
    def test_splits_all_incident(self):
        m = two_tet_mesh()
        assert imp.edge_split(m, 0, 1)
        assert len(m.alive_tet_ids()) == 4
        assert m.nv == 6
        assert np.allclose(m.vertices[5], [0.5, 0, 0])
        assert validate_mesh(m) == []

    def test_volume_preserved(self):
        m = two_tet_mesh()
        v0 = m.total_volume()
        imp.edge_split(m, 0, 1)
        assert abs(m.total_volume() - v0) < 1e-15

    def test_tracked_tag_migrates_to_children(self):
        m = two_tet_mesh()
        m.tag_face(face_key(0, 1, 2), 0, (0, 1, 2))
        m.on_tracked[[0, 1, 2]] = True
        assert imp.edge_split(m, 0, 1)
        mid = 5
        assert face_key(0, mid, 2) in m.tracked
        assert face_key(mid, 1, 2) in m.tracked
        assert face_key(0, 1, 2) not in m.tracked
        assert m.on_tracked[mid]
        assert validate_mesh(m) == []

    def test_missing_edge(self):
        m = two_tet_mesh()
        assert not imp.edge_split(m, 3, 4)


class TestEdgeCollapse:
    def test_collapse_after_split(self, dummy_env):
        m = two_tet_mesh()
        imp.edge_split(m, 0, 1)
        assert imp.edge_collapse(m, 5, 0, dummy_env) \
            or imp.edge_collapse(m, 0, 5, dummy_env)
        assert validate_mesh(m) == []
        assert len(m.alive_tet_ids()) == 2

    def test_energy_guard(self, dummy_env):
        # a committed collapse may not raise the max energy of the region
        m = two_tet_mesh()
        imp.edge_split(m, 0, 1)
        e0 = max(amips_energy(m.tet_points(t)) for t in m.alive_tet_ids())
        changed = imp.edge_collapse(m, 5, 2, dummy_env) \
            or imp.edge_collapse(m, 2, 5, dummy_env)
        alive = m.alive_tet_ids()
        if changed and len(alive):
            e1 = max(amips_energy(m.tet_points(t)) for t in alive)
            assert e1 <= e0 + 1e-12
        assert validate_mesh(m) == []


class TestEdgeSwap:
    def test_three_to_two(self):
        # a tall central edge: the two-tet configuration wins
        m = ring3_mesh(half_height=1.2)
        assert imp.edge_swap(m, 0, 1)
        assert len(m.alive_tet_ids()) == 2
        assert validate_mesh(m) == []

    def test_volume_preserved(self):
        m = ring3_mesh(half_height=1.2)
        v0 = m.total_volume()
        imp.edge_swap(m, 0, 1)
        assert abs(m.total_volume() - v0) < 1e-12

    def test_rejects_when_not_improving(self):
        # a short central edge makes the fan tets better than the alternative
        m = ring3_mesh(half_height=0.1)
        e0 = max(amips_energy(m.tet_points(t)) for t in m.alive_tet_ids())
        if imp.edge_swap(m, 0, 1):
            e1 = max(amips_energy(m.tet_points(t)) for t in m.alive_tet_ids())
            assert e1 < e0
        assert validate_mesh(m) == []

    def test_tracked_edge_untouched(self):
        m = ring3_mesh(half_height=1.2)
        key = face_key(0, 1, 2)
        m.tag_face(key, 0, (0, 1, 2))
        assert not imp.edge_swap(m, 0, 1)
        assert key in m.tracked


class TestFaceSwap:
    def flat_pair(self, apex=0.15):
        verts = np.array([
            [1.0, 0.0, 0.0],
            [-0.5, np.sqrt(3) / 2, 0.0],
            [-0.5, -np.sqrt(3) / 2, 0.0],
            [0.0, 0.0, apex],
            [0.0, 0.0, -apex],
        ])
        return TetMesh(verts, [[0, 1, 2, 3], [0, 2, 1, 4]])

    def test_two_to_three(self):
        m = self.flat_pair()
        assert imp.face_swap(m, face_key(0, 1, 2))
        assert len(m.alive_tet_ids()) == 3
        assert validate_mesh(m) == []

    def test_volume_preserved(self):
        m = self.flat_pair()
        v0 = m.total_volume()
        imp.face_swap(m, face_key(0, 1, 2))
        assert abs(m.total_volume() - v0) < 1e-14

    def test_rejects_non_piercing_apices(self):
        # second apex shifted sideways: the apex edge misses the face
        m = self.flat_pair()
        m.move_vertex(4, [2.0, 0.0, -0.15])
        assert not imp.face_swap(m, face_key(0, 1, 2))

    def test_tracked_face_untouched(self):
        m = self.flat_pair()
        m.tag_face(face_key(0, 1, 2), 0, (0, 1, 2))
        assert not imp.face_swap(m, face_key(0, 1, 2))

    def test_boundary_face_rejected(self):
        m = self.flat_pair()
        assert not imp.face_swap(m, face_key(0, 1, 3))


class TestRewriteAudit:
    def test_duplicate_new_quads_rejected(self):
        m = two_tet_mesh()
        assert not imp._rewrite_is_clean(m, [[0, 1, 2, 3], [0, 1, 2, 3]], set())

    def test_duplicate_of_survivor_rejected(self):
        m = two_tet_mesh()
        assert not imp._rewrite_is_clean(m, [[0, 1, 2, 3]], set())

    def test_face_overuse_rejected(self):
        m = two_tet_mesh()
        v = m.add_vertex([0.3, 0.3, 0.3])
        # face (0,1,2) already carries two tets
        assert not imp._rewrite_is_clean(m, [[0, 1, 2, v]], set())

    def test_clean_rewrite_accepted(self):
        m = two_tet_mesh()
        assert imp._rewrite_is_clean(m, [[0, 1, 2, 3]], {0})


class TestVertexSmooth:
    def test_reduces_star_energy(self, dummy_env):
        m = ring3_mesh(half_height=0.4)
        v = 0
        m.move_vertex(v, [0.15, 0.1, 0.35])
        before = star_energy(m, v)
        assert imp.vertex_smooth(m, v, dummy_env)
        assert star_energy(m, v) < before
        assert validate_mesh(m) == []

    def test_no_incident_tets(self, dummy_env):
        m = two_tet_mesh()
        v = m.add_vertex([5.0, 5, 5])
        assert not imp.vertex_smooth(m, v, dummy_env)


class TestScheduling:
    def test_color_classes_independent(self):
        m = generate_background_mesh(cube(), 1e-3, spacing=0.5)
        for cls in imp.color_vertices(m):
            for i in range(len(cls)):
                for j in range(i + 1, len(cls)):
                    assert not (m.v2t[cls[i]] & m.v2t[cls[j]])

    def test_improvement_pass_reaches_stop_energy(self):
        soup = cube()
        env = build_envelope(soup, 1e-3)
        m = generate_background_mesh(soup, 1e-3, spacing=0.5)
        # push a vertex to create bad tets, then ask for repair
        ids = m.alive_tet_ids()
        inner = [v for v in range(m.nv) if not m.on_bbox[v]]
        v = inner[len(inner) // 2]
        base = m.vertices[v].copy()
        tets = sorted(t for t in m.v2t[v] if m._alive[t])
        others = {int(q) for t in tets for q in m._tets[t]} - {v}
        near = min(others, key=lambda q: np.linalg.norm(m.vertices[q] - base))
        m.move_vertex(v, 0.98 * m.vertices[near] + 0.02 * base)
        cfg = imp.ImprovementConfig(stop_energy=10.0, max_iterations=25,
                                    target_edge_length=0.5)
        rep = imp.improvement_pass(m, cfg, env)
        assert rep["max_energy"] < 10.0
        assert validate_mesh(m) == []

    def test_config_validation(self):
        with pytest.raises(ValueError):
            imp.ImprovementConfig(stop_energy=2.0)
        with pytest.raises(ValueError):
            imp.ImprovementConfig(max_iterations=0)
