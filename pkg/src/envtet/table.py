"""Tet-subdivision table.

A tetrahedron being cut by a plane (after vertex snapping) has some subset of
its 6 edges carrying cut points. The 6-bit mask over the fixed edge numbering
e0=(0,1) e1=(0,2) e2=(0,3) e3=(1,2) e4=(1,3) e5=(2,3) is the primary index;
41 masks are realizable, the other 23 (all six, any five, twelve 4-masks and
the four face-triples) cannot arise. For each realizable mask the table holds
every decomposition of the tet into sub-tets whose vertices are the 4 corners
plus the cut points, one decomposition per combination of quad-diagonal
choices on the faces with two cut points (plus interior variants). The
secondary selection picks the diagonal running to the face vertex with the
larger global label, which is automatically consistent across face-adjacent
tets and can never demand the excluded interior-Steiner-vertex cases (a
cyclic label inequality would be required).

The table is generated at import by exhaustive advancing-front search with
exact rational geometry on sample cut-point placements, and is certified by
verify_table.
"""

import itertools
from dataclasses import dataclass
from fractions import Fraction

EDGES = ((0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3))
FACES = ((0, 1, 2), (0, 1, 3), (0, 2, 3), (1, 2, 3))
_FACE_EDGES = tuple(
    tuple(e for e, (a, b) in enumerate(EDGES) if a in f and b in f)
    for f in FACES)

_CORNERS = ((Fraction(0), Fraction(0), Fraction(0)),
            (Fraction(1), Fraction(0), Fraction(0)),
            (Fraction(0), Fraction(1), Fraction(0)),
            (Fraction(0), Fraction(0), Fraction(1)))

# generic rational cut-point parameters used to certify candidate sub-tets
_SAMPLE_PARAMS = [
    {e: Fraction(97 + 13 * e, 211) for e in range(6)},
    {e: Fraction(11 + 7 * e, 101) for e in range(6)},
    {e: Fraction(233 - 17 * e, 257) for e in range(6)},
    {e: Fraction(5 + 29 * e, 331) for e in range(6)},
    {e: Fraction(89 + 13 * e, 223) for e in range(6)},
    {e: Fraction(19 + 23 * e, 401) for e in range(6)},
]


def cut_point_id(edge_index):
    return 4 + edge_index


def is_realizable(mask):
    """A mask is realizable iff no face has all three of its edges cut."""
    if not 0 <= mask <= 63:
        raise ValueError("mask out of range")
    for fe in _FACE_EDGES:
        if all(mask >> e & 1 for e in fe):
            return False
    return True


def placement_points(mask, params):
    """Point id -> rational coordinates for a cut-point placement."""
    pts = {i: _CORNERS[i] for i in range(4)}
    for e in range(6):
        if mask >> e & 1:
            a, b = EDGES[e]
            t = params[e]
            pts[cut_point_id(e)] = tuple(
                (1 - t) * _CORNERS[a][k] + t * _CORNERS[b][k] for k in range(3))
    return pts


def _vol6(p0, p1, p2, p3):
    u = tuple(p1[k] - p0[k] for k in range(3))
    v = tuple(p2[k] - p0[k] for k in range(3))
    w = tuple(p3[k] - p0[k] for k in range(3))
    return (u[0] * (v[1] * w[2] - v[2] * w[1])
            - u[1] * (v[0] * w[2] - v[2] * w[0])
            + u[2] * (v[0] * w[1] - v[1] * w[0]))


@dataclass(frozen=True)
class Decomposition:
    """sub_tets: positively oriented point-id quadruples.
    face_triangulations: face index -> chosen diagonal (pair of point ids)
    for each face with two cut points."""
    sub_tets: tuple
    face_triangulations: tuple  # tuple of (face_index, (pid, pid))

    def diagonals(self):
        return dict(self.face_triangulations)


@dataclass
class SubdivisionTable:
    decompositions: dict  # mask -> list of Decomposition
    impossible: tuple

    def realizable_masks(self):
        return sorted(self.decompositions.keys())


def _face_point_sets(mask):
    """face index -> set of point ids lying on that parent face."""
    out = []
    for fi, f in enumerate(FACES):
        s = set(f)
        for e in _FACE_EDGES[fi]:
            if mask >> e & 1:
                s.add(cut_point_id(e))
        out.append(s)
    return out


def _face_boundary_triangulations(mask):
    """Per face: list of alternative triangulations.

    Each alternative is (diagonal or None, list of triangles). Faces with two
    cut points have two alternatives (the two quad diagonals)."""
    per_face = []
    for fi, f in enumerate(FACES):
        cut = [e for e in _FACE_EDGES[fi] if mask >> e & 1]
        if not cut:
            per_face.append([(None, [tuple(f)])])
        elif len(cut) == 1:
            e = cut[0]
            x, y = EDGES[e]
            z = next(v for v in f if v not in (x, y))
            m = cut_point_id(e)
            per_face.append([(None, [(x, m, z), (m, y, z)])])
        else:
            e1, e2 = cut
            shared = set(EDGES[e1]) & set(EDGES[e2])
            a = shared.pop()
            b = next(v for v in EDGES[e1] if v != a)
            c = next(v for v in EDGES[e2] if v != a)
            m_ab, m_ac = cut_point_id(e1), cut_point_id(e2)
            alts = []
            # diagonal (b, m_ac): triangles of quad (m_ab, b, c, m_ac)
            alts.append(((b, m_ac),
                         [(a, m_ab, m_ac), (m_ab, b, m_ac), (b, c, m_ac)]))
            # diagonal (c, m_ab)
            alts.append(((c, m_ab),
                         [(a, m_ab, m_ac), (m_ab, c, m_ac), (m_ab, b, c)]))
            per_face.append(alts)
    return per_face


def _admissible_tets(mask):
    """All point-id quadruples that are positively orientable with nonzero
    volume at every sample placement and contain no other point inside or on
    their boundary (which would force a hanging node)."""
    pids = sorted(placement_points(mask, _SAMPLE_PARAMS[0]).keys())
    placements = [placement_points(mask, p) for p in _SAMPLE_PARAMS]
    result = []
    for combo in itertools.combinations(pids, 4):
        vols = [_vol6(*(pl[i] for i in combo)) for pl in placements]
        if any(v == 0 for v in vols):
            continue
        if not (all(v > 0 for v in vols) or all(v < 0 for v in vols)):
            continue
        tet = combo if vols[0] > 0 else (combo[0], combo[1], combo[3], combo[2])
        # hanging-node exclusion
        ok = True
        for pl in placements:
            pts = [pl[i] for i in tet]
            for q in pids:
                if q in tet:
                    continue
                signs = []
                for skip in range(4):
                    face = [pts[j] for j in range(4) if j != skip]
                    v = _vol6(face[0], face[1], face[2], pl[q])
                    if skip % 2 == 1:
                        v = -v
                    signs.append(v)
                if all(s <= 0 for s in signs):
                    ok = False
                    break
            if not ok:
                break
        if ok:
            result.append(tet)
    return result


def _search_decompositions(mask):
    """All valid decompositions for a realizable mask."""
    if mask == 0:
        return [Decomposition(((0, 1, 2, 3),), ())]
    placements = [placement_points(mask, p) for p in _SAMPLE_PARAMS]
    pl0 = placements[0]
    candidates = _admissible_tets(mask)
    by_face = {}
    for tet in candidates:
        for skip in range(4):
            fkey = frozenset(tet[j] for j in range(4) if j != skip)
            by_face.setdefault(fkey, []).append(tet)
    per_face = _face_boundary_triangulations(mask)
    target_vol = _vol6(*(pl0[i] for i in range(4)))
    centroid = tuple(sum(_CORNERS[i][k] for i in range(4)) / 4 for k in range(3))
    results = []
    seen = set()

    for face_choice in itertools.product(*per_face):
        diagonals = tuple((fi, fc[0]) for fi, fc in enumerate(face_choice)
                          if fc[0] is not None)
        # open facets: sorted key -> orientation triple such that the missing
        # tet vertex must be on the Positive side
        open_facets = {}
        bad = False
        for fi, (_diag, tris) in enumerate(face_choice):
            for tri in tris:
                p, q, r = tri
                if _vol6(pl0[p], pl0[q], pl0[r], centroid) < 0:
                    tri = (p, r, q)
                key = frozenset(tri)
                if key in open_facets:
                    bad = True
                open_facets[key] = tri
        if bad:
            continue

        def backtrack(open_facets, chosen, vol_so_far):
            if not open_facets:
                if vol_so_far == target_vol:
                    dec = tuple(sorted(chosen))
                    if (dec, diagonals) not in seen:
                        seen.add((dec, diagonals))
                        results.append(Decomposition(dec, diagonals))
                return
            key = min(open_facets, key=lambda k: tuple(sorted(k)))
            p, q, r = open_facets[key]
            for tet in by_face.get(key, []):
                s = next(x for x in tet if x not in key)
                if _vol6(pl0[p], pl0[q], pl0[r], pl0[s]) <= 0:
                    continue
                if tet in chosen:
                    continue
                new_open = dict(open_facets)
                del new_open[key]
                ok = True
                for skip in range(4):
                    fk = frozenset(tet[j] for j in range(4) if j != skip)
                    if fk == key:
                        continue
                    tri = tuple(tet[j] for j in range(4) if j != skip)
                    # orientation of this facet looking from the remaining
                    # vertex: the neighbor tet must see it from the other side
                    miss = tet[skip]
                    a2, b2, c2 = tri
                    if _vol6(pl0[a2], pl0[b2], pl0[c2], pl0[miss]) < 0:
                        tri = (a2, c2, b2)
                    # neighbor side orientation
                    need = (tri[0], tri[2], tri[1])
                    if fk in new_open:
                        # must cancel: existing need must equal our own side
                        if frozenset(new_open[fk]) != fk:
                            ok = False
                            break
                        ex = new_open[fk]
                        if _vol6(pl0[ex[0]], pl0[ex[1]], pl0[ex[2]], pl0[miss]) <= 0:
                            ok = False
                            break
                        del new_open[fk]
                    else:
                        on_parent = any(fk <= fs for fs in _face_point_sets(mask))
                        if on_parent:
                            ok = False
                            break
                        new_open[fk] = need
                if not ok:
                    continue
                vol = _vol6(*(pl0[i] for i in tet))
                backtrack(new_open, chosen + [tet], vol_so_far + vol)

        backtrack(open_facets, [], Fraction(0))
    return results


_TABLE = None


def build_table():
    global _TABLE
    if _TABLE is not None:
        return _TABLE
    decomps = {}
    impossible = []
    for mask in range(64):
        if not is_realizable(mask):
            impossible.append(mask)
            continue
        sols = _search_decompositions(mask)
        if not sols:
            raise RuntimeError(f"no decomposition found for realizable mask {mask}")
        decomps[mask] = sols
    _TABLE = SubdivisionTable(decomps, tuple(impossible))
    return _TABLE


def choose_secondary(table, mask, global_labels):
    """Pick the decomposition selected by the larger-label diagonal rule.

    global_labels are the 4 pairwise distinct global vertex ids of the tet in
    local order. For each face with two cut points the quad diagonal runs to
    the face vertex with the larger label; among decompositions matching all
    face diagonals the lexicographically smallest is returned (interior
    diagonal freedom, e.g. in the 4-cut ring, is not visible to neighbors)."""
    if mask not in table.decompositions:
        raise ValueError(f"mask {mask} is not realizable")
    if len(set(global_labels)) != 4:
        raise ValueError("labels must be pairwise distinct")
    wanted = {}
    for fi in range(4):
        cut = [e for e in _FACE_EDGES[fi] if mask >> e & 1]
        if len(cut) != 2:
            continue
        e1, e2 = cut
        shared = (set(EDGES[e1]) & set(EDGES[e2])).pop()
        b = next(v for v in EDGES[e1] if v != shared)
        c = next(v for v in EDGES[e2] if v != shared)
        if global_labels[b] > global_labels[c]:
            wanted[fi] = (b, cut_point_id(e2))
        else:
            wanted[fi] = (c, cut_point_id(e1))
    best = None
    for dec in table.decompositions[mask]:
        diag = dec.diagonals()
        if all(diag.get(fi) == w for fi, w in wanted.items()):
            if best is None or dec.sub_tets < best.sub_tets:
                best = dec
    if best is None:
        raise RuntimeError(
            f"no decomposition for mask {mask} under labels {global_labels}")
    return best


def verify_table(table, n_placements=100, seed=7):
    """Certify the table; empty list iff everything checks out."""
    import random
    rng = random.Random(seed)
    violations = []
    for mask, decs in sorted(table.decompositions.items()):
        cut_ids = {cut_point_id(e) for e in range(6) if mask >> e & 1}
        placements = []
        for _ in range(n_placements):
            params = {e: Fraction(rng.randint(1, 999), 1000) for e in range(6)}
            placements.append(placement_points(mask, params))
        for di, dec in enumerate(decs):
            used = {v for tet in dec.sub_tets for v in tet}
            if not cut_ids <= used:
                violations.append(("unused_cut_point", mask, di))
            # facet conformity: interior facets shared by exactly 2 sub-tets,
            # boundary facets lie on a parent face
            fcount = {}
            for tet in dec.sub_tets:
                for skip in range(4):
                    fk = frozenset(tet[j] for j in range(4) if j != skip)
                    fcount[fk] = fcount.get(fk, 0) + 1
            fsets = _face_point_sets(mask)
            for fk, c in fcount.items():
                on_parent = any(fk <= fs for fs in fsets)
                if c == 1 and not on_parent:
                    violations.append(("open_interior_facet", mask, di, tuple(fk)))
                if c > 2 or (c == 2 and on_parent):
                    violations.append(("facet_overuse", mask, di, tuple(fk)))
            if used - {0, 1, 2, 3} - cut_ids:
                violations.append(("steiner_vertex", mask, di))
            for pl in placements:
                total = Fraction(0)
                okvol = True
                for tet in dec.sub_tets:
                    v = _vol6(*(pl[i] for i in tet))
                    if v <= 0:
                        violations.append(("nonpositive_volume", mask, di, tet))
                        okvol = False
                        break
                    total += v
                if okvol and total != _vol6(*(pl[i] for i in range(4))):
                    violations.append(("volume_sum", mask, di))
                if not okvol:
                    break
    return violations


def symmetry_classes(masks=None):
    """Partition realizable masks into orbits under the 24 vertex
    permutations acting on the edge bits."""
    if masks is None:
        masks = [m for m in range(64) if is_realizable(m)]
    edge_index = {frozenset(e): i for i, e in enumerate(EDGES)}
    orbits = []
    seen = set()
    for m in masks:
        if m in seen:
            continue
        orbit = set()
        for perm in itertools.permutations(range(4)):
            img = 0
            for e in range(6):
                if m >> e & 1:
                    a, b = EDGES[e]
                    img |= 1 << edge_index[frozenset((perm[a], perm[b]))]
            orbit.add(img)
        orbit &= set(masks)
        seen |= orbit
        orbits.append(sorted(orbit))
    return orbits
