"""Census, certification, and selection-rule tests for the subdivision
table."""

import itertools
from fractions import Fraction
from math import comb

import pytest

from envtet import table as tab


@pytest.fixture(scope="module")
def table():
    return tab.build_table()


class TestRealizability:
    def test_counts(self):
        real = [m for m in range(64) if tab.is_realizable(m)]
        assert len(real) == 41
        assert 64 - len(real) == 23

    def test_impossible_partition(self):
        impossible = [m for m in range(64) if not tab.is_realizable(m)]
        by_popcount = {}
        for m in impossible:
            by_popcount.setdefault(bin(m).count("1"), []).append(m)
        assert len(by_popcount[6]) == comb(6, 6)
        assert len(by_popcount[5]) == comb(6, 5)
        assert len(by_popcount[4]) == 12
        assert len(by_popcount[3]) == 4
        # the four 3-masks are exactly the face triples
        face_masks = set()
        for fe in tab._FACE_EDGES:
            face_masks.add(sum(1 << e for e in fe))
        assert set(by_popcount[3]) == face_masks

    def test_oracle_no_face_fully_cut(self):
        for m in range(64):
            fully_cut = any(all(m >> e & 1 for e in fe)
                            for fe in tab._FACE_EDGES)
            assert tab.is_realizable(m) == (not fully_cut)

    def test_out_of_range(self):
        with pytest.raises(ValueError):
            tab.is_realizable(64)


class TestSymmetry:
    def test_seven_classes(self):
        assert len(tab.symmetry_classes()) == 7

    def test_orbits_partition(self):
        real = {m for m in range(64) if tab.is_realizable(m)}
        orbits = tab.symmetry_classes()
        flat = [m for orbit in orbits for m in orbit]
        assert sorted(flat) == sorted(real)
        assert len(flat) == len(set(flat))


class TestTableStructure:
    def test_all_realizable_present(self, table):
        assert table.realizable_masks() == \
            [m for m in range(64) if tab.is_realizable(m)]
        assert sorted(table.impossible) == \
            [m for m in range(64) if not tab.is_realizable(m)]

    def test_uncut_mask_is_identity(self, table):
        decs = table.decompositions[0]
        assert len(decs) == 1
        assert decs[0].sub_tets == ((0, 1, 2, 3),)

    def test_single_cut_splits_in_two(self, table):
        for e in range(6):
            for dec in table.decompositions[1 << e]:
                assert len(dec.sub_tets) == 2

    def test_verifier_clean(self, table):
        assert tab.verify_table(table, n_placements=20, seed=3) == []


class TestChooseSecondary:
    def test_every_mask_and_label_order(self, table):
        for mask in table.realizable_masks():
            for labels in itertools.permutations((10, 20, 30, 40)):
                dec = tab.choose_secondary(table, mask, labels)
                assert dec in table.decompositions[mask]

    def test_diagonal_follows_larger_label(self, table):
        # mask cutting edges (0,1) and (0,2): face (0,1,2) gets a quad whose
        # diagonal must run to the larger of labels[1], labels[2]
        mask = 0b000011
        dec_b = tab.choose_secondary(table, mask, (1, 9, 2, 3))
        dec_c = tab.choose_secondary(table, mask, (1, 2, 9, 3))
        assert dec_b.diagonals()[0][0] == 1
        assert dec_c.diagonals()[0][0] == 2

    def test_label_scale_invariant(self, table):
        for mask in (0b000011, 0b011000, 0b110100):
            if mask not in table.decompositions:
                continue
            a = tab.choose_secondary(table, mask, (1, 2, 3, 4))
            b = tab.choose_secondary(table, mask, (100, 200, 300, 400))
            assert a == b

    def test_duplicate_labels_rejected(self, table):
        with pytest.raises(ValueError):
            tab.choose_secondary(table, 1, (1, 1, 2, 3))

    def test_unrealizable_mask_rejected(self, table):
        with pytest.raises(ValueError):
            tab.choose_secondary(table, 63, (1, 2, 3, 4))

    def test_shared_face_consistency(self, table):
        # two tets sharing a face and agreeing on its cut edges must split
        # the shared quad identically when fed the same global labels
        rng_labels = [(7, 3, 9, 1), (2, 8, 4, 6), (11, 5, 13, 12)]
        for mask in table.realizable_masks():
            for fi, fe in enumerate(tab._FACE_EDGES):
                cut = [e for e in fe if mask >> e & 1]
                if len(cut) != 2:
                    continue
                for labels in rng_labels:
                    dec = tab.choose_secondary(table, mask, labels)
                    fi_diag = dec.diagonals().get(fi)
                    assert fi_diag is not None
                    e1, e2 = cut
                    shared = (set(tab.EDGES[e1]) & set(tab.EDGES[e2])).pop()
                    b = next(v for v in tab.EDGES[e1] if v != shared)
                    c = next(v for v in tab.EDGES[e2] if v != shared)
                    big = b if labels[b] > labels[c] else c
                    assert big in fi_diag


class TestVolumes:
    def test_random_placements_fill_parent(self, table):
        import random
        rng = random.Random(123)
        for mask in table.realizable_masks():
            params = {e: Fraction(rng.randint(1, 99), 100) for e in range(6)}
            pts = tab.placement_points(mask, params)
            parent = tab._vol6(*(pts[i] for i in range(4)))
            for dec in table.decompositions[mask]:
                total = Fraction(0)
                for t in dec.sub_tets:
                    v = tab._vol6(*(pts[i] for i in t))
                    assert v > 0
                    total += v
                assert total == parent

    def test_cut_point_ids(self):
        assert [tab.cut_point_id(e) for e in range(6)] == [4, 5, 6, 7, 8, 9]
