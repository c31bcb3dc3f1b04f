"""Distortion-energy checks: float path, rational fallback, gradient."""

import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from envtet import energy as en

REGULAR = np.array([
    [0.0, 0.0, 0.0],
    [1.0, 0.0, 0.0],
    [0.5, math.sqrt(3) / 2, 0.0],
    [0.5, math.sqrt(3) / 6, math.sqrt(6) / 3],
])

# near-degenerate tet far from the origin: the float energy expression
# cancels catastrophically here, which is what the rational path repairs
SLIVER = np.array([
    [22.8289586180569, 31.46598870690956, 2.000000016196326],
    [22.83955896584259, 31.46598870610162, 2.000000016081439],
    [22.85206254968259, 31.46598870514861, 2.000000015945925],
    [22.83955896584259, 30.48801551784109, 2.616041190648805],
])


def fraction_energy_cubed(verts):
    """Oracle: cubed energy over Python fractions, difference form avoided
    (edge lengths and determinant computed independently)."""
    q = [[Fraction(x) for x in v] for v in verts]
    tr = Fraction(0)
    for i, j in itertools.combinations(range(4), 2):
        tr += sum((q[i][k] - q[j][k]) ** 2 for k in range(3))
    tr /= 2
    d = [[q[j + 1][k] - q[0][k] for k in range(3)] for j in range(3)]
    det = (d[0][0] * (d[1][1] * d[2][2] - d[1][2] * d[2][1])
           - d[0][1] * (d[1][0] * d[2][2] - d[1][2] * d[2][0])
           + d[0][2] * (d[1][0] * d[2][1] - d[1][1] * d[2][0]))
    if det == 0:
        return None
    return tr ** 3 / (2 * det * det)


class TestFloatPath:
    def test_regular_tet_is_three(self):
        assert abs(en.amips_float_batch(REGULAR) - 3.0) < 1e-12

    def test_translation_invariant(self):
        e0 = en.amips_float_batch(REGULAR)
        e1 = en.amips_float_batch(REGULAR + np.array([3.0, -2.0, 7.0]))
        assert abs(e0 - e1) < 1e-9

    def test_scale_invariant(self):
        e0 = en.amips_float_batch(REGULAR)
        e1 = en.amips_float_batch(2.5 * REGULAR)
        assert abs(e0 - e1) < 1e-9

    def test_inverted_is_inf(self):
        flipped = REGULAR[[0, 2, 1, 3]]
        assert en.amips_float_batch(flipped) == np.inf

    def test_exactly_degenerate_is_inf(self):
        flat = REGULAR.copy()
        flat[3, 2] = 0.0
        assert en.amips_float_batch(flat) == np.inf

    def test_batch_matches_scalar(self):
        rng = np.random.default_rng(3)
        tets = REGULAR[None] + 0.2 * rng.standard_normal((50, 4, 3))
        batch = en.amips_float_batch(tets)
        for i in range(50):
            assert batch[i] == en.amips_float_batch(tets[i])


class TestRationalPath:
    def test_matches_fraction_oracle_on_sliver(self):
        got = en.amips_rational_cubed(SLIVER)
        want = fraction_energy_cubed(SLIVER)
        assert got == want  # both exact rationals

    def test_permutation_invariant_exactly(self):
        ref = en.amips_rational_cubed(SLIVER)
        for perm in itertools.permutations(range(4)):
            assert en.amips_rational_cubed(SLIVER[list(perm)]) == ref

    def test_float_path_unstable_on_sliver(self):
        vals = [en.amips_float_batch(SLIVER[list(p)])
                for p in itertools.permutations(range(4))]
        finite = [v for v in vals if np.isfinite(v)]
        assert max(finite) / min(finite) >= 10.0

    def test_degenerate_returns_none(self):
        flat = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0], [0.5, 0.5, 0.0]])
        assert en.amips_rational_cubed(flat) is None
        assert en.amips_rational(flat) == np.inf

    @given(st.lists(st.floats(-5, 5), min_size=12, max_size=12))
    @settings(max_examples=100, deadline=None)
    def test_rational_agrees_with_oracle(self, flat):
        verts = np.array(flat).reshape(4, 3)
        got = en.amips_rational_cubed(verts)
        want = fraction_energy_cubed(verts)
        if want is None:
            assert got is None
        else:
            assert got == want


class TestDispatch:
    def test_well_conditioned_uses_float(self):
        assert en.amips_energy(REGULAR) == en.amips_float_batch(REGULAR)

    def test_sliver_dispatches_to_rational(self):
        want = float(fraction_energy_cubed(SLIVER)) ** (1.0 / 3.0)
        got = en.amips_energy(SLIVER)
        assert abs(got - want) <= 1e-12 * want

    def test_sliver_energy_permutation_stable(self):
        vals = {en.amips_energy(SLIVER[list(p)])
                for p in itertools.permutations(range(4))}
        assert len(vals) == 1

    def test_cleanly_inverted_stays_inf(self):
        flipped = REGULAR[[0, 2, 1, 3]]
        assert en.amips_energy(flipped) == np.inf

    def test_batch_repair(self):
        tets = np.stack([REGULAR, SLIVER])
        e = en.amips_energies(tets)
        assert abs(e[0] - 3.0) < 1e-12
        want = float(fraction_energy_cubed(SLIVER)) ** (1.0 / 3.0)
        assert abs(e[1] - want) <= 1e-12 * want


class TestGradient:
    def finite_difference(self, verts, h=1e-6):
        g = np.zeros((4, 3))
        for i in range(4):
            for k in range(3):
                vp = verts.copy()
                vm = verts.copy()
                vp[i, k] += h
                vm[i, k] -= h
                g[i, k] = (en.amips_float_batch(vp)
                           - en.amips_float_batch(vm)) / (2 * h)
        return g

    def test_zero_at_regular_tet(self):
        g = en.amips_gradient(REGULAR)
        assert np.abs(g).max() < 1e-9

    def test_matches_central_differences(self):
        rng = np.random.default_rng(11)
        for _ in range(100):
            verts = REGULAR + 0.25 * rng.standard_normal((4, 3))
            if en.amips_float_batch(verts) == np.inf:
                continue
            g = en.amips_gradient(verts)
            fd = self.finite_difference(verts)
            scale = max(1.0, np.abs(fd).max())
            assert np.abs(g - fd).max() <= 1e-5 * scale

    def test_columns_balance(self):
        rng = np.random.default_rng(5)
        verts = REGULAR + 0.1 * rng.standard_normal((4, 3))
        g = en.amips_gradient(verts)
        assert np.abs(g.sum(axis=0)).max() < 1e-10

    def test_inverted_raises(self):
        with pytest.raises(ValueError):
            en.amips_gradient(REGULAR[[0, 2, 1, 3]])
