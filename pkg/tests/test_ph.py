import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.sparse.csgraph import minimum_spanning_tree

from oracles import brute_betti, circle_distances, naive_persistence, random_symmetric, rips_simplices
from textopo.ph import (
    PersistenceDiagram,
    Simplex,
    ValidationError,
    betti_at_scale,
    build_filtration,
    rips_persistence,
    validate_distance_matrix,
)

R2 = math.sqrt(2)
SQUARE = np.array([
    [0, 1, R2, 1],
    [1, 0, 1, R2],
    [R2, 1, 0, 1],
    [1, R2, 1, 0],
])


def bars(arr):
    return sorted(map(tuple, np.asarray(arr).tolist()))


def assert_same_bars(got, expected, tol=1e-9):
    got, expected = bars(got), sorted(expected)
    assert len(got) == len(expected), (got, expected)
    for g, e in zip(got, expected):
        for x, y in zip(g, e):
            if math.isinf(y):
                assert math.isinf(x)
            else:
                assert abs(x - y) < tol


@st.composite
def distance_matrices(draw, min_n=1, max_n=7, ties=False):
    n = draw(st.integers(min_n, max_n))
    if ties:
        vals = st.sampled_from([0.5, 1.0, 1.5, 2.0])
    else:
        vals = st.floats(0.0, 10.0, allow_nan=False, allow_infinity=False)
    upper = draw(st.lists(vals, min_size=n * (n - 1) // 2, max_size=n * (n - 1) // 2))
    d = np.zeros((n, n))
    d[np.triu_indices(n, 1)] = upper
    return d + d.T


class TestValidation:
    def test_asymmetric_names_indices(self):
        d = SQUARE.copy()
        d[0, 2] = 3.0
        with pytest.raises(ValidationError) as info:
            rips_persistence(d)
        assert info.value.index == (0, 2)
        assert "(0, 2)" in str(info.value)

    def test_negative_entry(self):
        d = np.array([[0.0, -1.0], [-1.0, 0.0]])
        with pytest.raises(ValidationError, match=r"\(0, 1\)"):
            build_filtration(d)

    def test_nonzero_diagonal(self):
        with pytest.raises(ValidationError, match=r"\(1, 1\)"):
            validate_distance_matrix([[0.0, 1.0], [1.0, 0.5]])

    def test_not_square(self):
        with pytest.raises(ValidationError):
            validate_distance_matrix(np.zeros((2, 3)))

    def test_nan(self):
        with pytest.raises(ValidationError):
            validate_distance_matrix([[0.0, math.nan], [math.nan, 0.0]])

    def test_max_dim(self):
        with pytest.raises(ValueError):
            build_filtration(SQUARE, max_dim=2)


class TestBuildFiltration:
    def test_two_points(self):
        assert build_filtration([[0, 1], [1, 0]]) == [
            Simplex((0,), 0.0), Simplex((1,), 0.0), Simplex((0, 1), 1.0)]

    def test_one_point(self):
        assert build_filtration([[0]]) == [Simplex((0,), 0.0)]

    def test_unit_square_matches_enumeration(self):
        got = build_filtration(SQUARE)
        assert [(s.vertices, s.diameter) for s in got] == rips_simplices(SQUARE)
        dims = [s.dim for s in got]
        assert dims == [0] * 4 + [1] * 4 + [1] * 2 + [2] * 4
        assert [s.diameter for s in got[4:8]] == [1.0] * 4
        assert all(s.diameter == R2 for s in got[8:])

    def test_max_dim_zero_stops_at_edges(self):
        got = build_filtration(SQUARE, max_dim=0)
        assert max(s.dim for s in got) == 1
        assert len(got) == 4 + 6

    def test_faces_precede_cofaces(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            d = random_symmetric(rng, 6, integer=True)
            seen = set()
            for s in build_filtration(d):
                if s.dim > 0:
                    for v in s.vertices:
                        assert tuple(u for u in s.vertices if u != v) in seen
                seen.add(s.vertices)


class TestRipsPersistence:
    def test_two_points(self):
        pd = rips_persistence([[0, 1], [1, 0]])
        assert_same_bars(pd.dim0, [(0.0, 1.0), (0.0, math.inf)])
        assert len(pd.dim1) == 0

    def test_one_point(self):
        pd = rips_persistence([[0.0]])
        assert_same_bars(pd.dim0, [(0.0, math.inf)])
        assert len(pd.dim1) == 0

    def test_empty_rejected(self):
        with pytest.raises(ValidationError):
            rips_persistence(np.zeros((0, 0)))

    def test_unit_square_loop(self):
        # frozen from oracles.naive_persistence(SQUARE)
        pd = rips_persistence(SQUARE)
        assert_same_bars(pd.dim1, [(1.0, R2)], tol=1e-12)
        assert naive_persistence(SQUARE)[1] == [(1.0, R2)]

    def test_hexagon_loop(self):
        pd = rips_persistence(circle_distances(6))
        assert_same_bars(pd.dim1, [(1.0, math.sqrt(3))])

    def test_all_equal_distances_have_no_loops(self):
        d = np.ones((10, 10)) - np.eye(10)
        pd = rips_persistence(d)
        assert len(pd.dim1) == 0
        assert naive_persistence(d)[1] == []

    def test_identical_points(self):
        pd = rips_persistence(np.zeros((4, 4)))
        assert_same_bars(pd.dim0, [(0, 0)] * 3 + [(0, math.inf)])

    def test_matches_oracle_with_ties(self):
        rng = np.random.default_rng(11)
        for _ in range(100):
            d = random_symmetric(rng, int(rng.integers(3, 8)), integer=True)
            b0, b1 = naive_persistence(d)
            pd = rips_persistence(d)
            assert_same_bars(pd.dim0, b0)
            assert_same_bars(pd.dim1, b1)

    def test_max_scale_truncates(self):
        pd = rips_persistence(SQUARE, max_scale=1.2)
        assert_same_bars(pd.dim0, [(0, 1)] * 3 + [(0, math.inf)])
        assert_same_bars(pd.dim1, [(1.0, math.inf)])
        pd = rips_persistence(SQUARE, max_scale=0.5)
        assert_same_bars(pd.dim0, [(0, math.inf)] * 4)

    def test_lines_roundtrip(self):
        pd = rips_persistence(SQUARE)
        back = PersistenceDiagram.from_lines(pd.lines())
        assert_same_bars(back.dim0, bars(pd.dim0))
        assert_same_bars(back.dim1, bars(pd.dim1), tol=1e-11)
        assert "1 1 1.41421356237" in pd.lines()

    @settings(max_examples=60, deadline=None)
    @given(distance_matrices(min_n=2))
    def test_h0_is_minimum_spanning_tree(self, d):
        pd = rips_persistence(d)
        n = len(d)
        assert len(pd.dim0) == n
        assert np.all(pd.dim0[:, 0] == 0)
        assert np.isinf(pd.dim0[:, 1]).sum() == 1
        # csgraph treats zeros as missing edges, so shift by one
        mst = minimum_spanning_tree(np.where(np.eye(n) == 1, 0, d + 1.0)).data - 1.0
        finite = np.sort(pd.dim0[np.isfinite(pd.dim0[:, 1]), 1])
        np.testing.assert_allclose(finite, np.sort(mst), atol=1e-9)

    @settings(max_examples=60, deadline=None)
    @given(distance_matrices(min_n=2), st.floats(0.1, 20.0))
    def test_rescaling(self, d, c):
        base, scaled = rips_persistence(d), rips_persistence(d * c)
        for dim in (0, 1):
            a, b = bars(base[dim]), bars(scaled[dim])
            assert len(a) == len(b)
            for (b0, d0), (b1, d1) in zip(a, b):
                assert b1 == pytest.approx(b0 * c, abs=1e-9)
                assert d1 == pytest.approx(d0 * c, abs=1e-9) or (math.isinf(d0) and math.isinf(d1))

    @settings(max_examples=60, deadline=None)
    @given(distance_matrices(min_n=2, ties=True), st.randoms(use_true_random=False))
    def test_permutation_invariance(self, d, rnd):
        perm = list(range(len(d)))
        rnd.shuffle(perm)
        a, b = rips_persistence(d), rips_persistence(d[np.ix_(perm, perm)])
        for dim in (0, 1):
            assert bars(a[dim]) == bars(b[dim])

    @settings(max_examples=40, deadline=None)
    @given(distance_matrices(min_n=3, max_n=7, ties=True))
    def test_oracle_property_with_ties(self, d):
        b0, b1 = naive_persistence(d)
        pd = rips_persistence(d)
        assert_same_bars(pd.dim0, b0)
        assert_same_bars(pd.dim1, b1)


class TestBetti:
    def test_scale_zero(self):
        rng = np.random.default_rng(0)
        d = random_symmetric(rng, 6) + 0.1
        np.fill_diagonal(d, 0)
        assert betti_at_scale(d, 0.0) == (6, 0)

    def test_square_is_a_circle(self):
        assert betti_at_scale(SQUARE, 1.2) == (1, 1)

    def test_edge_present_at_own_diameter(self):
        assert betti_at_scale([[0, 1], [1, 0]], 1.0)[0] == 1

    def test_negative_scale(self):
        with pytest.raises(ValueError):
            betti_at_scale(SQUARE, -0.1)

    def test_matches_brute_force(self):
        rng = np.random.default_rng(5)
        for _ in range(100):
            n = int(rng.integers(2, 8))
            d = random_symmetric(rng, n, integer=bool(rng.integers(2)))
            for scale in (0.0, 0.3, 1.0, 1.5, 2.0, 2.5, 3.0):
                assert betti_at_scale(d, scale) == brute_betti(d, scale)
