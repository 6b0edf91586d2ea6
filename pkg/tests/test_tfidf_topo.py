import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import naive_persistence
from textopo.tfidf_topo import (
    block_distance_matrix,
    block_tfidf,
    loop_statistics,
    split_blocks,
    tfidf_topo_features,
)

words = st.sampled_from(list("abcdefghij"))
documents = st.lists(words, min_size=10, max_size=80)


class TestSplit:
    def test_exact(self):
        assert [len(b) for b in split_blocks(list(range(100)), 10)] == [10] * 10

    def test_remainder_front_loaded(self):
        assert [len(b) for b in split_blocks(list(range(103)), 10)] == [11, 11, 11] + [10] * 7

    def test_too_short(self):
        with pytest.raises(ValueError):
            split_blocks(list(range(9)), 10)

    @given(st.lists(st.integers(), min_size=1, max_size=200), st.integers(1, 20))
    def test_invariants(self, tokens, B):
        if len(tokens) < B:
            return
        blocks = split_blocks(tokens, B)
        assert len(blocks) == B
        assert [t for b in blocks for t in b] == tokens
        sizes = [len(b) for b in blocks]
        assert max(sizes) - min(sizes) <= 1


class TestTfidf:
    def test_term_everywhere(self):
        blocks = [["x", f"w{k}"] for k in range(10)]
        vecs = block_tfidf(blocks)
        assert all(v["x"] == 1.0 for v in vecs)

    def test_term_in_one_block(self):
        blocks = [["y"] for _ in range(10)]
        blocks[4] = ["z", "z", "z"]
        # 3 * (ln(11/2) + 1), evaluated separately
        assert block_tfidf(blocks)[4]["z"] == pytest.approx(8.114244276715276, abs=1e-12)

    def test_disjoint_blocks_are_orthogonal(self):
        vecs = block_tfidf([["a", "b"], ["c"], ["d", "d"]])
        dist = block_distance_matrix(vecs)
        np.testing.assert_array_equal(dist[~np.eye(3, dtype=bool)], 1.0)

    def test_zero_vector_rule(self):
        dist = block_distance_matrix([{}, {}, {"a": 1.0}])
        assert dist[0, 1] == 0.0
        assert dist[0, 2] == 1.0 and dist[2, 1] == 1.0


class TestLoopStatistics:
    def test_none(self):
        np.testing.assert_array_equal(loop_statistics(np.empty((0, 2))), 0.0)

    def test_one(self):
        np.testing.assert_allclose(loop_statistics([(0.2, 0.5)]), [1, 0.2, 0.3, 0, 0])

    def test_sample_std(self):
        y = loop_statistics([(0.1, 0.4), (0.3, 0.4), (0.2, 0.9)])
        births, durs = [0.1, 0.3, 0.2], [0.3, 0.1, 0.7]
        np.testing.assert_allclose(y, [3, np.mean(births), np.mean(durs),
                                       np.std(births, ddof=1), np.std(durs, ddof=1)])


class TestFeatures:
    def test_length(self):
        rng = np.random.default_rng(0)
        tokens = list(rng.choice(list("abcdefghijklmnop"), size=120))
        f = tfidf_topo_features(tokens)
        assert len(f.vector) == 14 and len(f.x) == 9 and len(f.y) == 5

    def test_disjoint_blocks(self):
        tokens = [f"w{b}_{k}" for b in range(10) for k in range(5)]
        f = tfidf_topo_features(tokens)
        np.testing.assert_array_equal(f.x, 1.0)
        # oracle: no loop survives on the all-ones metric
        assert naive_persistence(np.ones((10, 10)) - np.eye(10))[1] == []
        np.testing.assert_array_equal(f.y, 0.0)

    def test_identical_blocks(self):
        f = tfidf_topo_features(["the", "cat", "sat"] * 10)
        np.testing.assert_array_equal(f.vector, np.zeros(14))

    def test_other_block_count(self):
        tokens = [f"t{k % 7}" for k in range(60)]
        assert len(tfidf_topo_features(tokens, n_blocks=6).vector) == 5 + 5

    def test_stoplist(self):
        tokens = ["the", "a"] * 20 + ["x"] * 5
        with pytest.raises(ValueError):
            tfidf_topo_features(tokens, stoplist={"the", "a"})

    @settings(max_examples=60, deadline=None)
    @given(documents)
    def test_invariants(self, tokens):
        f = tfidf_topo_features(tokens)
        assert len(f.vector) == 14
        assert np.all(np.diff(f.x) >= 0)
        assert np.all((f.x >= 0) & (f.x <= 1))
        assert f.y[0] == int(f.y[0]) and np.all(f.y >= 0)
        if f.y[0] == 0:
            np.testing.assert_array_equal(f.y[1:], 0.0)

    @settings(max_examples=40, deadline=None)
    @given(st.lists(words, min_size=1, max_size=8).map(lambda w: w * 10))
    def test_duplicating_tokens(self, tokens):
        # length is a multiple of 10, so block boundaries stay aligned
        doubled = [t for t in tokens for _ in range(2)]
        a, b = tfidf_topo_features(tokens), tfidf_topo_features(doubled)
        np.testing.assert_allclose(a.vector, b.vector, atol=1e-12)

    @settings(max_examples=40, deadline=None)
    @given(documents, st.permutations(list("abcdefghij")))
    def test_relabeling(self, tokens, perm):
        rename = dict(zip("abcdefghij", perm))
        a = tfidf_topo_features(tokens)
        b = tfidf_topo_features([rename[t] for t in tokens])
        np.testing.assert_allclose(a.vector, b.vector, atol=1e-12)
