import numpy as np
import pytest

from cnnidx import pq
from cnnidx.pq import PqCodebook, PqConfig
from cnnidx.vecio import FeatureSet


def random_codebook(k, m, seg_dim, seed=0):
    """A codebook built directly from random centroids (no training)."""
    rng = np.random.default_rng(seed)
    sub = rng.standard_normal((m, k, seg_dim)).astype(np.float32)
    return PqCodebook(sub_codebooks=sub, config=PqConfig(segments=m, words_per_segment=k))


def exhaustive_ranking(x, cb):
    """Oracle: every product word scored by its summed segment distances,
    sorted by (distance, word id)."""
    k, m = cb.config.words_per_segment, cb.config.segments
    x = np.asarray(x, dtype=np.float64)
    seg_dim = cb.dim // m
    rows = []
    for wid in range(k**m):
        total = 0.0
        for s, w in enumerate(pq.decode_word(wid, k, m)):
            diff = x[s * seg_dim : (s + 1) * seg_dim] - cb.sub_codebooks[s][w].astype(np.float64)
            total += float(diff @ diff)
        rows.append((total, wid))
    rows.sort()
    return rows


class TestWordCodec:
    def test_zero_tuple(self):
        assert pq.encode_word((0, 0, 0), 5) == 0
        assert pq.decode_word(0, 5, 3) == (0, 0, 0)

    def test_segment_one_most_significant(self):
        assert pq.encode_word((3, 7), 10) == 37
        assert pq.decode_word(37, 10, 2) == (3, 7)

    def test_round_trip_random_tuples(self):
        rng = np.random.default_rng(1)
        for _ in range(200):
            k = int(rng.integers(2, 9))
            m = int(rng.integers(1, 5))
            tup = tuple(int(v) for v in rng.integers(0, k, size=m))
            assert pq.decode_word(pq.encode_word(tup, k), k, m) == tup

    def test_out_of_range(self):
        with pytest.raises(ValueError):
            pq.decode_word(16, 4, 2)


class TestTrain:
    def test_k1_gives_segment_means(self):
        rng = np.random.default_rng(0)
        data = FeatureSet(rng.standard_normal((30, 6)).astype(np.float32))
        cb = pq.train(data, PqConfig(segments=3, words_per_segment=1))
        for s in range(3):
            seg = data.vectors[:, 2 * s : 2 * s + 2].astype(np.float64)
            np.testing.assert_allclose(cb.sub_codebooks[s][0], seg.mean(axis=0), rtol=1e-5)

    def test_two_separated_pairs(self):
        # exhaustive 2-partition oracle: the optimum clusters each pair together
        pts = np.array([[0.0, 0.0], [0.2, 0.0], [10.0, 10.0], [10.2, 10.0]],
                       dtype=np.float32)
        cb = pq.train(FeatureSet(pts), PqConfig(segments=1, words_per_segment=2,
                                                kmeans_restarts=5))
        got = sorted(cb.sub_codebooks[0].tolist())
        np.testing.assert_allclose(got, [[0.1, 0.0], [10.1, 10.0]], atol=1e-5)

    def test_shapes(self):
        rng = np.random.default_rng(2)
        data = FeatureSet(rng.standard_normal((50, 4)).astype(np.float32))
        cb = pq.train(data, PqConfig(segments=2, words_per_segment=3))
        assert cb.sub_codebooks.shape == (2, 3, 2)
        assert cb.dim == 4 and cb.word_count == 9

    def test_determinism(self):
        rng = np.random.default_rng(3)
        data = FeatureSet(rng.standard_normal((60, 8)).astype(np.float32))
        cfg = PqConfig(segments=2, words_per_segment=4, kmeans_seed=11)
        a = pq.train(data, cfg)
        b = pq.train(data, cfg)
        np.testing.assert_array_equal(a.sub_codebooks, b.sub_codebooks)

    def test_too_few_training_vectors(self):
        data = FeatureSet(np.zeros((3, 4), dtype=np.float32) + np.arange(4))
        with pytest.raises(ValueError, match="at least"):
            pq.train(data, PqConfig(segments=2, words_per_segment=5))

    def test_dim_not_divisible(self):
        rng = np.random.default_rng(4)
        data = FeatureSet(rng.standard_normal((10, 5)).astype(np.float32))
        with pytest.raises(ValueError, match="divisible"):
            pq.train(data, PqConfig(segments=2, words_per_segment=2))

    def test_lloyd_wcss_monotone(self):
        rng = np.random.default_rng(5)
        pts = rng.standard_normal((200, 4))
        wcss_by_iters = []
        for iters in (1, 2, 4, 8, 25):
            _, wcss = pq._kmeans(pts.copy(), 8, iters, np.random.default_rng(0))
            wcss_by_iters.append(wcss)
        assert all(a >= b - 1e-9 for a, b in zip(wcss_by_iters, wcss_by_iters[1:]))


class TestAssign:
    def test_exact_product_centroid(self):
        cb = random_codebook(k=8, m=2, seg_dim=3, seed=6)
        x = np.concatenate([cb.sub_codebooks[0][3], cb.sub_codebooks[1][7]])
        assert pq.assign(x, cb) == pq.encode_word((3, 7), 8)

    def test_matches_exhaustive_oracle(self):
        cb = random_codebook(k=4, m=2, seg_dim=2, seed=7)
        rng = np.random.default_rng(8)
        for _ in range(100):
            x = rng.standard_normal(4)
            assert pq.assign(x, cb) == exhaustive_ranking(x, cb)[0][1]

    def test_m1_is_nearest_centroid(self):
        cb = random_codebook(k=6, m=1, seg_dim=5, seed=9)
        rng = np.random.default_rng(10)
        for _ in range(50):
            x = rng.standard_normal(5)
            dists = ((cb.sub_codebooks[0].astype(np.float64) - x) ** 2).sum(axis=1)
            assert pq.assign(x, cb) == int(dists.argmin())

    def test_tie_break_smaller_subword(self):
        # duplicate centroids with integer coordinates: distances are exact
        sub = np.array([[[2.0, 0.0], [1.0, 0.0], [1.0, 0.0]]], dtype=np.float32)
        cb = PqCodebook(sub_codebooks=sub, config=PqConfig(segments=1, words_per_segment=3))
        assert pq.assign(np.array([0.0, 0.0]), cb) == 1

    def test_dimension_mismatch(self):
        cb = random_codebook(k=2, m=2, seg_dim=2)
        with pytest.raises(ValueError):
            pq.assign(np.zeros(5), cb)


class TestNearestWords:
    def test_s1_consistent_with_assign(self):
        cb = random_codebook(k=5, m=2, seg_dim=2, seed=11)
        rng = np.random.default_rng(12)
        for _ in range(50):
            x = rng.standard_normal(4)
            assert pq.nearest_words(x, cb, 1)[0][0] == pq.assign(x, cb)

    def test_full_enumeration_matches_oracle(self):
        cb = random_codebook(k=3, m=2, seg_dim=2, seed=13)
        rng = np.random.default_rng(14)
        for _ in range(20):
            x = rng.standard_normal(4)
            got = [w for w, _ in pq.nearest_words(x, cb, 9)]
            assert got == [w for _, w in exhaustive_ranking(x, cb)]

    def test_every_s_matches_oracle_prefix(self):
        cb = random_codebook(k=4, m=3, seg_dim=2, seed=15)
        rng = np.random.default_rng(16)
        x = rng.standard_normal(6)
        oracle = [w for _, w in exhaustive_ranking(x, cb)]
        for s in range(1, 65):
            assert [w for w, _ in pq.nearest_words(x, cb, s)] == oracle[:s]

    def test_prefix_property(self):
        cb = random_codebook(k=6, m=2, seg_dim=3, seed=17)
        rng = np.random.default_rng(18)
        x = rng.standard_normal(6)
        prev = []
        for s in range(1, 37):
            cur = [w for w, _ in pq.nearest_words(x, cb, s)]
            assert cur[: len(prev)] == prev
            prev = cur

    def test_tie_break_by_smaller_word_id(self):
        # both centroids of segment 2 identical: words (w1, 0) and (w1, 1) tie
        sub = np.zeros((2, 2, 1), dtype=np.float32)
        sub[0, 0, 0] = 0.0
        sub[0, 1, 0] = 4.0
        cb = PqCodebook(sub_codebooks=sub, config=PqConfig(segments=2, words_per_segment=2))
        got = [w for w, _ in pq.nearest_words(np.array([1.0, 0.0]), cb, 4)]
        assert got == [0, 1, 2, 3]

    def test_count_out_of_range(self):
        cb = random_codebook(k=2, m=2, seg_dim=1)
        with pytest.raises(ValueError):
            pq.nearest_words(np.zeros(2), cb, 5)

    def test_batch_matches_single(self):
        cb = random_codebook(k=4, m=2, seg_dim=2, seed=19)
        rng = np.random.default_rng(20)
        xs = rng.standard_normal((25, 4))
        batch = pq.nearest_words_batch(xs, cb, 5)
        for i in range(25):
            single = [w for w, _ in pq.nearest_words(xs[i], cb, 5)]
            assert list(batch[i]) == single


class TestReconstruct:
    def test_word_zero(self):
        cb = random_codebook(k=3, m=2, seg_dim=2, seed=21)
        expected = np.concatenate([cb.sub_codebooks[0][0], cb.sub_codebooks[1][0]])
        np.testing.assert_array_equal(pq.reconstruct(0, cb), expected)

    def test_assign_reconstruct_fixed_point(self):
        cb = random_codebook(k=4, m=2, seg_dim=3, seed=22)
        for wid in range(16):
            c = pq.reconstruct(wid, cb)
            assert pq.assign(c, cb) == wid
            np.testing.assert_array_equal(pq.reconstruct(pq.assign(c, cb), cb), c)

    def test_batch_matches_single(self):
        cb = random_codebook(k=5, m=3, seg_dim=2, seed=23)
        wids = np.arange(125)
        batch = pq.reconstruct_batch(wids, cb)
        for wid in wids:
            np.testing.assert_array_equal(batch[wid], pq.reconstruct(int(wid), cb))

    def test_out_of_range(self):
        cb = random_codebook(k=2, m=2, seg_dim=1)
        with pytest.raises(ValueError):
            pq.reconstruct(4, cb)
