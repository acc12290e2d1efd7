import numpy as np
import pytest

from cnnidx import embed, invindex, search
from cnnidx.embed import EmbedConfig
from cnnidx.invindex import BuildConfig, reference_vector
from cnnidx.search import QueryConfig
from cnnidx.vecio import FeatureSet


def pipeline_oracle(ix, q, cfg):
    """Independent re-implementation of the query pipeline with plain dict
    loops and per-pair encode/hamming calls."""
    wids = search.select_words(ix, q, cfg.assignment_count)
    votes = {}
    min_h = {}
    ecfg = EmbedConfig(ix.code_length)
    for wid in wids:
        q_code = embed.encode(q, reference_vector(ix, wid), ecfg)
        ids, codes = ix.lists.get(wid, (np.array([], dtype=np.int32), None))
        for row, image_id in enumerate(ids):
            d = embed.hamming(q_code, codes[row])
            if d < cfg.hamming_threshold:
                votes[int(image_id)] = votes.get(int(image_id), 0) + 1
                min_h[int(image_id)] = min(min_h.get(int(image_id), d), d)
    ranked = sorted(votes, key=lambda i: (-votes[i], min_h[i], i))[: cfg.top_k]
    return [(i, votes[i], min_h[i]) for i in ranked]


@pytest.fixture(scope="module", params=["tifc", "ifc"])
def index_pair(request, tifc_index, ifc_index):
    return tifc_index if request.param == "tifc" else ifc_index


class TestQuery:
    def test_matches_pipeline_oracle(self, index_pair, small_dataset):
        queries = small_dataset[1]
        cfg = QueryConfig(assignment_count=4, hamming_threshold=5, top_k=20)
        for q in queries.vectors:
            got = search.query(index_pair, q, cfg).entries
            assert got == pipeline_oracle(index_pair, q, cfg)

    def test_threshold_zero_returns_nothing(self, index_pair, small_dataset):
        q = small_dataset[1].vectors[0]
        cfg = QueryConfig(assignment_count=3, hamming_threshold=0, top_k=10)
        assert search.query(index_pair, q, cfg).entries == []

    def test_self_retrieval_five_vector_db(self):
        rng = np.random.default_rng(0)
        db = FeatureSet(rng.standard_normal((5, 16)).astype(np.float32))
        length = 16
        ix = invindex.build(db, BuildConfig(scheme="tifc", link_count=2,
                                            code_length=length))
        cfg = QueryConfig(assignment_count=2, hamming_threshold=length, top_k=5)
        for i in range(5):
            res = search.query(ix, db.vectors[i], cfg)
            top_id, top_votes, top_h = res.entries[0]
            assert top_id == i
            assert top_votes == 2  # one vote per shared linked word, W = S
            assert top_h == 0

    def test_self_retrieval_single_link(self):
        rng = np.random.default_rng(1)
        db = FeatureSet(rng.standard_normal((10, 8)).astype(np.float32))
        ix = invindex.build(db, BuildConfig(scheme="tifc", link_count=1, code_length=8))
        cfg = QueryConfig(assignment_count=1, hamming_threshold=8, top_k=10)
        res = search.query(ix, db.vectors[4], cfg)
        entry = next(e for e in res.entries if e[0] == 4)
        assert entry[1] == 1 and entry[2] == 0

    def test_votes_bounded_by_min_s_w(self, ifc_index, small_dataset):
        for w in (1, 2, 3, 5):
            cfg = QueryConfig(assignment_count=w, hamming_threshold=8, top_k=50)
            for q in small_dataset[1].vectors:
                for _, votes, _ in search.query(ifc_index, q, cfg).entries:
                    assert 1 <= votes <= min(ifc_index.link_count, w)

    def test_ranking_order_invariants(self, ifc_index, small_dataset):
        cfg = QueryConfig(assignment_count=3, hamming_threshold=6, top_k=50)
        for q in small_dataset[1].vectors:
            entries = search.query(ifc_index, q, cfg).entries
            keys = [(-v, h, i) for i, v, h in entries]
            assert keys == sorted(keys)

    def test_determinism(self, index_pair, small_dataset):
        q = small_dataset[1].vectors[2]
        cfg = QueryConfig(assignment_count=3, hamming_threshold=5, top_k=10)
        a = search.query(index_pair, q, cfg)
        b = search.query(index_pair, q, cfg)
        assert a.entries == b.entries

    def test_threshold_above_code_length_rejected(self, index_pair):
        cfg = QueryConfig(assignment_count=1, hamming_threshold=9, top_k=5)
        with pytest.raises(ValueError):
            search.query(index_pair, np.zeros(16), cfg)

    def test_dim_mismatch_rejected(self, tifc_index):
        cfg = QueryConfig(assignment_count=1, hamming_threshold=4, top_k=5)
        with pytest.raises(ValueError):
            search.query(tifc_index, np.zeros(7), cfg)


class TestCandidateSet:
    def test_full_assignment_returns_everything(self, tifc_index, small_dataset):
        db, queries, _ = small_dataset
        got = search.candidate_set(tifc_index, queries.vectors[0], tifc_index.word_count)
        assert got == set(range(db.n))

    def test_monotone_in_w(self, index_pair, small_dataset):
        for q in small_dataset[1].vectors:
            prev = set()
            for w in range(1, 9):
                cur = search.candidate_set(index_pair, q, w)
                assert prev <= cur
                prev = cur


class TestVoteMonotonicity:
    def test_votes_non_decreasing_in_t(self, index_pair, small_dataset):
        q = small_dataset[1].vectors[1]
        prev: dict[int, int] = {}
        for t in range(0, index_pair.code_length + 1):
            cfg = QueryConfig(assignment_count=3, hamming_threshold=t, top_k=100)
            cur = {i: v for i, v, _ in search.query(index_pair, q, cfg).entries}
            for image_id, votes in prev.items():
                assert cur.get(image_id, 0) >= votes
            prev = cur


class TestBatch:
    def test_batch_matches_individual(self, ifc_index, small_dataset):
        queries = small_dataset[1]
        cfg = QueryConfig(assignment_count=3, hamming_threshold=6, top_k=10)
        results, summary = search.batch_query(ifc_index, queries, cfg)
        assert len(results) == queries.n
        assert len(summary.query_times) == queries.n
        for i, q in enumerate(queries.vectors):
            assert results[i].entries == search.query(ifc_index, q, cfg).entries

    def test_written_outputs_are_deterministic(self, ifc_index, small_dataset, tmp_path):
        queries = small_dataset[1]
        cfg = QueryConfig(assignment_count=3, hamming_threshold=6, top_k=10)
        for run in ("a", "b"):
            results, summary = search.batch_query(ifc_index, queries, cfg)
            search.write_batch_results(
                results, summary,
                ids_path=tmp_path / f"{run}.ivecs",
                summary_path=tmp_path / f"{run}.summary.json",
                timing_path=tmp_path / f"{run}.timing.json",
                config={"W": 3, "T": 6},
            )
        assert (tmp_path / "a.ivecs").read_bytes() == (tmp_path / "b.ivecs").read_bytes()
        assert (tmp_path / "a.summary.json").read_text() == \
            (tmp_path / "b.summary.json").read_text()
