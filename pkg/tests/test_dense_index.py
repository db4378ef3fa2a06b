import random

import numpy as np
import pytest

from conftest import random_corpus
from solverank.clients import ConstClient
from solverank.corpus import Corpus, Problem, tokenize
from solverank.dense_index import (
    DenseIndex,
    build_dense_index,
    dense_search,
    filter_verified,
    load_dense_index,
    save_dense_index,
)
from solverank.encoder import encode_passage, encode_query, featurize, init_params, similarity
from solverank.errors import DataError
from solverank.ranking import RankedList

F_TEST = 1 << 12


@pytest.fixture
def small_setup():
    rng = random.Random(0)
    corpus = random_corpus(rng, 40)
    params = init_params(16, F_TEST, seed=1)
    return corpus, params, build_dense_index(params, corpus)


class TestBuild:
    def test_shape_and_order(self, small_setup):
        corpus, params, index = small_setup
        assert index.embeddings.shape == (40, 16)
        assert index.doc_ids == corpus.ids

    def test_rows_equal_standalone_encoding(self, small_setup):
        corpus, params, index = small_setup
        for pos in (0, 7, 39):
            standalone = encode_passage(
                params, featurize(tokenize(corpus[pos].statement), params.feature_dim)
            )
            np.testing.assert_array_equal(index.embeddings[pos], standalone)

    def test_rebuild_identical(self, small_setup):
        corpus, params, index = small_setup
        again = build_dense_index(params, corpus)
        np.testing.assert_array_equal(index.embeddings, again.embeddings)
        assert again.params_fingerprint == index.params_fingerprint

    def test_row_norms_unit_when_normalized(self, small_setup):
        _corpus, _params, index = small_setup
        norms = np.linalg.norm(index.embeddings, axis=1)
        np.testing.assert_allclose(norms, 1.0, atol=1e-12)

    def test_empty_corpus(self):
        with pytest.raises(DataError):
            build_dense_index(init_params(4, F_TEST), Corpus([]))


class TestSearch:
    def test_self_query_ranks_first_with_shared_encoders(self):
        # with w_passage == w_query a query identical to a document scores
        # exactly its own unit norm and, absent ties, ranks first
        rng = random.Random(7)
        corpus = random_corpus(rng, 40)
        params = init_params(16, F_TEST, seed=1)
        params.w_passage = params.w_query.copy()
        index = build_dense_index(params, corpus)
        run = dense_search(index, params, corpus[5].statement, k=3)
        assert run.doc_ids[0] == corpus[5].id
        assert run.entries[0][1] == pytest.approx(1.0, abs=1e-12)

    def test_k_larger_than_corpus(self, small_setup):
        corpus, params, index = small_setup
        run = dense_search(index, params, "anything at all", k=1000)
        assert len(run.entries) == len(corpus)

    def test_prefix_property(self, small_setup):
        corpus, params, index = small_setup
        query = corpus[3].statement
        for k in (1, 2, 5, 17):
            small = dense_search(index, params, query, k).entries
            big = dense_search(index, params, query, k + 1).entries
            assert big[: len(small)] == small

    def test_exhaustive_scan_equals_brute_force_exactly(self, small_setup):
        corpus, params, index = small_setup
        query = corpus[11].statement
        query_emb = encode_query(params, featurize(tokenize(query), params.feature_dim))
        expected = [
            (doc_id, similarity(query_emb, index.embeddings[pos]))
            for pos, doc_id in enumerate(index.doc_ids)
        ]
        expected.sort(key=lambda e: (-e[1], e[0]))
        got = dense_search(index, params, query, k=len(corpus)).entries
        assert got == expected

    def test_ranking_invariant_under_positive_rescaling(self, small_setup):
        # scaling every passage embedding by a positive constant scales all
        # scores equally, so the ranked order (including id tie-breaks) is
        # unchanged
        corpus, params, index = small_setup
        query = corpus[9].statement
        base = dense_search(index, params, query, k=len(corpus))
        scaled = DenseIndex(
            doc_ids=index.doc_ids,
            embeddings=index.embeddings * 3.0,
            params_fingerprint=index.params_fingerprint,
        )
        rescored = dense_search(scaled, params, query, k=len(corpus))
        assert rescored.doc_ids == base.doc_ids

    def test_fingerprint_mismatch_rejected(self, small_setup):
        corpus, params, index = small_setup
        other = init_params(16, F_TEST, seed=99)
        with pytest.raises(DataError, match="fingerprint"):
            dense_search(index, other, "query", k=1)

    def test_k_validation(self, small_setup):
        corpus, params, index = small_setup
        with pytest.raises(DataError):
            dense_search(index, params, "q", k=0)


class TestFilterVerified:
    def ranked(self):
        return RankedList("q", [("d1", 0.9), ("d2", 0.8), ("d3", 0.7), ("d4", 0.6), ("d5", 0.5)])

    def pool(self):
        return Corpus([Problem(id=f"d{i}", statement=f"statement {i}") for i in range(1, 6)])

    def test_always_yes_is_identity(self):
        run, audits = filter_verified("query text", self.ranked(), self.pool(), ConstClient("Yes"))
        assert run.entries == self.ranked().entries
        assert all(a.verdict for a in audits)

    def test_always_no_empties(self):
        run, audits = filter_verified("query text", self.ranked(), self.pool(), ConstClient("No"))
        assert run.entries == []
        assert len(audits) == 5

    def test_partial_keeps_relative_order(self):
        class RankJudge(ConstClient):
            def __init__(self):
                self.model = "rank-judge"

            def complete(self, prompt):
                return "Yes" if ("statement 1" in prompt or "statement 3" in prompt) else "No"

        run, audits = filter_verified("query text", self.ranked(), self.pool(), RankJudge())
        assert run.doc_ids == ["d1", "d3"]
        assert [a.doc_id for a in audits] == ["d1", "d2", "d3", "d4", "d5"]

    def test_unknown_id_is_error(self):
        with pytest.raises(DataError):
            filter_verified("q", RankedList("q", [("ghost", 1.0)]), self.pool(), ConstClient("Yes"))


class TestPersistence:
    def test_round_trip(self, small_setup, tmp_path):
        corpus, params, index = small_setup
        path = tmp_path / "dense.idx"
        save_dense_index(index, str(path))
        loaded = load_dense_index(str(path))
        assert loaded.doc_ids == index.doc_ids
        assert loaded.params_fingerprint == index.params_fingerprint
        np.testing.assert_array_equal(loaded.embeddings, index.embeddings)
        run_a = dense_search(index, params, corpus[2].statement, 5)
        run_b = dense_search(loaded, params, corpus[2].statement, 5)
        assert run_a.entries == run_b.entries

    def test_byte_identical_across_saves(self, small_setup, tmp_path):
        _corpus, _params, index = small_setup
        a, b = tmp_path / "a.idx", tmp_path / "b.idx"
        save_dense_index(index, str(a))
        save_dense_index(index, str(b))
        assert a.read_bytes() == b.read_bytes()

    def test_reject_garbage(self, tmp_path):
        path = tmp_path / "junk.idx"
        path.write_bytes(b"JUNKJUNKJUNK")
        with pytest.raises(DataError):
            load_dense_index(str(path))
