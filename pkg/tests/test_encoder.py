import numpy as np
import pytest

from solverank.encoder import (
    encode_passage,
    encode_query,
    featurize,
    init_params,
    load_checkpoint,
    params_fingerprint,
    save_checkpoint,
    similarity,
)
from solverank.errors import DataError

F_TEST = 1 << 12


def reference_fnv1a64(data: bytes) -> int:
    """Independent FNV-1a implementation for fixture derivation."""
    h = 14695981039346656037
    for byte in data:
        h ^= byte
        h = (h * 1099511628211) % (1 << 64)
    return h


def reference_features(tokens, feature_dim):
    """Re-derive featurize() from its definition, without the kernels."""
    grams = list(tokens) + [f"{a}_{b}" for a, b in zip(tokens, tokens[1:])]
    acc = {}
    for gram in grams:
        h = reference_fnv1a64(gram.encode("utf-8"))
        idx = h % feature_dim
        sign = -1.0 if (h >> 63) & 1 else 1.0
        acc[idx] = acc.get(idx, 0.0) + sign
    acc = {i: w for i, w in acc.items() if w != 0.0}
    norm = sum(w * w for w in acc.values()) ** 0.5
    return {i: w / norm for i, w in acc.items()} if norm else {}


class TestFeaturize:
    def test_empty(self):
        fv = featurize([], F_TEST)
        assert fv.nnz == 0

    def test_single_token_unit_weight(self):
        fv = featurize(["a"], F_TEST)
        assert fv.nnz == 1
        assert abs(fv.values[0]) == 1.0

    def test_two_tokens_match_reference_enumeration(self):
        fv = featurize(["a", "b"], F_TEST)
        expected = reference_features(["a", "b"], F_TEST)
        assert fv.nnz <= 3
        got = dict(zip(fv.indices.tolist(), fv.values.tolist()))
        assert set(got) == set(expected)
        for idx, weight in expected.items():
            assert got[idx] == pytest.approx(weight, abs=1e-15)

    def test_bigram_is_order_sensitive(self):
        ab = featurize(["a", "b"], F_TEST)
        ba = featurize(["b", "a"], F_TEST)
        assert dict(zip(ab.indices.tolist(), ab.values.tolist())) != dict(
            zip(ba.indices.tolist(), ba.values.tolist())
        )

    def test_unit_norm(self):
        fv = featurize("many words in this longer test sentence".split(), F_TEST)
        assert np.sqrt(np.sum(fv.values**2)) == pytest.approx(1.0, abs=1e-12)

    def test_deterministic(self):
        tokens = "stable across runs and platforms".split()
        a = featurize(tokens, F_TEST)
        b = featurize(tokens, F_TEST)
        assert np.array_equal(a.indices, b.indices)
        assert np.array_equal(a.values, b.values)

    def test_matches_reference_on_random_token_lists(self):
        rng = np.random.default_rng(5)
        vocab = ["alpha", "beta", "gamma", "delta", "x1", "10"]
        for _ in range(50):
            tokens = [vocab[i] for i in rng.integers(0, len(vocab), size=int(rng.integers(1, 12)))]
            fv = featurize(tokens, F_TEST)
            expected = reference_features(tokens, F_TEST)
            got = dict(zip(fv.indices.tolist(), fv.values.tolist()))
            assert set(got) == set(expected)
            for idx, weight in expected.items():
                assert got[idx] == pytest.approx(weight, abs=1e-14)

    def test_power_of_two_required(self):
        with pytest.raises(DataError):
            featurize(["a"], 1000)


class TestEncode:
    def test_zero_weights_zero_embedding(self):
        params = init_params(8, F_TEST, seed=0)
        params.w_query[:] = 0.0
        emb = encode_query(params, featurize(["a", "b"], F_TEST))
        assert np.all(emb == 0.0)

    def test_unit_feature_selects_column(self):
        params = init_params(8, F_TEST, normalize=False, seed=1)
        fv = featurize(["a"], F_TEST)
        emb = encode_query(params, fv)
        expected = params.w_query[:, fv.indices[0]] * fv.values[0]
        np.testing.assert_array_equal(emb, expected)

    def test_scale_invariance_under_normalization(self):
        params = init_params(16, F_TEST, normalize=True, seed=2)
        fv = featurize(["some", "tokens", "here"], F_TEST)
        base = encode_query(params, fv)
        for alpha in (0.5, 3.0, 100.0):
            scaled = type(fv)(fv.indices, fv.values * alpha, fv.dim)
            np.testing.assert_allclose(encode_query(params, scaled), base, atol=1e-12)

    def test_passage_encoder_uses_its_own_weights(self):
        params = init_params(8, F_TEST, normalize=False, seed=3)
        fv = featurize(["a"], F_TEST)
        assert not np.array_equal(encode_query(params, fv), encode_passage(params, fv))
        params.w_passage = params.w_query.copy()
        np.testing.assert_array_equal(encode_query(params, fv), encode_passage(params, fv))

    def test_matches_dense_matvec_oracle(self):
        rng = np.random.default_rng(6)
        params = init_params(12, F_TEST, normalize=False, seed=4)
        fv = featurize("a few random words for the oracle".split(), F_TEST)
        dense = np.zeros(F_TEST)
        dense[fv.indices] = fv.values
        expected = params.w_passage @ dense
        np.testing.assert_allclose(encode_passage(params, fv), expected, atol=1e-12)

    def test_empty_features_zero_embedding(self):
        params = init_params(8, F_TEST, seed=5)
        assert np.all(encode_passage(params, featurize([], F_TEST)) == 0.0)


class TestSimilarity:
    def test_identical_unit_vector(self):
        u = np.array([1.0, 0.0])
        assert similarity(u, u) == 1.0

    def test_orthogonal(self):
        assert similarity(np.array([1.0, 0.0]), np.array([0.0, 1.0])) == 0.0

    def test_hand_arithmetic(self):
        assert similarity(np.array([1.0, 2.0]), np.array([3.0, -1.0])) == 1.0

    def test_length_mismatch(self):
        with pytest.raises(DataError):
            similarity(np.zeros(2), np.zeros(3))

    def test_bilinear_in_first_argument(self):
        rng = np.random.default_rng(7)
        u, v = rng.standard_normal(16), rng.standard_normal(16)
        assert similarity(2.5 * u, v) == pytest.approx(2.5 * similarity(u, v), rel=1e-12)

    def test_self_similarity_of_normalized_encoding(self):
        params = init_params(16, F_TEST, normalize=True, seed=8)
        emb = encode_query(params, featurize(["hello", "world"], F_TEST))
        assert similarity(emb, emb) == pytest.approx(1.0, abs=1e-12)

    def test_bounded_when_normalized(self):
        params = init_params(16, F_TEST, normalize=True, seed=9)
        rng = np.random.default_rng(10)
        vocab = ["q", "w", "e", "r", "t", "y"]
        for _ in range(50):
            t1 = [vocab[i] for i in rng.integers(0, 6, size=5)]
            t2 = [vocab[i] for i in rng.integers(0, 6, size=5)]
            s = similarity(
                encode_query(params, featurize(t1, F_TEST)),
                encode_passage(params, featurize(t2, F_TEST)),
            )
            assert -1.0 - 1e-12 <= s <= 1.0 + 1e-12


class TestCheckpoint:
    def test_round_trip(self, tmp_path):
        params = init_params(8, 1 << 10, normalize=False, tau=0.7, seed=11)
        path = tmp_path / "params.bin"
        save_checkpoint(params, str(path), sidecar={"seed": 11})
        loaded = load_checkpoint(str(path))
        assert loaded.embed_dim == 8 and loaded.feature_dim == 1 << 10
        assert loaded.normalize is False
        assert loaded.tau == 0.7
        np.testing.assert_array_equal(loaded.w_query, params.w_query)
        np.testing.assert_array_equal(loaded.w_passage, params.w_passage)
        assert (tmp_path / "params.bin.json").exists()

    def test_fingerprint_stable_and_sensitive(self):
        a = init_params(4, 1 << 8, seed=0)
        b = init_params(4, 1 << 8, seed=0)
        assert params_fingerprint(a) == params_fingerprint(b)
        b.w_query[0, 0] += 1e-9
        assert params_fingerprint(a) != params_fingerprint(b)

    def test_reject_garbage(self, tmp_path):
        path = tmp_path / "bad.bin"
        path.write_bytes(b"not a checkpoint")
        with pytest.raises(DataError):
            load_checkpoint(str(path))
