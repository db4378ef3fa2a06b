import json
import random

import pytest

from solverank.corpus import (
    Corpus,
    Problem,
    load_corpus,
    save_corpus,
    split_by_difficulty,
    tokenize,
)
from solverank.errors import DataError


def write_lines(path, records):
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec) + "\n")


class TestTokenize:
    def test_basic(self):
        assert tokenize("Binary Search!") == ["binary", "search"]

    def test_empty(self):
        assert tokenize("") == []

    def test_symbol_runs_keep_digits(self):
        # maximal non-alphanumeric runs split; digits are tokens
        assert tokenize("x1<=10^9, x2") == ["x1", "10", "9", "x2"]

    def test_underscore_splits(self):
        # underscore is reserved as the bigram joiner downstream
        assert tokenize("foo_bar") == ["foo", "bar"]

    def test_no_empty_tokens(self):
        rng = random.Random(1)
        for _ in range(200):
            text = "".join(rng.choice("ab1 .,!-\n\t^") for _ in range(rng.randint(0, 60)))
            assert all(tok for tok in tokenize(text))

    def test_idempotent_under_rejoin(self):
        rng = random.Random(2)
        samples = ["Mixed CASE, with 10^9 (limits)!", "", "a_b-c"]
        samples += [
            "".join(rng.choice("abcXYZ0123 .,!?-_^#\n") for _ in range(rng.randint(0, 80)))
            for _ in range(300)
        ]
        for text in samples:
            tokens = tokenize(text)
            assert tokenize(" ".join(tokens)) == tokens


class TestLoadCorpus:
    def test_three_valid_lines_in_order(self, tmp_path):
        path = tmp_path / "c.jsonl"
        write_lines(
            path,
            [
                {"id": "a", "statement": "first", "difficulty": 900},
                {"id": "b", "statement": "second", "difficulty": 1500},
                {"id": "c", "statement": "third", "difficulty": 2500},
            ],
        )
        corpus = load_corpus(str(path))
        assert corpus.ids == ["a", "b", "c"]
        assert corpus.id_index == {"a": 0, "b": 1, "c": 2}

    def test_duplicate_id_rejected_both_modes(self, tmp_path):
        path = tmp_path / "c.jsonl"
        write_lines(path, [{"id": "p1", "statement": "x"}, {"id": "p1", "statement": "y"}])
        with pytest.raises(DataError, match="duplicate"):
            load_corpus(str(path))
        with pytest.raises(DataError, match="duplicate"):
            load_corpus(str(path), strict=False)

    def test_lenient_skips_and_counts(self, tmp_path):
        path = tmp_path / "c.jsonl"
        with open(path, "w") as fh:
            fh.write(json.dumps({"id": "a", "statement": "ok"}) + "\n")
            fh.write("{not json\n")
            fh.write(json.dumps({"id": "b", "statement": "ok too"}) + "\n")
        corpus = load_corpus(str(path), strict=False)
        assert len(corpus) == 2
        assert corpus.skipped_lines == 1

    def test_strict_raises_with_line_number(self, tmp_path):
        path = tmp_path / "c.jsonl"
        with open(path, "w") as fh:
            fh.write(json.dumps({"id": "a", "statement": "ok"}) + "\n")
            fh.write(json.dumps({"id": "bad"}) + "\n")  # no statement
        with pytest.raises(DataError, match=":2:"):
            load_corpus(str(path))

    def test_empty_corpus_error(self, tmp_path):
        path = tmp_path / "c.jsonl"
        path.write_text("\n")
        with pytest.raises(DataError, match="no valid records"):
            load_corpus(str(path))

    def test_missing_file_is_data_error(self, tmp_path):
        with pytest.raises(DataError):
            load_corpus(str(tmp_path / "nope.jsonl"))

    def test_missing_difficulty_defaults_to_zero(self, tmp_path, caplog):
        path = tmp_path / "c.jsonl"
        write_lines(path, [{"id": "a", "statement": "no rating"}])
        corpus = load_corpus(str(path))
        assert corpus.get("a").difficulty == 0

    def test_unknown_keys_ignored(self, tmp_path):
        path = tmp_path / "c.jsonl"
        write_lines(path, [{"id": "a", "statement": "x", "src_uid": "zzz", "extra": [1]}])
        assert len(load_corpus(str(path))) == 1

    def test_samples_parsed(self, tmp_path):
        path = tmp_path / "c.jsonl"
        write_lines(
            path,
            [
                {
                    "id": "a",
                    "statement": "x",
                    "samples": [{"input": "1 2\n", "output": "3\n"}],
                    "lang": "Python",
                    "tags": ["dp"],
                }
            ],
        )
        problem = load_corpus(str(path)).get("a")
        assert problem.samples == [("1 2\n", "3\n")]
        assert problem.language_tag == "Python"
        assert problem.tags == ["dp"]

    def test_round_trip(self, tmp_path):
        rng = random.Random(3)
        from conftest import random_corpus

        original = random_corpus(rng, 40)
        first = tmp_path / "a.jsonl"
        second = tmp_path / "b.jsonl"
        save_corpus(original, str(first))
        loaded = load_corpus(str(first))
        save_corpus(loaded, str(second))
        again = load_corpus(str(second))
        assert loaded == again
        assert loaded == original


class TestSplitByDifficulty:
    def test_paper_bin_edges(self):
        corpus = Corpus(
            [Problem(id=f"p{d}", statement="s", difficulty=d) for d in (800, 1400, 1700, 2100)]
        )
        easy, medium, hard = split_by_difficulty(corpus, (1400, 2000))
        assert (len(easy), len(medium), len(hard)) == (2, 1, 1)
        assert easy.ids == ["p800", "p1400"]  # 1400 is inclusive in the easy bin

    def test_empty_corpus(self):
        easy, medium, hard = split_by_difficulty(Corpus([]))
        assert (len(easy), len(medium), len(hard)) == (0, 0, 0)

    def test_boundary_all_easy(self):
        corpus = Corpus([Problem(id=f"p{i}", statement="s", difficulty=1400) for i in range(4)])
        easy, medium, hard = split_by_difficulty(corpus)
        assert len(easy) == 4 and len(medium) == 0 and len(hard) == 0

    def test_partition_property(self):
        rng = random.Random(4)
        from conftest import random_corpus

        corpus = random_corpus(rng, 120)
        easy, medium, hard = split_by_difficulty(corpus)
        assert len(easy) + len(medium) + len(hard) == len(corpus)
        all_ids = easy.ids + medium.ids + hard.ids
        assert sorted(all_ids) == sorted(corpus.ids)

    def test_invalid_bounds(self):
        with pytest.raises(DataError):
            split_by_difficulty(Corpus([]), (2000, 1400))


class TestProblemValidation:
    def test_empty_id(self):
        with pytest.raises(DataError):
            Problem(id="", statement="x")

    def test_empty_statement(self):
        with pytest.raises(DataError):
            Problem(id="a", statement="")

    def test_negative_difficulty(self):
        with pytest.raises(DataError):
            Problem(id="a", statement="x", difficulty=-1)
