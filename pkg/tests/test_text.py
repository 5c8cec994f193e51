import numpy as np
import pytest

from decoyforge import (
    EmbeddingTable,
    QuestionIndex,
    cosine,
    embed_avg,
    normalize,
    topn_similar_questions,
)
from decoyforge.text import normalized_text, squashed_text

from conftest import make_corpus


class TestNormalize:
    def test_lowercase_and_punctuation(self):
        assert normalize("What color is the Cat?") == \
            ["what", "color", "is", "the", "cat"]

    def test_small_integers_become_words(self):
        assert normalize("2") == ["two"]
        assert normalize("There are 10 dogs") == \
            ["there", "are", "ten", "dogs"]

    def test_integers_above_ten_unchanged(self):
        assert normalize("11") == ["11"]

    def test_empty_and_punctuation_only(self):
        assert normalize("") == []
        assert normalize("  ?!  ") == []

    def test_leading_zero_integer(self):
        assert normalize("02") == ["two"]

    def test_normalized_join_and_squash(self):
        assert normalized_text("Pony  Tail!") == "pony tail"
        assert squashed_text("Pony  Tail!") == "ponytail"


class TestEmbedAvg:
    def table(self):
        return EmbeddingTable({
            "cat": np.array([1.0, 0.0, 2.0]),
            "dog": np.array([3.0, 4.0, 0.0]),
        })

    def test_single_word_is_identity(self):
        sv = embed_avg(["cat"], self.table())
        np.testing.assert_array_equal(sv.values, [1.0, 0.0, 2.0])
        assert sv.in_vocab_count == 1

    def test_two_word_mean(self):
        sv = embed_avg(["cat", "dog"], self.table())
        np.testing.assert_allclose(sv.values, [2.0, 2.0, 1.0])
        assert sv.in_vocab_count == 2

    def test_all_oov_gives_zero_vector(self):
        sv = embed_avg(["zzzz"], self.table())
        assert sv.in_vocab_count == 0
        assert sv.is_zero
        np.testing.assert_array_equal(sv.values, np.zeros(3))

    def test_oov_tokens_skipped_not_zero_averaged(self):
        with_oov = embed_avg(["cat", "zzzz"], self.table())
        without = embed_avg(["cat"], self.table())
        np.testing.assert_array_equal(with_oov.values, without.values)
        assert with_oov.in_vocab_count == 1

    def test_permutation_invariant(self):
        rng = np.random.default_rng(0)
        table = EmbeddingTable({w: rng.normal(size=4)
                                for w in "abcdefgh"})
        tokens = list("abcdeafg")
        base = embed_avg(tokens, table).values
        for _ in range(20):
            perm = [tokens[i] for i in rng.permutation(len(tokens))]
            np.testing.assert_allclose(embed_avg(perm, table).values, base)


class TestCosine:
    def test_identity(self):
        u = np.array([1.0, 2.0, -3.0])
        assert cosine(u, u) == pytest.approx(1.0)

    def test_orthogonal(self):
        assert cosine(np.array([1.0, 0.0]), np.array([0.0, 1.0])) == 0.0

    def test_antipodal(self):
        assert cosine(np.array([1.0, 0.0]), np.array([-1.0, 0.0])) == -1.0

    def test_zero_norm_defined_as_zero(self):
        assert cosine(np.zeros(3), np.array([1.0, 2.0, 3.0])) == 0.0

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError, match="dimension"):
            cosine(np.zeros(3), np.zeros(4))

    def test_symmetry(self):
        rng = np.random.default_rng(42)
        for _ in range(200):
            u = rng.normal(size=8)
            v = rng.normal(size=8)
            assert abs(cosine(u, v) - cosine(v, u)) < 1e-12

    def test_range(self):
        rng = np.random.default_rng(7)
        for _ in range(200):
            u = rng.normal(size=5) * rng.uniform(0.01, 100)
            v = rng.normal(size=5) * rng.uniform(0.01, 100)
            assert -1.0 - 1e-12 <= cosine(u, v) <= 1.0 + 1e-12


def random_table(words, d=16, seed=0):
    rng = np.random.default_rng(seed)
    return EmbeddingTable({w: rng.normal(size=d) for w in words})


def brute_force_topn(corpus, query, n, table):
    """Full sort of all eligible pairwise cosines (the retrieval oracle)."""
    qv = embed_avg(normalize(query.question), table)
    if qv.is_zero:
        return []
    scored = []
    for rec in corpus.records:
        if rec.triplet_id == query.triplet_id or rec.image_id == query.image_id:
            continue
        rv = embed_avg(normalize(rec.question), table)
        scored.append((rec.triplet_id, cosine(qv.values, rv.values)))
    scored.sort(key=lambda x: (-x[1], x[0]))
    return scored[:n]


class TestTopnSimilarQuestions:
    words = ("what color is the cat dog sky red blue house big small "
             "tree car runs sits flies swims".split())

    def corpus(self):
        rng = np.random.default_rng(3)
        rows = []
        for i in range(5):
            q = " ".join(rng.choice(self.words, size=6))
            rows.append((f"t{i}", f"img{i}", "train", q, "x"))
        return make_corpus(rows)

    def test_identical_question_ranks_first_with_sim_1(self):
        corpus = make_corpus([
            ("a", "i1", "train", "what color is the sky", "blue"),
            ("b", "i2", "train", "what color is the sky", "red"),
            ("c", "i3", "train", "how big is the tree", "big"),
        ])
        table = random_table(self.words, seed=1)
        out = topn_similar_questions(corpus, corpus.get("a"), 2, table)
        assert out[0][0] == "b"
        assert out[0][1] == pytest.approx(1.0)

    def test_matches_brute_force_on_toy(self):
        corpus = self.corpus()
        table = random_table(self.words, seed=2)
        for tid in ("t0", "t3"):
            query = corpus.get(tid)
            got = topn_similar_questions(corpus, query, 3, table)
            want = brute_force_topn(corpus, query, 3, table)
            assert [g[0] for g in got] == [w[0] for w in want]
            np.testing.assert_allclose([g[1] for g in got],
                                       [w[1] for w in want], atol=1e-12)

    def test_n_larger_than_corpus(self):
        corpus = self.corpus()
        table = random_table(self.words, seed=2)
        out = topn_similar_questions(corpus, corpus.get("t0"), 100, table)
        assert len(out) == 4  # everything except the query itself

    def test_same_image_records_excluded(self):
        corpus = make_corpus([
            ("a", "i1", "train", "what color is the sky", "blue"),
            ("b", "i1", "train", "what color is the sky", "red"),
            ("c", "i2", "train", "what color is the sea", "teal"),
        ])
        table = random_table(self.words + ["sea"], seed=4)
        out = topn_similar_questions(corpus, corpus.get("a"), 5, table)
        assert [tid for tid, _ in out] == ["c"]

    def test_zero_embedding_query_returns_nothing(self):
        corpus = make_corpus([
            ("a", "i1", "train", "zzzz qqqq", "x"),
            ("b", "i2", "train", "what color", "y"),
        ])
        table = random_table(self.words, seed=5)
        assert topn_similar_questions(corpus, corpus.get("a"), 3, table) == []

    def test_n_must_be_positive(self):
        corpus = self.corpus()
        table = random_table(self.words, seed=2)
        with pytest.raises(ValueError):
            QuestionIndex(corpus, table).topn(corpus.get("t0"), 0)


class TestEmbeddingTable:
    def test_text_roundtrip(self, tmp_path):
        table = random_table(["cat", "dog"], d=5, seed=9)
        path = tmp_path / "emb.txt"
        table.save_text(path)
        loaded = EmbeddingTable.load(path)
        assert loaded.d_txt == 5
        np.testing.assert_allclose(loaded.get("cat"), table.get("cat"))

    def test_cache_roundtrip(self, tmp_path):
        table = random_table(["cat", "dog"], d=5, seed=9)
        path = tmp_path / "emb.npz"
        table.save_cache(path)
        loaded = EmbeddingTable.load(path)
        np.testing.assert_array_equal(loaded.get("dog"), table.get("dog"))

    def test_dimension_mismatch_rejected(self):
        with pytest.raises(ValueError, match="dimension"):
            EmbeddingTable({"a": np.zeros(3), "b": np.zeros(4)})

    def test_bad_text_line_reports_position(self, tmp_path):
        path = tmp_path / "emb.txt"
        path.write_text("cat 1.0 2.0\ndog 1.0 oops\n")
        with pytest.raises(ValueError, match="2"):
            EmbeddingTable.load_text(path)
