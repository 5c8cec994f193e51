import os

import numpy as np
import pytest

from decoyforge import (
    Taxonomy,
    TaxonomyError,
    load_taxonomy,
    wup_sequence,
    wup_synset,
    wup_word,
)
from decoyforge.wordnet import ADJ, NOUN, VIRTUAL_ROOT, Synset

from conftest import DATA_DIR


def syn(tax, word, pos=None):
    out = [s for s in tax.synsets_for_word(word)
           if pos is None or s.pos == pos]
    assert out, f"no synset for {word}"
    return out[0]


class TestEdgeListParsing:
    def test_toy_depths(self, toy_tax):
        # virtual root 1, root 2, animal 3, cat/dog 4
        assert toy_tax.synsets[VIRTUAL_ROOT].depth == 1
        assert toy_tax.synsets["root"].depth == 2
        assert toy_tax.synsets["animal"].depth == 3
        assert toy_tax.synsets["cat"].depth == 4
        assert toy_tax.synsets["dog"].depth == 4
        assert toy_tax.synsets["adj:cute"].depth == 2

    def test_depth_recurrence(self, toy_tax):
        for s in toy_tax.synsets.values():
            if s.id == VIRTUAL_ROOT:
                continue
            parents = [toy_tax.synsets[p] for p in s.hypernyms]
            assert s.depth == 1 + min(p.depth for p in parents)

    def test_lemma_index_covers_noun_and_adj_only(self, toy_tax):
        assert "cat" in toy_tax.lemma_index
        assert "cute" in toy_tax.lemma_index
        assert VIRTUAL_ROOT not in toy_tax.lemma_index

    def test_cycle_detected(self, tmp_path):
        path = tmp_path / "cyc.tsv"
        path.write_text("a\tNOUN\ta\tb\nb\tNOUN\tb\ta\n")
        with pytest.raises(TaxonomyError, match="cycle"):
            load_taxonomy(path, "edge-list")

    def test_dangling_parent_detected(self, tmp_path):
        path = tmp_path / "dang.tsv"
        path.write_text("a\tNOUN\ta\tnowhere\n")
        with pytest.raises(TaxonomyError, match="nowhere"):
            load_taxonomy(path, "edge-list")

    def test_duplicate_synset_id(self, tmp_path):
        path = tmp_path / "dup.tsv"
        path.write_text("a\tNOUN\ta\t\na\tNOUN\taa\t\n")
        with pytest.raises(TaxonomyError, match="duplicate"):
            load_taxonomy(path, "edge-list")

    def test_unknown_pos(self, tmp_path):
        path = tmp_path / "pos.tsv"
        path.write_text("a\tVERB\ta\t\n")
        with pytest.raises(TaxonomyError, match="pos"):
            load_taxonomy(path, "edge-list")

    def test_unknown_format(self, tmp_path):
        with pytest.raises(ValueError, match="format"):
            load_taxonomy(tmp_path, "xml")


class TestWupSynsetToy:
    # hand-evaluated on the toy graph: the subsumer (animal) spans 2
    # nodes from the root, cat and dog sit one hop below it

    def test_identity(self, toy_tax):
        cat = toy_tax.synsets["cat"]
        assert wup_synset(cat, cat, toy_tax) == 1.0

    def test_siblings(self, toy_tax):
        cat, dog = toy_tax.synsets["cat"], toy_tax.synsets["dog"]
        assert wup_synset(cat, dog, toy_tax) == pytest.approx(2 * 2 / (3 + 3))

    def test_ancestor(self, toy_tax):
        cat, animal = toy_tax.synsets["cat"], toy_tax.synsets["animal"]
        assert wup_synset(cat, animal, toy_tax) == pytest.approx(2 * 2 / (3 + 2))

    def test_cross_pos_positive_via_virtual_root(self, toy_tax):
        cat, cute = toy_tax.synsets["cat"], toy_tax.synsets["adj:cute"]
        got = wup_synset(cat, cute, toy_tax)
        assert got == pytest.approx(2 / (2 + 4))
        assert got > 0.0

    def test_symmetry_and_range(self, toy_tax):
        ids = [s for s in toy_tax.synsets if s != VIRTUAL_ROOT]
        for a in ids:
            for b in ids:
                sa, sb = toy_tax.synsets[a], toy_tax.synsets[b]
                ab = wup_synset(sa, sb, toy_tax)
                assert ab == wup_synset(sb, sa, toy_tax)
                assert 0.0 < ab <= 1.0
                if a != b:
                    assert ab < 1.0


class TestWordNetDb:
    def test_lemma_index_matches_distributed_index_file(self, wn31):
        # the distributed index.noun is the oracle for which synsets a
        # lemma resolves to
        path = os.environ.get("DECOYFORGE_WORDNET_DICT",
                              str(DATA_DIR / "wordnet31"))
        index_file = os.path.join(path, "index.noun")
        want = None
        with open(index_file, encoding="utf-8") as f:
            for line in f:
                if line.startswith("cat "):
                    parts = line.split()
                    want = {off + "-n" for off in parts[-int(parts[2]):]}
                    break
        assert want, "index.noun has no entry for cat"
        got = {s.id for s in wn31.synsets_for_word("cat") if s.pos == NOUN}
        assert got == want
        assert len(got) >= 1

    def test_missing_data_noun_rejected(self, tmp_path):
        with pytest.raises(TaxonomyError, match="data.noun"):
            load_taxonomy(tmp_path, "wordnet-db")

    def test_adjectives_attached_under_virtual_root(self, wn31):
        cute = [s for s in wn31.synsets_for_word("cute") if s.pos == ADJ]
        assert cute
        assert all(s.hypernyms == [VIRTUAL_ROOT] for s in cute)
        assert all(s.depth == 2 for s in cute)

    def test_depth_recurrence_holds_everywhere(self, wn31):
        for s in wn31.synsets.values():
            if s.id == VIRTUAL_ROOT:
                continue
            assert s.depth == 1 + min(wn31.synsets[p].depth
                                      for p in s.hypernyms)


class TestWupWord:
    def test_cat_dog_anchor(self, wn31):
        assert wup_word("cat", "dog", wn31) == pytest.approx(0.857, abs=0.005)

    def test_identity_with_noun_synsets(self, wn31):
        assert wup_word("cat", "cat", wn31) == 1.0

    def test_fallback_equality_without_synsets(self, wn31):
        assert wup_word("zzzz", "zzzz", wn31) == 1.0
        assert wup_word("zzzz", "Zzzz!", wn31) == 1.0
        assert wup_word("zzzz", "cat", wn31) == 0.0

    def test_distinct_adjective_synsets_score_half(self, wn31):
        # both words are adjective-only; distinct clusters meet at the
        # virtual root
        assert wup_word("cute", "rainy", wn31) == pytest.approx(0.5)

    def test_symmetric(self, wn31):
        words = ["cat", "dog", "lady", "woman", "red", "blue", "train",
                 "cute", "zzzz", "park"]
        for w1 in words:
            for w2 in words:
                assert wup_word(w1, w2, wn31) == wup_word(w2, w1, wn31)

    def test_memoized_equals_fresh_recomputation(self, wn31):
        rng = np.random.default_rng(13)
        words = sorted(wn31.lemma_index)
        pairs = [(words[rng.integers(len(words))],
                  words[rng.integers(len(words))]) for _ in range(50)]
        warm = [wup_word(w1, w2, wn31) for w1, w2 in pairs]
        fresh_tax = load_taxonomy(
            os.environ.get("DECOYFORGE_WORDNET_DICT",
                           str(DATA_DIR / "wordnet31")), "wordnet-db")
        cold = [wup_word(w1, w2, fresh_tax) for w1, w2 in pairs]
        np.testing.assert_array_equal(warm, cold)

    def test_cache_is_bounded(self):
        tax = Taxonomy([Synset("a", NOUN, ["a"], []),
                        Synset("b", NOUN, ["b"], [])], cache_size=4)
        for w1 in "abcd":
            for w2 in "efgh":
                wup_word(w1, w2, tax)
        assert len(tax._word_cache) <= 4

    @pytest.mark.xfail(
        strict=True,
        reason="max over all sense pairs measures 0.947: the polite-name "
               "sense of 'lady' is a direct hyponym of woman.n.01, so the "
               "historical 0.632 reference corresponds to a different "
               "sense pairing (lady#1 x woman#2 scores 0.632 here)")
    def test_lady_woman_loose_anchor(self, wn31):
        assert wup_word("lady", "woman", wn31) == pytest.approx(0.632, abs=0.05)


class TestWupSequence:
    def test_phrase_containing_the_other_scores_one(self, wn31):
        assert wup_sequence(["a", "cute", "cat"], ["cat"], wn31) == 1.0

    def test_identical_sequences(self, wn31):
        assert wup_sequence(["red", "car"], ["red", "car"], wn31) == 1.0

    def test_singletons_reduce_to_word_score(self, wn31):
        assert wup_sequence(["cat"], ["dog"], wn31) == \
            wup_word("cat", "dog", wn31)

    def test_empty_sequence_scores_zero(self, wn31):
        assert wup_sequence([], ["cat"], wn31) == 0.0
        assert wup_sequence(["cat"], [], wn31) == 0.0

    def test_subset_always_scores_one(self, wn31):
        rng = np.random.default_rng(3)
        words = ["cat", "dog", "red", "train", "park", "woman", "tree"]
        for _ in range(20):
            size = rng.integers(2, 6)
            s1 = [words[i] for i in rng.integers(0, len(words), size)]
            keep = sorted(set(rng.integers(0, len(s1), 2)))
            s2 = [s1[i] for i in keep]
            assert wup_sequence(s1, s2, wn31) == 1.0

    def test_symmetric(self, wn31):
        s1 = ["red", "train"]
        s2 = ["blue", "boat", "station"]
        assert wup_sequence(s1, s2, wn31) == wup_sequence(s2, s1, wn31)

    def test_in_unit_interval(self, wn31):
        rng = np.random.default_rng(4)
        words = sorted(wn31.lemma_index)[:200]
        for _ in range(50):
            s1 = [words[i] for i in rng.integers(0, len(words), 3)]
            s2 = [words[i] for i in rng.integers(0, len(words), 3)]
            assert 0.0 <= wup_sequence(s1, s2, wn31) <= 1.0
