import json

import numpy as np
import pytest

from decoyforge import (
    Corpus,
    CorpusFormatError,
    FeatureStore,
    TripletRecord,
    filter_yes_no,
    load_corpus,
    split_view,
    validate,
    write_corpus,
)

from conftest import make_corpus


def write_jsonl(path, objs):
    with open(path, "w", encoding="utf-8") as f:
        for obj in objs:
            f.write(json.dumps(obj) + "\n")


def canonical_rows():
    return [
        {"id": "t1", "image_id": "i1", "split": "train",
         "question": "what is it", "target": "cat", "decoys": ["dog", "rug"]},
        {"id": "t2", "image_id": "i1", "split": "val",
         "question": "what color", "target": "red", "decoys": []},
        {"id": "t3", "image_id": "i2", "split": "test",
         "question": "how many", "target": "2", "decoys": ["3"],
         "qtype": "counting", "human_answers": ["2", "two", "2"]},
    ]


class TestLoadCanonical:
    def test_three_lines(self, tmp_path):
        path = tmp_path / "c.jsonl"
        write_jsonl(path, canonical_rows())
        corpus = load_corpus(path)
        assert len(corpus) == 3
        assert [r.triplet_id for r in corpus.records] == ["t1", "t2", "t3"]
        assert corpus.get("t3").human_answers == ["2", "two", "2"]
        assert corpus.get("t3").qtype == "counting"

    def test_duplicate_id_names_the_id(self, tmp_path):
        rows = canonical_rows()
        rows[2]["id"] = "t1"
        path = tmp_path / "c.jsonl"
        write_jsonl(path, rows)
        with pytest.raises(CorpusFormatError, match="t1"):
            load_corpus(path)

    def test_malformed_line_reports_line_number(self, tmp_path):
        path = tmp_path / "c.jsonl"
        path.write_text('{"id": "a", "image_id": "i", "split": "train", '
                        '"question": "q", "target": "t", "decoys": []}\n'
                        "{not json}\n")
        with pytest.raises(CorpusFormatError, match=":2"):
            load_corpus(path)

    def test_unknown_split_label(self, tmp_path):
        rows = canonical_rows()
        rows[0]["split"] = "dev"
        path = tmp_path / "c.jsonl"
        write_jsonl(path, rows)
        with pytest.raises(CorpusFormatError, match="dev"):
            load_corpus(path)

    def test_missing_field(self, tmp_path):
        path = tmp_path / "c.jsonl"
        write_jsonl(path, [{"id": "a", "image_id": "i", "split": "train",
                            "question": "q"}])
        with pytest.raises(CorpusFormatError, match="target"):
            load_corpus(path)

    def test_unknown_format_rejected(self, tmp_path):
        with pytest.raises(ValueError, match="format"):
            load_corpus(tmp_path / "x", format="tsv")


class TestAdapters:
    def test_v7w_style_three_human_decoys(self, tmp_path):
        doc = {"images": [{
            "image_id": 42, "split": "val",
            "qa_pairs": [{
                "qa_id": 7, "question": "What animal is running?",
                "answer": "dog", "multiple_choices": ["cat", "lion", "tiger"],
                "type": "what",
            }],
        }]}
        path = tmp_path / "v7w.json"
        path.write_text(json.dumps(doc))
        corpus = load_corpus(path, "v7w-style")
        rec = corpus.get("7")
        assert rec.orig_decoys == ["cat", "lion", "tiger"]
        assert rec.image_id == "42"
        assert rec.split == "val"
        assert rec.qtype == "what"

    def test_vqa_style_join_and_split_mapping(self, tmp_path):
        doc = {
            "data_subtype": "val2014",
            "questions": [{
                "question_id": 11, "image_id": 9,
                "question": "Is it raining?",
                "multiple_choices": ["yes", "no", "Yes", "maybe"],
            }],
            "annotations": [{
                "question_id": 11, "multiple_choice_answer": "yes",
                "answers": [{"answer": "yes"}, {"answer": "no"}],
                "question_type": "is it",
            }],
        }
        path = tmp_path / "vqa.json"
        path.write_text(json.dumps(doc))
        corpus = load_corpus(path, "vqa-style")
        rec = corpus.get("11")
        assert rec.split == "val"
        assert rec.target == "yes"
        # every choice equal to the target (after normalization) is dropped
        assert rec.orig_decoys == ["no", "maybe"]
        assert rec.human_answers == ["yes", "no"]

    def test_vqa_missing_annotation(self, tmp_path):
        doc = {"questions": [{"question_id": 1, "image_id": 1,
                              "question": "q", "multiple_choices": []}],
               "annotations": []}
        path = tmp_path / "vqa.json"
        path.write_text(json.dumps(doc))
        with pytest.raises(CorpusFormatError, match="annotation"):
            load_corpus(path, "vqa-style")


class TestRoundTrip:
    def test_write_then_load_is_identity(self, tmp_path):
        path = tmp_path / "c.jsonl"
        write_jsonl(path, canonical_rows())
        corpus = load_corpus(path)
        out = tmp_path / "out.jsonl"
        write_corpus(corpus, out)
        again = load_corpus(out)
        assert len(again) == len(corpus)
        for a, b in zip(corpus.records, again.records):
            assert (a.triplet_id, a.image_id, a.split, a.question, a.target,
                    a.orig_decoys, a.qtype, a.human_answers) == \
                   (b.triplet_id, b.image_id, b.split, b.question, b.target,
                    b.orig_decoys, b.qtype, b.human_answers)
        assert again.image_index == corpus.image_index
        assert again.split_counts == corpus.split_counts


class TestValidate:
    def test_clean_corpus_empty_report(self):
        corpus = make_corpus([("a", "i1", "train", "q", "cat", ["dog"])])
        assert validate(corpus).ok

    def test_decoy_equals_target(self):
        corpus = make_corpus([("a", "i1", "train", "q", "cat", ["Cat!"])])
        report = validate(corpus)
        assert len(report.findings) == 1
        assert report.findings[0].kind == "decoy-equals-target"

    def test_missing_image_feature(self):
        corpus = make_corpus([("a", "i1", "train", "q", "cat"),
                              ("b", "i2", "train", "q", "dog")])
        features = FeatureStore({"i1": np.zeros(4)})
        report = validate(corpus, features)
        kinds = [(f.record_id, f.kind) for f in report.findings]
        assert kinds == [("b", "unresolvable-image")]

    def test_empty_target_reported(self):
        corpus = Corpus.from_records([TripletRecord("a", "i", "train", "q", "?!")])
        report = validate(corpus)
        assert report.findings[0].kind == "empty-target"

    def test_report_json_shape(self):
        corpus = make_corpus([("a", "i1", "train", "q", "cat", ["cat"])])
        doc = validate(corpus).to_json()
        assert doc["ok"] is False
        assert doc["findings"][0]["record_id"] == "a"


class TestFilterYesNo:
    def corpus(self):
        return make_corpus([
            ("a", "i1", "train", "q", "Yes"),
            ("b", "i1", "train", "q", "no!"),
            ("c", "i2", "train", "q", "yellow"),
        ])

    def test_removes_yes_and_no_targets(self):
        out = filter_yes_no(self.corpus())
        assert [r.triplet_id for r in out.records] == ["c"]

    def test_original_untouched_and_size_arithmetic(self):
        corpus = self.corpus()
        out = filter_yes_no(corpus)
        assert len(corpus) == 3
        assert len(out) + (len(corpus) - len(out)) == len(corpus)
        assert len(corpus) - len(out) == 2


class TestSplitView:
    def test_split_selection(self):
        corpus = make_corpus([
            ("a", "i1", "train", "q", "x"),
            ("b", "i2", "train", "q", "y"),
            ("c", "i3", "test", "q", "z"),
        ])
        assert [r.triplet_id for r in split_view(corpus, "train")] == ["a", "b"]
        assert split_view(corpus, "val") == []

    def test_unknown_split_rejected(self):
        corpus = make_corpus([("a", "i1", "train", "q", "x")])
        with pytest.raises(ValueError, match="dev"):
            split_view(corpus, "dev")


class TestImageIndex:
    def test_index_is_exactly_the_grouping(self):
        rng = np.random.default_rng(5)
        rows = [(f"t{i}", f"img{rng.integers(6)}", "train", "q", "x")
                for i in range(40)]
        corpus = make_corpus(rows)
        regrouped = {}
        for rec in corpus.records:
            regrouped.setdefault(rec.image_id, []).append(rec.triplet_id)
        assert corpus.image_index == regrouped
        assert all(rec.image_id in corpus.image_index
                   for rec in corpus.records)

    def test_same_image_records(self):
        corpus = make_corpus([
            ("a", "i1", "train", "q", "x"),
            ("b", "i1", "train", "q", "y"),
            ("c", "i2", "train", "q", "z"),
        ])
        assert [r.triplet_id for r in
                corpus.same_image_records(corpus.get("a"))] == ["b"]


class TestFeatureStore:
    def test_roundtrip(self, tmp_path):
        rng = np.random.default_rng(0)
        store = FeatureStore({f"img{i}": rng.normal(size=8).astype(np.float32)
                              for i in range(5)})
        path = tmp_path / "f.dffs"
        store.save(path)
        loaded = FeatureStore.load(path)
        assert loaded.d_img == 8
        assert loaded.ids() == store.ids()
        for image_id in store.ids():
            np.testing.assert_array_equal(loaded.get(image_id),
                                          store.get(image_id))

    def test_missing_id_is_an_error_not_a_zero(self):
        store = FeatureStore({"a": np.zeros(4)})
        with pytest.raises(KeyError, match="nope"):
            store.get("nope")

    def test_dimension_mismatch_rejected(self):
        with pytest.raises(ValueError, match="dimension"):
            FeatureStore({"a": np.zeros(4), "b": np.zeros(5)})

    def test_magic_bytes_checked(self, tmp_path):
        path = tmp_path / "junk"
        path.write_bytes(b"JUNKxxxx")
        with pytest.raises(ValueError, match="feature store"):
            FeatureStore.load(path)

    def test_truncated_file_detected(self, tmp_path):
        store = FeatureStore({"a": np.zeros(4, dtype=np.float32)})
        path = tmp_path / "f.dffs"
        store.save(path)
        raw = path.read_bytes()
        path.write_bytes(raw[:-3])
        with pytest.raises(ValueError, match="truncated"):
            FeatureStore.load(path)
