"""Corpus loading, validation, filtering, and the on-disk formats.

The canonical interchange format is JSONL, one record per line:

    {"id": ..., "image_id": ..., "split": "train|val|test",
     "question": ..., "target": ..., "decoys": [...],
     "qtype": ...(optional), "human_answers": [...](optional)}

Adapters convert the dataset-native layouts ("vqa-style", "v7w-style")
into the same schema so every downstream stage sees one record shape.
Image feature vectors live in a separate binary FeatureStore file; the
vectors themselves are opaque upstream artifacts.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field

import numpy as np

from .text import normalized_text

SPLITS = ("train", "val", "test")

CORPUS_FORMATS = ("canonical-jsonl", "vqa-style", "v7w-style")

# VQA releases name their portions by COCO subtype
_VQA_SUBTYPE_SPLITS = {
    "train2014": "train", "val2014": "val",
    "test2015": "test", "test-dev2015": "test",
}


class CorpusFormatError(ValueError):
    """Raised when an input file violates its declared corpus format."""


@dataclass(eq=False)
class TripletRecord:
    """One image-question-target sample, with any pre-existing decoys."""

    triplet_id: str
    image_id: str
    split: str
    question: str
    target: str
    orig_decoys: list[str] = field(default_factory=list)
    qtype: str | None = None
    human_answers: list[str] | None = None


@dataclass(eq=False)
class Corpus:
    """An ordered collection of records plus the image grouping index."""

    records: list[TripletRecord]
    image_index: dict[str, list[str]]
    split_counts: dict[str, int]

    def __post_init__(self):
        self._by_id = {r.triplet_id: r for r in self.records}

    @classmethod
    def from_records(cls, records: list[TripletRecord]) -> "Corpus":
        image_index: dict[str, list[str]] = {}
        split_counts = {s: 0 for s in SPLITS}
        for rec in records:
            image_index.setdefault(rec.image_id, []).append(rec.triplet_id)
            split_counts[rec.split] += 1
        return cls(records, image_index, split_counts)

    def __len__(self) -> int:
        return len(self.records)

    def get(self, triplet_id: str) -> TripletRecord:
        return self._by_id[triplet_id]

    def same_image_records(self, record: TripletRecord) -> list[TripletRecord]:
        """Other records on the same image, in corpus order."""
        return [self._by_id[tid] for tid in self.image_index[record.image_id]
                if tid != record.triplet_id]


def _check_record(rec: TripletRecord, where: str) -> None:
    if rec.split not in SPLITS:
        raise CorpusFormatError(f"{where}: unknown split label {rec.split!r}")
    if not normalized_text(rec.target):
        raise CorpusFormatError(f"{where}: empty target after normalization")


def _record_from_obj(obj: dict, where: str) -> TripletRecord:
    try:
        rec = TripletRecord(
            triplet_id=str(obj["id"]),
            image_id=str(obj["image_id"]),
            split=obj["split"],
            question=obj["question"],
            target=obj["target"],
            orig_decoys=[str(d) for d in obj.get("decoys", [])],
            qtype=obj.get("qtype"),
            human_answers=([str(a) for a in obj["human_answers"]]
                           if obj.get("human_answers") is not None else None),
        )
    except KeyError as exc:
        raise CorpusFormatError(f"{where}: missing field {exc.args[0]!r}")
    _check_record(rec, where)
    return rec


def _load_canonical(path) -> list[TripletRecord]:
    records = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip():
                continue
            where = f"{path}:{lineno}"
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusFormatError(f"{where}: malformed JSON ({exc.msg})")
            records.append(_record_from_obj(obj, where))
    return records


def _load_v7w(path) -> list[TripletRecord]:
    """Visual7W-style JSON: images, each carrying a split and its QA pairs."""
    with open(path, encoding="utf-8") as f:
        doc = json.load(f)
    if "images" not in doc:
        raise CorpusFormatError(f"{path}: v7w-style file has no 'images' list")
    records = []
    for img in doc["images"]:
        image_id = str(img.get("image_id", img.get("id")))
        split = img.get("split", "train")
        for qa in img.get("qa_pairs", []):
            where = f"{path}: image {image_id}, qa {qa.get('qa_id')}"
            try:
                rec = TripletRecord(
                    triplet_id=str(qa["qa_id"]),
                    image_id=image_id,
                    split=qa.get("split", split),
                    question=qa["question"],
                    target=qa["answer"],
                    orig_decoys=[str(c) for c in qa.get("multiple_choices", [])],
                    qtype=qa.get("type"),
                )
            except KeyError as exc:
                raise CorpusFormatError(f"{where}: missing field {exc.args[0]!r}")
            _check_record(rec, where)
            records.append(rec)
    return records


def _load_vqa(path, default_split: str) -> list[TripletRecord]:
    """VQA-style JSON with 'questions' and 'annotations' joined on question_id.

    The target is the annotation's multiple_choice_answer; the remaining
    multiple_choices become decoys; the 10 per-question human answers are
    kept for the clipped evaluation metric.
    """
    with open(path, encoding="utf-8") as f:
        doc = json.load(f)
    for key in ("questions", "annotations"):
        if key not in doc:
            raise CorpusFormatError(f"{path}: vqa-style file has no {key!r} list")
    split = _VQA_SUBTYPE_SPLITS.get(doc.get("data_subtype", ""), default_split)
    ann_by_qid = {}
    for ann in doc["annotations"]:
        ann_by_qid[str(ann["question_id"])] = ann
    records = []
    for q in doc["questions"]:
        qid = str(q["question_id"])
        where = f"{path}: question {qid}"
        ann = ann_by_qid.get(qid)
        if ann is None:
            raise CorpusFormatError(f"{where}: no matching annotation")
        target = ann["multiple_choice_answer"]
        target_norm = normalized_text(target)
        decoys = [str(c) for c in q.get("multiple_choices", [])
                  if normalized_text(str(c)) != target_norm]
        raw_answers = ann.get("answers", [])
        human = [a["answer"] if isinstance(a, dict) else str(a)
                 for a in raw_answers]
        rec = TripletRecord(
            triplet_id=qid,
            image_id=str(q["image_id"]),
            split=ann.get("split", split),
            question=q["question"],
            target=target,
            orig_decoys=decoys,
            qtype=ann.get("question_type"),
            human_answers=human or None,
        )
        _check_record(rec, where)
        records.append(rec)
    return records


def load_corpus(path, format: str = "canonical-jsonl",
                default_split: str = "train") -> Corpus:
    """Load a corpus file in one of the supported formats.

    Input order is preserved. Raises CorpusFormatError on malformed
    content, duplicate triplet ids, or unknown split labels.
    """
    if format == "canonical-jsonl":
        records = _load_canonical(path)
    elif format == "v7w-style":
        records = _load_v7w(path)
    elif format == "vqa-style":
        records = _load_vqa(path, default_split)
    else:
        raise ValueError(f"unknown corpus format {format!r}; "
                         f"expected one of {CORPUS_FORMATS}")
    seen = set()
    for rec in records:
        if rec.triplet_id in seen:
            raise CorpusFormatError(
                f"{path}: duplicate triplet_id {rec.triplet_id!r}")
        seen.add(rec.triplet_id)
    return Corpus.from_records(records)


def record_to_obj(rec: TripletRecord) -> dict:
    obj = {
        "id": rec.triplet_id,
        "image_id": rec.image_id,
        "split": rec.split,
        "question": rec.question,
        "target": rec.target,
        "decoys": list(rec.orig_decoys),
    }
    if rec.qtype is not None:
        obj["qtype"] = rec.qtype
    if rec.human_answers is not None:
        obj["human_answers"] = list(rec.human_answers)
    return obj


def write_corpus(corpus: Corpus, path) -> None:
    """Write the canonical JSONL form; load_corpus(write_corpus(c)) == c."""
    with open(path, "w", encoding="utf-8") as f:
        for rec in corpus.records:
            f.write(json.dumps(record_to_obj(rec), ensure_ascii=False,
                               separators=(",", ":")) + "\n")


@dataclass
class Finding:
    record_id: str | None
    kind: str
    message: str


@dataclass
class ValidationReport:
    findings: list[Finding] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.findings

    def add(self, record_id, kind, message):
        self.findings.append(Finding(record_id, kind, message))

    def to_json(self) -> dict:
        return {
            "ok": self.ok,
            "findings": [
                {"record_id": f.record_id, "kind": f.kind, "message": f.message}
                for f in self.findings
            ],
        }


def validate(corpus: Corpus, features: "FeatureStore | None" = None
             ) -> ValidationReport:
    """Collect every invariant violation without modifying the corpus."""
    report = ValidationReport()
    for rec in corpus.records:
        target_norm = normalized_text(rec.target)
        if not target_norm:
            report.add(rec.triplet_id, "empty-target",
                       "target is empty after normalization")
        for decoy in rec.orig_decoys:
            if normalized_text(decoy) == target_norm:
                report.add(rec.triplet_id, "decoy-equals-target",
                           f"decoy {decoy!r} equals the target")
        if features is not None and rec.image_id not in features:
            report.add(rec.triplet_id, "unresolvable-image",
                       f"image_id {rec.image_id!r} not in feature store")
    # image_index must be exactly the grouping of records by image_id
    regrouped: dict[str, list[str]] = {}
    for rec in corpus.records:
        regrouped.setdefault(rec.image_id, []).append(rec.triplet_id)
    if regrouped != corpus.image_index:
        report.add(None, "image-index-mismatch",
                   "image_index does not match the grouping of records")
    return report


def filter_yes_no(corpus: Corpus) -> Corpus:
    """Corpus without the records whose normalized target is yes or no."""
    kept = [r for r in corpus.records
            if normalized_text(r.target) not in ("yes", "no")]
    return Corpus.from_records(kept)


def split_view(corpus: Corpus, split: str) -> list[TripletRecord]:
    """Records of one split, in corpus order."""
    if split not in SPLITS:
        raise ValueError(f"unknown split label {split!r}")
    return [r for r in corpus.records if r.split == split]


_FEATURE_MAGIC = b"DFFS"


class FeatureStore:
    """Dense per-image feature vectors of a fixed dimension.

    File layout: magic "DFFS", u32 d_img, then per entry a u32 id byte
    length, the utf-8 id, and d_img little-endian float32 components.
    Looking up a missing image_id raises KeyError; it is never a zero fill.
    """

    def __init__(self, vectors: dict[str, np.ndarray]):
        if not vectors:
            raise ValueError("feature store must not be empty")
        self._vectors = {}
        self.d_img = None
        for image_id, vec in vectors.items():
            arr = np.asarray(vec, dtype=np.float32)
            if arr.ndim != 1:
                raise ValueError(f"feature for {image_id!r} is not 1-d")
            if self.d_img is None:
                self.d_img = arr.shape[0]
            elif arr.shape[0] != self.d_img:
                raise ValueError(
                    f"feature for {image_id!r} has dimension {arr.shape[0]}, "
                    f"expected {self.d_img}")
            self._vectors[str(image_id)] = arr

    def __contains__(self, image_id: str) -> bool:
        return image_id in self._vectors

    def __len__(self) -> int:
        return len(self._vectors)

    def ids(self) -> list[str]:
        return list(self._vectors)

    def get(self, image_id: str) -> np.ndarray:
        try:
            return self._vectors[image_id]
        except KeyError:
            raise KeyError(f"image_id {image_id!r} not in feature store")

    def save(self, path) -> None:
        with open(path, "wb") as f:
            f.write(_FEATURE_MAGIC)
            f.write(struct.pack("<I", self.d_img))
            for image_id, vec in self._vectors.items():
                raw = image_id.encode("utf-8")
                f.write(struct.pack("<I", len(raw)))
                f.write(raw)
                f.write(vec.astype("<f4").tobytes())

    @classmethod
    def load(cls, path) -> "FeatureStore":
        with open(path, "rb") as f:
            magic = f.read(4)
            if magic != _FEATURE_MAGIC:
                raise ValueError(f"{path}: not a feature store file")
            (d_img,) = struct.unpack("<I", f.read(4))
            vectors = {}
            while True:
                head = f.read(4)
                if not head:
                    break
                (idlen,) = struct.unpack("<I", head)
                image_id = f.read(idlen).decode("utf-8")
                buf = f.read(4 * d_img)
                if len(buf) != 4 * d_img:
                    raise ValueError(f"{path}: truncated entry for {image_id!r}")
                vectors[image_id] = np.frombuffer(buf, dtype="<f4").copy()
        return cls(vectors)
