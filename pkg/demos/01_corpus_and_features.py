"""Corpus basics: the canonical JSONL format, validation, filtering,
and the binary image-feature store.

Builds a small corpus by hand, writes it to disk, loads it back, and
walks through the checks a real dataset would go through before any
decoy work starts.
"""

import tempfile
from pathlib import Path

import numpy as np

from decoyforge import (
    Corpus,
    FeatureStore,
    TripletRecord,
    filter_yes_no,
    load_corpus,
    split_view,
    validate,
    write_corpus,
)

workdir = Path(tempfile.mkdtemp(prefix="decoyforge_demo_"))

# ---------------------------------------------------------------------
# A corpus is a list of image-question-target records. Decoys may come
# with the dataset (here: human-written ones) or be generated later.
records = [
    TripletRecord("qa-001", "img-7", "train",
                  "What animal is running?", "dog",
                  orig_decoys=["cat", "lion", "tiger"]),
    TripletRecord("qa-002", "img-7", "train",
                  "What color is the frisbee?", "red",
                  orig_decoys=["blue", "green", "yellow"]),
    TripletRecord("qa-003", "img-9", "val",
                  "Is it raining?", "yes",
                  orig_decoys=["no", "maybe", "yes!"]),  # note the dup
    TripletRecord("qa-004", "img-9", "test",
                  "How many 2 wheelers?", "2",
                  orig_decoys=["3", "4", "5"]),
]
corpus = Corpus.from_records(records)
print(f"built a corpus of {len(corpus)} records over "
      f"{len(corpus.image_index)} images")

path = workdir / "corpus.jsonl"
write_corpus(corpus, path)
print(f"canonical JSONL written to {path}:")
print(path.read_text().splitlines()[0])

corpus = load_corpus(path)

# ---------------------------------------------------------------------
# Validation reports problems instead of raising: here the third record
# carries a decoy that equals its target once normalized.
report = validate(corpus)
print(f"\nvalidation findings: {len(report.findings)}")
for finding in report.findings:
    print(f"  {finding.record_id}: {finding.kind} ({finding.message})")

# ---------------------------------------------------------------------
# Yes/No questions admit only one plausible decoy, so analyses often
# exclude them.
no_yesno = filter_yes_no(corpus)
print(f"\nafter the yes/no filter: {len(no_yesno)} records "
      f"(removed {len(corpus) - len(no_yesno)})")
print("train split:", [r.triplet_id for r in split_view(no_yesno, "train")])

# ---------------------------------------------------------------------
# Image features are opaque dense vectors in a small binary store format;
# a missing image is an error, never a silent zero vector.
rng = np.random.default_rng(0)
store = FeatureStore({img: rng.normal(size=16) for img in corpus.image_index})
feat_path = workdir / "features.dffs"
store.save(feat_path)
store = FeatureStore.load(feat_path)
print(f"\nfeature store: {len(store)} images, {store.d_img} dims each")
try:
    store.get("img-404")
except KeyError as exc:
    print(f"lookup of unknown image raises: {exc}")
