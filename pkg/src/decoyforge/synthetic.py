"""Synthetic desk-scale QA worlds with controllable shortcut structure.

Each generated image carries one fact per question type (its color, the
animal in it, and so on); every fact yields one question-answer pair.
The question types use disjoint answer vocabularies, and each type's
question keyword gets a high-magnitude embedding so question similarity
clusters by type. That plants both signals the generation procedures
rely on: same-image targets are type-incompatible with the question
(image alone cannot resolve them), while similar-question targets are
type-compatible (the question alone cannot resolve them).

With ``biased_decoys=True`` the original decoys are drawn from a junk
vocabulary disjoint from all targets, reproducing the answer-frequency
shortcut: a model that merely memorizes which strings ever serve as
targets can pick the right answer without the image or the question.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .corpus import Corpus, FeatureStore, TripletRecord
from .text import EmbeddingTable, normalize
from .wordnet import Taxonomy, load_taxonomy

QUESTION_TYPES = [
    ("color", ["red", "blue", "green", "yellow", "black", "white",
               "brown", "purple", "orange", "pink"]),
    ("animal", ["cat", "dog", "horse", "cow", "sheep", "elephant",
                "bear", "zebra", "rabbit", "mouse"]),
    ("vehicle", ["car", "train", "bus", "truck", "bicycle", "boat",
                 "airplane", "van", "scooter", "tram"]),
    ("material", ["wood", "metal", "glass", "plastic", "stone", "brick",
                  "leather", "cloth", "paper", "rubber"]),
    ("weather", ["sunny", "rainy", "cloudy", "foggy", "snowy", "windy",
                 "stormy", "hazy", "humid", "frosty"]),
    ("place", ["park", "beach", "kitchen", "street", "garden", "office",
               "bathroom", "garage", "bedroom", "station"]),
]

JUNK_VOCAB = [
    "pencil", "notebook", "ladder", "button", "hammer", "sponge",
    "kettle", "wallet", "curtain", "candle", "magnet", "funnel",
    "ribbon", "bucket", "saddle", "whistle", "anchor", "barrel",
    "basket", "blanket", "cabinet", "cushion", "drawer", "sticker",
    "folder", "stapler", "eraser", "crayon", "thimble", "spatula",
]

_TEMPLATES = [
    "what {kw} is seen in the picture",
    "what {kw} is shown",
    "which {kw} appears here",
    "what {kw} is in the photo",
    "which {kw} is visible",
]

# quiet per-record style words; they diversify question embeddings so the
# similarity ranking differs record to record instead of collapsing onto
# a handful of identical questions
_STYLE_WORDS = [
    "actually", "broadly", "casually", "clearly", "closely", "commonly",
    "directly", "earlier", "easily", "evidently", "exactly", "fairly",
    "freshly", "generally", "gently", "ideally", "indeed", "initially",
    "largely", "lately", "likely", "loosely", "mainly", "mostly",
    "namely", "nearly", "notably", "obviously", "openly", "overall",
    "partly", "plainly", "possibly", "presently", "quickly", "rather",
    "roughly", "simply", "slightly", "somewhat", "surely", "typically",
]


@dataclass(eq=False)
class SyntheticWorld:
    """A generated corpus plus every side input the pipeline needs."""

    corpus: Corpus
    table: EmbeddingTable
    taxonomy: Taxonomy
    features: FeatureStore
    taxonomy_edges: list[str]

    def write_inputs(self, directory) -> dict:
        """Materialize corpus/embeddings/taxonomy/features files for the
        command-line pipeline; returns the path map."""
        import os
        from .corpus import write_corpus
        paths = {
            "corpus": os.path.join(directory, "corpus.jsonl"),
            "embeddings": os.path.join(directory, "embeddings.txt"),
            "taxonomy": os.path.join(directory, "taxonomy.tsv"),
            "features": os.path.join(directory, "features.dffs"),
        }
        write_corpus(self.corpus, paths["corpus"])
        self.table.save_text(paths["embeddings"])
        with open(paths["taxonomy"], "w", encoding="utf-8") as f:
            f.write("\n".join(self.taxonomy_edges) + "\n")
        self.features.save(paths["features"])
        return paths


def make_embedding_table(words, d_txt: int = 64, seed: int = 0,
                         scales: dict | None = None) -> EmbeddingTable:
    """Random unit vectors, optionally rescaled per word."""
    rng = np.random.default_rng([seed, 0xE5])
    scales = scales or {}
    vectors = {}
    for word in words:
        vec = rng.normal(size=d_txt)
        vec /= np.linalg.norm(vec)
        vectors[word] = vec * scales.get(word, 1.0)
    return EmbeddingTable(vectors)


def _taxonomy_edges(types) -> list[str]:
    lines = ["thing\tNOUN\tthing\t"]
    for kw, vocab in types:
        lines.append(f"type:{kw}\tNOUN\t{kw}\tthing")
        for word in vocab:
            lines.append(f"{kw}:{word}\tNOUN\t{word}\ttype:{kw}")
    return lines


def make_planted_corpus(n_images: int = 850, seed: int = 7,
                        biased_decoys: bool = True,
                        d_txt: int = 64,
                        feature_noise: float = 0.05,
                        splits: tuple = (0.7, 0.15, 0.15)) -> SyntheticWorld:
    """Build a planted-signal world of ``6 * n_images`` records.

    Images are split 70/15/15 into train/val/test by default; records
    inherit their image's split so no image leaks across splits.
    """
    import tempfile, os
    rng = np.random.default_rng([seed, 0xC0])
    types = QUESTION_TYPES

    # embeddings: dominant keywords, unit answers, quiet filler words
    filler = sorted({w for t in _TEMPLATES
                     for w in normalize(t.format(kw="x"))} - {"x"})
    filler += _STYLE_WORDS
    scales = {w: 0.25 for w in filler}
    for kw, _ in types:
        scales[kw] = 4.0
    vocab_words = [w for _, vocab in types for w in vocab]
    table = make_embedding_table(
        filler + [kw for kw, _ in types] + vocab_words + JUNK_VOCAB,
        d_txt=d_txt, seed=seed, scales=scales)

    edges = _taxonomy_edges(types)
    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, "taxonomy.tsv")
        with open(path, "w", encoding="utf-8") as f:
            f.write("\n".join(edges) + "\n")
        taxonomy = load_taxonomy(path, "edge-list")

    n_train = int(splits[0] * n_images)
    n_val = int(splits[1] * n_images)
    # balanced fact assignment: within each type every answer serves as
    # target equally often (+-1), so answer frequency itself carries no
    # signal and neutrality of the generated decoys is measurable
    fact_plan = {}
    for kw, vocab in types:
        reps = -(-n_images // len(vocab))
        seq = np.tile(np.arange(len(vocab)), reps)[:n_images]
        fact_plan[kw] = [vocab[i] for i in rng.permutation(seq)]
    records = []
    feature_vecs = {}
    block = max(len(vocab) for _, vocab in types)
    for img in range(n_images):
        image_id = f"img{img:05d}"
        if img < n_train:
            split = "train"
        elif img < n_train + n_val:
            split = "val"
        else:
            split = "test"
        facts = {kw: fact_plan[kw][img] for kw, _ in types}
        vec = np.zeros(block * len(types), dtype=np.float64)
        for t, (kw, vocab) in enumerate(types):
            vec[t * block + vocab.index(facts[kw])] = 1.0
        if feature_noise:
            vec = vec + rng.normal(0.0, feature_noise, size=vec.shape)
        feature_vecs[image_id] = vec
        for t, (kw, vocab) in enumerate(types):
            template = _TEMPLATES[rng.integers(len(_TEMPLATES))]
            style = rng.choice(len(_STYLE_WORDS), size=3, replace=False)
            question = (template.format(kw=kw) + " "
                        + " ".join(_STYLE_WORDS[i] for i in style))
            if biased_decoys:
                picks = rng.choice(len(JUNK_VOCAB), size=3, replace=False)
                decoys = [JUNK_VOCAB[i] for i in picks]
            else:
                decoys = []
            records.append(TripletRecord(
                triplet_id=f"q{img:05d}-{kw}",
                image_id=image_id,
                split=split,
                question=question,
                target=facts[kw],
                orig_decoys=decoys,
                qtype=kw,
            ))
    corpus = Corpus.from_records(records)
    features = FeatureStore(feature_vecs)
    return SyntheticWorld(corpus=corpus, table=table, taxonomy=taxonomy,
                          features=features, taxonomy_edges=edges)
