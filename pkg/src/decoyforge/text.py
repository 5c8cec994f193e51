"""Text normalization, averaged word-vector sentence embeddings, and
brute-force cosine retrieval over corpus questions."""

from __future__ import annotations

import string
from dataclasses import dataclass

import numpy as np

_NUMBER_WORDS = {
    "0": "zero", "1": "one", "2": "two", "3": "three", "4": "four",
    "5": "five", "6": "six", "7": "seven", "8": "eight", "9": "nine",
    "10": "ten",
}

_PUNCT = string.punctuation


def normalize(text: str) -> list[str]:
    """Tokenize raw text for comparison and embedding.

    Lowercases, splits on whitespace, strips leading/trailing punctuation
    from each token, rewrites standalone integers 0-10 to their English
    words, and drops empty tokens.
    """
    tokens = []
    for tok in text.lower().split():
        tok = tok.strip(_PUNCT)
        if not tok:
            continue
        if tok.isdigit() and int(tok) <= 10:
            tok = _NUMBER_WORDS[str(int(tok))]
        tokens.append(tok)
    return tokens


def normalized_text(text: str) -> str:
    """Canonical comparison form: normalized tokens joined by single spaces."""
    return " ".join(normalize(text))


def squashed_text(text: str) -> str:
    """Normalized form with all whitespace removed (for containment checks)."""
    return "".join(normalize(text))


@dataclass
class SentenceVector:
    """Mean word vector of the in-vocabulary tokens of a sentence.

    ``in_vocab_count`` is 0 exactly when no token was found in the table,
    in which case ``values`` is the zero vector.
    """

    values: np.ndarray
    in_vocab_count: int

    @property
    def is_zero(self) -> bool:
        return self.in_vocab_count == 0


class EmbeddingTable:
    """Immutable word -> dense vector lookup with a fixed dimension."""

    def __init__(self, vectors: dict[str, np.ndarray]):
        if not vectors:
            raise ValueError("embedding table must not be empty")
        self._vectors = {}
        self.d_txt = None
        for word, vec in vectors.items():
            arr = np.asarray(vec, dtype=np.float64)
            if arr.ndim != 1:
                raise ValueError(f"vector for {word!r} is not 1-d")
            if self.d_txt is None:
                self.d_txt = arr.shape[0]
            elif arr.shape[0] != self.d_txt:
                raise ValueError(
                    f"vector for {word!r} has dimension {arr.shape[0]}, "
                    f"expected {self.d_txt}")
            self._vectors[word] = arr
        if self.d_txt <= 0:
            raise ValueError("embedding dimension must be positive")

    def __contains__(self, word: str) -> bool:
        return word in self._vectors

    def __len__(self) -> int:
        return len(self._vectors)

    def get(self, word: str) -> np.ndarray | None:
        return self._vectors.get(word)

    def words(self) -> list[str]:
        return list(self._vectors)

    @classmethod
    def load_text(cls, path) -> "EmbeddingTable":
        """Read the interchange format: one ``word v1 ... vD`` line per word."""
        vectors = {}
        with open(path, encoding="utf-8") as f:
            for lineno, line in enumerate(f, start=1):
                parts = line.rstrip("\n").split()
                if not parts:
                    continue
                if len(parts) < 2:
                    raise ValueError(f"{path}:{lineno}: no vector components")
                try:
                    vec = np.array([float(x) for x in parts[1:]])
                except ValueError as exc:
                    raise ValueError(f"{path}:{lineno}: bad component ({exc})")
                vectors[parts[0]] = vec
        return cls(vectors)

    def save_text(self, path) -> None:
        with open(path, "w", encoding="utf-8") as f:
            for word, vec in self._vectors.items():
                comps = " ".join(repr(float(x)) for x in vec)
                f.write(f"{word} {comps}\n")

    def save_cache(self, path) -> None:
        """Binary cache of the table (npz); faster to reload than the text form."""
        words = np.array(list(self._vectors), dtype=object)
        matrix = np.stack([self._vectors[w] for w in words])
        np.savez_compressed(path, words=words, matrix=matrix)

    @classmethod
    def load_cache(cls, path) -> "EmbeddingTable":
        data = np.load(path, allow_pickle=True)
        words = data["words"]
        matrix = data["matrix"]
        return cls({str(w): matrix[i] for i, w in enumerate(words)})

    @classmethod
    def load(cls, path) -> "EmbeddingTable":
        """Load either format; ``.npz`` is treated as a binary cache."""
        if str(path).endswith(".npz"):
            return cls.load_cache(path)
        return cls.load_text(path)


def embed_avg(tokens: list[str], table: EmbeddingTable) -> SentenceVector:
    """Average the vectors of in-vocabulary tokens.

    Out-of-vocabulary tokens are skipped, not averaged in as zeros; an
    all-OOV or empty input yields the zero vector with count 0.
    """
    found = [table.get(t) for t in tokens]
    found = [v for v in found if v is not None]
    if not found:
        return SentenceVector(np.zeros(table.d_txt), 0)
    return SentenceVector(np.mean(found, axis=0), len(found))


def cosine(u: np.ndarray, v: np.ndarray) -> float:
    """Cosine similarity in [-1, 1]; 0 if either vector has zero norm."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise ValueError(f"dimension mismatch: {u.shape} vs {v.shape}")
    nu = np.linalg.norm(u)
    nv = np.linalg.norm(v)
    if nu == 0.0 or nv == 0.0:
        return 0.0
    return float(np.dot(u, v) / (nu * nv))


class QuestionIndex:
    """Precomputed question embeddings for repeated nearest-neighbor queries.

    Embeds every question of the corpus once; ``topn`` then ranks all
    eligible records against a query by cosine similarity. Records that
    embed to the zero vector can never be returned (cosine 0 is still a
    valid similarity, but a zero query short-circuits to no results).
    """

    def __init__(self, corpus, table: EmbeddingTable):
        self._table = table
        self.ids = [r.triplet_id for r in corpus.records]
        self.image_ids = [r.image_id for r in corpus.records]
        vecs = np.zeros((len(self.ids), table.d_txt))
        for i, rec in enumerate(corpus.records):
            sv = embed_avg(normalize(rec.question), table)
            if not sv.is_zero:
                norm = np.linalg.norm(sv.values)
                if norm > 0:
                    vecs[i] = sv.values / norm
        self._unit = vecs
        # positional rank of each row when sorted by triplet_id, for tie-breaking
        order = sorted(range(len(self.ids)), key=lambda i: self.ids[i])
        self._id_rank = np.empty(len(self.ids), dtype=np.int64)
        for rank, i in enumerate(order):
            self._id_rank[i] = rank
        self._pos = {tid: i for i, tid in enumerate(self.ids)}

    def topn(self, query, n: int) -> list[tuple[str, float]]:
        """Rank records against ``query`` (a triplet record).

        Excludes the query itself and every record sharing its image.
        Descending similarity; ties break on ascending triplet_id.
        """
        if n < 1:
            raise ValueError("n must be >= 1")
        sv = embed_avg(normalize(query.question), self._table)
        if sv.is_zero:
            return []
        qnorm = np.linalg.norm(sv.values)
        if qnorm == 0:
            return []
        sims = self._unit @ (sv.values / qnorm)
        eligible = np.fromiter(
            (tid != query.triplet_id and img != query.image_id
             for tid, img in zip(self.ids, self.image_ids)),
            dtype=bool, count=len(self.ids))
        idx = np.nonzero(eligible)[0]
        if idx.size == 0:
            return []
        order = np.lexsort((self._id_rank[idx], -sims[idx]))
        take = idx[order[:n]]
        return [(self.ids[i], float(sims[i])) for i in take]


def topn_similar_questions(corpus, query, n: int, table: EmbeddingTable
                           ) -> list[tuple[str, float]]:
    """Top-n questions most similar to the query's, by cosine of averaged
    word vectors. See QuestionIndex.topn for ranking rules; build a
    QuestionIndex directly when issuing many queries on one corpus."""
    return QuestionIndex(corpus, table).topn(query, n)
