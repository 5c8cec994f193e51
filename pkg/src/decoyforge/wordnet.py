"""Taxonomy parsing and Wu-Palmer similarity at synset, word, and
word-sequence level.

Two input layouts are supported: a simple tab-separated edge list, and
the standard WordNet database distribution (the ``data.noun`` /
``data.adj`` files of a ``dict/`` directory). Only NOUN and ADJ synsets
enter the lemma index; a virtual root joins all sub-hierarchies so that
any pair of synsets has a common subsumer.

Word similarity maximizes the synset score over every sense pair of the
two words; sequence similarity takes the larger of the two directed
products of per-word maxima, so a phrase that contains the other scores
a full 1.0.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .text import normalized_text

NOUN = "NOUN"
ADJ = "ADJ"
OTHER = "OTHER"

VIRTUAL_ROOT = "*root*"

TAXONOMY_FORMATS = ("edge-list", "wordnet-db")


class TaxonomyError(ValueError):
    """Raised for unparseable taxonomy input, cycles, or dangling edges."""


@dataclass
class Synset:
    """One taxonomy node.

    ``depth`` counts nodes from the virtual root (which has depth 1):
    a node's depth is 1 + the minimum depth over its hypernym parents.
    """

    id: str
    pos: str
    lemmas: list[str]
    hypernyms: list[str]
    depth: int = 0
    # longest hypernym path, in edges, to a real root (virtual root excluded)
    max_edges: int = 0

    @property
    def min_edges(self) -> int:
        """Shortest hypernym path, in edges, to a real root."""
        return self.depth - 2


class Taxonomy:
    """Immutable synset DAG with a lemma index and a similarity cache."""

    def __init__(self, synsets: list[Synset], cache_size: int = 1_000_000):
        self.virtual_root = VIRTUAL_ROOT
        self.synsets: dict[str, Synset] = {}
        root = Synset(VIRTUAL_ROOT, OTHER, [], [], depth=1, max_edges=-1)
        self.synsets[VIRTUAL_ROOT] = root
        for syn in synsets:
            if syn.id == VIRTUAL_ROOT:
                raise TaxonomyError(f"synset id {VIRTUAL_ROOT!r} is reserved")
            if syn.id in self.synsets:
                raise TaxonomyError(f"duplicate synset id {syn.id!r}")
            self.synsets[syn.id] = syn
        self._attach_and_compute_depths()
        self.lemma_index: dict[str, list[str]] = {}
        for syn in synsets:
            if syn.pos not in (NOUN, ADJ):
                continue
            for lemma in syn.lemmas:
                self.lemma_index.setdefault(lemma.lower(), []).append(syn.id)
        self._ancestors: dict[str, dict[str, int]] = {}
        self._word_cache: dict[tuple[str, str], float] = {}
        self._cache_size = cache_size

    def _attach_and_compute_depths(self) -> None:
        for syn in self.synsets.values():
            if syn.id == VIRTUAL_ROOT:
                continue
            for parent in syn.hypernyms:
                if parent not in self.synsets:
                    raise TaxonomyError(
                        f"synset {syn.id!r} names unknown hypernym {parent!r}")
            if not syn.hypernyms:
                syn.hypernyms = [VIRTUAL_ROOT]
        children: dict[str, list[str]] = {sid: [] for sid in self.synsets}
        pending = {}
        for syn in self.synsets.values():
            if syn.id == VIRTUAL_ROOT:
                continue
            pending[syn.id] = len(syn.hypernyms)
            for parent in syn.hypernyms:
                children[parent].append(syn.id)
        queue = [VIRTUAL_ROOT]
        processed = 0
        while queue:
            sid = queue.pop()
            processed += 1
            syn = self.synsets[sid]
            if sid != VIRTUAL_ROOT:
                parents = [self.synsets[p] for p in syn.hypernyms]
                syn.depth = 1 + min(p.depth for p in parents)
                syn.max_edges = 1 + max(p.max_edges for p in parents)
            for child in children[sid]:
                pending[child] -= 1
                if pending[child] == 0:
                    queue.append(child)
        if processed != len(self.synsets):
            stuck = sorted(sid for sid, n in pending.items() if n > 0)
            raise TaxonomyError(
                f"hypernym cycle detected involving {stuck[0]!r} "
                f"({len(stuck)} synsets unreachable from the root)")

    def synsets_for_word(self, word: str) -> list[Synset]:
        return [self.synsets[sid] for sid in self.lemma_index.get(word.lower(), [])]

    def ancestors(self, synset_id: str) -> dict[str, int]:
        """All hypernym ancestors (including the synset itself) with the
        minimum hop count to each. Cached per synset."""
        cached = self._ancestors.get(synset_id)
        if cached is not None:
            return cached
        dist = {synset_id: 0}
        frontier = [synset_id]
        hops = 0
        while frontier:
            hops += 1
            nxt = []
            for sid in frontier:
                for parent in self.synsets[sid].hypernyms:
                    if parent not in dist:
                        dist[parent] = hops
                        nxt.append(parent)
            frontier = nxt
        self._ancestors[synset_id] = dist
        return dist


def wup_synset(a: Synset, b: Synset, tax: Taxonomy) -> float:
    """Wu-Palmer similarity of two synsets, in (0, 1].

    Scores 2*d / (len_a + len_b) where d is the subsumer's depth in
    nodes (longest hypernym path from a real root) and len_i measures
    each synset's depth through that subsumer. The subsumer is the
    common ancestor with the greatest shortest-path depth; ties prefer
    the one with the greater longest-path depth, then the smaller id.
    Disjoint hierarchies (e.g. cross part-of-speech) fall back to the
    virtual root acting as a depth-1 subsumer, giving a small positive
    score.
    """
    if a.id == b.id:
        return 1.0
    anc_a = tax.ancestors(a.id)
    anc_b = tax.ancestors(b.id)
    common = (set(anc_a) & set(anc_b)) - {VIRTUAL_ROOT}
    if not common:
        # depth-1 virtual subsumer: len = edges to a real root + the
        # virtual hop + the subsumer's own node
        len_a = a.min_edges + 2
        len_b = b.min_edges + 2
        return 2.0 / (len_a + len_b)
    syns = tax.synsets
    lcs = min(common, key=lambda s: (-syns[s].min_edges, -syns[s].max_edges, s))
    depth = syns[lcs].max_edges + 1
    len_a = anc_a[lcs] + depth
    len_b = anc_b[lcs] + depth
    return 2.0 * depth / (len_a + len_b)


def wup_word(w1: str, w2: str, tax: Taxonomy) -> float:
    """Maximum Wu-Palmer score over all NOUN/ADJ sense pairs of two words.

    A word with no NOUN or ADJ synset falls back to exact string
    equality after normalization (1.0 or 0.0). Results are memoized per
    unordered word pair.
    """
    key = (w1, w2) if w1 <= w2 else (w2, w1)
    cached = tax._word_cache.get(key)
    if cached is not None:
        return cached
    n1 = tax.lemma_index.get(w1.lower())
    n2 = tax.lemma_index.get(w2.lower())
    if not n1 or not n2:
        result = 1.0 if normalized_text(w1) == normalized_text(w2) else 0.0
    else:
        syns = tax.synsets
        result = max(wup_synset(syns[a], syns[b], tax)
                     for a in n1 for b in n2)
    if len(tax._word_cache) >= tax._cache_size:
        tax._word_cache.clear()
    tax._word_cache[key] = result
    return result


def wup_sequence(s1: list[str], s2: list[str], tax: Taxonomy) -> float:
    """Similarity of two word sequences in [0, 1].

    The larger of the two directed scores, where each direction is the
    product over one sequence's words of the best match in the other.
    A sequence contained in the other therefore scores exactly 1.0.
    Either sequence empty gives 0.0.
    """
    if not s1 or not s2:
        return 0.0

    def directed(src, dst):
        prod = 1.0
        for w1 in src:
            prod *= max(wup_word(w1, w2, tax) for w2 in dst)
            if prod == 0.0:
                break
        return prod

    return max(directed(s1, s2), directed(s2, s1))


def _parse_edge_list(path) -> list[Synset]:
    """Lines of ``synset_id TAB pos TAB lemma,lemma TAB parent,parent``.

    The parent field may be empty or ``-`` for a root synset. Blank
    lines and ``#`` comments are skipped.
    """
    pos_names = {"NOUN": NOUN, "ADJ": ADJ, "OTHER": OTHER}
    synsets = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.rstrip("\n")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            fields = line.split("\t")
            if len(fields) not in (3, 4):
                raise TaxonomyError(
                    f"{path}:{lineno}: expected 3 or 4 tab-separated fields, "
                    f"got {len(fields)}")
            sid, pos_raw, lemmas_raw = fields[0], fields[1], fields[2]
            parents_raw = fields[3] if len(fields) == 4 else ""
            pos = pos_names.get(pos_raw.strip().upper())
            if pos is None:
                raise TaxonomyError(
                    f"{path}:{lineno}: unknown pos {pos_raw!r}")
            lemmas = [w.strip() for w in lemmas_raw.split(",") if w.strip()]
            parents_raw = parents_raw.strip()
            if parents_raw in ("", "-"):
                parents = []
            else:
                parents = [p.strip() for p in parents_raw.split(",") if p.strip()]
            synsets.append(Synset(sid.strip(), pos, lemmas, parents))
    return synsets


def _strip_adj_marker(word: str) -> str:
    # adjective word forms may carry a syntactic position marker: cute(p)
    if word.endswith(")") and "(" in word:
        return word[:word.rindex("(")]
    return word


def _parse_wordnet_data(path, pos: str) -> list[Synset]:
    """One standard WordNet ``data.<pos>`` file.

    Each line holds a synset: offset, lex filenum, type, hex word count,
    the word/lex-id pairs, a pointer count, and the pointers. Only the
    hypernym pointers (``@`` and ``@i``) are retained as edges; all
    other pointer types are ignored.
    """
    suffix = "-n" if pos == NOUN else "-a"
    synsets = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            if line.startswith(" ") or not line.strip():
                continue  # license header
            body = line.split("|", 1)[0].rstrip()
            fields = body.split(" ")
            try:
                offset = fields[0]
                w_cnt = int(fields[3], 16)
                words = []
                i = 4
                for _ in range(w_cnt):
                    words.append(_strip_adj_marker(fields[i]).lower())
                    i += 2
                p_cnt = int(fields[i])
                i += 1
                hypernyms = []
                for _ in range(p_cnt):
                    symbol, tgt_offset, tgt_pos = fields[i], fields[i + 1], fields[i + 2]
                    i += 4
                    if symbol in ("@", "@i") and tgt_pos == "n":
                        hypernyms.append(tgt_offset + "-n")
            except (IndexError, ValueError) as exc:
                raise TaxonomyError(f"{path}:{lineno}: malformed entry ({exc})")
            synsets.append(Synset(offset + suffix, pos, words, hypernyms))
    return synsets


def _load_wordnet_db(path) -> list[Synset]:
    import os
    noun_file = os.path.join(path, "data.noun")
    adj_file = os.path.join(path, "data.adj")
    if not os.path.exists(noun_file):
        raise TaxonomyError(f"{path}: no data.noun file (need a dict/ directory)")
    synsets = _parse_wordnet_data(noun_file, NOUN)
    if os.path.exists(adj_file):
        synsets.extend(_parse_wordnet_data(adj_file, ADJ))
    return synsets


def load_taxonomy(path, format: str = "edge-list") -> Taxonomy:
    """Parse a taxonomy file (edge-list) or directory (wordnet-db).

    Depths are computed on load; a cycle or a dangling hypernym id is an
    error. Synsets without hypernyms (including every ADJ cluster) are
    attached directly under the virtual root.
    """
    if format == "edge-list":
        synsets = _parse_edge_list(path)
    elif format == "wordnet-db":
        synsets = _load_wordnet_db(path)
    else:
        raise ValueError(f"unknown taxonomy format {format!r}; "
                         f"expected one of {TAXONOMY_FORMATS}")
    return Taxonomy(synsets)
