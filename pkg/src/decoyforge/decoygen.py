"""Decoy regeneration: question-driven (QoU) and image-driven (IoU)
candidate harvesting, the two ambiguity filters, shortfall fallbacks, and
candidate-set assembly in five modes.

QoU decoys are the targets of the most question-similar other records;
IoU decoys are the targets of other records on the same image. Both
walks reject a candidate that is ambiguous with the record's target or
with an already-accepted decoy: ambiguous means one string contains the
other (whitespace ignored) or the taxonomy sequence similarity reaches
the configured threshold.

All randomness (IoU ordering, fallback draws, target placement) is keyed
by the global seed plus a stable per-triplet hash, so regeneration is
byte-identical across runs.
"""

from __future__ import annotations

import hashlib
import json
import weakref
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .corpus import Corpus, TripletRecord
from .text import EmbeddingTable, QuestionIndex, normalize, normalized_text, squashed_text
from .wordnet import Taxonomy, wup_sequence

ASSEMBLE_MODES = ("orig", "iou", "qou", "iou+qou", "all")
FALLBACK_POOLS = ("orig-decoys", "frequent-targets")

# independent deterministic substreams per triplet
_STREAM_IOU = 1
_STREAM_FALLBACK = 2
_STREAM_PLACEMENT = 3


@dataclass
class DecoyGenConfig:
    """Knobs of the generation procedures.

    k: decoys produced per procedure.
    topn: retrieval depth of the question-similarity ranking.
    wup_threshold: sequence-similarity level at or above which a
        candidate is considered ambiguous with the target.
    fallback: where fill_fallback draws from when a procedure comes up
        short ("orig-decoys" or "frequent-targets").
    """

    k: int = 3
    topn: int = 10_000
    wup_threshold: float = 0.9
    seed: int = 0
    fallback: str = "orig-decoys"

    def __post_init__(self):
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")
        if self.topn < self.k:
            raise ValueError(f"topn must be >= k, got {self.topn} < {self.k}")
        if not 0.0 < self.wup_threshold <= 1.0:
            raise ValueError(
                f"wup_threshold must be in (0, 1], got {self.wup_threshold}")
        if self.seed < 0:
            raise ValueError(f"seed must be non-negative, got {self.seed}")
        if self.fallback not in FALLBACK_POOLS:
            raise ValueError(f"fallback must be one of {FALLBACK_POOLS}, "
                             f"got {self.fallback!r}")


@dataclass(eq=False)
class CandidateSet:
    """An assembled multiple-choice answer list for one record."""

    triplet_id: str
    image_id: str
    question: str
    candidates: list[str]
    target_index: int
    provenance: list[str]
    human_answers: list[str] | None = None

    @property
    def target(self) -> str:
        return self.candidates[self.target_index]

    def decoys(self) -> list[str]:
        return [c for i, c in enumerate(self.candidates) if i != self.target_index]


def _triplet_rng(seed: int, triplet_id: str, stream: int) -> np.random.Generator:
    digest = hashlib.sha256(triplet_id.encode("utf-8")).digest()
    return np.random.default_rng(
        [seed, stream, int.from_bytes(digest[:8], "little")])


def string_filter(target: str, candidate: str) -> bool:
    """True (reject) iff either string contains the other once both are
    normalized and stripped of whitespace ("ponytail" vs "pony tail")."""
    t = squashed_text(target)
    c = squashed_text(candidate)
    return t in c or c in t


def is_ambiguous(target: str, candidate: str, tax: Taxonomy,
                 threshold: float) -> bool:
    """A candidate too close to the target to be a usable decoy."""
    if string_filter(target, candidate):
        return True
    return wup_sequence(normalize(target), normalize(candidate), tax) >= threshold


def _new_stats() -> dict:
    return {"examined": 0, "accepted": 0, "rejected_containment": 0,
            "rejected_wup": 0, "rejected_vs_selected": 0}


def _filtered_walk(target: str, pool, tax: Taxonomy, threshold: float,
                   k: int, stats: dict) -> list[str]:
    """Accept candidates from ``pool`` in order until k survive the
    target check and the mutual check against already-accepted decoys."""
    target_tokens = normalize(target)
    accepted: list[str] = []
    for cand in pool:
        if len(accepted) == k:
            break
        stats["examined"] += 1
        if string_filter(target, cand):
            stats["rejected_containment"] += 1
            continue
        if wup_sequence(target_tokens, normalize(cand), tax) >= threshold:
            stats["rejected_wup"] += 1
            continue
        if any(is_ambiguous(prev, cand, tax, threshold) for prev in accepted):
            stats["rejected_vs_selected"] += 1
            continue
        stats["accepted"] += 1
        accepted.append(cand)
    return accepted


def gen_qou_decoys(record: TripletRecord, corpus: Corpus,
                   table: EmbeddingTable, tax: Taxonomy, cfg: DecoyGenConfig,
                   index: QuestionIndex | None = None,
                   stats: dict | None = None) -> list[str]:
    """Decoys from the targets of the most question-similar records.

    Walks the similarity ranking in order, filtering as described in the
    module docstring; may return fewer than k decoys. Pass a prebuilt
    QuestionIndex when generating for many records of one corpus.
    """
    if index is None:
        index = QuestionIndex(corpus, table)
    ranked = index.topn(record, cfg.topn)
    pool = (corpus.get(tid).target for tid, _ in ranked)
    return _filtered_walk(record.target, pool, tax, cfg.wup_threshold,
                          cfg.k, stats if stats is not None else _new_stats())


def gen_iou_decoys(record: TripletRecord, corpus: Corpus, tax: Taxonomy,
                   cfg: DecoyGenConfig, stats: dict | None = None) -> list[str]:
    """Decoys from the targets of other records on the same image, in a
    seeded random order; may return fewer than k decoys."""
    others = corpus.same_image_records(record)
    targets = [r.target for r in others]
    rng = _triplet_rng(cfg.seed, record.triplet_id, _STREAM_IOU)
    pool = [targets[i] for i in rng.permutation(len(targets))]
    return _filtered_walk(record.target, pool, tax, cfg.wup_threshold,
                          cfg.k, stats if stats is not None else _new_stats())


# per-corpus answer statistics reused by every fill_fallback call
_corpus_pools: "weakref.WeakKeyDictionary[Corpus, tuple]" = weakref.WeakKeyDictionary()


def _answer_pools(corpus: Corpus) -> tuple[list[str], list[str]]:
    """(top-10 frequent targets, full distinct target vocabulary), both as
    first-seen surface forms."""
    cached = _corpus_pools.get(corpus)
    if cached is not None:
        return cached
    counts: dict[str, int] = {}
    surface: dict[str, str] = {}
    order: list[str] = []
    for rec in corpus.records:
        norm = normalized_text(rec.target)
        if norm not in surface:
            surface[norm] = rec.target
            order.append(norm)
        counts[norm] = counts.get(norm, 0) + 1
    frequent = sorted(counts, key=lambda n: (-counts[n], n))[:10]
    pools = ([surface[n] for n in frequent], [surface[n] for n in order])
    _corpus_pools[corpus] = pools
    return pools


def fill_fallback(record: TripletRecord, partial: list[str], corpus: Corpus,
                  cfg: DecoyGenConfig, n: int | None = None,
                  stats: dict | None = None) -> list[str]:
    """Top a partial decoy list up to length n (default cfg.k) with
    seeded-random picks from the configured fallback pool, skipping the
    target and anything already present; exhausting the pool falls
    through to the global target vocabulary."""
    n = cfg.k if n is None else n
    if len(partial) > n:
        raise ValueError(f"partial decoy list longer than {n}")
    result = list(partial)
    if len(result) == n:
        return result
    frequent, vocab = _answer_pools(corpus)
    if cfg.fallback == "orig-decoys":
        pool = list(record.orig_decoys)
    else:
        pool = list(frequent)
    rng = _triplet_rng(cfg.seed, record.triplet_id, _STREAM_FALLBACK)
    taken = {normalized_text(record.target)}
    taken.update(normalized_text(d) for d in result)

    def draw(source, from_global):
        for i in rng.permutation(len(source)):
            if len(result) == n:
                return
            cand = source[i]
            norm = normalized_text(cand)
            if norm in taken:
                continue
            taken.add(norm)
            result.append(cand)
            if stats is not None:
                stats["filled"] = stats.get("filled", 0) + 1
                if from_global:
                    stats["global"] = stats.get("global", 0) + 1

    draw(pool, False)
    if len(result) < n:
        draw(vocab, True)
    return result


_MERGE_PRIORITY = {"target": 0, "orig": 1, "iou": 2, "qou": 3, "fallback": 4}


def assemble(record: TripletRecord, qou: list[str], iou: list[str],
             mode: str, corpus: Corpus | None = None,
             cfg: DecoyGenConfig | None = None,
             qou_provenance: list[str] | None = None,
             iou_provenance: list[str] | None = None) -> CandidateSet:
    """Merge decoy sources for one mode and place the target.

    Candidate counts per mode: orig |D|+1, iou/qou k+1, iou+qou 2k+1,
    all |D|+2k+1. Duplicates across sources keep the higher-priority
    provenance (target > orig > iou > qou); when corpus and cfg are
    supplied, the resulting shortfall is refilled through fill_fallback
    so the counts stay exact. The target's position is seeded-random.
    """
    if mode not in ASSEMBLE_MODES:
        raise ValueError(f"unknown mode {mode!r}; expected one of {ASSEMBLE_MODES}")
    if mode == "orig" and not record.orig_decoys:
        raise ValueError(
            f"mode 'orig' on record {record.triplet_id!r} with no original decoys")
    qou_provenance = qou_provenance or ["qou"] * len(qou)
    iou_provenance = iou_provenance or ["iou"] * len(iou)
    sources: list[tuple[str, str]] = []
    if mode in ("orig", "all"):
        sources += [(d, "orig") for d in record.orig_decoys]
    if mode in ("iou", "iou+qou", "all"):
        sources += list(zip(iou, iou_provenance))
    if mode in ("qou", "iou+qou", "all"):
        sources += list(zip(qou, qou_provenance))

    n_expected = {
        "orig": len(record.orig_decoys),
        "iou": cfg.k if cfg else len(iou),
        "qou": cfg.k if cfg else len(qou),
        "iou+qou": 2 * cfg.k if cfg else len(iou) + len(qou),
        "all": len(record.orig_decoys) + (2 * cfg.k if cfg else len(iou) + len(qou)),
    }[mode]

    target_norm = normalized_text(record.target)
    decoys: list[tuple[str, str]] = []
    seen = {target_norm}
    for text, prov in sorted(sources, key=lambda s: _MERGE_PRIORITY[s[1]]):
        norm = normalized_text(text)
        if norm in seen:
            continue
        seen.add(norm)
        decoys.append((text, prov))
    # restore source order within the merged set (stable by priority group)
    decoys.sort(key=lambda d: _MERGE_PRIORITY[d[1]])

    if len(decoys) < n_expected and corpus is not None and cfg is not None:
        filled = fill_fallback(record, [d[0] for d in decoys], corpus, cfg,
                               n=n_expected)
        decoys += [(text, "fallback") for text in filled[len(decoys):]]

    rng = _triplet_rng(cfg.seed if cfg else 0, record.triplet_id,
                       _STREAM_PLACEMENT)
    target_index = int(rng.integers(0, len(decoys) + 1))
    candidates = [d[0] for d in decoys]
    provenance = [d[1] for d in decoys]
    candidates.insert(target_index, record.target)
    provenance.insert(target_index, "target")
    return CandidateSet(
        triplet_id=record.triplet_id,
        image_id=record.image_id,
        question=record.question,
        candidates=candidates,
        target_index=target_index,
        provenance=provenance,
        human_answers=list(record.human_answers) if record.human_answers else None,
    )


@dataclass
class GenerationReport:
    """Aggregate accounting of one remediation run."""

    mode: str
    k: int
    records: int = 0
    qou: dict = field(default_factory=_new_stats)
    iou: dict = field(default_factory=_new_stats)
    qou_shortfall_records: int = 0
    iou_shortfall_records: int = 0
    fallback_filled: int = 0
    fallback_global: int = 0
    assemble_refills: int = 0

    def to_json(self) -> dict:
        def rate(n):
            return n / self.records if self.records else 0.0
        return {
            "mode": self.mode,
            "k": self.k,
            "records": self.records,
            "qou": dict(self.qou),
            "iou": dict(self.iou),
            "qou_shortfall_records": self.qou_shortfall_records,
            "iou_shortfall_records": self.iou_shortfall_records,
            "qou_shortfall_rate": rate(self.qou_shortfall_records),
            "iou_shortfall_rate": rate(self.iou_shortfall_records),
            "fallback_filled": self.fallback_filled,
            "fallback_global": self.fallback_global,
            "assemble_refills": self.assemble_refills,
        }


def remediate_corpus(corpus: Corpus, table: EmbeddingTable | None,
                     tax: Taxonomy, cfg: DecoyGenConfig,
                     mode: str = "iou+qou", threads: int = 1
                     ) -> tuple[list[CandidateSet], GenerationReport]:
    """Run the generation procedures over every record and assemble
    candidate sets in the given mode.

    Output order matches corpus order regardless of threading. The
    report totals satisfy accepted + rejected = examined per procedure.
    """
    if mode not in ASSEMBLE_MODES:
        raise ValueError(f"unknown mode {mode!r}; expected one of {ASSEMBLE_MODES}")
    need_qou = mode in ("qou", "iou+qou", "all")
    need_iou = mode in ("iou", "iou+qou", "all")
    if need_qou and table is None:
        raise ValueError(f"mode {mode!r} requires an embedding table")
    index = QuestionIndex(corpus, table) if need_qou else None
    report = GenerationReport(mode=mode, k=cfg.k, records=len(corpus.records))

    def process(record):
        qou_stats, iou_stats, fb_stats = _new_stats(), _new_stats(), {}
        qou, iou = [], []
        qou_prov, iou_prov = [], []
        qou_short = iou_short = False
        if need_qou:
            gen = gen_qou_decoys(record, corpus, table, tax, cfg,
                                 index=index, stats=qou_stats)
            qou_short = len(gen) < cfg.k
            qou = fill_fallback(record, gen, corpus, cfg, stats=fb_stats)
            qou_prov = ["qou"] * len(gen) + ["fallback"] * (len(qou) - len(gen))
        if need_iou:
            gen = gen_iou_decoys(record, corpus, tax, cfg, stats=iou_stats)
            iou_short = len(gen) < cfg.k
            iou = fill_fallback(record, gen, corpus, cfg, stats=fb_stats)
            iou_prov = ["iou"] * len(gen) + ["fallback"] * (len(iou) - len(gen))
        item = assemble(record, qou, iou, mode, corpus=corpus, cfg=cfg,
                        qou_provenance=qou_prov, iou_provenance=iou_prov)
        # fallback entries in the final set beyond those passed in were
        # added by assemble after cross-source deduplication
        passed = {}
        for text, prov in list(zip(qou, qou_prov)) + list(zip(iou, iou_prov)):
            if prov == "fallback":
                passed[text] = passed.get(text, 0) + 1
        refills = 0
        for text, prov in zip(item.candidates, item.provenance):
            if prov == "fallback":
                if passed.get(text, 0) > 0:
                    passed[text] -= 1
                else:
                    refills += 1
        return item, qou_stats, iou_stats, fb_stats, qou_short, iou_short, refills

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(process, corpus.records))
    else:
        results = [process(r) for r in corpus.records]

    items = []
    for item, qou_stats, iou_stats, fb_stats, qou_short, iou_short, refills in results:
        items.append(item)
        for key in report.qou:
            report.qou[key] += qou_stats[key]
            report.iou[key] += iou_stats[key]
        report.qou_shortfall_records += qou_short
        report.iou_shortfall_records += iou_short
        report.fallback_filled += fb_stats.get("filled", 0)
        report.fallback_global += fb_stats.get("global", 0)
        report.assemble_refills += refills
    return items, report


def candidate_set_to_obj(item: CandidateSet) -> dict:
    obj = {
        "id": item.triplet_id,
        "image_id": item.image_id,
        "question": item.question,
        "candidates": list(item.candidates),
        "target_index": item.target_index,
        "provenance": list(item.provenance),
    }
    if item.human_answers is not None:
        obj["human_answers"] = list(item.human_answers)
    return obj


def write_candidate_sets(items: list[CandidateSet], path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for item in items:
            f.write(json.dumps(candidate_set_to_obj(item), ensure_ascii=False,
                               separators=(",", ":")) + "\n")


def load_candidate_sets(path) -> list[CandidateSet]:
    items = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                items.append(CandidateSet(
                    triplet_id=str(obj["id"]),
                    image_id=str(obj["image_id"]),
                    question=obj["question"],
                    candidates=[str(c) for c in obj["candidates"]],
                    target_index=int(obj["target_index"]),
                    provenance=[str(p) for p in obj["provenance"]],
                    human_answers=([str(a) for a in obj["human_answers"]]
                                   if obj.get("human_answers") is not None
                                   else None),
                ))
            except (json.JSONDecodeError, KeyError, ValueError) as exc:
                raise ValueError(f"{path}:{lineno}: bad candidate set ({exc})")
    return items
