"""Answer-frequency bias measurement.

How often each answer string serves as the target versus as a decoy is
a strong signal in badly constructed datasets: a candidate that is
never a correct answer anywhere can be ruled out without looking at the
image or the question. The prior below turns those counts into a
per-answer probability of being correct, and the accuracy of picking by
that prior alone is the headline shortcut measure.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .decoygen import CandidateSet
from .text import normalized_text


@dataclass
class BiasTable:
    """Per-answer (target_count, decoy_count) usage counters.

    ``k`` is the decoys-per-item divisor; when items carry heterogeneous
    decoy counts, k is None and each decoy occurrence instead
    contributes 1/k_item to a weighted decoy total.
    """

    counts: dict = field(default_factory=dict)  # norm -> [tgt, dec, weighted]
    k: int | None = None

    def target_count(self, answer: str) -> int:
        entry = self.counts.get(normalized_text(answer))
        return entry[0] if entry else 0

    def decoy_count(self, answer: str) -> int:
        entry = self.counts.get(normalized_text(answer))
        return entry[1] if entry else 0


def build_bias_table(items: list[CandidateSet], k: int | None = None) -> BiasTable:
    """Accumulate target/decoy usage over normalized answer strings.

    With explicit ``k``, every item must supply exactly k decoys; with
    k=None a uniform count is inferred when possible, otherwise the
    table switches to per-item weighting.
    """
    sizes = {len(item.candidates) - 1 for item in items}
    if k is not None:
        for item in items:
            n = len(item.candidates) - 1
            if n != k:
                raise ValueError(
                    f"item {item.triplet_id!r} has {n} decoys, expected {k}")
        uniform = k
    else:
        uniform = sizes.pop() if len(sizes) == 1 else None
    table = BiasTable(k=uniform)
    for item in items:
        n_decoys = len(item.candidates) - 1
        for i, cand in enumerate(item.candidates):
            norm = normalized_text(cand)
            entry = table.counts.setdefault(norm, [0, 0, 0.0])
            if i == item.target_index:
                entry[0] += 1
            else:
                entry[1] += 1
                entry[2] += 1.0 / n_decoys
    return table


def answer_prior(candidate: str, table: BiasTable) -> float:
    """Probability that this answer string is the correct one, from its
    usage balance alone; 0.5 when the answer was never seen."""
    entry = table.counts.get(normalized_text(candidate))
    if entry is None or (entry[0] == 0 and entry[1] == 0):
        return 0.5
    target_count, decoy_count, weighted = entry
    if table.k is not None:
        return target_count / (target_count + decoy_count / table.k)
    return target_count / (target_count + weighted)


def bias_rule_accuracy(items: list[CandidateSet], table: BiasTable) -> float:
    """Accuracy of always picking the candidate with the highest prior.

    Ties go to the earliest candidate, so a tied target only counts as
    correct when it comes first among the tied.
    """
    if not items:
        return 0.0
    correct = 0
    for item in items:
        priors = [answer_prior(c, table) for c in item.candidates]
        best = max(range(len(priors)), key=lambda i: (priors[i], -i))
        correct += best == item.target_index
    return correct / len(items)


def frequency_stats(items: list[CandidateSet]) -> dict:
    """Usage-frequency summary of a candidate-set collection.

    mean_target_count averages over the distinct target strings,
    mean_decoy_count over the distinct strings that occur as decoys, and
    chance_decoy_count is the decoy-slot total spread evenly over the
    target vocabulary (the level a neutral dataset would show).
    """
    target_counts: dict[str, int] = {}
    decoy_counts: dict[str, int] = {}
    decoy_slots = 0
    for item in items:
        for i, cand in enumerate(item.candidates):
            norm = normalized_text(cand)
            if i == item.target_index:
                target_counts[norm] = target_counts.get(norm, 0) + 1
            else:
                decoy_counts[norm] = decoy_counts.get(norm, 0) + 1
                decoy_slots += 1
    unique_targets = len(target_counts)
    return {
        "unique_targets": unique_targets,
        "mean_target_count": (sum(target_counts.values()) / unique_targets
                              if unique_targets else 0.0),
        "mean_decoy_count": (sum(decoy_counts.values()) / len(decoy_counts)
                             if decoy_counts else 0.0),
        "chance_decoy_count": (decoy_slots / unique_targets
                               if unique_targets else 0.0),
    }


def top_biased(table: BiasTable, n: int = 20) -> list[dict]:
    """The n answers whose priors sit furthest above neutral, for reports."""
    rows = []
    for norm, (tgt, dec, _) in table.counts.items():
        prior = answer_prior(norm, table)
        rows.append({"answer": norm, "target_count": tgt,
                     "decoy_count": dec, "prior": prior})
    rows.sort(key=lambda r: (-r["prior"], -(r["target_count"] + r["decoy_count"]),
                             r["answer"]))
    return rows[:n]
