"""Auditing answer-frequency shortcuts.

A candidate that never appears as anyone's correct answer can be ruled
out without reading the question or looking at the image. The audit
quantifies that: it counts per-answer target/decoy usage, converts the
balance into a prior probability of being correct, and measures how
accurate picking by prior alone is.

On the biased corpus (decoys drawn from a junk vocabulary) the prior
rule is nearly perfect; after decoy regeneration it collapses to
chance.
"""

from decoyforge import (
    DecoyGenConfig,
    answer_prior,
    assemble,
    bias_rule_accuracy,
    build_bias_table,
    frequency_stats,
    make_planted_corpus,
    remediate_corpus,
    top_biased,
)

world = make_planted_corpus(n_images=300, seed=9, biased_decoys=True)
cfg = DecoyGenConfig(k=3, seed=4, fallback="frequent-targets")


def split(items, name):
    return [i for i in items if world.corpus.get(i.triplet_id).split == name]


orig = [assemble(r, [], [], "orig", corpus=world.corpus, cfg=cfg)
        for r in world.corpus.records]
table = build_bias_table(split(orig, "train"))

print("answer priors on the biased corpus:")
for answer in ("red", "cat", "pencil", "never seen anywhere"):
    print(f"  P(correct | {answer!r}) = {answer_prior(answer, table):.3f}")

stats = frequency_stats(split(orig, "train"))
print(f"\nfrequency stats: {stats['unique_targets']} unique targets, "
      f"mean target use {stats['mean_target_count']:.1f}, "
      f"mean decoy use {stats['mean_decoy_count']:.1f} "
      f"(a neutral corpus would show {stats['chance_decoy_count']:.1f})")

print("\nmost target-skewed answers:")
for row in top_biased(table, 5):
    print(f"  {row['answer']:10s} prior={row['prior']:.3f} "
          f"(target x{row['target_count']}, decoy x{row['decoy_count']})")

acc = bias_rule_accuracy(split(orig, "test"), table)
print(f"\nprior-only rule on the biased test split: {acc:.1%} "
      f"(chance would be 25%)")

items, _ = remediate_corpus(world.corpus, world.table, world.taxonomy, cfg,
                            mode="iou+qou")
table_after = build_bias_table(split(items, "train"))
acc_after = bias_rule_accuracy(split(items, "test"), table_after)
print(f"after decoy regeneration: {acc_after:.1%} "
      f"(chance for 7 candidates is {1 / 7:.1%})")
