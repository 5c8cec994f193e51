"""Decoy regeneration on a synthetic planted-signal corpus.

Every generated image carries one fact per question type, so the two
procedures have real material to work with:

  * question-driven decoys (qou): targets of the most similar other
    questions, which are type-compatible answers the question alone
    cannot rule out;
  * image-driven decoys (iou): targets of other questions on the same
    image, which are true of the image and only the question resolves.

Both pass the containment and taxonomy-similarity filters against the
target and against each other.
"""

from decoyforge import DecoyGenConfig, make_planted_corpus, remediate_corpus

world = make_planted_corpus(n_images=120, seed=7, biased_decoys=True)
print(f"synthetic corpus: {len(world.corpus)} records, "
      f"{len(world.corpus.image_index)} images\n")

record = world.corpus.records[0]
print(f"sample record {record.triplet_id}:")
print(f"  question: {record.question!r}")
print(f"  target:   {record.target!r}")
print(f"  original decoys (junk vocabulary): {record.orig_decoys}\n")

cfg = DecoyGenConfig(k=3, topn=10_000, wup_threshold=0.9, seed=11,
                     fallback="frequent-targets")
items, report = remediate_corpus(world.corpus, world.table, world.taxonomy,
                                 cfg, mode="iou+qou")

item = items[0]
print("after remediation (mode iou+qou, 7 candidates):")
for i, (cand, prov) in enumerate(zip(item.candidates, item.provenance)):
    marker = " <- target" if i == item.target_index else ""
    print(f"  [{prov:8s}] {cand}{marker}")

stats = report.to_json()
print("\ngeneration report:")
print(f"  records:            {stats['records']}")
for proc in ("qou", "iou"):
    p = stats[proc]
    print(f"  {proc}: examined {p['examined']}, accepted {p['accepted']}, "
          f"rejected {p['rejected_containment']} containment / "
          f"{p['rejected_wup']} similarity / "
          f"{p['rejected_vs_selected']} vs already-selected")
print(f"  shortfall rates:    qou {stats['qou_shortfall_rate']:.1%}, "
      f"iou {stats['iou_shortfall_rate']:.1%}")
print(f"  fallback fills:     {stats['fallback_filled']} "
      f"({stats['fallback_global']} from the global vocabulary)")

# the same seed regenerates the exact same candidate sets
again, _ = remediate_corpus(world.corpus, world.table, world.taxonomy,
                            cfg, mode="iou+qou")
assert [i.candidates for i in again] == [i.candidates for i in items]
print("\nrerun with the same seed: candidate sets identical")
