"""The answer-scoring model and the information-ablation grid.

Trains the one-hidden-layer scorer with each input combination (answer
only; question+answer; image+answer; all three) on three decoy sets and
prints the accuracy grid. The pattern to look for:

  * on image-driven decoys the question is what resolves the choice, so
    QA beats IA by a wide margin;
  * on question-driven decoys it is the image that resolves it, so IA
    beats QA;
  * on the combined set only the full model does well.

Runs at desk scale (a few thousand records, small hidden layer); takes
around a minute.
"""

import time

from decoyforge import (
    DecoyGenConfig,
    TrainConfig,
    evaluate,
    make_planted_corpus,
    remediate_corpus,
    train,
)

world = make_planted_corpus(n_images=600, seed=3, biased_decoys=True)
cfg = DecoyGenConfig(k=3, seed=8, fallback="frequent-targets")


def split(items, name):
    return [i for i in items if world.corpus.get(i.triplet_id).split == name]


decoy_sets = {}
for mode in ("iou", "qou", "iou+qou"):
    table = world.table if mode != "iou" else None
    decoy_sets[mode], _ = remediate_corpus(world.corpus, table,
                                           world.taxonomy, cfg, mode=mode)

grid = {}
t0 = time.time()
for model_mode in ("A", "QA", "IA", "IQA"):
    grid[model_mode] = {}
    for decoy_mode, items in decoy_sets.items():
        tc = TrainConfig(mode=model_mode, lr0=0.05, batch_triplets=64,
                         max_iters=1200, seed=1, dropout_rate=0.0,
                         hidden_dim=96)
        params, _ = train(split(items, "train"), tc,
                          features=world.features, table=world.table)
        acc = evaluate(params, split(items, "test"), model_mode,
                       features=world.features, table=world.table)
        grid[model_mode][decoy_mode] = acc

print(f"trained 12 models in {time.time() - t0:.0f}s\n")
cols = list(decoy_sets)
print("model".ljust(10) + "".join(c.rjust(10) for c in cols))
for model_mode, row in grid.items():
    print(f"MLP-{model_mode}".ljust(10)
          + "".join(f"{100 * row[c]:.1f}".rjust(10) for c in cols))
print(f"\nchance: 25.0 on the 4-candidate sets, {100 / 7:.1f} on iou+qou")
