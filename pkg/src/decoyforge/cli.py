"""Command-line pipeline: ingest -> validate -> audit -> gen -> train ->
eval -> report.

Every subcommand writes its artifacts under --output-dir with fixed
names plus a manifest.json recording the resolved configuration, its
hash, the seed, and a digest of every input file, which is enough to
reproduce the outputs byte for byte. Options may also come from a
key = value config file (--config); explicit flags win. The
DECOYFORGE_THREADS environment variable caps worker counts.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys

from . import audit as audit_mod
from . import corpus as corpus_mod
from . import decoygen, model, wordnet

SCHEMA_VERSION = 1


def _die(kind: str, message: str) -> int:
    sys.stderr.write(json.dumps({"error": kind, "message": message}) + "\n")
    return 1


def _digest_path(path) -> str:
    h = hashlib.sha256()
    if os.path.isdir(path):
        for root, _, files in sorted(os.walk(path)):
            for name in sorted(files):
                full = os.path.join(root, name)
                h.update(os.path.relpath(full, path).encode())
                h.update(_digest_path(full).encode())
    else:
        with open(path, "rb") as f:
            for chunk in iter(lambda: f.read(1 << 20), b""):
                h.update(chunk)
    return h.hexdigest()


def _write_json(obj, path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(obj, f, ensure_ascii=False, indent=2, sort_keys=True)
        f.write("\n")


def _write_manifest(args, inputs: dict, outputs: list[str]) -> None:
    # output_dir and the config-file path do not affect artifact content,
    # so two equivalent runs produce byte-identical manifests
    config = {k: v for k, v in sorted(vars(args).items())
              if k not in ("func", "output_dir", "config")
              and not k.startswith("_")}
    blob = json.dumps(config, sort_keys=True, default=str)
    manifest = {
        "schema_version": SCHEMA_VERSION,
        "subcommand": args.subcommand,
        "seed": getattr(args, "seed", None),
        "config": json.loads(blob),
        "config_hash": hashlib.sha256(blob.encode()).hexdigest(),
        "inputs": {name: _digest_path(path)
                   for name, path in sorted(inputs.items()) if path},
        "outputs": sorted(outputs),
    }
    _write_json(manifest, os.path.join(args.output_dir, "manifest.json"))


def _out(args, name: str) -> str:
    os.makedirs(args.output_dir, exist_ok=True)
    return os.path.join(args.output_dir, name)


def _load_table(path):
    from .text import EmbeddingTable
    return EmbeddingTable.load(path)


def _threads() -> int:
    raw = os.environ.get("DECOYFORGE_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise ValueError(f"DECOYFORGE_THREADS must be an integer, got {raw!r}")


# ---------------------------------------------------------------- handlers


def _cmd_ingest(args) -> int:
    corpus = corpus_mod.load_corpus(args.input, args.format,
                                    default_split=args.default_split)
    out = _out(args, "corpus.jsonl")
    corpus_mod.write_corpus(corpus, out)
    _write_manifest(args, {"input": args.input}, ["corpus.jsonl"])
    print(f"ingested {len(corpus)} records -> {out}")
    return 0


def _cmd_validate(args) -> int:
    corpus = corpus_mod.load_corpus(args.corpus)
    features = corpus_mod.FeatureStore.load(args.features) if args.features else None
    report = corpus_mod.validate(corpus, features)
    out = _out(args, "validation_report.json")
    _write_json({"schema_version": SCHEMA_VERSION, **report.to_json()}, out)
    _write_manifest(args, {"corpus": args.corpus, "features": args.features},
                    ["validation_report.json"])
    print(f"{len(report.findings)} finding(s) -> {out}")
    if args.strict and not report.ok:
        return 1
    return 0


def _cmd_audit(args) -> int:
    train_items = decoygen.load_candidate_sets(args.train_candidates)
    table = audit_mod.build_bias_table(train_items, k=args.k)
    report = {
        "schema_version": SCHEMA_VERSION,
        "stats": audit_mod.frequency_stats(train_items),
        "rule_accuracy": {},
        "top_biased": audit_mod.top_biased(table, 20),
        "tie_break": "first-among-tied",
    }
    inputs = {"train_candidates": args.train_candidates}
    for spec in args.eval_candidates or []:
        if "=" not in spec:
            raise ValueError(
                f"--eval-candidates expects MODE=PATH, got {spec!r}")
        mode, path = spec.split("=", 1)
        items = decoygen.load_candidate_sets(path)
        report["rule_accuracy"][mode] = audit_mod.bias_rule_accuracy(items, table)
        inputs[f"eval_candidates[{mode}]"] = path
    out = _out(args, "audit_report.json")
    _write_json(report, out)
    _write_manifest(args, inputs, ["audit_report.json"])
    print(f"audit report -> {out}")
    return 0


def _cmd_gen(args) -> int:
    corpus = corpus_mod.load_corpus(args.corpus)
    tax = wordnet.load_taxonomy(args.taxonomy, args.taxonomy_format)
    table = _load_table(args.embeddings) if args.embeddings else None
    cfg = decoygen.DecoyGenConfig(k=args.k, topn=args.topn,
                                  wup_threshold=args.threshold,
                                  seed=args.seed, fallback=args.fallback)
    items, report = decoygen.remediate_corpus(
        corpus, table, tax, cfg, mode=args.mode, threads=_threads())
    out = _out(args, "candidates.jsonl")
    decoygen.write_candidate_sets(items, out)
    _write_json({"schema_version": SCHEMA_VERSION, **report.to_json()},
                _out(args, "generation_report.json"))
    _write_manifest(args, {"corpus": args.corpus, "taxonomy": args.taxonomy,
                           "embeddings": args.embeddings},
                    ["candidates.jsonl", "generation_report.json"])
    print(f"assembled {len(items)} candidate sets (mode {args.mode}) -> {out}")
    return 0


def _cmd_train(args) -> int:
    items = decoygen.load_candidate_sets(args.candidates)
    table = _load_table(args.embeddings)
    features = corpus_mod.FeatureStore.load(args.features) if args.features else None
    init = model.load_checkpoint(args.init) if args.init else None
    cfg = model.TrainConfig(
        mode=args.mode, lr0=args.lr0, momentum=args.momentum,
        batch_triplets=args.batch, step_size=args.step_size,
        max_iters=args.iters, seed=args.seed, dropout_rate=args.dropout,
        hidden_dim=args.hidden, init=init)
    val_items = (decoygen.load_candidate_sets(args.val_candidates)
                 if args.val_candidates else None)
    params, log = model.train(items, cfg, features=features, table=table,
                              val_items=val_items)
    out = _out(args, "model.ckpt")
    model.save_checkpoint(params, out)
    model.write_training_log(log, _out(args, "training_log.jsonl"))
    _write_manifest(args, {"candidates": args.candidates,
                           "embeddings": args.embeddings,
                           "features": args.features, "init": args.init},
                    ["model.ckpt", "training_log.jsonl"])
    final = log[-1]["loss"] if log else None
    print(f"trained {args.mode} for {args.iters} iters "
          f"(final loss {final}) -> {out}")
    return 0


def _cmd_eval(args) -> int:
    items = decoygen.load_candidate_sets(args.candidates)
    table = _load_table(args.embeddings)
    features = corpus_mod.FeatureStore.load(args.features) if args.features else None
    params = model.load_checkpoint(args.model)
    accuracy = model.evaluate(params, items, params.mode, metric=args.metric,
                              features=features, table=table)
    result = {
        "schema_version": SCHEMA_VERSION,
        "mode": params.mode,
        "decoy_set": args.decoy_set,
        "metric": args.metric,
        "items": len(items),
        "accuracy": accuracy,
    }
    out = _out(args, "eval_result.json")
    _write_json(result, out)
    _write_manifest(args, {"candidates": args.candidates, "model": args.model,
                           "embeddings": args.embeddings,
                           "features": args.features}, ["eval_result.json"])
    print(f"{params.mode} on {args.decoy_set or 'unlabeled'} "
          f"({args.metric}): {accuracy:.4f} -> {out}")
    return 0


def _collect_results(paths) -> list[dict]:
    found = []
    for path in paths:
        if os.path.isdir(path):
            for root, _, files in sorted(os.walk(path)):
                for name in sorted(files):
                    if name.startswith("eval_result") and name.endswith(".json"):
                        found.append(os.path.join(root, name))
        else:
            found.append(path)
    results = []
    for path in found:
        with open(path, encoding="utf-8") as f:
            results.append(json.load(f))
    return results


def _cmd_report(args) -> int:
    results = _collect_results(args.results)
    if not results:
        raise ValueError("no eval results found under the given paths")
    decoy_sets = []
    for r in results:
        label = r.get("decoy_set") or "unlabeled"
        if label not in decoy_sets:
            decoy_sets.append(label)
    grid: dict[str, dict[str, float]] = {}
    for r in results:
        label = r.get("decoy_set") or "unlabeled"
        grid.setdefault(r["mode"], {})[label] = r["accuracy"]
    modes = [m for m in ("A", "QA", "IA", "IQA") if m in grid]
    modes += sorted(set(grid) - set(modes))
    report = {"schema_version": SCHEMA_VERSION, "decoy_sets": decoy_sets,
              "grid": grid}
    _write_json(report, _out(args, "report.json"))
    width = max(len(s) for s in decoy_sets + ["decoys"]) + 2
    lines = ["".join(["mode".ljust(8)] + [s.rjust(width) for s in decoy_sets])]
    for mode in modes:
        row = [f"MLP-{mode}".ljust(8)]
        for s in decoy_sets:
            acc = grid[mode].get(s)
            row.append(("-" if acc is None else f"{100 * acc:.1f}").rjust(width))
        lines.append("".join(row))
    text = "\n".join(lines) + "\n"
    with open(_out(args, "report.txt"), "w", encoding="utf-8") as f:
        f.write(text)
    _write_manifest(args, {}, ["report.json", "report.txt"])
    print(text, end="")
    return 0


# ----------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="decoyforge",
        description="Audit multiple-choice QA corpora for answer shortcuts "
                    "and regenerate their decoys.")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def common(p):
        p.add_argument("--config", help="key = value config file; "
                                        "explicit flags override it")
        p.add_argument("--output-dir", "-o", default=".",
                       help="directory for artifacts and manifest.json")

    p = sub.add_parser("ingest", help="convert a dataset to canonical JSONL")
    common(p)
    p.add_argument("--input", required=True)
    p.add_argument("--format", default="canonical-jsonl",
                   choices=list(corpus_mod.CORPUS_FORMATS))
    p.add_argument("--default-split", default="train",
                   choices=list(corpus_mod.SPLITS))
    p.set_defaults(func=_cmd_ingest)

    p = sub.add_parser("validate", help="report corpus invariant violations")
    common(p)
    p.add_argument("--corpus", required=True, help="canonical JSONL corpus")
    p.add_argument("--features", help="feature store to cross-check image ids")
    p.add_argument("--strict", action="store_true",
                   help="exit nonzero when findings exist")
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("audit", help="answer-frequency bias report")
    common(p)
    p.add_argument("--train-candidates", required=True,
                   help="candidate-set JSONL used to build the bias table")
    p.add_argument("--eval-candidates", action="append", metavar="MODE=PATH",
                   help="candidate-set JSONL to score the prior rule on; "
                        "repeatable")
    p.add_argument("--k", type=int, default=None,
                   help="required decoys per item (default: infer)")
    p.set_defaults(func=_cmd_audit)

    p = sub.add_parser("gen", help="regenerate decoys and assemble candidate sets")
    common(p)
    p.add_argument("--corpus", required=True, help="canonical JSONL corpus")
    p.add_argument("--taxonomy", required=True)
    p.add_argument("--taxonomy-format", default="edge-list",
                   choices=list(wordnet.TAXONOMY_FORMATS))
    p.add_argument("--embeddings", help="word-vector text file or .npz cache")
    p.add_argument("--mode", default="iou+qou",
                   choices=list(decoygen.ASSEMBLE_MODES))
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--topn", type=int, default=10_000)
    p.add_argument("--threshold", type=float, default=0.9)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--fallback", default="orig-decoys",
                   choices=list(decoygen.FALLBACK_POOLS))
    p.set_defaults(func=_cmd_gen)

    p = sub.add_parser("train", help="train the answer scorer")
    common(p)
    p.add_argument("--candidates", required=True)
    p.add_argument("--embeddings", required=True)
    p.add_argument("--features")
    p.add_argument("--mode", default="IQA", choices=list(model.MODES))
    p.add_argument("--decoy-set", help="label of the decoy set being used")
    p.add_argument("--lr0", type=float, default=0.01)
    p.add_argument("--momentum", type=float, default=0.9)
    p.add_argument("--batch", type=int, default=100)
    p.add_argument("--step-size", type=int, default=None)
    p.add_argument("--iters", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--dropout", type=float, default=0.5)
    p.add_argument("--hidden", type=int, default=256)
    p.add_argument("--init", help="checkpoint to warm-start from")
    p.add_argument("--val-candidates")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("eval", help="evaluate a trained scorer")
    common(p)
    p.add_argument("--candidates", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--embeddings", required=True)
    p.add_argument("--features")
    p.add_argument("--metric", default="plain", choices=list(model.METRICS))
    p.add_argument("--decoy-set", help="label recorded in the result")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("report", help="aggregate eval results into the "
                                      "ablation grid")
    common(p)
    p.add_argument("--results", nargs="+", required=True,
                   help="eval_result.json files or directories to scan")
    p.set_defaults(func=_cmd_report)

    return parser


def _parse_config_file(path) -> dict:
    values = {}
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key = value")
            key, val = line.split("=", 1)
            values[key.strip().replace("-", "_")] = val.strip().strip("\"'")
    return values


def _apply_config_file(parser, args, argv) -> None:
    sub_actions = [a for a in parser._actions
                   if isinstance(a, argparse._SubParsersAction)]
    subparser = sub_actions[0].choices[args.subcommand]
    explicit = set()
    for action in subparser._actions:
        if any(opt in argv for opt in action.option_strings):
            explicit.add(action.dest)
    for key, raw in _parse_config_file(args.config).items():
        action = next((a for a in subparser._actions if a.dest == key), None)
        if action is None:
            raise ValueError(f"config key {key!r} is not an option of "
                             f"{args.subcommand!r}")
        if key in explicit:
            continue
        if isinstance(action, argparse._StoreTrueAction):
            value = raw.lower() in ("1", "true", "yes", "on")
        elif action.type is not None:
            value = action.type(raw)
        else:
            value = raw
        if action.choices and value not in action.choices:
            raise ValueError(f"config key {key!r}: {value!r} not in "
                             f"{list(action.choices)}")
        setattr(args, key, value)


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if getattr(args, "config", None):
            _apply_config_file(parser, args, argv)
        return args.func(args)
    except (ValueError, KeyError, OSError) as exc:
        return _die(type(exc).__name__, str(exc))


if __name__ == "__main__":
    sys.exit(main())
