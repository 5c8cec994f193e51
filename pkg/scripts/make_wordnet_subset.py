#!/usr/bin/env python3
"""Extract a hypernym-closed slice of a WordNet dict/ directory.

Keeps every NOUN/ADJ synset that contains one of the requested lemmas,
plus the full hypernym ancestry of those synsets, and writes valid
data.noun / data.adj / index.noun / index.adj files containing only the
retained entries (original lines, unmodified). Because all hypernym
paths of a retained synset are retained too, taxonomy depths and
least-common-subsumer lookups over the retained words are identical to
the full database.

Usage:
    python scripts/make_wordnet_subset.py --dict-dir /path/to/dict \
        --words-file words.txt --output tests/data/wordnet31
"""

from __future__ import annotations

import argparse
import os


def parse_data_file(path):
    """offset -> (line, [hypernym offsets], [lemmas lowercased])."""
    entries = {}
    header = []
    with open(path, encoding="utf-8") as f:
        for line in f:
            if line.startswith(" "):
                header.append(line)
                continue
            if not line.strip():
                continue
            body = line.split("|", 1)[0].rstrip()
            fields = body.split(" ")
            offset = fields[0]
            w_cnt = int(fields[3], 16)
            lemmas = []
            i = 4
            for _ in range(w_cnt):
                word = fields[i]
                if word.endswith(")") and "(" in word:
                    word = word[:word.rindex("(")]
                lemmas.append(word.lower())
                i += 2
            p_cnt = int(fields[i])
            i += 1
            hypernyms = []
            for _ in range(p_cnt):
                symbol, tgt, tgt_pos = fields[i], fields[i + 1], fields[i + 2]
                i += 4
                if symbol in ("@", "@i") and tgt_pos == "n":
                    hypernyms.append(tgt)
            entries[offset] = (line, hypernyms, lemmas)
    return entries, header


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--dict-dir", required=True,
                    help="full WordNet dict/ directory")
    ap.add_argument("--words-file", required=True,
                    help="one lemma per line; # comments allowed")
    ap.add_argument("--output", required=True)
    args = ap.parse_args()

    words = set()
    with open(args.words_file, encoding="utf-8") as f:
        for line in f:
            word = line.split("#", 1)[0].strip().lower()
            if word:
                words.add(word.replace(" ", "_"))

    noun, noun_header = parse_data_file(os.path.join(args.dict_dir, "data.noun"))
    adj, adj_header = parse_data_file(os.path.join(args.dict_dir, "data.adj"))

    keep_noun = {off for off, (_, _, lemmas) in noun.items()
                 if words & set(lemmas)}
    keep_adj = {off for off, (_, _, lemmas) in adj.items()
                if words & set(lemmas)}
    # hypernym closure (noun hierarchy only; adjectives have no hypernyms)
    frontier = list(keep_noun)
    while frontier:
        off = frontier.pop()
        for parent in noun[off][1]:
            if parent not in keep_noun:
                keep_noun.add(parent)
                frontier.append(parent)

    os.makedirs(args.output, exist_ok=True)
    for name, entries, keep, header in (
            ("data.noun", noun, keep_noun, noun_header),
            ("data.adj", adj, keep_adj, adj_header)):
        with open(os.path.join(args.output, name), "w", encoding="utf-8") as f:
            f.writelines(header)
            for off in sorted(keep):
                f.write(entries[off][0])

    # index lines restricted to the requested lemmas
    for name in ("index.noun", "index.adj"):
        src = os.path.join(args.dict_dir, name)
        if not os.path.exists(src):
            continue
        with open(src, encoding="utf-8") as f, \
                open(os.path.join(args.output, name), "w",
                     encoding="utf-8") as out:
            for line in f:
                if line.startswith(" "):
                    out.write(line)
                    continue
                if line.split(" ", 1)[0] in words:
                    out.write(line)

    license_src = os.path.join(args.dict_dir, "..", "LICENSE")
    if os.path.exists(license_src):
        with open(license_src, encoding="utf-8") as f:
            text = f.read()
        with open(os.path.join(args.output, "LICENSE"), "w",
                  encoding="utf-8") as f:
            f.write(text)

    n_lemma_noun = sum(1 for off in keep_noun if words & set(noun[off][2]))
    print(f"kept {len(keep_noun)} noun synsets ({n_lemma_noun} with requested "
          f"lemmas) and {len(keep_adj)} adj synsets -> {args.output}")


if __name__ == "__main__":
    main()
