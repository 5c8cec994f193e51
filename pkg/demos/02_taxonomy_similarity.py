"""Wu-Palmer similarity over a WordNet-format taxonomy.

Loads the bundled slice of the standard WordNet 3.1 noun/adjective
database (tests/data/wordnet31, same file format as a full dict/
directory) and shows the three levels of the similarity used to filter
ambiguous decoys: synset-to-synset, word-to-word (max over sense
pairs), and word-sequence-to-word-sequence (max of two directed
products).
"""

from pathlib import Path

from decoyforge import load_taxonomy, normalize, wup_sequence, wup_word

dict_dir = Path(__file__).parent.parent / "tests" / "data" / "wordnet31"
tax = load_taxonomy(dict_dir, "wordnet-db")
print(f"loaded {len(tax.synsets)} synsets, "
      f"{len(tax.lemma_index)} indexed lemmas\n")

print("word-level scores (max over all noun/adjective sense pairs):")
for w1, w2 in [("cat", "dog"), ("lion", "tiger"), ("red", "blue"),
               ("daytime", "night"), ("cat", "bus"), ("lady", "woman")]:
    print(f"  {w1:8s} vs {w2:8s} -> {wup_word(w1, w2, tax):.3f}")

print("\nthe senses of 'cat' (note the big-cat sense, which is why"
      "\n'cat' vs 'lion' scores high):")
for syn in tax.synsets_for_word("cat"):
    print(f"  {syn.id}: {', '.join(syn.lemmas[:4])}")

print("\nsequence scores, as used by the decoy ambiguity filter:")
pairs = [("a cute cat", "cat"), ("during the daytime", "daytime"),
         ("red car", "blue bus"), ("the small dog", "a cute cat")]
for s1, s2 in pairs:
    score = wup_sequence(normalize(s1), normalize(s2), tax)
    flag = "AMBIGUOUS" if score >= 0.9 else "ok as decoy"
    print(f"  {s1!r} vs {s2!r} -> {score:.3f}  [{flag}]")

print("\nA phrase that contains the other always scores 1.0, which is"
      "\nwhat lets the filter drop rephrasings of the correct answer.")
