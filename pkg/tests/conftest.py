import os
from pathlib import Path

import pytest

from decoyforge import Corpus, TripletRecord, load_taxonomy

DATA_DIR = Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def wn31():
    """Standard WordNet database slice (full dict/ directory layout).

    Point DECOYFORGE_WORDNET_DICT at a complete WordNet dict/ directory
    to run the same tests against the full database.
    """
    path = os.environ.get("DECOYFORGE_WORDNET_DICT",
                          str(DATA_DIR / "wordnet31"))
    return load_taxonomy(path, "wordnet-db")


@pytest.fixture(scope="session")
def toy_tax(tmp_path_factory):
    """root -> animal -> {cat, dog}, plus an unrelated adjective."""
    path = tmp_path_factory.mktemp("tax") / "toy.tsv"
    path.write_text(
        "root\tNOUN\troot\t\n"
        "animal\tNOUN\tanimal\troot\n"
        "cat\tNOUN\tcat\tanimal\n"
        "dog\tNOUN\tdog\tanimal\n"
        "adj:cute\tADJ\tcute\t\n",
        encoding="utf-8")
    return load_taxonomy(path, "edge-list")


def make_corpus(rows):
    """rows: (id, image_id, split, question, target, [decoys])."""
    records = []
    for row in rows:
        decoys = list(row[5]) if len(row) > 5 else []
        records.append(TripletRecord(
            triplet_id=row[0], image_id=row[1], split=row[2],
            question=row[3], target=row[4], orig_decoys=decoys))
    return Corpus.from_records(records)
