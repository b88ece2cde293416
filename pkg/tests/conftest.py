import json

import pytest

from worldsmith import SAMPLE_CORPUS_PATH
from worldsmith import corpus as corpus_mod
from worldsmith import synthetic


@pytest.fixture(scope="session")
def sample_corpus_path():
    return str(SAMPLE_CORPUS_PATH)


@pytest.fixture(scope="session")
def sample_corpus(sample_corpus_path):
    return corpus_mod.load_corpus(sample_corpus_path)


@pytest.fixture(scope="session")
def sample_corpus_raw(sample_corpus_path):
    with open(sample_corpus_path, encoding="utf-8") as fh:
        return json.load(fh)


@pytest.fixture(scope="session")
def planted_corpus():
    return synthetic.make_clustered_corpus(seed=0)
