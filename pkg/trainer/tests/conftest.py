import json

import pytest

from rrtrainer.data import load_corpus

from tsupport import make_corpus_doc


@pytest.fixture
def small_corpus():
    return load_corpus(json.dumps(make_corpus_doc()))
