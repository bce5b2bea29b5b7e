from pathlib import Path

import pytest

from moralex.lexicon import load_lexicon
from moralex.synthetic import planted_corpus

DATA = Path(__file__).parent / "data"


@pytest.fixture
def data_dir():
    return DATA


@pytest.fixture
def sample_lexicon():
    return load_lexicon(DATA / "sample_lexicon.tsv")


@pytest.fixture
def sample_mfd():
    return load_lexicon(DATA / "sample_mfd.tsv", "mfd")


@pytest.fixture(scope="session")
def planted():
    return planted_corpus(n_docs=600, seed=0)


@pytest.fixture(scope="session")
def planted_files(planted, tmp_path_factory):
    """The planted corpus written out in the formats the command line reads."""
    from moralex.lexicon import save_lexicon
    from moralex.simon import save_embeddings
    from moralex.textproc import save_dataset

    d = tmp_path_factory.mktemp("planted")
    save_dataset(planted.documents, d / "docs.jsonl")
    save_lexicon(planted.lexicon, d / "lexicon.tsv")
    save_lexicon(planted.mfd, d / "mfd.tsv", format="mfd")
    save_embeddings(planted.embeddings, d / "emb.txt")
    return d


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
