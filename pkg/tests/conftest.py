from __future__ import annotations

from pathlib import Path

import pytest

from logtriad.corpus import Split, TemplateCatalog, load_sequences, load_templates
from logtriad.hierarchy import build_tree, extract_all, load_extraction_fixture, make_triple

TESTS_DIR = Path(__file__).parent
DATA_DIR = TESTS_DIR / "data"
DEMO_DIR = Path(__file__).parents[1] / "src" / "logtriad" / "data" / "hdfs_demo"


@pytest.fixture(scope="session")
def demo_catalog():
    return load_templates(DEMO_DIR / "templates.csv")


@pytest.fixture(scope="session")
def demo_fixture():
    return load_extraction_fixture(DEMO_DIR / "extraction_fixture.csv")


@pytest.fixture(scope="session")
def demo_tree(demo_catalog, demo_fixture):
    return build_tree(demo_catalog, extract_all(demo_catalog, fixture=demo_fixture))


@pytest.fixture(scope="session")
def micro_train(demo_catalog):
    return load_sequences(DATA_DIR / "micro" / "train.csv", demo_catalog, Split.TRAIN)


@pytest.fixture(scope="session")
def micro_test(demo_catalog):
    return load_sequences(DATA_DIR / "micro" / "test.csv", demo_catalog, Split.TEST)


@pytest.fixture()
def toy_catalog():
    """The canonical 3-template example: two session/open leaves, one block/write."""
    return TemplateCatalog(
        templates={
            "T1": "Open session started",
            "T2": "Open session succeeded",
            "T3": "Write block started",
        }
    )


@pytest.fixture()
def toy_triples():
    return [
        make_triple("T1", "session", "open", "started"),
        make_triple("T2", "session", "open", "succeeded"),
        make_triple("T3", "block", "write", "started"),
    ]


@pytest.fixture()
def toy_tree(toy_catalog, toy_triples):
    return build_tree(toy_catalog, toy_triples)
