# conftest.py — Shared fixtures for the DroidMark test suite

from pathlib import Path

import pytest

from app_ir import load_app
from catalog import default_catalog
from config import AnalysisConfig
from taint import analyze

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture(scope="session")
def catalog():
    return default_catalog()


@pytest.fixture(scope="session")
def elite_app():
    return load_app(FIXTURES / "elite.ir")


@pytest.fixture(scope="session")
def elite_flows(elite_app, catalog):
    return analyze(elite_app, catalog, AnalysisConfig())


def read_expected(path) -> set:
    """(source_site, sink_site) pairs from a .expected sidecar file."""
    pairs = set()
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line.strip() and not line.startswith("#"):
            source, sink = line.split("\t")
            pairs.add((source.strip(), sink.strip()))
    return pairs


@pytest.fixture(scope="session")
def expected_flows():
    return lambda name: read_expected(FIXTURES / name)
