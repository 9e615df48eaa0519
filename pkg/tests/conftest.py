from __future__ import annotations

import sys
import threading
from datetime import date
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))  # for the oracles module

from bookrec import cli, store
from bookrec.ontology import load_ontology
from bookrec.service import RecommenderService, make_server

FIXTURES = Path(__file__).parent / "fixtures"
GOLDEN = FIXTURES / "golden"
REFERENCE_YEAR = 2018
QUERY_TODAY = date(2018, 6, 1)  # default year filter becomes [2016, 2018]
FIXED_CLOCK = lambda: 1700000000.0  # noqa: E731 - deterministic feedback timestamps


def build_settings(output: str | Path) -> dict:
    return {
        "ontology": str(FIXTURES / "ontology.jsonl"),
        "metadata": str(FIXTURES / "chapters.jsonl"),
        "reference_year": REFERENCE_YEAR,
        "jaccard_threshold": 0.125,
        "cosine_threshold": 0.5,
        "inclusive_cosine": False,
        "budget": 15,
        "workers": 1,
        "output": str(output),
    }


@pytest.fixture(scope="session")
def fixture_graph():
    with open(FIXTURES / "ontology.jsonl", "rb") as fh:
        return load_ontology(fh)


@pytest.fixture(scope="session")
def catalog_path(tmp_path_factory) -> Path:
    """Catalog built once per session from the fixture corpus."""
    path = tmp_path_factory.mktemp("catalog") / "fixture.catalog"
    catalog = cli.run_build(build_settings(path))
    store.save_catalog(catalog, path)
    return path


@pytest.fixture()
def catalog(catalog_path) -> store.Catalog:
    """Fresh mutable copy per test (tests may append feedback)."""
    return store.load_catalog(catalog_path)


@pytest.fixture()
def service(catalog) -> RecommenderService:
    return RecommenderService(catalog, today=QUERY_TODAY, clock=FIXED_CLOCK)


def pytest_runtest_logreport(report):
    """One visible PASS/FAIL line per acceptance criterion."""
    if report.when == "call" and "test_acceptance.py" in report.nodeid:
        name = report.nodeid.split("::")[-1]
        print(f"\n[ACCEPTANCE] {name}: {'PASS' if report.passed else 'FAIL'}")


@pytest.fixture()
def http_service(catalog, tmp_path):
    """Live HTTP server over a fresh catalog copy; yields its base URL."""
    journal = store.FeedbackJournal(tmp_path / "feedback.jsonl")
    svc = RecommenderService(catalog, journal=journal, today=QUERY_TODAY, clock=FIXED_CLOCK)
    server = make_server(svc, "127.0.0.1", 0)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    host, port = server.server_address[:2]
    try:
        yield f"http://{host}:{port}"
    finally:
        server.shutdown()
        server.server_close()
        thread.join(timeout=5)
