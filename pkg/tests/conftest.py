from __future__ import annotations

from collections import defaultdict
from pathlib import Path

import pytest

from causal_blocking.admg import parse_graph

CORPUS = Path(__file__).resolve().parent.parent / "corpus"

# Valid graphs shipped in the corpus, by node count.
CORPUS_GRAPHS = [
    "markovian.graph",
    "latent_covariates.graph",
    "latent_parent_response.graph",
    "latent_ancestor_response.graph",
    "response_descendant.graph",
    "response_descendant_latent.graph",
    "post_treatment_mediators.graph",
    "post_treatment_latent_collider.graph",
    "full_pipeline.graph",
    "full_pipeline_reduced.graph",
    "three_covariates.graph",
    "drug_bp.graph",
    "xy_only.graph",
]


@pytest.fixture(scope="session")
def corpus():
    return CORPUS


def load_corpus_graph(name: str):
    return parse_graph((CORPUS / name).read_text())


@pytest.fixture(scope="session")
def graphs():
    return {name: load_corpus_graph(name) for name in CORPUS_GRAPHS}


def pytest_configure(config):
    config.addinivalue_line(
        "markers", "criterion(n): acceptance-criterion number for summary reporting"
    )


_criterion_results: dict[int, list[bool]] = defaultdict(list)


def pytest_runtest_logreport(report):
    if report.when != "call":
        return
    marker = None
    for mark in getattr(report, "keywords", {}):
        if mark.startswith("criterion_"):
            marker = int(mark.split("_", 1)[1])
    if marker is not None:
        _criterion_results[marker].append(report.passed)


@pytest.hookimpl(trylast=True)
def pytest_collection_modifyitems(items):
    # Propagate criterion markers into keyword space for the report hook.
    for item in items:
        mark = item.get_closest_marker("criterion")
        if mark is not None:
            item.add_marker(getattr(pytest.mark, f"criterion_{mark.args[0]}"))


def pytest_terminal_summary(terminalreporter):
    if not _criterion_results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criterion_results):
        outcomes = _criterion_results[number]
        status = "PASS" if all(outcomes) else "FAIL"
        detail = f"{sum(outcomes)}/{len(outcomes)} checks"
        terminalreporter.write_line(f"criterion {number}: {status} ({detail})")
