from __future__ import annotations

import pytest

from causal_blocking.admg import (
    Admg,
    GraphParseError,
    parse_graph,
    serialize_graph,
    validate,
)

from conftest import CORPUS, CORPUS_GRAPHS, load_corpus_graph


def test_parse_minimal_document():
    g = parse_graph("node X\nnode Y\nedge X -> Y\ntreatment X\nresponse Y")
    assert sorted(g.nodes) == ["X", "Y"]
    assert g.directed_edges == frozenset({("X", "Y")})
    assert g.treatment == "X" and g.response == "Y"


def test_parse_comments_and_blanks():
    text = "# header\n\nnode A\nnode B  # trailing\nedge A -> B\ntreatment A\nresponse B\n"
    g = parse_graph(text)
    assert sorted(g.nodes) == ["A", "B"]


def test_full_pipeline_census():
    g = load_corpus_graph("full_pipeline.graph")
    assert len(g.nodes) == 11
    assert len(g.directed_edges) == 14
    assert len(g.bidirected_edges) == 3


@pytest.mark.parametrize(
    "line,message",
    [
        ("edge A -> A", "self-loop"),
        ("edge A -> Q", "unknown node"),
        ("edge A B", "expected"),
        ("nodule A", "unknown directive"),
        ("node A!", "invalid node name"),
    ],
)
def test_parse_errors_carry_line_numbers(line, message):
    text = f"node A\nnode B\n{line}\ntreatment A\nresponse B"
    with pytest.raises(GraphParseError) as err:
        parse_graph(text)
    assert message in str(err.value)
    assert "line 3" in str(err.value)


def test_self_loop_on_first_line():
    with pytest.raises(GraphParseError, match="line 1"):
        parse_graph("edge A -> A")


@pytest.mark.parametrize(
    "text,message",
    [
        ("node A\nnode B\nedge A -> B\nresponse B", "missing treatment"),
        ("node A\nnode B\nedge A -> B\ntreatment A", "missing response"),
        ("node A\nnode B\ntreatment A\ntreatment B\nresponse B", "duplicate treatment"),
        ("node A\nnode A\ntreatment A\nresponse A", "duplicate node"),
        ("node A\nnode B\nedge A -> B\nedge A -> B\ntreatment A\nresponse B", "duplicate edge"),
    ],
)
def test_directive_errors(text, message):
    with pytest.raises(GraphParseError, match=message):
        parse_graph(text)


def test_bidirected_is_canonicalized():
    g = parse_graph(
        "node A\nnode B\nnode X\nnode Y\nedge X -> Y\n"
        "bidirected B <-> A\ntreatment X\nresponse Y"
    )
    assert g.bidirected_edges == frozenset({("A", "B")})
    assert "bidirected A <-> B" in serialize_graph(g)


def test_serialize_roundtrip_all_corpus():
    for name in CORPUS_GRAPHS:
        g = load_corpus_graph(name)
        text = serialize_graph(g)
        again = parse_graph(text)
        assert again == g, name
        assert serialize_graph(again) == text, name


def test_serialize_is_canonicalization_idempotent():
    messy = "node Y\nnode X\nnode A\nedge X -> Y\nedge A -> Y\ntreatment X\nresponse Y"
    once = serialize_graph(parse_graph(messy))
    twice = serialize_graph(parse_graph(once))
    assert once == twice


def test_xy_only_serializes_to_five_lines():
    g = load_corpus_graph("xy_only.graph")
    assert serialize_graph(g) == "node X\nnode Y\nedge X -> Y\ntreatment X\nresponse Y\n"


def test_validate_ok_on_corpus():
    for name in CORPUS_GRAPHS:
        assert validate(load_corpus_graph(name)).ok, name


def test_validate_reports_cycle():
    g = parse_graph((CORPUS / "cyclic.graph").read_text())
    verdict = validate(g)
    assert not verdict.ok
    assert "directed cycle: A,B" in verdict.violations


def test_validate_treatment_equals_response():
    g = Admg({"X", "Y"}, {("X", "Y")}, set(), "X", "X")
    verdict = validate(g)
    assert "treatment equals response" in verdict.violations


def test_single_mutation_corruptions_rejected():
    for name in ["markovian.graph", "full_pipeline.graph"]:
        text = (CORPUS / name).read_text()
        # Added cycle: reverse edge alongside an existing one.
        g = load_corpus_graph(name)
        tail, head = sorted(g.directed_edges)[0]
        cyclic = text.replace("treatment", f"edge {head} -> {tail}\ntreatment", 1)
        assert not validate(parse_graph(cyclic)).ok, name
        # Dangling endpoint: edge mentioning an undeclared node.
        dangling = text.replace("treatment", "edge Zz -> Y\ntreatment", 1)
        with pytest.raises(GraphParseError):
            parse_graph(dangling)
        # Self-loop.
        looped = text.replace("treatment", "edge Y -> Y\ntreatment", 1)
        with pytest.raises(GraphParseError):
            parse_graph(looped)


def test_constructor_rejects_unknown_endpoints():
    with pytest.raises(ValueError, match="undeclared"):
        Admg({"X", "Y"}, {("X", "Z")}, set(), "X", "Y")
    with pytest.raises(ValueError, match="treatment"):
        Admg({"X", "Y"}, set(), set(), "Q", "Y")


def test_node_cap():
    names = [f"N{i}" for i in range(4097)]
    with pytest.raises(ValueError, match="maximum"):
        Admg(names, set(), set(), "N0", "N1")
