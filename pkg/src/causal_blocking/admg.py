"""Acyclic directed mixed graphs with a designated treatment and response.

An ``Admg`` carries the observed variables only; unobserved confounders are
represented by bidirected edges (latent projection).  Node names are plain
identifiers and every set-valued result in this package is emitted in
lexicographic byte order, so equal inputs produce byte-identical output.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

__all__ = [
    "MAX_NODES",
    "Admg",
    "GraphParseError",
    "ValidationVerdict",
    "parse_graph",
    "serialize_graph",
    "validate",
]

MAX_NODES = 4096

_NODE_NAME = re.compile(r"^[A-Za-z0-9_]+$")


class GraphParseError(ValueError):
    """Raised for malformed graph documents (syntax or semantic)."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


def _check_node_name(name: str) -> str:
    if not _NODE_NAME.match(name):
        raise ValueError(f"invalid node name {name!r}: must be non-empty over [A-Za-z0-9_]")
    return name


@dataclass(frozen=True)
class Admg:
    """Immutable mixed graph over observed variables.

    ``directed_edges`` are (tail, head) pairs; ``bidirected_edges`` are stored
    canonically with the lexicographically smaller endpoint first.  The
    constructor normalizes and rejects structurally nonsensical input
    (unknown endpoints, self-loops, bad names, size cap); soft invariants
    such as acyclicity and treatment != response are left to ``validate`` so
    that broken graphs can be loaded, diagnosed, and reported.
    """

    nodes: frozenset[str]
    directed_edges: frozenset[tuple[str, str]]
    bidirected_edges: frozenset[tuple[str, str]]
    treatment: str
    response: str

    def __init__(
        self,
        nodes,
        directed_edges,
        bidirected_edges,
        treatment: str,
        response: str,
    ):
        node_set = frozenset(_check_node_name(n) for n in nodes)
        if len(node_set) > MAX_NODES:
            raise ValueError(f"graph has {len(node_set)} nodes, maximum is {MAX_NODES}")
        directed = set()
        for tail, head in directed_edges:
            if tail not in node_set or head not in node_set:
                raise ValueError(f"edge {tail} -> {head} references an undeclared node")
            if tail == head:
                raise ValueError(f"self-loop at {tail}")
            directed.add((tail, head))
        bidirected = set()
        for a, b in bidirected_edges:
            if a not in node_set or b not in node_set:
                raise ValueError(f"bidirected edge {a} <-> {b} references an undeclared node")
            if a == b:
                raise ValueError(f"self-loop at {a}")
            bidirected.add((min(a, b), max(a, b)))
        for name, role in ((treatment, "treatment"), (response, "response")):
            if name not in node_set:
                raise ValueError(f"{role} {name!r} is not a declared node")
        object.__setattr__(self, "nodes", node_set)
        object.__setattr__(self, "directed_edges", frozenset(directed))
        object.__setattr__(self, "bidirected_edges", frozenset(bidirected))
        object.__setattr__(self, "treatment", treatment)
        object.__setattr__(self, "response", response)

    def sorted_nodes(self) -> list[str]:
        return sorted(self.nodes)

    def parents_of(self, node: str) -> set[str]:
        return {t for t, h in self.directed_edges if h == node}

    def children_of(self, node: str) -> set[str]:
        return {h for t, h in self.directed_edges if t == node}

    def bidirected_neighbors(self, node: str) -> set[str]:
        out = set()
        for a, b in self.bidirected_edges:
            if a == node:
                out.add(b)
            elif b == node:
                out.add(a)
        return out

    def induced(self, keep, treatment: str | None = None, response: str | None = None) -> "Admg":
        """Subgraph on ``keep``; edges with a removed endpoint are dropped."""
        keep = set(keep)
        return Admg(
            keep,
            {(t, h) for t, h in self.directed_edges if t in keep and h in keep},
            {(a, b) for a, b in self.bidirected_edges if a in keep and b in keep},
            treatment or self.treatment,
            response or self.response,
        )

    def covariates(self) -> list[str]:
        return sorted(self.nodes - {self.treatment, self.response})


@dataclass
class ValidationVerdict:
    """Outcome of ``validate``: ``ok`` iff no violations were found."""

    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def _directed_cycle(graph: Admg) -> list[str] | None:
    """Return the nodes of one directed cycle, or None if acyclic.

    Kahn's algorithm; whatever cannot be topologically ordered lies on or
    downstream of a cycle, and a walk through it recovers one cycle.
    """
    indegree = {n: 0 for n in graph.nodes}
    children: dict[str, list[str]] = {n: [] for n in graph.nodes}
    for tail, head in graph.directed_edges:
        indegree[head] += 1
        children[tail].append(head)
    queue = [n for n in graph.nodes if indegree[n] == 0]
    seen = 0
    while queue:
        node = queue.pop()
        seen += 1
        for child in children[node]:
            indegree[child] -= 1
            if indegree[child] == 0:
                queue.append(child)
    if seen == len(graph.nodes):
        return None
    remaining = {n for n in graph.nodes if indegree[n] > 0}
    start = min(remaining)
    path = [start]
    on_path = {start}
    node = start
    while True:
        node = min(c for c in children[node] if c in remaining)
        if node in on_path:
            return sorted(path[path.index(node):])
        path.append(node)
        on_path.add(node)


def validate(graph: Admg) -> ValidationVerdict:
    """Check every Admg invariant; violations come back as data, not errors."""
    verdict = ValidationVerdict()
    cycle = _directed_cycle(graph)
    if cycle is not None:
        verdict.violations.append("directed cycle: " + ",".join(cycle))
    if graph.treatment == graph.response:
        verdict.violations.append("treatment equals response")
    return verdict


_EDGE_RE = re.compile(r"^edge\s+(\S+)\s*->\s*(\S+)$")
_BIDIRECTED_RE = re.compile(r"^bidirected\s+(\S+)\s*<->\s*(\S+)$")


def parse_graph(document: str) -> Admg:
    """Parse the line-oriented graph document format into an Admg.

    Raises GraphParseError with a line number for syntax problems, undeclared
    nodes, self-loops, duplicate edges, and missing or repeated
    treatment/response directives.
    """
    nodes: list[str] = []
    node_set: set[str] = set()
    directed: set[tuple[str, str]] = set()
    bidirected: set[tuple[str, str]] = set()
    treatment: str | None = None
    response: str | None = None

    def require_known(name: str, lineno: int) -> str:
        if name not in node_set:
            raise GraphParseError(f"unknown node {name!r}", lineno)
        return name

    for lineno, raw in enumerate(document.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        keyword = line.split(None, 1)[0]
        if keyword == "node":
            parts = line.split()
            if len(parts) != 2:
                raise GraphParseError("expected 'node <name>'", lineno)
            name = parts[1]
            if not _NODE_NAME.match(name):
                raise GraphParseError(f"invalid node name {name!r}", lineno)
            if name in node_set:
                raise GraphParseError(f"duplicate node {name!r}", lineno)
            nodes.append(name)
            node_set.add(name)
            if len(node_set) > MAX_NODES:
                raise GraphParseError(f"more than {MAX_NODES} nodes", lineno)
        elif keyword == "edge":
            m = _EDGE_RE.match(line)
            if not m:
                raise GraphParseError("expected 'edge <tail> -> <head>'", lineno)
            tail, head = (require_known(n, lineno) for n in m.groups())
            if tail == head:
                raise GraphParseError(f"self-loop at {tail}", lineno)
            if (tail, head) in directed:
                raise GraphParseError(f"duplicate edge {tail} -> {head}", lineno)
            directed.add((tail, head))
        elif keyword == "bidirected":
            m = _BIDIRECTED_RE.match(line)
            if not m:
                raise GraphParseError("expected 'bidirected <a> <-> <b>'", lineno)
            a, b = (require_known(n, lineno) for n in m.groups())
            if a == b:
                raise GraphParseError(f"self-loop at {a}", lineno)
            canon = (min(a, b), max(a, b))
            if canon in bidirected:
                raise GraphParseError(f"duplicate bidirected edge {canon[0]} <-> {canon[1]}", lineno)
            bidirected.add(canon)
        elif keyword == "treatment":
            parts = line.split()
            if len(parts) != 2:
                raise GraphParseError("expected 'treatment <node>'", lineno)
            if treatment is not None:
                raise GraphParseError("duplicate treatment directive", lineno)
            treatment = require_known(parts[1], lineno)
        elif keyword == "response":
            parts = line.split()
            if len(parts) != 2:
                raise GraphParseError("expected 'response <node>'", lineno)
            if response is not None:
                raise GraphParseError("duplicate response directive", lineno)
            response = require_known(parts[1], lineno)
        else:
            raise GraphParseError(f"unknown directive {keyword!r}", lineno)

    if treatment is None:
        raise GraphParseError("missing treatment directive")
    if response is None:
        raise GraphParseError("missing response directive")
    return Admg(node_set, directed, bidirected, treatment, response)


def serialize_graph(graph: Admg) -> str:
    """Canonical text form: sorted nodes, sorted edges, treatment, response.

    ``parse_graph(serialize_graph(g))`` equals ``g``, and serializing a
    parsed canonical document reproduces it byte for byte.
    """
    lines = [f"node {n}" for n in graph.sorted_nodes()]
    lines += [f"edge {t} -> {h}" for t, h in sorted(graph.directed_edges)]
    lines += [f"bidirected {a} <-> {b}" for a, b in sorted(graph.bidirected_edges)]
    lines.append(f"treatment {graph.treatment}")
    lines.append(f"response {graph.response}")
    return "\n".join(lines) + "\n"
