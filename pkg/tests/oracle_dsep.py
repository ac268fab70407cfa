"""Brute-force d-separation oracle: enumerate every simple path and apply
the blocking rule node by node.  Deliberately independent of the production
implementation (no shared traversal code); usable up to about 12 observed
nodes.
"""

from __future__ import annotations

from causal_blocking.admg import Admg

ORACLE_NODE_LIMIT = 12


def _expansion(graph: Admg):
    """Directed edge list of the latent expansion plus the node set."""
    nodes: list = sorted(graph.nodes)
    edges: list[tuple] = sorted(graph.directed_edges)
    for i, (a, b) in enumerate(sorted(graph.bidirected_edges)):
        latent = ("L", i)
        nodes.append(latent)
        edges.append((latent, a))
        edges.append((latent, b))
    return nodes, edges


def _descendant_map(nodes, edges):
    children = {n: [] for n in nodes}
    for t, h in edges:
        children[t].append(h)
    out = {}
    for n in nodes:
        seen = {n}
        stack = [n]
        while stack:
            cur = stack.pop()
            for c in children[cur]:
                if c not in seen:
                    seen.add(c)
                    stack.append(c)
        out[n] = seen
    return out


def _simple_paths(nodes, edges, start, goal):
    """All simple paths in the undirected skeleton, as lists of (node, step)
    where step records whether the traversed edge pointed forward."""
    neighbors: dict = {n: [] for n in nodes}
    for t, h in edges:
        neighbors[t].append((h, "fwd"))
        neighbors[h].append((t, "bwd"))
    paths = []
    stack = [(start, [start], [])]
    while stack:
        node, path, steps = stack.pop()
        if node == goal:
            paths.append((path, steps))
            continue
        for nxt, direction in neighbors[node]:
            if nxt not in path:
                stack.append((nxt, path + [nxt], steps + [direction]))
    return paths


def _path_blocked(path, steps, given, descendants):
    for i in range(1, len(path) - 1):
        node = path[i]
        into_prev = steps[i - 1] == "fwd"  # edge points into node
        into_next = steps[i] == "bwd"
        collider = into_prev and into_next
        if collider:
            if not any(d in given for d in descendants[node]):
                return True
        else:
            if node in given:
                return True
    return False


def d_separated_bruteforce(graph: Admg, a, b, given) -> bool:
    if len(graph.nodes) > ORACLE_NODE_LIMIT:
        raise ValueError("oracle limited to small graphs")
    a, b, given = set(a), set(b), set(given)
    nodes, edges = _expansion(graph)
    descendants = _descendant_map(nodes, edges)
    for source in sorted(a):
        for target in sorted(b):
            for path, steps in _simple_paths(nodes, edges, source, target):
                if not _path_blocked(path, steps, given, descendants):
                    return False
    return True
