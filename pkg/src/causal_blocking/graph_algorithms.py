"""Reachability, c-components, and a d-separation oracle over Admg graphs.

Reachability closures use per-node integer bitsets with an iterative
worklist, so they stay cheap and stack-safe up to the 4096-node cap.
d-separation runs on the canonical DAG expansion in which every bidirected
edge {a, b} becomes a fresh latent node with arrows into a and b; latents
are never conditioned on.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

from causal_blocking.admg import Admg

__all__ = [
    "CComponentPartition",
    "ancestors",
    "c_component_of",
    "c_components",
    "d_separated",
    "descendants",
    "parents",
]


def _index(graph: Admg) -> dict[str, int]:
    return {name: i for i, name in enumerate(graph.sorted_nodes())}


def _closure(order: list[str], edges, reverse: bool) -> dict[str, int]:
    """Bitset transitive closure of the directed part, including the node itself.

    With ``reverse=False`` the bit j of closure[v] means v reaches j
    (descendants); with ``reverse=True`` it means j reaches v (ancestors).
    """
    idx = {name: i for i, name in enumerate(order)}
    adj = [0] * len(order)
    for tail, head in edges:
        if reverse:
            adj[idx[head]] |= 1 << idx[tail]
        else:
            adj[idx[tail]] |= 1 << idx[head]
    closure = [1 << i for i in range(len(order))]
    pending = deque(range(len(order)))
    in_queue = [True] * len(order)
    # Propagate until a fixed point; each pop unions the closures of direct
    # successors, re-queueing predecessors whose set grew.
    preds: list[list[int]] = [[] for _ in order]
    for tail, head in edges:
        a, b = (idx[head], idx[tail]) if reverse else (idx[tail], idx[head])
        preds[b].append(a)
    while pending:
        i = pending.popleft()
        in_queue[i] = False
        new = closure[i] | adj[i]
        bits = adj[i]
        while bits:
            low = bits & -bits
            new |= closure[low.bit_length() - 1]
            bits ^= low
        if new != closure[i]:
            closure[i] = new
            for p in preds[i]:
                if not in_queue[p]:
                    in_queue[p] = True
                    pending.append(p)
    return {name: closure[i] for name, i in idx.items()}


def _bits_to_names(bits: int, order: list[str]) -> list[str]:
    out = []
    while bits:
        low = bits & -bits
        out.append(order[low.bit_length() - 1])
        bits ^= low
    return out


def ancestors(graph: Admg, node: str) -> list[str]:
    """All nodes with a directed path (length >= 0) into ``node``, sorted."""
    if node not in graph.nodes:
        raise ValueError(f"unknown node {node!r}")
    order = graph.sorted_nodes()
    closure = _closure(order, graph.directed_edges, reverse=True)
    return _bits_to_names(closure[node], order)


def descendants(graph: Admg, node: str) -> list[str]:
    """All nodes reachable from ``node`` by directed paths (length >= 0), sorted."""
    if node not in graph.nodes:
        raise ValueError(f"unknown node {node!r}")
    order = graph.sorted_nodes()
    closure = _closure(order, graph.directed_edges, reverse=False)
    return _bits_to_names(closure[node], order)


def parents(graph: Admg, node_set) -> list[str]:
    """Tails of directed edges whose head lies in ``node_set``; may overlap it."""
    members = set(node_set)
    unknown = members - graph.nodes
    if unknown:
        raise ValueError(f"unknown node {min(unknown)!r}")
    return sorted({t for t, h in graph.directed_edges if h in members})


@dataclass
class CComponentPartition:
    """Disjoint bidirected-connectivity classes covering every node.

    ``components`` is ordered by least element; ``index_of`` maps each node
    to its component's position in that list.
    """

    components: list[list[str]]
    index_of: dict[str, int]


def c_components(graph: Admg) -> CComponentPartition:
    """Partition nodes into groups connected by bidirected paths."""
    parent: dict[str, str] = {n: n for n in graph.nodes}

    def find(x: str) -> str:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for a, b in graph.bidirected_edges:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[ra] = rb
    groups: dict[str, list[str]] = {}
    for n in graph.nodes:
        groups.setdefault(find(n), []).append(n)
    components = sorted((sorted(g) for g in groups.values()), key=lambda g: g[0])
    index_of = {n: i for i, comp in enumerate(components) for n in comp}
    return CComponentPartition(components, index_of)


def c_component_of(graph: Admg, node: str) -> list[str]:
    """The unique c-component containing ``node``."""
    if node not in graph.nodes:
        raise ValueError(f"unknown node {node!r}")
    partition = c_components(graph)
    return partition.components[partition.index_of[node]]


def d_separated(graph: Admg, a, b, given) -> bool:
    """Whether every path between ``a`` and ``b`` is blocked given ``given``.

    Standard d-separation on the latent expansion, decided by the reachable
    procedure (Koller & Friedman, algorithm 3.1): walk (node, direction)
    states from ``a`` along legal trail extensions and test whether any node
    of ``b`` is reachable.  A collider may be traversed only if it or one of
    its descendants is conditioned on; a non-collider only if it is not.
    """
    a, b, given = set(a), set(b), set(given)
    for name, members in (("a", a), ("b", b), ("given", given)):
        unknown = members - graph.nodes
        if unknown:
            raise ValueError(f"unknown node {min(unknown)!r} in {name}")
    if a & b or a & given or b & given:
        raise ValueError("a, b, and given must be pairwise disjoint")

    # Latent expansion: observed nodes keep their names, each bidirected edge
    # contributes one latent parent of both endpoints.
    children: dict[object, set] = {n: set(graph.children_of(n)) for n in graph.nodes}
    parents_map: dict[object, set] = {n: set(graph.parents_of(n)) for n in graph.nodes}
    for i, (u, v) in enumerate(sorted(graph.bidirected_edges)):
        latent = ("latent", i)
        children[latent] = {u, v}
        parents_map[latent] = set()
        parents_map[u].add(latent)
        parents_map[v].add(latent)

    # Nodes whose descendant set (in the expansion) meets the conditioning set
    # unlock collider traversal.  Latents have no conditioned descendants
    # beyond their observed children's descendants.
    opens_collider: set = set()
    stack = list(given)
    while stack:
        node = stack.pop()
        if node in opens_collider:
            continue
        opens_collider.add(node)
        stack.extend(parents_map[node])

    start = [(n, "up") for n in a]  # "up": trail arrived against edge direction
    visited: set[tuple[object, str]] = set()
    queue = deque(start)
    while queue:
        node, direction = queue.popleft()
        if (node, direction) in visited:
            continue
        visited.add((node, direction))
        if node in b:
            return False
        if direction == "up" and node not in given:
            for p in parents_map[node]:
                queue.append((p, "up"))
            for c in children[node]:
                queue.append((c, "down"))
        elif direction == "down":
            if node not in given:
                for c in children[node]:
                    queue.append((c, "down"))
            if node in opens_collider:
                for p in parents_map[node]:
                    queue.append((p, "up"))
    return True
