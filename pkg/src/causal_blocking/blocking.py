"""Stable blocking-set computation: graph reductions, construction, verification.

The pipeline reduces the input graph in three stages (cut arrows into the
treatment, drop covariates with no directed path to the response, restrict
to ancestors of the response), then reads the answer off the reduced graph:
the c-component of the response together with its parents, minus treatment
and response, is the unique smallest conditioning set that separates the
response from the remaining ancestral covariates.  Covariates that are
descendants of the treatment are excluded afterwards because blocks formed
on them would shift under intervention.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass

from causal_blocking.admg import Admg
from causal_blocking.graph_algorithms import (
    ancestors,
    c_component_of,
    d_separated,
    descendants,
    parents,
)

__all__ = [
    "BlockingReport",
    "MinimalityVerdict",
    "ReductionTrace",
    "VERIFY_NODE_LIMIT",
    "MINIMALITY_NODE_LIMIT",
    "post_treatment_ancestors",
    "reduce_graph",
    "stable_causal_blocking",
    "theorem_condition_holds",
    "verify_minimality",
]

VERIFY_NODE_LIMIT = 512
MINIMALITY_NODE_LIMIT = 20


@dataclass
class ReductionTrace:
    """The three reduction stages and what each removed.

    ``g_xtilde`` cuts every arrow into the treatment (directed edges and the
    treatment's bidirected edges: under intervention the treatment has no
    causes).  ``g_prime_xtilde`` drops covariates with no directed path to
    the response.  ``g_xtilde_anc`` keeps ancestors of the response plus the
    treatment; the treatment is retained even when causally irrelevant so
    that descendant bookkeeping stays well-defined.
    """

    g_xtilde: Admg
    g_prime_xtilde: Admg
    g_xtilde_anc: Admg
    removed_no_path: list[str]
    removed_non_ancestors: list[str]


def reduce_graph(graph: Admg) -> ReductionTrace:
    """Reduce ``graph`` to the ancestral post-intervention working graph."""
    x, y = graph.treatment, graph.response
    g_xtilde = Admg(
        graph.nodes,
        {(t, h) for t, h in graph.directed_edges if h != x},
        {(a, b) for a, b in graph.bidirected_edges if x not in (a, b)},
        x,
        y,
    )
    causal = set(ancestors(g_xtilde, y))
    no_path = sorted(g_xtilde.nodes - causal - {x, y})
    g_prime_xtilde = g_xtilde.induced(g_xtilde.nodes - set(no_path))
    ancestral = set(ancestors(g_prime_xtilde, y))
    non_anc = sorted(g_prime_xtilde.nodes - ancestral - {x})
    g_xtilde_anc = g_prime_xtilde.induced(g_prime_xtilde.nodes - set(non_anc))
    return ReductionTrace(g_xtilde, g_prime_xtilde, g_xtilde_anc, no_path, non_anc)


def post_treatment_ancestors(trace: ReductionTrace) -> list[str]:
    """Covariates that are both descendants of X and ancestors of Y.

    Computed in the fully reduced graph; blocks formed on these variables
    are unstable because intervening on the treatment changes them.
    """
    g = trace.g_xtilde_anc
    d_x = set(descendants(g, g.treatment))
    a_y = set(ancestors(g, g.response))
    return sorted((d_x & a_y) - {g.treatment, g.response})


def _pre_stability_set(g_anc: Admg) -> list[str]:
    """C-component of the response plus its parents, minus treatment/response.

    The c-component members themselves belong to the conditioning set: a
    member left out retains an unblockable latent trail to the response
    (conditioning the members between them turns those members into opened
    colliders), so members and their parents are each necessary, and
    together they are sufficient.
    """
    component = c_component_of(g_anc, g_anc.response)
    pre = set(component) | set(parents(g_anc, component))
    return sorted(pre - {g_anc.treatment, g_anc.response})


def theorem_condition_holds(g_anc: Admg, conditioning) -> bool:
    """Whether Y is d-separated from the remaining ancestral covariates."""
    conditioning = set(conditioning)
    candidates = g_anc.nodes - {g_anc.treatment, g_anc.response}
    rest = candidates - conditioning
    return d_separated(g_anc, {g_anc.response}, rest, conditioning)


@dataclass
class BlockingReport:
    """Output of the full pipeline, with intermediate artifacts kept.

    ``z_star`` is ``pre_stability_set`` minus ``post_treatment_set``.  The
    verification flags are None (with ``verification_skipped`` set) when the
    graph exceeds the size limit for the d-separation check.
    """

    z_star: list[str]
    pre_stability_set: list[str]
    post_treatment_set: list[str]
    c_component_of_y: list[str]
    trace: ReductionTrace
    verified_d_separation: bool | None
    verified_stable: bool | None
    verification_skipped: str | None = None

    def to_json_dict(self) -> dict:
        out = {
            "z_star": self.z_star,
            "pre_stability_set": self.pre_stability_set,
            "post_treatment_set": self.post_treatment_set,
            "c_component_of_y": self.c_component_of_y,
            "removed_no_path": self.trace.removed_no_path,
            "removed_non_ancestors": self.trace.removed_non_ancestors,
            "verified_d_separation": self.verified_d_separation,
            "verified_stable": self.verified_stable,
        }
        if self.verification_skipped is not None:
            out["verification_skipped"] = self.verification_skipped
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), sort_keys=True, indent=2) + "\n"


def stable_causal_blocking(graph: Admg) -> BlockingReport:
    """Compute the stable smallest blocking set for ``graph``."""
    trace = reduce_graph(graph)
    g_anc = trace.g_xtilde_anc
    component = c_component_of(g_anc, g_anc.response)
    pre = _pre_stability_set(g_anc)
    unstable = post_treatment_ancestors(trace)
    z_star = sorted(set(pre) - set(unstable))
    if len(graph.nodes) <= VERIFY_NODE_LIMIT:
        verified_d_sep = theorem_condition_holds(g_anc, pre)
        verified_stable = not (set(z_star) & set(unstable))
        skipped = None
    else:
        verified_d_sep = None
        verified_stable = None
        skipped = "unverified: size"
    return BlockingReport(
        z_star=z_star,
        pre_stability_set=pre,
        post_treatment_set=unstable,
        c_component_of_y=component,
        trace=trace,
        verified_d_separation=verified_d_sep,
        verified_stable=verified_stable,
        verification_skipped=skipped,
    )


@dataclass
class MinimalityVerdict:
    """Result of the exhaustive smallest-separator search.

    ``minimal`` is True when the report's pre-stability set satisfies the
    separation condition and no strictly smaller candidate subset does.
    ``counterexample`` holds the lexicographically first smaller separating
    set when one exists; ``condition_holds`` records whether the reported
    set itself passes the separation check.
    """

    minimal: bool
    condition_holds: bool
    counterexample: list[str] | None = None


def verify_minimality(graph: Admg, report: BlockingReport) -> MinimalityVerdict:
    """Brute-force check that no smaller conditioning set separates Y.

    Scans subsets of the ancestral covariates in increasing cardinality,
    lexicographic within each level; bounded to reduced graphs of at most
    MINIMALITY_NODE_LIMIT nodes.
    """
    g_anc = report.trace.g_xtilde_anc
    if len(g_anc.nodes) > MINIMALITY_NODE_LIMIT:
        raise ValueError(
            f"reduced graph has {len(g_anc.nodes)} nodes; "
            f"brute-force minimality is limited to {MINIMALITY_NODE_LIMIT}"
        )
    candidates = sorted(g_anc.nodes - {g_anc.treatment, g_anc.response})
    pre = report.pre_stability_set
    condition_holds = theorem_condition_holds(g_anc, pre)
    for size in range(len(pre)):
        for subset in itertools.combinations(candidates, size):
            if theorem_condition_holds(g_anc, subset):
                return MinimalityVerdict(
                    minimal=False,
                    condition_holds=condition_holds,
                    counterexample=list(subset),
                )
    return MinimalityVerdict(minimal=condition_holds, condition_holds=condition_holds)
