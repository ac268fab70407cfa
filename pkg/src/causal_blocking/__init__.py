"""Stable variance-minimizing blocking sets for randomized experiments.

Given a semi-Markovian causal graph (directed + bidirected edges over
observed variables) with a designated treatment and response, this package
computes the smallest stable set of covariates to stratify on when forming
blocks, verifies the result against graphical independence criteria, and
simulates completely randomized vs randomized block designs over discrete
structural causal models to quantify the variance reduction.
"""

from causal_blocking.admg import (
    Admg,
    GraphParseError,
    ValidationVerdict,
    parse_graph,
    serialize_graph,
    validate,
)
from causal_blocking.graph_algorithms import (
    CComponentPartition,
    ancestors,
    c_component_of,
    c_components,
    d_separated,
    descendants,
    parents,
)
from causal_blocking.blocking import (
    BlockingReport,
    MinimalityVerdict,
    ReductionTrace,
    post_treatment_ancestors,
    reduce_graph,
    stable_causal_blocking,
    verify_minimality,
)
from causal_blocking.scm import (
    DiscreteScm,
    JointTable,
    ScmParseError,
    enumerate_joint,
    parse_model,
    sample,
    true_effect,
    variance_decomposition,
)
from causal_blocking.experiment import (
    ExperimentRun,
    ReplicationTable,
    RunSummary,
    count_blocks,
    f_test_variances,
    replicate,
    run_crd,
    run_rbd,
    summarize,
    t_test_effects,
)

__all__ = [
    "Admg",
    "BlockingReport",
    "CComponentPartition",
    "DiscreteScm",
    "ExperimentRun",
    "GraphParseError",
    "JointTable",
    "MinimalityVerdict",
    "ReductionTrace",
    "ReplicationTable",
    "RunSummary",
    "ScmParseError",
    "ValidationVerdict",
    "ancestors",
    "c_component_of",
    "c_components",
    "count_blocks",
    "d_separated",
    "descendants",
    "enumerate_joint",
    "f_test_variances",
    "parents",
    "parse_graph",
    "parse_model",
    "post_treatment_ancestors",
    "reduce_graph",
    "replicate",
    "run_crd",
    "run_rbd",
    "sample",
    "serialize_graph",
    "stable_causal_blocking",
    "summarize",
    "t_test_effects",
    "true_effect",
    "validate",
    "variance_decomposition",
    "verify_minimality",
]
