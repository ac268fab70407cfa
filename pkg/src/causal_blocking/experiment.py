"""Simulated randomized designs, estimators, and significance tests.

A run draws covariates and responses from a discrete SCM with the treatment
assigned by complete randomization, either over all units (CRD) or within
strata of a blocking set (RBD).  Summaries compute the difference-in-means
estimator, its block-weighted counterpart, and the pooled response variance;
replications derive per-rep seeds from the master seed so that results are
independent of scheduling and rep counts.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from causal_blocking import rng
from causal_blocking.scm import DiscreteScm, sample
from causal_blocking.graph_algorithms import descendants

__all__ = [
    "Design",
    "ExperimentRun",
    "ReplicationTable",
    "RunSummary",
    "count_blocks",
    "f_test_variances",
    "replicate",
    "run_crd",
    "run_rbd",
    "summarize",
    "t_test_effects",
    "worker_count",
]

_ASSIGN_CHANNEL = 1 << 32  # off the per-variable channel range


@dataclass(frozen=True)
class Design:
    kind: str  # "crd" | "rbd"
    blocking: tuple[str, ...] = ()

    def label(self) -> str:
        if self.kind == "crd" or not self.blocking:
            return "crd"
        return "rbd"

    def blocking_label(self) -> str:
        return ",".join(self.blocking) if self.blocking else "-"


@dataclass
class ExperimentRun:
    design: Design
    xs: np.ndarray
    ys: np.ndarray
    covariates: dict[str, np.ndarray]
    stratum_codes: np.ndarray  # per-unit stratum index; all zero under CRD
    stratum_values: list[tuple[int, ...]]  # code -> blocking-value tuple
    seed: int
    n: int


def _assign_within(order_key: np.ndarray, members: np.ndarray) -> np.ndarray:
    """Treat the first ceil(m/2) members in hashed order; balanced to +-1."""
    order = np.argsort(order_key[members], kind="stable")
    out = np.zeros(len(members), dtype=np.int8)
    out[order[: math.ceil(len(members) / 2)]] = 1
    return out


def _run(model: DiscreteScm, blocking: tuple[str, ...], n: int, seed: int, kind: str) -> ExperimentRun:
    x_name = model.graph.treatment
    y_name = model.graph.response
    if blocking:
        post = set(descendants(model.graph, x_name))
        bad = sorted(set(blocking) & post)
        if bad:
            raise ValueError(
                f"blocking on treatment descendants is not well-defined: {', '.join(bad)}"
            )
    # Both potential panels share the unit's exogenous draws, so covariates
    # are identical across designs with the same seed and the realized unit
    # is the assigned arm's panel row; assignment has its own channel.
    panel0 = sample(model, (x_name, 0), seed, n)
    panel1 = sample(model, (x_name, 1), seed, n)
    key = rng.uniforms(seed, _ASSIGN_CHANNEL, n)
    xs = np.zeros(n, dtype=np.int8)
    if blocking:
        cols = np.stack([panel0[b] for b in blocking], axis=1)
        values, codes = np.unique(cols, axis=0, return_inverse=True)
        stratum_values = [tuple(int(v) for v in row) for row in values]
        codes = codes.astype(np.int32)
        for code in range(len(stratum_values)):
            members = np.flatnonzero(codes == code)
            xs[members] = _assign_within(key, members)
    else:
        stratum_values = [()]
        codes = np.zeros(n, dtype=np.int32)
        xs[:] = _assign_within(key, np.arange(n))
    treated = xs == 1
    ys = np.where(treated, panel1[y_name], panel0[y_name]).astype(np.int8)
    covariates = {
        name: np.where(treated, panel1[name], panel0[name]).astype(np.int8)
        for name in model.graph.sorted_nodes()
        if name not in (x_name, y_name)
    }
    return ExperimentRun(
        Design(kind, blocking), xs, ys, covariates, codes, stratum_values, seed, n
    )


def run_crd(model: DiscreteScm, n: int, seed: int) -> ExperimentRun:
    """Completely randomized design: ceil(n/2) treated by random permutation."""
    if n < 2:
        raise ValueError("need at least 2 units")
    return _run(model, (), n, seed, "crd")


def run_rbd(model: DiscreteScm, blocking, n: int, seed: int) -> ExperimentRun:
    """Randomized block design: covariates first, then treatment per stratum."""
    if n < 2:
        raise ValueError("need at least 2 units")
    blocking = tuple(sorted(blocking))
    unknown = set(blocking) - set(model.graph.covariates())
    if unknown:
        raise ValueError(f"blocking must be covariates; unknown or reserved: {min(unknown)!r}")
    return _run(model, blocking, n, seed, "rbd")


@dataclass
class RunSummary:
    effect_estimate: float
    response_variance: float
    per_block: list[tuple[tuple[int, ...], int, int, float]]
    dropped_blocks: list[tuple[int, ...]]
    mean_response: float


def summarize(run: ExperimentRun) -> RunSummary:
    """Difference of arm means (CRD) or the block-weighted version (RBD).

    Strata with an empty arm cannot contribute a block effect; they are
    dropped and the weights renormalized over the surviving strata.
    """
    xs, ys = run.xs, run.ys
    if not (xs == 1).any() or not (xs == 0).any():
        raise ValueError("cannot estimate: an arm is empty")
    response_variance = float(np.var(ys, ddof=1))
    mean_response = float(np.mean(ys))
    per_block: list[tuple[tuple[int, ...], int, int, float]] = []
    dropped: list[tuple[int, ...]] = []
    if run.design.kind == "crd" or not run.design.blocking:
        effect = float(ys[xs == 1].mean() - ys[xs == 0].mean())
        return RunSummary(effect, response_variance, per_block, dropped, mean_response)
    weighted = 0.0
    surviving = 0
    for code, stratum in enumerate(run.stratum_values):
        members = np.flatnonzero(run.stratum_codes == code)
        if len(members) == 0:
            continue
        in_treat = members[xs[members] == 1]
        in_ctrl = members[xs[members] == 0]
        if len(in_treat) == 0 or len(in_ctrl) == 0:
            dropped.append(stratum)
            continue
        block_effect = float(ys[in_treat].mean() - ys[in_ctrl].mean())
        n_z = len(members)
        per_block.append((stratum, len(in_treat), len(in_ctrl), block_effect))
        weighted += n_z * block_effect
        surviving += n_z
    if surviving == 0:
        raise ValueError("cannot estimate: every stratum lost an arm")
    effect = weighted / surviving
    return RunSummary(float(effect), response_variance, per_block, dropped, mean_response)


@dataclass
class ReplicationRow:
    rep: int
    design: str
    blocking: tuple[str, ...]
    effect: float
    response_variance: float
    mean_response: float
    dropped_blocks: int


@dataclass
class ReplicationTable:
    rows: list[ReplicationRow] = field(default_factory=list)

    def effects(self) -> list[float]:
        return [r.effect for r in self.rows]

    def response_variances(self) -> list[float]:
        return [r.response_variance for r in self.rows]

    def mean_responses(self) -> list[float]:
        return [r.mean_response for r in self.rows]

    def to_csv(self) -> str:
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(
            ["rep", "design", "blocking_set", "effect", "response_variance", "dropped_blocks"]
        )
        for r in self.rows:
            writer.writerow(
                [
                    r.rep,
                    r.design,
                    ",".join(r.blocking) if r.blocking else "-",
                    f"{r.effect:.10g}",
                    f"{r.response_variance:.10g}",
                    r.dropped_blocks,
                ]
            )
        return buffer.getvalue()

    def summary_dict(self) -> dict:
        return {
            "reps": len(self.rows),
            "effect_mean": float(np.mean(self.effects())),
            "mean_response": float(np.mean(self.mean_responses())),
            "response_variance_mean": float(np.mean(self.response_variances())),
        }


def worker_count(task_count: int) -> int:
    """Worker cap from CAUSAL_BLOCKING_THREADS (0 or unset = auto)."""
    raw = os.environ.get("CAUSAL_BLOCKING_THREADS", "0")
    try:
        cap = int(raw)
    except ValueError:
        cap = 0
    if cap <= 0:
        cap = min(4, os.cpu_count() or 1)
    return max(1, min(cap, task_count))


def replicate(
    model: DiscreteScm,
    design: Design,
    n: int,
    reps: int,
    seed: int,
) -> ReplicationTable:
    """Run ``reps`` independent replications; rep r uses ``seed ^ mix(r)``.

    Each rep's randomness depends only on the master seed and its index, so
    tables are prefixes of longer tables with the same seed and aggregation
    is independent of scheduling.
    """
    if reps < 1:
        raise ValueError("need at least 1 replication")

    def one(rep: int) -> ReplicationRow:
        rep_seed = (seed ^ rng.mix(rep)) & ((1 << 64) - 1)
        if design.kind == "rbd" and design.blocking:
            run = run_rbd(model, design.blocking, n, rep_seed)
        else:
            run = run_crd(model, n, rep_seed)
        summary = summarize(run)
        return ReplicationRow(
            rep=rep,
            design=run.design.label(),
            blocking=design.blocking,
            effect=summary.effect_estimate,
            response_variance=summary.response_variance,
            mean_response=summary.mean_response,
            dropped_blocks=len(summary.dropped_blocks),
        )

    workers = worker_count(reps)
    if workers == 1:
        rows = [one(r) for r in range(reps)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(one, range(reps)))
    return ReplicationTable(rows)


def t_test_effects(a, b) -> float:
    """Two-sided Welch t-test p-value with Satterthwaite degrees of freedom."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if len(a) < 2 or len(b) < 2:
        raise ValueError("need at least 2 values per sample")
    va, vb = a.var(ddof=1), b.var(ddof=1)
    na, nb = len(a), len(b)
    se2 = va / na + vb / nb
    if se2 == 0.0:
        return 1.0 if a.mean() == b.mean() else 0.0
    t = (a.mean() - b.mean()) / math.sqrt(se2)
    df = se2**2 / ((va / na) ** 2 / (na - 1) + (vb / nb) ** 2 / (nb - 1))
    return float(min(1.0, 2.0 * stats.t.sf(abs(t), df)))


def f_test_variances(a, b) -> float:
    """Two-sided F-test on the variance ratio, larger variance on top."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if len(a) < 2 or len(b) < 2:
        raise ValueError("need at least 2 values per sample")
    va, vb = a.var(ddof=1), b.var(ddof=1)
    if va == 0.0 or vb == 0.0:
        raise ValueError("zero variance")
    if va >= vb:
        ratio, dfn, dfd = va / vb, len(a) - 1, len(b) - 1
    else:
        ratio, dfn, dfd = vb / va, len(b) - 1, len(a) - 1
    return float(min(1.0, 2.0 * stats.f.sf(ratio, dfn, dfd)))


def count_blocks(values_per_covariate: dict[str, int]) -> int:
    """Number of blocks a covariate set induces: the product of level counts."""
    total = 1
    for name, count in values_per_covariate.items():
        if count < 1:
            raise ValueError(f"covariate {name!r} has {count} levels")
        total *= count
    return total
