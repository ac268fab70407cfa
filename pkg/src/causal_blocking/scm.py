"""Discrete structural causal models over binary observed variables.

A model pairs an Admg with one arithmetic mechanism per observed variable,
giving P(V=1) as an expression over the variable's parents (0/1 values) and
continuous uniform latent noises shared between confounded variables.
Supports interventional sampling, exact joint enumeration with midpoint
quadrature over the latents, the exact treatment effect, and the exact
within/between variance decomposition of the two design estimators.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from causal_blocking.admg import Admg, parse_graph
from causal_blocking import rng

__all__ = [
    "DiscreteScm",
    "JointTable",
    "Latent",
    "ScmParseError",
    "enumerate_joint",
    "parse_model",
    "sample",
    "true_effect",
    "variance_decomposition",
]

_CLAMP_TOL = 1e-12
MAX_ENUM_VARIABLES = 24
_MAX_ENUM_CELLS = 2 * 10**8


class ScmParseError(ValueError):
    """Raised for malformed model documents or invalid mechanisms."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


# ---------------------------------------------------------------------------
# Mechanism expressions: literals, names, + - *, parentheses, unary minus.

_TOKEN = re.compile(r"\s*(?:(\d+\.\d*|\.\d+|\d+)|([A-Za-z0-9_]+)|([()+*-]))")


@dataclass(frozen=True)
class Expr:
    op: str  # "const" | "name" | "+" | "-" | "*" | "neg"
    value: float = 0.0
    name: str = ""
    args: tuple = ()

    def names(self) -> set[str]:
        if self.op == "name":
            return {self.name}
        out: set[str] = set()
        for a in self.args:
            out |= a.names()
        return out

    def evaluate(self, env: dict[str, np.ndarray | float]):
        if self.op == "const":
            return self.value
        if self.op == "name":
            return env[self.name]
        if self.op == "neg":
            return -self.args[0].evaluate(env)
        left = self.args[0].evaluate(env)
        right = self.args[1].evaluate(env)
        if self.op == "+":
            return left + right
        if self.op == "-":
            return left - right
        return left * right

    def interval(self, env: dict[str, tuple[float, float]]) -> tuple[float, float]:
        if self.op == "const":
            return (self.value, self.value)
        if self.op == "name":
            return env[self.name]
        if self.op == "neg":
            lo, hi = self.args[0].interval(env)
            return (-hi, -lo)
        a_lo, a_hi = self.args[0].interval(env)
        b_lo, b_hi = self.args[1].interval(env)
        if self.op == "+":
            return (a_lo + b_lo, a_hi + b_hi)
        if self.op == "-":
            return (a_lo - b_hi, a_hi - b_lo)
        corners = (a_lo * b_lo, a_lo * b_hi, a_hi * b_lo, a_hi * b_hi)
        return (min(corners), max(corners))


def _tokenize(text: str, line: int | None) -> list[str]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            rest = text[pos:].strip()
            if not rest:
                break
            raise ScmParseError(f"bad character in expression near {rest[:10]!r}", line)
        tokens.append(m.group(0).strip())
        pos = m.end()
    return tokens


def parse_expression(text: str, line: int | None = None) -> Expr:
    tokens = _tokenize(text, line)
    pos = 0

    def peek() -> str | None:
        return tokens[pos] if pos < len(tokens) else None

    def take() -> str:
        nonlocal pos
        tok = tokens[pos]
        pos += 1
        return tok

    def parse_sum() -> Expr:
        node = parse_term()
        while peek() in ("+", "-"):
            op = take()
            node = Expr(op, args=(node, parse_term()))
        return node

    def parse_term() -> Expr:
        node = parse_factor()
        while peek() == "*":
            take()
            node = Expr("*", args=(node, parse_factor()))
        return node

    def parse_factor() -> Expr:
        tok = peek()
        if tok is None:
            raise ScmParseError("unexpected end of expression", line)
        if tok == "-":
            take()
            return Expr("neg", args=(parse_factor(),))
        if tok == "(":
            take()
            node = parse_sum()
            if peek() != ")":
                raise ScmParseError("missing closing parenthesis", line)
            take()
            return node
        take()
        if re.fullmatch(r"\d+\.\d*|\.\d+|\d+", tok):
            return Expr("const", value=float(tok))
        return Expr("name", name=tok)

    node = parse_sum()
    if pos != len(tokens):
        raise ScmParseError(f"trailing tokens after expression: {tokens[pos]!r}", line)
    return node


# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Latent:
    name: str
    lower: float
    upper: float


@dataclass
class DiscreteScm:
    """Fully specified generative model; immutable after load.

    ``structure_warnings`` lists mismatches between the latent attachment
    pattern and the graph's bidirected edges (two variables should share a
    latent exactly when they are joined by a bidirected edge); such models
    still load and run since the mechanisms themselves are well formed.
    """

    graph: Admg
    latents: list[Latent]
    attachments: dict[str, tuple[str, ...]]
    mechanisms: dict[str, Expr]
    structure_warnings: list[str]

    def topological_order(self) -> list[str]:
        remaining = {n: set(self.graph.parents_of(n)) for n in self.graph.nodes}
        order = []
        while remaining:
            ready = sorted(n for n, deps in remaining.items() if not deps)
            if not ready:
                raise ValueError("graph has a directed cycle")
            for n in ready:
                order.append(n)
                del remaining[n]
            for deps in remaining.values():
                deps.difference_update(ready)
        return order

    def latents_of(self, node: str) -> list[str]:
        return [l.name for l in self.latents if node in self.attachments[l.name]]


def _check_mechanism_bounds(node: str, expr: Expr, parents: list[str], latent_env) -> None:
    """Reject mechanisms that can leave [0,1].

    Parent indicators are enumerated exactly (they are 0/1); latents are
    propagated as intervals, which is exact for the affine use they get in
    practice and conservative otherwise.
    """
    if len(parents) <= 12:
        corner_sets = [dict(zip(parents, bits)) for bits in _bit_grid(len(parents))]
    else:
        corner_sets = [{p: (0.0, 1.0) for p in parents}]
    for corners in corner_sets:
        env = dict(latent_env)
        for p, v in corners.items():
            env[p] = v if isinstance(v, tuple) else (float(v), float(v))
        lo, hi = expr.interval(env)
        if lo < -_CLAMP_TOL or hi > 1.0 + _CLAMP_TOL:
            raise ScmParseError(
                f"mechanism for {node} can reach [{lo:.6g}, {hi:.6g}] outside [0, 1]"
            )


def _bit_grid(k: int):
    for value in range(2**k):
        yield tuple((value >> (k - 1 - i)) & 1 for i in range(k))


def parse_model(document: str, base_dir: str | Path = ".") -> DiscreteScm:
    """Parse the line-oriented model format; the graph is loaded by path."""
    base = Path(base_dir)
    graph: Admg | None = None
    latents: list[Latent] = []
    attachments: dict[str, tuple[str, ...]] = {}
    mechanisms: dict[str, Expr] = {}

    for lineno, raw in enumerate(document.splitlines(), start=1):
        stripped = raw.split("#", 1)[0].strip()
        if not stripped:
            continue
        keyword = stripped.split(None, 1)[0]
        if keyword == "graph":
            if graph is not None:
                raise ScmParseError("duplicate graph directive", lineno)
            rel = stripped.split(None, 1)[1].strip()
            path = base / rel
            try:
                graph = parse_graph(path.read_text())
            except OSError as exc:
                raise ScmParseError(f"cannot read graph {rel!r}: {exc}", lineno)
        elif keyword == "latent":
            parts = stripped.split()
            if len(parts) != 5 or parts[2] != "uniform":
                raise ScmParseError("expected 'latent <name> uniform <lower> <upper>'", lineno)
            name = parts[1]
            if any(l.name == name for l in latents):
                raise ScmParseError(f"duplicate latent {name!r}", lineno)
            lower, upper = float(parts[3]), float(parts[4])
            if not lower < upper:
                raise ScmParseError(f"latent {name!r} has empty range", lineno)
            latents.append(Latent(name, lower, upper))
            attachments[name] = ()
        elif keyword == "attach":
            parts = stripped.split()
            if len(parts) < 3:
                raise ScmParseError("expected 'attach <latent> <node> [...]'", lineno)
            name = parts[1]
            if name not in attachments:
                raise ScmParseError(f"unknown latent {name!r}", lineno)
            if attachments[name]:
                raise ScmParseError(f"duplicate attach for {name!r}", lineno)
            attachments[name] = tuple(parts[2:])
        elif keyword == "mech":
            m = re.match(r"^mech\s+(\S+)\s*=\s*(.+)$", stripped)
            if not m:
                raise ScmParseError("expected 'mech <node> = <expression>'", lineno)
            node = m.group(1)
            if node in mechanisms:
                raise ScmParseError(f"duplicate mechanism for {node!r}", lineno)
            mechanisms[node] = parse_expression(m.group(2), lineno)
        else:
            raise ScmParseError(f"unknown directive {keyword!r}", lineno)

    if graph is None:
        raise ScmParseError("missing graph directive")
    node_names = graph.nodes
    for latent_name, nodes in attachments.items():
        for n in nodes:
            if n not in node_names:
                raise ScmParseError(f"attach {latent_name}: unknown node {n!r}")
    missing = sorted(node_names - mechanisms.keys())
    if missing:
        raise ScmParseError(f"missing mechanism for {', '.join(missing)}")
    extra = sorted(mechanisms.keys() - node_names)
    if extra:
        raise ScmParseError(f"mechanism for undeclared node {', '.join(extra)}")
    latent_names = {l.name for l in latents}
    if latent_names & node_names:
        clash = sorted(latent_names & node_names)
        raise ScmParseError(f"latent name clashes with node: {', '.join(clash)}")

    latent_env = {l.name: (l.lower, l.upper) for l in latents}
    for node, expr in mechanisms.items():
        parents = sorted(graph.parents_of(node))
        allowed = set(parents) | {
            l for l, nodes in attachments.items() if node in nodes
        }
        bad = expr.names() - allowed
        if bad:
            raise ScmParseError(
                f"mechanism for {node} references {', '.join(sorted(bad))}: "
                "only parents and attached latents are allowed"
            )
        _check_mechanism_bounds(node, expr, parents, latent_env)

    warnings = []
    implied = set()
    for latent_name, nodes in attachments.items():
        for a in nodes:
            for b in nodes:
                if a < b:
                    implied.add((a, b))
    actual = set(graph.bidirected_edges)
    for a, b in sorted(implied - actual):
        warnings.append(f"{a} and {b} share a latent but have no bidirected edge")
    for a, b in sorted(actual - implied):
        warnings.append(f"{a} <-> {b} has no shared latent in the model")

    return DiscreteScm(graph, latents, attachments, mechanisms, warnings)


def load_model(path: str | Path) -> DiscreteScm:
    path = Path(path)
    return parse_model(path.read_text(), path.parent)


# ---------------------------------------------------------------------------
# Sampling.


def _channels(model: DiscreteScm) -> dict[str, int]:
    """Fixed channel index per latent and variable, independent of order."""
    names = sorted(l.name for l in model.latents) + model.graph.sorted_nodes()
    return {name: i for i, name in enumerate(names)}


def sample(
    model: DiscreteScm,
    intervention: tuple[str, int] | None,
    seed: int,
    n: int,
) -> dict[str, np.ndarray]:
    """Draw ``n`` units; returns one int8 column per observed variable.

    Latents are drawn fresh per unit, variables are evaluated in topological
    order, and an intervened variable is pinned to its value with its
    mechanism ignored.  Each (unit, variable) uniform is addressed by seed,
    channel, and unit index, so the same seed always reproduces the same
    panel no matter how the units are partitioned.
    """
    if intervention is not None and intervention[0] not in model.graph.nodes:
        raise ValueError(f"unknown intervention node {intervention[0]!r}")
    channels = _channels(model)
    env: dict[str, np.ndarray] = {}
    for latent in model.latents:
        u = rng.uniforms(seed, channels[latent.name], n)
        env[latent.name] = latent.lower + u * (latent.upper - latent.lower)
    columns: dict[str, np.ndarray] = {}
    for node in model.topological_order():
        if intervention is not None and node == intervention[0]:
            value = np.full(n, int(intervention[1]), dtype=np.int8)
        else:
            p = model.mechanisms[node].evaluate(env)
            p = np.clip(np.broadcast_to(np.asarray(p, dtype=np.float64), (n,)), 0.0, 1.0)
            value = (rng.uniforms(seed, channels[node], n) < p).astype(np.int8)
        env[node] = value
        columns[node] = value
    return columns


# ---------------------------------------------------------------------------
# Exact enumeration.


@dataclass
class JointTable:
    """Probability of every full binary assignment of the observed variables.

    Assignments are indexed by bits of ``variables`` in order (first variable
    is the most significant bit).  ``entries`` iterates (assignment tuple,
    probability) pairs; ``probability`` looks one up.
    """

    variables: list[str]
    probs: np.ndarray
    total: float

    def probability(self, assignment: dict[str, int]) -> float:
        index = 0
        for name in self.variables:
            index = (index << 1) | (assignment[name] & 1)
        return float(self.probs[index])

    def entries(self):
        k = len(self.variables)
        for index, p in enumerate(self.probs):
            bits = tuple((index >> (k - 1 - i)) & 1 for i in range(k))
            yield bits, float(p)

    def marginal(self, name: str) -> float:
        """P(name = 1), normalized."""
        axis = self.variables.index(name)
        shaped = self.probs.reshape((2,) * len(self.variables))
        keep = shaped.take(1, axis=axis).sum()
        return float(keep / self.total)


def _latent_components(model: DiscreteScm) -> list[tuple[list[str], list[str]]]:
    """Group latents that co-occur in mechanisms; returns (latents, variables)."""
    latent_names = [l.name for l in model.latents]
    users: dict[str, list[str]] = {l: [] for l in latent_names}
    for node, expr in model.mechanisms.items():
        for name in expr.names() & set(latent_names):
            users[name].append(node)
    parent = {l: l for l in latent_names}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    by_var: dict[str, str] = {}
    for l in latent_names:
        for v in users[l]:
            if v in by_var:
                ra, rb = find(by_var[v]), find(l)
                if ra != rb:
                    parent[ra] = rb
            else:
                by_var[v] = l
    groups: dict[str, list[str]] = {}
    for l in latent_names:
        groups.setdefault(find(l), []).append(l)
    out = []
    for members in groups.values():
        variables = sorted({v for l in members for v in users[l]})
        out.append((sorted(members), variables))
    out.sort()
    return out


def enumerate_joint(
    model: DiscreteScm,
    intervention: tuple[str, int] | None = None,
    latent_quadrature_points: int = 32,
) -> JointTable:
    """Exact joint distribution via midpoint quadrature over the latents.

    Latents are integrated component by component (latents never co-occurring
    in a mechanism integrate independently), which keeps the grid small.
    """
    if latent_quadrature_points < 2:
        raise ValueError("need at least 2 quadrature points")
    if intervention is not None and intervention[0] not in model.graph.nodes:
        raise ValueError(f"unknown intervention node {intervention[0]!r}")
    variables = model.graph.sorted_nodes()
    k = len(variables)
    if k > MAX_ENUM_VARIABLES:
        raise ValueError(f"model too large: {k} variables, maximum {MAX_ENUM_VARIABLES}")

    size = 1 << k
    bit_of = {name: k - 1 - i for i, name in enumerate(variables)}
    index = np.arange(size)
    bits = {
        name: ((index >> bit_of[name]) & 1).astype(np.float64) for name in variables
    }

    def factor_for(node: str, env: dict) -> np.ndarray:
        p = model.mechanisms[node].evaluate(env)
        p = np.clip(np.asarray(p, dtype=np.float64), 0.0, 1.0)
        b = env[node]
        return b * p + (1.0 - b) * (1.0 - p)

    intervened = intervention[0] if intervention is not None else None
    joint = np.ones(size, dtype=np.float64)
    if intervened is not None:
        joint *= bits[intervened] if intervention[1] else (1.0 - bits[intervened])

    components = _latent_components(model)
    grouped = {v for _, vars_ in components for v in vars_}
    for node in variables:
        if node == intervened or node in grouped:
            continue
        joint *= factor_for(node, bits)

    q = latent_quadrature_points
    midpoints = (np.arange(q) + 0.5) / q
    for latent_names, comp_vars in components:
        comp_vars = [v for v in comp_vars if v != intervened]
        if not comp_vars:
            continue
        grid = len(latent_names)
        if size * (q**grid) > _MAX_ENUM_CELLS:
            raise ValueError("model too large: quadrature grid does not fit in memory")
        mesh = np.meshgrid(*([midpoints] * grid), indexing="ij")
        env: dict[str, np.ndarray] = {
            name: arr[..., None] for name, arr in bits.items()
        }
        for latent_name, u in zip(latent_names, mesh):
            latent = next(l for l in model.latents if l.name == latent_name)
            values = latent.lower + u.ravel() * (latent.upper - latent.lower)
            env[latent_name] = values[None, :]
        block = np.ones((size, q**grid), dtype=np.float64)
        for node in comp_vars:
            block *= factor_for(node, env)
        joint *= block.mean(axis=1)

    return JointTable(variables, joint, float(joint.sum()))


def true_effect(model: DiscreteScm, latent_quadrature_points: int = 32) -> float:
    """E[Y | do(X=1)] - E[Y | do(X=0)], computed exactly from enumeration."""
    x, y = model.graph.treatment, model.graph.response
    table1 = enumerate_joint(model, (x, 1), latent_quadrature_points)
    table0 = enumerate_joint(model, (x, 0), latent_quadrature_points)
    return table1.marginal(y) - table0.marginal(y)


# ---------------------------------------------------------------------------
# Exact variance decomposition of the design estimators.


def _stratum_stats(model: DiscreteScm, blocking: list[str], points: int):
    """Per-stratum probability and interventional response moments.

    Returns (strata, p_z, e1, e0) where strata enumerates blocking-value
    tuples and e_x[z] = E[Y | do(X=x), Z=z].
    """
    x, y = model.graph.treatment, model.graph.response
    observational = enumerate_joint(model, None, points)
    tables = {
        1: enumerate_joint(model, (x, 1), points),
        0: enumerate_joint(model, (x, 0), points),
    }
    variables = observational.variables
    shape = (2,) * len(variables)
    axes_keep = tuple(variables.index(b) for b in blocking)
    y_axis = variables.index(y)

    def reduce_to(table: JointTable, with_y: bool):
        shaped = table.probs.reshape(shape)
        keep = set(axes_keep) | ({y_axis} if with_y else set())
        drop = tuple(i for i in range(len(variables)) if i not in keep)
        out = shaped.sum(axis=drop, keepdims=False)
        return out / table.total

    p_z = reduce_to(observational, with_y=False)
    strata = list(_bit_grid(len(blocking)))
    e = {}
    for arm in (0, 1):
        # blocking and variables are both sorted, so the kept axes already
        # come out in blocking order after the reduction.
        joint_zy = reduce_to(tables[arm], with_y=True)
        order = sorted(set(axes_keep) | {y_axis})
        y_pos = order.index(y_axis)
        pz_arm = joint_zy.sum(axis=y_pos)
        y1 = joint_zy.take(1, axis=y_pos)
        with np.errstate(invalid="ignore", divide="ignore"):
            e[arm] = np.where(pz_arm > 0, y1 / np.where(pz_arm > 0, pz_arm, 1.0), 0.0)
    return strata, p_z, e[1], e[0]


def balanced_allocation(
    model: DiscreteScm, blocking: list[str], n: int, latent_quadrature_points: int = 32
) -> dict[tuple[int, tuple[int, ...]], int]:
    """Default allocation: n_{x,z} = max(1, floor(n * P(z) / 2)) per arm."""
    strata, p_z, _, _ = _stratum_stats(model, list(blocking), latent_quadrature_points)
    allocation = {}
    for z in strata:
        pz = float(p_z[z]) if blocking else float(p_z)
        if pz <= 0:
            continue
        count = max(1, math.floor(n * pz / 2))
        allocation[(1, z)] = count
        allocation[(0, z)] = count
    return allocation


def variance_decomposition(
    model: DiscreteScm,
    blocking,
    allocation: dict[tuple[int, tuple[int, ...]], int] | None = None,
    n: int = 100,
    latent_quadrature_points: int = 32,
) -> tuple[float, float]:
    """Exact (within_term, between_term) of the effect-estimator variance.

    ``within_term`` is E_Z[Var(Y(1)|Z)/n_{1,z} + Var(Y(0)|Z)/n_{0,z}]; the
    completely randomized design adds ``between_term`` = E_Z[(beta(Z) -
    beta)^2] while the block design's between term is identically zero, so
    CRD total = within + between and RBD total = within.
    """
    blocking = sorted(blocking)
    unknown = set(blocking) - model.graph.nodes
    if unknown:
        raise ValueError(f"unknown blocking node {min(unknown)!r}")
    strata, p_z, e1, e0 = _stratum_stats(model, blocking, latent_quadrature_points)
    if allocation is None:
        allocation = balanced_allocation(model, blocking, n, latent_quadrature_points)
    beta = 0.0
    for z in strata:
        pz = float(p_z[z]) if blocking else float(p_z)
        b_z = float(e1[z] - e0[z]) if blocking else float(e1 - e0)
        beta += pz * b_z
    within = 0.0
    between = 0.0
    for z in strata:
        pz = float(p_z[z]) if blocking else float(p_z)
        if pz <= 0:
            continue
        m1 = float(e1[z]) if blocking else float(e1)
        m0 = float(e0[z]) if blocking else float(e0)
        n1 = allocation.get((1, z), 0)
        n0 = allocation.get((0, z), 0)
        if n1 < 1 or n0 < 1:
            raise ValueError(f"zero allocation in positive-probability stratum {z}")
        within += pz * (m1 * (1 - m1) / n1 + m0 * (1 - m0) / n0)
        between += pz * (m1 - m0 - beta) ** 2
    return within, between
