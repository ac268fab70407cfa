"""Command-line front end.

Subcommands: ``block`` computes the stable blocking set for a graph file,
``ccomp`` prints the c-component partition, ``verify`` re-checks a computed
report (d-separation, stability, minimality when the reduced graph is small
enough), and ``simulate`` reproduces the design-comparison table for a model
file.  Exit codes: 0 success, 1 a verification failed, 2 usage/parse errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from causal_blocking import rng
from causal_blocking.admg import GraphParseError, parse_graph, validate
from causal_blocking.blocking import (
    MINIMALITY_NODE_LIMIT,
    stable_causal_blocking,
    verify_minimality,
)
from causal_blocking.experiment import Design, f_test_variances, replicate, t_test_effects
from causal_blocking.graph_algorithms import c_components
from causal_blocking.scm import ScmParseError, load_model

__all__ = ["main"]


class UsageError(Exception):
    pass


def _load_graph(path: str):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc}")
    try:
        graph = parse_graph(text)
    except GraphParseError as exc:
        raise UsageError(f"{path}: {exc}")
    verdict = validate(graph)
    if not verdict.ok:
        raise UsageError(f"{path}: " + "; ".join(verdict.violations))
    return graph


def _emit(payload: dict, output: str) -> None:
    if output == "text":
        for key, value in sorted(payload.items()):
            if isinstance(value, list):
                value = ", ".join(str(v) for v in value) or "-"
            print(f"{key}: {value}")
    else:
        print(json.dumps(payload, sort_keys=True, indent=2))


def cmd_block(args) -> int:
    graph = _load_graph(args.graph)
    report = stable_causal_blocking(graph)
    _emit(report.to_json_dict(), args.output)
    return 0


def cmd_ccomp(args) -> int:
    graph = _load_graph(args.graph)
    partition = c_components(graph)
    _emit({"components": partition.components}, args.output)
    return 0


def cmd_verify(args) -> int:
    graph = _load_graph(args.graph)
    report = stable_causal_blocking(graph)
    verdicts: dict[str, object] = {
        "d_separation": bool(report.verified_d_separation),
        "stability": bool(report.verified_stable),
    }
    failed = not (report.verified_d_separation and report.verified_stable)
    if len(report.trace.g_xtilde_anc.nodes) <= MINIMALITY_NODE_LIMIT:
        verdict = verify_minimality(graph, report)
        if verdict.minimal:
            verdicts["minimality"] = "minimal"
        else:
            failed = True
            if verdict.counterexample is not None:
                verdicts["minimality"] = {"counterexample": verdict.counterexample}
            else:
                verdicts["minimality"] = "condition violated"
    else:
        verdicts["minimality"] = "skipped: size"
    verdicts["z_star"] = report.z_star
    _emit(verdicts, args.output)
    return 1 if failed else 0


def _parse_blocking(raw: str | None) -> tuple[str, ...] | None:
    if raw is None:
        return None
    names = [part.strip() for part in raw.split(",") if part.strip()]
    return tuple(sorted(names))


def _read_manifest(model_path: Path) -> list[tuple[str, ...]]:
    manifest = model_path.with_suffix(".blocks")
    if not manifest.exists():
        raise UsageError(f"no blocking-set manifest beside the model: {manifest}")
    sets: list[tuple[str, ...]] = []
    for raw in manifest.read_text().splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line == "-":
            sets.append(())
        else:
            sets.append(tuple(sorted(p.strip() for p in line.split(",") if p.strip())))
    if not sets:
        raise UsageError(f"manifest {manifest} lists no blocking sets")
    return sets


def cmd_simulate(args) -> int:
    path = Path(args.model)
    try:
        model = load_model(path)
    except (OSError, ScmParseError, GraphParseError, ValueError) as exc:
        raise UsageError(f"{path}: {exc}")
    for warning in model.structure_warnings:
        print(f"warning: {warning}", file=sys.stderr)
    override = _parse_blocking(args.blocking)
    if override is not None:
        blocking_sets = [override]
    else:
        blocking_sets = _read_manifest(path)
    covariates = set(model.graph.covariates())
    for blocking in blocking_sets:
        unknown = set(blocking) - covariates
        if unknown:
            raise UsageError(f"blocking set contains non-covariates: {', '.join(sorted(unknown))}")

    # Each design runs as its own experiment: its replication stream is
    # derived from the master seed and the blocking label.
    tables = []
    for blocking in blocking_sets:
        design = Design("rbd", blocking) if blocking else Design("crd")
        design_seed = args.seed ^ rng.mix_string(design.blocking_label())
        tables.append((blocking, replicate(model, design, args.n, args.reps, design_seed)))

    if args.output == "csv":
        lines = []
        for _, table in tables:
            text = table.to_csv()
            lines.append(text if not lines else text.split("\n", 1)[1])
        sys.stdout.write("".join(lines))
        return 0

    designs = []
    for blocking, table in tables:
        row = {"blocking_set": list(blocking)}
        row.update(table.summary_dict())
        designs.append(row)
    payload: dict[str, object] = {
        "designs": designs,
        "n": args.n,
        "reps": args.reps,
        "seed": args.seed,
    }
    if len(tables) > 1:
        # Pairwise tests mirror the published comparison tables: the t-test
        # compares the causal-effect column (per-run mean response), the
        # F-test the response-variance column.
        effect_p = {}
        variance_p = {}
        for i in range(len(tables)):
            for j in range(i + 1, len(tables)):
                key = " vs ".join(
                    ",".join(b) if b else "-" for b in (tables[i][0], tables[j][0])
                )
                effect_p[key] = t_test_effects(
                    tables[i][1].mean_responses(), tables[j][1].mean_responses()
                )
                try:
                    variance_p[key] = f_test_variances(
                        tables[i][1].response_variances(), tables[j][1].response_variances()
                    )
                except ValueError:
                    variance_p[key] = None
        payload["effect_t_test_p"] = effect_p
        payload["variance_f_test_p"] = variance_p

    if args.output == "text":
        print(f"{'blocking set':<42} {'effect':>10} {'mean_resp':>10} {'variance':>10}")
        for row in designs:
            label = ",".join(row["blocking_set"]) or "-"
            print(
                f"{label:<42} {row['effect_mean']:>10.4f} "
                f"{row['mean_response']:>10.4f} {row['response_variance_mean']:>10.4f}"
            )
    else:
        print(json.dumps(payload, sort_keys=True, indent=2))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="causal-blocking",
        description="Stable blocking sets for randomized experiments on causal graphs.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, needs_model=False):
        p.add_argument("--seed", type=int, default=0)
        p.add_argument(
            "--output", choices=["json", "csv", "text"], default="json"
        )
        if needs_model:
            p.add_argument("model", help="model document path")
            p.add_argument("--blocking", default=None, help='override, e.g. "A,B" or ""')
            p.add_argument("--n", type=int, default=100)
            p.add_argument("--reps", type=int, default=10)
            p.add_argument("--quadrature", type=int, default=32)
        else:
            p.add_argument("graph", help="graph document path")

    p_block = sub.add_parser("block", help="compute the stable blocking set")
    add_common(p_block)
    p_block.set_defaults(func=cmd_block)

    p_ccomp = sub.add_parser("ccomp", help="print the c-component partition")
    add_common(p_ccomp)
    p_ccomp.set_defaults(func=cmd_ccomp)

    p_verify = sub.add_parser("verify", help="verify the computed blocking set")
    add_common(p_verify)
    p_verify.set_defaults(func=cmd_verify)

    p_sim = sub.add_parser("simulate", help="simulate CRD/RBD designs over a model")
    add_common(p_sim, needs_model=True)
    p_sim.set_defaults(func=cmd_simulate)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    if getattr(args, "n", 2) < 2:
        print("error: --n must be at least 2", file=sys.stderr)
        return 2
    if getattr(args, "reps", 1) < 1:
        print("error: --reps must be at least 1", file=sys.stderr)
        return 2
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, ScmParseError, GraphParseError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except BrokenPipeError:
        return 0


if __name__ == "__main__":
    sys.exit(main())
