"""Plain-Python recomputation of the design estimators from raw unit data,
kept free of the production summarize() code path."""

from __future__ import annotations


def crd_effect(xs, ys) -> float:
    treated = [y for x, y in zip(xs, ys) if x == 1]
    control = [y for x, y in zip(xs, ys) if x == 0]
    return sum(treated) / len(treated) - sum(control) / len(control)


def rbd_effect(xs, ys, strata) -> tuple[float, list]:
    """Block-weighted estimator; strata missing an arm are dropped and the
    weights renormalized.  Returns (effect, dropped stratum keys)."""
    groups: dict = {}
    for x, y, z in zip(xs, ys, strata):
        groups.setdefault(z, []).append((x, y))
    total = 0.0
    weight = 0
    dropped = []
    for key in sorted(groups):
        units = groups[key]
        treated = [y for x, y in units if x == 1]
        control = [y for x, y in units if x == 0]
        if not treated or not control:
            dropped.append(key)
            continue
        effect = sum(treated) / len(treated) - sum(control) / len(control)
        total += len(units) * effect
        weight += len(units)
    return total / weight, dropped


def sample_variance(values) -> float:
    n = len(values)
    mean = sum(values) / n
    return sum((v - mean) ** 2 for v in values) / (n - 1)
