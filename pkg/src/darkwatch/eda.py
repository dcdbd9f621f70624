"""Summary statistics behind the exploratory charts (bar, histogram, pie, box, heatmap)."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import asdict, dataclass, field

from .dataset import ThreatTable, _require_clean
from .errors import BadBinCount, TooFewRows

CORRELATION_VARIABLES = ("num_attempts", "impact_level", "target")


@dataclass(frozen=True)
class GroupSummary:
    group_key: str
    attempt_total: int
    attempt_mean: float
    impact_mean: float
    count: int


@dataclass(frozen=True)
class HistogramSpec:
    bin_edges: list[float]
    counts: list[int]


@dataclass(frozen=True)
class BoxStats:
    group_key: str
    min: float
    q1: float
    median: float
    q3: float
    max: float
    iqr: float


@dataclass(frozen=True)
class CorrelationMatrix:
    variable_names: tuple[str, ...]
    cells: list[list[float]]
    zero_variance: tuple[str, ...] = field(default=())


def _groups(table: ThreatTable, key: str) -> dict[str, list]:
    groups: dict[str, list] = {}
    for rec in table.records:
        groups.setdefault(getattr(rec, key), []).append(rec)
    return groups


def summarize_by_threat(table: ThreatTable) -> list[GroupSummary]:
    """Per threat type: attempt sum and mean, impact mean and row count."""
    _require_clean(table)
    out = []
    for key, members in sorted(_groups(table, "threat_type").items()):
        total = sum(r.num_attempts for r in members)
        n = len(members)
        out.append(GroupSummary(
            key, total, total / n, sum(r.impact_level for r in members) / n, n,
        ))
    return out


def impact_histogram(table: ThreatTable, bins: int = 10,
                     lo: float = 0.0, hi: float = 100.0) -> HistogramSpec:
    """Equal-width bins over ``[lo, hi]``.

    Values on an interior edge go to the right-hand bin; ``hi`` itself goes to
    the last bin. Out-of-range and missing values are not counted.
    """
    if not isinstance(bins, int) or bins < 1:
        raise BadBinCount(f"bins must be a positive integer, got {bins!r}")
    width = (hi - lo) / bins
    edges = [lo + i * width for i in range(bins)] + [hi]
    counts = [0] * bins
    for value in table.column("impact_level"):
        if value is None or not lo <= value <= hi:
            continue
        idx = min(int((value - lo) * bins // (hi - lo)), bins - 1)
        counts[idx] += 1
    return HistogramSpec(edges, counts)


def sector_shares(table: ThreatTable) -> list[tuple[str, float]]:
    _require_clean(table)
    tally = Counter(table.column("targeted_sector"))
    n = len(table)
    return sorted(((k, c / n) for k, c in tally.items()), key=lambda kv: (-kv[1], kv[0]))


def quantile(sorted_values: list[float], q: float) -> float:
    """Linear interpolation at rank ``q * (n - 1)`` of an ascending list."""
    n = len(sorted_values)
    rank = q * (n - 1)
    lo = math.floor(rank)
    hi = min(lo + 1, n - 1)
    frac = rank - lo
    return sorted_values[lo] + (sorted_values[hi] - sorted_values[lo]) * frac


def box_stats(key: str, values: list[float]) -> BoxStats:
    v = sorted(float(x) for x in values)
    q1, med, q3 = quantile(v, 0.25), quantile(v, 0.5), quantile(v, 0.75)
    return BoxStats(key, v[0], q1, med, q3, v[-1], q3 - q1)


def box_stats_by_threat(table: ThreatTable) -> list[BoxStats]:
    _require_clean(table)
    return [
        box_stats(key, [r.num_attempts for r in members])
        for key, members in sorted(_groups(table, "threat_type").items())
    ]


def pearson(x: list[float], y: list[float]) -> float | None:
    """Pearson coefficient, or ``None`` when either input has zero variance."""
    n = len(x)
    mx, my = math.fsum(x) / n, math.fsum(y) / n
    dx = [a - mx for a in x]
    dy = [b - my for b in y]
    sxx = math.fsum(a * a for a in dx)
    syy = math.fsum(b * b for b in dy)
    if sxx == 0.0 or syy == 0.0:
        return None
    r = math.fsum(a * b for a, b in zip(dx, dy)) / math.sqrt(sxx * syy)
    return max(-1.0, min(1.0, r))


def correlation(table: ThreatTable) -> CorrelationMatrix:
    """Pearson matrix over attempts, impact and target.

    Off-diagonal cells touching a constant column hold 0 and the column is
    listed in ``zero_variance``; the diagonal is always 1.
    """
    _require_clean(table)
    if len(table) < 2:
        raise TooFewRows("correlation needs at least 2 rows")
    cols = [[float(v) for v in table.column(name)] for name in CORRELATION_VARIABLES]
    k = len(cols)
    cells = [[1.0 if i == j else 0.0 for j in range(k)] for i in range(k)]
    flagged = set()
    for i in range(k):
        for j in range(i + 1, k):
            r = pearson(cols[i], cols[j])
            if r is None:
                for idx in (i, j):
                    if len(set(cols[idx])) == 1:
                        flagged.add(CORRELATION_VARIABLES[idx])
                r = 0.0
            cells[i][j] = cells[j][i] = r
    zero_var = tuple(name for name in CORRELATION_VARIABLES if name in flagged)
    return CorrelationMatrix(CORRELATION_VARIABLES, cells, zero_var)


def eda_report(table: ThreatTable, bins: int = 10) -> dict:
    """Everything the chart set needs, as one JSON-ready document."""
    corr = correlation(table)
    return {
        "source": table.source_name,
        "rows": len(table),
        "group_summaries": [asdict(g) for g in summarize_by_threat(table)],
        "histogram": asdict(impact_histogram(table, bins)),
        "sector_shares": [{"sector": k, "proportion": p} for k, p in sector_shares(table)],
        "box_stats": [asdict(b) for b in box_stats_by_threat(table)],
        "correlation": {
            "variable_names": list(corr.variable_names),
            "cells": corr.cells,
            "zero_variance": list(corr.zero_variance),
        },
    }
