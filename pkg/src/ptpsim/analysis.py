"""Statistics over simulation telemetry, and CSV export.

Everything here is a pure function over immutable record collections.
Percentiles use the nearest-rank definition so results do not depend on the
numeric environment.
"""

from __future__ import annotations

import bisect
import csv
import io
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, NamedTuple, Sequence

SCHEMA_VERSION = 1
METRICS = ("offset_ns", "true_offset_ns", "mpd_ns", "snr_db", "rsl_dbm", "rain_mmh", "port_state")
INTEGER_METRICS = frozenset({"offset_ns", "mpd_ns", "port_state"})
DEFAULT_RAIN_EDGES = (0.0, 0.05, 0.10, 0.15, 0.20, 0.25)


class AnalysisError(ValueError):
    pass


class MetricRecord(NamedTuple):
    at: int
    node: str
    metric: str
    value: float


@dataclass(frozen=True)
class SummaryStats:
    count: int
    min: float
    max: float
    mean: float
    std: float
    p1: float
    p50: float
    p99: float

    def as_row(self) -> list:
        return [self.count, self.min, self.max, self.mean, self.std, self.p1, self.p50, self.p99]


SUMMARY_FIELDS = ("count", "min", "max", "mean", "std", "p1", "p50", "p99")


def percentile(sorted_values: Sequence[float], p: float) -> float:
    """Nearest-rank percentile of an already sorted sequence."""
    n = len(sorted_values)
    if n == 0:
        raise AnalysisError("percentile of an empty series")
    if not 0 <= p <= 100:
        raise AnalysisError(f"percentile {p} outside [0, 100]")
    rank = max(1, math.ceil(p / 100.0 * n))
    return sorted_values[rank - 1]


def summarize(series: Iterable[float]) -> SummaryStats:
    xs = sorted(series)
    n = len(xs)
    if n == 0:
        raise AnalysisError("cannot summarize an empty series")
    mean = math.fsum(xs) / n
    var = math.fsum((x - mean) ** 2 for x in xs) / n
    return SummaryStats(
        count=n,
        min=xs[0],
        max=xs[-1],
        mean=mean,
        std=math.sqrt(var),
        p1=percentile(xs, 1),
        p50=percentile(xs, 50),
        p99=percentile(xs, 99),
    )


def histogram(series: Iterable[float], bin_width: float, origin: float = 0.0) -> list[tuple[float, int]]:
    """Counts per left-closed bin ``[edge, edge + width)``; empty bins omitted."""
    if not bin_width > 0:
        raise AnalysisError(f"bin width must be > 0, got {bin_width}")
    counts: dict[int, int] = {}
    for x in series:
        k = math.floor((x - origin) / bin_width)
        counts[k] = counts.get(k, 0) + 1
    return [(origin + k * bin_width, counts[k]) for k in sorted(counts)]


def cdf(series: Iterable[float]) -> list[tuple[float, float]]:
    """Empirical CDF as (value, fraction <= value) at each distinct value."""
    xs = sorted(series)
    n = len(xs)
    if n == 0:
        raise AnalysisError("cdf of an empty series")
    out: list[tuple[float, float]] = []
    for i, x in enumerate(xs, start=1):
        if i < n and xs[i] == x:
            continue
        out.append((x, i / n))
    return out


def mode(series: Iterable[float], bin_width: float, origin: float = 0.0) -> float:
    """Centre of the most populated histogram bin (lowest bin on ties)."""
    h = histogram(series, bin_width, origin)
    if not h:
        raise AnalysisError("mode of an empty series")
    edge, _ = max(h, key=lambda e: (e[1], -e[0]))
    return edge + bin_width / 2


def average_ranks(xs: Sequence[float]) -> list[float]:
    """1-based ranks; tied values share the mean of their positions."""
    order = sorted(range(len(xs)), key=lambda i: xs[i])
    ranks = [0.0] * len(xs)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and xs[order[j + 1]] == xs[order[i]]:
            j += 1
        r = (i + j) / 2 + 1
        for k in range(i, j + 1):
            ranks[order[k]] = r
        i = j + 1
    return ranks


def pearson(x: Sequence[float], y: Sequence[float]) -> float:
    n = len(x)
    mx = math.fsum(x) / n
    my = math.fsum(y) / n
    sxy = math.fsum((a - mx) * (b - my) for a, b in zip(x, y))
    sxx = math.fsum((a - mx) ** 2 for a in x)
    syy = math.fsum((b - my) ** 2 for b in y)
    if sxx == 0 or syy == 0:
        raise AnalysisError("correlation undefined: a series has zero variance")
    r = sxy / math.sqrt(sxx * syy)
    return max(-1.0, min(1.0, r))


def spearman(x: Sequence[float], y: Sequence[float]) -> float:
    if len(x) != len(y):
        raise AnalysisError(f"length mismatch: {len(x)} vs {len(y)}")
    if len(x) < 3:
        raise AnalysisError(f"spearman needs at least 3 pairs, got {len(x)}")
    return pearson(average_ranks(x), average_ranks(y))


# -- record helpers ----------------------------------------------------------


def select(records: Iterable[MetricRecord], node: str | None = None, metric: str | None = None) -> list[MetricRecord]:
    return [r for r in records if (node is None or r.node == node) and (metric is None or r.metric == metric)]


def values(records: Iterable[MetricRecord], node: str, metric: str, after_ns: int = 0) -> list[float]:
    return [r.value for r in records if r.node == node and r.metric == metric and r.at >= after_ns]


class StepSeries:
    """Piecewise-constant lookup over time-ordered (at, value) records."""

    def __init__(self, records: Sequence[MetricRecord]) -> None:
        self.times = [r.at for r in records]
        self.vals = [r.value for r in records]
        if any(b < a for a, b in zip(self.times, self.times[1:])):
            raise AnalysisError("records must be time-ordered")

    def at(self, t: int) -> float:
        i = bisect.bisect_right(self.times, t) - 1
        if i < 0:
            raise AnalysisError(f"no value in force at t={t} ns (series starts at {self.times[0] if self.times else None})")
        return self.vals[i]


def align(samples: Sequence[MetricRecord], channel: Sequence[MetricRecord]) -> list[tuple[float, float]]:
    """Pair each sample with the channel value in force at its timestamp."""
    step = StepSeries(channel)
    return [(s.value, step.at(s.at)) for s in samples]


def bin_by_rain(
    mpd: Sequence[MetricRecord],
    rain: Sequence[MetricRecord],
    edges: Sequence[float] = DEFAULT_RAIN_EDGES,
) -> list[tuple[float, float, list[float]]]:
    """Group samples by the rain rate in force when they were taken.

    Bins are left-closed ``[edges[i], edges[i+1])``; the last bin is also
    right-closed so a rate equal to the final edge is kept. Rates outside the
    edges are an error.
    """
    if len(edges) < 2 or any(b <= a for a, b in zip(edges, edges[1:])):
        raise AnalysisError("rain bin edges must be strictly increasing, at least two")
    if not rain:
        raise AnalysisError("rain series is empty")
    step = StepSeries(rain)
    bins: list[list[float]] = [[] for _ in range(len(edges) - 1)]
    last = len(edges) - 2
    for rec in mpd:
        r = step.at(rec.at)
        if r == edges[-1]:
            i = last
        else:
            i = bisect.bisect_right(edges, r) - 1
            if i < 0 or i > last:
                raise AnalysisError(f"rain rate {r} mm/h at t={rec.at} outside bin edges")
        bins[i].append(rec.value)
    return [(edges[i], edges[i + 1], bins[i]) for i in range(len(bins))]


# -- CSV ---------------------------------------------------------------------


def fmt_value(v, integer: bool = False) -> str:
    if isinstance(v, bool):
        return "1" if v else "0"
    if integer or isinstance(v, int):
        return str(int(round(v)))
    if isinstance(v, float):
        if math.isnan(v) or math.isinf(v):
            return repr(v)
        if v == int(v) and abs(v) < 1e15:
            return str(int(v))
        return f"{v:.6g}"
    return str(v)


def write_table(
    destination: str | Path | io.TextIOBase,
    header: Sequence[str],
    rows: Iterable[Sequence],
    comment: str | None = None,
) -> int:
    """Write ``rows`` as CSV with a ``# ...`` schema comment; returns row count.

    Floats are written with 6 significant digits, integers verbatim.
    """
    if isinstance(destination, (str, Path)):
        path = Path(destination)
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            with open(path, "w", encoding="utf-8", newline="") as fh:
                return write_table(fh, header, rows, comment)
        except OSError as exc:
            raise OSError(f"{path}: {exc.strerror or exc}") from exc
    out = destination
    if comment is None:
        comment = f"ptpsim schema v{SCHEMA_VERSION}"
    out.write(f"# {comment}\n")
    writer = csv.writer(out, lineterminator="\n", quoting=csv.QUOTE_MINIMAL)
    writer.writerow(header)
    n = 0
    for row in rows:
        writer.writerow([fmt_value(v) for v in row])
        n += 1
    return n


METRICS_HEADER = ("at_ns", "node", "metric", "value")


def export_csv(records: Iterable[MetricRecord], destination: str | Path | io.TextIOBase) -> int:
    """Write metric records (at_ns,node,metric,value); ns-valued metrics as integers."""

    def rows():
        for r in records:
            yield (r.at, r.node, r.metric, fmt_value(r.value, r.metric in INTEGER_METRICS))

    return write_table(destination, METRICS_HEADER, rows(), f"ptpsim metrics schema v{SCHEMA_VERSION}")


def read_csv_table(path: str | Path) -> tuple[list[str], list[list[str]]]:
    path = Path(path)
    with open(path, encoding="utf-8", newline="") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    reader = csv.reader(lines)
    try:
        header = next(reader)
    except StopIteration:
        raise AnalysisError(f"{path}: no header row") from None
    return header, [row for row in reader]


def load_metrics(path: str | Path) -> list[MetricRecord]:
    header, rows = read_csv_table(path)
    if tuple(header) != METRICS_HEADER:
        raise AnalysisError(f"{path}: unexpected header {header!r}")
    out = []
    for row in rows:
        at, node, metric, value = row
        out.append(MetricRecord(int(at), node, metric, float(value)))
    return out
