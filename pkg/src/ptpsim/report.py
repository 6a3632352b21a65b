"""Figure-analog tables derived from a run's metrics.

Each builder takes a :class:`RunData` and returns a :class:`Figure` (header,
rows and an optional sidecar) or raises :class:`SkipFigure` when the run
lacks the metrics that figure needs.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

from . import analysis as A
from .analysis import MetricRecord
from .timebase import NS_PER_S

DEFAULT_SETTLE_NS = 60 * NS_PER_S
MODE_BIN_NS = 1_000
CDF_MAX_POINTS = 500
PORTS_FILE = "ports.csv"
PORTS_HEADER = ("node", "port", "link", "link_kind", "state")


class SkipFigure(Exception):
    pass


@dataclass
class PortRow:
    node: str
    port: int
    link: str
    link_kind: str
    state: str


@dataclass
class RunData:
    metrics: list[MetricRecord]
    ports: list[PortRow]
    settle_ns: int = DEFAULT_SETTLE_NS
    _index: dict = field(default_factory=dict, repr=False)

    def __post_init__(self) -> None:
        idx: dict[tuple[str, str], list[MetricRecord]] = defaultdict(list)
        for r in self.metrics:
            idx[(r.node, r.metric)].append(r)
        self._index = dict(idx)

    def series(self, node: str, metric: str, settled: bool = True) -> list[MetricRecord]:
        recs = self._index.get((node, metric), [])
        if settled:
            recs = [r for r in recs if r.at >= self.settle_ns]
        return recs

    def nodes_with(self, metric: str) -> list[str]:
        return sorted({n for (n, m) in self._index if m == metric})

    def slave_kind(self, node: str) -> str | None:
        for p in self.ports:
            if p.node == node and p.state in ("slave", "uncalibrated"):
                return p.link_kind
        return None

    def slave_link(self, node: str) -> str | None:
        for p in self.ports:
            if p.node == node and p.state in ("slave", "uncalibrated"):
                return p.link
        return None

    def wireless_slaves(self) -> list[tuple[str, str]]:
        """(node, link) for every node synchronised over a wireless hop."""
        return sorted(
            (p.node, p.link) for p in self.ports if p.state in ("slave", "uncalibrated") and p.link_kind == "wireless"
        )

    @classmethod
    def load(cls, directory: str | Path, metrics_name: str = "metrics.csv", settle_ns: int = DEFAULT_SETTLE_NS) -> RunData:
        d = Path(directory)
        metrics = A.load_metrics(d / metrics_name)
        ports: list[PortRow] = []
        pf = d / PORTS_FILE
        if pf.exists():
            _, rows = A.read_csv_table(pf)
            ports = [PortRow(r[0], int(r[1]), r[2], r[3], r[4]) for r in rows]
        return cls(metrics, ports, settle_ns)


@dataclass
class Figure:
    name: str
    header: tuple[str, ...]
    rows: list[tuple]
    sidecar: list[tuple[str, float]] | None = None
    plot: str | None = None


def _per_second(recs: list[MetricRecord]) -> list[tuple[int, int, float, float, float]]:
    buckets: dict[int, list[float]] = defaultdict(list)
    for r in recs:
        buckets[r.at // NS_PER_S].append(r.value)
    return [(s, len(v), min(v), math.fsum(v) / len(v), max(v)) for s, v in sorted(buckets.items())]


def _stacked(data: RunData, metric: str, name: str, ylabel: str) -> Figure:
    nodes = data.nodes_with(metric)
    if not nodes:
        raise SkipFigure(f"no {metric} samples")
    rows = []
    for node in nodes:
        for s, n, lo, mean, hi in _per_second(data.series(node, metric)):
            rows.append((s, node, n, lo, mean, hi))
    plot = _gnuplot_lines(name, ylabel)
    return Figure(name, ("t_s", "node", "count", "min", "mean", "max"), rows, plot=plot)


def fig3_offset(data: RunData) -> Figure:
    """Per-second offset envelope for every synchronised node."""
    return _stacked(data, "offset_ns", "fig3_offset", "offset from master (ns)")


def fig4_mpd(data: RunData) -> Figure:
    """Per-second mean path delay envelope for every synchronised node."""
    return _stacked(data, "mpd_ns", "fig4_mpd", "mean path delay (ns)")


def nice_width(lo: float, hi: float, bins: int = 40) -> float:
    """A 1/2/5 x 10^k bin width giving roughly ``bins`` bins over [lo, hi]."""
    span = hi - lo
    if span <= 0:
        return 1.0
    raw = span / bins
    k = math.floor(math.log10(raw))
    for m in (1, 2, 5, 10):
        w = m * 10**k
        if w >= raw:
            return float(max(1, w))
    return float(10 ** (k + 1))


def fig5_hist(data: RunData) -> Figure:
    """Offset histogram per node; bin width adapts to the node's spread."""
    nodes = data.nodes_with("offset_ns")
    if not nodes:
        raise SkipFigure("no offset_ns samples")
    rows = []
    for node in nodes:
        vals = [r.value for r in data.series(node, "offset_ns")]
        if not vals:
            continue
        st = A.summarize(vals)
        width = nice_width(st.p1, st.p99)
        for edge, count in A.histogram(vals, width):
            rows.append((node, width, edge, count))
    return Figure("fig5_hist", ("node", "bin_width_ns", "bin_lo_ns", "count"), rows)


def fig6_mpd_vs_channel(data: RunData) -> Figure:
    """Per-second MPD alongside SNR and RSL of the wireless hop, plus rank correlations."""
    pairs = data.wireless_slaves()
    if not pairs:
        raise SkipFigure("no node is synchronised over a wireless link")
    rows = []
    sidecar: list[tuple[str, float]] = []
    for node, link in pairs:
        mpd = data.series(node, "mpd_ns")
        snr = data.series(link, "snr_db", settled=False)
        rsl = data.series(link, "rsl_dbm", settled=False)
        if not mpd or not snr or not rsl:
            continue
        snr_at = A.StepSeries(snr)
        rsl_at = A.StepSeries(rsl)
        for s, n, _lo, mean, _hi in _per_second(mpd):
            t = s * NS_PER_S
            rows.append((s, node, link, mean, snr_at.at(t), rsl_at.at(t)))
        x = [r.value for r in mpd]
        sidecar.append(("spearman_mpd_snr", A.spearman(x, [v for _, v in A.align(mpd, snr)])))
        sidecar.append(("spearman_mpd_rsl", A.spearman(x, [v for _, v in A.align(mpd, rsl)])))
        sidecar.append(("samples", float(len(x))))
        break  # one wireless hop per figure
    if not rows:
        raise SkipFigure("wireless link has no channel samples")
    return Figure(
        "fig6_mpd_vs_channel", ("t_s", "node", "link", "mpd_mean_ns", "snr_db", "rsl_dbm"), rows, sidecar=sidecar
    )


def _rain_groups(data: RunData, metric: str):
    pairs = data.wireless_slaves()
    if not pairs:
        raise SkipFigure("no wireless link, so no rain-rate conditioning")
    node, link = pairs[0]
    rain = data.series(link, "rain_mmh", settled=False)
    recs = data.series(node, metric)
    if not rain or not recs:
        raise SkipFigure("no rain_mmh samples")
    return node, A.bin_by_rain(recs, rain)


def fig7_rainbins(data: RunData) -> Figure:
    """MPD statistics per 0.05 mm/h rain bin."""
    node, groups = _rain_groups(data, "mpd_ns")
    rows = []
    for lo, hi, vals in groups:
        if not vals:
            rows.append((node, lo, hi, 0, "", "", "", ""))
            continue
        st = A.summarize(vals)
        rows.append((node, lo, hi, st.count, A.mode(vals, MODE_BIN_NS), st.mean, st.p1, st.p99))
    return Figure(
        "fig7_rainbins",
        ("node", "rain_lo_mmh", "rain_hi_mmh", "count", "mpd_mode_ns", "mpd_mean_ns", "mpd_p1_ns", "mpd_p99_ns"),
        rows,
    )


def thin_cdf(points: list[tuple[float, float]], max_points: int = CDF_MAX_POINTS) -> list[tuple[float, float]]:
    """Keep at most ``max_points`` evenly spaced points, always the last one."""
    if len(points) <= max_points:
        return points
    step = len(points) / max_points
    keep = [points[int(i * step)] for i in range(max_points - 1)]
    keep.append(points[-1])
    return keep


def fig8_offset_cdf(data: RunData) -> Figure:
    """CDF of |offset| per rain bin for the wireless-synchronised node."""
    node, groups = _rain_groups(data, "offset_ns")
    rows = []
    for lo, hi, vals in groups:
        if not vals:
            continue
        for v, frac in thin_cdf(A.cdf([abs(x) for x in vals])):
            rows.append((node, lo, hi, v, frac))
    return Figure("fig8_offset_cdf", ("node", "rain_lo_mmh", "rain_hi_mmh", "abs_offset_ns", "fraction"), rows)


def fig9_wired_vs_wireless(data: RunData) -> Figure:
    """Offset statistics per node, labelled by the kind of link it syncs over."""
    nodes = data.nodes_with("offset_ns")
    rows = []
    for node in nodes:
        vals = [r.value for r in data.series(node, "offset_ns")]
        if not vals:
            continue
        st = A.summarize(vals)
        rows.append((node, data.slave_kind(node) or "", st.count, st.mean, st.std, st.p1, st.p50, st.p99))
    if not rows:
        raise SkipFigure("no offset_ns samples")
    return Figure(
        "fig9_wired_vs_wireless",
        ("node", "slave_link_kind", "count", "mean_ns", "std_ns", "p1_ns", "p50_ns", "p99_ns"),
        rows,
    )


FIGURES: dict[str, Callable[[RunData], Figure]] = {
    "fig3": fig3_offset,
    "fig4": fig4_mpd,
    "fig5": fig5_hist,
    "fig6": fig6_mpd_vs_channel,
    "fig7": fig7_rainbins,
    "fig8": fig8_offset_cdf,
    "fig9": fig9_wired_vs_wireless,
}


def _gnuplot_lines(name: str, ylabel: str) -> str:
    return (
        "set datafile separator ','\n"
        f"set ylabel '{ylabel}'\nset xlabel 'time (s)'\n"
        f"plot '{name}.csv' every ::2 using 1:5 with lines title 'mean'\n"
    )


def generic_plot(fig: Figure) -> str:
    cols = ", ".join(f"{i + 1}:{h}" for i, h in enumerate(fig.header))
    return (
        "set datafile separator ','\n"
        f"# columns: {cols}\n"
        f"plot '{fig.name}.csv' every ::2 using 1:{min(len(fig.header), 4)} with points title '{fig.name}'\n"
    )


def write_figure(fig: Figure, out_dir: Path, plot_script: bool = False) -> list[Path]:
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    path = out_dir / f"{fig.name}.csv"
    A.write_table(path, fig.header, fig.rows, f"ptpsim {fig.name} schema v{A.SCHEMA_VERSION}")
    written.append(path)
    if fig.sidecar is not None:
        side = out_dir / f"{fig.name}_spearman.csv"
        A.write_table(side, ("key", "value"), fig.sidecar, f"ptpsim {fig.name} sidecar schema v{A.SCHEMA_VERSION}")
        written.append(side)
    if plot_script:
        gp = out_dir / f"{fig.name}.gp"
        gp.write_text(fig.plot or generic_plot(fig), encoding="utf-8")
        written.append(gp)
    return written
