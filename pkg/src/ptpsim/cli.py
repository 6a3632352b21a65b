"""Command line entry point: ``ptpsim run | report | preset``.

Exit codes: 0 ok, 2 usage or validation error, 3 I/O error, 4 internal
invariant failure. Every error prints one line of the form
``ptpsim: error[E_CODE]: message`` on stderr.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import __version__
from . import analysis as A
from . import report as R
from .engine import InvariantViolation, RunResult, Simulation
from .presets import PRESETS, UnknownPreset, get_preset
from .scenario import (
    Scenario,
    ScenarioSyntaxError,
    ScenarioValidationError,
    format_duration,
    load_scenario,
    parse_duration,
    serialize_scenario,
)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_INTERNAL = 4

SUMMARY_FILE = "run_summary.txt"
SCENARIO_FILE = "scenario.txt"
STATS_FILE = "summary.csv"


class CliError(Exception):
    def __init__(self, code: str, message: str, status: int) -> None:
        super().__init__(message)
        self.code = code
        self.status = status


def _fail(code: str, message: str, status: int = EXIT_USAGE) -> CliError:
    return CliError(code, message, status)


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # noqa: D401 - argparse hook
        raise _fail("E_USAGE", message)


def _duration_arg(text: str) -> int:
    try:
        return parse_duration(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _figures_arg(text: str) -> list[str]:
    if text in ("all", ""):
        return list(R.FIGURES)
    if text == "none":
        return []
    names = []
    for part in text.split(","):
        key = part.strip().split("_", 1)[0]
        if key not in R.FIGURES:
            raise argparse.ArgumentTypeError(f"unknown figure {part!r} (choose from {', '.join(R.FIGURES)} or all)")
        names.append(key)
    return names


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="ptpsim", description="Deterministic PTP network simulator.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="run a scenario and write metrics")
    src = run.add_mutually_exclusive_group(required=True)
    src.add_argument("--preset", help="built-in scenario name (see 'preset list')")
    src.add_argument("--scenario", type=Path, help="scenario file")
    run.add_argument("--seed", type=int, help="override the scenario seed")
    run.add_argument("--duration", type=_duration_arg, help="override run length, e.g. 120s, 30m, 2h")
    run.add_argument("--out", type=Path, default=Path("out"), help="output directory (default: out)")
    run.add_argument("--figures", type=_figures_arg, default=[], help="figure tables to derive: all, none or fig3,fig7,...")
    run.add_argument("--plot-script", action="store_true", help="also write a gnuplot script per figure")
    run.add_argument("--settle", type=_duration_arg, default=R.DEFAULT_SETTLE_NS,
                     help="initial span excluded from statistics (default 60s)")

    rep = sub.add_parser("report", help="derive figure tables from a run directory")
    rep.add_argument("metrics_dir", type=Path)
    rep.add_argument("--figures", type=_figures_arg, default=list(R.FIGURES))
    rep.add_argument("--out", type=Path, help="output directory (default: the metrics directory)")
    rep.add_argument("--plot-script", action="store_true")
    rep.add_argument("--settle", type=_duration_arg, default=R.DEFAULT_SETTLE_NS)

    pre = sub.add_parser("preset", help="list or show built-in scenarios")
    pre_sub = pre.add_subparsers(dest="preset_command", required=True, parser_class=_Parser)
    pre_sub.add_parser("list")
    show = pre_sub.add_parser("show")
    show.add_argument("name")
    return p


# -- run ---------------------------------------------------------------------


def _load(args) -> Scenario:
    if args.preset is not None:
        try:
            return get_preset(args.preset, duration_ns=args.duration, seed=args.seed)
        except UnknownPreset:
            raise _fail("E_PRESET", f"unknown preset {args.preset!r} (known: {', '.join(PRESETS)})") from None
    path: Path = args.scenario
    if not path.is_file():
        raise _fail("E_SCENARIO_MISSING", f"scenario file not found: {path}")
    try:
        s = load_scenario(path, validate_result=False)
    except ScenarioSyntaxError as exc:
        raise _fail("E_SCENARIO_SYNTAX", f"{path}: {exc}") from None
    except OSError as exc:
        raise _fail("E_SCENARIO_MISSING", f"{path}: {exc.strerror or exc}") from None
    changes = {}
    if args.duration is not None:
        changes["duration_ns"] = args.duration
    if args.seed is not None:
        changes["seed"] = args.seed
    return s.with_run(**changes) if changes else s


def port_rows(result: RunResult) -> list[tuple]:
    rows = []
    for node, states in result.final_states.items():
        for number, state in sorted(states.items()):
            link = result.port_links[node][number]
            kind = result.scenario.link(link).spec.kind.value
            rows.append((node, number, link, kind, state.value))
    return rows


def summary_text(result: RunResult) -> str:
    c = result.counters
    lines = [
        f"scenario: {result.scenario.name}",
        f"seed: {result.seed}",
        f"duration: {format_duration(result.duration_ns)}",
        f"events: {result.events}",
        f"messages: {result.messages_sent}",
        f"samples: {c.samples}",
        f"convergence_ns: {result.convergence_time_ns}",
        f"state_changes: {len(result.state_changes)}",
        f"discarded_exchanges: {c.discarded_exchanges}",
        f"sequence_mismatches: {c.sequence_mismatches}",
        f"phase_steps: {c.phase_steps}",
        f"trace_hash: {result.trace_hash}",
        "",
        "port states:",
    ]
    for node, number, link, kind, state in port_rows(result):
        lines.append(f"  {node}:{number} {state} via {link} ({kind})")
    lines.append("")
    lines.append("sync tree:")
    for child, parent in sorted(result.slave_edges().items()):
        lines.append(f"  {child} <- {parent}")
    return "\n".join(lines) + "\n"


def stats_rows(metrics: list[A.MetricRecord], settle_ns: int) -> list[tuple]:
    groups: dict[tuple[str, str], list[float]] = {}
    for r in metrics:
        if r.at >= settle_ns and r.metric != "port_state":
            groups.setdefault((r.node, r.metric), []).append(r.value)
    return [(node, metric, *A.summarize(v).as_row()) for (node, metric), v in sorted(groups.items())]


def write_run(result: RunResult, out: Path, settle_ns: int) -> None:
    out.mkdir(parents=True, exist_ok=True)
    scenario = result.scenario
    A.export_csv(result.metrics, out / scenario.run.metrics)
    A.write_table(out / R.PORTS_FILE, R.PORTS_HEADER, port_rows(result), "ptpsim ports schema v1")
    A.write_table(out / STATS_FILE, ("node", "metric", *A.SUMMARY_FIELDS), stats_rows(result.metrics, settle_ns),
                  "ptpsim summary schema v1")
    (out / SUMMARY_FILE).write_text(summary_text(result), encoding="utf-8")
    (out / SCENARIO_FILE).write_text(serialize_scenario(scenario.with_run(seed=result.seed)), encoding="utf-8")


def derive_figures(data: R.RunData, names: list[str], out: Path, plot_script: bool, err) -> int:
    made = 0
    for key in names:
        try:
            fig = R.FIGURES[key](data)
        except R.SkipFigure as exc:
            print(f"ptpsim: warning[W_FIGURE_SKIPPED]: {key}: {exc}", file=err)
            continue
        R.write_figure(fig, out, plot_script)
        made += 1
    return made


def cmd_run(args, out_stream, err) -> int:
    scenario = _load(args)
    try:
        sim = Simulation(scenario, seed=args.seed)
    except ScenarioValidationError as exc:
        for v in exc.violations:
            print(f"  - {v}", file=err)
        raise _fail("E_VALIDATION", f"scenario invalid ({len(exc.violations)} violations): {exc}") from None
    result = sim.run()
    write_run(result, args.out, args.settle)
    if args.figures:
        data = R.RunData(result.metrics, [R.PortRow(*r) for r in port_rows(result)], args.settle)
        derive_figures(data, args.figures, args.out, args.plot_script, err)
    print(summary_text(result), end="", file=out_stream)
    return EXIT_OK


def cmd_report(args, out_stream, err) -> int:
    src: Path = args.metrics_dir
    metrics_name = "metrics.csv"
    scen = src / SCENARIO_FILE
    if scen.exists():
        try:
            metrics_name = load_scenario(scen, validate_result=False).run.metrics
        except ScenarioSyntaxError:
            pass
    if not (src / metrics_name).is_file():
        raise _fail("E_METRICS_MISSING", f"no {metrics_name} in {src}")
    try:
        data = R.RunData.load(src, metrics_name, args.settle)
    except (A.AnalysisError, ValueError) as exc:
        raise _fail("E_METRICS_FORMAT", f"{src / metrics_name}: {exc}") from None
    out = args.out or src
    made = derive_figures(data, args.figures, out, args.plot_script, err)
    if args.figures and made == 0:
        raise _fail("E_NO_FIGURES", "every requested figure was skipped")
    print(f"wrote {made} figure table(s) to {out}", file=out_stream)
    return EXIT_OK


def cmd_preset(args, out_stream, err) -> int:
    if args.preset_command == "list":
        for name, factory in PRESETS.items():
            doc = (factory.__doc__ or "").strip().splitlines()[0]
            print(f"{name}\t{doc}", file=out_stream)
        return EXIT_OK
    try:
        scenario = get_preset(args.name)
    except UnknownPreset:
        raise _fail("E_PRESET", f"unknown preset {args.name!r} (known: {', '.join(PRESETS)})") from None
    out_stream.write(serialize_scenario(scenario))
    return EXIT_OK


COMMANDS = {"run": cmd_run, "report": cmd_report, "preset": cmd_preset}


def main(argv: list[str] | None = None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    try:
        args = build_parser().parse_args(argv)
        return COMMANDS[args.command](args, out, err)
    except CliError as exc:
        print(f"ptpsim: error[{exc.code}]: {exc}", file=err)
        return exc.status
    except OSError as exc:
        print(f"ptpsim: error[E_IO]: {exc}", file=err)
        return EXIT_IO
    except InvariantViolation as exc:
        print(f"ptpsim: error[E_INVARIANT]: {exc}", file=err)
        return EXIT_INTERNAL
    except Exception as exc:  # last resort: still one greppable line
        print(f"ptpsim: error[E_INTERNAL]: {type(exc).__name__}: {exc}", file=err)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
