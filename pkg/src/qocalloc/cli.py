"""Command line entry points.

Verbs:
  run       execute the configured sweep x schemes x trials, write CSVs + manifest
  fit       fit an accuracy or rate model to a two-column CSV
  plotdata  distil a results directory into per-figure CSVs and PNGs
  validate  parse and cross-check a scenario file, reporting the first problem

Exit codes: 0 success, 2 configuration error, 3 infeasible problem, 1 other
failure. Overrides (--set problem.b_total_mhz=10) mirror the scenario keys
one to one; the dedicated flags (--trials, --seed, ...) are shorthand for the
matching runs.* overrides and win over --set.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .errors import (
    ConfigError,
    InfeasibleAccuracyError,
    InfeasibleProblemError,
    QocError,
)
from .fitting import fit_accuracy_model, fit_rate_model
from .reporting import (
    MANIFEST_JSON,
    SLOTS_CSV,
    SWEEP_CSV,
    SweepEntry,
    write_manifest,
    write_plot_data,
    write_slots_csv,
    write_sweep_csv,
)
from .scenario import (
    apply_overrides,
    default_config_dict,
    load_config_file,
    parse_config,
)
from .simulate import run_monte_carlo


def _load_document(args) -> dict:
    if args.scenario is None:
        doc = default_config_dict()
    else:
        doc = load_config_file(args.scenario)
    overrides = list(args.set)
    if getattr(args, "trials", None) is not None:
        overrides.append(f"runs.trials={args.trials}")
    if getattr(args, "seed", None) is not None:
        overrides.append(f"runs.seed={args.seed}")
    if getattr(args, "jobs", None) is not None:
        overrides.append(f"runs.jobs={args.jobs}")
    if getattr(args, "schemes", None) is not None:
        overrides.append(f"runs.schemes=[{args.schemes}]")
    return apply_overrides(doc, overrides)


def _cmd_run(args) -> int:
    config = parse_config(_load_document(args))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    episode = config.episode()
    links = config.link_ranges()
    keep = min(config.slot_log_trials, config.trials)
    sweep_entries = []
    slot_blocks = []
    fallback_total = 0
    for b_mhz, b_hz in zip(config.b_total_mhz, config.b_total_hz):
        metrics, traces = run_monte_carlo(
            episode, config.scenario, links, config.constraints(b_hz),
            config.radio(), schemes=config.schemes, trials=config.trials,
            jobs=config.jobs, keep_traces=keep)
        summary = []
        for scheme in config.schemes:
            m = metrics[scheme]
            sweep_entries.append(SweepEntry(float(b_mhz), scheme, m))
            slot_blocks.append((scheme, float(b_mhz), traces[scheme]))
            fallback_total += sum(t.fallback_slots for t in m.per_trial)
            summary.append(f"{scheme}={m.overall_accuracy:.4f}")
        print(f"b_total {b_mhz:g} MHz: accuracy " + " ".join(summary), flush=True)
    write_sweep_csv(out / SWEEP_CSV, sweep_entries)
    write_slots_csv(out / SLOTS_CSV, slot_blocks)
    write_manifest(out / MANIFEST_JSON, config)
    if fallback_total:
        print(f"warning: {fallback_total} slot solves were infeasible and "
              "fell back to scaled minimum bandwidths", file=sys.stderr)
    print(f"wrote {out / SWEEP_CSV}, {out / SLOTS_CSV}, {out / MANIFEST_JSON}")
    return 0


def _read_xy_csv(path) -> list[tuple[float, float]]:
    """Two numeric columns with a one-line header; extra columns warn."""
    import csv

    with open(path, "r", newline="", encoding="utf-8") as fh:
        rows = [row for row in csv.reader(fh) if row]
    if not rows:
        raise ConfigError(f"{path}: empty file, expected a header plus x,y rows")
    header, data = rows[0], rows[1:]
    if len(header) < 2:
        raise ConfigError(f"{path}: expected at least two columns, got {header}")
    if len(header) > 2:
        print(f"warning: ignoring extra column(s) {', '.join(header[2:])}",
              file=sys.stderr)
    if not data:
        raise ConfigError(f"{path}: no data rows after the header")
    samples = []
    for lineno, row in enumerate(data, start=2):
        try:
            samples.append((float(row[0]), float(row[1])))
        except (IndexError, ValueError) as err:
            raise ConfigError(f"{path}:{lineno}: expected two numbers, "
                              f"got {row!r}") from err
    return samples


def _cmd_fit(args) -> int:
    samples = _read_xy_csv(args.csv)
    if args.kind == "accuracy":
        result = fit_accuracy_model(samples)
        names = ("alpha", "beta", "gamma")
        section = "categories"
    else:
        result = fit_rate_model(samples)
        names = ("a_qp", "b_per_kbps")
        section = "videos"
    for name, value in zip(names, result.parameters):
        print(f"{name} = {value!r}")
    print(f"rmse = {result.rmse!r}")
    print(f"iterations = {result.iterations}, converged = {result.converged}")
    if args.fragment:
        print()
        print(f"# scenario fragment: append under `{section}`")
        print("- label: fitted")
        for name, value in zip(names, result.parameters):
            print(f"  {name}: {value!r}")
        if args.kind == "rate":
            print("  objects_per_frame: []  # fill in per-category densities")
    return 0 if result.converged else 1


def _cmd_plotdata(args) -> int:
    written = write_plot_data(
        args.results, out_dir=args.out, b_total_mhz=args.b_total_mhz,
        render=not args.no_figures)
    for path in written:
        print(f"wrote {path}")
    return 0


def _cmd_validate(args) -> int:
    config = parse_config(_load_document(args))
    budgets = ", ".join(f"{b:g}" for b in config.b_total_mhz)
    print(f"ok: {config.num_vehicles} vehicles, "
          f"{config.scenario.num_categories} categories, "
          f"budgets [{budgets}] MHz, {config.trials} trials, "
          f"schemes {', '.join(config.schemes)}, "
          f"{config.episode().num_slots} slots per episode")
    return 0


def _add_scenario_arguments(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--scenario", metavar="PATH", default=None,
                     help="scenario YAML (default: bundled scenario)")
    sub.add_argument("--set", metavar="KEY=VALUE", action="append", default=[],
                     help="override a scenario key by dotted path (repeatable)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qocalloc",
        description="Content-quality driven bandwidth allocation: "
                    "simulator, solvers, and reporting.")
    commands = parser.add_subparsers(dest="command", required=True)

    run = commands.add_parser(
        "run", help="run the configured experiment and write results")
    _add_scenario_arguments(run)
    run.add_argument("--out", metavar="DIR", default="results",
                     help="output directory (default: ./results)")
    run.add_argument("--trials", type=int, default=None,
                     help="shorthand for --set runs.trials=N")
    run.add_argument("--seed", type=int, default=None,
                     help="shorthand for --set runs.seed=N")
    run.add_argument("--jobs", type=int, default=None,
                     help="shorthand for --set runs.jobs=N")
    run.add_argument("--schemes", metavar="LIST", default=None,
                     help="comma-separated subset of qoc,da,qoe")
    run.set_defaults(func=_cmd_run)

    fit = commands.add_parser(
        "fit", help="fit a content model to a two-column CSV")
    fit.add_argument("--csv", metavar="PATH", required=True,
                     help="CSV of x,y samples with a header row")
    fit.add_argument("--kind", choices=("accuracy", "rate"), required=True,
                     help="accuracy: x=QP, y=accuracy; rate: x=kbps, y=QP")
    fit.add_argument("--fragment", action="store_true",
                     help="also print a scenario fragment for the fit")
    fit.set_defaults(func=_cmd_fit)

    plotdata = commands.add_parser(
        "plotdata", help="emit per-figure CSVs and PNGs from a results dir")
    plotdata.add_argument("--results", metavar="DIR", required=True,
                          help="directory holding sweep.csv and slots.csv")
    plotdata.add_argument("--out", metavar="DIR", default=None,
                          help="output directory (default: the results dir)")
    plotdata.add_argument("--b-total-mhz", type=float, default=None,
                          help="budget to use for the per-slot and share figures")
    plotdata.add_argument("--no-figures", action="store_true",
                          help="write the CSVs only, skip PNG rendering")
    plotdata.set_defaults(func=_cmd_plotdata)

    validate = commands.add_parser(
        "validate", help="parse and cross-check a scenario file")
    _add_scenario_arguments(validate)
    validate.set_defaults(func=_cmd_validate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2
    except (InfeasibleProblemError, InfeasibleAccuracyError) as err:
        print(f"infeasible: {err}", file=sys.stderr)
        return 3
    except FileNotFoundError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    except QocError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
