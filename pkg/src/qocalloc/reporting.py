"""Result emission: per-slot and sweep CSVs, the run manifest, plot data.

CSVs are comma-separated UTF-8 with a header row and no locale formatting.
Floats are written through repr, which round-trips exactly, so re-parsing a
file reproduces the in-memory values bit for bit. The manifest (config,
config hash, seed, package version) is everything needed to reproduce a run.

``write_plot_data`` distils a results directory into one tidy CSV per
figure of interest and, unless asked not to, renders a matching PNG next to
each: per-slot bandwidth trajectories, per-scheme bandwidth shares, and the
accuracy / detected-density curves against total bandwidth.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

from .errors import DomainError
from .scenario import ExperimentConfig, config_hash, config_to_dict
from .simulate import AggregateMetrics, EpisodeTrace

SLOTS_CSV = "slots.csv"
SWEEP_CSV = "sweep.csv"
MANIFEST_JSON = "manifest.json"

SLOTS_HEADER = ("scheme", "b_total_mhz", "trial", "slot", "vehicle",
                "bandwidth_hz", "rate_kbps", "qp", "objective", "fallback")
SWEEP_BASE_HEADER = ("b_total_mhz", "scheme",
                     "overall_accuracy", "overall_accuracy_stderr",
                     "correct_density", "correct_density_stderr", "trials")

FIGURE_BASENAMES = ("fig_slot_bandwidth", "fig_scheme_shares",
                    "fig_accuracy_vs_bandwidth", "fig_density_vs_bandwidth")


def _fmt(value) -> str:
    """Lossless cell formatting: shortest repr for floats, plain str otherwise."""
    if isinstance(value, float):
        return repr(value)
    return str(value)


# ---------------------------------------------------------------------------
# results bundle
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SweepEntry:
    """Aggregated metrics of one (budget, scheme) cell of the sweep."""

    b_total_mhz: float
    scheme: str
    metrics: AggregateMetrics


def write_sweep_csv(path, entries: list[SweepEntry]) -> int:
    """One row per (budget, scheme); returns the row count."""
    if not entries:
        raise DomainError("nothing to write: no sweep entries")
    vehicles = len(entries[0].metrics.mean_bandwidth_hz)
    header = SWEEP_BASE_HEADER + tuple(
        f"mean_bandwidth_hz_{i + 1}" for i in range(vehicles))
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for entry in entries:
            m = entry.metrics
            writer.writerow(
                [_fmt(entry.b_total_mhz), entry.scheme,
                 _fmt(m.overall_accuracy), _fmt(m.overall_accuracy_stderr),
                 _fmt(m.correct_density), _fmt(m.correct_density_stderr),
                 m.trials]
                + [_fmt(b) for b in m.mean_bandwidth_hz])
    return len(entries)


def write_slots_csv(path, blocks) -> int:
    """Per-slot rows for the logged trials.

    ``blocks`` yields (scheme, b_total_mhz, traces); each trace contributes
    one row per slot and vehicle. Returns the row count.
    """
    count = 0
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(SLOTS_HEADER)
        for scheme, b_total_mhz, traces in blocks:
            for trial, trace in enumerate(traces):
                _require_trace(trace)
                for slot, result in enumerate(trace.results):
                    fallback = int(trace.fallback_slots[slot])
                    for vehicle in range(len(result.bandwidths)):
                        writer.writerow((
                            scheme, _fmt(float(b_total_mhz)), trial, slot,
                            vehicle + 1,
                            _fmt(float(result.bandwidths[vehicle])),
                            _fmt(float(result.rates[vehicle])),
                            _fmt(float(result.qps[vehicle])),
                            _fmt(float(result.objective)),
                            fallback,
                        ))
                        count += 1
    return count


def _require_trace(trace) -> None:
    if not isinstance(trace, EpisodeTrace):
        raise DomainError(f"expected an EpisodeTrace, got {type(trace).__name__}")


def write_manifest(path, config: ExperimentConfig, version: str | None = None) -> dict:
    """Write the reproducibility manifest and return it."""
    if version is None:
        from . import __version__ as version
    manifest = {
        "format": 1,
        "version": version,
        "seed": config.seed,
        "config_sha256": config_hash(config),
        "config": config_to_dict(config),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return manifest


def read_table(path) -> list[dict[str, str]]:
    """A CSV as a list of header-keyed string rows."""
    with open(path, "r", newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


# ---------------------------------------------------------------------------
# plot data
# ---------------------------------------------------------------------------

def _pick_budget(budgets: list[float], requested: float | None) -> float:
    if requested is not None:
        for b in budgets:
            if abs(b - requested) < 1e-9:
                return b
        raise DomainError(
            f"budget {requested} MHz not in results (have {budgets})")
    # default to the budget closest to 10 MHz, the usual exhibit point
    return min(budgets, key=lambda b: abs(b - 10.0))


def _write_rows(path, header, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def write_plot_data(results_dir, out_dir=None, b_total_mhz: float | None = None,
                    render: bool = True) -> list[Path]:
    """Distil a results directory into per-figure CSVs (and PNGs).

    Emits four tidy files: slot-by-slot bandwidth of each vehicle for one
    logged trial, per-scheme mean bandwidth shares at one budget, and the
    overall-accuracy and detected-density sweeps. Returns the written paths.
    """
    results_dir = Path(results_dir)
    out_dir = Path(out_dir) if out_dir is not None else results_dir
    out_dir.mkdir(parents=True, exist_ok=True)
    sweep_path = results_dir / SWEEP_CSV
    slots_path = results_dir / SLOTS_CSV
    for needed in (sweep_path, slots_path):
        if not needed.exists():
            raise FileNotFoundError(f"missing results file: {needed}")
    sweep = read_table(sweep_path)
    slots = read_table(slots_path)
    if not sweep:
        raise DomainError(f"{sweep_path} has no rows")

    budgets = sorted({float(r["b_total_mhz"]) for r in sweep})
    budget = _pick_budget(budgets, b_total_mhz)
    schemes = list(dict.fromkeys(r["scheme"] for r in sweep))
    written: list[Path] = []

    # slot-by-slot bandwidth, first logged trial, content-driven scheme first
    slot_scheme = "qoc" if any(r["scheme"] == "qoc" for r in slots) else (
        slots[0]["scheme"] if slots else "qoc")
    trial_rows = [r for r in slots
                  if r["scheme"] == slot_scheme
                  and abs(float(r["b_total_mhz"]) - budget) < 1e-9]
    if not trial_rows:
        raise DomainError(
            f"no logged slot rows for scheme {slot_scheme!r} at {budget} MHz; "
            "raise runs.slot_log_trials or pick another budget")
    first_trial = min(int(r["trial"]) for r in trial_rows)
    rows1 = sorted(
        ((int(r["slot"]), int(r["vehicle"]), float(r["bandwidth_hz"]))
         for r in trial_rows if int(r["trial"]) == first_trial))
    path1 = out_dir / f"{FIGURE_BASENAMES[0]}.csv"
    _write_rows(path1, ("slot", "vehicle", "bandwidth_hz"),
                [(s, v, _fmt(b)) for s, v, b in rows1])
    written.append(path1)

    # per-scheme mean bandwidth shares at the chosen budget
    vehicles = sorted(
        int(k.rsplit("_", 1)[1]) for k in sweep[0] if k.startswith("mean_bandwidth_hz_"))
    rows2 = []
    for r in sweep:
        if abs(float(r["b_total_mhz"]) - budget) >= 1e-9:
            continue
        for v in vehicles:
            rows2.append((r["scheme"], v, float(r[f"mean_bandwidth_hz_{v}"])))
    path2 = out_dir / f"{FIGURE_BASENAMES[1]}.csv"
    _write_rows(path2, ("scheme", "vehicle", "mean_bandwidth_hz"),
                [(s, v, _fmt(b)) for s, v, b in rows2])
    written.append(path2)

    # metric sweeps
    for basename, metric in ((FIGURE_BASENAMES[2], "overall_accuracy"),
                             (FIGURE_BASENAMES[3], "correct_density")):
        rows = [(float(r["b_total_mhz"]), r["scheme"],
                 float(r[metric]), float(r[f"{metric}_stderr"]))
                for r in sweep]
        rows.sort(key=lambda row: (row[0], schemes.index(row[1])))
        path = out_dir / f"{basename}.csv"
        _write_rows(path, ("b_total_mhz", "scheme", metric, f"{metric}_stderr"),
                    [(_fmt(b), s, _fmt(y), _fmt(e)) for b, s, y, e in rows])
        written.append(path)

    if render:
        written.extend(_render_figures(out_dir, budget, rows1, rows2, sweep, schemes))
    return written


def _render_figures(out_dir: Path, budget: float, rows1, rows2, sweep,
                    schemes) -> list[Path]:
    """PNG next to each figure CSV; imports the plotting stack lazily."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    written: list[Path] = []

    fig, ax = plt.subplots(figsize=(6, 4))
    vehicles = sorted({v for _s, v, _b in rows1})
    for v in vehicles:
        series = [(s, b) for s, vv, b in rows1 if vv == v]
        ax.plot([s for s, _ in series], [b / 1e6 for _, b in series],
                marker=".", label=f"vehicle {v}")
    ax.set_xlabel("slot")
    ax.set_ylabel("bandwidth (MHz)")
    ax.set_title(f"per-slot allocation at {budget:g} MHz")
    ax.legend()
    written.append(_save(fig, out_dir / f"{FIGURE_BASENAMES[0]}.png"))

    fig, ax = plt.subplots(figsize=(6, 4))
    share_schemes = list(dict.fromkeys(s for s, _v, _b in rows2))
    vehicles = sorted({v for _s, v, _b in rows2})
    width = 0.8 / max(len(share_schemes), 1)
    for k, scheme in enumerate(share_schemes):
        xs = [v + (k - (len(share_schemes) - 1) / 2) * width for v in vehicles]
        ys = [b / 1e6 for s, _v, b in rows2 if s == scheme]
        ax.bar(xs, ys, width=width, label=scheme)
    ax.set_xticks(vehicles)
    ax.set_xlabel("vehicle")
    ax.set_ylabel("mean bandwidth (MHz)")
    ax.set_title(f"bandwidth shares at {budget:g} MHz")
    ax.legend()
    written.append(_save(fig, out_dir / f"{FIGURE_BASENAMES[1]}.png"))

    for basename, metric, label in (
            (FIGURE_BASENAMES[2], "overall_accuracy", "overall accuracy"),
            (FIGURE_BASENAMES[3], "correct_density", "detected objects per frame")):
        fig, ax = plt.subplots(figsize=(6, 4))
        for scheme in schemes:
            series = sorted(
                (float(r["b_total_mhz"]), float(r[metric]),
                 float(r[f"{metric}_stderr"]))
                for r in sweep if r["scheme"] == scheme)
            ax.errorbar([b for b, _, _ in series], [y for _, y, _ in series],
                        yerr=[e for _, _, e in series], marker="o",
                        capsize=3, label=scheme)
        ax.set_xlabel("total bandwidth (MHz)")
        ax.set_ylabel(label)
        ax.legend()
        written.append(_save(fig, out_dir / f"{basename}.png"))
    return written


def _save(fig, path: Path) -> Path:
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    import matplotlib.pyplot as plt
    plt.close(fig)
    return path
