"""Scenario files: loading, validation, overrides, and run identification.

One flat YAML document drives an experiment. Sections: ``categories``,
``weights``, ``videos``, ``channel``, ``problem``, ``timing``, ``runs``.
Every key carries its unit in its name (``b_total_mhz``, ``te_ms``) because
the inputs mix km/h, dBm, MHz and ms, and silent unit mistakes are the chief
risk. ``parse_config`` validates eagerly and names the offending key by its
dotted path; ``config_to_dict`` inverts it losslessly (display units are
stored verbatim, so serialize-parse round trips are exact); ``config_hash``
digests the canonical serialisation to identify a run in the manifest.
"""

from __future__ import annotations

import copy
import hashlib
import json
import math
from dataclasses import dataclass
from importlib import resources

import yaml

from .allocator import SCHEMES
from .channel import DOPPLER_MODES
from .content import CategoryAccuracyModel, ContentScenario, VideoRateModel
from .errors import ConfigError, DomainError
from .simulate import EpisodeConfig, LinkRanges, RadioConfig, SlotConstraints

SECTIONS = ("categories", "weights", "videos", "channel", "problem", "timing", "runs")

MHZ = 1.0e6
GHZ = 1.0e9


# ---------------------------------------------------------------------------
# low-level node checks; every message names the dotted path it refers to
# ---------------------------------------------------------------------------

def _mapping(node, path: str) -> dict:
    if not isinstance(node, dict):
        raise ConfigError(f"{path}: expected a mapping, got {type(node).__name__}")
    return node


def _pop(section: dict, key: str, path: str):
    if key not in section:
        raise ConfigError(f"{path}.{key}: missing")
    return section.pop(key)


def _no_leftovers(section: dict, path: str) -> None:
    if section:
        keys = ", ".join(sorted(str(k) for k in section))
        raise ConfigError(f"{path}: unknown key(s) {keys}")


def _float(value, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{path}: expected a number, got {value!r}")
    out = float(value)
    if not math.isfinite(out):
        raise ConfigError(f"{path}: must be finite, got {value!r}")
    return out


def _int(value, path: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{path}: expected an integer, got {value!r}")
    return value


def _bool(value, path: str) -> bool:
    if not isinstance(value, bool):
        raise ConfigError(f"{path}: expected true/false, got {value!r}")
    return value


def _float_list(value, path: str, length: int | None = None) -> tuple[float, ...]:
    if not isinstance(value, (list, tuple)) or not value:
        raise ConfigError(f"{path}: expected a non-empty list, got {value!r}")
    out = tuple(_float(v, f"{path}[{i}]") for i, v in enumerate(value))
    if length is not None and len(out) != length:
        raise ConfigError(f"{path}: expected {length} entries, got {len(out)}")
    return out


def _fixed_or_random(value, path: str, length: int) -> tuple[float, ...] | None:
    """'random' -> None (sample per trial); a list -> pinned per-vehicle values."""
    if value == "random":
        return None
    return _float_list(value, path, length=length)


# ---------------------------------------------------------------------------
# the validated configuration
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ExperimentConfig:
    """A fully validated experiment, stored in the file's display units.

    Conversions to SI happen in the accessor properties, so writing a config
    back out reproduces the input values bit for bit.
    """

    scenario: ContentScenario
    distances_km: tuple[float, ...] | None
    distance_range_km: tuple[float, float]
    speeds_kmh: tuple[float, ...] | None
    speed_range_kmh: tuple[float, float]
    tx_power_dbm: float
    noise_psd_dbm_hz: float
    carrier_ghz: float
    doppler_mode: str
    shadowing_std_db: float
    b_total_mhz: tuple[float, ...]
    b_min_fraction: float
    p_min: float
    strict_min_accuracy: bool
    duration_s: float
    delay_ms: float
    te_ms: float
    trials: int
    seed: int
    schemes: tuple[str, ...]
    jobs: int
    slot_log_trials: int

    @property
    def num_vehicles(self) -> int:
        return self.scenario.num_videos

    @property
    def carrier_hz(self) -> float:
        return self.carrier_ghz * GHZ

    @property
    def b_total_hz(self) -> tuple[float, ...]:
        return tuple(b * MHZ for b in self.b_total_mhz)

    @property
    def delay_s(self) -> float:
        return self.delay_ms / 1e3

    @property
    def slot_s(self) -> float:
        return self.te_ms / 1e3

    # factories for the sim layer

    def link_ranges(self) -> LinkRanges:
        return LinkRanges(
            count=self.num_vehicles,
            distance_range_km=self.distance_range_km,
            speed_range_kmh=self.speed_range_kmh,
            tx_power_dbm=self.tx_power_dbm,
            noise_psd_dbm_hz=self.noise_psd_dbm_hz,
            distances_km=self.distances_km,
            speeds_kmh=self.speeds_kmh,
        )

    def radio(self) -> RadioConfig:
        return RadioConfig(
            carrier_hz=self.carrier_hz,
            doppler_mode=self.doppler_mode,
            shadowing_std_db=self.shadowing_std_db,
        )

    def constraints(self, b_total_hz: float) -> SlotConstraints:
        return SlotConstraints(
            b_total_hz=b_total_hz,
            b_min_hz=self.b_min_fraction * b_total_hz,
            p_min=self.p_min,
            strict_min_accuracy=self.strict_min_accuracy,
        )

    def episode(self) -> EpisodeConfig:
        return EpisodeConfig(
            total_duration_s=self.duration_s,
            processing_delay_s=self.delay_s,
            slot_s=self.slot_s,
            scheme=self.schemes[0],
            seed=self.seed,
        )


# ---------------------------------------------------------------------------
# section parsers
# ---------------------------------------------------------------------------

def _parse_categories(node) -> tuple[CategoryAccuracyModel, ...]:
    if not isinstance(node, list) or not node:
        raise ConfigError("categories: expected a non-empty list")
    out = []
    for i, item in enumerate(node):
        path = f"categories[{i}]"
        sec = dict(_mapping(item, path))
        label = sec.pop("label", f"category-{i + 1}")
        if not isinstance(label, str):
            raise ConfigError(f"{path}.label: expected a string, got {label!r}")
        alpha = _float(_pop(sec, "alpha", path), f"{path}.alpha")
        beta = _float(_pop(sec, "beta", path), f"{path}.beta")
        gamma = _float(_pop(sec, "gamma", path), f"{path}.gamma")
        _no_leftovers(sec, path)
        try:
            out.append(CategoryAccuracyModel(
                alpha=alpha, beta=beta, gamma=gamma, label=label))
        except DomainError as err:
            raise ConfigError(f"{path}: {err}") from err
    return tuple(out)


def _parse_videos(node, num_categories: int) -> tuple[VideoRateModel, ...]:
    if not isinstance(node, list) or not node:
        raise ConfigError("videos: expected a non-empty list")
    out = []
    for i, item in enumerate(node):
        path = f"videos[{i}]"
        sec = dict(_mapping(item, path))
        label = sec.pop("label", f"video-{i + 1}")
        if not isinstance(label, str):
            raise ConfigError(f"{path}.label: expected a string, got {label!r}")
        a = _float(_pop(sec, "a_qp", path), f"{path}.a_qp")
        b = _float(_pop(sec, "b_per_kbps", path), f"{path}.b_per_kbps")
        densities = _float_list(
            _pop(sec, "objects_per_frame", path),
            f"{path}.objects_per_frame", length=num_categories)
        _no_leftovers(sec, path)
        try:
            out.append(VideoRateModel(a=a, b=b, densities=densities, label=label))
        except DomainError as err:
            raise ConfigError(f"{path}: {err}") from err
    return tuple(out)


def _parse_channel(node, num_vehicles: int) -> dict:
    path = "channel"
    sec = dict(_mapping(node, path))
    out = {
        "distances_km": _fixed_or_random(
            _pop(sec, "distances_km", path), f"{path}.distances_km", num_vehicles),
        "distance_range_km": _float_list(
            _pop(sec, "distance_range_km", path), f"{path}.distance_range_km", length=2),
        "speeds_kmh": _fixed_or_random(
            _pop(sec, "speeds_kmh", path), f"{path}.speeds_kmh", num_vehicles),
        "speed_range_kmh": _float_list(
            _pop(sec, "speed_range_kmh", path), f"{path}.speed_range_kmh", length=2),
        "tx_power_dbm": _float(_pop(sec, "tx_power_dbm", path), f"{path}.tx_power_dbm"),
        "noise_psd_dbm_hz": _float(
            _pop(sec, "noise_psd_dbm_hz", path), f"{path}.noise_psd_dbm_hz"),
        "carrier_ghz": _float(_pop(sec, "carrier_ghz", path), f"{path}.carrier_ghz"),
        "doppler_mode": _pop(sec, "doppler_mode", path),
        "shadowing_std_db": _float(
            _pop(sec, "shadowing_std_db", path), f"{path}.shadowing_std_db"),
    }
    _no_leftovers(sec, path)
    lo, hi = out["distance_range_km"]
    if not 0 < lo <= hi:
        raise ConfigError(f"{path}.distance_range_km: need 0 < low <= high, got [{lo}, {hi}]")
    lo, hi = out["speed_range_kmh"]
    if not 0 <= lo <= hi:
        raise ConfigError(f"{path}.speed_range_kmh: need 0 <= low <= high, got [{lo}, {hi}]")
    if out["distances_km"] is not None and min(out["distances_km"]) <= 0:
        raise ConfigError(f"{path}.distances_km: distances must be positive")
    if out["speeds_kmh"] is not None and min(out["speeds_kmh"]) < 0:
        raise ConfigError(f"{path}.speeds_kmh: speeds must be nonnegative")
    if out["carrier_ghz"] <= 0:
        raise ConfigError(f"{path}.carrier_ghz: must be positive, got {out['carrier_ghz']}")
    if out["doppler_mode"] not in DOPPLER_MODES:
        raise ConfigError(
            f"{path}.doppler_mode: expected one of {', '.join(DOPPLER_MODES)}, "
            f"got {out['doppler_mode']!r}")
    if out["shadowing_std_db"] < 0:
        raise ConfigError(
            f"{path}.shadowing_std_db: must be nonnegative, got {out['shadowing_std_db']}")
    return out


def _parse_problem(node, scenario: ContentScenario) -> dict:
    path = "problem"
    sec = dict(_mapping(node, path))
    b_total = _pop(sec, "b_total_mhz", path)
    if isinstance(b_total, (int, float)) and not isinstance(b_total, bool):
        b_total_mhz = (_float(b_total, f"{path}.b_total_mhz"),)
    else:
        b_total_mhz = _float_list(b_total, f"{path}.b_total_mhz")
    for i, b in enumerate(b_total_mhz):
        if b <= 0:
            raise ConfigError(f"{path}.b_total_mhz[{i}]: must be positive, got {b}")
    out = {
        "b_total_mhz": b_total_mhz,
        "b_min_fraction": _float(
            _pop(sec, "b_min_fraction", path), f"{path}.b_min_fraction"),
        "p_min": _float(_pop(sec, "p_min", path), f"{path}.p_min"),
        "strict_min_accuracy": _bool(
            _pop(sec, "strict_min_accuracy", path), f"{path}.strict_min_accuracy"),
    }
    _no_leftovers(sec, path)
    fraction = out["b_min_fraction"]
    m = scenario.num_videos
    if not 0 <= fraction:
        raise ConfigError(f"{path}.b_min_fraction: must be nonnegative, got {fraction}")
    if fraction * m > 1 + 1e-12:
        raise ConfigError(
            f"{path}.b_min_fraction: {m} vehicles at {fraction} of the budget "
            "exceed the budget")
    p_min = out["p_min"]
    if not 0 <= p_min < 1:
        raise ConfigError(f"{path}.p_min: must lie in [0, 1), got {p_min}")
    worst = min(scenario.categories, key=lambda c: c.gamma)
    if p_min >= worst.gamma:
        raise ConfigError(
            f"{path}.p_min: {p_min} is unattainable for category "
            f"'{worst.label}' whose accuracy ceiling is {worst.gamma}")
    return out


def _parse_timing(node) -> dict:
    path = "timing"
    sec = dict(_mapping(node, path))
    out = {
        "duration_s": _float(_pop(sec, "duration_s", path), f"{path}.duration_s"),
        "delay_ms": _float(_pop(sec, "delay_ms", path), f"{path}.delay_ms"),
        "te_ms": _float(_pop(sec, "te_ms", path), f"{path}.te_ms"),
    }
    _no_leftovers(sec, path)
    if out["delay_ms"] <= 0:
        raise ConfigError(f"{path}.delay_ms: must be positive, got {out['delay_ms']}")
    if out["te_ms"] <= 0:
        raise ConfigError(f"{path}.te_ms: must be positive, got {out['te_ms']}")
    window_s = out["duration_s"] - out["delay_ms"] / 1e3
    if window_s <= 0:
        raise ConfigError(
            f"{path}.duration_s: window must outlast the delay, got "
            f"{out['duration_s']} s against {out['delay_ms']} ms")
    if window_s + 1e-12 < out["te_ms"] / 1e3:
        raise ConfigError(f"{path}.te_ms: window is shorter than one slot")
    return out


def _parse_runs(node, trials_floor: int = 1) -> dict:
    path = "runs"
    sec = dict(_mapping(node, path))
    schemes = _pop(sec, "schemes", path)
    if not isinstance(schemes, list) or not schemes:
        raise ConfigError(f"{path}.schemes: expected a non-empty list")
    seen = []
    for i, scheme in enumerate(schemes):
        if scheme not in SCHEMES:
            raise ConfigError(
                f"{path}.schemes[{i}]: expected one of {', '.join(SCHEMES)}, "
                f"got {scheme!r}")
        if scheme in seen:
            raise ConfigError(f"{path}.schemes[{i}]: duplicate entry {scheme!r}")
        seen.append(scheme)
    out = {
        "trials": _int(_pop(sec, "trials", path), f"{path}.trials"),
        "seed": _int(_pop(sec, "seed", path), f"{path}.seed"),
        "schemes": tuple(seen),
        "jobs": _int(_pop(sec, "jobs", path), f"{path}.jobs"),
        "slot_log_trials": _int(
            _pop(sec, "slot_log_trials", path), f"{path}.slot_log_trials"),
    }
    _no_leftovers(sec, path)
    if out["trials"] < trials_floor:
        raise ConfigError(f"{path}.trials: must be >= {trials_floor}, got {out['trials']}")
    if out["jobs"] < 1:
        raise ConfigError(f"{path}.jobs: must be >= 1, got {out['jobs']}")
    if out["slot_log_trials"] < 0:
        raise ConfigError(
            f"{path}.slot_log_trials: must be nonnegative, got {out['slot_log_trials']}")
    return out


def parse_config(doc) -> ExperimentConfig:
    """Validate a scenario document and build the ExperimentConfig.

    Raises ConfigError naming the dotted path of the first offending key.
    """
    doc = _mapping(doc, "scenario")
    unknown = sorted(set(doc) - set(SECTIONS))
    if unknown:
        raise ConfigError(f"unknown section(s): {', '.join(str(k) for k in unknown)}")
    missing = [s for s in SECTIONS if s not in doc]
    if missing:
        raise ConfigError(f"missing section(s): {', '.join(missing)}")

    categories = _parse_categories(doc["categories"])
    weights = _float_list(doc["weights"], "weights", length=len(categories))
    for i, w in enumerate(weights):
        if w < 0:
            raise ConfigError(f"weights[{i}]: must be nonnegative, got {w}")
    videos = _parse_videos(doc["videos"], len(categories))
    try:
        scenario = ContentScenario(categories=categories, videos=videos, weights=weights)
    except DomainError as err:
        raise ConfigError(str(err)) from err

    channel = _parse_channel(doc["channel"], scenario.num_videos)
    problem = _parse_problem(doc["problem"], scenario)
    timing = _parse_timing(doc["timing"])
    runs = _parse_runs(doc["runs"])
    return ExperimentConfig(scenario=scenario, **channel, **problem, **timing, **runs)


# ---------------------------------------------------------------------------
# loading, serialising, overriding, hashing
# ---------------------------------------------------------------------------

def default_config_dict() -> dict:
    """The bundled default scenario as a plain document."""
    text = resources.files("qocalloc").joinpath("data/default_scenario.yaml") \
        .read_text(encoding="utf-8")
    return yaml.safe_load(text)


def load_config_file(path) -> dict:
    """Read a scenario document; YAML errors keep their line/column marks."""
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = yaml.safe_load(fh)
        except yaml.YAMLError as err:
            raise ConfigError(f"{path}: {err}") from err
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: top level must be a mapping of sections")
    return doc


def config_to_dict(config: ExperimentConfig) -> dict:
    """Serialise back to the document schema; inverse of parse_config."""
    return {
        "categories": [
            {"label": c.label, "alpha": c.alpha, "beta": c.beta, "gamma": c.gamma}
            for c in config.scenario.categories
        ],
        "weights": list(config.scenario.weights),
        "videos": [
            {"label": v.label, "a_qp": v.a, "b_per_kbps": v.b,
             "objects_per_frame": list(v.densities)}
            for v in config.scenario.videos
        ],
        "channel": {
            "distances_km": ("random" if config.distances_km is None
                             else list(config.distances_km)),
            "distance_range_km": list(config.distance_range_km),
            "speeds_kmh": ("random" if config.speeds_kmh is None
                           else list(config.speeds_kmh)),
            "speed_range_kmh": list(config.speed_range_kmh),
            "tx_power_dbm": config.tx_power_dbm,
            "noise_psd_dbm_hz": config.noise_psd_dbm_hz,
            "carrier_ghz": config.carrier_ghz,
            "doppler_mode": config.doppler_mode,
            "shadowing_std_db": config.shadowing_std_db,
        },
        "problem": {
            "b_total_mhz": list(config.b_total_mhz),
            "b_min_fraction": config.b_min_fraction,
            "p_min": config.p_min,
            "strict_min_accuracy": config.strict_min_accuracy,
        },
        "timing": {
            "duration_s": config.duration_s,
            "delay_ms": config.delay_ms,
            "te_ms": config.te_ms,
        },
        "runs": {
            "trials": config.trials,
            "seed": config.seed,
            "schemes": list(config.schemes),
            "jobs": config.jobs,
            "slot_log_trials": config.slot_log_trials,
        },
    }


def apply_overrides(doc: dict, assignments) -> dict:
    """Deep-copy ``doc`` and apply ``KEY=VALUE`` overrides.

    Keys are dotted paths; list items are addressed by index
    (``videos.0.a_qp``). Values go through the YAML scalar parser, so
    ``trials=50``, ``b_total_mhz=[2, 10]`` and ``distances_km=random`` all
    mean what they look like. New keys may be introduced here; parse_config
    rejects them afterwards, which turns typos into named errors.
    """
    out = copy.deepcopy(doc)
    for assignment in assignments:
        key, sep, raw = assignment.partition("=")
        key = key.strip()
        if not sep or not key:
            raise ConfigError(f"override {assignment!r}: expected KEY=VALUE")
        try:
            value = yaml.safe_load(raw)
        except yaml.YAMLError as err:
            raise ConfigError(f"override {key}: bad value {raw!r} ({err})") from err
        _set_path(out, key, value)
    return out


def _set_path(doc: dict, dotted: str, value) -> None:
    parts = dotted.split(".")
    node = doc
    for part in parts[:-1]:
        node = _descend(node, part, dotted)
    last = parts[-1]
    if isinstance(node, list):
        index = _list_index(node, last, dotted)
        node[index] = value
    elif isinstance(node, dict):
        node[last] = value
    else:
        raise ConfigError(f"override {dotted}: {last!r} is not inside a section")


def _descend(node, part: str, dotted: str):
    if isinstance(node, list):
        return node[_list_index(node, part, dotted)]
    if isinstance(node, dict):
        if part not in node:
            raise ConfigError(f"override {dotted}: no section {part!r}")
        return node[part]
    raise ConfigError(f"override {dotted}: cannot descend into {part!r}")


def _list_index(node: list, part: str, dotted: str) -> int:
    try:
        index = int(part)
    except ValueError:
        raise ConfigError(f"override {dotted}: list index expected, got {part!r}") from None
    if not 0 <= index < len(node):
        raise ConfigError(f"override {dotted}: index {index} out of range")
    return index


def config_hash(config: ExperimentConfig) -> str:
    """sha256 of the canonical serialisation; equal hashes mean equal runs."""
    doc = config_to_dict(config)
    blob = json.dumps(doc, sort_keys=True, separators=(",", ":"), allow_nan=False)
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()
