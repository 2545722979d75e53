"""Episode and Monte Carlo simulation of the allocation loop.

An episode covers one observation window: large-scale channel terms are drawn
once, small-scale fading evolves slot by slot through the autoregressive
process, and the chosen scheme re-solves the allocation each slot (warm
started from the previous slot). Monte Carlo trials repeat episodes with
per-trial seeds ``base + trial_index``; schemes share a trial's seed, so every
scheme sees bit-identical channel draws and comparisons are paired. Trials are
embarrassingly parallel and are always reduced in trial order, making serial
and parallel runs agree exactly.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import allocator
from .allocator import (
    AllocationProblem,
    AllocationResult,
    SCHEMES,
    SOLVERS,
)
from .channel import (
    ChannelState,
    FadingProcess,
    VehicleLink,
    doppler_autocorrelation,
    initial_fading,
    make_channel_snapshot,
    step_fading,
)
from .content import ContentScenario
from .errors import ConvergenceError, DomainError, InfeasibleProblemError


class UndefinedMetricError(DomainError):
    """A metric's normaliser is zero (e.g. no objects in any video)."""


@dataclass(frozen=True)
class EpisodeConfig:
    """Timing of one observation window plus the scheme and seed to run it."""

    total_duration_s: float = 2.0
    processing_delay_s: float = 0.2
    slot_s: float = 0.05
    scheme: str = "qoc"
    seed: int = 0

    def __post_init__(self):
        if not (self.total_duration_s > self.processing_delay_s > 0):
            raise DomainError(
                "need total_duration_s > processing_delay_s > 0, got "
                f"{self.total_duration_s} and {self.processing_delay_s}")
        if self.slot_s <= 0:
            raise DomainError(f"slot_s must be positive, got {self.slot_s}")
        if self.scheme not in SCHEMES:
            raise DomainError(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")
        if self.num_slots < 1:
            raise DomainError("the window is shorter than one slot")
        ratio = (self.total_duration_s - self.processing_delay_s) / self.slot_s
        if abs(ratio - round(ratio)) > 1e-9:
            warnings.warn(
                f"window of {ratio:.6g} slots is not integral; truncating to "
                f"{self.num_slots}",
                stacklevel=2)

    @property
    def num_slots(self) -> int:
        """floor((total - delay) / slot), the number of allocation rounds."""
        ratio = (self.total_duration_s - self.processing_delay_s) / self.slot_s
        return int(ratio + 1e-9)


@dataclass(frozen=True)
class LinkRanges:
    """Per-trial link geometry: uniform sampling ranges, or fixed values.

    ``distances_km`` / ``speeds_kmh`` pin the respective quantity per vehicle;
    left as None it is drawn uniformly from the matching range each trial.
    """

    count: int = 3
    distance_range_km: tuple[float, float] = (0.1, 1.1)
    speed_range_kmh: tuple[float, float] = (0.0, 60.0)
    tx_power_dbm: float = 23.0
    noise_psd_dbm_hz: float = -174.0
    distances_km: tuple[float, ...] | None = None
    speeds_kmh: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.count < 1:
            raise DomainError(f"count must be positive, got {self.count}")
        lo, hi = self.distance_range_km
        if not (0 < lo <= hi):
            raise DomainError(f"bad distance range {self.distance_range_km}")
        lo, hi = self.speed_range_kmh
        if not (0 <= lo <= hi):
            raise DomainError(f"bad speed range {self.speed_range_kmh}")
        for name, fixed in (("distances_km", self.distances_km),
                            ("speeds_kmh", self.speeds_kmh)):
            if fixed is None:
                continue
            object.__setattr__(self, name, tuple(float(v) for v in fixed))
            if len(getattr(self, name)) != self.count:
                raise DomainError(
                    f"{name} pins {len(getattr(self, name))} values for "
                    f"{self.count} vehicles")


def sample_links(ranges: LinkRanges, rng: np.random.Generator) -> tuple[VehicleLink, ...]:
    """One VehicleLink per vehicle: pinned values, else uniform draws.

    Pinned quantities consume no random draws, so pinning one quantity does
    not shift the stream feeding the other.
    """
    links = []
    for i in range(ranges.count):
        if ranges.distances_km is not None:
            distance = ranges.distances_km[i]
        else:
            distance = float(rng.uniform(*ranges.distance_range_km))
        if ranges.speeds_kmh is not None:
            speed = ranges.speeds_kmh[i]
        else:
            speed = float(rng.uniform(*ranges.speed_range_kmh))
        links.append(VehicleLink(
            distance_km=distance,
            speed_kmh=speed,
            tx_power_dbm=ranges.tx_power_dbm,
            noise_psd_dbm_hz=ranges.noise_psd_dbm_hz,
        ))
    return tuple(links)


@dataclass(frozen=True)
class SlotConstraints:
    """Budget and floors applied in every slot."""

    b_total_hz: float
    b_min_hz: float = 0.0
    p_min: float = 0.0
    strict_min_accuracy: bool = False


@dataclass(frozen=True)
class RadioConfig:
    """Episode-level channel configuration."""

    carrier_hz: float = 2.0e9
    doppler_mode: str = "jakes"
    shadowing_std_db: float = 8.0


@dataclass(frozen=True)
class EpisodeTrace:
    """Everything one episode produced, slot by slot."""

    config: EpisodeConfig
    links: tuple[VehicleLink, ...]
    results: tuple[AllocationResult, ...]
    snapshots: tuple[tuple[ChannelState, ...], ...]
    fallback_slots: tuple[bool, ...]

    @property
    def num_slots(self) -> int:
        return len(self.results)


def _fallback_result(problem: AllocationProblem, scheme: str) -> AllocationResult:
    """Scaled translated lower bounds when the slot is infeasible."""
    bounds, _ = allocator._translated_bounds(problem)
    total = sum(bounds)
    if total > problem.b_total_hz:
        scale = problem.b_total_hz / total
        bounds = [b * scale for b in bounds]
    return allocator._result_from_bandwidths(
        problem, scheme, bounds, iterations=0, converged=False)


def run_episode(
    config: EpisodeConfig,
    scenario: ContentScenario,
    links,
    constraints: SlotConstraints,
    radio: RadioConfig = RadioConfig(),
) -> EpisodeTrace:
    """Simulate one observation window under one scheme.

    ``links`` is either a sequence of VehicleLink or a LinkRanges to sample
    from. All randomness comes from config.seed, and none of it depends on the
    scheme, so episodes with equal seeds see equal channels. Slots whose
    translated constraints are infeasible fall back to budget-scaled lower
    bounds and are flagged.
    """
    rng = np.random.default_rng(config.seed)
    if isinstance(links, LinkRanges):
        links = sample_links(links, rng)
    else:
        links = tuple(links)
    if len(links) != scenario.num_videos:
        raise DomainError(
            f"{len(links)} links for {scenario.num_videos} videos")
    shadowing = [
        float(rng.normal(0.0, radio.shadowing_std_db)) for _ in links
    ]
    processes = [
        FadingProcess(
            doppler_autocorrelation(
                link.speed_kmh, config.slot_s, radio.carrier_hz, radio.doppler_mode),
            initial_fading(rng),
        )
        for link in links
    ]
    solver = SOLVERS[config.scheme]
    results = []
    snapshots = []
    fallbacks = []
    warm = None
    for _slot in range(config.num_slots):
        states = tuple(make_channel_snapshot(links, processes, shadowing))
        problem = AllocationProblem(
            scenario=scenario,
            links=links,
            states=states,
            b_total_hz=constraints.b_total_hz,
            b_min_hz=constraints.b_min_hz,
            p_min=constraints.p_min,
            strict_min_accuracy=constraints.strict_min_accuracy,
        )
        fallback = False
        try:
            result = solver(problem, warm_start=warm)
        except InfeasibleProblemError:
            result = _fallback_result(problem, config.scheme)
            fallback = True
        except ConvergenceError as err:
            result = err.best  # near-converged iterate, flagged via diagnostics
        results.append(result)
        snapshots.append(states)
        fallbacks.append(fallback)
        warm = result.bandwidths
        processes = [step_fading(p, rng) for p in processes]
    return EpisodeTrace(
        config=config,
        links=links,
        results=tuple(results),
        snapshots=tuple(snapshots),
        fallback_slots=tuple(fallbacks),
    )


# ---------------------------------------------------------------------------
# metrics
# ---------------------------------------------------------------------------

def slot_mean_accuracies(trace: EpisodeTrace) -> np.ndarray:
    """Per (vehicle, category) accuracy averaged over the episode's slots."""
    return np.mean([r.accuracies for r in trace.results], axis=0)


def metric_overall_accuracy(trace: EpisodeTrace, scenario: ContentScenario) -> float:
    """Density-weighted mean accuracy over every object in every video.

    sum_mn density_mn * mean_accuracy_mn / sum_mn density_mn. Undefined (and
    raised as such) when no video contains any object.
    """
    dens = scenario.density_matrix()
    total_density = dens.sum()
    if total_density == 0:
        raise UndefinedMetricError("no objects in any video; accuracy undefined")
    return float((dens * slot_mean_accuracies(trace)).sum() / total_density)


def metric_correct_density(trace: EpisodeTrace, scenario: ContentScenario) -> float:
    """Mean correctly-detected objects per frame per video:
    (1/M) sum_mn density_mn * mean_accuracy_mn."""
    dens = scenario.density_matrix()
    return float((dens * slot_mean_accuracies(trace)).sum() / scenario.num_videos)


def mean_bandwidths(trace: EpisodeTrace) -> np.ndarray:
    """Per-vehicle bandwidth averaged over slots, in Hz."""
    return np.mean([r.bandwidths for r in trace.results], axis=0)


@dataclass(frozen=True)
class TrialMetrics:
    overall_accuracy: float
    correct_density: float
    mean_bandwidth_hz: tuple[float, ...]
    fallback_slots: int


def trial_metrics(trace: EpisodeTrace, scenario: ContentScenario) -> TrialMetrics:
    return TrialMetrics(
        overall_accuracy=metric_overall_accuracy(trace, scenario),
        correct_density=metric_correct_density(trace, scenario),
        mean_bandwidth_hz=tuple(float(b) for b in mean_bandwidths(trace)),
        fallback_slots=sum(trace.fallback_slots),
    )


@dataclass(frozen=True)
class AggregateMetrics:
    """Trial means with standard errors; per_trial keeps the paired samples."""

    overall_accuracy: float
    overall_accuracy_stderr: float
    correct_density: float
    correct_density_stderr: float
    mean_bandwidth_hz: tuple[float, ...]
    trials: int
    per_trial: tuple[TrialMetrics, ...] = field(repr=False, default=())


def _aggregate(per_trial: list[TrialMetrics]) -> AggregateMetrics:
    n = len(per_trial)
    acc = np.array([t.overall_accuracy for t in per_trial])
    den = np.array([t.correct_density for t in per_trial])
    bw = np.array([t.mean_bandwidth_hz for t in per_trial])
    def stderr(values: np.ndarray) -> float:
        if n < 2:
            return 0.0
        return float(values.std(ddof=1) / math.sqrt(n))
    return AggregateMetrics(
        overall_accuracy=float(acc.mean()),
        overall_accuracy_stderr=stderr(acc),
        correct_density=float(den.mean()),
        correct_density_stderr=stderr(den),
        mean_bandwidth_hz=tuple(float(b) for b in bw.mean(axis=0)),
        trials=n,
        per_trial=tuple(per_trial),
    )


def _run_trial(args):
    (index, config, scenario, links, constraints, radio, schemes, keep_trace) = args
    out = {}
    for scheme in schemes:
        trial_config = EpisodeConfig(
            total_duration_s=config.total_duration_s,
            processing_delay_s=config.processing_delay_s,
            slot_s=config.slot_s,
            scheme=scheme,
            seed=config.seed + index,
        )
        trace = run_episode(trial_config, scenario, links, constraints, radio)
        metrics = trial_metrics(trace, scenario)
        out[scheme] = (metrics, trace if keep_trace else None)
    return index, out


def run_monte_carlo(
    config: EpisodeConfig,
    scenario: ContentScenario,
    links,
    constraints: SlotConstraints,
    radio: RadioConfig = RadioConfig(),
    schemes=SCHEMES,
    trials: int = 1,
    jobs: int = 1,
    keep_traces: int = 0,
):
    """Run ``trials`` paired episodes per scheme.

    Returns (metrics, traces): metrics maps scheme -> AggregateMetrics,
    traces maps scheme -> tuple of the first ``keep_traces`` EpisodeTraces.
    Trial t uses seed config.seed + t for every scheme. With jobs > 1 the
    trials run in a process pool; the reduction is ordered by trial index, so
    results match the serial run exactly.
    """
    if trials < 1:
        raise DomainError(f"trials must be positive, got {trials}")
    schemes = tuple(schemes)
    for scheme in schemes:
        if scheme not in SCHEMES:
            raise DomainError(f"unknown scheme {scheme!r}")
    tasks = [
        (t, config, scenario, links, constraints, radio, schemes, t < keep_traces)
        for t in range(trials)
    ]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outputs = list(pool.map(_run_trial, tasks, chunksize=8))
    else:
        outputs = [_run_trial(task) for task in tasks]
    outputs.sort(key=lambda pair: pair[0])
    per_scheme_metrics = {scheme: [] for scheme in schemes}
    per_scheme_traces = {scheme: [] for scheme in schemes}
    for _index, result in outputs:
        for scheme in schemes:
            metrics, trace = result[scheme]
            per_scheme_metrics[scheme].append(metrics)
            if trace is not None:
                per_scheme_traces[scheme].append(trace)
    aggregated = {
        scheme: _aggregate(per_scheme_metrics[scheme]) for scheme in schemes
    }
    traces = {scheme: tuple(per_scheme_traces[scheme]) for scheme in schemes}
    return aggregated, traces
