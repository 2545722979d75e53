"""Shared builders for the bundled three-vehicle reference scenario."""

import numpy as np

from qocalloc import (
    AllocationProblem,
    CategoryAccuracyModel,
    ChannelState,
    ContentScenario,
    VehicleLink,
    VideoRateModel,
    effective_lower_bounds,
    path_loss_db,
)
from qocalloc.errors import InfeasibleProblemError

CATEGORY_ROWS = (
    (-2.214e-12, 6.741, 0.6940),
    (-3.820e-13, 7.256, 0.6958),
    (-8.405e-8, 4.158, 0.7250),
)
VIDEO_ROWS = (
    (46.27, -7.086e-5),
    (45.96, -8.648e-5),
    (45.22, -1.052e-4),
)
DENSITY_ROWS = (
    (11.1, 1.6, 1.5),
    (1.0, 8.5, 0.3),
    (0.0, 1.9, 0.0),
)


def reference_scenario(weights=(1.0, 1.0, 1.0)) -> ContentScenario:
    categories = tuple(CategoryAccuracyModel(*row) for row in CATEGORY_ROWS)
    videos = tuple(
        VideoRateModel(a, b, dens) for (a, b), dens in zip(VIDEO_ROWS, DENSITY_ROWS)
    )
    return ContentScenario(categories, videos, tuple(weights))


def equalized_problem(
    b_total_hz: float = 10e6,
    distance_km: float = 0.2,
    b_min_fraction: float = 0.1,
    p_min: float = 0.3,
    scenario: ContentScenario | None = None,
) -> AllocationProblem:
    """All vehicles at the same distance with unit fading and no shadowing."""
    if scenario is None:
        scenario = reference_scenario()
    m = scenario.num_videos
    links = tuple(VehicleLink(distance_km, 30.0, 23.0, -174.0) for _ in range(m))
    states = tuple(ChannelState(path_loss_db(distance_km), 1.0 + 0.0j) for _ in range(m))
    return AllocationProblem(
        scenario, links, states, b_total_hz,
        b_min_hz=b_min_fraction * b_total_hz, p_min=p_min)


def random_problem(
    rng: np.random.Generator,
    b_total_hz: float = 10e6,
    require_feasible: bool = True,
    p_min: float = 0.3,
    b_min_fraction: float = 0.1,
) -> AllocationProblem:
    """One three-vehicle instance drawn from the reference ranges.

    Distances uniform on [0.1, 1.1] km, speeds on [0, 60] km/h, 8 dB shadowing,
    unit-power Rayleigh fading. With require_feasible the draw is repeated
    until the translated lower bounds fit the budget (deterministic given rng).
    """
    scenario = reference_scenario()
    while True:
        links = tuple(
            VehicleLink(float(rng.uniform(0.1, 1.1)), float(rng.uniform(0.0, 60.0)),
                        23.0, -174.0)
            for _ in range(scenario.num_videos)
        )
        states = []
        for link in links:
            shadow = float(rng.normal(0.0, 8.0))
            re, im = rng.standard_normal(2)
            fading = complex(re, im) * np.sqrt(0.5)
            states.append(ChannelState(path_loss_db(link.distance_km) + shadow, fading))
        problem = AllocationProblem(
            scenario, links, tuple(states), b_total_hz,
            b_min_hz=b_min_fraction * b_total_hz, p_min=p_min)
        if not require_feasible:
            return problem
        try:
            effective_lower_bounds(problem)
        except InfeasibleProblemError:
            continue
        return problem
