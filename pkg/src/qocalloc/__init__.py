"""Quality-of-content driven bandwidth allocation for video-streaming vehicles.

The package splits along the problem's natural seams: ``content`` maps
bandwidth to encoding rate, QP and detection accuracy; ``channel`` simulates
the time-varying vehicular link (path loss, shadowing, autoregressive
Rayleigh fading); ``allocator`` solves the per-slot concave allocation
problem and hosts the baselines and verification oracles; ``simulate`` runs
episodes and Monte Carlo trials; ``fitting`` recovers content-model
parameters from measurements; ``scenario`` + ``reporting`` + ``cli`` handle
configuration, result files, and the command line.
"""

from .allocator import (
    AllocationProblem,
    AllocationResult,
    ConcavityReport,
    KktReport,
    SCHEMES,
    SOLVERS,
    effective_lower_bounds,
    kkt_check,
    objective_and_gradient,
    project_feasible,
    solve_da,
    solve_grid_oracle,
    solve_qoc,
    solve_qoe,
    verify_concavity,
)
from .bessel import j0
from .channel import (
    ChannelState,
    DOPPLER_MODES,
    FadingProcess,
    VehicleLink,
    doppler_autocorrelation,
    initial_fading,
    make_channel_snapshot,
    path_loss_db,
    sample_shadowing,
    snr_density_hz,
    step_fading,
    transmission_rate,
)
from .content import (
    CategoryAccuracyModel,
    ContentScenario,
    QP_MAX,
    QP_MIN,
    RATE_UNIT,
    VideoRateModel,
    accuracy_from_qp,
    max_qp_for_accuracy,
    qoc_objective,
    qp_from_rate,
    rate_from_qp,
)
from .errors import (
    ConfigError,
    ConvergenceError,
    DomainError,
    InfeasibleAccuracyError,
    InfeasibleProblemError,
    QocError,
)
from .fitting import FitResult, fit_accuracy_model, fit_rate_model, rmse
from .scenario import (
    ExperimentConfig,
    apply_overrides,
    config_hash,
    config_to_dict,
    default_config_dict,
    load_config_file,
    parse_config,
)
from .simulate import (
    AggregateMetrics,
    EpisodeConfig,
    EpisodeTrace,
    LinkRanges,
    RadioConfig,
    SlotConstraints,
    TrialMetrics,
    metric_correct_density,
    metric_overall_accuracy,
    run_episode,
    run_monte_carlo,
    sample_links,
    trial_metrics,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
