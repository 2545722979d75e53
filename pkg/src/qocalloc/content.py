"""Content-quality models for compressed video analytics.

Per object category, detection accuracy falls with the encoder quantisation
parameter (QP) as ``alpha * qp**beta + gamma``; per video, the QP needed to
hit a given encoded rate falls exponentially as ``a * exp(b * rate)``. Chaining
the two maps a transmission rate to an accuracy, and the density-weighted sum
over videos and categories is the quality-of-content (QoC) objective that the
bandwidth allocator maximises.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, InfeasibleAccuracyError

QP_MIN = 0.0
QP_MAX = 51.0  # valid quantisation-parameter range for the target encoder

# Rate unit of the QP-vs-rate model, expressed in bits/s. Channel rates come
# out of the link budget in bits/s and must be divided by this before being
# fed to qp_from_rate / qoc_objective.
RATE_UNIT_BPS = 1e3
RATE_UNIT = "kbps"


def _require_finite(name: str, value: float) -> float:
    value = float(value)
    if not math.isfinite(value):
        raise DomainError(f"{name} must be finite, got {value!r}")
    return value


def clamp_qp(value: float) -> float:
    """Clamp a quantisation parameter to the valid encoder range [0, 51]."""
    value = _require_finite("qp", value)
    return min(max(value, QP_MIN), QP_MAX)


@dataclass(frozen=True)
class CategoryAccuracyModel:
    """Detection accuracy versus QP for one object category.

    accuracy(qp) = alpha * qp**beta + gamma, decreasing on [0, 51] and equal
    to the ceiling gamma at qp = 0.
    """

    alpha: float  # < 0: scale of the accuracy loss term
    beta: float   # > 1: curvature exponent
    gamma: float  # (0, 1]: accuracy ceiling at QP 0
    label: str = ""

    def __post_init__(self):
        _require_finite("alpha", self.alpha)
        _require_finite("beta", self.beta)
        _require_finite("gamma", self.gamma)
        if self.alpha >= 0:
            raise DomainError(f"alpha must be negative, got {self.alpha}")
        if self.beta <= 1:
            raise DomainError(f"beta must exceed 1, got {self.beta}")
        if not 0 < self.gamma <= 1:
            raise DomainError(f"gamma must lie in (0, 1], got {self.gamma}")


@dataclass(frozen=True)
class VideoRateModel:
    """QP needed to encode one video at a given rate: qp(rate) = a * exp(b * rate).

    ``rate`` is in the model rate unit (kbps). ``densities[n]`` is the mean
    number of category-n objects per frame in this video.
    """

    a: float  # > 0: QP intercept at zero rate
    b: float  # < 0: exponential decay per rate unit
    densities: tuple[float, ...] = field(default_factory=tuple)
    label: str = ""

    def __post_init__(self):
        _require_finite("a", self.a)
        _require_finite("b", self.b)
        if self.a <= 0:
            raise DomainError(f"a must be positive, got {self.a}")
        if self.b >= 0:
            raise DomainError(f"b must be negative, got {self.b}")
        object.__setattr__(self, "densities", tuple(float(d) for d in self.densities))
        for d in self.densities:
            _require_finite("density", d)
            if d < 0:
                raise DomainError(f"densities must be nonnegative, got {d}")


@dataclass(frozen=True)
class ContentScenario:
    """The content side of an allocation instance.

    M videos (one per transmitting vehicle), N object categories, per-category
    importance weights, and the per-video object densities bundled inside each
    VideoRateModel.
    """

    categories: tuple[CategoryAccuracyModel, ...]
    videos: tuple[VideoRateModel, ...]
    weights: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "categories", tuple(self.categories))
        object.__setattr__(self, "videos", tuple(self.videos))
        object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))
        n = len(self.categories)
        if n == 0:
            raise DomainError("scenario needs at least one category")
        if len(self.videos) == 0:
            raise DomainError("scenario needs at least one video")
        if len(self.weights) != n:
            raise DomainError(
                f"{len(self.weights)} weights for {n} categories")
        for w in self.weights:
            _require_finite("weight", w)
            if w < 0:
                raise DomainError(f"weights must be nonnegative, got {w}")
        for video in self.videos:
            if len(video.densities) != n:
                raise DomainError(
                    f"video has {len(video.densities)} densities for {n} categories")

    @property
    def num_videos(self) -> int:
        return len(self.videos)

    @property
    def num_categories(self) -> int:
        return len(self.categories)

    def density_matrix(self) -> np.ndarray:
        """Object densities as an (M, N) array, videos along rows."""
        return np.array([v.densities for v in self.videos], dtype=float)


def accuracy_from_qp(model: CategoryAccuracyModel, qp: float) -> float:
    """Detection accuracy at a quantisation parameter, clamped to [0, 1].

    qp must lie in [0, 51]. qp = 0 returns exactly gamma (0**beta is 0 for
    beta > 0).
    """
    qp = _require_finite("qp", qp)
    if qp < QP_MIN or qp > QP_MAX:
        raise DomainError(f"qp must lie in [{QP_MIN}, {QP_MAX}], got {qp}")
    raw = model.alpha * qp ** model.beta + model.gamma
    return min(max(raw, 0.0), 1.0)


def qp_from_rate(model: VideoRateModel, rate: float) -> float:
    """QP required to encode at ``rate`` (model rate units), clamped to [0, 51].

    Decreasing in rate; rate = 0 returns the intercept a (clamped).
    """
    rate = _require_finite("rate", rate)
    if rate < 0:
        raise DomainError(f"rate must be nonnegative, got {rate}")
    return clamp_qp(model.a * math.exp(model.b * rate))


def rate_from_qp(model: VideoRateModel, qp: float) -> float:
    """Rate (model rate units) at which the encoder reaches ``qp``.

    Exact inverse of qp_from_rate on (0, a]. QP targets above the zero-rate
    intercept a need no bandwidth at all, so they return 0 rather than the
    negative branch of the logarithm.
    """
    qp = _require_finite("qp", qp)
    if qp <= 0:
        raise DomainError(f"qp must be positive to invert the rate map, got {qp}")
    if qp >= model.a:
        return 0.0
    return math.log(qp / model.a) / model.b


def max_qp_for_accuracy(model: CategoryAccuracyModel, p_min: float) -> float:
    """Largest QP keeping this category's accuracy at or above ``p_min``.

    Raises InfeasibleAccuracyError when p_min >= gamma (the ceiling is never
    reached at any positive QP). Clamped to [0, 51]; by construction
    accuracy_from_qp at the returned QP equals max(p_min, accuracy at QP 51).
    """
    p_min = _require_finite("p_min", p_min)
    if p_min >= model.gamma:
        raise InfeasibleAccuracyError(
            f"accuracy target {p_min} is not below the category ceiling {model.gamma}")
    if p_min < 0:
        raise DomainError(f"p_min must be nonnegative, got {p_min}")
    raw = ((p_min - model.gamma) / model.alpha) ** (1.0 / model.beta)
    return clamp_qp(raw)


def qoc_objective(scenario: ContentScenario, rates) -> float:
    """Mean density-weighted detection accuracy over all videos.

    ``rates`` holds one transmission rate per video, in model rate units
    (kbps). Returns (1/M) * sum_m sum_n weight_n * density_mn * accuracy_n(qp_m).
    """
    rates = [float(r) for r in np.asarray(rates, dtype=float).ravel()]
    if len(rates) != scenario.num_videos:
        raise DomainError(
            f"{len(rates)} rates for {scenario.num_videos} videos")
    total = 0.0
    for video, rate in zip(scenario.videos, rates):
        qp = qp_from_rate(video, rate)
        for weight, density, category in zip(
                scenario.weights, video.densities, scenario.categories):
            if weight == 0.0 or density == 0.0:
                continue
            total += weight * density * accuracy_from_qp(category, qp)
    return total / scenario.num_videos
