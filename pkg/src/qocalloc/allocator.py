"""Bandwidth allocation over a shared uplink budget.

The operator splits a total bandwidth budget across M transmitting vehicles to
maximise a concave utility of the per-vehicle Shannon rates, subject to a
per-vehicle minimum share and a minimum detection-accuracy floor. Three
utilities are supported:

* ``qoc``: density-weighted detection accuracy (the quality-of-content
  objective from :mod:`qocalloc.content`),
* ``da``: plain mean detection accuracy, content-blind (all categories with
  unit density and weight),
* ``qoe``: mean logarithmic opinion score of the raw rates, content-free.

The solver is projected gradient ascent with Armijo backtracking. Because the
objective is separable across vehicles, the ascent direction is scaled by the
inverse diagonal Hessian (analytic) and projected in the induced weighted
metric, which keeps iteration counts flat as channel diversity grows.
Convergence is declared when the Euclidean projected-gradient norm falls to
1e-8 of its initial value (with an absolute floor that recognises
already-converged warm starts). A brute-force simplex-grid search provides an
independent route to the optimum for small M.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channel import ChannelState, VehicleLink, snr_density_hz, transmission_rate
from .content import (
    QP_MAX,
    RATE_UNIT_BPS,
    ContentScenario,
    accuracy_from_qp,
    max_qp_for_accuracy,
    qoc_objective,
    qp_from_rate,
    rate_from_qp,
)
from .errors import ConvergenceError, DomainError, InfeasibleProblemError

_LN2 = math.log(2.0)

SCHEMES = ("qoc", "da", "qoe")

# Opinion-score stand-in for the rate-only baseline: 1 + kappa * ln(1 + R/R_ref)
# clamped to [1, 5], with kappa chosen so the score saturates at R_max.
MOS_R_REF_KBPS = 100.0
MOS_R_MAX_KBPS = 1.0e5
MOS_MIN = 1.0
MOS_MAX = 5.0
MOS_KAPPA = (MOS_MAX - MOS_MIN) / math.log1p(MOS_R_MAX_KBPS / MOS_R_REF_KBPS)

_MAX_ITER = 10_000
_REL_TOL = 1e-8
# warm starts can begin at the optimum, making the relative test unreachable,
# and Armijo cannot certify objective gains below eps*|f|, which floors the
# projected gradient near 1e-8..1e-7 of the gradient scale; accept that as
# converged (still 10x tighter than the 1e-6 stationarity certificates demand)
_ABS_TOL = 1e-7
_ARMIJO = 1e-4


class UnsupportedSizeError(DomainError):
    """The exhaustive grid oracle only handles a handful of vehicles."""


@dataclass(frozen=True)
class AllocationProblem:
    """One slot's allocation instance: content, links, channel, constraints."""

    scenario: ContentScenario
    links: tuple[VehicleLink, ...]
    states: tuple[ChannelState, ...]
    b_total_hz: float
    b_min_hz: float = 0.0
    p_min: float = 0.0
    strict_min_accuracy: bool = False

    def __post_init__(self):
        object.__setattr__(self, "links", tuple(self.links))
        object.__setattr__(self, "states", tuple(self.states))
        m = self.scenario.num_videos
        if len(self.links) != m or len(self.states) != m:
            raise DomainError(
                f"{len(self.links)} links / {len(self.states)} states for {m} videos")
        if not (math.isfinite(self.b_total_hz) and self.b_total_hz > 0):
            raise DomainError(f"b_total_hz must be positive, got {self.b_total_hz}")
        if not (0 <= self.b_min_hz <= self.b_total_hz / m):
            raise DomainError(
                f"b_min_hz must lie in [0, b_total/M], got {self.b_min_hz}")
        min_gamma = min(c.gamma for c in self.scenario.categories)
        if not (0 <= self.p_min < min_gamma):
            raise DomainError(
                f"p_min must lie in [0, {min_gamma}) for these categories, got {self.p_min}")

    @property
    def num_vehicles(self) -> int:
        return self.scenario.num_videos


@dataclass(frozen=True)
class SolveDiagnostics:
    iterations: int
    converged: bool
    kkt_residual: float


@dataclass(frozen=True)
class AllocationResult:
    """Solver output: bandwidths in Hz plus the derived per-vehicle quantities.

    rates are in the content-model rate unit (kbps); accuracies has one row
    per vehicle and one column per category; objective is the solved scheme's
    utility recomputed from the bandwidths.
    """

    bandwidths: np.ndarray
    rates: np.ndarray
    qps: np.ndarray
    accuracies: np.ndarray
    objective: float
    diagnostics: SolveDiagnostics


@dataclass(frozen=True)
class KktReport:
    """Scaled first-order optimality residuals for an allocation."""

    stationarity: float
    primal_violation: float
    complementarity: float
    multiplier: float

    @property
    def residual(self) -> float:
        return max(self.stationarity, self.primal_violation, self.complementarity)


@dataclass(frozen=True)
class ConcavityReport:
    chords: int
    violations: int
    worst_violation: float
    tolerance: float


# ---------------------------------------------------------------------------
# constraint translation
# ---------------------------------------------------------------------------

def _accuracy_rate_targets(problem: AllocationProblem) -> list[float]:
    """Per-vehicle minimum rate (model units) implied by the accuracy floor.

    Zero when the floor is slack at zero rate. The floor applies per (m, n)
    pair with positive weighted density, or to every pair in strict mode.
    """
    scenario = problem.scenario
    if problem.p_min <= 0:
        return [0.0] * scenario.num_videos
    qp_caps = [
        max_qp_for_accuracy(category, problem.p_min)
        for category in scenario.categories
    ]
    targets = []
    for video in scenario.videos:
        if problem.strict_min_accuracy:
            active = range(scenario.num_categories)
        else:
            active = [
                n for n in range(scenario.num_categories)
                if scenario.weights[n] * video.densities[n] > 0
            ]
        if not active:
            targets.append(0.0)
            continue
        qp_cap = min(qp_caps[n] for n in active)
        targets.append(rate_from_qp(video, qp_cap))
    return targets


def _min_bandwidth_for_rate(
    target_rate_units: float, snr_density: float, b_total_hz: float
) -> float | None:
    """Smallest bandwidth whose Shannon rate meets the target, None if unreachable.

    Bisection on an increasing function; returns the feasible (upper) end of
    the final bracket so the target is met, not undershot.
    """
    if target_rate_units <= 0:
        return 0.0
    target_bps = target_rate_units * RATE_UNIT_BPS

    def rate_bps(b: float) -> float:
        if b <= 0.0 or snr_density <= 0.0:
            return 0.0
        return b * math.log1p(snr_density / b) / _LN2

    if rate_bps(b_total_hz) < target_bps:
        return None
    lo, hi = 0.0, b_total_hz
    for _ in range(100):
        mid = 0.5 * (lo + hi)
        if rate_bps(mid) >= target_bps:
            hi = mid
        else:
            lo = mid
        if hi - lo <= 1e-12 * b_total_hz:
            break
    return hi


def _translated_bounds(problem: AllocationProblem) -> tuple[list[float], int | None]:
    """Raw per-vehicle lower bounds and the index of any unreachable vehicle.

    Unreachable accuracy targets are capped at the full budget so callers that
    want a scaled fallback still get finite numbers.
    """
    targets = _accuracy_rate_targets(problem)
    bounds = []
    unreachable = None
    for m, (link, state, target) in enumerate(
            zip(problem.links, problem.states, targets)):
        bound = problem.b_min_hz
        if target > 0:
            need = _min_bandwidth_for_rate(
                target, snr_density_hz(link, state), problem.b_total_hz)
            if need is None:
                bound = problem.b_total_hz
                if unreachable is None:
                    unreachable = m
            else:
                bound = max(bound, need)
        bounds.append(bound)
    return bounds, unreachable


def effective_lower_bounds(problem: AllocationProblem) -> np.ndarray:
    """Per-vehicle bandwidth lower bounds from the share and accuracy floors.

    Raises InfeasibleProblemError, naming the binding vehicle, when a vehicle
    cannot reach its accuracy-implied rate inside the whole budget or when the
    bounds jointly exceed the budget.
    """
    bounds, unreachable = _translated_bounds(problem)
    if unreachable is not None:
        raise InfeasibleProblemError(
            f"vehicle {unreachable} cannot reach its accuracy floor "
            f"within the total budget", vehicle=unreachable)
    total = sum(bounds)
    if total > problem.b_total_hz * (1 + 1e-12):
        binding = max(range(len(bounds)), key=bounds.__getitem__)
        raise InfeasibleProblemError(
            f"lower bounds sum to {total:.6g} Hz, exceeding the budget "
            f"{problem.b_total_hz:.6g} Hz (binding vehicle {binding})",
            vehicle=binding)
    return np.array(bounds, dtype=float)


# ---------------------------------------------------------------------------
# projections
# ---------------------------------------------------------------------------

def _project_scaled(point, lower, b_total, inv_weights=None) -> list[float]:
    """Projection onto {x >= lower, sum x <= b_total}, optionally in a
    diagonally weighted metric (coordinate i moves tau * inv_weights[i]).

    Bisection on the simplex multiplier tau with per-coordinate clamping.
    """
    m = len(lower)
    if inv_weights is None:
        inv_weights = [1.0] * m
    clipped = [point[i] if point[i] > lower[i] else lower[i] for i in range(m)]
    if sum(clipped) <= b_total:
        return clipped
    hi = 0.0
    for i in range(m):
        gap = (point[i] - lower[i]) / inv_weights[i]
        if gap > hi:
            hi = gap
    lo = 0.0
    for _ in range(64):
        tau = 0.5 * (lo + hi)
        total = 0.0
        for i in range(m):
            xi = point[i] - tau * inv_weights[i]
            total += xi if xi > lower[i] else lower[i]
        if total > b_total:
            lo = tau
        else:
            hi = tau
    tau = hi  # the feasible side of the final bracket
    out = []
    for i in range(m):
        xi = point[i] - tau * inv_weights[i]
        out.append(xi if xi > lower[i] else lower[i])
    return out


def project_feasible(point, lower, b_total: float) -> np.ndarray:
    """Euclidean projection onto {x >= lower, sum(x) <= b_total}.

    Requires lower >= 0 elementwise and sum(lower) <= b_total. Feasible points
    project to themselves; the result satisfies the budget to within
    1e-9 * b_total.
    """
    point = np.asarray(point, dtype=float).ravel()
    lower_arr = np.asarray(lower, dtype=float).ravel()
    if point.shape != lower_arr.shape:
        raise DomainError(
            f"point has {point.size} coordinates, lower has {lower_arr.size}")
    if not np.all(np.isfinite(point)) or not np.all(np.isfinite(lower_arr)):
        raise DomainError("point and lower bounds must be finite")
    if np.any(lower_arr < 0):
        raise DomainError("lower bounds must be nonnegative")
    if not math.isfinite(b_total) or b_total <= 0:
        raise DomainError(f"b_total must be positive, got {b_total}")
    if lower_arr.sum() > b_total * (1 + 1e-12):
        raise DomainError("lower bounds exceed the budget; the set is empty")
    return np.array(_project_scaled(list(point), list(lower_arr), float(b_total)))


# ---------------------------------------------------------------------------
# compiled per-vehicle evaluators
# ---------------------------------------------------------------------------

class _Compiled:
    """Flat per-vehicle constants for the solver hot path."""

    __slots__ = ("m", "snr", "rate_a", "rate_b", "terms", "scheme")

    def __init__(self, problem: AllocationProblem, scheme: str):
        if scheme not in SCHEMES:
            raise DomainError(f"scheme must be one of {SCHEMES}, got {scheme!r}")
        scenario = problem.scenario
        self.m = scenario.num_videos
        self.scheme = scheme
        self.snr = [
            snr_density_hz(link, state)
            for link, state in zip(problem.links, problem.states)
        ]
        self.rate_a = [v.a for v in scenario.videos]
        self.rate_b = [v.b for v in scenario.videos]
        if scheme == "qoe":
            self.terms = None
        else:
            self.terms = []
            for video in scenario.videos:
                rows = []
                for n, category in enumerate(scenario.categories):
                    if scheme == "da":
                        w = 1.0
                    else:
                        w = scenario.weights[n] * video.densities[n]
                        if w == 0.0:
                            continue
                    rows.append((w, category.alpha, category.beta, category.gamma))
                self.terms.append(tuple(rows))


def _rate_terms(snr: float, b: float) -> tuple[float, float, float]:
    """Rate in model units plus its first two bandwidth derivatives."""
    if b <= 0.0 or snr <= 0.0:
        return 0.0, 0.0, 0.0
    s = snr / b
    ell = math.log1p(s)
    scale = 1.0 / (_LN2 * RATE_UNIT_BPS)
    u = b * ell * scale
    du = (ell - s / (1.0 + s)) * scale
    d2u = -(s * s) / (b * (1.0 + s) * (1.0 + s)) * scale
    return u, du, d2u


def _vehicle_eval(compiled: _Compiled, i: int, b: float, derivs: bool):
    """(value, dvalue/dB, d2value/dB2) for vehicle i at bandwidth b."""
    u, du, d2u = _rate_terms(compiled.snr[i], b)
    if compiled.scheme == "qoe":
        raw = 1.0 + MOS_KAPPA * math.log1p(u / MOS_R_REF_KBPS)
        if raw >= MOS_MAX:
            return MOS_MAX, 0.0, 0.0
        if not derivs:
            return raw, 0.0, 0.0
        dmos = MOS_KAPPA / (MOS_R_REF_KBPS + u)
        grad = dmos * du
        curv = -dmos / (MOS_R_REF_KBPS + u) * du * du + dmos * d2u
        return raw, grad, curv
    q = compiled.rate_a[i] * math.exp(compiled.rate_b[i] * u)
    clamped_q = q >= QP_MAX
    if clamped_q:
        q = QP_MAX
    value = 0.0
    grad = 0.0
    curv = 0.0
    if q <= 0.0:
        for w, _alpha, _beta, gamma in compiled.terms[i]:
            value += w * min(max(gamma, 0.0), 1.0)
        return value, 0.0, 0.0
    dq = 0.0
    d2q = 0.0
    if derivs and not clamped_q:
        dq = q * compiled.rate_b[i] * du
        d2q = q * compiled.rate_b[i] * (compiled.rate_b[i] * du * du + d2u)
    for w, alpha, beta, gamma in compiled.terms[i]:
        p_raw = alpha * q ** beta + gamma
        if p_raw <= 0.0:
            continue  # clamped at the floor: flat, no derivative
        if p_raw >= 1.0:
            value += w
            continue
        value += w * p_raw
        if derivs and not clamped_q:
            dp = alpha * beta * q ** (beta - 1.0)
            grad += w * dp * dq
            curv += w * (alpha * beta * (beta - 1.0) * q ** (beta - 2.0) * dq * dq
                         + dp * d2q)
    return value, grad, curv


def _objective_value(compiled: _Compiled, x) -> float:
    total = 0.0
    for i in range(compiled.m):
        total += _vehicle_eval(compiled, i, x[i], False)[0]
    return total / compiled.m


def _objective_value_grad_curv(compiled: _Compiled, x):
    total = 0.0
    grad = [0.0] * compiled.m
    curv = [0.0] * compiled.m
    inv_m = 1.0 / compiled.m
    for i in range(compiled.m):
        v, g, h = _vehicle_eval(compiled, i, x[i], True)
        total += v
        grad[i] = g * inv_m
        curv[i] = h * inv_m
    return total * inv_m, grad, curv


def objective_and_gradient(problem: AllocationProblem, bandwidths, scheme: str = "qoc"):
    """A scheme's objective and its analytic bandwidth gradient.

    Bandwidths must be strictly positive. Components of the gradient are
    positive wherever the vehicle carries weighted density and no accuracy
    clamp is active; they are zero on clamped or zero-density terms.
    """
    x = np.asarray(bandwidths, dtype=float).ravel()
    if x.size != problem.num_vehicles:
        raise DomainError(
            f"{x.size} bandwidths for {problem.num_vehicles} vehicles")
    if not np.all(np.isfinite(x)) or np.any(x <= 0):
        raise DomainError("bandwidths must be finite and strictly positive")
    compiled = _Compiled(problem, scheme)
    value, grad, _ = _objective_value_grad_curv(compiled, list(x))
    return value, np.array(grad)


# ---------------------------------------------------------------------------
# projected gradient ascent
# ---------------------------------------------------------------------------

def _pg_residual(x, g, step, lower, b_total) -> float:
    probe = [x[i] + step * g[i] for i in range(len(x))]
    moved = _project_scaled(probe, lower, b_total)
    return math.sqrt(sum((moved[i] - x[i]) ** 2 for i in range(len(x)))) / step


def _maximize(compiled: _Compiled, lower, b_total, x0):
    """Diagonally scaled projected gradient ascent with Armijo backtracking.

    The objective is separable, so its Hessian is exactly the diagonal of
    per-vehicle curvatures; taking the step and the projection in the
    inverse-curvature metric makes each trial step a projected Newton step.
    Saturated vehicles, whose gradient and curvature underflow to zero, get
    the metric capped (condition number at most 1e6) so they stay the cheap
    place to park surplus budget without dominating the projection. Declares
    convergence when the Euclidean projected-gradient residual falls to 1e-8
    of its initial value or becomes negligible against the gradient scale.
    Returns (x, iterations, converged, residual).
    """
    m = compiled.m
    x = _project_scaled(list(x0), lower, b_total)
    f, g, h = _objective_value_grad_curv(compiled, x)
    gnorm = math.sqrt(sum(gi * gi for gi in g))
    if gnorm == 0.0:
        return x, 0, True, 0.0
    probe_step = b_total / gnorm
    r0 = _pg_residual(x, g, probe_step, lower, b_total)
    if r0 == 0.0:
        return x, 0, True, 0.0
    stall = 0
    iteration = 0
    while iteration < _MAX_ITER:
        residual = _pg_residual(x, g, probe_step, lower, b_total)
        gmax = max(abs(gi) for gi in g)
        if residual <= _REL_TOL * r0 or residual <= _ABS_TOL * gmax:
            return x, iteration, True, residual
        iteration += 1
        dmax = 0.0
        for hi in h:
            if -hi > dmax:
                dmax = -hi
        if dmax <= 0.0:
            inv_w = [1.0] * m
        else:
            floor = dmax * 1e-6
            inv_w = [1.0 / (-hi) if -hi > floor else 1.0 / floor for hi in h]
        z = [x[i] + g[i] * inv_w[i] for i in range(m)]
        y = _project_scaled(z, lower, b_total, inv_w)
        d = [y[i] - x[i] for i in range(m)]
        gd = sum(g[i] * d[i] for i in range(m))
        if gd <= 0.0:
            break  # the scaled projected step is null: numerically stationary
        theta = 1.0
        xn = x
        accepted = False
        while theta >= 1e-16:
            xn = [x[i] + theta * d[i] for i in range(m)]
            if _objective_value(compiled, xn) >= f + _ARMIJO * theta * gd:
                accepted = True
                break
            theta *= 0.5
        if not accepted:
            break
        move = max(abs(xn[i] - x[i]) for i in range(m))
        x = xn
        f, g, h = _objective_value_grad_curv(compiled, x)
        if move <= 1e-9 * b_total:
            # pinned at the box's machine resolution; kinked baseline
            # objectives (clamped accuracy terms) end here
            stall += 1
            if stall >= 3:
                break
        else:
            stall = 0
    residual = _pg_residual(x, g, probe_step, lower, b_total)
    gmax = max(abs(gi) for gi in g)
    converged = residual <= _REL_TOL * r0 or residual <= _ABS_TOL * gmax
    return x, iteration, converged, residual


def _scheme_objective_from_rates(problem: AllocationProblem, scheme: str, rates) -> float:
    scenario = problem.scenario
    if scheme == "qoc":
        return qoc_objective(scenario, rates)
    if scheme == "da":
        total = 0.0
        for video, rate in zip(scenario.videos, rates):
            qp = qp_from_rate(video, float(rate))
            for category in scenario.categories:
                total += accuracy_from_qp(category, qp)
        return total / scenario.num_videos
    total = 0.0
    for rate in rates:
        total += min(MOS_MAX, 1.0 + MOS_KAPPA * math.log1p(float(rate) / MOS_R_REF_KBPS))
    return total / scenario.num_videos


def _result_from_bandwidths(
    problem: AllocationProblem,
    scheme: str,
    bandwidths,
    iterations: int,
    converged: bool,
) -> AllocationResult:
    scenario = problem.scenario
    bw = np.asarray(bandwidths, dtype=float)
    rates = np.array([
        transmission_rate(float(b), link, state) / RATE_UNIT_BPS
        for b, link, state in zip(bw, problem.links, problem.states)
    ])
    qps = np.array([
        qp_from_rate(video, float(r)) for video, r in zip(scenario.videos, rates)
    ])
    accuracies = np.array([
        [accuracy_from_qp(category, float(qp)) for category in scenario.categories]
        for qp in qps
    ])
    objective = _scheme_objective_from_rates(problem, scheme, rates)
    kkt = _kkt_residuals(problem, scheme, bw).residual
    return AllocationResult(
        bandwidths=bw,
        rates=rates,
        qps=qps,
        accuracies=accuracies,
        objective=objective,
        diagnostics=SolveDiagnostics(iterations, converged, kkt),
    )


def _solve(problem: AllocationProblem, scheme: str, warm_start=None) -> AllocationResult:
    compiled = _Compiled(problem, scheme)
    lower = [float(b) for b in effective_lower_bounds(problem)]
    slack = problem.b_total_hz - sum(lower)
    if warm_start is not None:
        x0 = [float(v) for v in np.asarray(warm_start, dtype=float).ravel()]
        if len(x0) != compiled.m:
            raise DomainError(
                f"warm start has {len(x0)} coordinates for {compiled.m} vehicles")
    else:
        x0 = [lo + slack / compiled.m for lo in lower]
    x, iterations, converged, _ = _maximize(compiled, lower, problem.b_total_hz, x0)
    result = _result_from_bandwidths(problem, scheme, x, iterations, converged)
    if not converged:
        raise ConvergenceError(
            f"{scheme} solve did not converge within {_MAX_ITER} iterations",
            best=result)
    return result


def solve_qoc(problem: AllocationProblem, warm_start=None) -> AllocationResult:
    """Maximise the density-weighted QoC objective over the feasible budget."""
    return _solve(problem, "qoc", warm_start)


def solve_da(problem: AllocationProblem, warm_start=None) -> AllocationResult:
    """Content-blind baseline: mean detection accuracy, unit densities and weights.

    Identical machinery and identical feasible set as solve_qoc; only the
    objective ignores the scenario's densities and weights.
    """
    return _solve(problem, "da", warm_start)


def solve_qoe(problem: AllocationProblem, warm_start=None) -> AllocationResult:
    """Rate-only baseline: mean logarithmic opinion score of the raw rates."""
    return _solve(problem, "qoe", warm_start)


SOLVERS = {"qoc": solve_qoc, "da": solve_da, "qoe": solve_qoe}


# ---------------------------------------------------------------------------
# grid oracle
# ---------------------------------------------------------------------------

def _batch_objective(problem: AllocationProblem, scheme: str, bw: np.ndarray) -> np.ndarray:
    """Scheme objective for each row of a (P, M) bandwidth matrix."""
    scenario = problem.scenario
    snr = np.array([
        snr_density_hz(link, state)
        for link, state in zip(problem.links, problem.states)
    ])
    with np.errstate(divide="ignore", invalid="ignore"):
        s = snr[None, :] / bw
        rate_units = np.where(
            bw > 0, bw * np.log1p(s) / (_LN2 * RATE_UNIT_BPS), 0.0)
    if scheme == "qoe":
        mos = np.clip(
            1.0 + MOS_KAPPA * np.log1p(rate_units / MOS_R_REF_KBPS), MOS_MIN, MOS_MAX)
        return mos.mean(axis=1)
    a = np.array([v.a for v in scenario.videos])
    b = np.array([v.b for v in scenario.videos])
    qp = np.clip(a[None, :] * np.exp(b[None, :] * rate_units), 0.0, QP_MAX)
    total = np.zeros(bw.shape[0])
    dens = scenario.density_matrix()
    for n, category in enumerate(scenario.categories):
        acc = np.clip(category.alpha * qp ** category.beta + category.gamma, 0.0, 1.0)
        if scheme == "da":
            weights_col = np.ones(scenario.num_videos)
        else:
            weights_col = scenario.weights[n] * dens[:, n]
        total += acc @ weights_col
    return total / scenario.num_videos


def _compositions(total: int, parts: int) -> np.ndarray:
    """All nonnegative integer vectors of length ``parts`` summing to ``total``."""
    if parts == 1:
        return np.array([[total]])
    rows = []
    if parts == 2:
        for k in range(total + 1):
            rows.append((k, total - k))
    elif parts == 3:
        for k1 in range(total + 1):
            for k2 in range(total - k1 + 1):
                rows.append((k1, k2, total - k1 - k2))
    else:
        for k1 in range(total + 1):
            for k2 in range(total - k1 + 1):
                for k3 in range(total - k1 - k2 + 1):
                    rows.append((k1, k2, k3, total - k1 - k2 - k3))
    return np.array(rows, dtype=float)


def solve_grid_oracle(
    problem: AllocationProblem, grid_points: int = 200, scheme: str = "qoc"
) -> AllocationResult:
    """Exhaustive search over a uniform grid on the budget face.

    Every scheme objective is nondecreasing in each bandwidth, so the optimum
    saturates the budget; the grid therefore enumerates all compositions of
    the post-lower-bound slack into ``grid_points`` steps. Deliberately
    independent of the gradient solver: no projections, no line search.
    """
    if scheme not in SCHEMES:
        raise DomainError(f"scheme must be one of {SCHEMES}, got {scheme!r}")
    if problem.num_vehicles > 4:
        raise UnsupportedSizeError(
            f"grid oracle supports at most 4 vehicles, got {problem.num_vehicles}")
    if grid_points < 50:
        raise DomainError(f"grid_points must be at least 50, got {grid_points}")
    lower = effective_lower_bounds(problem)
    slack = problem.b_total_hz - float(lower.sum())
    ks = _compositions(grid_points, problem.num_vehicles)
    bw = lower[None, :] + ks * (slack / grid_points)
    values = _batch_objective(problem, scheme, bw)
    best = int(np.argmax(values))
    return _result_from_bandwidths(
        problem, scheme, bw[best], iterations=len(values), converged=True)


# ---------------------------------------------------------------------------
# verification helpers
# ---------------------------------------------------------------------------

def _sample_feasible(rng: np.random.Generator, lower, b_total: float) -> list[float]:
    m = len(lower)
    slack = b_total - sum(lower)
    shares = rng.dirichlet(np.ones(m))
    fill = rng.uniform(0.0, 1.0)
    return [lower[i] + fill * slack * float(shares[i]) for i in range(m)]


def verify_concavity(
    problem: AllocationProblem,
    chords: int = 1000,
    rng: np.random.Generator | None = None,
    tolerance: float = 1e-9,
    scheme: str = "qoc",
) -> ConcavityReport:
    """Midpoint concavity check along random feasible chords.

    Violations are reported, never raised: the report carries the count and
    the worst midpoint gap (positive means concavity failed by that much).
    """
    if chords < 1:
        raise DomainError(f"chords must be positive, got {chords}")
    if rng is None:
        rng = np.random.default_rng(0)
    compiled = _Compiled(problem, scheme)
    lower = [float(b) for b in effective_lower_bounds(problem)]
    violations = 0
    worst = -math.inf
    for _ in range(chords):
        xa = _sample_feasible(rng, lower, problem.b_total_hz)
        xb = _sample_feasible(rng, lower, problem.b_total_hz)
        mid = [0.5 * (xa[i] + xb[i]) for i in range(len(xa))]
        gap = (0.5 * (_objective_value(compiled, xa) + _objective_value(compiled, xb))
               - _objective_value(compiled, mid))
        if gap > worst:
            worst = gap
        if gap > tolerance:
            violations += 1
    return ConcavityReport(chords, violations, worst, tolerance)


def _kkt_residuals(problem: AllocationProblem, scheme: str, bandwidths) -> KktReport:
    compiled = _Compiled(problem, scheme)
    x = [float(b) for b in np.asarray(bandwidths, dtype=float).ravel()]
    lower, _ = _translated_bounds(problem)
    b_total = problem.b_total_hz
    _, g, _ = _objective_value_grad_curv(compiled, x)
    scale = max(max(abs(gi) for gi in g), 1e-300)
    atol = 1e-9 * b_total
    free = [i for i in range(len(x)) if x[i] > lower[i] + atol]
    if free:
        tau = sum(g[i] for i in free) / len(free)
    else:
        tau = max(g)
    tau = max(tau, 0.0)
    stationarity = 0.0
    for i in range(len(x)):
        if i in free:
            err = abs(g[i] - tau)
        else:
            err = max(0.0, g[i] - tau)
        stationarity = max(stationarity, err)
    primal = max(0.0, sum(x) - b_total) / b_total
    for i in range(len(x)):
        primal += max(0.0, lower[i] - x[i]) / b_total
    complementarity = abs(tau * max(0.0, b_total - sum(x))) / (scale * b_total)
    return KktReport(
        stationarity=stationarity / scale,
        primal_violation=primal,
        complementarity=complementarity,
        multiplier=tau,
    )


def kkt_check(
    problem: AllocationProblem, result: AllocationResult, scheme: str = "qoc"
) -> KktReport:
    """First-order optimality report for an allocation under a scheme objective.

    Stationarity compares gradient components against the budget multiplier
    (mean gradient over coordinates strictly above their lower bound), scaled
    by the gradient's max magnitude; primal violation and complementarity are
    scaled by the budget.
    """
    return _kkt_residuals(problem, scheme, result.bandwidths)
