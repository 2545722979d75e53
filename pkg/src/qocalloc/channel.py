"""Vehicle-to-infrastructure uplink channel model.

Large scale: log-distance path loss 148.1 + 37.6 log10(d_km) dB plus zero-mean
log-normal shadowing (8 dB std by default), fixed for the length of an episode.
Small scale: unit-variance Rayleigh fading evolved per slot by a first-order
autoregression whose coefficient is the Jakes Doppler autocorrelation
J0(2 pi f_d t). Achievable rate is Shannon capacity over the allocated band,
with noise power equal to the noise PSD integrated over that band.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bessel import j0
from .errors import DomainError

SPEED_OF_LIGHT_M_S = 3.0e8
SHADOWING_STD_DB = 8.0
DOPPLER_MODES = ("jakes", "paper-literal")
_LN2 = math.log(2.0)


def _require_finite(name: str, value: float) -> float:
    value = float(value)
    if not math.isfinite(value):
        raise DomainError(f"{name} must be finite, got {value!r}")
    return value


@dataclass(frozen=True)
class VehicleLink:
    """Static link-budget description of one transmitting vehicle."""

    distance_km: float
    speed_kmh: float = 0.0
    tx_power_dbm: float = 23.0
    noise_psd_dbm_hz: float = -174.0

    def __post_init__(self):
        _require_finite("distance_km", self.distance_km)
        _require_finite("speed_kmh", self.speed_kmh)
        _require_finite("tx_power_dbm", self.tx_power_dbm)
        _require_finite("noise_psd_dbm_hz", self.noise_psd_dbm_hz)
        if self.distance_km <= 0:
            raise DomainError(f"distance_km must be positive, got {self.distance_km}")
        if self.speed_kmh < 0:
            raise DomainError(f"speed_kmh must be nonnegative, got {self.speed_kmh}")


@dataclass(frozen=True)
class ChannelState:
    """One vehicle's channel in one slot.

    large_scale_db is path loss plus shadowing (attenuation, positive dB);
    small_scale is the complex Rayleigh coefficient, so the power gain applied
    to the link is 10**(-large_scale_db/10) * |small_scale|**2.
    """

    large_scale_db: float
    small_scale: complex

    def __post_init__(self):
        _require_finite("large_scale_db", self.large_scale_db)
        if not (math.isfinite(self.small_scale.real) and math.isfinite(self.small_scale.imag)):
            raise DomainError("small_scale must be finite")


@dataclass(frozen=True)
class FadingProcess:
    """First-order autoregressive Rayleigh fading state for one vehicle.

    state' = rho * state + e with e ~ CN(0, 1 - rho^2), keeping the stationary
    variance at exactly 1.
    """

    rho: float
    state: complex

    def __post_init__(self):
        _require_finite("rho", self.rho)
        if abs(self.rho) > 1:
            raise DomainError(f"|rho| must not exceed 1, got {self.rho}")
        if not (math.isfinite(self.state.real) and math.isfinite(self.state.imag)):
            raise DomainError("state must be finite")


def path_loss_db(distance_km: float) -> float:
    """Log-distance path loss in dB at a positive distance in km."""
    distance_km = _require_finite("distance_km", distance_km)
    if distance_km <= 0:
        raise DomainError(f"distance_km must be positive, got {distance_km}")
    return 148.1 + 37.6 * math.log10(distance_km)


def sample_shadowing(rng: np.random.Generator, std_db: float = SHADOWING_STD_DB) -> float:
    """One zero-mean log-normal shadowing draw, in dB."""
    _require_finite("std_db", std_db)
    if std_db < 0:
        raise DomainError(f"std_db must be nonnegative, got {std_db}")
    return float(rng.normal(0.0, std_db))


def doppler_autocorrelation(
    speed_kmh: float,
    interval_s: float,
    carrier_hz: float,
    mode: str = "jakes",
) -> float:
    """Slot-to-slot fading autocorrelation coefficient rho.

    mode "jakes" evaluates J0(2 pi f_d t) with Doppler shift
    f_d = v * f_c / c. mode "paper-literal" evaluates J0(2 pi v t / f_c)
    with v in m/s, reproducing a formula sometimes quoted with the carrier in
    the denominator; its argument is ~1e-9 at vehicular speeds, so rho is
    indistinguishable from 1 (a static channel).
    """
    speed_kmh = _require_finite("speed_kmh", speed_kmh)
    interval_s = _require_finite("interval_s", interval_s)
    carrier_hz = _require_finite("carrier_hz", carrier_hz)
    if speed_kmh < 0 or interval_s < 0:
        raise DomainError("speed and interval must be nonnegative")
    if carrier_hz <= 0:
        raise DomainError(f"carrier_hz must be positive, got {carrier_hz}")
    speed_m_s = speed_kmh / 3.6
    if mode == "jakes":
        doppler_hz = speed_m_s * carrier_hz / SPEED_OF_LIGHT_M_S
        argument = 2.0 * math.pi * doppler_hz * interval_s
    elif mode == "paper-literal":
        argument = 2.0 * math.pi * speed_m_s * interval_s / carrier_hz
    else:
        raise DomainError(f"mode must be one of {DOPPLER_MODES}, got {mode!r}")
    return j0(argument)


def initial_fading(rng: np.random.Generator) -> complex:
    """A fresh CN(0, 1) Rayleigh coefficient (unit mean power)."""
    re, im = rng.standard_normal(2)
    return complex(re, im) * math.sqrt(0.5)


def step_fading(process: FadingProcess, rng: np.random.Generator) -> FadingProcess:
    """Advance the autoregression one slot: rho * state + CN(0, 1 - rho^2).

    rho = 1 returns the state unchanged. A draw is consumed regardless of rho
    so that trajectories with different rho stay aligned on the same stream.
    """
    re, im = rng.standard_normal(2)
    innovation_std = math.sqrt(max(0.0, 1.0 - process.rho * process.rho) * 0.5)
    innovation = complex(re, im) * innovation_std
    return FadingProcess(process.rho, process.rho * process.state + innovation)


def make_channel_snapshot(
    links,
    processes,
    shadowing_db=None,
) -> list[ChannelState]:
    """Combine static large-scale terms with current fading states.

    shadowing_db defaults to zeros (pure path loss). Pure function of its
    arguments: same states in, same snapshot out.
    """
    links = list(links)
    processes = list(processes)
    if len(links) != len(processes):
        raise DomainError(
            f"{len(links)} links for {len(processes)} fading processes")
    if shadowing_db is None:
        shadowing_db = [0.0] * len(links)
    else:
        shadowing_db = [float(s) for s in shadowing_db]
        if len(shadowing_db) != len(links):
            raise DomainError(
                f"{len(shadowing_db)} shadowing terms for {len(links)} links")
    return [
        ChannelState(path_loss_db(link.distance_km) + shadow, process.state)
        for link, process, shadow in zip(links, processes, shadowing_db)
    ]


def channel_power_gain(state: ChannelState) -> float:
    """Linear power gain: large-scale attenuation times |small_scale|^2."""
    magnitude_sq = state.small_scale.real ** 2 + state.small_scale.imag ** 2
    return 10.0 ** (-state.large_scale_db / 10.0) * magnitude_sq


def snr_density_hz(link: VehicleLink, state: ChannelState) -> float:
    """Received power over noise PSD, in Hz.

    SNR over a band B is this value divided by B, which makes it the natural
    precomputed constant for rate and rate-derivative evaluations.
    """
    tx_w = 10.0 ** ((link.tx_power_dbm - 30.0) / 10.0)
    noise_w_hz = 10.0 ** ((link.noise_psd_dbm_hz - 30.0) / 10.0)
    return tx_w * channel_power_gain(state) / noise_w_hz


def transmission_rate(bandwidth_hz: float, link: VehicleLink, state: ChannelState) -> float:
    """Shannon rate in bits/s over ``bandwidth_hz``.

    B * log2(1 + S * h / (N0 * B)): noise power grows with the allocated band,
    so the rate is concave increasing in bandwidth with a finite
    limit S * h / (N0 ln 2).
    """
    bandwidth_hz = _require_finite("bandwidth_hz", bandwidth_hz)
    if bandwidth_hz < 0:
        raise DomainError(f"bandwidth_hz must be nonnegative, got {bandwidth_hz}")
    if bandwidth_hz == 0.0:
        return 0.0
    snr = snr_density_hz(link, state) / bandwidth_hz
    return bandwidth_hz * math.log1p(snr) / _LN2
