"""Channel model tests.

Deterministic pieces (path loss, Doppler autocorrelation, SNR, Shannon rate)
are pinned against values recomputed with mpmath at 40 digits. Statistical
pieces (shadowing, Rayleigh fading, the autoregressive process) are verified
on 1e5-sample runs: moments, lag-1 autocorrelation, and a Kolmogorov-Smirnov
fit of the envelope against the Rayleigh law.
"""

import math

import mpmath
import numpy as np
import pytest
from scipy import stats

from qocalloc import (
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
from qocalloc.channel import SPEED_OF_LIGHT_M_S, channel_power_gain
from qocalloc.errors import DomainError


class TestPathLoss:
    def test_one_km_is_the_intercept(self):
        assert path_loss_db(1.0) == 148.1

    def test_frozen_values(self):
        # 148.1 + 37.6 log10(d), recomputed with mpmath at 40 digits
        assert path_loss_db(0.5) == pytest.approx(136.78127216303431, rel=1e-15)
        assert path_loss_db(0.1) == pytest.approx(110.5, rel=1e-15)

    def test_matches_high_precision_oracle(self):
        with mpmath.workdps(40):
            for d in (0.1, 0.25, 0.7, 1.1, 2.0):
                expected = float(mpmath.mpf("148.1")
                                 + mpmath.mpf("37.6") * mpmath.log10(mpmath.mpf(d)))
                np.testing.assert_allclose(path_loss_db(d), expected, rtol=1e-15)

    def test_monotone_in_distance(self):
        ds = np.linspace(0.05, 3.0, 200)
        losses = [path_loss_db(float(d)) for d in ds]
        assert all(a < b for a, b in zip(losses, losses[1:]))

    def test_nonpositive_distance_rejected(self):
        with pytest.raises(DomainError):
            path_loss_db(0.0)
        with pytest.raises(DomainError):
            path_loss_db(-1.0)


class TestDopplerAutocorrelation:
    def test_jakes_frozen_value(self):
        # 60 km/h at 2 GHz over 50 ms: argument 2*pi*(60/3.6)*2e9/c*0.05
        rho = doppler_autocorrelation(60.0, 0.05, 2.0e9, mode="jakes")
        assert rho == pytest.approx(-0.12218321813177333, abs=1e-10)

    def test_jakes_argument_construction(self):
        from qocalloc import j0
        speed, te, fc = 43.0, 0.05, 2.0e9
        argument = 2.0 * math.pi * ((speed / 3.6) * fc / SPEED_OF_LIGHT_M_S) * te
        assert math.isclose(
            doppler_autocorrelation(speed, te, fc), j0(argument), rel_tol=1e-12)

    def test_zero_speed_is_static(self):
        assert doppler_autocorrelation(0.0, 0.05, 2.0e9) == 1.0

    def test_carrier_in_denominator_mode_is_static(self):
        # the alternate mode divides by the carrier, giving arguments ~1e-9;
        # rho is then 1 to machine precision at any vehicular speed
        for speed in (1.0, 30.0, 60.0, 120.0):
            rho = doppler_autocorrelation(speed, 0.05, 2.0e9, mode="paper-literal")
            assert abs(rho - 1.0) <= 1e-15
        assert set(DOPPLER_MODES) == {"jakes", "paper-literal"}

    def test_unknown_mode_rejected(self):
        with pytest.raises(DomainError):
            doppler_autocorrelation(30.0, 0.05, 2.0e9, mode="clarke")

    def test_negative_speed_rejected(self):
        with pytest.raises(DomainError):
            doppler_autocorrelation(-5.0, 0.05, 2.0e9)


class TestShadowing:
    def test_moments_at_1e5_samples(self):
        rng = np.random.default_rng(42)
        draws = np.array([sample_shadowing(rng) for _ in range(100_000)])
        assert abs(draws.mean()) <= 0.1
        assert abs(draws.std() - 8.0) <= 0.3

    def test_custom_std(self):
        rng = np.random.default_rng(7)
        draws = np.array([sample_shadowing(rng, std_db=2.0) for _ in range(50_000)])
        assert abs(draws.std() - 2.0) <= 0.1

    def test_negative_std_rejected(self):
        with pytest.raises(DomainError):
            sample_shadowing(np.random.default_rng(0), std_db=-1.0)


class TestRayleighFading:
    def test_initial_draw_statistics(self):
        """CN(0,1): mean power 1 +- 0.02, KS fit of |h| against Rayleigh."""
        rng = np.random.default_rng(42)
        draws = np.array([initial_fading(rng) for _ in range(100_000)])
        power = np.abs(draws) ** 2
        assert abs(power.mean() - 1.0) <= 0.02
        # envelope CDF 1 - exp(-r^2) (Rayleigh with sigma = 1/sqrt(2))
        ks = stats.kstest(np.abs(draws), lambda r: 1.0 - np.exp(-(r ** 2))).statistic
        assert ks <= 0.02
        # real and imaginary parts each carry half the power
        assert abs(draws.real.var() - 0.5) <= 0.01
        assert abs(draws.imag.var() - 0.5) <= 0.01

    def test_stationary_power_along_trajectory(self):
        """The autoregression preserves unit mean power over 1e5 steps."""
        rng = np.random.default_rng(3)
        process = FadingProcess(0.9, initial_fading(rng))
        powers = np.empty(100_000)
        for i in range(powers.size):
            process = step_fading(process, rng)
            powers[i] = abs(process.state) ** 2
        assert abs(powers.mean() - 1.0) <= 0.02

    def test_lag1_autocorrelation_matches_rho(self):
        rho = 0.9
        rng = np.random.default_rng(11)
        process = FadingProcess(rho, initial_fading(rng))
        states = np.empty(100_000, dtype=complex)
        for i in range(states.size):
            states[i] = process.state
            process = step_fading(process, rng)
        empirical = (np.mean(states[1:] * np.conj(states[:-1]))
                     / np.mean(np.abs(states) ** 2))
        assert abs(empirical.real - rho) <= 0.02
        assert abs(empirical.imag) <= 0.02

    def test_rho_one_freezes_the_state(self):
        rng = np.random.default_rng(5)
        start = FadingProcess(1.0, complex(0.3, -0.4))
        stepped = step_fading(start, rng)
        assert stepped.state == start.state

    def test_draws_consumed_regardless_of_rho(self):
        # a frozen (rho=1) process must advance the stream exactly like a
        # fading one, so mixed-speed vehicles stay reproducible
        rng_a = np.random.default_rng(9)
        rng_b = np.random.default_rng(9)
        step_fading(FadingProcess(1.0, 1.0 + 0.0j), rng_a)
        step_fading(FadingProcess(0.5, 1.0 + 0.0j), rng_b)
        assert rng_a.standard_normal() == rng_b.standard_normal()

    def test_rho_magnitude_validated(self):
        with pytest.raises(DomainError):
            FadingProcess(1.5, 1.0 + 0.0j)


class TestLinkBudget:
    def link(self, distance_km=0.1):
        return VehicleLink(distance_km=distance_km, speed_kmh=30.0,
                           tx_power_dbm=23.0, noise_psd_dbm_hz=-174.0)

    def state(self, distance_km=0.1, fading=1.0 + 0.0j):
        return ChannelState(path_loss_db(distance_km), fading)

    def test_snr_density_frozen_value(self):
        # 23 dBm over path loss 110.5 dB and -174 dBm/Hz PSD, |h|^2 = 1
        snr_hz = snr_density_hz(self.link(), self.state())
        assert snr_hz == pytest.approx(44.668359215096312 * 1e7, rel=1e-12)

    def test_rate_frozen_value(self):
        rate = transmission_rate(10e6, self.link(), self.state())
        assert rate == pytest.approx(55131230.520052707, rel=1e-12)

    def test_rate_matches_high_precision_oracle(self):
        link, state = self.link(0.4), self.state(0.4, complex(0.6, -0.3))
        snr_hz = snr_density_hz(link, state)
        for b in (1e5, 2e6, 10e6):
            with mpmath.workdps(40):
                expected = float(mpmath.mpf(b)
                                 * mpmath.log(1 + mpmath.mpf(snr_hz) / mpmath.mpf(b))
                                 / mpmath.log(2))
            np.testing.assert_allclose(
                transmission_rate(b, link, state), expected, rtol=1e-13)

    def test_power_gain_combines_scales(self):
        state = ChannelState(100.0, complex(0.6, 0.8))
        np.testing.assert_allclose(channel_power_gain(state), 1e-10 * 1.0, rtol=1e-12)

    def test_rate_zero_bandwidth(self):
        assert transmission_rate(0.0, self.link(), self.state()) == 0.0

    def test_rate_strictly_increasing_and_concave_in_bandwidth(self):
        """1000 random chords: midpoint above the chord mean within 1e-9."""
        link, state = self.link(0.3), self.state(0.3)
        rng = np.random.default_rng(42)
        grid = np.sort(rng.uniform(1e3, 20e6, size=400))
        rates = [transmission_rate(float(b), link, state) for b in grid]
        assert all(a < b for a, b in zip(rates, rates[1:]))
        scale = rates[-1]
        for _ in range(1000):
            ba, bb = rng.uniform(1e3, 20e6, size=2)
            fa = transmission_rate(float(ba), link, state)
            fb = transmission_rate(float(bb), link, state)
            fm = transmission_rate(float(0.5 * (ba + bb)), link, state)
            assert fm >= 0.5 * (fa + fb) - 1e-9 * scale

    def test_rate_saturates_at_snr_density_over_ln2(self):
        link, state = self.link(), self.state()
        ceiling = snr_density_hz(link, state) / math.log(2.0)
        assert transmission_rate(1e15, link, state) <= ceiling
        assert transmission_rate(1e15, link, state) >= 0.999_999 * ceiling

    def test_fading_scales_snr_linearly(self):
        link = self.link()
        faded = ChannelState(path_loss_db(0.1), complex(0.5, 0.0))
        np.testing.assert_allclose(
            snr_density_hz(link, faded),
            0.25 * snr_density_hz(link, self.state()),
            rtol=1e-12)

    def test_negative_bandwidth_rejected(self):
        with pytest.raises(DomainError):
            transmission_rate(-1.0, self.link(), self.state())


class TestChannelSnapshot:
    def test_combines_path_loss_shadowing_and_fading(self):
        links = [VehicleLink(0.2), VehicleLink(0.8)]
        processes = [FadingProcess(0.9, complex(1.0, 0.0)),
                     FadingProcess(0.9, complex(0.0, -1.0))]
        snapshot = make_channel_snapshot(links, processes, [3.0, -2.0])
        assert snapshot[0].large_scale_db == pytest.approx(path_loss_db(0.2) + 3.0)
        assert snapshot[1].large_scale_db == pytest.approx(path_loss_db(0.8) - 2.0)
        assert snapshot[0].small_scale == complex(1.0, 0.0)
        assert snapshot[1].small_scale == complex(0.0, -1.0)

    def test_shadowing_defaults_to_zero(self):
        links = [VehicleLink(0.5)]
        processes = [FadingProcess(0.5, complex(1.0, 0.0))]
        snapshot = make_channel_snapshot(links, processes)
        assert snapshot[0].large_scale_db == path_loss_db(0.5)

    def test_length_mismatches_rejected(self):
        links = [VehicleLink(0.5)]
        processes = [FadingProcess(0.5, 1.0 + 0.0j)] * 2
        with pytest.raises(DomainError):
            make_channel_snapshot(links, processes)
        with pytest.raises(DomainError):
            make_channel_snapshot(links, processes[:1], [0.0, 0.0])
