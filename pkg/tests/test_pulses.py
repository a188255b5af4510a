import logging
import math

import numpy as np
import pytest
from pydantic import ValidationError
from scipy.integrate import trapezoid

from cavitysta.errors import SignMismatch
from cavitysta.misc import Task
from cavitysta.pulses import (DetuningParams, EntanglePulseParams, PulseSet, TransferPulseParams, aux_rabi,
                              cdd_coupling, d_omega1_entangle, d_omega1_transfer, d_omega2_entangle,
                              d_omega2_transfer, eta, omega1_entangle, omega1_transfer, omega2_entangle,
                              omega2_transfer, pulse_table)


def integrated_cdd(pulses, points=20001):
    times = np.linspace(pulses.window[0], pulses.window[1], points)
    return trapezoid(cdd_coupling(times, pulses), times)


class TestTransferEnvelopes:

    def test_omega2_peaks_mid_pulse(self, transfer_params):
        assert omega2_transfer(25.0, transfer_params) == pytest.approx(0.2)

    def test_omega1_support(self, transfer_params):
        tau = transfer_params.tau
        assert omega1_transfer(tau, transfer_params) == pytest.approx(0.0, abs=1e-15)
        assert omega1_transfer(tau + 25.0, transfer_params) == pytest.approx(0.2)

    def test_zero_outside_support(self, transfer_params):
        assert omega1_transfer(transfer_params.tau - 1.0, transfer_params) == 0.0
        assert omega2_transfer(50.5, transfer_params) == 0.0
        assert d_omega2_transfer(-1.0, transfer_params) == 0.0

    def test_omega2_leads_and_pulses_overlap(self, transfer_params):
        times = np.linspace(0.0, 61.0, 6101)
        o1 = omega1_transfer(times, transfer_params)
        o2 = omega2_transfer(times, transfer_params)
        assert times[np.argmax(o2)] < times[np.argmax(o1)]
        assert np.any((o1 > 0.01) & (o2 > 0.01))
        assert np.all(o1 >= 0) and np.all(o2 >= 0)

    def test_scalar_in_scalar_out(self, transfer_params):
        assert isinstance(omega1_transfer(30.0, transfer_params), float)
        assert omega1_transfer(np.array([30.0, 31.0]), transfer_params).shape == (2,)

    def test_derivatives_match_central_differences(self, transfer_params):
        step = 1e-4 * transfer_params.big_t
        times = np.linspace(0.5, 60.5, 301)
        for envelope, derivative in ((omega1_transfer, d_omega1_transfer), (omega2_transfer, d_omega2_transfer)):
            numeric = (envelope(times + step, transfer_params) - envelope(times - step, transfer_params)) / (2 * step)
            analytic = derivative(times, transfer_params)
            np.testing.assert_allclose(analytic, numeric, rtol=1e-6, atol=1e-6 * np.max(np.abs(analytic)))

    def test_tau_must_be_below_t(self):
        with pytest.raises(ValidationError):
            TransferPulseParams(omega0=0.2, big_t=50.0, tau=50.0)

    def test_strong_driving_warns(self, caplog):
        with caplog.at_level(logging.WARNING, logger="cavitysta"):
            TransferPulseParams.from_fraction(0.8, 50.0)
        assert "weak-driving" in caplog.text


class TestEntangleEnvelopes:

    def test_omega1_peak(self, entangle_params):
        assert omega1_entangle(entangle_params.late_center, entangle_params) == pytest.approx(0.15)

    def test_omega2_at_early_center(self, entangle_params):
        p = entangle_params
        expected = p.omega0p * (1 + 0.5 * math.exp(-4 * p.theta ** 2 / p.w ** 2))
        assert omega2_entangle(p.early_center, p) == pytest.approx(expected)

    def test_boundary_ratios(self, entangle_params):
        ratio_start = omega1_entangle(0.0, entangle_params) / omega2_entangle(0.0, entangle_params)
        ratio_end = omega1_entangle(30.0, entangle_params) / omega2_entangle(30.0, entangle_params)
        assert ratio_start == pytest.approx(0.0, abs=1e-2)
        assert ratio_end == pytest.approx(1.0, abs=1e-2)

    def test_derivatives_match_central_differences(self, entangle_params):
        step = 1e-4 * entangle_params.big_t
        times = np.linspace(0.0, 30.0, 301)
        for envelope, derivative in ((omega1_entangle, d_omega1_entangle), (omega2_entangle, d_omega2_entangle)):
            numeric = (envelope(times + step, entangle_params) - envelope(times - step, entangle_params)) / (2 * step)
            analytic = derivative(times, entangle_params)
            np.testing.assert_allclose(analytic, numeric, rtol=1e-6, atol=1e-6 * np.max(np.abs(analytic)))

    @pytest.mark.parametrize("theta", [0.0, 0.5])
    def test_theta_range(self, theta):
        with pytest.raises(ValidationError):
            EntanglePulseParams(theta=theta)


class TestDetunings:

    def test_signed_delta(self, detunings):
        assert detunings.delta == -1.0
        assert detunings.scaled(2.0).delta == -2.0

    @pytest.mark.parametrize("delta1, delta2", [(6.0, 6.0), (0.0, 7.0), (6.0, -6.0)])
    def test_invalid_pairs(self, delta1, delta2):
        with pytest.raises(ValidationError):
            DetuningParams(delta1=delta1, delta2=delta2)

    def test_small_detuning_warns(self, caplog):
        with caplog.at_level(logging.WARNING, logger="cavitysta"):
            DetuningParams(delta1=2.0, delta2=3.0)
        assert "large-detuning" in caplog.text


class TestCddCoupling:

    def test_proportional_pulses_give_zero(self):
        pulses = PulseSet.custom(lambda t: 0.3 * np.exp(-np.asarray(t) ** 2),
                                 lambda t: 0.1 * np.exp(-np.asarray(t) ** 2), (-3.0, 3.0))
        times = np.linspace(-2.0, 2.0, 41)
        np.testing.assert_allclose(cdd_coupling(times, pulses), 0.0, atol=1e-8)

    def test_zero_outside_support(self, transfer_pulses):
        assert cdd_coupling(-5.0, transfer_pulses) == 0.0
        assert cdd_coupling(70.0, transfer_pulses) == 0.0

    def test_transfer_area(self, transfer_pulses):
        assert integrated_cdd(transfer_pulses) == pytest.approx(-math.pi / 2, rel=0.02)

    def test_negative_on_transfer_support(self, transfer_pulses):
        times = np.linspace(1.0, 60.0, 600)
        assert np.all(cdd_coupling(times, transfer_pulses) <= 0.0)

    def test_transfer_area_converges_in_weak_driving(self, make_transfer_pulses):
        deficits = [math.pi / 2 - abs(integrated_cdd(make_transfer_pulses(omega0))) for omega0 in (0.2, 0.1, 0.05)]
        assert deficits[0] > deficits[1] > deficits[2] >= 0

    def test_entangle_area_approaches_quarter_turn(self):
        pulses = PulseSet.entangle(EntanglePulseParams(omega0p=0.01))
        assert abs(integrated_cdd(pulses)) == pytest.approx(math.pi / 4, rel=0.01)


class TestAuxRabi:

    def test_zero_where_coupling_vanishes(self, transfer_pulses, detunings):
        assert aux_rabi(-1.0, transfer_pulses, detunings) == 0.0

    def test_real_over_the_transfer_window(self, transfer_pulses, detunings):
        times = np.linspace(0.0, 61.0, 2001)
        values = aux_rabi(times, transfer_pulses, detunings)
        assert np.all(np.isfinite(values)) and np.all(values >= 0)
        assert values.max() > 0

    def test_matching_condition(self, transfer_pulses, detunings):
        times = np.linspace(12.0, 49.0, 200)
        coupling = cdd_coupling(times, transfer_pulses)
        recovered = eta(times, transfer_pulses, detunings) ** 2 / detunings.delta
        np.testing.assert_allclose(recovered, coupling, rtol=1e-10)

    def test_wrong_detuning_order(self, transfer_pulses):
        with pytest.raises(SignMismatch) as info:
            aux_rabi(np.linspace(0.0, 61.0, 101), transfer_pulses, DetuningParams(delta1=7.0, delta2=6.0))
        assert info.value.code == "SIGN_MISMATCH"
        assert info.value.details["delta"] == 1.0


class TestPulseSet:

    def test_transfer_window(self, transfer_pulses):
        assert transfer_pulses.task == Task.TRANSFER
        assert transfer_pulses.window == pytest.approx((0.0, 61.0))
        assert transfer_pulses.duration == pytest.approx(61.0)

    def test_entangle_window(self, entangle_pulses):
        assert entangle_pulses.task == Task.ENTANGLE
        assert entangle_pulses.window == (0.0, 30.0)

    def test_custom_derivatives(self):
        pulses = PulseSet.custom(lambda t: np.sin(t), lambda t: np.cos(t), (0.0, 3.0))
        assert pulses.task is None
        assert pulses.d_omega1(1.0) == pytest.approx(math.cos(1.0), rel=1e-6)
        assert pulses.d_omega2(1.0) == pytest.approx(-math.sin(1.0), rel=1e-6)

    def test_custom_window_must_be_positive(self):
        with pytest.raises(ValueError):
            PulseSet.custom(np.sin, np.cos, (1.0, 1.0))


def test_pulse_table(transfer_pulses, detunings):
    times = np.linspace(0.0, 61.0, 11)
    frame = pulse_table(transfer_pulses, detunings, times)
    assert list(frame.columns) == ["t_g", "omega1", "omega2", "cdd_coupling", "eta", "aux_rabi"]
    assert len(frame) == 11
    np.testing.assert_allclose(frame["omega2"], omega2_transfer(times, transfer_pulses.params))


def test_pulse_table_without_detunings(entangle_pulses):
    frame = pulse_table(entangle_pulses, None, np.linspace(0.0, 30.0, 5))
    assert frame["eta"].isna().all()
    assert frame["aux_rabi"].isna().all()
