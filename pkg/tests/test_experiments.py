import numpy as np
import pytest

from cavitysta.config import ScenarioConfig
from cavitysta.dynamics import Trajectory
from cavitysta.errors import ConfigError, InvariantViolation
from cavitysta.experiments import (EquivalenceReport, check_closure, check_equivalence, default_durations,
                                   default_rate_grid, run_entangle, run_scenario, run_transfer, spectrum_table,
                                   sweep_decoherence, sweep_duration)
from cavitysta.misc import IntegratorMethod
from cavitysta.spectral import ANALYTIC_ORDER
from cavitysta.statespace import EF, FE, FF, FFB, SINGLE_EXCITATION

HARDWARE_RATE = 0.004


def transfer(**overrides):
    return ScenarioConfig.for_task("transfer", **overrides)


def entangle(**overrides):
    return ScenarioConfig.for_task("entangle", **overrides)


class TestClosure:

    def test_sizes(self):
        report = check_closure()
        assert report.sizes == {"H0": 5, "H0+Haux": 8, "H0+Haux+jumps": 9}

    def test_labels(self):
        report = check_closure()
        assert sorted(report.labels("H0")) == sorted(SINGLE_EXCITATION)
        assert set(report.labels("H0+Haux")) - set(report.labels("H0")) == {EF, FFB, FE}
        assert set(report.labels("H0+Haux+jumps")) - set(report.labels("H0+Haux")) == {FF}

    def test_frame(self):
        frame = check_closure().to_frame()
        assert list(frame.columns) == ["generators", "size", "indices"]
        assert frame["size"].tolist() == [5, 8, 9]


class TestScenario:

    def test_cdd_run_is_reduced_to_two_states(self):
        result = run_transfer(transfer(mode="cdd", samples=100))
        assert len(result.subspace) == 2
        assert result.full_dim == 64
        assert result.fidelity >= 0.995
        assert result.trajectory.final_population("phi5") == pytest.approx(result.fidelity)

    def test_task_mismatch(self):
        with pytest.raises(ConfigError):
            run_transfer(entangle())
        with pytest.raises(ConfigError):
            run_entangle(transfer())

    def test_frame_columns(self):
        frame = run_scenario(transfer(mode="cdd", samples=20)).trajectory.to_frame()
        assert list(frame.columns) == ["t_g", "P_phi1", "P_phi2", "P_phi3", "P_phi4", "P_phi5", "P_ef", "P_ffb",
                                       "P_fe", "P_ff", "trace", "fidelity"]
        assert len(frame) == 21
        assert (frame["P_ff"] == 0).all()

    @pytest.mark.slow
    def test_full_and_reduced_spaces_agree(self):
        config = entangle(method=IntegratorMethod.RK4, samples=50)
        reduced = run_scenario(config).trajectory
        full = run_scenario(config.with_updates(reduce=False)).trajectory
        assert len(full.subspace) == 64
        for name in reduced.populations:
            np.testing.assert_allclose(reduced.populations[name], full.populations[name], atol=1e-8)

    @pytest.mark.slow
    def test_full_and_reduced_spaces_agree_with_decay(self):
        config = transfer(gamma=HARDWARE_RATE, kappa=HARDWARE_RATE, method=IntegratorMethod.RK4, samples=50)
        reduced = run_scenario(config)
        full = run_scenario(config.with_updates(reduce=False))
        assert len(reduced.subspace) == 9
        assert len(full.subspace) == 64
        assert reduced.trajectory.mixed and full.trajectory.mixed
        for name in reduced.trajectory.populations:
            np.testing.assert_allclose(reduced.trajectory.populations[name], full.trajectory.populations[name],
                                       atol=1e-8)
        assert reduced.fidelity == pytest.approx(full.fidelity, abs=1e-8)


@pytest.mark.slow
class TestTransfer:

    def test_auxiliary_drive(self):
        result = run_transfer(transfer(samples=200))
        assert result.trajectory.final_population("phi5") >= 0.98
        np.testing.assert_allclose(result.trajectory.trace, 1.0, atol=1e-6)
        result.trajectory.check_invariants()

    def test_auxiliary_drive_alone(self):
        assert run_transfer(transfer(mode="aux-only", samples=200)).trajectory.final_population("phi5") >= 0.98

    def test_adiabatic_falls_short(self):
        aux = run_transfer(transfer(samples=200)).trajectory.final_population("phi5")
        adiabatic = run_transfer(transfer(mode="adiabatic", samples=200)).trajectory.final_population("phi5")
        assert adiabatic <= aux - 0.05

    def test_counter_diabatic(self):
        assert run_transfer(transfer(mode="cdd", samples=200)).fidelity >= 0.995

    def test_hardware_decoherence(self):
        result = run_transfer(transfer(gamma=HARDWARE_RATE, kappa=HARDWARE_RATE, samples=200))
        assert result.trajectory.mixed
        assert len(result.subspace) == 9
        assert result.fidelity >= 0.98
        result.trajectory.check_invariants()


@pytest.mark.slow
class TestEntangle:

    def test_auxiliary_drive(self):
        result = run_entangle(entangle(samples=200))
        p1, p5 = result.trajectory.final_population("phi1"), result.trajectory.final_population("phi5")
        assert result.fidelity >= 0.97
        assert abs(p1 - p5) <= 0.03

    @pytest.mark.parametrize("method", [IntegratorMethod.RK4, IntegratorMethod.ADAPTIVE])
    def test_auxiliary_drive_regression(self, method):
        result = run_entangle(entangle(method=method, tol=1e-10, samples=200))
        assert result.fidelity == pytest.approx(0.9955, abs=1e-3)
        assert result.trajectory.final_population("phi1") == pytest.approx(0.487, abs=2e-3)
        assert result.trajectory.final_population("phi5") == pytest.approx(0.509, abs=2e-3)

    def test_adiabatic_leaves_population_behind(self):
        trajectory = run_entangle(entangle(mode="adiabatic", samples=200)).trajectory
        assert trajectory.final_population("phi1") - trajectory.final_population("phi5") > 0.1

    def test_hardware_decoherence(self):
        closed = run_entangle(entangle(samples=200)).fidelity
        noisy = run_entangle(entangle(gamma=HARDWARE_RATE, kappa=HARDWARE_RATE, samples=200)).fidelity
        assert noisy >= 0.98
        assert closed - noisy <= 0.02


class TestSweeps:

    def test_default_grids(self):
        durations = default_durations()
        assert durations[0] == 10.0 and durations[-1] == 200.0 and len(durations) == 39
        rates = default_rate_grid()
        assert len(rates) == 11 and rates[-1] == pytest.approx(0.01)

    def test_custom_grids(self):
        assert default_durations(5.0, 10.0, 5.0).tolist() == [5.0, 10.0]
        assert default_durations(5.0, 12.0, 5.0).tolist() == [5.0, 10.0]
        assert default_rate_grid(0.02, 3).tolist() == pytest.approx([0.0, 0.01, 0.02])

    def test_invalid_grids(self):
        with pytest.raises(ConfigError, match="t-step"):
            default_durations(10.0, 20.0, 0.0)
        with pytest.raises(ConfigError, match="t-max"):
            default_durations(20.0, 10.0, 5.0)
        with pytest.raises(ConfigError, match="grid-points"):
            default_rate_grid(0.01, 0)

    def test_duration_sweep_layout(self):
        sweep = sweep_duration(transfer(samples=20), [5.0, 10.0], modes=["cdd"])
        frame = sweep.to_frame()
        assert list(frame.columns) == ["T_g", "mode", "fidelity"]
        assert frame["T_g"].tolist() == [5.0, 10.0]
        assert sweep.complete
        assert sweep.threshold_duration("cdd") == 5.0
        assert sweep.metadata["modes"] == ["cdd"]

    def test_duration_grid_must_ascend(self):
        with pytest.raises(ConfigError):
            sweep_duration(transfer(), [10.0, 5.0])

    def test_failed_points_are_recorded(self):
        config = transfer(delta1=7.0, delta2=6.0, samples=20)
        sweep = sweep_duration(config, [20.0], modes=["cdd", "aux"])
        fidelities = sweep.to_frame()["fidelity"]
        assert not np.isnan(fidelities[0])
        assert np.isnan(fidelities[1])
        assert sweep.errors == [{"index": 1, "code": "SIGN_MISMATCH", "message": sweep.errors[0]["message"],
                                 "check": None}]
        assert not sweep.complete

    def test_invariant_breach_fails_the_point(self, monkeypatch):
        def broken(self, tolerance=1e-6):
            raise InvariantViolation("trace", "drift 2e-3 exceeds 1e-06")

        monkeypatch.setattr(Trajectory, "check_invariants", broken)
        sweep = sweep_duration(transfer(samples=10), [5.0], modes=["cdd", "adiabatic"])
        assert np.isnan(sweep.to_frame()["fidelity"]).all()
        assert [e["check"] for e in sweep.errors] == ["trace", "trace"]
        assert {e["code"] for e in sweep.errors} == {"INVARIANT_VIOLATION"}

    def test_zero_rates_match_closed_run(self):
        config = transfer(mode="cdd", samples=50)
        sweep = sweep_decoherence(config, [0.0], [0.0])
        assert sweep.to_frame()["fidelity"][0] == pytest.approx(run_scenario(config).fidelity, abs=1e-6)
        assert sweep.fidelity_grid().shape == (1, 1)

    def test_decoherence_layout_is_gamma_major(self):
        sweep = sweep_decoherence(transfer(mode="cdd", samples=20), [0.0, 0.01], [0.0, 0.02])
        frame = sweep.to_frame()
        assert list(frame.columns) == ["gamma_over_g", "kappa_over_g", "fidelity"]
        assert frame["gamma_over_g"].tolist() == [0.0, 0.0, 0.01, 0.01]
        assert frame["kappa_over_g"].tolist() == [0.0, 0.02, 0.0, 0.02]

    @pytest.mark.slow
    def test_parallel_sweep_matches_serial(self):
        config = transfer(mode="cdd", samples=20)
        serial = sweep_duration(config, [5.0, 10.0, 15.0], modes=["cdd", "adiabatic"], jobs=1).to_frame()
        parallel = sweep_duration(config, [5.0, 10.0, 15.0], modes=["cdd", "adiabatic"], jobs=2).to_frame()
        assert serial.equals(parallel)

    @pytest.mark.slow
    def test_counter_diabatic_is_fast(self):
        sweep = sweep_duration(transfer(samples=100), [5.0], modes=["cdd"])
        assert sweep.to_frame()["fidelity"][0] >= 0.98

    @pytest.mark.slow
    def test_adiabatic_needs_much_longer(self):
        sweep = sweep_duration(transfer(samples=50), default_durations(), modes=["adiabatic", "aux"], jobs=4)
        aux = sweep.threshold_duration("aux")
        adiabatic = sweep.threshold_duration("adiabatic")
        assert aux is not None and aux <= 35.0
        assert adiabatic is not None and adiabatic / aux >= 2.5

    @pytest.mark.slow
    @pytest.mark.parametrize("task", ["transfer", "entangle"])
    def test_fidelity_monotone_in_rates(self, task):
        rates = [0.0, 0.005, 0.01]
        grid = sweep_decoherence(ScenarioConfig.for_task(task, samples=50), rates, rates, jobs=4).fidelity_grid()
        assert np.all(np.diff(grid, axis=0) <= 1e-9)
        assert np.all(np.diff(grid, axis=1) <= 1e-9)


class TestEquivalence:

    def test_trend_flags(self):
        report = EquivalenceReport(population={1.0: 0.08, 2.0: 0.04, 4.0: 0.02}, cdd={0.2: 0.05, 0.1: 0.01, 0.05: 0.003})
        assert report.population_trend_ok
        assert report.cdd_trend_ok
        assert report.passed
        frame = report.to_frame()
        assert list(frame.columns) == ["section", "parameter", "gap"]
        assert frame["section"].tolist() == ["population"] * 3 + ["cdd"] * 3

    def test_failures_are_listed(self):
        report = EquivalenceReport(population={1.0: 0.12, 2.0: 0.9, 4.0: 0.7}, cdd={0.2: 0.09, 0.1: 0.06, 0.05: 0.04})
        assert not report.population_trend_ok
        assert report.cdd_trend_ok
        failures = report.failures
        assert len(failures) == 3
        assert failures[0].startswith("population gap 0.12 at detuning scale 1 exceeds 0.1")
        assert failures[1] == "population gap does not shrink with detuning scale"
        assert failures[2].startswith("cdd gap 0.04 at omega0 0.05 exceeds 0.03")
        assert not report.passed

    def test_requires_transfer(self):
        with pytest.raises(ConfigError):
            check_equivalence(entangle())

    @pytest.mark.slow
    def test_effective_dynamics_at_default_detunings(self):
        report = check_equivalence(transfer(samples=200))
        assert report.population[1.0] <= 0.1
        # the effective light shift grows with the detuning scale, so the gap opens up again
        assert report.population[2.0] > report.population[1.0]
        assert not report.population_trend_ok
        assert report.cdd[0.2] <= 0.1
        assert report.cdd[0.05] <= 0.03
        assert report.cdd_trend_ok


def test_spectrum_table():
    frame = spectrum_table(transfer(), samples=20)
    assert list(frame.columns) == ["t_g"] + [f"lambda_{i}" for i in range(1, 6)] + \
        [f"adiabaticity_{n}" for n in range(2, 6)]
    assert len(frame) == 21
    np.testing.assert_allclose(frame["lambda_1"], 0.0, atol=1e-10)
    ordered = frame[[f"lambda_{n}" for n in ANALYTIC_ORDER]].to_numpy()
    assert np.all(np.diff(ordered, axis=1) >= -1e-12)
    mid = frame.iloc[10]
    assert mid["lambda_2"] < -0.1 < 0.1 < mid["lambda_3"]
    assert mid["lambda_4"] == pytest.approx(-np.sqrt(2), abs=0.05)
    assert np.isnan(frame["adiabaticity_2"].iloc[0])
    assert np.isfinite(frame["adiabaticity_2"].iloc[10])
