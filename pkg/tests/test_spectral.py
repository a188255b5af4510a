import math

import numpy as np
import pytest

from cavitysta.errors import DegenerateInput, NotHermitian
from cavitysta.hamiltonians import build_h0
from cavitysta.pulses import PulseSet
from cavitysta.spectral import (ANALYTIC_ORDER, adiabaticity_ratio, analytic_eigensystem, build_eigen_track,
                                cdd_gap, cdd_numeric, cdd_track, label_analytic, numeric_eigensystem,
                                single_excitation_basis)
from cavitysta.statespace import PHI1, PHI3, PHI5, SINGLE_EXCITATION, Operator, build_basis


def constant_pulses(omega1, omega2, window=(0.0, 10.0)):
    return PulseSet.custom(lambda t: omega1 + 0.0 * np.asarray(t, dtype=float),
                           lambda t: omega2 + 0.0 * np.asarray(t, dtype=float), window)


def projected_h0(pulses):
    full = build_basis(1, 0)
    return build_h0(full, pulses).project(full.indices_of(SINGLE_EXCITATION))


class TestAnalyticEigensystem:

    def test_dark_state_form(self, transfer_pulses):
        t = 30.0
        o1, o2 = transfer_pulses.omega1(t), transfer_pulses.omega2(t)
        snapshot = analytic_eigensystem(t, transfer_pulses)
        assert snapshot.eigenvalue(1) == 0.0
        basis = snapshot.basis
        expected = np.zeros(5, dtype=complex)
        expected[basis.index(PHI1)] = -1j * o2
        expected[basis.index(PHI3)] = 1j * o1 * o2
        expected[basis.index(PHI5)] = o1
        expected /= np.linalg.norm(expected)
        np.testing.assert_allclose(snapshot.vector(1), expected, atol=1e-14)

    def test_outer_eigenvalues(self):
        snapshot = analytic_eigensystem(0.0, constant_pulses(0.01, 0.01))
        assert snapshot.eigenvalue(4) == pytest.approx(-math.sqrt(2))
        assert snapshot.eigenvalue(5) == pytest.approx(math.sqrt(2))
        assert snapshot.labels == ANALYTIC_ORDER
        assert np.all(np.diff(snapshot.eigenvalues) > 0)

    def test_vectors_are_normalized(self, transfer_pulses):
        snapshot = analytic_eigensystem(25.0, transfer_pulses)
        np.testing.assert_allclose(np.linalg.norm(snapshot.vectors, axis=0), 1.0)

    def test_close_to_numeric_mid_pulse(self, transfer_pulses):
        t = 0.5 * sum(transfer_pulses.window)
        analytic = analytic_eigensystem(t, transfer_pulses)
        h0 = projected_h0(transfer_pulses)
        assert h0.basis == analytic.basis
        numeric = numeric_eigensystem(h0.evaluate(t), t)
        numeric = numeric.relabeled(label_analytic(numeric, analytic))
        for n in range(1, 6):
            assert abs(np.vdot(analytic.vector(n), numeric.vector(n))) >= 0.999

    def test_eigenvalue_approximations(self, transfer_pulses):
        h0 = projected_h0(transfer_pulses)
        for t in np.linspace(15.0, 46.0, 7):
            o1, o2 = transfer_pulses.omega1(t), transfer_pulses.omega2(t)
            half = math.sqrt((o1 ** 2 + o2 ** 2) / 2)
            analytic = analytic_eigensystem(t, transfer_pulses)
            numeric = numeric_eigensystem(h0.evaluate(t), t)
            numeric = numeric.relabeled(label_analytic(numeric, analytic))
            assert numeric.eigenvalue(1) == pytest.approx(0.0, abs=1e-14)
            assert abs(numeric.eigenvalue(2) + half) <= 0.05 * half
            assert abs(numeric.eigenvalue(3) - half) <= 0.05 * half

    def test_degenerate_when_pulses_vanish(self, transfer_pulses):
        with pytest.raises(DegenerateInput):
            analytic_eigensystem(-1.0, transfer_pulses)


class TestNumericEigensystem:

    def test_bare_cavity_spectrum(self):
        h0 = projected_h0(constant_pulses(0.0, 0.0))
        snapshot = numeric_eigensystem(h0.evaluate(1.0), 1.0)
        np.testing.assert_allclose(snapshot.eigenvalues, [-math.sqrt(2), 0, 0, 0, math.sqrt(2)], atol=1e-12)

    def test_identity(self):
        basis = single_excitation_basis()
        snapshot = numeric_eigensystem(Operator.identity(basis))
        np.testing.assert_allclose(snapshot.eigenvalues, 1.0)

    def test_residual_and_orthonormality(self, transfer_pulses):
        op = projected_h0(transfer_pulses).evaluate(27.0)
        snapshot = numeric_eigensystem(op, 27.0)
        v = snapshot.vectors
        np.testing.assert_allclose(v.conj().T @ v, np.eye(5), atol=1e-10)
        residual = op.matrix @ v - v * snapshot.eigenvalues
        assert np.linalg.norm(residual) <= 1e-10 * np.linalg.norm(op.matrix)

    def test_rejects_non_hermitian(self):
        basis = single_excitation_basis()
        with pytest.raises(NotHermitian):
            numeric_eigensystem(Operator.outer(basis, PHI1, PHI5))


class TestAdiabaticity:

    def test_constant_pulses(self):
        pulses = constant_pulses(0.1, 0.05)
        assert adiabaticity_ratio(5.0, pulses, n=2) == pytest.approx(0.0, abs=1e-9)

    def test_transfer_margin_below_one(self, transfer_pulses):
        h0 = projected_h0(transfer_pulses)
        ratios = [adiabaticity_ratio(t, transfer_pulses, n=2, h0=h0) for t in np.linspace(12.0, 49.0, 75)]
        assert np.all(np.isfinite(ratios))
        assert 0.0 < max(ratios) < 1.0

    def test_halving_duration_doubles_ratio(self, make_transfer_pulses):
        slow, fast = make_transfer_pulses(0.2, 50.0), make_transfer_pulses(0.2, 25.0)
        for fraction in (0.3, 0.5, 0.7):
            ratio_slow = adiabaticity_ratio(fraction * slow.duration, slow, n=2)
            ratio_fast = adiabaticity_ratio(fraction * fast.duration, fast, n=2)
            assert ratio_fast == pytest.approx(2.0 * ratio_slow, rel=1e-4)

    def test_label_one_rejected(self, transfer_pulses):
        with pytest.raises(ValueError):
            adiabaticity_ratio(30.0, transfer_pulses, n=1)


class TestEigenTrack:

    def test_phases_are_continuous(self, transfer_pulses):
        track = cdd_track(transfer_pulses, samples=1001)
        vectors = track.vectors()
        overlaps = np.einsum("kij,kij->kj", vectors[:-1].conj(), vectors[1:])
        assert np.all(overlaps.real >= 0)
        assert track.min_overlap >= 0.9

    def test_constant_hamiltonian_has_no_driving(self):
        h0 = projected_h0(constant_pulses(0.1, 0.1))
        track = build_eigen_track(h0, np.linspace(0.0, 10.0, 11))
        h1 = cdd_numeric(track)
        assert np.max(np.abs(h1.matrices)) <= 1e-12

    def test_numeric_driving_is_hermitian(self, transfer_pulses):
        h1 = cdd_numeric(cdd_track(transfer_pulses, samples=1001))
        adjoint = np.conj(np.transpose(h1.matrices, (0, 2, 1)))
        assert np.max(np.abs(h1.matrices - adjoint)) <= 1e-10

    def test_empty_grid(self):
        with pytest.raises(ValueError):
            build_eigen_track(projected_h0(constant_pulses(0.1, 0.1)), [])

    def test_numeric_driving_error_is_second_order(self, transfer_pulses):
        t = 0.5 * sum(transfer_pulses.window)
        h0 = projected_h0(transfer_pulses)
        snapshot = numeric_eigensystem(h0.evaluate(t), t)
        vectors, values = snapshot.vectors, snapshot.eigenvalues

        # exact i d/dt psi_n in parallel-transport gauge from first-order perturbation theory
        rates = PulseSet.custom(transfer_pulses.d_omega1, transfer_pulses.d_omega2, transfer_pulses.window)
        full = build_basis(1, 0)
        dh = build_h0(full, rates, g=0.0).project(full.indices_of(SINGLE_EXCITATION)).evaluate(t).matrix
        coupling = vectors.conj().T @ dh @ vectors
        gaps = values[np.newaxis, :] - values[:, np.newaxis]
        np.fill_diagonal(gaps, 1.0)
        coefficients = coupling / gaps
        np.fill_diagonal(coefficients, 0.0)
        exact = 1j * vectors @ coefficients

        def residual(dt):
            h1 = cdd_numeric(build_eigen_track(h0, t + dt * np.arange(-2, 3))).matrices[2]
            return np.max(np.linalg.norm(exact - h1 @ vectors, axis=0))

        coarse, fine = residual(0.5), residual(0.25)
        assert fine < 1e-3
        assert 3.6 <= coarse / fine <= 4.4

    def test_labels_carry_over_between_grid_points(self, transfer_pulses):
        track = cdd_track(transfer_pulses, samples=501)
        h0 = projected_h0(transfer_pulses)
        t = 0.5 * (track.times[100] + track.times[101])
        assert track.covers(t)
        assert not track.covers(transfer_pulses.window[0])
        snapshot = track.label(numeric_eigensystem(h0.evaluate(t), t))
        assert snapshot.labels == label_analytic(snapshot, analytic_eigensystem(t, transfer_pulses))


def test_cdd_gap_mid_window(transfer_pulses):
    t = 0.5 * sum(transfer_pulses.window)
    assert cdd_gap(transfer_pulses, t) <= 0.1


def test_cdd_gap_shrinks_in_weak_driving(make_transfer_pulses):
    gaps = []
    for omega0 in (0.2, 0.1, 0.05):
        pulses = make_transfer_pulses(omega0)
        gaps.append(cdd_gap(pulses, 0.5 * sum(pulses.window)))
    assert gaps[0] > gaps[1] > gaps[2]
    assert gaps[2] <= 0.03
