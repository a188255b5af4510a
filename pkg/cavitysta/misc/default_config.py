# encoding=utf-8

import math


class DefaultConfig:
    """Operating points and numerical thresholds shared by every module.

    All frequencies are in units of the cavity coupling g and all times in units of 1/g.
        transfer_omega0 (float): sin^4 pulse amplitude for population transfer
        transfer_big_t (float): transfer pulse duration T
        tau_frac (float): delay of the Omega_1 pulse as a fraction of T
        entangle_omega0 (float): Gaussian pulse amplitude for entanglement creation
        entangle_big_t (float): entanglement pulse duration T
        theta, w (float): Gaussian centre offset and width, as fractions of T
        delta1, delta2 (float): auxiliary laser and cavity-mode detunings
        hardware_rate (float): 10 MHz / 2.5 GHz, the quoted kappa/g and Gamma/g
    """

    transfer_omega0 = 0.2
    transfer_big_t = 50.0
    tau_frac = 0.22

    entangle_omega0 = 0.3
    entangle_big_t = 30.0
    theta = 17.0 / 120.0
    w = 23.0 / 120.0

    delta1 = 6.0
    delta2 = 7.0
    g = 1.0

    hardware_rate = 10e6 / 2.5e9
    decoherence_grid_max = 0.01
    decoherence_grid_points = 11

    duration_t_min = 10.0
    duration_t_max = 200.0
    duration_t_step = 5.0

    nmax_a = 1
    nmax_b = 1

    samples = 1000
    tol = 1e-8

    # soft checks
    weak_driving_limit = 0.5
    large_detuning_limit = 5.0

    # numerical thresholds
    reachability_threshold = 1e-12
    pulse_floor = 1e-18
    radicand_clamp = 1e-12
    track_floor = 1e-6
    norm_tolerance = 1e-6
    hermiticity_tolerance = 1e-10
    positivity_floor = -1e-7
    positivity_failure = -1e-5
    trace_check = 1e-3

    # oscillating coefficients are resolved with at least this many steps per period
    steps_per_period = 20
    steps_per_window = 2000

    two_pi = 2.0 * math.pi
