# encoding=utf-8

import math

import numpy as np

from .integrator import Integrator


class RK4Integrator(Integrator):
    """
    Classical fixed-step fourth-order Runge-Kutta.

    Each output segment is split into the smallest number of equal steps that respects ``max_step``.
    """

    name = "rk4"

    def step_segment(self, rhs, y, t0, t1):
        span = t1 - t0
        if span <= 0:
            return y
        n_steps = max(1, math.ceil(span / self.max_step - 1e-12))
        dt = span / n_steps
        t = t0
        for step in range(n_steps):
            k1 = rhs(t, y)
            k2 = rhs(t + 0.5 * dt, y + 0.5 * dt * k1)
            k3 = rhs(t + 0.5 * dt, y + 0.5 * dt * k2)
            k4 = rhs(t + dt, y + dt * k3)
            y = y + dt * (k1 / 6 + k2 / 3 + k3 / 3 + k4 / 6)
            t = t0 + (step + 1) * dt
        return np.asarray(y, dtype=complex)
