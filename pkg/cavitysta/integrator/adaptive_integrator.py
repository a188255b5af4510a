# encoding=utf-8

import logging

from scipy.integrate import solve_ivp

from ..errors import StepFailure
from .integrator import Integrator

logger = logging.getLogger(__name__)


class AdaptiveIntegrator(Integrator):
    """
    Embedded Runge-Kutta (Dormand-Prince 8(5,3)) with error control, via scipy's solve_ivp.

    :param max_step: step ceiling, in units of 1/g.
    :param tol: absolute and relative tolerance.
    """

    name = "adaptive"
    method = "DOP853"

    def __init__(self, max_step: float, tol: float = 1e-8):
        super().__init__(max_step)
        if not tol > 0:
            raise ValueError("tol must be positive")
        self.tol = float(tol)

    def step_segment(self, rhs, y, t0, t1):
        if t1 <= t0:
            return y
        solution = solve_ivp(rhs, (t0, t1), y, method=self.method, atol=self.tol, rtol=self.tol,
                             max_step=self.max_step)
        if solution.status < 0:
            logger.error(f"Adaptive step failed on [{t0:.6g}, {t1:.6g}]: {solution.message}")
            raise StepFailure(f"integration failed on [{t0:.6g}, {t1:.6g}]: {solution.message}",
                              details={"t0": t0, "t1": t1})
        return solution.y[:, -1]
