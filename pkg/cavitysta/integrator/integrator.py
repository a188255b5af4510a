# encoding=utf-8

import logging
from typing import Callable, Optional, Sequence

import numpy as np

logger = logging.getLogger(__name__)

RightHandSide = Callable[[float, np.ndarray], np.ndarray]
SampleHook = Callable[[np.ndarray], np.ndarray]


class Integrator:
    """
    Abstract base class for the ODE integrators behind Schrodinger and Lindblad propagation.

    The state is a flat complex array. ``integrate`` walks the output grid one segment at a time so that
    a per-sample hook (for example density-matrix symmetrization) can act between segments. Subclasses
    must implement `step_segment`.
    """

    name = "abstract"

    def __init__(self, max_step: float):
        """
        :param max_step: ceiling on the internal step size, in units of 1/g.
        """
        if not max_step > 0:
            raise ValueError("max_step must be positive")
        self.max_step = float(max_step)

    def integrate(self, rhs: RightHandSide, y0: np.ndarray, times: Sequence[float],
                  post_sample: Optional[SampleHook] = None) -> np.ndarray:
        """
        Integrate dy/dt = rhs(t, y) and return the state at every output time.

        :param rhs: right-hand side, called with (t, y).
        :param y0: state at times[0].
        :param times: ascending output grid.
        :param post_sample: optional map applied to the state after each segment.
        :return: complex array of shape (len(times), len(y0)).
        """
        times = np.asarray(times, dtype=float)
        y = np.array(y0, dtype=complex)
        samples = np.empty((len(times), y.shape[0]), dtype=complex)
        samples[0] = y
        for k in range(1, len(times)):
            y = self.step_segment(rhs, y, float(times[k - 1]), float(times[k]))
            if post_sample is not None:
                y = post_sample(y)
            samples[k] = y
        return samples

    def step_segment(self, rhs: RightHandSide, y: np.ndarray, t0: float, t1: float) -> np.ndarray:
        """
        Advance the state from t0 to t1.

        :raises NotImplementedError: This method must be implemented by subclasses.
        """
        raise NotImplementedError("Subclasses must implement this method.")
