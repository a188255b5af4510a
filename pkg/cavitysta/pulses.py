"""
Time-dependent controls: drive envelopes for both tasks, their derivatives, the counter-diabatic
coupling C(t) and the auxiliary Rabi frequency that realizes it through the effective flip-flop.

All functions accept a scalar time or a numpy array of times and return the same shape.
"""

import logging
import math
from dataclasses import dataclass, field
from functools import partial
from typing import Callable, Optional, Tuple

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, model_validator

from .errors import SignMismatch
from .misc import DefaultConfig, Task

logger = logging.getLogger(__name__)

Envelope = Callable[[np.ndarray], np.ndarray]


def _output(values: np.ndarray, t):
    return float(values) if np.ndim(t) == 0 else values


class TransferPulseParams(BaseModel):
    """sin^4 pulse pair; Omega_2 on [0, T] precedes Omega_1 on [tau, T + tau]"""

    model_config = ConfigDict(frozen=True, extra="forbid")

    omega0: float = Field(DefaultConfig.transfer_omega0, gt=0)
    big_t: float = Field(DefaultConfig.transfer_big_t, gt=0)
    tau: float = Field(DefaultConfig.tau_frac * DefaultConfig.transfer_big_t, ge=0)

    @model_validator(mode="after")
    def _check(self):
        if self.tau >= self.big_t:
            raise ValueError(f"tau must be smaller than T (tau={self.tau}, T={self.big_t})")
        if self.omega0 > DefaultConfig.weak_driving_limit:
            logger.warning(f"omega0 = {self.omega0} g is outside the weak-driving regime")
        return self

    @classmethod
    def from_fraction(cls, omega0: float, big_t: float, tau_frac: float = DefaultConfig.tau_frac):
        return cls(omega0=omega0, big_t=big_t, tau=tau_frac * big_t)

    @property
    def window(self) -> Tuple[float, float]:
        return 0.0, self.big_t + self.tau


class EntanglePulseParams(BaseModel):
    """Gaussian pulse pair; Omega_1 is half the shared late Gaussian, Omega_2 adds an early one"""

    model_config = ConfigDict(frozen=True, extra="forbid")

    omega0p: float = Field(DefaultConfig.entangle_omega0, gt=0)
    big_t: float = Field(DefaultConfig.entangle_big_t, gt=0)
    theta: float = Field(DefaultConfig.theta, gt=0, lt=0.5)
    w: float = Field(DefaultConfig.w, gt=0)

    @model_validator(mode="after")
    def _check(self):
        if self.omega0p > DefaultConfig.weak_driving_limit:
            logger.warning(f"omega0' = {self.omega0p} g is outside the weak-driving regime")
        return self

    @property
    def window(self) -> Tuple[float, float]:
        return 0.0, self.big_t

    @property
    def late_center(self) -> float:
        return (self.theta + 0.5) * self.big_t

    @property
    def early_center(self) -> float:
        return (0.5 - self.theta) * self.big_t

    @property
    def width(self) -> float:
        return self.w * self.big_t


class DetuningParams(BaseModel):
    """Auxiliary laser detuning delta1 and cavity-mode-b detuning delta2; delta = delta1 - delta2 is signed"""

    model_config = ConfigDict(frozen=True, extra="forbid")

    delta1: float = DefaultConfig.delta1
    delta2: float = DefaultConfig.delta2

    @model_validator(mode="after")
    def _check(self):
        if self.delta1 == 0 or self.delta2 == 0 or self.delta1 + self.delta2 == 0:
            raise ValueError("delta1, delta2 and delta1 + delta2 must be nonzero")
        if self.delta1 == self.delta2:
            raise ValueError("delta1 == delta2 gives delta = 0, the flip-flop coupling cannot be matched")
        if min(abs(self.delta1), abs(self.delta2)) < DefaultConfig.large_detuning_limit:
            logger.warning(f"Detunings ({self.delta1}, {self.delta2}) g are outside the large-detuning regime")
        return self

    @property
    def delta(self) -> float:
        return self.delta1 - self.delta2

    def scaled(self, factor: float) -> "DetuningParams":
        return DetuningParams(delta1=self.delta1 * factor, delta2=self.delta2 * factor)


# transfer envelopes

def omega1_transfer(t, params: TransferPulseParams):
    t = np.asarray(t, dtype=float)
    phase = math.pi * (t - params.tau) / params.big_t
    inside = (t >= params.tau) & (t <= params.tau + params.big_t)
    return _output(np.where(inside, params.omega0 * np.sin(phase) ** 4, 0.0), t)


def omega2_transfer(t, params: TransferPulseParams):
    t = np.asarray(t, dtype=float)
    phase = math.pi * t / params.big_t
    inside = (t >= 0.0) & (t <= params.big_t)
    return _output(np.where(inside, params.omega0 * np.sin(phase) ** 4, 0.0), t)


def d_omega1_transfer(t, params: TransferPulseParams):
    t = np.asarray(t, dtype=float)
    rate = math.pi / params.big_t
    phase = rate * (t - params.tau)
    inside = (t >= params.tau) & (t <= params.tau + params.big_t)
    value = 4.0 * rate * params.omega0 * np.sin(phase) ** 3 * np.cos(phase)
    return _output(np.where(inside, value, 0.0), t)


def d_omega2_transfer(t, params: TransferPulseParams):
    t = np.asarray(t, dtype=float)
    rate = math.pi / params.big_t
    phase = rate * t
    inside = (t >= 0.0) & (t <= params.big_t)
    value = 4.0 * rate * params.omega0 * np.sin(phase) ** 3 * np.cos(phase)
    return _output(np.where(inside, value, 0.0), t)


# entanglement envelopes

def _gaussian(t: np.ndarray, center: float, width: float) -> np.ndarray:
    return np.exp(-((t - center) ** 2) / width ** 2)


def _d_gaussian(t: np.ndarray, center: float, width: float) -> np.ndarray:
    return -2.0 * (t - center) / width ** 2 * _gaussian(t, center, width)


def omega1_entangle(t, params: EntanglePulseParams):
    t = np.asarray(t, dtype=float)
    return _output(0.5 * params.omega0p * _gaussian(t, params.late_center, params.width), t)


def omega2_entangle(t, params: EntanglePulseParams):
    t = np.asarray(t, dtype=float)
    value = params.omega0p * (_gaussian(t, params.early_center, params.width)
                              + 0.5 * _gaussian(t, params.late_center, params.width))
    return _output(value, t)


def d_omega1_entangle(t, params: EntanglePulseParams):
    t = np.asarray(t, dtype=float)
    return _output(0.5 * params.omega0p * _d_gaussian(t, params.late_center, params.width), t)


def d_omega2_entangle(t, params: EntanglePulseParams):
    t = np.asarray(t, dtype=float)
    value = params.omega0p * (_d_gaussian(t, params.early_center, params.width)
                              + 0.5 * _d_gaussian(t, params.late_center, params.width))
    return _output(value, t)


def _central_difference(envelope: Envelope, step: float, t):
    t = np.asarray(t, dtype=float)
    value = (np.asarray(envelope(t + step)) - np.asarray(envelope(t - step))) / (2.0 * step)
    return _output(value, t)


@dataclass(frozen=True)
class PulseSet:
    """
    The pair of drive envelopes governing one run, with their time derivatives and control window.

    Build it with ``PulseSet.transfer`` or ``PulseSet.entangle``; ``PulseSet.custom`` wraps arbitrary
    callables (derivatives default to central differences) and carries no guarantees beyond that.
    """

    task: Optional[Task]
    window: Tuple[float, float]
    omega1: Envelope
    omega2: Envelope
    d_omega1: Envelope
    d_omega2: Envelope
    params: Optional[BaseModel] = field(default=None, compare=False)

    @classmethod
    def transfer(cls, params: TransferPulseParams) -> "PulseSet":
        return cls(Task.TRANSFER, params.window,
                   partial(omega1_transfer, params=params), partial(omega2_transfer, params=params),
                   partial(d_omega1_transfer, params=params), partial(d_omega2_transfer, params=params),
                   params)

    @classmethod
    def entangle(cls, params: EntanglePulseParams) -> "PulseSet":
        return cls(Task.ENTANGLE, params.window,
                   partial(omega1_entangle, params=params), partial(omega2_entangle, params=params),
                   partial(d_omega1_entangle, params=params), partial(d_omega2_entangle, params=params),
                   params)

    @classmethod
    def custom(cls, omega1: Envelope, omega2: Envelope, window: Tuple[float, float],
               d_omega1: Optional[Envelope] = None, d_omega2: Optional[Envelope] = None) -> "PulseSet":
        t_start, t_end = window
        if not t_end > t_start:
            raise ValueError("window must have positive length")
        step = 1e-6 * (t_end - t_start)
        if d_omega1 is None:
            d_omega1 = partial(_central_difference, omega1, step)
        if d_omega2 is None:
            d_omega2 = partial(_central_difference, omega2, step)
        return cls(None, (float(t_start), float(t_end)), omega1, omega2, d_omega1, d_omega2)

    @property
    def duration(self) -> float:
        return self.window[1] - self.window[0]

    def rabi_norm_squared(self, t):
        return np.asarray(self.omega1(t)) ** 2 + np.asarray(self.omega2(t)) ** 2


def cdd_coupling(t, pulses: PulseSet, g: float = DefaultConfig.g):
    """
    Counter-diabatic coupling C(t) = (O1 dO2 - O2 dO1) / (O1^2 + O2^2 + O1^2 O2^2 / g^2).

    Defined as 0 where O1^2 + O2^2 falls below the pulse floor.
    """
    t_arr = np.asarray(t, dtype=float)
    o1 = np.asarray(pulses.omega1(t_arr))
    o2 = np.asarray(pulses.omega2(t_arr))
    numerator = o1 * np.asarray(pulses.d_omega2(t_arr)) - o2 * np.asarray(pulses.d_omega1(t_arr))
    norm2 = o1 ** 2 + o2 ** 2
    denominator = norm2 + (o1 * o2 / g) ** 2
    active = norm2 >= DefaultConfig.pulse_floor
    value = np.divide(numerator, denominator, out=np.zeros_like(numerator, dtype=float),
                      where=active & (denominator > 0))
    return _output(value, t)


def aux_rabi(t, pulses: PulseSet, detunings: DetuningParams, g: float = DefaultConfig.g):
    """
    Auxiliary Rabi frequency chosen so that eta^2 / delta reproduces C(t).

    :raises SignMismatch: where C(t) * delta / g^2 is below -1e-12; tiny negatives are clamped to 0.
    """
    t_arr = np.asarray(t, dtype=float)
    radicand = np.asarray(cdd_coupling(t_arr, pulses, g)) * detunings.delta / g ** 2
    if np.any(radicand < -DefaultConfig.radicand_clamp):
        worst = int(np.argmin(radicand)) if radicand.ndim else 0
        t_bad = float(np.ravel(t_arr)[worst]) if t_arr.ndim else float(t_arr)
        raise SignMismatch(
            f"delta = {detunings.delta:g} g has the wrong sign for C(t) at t = {t_bad:.6g}/g; "
            f"swap the detuning ordering",
            details={"t": t_bad, "delta": detunings.delta})
    prefactor = 2.0 * detunings.delta1 * detunings.delta2 / (detunings.delta1 + detunings.delta2)
    value = abs(prefactor) * np.sqrt(np.clip(radicand, 0.0, None))
    return _output(value, t)


def eta(t, pulses: PulseSet, detunings: DetuningParams, g: float = DefaultConfig.g):
    """Two-photon coupling eta(t) = (1/delta1 + 1/delta2) g aux_rabi(t) / 2"""
    t_arr = np.asarray(t, dtype=float)
    value = 0.5 * (1.0 / detunings.delta1 + 1.0 / detunings.delta2) * g * np.asarray(
        aux_rabi(t_arr, pulses, detunings, g))
    return _output(value, t)


def pulse_table(pulses: PulseSet, detunings: Optional[DetuningParams], times,
                g: float = DefaultConfig.g) -> pd.DataFrame:
    """
    Control scalars sampled on a time grid.

    Columns ``eta`` and ``aux_rabi`` are NaN when no detunings are given.
    """
    times = np.asarray(times, dtype=float)
    frame = pd.DataFrame({
        "t_g": times,
        "omega1": np.asarray(pulses.omega1(times), dtype=float),
        "omega2": np.asarray(pulses.omega2(times), dtype=float),
        "cdd_coupling": np.asarray(cdd_coupling(times, pulses, g), dtype=float),
    })
    if detunings is None:
        frame["eta"] = np.nan
        frame["aux_rabi"] = np.nan
    else:
        frame["eta"] = np.asarray(eta(times, pulses, detunings, g), dtype=float)
        frame["aux_rabi"] = np.asarray(aux_rabi(times, pulses, detunings, g), dtype=float)
    return frame
