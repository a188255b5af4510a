"""
Scenario configuration: one frozen pydantic model carrying every knob of a run, with task-dependent
defaults and a content hash for manifests.
"""

import hashlib
import json
import logging
from typing import Any, Dict, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, model_validator

from .dynamics import IntegratorConfig
from .hamiltonians import DecoherenceParams
from .misc import DefaultConfig, HamiltonianMode, IntegratorMethod, Task
from .pulses import DetuningParams, EntanglePulseParams, PulseSet, TransferPulseParams

logger = logging.getLogger(__name__)

TASK_DEFAULTS = {
    Task.TRANSFER: {"omega0": DefaultConfig.transfer_omega0, "big_t": DefaultConfig.transfer_big_t},
    Task.ENTANGLE: {"omega0": DefaultConfig.entangle_omega0, "big_t": DefaultConfig.entangle_big_t},
}


class ScenarioConfig(BaseModel):
    """
    Resolved parameters of one scenario run, all in units of g and 1/g.

    ``omega0`` and ``big_t`` default per task (transfer 0.2 and 50, entangle 0.3 and 30); ``tau_frac``
    only affects transfer and ``theta``/``w`` only affect entanglement.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    task: Task = Task.TRANSFER
    mode: HamiltonianMode = HamiltonianMode.AUX
    omega0: float = Field(..., gt=0)
    big_t: float = Field(..., gt=0)
    tau_frac: float = Field(DefaultConfig.tau_frac, ge=0, lt=1)
    theta: float = Field(DefaultConfig.theta, gt=0, lt=0.5)
    w: float = Field(DefaultConfig.w, gt=0)
    delta1: float = DefaultConfig.delta1
    delta2: float = DefaultConfig.delta2
    gamma: float = Field(0.0, ge=0)
    kappa: float = Field(0.0, ge=0)
    nmax_a: int = Field(DefaultConfig.nmax_a, ge=0)
    nmax_b: int = Field(DefaultConfig.nmax_b, ge=0)
    samples: int = Field(DefaultConfig.samples, ge=1)
    tol: float = Field(DefaultConfig.tol, gt=0)
    method: IntegratorMethod = IntegratorMethod.ADAPTIVE
    reduce: bool = True

    @model_validator(mode="before")
    @classmethod
    def _task_defaults(cls, data: Any):
        if not isinstance(data, dict):
            return data
        data = dict(data)
        task = Task(data.get("task", Task.TRANSFER))
        for key, value in TASK_DEFAULTS[task].items():
            if data.get(key) is None:
                data[key] = value
        return data

    @model_validator(mode="after")
    def _check(self):
        if self.mode.needs_mode_b and self.nmax_b < 1:
            raise ValueError(f"mode {self.mode.value} needs nmax_b >= 1 (one photon in cavity mode b)")
        # detuning invariants apply to every mode
        self.detunings()
        return self

    @property
    def window(self):
        return self.pulse_params().window

    def pulse_params(self) -> Union[TransferPulseParams, EntanglePulseParams]:
        if self.task == Task.TRANSFER:
            return TransferPulseParams.from_fraction(self.omega0, self.big_t, self.tau_frac)
        return EntanglePulseParams(omega0p=self.omega0, big_t=self.big_t, theta=self.theta, w=self.w)

    def pulse_set(self) -> PulseSet:
        params = self.pulse_params()
        if self.task == Task.TRANSFER:
            return PulseSet.transfer(params)
        return PulseSet.entangle(params)

    def detunings(self) -> DetuningParams:
        return DetuningParams(delta1=self.delta1, delta2=self.delta2)

    def decoherence(self) -> DecoherenceParams:
        return DecoherenceParams(kappa=self.kappa, gamma=self.gamma)

    def integrator(self) -> IntegratorConfig:
        return IntegratorConfig(method=self.method, tol=self.tol, samples=self.samples)

    def with_updates(self, **updates) -> "ScenarioConfig":
        """Validated copy with some fields replaced"""
        data = self.model_dump()
        data.update(updates)
        return ScenarioConfig(**data)

    def canonical_json(self) -> str:
        return json.dumps(self.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))

    def config_hash(self) -> str:
        return hashlib.sha256(self.canonical_json().encode("utf-8")).hexdigest()

    @classmethod
    def for_task(cls, task: Union[Task, str], **overrides: Optional[Any]) -> "ScenarioConfig":
        values: Dict[str, Any] = {key: value for key, value in overrides.items() if value is not None}
        values["task"] = Task(task)
        return cls(**values)
