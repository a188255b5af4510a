# _*_ coding: utf-8 _*_

from .version import __version__, __title__, __description__
from .errors import CavityStaError
from .config import ScenarioConfig
from .experiments import (run_scenario, run_transfer, run_entangle, sweep_duration, sweep_decoherence,
                          check_closure, check_equivalence, spectrum_table)
