# encoding=utf-8

from .default_config import DefaultConfig
from .enumeration import AtomLevel, Task, HamiltonianMode, IntegratorMethod
