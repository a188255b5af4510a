# encoding=utf-8

from .integrator import Integrator
from .rk4_integrator import RK4Integrator
from .adaptive_integrator import AdaptiveIntegrator
