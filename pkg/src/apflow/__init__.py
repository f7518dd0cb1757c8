"""Pipe flow driven by a prescribed almost-periodic flux.

The pressure gradient is the unknown that enforces the flux.  Modules:

* :mod:`apflow.apseries` -- finite almost-periodic series, sampled signals, Z-modules
* :mod:`apflow.cross_section` -- sections, Dirichlet eigenbases, flux carrier
* :mod:`apflow.modal` -- per-frequency profiles ``W_xi`` and their identities
* :mod:`apflow.basic_flow` -- frequency-domain solution and bound ledgers
* :mod:`apflow.time_domain` -- Galerkin march and Volterra pressure
* :mod:`apflow.nonlinear_gate` -- scalar contraction certificate
"""

from .apseries import APSeries, SampledSignal
from .basic_flow import solve_spectral
from .cross_section import build_disk, build_grid, build_rectangle
from .modal import solve_W
from .nonlinear_gate import gate
from .time_domain import march, volterra_pressure

__all__ = [
    "APSeries", "SampledSignal", "build_disk", "build_grid", "build_rectangle",
    "solve_W", "solve_spectral", "march", "volterra_pressure", "gate",
]
__version__ = "0.1.0"
