"""Markovian master equations for two coupled qubits in thermal baths.

The four generator variants combine global or local jump operators with a
partial or full secular approximation (``GP``, ``GF``, ``LP``, ``LF``).
"""
from .bath import BathCorrelation, BathSpec, SpectralDensity, correlation
from .dynamics import (fidelity, heat_currents, negativity, overlapped_state,
                       propagate, steady_state)
from .errors import (ConfigError, CrossingSingularity, NoConvergence,
                     QubitPairError, StepFailure)
from .kernels import BACKEND
from .liouvillian import (Liouvillian, SecularPolicy, assemble, build_variant,
                          gksl_diagnostics)
from .system import (RWA, Heisenberg, IsingXX, QubitPairSpec, build_hamiltonian,
                     detect_frequency_crossing, diagonalize)

__version__ = "0.1.0"

__all__ = [
    "BathCorrelation", "BathSpec", "SpectralDensity", "correlation",
    "fidelity", "heat_currents", "negativity", "overlapped_state", "propagate",
    "steady_state", "ConfigError", "CrossingSingularity", "NoConvergence",
    "QubitPairError", "StepFailure", "BACKEND", "Liouvillian", "SecularPolicy",
    "assemble", "build_variant", "gksl_diagnostics", "RWA", "Heisenberg",
    "IsingXX", "QubitPairSpec", "build_hamiltonian", "detect_frequency_crossing",
    "diagonalize",
]
