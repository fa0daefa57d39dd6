"""Quantum correlations of two-qutrit isotropic states in an NV-center model.

Submodules:
  qudit         density matrices, partial trace/transpose, entropies, fidelity
  correlations  negativity, classical correlation and quantum discord
  nv            nine-level NV spin model and isotropic-state preparation
  tomography    PL-based state tomography, MLE and Monte Carlo error bars
  cli           command-line front end (``qutrit-corr``)
"""

from .correlations import (
    OptimizerConfig,
    classical_correlation,
    make_isotropic,
    negativity,
    quantum_discord,
)
from .nv import NvConfig, prepare_isotropic
from .qudit import DensityMatrix, fidelity, partial_trace, partial_transpose

__version__ = "0.1.0"

__all__ = [
    "DensityMatrix",
    "NvConfig",
    "OptimizerConfig",
    "classical_correlation",
    "fidelity",
    "make_isotropic",
    "negativity",
    "partial_trace",
    "partial_transpose",
    "prepare_isotropic",
    "quantum_discord",
]
