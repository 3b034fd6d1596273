"""Space-time domain decomposition for the heat equation.

Temporal operators are Fourier multipliers on a periodic window, space is
discretized by P1 finite elements on a rectangle split along a vertical
grid line, and every interface iteration runs frequency by frequency.
"""
from .femgrid import Decomposition, SpaceMesh, SparseOperators, assemble, build_mesh, decompose, lambda_norm
from .fractime import (ContractError, FrequencySymbols, TimeGrid, h_phi, half_derivative, hilbert,
                       hs_norm, time_derivative)
from .interface import InterfaceSystem, IterationConfig, IterationReport
from .kernels import BACKEND
from .manufactured import manufactured
from .solver import SolverError, SpaceTimeSystem

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "ContractError", "Decomposition", "FrequencySymbols", "InterfaceSystem",
    "IterationConfig", "IterationReport", "SolverError", "SpaceMesh", "SpaceTimeSystem",
    "SparseOperators", "TimeGrid", "assemble", "build_mesh", "decompose", "h_phi",
    "half_derivative", "hilbert", "hs_norm", "lambda_norm", "manufactured", "time_derivative",
]
