"""Linear kinetic equations for a transverse-field Ising chain with a long-range zz perturbation."""

from .basis import build_truncation
from .kinetics import TrajectoryConfig, build_generator, evolve
from .model import ModelParams, build_model
from .states import TruncatedPolarizedState, initial_vector

__all__ = [
    "ModelParams", "build_model", "build_truncation", "build_generator", "evolve",
    "TrajectoryConfig", "TruncatedPolarizedState", "initial_vector",
]
