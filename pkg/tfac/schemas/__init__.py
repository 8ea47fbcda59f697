from .experiments import (
    AdaptiveSummary,
    ConvergenceRow,
    ExperimentConfig,
    KernelCheckRow,
    ManufacturedCase,
    MaxboundSummary,
    SingularitySummary,
    SoeCheckRow,
)
from .grid import GridField, GridSpec
from .mesh import AdaptiveController, MeshBuilder, TimeMesh
from .solver import ModelConfig, NewtonOptions, SolveRecord


__all__ = [
    "AdaptiveController",
    "AdaptiveSummary",
    "ConvergenceRow",
    "ExperimentConfig",
    "GridField",
    "GridSpec",
    "KernelCheckRow",
    "ManufacturedCase",
    "MaxboundSummary",
    "MeshBuilder",
    "ModelConfig",
    "NewtonOptions",
    "SingularitySummary",
    "SoeCheckRow",
    "SolveRecord",
    "TimeMesh",
]
