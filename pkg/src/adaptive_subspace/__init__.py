"""Adaptive subspace detectors (first-order GLR and estimate-and-plug) and a
Monte Carlo harness for thresholds, Pd curves, and CFAR checks."""

from .detectors import DETECTORS, NAMES, evaluate
from .glr_fo import PreconditionError
from .scenario import Dataset, ScenarioConfig, generate_dataset

__all__ = ["DETECTORS", "NAMES", "Dataset", "PreconditionError", "ScenarioConfig",
           "evaluate", "generate_dataset"]
__version__ = "0.1.0"
