"""Stochastic-limit analysis of the open BCS spin model coupled to a bosonic bath."""

from openbcs.meanfield import MeanFieldPoint
from openbcs.reservoir import GammaSet, ReservoirSpec
from openbcs.phase import GapSolution

__all__ = ["MeanFieldPoint", "ReservoirSpec", "GammaSet", "GapSolution"]
__version__ = "0.1.0"
