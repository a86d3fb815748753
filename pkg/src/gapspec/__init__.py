"""Spectra of linearized coupled-mode equations about gap solitons."""

from .errors import ConfigError, DomainError, EigenSolverError, GapspecError
from .potential import PotentialParams
from .soliton import SolitonParams, classify_existence, soliton_closed_form, soliton_for
from .spectral_grid import GridSpec, build_grid
from .operators import build_operators
from .spectrum import Spectrum, Tolerances, classify, compute_spectra
from .bifurcation import SweepReport, locate_bifurcation, sweep

__version__ = "0.1.0"

__all__ = [
    "ConfigError", "DomainError", "EigenSolverError", "GapspecError",
    "PotentialParams", "SolitonParams", "classify_existence",
    "soliton_closed_form", "soliton_for", "GridSpec", "build_grid",
    "build_operators", "Spectrum", "Tolerances", "classify",
    "compute_spectra", "SweepReport", "locate_bifurcation", "sweep",
]
