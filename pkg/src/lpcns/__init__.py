"""
Littlewood-Paley / Besov toolkit and a pseudospectral solver for the
barotropic compressible Navier-Stokes system on the torus.

Submodules
----------
spectral     periodic grids, fields, dyadic blocks, Leray projection
besov        block norms, (weighted, truncated) Besov and space-time norms
envelope     acceptable frequency weights and the greedy envelope
paraproduct  Bony decomposition, product and composition estimates
solvers      heat, Lame, transport and compressible Navier-Stokes solvers
lagrangian   flow maps and Eulerian/Lagrangian conversion
trajectory   time series of fields with cached norms and checkpoints
experiments  scripted numerical checks with JSON/CSV reports
cli          command-line entry point
"""

from . import besov, envelope, errors, experiments, lagrangian, paraproduct, solvers, spectral, trajectory
from .besov import BesovIndex, NormSeries, TimeNormSpec, besov_norm, block_norms, spacetime_norm
from .envelope import AcceptableWeight, build_weight, tail_cutoff, validate
from .errors import LPCNSError
from .experiments import EXPERIMENTS, ExperimentReport, ExperimentSpec, run
from .solvers import CnsState, PressureLaw, SolverConfig, Viscosity, cns_solve
from .spectral import Field, Grid
from .trajectory import Trajectory, load_checkpoint, save_checkpoint

__version__ = "0.1.0"

__all__ = [
    "besov", "envelope", "errors", "experiments", "lagrangian", "paraproduct", "solvers",
    "spectral", "trajectory",
    "Grid", "Field", "BesovIndex", "NormSeries", "TimeNormSpec", "block_norms", "besov_norm",
    "spacetime_norm", "AcceptableWeight", "build_weight", "validate", "tail_cutoff",
    "CnsState", "PressureLaw", "SolverConfig", "Viscosity", "cns_solve",
    "Trajectory", "save_checkpoint", "load_checkpoint",
    "ExperimentSpec", "ExperimentReport", "EXPERIMENTS", "run", "LPCNSError",
]
