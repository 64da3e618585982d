"""Differential-geometry implicit solvation: coupled surface/electrostatics
solves and stability-constrained parameter learning."""

from __future__ import annotations

from .electrostatics import PbConfig
from .errors import (
    ConfigurationError,
    ConstraintViolation,
    DgsolvError,
    DomainError,
    InstabilityError,
    NonConvergenceError,
    ParseError,
    TypingError,
)
from .fit import FitConfig, FitResult, fit_parameters, predict_energy, project_feasible, solve_convex
from .grid import Grid, build_grid
from .harness import cross_validate, kfold_split, solvent_radius_sweep
from .metrics import rmse
from .mol_io import Atom, Dataset, Molecule, parse_molecule, read_dataset, read_molecule
from .nonpolar import LjConfig
from .params import ParameterSet
from .scf import ScfConfig, ScfResult, run_scf
from .surface import LbConfig, evolve_surface

__version__ = "0.1.0"
