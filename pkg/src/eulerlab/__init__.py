"""Verification lab for similarity-reduced solutions of the 2D incompressible Euler equations."""

from .calculus import Jet1, StencilSpec, fd_partial, seed
from .errors import BlowUpError, CFLError, ConvergenceError, DomainError, SingularityError
from .lattice import SampleLattice
from .residuals import constraint_check, euler_residual, residual_norms
from .solutions import (
    Case,
    FlowState,
    SolutionParams,
    errata_report,
    evaluate_case,
    printed_case_solution,
    profile,
    temporal_coefficients,
)

__version__ = "0.1.0"
