"""Discrete variational tools for the fractional p(x)-Laplacian eigenvalue problem with variable exponents."""

from .exponents import ExponentFamily, ExponentField, ProblemConfig, validate_conditions
from .grid import Grid, GridFunction, Problem, build_grid
from .modular import M, functionals, norm_rho, norm_zero, rho
from .operator import EigenPair, apply_operator, weak_residual
from .variational import (
    SpectralScan,
    TrivialVerdict,
    estimate_gamma,
    lagrange_lambda,
    maximize_J_on_manifold,
    minimize_phi_lambda,
    project_to_manifold,
    scan_mu1,
)

__version__ = "0.1.0"

__all__ = [
    "EigenPair", "ExponentFamily", "ExponentField", "Grid", "GridFunction", "M", "Problem",
    "ProblemConfig", "SpectralScan", "TrivialVerdict", "apply_operator", "build_grid",
    "estimate_gamma", "functionals", "lagrange_lambda", "maximize_J_on_manifold",
    "minimize_phi_lambda", "norm_rho", "norm_zero", "project_to_manifold", "rho", "scan_mu1",
    "validate_conditions", "weak_residual",
]
