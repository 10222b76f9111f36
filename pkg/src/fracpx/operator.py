"""Discrete fractional p(x)-Laplacian, weak form and the energy Phi_lambda."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .grid import GridFunction, Problem
from .modular import I_gradient, I_value, J_gradient, J_value, _total


@dataclass
class EigenPair:
    """Candidate weak solution (u, lambda) with its defect and energy.

    ``residual`` is the Euclidean norm of the nodal Riesz vector of the weak
    defect times h^(N/2), an L2-type surrogate for the dual norm.
    """

    u: GridFunction
    lam: float
    residual: float
    energy: float
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.residual < 0:
            raise ValueError("residual must be nonnegative")
        if not self.u.in_X:
            raise ValueError("eigenfunction must lie in X")


def apply_operator(u, problem: Problem) -> GridFunction:
    """2 sum_{j != i} |u_i - u_j|^{p_ij - 2} (u_i - u_j) K_ij h^N at every node of the box.

    The principal value is taken by omitting the diagonal cell.
    """
    full = np.asarray(u, dtype=float)
    problem.restrict(full)
    d = full[:, None] - full[None, :]
    flux = np.sign(d) * np.abs(d) ** (problem.exponents.p_values - 1.0) * problem.kernel.weights
    out = 2.0 * flux.sum(axis=1) / problem.cell
    return GridFunction.on(problem.grid, out, in_X=False)


def weak_pairing(u, v, problem: Problem) -> float:
    """Left-hand side of the weak formulation tested against ``v``."""
    a, b = problem.restrict(u), problem.restrict(v)
    return _total(I_gradient(problem, a) * b)


def r_pairing(u, v, problem: Problem) -> float:
    """sum over Omega of |u|^{r-2} u v h^N."""
    a, b = problem.restrict(u), problem.restrict(v)
    return _total(J_gradient(problem, a) * b)


def defect_vector(problem: Problem, v: np.ndarray, lam: float) -> np.ndarray:
    """Nodal coefficients of w -> <I'(v), w> - lam <J'(v), w> on Omega."""
    return I_gradient(problem, v) - lam * J_gradient(problem, v)


def residual_norm(problem: Problem, g: np.ndarray) -> float:
    return float(np.linalg.norm(g) * np.sqrt(problem.cell))


def weak_residual(u, lam: float, problem: Problem) -> float:
    v = problem.restrict(u)
    return residual_norm(problem, defect_vector(problem, v, lam))


def phi_value(problem: Problem, v: np.ndarray, lam: float) -> float:
    return I_value(problem, v) - lam * J_value(problem, v)


def phi_lambda_and_gradient(u, lam: float, problem: Problem):
    """Energy I(u) - lam J(u) and its nodal gradient (zero off Omega)."""
    v = problem.restrict(u)
    return phi_value(problem, v, lam), problem.extend(defect_vector(problem, v, lam))
