"""Modulars, Luxemburg norms and their derivatives on the lattice.

All modulars share one evaluator parameterised by :class:`ModularSpec`:

* pair term  ``sum_{i != j} |u_i - u_j|^{p_ij} W_ij`` (divided by p_ij when weighted)
* ``alpha * sum_Omega |u|^{p(x)} h^N`` (divided by p(x) when weighted)
* ``beta * sum_Omega |u|^{q(x)} h^N`` (divided by q(x) when weighted)

The pair domain is either Omega x Omega (space E) or the whole box (space X).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Optional, Sequence

import numpy as np

from .grid import Problem

LUXEMBURG_TOL = 1e-10
MAX_DOUBLINGS = 200

_deterministic = False


def set_deterministic(flag: bool = True) -> None:
    """Use exactly rounded (order independent) summation for modular values."""
    global _deterministic
    _deterministic = bool(flag)


def _total(x: np.ndarray) -> float:
    if _deterministic:
        return math.fsum(np.ravel(x).tolist())
    return float(np.sum(x))


class LuxemburgError(RuntimeError):
    """Raised when the unit-level equation of a Luxemburg norm cannot be solved."""


@dataclass(frozen=True)
class ModularSpec:
    weighted: bool
    pair_domain: str = "box"
    alpha: float = 0.0
    beta: float = 0.0

    def __post_init__(self):
        if self.pair_domain not in ("omega", "box"):
            raise ValueError("pair_domain must be 'omega' or 'box'")
        if self.alpha < 0 or self.beta < 0:
            raise ValueError("alpha and beta must be nonnegative")


def rho_spec(problem: Problem) -> ModularSpec:
    return ModularSpec(True, "omega", problem.alpha, problem.beta)


def I_spec(problem: Problem) -> ModularSpec:
    return ModularSpec(True, "box", problem.alpha, problem.beta)


def I0_spec(problem: Problem) -> ModularSpec:
    return ModularSpec(False, "box", problem.alpha, problem.beta)


M_SPEC = ModularSpec(False, "box")


# ----------------------------------------------------------------------------
# Core evaluators on Omega vectors
# ----------------------------------------------------------------------------


def _pair_slice(problem: Problem, spec: ModularSpec) -> slice:
    return slice(0, problem.n_omega_pairs) if spec.pair_domain == "omega" else slice(None)


def _terms(problem: Problem, v: np.ndarray, spec: ModularSpec):
    """(|values|, exponents, coefficients) whose sum c |x|^e is the modular."""
    sl = _pair_slice(problem, spec)
    d = np.abs(problem.pair_differences(v)[sl])
    p = problem.pair_p[sl]
    c = 2.0 * problem.pair_w[sl]
    if spec.weighted:
        c = c / p
    parts_x, parts_e, parts_c = [d], [p], [c]
    for coef, expo in ((spec.alpha, problem.p_node), (spec.beta, problem.q_node)):
        if coef > 0:
            cc = np.full(problem.m, coef * problem.cell)
            if spec.weighted:
                cc = cc / expo
            parts_x.append(np.abs(v))
            parts_e.append(expo)
            parts_c.append(cc)
    return np.concatenate(parts_x), np.concatenate(parts_e), np.concatenate(parts_c)


def modular_value(problem: Problem, v: np.ndarray, spec: ModularSpec) -> float:
    x, e, c = _terms(problem, v, spec)
    return _total(c * x ** e)


def modular_gradient(problem: Problem, v: np.ndarray, spec: ModularSpec) -> np.ndarray:
    """Partial derivatives with respect to the Omega nodal values."""
    sl = _pair_slice(problem, spec)
    d = problem.pair_differences(v)[sl]
    p = problem.pair_p[sl]
    flux = 2.0 * problem.pair_w[sl] * np.sign(d) * np.abs(d) ** (p - 1.0)
    if not spec.weighted:
        flux = flux * p
    a = problem.pair_a[sl]
    b = problem.pair_b[sl]
    grad = np.bincount(a, weights=flux, minlength=problem.m + 1)
    grad -= np.bincount(b, weights=flux, minlength=problem.m + 1)
    grad = grad[: problem.m]
    for coef, expo in ((spec.alpha, problem.p_node), (spec.beta, problem.q_node)):
        if coef > 0:
            g = coef * problem.cell * np.sign(v) * np.abs(v) ** (expo - 1.0)
            if not spec.weighted:
                g = g * expo
            grad = grad + g
    return grad


def lebesgue_value(problem: Problem, v: np.ndarray, exponent: np.ndarray) -> float:
    """sum over Omega of |v|^e h^N."""
    return _total(np.abs(v) ** exponent * problem.cell)


def J_value(problem: Problem, v: np.ndarray) -> float:
    return _total(np.abs(v) ** problem.r_node / problem.r_node * problem.cell)


def J0_value(problem: Problem, v: np.ndarray) -> float:
    return lebesgue_value(problem, v, problem.r_node)


def J_gradient(problem: Problem, v: np.ndarray) -> np.ndarray:
    return problem.cell * np.sign(v) * np.abs(v) ** (problem.r_node - 1.0)


def I_value(problem: Problem, v: np.ndarray) -> float:
    return modular_value(problem, v, I_spec(problem))


def I0_value(problem: Problem, v: np.ndarray) -> float:
    return modular_value(problem, v, I0_spec(problem))


def I_gradient(problem: Problem, v: np.ndarray) -> np.ndarray:
    return modular_gradient(problem, v, I_spec(problem))


# ----------------------------------------------------------------------------
# Public wrappers on nodal vectors / grid functions
# ----------------------------------------------------------------------------


def _omega_values(problem: Problem, u, spec: Optional[ModularSpec] = None) -> np.ndarray:
    require_x = spec is None or spec.pair_domain == "box"
    return problem.restrict(u, require_X=require_x)


def seminorm_modular(u, problem: Problem, spec: ModularSpec = M_SPEC) -> float:
    """Pair term only: the double sum of |u(x) - u(y)|^p over the chosen domain."""
    pair_only = ModularSpec(spec.weighted, spec.pair_domain)
    return modular_value(problem, _omega_values(problem, u, spec), pair_only)


def M(u, problem: Problem) -> float:
    return seminorm_modular(u, problem, M_SPEC)


def rho(u, problem: Problem, spec: Optional[ModularSpec] = None) -> float:
    """Weighted modular on Omega x Omega with the alpha and beta node terms."""
    spec = spec or rho_spec(problem)
    return modular_value(problem, _omega_values(problem, u, spec), spec)


class Functionals(NamedTuple):
    I: float
    I0: float
    J: float
    J0: float


def functionals(u, problem: Problem) -> Functionals:
    v = problem.restrict(u)
    return Functionals(I_value(problem, v), I0_value(problem, v), J_value(problem, v), J0_value(problem, v))


def lebesgue_modular(u, problem: Problem, exponent: Optional[np.ndarray] = None) -> float:
    """Integral over Omega of |u|^e; ``exponent`` defaults to p(x, x)."""
    e = problem.p_node if exponent is None else np.asarray(exponent, dtype=float)
    return lebesgue_value(problem, problem.restrict(u, require_X=False), e)


# ----------------------------------------------------------------------------
# Luxemburg norms
# ----------------------------------------------------------------------------


def solve_unit_level(level: Callable[[float], float], tol: float = LUXEMBURG_TOL,
                     max_doublings: int = MAX_DOUBLINGS) -> float:
    """Root of the decreasing map lam -> level(lam) - 1.

    The bracket starts at [1e-8, 1] and is widened by doubling (halving at the
    lower end); geometric bisection then runs until |level - 1| <= tol.
    """
    lo, hi = 1e-8, 1.0
    n = 0
    while level(hi) > 1.0:
        lo, hi = hi, 2.0 * hi
        n += 1
        if n > max_doublings:
            raise LuxemburgError("bracket expansion exceeded the doubling budget")
    n = 0
    while level(lo) < 1.0:
        lo, hi = 0.5 * lo, lo
        n += 1
        if n > max_doublings:
            raise LuxemburgError("bracket expansion exceeded the doubling budget")
    while True:
        mid = math.sqrt(lo * hi)
        res = level(mid) - 1.0
        if abs(res) <= tol:
            return mid
        if not lo < mid < hi:
            raise LuxemburgError(f"bisection stalled at lambda={mid!r} with residual {res:.3e} > tol={tol:.1e}")
        if res > 0:
            lo = mid
        else:
            hi = mid


def _scaled_level(x: np.ndarray, e: np.ndarray, c: np.ndarray) -> Callable[[float], float]:
    keep = (x > 0) & (c > 0)
    logx, e, logc = np.log(x[keep]), e[keep], np.log(c[keep])

    def level(lam: float) -> float:
        with np.errstate(over="ignore"):
            return _total(np.exp(logc + e * (logx - math.log(lam))))

    return level


def luxemburg_norm(u, modular: Callable, tol: float = LUXEMBURG_TOL) -> float:
    """inf{lam > 0 : modular(u / lam) <= 1} for any modular callable."""
    u = np.asarray(u, dtype=float)
    if not np.any(u):
        return 0.0
    return solve_unit_level(lambda lam: modular(u / lam), tol)


def _norm_from_terms(terms, tol: float) -> float:
    x, e, c = terms
    if not np.any((x > 0) & (c > 0)):
        return 0.0
    return solve_unit_level(_scaled_level(x, e, c), tol)


def norm_rho(u, problem: Problem, tol: float = LUXEMBURG_TOL) -> float:
    """Norm induced by rho on E (the ``||.||_1`` norm)."""
    spec = rho_spec(problem)
    return _norm_from_terms(_terms(problem, _omega_values(problem, u, spec), spec), tol)


def norm_zero(u, problem: Problem, tol: float = LUXEMBURG_TOL) -> float:
    """Luxemburg norm of the seminorm modular M on X (the ``||.||_0`` norm)."""
    return _norm_from_terms(_terms(problem, problem.restrict(u), M_SPEC), tol)


def norm_modular(u, problem: Problem, spec: ModularSpec, tol: float = LUXEMBURG_TOL) -> float:
    return _norm_from_terms(_terms(problem, _omega_values(problem, u, spec), spec), tol)


def lebesgue_norm(u, problem: Problem, exponent: Optional[np.ndarray] = None,
                  tol: float = LUXEMBURG_TOL) -> float:
    """Luxemburg norm of L^{e(.)}(Omega); ``exponent`` defaults to p(x, x)."""
    e = problem.p_node if exponent is None else np.asarray(exponent, dtype=float)
    v = problem.restrict(u, require_X=False)
    return _norm_from_terms((np.abs(v), e, np.full(problem.m, problem.cell)), tol)


# ----------------------------------------------------------------------------
# Derivatives
# ----------------------------------------------------------------------------


def rho_prime_pairing(u, phi, problem: Problem, spec: Optional[ModularSpec] = None) -> float:
    """<rho'(u), phi> for the weighted modular selected by ``spec`` (rho by default)."""
    spec = spec or rho_spec(problem)
    v = _omega_values(problem, u, spec)
    w = _omega_values(problem, phi, spec)
    return _total(modular_gradient(problem, v, spec) * w)


def I_prime_pairing(u, phi, problem: Problem) -> float:
    return rho_prime_pairing(u, phi, problem, I_spec(problem))


def J_prime_pairing(u, phi, problem: Problem) -> float:
    v, w = problem.restrict(u), problem.restrict(phi)
    return _total(J_gradient(problem, v) * w)


# ----------------------------------------------------------------------------
# Lebesgue-space toolkit
# ----------------------------------------------------------------------------


@dataclass
class HolderCheck:
    lhs: float
    rhs: float
    passed: bool


def holder_pairing_check(u, v, problem: Problem, p_field: Optional[np.ndarray] = None,
                         tol: float = LUXEMBURG_TOL, slack: float = 1e-8) -> HolderCheck:
    """Both sides of |int uv| <= (1/p- + 1/q-) ||u||_p ||v||_q with q the conjugate of p.

    ``slack`` is a relative allowance for the norm-solver error, which matters
    in equality cases such as u = v at p = 2.
    """
    p = problem.p_node if p_field is None else np.asarray(p_field, dtype=float)
    if np.any(p <= 1.0):
        raise ValueError("conjugate exponent undefined where p(x) <= 1")
    q = p / (p - 1.0)
    a = problem.restrict(u, require_X=False)
    b = problem.restrict(v, require_X=False)
    lhs = abs(_total(a * b * problem.cell))
    const = 1.0 / p.min() + 1.0 / q.min()
    rhs = const * lebesgue_norm(a, problem, p, tol) * lebesgue_norm(b, problem, q, tol)
    return HolderCheck(lhs, rhs, lhs <= rhs * (1.0 + slack))


@dataclass
class ConvergenceReport:
    norms: list = field(default_factory=list)
    modulars: list = field(default_factory=list)
    norm_converges: bool = False
    modular_converges: bool = False

    @property
    def equivalent(self) -> bool:
        return self.norm_converges == self.modular_converges


def _settles(seq: Sequence[float], tol: float, shrink: float) -> bool:
    seq = np.asarray(seq, dtype=float)
    if seq[-1] <= tol:
        return True
    return bool(np.all(np.diff(seq) <= 0.0) and seq[-1] <= shrink * seq[0])


def modular_convergence_equivalence(u_sequence, u, problem: Problem,
                                    p_field: Optional[np.ndarray] = None,
                                    tol: float = 1e-12, shrink: float = 0.05) -> ConvergenceReport:
    """Norms and modulars of u_n - u for a finite sequence.

    A sequence counts as convergent when its last entry is below ``tol``, or
    when it is nonincreasing and has shrunk to ``shrink`` times its first entry.
    """
    e = problem.p_node if p_field is None else np.asarray(p_field, dtype=float)
    target = problem.restrict(u, require_X=False)
    rep = ConvergenceReport()
    for un in u_sequence:
        diff = problem.restrict(un, require_X=False) - target
        rep.norms.append(lebesgue_norm(diff, problem, e))
        rep.modulars.append(lebesgue_value(problem, diff, e))
    rep.norm_converges = _settles(rep.norms, tol, shrink)
    rep.modular_converges = _settles(rep.modulars, tol, shrink)
    return rep
