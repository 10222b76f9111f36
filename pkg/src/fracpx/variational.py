"""Constrained and unconstrained optimisation for the spectral quantities.

Everything works on Omega value vectors ``v`` of a :class:`~fracpx.grid.Problem`
(functions in X vanish off Omega).  The optimisers are first-order: gradient
steps with Armijo backtracking (factor 0.5, sufficient decrease 1e-4), a
normalised first step and Barzilai-Borwein step proposals afterwards.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from . import modular as md
from .grid import GridFunction, Problem
from .operator import EigenPair, defect_vector, phi_value, residual_norm

log = logging.getLogger(__name__)

ARMIJO_FACTOR = 0.5
ARMIJO_C = 1e-4
MAX_BACKTRACK = 60
MAX_ITER = 10_000


class OptimizationError(RuntimeError):
    """All starts failed; ``result`` carries the best attempt when there is one."""

    def __init__(self, message: str, result=None):
        super().__init__(message)
        self.result = result


# ----------------------------------------------------------------------------
# Scaling onto level sets of I
# ----------------------------------------------------------------------------


def _level_solver(problem: Problem, v: np.ndarray):
    """Return sigma -> (I(e^sigma v), d/dsigma of log I) for the fixed direction v."""
    x, e, c = md._terms(problem, v, md.I_spec(problem))
    keep = (x > 0) & (c > 0)
    base = np.log(c[keep]) + e[keep] * np.log(x[keep])
    e = e[keep]

    def at(sigma: float):
        z = base + e * sigma
        zmax = z.max()
        w = np.exp(z - zmax)
        total = w.sum()
        return math.exp(zmax) * total, float(e @ w) / total, zmax + math.log(total)

    return at


def manifold_scale(problem: Problem, v: np.ndarray, t: float, tol: float = 1e-10) -> float:
    """Unique s > 0 with I(s v) = t.

    s -> I(s v) is strictly increasing; the root is bracketed and then refined
    by Newton steps on log I against log s, falling back to bisection whenever
    a step leaves the bracket.
    """
    if t <= 0:
        raise ValueError("level t must be positive")
    if not np.any(v):
        raise ValueError("the zero function has no projection onto a level set")
    at = _level_solver(problem, v)
    log_t = math.log(t)
    target = max(tol, 8 * np.finfo(float).eps) * t
    sigma = 0.0
    val, slope, logval = at(sigma)
    lo, hi = -math.inf, math.inf
    for _ in range(400):
        if abs(val - t) <= target:
            return math.exp(sigma)
        if logval > log_t:
            hi = sigma
        else:
            lo = sigma
        step = sigma - (logval - log_t) / slope
        if math.isfinite(lo) and math.isfinite(hi):
            if not lo < step < hi:
                step = 0.5 * (lo + hi)
            if hi - lo < 1e-15 * max(1.0, abs(sigma)):
                break
        sigma = step
        val, slope, logval = at(sigma)
    if abs(val - t) <= 10 * target:
        return math.exp(sigma)
    raise OptimizationError(f"level-set projection stalled: |I - t| = {abs(val - t):.3e}")


def project_to_manifold(u, t: float, problem: Problem, tol: float = 1e-10) -> float:
    """Scale s_t(u) putting s_t u on N_t = {I = t}."""
    return manifold_scale(problem, problem.restrict(u), t, tol)


# ----------------------------------------------------------------------------
# Start pools
# ----------------------------------------------------------------------------


def start_pool(problem: Problem, count: int, seed: int = 0) -> list:
    """Half smooth bumps (at most four, in the quarters of Omega), the rest random."""
    n_bumps = min(4, (count + 1) // 2)
    bumps = problem.quartile_bumps(4)[:n_bumps]
    randoms = [problem.random(seed + k) for k in range(count - n_bumps)]
    return [b.copy() for b in bumps] + randoms


def _run_all(fn: Callable, items: Sequence, workers: int) -> list:
    if workers <= 1:
        return [fn(k, it) for k, it in enumerate(items)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, range(len(items)), items))


# ----------------------------------------------------------------------------
# c1(t): maximise J on N_t
# ----------------------------------------------------------------------------


@dataclass
class ManifoldMax:
    u: np.ndarray  # Omega values
    c1: float
    t: float
    converged: bool
    iterations: int
    start: int
    gradient_ratio: float
    restart_values: list = field(default_factory=list)
    runs: list = field(default_factory=list)

    @property
    def critical_points(self) -> list:
        """Converged runs: each is a critical point of J on N_t up to tolerance."""
        return [r for r in self.runs if r.converged]


def _tangential(gJ: np.ndarray, gI: np.ndarray) -> np.ndarray:
    return gJ - (gJ @ gI) / (gI @ gI) * gI


def _ascend_on_level(problem: Problem, v0: np.ndarray, t: float, tol: float, max_iter: int,
                     start: int = 0) -> ManifoldMax:
    u = manifold_scale(problem, v0, t) * v0
    J = md.J_value(problem, u)
    gJ = md.J_gradient(problem, u)
    gT = _tangential(gJ, md.I_gradient(problem, u))
    step = 0.1 * np.linalg.norm(u) / max(np.linalg.norm(gT), 1e-300)
    ratio = np.linalg.norm(gT) / np.linalg.norm(gJ)
    for it in range(max_iter):
        if ratio <= tol:
            return ManifoldMax(u, J, t, True, it, start, ratio)
        gnorm2 = gT @ gT
        a = step
        for _ in range(MAX_BACKTRACK):
            w = u + a * gT
            un = manifold_scale(problem, w, t) * w
            Jn = md.J_value(problem, un)
            if Jn >= J + ARMIJO_C * a * gnorm2:
                break
            a *= ARMIJO_FACTOR
        else:
            break
        gJn = md.J_gradient(problem, un)
        gTn = _tangential(gJn, md.I_gradient(problem, un))
        s = un - u
        y = gT - gTn
        sy = s @ y
        step = (s @ s) / sy if sy > 0 else 2.0 * a
        step = min(max(step, 1e-3 * a), 1e3 * a)
        u, J, gJ, gT = un, Jn, gJn, gTn
        ratio = np.linalg.norm(gT) / np.linalg.norm(gJ)
    return ManifoldMax(u, J, t, ratio <= tol, max_iter if ratio > tol else it, start, ratio)


def maximize_J_on_manifold(t: float, restarts: int, problem: Problem, seed: int = 0,
                           tol: float = 1e-8, max_iter: int = MAX_ITER, workers: int = 1,
                           starts: Optional[Sequence[np.ndarray]] = None) -> ManifoldMax:
    """Best critical point of J on N_t over several projected-gradient ascents.

    The stopping test is on the tangential part of grad J relative to |grad J|.
    """
    if t <= 0:
        raise ValueError("t must be positive")
    if restarts < 1:
        raise ValueError("need at least one restart")
    pool = list(starts) if starts is not None else start_pool(problem, restarts, seed)
    runs = _run_all(lambda k, v: _ascend_on_level(problem, v, t, tol, max_iter, k), pool, workers)
    values = [r.c1 for r in runs]
    ok = [r for r in runs if r.converged]
    best = max(ok or runs, key=lambda r: r.c1)
    best.restart_values = values
    best.runs = runs
    if not ok:
        raise OptimizationError(f"no restart converged at t={t:g}", best)
    return best


def lagrange_lambda(u, problem: Problem) -> float:
    """I0(u) / J0(u)."""
    v = problem.restrict(u)
    if not np.any(v):
        raise ValueError("lambda(u) is undefined for u = 0")
    return md.I0_value(problem, v) / md.J0_value(problem, v)


# ----------------------------------------------------------------------------
# Generic descent
# ----------------------------------------------------------------------------


@dataclass
class DescentResult:
    x: np.ndarray
    f: float
    g: np.ndarray
    iterations: int
    status: str  # converged | stalled | max_iter | stopped


def descend(fun: Callable, grad: Callable, x0: np.ndarray, stop: Callable, max_iter: int = MAX_ITER,
            project: Optional[Callable] = None, callback: Optional[Callable] = None) -> DescentResult:
    """Gradient descent with Armijo backtracking and Barzilai-Borwein proposals.

    ``stop(x, f, g)`` returns None to continue, or a status string.
    ``project`` maps a trial point back to the feasible set.
    """
    x = np.array(x0, dtype=float)
    f = fun(x)
    g = grad(x)
    gn = np.linalg.norm(g)
    step = 0.1 * max(np.linalg.norm(x), 1e-300) / max(gn, 1e-300)
    for it in range(max_iter):
        status = stop(x, f, g)
        if status:
            return DescentResult(x, f, g, it, status)
        a = step
        floor = 64.0 * np.finfo(float).eps * (abs(f) + 1.0)
        gnorm = np.linalg.norm(g)
        gnew = None
        for _ in range(MAX_BACKTRACK):
            xn = x - a * g
            if project is not None:
                xn = project(xn)
            fn = fun(xn)
            if fn <= f - ARMIJO_C * (g @ (x - xn)) and fn < f:
                break
            if abs(fn - f) <= floor:
                # energy differences are lost in roundoff: accept if the gradient shrinks
                gtrial = grad(xn)
                if np.linalg.norm(gtrial) < gnorm:
                    gnew = gtrial
                    break
            a *= ARMIJO_FACTOR
        else:
            return DescentResult(x, f, g, it, "stalled")
        if gnew is None:
            gnew = grad(xn)
        s = xn - x
        y = gnew - g
        sy = s @ y
        step = (s @ s) / sy if sy > 0 else 2.0 * a
        step = min(max(step, 1e-3 * a), 1e3 * a)
        x, f, g = xn, fn, gnew
        if callback is not None:
            callback(x)
    return DescentResult(x, f, g, max_iter, "max_iter")


# ----------------------------------------------------------------------------
# gamma_0 / gamma_1
# ----------------------------------------------------------------------------


@dataclass
class GammaEstimate:
    """Best Rayleigh quotient found: an upper bound on the infimum.

    ``degenerate`` means the descent kept lowering the quotient while the
    function collapsed to 0 or blew up, which points to an infimum of 0.
    """

    value: float
    argmin: np.ndarray
    weighted: bool
    degenerate: bool
    statuses: list = field(default_factory=list)
    upper_bound: bool = True


def _quotient_parts(problem: Problem, weighted: bool):
    if weighted:
        return (lambda v: md.I_value(problem, v), lambda v: md.I_gradient(problem, v),
                lambda v: md.J_value(problem, v), lambda v: md.J_gradient(problem, v))
    spec = md.I0_spec(problem)
    return (lambda v: md.modular_value(problem, v, spec), lambda v: md.modular_gradient(problem, v, spec),
            lambda v: md.J0_value(problem, v), lambda v: problem.r_node * md.J_gradient(problem, v))


def rayleigh_quotient(problem: Problem, v: np.ndarray, weighted: bool) -> float:
    num, _, den, _ = _quotient_parts(problem, weighted)
    return num(v) / den(v)


def _minimize_quotient(problem: Problem, v0: np.ndarray, weighted: bool, tol: float,
                       max_iter: int, drift: float):
    num, dnum, den, dden = _quotient_parts(problem, weighted)
    scale0 = np.linalg.norm(v0)

    def fun(v):
        a, b = num(v), den(v)
        if a <= 0 or b <= 0:
            return math.inf
        return math.log(a) - math.log(b)

    def grad(v):
        return dnum(v) / num(v) - dden(v) / den(v)

    def stop(v, f, g):
        nv = np.linalg.norm(v)
        if np.linalg.norm(g) * nv <= tol:
            return "converged"
        if nv < scale0 / drift or nv > scale0 * drift:
            return "degenerate"
        return None

    res = descend(fun, grad, v0, stop, max_iter)
    return res


def estimate_gamma(problem: Problem, weighted: bool, starts: int = 8, seed: int = 0,
                   tol: float = 1e-9, max_iter: int = MAX_ITER, drift: float = 1e8,
                   extra_starts: Sequence[np.ndarray] = (), workers: int = 1) -> GammaEstimate:
    """Upper bound on inf I/J (``weighted``) or inf I0/J0 by multi-start descent of log-quotients.

    Each run stops when |grad| |u| <= tol, or flags degeneracy once |u| has
    drifted by the factor ``drift`` from its start.
    """
    if starts < 8:
        raise ValueError("gamma estimation needs at least 8 starts")
    return _estimate_gamma(problem, weighted, starts, seed, tol, max_iter, drift, extra_starts, workers)


def _estimate_gamma(problem, weighted, starts, seed, tol=1e-9, max_iter=MAX_ITER, drift=1e8,
                    extra_starts=(), workers=1) -> GammaEstimate:
    pool = (start_pool(problem, starts, seed) if starts > 0 else []) + [np.array(v, dtype=float) for v in extra_starts]
    if not pool:
        raise ValueError("no starting functions")
    runs = _run_all(lambda k, v: _minimize_quotient(problem, v, weighted, tol, max_iter, drift), pool, workers)
    best = min(runs, key=lambda r: r.f)
    statuses = [r.status for r in runs]
    value = rayleigh_quotient(problem, best.x, weighted)
    degenerate = best.status == "degenerate"
    if degenerate:
        log.info("gamma estimate degenerate (weighted=%s): quotient %.3e while |u| drifted", weighted, value)
    return GammaEstimate(value, best.x, weighted, degenerate, statuses)


def estimate_gamma_pair(problem: Problem, starts: int = 8, seed: int = 0, **kw):
    """Estimate gamma_0 and gamma_1 together, seeding each search with the other's minimiser.

    Both are infima over the same set, so sharing candidates can only improve
    either upper bound.
    """
    g0 = estimate_gamma(problem, False, starts, seed, **kw)
    g1 = estimate_gamma(problem, True, starts, seed, extra_starts=[g0.argmin], **kw)
    polish = _estimate_gamma(problem, False, 0, seed, extra_starts=[g1.argmin], **kw)
    if polish.value < g0.value:
        g0 = GammaEstimate(polish.value, polish.argmin, False, polish.degenerate or g0.degenerate,
                           g0.statuses + polish.statuses)
    q1 = rayleigh_quotient(problem, g0.argmin, True)
    if q1 < g1.value:
        g1 = GammaEstimate(q1, g0.argmin.copy(), True, g1.degenerate or g0.degenerate, g1.statuses)
    return g0, g1


# ----------------------------------------------------------------------------
# Minimising Phi_lambda
# ----------------------------------------------------------------------------


@dataclass
class TrivialVerdict:
    """Every start collapsed to u = 0."""

    lam: float
    starts: int
    final_norms: list = field(default_factory=list)


def _ray_scale(problem: Problem, v: np.ndarray, lam: float, sublevel: Optional[float]) -> float:
    """Scale along the ray through v with lowest energy on a log grid; unit ||.||_0 if none is negative."""
    scales = np.logspace(-6, 6, 121)
    energies = np.array([phi_value(problem, c * v, lam) for c in scales])
    if sublevel is not None:
        energies[[md.I_value(problem, c * v) > sublevel for c in scales]] = np.inf
    k = int(np.argmin(energies))
    if energies[k] < 0:
        return float(scales[k])
    return 1.0 / md.norm_zero(problem.extend(v), problem)


def _zero_norm_upper(problem: Problem, v: np.ndarray) -> float:
    """Cheap upper bound for ||v||_0 once M(v) <= 1."""
    m = md.modular_value(problem, v, md.M_SPEC)
    if m > 1.0:
        return math.inf
    return m ** (1.0 / problem.exponents.p_plus)


def minimize_phi_lambda(lam: float, starts: int, problem: Problem, seed: int = 0,
                        sublevel: Optional[float] = None, residual_tol: float = 1e-6,
                        collapse_norm: float = 1e-4, max_iter: int = MAX_ITER,
                        callback: Optional[Callable] = None, workers: int = 1,
                        start_functions: Optional[Sequence[np.ndarray]] = None):
    """Multi-start descent of Phi_lambda = I - lam J.

    With ``sublevel`` the search stays in D = {I <= sublevel} (scaled back onto
    its boundary when a step leaves it).  The best minimiser w is replaced by
    |w| and polished.  Returns an :class:`EigenPair`, or a
    :class:`TrivialVerdict` when every start collapses to ||u||_0 <= collapse_norm.
    ``callback(start_index, v)`` sees every iterate.
    """
    if lam <= 0:
        raise ValueError("lambda must be positive")
    pool = list(start_functions) if start_functions is not None else start_pool(problem, starts, seed)
    grad_tol = 1e-2 * residual_tol / math.sqrt(problem.cell)

    def fun(v):
        return phi_value(problem, v, lam)

    def grad(v):
        return defect_vector(problem, v, lam)

    project = None
    if sublevel is not None:
        def project(v):
            if md.I_value(problem, v) > sublevel:
                return manifold_scale(problem, v, sublevel) * v
            return v

    def stop(v, f, g):
        if np.linalg.norm(g) <= grad_tol:
            return "converged"
        if f > 0 and _zero_norm_upper(problem, v) <= collapse_norm:
            return "collapsed"
        return None

    def run(k, v0):
        v0 = _ray_scale(problem, v0, lam, sublevel) * v0
        if project is not None:
            v0 = project(v0)
        cb = None if callback is None else (lambda v: callback(k, v))
        return descend(fun, grad, v0, stop, max_iter, project, cb)

    runs = _run_all(run, pool, workers)
    norms = [md.norm_zero(problem.extend(r.x), problem) if np.any(r.x) else 0.0 for r in runs]
    collapsed = [n <= collapse_norm for n in norms]
    if all(collapsed):
        return TrivialVerdict(lam, len(runs), norms)

    live = [r for r, c in zip(runs, collapsed) if not c]
    best = min(live, key=lambda r: r.f)
    w = np.abs(best.x)
    polished = descend(fun, grad, w, stop, max_iter, project)
    v = polished.x
    if np.any(v < 0):
        v = np.abs(v)
    res = residual_norm(problem, grad(v))
    energy = fun(v)
    info = {"status": polished.status, "start_statuses": [r.status for r in runs],
            "zero_norms": norms, "sublevel": sublevel}
    if res > residual_tol:
        raise OptimizationError(f"descent did not reach residual {residual_tol:g} (got {res:.3e})",
                                EigenPair(problem.extend(v), lam, res, energy, info))
    return EigenPair(problem.extend(v), lam, res, energy, info)


# ----------------------------------------------------------------------------
# mu_1(t) scans
# ----------------------------------------------------------------------------


@dataclass
class LevelResult:
    """One level of a scan.

    ``lambda_t`` is the smallest lambda(u) over the critical points found at
    this level; ``residual`` belongs to the maximiser ``u`` with its own
    lambda(u).
    """

    t: float
    c1: float
    mu1: float
    lambda_t: float
    residual: float
    converged: bool
    u: np.ndarray
    critical_lambdas: list = field(default_factory=list)
    critical_residuals: list = field(default_factory=list)
    critical_J: list = field(default_factory=list)


@dataclass
class SpectralScan:
    """c1, mu1 = t / c1 and lambda(u_t) over levels t.

    ``lambda_star_t`` comes from the single maximiser found per level, so it
    is an upper-bound estimate of lambda*(t).
    """

    levels: list

    @property
    def t_values(self) -> np.ndarray:
        return np.array([lv.t for lv in self.levels])

    @property
    def c1_values(self) -> np.ndarray:
        return np.array([lv.c1 for lv in self.levels])

    @property
    def mu1_values(self) -> np.ndarray:
        return np.array([lv.mu1 for lv in self.levels])

    @property
    def lambda_star_t(self) -> np.ndarray:
        return np.array([lv.lambda_t for lv in self.levels])

    @property
    def converged(self) -> np.ndarray:
        return np.array([lv.converged for lv in self.levels])

    @property
    def mu_star_lower(self) -> float:
        return float(np.min(self.mu1_values))

    @property
    def mu_star_upper(self) -> float:
        return float(np.max(self.mu1_values))


def scan_mu1(t_values: Sequence[float], restarts: int, problem: Problem, seed: int = 0,
             tol: float = 1e-8, max_iter: int = MAX_ITER, workers: int = 1) -> SpectralScan:
    """Maximise J on each N_t; levels are stored in increasing order.

    A level whose restarts all fail keeps its best attempt with converged=False.
    """
    t_values = [float(t) for t in t_values]
    if not t_values:
        raise ValueError("empty list of levels")
    if any(t <= 0 for t in t_values):
        raise ValueError("levels must be positive")
    if t_values[0] > t_values[-1]:
        t_values = t_values[::-1]
    if any(b <= a for a, b in zip(t_values, t_values[1:])):
        raise ValueError("levels must be sorted without repeats")

    def level(k, t):
        try:
            best = maximize_J_on_manifold(t, restarts, problem, seed, tol, max_iter)
            converged = True
        except OptimizationError as exc:
            if exc.result is None:
                raise
            best, converged = exc.result, False
            log.warning("level t=%g did not converge (ratio %.2e)", t, best.gradient_ratio)
        points = best.critical_points or [best]
        lams = [lagrange_lambda(r.u, problem) for r in points]
        residuals = [residual_norm(problem, defect_vector(problem, r.u, lam)) for r, lam in zip(points, lams)]
        u = best.u
        lam = lagrange_lambda(u, problem)
        res = residual_norm(problem, defect_vector(problem, u, lam))
        return LevelResult(t, best.c1, t / best.c1, min(lams), res, converged, u,
                           lams, residuals, [r.c1 for r in points])

    return SpectralScan(_run_all(level, t_values, workers))


def existence_level(scan: SpectralScan, lam: float) -> Optional[float]:
    """A scanned level t_lam with lam <= mu1(t_lam) and some lower level t0 where mu1(t0) < lam.

    Then Phi_lam >= 0 on N_{t_lam} while Phi_lam(u_{t0}) < 0, so Phi_lam has a
    negative local minimum inside {I <= t_lam}.  None if the scan has no such pair.
    """
    t, mu = scan.t_values, scan.mu1_values
    for k in range(1, len(t)):
        if mu[k] >= lam and np.any(mu[:k] < lam):
            return float(t[k])
    return None


# ----------------------------------------------------------------------------
# Positivity probe and embedding constant
# ----------------------------------------------------------------------------


@dataclass
class PositivityProbe:
    verdict: str  # all-positive | all-zero | inconclusive
    gamma0: list
    gamma0_degenerate: list
    resolutions: list
    scan_t: list
    scan_lambda: list


def positivity_equivalence_probe(problem: Problem, t_values: Sequence[float] = (1e-4, 1e-2, 1.0, 1e2),
                                 restarts: int = 4, starts: int = 8, refine: bool = True,
                                 seed: int = 0) -> PositivityProbe:
    """Classify numerical evidence on whether gamma_1, gamma_0 and lambda_* are positive.

    Positive: gamma_0 estimates stay bounded away from 0 under refinement and
    no scanned lambda(u_t) drops below gamma_0.  Zero: the gamma_0 searches
    degenerate and scanned lambda(u_t) decays along the levels.  Anything else
    is inconclusive.  This is evidence, never proof.
    """
    problems = [problem]
    if refine:
        problems.append(problem.with_resolution(2 * problem.grid.resolution))
    gammas = [estimate_gamma_pair(pr, starts, seed)[0] for pr in problems]
    scan = scan_mu1(t_values, restarts, problem, seed)
    lam = scan.lambda_star_t
    g0 = [g.value for g in gammas]
    degenerate = [g.degenerate for g in gammas]

    positive = (not any(degenerate)
                and min(g0) >= 0.5 * max(g0) > 0
                and bool(np.all(lam >= 0.95 * g0[0])))
    decays = lam.min() <= 0.1 * lam.max() and (lam[0] == lam.min() or lam[-1] == lam.min())
    zero = all(degenerate) and decays
    verdict = "all-positive" if positive else "all-zero" if zero else "inconclusive"
    return PositivityProbe(verdict, g0, degenerate, [pr.grid.resolution for pr in problems],
                           list(scan.t_values), list(lam))


@dataclass
class EmbeddingReport:
    max_ratio: float
    median_ratio: float
    bounded: bool
    ratios: np.ndarray
    scales: np.ndarray


def embedding_samples(problem: Problem, samples: int, seed: int = 0,
                      scales: Sequence[float] = (1e-2, 1.0, 1e2)) -> tuple:
    from .grid import smooth_random_function
    funcs, used = [], []
    for k in range(samples):
        c = scales[k % len(scales)]
        funcs.append(c * smooth_random_function(problem.grid, seed + k).values)
        used.append(c)
    return funcs, np.array(used)


def embedding_constant_lowerbound(problem: Problem, samples: int = 300, seed: int = 0,
                                  scales: Sequence[float] = (1e-2, 1.0, 1e2)) -> EmbeddingReport:
    """max ||u||_{L^r} / ||u||_0 over random smooth X-functions at several scales.

    A lower bound on the best embedding constant; ``bounded`` flags max <= 10 x median.
    """
    if samples < 100:
        raise ValueError("need at least 100 samples")
    funcs, used = embedding_samples(problem, samples, seed, scales)
    ratios = np.array([md.lebesgue_norm(u, problem, problem.r_node) / md.norm_zero(u, problem)
                       for u in funcs])
    mx, med = float(ratios.max()), float(np.median(ratios))
    return EmbeddingReport(mx, med, mx <= 10.0 * med, ratios, used)
