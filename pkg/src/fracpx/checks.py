"""Randomised consistency suites run by ``fracpx selftest``.

Each suite draws reproducible random grid functions, checks one family of
inequalities or identities and reports how many samples passed.  Solver
failures count as failed samples rather than aborting the suite.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import modular as md
from .grid import Problem
from .operator import phi_value, defect_vector, weak_pairing

SLACK = 1e-7


@dataclass
class SuiteResult:
    name: str
    passed: int
    total: int
    failures: list = field(default_factory=list)
    skipped: str = ""

    @property
    def ok(self) -> bool:
        return bool(self.skipped) or self.passed == self.total

    def line(self) -> str:
        if self.skipped:
            return f"{self.name:<24} skipped ({self.skipped})"
        verdict = "PASS" if self.ok else "FAIL"
        return f"{self.name:<24} {verdict}  {self.passed}/{self.total}"


def _leq(a: float, b: float, slack: float = SLACK) -> bool:
    return a <= b + slack * max(abs(a), abs(b), 1e-300)


def _scaled_samples(problem: Problem, count: int, seed: int, in_X: bool = True):
    """Random functions on Omega, rescaled by log-uniform factors in [1e-2, 1e2]."""
    rng = np.random.default_rng(seed)
    n = problem.m
    for _ in range(count):
        v = rng.uniform(-1.0, 1.0, n) * 10.0 ** rng.uniform(-2.0, 2.0)
        yield v


def _run(name: str, samples, check: Callable) -> SuiteResult:
    res = SuiteResult(name, 0, 0)
    for k, v in enumerate(samples):
        res.total += 1
        try:
            ok, why = check(v)
        except (md.LuxemburgError, FloatingPointError, ValueError) as exc:
            ok, why = False, f"{type(exc).__name__}: {exc}"
        if ok:
            res.passed += 1
        elif len(res.failures) < 5:
            res.failures.append(f"sample {k}: {why}")
    return res


def modular_norm_check(modular: Callable, norm: Callable, lo: float, hi: float, slack: float = SLACK):
    """Return a per-sample check of the unit-level identity and the power sandwich.

    For norm n: modular(v / n) = 1; n < 1 gives n^hi <= modular <= n^lo and
    n > 1 gives n^lo <= modular <= n^hi.
    """

    def check(v):
        n = norm(v)
        m = modular(v)
        unit = modular(v / n)
        if abs(unit - 1.0) > slack:
            return False, f"modular(v/|v|) = {unit!r}"
        if n < 1.0:
            ok = _leq(n ** hi, m, slack) and _leq(m, n ** lo, slack)
        else:
            ok = _leq(n ** lo, m, slack) and _leq(m, n ** hi, slack)
        if not ok:
            return False, f"norm {n!r}, modular {m!r}"
        # norm-vs-1 and modular-vs-1 fall on the same side
        side_n = 0 if abs(n - 1.0) <= slack else np.sign(n - 1.0)
        side_m = 0 if abs(m - 1.0) <= slack else np.sign(m - 1.0)
        if side_n != side_m and side_n != 0 and side_m != 0:
            return False, f"norm {n!r} and modular {m!r} on opposite sides of 1"
        return True, ""

    return check


def rho_suite(problem: Problem, count: int, seed: int, tol: float) -> SuiteResult:
    f = problem.exponents
    if problem.beta > 0 and np.any(f.q_values < f.p_diag):
        return SuiteResult("rho/norm_1", 0, 0, skipped="needs q(x) >= p(x,x)")
    spec = md.rho_spec(problem)
    lo = min(f.p_minus, f.q_minus)
    hi = max(f.p_plus, f.q_plus)
    check = modular_norm_check(lambda v: md.modular_value(problem, v, spec),
                               lambda v: md.norm_modular(v, problem, spec, tol), lo, hi)
    return _run("rho/norm_1", _scaled_samples(problem, count, seed), check)


def seminorm_suite(problem: Problem, count: int, seed: int, tol: float) -> SuiteResult:
    f = problem.exponents
    check = modular_norm_check(lambda v: md.modular_value(problem, v, md.M_SPEC),
                               lambda v: md.norm_modular(v, problem, md.M_SPEC, tol), f.p_minus, f.p_plus)
    return _run("M/norm_0", _scaled_samples(problem, count, seed + 1), check)


def lebesgue_suite(problem: Problem, count: int, seed: int, tol: float) -> SuiteResult:
    e = problem.p_node
    check = modular_norm_check(lambda v: md.lebesgue_value(problem, v, e),
                               lambda v: md.lebesgue_norm(v, problem, e, tol), float(e.min()), float(e.max()))
    return _run("lebesgue/norm_p", _scaled_samples(problem, count, seed + 2), check)


def solver_suite(problem: Problem, count: int, seed: int, tol: float) -> SuiteResult:
    """The Luxemburg solver meets its own residual tolerance."""

    def check(v):
        n = md.norm_zero(v, problem, tol)
        res = abs(md.modular_value(problem, v / n, md.M_SPEC) - 1.0)
        return res <= max(tol, 1e-15) * 10, f"residual {res:.3e}"

    return _run("luxemburg-solver", _scaled_samples(problem, count, seed + 3), check)


def _fd_check(fun: Callable, pairing: Callable, grad: Callable, eps: float = 1e-5, rel: float = 1e-6):
    def check(pair):
        v, phi = pair
        fd = (fun(v + eps * phi) - fun(v - eps * phi)) / (2.0 * eps)
        an = pairing(v, phi)
        scale = float(np.sum(np.abs(grad(v) * phi)))
        err = abs(fd - an) / max(scale, 1e-300)
        return err <= rel, f"relative error {err:.2e}"

    return check


def _pairs(problem: Problem, count: int, seed: int):
    rng = np.random.default_rng(seed)
    for _ in range(count):
        yield rng.uniform(-1.0, 1.0, problem.m), rng.uniform(-1.0, 1.0, problem.m)


def derivative_suite(problem: Problem, count: int, seed: int) -> SuiteResult:
    rho = md.rho_spec(problem)
    Ispec = md.I_spec(problem)
    lam = 1.7
    checks = [
        _fd_check(lambda v: md.modular_value(problem, v, rho), lambda v, w: md.rho_prime_pairing(v, w, problem),
                  lambda v: md.modular_gradient(problem, v, rho)),
        _fd_check(lambda v: md.modular_value(problem, v, Ispec), lambda v, w: md.I_prime_pairing(v, w, problem),
                  lambda v: md.modular_gradient(problem, v, Ispec)),
        _fd_check(lambda v: md.J_value(problem, v), lambda v, w: md.J_prime_pairing(v, w, problem),
                  lambda v: md.J_gradient(problem, v)),
        _fd_check(lambda v: phi_value(problem, v, lam), lambda v, w: float(defect_vector(problem, v, lam) @ w),
                  lambda v: defect_vector(problem, v, lam)),
    ]

    def check(pair):
        for c in checks:
            ok, why = c(pair)
            if not ok:
                return False, why
        return True, ""

    return _run("derivatives", _pairs(problem, count, seed + 4), check)


def holder_suite(problem: Problem, count: int, seed: int, tol: float) -> SuiteResult:
    def check(pair):
        u, v = pair
        out = md.holder_pairing_check(u, v, problem, tol=tol)
        return out.passed, f"lhs {out.lhs!r} > rhs {out.rhs!r}"

    return _run("holder", _pairs(problem, count, seed + 5), check)


def identity_suite(problem: Problem, count: int, seed: int) -> SuiteResult:
    def check(pair):
        u = problem.extend(pair[0])
        a, b = weak_pairing(u, u, problem), md.I0_value(problem, pair[0])
        err = abs(a - b) / abs(b)
        return err <= 1e-12, f"relative gap {err:.2e}"

    return _run("weak-pairing-identity", _pairs(problem, count, seed + 6), check)


def run_selftest(problem: Problem, samples: int = 1000, seed: int = 0,
                 tol: float = md.LUXEMBURG_TOL, fd_samples: int = 100) -> list:
    return [
        solver_suite(problem, min(samples, 200), seed, tol),
        rho_suite(problem, samples, seed, tol),
        seminorm_suite(problem, samples, seed, tol),
        lebesgue_suite(problem, samples, seed, tol),
        derivative_suite(problem, fd_samples, seed),
        holder_suite(problem, fd_samples, seed, tol),
        identity_suite(problem, fd_samples, seed),
    ]
