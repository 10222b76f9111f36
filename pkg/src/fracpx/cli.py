"""Command line entry point: ``fracpx <command> --config run.toml ...``.

Commands: validate, norms, scan, eigen, gamma, selftest.  File outputs go to
``--out`` and are written atomically; every CSV starts with a
``# config_hash=...`` line and every JSON record carries ``config_hash``.

Exit codes: 0 success, 1 failed validation or self-test, 2 usage/config
errors and optimiser failures.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import re
import sys
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from . import modular as md
from . import variational as va
from .checks import run_selftest
from .config import ConfigError, SolverSettings, config_hash, load_config
from .exponents import ExponentField, find_A1_witness, find_A2_witness, validate_conditions, validate_growth_G
from .grid import Problem, build_grid
from .operator import EigenPair

log = logging.getLogger("fracpx")

RESIDUAL_NOTE = "Euclidean norm of the nodal defect vector times h^(N/2); an L2 surrogate, not a dual norm"


class UsageError(Exception):
    pass


# ----------------------------------------------------------------------------
# Output helpers
# ----------------------------------------------------------------------------


def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")


def write_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def csv_text(digest: str, header: list, rows: list) -> str:
    lines = [f"# config_hash={digest}", ",".join(header)]
    lines += [",".join(fmt(v) for v in row) for row in rows]
    return "\n".join(lines) + "\n"


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else str(x)
    return obj


def json_text(record: dict) -> str:
    return json.dumps(_jsonable(record), indent=2, sort_keys=True) + "\n"


@dataclass
class RunRecord:
    config_hash: str
    command: dict
    outputs: dict = field(default_factory=dict)
    files: list = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"config_hash": self.config_hash, "command": self.command,
                "outputs": {**self.outputs, "files": list(self.files)}, "metadata": self.metadata}


class Session:
    """Resolved configuration plus the shared bookkeeping of one command."""

    def __init__(self, args, command: str, params: dict):
        self.args = args
        self.config, solver = load_config(args.config)
        if args.seed is not None:
            solver = solver.__class__(**{**solver.to_dict(), "seed": args.seed})
        if args.restarts is not None:
            solver = solver.__class__(**{**solver.to_dict(), "restarts": args.restarts})
        self.solver: SolverSettings = solver
        self.digest = config_hash(self.config)
        self.out = Path(args.out) if args.out else None
        self.started = time.perf_counter()
        self.record = RunRecord(self.digest, {"name": command, **params})
        self._problem = None

    @property
    def problem(self) -> Problem:
        if self._problem is None:
            self._problem = Problem.from_config(self.config)
        return self._problem

    def require_out(self) -> Path:
        if self.out is None:
            raise UsageError("this command needs --out DIR")
        return self.out

    def emit(self, name: str, text: str) -> Path:
        path = self.require_out() / name
        write_atomic(path, text)
        self.record.files.append(str(path))
        return path

    def finish(self) -> dict:
        meta = self.record.metadata
        meta.setdefault("seed", self.solver.seed)
        meta.setdefault("tolerances", {k: v for k, v in self.solver.to_dict().items()
                                       if k.endswith("tol") or k == "collapse_norm"})
        meta.setdefault("truncation_bound", self.problem.truncation_bound)
        meta.setdefault("resolution", self.config.nodes_per_axis)
        meta["version"] = __version__
        if not self.args.deterministic:
            meta["wall_time_s"] = time.perf_counter() - self.started
        if self.out is not None:
            path = self.out / "run.json"
            self.record.files.append(str(path))
            write_atomic(path, json_text(self.record.to_dict()))
        return self.record.to_dict()


def _node_rows(problem: Problem, *columns) -> tuple:
    dim = problem.dimension
    header = ["node"] + ["x", "y"][:dim]
    rows = []
    for k in range(problem.grid.n_nodes):
        rows.append([k, *problem.grid.coords[k], *(c[k] for c in columns)])
    return header, rows


# ----------------------------------------------------------------------------
# Commands
# ----------------------------------------------------------------------------


def cmd_validate(args) -> int:
    config, _ = load_config(args.config)
    grid = build_grid(config)
    field_ = ExponentField.sample(grid.coords, grid.omega_index, config.p, config.q, config.r)
    report = validate_conditions(field_, config.s, config.dimension)
    growth = validate_growth_G(field_, config.s, config.dimension)
    for line in report.lines() + growth.lines():
        print(line)
    a1, a2 = find_A1_witness(grid, field_), find_A2_witness(grid, field_)
    for name, ball in (("A1", a1), ("A2", a2)):
        if ball is None:
            print(f"{name:<14} none found")
        else:
            print(f"{name:<14} witness ball center={tuple(round(c, 6) for c in ball.center)} radius={ball.radius:.6g}")
    ok = all(report[name].passed for name in ("P", "Q", "R"))
    return 0 if ok else 1


def read_function(path: Path, n_nodes: int) -> np.ndarray:
    """Nodal values from JSON (array) or CSV/text (last column, '#' comments, optional header)."""
    text = path.read_text()
    if path.suffix == ".json":
        values = np.asarray(json.loads(text), dtype=float).ravel()
    else:
        vals = []
        for line in text.splitlines():
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            last = re.split(r"[,\s]+", line)[-1]
            try:
                vals.append(float(last))
            except ValueError:
                if vals:
                    raise UsageError(f"{path}: non-numeric value {last!r}")
        values = np.asarray(vals, dtype=float)
    if values.size != n_nodes:
        raise UsageError(f"{path}: {values.size} values but the grid has {n_nodes} nodes")
    return values


def cmd_norms(args) -> int:
    s = Session(args, "norms", {"function": args.function})
    pr = s.problem
    u = read_function(Path(args.function), pr.grid.n_nodes)
    outside = np.flatnonzero((u != 0) & ~pr.grid.omega_mask)
    if outside.size:
        raise UsageError(f"function is not in X: nonzero at node {outside[0]} outside Omega")
    v = pr.restrict(u)
    tol = s.solver.luxemburg_tol
    out = {
        "rho": md.rho(v, pr), "M": md.M(v, pr),
        "I": md.I_value(pr, v), "I0": md.I0_value(pr, v), "J": md.J_value(pr, v), "J0": md.J0_value(pr, v),
        "norm_1": md.norm_rho(v, pr, tol), "norm_0": md.norm_zero(v, pr, tol),
        "lebesgue_p": md.lebesgue_norm(v, pr, pr.p_node, tol), "lebesgue_r": md.lebesgue_norm(v, pr, pr.r_node, tol),
    }
    s.record.outputs.update(out)
    if s.out is not None:
        s.emit("norms.json", json_text({"config_hash": s.digest, **out}))
    record = s.finish()
    print(json_text(record), end="")
    return 0


def cmd_scan(args) -> int:
    t_values = args.t if args.t is not None else None
    s = Session(args, "scan", {"t": t_values, "restarts": args.restarts})
    if t_values is None:
        t_values = list(s.solver.t_values)
    if not t_values:
        raise UsageError("empty list of levels")
    s.record.command["t"] = t_values
    s.require_out()
    pr = s.problem
    scan = va.scan_mu1(t_values, s.solver.restarts, pr, s.solver.seed, s.solver.manifold_tol,
                       s.solver.max_iter, s.solver.workers)
    rows = [[lv.t, lv.c1, lv.mu1, lv.lambda_t, lv.converged] for lv in scan.levels]
    s.emit("scan.csv", csv_text(s.digest, ["t", "c1", "mu1", "lambda_star_t", "converged"], rows))
    summary = {
        "config_hash": s.digest,
        "mu_star_lower": scan.mu_star_lower, "mu_star_upper": scan.mu_star_upper,
        "lambda_star_t_is_upper_bound": True,
        "levels": len(scan.levels), "converged_levels": int(scan.converged.sum()),
        "residuals": [lv.residual for lv in scan.levels],
    }
    s.emit("summary.json", json_text(summary))
    s.record.outputs.update({"mu_star_lower": scan.mu_star_lower, "mu_star_upper": scan.mu_star_upper})
    s.record.metadata["residual_norm"] = RESIDUAL_NOTE
    s.finish()
    for row in rows:
        print(",".join(fmt(v) for v in row))
    return 0 if scan.converged.any() else 2


LAMBDA_RE = re.compile(r"^\s*([0-9.eE+-]+)?\s*\*?\s*(gamma[01])\s*$")


def _gammas(s: Session):
    return va.estimate_gamma_pair(s.problem, s.solver.starts, s.solver.seed, max_iter=s.solver.max_iter,
                                  workers=s.solver.workers)


def resolve_lambda(expr: str, s: Session) -> tuple:
    """A number, or a multiple of an estimated gamma such as ``2*gamma1``."""
    try:
        return float(expr), {}
    except ValueError:
        pass
    m = LAMBDA_RE.match(expr)
    if not m:
        raise UsageError(f"cannot read lambda {expr!r}; use a number or e.g. 2*gamma1")
    factor = float(m.group(1)) if m.group(1) else 1.0
    g0, g1 = _gammas(s)
    base = g0.value if m.group(2) == "gamma0" else g1.value
    return factor * base, {"gamma0_estimate": g0.value, "gamma1_estimate": g1.value}


def cmd_eigen(args) -> int:
    s = Session(args, "eigen", {"lambda": args.lam, "starts": args.starts, "sublevel": args.sublevel})
    s.require_out()
    lam, extra = resolve_lambda(args.lam, s)
    if not lam > 0:
        raise UsageError("lambda must be positive")
    starts = args.starts or s.solver.starts
    pr = s.problem
    s.record.metadata.update(extra)
    s.record.metadata["residual_norm"] = RESIDUAL_NOTE
    try:
        result = va.minimize_phi_lambda(lam, starts, pr, s.solver.seed, sublevel=args.sublevel,
                                        residual_tol=s.solver.residual_tol, collapse_norm=s.solver.collapse_norm,
                                        max_iter=s.solver.max_iter, workers=s.solver.workers)
    except va.OptimizationError as exc:
        s.record.outputs.update({"verdict": "failed", "lambda": lam, "message": str(exc)})
        s.emit("eigen.json", json_text({"config_hash": s.digest, "verdict": "failed", "lambda": lam,
                                        "message": str(exc)}))
        s.finish()
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if isinstance(result, EigenPair):
        u = np.asarray(result.u)
        out = {"verdict": "eigenpair", "lambda": lam, "energy": result.energy, "residual": result.residual,
               "lagrange_lambda": va.lagrange_lambda(result.u, pr)}
    else:
        u = np.zeros(pr.grid.n_nodes)
        out = {"verdict": "trivial", "lambda": lam, "energy": 0.0, "residual": 0.0,
               "max_final_norm_0": max(result.final_norms)}
    header, rows = _node_rows(pr, u)
    s.emit("u.csv", csv_text(s.digest, header + ["u"], rows))
    s.emit("eigen.json", json_text({"config_hash": s.digest, **out}))
    s.record.outputs.update(out)
    s.finish()
    print(json_text(out), end="")
    return 0


def cmd_gamma(args) -> int:
    s = Session(args, "gamma", {"starts": args.starts})
    if args.starts:
        s.solver = s.solver.__class__(**{**s.solver.to_dict(), "starts": args.starts})
    if s.solver.starts < 8:
        raise UsageError("gamma estimation needs at least 8 starts")
    g0, g1 = _gammas(s)
    pr = s.problem
    out = {"gamma0": g0.value, "gamma1": g1.value, "gamma0_degenerate": g0.degenerate,
           "gamma1_degenerate": g1.degenerate, "upper_bounds": True}
    if s.out is not None:
        header, rows = _node_rows(pr, np.asarray(pr.extend(g0.argmin)), np.asarray(pr.extend(g1.argmin)))
        s.emit("gamma_argmin.csv", csv_text(s.digest, header + ["u_gamma0", "u_gamma1"], rows))
        s.emit("gamma.json", json_text({"config_hash": s.digest, **out}))
    s.record.outputs.update(out)
    s.finish()
    print(json_text(out), end="")
    return 0


def cmd_selftest(args) -> int:
    s = Session(args, "selftest", {"samples": args.samples})
    samples = args.samples or s.solver.samples
    results = run_selftest(s.problem, samples, s.solver.seed, s.solver.luxemburg_tol)
    for res in results:
        print(res.line())
        for why in res.failures[:3]:
            print(f"    {why}")
    ok = all(r.ok for r in results)
    s.record.outputs.update({r.name: {"passed": r.passed, "total": r.total, "skipped": r.skipped} for r in results})
    s.record.outputs["all_passed"] = ok
    if s.out is not None:
        s.finish()
    return 0 if ok else 1


# ----------------------------------------------------------------------------
# Parser
# ----------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="TOML run configuration")
    common.add_argument("--seed", type=int, default=None, help="override solver.seed")
    common.add_argument("--restarts", type=int, default=None, help="override solver.restarts")
    common.add_argument("--out", default=None, help="output directory")
    common.add_argument("--deterministic", action="store_true",
                        help="fixed-order summation and no wall-clock metadata (byte-reproducible output)")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="fracpx", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"fracpx {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("validate", parents=[common], help="check exponent conditions")

    p = sub.add_parser("norms", parents=[common], help="modulars and norms of a nodal function")
    p.add_argument("--function", required=True, help="CSV/text column or JSON array of nodal values")

    p = sub.add_parser("scan", parents=[common], help="c1(t), mu1(t) and lambda*(t) over levels")
    p.add_argument("--t", type=float, nargs="+", default=None, help="levels (default: solver.t_values)")

    p = sub.add_parser("eigen", parents=[common], help="minimise Phi_lambda for an eigenpair")
    p.add_argument("--lambda", dest="lam", required=True, help="number or multiple like 2*gamma1 / 0.5*gamma0")
    p.add_argument("--starts", type=int, default=None)
    p.add_argument("--sublevel", type=float, default=None, help="keep the search inside {I <= value}")

    p = sub.add_parser("gamma", parents=[common], help="upper estimates of gamma_0 and gamma_1")
    p.add_argument("--starts", type=int, default=None)

    p = sub.add_parser("selftest", parents=[common], help="randomised consistency suites")
    p.add_argument("--samples", type=int, default=None)
    return parser


COMMANDS = {"validate": cmd_validate, "norms": cmd_norms, "scan": cmd_scan, "eigen": cmd_eigen,
            "gamma": cmd_gamma, "selftest": cmd_selftest}


def main(argv: Optional[list] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    md.set_deterministic(args.deterministic)
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    finally:
        md.set_deterministic(False)


if __name__ == "__main__":
    sys.exit(main())
