"""Variable exponent fields p(x, y), q(x), r(x) and the conditions placed on them.

Exponents are described by named analytic families (or dense node samples) and
then sampled on a grid.  Every structural condition is checked on the sampled
values only; nothing here knows about continuity.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Optional, Sequence

import numpy as np

FAMILIES = ("constant", "affine", "bump", "samples")


def smooth_bump(t: np.ndarray) -> np.ndarray:
    """C-infinity profile equal to 1 at t=0 and vanishing for |t| >= 1."""
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    inside = np.abs(t) < 1.0
    ti = t[inside]
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - ti * ti))
    return out


@dataclass(frozen=True)
class ExponentFamily:
    """A named exponent profile.

    ``constant``: ``value``.
    ``affine``: ``base + slope . x``.
    ``bump``: ``base + height * bump(|x - center| / radius)``; a negative
    height gives a dip.
    ``samples``: explicit node values in lattice order (``values``).  For the
    pair exponent p either n values (symmetrized as (f(x) + f(y)) / 2) or a
    full n x n matrix may be given.
    """

    kind: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in FAMILIES:
            raise ValueError(f"unknown exponent family {self.kind!r}; expected one of {FAMILIES}")
        required = {
            "constant": ("value",),
            "affine": ("base", "slope"),
            "bump": ("base", "height", "center", "radius"),
            "samples": ("values",),
        }[self.kind]
        missing = [k for k in required if k not in self.params]
        if missing:
            raise ValueError(f"exponent family {self.kind!r} is missing parameter(s): {', '.join(missing)}")

    @classmethod
    def constant(cls, value: float) -> "ExponentFamily":
        return cls("constant", {"value": float(value)})

    @classmethod
    def affine(cls, base: float, slope: Sequence[float]) -> "ExponentFamily":
        return cls("affine", {"base": float(base), "slope": tuple(float(v) for v in np.atleast_1d(slope))})

    @classmethod
    def bump(cls, base: float, height: float, center: Sequence[float], radius: float) -> "ExponentFamily":
        return cls("bump", {
            "base": float(base),
            "height": float(height),
            "center": tuple(float(v) for v in np.atleast_1d(center)),
            "radius": float(radius),
        })

    @classmethod
    def samples(cls, values) -> "ExponentFamily":
        return cls("samples", {"values": tuple(float(v) for v in np.ravel(values))})

    def pointwise(self, coords: np.ndarray) -> np.ndarray:
        """Evaluate the profile at points ``coords`` of shape (k, N)."""
        coords = np.atleast_2d(np.asarray(coords, dtype=float))
        k, dim = coords.shape
        prm = self.params
        if self.kind == "constant":
            return np.full(k, prm["value"])
        if self.kind == "affine":
            slope = np.asarray(prm["slope"], dtype=float)
            if slope.size != dim:
                raise ValueError(f"affine slope has {slope.size} components, expected {dim}")
            return prm["base"] + coords @ slope
        if self.kind == "bump":
            center = np.asarray(prm["center"], dtype=float)
            if center.size != dim:
                raise ValueError(f"bump center has {center.size} components, expected {dim}")
            dist = np.linalg.norm(coords - center, axis=1)
            return prm["base"] + prm["height"] * smooth_bump(dist / prm["radius"])
        values = np.asarray(prm["values"], dtype=float)
        if values.size != k:
            raise ValueError(f"sampled exponent has {values.size} values, grid has {k} nodes")
        return values.copy()

    def pair_values(self, coords: np.ndarray) -> np.ndarray:
        """Symmetric pair exponent on all node pairs."""
        coords = np.atleast_2d(np.asarray(coords, dtype=float))
        k = coords.shape[0]
        if self.kind == "samples" and len(self.params["values"]) == k * k:
            return np.asarray(self.params["values"], dtype=float).reshape(k, k)
        f = self.pointwise(coords)
        return 0.5 * (f[:, None] + f[None, :])

    def to_dict(self) -> dict:
        return {"family": self.kind, **{k: list(v) if isinstance(v, tuple) else v for k, v in self.params.items()}}


@dataclass(frozen=True)
class ExponentField:
    """Sampled exponents.

    ``p_values`` covers every node pair of the truncation box, ``q_values``
    and ``r_values`` cover the Omega nodes listed in ``omega_index``.
    """

    p_values: np.ndarray
    q_values: np.ndarray
    r_values: np.ndarray
    omega_index: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.p_values, dtype=float)
        if p.ndim != 2 or p.shape[0] != p.shape[1]:
            raise ValueError("p_values must be a square matrix over node pairs")
        m = len(self.omega_index)
        if np.shape(self.q_values) != (m,) or np.shape(self.r_values) != (m,):
            raise ValueError("q_values and r_values must have one entry per Omega node")
        for name in ("p_values", "q_values", "r_values", "omega_index"):
            arr = np.array(getattr(self, name))
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @classmethod
    def sample(cls, coords: np.ndarray, omega_index: np.ndarray, p: ExponentFamily,
               q: Optional[ExponentFamily], r: ExponentFamily) -> "ExponentField":
        """Sample families on grid nodes; ``q=None`` means q(x) = p(x, x)."""
        omega_index = np.asarray(omega_index, dtype=int)
        p_values = p.pair_values(coords)
        if q is None:
            q_values = np.diag(p_values)[omega_index].copy()
        else:
            q_values = q.pointwise(coords)[omega_index]
        r_values = r.pointwise(coords)[omega_index]
        return cls(p_values, q_values, r_values, omega_index)

    @property
    def p_diag(self) -> np.ndarray:
        """p(x, x) at the Omega nodes."""
        return np.diag(self.p_values)[self.omega_index]

    p_minus = property(lambda self: float(self.p_values.min()))
    p_plus = property(lambda self: float(self.p_values.max()))
    q_minus = property(lambda self: float(self.q_values.min()))
    q_plus = property(lambda self: float(self.q_values.max()))
    r_minus = property(lambda self: float(self.r_values.min()))
    r_plus = property(lambda self: float(self.r_values.max()))

    def extremes(self) -> dict:
        return {
            "p_minus": self.p_minus, "p_plus": self.p_plus,
            "q_minus": self.q_minus, "q_plus": self.q_plus,
            "r_minus": self.r_minus, "r_plus": self.r_plus,
        }


@dataclass(frozen=True)
class ProblemConfig:
    """Problem data: dimension, fractional order, Omega, coefficients and exponents.

    The truncation box defaults to Omega enlarged on every side by ``margin``
    times the Euclidean diameter of Omega.  ``q=None`` stands for q = p(x, x).
    """

    dimension: int
    s: float
    omega: tuple
    p: ExponentFamily
    r: ExponentFamily
    q: Optional[ExponentFamily] = None
    alpha: float = 0.0
    beta: float = 0.0
    resolution: Optional[int] = None
    margin: float = 1.0
    box: Optional[tuple] = None

    def __post_init__(self):
        if self.dimension not in (1, 2):
            raise ValueError(f"dimension must be 1 or 2, got {self.dimension}")
        if not 0.0 < self.s < 1.0:
            raise ValueError(f"s must lie in (0, 1), got {self.s}")
        if self.alpha < 0 or self.beta < 0:
            raise ValueError("alpha and beta must be nonnegative")
        omega = tuple(tuple(float(v) for v in ax) for ax in self.omega)
        if len(omega) != self.dimension or any(len(ax) != 2 or ax[0] >= ax[1] for ax in omega):
            raise ValueError(f"omega must give {self.dimension} (lower, upper) pairs with lower < upper")
        object.__setattr__(self, "omega", omega)
        if self.box is not None:
            box = tuple(tuple(float(v) for v in ax) for ax in self.box)
            object.__setattr__(self, "box", box)
        if self.margin <= 0:
            raise ValueError("margin must be positive")

    @property
    def omega_diameter(self) -> float:
        return float(np.linalg.norm([hi - lo for lo, hi in self.omega]))

    @property
    def truncation_box(self) -> tuple:
        if self.box is not None:
            return self.box
        pad = self.margin * self.omega_diameter
        return tuple((lo - pad, hi + pad) for lo, hi in self.omega)

    @property
    def nodes_per_axis(self) -> int:
        if self.resolution is not None:
            return int(self.resolution)
        return 64 if self.dimension == 1 else 24

    def replace(self, **changes) -> "ProblemConfig":
        from dataclasses import replace
        return replace(self, **changes)

    def to_dict(self) -> dict:
        return {
            "dimension": self.dimension,
            "s": self.s,
            "omega": [list(ax) for ax in self.omega],
            "box": [list(ax) for ax in self.truncation_box],
            "alpha": self.alpha,
            "beta": self.beta,
            "resolution": self.nodes_per_axis,
            "p": self.p.to_dict(),
            "q": None if self.q is None else self.q.to_dict(),
            "r": self.r.to_dict(),
        }


# ----------------------------------------------------------------------------
# Validation
# ----------------------------------------------------------------------------


@dataclass
class ConditionResult:
    name: str
    passed: bool
    detail: str = ""
    witness: Any = None


@dataclass
class ValidationReport:
    results: list = field(default_factory=list)

    def add(self, name: str, passed: bool, detail: str = "", witness: Any = None) -> None:
        self.results.append(ConditionResult(name, bool(passed), detail, witness))

    def __getitem__(self, name: str) -> ConditionResult:
        for res in self.results:
            if res.name == name:
                return res
        raise KeyError(name)

    def __contains__(self, name: str) -> bool:
        return any(res.name == name for res in self.results)

    @property
    def passed(self) -> bool:
        return all(res.passed for res in self.results)

    def lines(self) -> list:
        out = []
        for res in self.results:
            line = f"{res.name:<14} {'PASS' if res.passed else 'FAIL'}"
            if res.detail:
                line += f"  {res.detail}"
            out.append(line)
        return out


def critical_exponent(p_diag, s: float, dimension: int):
    """Fractional critical exponent N p(x,x) / (N - s p(x,x)).

    Raises ValueError wherever s p(x, x) >= N.
    """
    p = np.asarray(p_diag, dtype=float)
    sp = s * p
    if np.any(sp >= dimension):
        bad = np.flatnonzero(np.atleast_1d(sp) >= dimension)
        raise ValueError(f"s*p(x,x) >= N at node(s) {bad.tolist()}; p must stay below N/s")
    out = dimension * p / (dimension - sp)
    return float(out) if out.ndim == 0 else out


def _critical_or_inf(p_diag: np.ndarray, s: float, dimension: int) -> np.ndarray:
    sp = s * p_diag
    out = np.full(p_diag.shape, np.inf)
    ok = sp < dimension
    out[ok] = dimension * p_diag[ok] / (dimension - sp[ok])
    return out


def validate_conditions(field: ExponentField, s: float, dimension: int) -> ValidationReport:
    """Check symmetry and bounds of p, and the subcritical bounds on q and r.

    Also records whether q(x) >= p(x, x) on Omega, which the modular-norm
    inequalities assume.
    """
    report = ValidationReport()
    P = field.p_values
    upper = dimension / s

    asym = np.argwhere(P != P.T)
    lo = np.argwhere(P <= 1.0)
    hi = np.argwhere(P >= upper)
    if asym.size:
        i, j = asym[0]
        report.add("P", False, f"p not symmetric at pair ({i}, {j}): {P[i, j]!r} != {P[j, i]!r}", (int(i), int(j)))
    elif lo.size:
        i, j = lo[0]
        report.add("P", False, f"p({i},{j}) = {P[i, j]:.6g} <= 1", (int(i), int(j)))
    elif hi.size:
        i, j = hi[0]
        report.add("P", False, f"p({i},{j}) = {P[i, j]:.6g} >= N/s = {upper:.6g}", (int(i), int(j)))
    else:
        report.add("P", True, f"1 < p in [{field.p_minus:.6g}, {field.p_plus:.6g}] < N/s = {upper:.6g}, symmetric")

    crit = _critical_or_inf(field.p_diag, s, dimension)
    for name, vals in (("Q", field.q_values), ("R", field.r_values)):
        bad = np.flatnonzero((vals <= 1.0) | (vals >= crit))
        if bad.size:
            k = int(bad[0])
            node = int(field.omega_index[k])
            report.add(name, False,
                       f"{name.lower()} = {vals[k]:.6g} at node {node} outside (1, p_s*) with p_s* = {crit[k]:.6g}",
                       node)
        else:
            report.add(name, True, f"{name.lower()} in [{vals.min():.6g}, {vals.max():.6g}] below p_s*")

    below = np.flatnonzero(field.q_values < field.p_diag)
    if below.size:
        node = int(field.omega_index[below[0]])
        report.add("q>=p(x,x)", False, f"q < p(x,x) at node {node}", node)
    else:
        report.add("q>=p(x,x)", True)
    return report


def validate_growth_G(field: ExponentField, s: float, dimension: int) -> ValidationReport:
    """Check p+ < r- <= r+ < q- <= q+ < N p- / (N - s p-) link by link."""
    report = ValidationReport()
    pm, pp = field.p_minus, field.p_plus
    rm, rp, qm, qp = field.r_minus, field.r_plus, field.q_minus, field.q_plus
    crit = dimension * pm / (dimension - s * pm) if s * pm < dimension else np.inf
    links = [
        ("p+ < r-", pp, rm, True),
        ("r- <= r+", rm, rp, False),
        ("r+ < q-", rp, qm, True),
        ("q- <= q+", qm, qp, False),
        ("q+ < Np-/(N-sp-)", qp, crit, True),
    ]
    for label, a, b, strict in links:
        ok = a < b if strict else a <= b
        if not ok:
            report.add("G", False, f"fails at {label}: {a:.6g} vs {b:.6g}", label)
            return report
    report.add("G", True, f"{pp:.6g} < {rm:.6g} <= {rp:.6g} < {qm:.6g} <= {qp:.6g} < {crit:.6g}")
    return report


# ----------------------------------------------------------------------------
# Local ordering witnesses
# ----------------------------------------------------------------------------


@dataclass(frozen=True)
class Ball:
    center_node: int
    center: tuple
    radius: float
    nodes: tuple  # grid node indices strictly inside the ball

    def local_extremes(self, field: ExponentField) -> dict:
        pos = _omega_positions(field, self.nodes)
        rows = field.p_values[list(self.nodes)]
        return {
            "p_minus": float(rows.min()), "p_plus": float(rows.max()),
            "q_minus": float(field.q_values[pos].min()), "q_plus": float(field.q_values[pos].max()),
            "r_minus": float(field.r_values[pos].min()), "r_plus": float(field.r_values[pos].max()),
        }


def _omega_positions(field: ExponentField, nodes) -> np.ndarray:
    lookup = {int(g): k for k, g in enumerate(field.omega_index)}
    return np.array([lookup[int(n)] for n in nodes], dtype=int)


def candidate_balls(grid):
    """Node-centred open balls inside Omega with radii h * 2**k, largest first."""
    coords = grid.coords
    h = grid.spacing
    omega = np.asarray(grid.omega, dtype=float)
    diam = float(np.linalg.norm(omega[:, 1] - omega[:, 0]))
    radii = []
    rad = h
    while rad <= diam:
        radii.append(rad)
        rad *= 2.0
    centers = np.flatnonzero(grid.omega_mask)
    for rad in reversed(radii):
        for c in centers:
            x = coords[c]
            room = min(np.min(x - omega[:, 0]), np.min(omega[:, 1] - x))
            if rad > room:
                continue
            inside = np.flatnonzero(np.linalg.norm(coords - x, axis=1) < rad)
            yield Ball(int(c), tuple(float(v) for v in x), float(rad), tuple(int(i) for i in inside))


def _a1_holds(ext: dict) -> bool:
    return ext["r_plus"] < min(ext["p_minus"], ext["q_minus"])


def _a2_holds(ext: dict) -> bool:
    return ext["r_minus"] > max(ext["p_plus"], ext["q_plus"])


def find_A1_witness(grid, field: ExponentField) -> Optional[Ball]:
    """First ball U with r+(U) < min(p-(U x B), q-(U)), or None."""
    for ball in candidate_balls(grid):
        if _a1_holds(ball.local_extremes(field)):
            return ball
    return None


def find_A2_witness(grid, field: ExponentField) -> Optional[Ball]:
    """First ball U with r-(U) > max(p+(U x B), q+(U)), or None."""
    for ball in candidate_balls(grid):
        if _a2_holds(ball.local_extremes(field)):
            return ball
    return None
