"""Uniform lattice on the truncation box, grid functions and the singular kernel.

Node centres sit at ``box_min + (k + 0.5) h`` so no node lies on the boundary
of Omega.  Double integrals become double sums over node pairs with the
diagonal cell omitted.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .exponents import ExponentField, ProblemConfig, smooth_bump, validate_conditions

log = logging.getLogger(__name__)

MIN_RESOLUTION = 4


@dataclass(frozen=True)
class Grid:
    dimension: int
    box: tuple
    resolution: int
    omega: tuple
    coords: np.ndarray = field(init=False, repr=False)
    omega_mask: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        box = np.asarray(self.box, dtype=float)
        if box.shape != (self.dimension, 2):
            raise ValueError("box must hold one (lower, upper) pair per axis")
        axes = [lo + (np.arange(self.resolution) + 0.5) * (hi - lo) / self.resolution for lo, hi in box]
        mesh = np.meshgrid(*axes, indexing="ij")
        coords = np.stack([m.ravel() for m in mesh], axis=1)
        omega = np.asarray(self.omega, dtype=float)
        mask = np.all((coords > omega[:, 0]) & (coords < omega[:, 1]), axis=1)
        coords.setflags(write=False)
        mask.setflags(write=False)
        object.__setattr__(self, "coords", coords)
        object.__setattr__(self, "omega_mask", mask)

    @property
    def h(self) -> np.ndarray:
        box = np.asarray(self.box, dtype=float)
        return (box[:, 1] - box[:, 0]) / self.resolution

    @property
    def spacing(self) -> float:
        return float(self.h.min())

    @property
    def cell_measure(self) -> float:
        return float(np.prod(self.h))

    @property
    def n_nodes(self) -> int:
        return self.coords.shape[0]

    @property
    def omega_index(self) -> np.ndarray:
        return np.flatnonzero(self.omega_mask)

    @property
    def margin(self) -> float:
        """Smallest distance from Omega to the boundary of the box."""
        box = np.asarray(self.box, dtype=float)
        omega = np.asarray(self.omega, dtype=float)
        return float(min(np.min(omega[:, 0] - box[:, 0]), np.min(box[:, 1] - omega[:, 1])))


def build_grid(config: ProblemConfig) -> Grid:
    res = config.nodes_per_axis
    if res < MIN_RESOLUTION:
        raise ValueError(f"resolution {res} too small; need at least {MIN_RESOLUTION} nodes per axis")
    box = np.asarray(config.truncation_box, dtype=float)
    omega = np.asarray(config.omega, dtype=float)
    if not (np.all(box[:, 0] < omega[:, 0]) and np.all(omega[:, 1] < box[:, 1])):
        raise ValueError("Omega must lie strictly inside the truncation box")
    grid = Grid(config.dimension, config.truncation_box, res, config.omega)
    if grid.omega_mask.all() or not grid.omega_mask.any():
        raise ValueError("resolution too coarse: Omega must contain some but not all nodes")
    if grid.margin < config.omega_diameter * (1.0 - 1e-9):
        log.warning("truncation margin %.3g is smaller than the diameter of Omega %.3g",
                    grid.margin, config.omega_diameter)
    return grid


# ----------------------------------------------------------------------------
# Grid functions
# ----------------------------------------------------------------------------


@dataclass(frozen=True)
class GridFunction:
    """Nodal values in lattice order; ``in_X`` marks zero extension outside Omega."""

    values: np.ndarray
    in_X: bool = False
    omega_mask: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        vals = np.array(self.values, dtype=float)
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)
        if self.in_X:
            if self.omega_mask is None:
                raise ValueError("in_X requires the Omega mask")
            if np.any(vals[~np.asarray(self.omega_mask)] != 0.0):
                raise ValueError("function flagged in_X is nonzero outside Omega")

    @classmethod
    def on(cls, grid: Grid, values, in_X: bool = True) -> "GridFunction":
        values = np.asarray(values, dtype=float)
        if values.shape != (grid.n_nodes,):
            raise ValueError(f"expected {grid.n_nodes} nodal values, got shape {values.shape}")
        return cls(values, in_X, grid.omega_mask)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.values, dtype=dtype)

    def __len__(self):
        return len(self.values)

    def _combine(self, other, op):
        if isinstance(other, GridFunction):
            in_x = self.in_X and other.in_X
            mask = self.omega_mask if self.omega_mask is not None else other.omega_mask
            return GridFunction(op(self.values, other.values), in_x, mask)
        return NotImplemented

    def __add__(self, other):
        return self._combine(other, np.add)

    def __sub__(self, other):
        return self._combine(other, np.subtract)

    def __mul__(self, c):
        if np.ndim(c) != 0:
            return NotImplemented
        return GridFunction(float(c) * self.values, self.in_X, self.omega_mask)

    __rmul__ = __mul__

    def __neg__(self):
        return -1.0 * self

    def __abs__(self):
        return GridFunction(np.abs(self.values), self.in_X, self.omega_mask)


def random_function(grid: Grid, seed: int, in_X: bool = True) -> GridFunction:
    """Reproducible uniform values in [-1, 1], zeroed outside Omega when ``in_X``."""
    rng = np.random.default_rng(seed)
    values = rng.uniform(-1.0, 1.0, grid.n_nodes)
    if in_X:
        values[~grid.omega_mask] = 0.0
    return GridFunction.on(grid, values, in_X)


def bump_function(grid: Grid, center, radius: float) -> GridFunction:
    """Smooth bump supported in the ball around ``center``, cut to Omega."""
    dist = np.linalg.norm(grid.coords - np.atleast_1d(np.asarray(center, dtype=float)), axis=1)
    values = smooth_bump(dist / radius)
    values[~grid.omega_mask] = 0.0
    return GridFunction.on(grid, values, True)


def smooth_random_function(grid: Grid, seed: int, modes: int = 4) -> GridFunction:
    """Random finite sine series on Omega; continuous after zero extension.

    The underlying continuum function depends only on the seed, so the same
    seed on a refined grid samples the same function.
    """
    rng = np.random.default_rng(seed)
    omega = np.asarray(grid.omega, dtype=float)
    xi = (grid.coords - omega[:, 0]) / (omega[:, 1] - omega[:, 0])
    values = np.zeros(grid.n_nodes)
    for ks in itertools.product(range(1, modes + 1), repeat=grid.dimension):
        coef = rng.standard_normal() / float(np.sum(np.square(ks)))
        term = np.ones(grid.n_nodes)
        for d, k in enumerate(ks):
            term *= np.sin(k * np.pi * xi[:, d])
        values += coef * term
    values[~grid.omega_mask] = 0.0
    return GridFunction.on(grid, values, True)


# ----------------------------------------------------------------------------
# Kernel
# ----------------------------------------------------------------------------


@dataclass(frozen=True)
class KernelTable:
    """``weights[i, j] = |x_i - x_j|^-(N + s p_ij) * cell_measure**2``, zero on the diagonal."""

    weights: np.ndarray
    diagonal_policy: str = "omit"

    def __post_init__(self):
        w = np.array(self.weights, dtype=float)
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)


def build_kernel_table(grid: Grid, exponents: ExponentField, s: float) -> KernelTable:
    report = validate_conditions(exponents, s, grid.dimension)
    if not report["P"].passed:
        raise ValueError(f"condition (P) fails: {report['P'].detail}")
    diff = grid.coords[:, None, :] - grid.coords[None, :, :]
    dist = np.sqrt(np.sum(diff * diff, axis=-1))
    np.fill_diagonal(dist, 1.0)
    weights = dist ** (-(grid.dimension + s * exponents.p_values)) * grid.cell_measure ** 2
    np.fill_diagonal(weights, 0.0)
    return KernelTable(weights)


# ----------------------------------------------------------------------------
# Assembled problem
# ----------------------------------------------------------------------------


class Problem:
    """Grid, sampled exponents, kernel and coefficients bundled for evaluation.

    Functions in X are handled internally through their Omega values ``v``.
    Pairs are stored once as unordered pairs ``(a, b)`` with ``a`` an Omega
    position and ``b`` either an Omega position or ``m`` (an exterior node,
    where the function vanishes); ordered double sums are twice the
    unordered ones.
    """

    def __init__(self, grid: Grid, exponents: ExponentField, s: float,
                 alpha: float = 0.0, beta: float = 0.0, config: Optional[ProblemConfig] = None,
                 kernel: Optional[KernelTable] = None):
        self.grid = grid
        self.exponents = exponents
        self.s = float(s)
        self.alpha = float(alpha)
        self.beta = float(beta)
        self.config = config
        self.kernel = kernel if kernel is not None else build_kernel_table(grid, exponents, s)
        self.dimension = grid.dimension
        self.cell = grid.cell_measure
        self.omega_index = grid.omega_index
        self.m = len(self.omega_index)
        if not np.array_equal(self.omega_index, exponents.omega_index):
            raise ValueError("exponent field was sampled on a different Omega")

        W = self.kernel.weights
        P = exponents.p_values
        om = self.omega_index
        ext = np.flatnonzero(~grid.omega_mask)
        ia, ib = np.triu_indices(self.m, k=1)
        ea = np.repeat(np.arange(self.m), len(ext))
        eb = np.tile(ext, self.m)
        self.pair_a = np.concatenate([ia, ea])
        self.pair_b = np.concatenate([ib, np.full(ea.size, self.m)])
        self.pair_w = np.concatenate([W[om[ia], om[ib]], W[om[ea], eb]])
        self.pair_p = np.concatenate([P[om[ia], om[ib]], P[om[ea], eb]])
        self.n_omega_pairs = ia.size

        self.p_node = exponents.p_diag.copy()
        self.q_node = exponents.q_values.copy()
        self.r_node = exponents.r_values.copy()

    @classmethod
    def from_config(cls, config: ProblemConfig) -> "Problem":
        grid = build_grid(config)
        field_ = ExponentField.sample(grid.coords, grid.omega_index, config.p, config.q, config.r)
        return cls(grid, field_, config.s, config.alpha, config.beta, config=config)

    def with_resolution(self, resolution: int) -> "Problem":
        if self.config is None:
            raise ValueError("refinement needs the originating ProblemConfig")
        return Problem.from_config(self.config.replace(resolution=resolution))

    # -- conversions ------------------------------------------------------

    def restrict(self, u, require_X: bool = True) -> np.ndarray:
        """Omega values of a full nodal vector (or GridFunction)."""
        full = np.asarray(u, dtype=float)
        if full.shape == (self.m,):
            return full.copy()
        if full.shape != (self.grid.n_nodes,):
            raise ValueError(f"expected {self.grid.n_nodes} nodal values, got shape {full.shape}")
        if require_X and np.any(full[~self.grid.omega_mask] != 0.0):
            raise ValueError("function is not in X: nonzero outside Omega")
        return full[self.omega_index].copy()

    def extend(self, v: np.ndarray) -> GridFunction:
        full = np.zeros(self.grid.n_nodes)
        full[self.omega_index] = v
        return GridFunction.on(self.grid, full, True)

    def pair_differences(self, v: np.ndarray) -> np.ndarray:
        ve = np.append(v, 0.0)
        return ve[self.pair_a] - ve[self.pair_b]

    @property
    def truncation_bound(self) -> float:
        """Relative size of the dropped exterior tail, margin^(-s p-)."""
        return float(self.grid.margin ** (-self.s * self.exponents.p_minus))

    # -- test-function generators on Omega --------------------------------

    def random(self, seed: int) -> np.ndarray:
        return self.restrict(random_function(self.grid, seed, True))

    def bump(self, center, radius: float) -> np.ndarray:
        return self.restrict(bump_function(self.grid, center, radius))

    def quartile_bumps(self, count: int = 4) -> list:
        """Bumps centred in the quarters of Omega along its first axis."""
        omega = np.asarray(self.grid.omega, dtype=float)
        mid = omega.mean(axis=1)
        width = omega[:, 1] - omega[:, 0]
        radius = max(0.5 * float(width[0]) / count, 1.5 * self.grid.spacing)
        out = []
        for k in range(count):
            c = mid.copy()
            c[0] = omega[0, 0] + (k + 0.5) * width[0] / count
            v = self.bump(c, radius)
            if not np.any(v):
                v = self.bump(mid, float(width.max()))
            out.append(v)
        return out
