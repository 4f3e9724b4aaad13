"""Grid-discretized continuous observables in one and two dimensions.

All integrals use the midpoint rule: grid points are cell centres, every
cell carries weight ``dx`` (``dx*dy`` in 2D), and an interval event covers
cell ``j`` iff ``lo <= x_j <= hi``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import _tolerance
from . import report as _report
from ._tolerance import ZERO_CONDITION
from .core import (OMEGA, DensityOperator, DiscreteSet, Event, GridMask,
                   IntervalUnion, Omega, ProductEvent, definition_moments,
                   indicator_trace, normalized_cdo_trace)
from .errors import DimensionMismatch, IncompatibleEvents, ZeroConditionEvent
from .report import ratio_routes, route_check

ROUTE_TOL = 1e-10


@dataclass(frozen=True)
class UniformGrid:
    """Points ``x_j = x0 + j*dx`` for ``j = 0..n-1``."""

    x0: float
    dx: float
    n: int

    def __post_init__(self):
        if not (self.dx > 0 and math.isfinite(self.dx)):
            raise ValueError(f"grid spacing must be positive, got {self.dx}")
        if self.n < 2:
            raise ValueError(f"grid needs at least 2 points, got {self.n}")
        if not math.isfinite(self.x0):
            raise ValueError("grid origin must be finite")

    @classmethod
    def spanning(cls, lo, hi, n):
        """Cell-centred grid of ``n`` cells tiling ``[lo, hi]``."""
        dx = (hi - lo) / n
        return cls(lo + dx / 2, dx, int(n))

    @classmethod
    def nodes(cls, lo, hi, n):
        """``n`` points from ``lo`` to ``hi`` inclusive."""
        return cls(lo, (hi - lo) / (n - 1), int(n))

    @property
    def points(self):
        return self.x0 + self.dx * np.arange(self.n)

    @property
    def shape(self):
        return (self.n,)

    @property
    def cell_measure(self):
        return self.dx

    def nearest(self, x):
        """Index of the grid point nearest to ``x``."""
        j = int(round((x - self.x0) / self.dx))
        if j < 0 or j >= self.n:
            if not (self.x0 - self.dx / 2 <= x <= self.x0 + (self.n - 0.5) * self.dx):
                raise ValueError(f"x={x} lies outside the grid")
            j = min(max(j, 0), self.n - 1)
        return j

    def mask(self, event):
        if isinstance(event, Omega):
            return np.ones(self.n, dtype=bool)
        if isinstance(event, IntervalUnion):
            return event.contains(self.points)
        if isinstance(event, DiscreteSet):
            # exact grid-cell point events
            out = np.zeros(self.n, dtype=bool)
            if event.indices and event.indices[-1] >= self.n:
                raise DimensionMismatch(f"cell {event.indices[-1]} outside grid of {self.n}")
            out[list(event.indices)] = True
            return out
        if isinstance(event, GridMask):
            if event.flags.shape != self.shape:
                raise DimensionMismatch(f"mask shape {event.flags.shape} != grid {self.shape}")
            return event.flags.copy()
        if isinstance(event, ProductEvent) and len(event.axes) == 1:
            return self.mask(event.axes[0])
        raise IncompatibleEvents(f"{type(event).__name__} cannot index a 1D grid")


@dataclass(frozen=True)
class Grid2D:
    gx: UniformGrid
    gy: UniformGrid

    @property
    def shape(self):
        return (self.gx.n, self.gy.n)

    @property
    def cell_measure(self):
        return self.gx.dx * self.gy.dx

    def mask(self, event):
        if isinstance(event, ProductEvent):
            if len(event.axes) != 2:
                raise IncompatibleEvents("2D grids need a two-axis product event")
            return np.outer(self.gx.mask(event.axes[0]), self.gy.mask(event.axes[1]))
        if isinstance(event, GridMask):
            if event.flags.shape != self.shape:
                raise DimensionMismatch(f"mask shape {event.flags.shape} != grid {self.shape}")
            return event.flags.copy()
        raise IncompatibleEvents(f"{type(event).__name__} cannot index a 2D grid")


def region(grid2d, predicate):
    """GridMask of the points where ``predicate(X, Y)`` holds."""
    X, Y = np.meshgrid(grid2d.gx.points, grid2d.gy.points, indexing="ij")
    return GridMask(predicate(X, Y))


class GridState1D:
    """Sampled wavefunction on a uniform grid, normalized on that grid."""

    def __init__(self, grid: UniformGrid, psi):
        self.grid = grid
        self.rho = DensityOperator(psi, grid)

    @property
    def psi(self):
        return self.rho.amplitudes

    @property
    def density(self):
        """``|psi(x_j)|**2`` (probability per unit length)."""
        return self.rho.probabilities / self.grid.dx

    @classmethod
    def from_function(cls, grid, f):
        return cls(grid, f(grid.points))

    def shifted(self, delta):
        """The same samples translated by ``delta``."""
        g = self.grid
        return GridState1D(UniformGrid(g.x0 + delta, g.dx, g.n), self.psi)

    def __repr__(self):
        return f"GridState1D({self.grid!r})"


def gaussian(grid, center=0.0, sigma=1.0, k0=0.0):
    """Wave packet whose position density is normal(center, sigma**2),
    modulated by the plane wave ``exp(i k0 x)``."""
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    x = grid.points
    psi = np.exp(-((x - center) ** 2) / (4.0 * sigma ** 2)) * np.exp(1j * k0 * x)
    return GridState1D(grid, psi)


class GridState2D:
    """Sampled wavefunction ``psi[j, k] = psi(x_j, y_k)``."""

    def __init__(self, gx: UniformGrid, gy: UniformGrid, psi):
        self.space = Grid2D(gx, gy)
        self.rho = DensityOperator(psi, self.space)

    gx = property(lambda self: self.space.gx)
    gy = property(lambda self: self.space.gy)

    @property
    def psi(self):
        return self.rho.amplitudes

    @property
    def density(self):
        return self.rho.probabilities / self.space.cell_measure

    def mesh(self):
        return np.meshgrid(self.gx.points, self.gy.points, indexing="ij")

    @classmethod
    def separable(cls, s1: GridState1D, s2: GridState1D):
        return cls(s1.grid, s2.grid, np.outer(s1.psi, s2.psi))

    def __repr__(self):
        return f"GridState2D({self.gx.n}x{self.gy.n})"


def bivariate_normal(gx, gy, sigma_x=1.0, sigma_y=1.0, correlation=0.0, mean=(0.0, 0.0)):
    """Real amplitude whose density is a correlated bivariate normal."""
    if not -1 < correlation < 1:
        raise ValueError("correlation must lie in (-1, 1)")
    X, Y = np.meshgrid(gx.points, gy.points, indexing="ij")
    u = (X - mean[0]) / sigma_x
    v = (Y - mean[1]) / sigma_y
    q = (u * u - 2 * correlation * u * v + v * v) / (1 - correlation ** 2)
    return GridState2D(gx, gy, np.exp(-q / 4.0))


def box2d(nx_quantum, ny_quantum, lx=1.0, ly=1.0, n=128):
    """Eigenstate of a rigid 2D box ``[0, lx] x [0, ly]``."""
    gx = UniformGrid.spanning(0.0, lx, n)
    gy = UniformGrid.spanning(0.0, ly, n)
    X, Y = np.meshgrid(gx.points, gy.points, indexing="ij")
    psi = np.sin(nx_quantum * np.pi * X / lx) * np.sin(ny_quantum * np.pi * Y / ly)
    return GridState2D(gx, gy, psi)


def _ce(rho, values, a, what, scale=1.0):
    if __debug__:
        by_def, by_trace, _ = ratio_routes(rho, values, a)
        route_check(by_def, by_trace, _tolerance.tol(ROUTE_TOL) * scale, what)
        return by_def
    num, den = definition_moments(rho, values, a)
    if not den > ZERO_CONDITION:
        raise ZeroConditionEvent(a, den)
    return num / den


def _axis_scale(grid):
    return max(1.0, abs(grid.x0), abs(grid.x0 + (grid.n - 1) * grid.dx))


# -- one dimension ---------------------------------------------------------

def expectation_1d(s: GridState1D) -> float:
    return conditional_expectation_1d(s, OMEGA)


def conditional_expectation_1d(s: GridState1D, a: Event) -> float:
    """Midpoint-rule ``int_A x |psi|^2 dx / int_A |psi|^2 dx``."""
    return _ce(s.rho, s.grid.points, a, "1D conditional expectation", _axis_scale(s.grid))


def absolute_probability_1d(s: GridState1D, a: Event) -> float:
    return indicator_trace(s.rho, a)


def conditional_probability_1d(s: GridState1D, a: Event, b: Event) -> float:
    return normalized_cdo_trace(s.rho, a, b)


def ce_report_1d(s, a):
    return _report.ce_report(s.rho, s.grid.points, a, ROUTE_TOL, scale=_axis_scale(s.grid))


# -- two dimensions ------------------------------------------------------

def absolute_probability_2d(s: GridState2D, a: Event) -> float:
    return indicator_trace(s.rho, a)


def conditional_probability_2d(s: GridState2D, a: Event, b: Event) -> float:
    return normalized_cdo_trace(s.rho, a, b)


def ce_borel_2d(s: GridState2D, g, a: Event) -> float:
    """Conditional expectation of ``g(X, Y)`` given ``a``.

    ``g`` is called once with the full coordinate meshes and must return an
    array (or scalar) broadcastable to the grid shape.
    """
    X, Y = s.mesh()
    values = np.broadcast_to(np.asarray(g(X, Y), dtype=float), X.shape)
    if not np.all(np.isfinite(values)):
        raise ValueError("g must be finite on the grid")
    return _ce(s.rho, values, a, "2D Borel conditional expectation",
               max(1.0, float(np.max(np.abs(values)))))


def marginals_2d(s: GridState2D):
    """Marginal densities ``(P(x), P(y))`` sampled on each axis."""
    dens = s.density
    return dens.sum(axis=1) * s.gy.dx, dens.sum(axis=0) * s.gx.dx


def independence_check(s: GridState2D, tol=1e-10):
    """Compare the joint density with the product of its marginals.

    Returns
    -------
    (bool, float)
        Whether the maximum pointwise deviation is within ``tol``, and
        that deviation.
    """
    px, py = marginals_2d(s)
    deviation = float(np.max(np.abs(s.density - np.outer(px, py))))
    return deviation <= tol, deviation


def axis_conditional_expectation(s: GridState2D, axis, a: Event) -> float:
    """CE of the X (``axis=0``/``"x"``) or Y coordinate given ``a``."""
    X, Y = s.mesh()
    if axis in (0, "x", "X"):
        values, grid = X, s.gx
    elif axis in (1, "y", "Y"):
        values, grid = Y, s.gy
    else:
        raise ValueError(f"axis must be 'x' or 'y', got {axis!r}")
    return _ce(s.rho, values, a, f"axis-{axis} conditional expectation", _axis_scale(grid))


def _row(s, y):
    k = s.gy.nearest(y)
    dens = s.density[:, k]
    mass = float(dens.sum() * s.gx.dx)
    if not mass > ZERO_CONDITION:
        raise ZeroConditionEvent(f"Y={y}", mass)
    return dens, mass


def ce_given_point(s: GridState2D, y: float) -> float:
    """``E[X | Y=y]`` on the grid row nearest to ``y`` (no interpolation)."""
    dens, mass = _row(s, y)
    return float(np.sum(s.gx.points * dens) * s.gx.dx / mass)


def conditional_density_given_point(s: GridState2D, y: float):
    """The whole conditional density ``x -> P(x | Y=y)`` on the x grid."""
    dens, mass = _row(s, y)
    return dens / mass


def cp_given_point(s: GridState2D, x: float, y: float) -> float:
    """Conditional density ``|psi(x, y)|^2 / int |psi(x', y)|^2 dx'``."""
    return float(conditional_density_given_point(s, y)[s.gx.nearest(x)])


def tower_expectation(s: GridState2D) -> float:
    """Average of ``E[X | Y=y_k]`` over the Y marginal (skips empty rows)."""
    _, py = marginals_2d(s)
    total = 0.0
    for k, y in enumerate(s.gy.points):
        if py[k] * s.gy.dx > ZERO_CONDITION:
            total += py[k] * s.gy.dx * ce_given_point(s, y)
    return total


def apply_coordinate(s: GridState2D, axis, psi=None):
    """Apply the (diagonal) coordinate-multiplication operator to ``psi``."""
    X, Y = s.mesh()
    psi = s.psi if psi is None else psi
    return (X if axis in (0, "x", "X") else Y) * psi


# -- sample files ---------------------------------------------------------

def load_samples(path) -> GridState1D:
    """Read a wavefunction sample file.

    Lines ``x0 <float>``, ``dx <float>`` and ``n <int>`` form the header;
    every other non-blank, non-``#`` line is ``index re im`` (whitespace or
    comma separated).  Missing indices are zero.
    """
    header = {}
    rows = []
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].replace(",", " ").strip()
        if not line:
            continue
        parts = line.split()
        if parts[0] in ("x0", "dx", "n"):
            if len(parts) != 2:
                raise ValueError(f"{path}:{lineno}: malformed header line")
            header[parts[0]] = parts[1]
            continue
        if len(parts) != 3:
            raise ValueError(f"{path}:{lineno}: expected 'index re im'")
        rows.append((int(parts[0]), float(parts[1]), float(parts[2])))
    missing = {"x0", "dx", "n"} - header.keys()
    if missing:
        raise ValueError(f"{path}: header lacks {sorted(missing)}")
    grid = UniformGrid(float(header["x0"]), float(header["dx"]), int(header["n"]))
    psi = np.zeros(grid.n, dtype=complex)
    for j, re, im in rows:
        if not 0 <= j < grid.n:
            raise ValueError(f"{path}: sample index {j} outside grid of {grid.n}")
        psi[j] = complex(re, im)
    return GridState1D(grid, psi)


def save_samples(s: GridState1D, path):
    g = s.grid
    lines = [f"x0 {float(g.x0)!r}", f"dx {float(g.dx)!r}", f"n {g.n}"]
    lines += [f"{j} {float(z.real)!r} {float(z.imag)!r}" for j, z in enumerate(s.psi)]
    Path(path).write_text("\n".join(lines) + "\n")
