"""Event algebra, indicator masks, pure-state density operators and
conditional density operators (CDOs).

Every concrete state space (discrete levels, 1D/2D grids, Fock vectors)
implements a tiny protocol used here:

``space.shape``
    shape of the amplitude array.
``space.cell_measure``
    quadrature weight of one basis cell (1 for discrete bases).
``space.mask(event)``
    boolean array of ``space.shape`` selecting the cells inside ``event``.

Events are immutable; all normalization happens at construction.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._tolerance import ZERO_CONDITION
from .errors import DimensionMismatch, IncompatibleEvents, ZeroConditionEvent

__all__ = [
    "Event", "Omega", "OMEGA", "DiscreteSet", "IntervalUnion", "GridMask",
    "ProductEvent", "FockPredicate", "DiscreteBasis", "DensityOperator",
    "ConditionalDensityOperator", "event_intersect", "event_union", "indicator",
    "indicator_trace", "cdo", "normalized_cdo_trace", "definition_moments",
    "trace_moments",
]


class Event:
    """Base class for measurable subsets of a sample space."""

    def is_empty(self):
        return False


@dataclass(frozen=True)
class Omega(Event):
    """The certain event (whole sample space)."""

    def __repr__(self):
        return "Omega"


OMEGA = Omega()


@dataclass(frozen=True)
class DiscreteSet(Event):
    indices: tuple = ()

    def __post_init__(self):
        idx = sorted({int(i) for i in self.indices})
        if idx and idx[0] < 0:
            raise ValueError(f"negative basis index in {idx}")
        object.__setattr__(self, "indices", tuple(idx))

    def is_empty(self):
        return not self.indices


@dataclass(frozen=True)
class IntervalUnion(Event):
    """Union of closed intervals ``[lo, hi]``; overlapping or touching
    intervals are merged, so the stored tuple is sorted and disjoint."""

    intervals: tuple = ()

    def __post_init__(self):
        pairs = []
        for pair in self.intervals:
            lo, hi = (float(v) for v in pair)
            if math.isnan(lo) or math.isnan(hi) or lo > hi:
                raise ValueError(f"invalid interval [{lo}, {hi}]")
            pairs.append((lo, hi))
        pairs.sort()
        merged = []
        for lo, hi in pairs:
            if merged and lo <= merged[-1][1]:
                merged[-1] = (merged[-1][0], max(merged[-1][1], hi))
            else:
                merged.append((lo, hi))
        object.__setattr__(self, "intervals", tuple(merged))

    def is_empty(self):
        return not self.intervals

    def contains(self, x):
        """Vectorized closed-interval membership test."""
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape, dtype=bool)
        for lo, hi in self.intervals:
            out |= (x >= lo) & (x <= hi)
        return out


class GridMask(Event):
    """Explicit boolean flag per grid point (any array shape)."""

    __slots__ = ("flags",)

    def __init__(self, flags):
        arr = np.array(flags, dtype=bool)
        arr.setflags(write=False)
        object.__setattr__(self, "flags", arr)

    def __setattr__(self, name, value):
        raise AttributeError("GridMask is immutable")

    def __eq__(self, other):
        return (isinstance(other, GridMask) and self.flags.shape == other.flags.shape
                and bool(np.array_equal(self.flags, other.flags)))

    def __hash__(self):
        return hash((self.flags.shape, self.flags.tobytes()))

    def __repr__(self):
        return f"GridMask(shape={self.flags.shape}, count={int(self.flags.sum())})"

    def is_empty(self):
        return not self.flags.any()


@dataclass(frozen=True)
class ProductEvent(Event):
    """Cartesian product of one event per axis."""

    axes: tuple

    def __post_init__(self):
        object.__setattr__(self, "axes", tuple(self.axes))
        if not self.axes:
            raise ValueError("ProductEvent needs at least one axis")

    def is_empty(self):
        return any(a.is_empty() for a in self.axes)


@dataclass(frozen=True)
class FockPredicate(Event):
    """Occupation constraints ``lo <= n_mode <= hi`` for selected modes,
    optionally together with ``lo <= sum(n) <= hi`` on the total number."""

    bounds: tuple = ()
    total: tuple | None = None

    def __post_init__(self):
        merged = {}
        for mode, lo, hi in self.bounds:
            mode, lo, hi = int(mode), int(lo), int(hi)
            if mode < 0:
                raise ValueError(f"negative mode index {mode}")
            plo, phi = merged.get(mode, (lo, hi))
            merged[mode] = (max(lo, plo), min(hi, phi))
        object.__setattr__(self, "bounds", tuple((m, *merged[m]) for m in sorted(merged)))
        if self.total is not None:
            lo, hi = self.total
            object.__setattr__(self, "total", (int(lo), int(hi)))

    def is_empty(self):
        if any(lo > hi for _, lo, hi in self.bounds):
            return True
        return self.total is not None and self.total[0] > self.total[1]

    def admits(self, occupations):
        """Boolean vector over rows of an ``(m, t)`` occupation array."""
        occ = np.asarray(occupations)
        ok = np.ones(occ.shape[0], dtype=bool)
        for mode, lo, hi in self.bounds:
            if mode >= occ.shape[1]:
                raise DimensionMismatch(f"mode {mode} outside {occ.shape[1]} modes")
            ok &= (occ[:, mode] >= lo) & (occ[:, mode] <= hi)
        if self.total is not None:
            n = occ.sum(axis=1)
            ok &= (n >= self.total[0]) & (n <= self.total[1])
        return ok


def event_intersect(a: Event, b: Event) -> Event:
    """Normalized intersection; the indicator of the result is the
    elementwise product of the operands' indicators."""
    if isinstance(a, Omega):
        return b
    if isinstance(b, Omega):
        return a
    if type(a) is not type(b):
        raise IncompatibleEvents(f"cannot intersect {type(a).__name__} with {type(b).__name__}")
    if isinstance(a, DiscreteSet):
        return DiscreteSet(tuple(set(a.indices) & set(b.indices)))
    if isinstance(a, IntervalUnion):
        out = []
        for lo1, hi1 in a.intervals:
            for lo2, hi2 in b.intervals:
                lo, hi = max(lo1, lo2), min(hi1, hi2)
                if lo <= hi:
                    out.append((lo, hi))
        return IntervalUnion(tuple(out))
    if isinstance(a, GridMask):
        if a.flags.shape != b.flags.shape:
            raise IncompatibleEvents(f"mask shapes {a.flags.shape} and {b.flags.shape} differ")
        return GridMask(a.flags & b.flags)
    if isinstance(a, ProductEvent):
        if len(a.axes) != len(b.axes):
            raise IncompatibleEvents("product events have different axis counts")
        return ProductEvent(tuple(event_intersect(x, y) for x, y in zip(a.axes, b.axes)))
    if isinstance(a, FockPredicate):
        if a.total is None or b.total is None:
            total = a.total or b.total
        else:
            total = (max(a.total[0], b.total[0]), min(a.total[1], b.total[1]))
        return FockPredicate(a.bounds + b.bounds, total)
    raise IncompatibleEvents(f"unsupported event type {type(a).__name__}")


def event_union(a: Event, b: Event) -> Event:
    """Union of two events of the same kind (products are not closed under
    union, so they are rejected)."""
    if isinstance(a, Omega) or isinstance(b, Omega):
        return OMEGA
    if type(a) is not type(b):
        raise IncompatibleEvents(f"cannot unite {type(a).__name__} with {type(b).__name__}")
    if isinstance(a, DiscreteSet):
        return DiscreteSet(a.indices + b.indices)
    if isinstance(a, IntervalUnion):
        return IntervalUnion(a.intervals + b.intervals)
    if isinstance(a, GridMask):
        if a.flags.shape != b.flags.shape:
            raise IncompatibleEvents(f"mask shapes {a.flags.shape} and {b.flags.shape} differ")
        return GridMask(a.flags | b.flags)
    raise IncompatibleEvents(f"union not supported for {type(a).__name__}")


@dataclass(frozen=True)
class DiscreteBasis:
    """Orthonormal basis of ``n`` levels; events are index sets."""

    n: int

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("basis dimension must be >= 1")

    @property
    def shape(self):
        return (self.n,)

    cell_measure = 1.0

    def mask(self, event):
        out = np.zeros(self.n, dtype=bool)
        if isinstance(event, DiscreteSet):
            if event.indices and event.indices[-1] >= self.n:
                raise DimensionMismatch(f"index {event.indices[-1]} outside dimension {self.n}")
            out[list(event.indices)] = True
            return out
        if isinstance(event, GridMask):
            if event.flags.shape != self.shape:
                raise DimensionMismatch(f"mask length {event.flags.shape} != {self.n}")
            return event.flags.copy()
        raise IncompatibleEvents(f"{type(event).__name__} cannot index a discrete basis")


def indicator(event: Event, space) -> np.ndarray:
    """Diagonal 0/1 mask of the indicator operator ``I_A`` in ``space``."""
    if isinstance(event, Omega):
        return np.ones(space.shape, dtype=bool)
    return space.mask(event)


class DensityOperator:
    """Rank-one density operator ``|psi><psi|`` stored as amplitudes.

    The amplitudes are rescaled on construction so that
    ``sum(|psi|**2) * space.cell_measure == 1``.
    """

    def __init__(self, amplitudes, space, normalize=True):
        amp = np.array(amplitudes, dtype=complex)
        if amp.shape != tuple(space.shape):
            raise DimensionMismatch(f"amplitudes {amp.shape} do not match space {space.shape}")
        if not np.all(np.isfinite(amp)):
            raise ValueError("amplitudes must be finite")
        norm = float(np.sum(amp.real ** 2 + amp.imag ** 2)) * space.cell_measure
        if normalize:
            if norm <= 0.0:
                raise ValueError("cannot normalize a zero state")
            amp = amp / math.sqrt(norm)
        elif abs(norm - 1.0) > 1e-10:
            raise ValueError(f"state is not normalized (trace {norm})")
        amp.setflags(write=False)
        self.amplitudes = amp
        self.space = space

    @property
    def shape(self):
        return self.amplitudes.shape

    @property
    def probabilities(self):
        """Born-rule cell probabilities ``|psi_j|**2 * cell_measure``."""
        a = self.amplitudes
        return (a.real ** 2 + a.imag ** 2) * self.space.cell_measure

    def trace(self):
        return float(self.probabilities.sum())

    def purity(self):
        """``Tr[rho**2] = <psi|psi>**2`` for the rank-one operator."""
        w = self.space.cell_measure
        return abs(np.vdot(self.amplitudes, self.amplitudes) * w) ** 2

    def matrix(self):
        """Dense ``|psi><psi|`` in the cell-normalized basis (small systems only)."""
        v = self.amplitudes.ravel() * math.sqrt(self.space.cell_measure)
        return np.outer(v, v.conj())

    def __repr__(self):
        return f"DensityOperator(shape={self.shape}, space={self.space!r})"


@dataclass(frozen=True)
class ConditionalDensityOperator:
    """``rho_A = rho I_A``; its trace is the absolute probability of A."""

    base: DensityOperator
    event: Event
    trace: float

    def expectation_numerator(self, values):
        """``Tr[O rho_A]`` for an observable diagonal in the measurement basis."""
        num, _ = definition_moments(self.base, values, self.event)
        return num


def indicator_trace(rho: DensityOperator, a: Event) -> float:
    """``Tr[rho I_A]``: Born probability summed over the cells in ``a``."""
    if a.is_empty():
        return 0.0
    mask = indicator(a, rho.space)
    return float(rho.probabilities[mask].sum())


def cdo(rho: DensityOperator, a: Event) -> ConditionalDensityOperator:
    return ConditionalDensityOperator(rho, a, indicator_trace(rho, a))


def _require_condition(event, p):
    if not p > ZERO_CONDITION:
        raise ZeroConditionEvent(event, p)


def normalized_cdo_trace(rho: DensityOperator, x: Event, y: Event) -> float:
    """``Tr[rho I_X I_Y] / Tr[rho I_Y]``, i.e. P(X|Y)."""
    py = indicator_trace(rho, y)
    _require_condition(y, py)
    return indicator_trace(rho, event_intersect(x, y)) / py


def definition_moments(rho, values, event):
    """Probability-space route: ``(sum_A O(w) P(w), sum_A P(w))``."""
    p = rho.probabilities
    if event.is_empty():
        return 0.0, 0.0
    mask = indicator(event, rho.space)
    values = np.broadcast_to(np.asarray(values, dtype=float), rho.shape)
    return float(np.sum(values[mask] * p[mask])), float(p[mask].sum())


def trace_moments(rho, values, event, dense_limit=256):
    """Hilbert-space route: ``(Tr[O rho I_A], Tr[rho I_A])``.

    Small systems build the operators explicitly and take matrix traces;
    larger ones evaluate the same traces as ``<psi| I_A O |psi>``.
    """
    values = np.broadcast_to(np.asarray(values, dtype=float), rho.shape).ravel()
    if event.is_empty():
        return 0.0, 0.0
    mask = indicator(event, rho.space).ravel().astype(float)
    if rho.amplitudes.size <= dense_limit:
        r = rho.matrix()
        r_a = r * mask[np.newaxis, :]  # rho @ diag(mask)
        num = np.trace(values[:, np.newaxis] * r_a)
        den = np.trace(r_a)
    else:
        psi = rho.amplitudes.ravel()
        w = rho.space.cell_measure
        num = np.vdot(psi, mask * values * psi) * w
        den = np.vdot(psi, mask * psi) * w
    return float(num.real), float(den.real)
