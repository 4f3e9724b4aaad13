"""CE, AP and CP for one observable with a discrete spectrum.

The state is given in the observable's eigenbasis, ``|psi> = sum_i c_i |e_i>``,
so the observable is diagonal and every quantity is a weighted sum over
``|c_i|**2``.  Each conditional expectation is evaluated along the
probability-space route and, unless Python runs with ``-O``, also along the
Hilbert-space trace route; the two must agree to ``ROUTE_TOL``.
"""
from __future__ import annotations

import numpy as np

from . import _tolerance
from . import report as _report
from .core import (OMEGA, DensityOperator, DiscreteBasis, DiscreteSet, Event,
                   definition_moments, indicator_trace, normalized_cdo_trace)
from .errors import ZeroConditionEvent
from .report import ratio_routes, route_check

ROUTE_TOL = 1e-12


class DiscreteState:
    """Pure state over a discrete, possibly degenerate, spectrum.

    Parameters
    ----------
    eigenvalues : array_like of float
        Spectrum ``eps_i`` of the observable (caller-defined units).
    amplitudes : array_like of complex
        Coefficients ``c_i`` in the eigenbasis; rescaled to unit norm.
    """

    def __init__(self, eigenvalues, amplitudes):
        eps = np.array(eigenvalues, dtype=float)
        if eps.ndim != 1 or eps.size < 1:
            raise ValueError("eigenvalues must be a non-empty vector")
        if not np.all(np.isfinite(eps)):
            raise ValueError("eigenvalues must be finite")
        eps.setflags(write=False)
        self.eigenvalues = eps
        self.rho = DensityOperator(amplitudes, DiscreteBasis(eps.size))

    @property
    def amplitudes(self):
        return self.rho.amplitudes

    @property
    def dim(self):
        return self.eigenvalues.size

    @property
    def probabilities(self):
        return self.rho.probabilities

    def _scale(self):
        return max(1.0, float(np.max(np.abs(self.eigenvalues))))

    def __repr__(self):
        return f"DiscreteState(dim={self.dim})"


def events_by_value(s: DiscreteState, lo: float, hi: float) -> DiscreteSet:
    """Indices whose eigenvalue lies in the closed range ``[lo, hi]``."""
    return DiscreteSet(tuple(np.flatnonzero((s.eigenvalues >= lo) & (s.eigenvalues <= hi))))


def expectation(s: DiscreteState) -> float:
    """``sum_i eps_i |c_i|**2``."""
    return conditional_expectation(s, OMEGA)


def conditional_expectation(s: DiscreteState, a: Event) -> float:
    """Expected eigenvalue given the outcome lies in ``a``.

    Raises
    ------
    ZeroConditionEvent
        If ``P(a)`` is at or below the conditioning threshold.
    """
    if __debug__:
        by_def, by_trace, _ = ratio_routes(s.rho, s.eigenvalues, a)
        route_check(by_def, by_trace, _tolerance.tol(ROUTE_TOL) * s._scale(),
                    "discrete conditional expectation")
        return by_def
    return _definition_ce(s, a)


def _definition_ce(s, a):
    num, den = definition_moments(s.rho, s.eigenvalues, a)
    if not den > _tolerance.ZERO_CONDITION:
        raise ZeroConditionEvent(a, den)
    return num / den


def absolute_probability(s: DiscreteState, a: Event) -> float:
    return indicator_trace(s.rho, a)


def conditional_probability(s: DiscreteState, a: Event, b: Event) -> float:
    """``P(a | b) = P(a & b) / P(b)``."""
    return normalized_cdo_trace(s.rho, a, b)


def ce_report(s: DiscreteState, a: Event):
    return _report.ce_report(s.rho, s.eigenvalues, a, ROUTE_TOL, scale=s._scale())


def ap_report(s: DiscreteState, a: Event):
    return _report.ap_report(s.rho, a, ROUTE_TOL)


def cp_report(s: DiscreteState, a: Event, b: Event):
    return _report.cp_report(s.rho, a, b, ROUTE_TOL)

