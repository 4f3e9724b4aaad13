"""Grand-canonical statistics of non-interacting particles in Fock space.

Each single-particle mode ``j`` contributes a factor
``Z_j = sum_n exp(-beta (eps_j - mu) n)`` to the grand partition function.
Bosonic occupations are truncated at ``n_max``; fermionic ones are 0 or 1.
Partition arithmetic is done in log space.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from . import _tolerance
from . import report as _report
from .core import FockPredicate, DensityOperator, Event, Omega
from .errors import DimensionMismatch, EnumerationTooLarge, IncompatibleEvents
from .report import ratio_routes, route_check

MAX_VECTORS = 10**6
ROUTE_TOL = 1e-12


@dataclass(frozen=True)
class FockEnsemble:
    """Mode energies, inverse temperature, chemical potential, statistics.

    ``statistics`` is ``"fermion"`` or ``"boson"``; bosons need ``n_max``.
    """

    mode_energies: tuple
    beta: float
    mu: float = 0.0
    statistics: str = "fermion"
    n_max: int | None = None

    def __post_init__(self):
        eps = tuple(float(e) for e in np.atleast_1d(self.mode_energies))
        object.__setattr__(self, "mode_energies", eps)
        if not eps:
            raise ValueError("at least one mode is required")
        if not self.beta > 0:
            raise ValueError(f"beta must be positive, got {self.beta}")
        if self.statistics == "fermion":
            object.__setattr__(self, "n_max", 1)
        elif self.statistics == "boson":
            if self.n_max is None or int(self.n_max) < 1:
                raise ValueError("bosonic ensembles need n_max >= 1")
            object.__setattr__(self, "n_max", int(self.n_max))
            bad = [j for j, e in enumerate(eps) if not self.beta * (e - self.mu) > 0]
            if bad:
                raise ValueError(f"bosonic modes {bad} have beta*(eps - mu) <= 0")
        else:
            raise ValueError(f"statistics must be 'fermion' or 'boson', got {self.statistics!r}")

    @classmethod
    def from_temperature(cls, mode_energies, temperature, mu=0.0, k=1.0, **kw):
        return cls(mode_energies, 1.0 / (k * temperature), mu, **kw)

    @property
    def modes(self):
        return len(self.mode_energies)

    @property
    def exponents(self):
        """``beta * (eps_j - mu)`` per mode."""
        return self.beta * (np.array(self.mode_energies) - self.mu)

    def occupation_range(self):
        return np.arange(self.n_max + 1)


def _logsumexp(terms):
    m = np.max(terms)
    return float(m + math.log(np.sum(np.exp(terms - m))))


def _check_mode(e, j):
    if not 0 <= j < e.modes:
        raise DimensionMismatch(f"mode {j} outside 0..{e.modes - 1}")


def log_mode_partition(e: FockEnsemble, j: int) -> float:
    _check_mode(e, j)
    return _logsumexp(-e.exponents[j] * e.occupation_range())


def mode_partition(e: FockEnsemble, j: int) -> float:
    return math.exp(log_mode_partition(e, j))


def log_grand_partition(e: FockEnsemble) -> float:
    return math.fsum(log_mode_partition(e, j) for j in range(e.modes))


def grand_partition(e: FockEnsemble) -> float:
    """``Z_G = prod_j Z_j`` (may overflow to ``inf``; use the log form then)."""
    log_z = log_grand_partition(e)
    return math.inf if log_z > 709.0 else math.exp(log_z)


def occupation_distribution(e: FockEnsemble, j: int) -> np.ndarray:
    """``P(n_j = n)`` for ``n = 0..n_max``."""
    return np.exp(-e.exponents[j] * e.occupation_range() - log_mode_partition(e, j))


def occupation_probability(e: FockEnsemble, j: int, n: int) -> float:
    if not 0 <= n <= e.n_max:
        raise ValueError(f"occupation {n} outside 0..{e.n_max}")
    return float(occupation_distribution(e, j)[n])


def mean_occupation(e: FockEnsemble, j: int) -> float:
    return float(np.dot(e.occupation_range(), occupation_distribution(e, j)))


def enumerate_occupations(e: FockEnsemble, limit=MAX_VECTORS) -> np.ndarray:
    """All truncated occupation vectors as an ``(m, t)`` integer array."""
    count = (e.n_max + 1) ** e.modes
    if count > limit:
        raise EnumerationTooLarge(f"{count} occupation vectors exceed the limit of {limit}")
    return np.array(list(itertools.product(range(e.n_max + 1), repeat=e.modes)), dtype=int)


def enumerated_log_weights(e, occ):
    """``-beta (E(N) - mu N(N))`` for each occupation vector."""
    energies = occ @ np.array(e.mode_energies)
    return -e.beta * (energies - e.mu * occ.sum(axis=1))


def ensemble_average_enumerated(e: FockEnsemble, a) -> float:
    """``Tr{exp[-beta(H - mu N)] O} / Z_G`` by explicit Fock-vector enumeration."""
    occ = enumerate_occupations(e)
    logw = enumerated_log_weights(e, occ)
    w = np.exp(logw - logw.max())
    return float(np.dot(occ @ np.asarray(a, dtype=float), w) / w.sum())


def linear_observable_expectation(e: FockEnsemble, a, check_limit=4096) -> float:
    """``<sum_j a_j n_j> = sum_j a_j <n_j>``.

    Small ensembles (at most ``check_limit`` Fock vectors) are also averaged
    by enumeration and the two results must agree to relative ``1e-12``.
    """
    a = np.asarray(a, dtype=float)
    if a.shape != (e.modes,):
        raise DimensionMismatch(f"need {e.modes} coefficients, got shape {a.shape}")
    value = math.fsum(a[j] * mean_occupation(e, j) for j in range(e.modes))
    if __debug__ and (e.n_max + 1) ** e.modes <= check_limit:
        other = ensemble_average_enumerated(e, a)
        scale = max(1.0, float(np.sum(np.abs(a))) * e.n_max)
        route_check(value, other, _tolerance.tol(ROUTE_TOL) * scale,
                    "linear observable expectation")
    return value


@dataclass(frozen=True, eq=False)
class FockBasis:
    """Enumerated occupation-number basis; events are FockPredicates."""

    occupations: np.ndarray

    @property
    def shape(self):
        return (self.occupations.shape[0],)

    cell_measure = 1.0

    def mask(self, event):
        if isinstance(event, Omega):
            return np.ones(self.shape, dtype=bool)
        if isinstance(event, FockPredicate):
            return event.admits(self.occupations)
        raise IncompatibleEvents(f"{type(event).__name__} cannot index a Fock basis")


def equilibrium_state(e: FockEnsemble, limit=MAX_VECTORS) -> DensityOperator:
    """Pure state with coefficients ``C(N) = prod_j sqrt(P(n_j))``.

    Phases are unobservable in every diagonal quantity, so the real
    non-negative root is taken.
    """
    occ = enumerate_occupations(e, limit)
    coeff = np.ones(occ.shape[0])
    for j in range(e.modes):
        coeff = coeff * np.sqrt(occupation_distribution(e, j))[occ[:, j]]
    return DensityOperator(coeff, FockBasis(occ), normalize=False)


def _observable_values(e, rho, o):
    o = np.asarray(o, dtype=float)
    if o.shape != (e.modes,):
        raise DimensionMismatch(f"need {e.modes} coefficients, got shape {o.shape}")
    return rho.space.occupations @ o


def fock_conditional_expectation(e: FockEnsemble, o, a: Event, limit=MAX_VECTORS) -> float:
    """``E[sum_j o_j n_j | A]`` over the truncated Fock space."""
    rho = equilibrium_state(e, limit)
    values = _observable_values(e, rho, o)
    by_def, by_trace, _ = ratio_routes(rho, values, a)
    if __debug__:
        scale = max(1.0, float(np.max(np.abs(values))))
        route_check(by_def, by_trace, _tolerance.tol(ROUTE_TOL) * scale,
                    "Fock conditional expectation")
    return by_def


def fock_ce_report(e, o, a, limit=MAX_VECTORS):
    rho = equilibrium_state(e, limit)
    values = _observable_values(e, rho, o)
    return _report.ce_report(rho, values, a, ROUTE_TOL, scale=max(1.0, float(np.max(np.abs(values)))))


def fock_ap_report(e, a, limit=MAX_VECTORS):
    return _report.ap_report(equilibrium_state(e, limit), a, ROUTE_TOL)


def fock_cp_report(e, a, b, limit=MAX_VECTORS):
    return _report.cp_report(equilibrium_state(e, limit), a, b, ROUTE_TOL)
