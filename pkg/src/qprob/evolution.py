"""Unitary time evolution under a time-independent Hamiltonian.

The Hamiltonian, events and diagonal observables all live in one
*measurement basis*; the propagator ``U(t) = V exp(-i L t / hbar) V^dagger``
comes from the Hamiltonian's spectral decomposition in that basis.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _tolerance
from . import report as _report
from .core import OMEGA, DensityOperator, DiscreteBasis, Event, indicator, normalized_cdo_trace
from .errors import (DimensionMismatch, EigenDecompositionFailure, NonHermitian,
                     ZeroConditionEvent)
from .report import ratio_routes, route_check

HERMITIAN_TOL = 1e-12
MATRIX_ROUTE_TOL = 1e-10
MAX_DIM = 4096


class HamiltonianMatrix:
    def __init__(self, h, tol=HERMITIAN_TOL):
        h = np.array(h, dtype=complex)
        if h.ndim != 2 or h.shape[0] != h.shape[1]:
            raise DimensionMismatch(f"Hamiltonian must be square, got shape {h.shape}")
        if h.shape[0] > MAX_DIM:
            raise DimensionMismatch(f"dimension {h.shape[0]} exceeds {MAX_DIM}")
        asym = float(np.max(np.abs(h - h.conj().T))) if h.size else 0.0
        if asym > tol:
            raise NonHermitian(f"max |H - H^dagger| = {asym:.3e} exceeds {tol:.1e}")
        h.setflags(write=False)
        self.h = h

    @property
    def dim(self):
        return self.h.shape[0]


@dataclass(frozen=True, eq=False)
class Propagator:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    t: float
    hbar: float = 1.0

    def matrix(self):
        phases = np.exp(-1j * self.eigenvalues * self.t / self.hbar)
        return (self.eigenvectors * phases) @ self.eigenvectors.conj().T

    def at(self, t):
        """Same spectral data at another time (no re-diagonalization)."""
        return Propagator(self.eigenvalues, self.eigenvectors, t, self.hbar)


def build_propagator(h: HamiltonianMatrix, t: float, hbar: float = 1.0) -> Propagator:
    if not hbar > 0:
        raise ValueError("hbar must be positive")
    if not isinstance(h, HamiltonianMatrix):
        h = HamiltonianMatrix(h)
    try:
        lam, v = np.linalg.eigh(h.h)
    except np.linalg.LinAlgError as exc:
        raise EigenDecompositionFailure(str(exc)) from exc
    if not (np.all(np.isfinite(lam)) and np.all(np.isfinite(v))):
        raise EigenDecompositionFailure("non-finite eigen-decomposition")
    return Propagator(lam, v, float(t), float(hbar))


def unitarity_defect(u: Propagator) -> float:
    m = u.matrix()
    return float(np.max(np.abs(m.conj().T @ m - np.eye(m.shape[0]))))


def evolve(s0, u: Propagator) -> np.ndarray:
    """``|psi(t)> = U(t) |psi(0)>`` as a normalized amplitude vector."""
    psi = np.asarray(getattr(s0, "amplitudes", s0), dtype=complex)
    if psi.shape != (u.eigenvectors.shape[0],):
        raise DimensionMismatch(f"state of shape {psi.shape} vs propagator dimension "
                                f"{u.eigenvectors.shape[0]}")
    psi = psi / np.linalg.norm(psi)
    # V^dagger psi, phase, back to the measurement basis
    coeff = u.eigenvectors.conj().T @ psi
    return u.eigenvectors @ (np.exp(-1j * u.eigenvalues * u.t / u.hbar) * coeff)


def evolved_density(s0, h, t, hbar=1.0) -> DensityOperator:
    u = build_propagator(h, t, hbar)
    psi_t = evolve(s0, u)
    return DensityOperator(psi_t, DiscreteBasis(psi_t.size))


def _matrix_route(s0, h, obs, a, t, hbar):
    u = build_propagator(h, t, hbar).matrix()
    psi0 = np.asarray(getattr(s0, "amplitudes", s0), dtype=complex)
    psi0 = psi0 / np.linalg.norm(psi0)
    rho_t = u @ np.outer(psi0, psi0.conj()) @ u.conj().T
    mask = indicator(a, DiscreteBasis(psi0.size)).astype(float)
    rho_a = rho_t * mask[np.newaxis, :]
    return float(np.trace(np.asarray(obs, dtype=float)[:, None] * rho_a).real), float(np.trace(rho_a).real)


def ce_t(s0, h, obs, a: Event, t: float, hbar: float = 1.0) -> float:
    """``Tr{O rho_A(t)} / Tr{rho_A(t)}`` for a diagonal observable ``obs``."""
    rho = evolved_density(s0, h, t, hbar)
    obs = np.asarray(obs, dtype=float)
    value, _, _ = ratio_routes(rho, obs, a)
    if __debug__:
        num, den = _matrix_route(s0, h, obs, a, t, hbar)
        scale = max(1.0, float(np.max(np.abs(obs))))
        route_check(value, num / den, _tolerance.tol(MATRIX_ROUTE_TOL) * scale,
                    "time-dependent conditional expectation")
    return value


def ap_t(s0, h, a: Event, t: float, hbar: float = 1.0) -> float:
    rho = evolved_density(s0, h, t, hbar)
    return float(rho.probabilities[indicator(a, rho.space)].sum())


def cp_t(s0, h, a: Event, b: Event, t: float, hbar: float = 1.0) -> float:
    return normalized_cdo_trace(evolved_density(s0, h, t, hbar), a, b)


def time_series(s0, h, obs, a, b, times, hbar=1.0, ce_event=OMEGA):
    """Rows ``(t, CE(obs|ce_event), AP(a), CP(a|b))`` from one diagonalization.

    Quantities conditioned on an event of zero probability at some ``t`` are
    reported as NaN for that row.
    """
    u = build_propagator(h, 0.0, hbar)
    obs = np.asarray(obs, dtype=float)
    tol = _tolerance.tol(MATRIX_ROUTE_TOL) * max(1.0, float(np.max(np.abs(obs))))
    rows = []
    for t in times:
        psi_t = evolve(s0, u.at(float(t)))
        rho = DensityOperator(psi_t, DiscreteBasis(psi_t.size))
        ap = float(rho.probabilities[indicator(a, rho.space)].sum())
        try:
            ce, ce_trace, _ = ratio_routes(rho, obs, ce_event)
            route_check(ce, ce_trace, tol, f"conditional expectation at t={t}")
        except ZeroConditionEvent:
            ce = math.nan
        try:
            cp = normalized_cdo_trace(rho, a, b)
        except ZeroConditionEvent:
            cp = math.nan
        rows.append((float(t), ce, ap, cp))
    return rows


def ce_t_report(s0, h, obs, a, t, hbar=1.0):
    rho = evolved_density(s0, h, t, hbar)
    obs = np.asarray(obs, dtype=float)
    by_def, _, _ = ratio_routes(rho, obs, a)
    num, den = _matrix_route(s0, h, obs, a, t, hbar)
    tol = _tolerance.tol(MATRIX_ROUTE_TOL) * max(1.0, float(np.max(np.abs(obs))))
    return _report.ConditionedReport("CE", by_def, by_def, num / den, abs(by_def - num / den),
                                     tol, _report.describe(a), time=float(t))
