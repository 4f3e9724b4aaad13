"""Position/momentum diagnostics on a uniform grid.

The momentum operator is ``p = (hbar/i) D`` with ``D`` the second-order
central difference (or, on request, the spectral derivative).  Conditioning
momentum on a sharp position is singular: :func:`ce_momentum_given_position`
reports how the grid value behaves under refinement instead of returning a
number, and :func:`quasi_cp_momentum_given_position` gives the complex
quasi-probability of momentum given position.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._tolerance import ZERO_CONDITION
from .core import IntervalUnion, indicator
from .errors import GridTooSmall, ZeroAmplitudeAtX, ZeroConditionEvent
from .grid import GridState1D, UniformGrid

__all__ = [
    "MomentumOperatorMatrix", "build_momentum", "position_matrix", "commutator_expectation",
    "momentum_expectation", "momentum_grid", "momentum_amplitudes",
    "momentum_space_expectation", "quasi_cp_momentum_given_position",
    "DivergenceReport", "ce_momentum_given_position", "ce_momentum_given_window",
    "refinement_grids",
]


@dataclass(frozen=True, eq=False)
class MomentumOperatorMatrix:
    matrix: np.ndarray
    grid: UniformGrid
    hbar: float
    boundary: str
    method: str = "central"

    def apply(self, psi):
        return self.matrix @ np.asarray(psi, dtype=complex)

    def hermiticity_defect(self):
        return float(np.max(np.abs(self.matrix - self.matrix.conj().T)))


def _derivative_matrix(n, dx, boundary, method):
    if method == "central":
        d = np.zeros((n, n))
        i = np.arange(n - 1)
        d[i, i + 1] = 1.0
        d[i + 1, i] = -1.0
        if boundary == "periodic":
            d[n - 1, 0] = 1.0
            d[0, n - 1] = -1.0
        return d / (2.0 * dx)
    if method == "spectral":
        if boundary != "periodic":
            raise ValueError("spectral differentiation requires a periodic boundary")
        k = 2 * np.pi * np.fft.fftfreq(n, d=dx)
        if n % 2 == 0:
            k[n // 2] = 0.0  # Nyquist mode has no odd partner
        eye = np.eye(n)
        d = np.fft.ifft(1j * k[:, None] * np.fft.fft(eye, axis=0), axis=0)
        return d
    raise ValueError(f"unknown differentiation method {method!r}")


def build_momentum(grid: UniformGrid, hbar=1.0, boundary="periodic", method="central"):
    """Dense momentum matrix ``(hbar/i) D`` on ``grid``."""
    if grid.n < 3:
        raise GridTooSmall(f"momentum operator needs n >= 3, got {grid.n}")
    if boundary not in ("periodic", "zero"):
        raise ValueError(f"boundary must be 'periodic' or 'zero', got {boundary!r}")
    d = _derivative_matrix(grid.n, grid.dx, boundary, method)
    return MomentumOperatorMatrix(-1j * hbar * d, grid, float(hbar), boundary, method)


def position_matrix(grid):
    return np.diag(grid.points)


def _braket(s, vec):
    return complex(np.vdot(s.psi, vec) * s.grid.dx)


def momentum_expectation(s: GridState1D, p: MomentumOperatorMatrix) -> complex:
    """``<psi|p|psi>`` in position space."""
    return _braket(s, p.apply(s.psi))


def commutator_expectation(s: GridState1D, p: MomentumOperatorMatrix) -> complex:
    """``<psi|[X, p]|psi>``; tends to ``i hbar`` as ``dx -> 0``."""
    x = s.grid.points
    psi = s.psi
    comm = x * p.apply(psi) - p.apply(x * psi)
    return _braket(s, comm)


def momentum_grid(grid: UniformGrid, hbar=1.0):
    """DFT-conjugate momenta, ascending (fftshifted), spacing ``2 pi hbar/(n dx)``."""
    return np.fft.fftshift(2 * np.pi * hbar * np.fft.fftfreq(grid.n, d=grid.dx))


def momentum_amplitudes(s: GridState1D, hbar=1.0):
    """``phi(p_m) = dx/sqrt(2 pi hbar) sum_j exp(-i p_m x_j/hbar) psi_j``."""
    g = s.grid
    p = momentum_grid(g, hbar)
    phase = np.exp(-1j * p * g.x0 / hbar)
    return p, g.dx / math.sqrt(2 * math.pi * hbar) * phase * np.fft.fftshift(np.fft.fft(s.psi))


def momentum_space_expectation(s: GridState1D, hbar=1.0) -> float:
    p, phi = momentum_amplitudes(s, hbar)
    dp = p[1] - p[0]
    return float(np.sum(p * np.abs(phi) ** 2) * dp)


def quasi_cp_momentum_given_position(s: GridState1D, x: float, hbar=1.0):
    """Complex quasi-probability density of momentum given position.

    ``P(p|x) = <psi|p><p|x> / psi*(x)`` on the conjugate momentum grid,
    evaluated at the grid point nearest to ``x``.

    Returns
    -------
    p : ndarray
        Momentum grid (ascending).
    values : ndarray of complex
        ``P(p_m | x)``; ``sum(values) * dp`` is 1 up to rounding.
    """
    g = s.grid
    l = g.nearest(x)
    psi_x = s.psi[l]
    if not abs(psi_x) > 1e-12:
        raise ZeroAmplitudeAtX(f"|psi({g.points[l]})| = {abs(psi_x):.3e}")
    p, phi = momentum_amplitudes(s, hbar)
    bra_p_x = np.exp(-1j * p * g.points[l] / hbar) / math.sqrt(2 * math.pi * hbar)
    return p, phi.conj() * bra_p_x / np.conj(psi_x)


@dataclass
class DivergenceReport:
    """Refinement sweep for ``E[p | x]`` at a sharp position.

    ``values[i]`` is the grid value on the ``i``-th grid, ``magnitudes`` its
    modulus, ``finite_parts`` the value with the coincident-point factor
    ``1/dx`` removed (the local momentum ``(p psi)(x)/psi(x)``).
    """

    x: float
    dx: list
    values: list
    magnitudes: list
    finite_parts: list
    growth: list
    verdict: str
    notes: list = field(default_factory=list)

    def to_dict(self):
        return {
            "x": self.x,
            "dx": self.dx,
            "values": [[v.real, v.imag] for v in self.values],
            "magnitudes": self.magnitudes,
            "finite_parts": [[v.real, v.imag] for v in self.finite_parts],
            "growth": self.growth,
            "verdict": self.verdict,
            "notes": self.notes,
        }


def refinement_grids(lo, hi, cells, levels):
    """Node grids ``lo, lo + dx, ..., hi`` with ``cells * 2**i`` intervals.

    Every point of a coarse grid stays a point of all finer grids, so a
    position that is a node once is conditioned on exactly at each level.
    """
    return [UniformGrid(lo, (hi - lo) / (cells * 2 ** i), cells * 2 ** i + 1)
            for i in range(levels)]


def ce_momentum_given_position(wavefunction, x, grids, hbar=1.0, boundary="zero",
                               zero_tol=1e-8, growth_threshold=1.5):
    """Evaluate ``Tr{p rho I_x} / Tr{rho I_x}`` on a sequence of grids.

    ``I_x`` is the delta-normalized projector on the grid cell nearest to
    ``x``.  In the numerator both delta factors of the point projector land
    on the same cell, which leaves one uncancelled ``delta(0) = 1/dx``; the
    grid value is therefore ``(p psi)_l / (psi_l dx)``.  Its modulus grows
    like ``1/dx`` unless the local momentum vanishes (e.g. at the centre of a
    real even wavefunction), so no finite limit exists.

    Verdicts: ``"conditionally-zero"`` if every value is below ``zero_tol``
    in modulus, ``"divergent"`` if the modulus grows by at least
    ``growth_threshold`` at every refinement, otherwise ``"converged"``.
    """
    dxs, values, finite = [], [], []
    for g in grids:
        s = GridState1D.from_function(g, wavefunction)
        l = g.nearest(x)
        if not abs(s.psi[l]) ** 2 > ZERO_CONDITION:
            raise ZeroConditionEvent(f"x={x}", abs(s.psi[l]) ** 2)
        p = build_momentum(g, hbar, boundary)
        local = complex(p.apply(s.psi)[l] / s.psi[l])
        dxs.append(g.dx)
        finite.append(local)
        values.append(local / g.dx)
    mags = [abs(v) for v in values]
    growth = [mags[i + 1] / mags[i] if mags[i] > 0 else math.inf for i in range(len(mags) - 1)]
    notes = []
    if max(mags) < zero_tol:
        verdict = "conditionally-zero"
        notes.append("value vanishes at every refinement by symmetry cancellation")
    elif growth and all(r >= growth_threshold for r in growth):
        verdict = "divergent"
        notes.append("magnitude scales like 1/dx; no finite limit")
    else:
        verdict = "converged"
    return DivergenceReport(float(x), dxs, values, mags, finite, growth, verdict, notes)


def ce_momentum_given_window(s: GridState1D, x, half_width, p: MomentumOperatorMatrix):
    """Experimental smeared conditioning on the event ``[x - w, x + w]``.

    Returns the (generally complex) ``Tr{p rho I_A} / Tr{rho I_A}``.  No
    limit as ``w -> 0`` is asserted.
    """
    a = IntervalUnion(((x - half_width, x + half_width),))
    mask = indicator(a, s.grid)
    den = float(np.sum(np.abs(s.psi[mask]) ** 2) * s.grid.dx)
    if not den > ZERO_CONDITION:
        raise ZeroConditionEvent(a, den)
    num = np.vdot(s.psi[mask], p.apply(s.psi)[mask]) * s.grid.dx
    return complex(num / den)
