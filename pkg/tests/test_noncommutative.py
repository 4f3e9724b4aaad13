import math

import numpy as np
import pytest

from qprob import noncommutative as nc
from qprob.grid import GridState1D, UniformGrid, gaussian
from qprob.errors import GridTooSmall, ZeroAmplitudeAtX


def gaussian_fn(center=0.0, sigma=1.0, k0=0.0):
    return lambda x: np.exp(-(x - center) ** 2 / (4 * sigma ** 2) + 1j * k0 * x)


@pytest.mark.parametrize("boundary", ["periodic", "zero"])
def test_momentum_is_hermitian(boundary):
    p = nc.build_momentum(UniformGrid.nodes(-4, 4, 65), boundary=boundary)
    assert p.hermiticity_defect() < 1e-15


def test_spectral_momentum_is_hermitian():
    p = nc.build_momentum(UniformGrid.spanning(-4, 4, 64), method="spectral")
    assert p.hermiticity_defect() < 1e-12


def test_too_small_grid():
    with pytest.raises(GridTooSmall):
        nc.build_momentum(UniformGrid(0.0, 1.0, 2))


def test_plane_wave_dispersion():
    # central differences turn hbar k into hbar sin(k dx)/dx
    n, length, hbar = 64, 2 * math.pi, 0.7
    g = UniformGrid(0.0, length / n, n)
    k = 5.0
    s = GridState1D(g, np.exp(1j * k * g.points))
    p = nc.build_momentum(g, hbar=hbar, boundary="periodic")
    value = nc.momentum_expectation(s, p)
    assert value.real == pytest.approx(hbar * math.sin(k * g.dx) / g.dx, abs=1e-12)
    assert abs(value.imag) < 1e-12


def test_boosted_gaussian_momentum():
    s = gaussian(UniformGrid.spanning(-10, 10, 2048), 0.0, 1.0, k0=1.5)
    p = nc.build_momentum(s.grid)
    assert nc.momentum_expectation(s, p).real == pytest.approx(1.5, abs=1e-3)
    assert nc.momentum_space_expectation(s) == pytest.approx(1.5, abs=1e-10)


def test_commutator_approaches_i_hbar():
    errs = []
    for n in (128, 256, 512):
        s = gaussian(UniformGrid.spanning(-10, 10, n), 0.3, 1.0, k0=0.5)
        c = nc.commutator_expectation(s, nc.build_momentum(s.grid, hbar=1.0, boundary="zero"))
        errs.append(abs(c - 1j))
    assert errs[-1] < 1e-3
    assert errs[0] / errs[1] >= 3 and errs[1] / errs[2] >= 3


def test_momentum_grid_spacing():
    g = UniformGrid.spanning(-5, 5, 100)
    p = nc.momentum_grid(g, hbar=2.0)
    assert p[1] - p[0] == pytest.approx(2 * math.pi * 2.0 / (100 * g.dx))
    assert np.all(np.diff(p) > 0)


def test_momentum_amplitudes_are_normalized():
    s = gaussian(UniformGrid.spanning(-10, 10, 512), 1.0, 0.8, k0=-2.0)
    p, phi = nc.momentum_amplitudes(s)
    assert np.sum(np.abs(phi) ** 2) * (p[1] - p[0]) == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("x", [-1.0, 0.0, 0.7, 2.0])
def test_quasi_cp_integrates_to_one(x):
    s = gaussian(UniformGrid.spanning(-12, 12, 1024), 0.2, 1.1, k0=0.8)
    p, values = nc.quasi_cp_momentum_given_position(s, x)
    total = np.sum(values) * (p[1] - p[0])
    assert abs(total - 1) < 1e-10


def test_quasi_cp_at_node_raises():
    g = UniformGrid.nodes(-5, 5, 101)
    s = GridState1D(g, np.sin(np.pi * g.points / 5))
    with pytest.raises(ZeroAmplitudeAtX):
        nc.quasi_cp_momentum_given_position(s, 0.0)


def test_refinement_grids_nest():
    grids = nc.refinement_grids(-8, 8, 16, 4)
    coarse = set(np.round(grids[0].points, 12))
    assert coarse <= set(np.round(grids[-1].points, 12))
    assert [g.dx for g in grids] == [1.0, 0.5, 0.25, 0.125]


def test_divergence_off_centre():
    grids = nc.refinement_grids(-8, 8, 128, 5)
    rep = nc.ce_momentum_given_position(gaussian_fn(), 1.0, grids)
    assert rep.verdict == "divergent"
    assert all(r >= 1.5 for r in rep.growth)
    # local momentum of a real Gaussian at x: -i hbar psi'/psi = i x/(2 sigma^2)
    assert rep.finite_parts[-1] == pytest.approx(0.5j, abs=1e-4)


def test_divergence_at_symmetric_point():
    grids = nc.refinement_grids(-8, 8, 128, 5)
    rep = nc.ce_momentum_given_position(gaussian_fn(), 0.0, grids)
    assert rep.verdict == "conditionally-zero"
    assert max(rep.magnitudes) < 1e-8


def test_boosted_finite_part_is_k0():
    grids = nc.refinement_grids(-8, 8, 128, 5)
    rep = nc.ce_momentum_given_position(gaussian_fn(k0=2.0), 0.0, grids)
    assert rep.verdict == "divergent"
    assert rep.finite_parts[-1].real == pytest.approx(2.0, abs=1e-3)


def test_report_serializes():
    grids = nc.refinement_grids(-8, 8, 32, 3)
    d = nc.ce_momentum_given_position(gaussian_fn(), 1.0, grids).to_dict()
    assert d["verdict"] == "divergent" and len(d["values"]) == 3


def test_window_conditioning_is_finite():
    s = gaussian(UniformGrid.spanning(-8, 8, 1024), 0.0, 1.0, k0=1.0)
    p = nc.build_momentum(s.grid, boundary="zero")
    v = nc.ce_momentum_given_window(s, 0.0, 0.5, p)
    assert v.real == pytest.approx(1.0, abs=1e-3)
