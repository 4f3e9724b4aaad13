import math

import numpy as np
import pytest

from qprob import evolution as evo
from qprob.core import OMEGA, DiscreteSet
from qprob.errors import DimensionMismatch, NonHermitian

from conftest import random_amplitudes

RABI = [[0.0, 1.0], [1.0, 0.0]]
EXCITED = DiscreteSet((1,))


def random_hermitian(rng, n):
    m = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return (m + m.conj().T) / 2


def test_rabi_propagator_closed_form():
    for t in (0.0, 0.4, 1.3, 7.0):
        u = evo.build_propagator(RABI, t).matrix()
        oracle = np.array([[math.cos(t), -1j * math.sin(t)], [-1j * math.sin(t), math.cos(t)]])
        np.testing.assert_allclose(u, oracle, atol=1e-14)


def test_rabi_excited_population():
    times = np.linspace(0.0, 10.0, 101)
    rows = evo.time_series([1, 0], evo.HamiltonianMatrix(RABI), [0, 1], EXCITED, OMEGA, times)
    ap = np.array([r[2] for r in rows])
    np.testing.assert_allclose(ap, np.sin(times) ** 2, atol=1e-12)


def test_hbar_rescales_time():
    a = evo.ap_t([1, 0], RABI, EXCITED, 2.0, hbar=2.0)
    assert a == pytest.approx(math.sin(1.0) ** 2, abs=1e-14)


def test_composition_and_unitarity(rng):
    h = random_hermitian(rng, 8)
    u1 = evo.build_propagator(h, 0.7)
    u2 = u1.at(1.9)
    u12 = u1.at(2.6)
    np.testing.assert_allclose(u12.matrix(), u1.matrix() @ u2.matrix(), atol=1e-12)
    assert evo.unitarity_defect(u12) < 1e-12


def test_trace_purity_and_energy_conserved(rng):
    h = random_hermitian(rng, 6)
    psi0 = random_amplitudes(rng, 6)
    e0 = np.vdot(psi0, h @ psi0).real
    for t in (0.5, 3.0, 11.0):
        rho = evo.evolved_density(psi0, h, t)
        assert rho.trace() == pytest.approx(1.0, abs=1e-12)
        assert rho.purity() == pytest.approx(1.0, abs=1e-12)
        psi = rho.amplitudes
        assert np.vdot(psi, h @ psi).real == pytest.approx(e0, abs=1e-12)


def test_zero_time_reduces_to_static(rng):
    h = random_hermitian(rng, 5)
    psi0 = random_amplitudes(rng, 5)
    obs = np.arange(5.0)
    a = DiscreteSet((1, 3, 4))
    p = np.abs(psi0) ** 2
    assert evo.ap_t(psi0, h, a, 0.0) == pytest.approx(p[[1, 3, 4]].sum(), abs=1e-14)
    assert evo.ce_t(psi0, h, obs, a, 0.0) == pytest.approx(
        np.dot(obs[[1, 3, 4]], p[[1, 3, 4]]) / p[[1, 3, 4]].sum(), abs=1e-13)


def test_stationary_state_is_frozen(rng):
    h = random_hermitian(rng, 4)
    _, v = np.linalg.eigh(h)
    a = DiscreteSet((0, 2))
    values = [evo.ap_t(v[:, 1], h, a, t) for t in (0.0, 1.0, 5.0)]
    assert max(values) - min(values) < 1e-13


def test_cp_and_report():
    assert evo.cp_t([1, 0], RABI, EXCITED, OMEGA, 0.8) == pytest.approx(math.sin(0.8) ** 2, abs=1e-14)
    r = evo.ce_t_report([1, 0], RABI, [0, 1], OMEGA, 0.8)
    assert r.verdict == "ok" and r.time == 0.8


def test_zero_probability_rows_are_nan():
    rows = evo.time_series([1, 0], evo.HamiltonianMatrix(RABI), [0, 1], EXCITED, EXCITED, [0.0, 1.0],
                           ce_event=EXCITED)
    assert math.isnan(rows[0][1]) and math.isnan(rows[0][3])
    assert rows[1][1] == pytest.approx(1.0) and rows[1][3] == pytest.approx(1.0)


def test_rejects_non_hermitian():
    with pytest.raises(NonHermitian):
        evo.HamiltonianMatrix([[0.0, 1.0], [0.0, 0.0]])


def test_rejects_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        evo.evolve([1, 0, 0], evo.build_propagator(RABI, 1.0))
    with pytest.raises(DimensionMismatch):
        evo.HamiltonianMatrix(np.zeros((2, 3)))
