"""Randomized invariant suites behind ``qprob verify``.

Every check takes ``(rng, max_dim)`` and returns ``(ok, detail)``.  Checks
draw their own random instances, so a failure is reproducible from the
seed alone.
"""
from __future__ import annotations

import itertools
import math
import time

import numpy as np

from . import _tolerance
from . import discrete as dsc
from . import evolution as evo
from . import fock
from . import grid as grd
from . import noncommutative as nc
from .core import (OMEGA, DiscreteSet, IntervalUnion, definition_moments, event_intersect,
                   event_union, indicator, indicator_trace, normalized_cdo_trace, trace_moments)


def random_amplitudes(rng, n):
    return rng.normal(size=n) + 1j * rng.normal(size=n)


def random_state(rng, n):
    return dsc.DiscreteState(rng.uniform(-5, 5, n), random_amplitudes(rng, n))


def random_subset(rng, n, nonempty=True):
    while True:
        mask = rng.random(n) < 0.5
        if mask.any() or not nonempty:
            return DiscreteSet(tuple(np.flatnonzero(mask)))


def _dim(rng, max_dim, lo=2):
    return int(rng.integers(lo, max(lo, max_dim) + 1))


class Sabotage:
    """Test hook: relative perturbation applied to freshly built states."""

    amplitude = 0.0


# -- probability core ----------------------------------------------------

def check_state_normalization(rng, max_dim):
    worst = 0.0
    for _ in range(50):
        s = random_state(rng, _dim(rng, max_dim))
        amp = s.amplitudes * (1.0 + Sabotage.amplitude)
        worst = max(worst, abs(float(np.sum(np.abs(amp) ** 2)) - 1.0), abs(s.rho.purity() - 1.0))
    return worst <= _tolerance.tol(1e-12), f"max |Tr rho - 1| = {worst:.2e}"


def check_projector_idempotence(rng, max_dim):
    for _ in range(50):
        n = _dim(rng, max_dim)
        m = indicator(random_subset(rng, n, False), dsc.DiscreteBasis(n)).astype(float)
        if not np.array_equal(m * m, m):
            return False, "mask*mask != mask"
    return True, "exact"


def check_intersection_homomorphism(rng, max_dim):
    for _ in range(50):
        n = _dim(rng, max_dim)
        basis = dsc.DiscreteBasis(n)
        a, b = random_subset(rng, n, False), random_subset(rng, n, False)
        if not np.array_equal(indicator(event_intersect(a, b), basis),
                              indicator(a, basis) & indicator(b, basis)):
            return False, f"{a} & {b}"
    return True, "exact"


def check_monotonicity_additivity(rng, max_dim):
    worst = 0.0
    for _ in range(50):
        n = _dim(rng, max_dim)
        s = random_state(rng, n)
        a = random_subset(rng, n, False)
        b = event_union(a, random_subset(rng, n, False))
        if indicator_trace(s.rho, a) > indicator_trace(s.rho, b) + 1e-12:
            return False, "monotonicity violated"
        c = DiscreteSet(tuple(set(range(n)) - set(b.indices)))
        lhs = indicator_trace(s.rho, event_union(b, c))
        worst = max(worst, abs(lhs - indicator_trace(s.rho, b) - indicator_trace(s.rho, c)))
    return worst <= _tolerance.tol(1e-12), f"max additivity defect {worst:.2e}"


def check_normalized_cdo(rng, max_dim):
    worst = 0.0
    for _ in range(50):
        n = _dim(rng, min(max_dim, 16))
        s = random_state(rng, n)
        x, y = random_subset(rng, n), random_subset(rng, n)
        basis = dsc.DiscreteBasis(n)
        r = s.rho.matrix()
        iy = np.diag(indicator(y, basis).astype(float))
        ix = np.diag(indicator(x, basis).astype(float))
        ry = r @ iy / np.trace(r @ iy).real
        worst = max(worst, abs(np.trace(ry @ ix).real - normalized_cdo_trace(s.rho, x, y)))
    return worst <= _tolerance.tol(1e-12), f"max defect {worst:.2e}"


# -- discrete spectrum ---------------------------------------------------

def check_discrete_routes(rng, max_dim):
    worst = 0.0
    for _ in range(200):
        n = _dim(rng, max_dim, 1)
        s = random_state(rng, n)
        a = random_subset(rng, n)
        num_a, den_a = definition_moments(s.rho, s.eigenvalues, a)
        if den_a <= 1e-10:
            continue
        num_b, den_b = trace_moments(s.rho, s.eigenvalues, a)
        worst = max(worst, abs(num_a / den_a - num_b / den_b))
    return worst <= _tolerance.tol(1e-12), f"max route discrepancy {worst:.2e}"


def check_total_expectation(rng, max_dim):
    worst = 0.0
    for _ in range(50):
        n = _dim(rng, max_dim)
        s = random_state(rng, n)
        labels = rng.integers(0, 3, n)
        total = 0.0
        for k in range(3):
            part = DiscreteSet(tuple(np.flatnonzero(labels == k)))
            p = dsc.absolute_probability(s, part)
            if p > 1e-14:
                total += p * dsc.conditional_expectation(s, part)
        worst = max(worst, abs(total - dsc.expectation(s)))
    return worst <= _tolerance.tol(1e-12), f"max defect {worst:.2e}"


def check_ce_bounds(rng, max_dim):
    for _ in range(50):
        n = _dim(rng, max_dim)
        s = random_state(rng, n)
        a = random_subset(rng, n)
        ev = s.eigenvalues[list(a.indices)]
        ce = dsc.conditional_expectation(s, a)
        if not ev.min() - 1e-12 <= ce <= ev.max() + 1e-12:
            return False, f"CE {ce} outside [{ev.min()}, {ev.max()}]"
    return True, "ok"


def check_bayes(rng, max_dim):
    worst = 0.0
    for _ in range(50):
        n = _dim(rng, max_dim)
        s = random_state(rng, n)
        a, b = random_subset(rng, n), random_subset(rng, n)
        lhs = dsc.conditional_probability(s, a, b) * dsc.absolute_probability(s, b)
        worst = max(worst, abs(lhs - dsc.absolute_probability(s, event_intersect(a, b))))
        singles = sum(dsc.conditional_probability(s, DiscreteSet((i,)), OMEGA) for i in range(n))
        worst = max(worst, abs(singles - 1.0))
    return worst <= _tolerance.tol(1e-12), f"max defect {worst:.2e}"


# -- grids -----------------------------------------------------------------

def _random_gaussian(rng, n=1024, span=10.0):
    g = grd.UniformGrid.spanning(-span, span, n)
    return grd.gaussian(g, rng.uniform(-1.5, 1.5), rng.uniform(0.6, 1.5), rng.uniform(-2, 2))


def check_grid_routes(rng, max_dim):
    worst = 0.0
    for _ in range(5):
        s = _random_gaussian(rng)
        for _ in range(10):
            lo, hi = np.sort(rng.uniform(-4, 4, 2))
            a = IntervalUnion(((lo, hi),))
            num_a, den_a = definition_moments(s.rho, s.grid.points, a)
            if den_a <= 1e-10:
                continue
            num_b, den_b = trace_moments(s.rho, s.grid.points, a)
            worst = max(worst, abs(num_a / den_a - num_b / den_b))
    return worst <= _tolerance.tol(1e-10), f"max route discrepancy {worst:.2e}"


def check_quadrature_convergence(rng, max_dim):
    mu, sigma = rng.uniform(-0.5, 0.5), rng.uniform(0.7, 1.3)
    a = IntervalUnion(((mu, mu + 8 * sigma),))
    exact = mu + sigma * math.sqrt(2 / math.pi)
    errs = []
    for n in (512, 1024):
        g = grd.UniformGrid.spanning(mu - 8 * sigma, mu + 8 * sigma, n)
        errs.append(abs(grd.conditional_expectation_1d(grd.gaussian(g, mu, sigma), a) - exact))
    ratio = errs[0] / errs[1] if errs[1] > 0 else math.inf
    return ratio >= 3.0, f"error ratio {ratio:.2f}"


def _bivariate(rng, n=257):
    g = grd.UniformGrid.nodes(-8, 8, n)
    return grd.bivariate_normal(g, g, 1.0, 1.0, rng.uniform(-0.7, 0.7))


def check_tower_and_marginals(rng, max_dim):
    s = _bivariate(rng)
    ex = grd.axis_conditional_expectation(s, "x", OMEGA)
    tower = abs(grd.tower_expectation(s) - ex)
    px, _ = grd.marginals_2d(s)
    direct = np.array([np.sum(s.density[j, :]) * s.gy.dx for j in range(s.gx.n)])
    marg = float(np.max(np.abs(px - direct)))
    ok = tower <= _tolerance.tol(2e-3) and marg <= _tolerance.tol(1e-12)
    return ok, f"tower defect {tower:.2e}, marginal defect {marg:.2e}"


def check_coordinate_commutativity(rng, max_dim):
    s = _bivariate(rng, 65)
    xy = grd.apply_coordinate(s, "x", grd.apply_coordinate(s, "y"))
    yx = grd.apply_coordinate(s, "y", grd.apply_coordinate(s, "x"))
    # multiplication is commutative but not associative in floating point
    dev = float(np.max(np.abs(xy - yx)) / max(np.max(np.abs(xy)), 1e-300))
    return dev <= 4 * np.finfo(float).eps, f"relative defect {dev:.2e}"


# -- Fock space ------------------------------------------------------------

def _random_ensemble(rng, statistics):
    t = int(rng.integers(1, 5 if statistics == "fermion" else 4))
    mu = rng.uniform(-1, 1)
    beta = rng.uniform(0.2, 3.0)
    if statistics == "fermion":
        return fock.FockEnsemble(tuple(rng.uniform(-2, 2, t)), beta, mu, "fermion")
    eps = mu + rng.uniform(0.1, 3.0, t)
    return fock.FockEnsemble(tuple(eps), beta, mu, "boson", int(rng.integers(1, 7)))


def enumerated_partition(e):
    """Direct sum over occupation vectors of exp[-beta(E - mu N)]."""
    total = 0.0
    for occ in itertools.product(range(e.n_max + 1), repeat=e.modes):
        energy = sum(n * eps for n, eps in zip(occ, e.mode_energies))
        total += math.exp(-e.beta * (energy - e.mu * sum(occ)))
    return total


def check_partition_factorization(rng, max_dim):
    worst = 0.0
    for i in range(40):
        e = _random_ensemble(rng, "fermion" if i % 2 else "boson")
        ref = enumerated_partition(e)
        worst = max(worst, abs(fock.grand_partition(e) - ref) / ref)
    return worst <= _tolerance.tol(1e-12), f"max relative defect {worst:.2e}"


def check_equilibrium_consistency(rng, max_dim):
    worst = 0.0
    for i in range(20):
        e = _random_ensemble(rng, "fermion" if i % 2 else "boson")
        a = rng.normal(size=e.modes)
        rho = fock.equilibrium_state(e)
        direct = float(np.sum((rho.space.occupations @ a) * np.abs(rho.amplitudes) ** 2))
        ref = fock.linear_observable_expectation(e, a)
        worst = max(worst, abs(direct - ref) / max(1.0, abs(ref)))
        for j in range(e.modes):
            n = fock.mean_occupation(e, j)
            if e.statistics == "fermion" and not 0.0 <= n <= 1.0:
                return False, f"fermion occupancy {n}"
    return worst <= _tolerance.tol(1e-12), f"max defect {worst:.2e}"


def check_boson_truncation(rng, max_dim):
    for _ in range(10):
        x = rng.uniform(1.0, 3.0)  # tail at n_max=50 stays below 1e-20
        small = fock.FockEnsemble((x,), 1.0, 0.0, "boson", 50)
        big = fock.FockEnsemble((x,), 1.0, 0.0, "boson", 100)
        dz = abs(fock.mode_partition(big, 0) - fock.mode_partition(small, 0))
        dn = abs(fock.mean_occupation(big, 0) - fock.mean_occupation(small, 0))
        if dz >= 1e-10 or dn >= 1e-10:
            return False, f"n_max 50 vs 100 differ by {max(dz, dn):.2e}"
        prev = (0.0, -1.0)
        for n_max in range(1, 8):
            e = fock.FockEnsemble((x,), 1.0, 0.0, "boson", n_max)
            cur = (fock.mode_partition(e, 0), fock.mean_occupation(e, 0))
            if not (cur[0] > prev[0] and cur[1] > prev[1]):
                return False, "truncation not monotone"
            prev = cur
    return True, "ok"


# -- time evolution ------------------------------------------------------

def random_hermitian(rng, n):
    m = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return (m + m.conj().T) / 2


def check_unitarity_composition(rng, max_dim):
    worst_u, worst_c = 0.0, 0.0
    for _ in range(10):
        n = _dim(rng, min(max_dim, 16))
        h = evo.HamiltonianMatrix(random_hermitian(rng, n))
        t1, t2 = rng.uniform(0, 5, 2)
        u1, u2 = evo.build_propagator(h, t1), evo.build_propagator(h, t2)
        worst_u = max(worst_u, evo.unitarity_defect(u1))
        both = evo.build_propagator(h, t1 + t2).matrix()
        worst_c = max(worst_c, float(np.max(np.abs(both - u1.matrix() @ u2.matrix()))))
    ok = worst_u <= _tolerance.tol(1e-10) and worst_c <= _tolerance.tol(1e-9)
    return ok, f"unitarity {worst_u:.2e}, composition {worst_c:.2e}"


def check_purity_energy(rng, max_dim):
    worst_p, worst_e = 0.0, 0.0
    for _ in range(10):
        n = _dim(rng, min(max_dim, 16))
        hm = random_hermitian(rng, n)
        psi0 = random_amplitudes(rng, n)
        psi0 /= np.linalg.norm(psi0)
        e0 = np.vdot(psi0, hm @ psi0).real
        for t in rng.uniform(0, 10, 5):
            psi = evo.evolve(psi0, evo.build_propagator(hm, t))
            rho = np.outer(psi, psi.conj())
            worst_p = max(worst_p, abs(np.trace(rho).real - 1), abs(np.trace(rho @ rho).real - 1))
            worst_e = max(worst_e, abs(np.vdot(psi, hm @ psi).real - e0))
    ok = worst_p <= _tolerance.tol(1e-10) and worst_e <= _tolerance.tol(1e-10)
    return ok, f"purity {worst_p:.2e}, energy {worst_e:.2e}"


def check_evolution_reduction(rng, max_dim):
    worst = 0.0
    for _ in range(10):
        n = _dim(rng, min(max_dim, 16))
        s = random_state(rng, n)
        hm = random_hermitian(rng, n)
        a, b = random_subset(rng, n), random_subset(rng, n)
        worst = max(worst,
                    abs(evo.ce_t(s.amplitudes, hm, s.eigenvalues, a, 0.0) - dsc.conditional_expectation(s, a)),
                    abs(evo.ap_t(s.amplitudes, hm, a, 0.0) - dsc.absolute_probability(s, a)),
                    abs(evo.cp_t(s.amplitudes, hm, a, b, 0.0) - dsc.conditional_probability(s, a, b)))
    return worst <= _tolerance.tol(1e-12), f"max defect {worst:.2e}"


# -- non-commutative -------------------------------------------------------

def check_momentum_hermiticity(rng, max_dim):
    g = grd.UniformGrid.spanning(-5, 5, int(rng.integers(16, 128)))
    d = nc.build_momentum(g, 1.0, "periodic").hermiticity_defect()
    return d <= 1e-14, f"max asymmetry {d:.2e}"


def check_quasi_cp_normalization(rng, max_dim):
    worst = 0.0
    for _ in range(10):
        s = _random_gaussian(rng)
        x = rng.uniform(-2, 2)
        if abs(s.psi[s.grid.nearest(x)]) <= 1e-6:
            continue
        p, q = nc.quasi_cp_momentum_given_position(s, x)
        worst = max(worst, abs(complex(np.sum(q) * (p[1] - p[0])) - 1.0))
    return worst <= _tolerance.tol(1e-6), f"max |sum - 1| = {worst:.2e}"


def check_momentum_consistency(rng, max_dim):
    errs = []
    mu, sigma, k0 = rng.uniform(-1, 1), rng.uniform(0.7, 1.3), rng.uniform(0.5, 2)
    for n in (256, 512):
        g = grd.UniformGrid.spanning(-12, 12, n)
        s = grd.gaussian(g, mu, sigma, k0)
        pos = nc.momentum_expectation(s, nc.build_momentum(g, 1.0, "periodic")).real
        errs.append(abs(pos - nc.momentum_space_expectation(s)))
    ratio = errs[0] / errs[1] if errs[1] > 0 else math.inf
    return ratio >= 3.0, f"defects {errs[0]:.2e} -> {errs[1]:.2e}"


def check_divergence_detection(rng, max_dim):
    sigma = rng.uniform(0.8, 1.2)
    f = lambda x: np.exp(-x ** 2 / (4 * sigma ** 2))
    rep = nc.ce_momentum_given_position(f, 1.0, nc.refinement_grids(-8, 8, 64, 4))
    ok = rep.verdict == "divergent" and all(g >= 1.5 for g in rep.growth)
    return ok, f"growth {', '.join(f'{g:.2f}' for g in rep.growth)}"


SUITES = {
    "core": [
        ("state normalization and purity", check_state_normalization),
        ("projector idempotence", check_projector_idempotence),
        ("intersection homomorphism", check_intersection_homomorphism),
        ("monotonicity and additivity", check_monotonicity_additivity),
        ("normalized CDO equivalence", check_normalized_cdo),
    ],
    "discrete": [
        ("definition vs trace route", check_discrete_routes),
        ("law of total expectation", check_total_expectation),
        ("CE bounds", check_ce_bounds),
        ("Bayes consistency and normalization", check_bayes),
    ],
    "grid": [
        ("definition vs trace route", check_grid_routes),
        ("second-order quadrature convergence", check_quadrature_convergence),
        ("tower property and marginals", check_tower_and_marginals),
        ("coordinate operators commute", check_coordinate_commutativity),
    ],
    "fock": [
        ("grand-partition factorization", check_partition_factorization),
        ("equilibrium-state consistency", check_equilibrium_consistency),
        ("boson truncation convergence", check_boson_truncation),
    ],
    "evolution": [
        ("unitarity and composition", check_unitarity_composition),
        ("purity and energy conservation", check_purity_energy),
        ("reduction to static values", check_evolution_reduction),
    ],
    "noncomm": [
        ("momentum hermiticity", check_momentum_hermiticity),
        ("quasi-CP unit integral", check_quasi_cp_normalization),
        ("momentum-space consistency", check_momentum_consistency),
        ("divergence detection", check_divergence_detection),
    ],
}


def run(seed=0, max_dim=16, out=print):
    """Run every suite; returns the list of ``(suite, name, ok, detail, seconds)``."""
    rows = []
    for suite, checks in SUITES.items():
        for idx, (name, fn) in enumerate(checks):
            rng = np.random.default_rng([seed, hash_name(suite), idx])
            start = time.perf_counter()
            try:
                ok, detail = fn(rng, max_dim)
            except Exception as exc:  # a crashing invariant is a failing one
                ok, detail = False, f"{type(exc).__name__}: {exc}"
            rows.append((suite, name, bool(ok), detail, time.perf_counter() - start))
            out(f"{'PASS' if ok else 'FAIL'}  {suite:<10} {name:<40} {detail}")
    return rows


def hash_name(name):
    return sum((i + 1) * ord(c) for i, c in enumerate(name))
