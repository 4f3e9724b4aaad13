import math

import numpy as np
import pytest

from qprob import grid as grd
from qprob.core import OMEGA, DiscreteSet, IntervalUnion, ProductEvent
from qprob.errors import IncompatibleEvents, ZeroConditionEvent

SQRT_2_OVER_PI = math.sqrt(2 / math.pi)


def interval(lo, hi):
    return IntervalUnion(((lo, hi),))


@pytest.fixture(scope="module")
def std_normal():
    return grd.gaussian(grd.UniformGrid.spanning(-8.0, 8.0, 4096), 0.0, 1.0)


@pytest.fixture(scope="module")
def correlated_cells():
    # cell-centred, so no grid row sits on a half-plane boundary
    g = grd.UniformGrid.spanning(-8.0, 8.0, 400)
    return grd.bivariate_normal(g, g, correlation=0.5)


@pytest.fixture(scope="module")
def correlated():
    g = grd.UniformGrid.nodes(-8.0, 8.0, 321)
    return grd.bivariate_normal(g, g, correlation=0.5)


class TestUniformGrid:
    def test_spanning_is_cell_centred(self):
        g = grd.UniformGrid.spanning(0.0, 1.0, 4)
        np.testing.assert_allclose(g.points, [0.125, 0.375, 0.625, 0.875])

    def test_nodes_include_endpoints(self):
        g = grd.UniformGrid.nodes(-1.0, 1.0, 5)
        np.testing.assert_allclose(g.points, [-1.0, -0.5, 0.0, 0.5, 1.0])

    def test_nearest_and_outside(self):
        g = grd.UniformGrid.nodes(0.0, 1.0, 11)
        assert g.nearest(0.52) == 5
        with pytest.raises(ValueError):
            g.nearest(2.0)

    @pytest.mark.parametrize("dx,n", [(0.0, 4), (-1.0, 4), (0.1, 1)])
    def test_rejects_degenerate(self, dx, n):
        with pytest.raises(ValueError):
            grd.UniformGrid(0.0, dx, n)

    def test_interval_mask_uses_cell_centres(self):
        g = grd.UniformGrid.spanning(0.0, 1.0, 4)
        assert g.mask(interval(0.3, 0.7)).tolist() == [False, True, True, False]

    def test_fock_event_is_rejected(self):
        from qprob.core import FockPredicate
        with pytest.raises(IncompatibleEvents):
            grd.UniformGrid.nodes(0, 1, 3).mask(FockPredicate(bounds=((0, 0, 1),)))


class TestOneDimension:
    def test_normalized_on_grid(self, std_normal):
        assert grd.absolute_probability_1d(std_normal, OMEGA) == pytest.approx(1.0, abs=1e-14)

    def test_one_sigma_probability(self, std_normal):
        # erf(1/sqrt 2) for the standard normal density; grid edges fall on +-1
        assert grd.absolute_probability_1d(std_normal, interval(-1, 1)) == pytest.approx(
            math.erf(1 / math.sqrt(2)), abs=1e-5)

    def test_half_normal_mean(self, std_normal):
        ce = grd.conditional_expectation_1d(std_normal, interval(0.0, 8.0))
        assert ce == pytest.approx(SQRT_2_OVER_PI, abs=5e-4)

    def test_symmetric_mean_is_zero(self, std_normal):
        assert grd.expectation_1d(std_normal) == pytest.approx(0.0, abs=1e-14)

    def test_shift_moves_mean(self):
        g = grd.UniformGrid.nodes(-10.0, 10.0, 2001)
        s = grd.gaussian(g, 0.0, 1.0)
        assert grd.expectation_1d(s.shifted(1.5)) == pytest.approx(1.5, abs=1e-10)

    def test_phase_does_not_change_probabilities(self):
        g = grd.UniformGrid.spanning(-8.0, 8.0, 512)
        plain = grd.gaussian(g, 0.3, 0.7)
        boosted = grd.gaussian(g, 0.3, 0.7, k0=4.0)
        np.testing.assert_allclose(plain.density, boosted.density, atol=1e-15)

    def test_conditional_probability_of_nested_intervals(self, std_normal):
        p_inner = grd.absolute_probability_1d(std_normal, interval(0, 1))
        p_outer = grd.absolute_probability_1d(std_normal, interval(0, 8))
        cp = grd.conditional_probability_1d(std_normal, interval(0, 1), interval(0, 8))
        assert cp == pytest.approx(p_inner / p_outer, abs=1e-14)

    def test_empty_window_raises(self, std_normal):
        with pytest.raises(ZeroConditionEvent):
            grd.conditional_expectation_1d(std_normal, interval(100.0, 101.0))

    def test_report_routes(self, std_normal):
        r = grd.ce_report_1d(std_normal, interval(-2.0, 0.5))
        assert r.verdict == "ok"

    def test_midpoint_error_is_second_order(self):
        errs = []
        for n in (1024, 2048, 4096):
            s = grd.gaussian(grd.UniformGrid.spanning(-8.0, 8.0, n), 0.0, 1.0)
            errs.append(abs(grd.conditional_expectation_1d(s, interval(0, 8)) - SQRT_2_OVER_PI))
        assert errs[0] / errs[1] > 3 and errs[1] / errs[2] > 3

    def test_sample_file_round_trip(self, tmp_path):
        g = grd.UniformGrid.spanning(-4.0, 4.0, 64)
        s = grd.gaussian(g, 0.5, 0.8, k0=1.0)
        path = tmp_path / "psi.txt"
        grd.save_samples(s, path)
        back = grd.load_samples(path)
        assert back.grid == s.grid
        np.testing.assert_allclose(back.psi, s.psi, atol=1e-15)

    def test_sample_file_accepts_commas_and_comments(self, tmp_path):
        path = tmp_path / "psi.csv"
        path.write_text("# two cells\nx0 0.0\ndx 1.0\nn 3\n0, 1.0, 0.0\n2, 0.0, 1.0  # last\n")
        s = grd.load_samples(path)
        np.testing.assert_allclose(s.density, [0.5, 0.0, 0.5])


class TestTwoDimensions:
    def test_separable_state_is_independent(self):
        g = grd.UniformGrid.nodes(-6.0, 6.0, 201)
        s = grd.GridState2D.separable(grd.gaussian(g, 0.5, 1.0), grd.gaussian(g, -1.0, 0.6))
        ok, dev = grd.independence_check(s)
        assert ok and dev < 1e-10

    def test_box_eigenstate_is_independent(self):
        ok, dev = grd.independence_check(grd.box2d(2, 3, 1.0, 2.0, n=96))
        assert ok

    def test_correlated_state_is_dependent(self, correlated):
        ok, dev = grd.independence_check(correlated)
        assert not ok and dev > 1e-3

    def test_covariance(self, correlated):
        assert grd.ce_borel_2d(correlated, lambda x, y: x * y, ProductEvent((OMEGA, OMEGA))) == pytest.approx(0.5, abs=1e-9)

    def test_conditional_mean_law(self, correlated):
        # X | Y=y ~ N(rho y, 1 - rho^2)
        assert grd.ce_given_point(correlated, 1.0) == pytest.approx(0.5, abs=1e-9)

    def test_conditional_density_given_point(self, correlated):
        dens = grd.conditional_density_given_point(correlated, 1.0)
        x = correlated.gx.points
        dx = correlated.gx.dx
        assert np.sum(dens) * dx == pytest.approx(1.0, abs=1e-12)
        var = np.sum((x - 0.5) ** 2 * dens) * dx
        assert var == pytest.approx(0.75, abs=1e-9)
        peak = grd.cp_given_point(correlated, 0.5, 1.0)
        assert peak == pytest.approx(1 / math.sqrt(2 * math.pi * 0.75), abs=1e-9)

    def test_axis_ce_given_half_plane(self, correlated_cells):
        # E[X | Y > 0] = rho * E[Y | Y > 0] = 0.5 sqrt(2/pi)
        a = ProductEvent((OMEGA, interval(0.0, 8.0)))
        assert grd.axis_conditional_expectation(correlated_cells, "x", a) == pytest.approx(
            0.5 * SQRT_2_OVER_PI, abs=1e-3)

    def test_tower_property(self, correlated):
        assert grd.tower_expectation(correlated) == pytest.approx(
            grd.axis_conditional_expectation(correlated, "x", ProductEvent((OMEGA, OMEGA))), abs=1e-12)

    def test_marginals_integrate_to_one(self, correlated):
        px, py = grd.marginals_2d(correlated)
        assert px.sum() * correlated.gx.dx == pytest.approx(1.0, abs=1e-12)
        assert py.sum() * correlated.gy.dx == pytest.approx(1.0, abs=1e-12)

    def test_region_event(self, correlated_cells):
        s = correlated_cells
        quadrant = grd.region(s.space, lambda x, y: (x > 0) & (y > 0))
        # orthant probability 1/4 + arcsin(rho)/(2 pi) = 1/3 for rho = 1/2
        assert grd.absolute_probability_2d(s, quadrant) == pytest.approx(1 / 3, abs=1e-3)

    def test_point_event_outside_grid(self, correlated):
        with pytest.raises(ValueError):
            grd.ce_given_point(correlated, 50.0)

    def test_one_axis_product_rejected_in_2d(self, correlated):
        with pytest.raises(IncompatibleEvents):
            grd.absolute_probability_2d(correlated, ProductEvent((OMEGA,)))

    def test_discrete_cells_as_events(self):
        g = grd.UniformGrid.nodes(0.0, 1.0, 5)
        s = grd.GridState1D(g, np.ones(5))
        assert grd.absolute_probability_1d(s, DiscreteSet((0, 1))) == pytest.approx(0.4)
