import math

import numpy as np
import pytest
from scipy.optimize import brentq

from polsqueeze import explorer as ex
from polsqueeze.criteria import Direction, assess, s1_factor
from polsqueeze.fock_oracle import oracle_moments
from polsqueeze.stokes_core import make_coherent_input, variance_stokes

from conftest import QUARTER


class TestGoldenSection:
    def test_parabola(self):
        x, fx = ex.golden_section(lambda t: (t - 0.3) ** 2 + 1, -1, 2)
        assert x == pytest.approx(0.3, abs=1e-7)
        assert fx == pytest.approx(1, abs=1e-14)


class TestOptimizer:
    @pytest.mark.parametrize("T", [0.25, 0.5, 1.0, 2.0])
    def test_optimum(self, T):
        r = ex.optimize_factor(T)
        assert r.factor_min == pytest.approx(math.exp(-2 * T), abs=1e-6)
        assert r.degree_max == pytest.approx(1 - math.exp(-2 * T), abs=1e-6)
        assert abs(r.theta_star - QUARTER) <= r.grid_resolution
        assert abs(r.phase_sum_star - 3 * math.pi / 2) <= r.grid_resolution

    def test_report_fields(self):
        d = ex.optimize_factor(1.0).as_dict()
        assert d["grid_resolution"] == pytest.approx(math.pi / 1440)
        assert d["factor_min"] <= d["grid_factor_min"]
        assert [QUARTER, 3 * math.pi / 2] == pytest.approx(d["all_optima"][0], abs=1e-12)

    def test_zero_time_is_degenerate(self):
        with pytest.raises(ex.DegenerateOptimumError):
            ex.optimize_factor(0)

    def test_coarse_grid(self):
        r = ex.optimize_factor(0.7, grid_resolution=0.05)
        assert r.factor_min == pytest.approx(math.exp(-1.4), abs=1e-9)

    @pytest.mark.parametrize("bad", [0.0, 0.5, -1e-3])
    def test_bad_resolution(self, bad):
        with pytest.raises(ValueError):
            ex.optimize_factor(1.0, grid_resolution=bad)

    def test_factor_independent_of_amplitude(self):
        for A in (0.1, 1.0, 7.0):
            inp = make_coherent_input(A, 0.4, 1.1, 2.9)
            assert assess(variance_stokes(inp, 0.8)).factor == pytest.approx(
                float(s1_factor(0.4, 4.0, 0.8)), rel=1e-12)


class TestBoundary:
    def test_reference_value(self):
        assert float(ex.boundary_phase(1.0)) == pytest.approx(0.8657694832, abs=1e-10)

    def test_matches_root_find(self):
        for T in (0.1, 0.9, 2.5):
            root = brentq(lambda u: s1_factor(QUARTER, u, T) - 1, 0, math.pi / 2, xtol=1e-15)
            assert float(ex.boundary_phase(T)) == pytest.approx(root, abs=1e-12)

    def test_curve(self):
        c = ex.boundary_curve(3.0, 30)
        Ts, p1, p2 = map(np.array, zip(*c.samples))
        assert Ts[0] == pytest.approx(0.1) and Ts[-1] == 3.0
        assert np.all(np.diff(p1) > 0) and np.all(p1 < math.pi / 2)
        np.testing.assert_allclose(p1 + p2, math.pi, rtol=0, atol=1e-15)
        assert c.as_rows()[0] == ("T", "phi1", "phi2")

    def test_verdict_flips_across_edges(self):
        for T in (0.2, 1.0, 2.0):
            p1 = float(ex.boundary_phase(T))
            for edge, inside in ((p1, +1), (math.pi - p1, -1)):
                assert s1_factor(QUARTER, edge - inside * 0.01, T) < 1
                assert s1_factor(QUARTER, edge + inside * 0.01, T) > 1

    @pytest.mark.parametrize("args", [(0.0, 5), (1.0, 1), (1.0, 2.5), (-1.0, 3)])
    def test_curve_rejects(self, args):
        with pytest.raises(ValueError):
            ex.boundary_curve(*args)


class TestSweep:
    def test_single_point_matches_direct(self):
        t = ex.sweep({"A": [1.3], "theta": [0.4], "phi_x": [0.2], "phi_y": [1.9], "T": [0.6]})
        m = variance_stokes(make_coherent_input(1.3, 0.4, 0.2, 1.9), 0.6)
        a = assess(m)
        rec = t.records()[0]
        assert rec["S0"] == pytest.approx(m.s0, rel=1e-14)
        np.testing.assert_allclose([rec["S1"], rec["S2"], rec["S3"]], m.s_vec, rtol=1e-14, atol=1e-15)
        np.testing.assert_allclose([rec["V1"], rec["V2"], rec["V3"]], m.variances, rtol=1e-14)
        assert rec["factor"] == pytest.approx(a.factor, rel=1e-13)
        assert rec["luis_max"] == a.verdicts["luis_max"]

    def test_time_sweep_at_optimum(self):
        t = ex.sweep({"T": [0.5, 1.0, 1.5]})
        np.testing.assert_allclose(t.column("factor"), np.exp(-2 * np.array([0.5, 1.0, 1.5])), rtol=1e-12)
        assert t.columns == ex.SWEEP_COLUMNS

    def test_row_order_is_lexicographic(self):
        t = ex.sweep({"A": [1, 2], "T": [0.1, 0.2, 0.3]})
        assert [(r[0], r[4]) for r in t.rows] == [(a, T) for a in (1, 2) for T in (0.1, 0.2, 0.3)]

    def test_vectorized_rows_match_assess(self):
        grid = {"theta": np.linspace(0, math.pi / 2, 4), "phi_x": [0.0, 2.0], "T": [0.0, 0.7]}
        for axis in ("x", "y", "z"):
            for rec in ex.sweep(grid, direction=axis).records():
                inp = make_coherent_input(rec["A"], rec["theta"], rec["phi_x"], rec["phi_y"])
                a = assess(variance_stokes(inp, rec["T"]), Direction.parse(axis))
                if a.factor is None:
                    assert rec["factor"] is None or math.isnan(rec["factor"])
                else:
                    assert rec["factor"] == pytest.approx(a.factor, rel=1e-12)
                assert rec["luis_max"] == a.verdicts["luis_max"]

    def test_both_methods_agree(self, policy):
        t = ex.sweep({"theta": [0.3, 1.0], "T": [0.2, 0.9]}, method="both", policy=policy)
        assert t.columns[-1] == "max_rel_delta"
        assert max(t.column("max_rel_delta")) < 1e-6

    def test_fock_method(self, policy):
        t = ex.sweep({"T": [0.5]}, method="fock", policy=policy)
        assert t.column("factor")[0] == pytest.approx(math.exp(-1), rel=1e-8)

    def test_budgets(self):
        with pytest.raises(ex.BudgetExceededError) as err:
            ex.sweep({"T": np.linspace(0, 1, 11)}, analytic_budget=10)
        assert err.value.count == 11
        with pytest.raises(ex.BudgetExceededError):
            ex.sweep({"T": np.linspace(0, 1, 11)}, method="fock", oracle_budget=10)

    @pytest.mark.parametrize("grid,method", [({"B": [1]}, "analytic"), ({"A": [-1]}, "analytic"),
                                             ({"T": [0.1]}, "exact"), ({"theta": [math.nan]}, "analytic")])
    def test_rejects(self, grid, method):
        with pytest.raises(ValueError):
            ex.sweep(grid, method=method)


class TestScenario:
    def test_recommended_phase(self, policy):
        r = ex.scenario_section4(1.0, 1.0, policy=policy)
        s0 = float(r.moments.s0)
        assert abs(r.s3_readout) < 1e-6
        assert r.I_plus + r.I_minus == pytest.approx(s0, rel=1e-12)
        assert r.I_R + r.I_L == pytest.approx(s0, rel=1e-12)
        assert r.assessment.degree == pytest.approx(1 - math.exp(-2), rel=1e-6)
        assert r.as_dict()["recommended_phase"] == pytest.approx(3 * math.pi / 4)

    def test_zero_time_circular_balance(self, policy):
        for phase in (0.0, 0.7, 2.0):
            r = ex.scenario_section4(1.5, 0.0, phase, policy)
            assert r.I_R == pytest.approx(r.I_L, abs=1e-9)

    def test_boundary_phase_gives_unit_factor(self, policy):
        T = 0.6
        phase = float(ex.boundary_phase(T)) / 2
        assert math.sin(2 * phase) == pytest.approx(math.tanh(T))
        r = ex.scenario_section4(1.0, T, phase, policy)
        assert r.assessment.factor == pytest.approx(1, abs=1e-6)


@pytest.fixture(scope="module")
def moments():
    return oracle_moments(make_coherent_input(1, 0.5, 0.4, 2.0), 0.5)


class TestDirectionScan:
    def test_deterministic(self, moments):
        a = ex.direction_scan(moments, 300, seed=5)
        b = ex.direction_scan(moments, 300, seed=5)
        assert a == b

    def test_best_not_worse_than_samples(self, moments):
        r = ex.direction_scan(moments, 300, seed=1)
        assert r.best_factor == pytest.approx(assess(moments, Direction(r.best_direction, normalize=True)).factor)

    def test_needs_full_covariance(self):
        with pytest.raises(ValueError):
            ex.direction_scan(variance_stokes(make_coherent_input(1, 0.5, 0, 0), 0.5))
