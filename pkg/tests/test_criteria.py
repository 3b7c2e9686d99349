import math

import numpy as np
import pytest
from scipy.optimize import brentq
from scipy.spatial.transform import Rotation

from polsqueeze import criteria as cr
from polsqueeze.fock_oracle import oracle_moments
from polsqueeze.stokes_core import StokesMoments, make_coherent_input, variance_stokes

from conftest import QUARTER

DIAG = cr.Direction((0, 1 / math.sqrt(2), 1 / math.sqrt(2)))


def fake_moments(s0, s_vec, cov, source="fock_oracle"):
    return StokesMoments(s0, s_vec, cov, source)


@pytest.fixture(scope="module")
def oracle_half(request):
    inp = make_coherent_input(1, QUARTER, 3 * QUARTER, 3 * QUARTER)
    return oracle_moments(inp, 0.5)


@pytest.fixture(scope="module")
def oracle_generic():
    return oracle_moments(make_coherent_input(1.4, 0.5, 0.2, 2.5), 0.6)


class TestDirection:
    @pytest.mark.parametrize("text,vec", [("x", (1, 0, 0)), ("Y", (0, 1, 0)), ("s3", (0, 0, 1)),
                                          ("0,3,4", (0, 0.6, 0.8))])
    def test_parse(self, text, vec):
        np.testing.assert_allclose(cr.Direction.parse(text).n, vec)

    @pytest.mark.parametrize("bad", ["w", "1,2", "0,0,0", "a,b,c"])
    def test_parse_rejects(self, bad):
        with pytest.raises(ValueError):
            cr.Direction.parse(bad)

    def test_unit_length_enforced(self):
        with pytest.raises(ValueError):
            cr.Direction((1, 1, 0))
        assert np.linalg.norm(cr.Direction((1, 1, 0), normalize=True).n) == pytest.approx(1, abs=1e-15)


class TestVarianceAlong:
    def test_s1_variance_is_intensity(self):
        inp = make_coherent_input(1.7, 0.4, 1, 2)
        assert cr.variance_along(variance_stokes(inp, 0.9), (1, 0, 0)) == pytest.approx(1.7**2, rel=1e-15)
        assert cr.variance_along(oracle_moments(inp, 0.9), (1, 0, 0)) == pytest.approx(1.7**2, rel=1e-9)

    def test_coherent_s2(self):
        m = variance_stokes(make_coherent_input(1, 0.3, 0.1, 0.2), 0)
        assert cr.variance_along(m, (0, 1, 0)) == pytest.approx(1.0, rel=1e-14)

    def test_oblique_direction(self, oracle_half):
        c = oracle_half.covariance
        v = cr.variance_along(oracle_half, DIAG)
        lo = min(c[1, 1], c[2, 2]) - abs(c[1, 2])
        hi = max(c[1, 1], c[2, 2]) + abs(c[1, 2])
        assert lo <= v <= hi
        elementwise = sum(DIAG.n[j] * DIAG.n[k] * c[j, k] for j in range(3) for k in range(3))
        assert v == pytest.approx(elementwise, rel=1e-12)

    def test_analytic_needs_principal_axis(self):
        m = variance_stokes(make_coherent_input(1, QUARTER, 0, 0), 0.5)
        with pytest.raises(cr.UnsupportedDirectionError, match="oracle"):
            cr.variance_along(m, DIAG)


class TestMaxPerp:
    def test_parallel(self):
        m = fake_moments(5, (0, 3, 4), np.eye(3))
        assert cr.max_perp_expectation(m, cr.Direction((0, 0.6, 0.8))) == pytest.approx(0, abs=1e-15)

    def test_pythagorean(self):
        m = fake_moments(5, (0, 3, 4), np.eye(3))
        assert cr.max_perp_expectation(m, (1, 0, 0)) == 5.0

    def test_monte_carlo_maximum(self):
        rng = np.random.default_rng(3)
        s = np.array([1.2, -0.7, 2.1])
        n = rng.normal(size=3)
        n /= np.linalg.norm(n)
        got = cr.max_perp_expectation(fake_moments(4, s, np.eye(3)), cr.Direction(n))
        # random unit vectors in the plane orthogonal to n
        basis = np.linalg.svd(n[None, :])[2][1:]
        ang = rng.uniform(0, 2 * np.pi, 10_000)
        perps = np.cos(ang)[:, None] * basis[0] + np.sin(ang)[:, None] * basis[1]
        sampled = np.abs(perps @ s)
        assert sampled.max() <= got * (1 + 1e-12)
        assert sampled.max() >= got * (1 - 1e-3)


class TestAssess:
    def test_coherent_state_is_not_squeezed(self):
        rng = np.random.default_rng(2)
        for _ in range(10):
            inp = make_coherent_input(rng.uniform(0.3, 2), *rng.uniform(0, 2 * math.pi, 3))
            for source in (variance_stokes(inp, 0), oracle_moments(inp, 0)):
                for axis in ("x", "y", "z"):
                    a = cr.assess(source, cr.Direction.parse(axis))
                    if not a.applicable:
                        continue
                    assert a.factor >= 1 - 1e-9
                    assert not any(a.verdicts.values())

    def test_optimum_factor(self, optimum_input):
        a = cr.assess(variance_stokes(optimum_input, 1.0))
        assert a.factor == pytest.approx(math.exp(-2), rel=1e-13)
        assert a.factor == pytest.approx(0.1353353, abs=1e-7)
        assert a.degree == pytest.approx(0.8646647, abs=1e-7)
        assert a.verdicts == {"chirkin": True, "heersink": True, "luis_pair": True, "luis_max": True}

    def test_boundary_factor_is_one(self):
        for T in (0.3, 1.0, 1.4):
            u = math.asin(math.tanh(T))
            inp = make_coherent_input(1, QUARTER, u / 2, u / 2)
            assert cr.assess(variance_stokes(inp, T)).factor == pytest.approx(1, abs=1e-12)
            assert not cr.assess(variance_stokes(inp, T)).verdicts["luis_max"]
        # the oracle sees the same boundary
        u = math.asin(math.tanh(0.5))
        inp = make_coherent_input(1, QUARTER, u / 2, u / 2)
        assert cr.assess(oracle_moments(inp, 0.5)).factor == pytest.approx(1, abs=1e-6)

    def test_boundary_root_find(self):
        # independent root of factor(u) = 1 on the rising branch
        T = 0.8
        root = brentq(lambda u: cr.s1_factor(QUARTER, u, T) - 1, 0, math.pi / 2, xtol=1e-15)
        assert root == pytest.approx(math.asin(math.tanh(T)), abs=1e-12)

    def test_not_applicable_is_flagged(self):
        m = fake_moments(2, (2, 0, 0), np.diag([1, 2, 2]))
        a = cr.assess(m, (1, 0, 0))
        assert a.factor is None and a.degree is None and a.db is None
        assert not a.verdicts["luis_max"]
        vac = variance_stokes(make_coherent_input(0, 0, 0, 0), 0.5)
        assert cr.assess(vac).factor is None

    def test_degree_factor_duality(self, oracle_generic):
        for axis in ("x", "y", "z", "1,1,1", "-1,2,0.5"):
            a = cr.assess(oracle_generic, cr.Direction.parse(axis))
            assert a.degree + a.factor == pytest.approx(1.0, abs=2e-16 * max(1, abs(a.factor)))

    def test_luis_max_implies_factor_below_one(self):
        rng = np.random.default_rng(9)
        for _ in range(200):
            cov = rng.normal(size=(3, 3))
            cov = cov @ cov.T
            a = cr.assess(fake_moments(10, rng.normal(scale=3, size=3), cov), cr.Direction(rng.normal(size=3), normalize=True))
            if a.verdicts["luis_max"]:
                assert a.factor < 1

    def test_luis_max_witnessed_by_sampled_perpendicular(self, oracle_half):
        n = cr.S1_AXIS
        a = cr.assess(oracle_half, n)
        assert a.verdicts["luis_max"]
        rng = np.random.default_rng(4)
        ang = rng.uniform(0, 2 * np.pi, 1000)
        perps = np.stack([np.zeros_like(ang), np.cos(ang), np.sin(ang)], axis=1)
        assert np.any(a.variance_along < np.abs(perps @ oracle_half.s_vec))

    def test_rotation_invariance(self, oracle_generic):
        m = oracle_generic
        rng = np.random.default_rng(8)
        for R in Rotation.random(5, random_state=12).as_matrix():
            n = rng.normal(size=3)
            n /= np.linalg.norm(n)
            rotated = fake_moments(m.s0, R @ m.s_vec, R @ m.covariance @ R.T)
            a = cr.assess(m, cr.Direction(n))
            b = cr.assess(rotated, cr.Direction(R @ n, normalize=True))
            assert b.factor == pytest.approx(a.factor, rel=1e-12)
            assert a.verdicts == b.verdicts

    def test_heersink_unavailable_for_oblique_analytic(self):
        m = variance_stokes(make_coherent_input(1, 0.6, 0.3, 1.7), 0.4)
        assert cr.assess(m).verdicts["heersink"] is None


class TestStringency:
    def test_chain_evaluated_and_precondition_reported(self):
        rng = np.random.default_rng(6)
        failures = 0
        for _ in range(30):
            inp = make_coherent_input(rng.uniform(0.1, 2), *rng.uniform(0, 2 * math.pi, 3))
            r = cr.stringency_chain(variance_stokes(inp, rng.uniform(0, 1.5)))
            if r.precondition:
                assert r.chain_holds
            else:
                failures += 1
        # |<S_perp>| <= <S0> holds for every physical state (S0 -/+ S_n >= 0)
        assert failures == 0


class TestDecibels:
    def test_unity(self):
        assert cr.db_of_factor(1) == 0

    def test_reference_figure(self):
        f = cr.factor_of_db(-3.4)
        assert f == pytest.approx(10 ** -0.34, rel=1e-15)
        assert f == pytest.approx(0.4570882, abs=1e-7)
        assert 1 - f == pytest.approx(0.5429118, abs=1e-7)
        assert cr.db_of_factor(f) == pytest.approx(-3.4, abs=1e-12)

    def test_optimum_in_db(self):
        assert cr.db_of_factor(math.exp(-2)) == pytest.approx(-20 / math.log(10), rel=1e-14)
        assert cr.db_of_factor(math.exp(-2)) == pytest.approx(-8.6859, abs=1e-4)

    @pytest.mark.parametrize("bad", [0, -1])
    def test_domain(self, bad):
        with pytest.raises(ValueError):
            cr.db_of_factor(bad)
