import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fdivsampling import Generator
from fdivsampling.complexity import (
    GRID,
    ceil_count,
    coupling_n,
    lower_bound_n,
    lower_bound_tv,
    regret_bounds,
    upper_bound_n,
)
from fdivsampling.errors import PreconditionError, UnsupportedKindError, ValidationError

KL = Generator.kl()
R2 = Generator.renyi(2)
TV = Generator.tv()
SUPERLINEAR = [KL, Generator.renyi(1.5), R2, Generator.renyi(4)]


class TestCeilCount:
    def test_absorbs_float_noise(self):
        assert ceil_count(140.00000000000003) == 140
        assert ceil_count(140.2) == 141
        assert ceil_count(math.inf) == math.inf


class TestUpperBound:
    def test_examples(self):
        assert upper_bound_n(R2, 1.0, 0.1) == 140
        assert upper_bound_n(TV, 0.5, 0.1) == math.inf
        for g in SUPERLINEAR + [TV, Generator.egamma(2)]:
            assert upper_bound_n(g, 0.0, 0.5) == 6

    def test_direct_formula(self):
        # oracle: the formula with the Renyi-2 inverse written out by hand
        for D in [0.1, 0.5, 2.0]:
            for eps in [0.3, 0.2, 0.05]:
                inv = max(1.0, 1 + 4 * D / eps / 2)
                expected = math.ceil(max(2 / (1 - eps) * math.log(2 / eps) * inv, 2) - 1e-9)
                assert upper_bound_n(R2, D, eps) == expected

    @pytest.mark.parametrize("g", SUPERLINEAR)
    @settings(max_examples=50)
    @given(D=st.floats(0, 5), e1=st.floats(0.001, 0.35), e2=st.floats(0.001, 0.35))
    def test_monotone_in_eps(self, g, D, e1, e2):
        lo, hi = min(e1, e2), max(e1, e2)
        assert upper_bound_n(g, D, hi) <= upper_bound_n(g, D, lo)

    def test_not_monotone_for_large_eps(self):
        # log(2/eps)/(1-eps) turns upward once log(2/eps) > 1/eps - 1, near eps = 0.37
        assert upper_bound_n(KL, 0.0, 0.5) == 6
        assert upper_bound_n(KL, 0.0, 0.75) == 8

    @pytest.mark.parametrize("g", SUPERLINEAR)
    @settings(max_examples=50)
    @given(d1=st.floats(0, 5), d2=st.floats(0, 5), eps=st.floats(0.01, 0.9))
    def test_monotone_in_D(self, g, d1, d2, eps):
        lo, hi = min(d1, d2), max(d1, d2)
        assert upper_bound_n(g, lo, eps) <= upper_bound_n(g, hi, eps)

    def test_validation(self):
        with pytest.raises(ValidationError):
            upper_bound_n(KL, 1.0, 1.0)
        with pytest.raises(ValidationError):
            upper_bound_n(KL, -1.0, 0.1)


class TestLowerBoundN:
    def test_examples(self):
        assert lower_bound_n(KL, 1.0, 0.25) == pytest.approx(0.5 * math.e**2, rel=1e-14)
        assert lower_bound_n(R2, 2.0, 0.25) == pytest.approx(1.5, rel=1e-14)
        assert lower_bound_n(TV, 1.0, 0.1) == math.inf

    def test_precondition(self):
        # 2 f(1/2) = 0.5 for Renyi-2
        with pytest.raises(PreconditionError):
            lower_bound_n(R2, 0.5, 0.1)
        with pytest.raises(ValidationError):
            lower_bound_n(KL, 1.0, 0.3)

    @pytest.mark.parametrize("g", SUPERLINEAR)
    def test_monotone(self, g):
        deltas = np.linspace(3.0, 10.0, 30)
        vals = [lower_bound_n(g, d, 0.1) for d in deltas]
        assert np.all(np.diff(vals) >= 0)
        epss = np.linspace(0.02, 0.25, 30)
        vals = [lower_bound_n(g, 3.0, e) for e in epss]
        assert np.all(np.diff(vals) <= 0)

    @pytest.mark.parametrize("g", SUPERLINEAR)
    def test_recovers_construction_scale(self, g):
        eps = 0.1
        for n_star in [2, 5, 10, 50, 200]:
            delta = 2 * eps * float(g.fprime(2 * n_star))
            if not delta > 2 * float(g.f(0.5)):
                continue
            n = lower_bound_n(g, delta, eps)
            assert n_star / 2 <= n <= 2 * n_star


class TestLowerBoundTV:
    def test_examples(self):
        assert lower_bound_tv(KL, 1.0, math.e**2, 1.0) == pytest.approx(1 / 32, rel=1e-14)
        assert lower_bound_tv(R2, 2.0, 2.0, 1.0) == pytest.approx(0.125, rel=1e-14)
        assert lower_bound_tv(R2, 0.0, 5.0, 0.5) == 0.0

    def test_unsupported(self):
        with pytest.raises(UnsupportedKindError):
            lower_bound_tv(TV, 1.0, 4.0, 1.0)
        with pytest.raises(UnsupportedKindError):
            lower_bound_tv(Generator.egamma(2), 1.0, 4.0, 1.0)

    def test_needs_positive_slope(self):
        with pytest.raises(PreconditionError):
            lower_bound_tv(KL, 1.0, 1.0, 1.0)

    @pytest.mark.parametrize("g", SUPERLINEAR)
    @settings(max_examples=50)
    @given(n1=st.floats(1.5, 1e6), n2=st.floats(1.5, 1e6), zeta=st.floats(0.1, 3))
    def test_nonincreasing_in_n(self, g, n1, n2, zeta):
        lo, hi = min(n1, n2), max(n1, n2)
        assert lower_bound_tv(g, 1.0, hi, zeta) <= lower_bound_tv(g, 1.0, lo, zeta) * (1 + 1e-12)

    @pytest.mark.parametrize("g", [KL, R2])
    def test_sandwich_regression(self, g):
        for eps in [1e-3, 1e-4, 1e-5, 1e-6]:
            n = upper_bound_n(g, 1.0, eps)
            zeta = 1 / math.log(1 / eps)
            assert lower_bound_tv(g, 1.0, n, zeta) <= math.sqrt(eps)


class TestCouplingN:
    def test_examples(self):
        assert coupling_n(R2, 0.1, 0.1, 0.01, 100) == 522
        # 1.25 ln(100) e^10 = 126794.53, so the ceiling is 126795
        assert coupling_n(KL, 0.5, 0.2, 0.1, 10) == 126795
        assert coupling_n(TV, 0.5, 0.2, 0.1, 10) == math.inf

    def test_direct_formula(self):
        expected = 1.25 * math.log(100) * math.exp(10)
        assert 126794 < expected < 126795
        assert coupling_n(KL, 0.5, 0.2, 0.1, 10) == math.ceil(expected)

    @pytest.mark.parametrize(
        "args", [(0.0, 0.1, 0.1, 10), (0.5, 1.0, 0.1, 10), (0.5, 0.1, 1.0, 10), (0.5, 0.1, 0.1, 0)]
    )
    def test_validation(self, args):
        with pytest.raises(ValidationError):
            coupling_n(KL, *args)


class TestRegretBounds:
    def test_grid(self):
        assert GRID.size == 200
        assert GRID[0] == pytest.approx(1e-6) and GRID[-1] < 1

    def test_ftpl_exponent_tends_to_half(self):
        T, sigma = 1e4, 0.01
        rb = regret_bounds(KL, sigma, int(T), 1, lam=1000)
        expected = T ** (2001 / 3999) * sigma ** (-1 / 3999)
        assert rb.ftpl == pytest.approx(expected, rel=1e-12)
        assert abs(math.log(rb.ftpl) / math.log(T) - 0.5) < 0.01

    def test_tv_improper_is_capped(self):
        rb = regret_bounds(TV, 0.5, 1000)
        assert rb.improper == 1000
        assert rb.minimax == 1000
        assert rb.ftpl == 1000

    def test_minimax_renyi_finite_and_decreasing_in_sigma(self):
        T = 10_000
        vals = [regret_bounds(R2, s, T).minimax for s in [0.01, 0.05, 0.1, 0.5, 1.0]]
        assert all(v <= T for v in vals)
        assert all(a >= b for a, b in zip(vals, vals[1:]))
        assert vals[2] < T

    def test_minimax_matches_grid_oracle(self):
        T, d, sigma = 5000.0, 2, 0.2
        best = math.inf
        for a in np.geomspace(1e-6, 1, 201)[:-1]:
            inv = 1 + (1 / (a * sigma)) / 2
            v = a * T + math.sqrt(T * d * math.log(T * inv)) + math.sqrt(T * math.log(T) * d)
            best = min(best, v)
        assert regret_bounds(R2, sigma, int(T), d).minimax == pytest.approx(min(best, T), rel=1e-12)

    def test_renyi_defaults_lambda(self):
        rb = regret_bounds(R2, 0.1, 1000)
        assert rb.ftpl == pytest.approx(min(1000 ** (5 / 7) * 0.1 ** (-1 / 7), 1000))

    def test_validation(self):
        with pytest.raises(ValidationError):
            regret_bounds(R2, 0.0, 100)
        with pytest.raises(ValidationError):
            regret_bounds(R2, 0.5, 0)
