import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fdivsampling import Generator, divergence
from fdivsampling.complexity import lower_bound_tv
from fdivsampling.errors import (
    GrowthConditionError,
    PreconditionError,
    UnsupportedKindError,
    ValidationError,
)
from fdivsampling.sampler import clamp_projection
from fdivsampling.witness import RatioLaw, bernoulli_witness, linear_witness, superlinear_witness

KL = Generator.kl()
R2 = Generator.renyi(2)
CASES = [(KL, 0.5), (KL, 1.0), (R2, 0.5), (R2, 1.0)]
CASE_IDS = ["kl-0.5", "kl-1", "renyi2-0.5", "renyi2-1"]


def mp_survival(g: Generator, law: RatioLaw, t):
    """Survival function written directly in mpmath from the generator formulas."""
    t = mp.mpf(t)
    if t < law.t0:
        t = mp.mpf(law.t0)
    if g.kind == "kl":
        fp, fpp = mp.log(t), 1 / t
    else:
        lam = mp.mpf(g.param)
        fp, fpp = lam * t ** (lam - 1) - lam, lam * (lam - 1) * t ** (lam - 2)
    return mp.mpf(law.beta) * fpp / fp ** (2 + mp.mpf(law.zeta))


def mp_mean(g: Generator, law: RatioLaw):
    """Oracle: E[Z] = int_0^inf P(Z > t) dt in 30-digit arithmetic."""
    mp.mp.dps = 30
    t0 = mp.mpf(law.t0)
    flat = t0 * mp_survival(g, law, t0)
    tail = mp.quad(lambda s: mp_survival(g, law, t0 * mp.e**s) * t0 * mp.e**s, [0, 5, 20, 80, mp.inf])
    return float(flat + tail)


class TestBernoulliWitness:
    def test_kl_example(self):
        w = bernoulli_witness(KL, 0.1, 5)
        assert w.e_n == pytest.approx(0.1, abs=1e-12)
        expected = 0.2 * math.log(10) + (0.5 * math.log(0.5) + 0.5)
        assert w.df_bound == pytest.approx(expected, abs=1e-15)
        assert round(w.df_bound, 6) == pytest.approx(0.613943, abs=1e-6)
        # independent divergence of Ber(0.2) vs Ber(0.02)
        direct = 0.2 * math.log(10) + 0.8 * math.log(0.8 / 0.98)
        assert w.df_value == pytest.approx(direct, abs=1e-14)
        assert w.df_value <= w.df_bound

    def test_eps_quarter_n_one(self):
        for g in [KL, R2, Generator.tv(), Generator.egamma(2)]:
            assert bernoulli_witness(g, 0.25, 1).e_n == pytest.approx(0.25, abs=1e-12)

    def test_renyi_example(self):
        assert bernoulli_witness(R2, 0.1, 2).df_bound == pytest.approx(1.45, abs=1e-14)

    def test_preconditions(self):
        with pytest.raises(PreconditionError):
            bernoulli_witness(KL, 0.3, 2)
        with pytest.raises(ValidationError):
            bernoulli_witness(KL, 0.1, 0)

    @pytest.mark.parametrize("g", [KL, R2, Generator.renyi(4), Generator.tv(), Generator.egamma(3)])
    @settings(max_examples=40)
    @given(eps=st.floats(0.001, 0.25), n=st.integers(1, 200))
    def test_properties(self, g, eps, n):
        w = bernoulli_witness(g, eps, n)
        assert w.e_n == pytest.approx(eps, abs=1e-12)
        assert divergence(g, w.nu, w.mu) <= w.df_bound + 1e-12
        assert clamp_projection(w.nu, w.mu, n).tv_min == pytest.approx(eps, abs=1e-12)


class TestLinearWitness:
    def test_tv_example(self):
        w = linear_witness(Generator.tv(), 0.25)
        assert w.df_value == pytest.approx(0.5, abs=1e-15)
        assert w.tv_floor == 0.25 and not w.infinite_divergence

    def test_egamma_example(self):
        w = linear_witness(Generator.egamma(2), 0.5)
        assert w.df_value == pytest.approx(0.5, abs=1e-15)
        assert w.tv_floor == 0.5

    def test_tv_vanishes_monotonically(self):
        vals = [linear_witness(Generator.tv(), e).df_value for e in np.geomspace(0.5, 1e-6, 40)]
        assert all(a >= b for a, b in zip(vals, vals[1:]))
        assert vals[-1] < 1e-5

    def test_superlinear_is_flagged(self):
        w = linear_witness(KL, 0.1)
        assert w.infinite_divergence and w.df_value == math.inf

    def test_floor_is_unbeatable(self):
        # any law absolutely continuous w.r.t. mu misses the atom a
        w = linear_witness(Generator.tv(), 0.2)
        for gamma in [1.0, 10.0, 1e6]:
            assert clamp_projection(w.nu, w.mu, gamma).tv_min == pytest.approx(0.2, abs=1e-12)


class TestRatioLaw:
    def test_spec_beta_reproduces_spec_numbers(self):
        law = RatioLaw(KL, 1.0, 2.0, beta=8.0)
        assert law.t0 == pytest.approx(math.e**2, rel=1e-15)
        assert law.tail_integral(law.t0) == pytest.approx(1.0, abs=1e-15)
        assert law.e_n_lower(math.e**4) == pytest.approx(0.125, abs=1e-15)
        assert law.df_upper == 8.0
        # with the flat region counted, that beta gives mean 2, not 1
        assert law.mean() == pytest.approx(2.0, abs=1e-12)

    def test_default_beta_normalizes(self):
        law = RatioLaw(KL, 1.0, 2.0)
        assert law.beta == pytest.approx(4.0, rel=1e-14)
        assert law.mean() == pytest.approx(1.0, abs=1e-14)

    @pytest.mark.parametrize("g,zeta", CASES, ids=CASE_IDS)
    @pytest.mark.parametrize("delta", [2.0, 8.0])
    def test_mean_matches_mpmath(self, g, zeta, delta):
        law = RatioLaw(g, zeta, delta)
        assert law.mean_quadrature() == pytest.approx(1.0, abs=1e-6)
        assert mp_mean(g, law) == pytest.approx(1.0, abs=1e-9)

    @pytest.mark.parametrize("g,zeta", CASES, ids=CASE_IDS)
    def test_closed_forms_match_quadrature(self, g, zeta):
        law = RatioLaw(g, zeta, 8.0)
        assert law.divergence() == pytest.approx(law.divergence_quadrature(), rel=1e-9)
        for n in [0.5 * law.t0, law.t0, 3 * law.t0, 100 * law.t0]:
            assert law.egamma(n) == pytest.approx(law.egamma_quadrature(n), rel=1e-9)

    @pytest.mark.parametrize("g,zeta", CASES, ids=CASE_IDS)
    def test_egamma_matches_mpmath(self, g, zeta):
        law = RatioLaw(g, zeta, 8.0)
        mp.mp.dps = 30
        for n in [law.t0, 10 * law.t0]:
            val = mp.quad(lambda s: mp_survival(g, law, n * mp.e**s) * n * mp.e**s, [0, 5, 20, 80, mp.inf])
            assert law.egamma(n) == pytest.approx(float(val), rel=1e-9)

    @pytest.mark.parametrize("g,zeta", CASES, ids=CASE_IDS)
    def test_survival_nonincreasing(self, g, zeta):
        law = RatioLaw(g, zeta, 8.0)
        t = np.concatenate([np.linspace(0, law.t0, 50), law.t0 * np.geomspace(1, 1e9, 400)])
        s = law.survival(t)
        assert np.all(np.diff(s) <= 1e-15)
        assert 0 <= law.atom_at_zero <= 1

    def test_e_n_lower_gap_is_n_times_survival(self):
        law = RatioLaw(KL, 1.0, 8.0)
        for n in law.t0 * np.array([1.0, 2.0, 50.0]):
            assert law.egamma(n) - law.e_n_lower(n) == pytest.approx(n * law.survival(n), rel=1e-12)

    def test_packaged_bound_agrees_with_complexity(self):
        for g, zeta in CASES:
            law = RatioLaw(g, zeta, 8.0)
            n = 10 * law.t0
            assert law.packaged_bound(n) == pytest.approx(
                lower_bound_tv(g, law.df_upper, n, zeta), rel=1e-12
            )

    def test_rejects_linear_generator(self):
        with pytest.raises(UnsupportedKindError):
            RatioLaw(Generator.tv(), 1.0, 2.0)

    def test_e_n_lower_domain(self):
        law = RatioLaw(KL, 1.0, 2.0)
        with pytest.raises(ValidationError):
            law.e_n_lower(1.0)


class TestSuperlinearWitness:
    @pytest.mark.parametrize("g,zeta", CASES, ids=CASE_IDS)
    def test_builds_at_delta_eight(self, g, zeta):
        law = superlinear_witness(g, zeta, 8.0)
        assert law.df_upper == pytest.approx(2 * (1 + zeta) * 8 / zeta)
        assert law.divergence() <= law.df_upper
        assert math.isfinite(law.detect_threshold())

    def test_detected_thresholds(self):
        # frozen from detect_threshold on the default grid
        assert superlinear_witness(KL, 1.0, 8.0).detect_threshold() == pytest.approx(3022.448, rel=1e-6)
        assert superlinear_witness(R2, 1.0, 8.0).detect_threshold() == pytest.approx(5.0696, rel=1e-4)

    def test_f_zero_precondition(self):
        # KL: f(0) = 1 > (1 + zeta) delta / zeta = 0.2
        with pytest.raises(PreconditionError):
            superlinear_witness(KL, 1.0, 0.1)

    @settings(max_examples=60, deadline=None)
    @given(
        lam=st.one_of(st.none(), st.floats(1.1, 6.0)),
        zeta=st.floats(0.1, 3.0),
        delta=st.floats(0.5, 50.0),
    )
    def test_growth_condition_always_holds(self, lam, zeta, delta):
        # t f''/f'^(2+zeta) and the tail are decreasing on t > 1 for KL and Renyi
        g = KL if lam is None else Generator.renyi(lam)
        try:
            superlinear_witness(g, zeta, delta)
        except GrowthConditionError:
            pytest.fail("growth condition rejected a KL/Renyi law")
        except (PreconditionError, ValidationError):
            pass

    @pytest.mark.parametrize("g,zeta", CASES, ids=CASE_IDS)
    def test_exact_tv_floor_holds(self, g, zeta):
        # E_n >= (1/8)(zeta D_f / f'(n))^(1+zeta) with the law's exact divergence
        law = superlinear_witness(g, zeta, 8.0)
        thr = law.detect_threshold()
        for n in thr * np.geomspace(1, 1e6, 60):
            floor = law.packaged_bound(n, D=law.divergence())
            assert law.egamma(n) >= floor
