"""Lower-bound witness pairs and their certified quantities.

Three constructions:

* ``bernoulli_witness`` -- ``mu = Ber(eps / n)``, ``nu = Ber(2 eps)``; the
  hockey-stick divergence at level ``n`` is exactly ``eps``, so no selector
  over ``n`` proposals gets closer than ``eps`` in TV.
* ``linear_witness`` -- ``nu`` puts mass ``eps`` on an atom ``mu`` misses;
  finite divergence for linear generators, TV floor ``eps`` for any ``n``.
* ``superlinear_witness`` -- a law for the likelihood ratio ``Z = dnu/dmu``
  under ``mu`` with an atom at zero and a power tail
  ``P(Z > t) = beta f''(t) / f'(t)**(2 + zeta)`` for ``t >= t0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from .divergence import DiscreteDist, Generator, divergence, egamma
from .errors import (
    GrowthConditionError,
    InvariantViolation,
    PreconditionError,
    UnsupportedKindError,
    ValidationError,
)

__all__ = [
    "BernoulliWitness",
    "LinearWitness",
    "RatioLaw",
    "bernoulli_witness",
    "linear_witness",
    "superlinear_witness",
]


@dataclass(frozen=True)
class BernoulliWitness:
    mu: DiscreteDist
    nu: DiscreteDist
    e_n: float
    df_bound: float
    df_value: float


@dataclass(frozen=True)
class LinearWitness:
    mu: DiscreteDist
    nu: DiscreteDist
    df_value: float
    tv_floor: float
    infinite_divergence: bool


def bernoulli_witness(g: Generator, eps: float, n: int) -> BernoulliWitness:
    """Two-point pair whose ``E_n`` equals ``eps``.

    ``df_bound = 2 eps f'(2n) + f(1/2)`` upper-bounds the divergence.
    """
    if not 0.0 < eps <= 0.25:
        raise PreconditionError("eps must lie in (0, 1/4]")
    if int(n) != n or n < 1:
        raise ValidationError("n must be a positive integer")
    mu = DiscreteDist.bernoulli(eps / n)
    nu = DiscreteDist.bernoulli(2.0 * eps)
    e_n = egamma(nu, mu, n)
    if abs(e_n - eps) > 1e-12:
        raise InvariantViolation(f"E_n = {e_n} differs from eps = {eps}")
    df_bound = 2.0 * eps * float(g.fprime(2.0 * n)) + float(g.f(0.5))
    df_value = divergence(g, nu, mu)
    if df_value > df_bound + 1e-12:
        raise InvariantViolation(f"divergence {df_value} exceeds bound {df_bound}")
    return BernoulliWitness(mu, nu, e_n, df_bound, df_value)


def linear_witness(g: Generator, eps: float) -> LinearWitness:
    """Pair with singular mass ``eps``: ``nu = (eps on a, 1 - eps on b)``, ``mu = b``.

    For superlinear generators the divergence is infinite and
    ``infinite_divergence`` is set.
    """
    if not 0.0 < eps < 1.0:
        raise ValidationError("eps must lie in (0, 1)")
    nu = DiscreteDist(["a", "b"], [eps, 1.0 - eps])
    mu = DiscreteDist.point("b")
    df_value = divergence(g, nu, mu)
    if g.is_superlinear:
        return LinearWitness(mu, nu, math.inf, eps, True)
    expected = float(g.f(1.0 - eps)) + eps * g.fprime_inf
    if abs(df_value - expected) > 1e-12:
        raise InvariantViolation(f"divergence {df_value} differs from {expected}")
    return LinearWitness(mu, nu, df_value, eps, False)


@dataclass(frozen=True)
class RatioLaw:
    """Law of a nonnegative ratio ``Z`` with mean one.

    ``P(Z > t) = S0`` on ``[0, t0)`` and ``beta f''(t) / f'(t)**(2 + zeta)``
    from ``t0 = (f')^{-1}(delta)`` on; the remaining ``1 - S0`` sits at 0.

    Parameters
    ----------
    g : Generator
        KL or Renyi.
    zeta, delta : float
        Tail exponent and the level ``f'(t0) = delta``.
    beta : float, optional
        Tail scale.  By default it is chosen so that ``E[Z] = 1``.
    """

    g: Generator
    zeta: float
    delta: float
    beta: float | None = None
    t0: float = field(init=False)

    def __post_init__(self) -> None:
        if not self.g.is_superlinear:
            raise UnsupportedKindError("the ratio law needs a superlinear generator")
        if not (self.zeta > 0 and self.delta > 0):
            raise ValidationError("zeta and delta must be positive")
        t0 = self.g.inv_fprime(self.delta)
        if not math.isfinite(t0):
            raise ValidationError("delta too large: t0 overflows")
        object.__setattr__(self, "t0", t0)
        if self.beta is None:
            shape0 = float(self.g.fsecond(t0)) / self.delta ** (2 + self.zeta)
            beta = 1.0 / (t0 * shape0 + 1.0 / ((1 + self.zeta) * self.delta ** (1 + self.zeta)))
            object.__setattr__(self, "beta", beta)
        if not self.beta > 0:
            raise ValidationError("beta must be positive")

    # law -----------------------------------------------------------------
    def _tail(self, t):
        t = np.asarray(t, dtype=float)
        return self.beta * self.g.fsecond(t) / self.g.fprime(t) ** (2 + self.zeta)

    @property
    def s0(self) -> float:
        """``P(Z > t)`` on the flat region ``[0, t0)``."""
        return float(self._tail(self.t0))

    @property
    def atom_at_zero(self) -> float:
        return 1.0 - self.s0

    def survival(self, t):
        """``P(Z > t)``."""
        x = np.asarray(t, dtype=float)
        out = np.where(x < 0, 1.0, self.s0)
        hi = x >= self.t0
        if np.any(hi):
            out = out.copy()
            out[hi] = self._tail(x[hi])
        return float(out) if out.ndim == 0 else out

    def tail_integral(self, x: float) -> float:
        """``int_x^inf P(Z > t) dt`` for ``x >= t0``, in closed form."""
        if x < self.t0:
            raise ValidationError("closed form holds for x >= t0")
        return self.beta / ((1 + self.zeta) * float(self.g.fprime(x)) ** (1 + self.zeta))

    def _tail_quad(self, x: float, slope_weight: bool = False) -> float:
        """``int_x^inf w(t) P(Z > t) dt`` with ``w = 1`` or ``w = f'``, numerically.

        Integrates in ``v = log f'(t)`` up to ``t = 1e100`` and adds the
        closed-form remainder beyond.
        """
        g, zeta = self.g, self.zeta
        t_max = 1e100

        def integrand(v: float) -> float:
            u = math.exp(v)
            t = g.inv_fprime(u)
            w = u if slope_weight else 1.0
            # dt = du / f''(t) and du = u dv
            return w * float(self.survival(t)) / float(g.fsecond(t)) * u

        v0 = math.log(float(g.fprime(x)))
        u_max = float(g.fprime(t_max))
        value, _ = integrate.quad(
            integrand, v0, math.log(u_max), epsabs=1e-14, epsrel=1e-12, limit=400
        )
        if slope_weight:
            rest = self.beta / (zeta * u_max**zeta)
        else:
            rest = self.beta / ((1 + zeta) * u_max ** (1 + zeta))
        return value + rest

    # moments ---------------------------------------------------------------
    def mean(self) -> float:
        """Closed-form ``E[Z]``."""
        return self.t0 * self.s0 + self.tail_integral(self.t0)

    def mean_quadrature(self) -> float:
        """``E[Z] = int_0^inf P(Z > t) dt`` by adaptive quadrature."""
        flat, _ = integrate.quad(lambda t: self.survival(t), 0.0, self.t0, epsabs=1e-13)
        return flat + self._tail_quad(self.t0)

    def egamma(self, n: float) -> float:
        """Exact ``E_n = E[(Z - n)_+]``."""
        if n >= self.t0:
            return self.tail_integral(n)
        return (self.t0 - max(n, 0.0)) * self.s0 + self.tail_integral(self.t0)

    def egamma_quadrature(self, n: float) -> float:
        if n >= self.t0:
            return self._tail_quad(n)
        flat, _ = integrate.quad(lambda t: self.survival(t), max(n, 0.0), self.t0, epsabs=1e-13)
        return flat + self._tail_quad(self.t0)

    def divergence(self) -> float:
        """Exact ``D_f = E[f(Z)]``."""
        g, s0 = self.g, self.s0
        tail = self.beta / (self.zeta * self.delta**self.zeta)
        return float(g.f(0.0)) * (1 - s0) + float(g.f(self.t0)) * s0 + tail

    def divergence_quadrature(self) -> float:
        """``E[f(Z)] = f(0) + int_0^inf f'(t) P(Z > t) dt`` by quadrature."""
        g = self.g
        flat, _ = integrate.quad(
            lambda t: float(g.fprime(t)) * self.s0, 0.0, self.t0, epsabs=1e-13, limit=200
        )
        tail = self._tail_quad(self.t0, slope_weight=True)
        return float(g.f(0.0)) + flat + tail

    # certified quantities ------------------------------------------------
    @property
    def df_upper(self) -> float:
        """``2 (1 + zeta) delta / zeta``."""
        return 2.0 * (1 + self.zeta) * self.delta / self.zeta

    def e_n_lower(self, n: float) -> float:
        """``beta / ((1+zeta) f'(n)**(1+zeta)) - n beta f''(n) / f'(n)**(2+zeta)``.

        A lower bound on ``E_n`` for ``n >= t0``; it falls short of the
        exact value :meth:`egamma` by ``n P(Z > n)``.
        """
        if n < self.t0:
            raise ValidationError("defined for n >= t0")
        slope = float(self.g.fprime(n))
        return self.tail_integral(n) - n * self.beta * float(self.g.fsecond(n)) / slope ** (
            2 + self.zeta
        )

    def packaged_bound(self, n: float, D: float | None = None) -> float:
        """``(1/8) (zeta D / f'(n))**(1+zeta)`` with ``D = df_upper`` by default."""
        D = self.df_upper if D is None else D
        return (self.zeta * D / float(self.g.fprime(n))) ** (1 + self.zeta) / 8.0

    def growth_ratio(self, n):
        """``n f''(n) / f'(n)**(1 + zeta)``; the tail estimates need it below 1/4."""
        n = np.asarray(n, dtype=float)
        out = n * self.g.fsecond(n) / self.g.fprime(n) ** (1 + self.zeta)
        return float(out) if out.ndim == 0 else out

    def detect_threshold(self, grid=None) -> float:
        """Smallest grid point past which ``growth_ratio < 1/4`` holds throughout.

        Returns ``inf`` if the condition never settles on the grid.
        """
        if grid is None:
            grid = self.t0 * np.geomspace(1.0, 1e12, 2000)
        grid = np.asarray(grid, dtype=float)
        grid = grid[grid > max(self.t0, 1.0)]
        ok = self.growth_ratio(grid) < 0.25
        if not ok.size or not ok[-1]:
            return math.inf
        bad = np.flatnonzero(~ok)
        return float(grid[bad[-1] + 1]) if bad.size else float(grid[0])


def superlinear_witness(
    g: Generator, zeta: float, delta: float, beta: float | None = None
) -> RatioLaw:
    """Ratio law for the superlinear total-variation floor.

    Checks the growth condition (the tail and ``t f''(t) / f'(t)**(2+zeta)``
    nonincreasing on a grid from ``t0``) and ``f(0) <= (1+zeta) delta / zeta``.

    Raises
    ------
    GrowthConditionError
        If either function increases on the grid.
    PreconditionError
        If ``f(0)`` is too large for ``delta``.
    """
    law = RatioLaw(g, zeta, delta, beta)
    grid = law.t0 * np.geomspace(1.0, 1e8, 400)
    tail = law.survival(grid)
    shape = grid * g.fsecond(grid) / g.fprime(grid) ** (2 + zeta)
    tol = 1e-12
    if np.any(np.diff(tail) > tol * tail[:-1]) or np.any(np.diff(shape) > tol * shape[:-1]):
        raise GrowthConditionError("tail is not nonincreasing from t0; increase delta")
    if law.s0 > 1.0:
        raise GrowthConditionError("P(Z > t0) exceeds one")
    if float(g.f(0.0)) > (1 + zeta) * delta / zeta:
        raise PreconditionError("f(0) exceeds (1 + zeta) delta / zeta")
    return law
