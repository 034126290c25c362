"""Smoothed adversaries over a grid of ``[0, 1]``.

* ``smooth_iid`` -- a fixed context law: the base law tilted toward a window
  around a hidden threshold, as far as the divergence budget ``1/sigma``
  allows.  Labels follow the threshold and are flipped at rate ``noise``.
* ``atom_mixture`` -- ``(1 - delta) mu + delta atom(xbar_t)``, where
  ``xbar_t`` bisects ``[0, 1]`` with pre-drawn Rademacher signs and the
  hidden threshold is the limit point.  Each atom label is the sign the
  learner has not seen yet.  Positions are exact dyadic rationals embedded
  into floats by an order-preserving map, so no bisection depth is lost to
  rounding.  Needs a generator with finite ``f'(inf)``.
* ``adaptive_greedy`` -- each round picks, from a pool of windowed laws, the
  one on which the learner's current leader errs most in expectation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from ..divergence import DiscreteDist, Generator, divergence
from ..errors import SmoothnessError, ValidationError

__all__ = [
    "AdversarySpec",
    "Adversary",
    "SmoothIID",
    "AtomMixture",
    "AdaptiveGreedy",
    "smoothness_check",
    "uniform_grid",
    "build_adversary",
    "max_mixing_weight",
]

KINDS = ("smooth_iid", "atom_mixture", "adaptive_greedy")


def uniform_grid(size: int) -> DiscreteDist:
    """Uniform law on ``size`` evenly spaced points of ``[0, 1]``."""
    if size < 2:
        raise ValidationError("grid size must be >= 2")
    return DiscreteDist.uniform(np.linspace(0.0, 1.0, size).tolist())


def smoothness_check(g: Generator, p: DiscreteDist, mu: DiscreteDist, sigma: float) -> float:
    """Return ``D_f(p || mu)``; raise if it exceeds ``1/sigma``."""
    D = divergence(g, p, mu)
    if not D <= 1.0 / sigma + 1e-12:
        raise SmoothnessError(f"divergence {D!r} exceeds budget 1/sigma = {1.0 / sigma!r}")
    return D


@dataclass(frozen=True)
class AdversarySpec:
    """Adversary configuration.

    Parameters
    ----------
    kind : {"smooth_iid", "atom_mixture", "adaptive_greedy"}
    sigma : float
        Smoothness; every context law keeps ``D_f(p_t || mu) <= 1/sigma``.
    generator : Generator
    grid_size : int
        Size of the uniform base grid when ``mu`` is not given.
    mu : DiscreteDist, optional
        Base law with numeric labels in ``[0, 1]``.
    delta : float, optional
        Atom weight for ``atom_mixture``.  Defaults to
        ``min(1, 1 / (sigma f'(inf)))``, shrunk if needed to the largest
        weight whose exact divergence fits the budget.
    noise : float
        Label flip rate for the windowed adversaries.
    theta_star : float, optional
        Hidden threshold of the windowed adversaries; drawn uniformly from
        ``[0.25, 0.75]`` when omitted.
    window : float
        Width of the windows the windowed adversaries tilt toward.
    pool_size : int
        Number of candidate laws for ``adaptive_greedy``.
    """

    kind: str
    sigma: float
    generator: Generator
    grid_size: int = 512
    mu: DiscreteDist | None = field(default=None, compare=False)
    delta: float | None = None
    noise: float = 0.1
    theta_star: float | None = None
    window: float = 0.2
    pool_size: int = 8

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValidationError(f"unknown adversary {self.kind!r}")
        if not 0.0 < self.sigma <= 1.0:
            raise ValidationError("sigma must lie in (0, 1]")
        if not 0.0 <= self.noise < 0.5:
            raise ValidationError("noise must lie in [0, 1/2)")
        if not 0.0 < self.window <= 1.0:
            raise ValidationError("window must lie in (0, 1]")
        if self.pool_size < 1:
            raise ValidationError("pool_size must be >= 1")
        if self.delta is not None and not 0.0 < self.delta <= 1.0:
            raise ValidationError("delta must lie in (0, 1]")

    def base(self) -> DiscreteDist:
        mu = self.mu if self.mu is not None else uniform_grid(self.grid_size)
        z = np.asarray(mu.labels, dtype=float)
        if np.any((z < 0) | (z > 1)):
            raise ValidationError("base law labels must lie in [0, 1]")
        return mu

    def echo(self) -> dict:
        return {
            "kind": self.kind,
            "sigma": self.sigma,
            "generator": self.generator.spec(),
            "grid_size": self.grid_size if self.mu is None else len(self.mu),
            "delta": self.delta,
            "noise": self.noise,
            "theta_star": self.theta_star,
            "window": self.window,
            "pool_size": self.pool_size,
        }


def _draw(cdf: np.ndarray, rng: np.random.Generator) -> int:
    return min(int(np.searchsorted(cdf, rng.random(), side="right")), cdf.size - 1)


def max_mixing_weight(g: Generator, mu: DiscreteDist, q: np.ndarray, budget: float) -> float:
    """Largest ``w`` in ``[0, 1]`` with ``D_f((1 - w) mu + w q || mu) <= budget``."""

    def div(w: float) -> float:
        return divergence(g, DiscreteDist(mu.labels, (1 - w) * mu.masses + w * q), mu)

    if div(1.0) <= budget:
        return 1.0
    lo, hi = 0.0, 1.0
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if div(mid) <= budget:
            lo = mid
        else:
            hi = mid
    return lo


class Adversary:
    """Base class; ``step`` returns ``(p_t, x_t, y_t)``."""

    def __init__(self, spec: AdversarySpec, T: int, rng: np.random.Generator):
        self.spec = spec
        self.T = T
        self.mu = spec.base()
        self.z = np.asarray(self.mu.labels, dtype=float)
        self.max_divergence = 0.0

    def step(self, t: int, learner, rng: np.random.Generator):
        raise NotImplementedError


class SmoothIID(Adversary):
    """Fixed windowed law with a hidden threshold and label noise."""

    def __init__(self, spec: AdversarySpec, T: int, rng: np.random.Generator):
        super().__init__(spec, T, rng)
        self.theta_star = (
            float(rng.uniform(0.25, 0.75)) if spec.theta_star is None else float(spec.theta_star)
        )
        self.pool = [self._window_law(self.theta_star)]
        self.law = self.pool[0]

    def _window_law(self, center: float) -> tuple[DiscreteDist, np.ndarray]:
        spec, mu = self.spec, self.mu
        inside = np.abs(self.z - center) <= spec.window / 2
        if not inside.any():
            inside[np.argmin(np.abs(self.z - center))] = True
        q = np.where(inside & (mu.masses > 0), mu.masses, 0.0)
        if q.sum() == 0:
            q = mu.masses.copy()
        q = q / q.sum()
        w = max_mixing_weight(spec.generator, mu, q, 1.0 / spec.sigma)
        p = DiscreteDist(mu.labels, (1 - w) * mu.masses + w * q)
        D = smoothness_check(spec.generator, p, mu, spec.sigma)
        self.max_divergence = max(self.max_divergence, D)
        return p, np.cumsum(p.masses)

    def _label(self, x: float, rng: np.random.Generator) -> float:
        y = 1.0 if x >= self.theta_star else -1.0
        return -y if rng.random() < self.spec.noise else y

    def _choose(self, learner) -> int:
        return 0

    def step(self, t: int, learner, rng: np.random.Generator):
        p, cdf = self.pool[self._choose(learner)]
        x = float(self.z[_draw(cdf, rng)])
        return p, x, self._label(x, rng)


class AdaptiveGreedy(SmoothIID):
    """Picks the pool law maximising the learner's expected loss this round.

    The first pool law is the ``smooth_iid`` law; the others centre windows
    evenly over ``[0, 1]``.  Randomness is consumed exactly as in
    ``smooth_iid``, so a pool of one reproduces it.
    """

    def __init__(self, spec: AdversarySpec, T: int, rng: np.random.Generator):
        super().__init__(spec, T, rng)
        half = spec.window / 2
        for c in np.linspace(half, 1 - half, spec.pool_size - 1) if spec.pool_size > 1 else []:
            self.pool.append(self._window_law(float(c)))
        signs = np.where(self.z >= self.theta_star, 1.0, -1.0)
        self._margin = (1 - 2 * spec.noise) * signs

    def _choose(self, learner) -> int:
        if len(self.pool) == 1:
            return 0
        pred = learner.probe(self.z)
        point_loss = (1.0 - pred * self._margin) / 2.0
        scores = [float(p.masses @ point_loss) for p, _ in self.pool]
        return int(np.argmax(scores))


class AtomMixture(Adversary):
    """Bisection atoms that no smoothed learner can anticipate."""

    def __init__(self, spec: AdversarySpec, T: int, rng: np.random.Generator):
        super().__init__(spec, T, rng)
        g = spec.generator
        if math.isinf(g.fprime_inf):
            raise SmoothnessError(
                "atom_mixture puts mass off the base support; needs finite f'(inf)"
            )
        self.delta = self._weight()
        self.signs = rng.integers(0, 2, size=T) * 2 - 1
        # positions as integers over the common denominator 2**(T + 1):
        # ticks[t - 1] is the round-t atom, ticks[T] the hidden threshold
        self.scale = 2 ** (T + 1)
        ticks = [2**T]
        for s in range(1, T + 1):
            ticks.append(ticks[-1] + int(self.signs[s - 1]) * 2 ** (T - s))
        self.ticks = ticks
        self.grid_exact = [Fraction(v) for v in self.z.tolist()]
        theta = Fraction(ticks[T], self.scale)
        self.grid_labels = np.array([1.0 if v >= theta else -1.0 for v in self.grid_exact])
        emb = self._embed(ticks)
        self.atoms = emb[:T]
        self.theta_star = emb[T]
        self._mix = (1 - self.delta) * self.mu.masses

    def _weight(self) -> float:
        spec, g = self.spec, self.spec.generator
        budget = 1.0 / spec.sigma

        def exact_div(d: float) -> float:
            return float(g.f(1.0 - d)) + d * g.fprime_inf

        if spec.delta is not None:
            if exact_div(spec.delta) > budget + 1e-12:
                raise SmoothnessError(f"delta={spec.delta} breaks the divergence budget")
            return spec.delta
        fi = g.fprime_inf
        d = 1.0 if fi * spec.sigma <= 1.0 else 1.0 / (spec.sigma * fi)
        if exact_div(d) <= budget:
            return d
        lo, hi = 0.0, d
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            lo, hi = (mid, hi) if exact_div(mid) <= budget else (lo, mid)
        return lo

    def _gap(self, tick: int) -> tuple[int, bool]:
        """Grid insertion index of ``tick / scale`` and whether it hits a grid point."""
        grid, value = self.grid_exact, Fraction(tick, self.scale)
        j = int(np.searchsorted(self.z, tick / self.scale))
        j = min(max(j, 0), len(grid))
        while j > 0 and grid[j - 1] >= value:
            j -= 1
        while j < len(grid) and grid[j] < value:
            j += 1
        return j, j < len(grid) and grid[j] == value

    def _embed(self, ticks: list[int]) -> list[float]:
        """Order-preserving floats: points inside a grid gap are spread evenly."""
        gaps: dict[int, list[int]] = {}
        out: dict[int, float] = {}
        for tick in set(ticks):
            j, hit = self._gap(tick)
            if hit:
                out[tick] = float(self.z[j])
            else:
                gaps.setdefault(j, []).append(tick)
        for j, pts in gaps.items():
            lo = float(self.z[j - 1]) if j > 0 else 0.0
            hi = float(self.z[j]) if j < len(self.z) else 1.0
            pts.sort()
            for r, tick in enumerate(pts):
                out[tick] = lo + (hi - lo) * (r + 1) / (len(pts) + 1)
        return [out[tick] for tick in ticks]

    def step(self, t: int, learner, rng: np.random.Generator):
        atom = self.atoms[t - 1]
        labels = self.mu.labels
        if atom in self.mu:
            masses = self._mix.copy()
            masses[self.mu.index_of(atom)] += self.delta
            p = DiscreteDist(labels, masses)
        else:
            # atom is off the base support, so the labels stay distinct
            p = DiscreteDist._trusted(labels + (atom,), np.append(self._mix, self.delta))
        D = smoothness_check(self.spec.generator, p, self.mu, self.spec.sigma)
        self.max_divergence = max(self.max_divergence, D)
        i = _draw(np.cumsum(p.masses), rng)
        if i == len(labels):
            return p, atom, 1.0 if self.ticks[t - 1] >= self.ticks[self.T] else -1.0
        return p, float(self.z[i]), float(self.grid_labels[i])


def build_adversary(spec: AdversarySpec, T: int, rng: np.random.Generator) -> Adversary:
    return {"smooth_iid": SmoothIID, "atom_mixture": AtomMixture, "adaptive_greedy": AdaptiveGreedy}[
        spec.kind
    ](spec, T, rng)
