"""Online learners over thresholds: FTL, FTPL and the random-playout relaxation.

FTPL perturbation
-----------------
The perturbation ``eta omega(g) = sum_i (eta gamma_i / sqrt(m)) g(Z_i)`` is
linear in ``g``, and ``g(Z) = 1 - 2 l(g(Z), +1)``.  Up to a constant it is
therefore the weighted loss of synthetic examples ``(Z_i, +1, -2 eta
gamma_i / sqrt(m))``, so one ERM call on history plus synthetic data
returns the perturbed leader.  Draws landing on the same grid cell can be
summed: ``sum_{Z_i = z} gamma_i ~ N(0, #{i : Z_i = z})``, which keeps the
cost per round at the grid size whatever ``m`` is.

Relaxation prediction
---------------------
With ``Phi(y) = sup_g [c sum eps_s g(Z_s) - L_{t-1}(g) - l(g(x_t), y)]``
the learner minimises ``max((1 - yhat)/2 + Phi(+1), (1 + yhat)/2 + Phi(-1))``
over ``yhat`` in ``[-1, 1]``.  The first branch decreases in ``yhat`` with
slope ``-1/2`` and the second increases with slope ``1/2``, so they cross
at ``yhat = Phi(+1) - Phi(-1)``; clipping to ``[-1, 1]`` gives the
minimiser.  Each ``Phi(y)`` is ``-min_g`` of a weighted loss: the playout
term ``c eps g(Z) = c eps - 2 c eps l(g(Z), +1)`` becomes the example
``(Z, +1, 2 c eps)`` plus a constant that cancels in the difference.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from ..divergence import DiscreteDist
from ..errors import ValidationError
from .threshold import CountingOracle, ERMResult, ThresholdClass, erm_oracle

__all__ = [
    "History",
    "Perturbation",
    "draw_perturbation",
    "ftpl_step",
    "ftpl_preset",
    "RelaxationResult",
    "relaxation_step",
    "Learner",
    "FTL",
    "FTPL",
    "Relaxation",
    "LearnerSpec",
    "build_learner",
]


class History:
    """Observed ``(x, y)`` pairs kept sorted by ``x``.

    Sorted storage lets the ERM sweep merge history with a few extra
    examples in near-linear time.
    """

    def __init__(self):
        self.x = np.empty(0)
        self.y = np.empty(0)

    @property
    def size(self) -> int:
        return self.x.size

    def append(self, x: float, y: float) -> None:
        i = int(np.searchsorted(self.x, x, side="right"))
        self.x = np.concatenate((self.x[:i], [x], self.x[i:]))
        self.y = np.concatenate((self.y[:i], [y], self.y[i:]))

    def data(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return self.x, self.y, np.ones(self.x.size)


def _grid_of(mu: DiscreteDist) -> np.ndarray:
    try:
        z = np.asarray(mu.labels, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ValidationError("base law labels must be numbers in [0, 1]") from exc
    if np.any((z < 0) | (z > 1)):
        raise ValidationError("base law labels must lie in [0, 1]")
    return z


def _concat(*parts: tuple[np.ndarray, np.ndarray, np.ndarray]):
    return tuple(np.concatenate(cols) for cols in zip(*parts))


class Perturbation(NamedTuple):
    """``omega(g) = (1 / sqrt(m)) sum_k gamma[k] g(z[k])``."""

    z: np.ndarray
    gamma: np.ndarray
    m: int

    def omega(self, theta: float) -> float:
        return float(np.sum(self.gamma * ThresholdClass.predict(theta, self.z))) / math.sqrt(self.m)


def draw_perturbation(
    mu: DiscreteDist,
    m: int,
    rng: np.random.Generator,
    aggregate: bool = True,
    grid: np.ndarray | None = None,
) -> Perturbation:
    """Draw ``m`` Gaussian weights at ``m`` iid locations from ``mu``.

    With ``aggregate`` the weights are summed per atom of ``mu``, which has
    the same law and costs ``O(len(mu))``.
    """
    if m < 1:
        raise ValidationError("m must be >= 1")
    z = _grid_of(mu) if grid is None else grid
    if aggregate:
        counts = rng.multinomial(m, mu.masses)
        gamma = rng.standard_normal(z.size) * np.sqrt(counts)
        live = counts > 0
        return Perturbation(z[live], gamma[live], m)
    idx = rng.choice(z.size, size=m, p=mu.masses)
    return Perturbation(z[idx], rng.standard_normal(m), m)


def ftpl_step(
    history,
    oracle,
    eta: float,
    m: int,
    mu: DiscreteDist,
    rng: np.random.Generator,
    aggregate: bool = True,
    grid: np.ndarray | None = None,
) -> tuple[float, Perturbation]:
    """Perturbed leader ``argmin_g L(g) + eta omega(g)`` with one ERM call.

    Parameters
    ----------
    history : History or tuple (x, y, w)
        Past examples.
    oracle : ThresholdClass or CountingOracle
    eta : float
        Perturbation scale; ``0`` gives follow-the-leader.
    m : int
        Number of Gaussian draws.
    mu : DiscreteDist
        Base law over ``[0, 1]``.
    rng : numpy Generator

    Returns
    -------
    theta : float
    perturbation : Perturbation
    """
    if eta < 0:
        raise ValidationError("eta must be nonnegative")
    data = history.data() if isinstance(history, History) else history
    pert = draw_perturbation(mu, m, rng, aggregate, grid)
    synth = (pert.z, np.ones(pert.z.size), -2.0 * eta * pert.gamma / math.sqrt(m))
    call = oracle if callable(oracle) else (lambda d: erm_oracle(oracle, d))
    return call(_concat(data, synth)).theta, pert


def ftpl_preset(T: int, sigma: float, lam: float) -> dict:
    """Parameter schedule for Renyi-``lam`` smoothness.

    ``eps = T**(-(6 lam - 6) / (4 lam - 1)) sigma**(-3 / (4 lam - 1))``
    (capped at 1/2), ``k = eps**(-2/3)``, ``m = ceil(k log T (eps sigma)**(-1 / (lam - 1)))``
    and ``eta = sqrt(m)``.
    """
    if not lam > 1:
        raise ValidationError("lam must exceed 1")
    eps = T ** (-(6 * lam - 6) / (4 * lam - 1)) * sigma ** (-3 / (4 * lam - 1))
    eps = min(eps, 0.5)
    k = eps ** (-2.0 / 3.0)
    m = max(1, math.ceil(k * math.log(max(T, 2)) * (eps * sigma) ** (-1.0 / (lam - 1))))
    return {"eps": eps, "k": k, "m": m, "eta": math.sqrt(m)}


class RelaxationResult(NamedTuple):
    yhat: float
    phi_plus: float
    phi_minus: float


def relaxation_step(
    history,
    oracle,
    x_t: float,
    mu: DiscreteDist,
    n: int,
    T: int,
    t: int,
    rng: np.random.Generator,
    c: float = 2.0,
    grid: np.ndarray | None = None,
) -> RelaxationResult:
    """Random-playout relaxation prediction at round ``t`` (1-based) of ``T``.

    Draws ``n (T - t)`` future contexts from ``mu`` with Rademacher signs,
    summed per atom, then evaluates ``Phi(+1)`` and ``Phi(-1)`` with two
    ERM calls.
    """
    if n < 1 or not 1 <= t <= T:
        raise ValidationError("need n >= 1 and 1 <= t <= T")
    data = history.data() if isinstance(history, History) else history
    z = _grid_of(mu) if grid is None else grid
    counts = rng.multinomial(n * (T - t), mu.masses)
    signs = 2.0 * rng.binomial(counts, 0.5) - counts
    live = signs != 0
    playout = (z[live], np.ones(int(live.sum())), 2.0 * c * signs[live])
    const = -c * float(signs.sum())
    call = oracle if callable(oracle) else (lambda d: erm_oracle(oracle, d))
    phi = {}
    for y in (1.0, -1.0):
        res: ERMResult = call(_concat(data, playout, (np.array([x_t]), np.array([y]), np.ones(1))))
        phi[y] = -(res.value + const)
    yhat = float(np.clip(phi[1.0] - phi[-1.0], -1.0, 1.0))
    return RelaxationResult(yhat, phi[1.0], phi[-1.0])


class Learner:
    """Common state: history, counting oracle and an uncounted probe."""

    proper = True
    name = "learner"

    def __init__(self, cls: ThresholdClass, mu: DiscreteDist, T: int):
        self.cls = cls
        self.mu = mu
        self.T = T
        self.history = History()
        self.oracle = CountingOracle(cls)
        self.theta: float | None = None
        self.grid = _grid_of(mu)

    def observe(self, x: float, y: float) -> None:
        self.history.append(x, y)

    def leader(self) -> float:
        return erm_oracle(self.cls, self.history.data()).theta

    def probe(self, x) -> np.ndarray:
        """Predictions of the current leader; uses no randomness and no counted calls."""
        return ThresholdClass.predict(self.leader(), x)

    def commit(self, rng: np.random.Generator) -> float:
        raise NotImplementedError

    def predict(self, x: float, t: int, rng: np.random.Generator) -> float:
        raise NotImplementedError


class FTL(Learner):
    name = "ftl"

    def commit(self, rng: np.random.Generator) -> float:
        self.theta = self.oracle(self.history.data()).theta
        return self.theta


class FTPL(Learner):
    name = "ftpl"

    def __init__(self, cls, mu, T, eta: float, m: int, aggregate: bool = True):
        super().__init__(cls, mu, T)
        self.eta = float(eta)
        self.m = int(m)
        self.aggregate = aggregate

    def commit(self, rng: np.random.Generator) -> float:
        self.theta, _ = ftpl_step(
            self.history, self.oracle, self.eta, self.m, self.mu, rng, self.aggregate, self.grid
        )
        return self.theta


class Relaxation(Learner):
    proper = False
    name = "relaxation"

    def __init__(self, cls, mu, T, n: int = 1, c: float = 2.0):
        super().__init__(cls, mu, T)
        self.n = int(n)
        self.c = float(c)

    def predict(self, x: float, t: int, rng: np.random.Generator) -> float:
        return relaxation_step(
            self.history, self.oracle, x, self.mu, self.n, self.T, t, rng, self.c, self.grid
        ).yhat


@dataclass(frozen=True)
class LearnerSpec:
    """Learner configuration.

    ``kind`` is ``"ftpl"``, ``"relaxation"`` or ``"ftl"``.  For FTPL,
    ``preset=True`` takes ``eta`` and ``m`` from :func:`ftpl_preset`;
    otherwise ``eta`` defaults to ``sqrt(m)``.
    """

    kind: str = "ftpl"
    eta: float | None = None
    m: int = 64
    n: int = 1
    c: float = 2.0
    preset: bool = False
    aggregate: bool = True

    def __post_init__(self) -> None:
        if self.kind not in ("ftpl", "relaxation", "ftl"):
            raise ValidationError(f"unknown learner {self.kind!r}")
        if self.m < 1 or self.n < 1:
            raise ValidationError("m and n must be positive")


def build_learner(
    spec: LearnerSpec,
    cls: ThresholdClass,
    mu: DiscreteDist,
    T: int,
    sigma: float | None = None,
    lam: float | None = None,
) -> Learner:
    if spec.kind == "ftl":
        return FTL(cls, mu, T)
    if spec.kind == "relaxation":
        return Relaxation(cls, mu, T, spec.n, spec.c)
    if spec.preset:
        if sigma is None or lam is None:
            raise ValidationError("the FTPL preset needs a Renyi generator and sigma")
        sched = ftpl_preset(T, sigma, lam)
        return FTPL(cls, mu, T, sched["eta"], sched["m"], spec.aggregate)
    eta = math.sqrt(spec.m) if spec.eta is None else spec.eta
    return FTPL(cls, mu, T, eta, spec.m, spec.aggregate)
