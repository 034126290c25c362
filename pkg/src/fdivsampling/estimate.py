"""Importance and rejection estimators of ``E_nu[h]`` from ``mu``-samples.

Both estimators are linear in ``h``.  A sample batch is stored as counts
per atom, and the estimate for any ``h`` (or for every threshold at once)
is a dot product with those counts.

* Importance: ``I_n(h) = (1/n) sum_i r(X_i) h(X_i)``, ``X_i ~ mu`` iid,
  ``r = dnu/dmu``.
* Rejection: split ``n`` proposals into ``n/m`` blocks, take one truncated
  rejection sample per block, and average ``h`` over the selected points.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import integrate

from .divergence import DiscreteDist, Generator, align, divergence
from .errors import DegenerateTruncation, UndefinedRatioError, ValidationError
from .online.threshold import ABOVE_ONE, ThresholdClass
from .sampler import make_plan

__all__ = [
    "EstimationTask",
    "importance_batch",
    "importance_from_batch",
    "importance_estimate",
    "importance_replicates",
    "rejection_batch",
    "rejection_from_batch",
    "rejection_estimate",
    "rejection_replicates",
    "threshold_truth",
    "threshold_estimates",
    "uniform_error",
    "default_entropy",
    "bracketing_integral",
    "bound_curves",
    "kl_threshold_experiment",
    "compare_experiment",
]

CHUNK = 2_000_000


@dataclass
class EstimationTask:
    """Target ``nu``, proposal ``mu`` and estimator budgets.

    Parameters
    ----------
    mu, nu : DiscreteDist
    n : int
        Total proposal budget.
    m : int, optional
        Block size of the rejection estimator; must divide ``n``.  Defaults
        to ``n``.
    generator : Generator
        Divergence used to plan the rejection sampler.
    eps : float
        TV target of the rejection plan.
    M : float, optional
        Truncation level override; defaults to the planned level.
    cls : ThresholdClass, optional
        Threshold grid for uniform errors; defaults to 0, the atoms and
        :data:`ABOVE_ONE`, which attains the supremum over all thresholds.
    """

    mu: DiscreteDist
    nu: DiscreteDist
    n: int
    m: int | None = None
    generator: Generator = field(default_factory=lambda: Generator.renyi(2.0))
    eps: float = 0.1
    M: float | None = None
    cls: ThresholdClass | None = None

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValidationError("n must be >= 1")
        if self.m is None:
            self.m = self.n
        if self.m < 1 or self.n % self.m:
            raise ValidationError("m must be a positive divisor of n")
        self.labels, self.p, self.q = align(self.nu, self.mu)
        on = self.q > 0
        self.ratio = np.full_like(self.p, np.inf)
        self.ratio[on] = self.p[on] / self.q[on]
        self.singular = float(self.p[~on].sum())

    @property
    def blocks(self) -> int:
        return self.n // self.m

    def h_values(self, h) -> np.ndarray:
        """``h`` on the aligned labels; accepts a callable or an aligned array."""
        if callable(h):
            return np.array([float(h(lab)) for lab in self.labels])
        hv = np.asarray(h, dtype=float)
        if hv.shape[:1] != self.p.shape:
            raise ValidationError("h array must align with task labels")
        return hv

    def truncation_level(self) -> float:
        if self.M is not None:
            return float(self.M)
        D = divergence(self.generator, self.nu, self.mu)
        plan = make_plan(self.generator, D, self.eps)
        if self.m < plan.n:
            warnings.warn(
                f"block size m={self.m} is below the planned budget {plan.n}", stacklevel=3
            )
        return plan.M

    @property
    def points(self) -> np.ndarray:
        try:
            z = np.asarray(self.labels, dtype=float)
        except (TypeError, ValueError) as exc:
            raise ValidationError("threshold estimates need numeric labels") from exc
        return z

    def thresholds(self) -> np.ndarray:
        if self.cls is not None:
            return np.asarray(self.cls.grid) if not self.cls.is_continuum else self._default_grid()
        return self._default_grid()

    def _default_grid(self) -> np.ndarray:
        return np.unique(np.concatenate([[0.0], self.points, [ABOVE_ONE]]))


def _require_ratio(task: EstimationTask) -> None:
    if task.singular > 0:
        raise UndefinedRatioError("nu has mass outside supp(mu); dnu/dmu is undefined")


# importance ----------------------------------------------------------------
def importance_batch(task: EstimationTask, rng: np.random.Generator) -> np.ndarray:
    """Counts per atom of ``n`` iid draws from ``mu``."""
    _require_ratio(task)
    idx = rng.choice(task.q.size, size=task.n, p=task.q)
    return np.bincount(idx, minlength=task.q.size)


def importance_from_batch(task: EstimationTask, counts: np.ndarray, h) -> np.ndarray:
    hv = task.h_values(h)
    r = np.where(task.q > 0, task.ratio, 0.0)
    weights = r.reshape(r.shape + (1,) * (hv.ndim - 1)) * hv
    return counts @ weights / task.n


def importance_estimate(task: EstimationTask, h, rng: np.random.Generator | int) -> float:
    rng = np.random.default_rng(rng)
    return float(importance_from_batch(task, importance_batch(task, rng), h))


def importance_replicates(
    task: EstimationTask, h, replicates: int, rng: np.random.Generator | int
) -> np.ndarray:
    """Independent draws of ``I_n(h)``, sampled through multinomial counts."""
    _require_ratio(task)
    rng = np.random.default_rng(rng)
    counts = rng.multinomial(task.n, task.q, size=replicates)
    return importance_from_batch(task, counts, h)


# rejection -----------------------------------------------------------------
def _rejection_counts(task: EstimationTask, reps: int, rng: np.random.Generator) -> np.ndarray:
    M = task.truncation_level()
    on = task.q > 0
    alpha = np.where(on & (task.ratio <= M), task.ratio / M, 0.0)
    if not np.any(alpha > 0):
        raise DegenerateTruncation("no target mass has ratio <= M")
    K, B, m = task.q.size, task.blocks, task.m
    out = np.empty((reps, K), dtype=np.int64)
    step = max(1, CHUNK // (B * m))
    for start in range(0, reps, step):
        r = min(step, reps - start)
        draws = rng.choice(K, size=(r, B, m), p=task.q)
        accept = rng.random((r, B, m)) < alpha[draws]
        first = np.argmax(accept, axis=2)
        fallback = rng.integers(0, m, size=(r, B))
        pick = np.where(accept.any(axis=2), first, fallback)
        chosen = np.take_along_axis(draws, pick[..., None], axis=2)[..., 0]
        offsets = np.arange(r)[:, None] * K
        out[start : start + r] = np.bincount(
            (chosen + offsets).ravel(), minlength=r * K
        ).reshape(r, K)
    return out


def rejection_batch(task: EstimationTask, rng: np.random.Generator) -> np.ndarray:
    """Counts per atom of the ``n/m`` selected points."""
    return _rejection_counts(task, 1, rng)[0]


def rejection_from_batch(task: EstimationTask, counts: np.ndarray, h) -> np.ndarray:
    return counts @ task.h_values(h) / task.blocks


def rejection_estimate(task: EstimationTask, h, rng: np.random.Generator | int) -> float:
    rng = np.random.default_rng(rng)
    return float(rejection_from_batch(task, rejection_batch(task, rng), h))


def rejection_replicates(
    task: EstimationTask, h, replicates: int, rng: np.random.Generator | int
) -> np.ndarray:
    rng = np.random.default_rng(rng)
    return rejection_from_batch(task, _rejection_counts(task, replicates, rng), h)


# uniform error over thresholds ------------------------------------------------
def _sign_matrix(task: EstimationTask, thetas: np.ndarray) -> np.ndarray:
    return np.where(task.points[:, None] >= thetas[None, :], 1.0, -1.0)


def threshold_truth(task: EstimationTask, thetas: np.ndarray | None = None) -> np.ndarray:
    """``E_nu[g_theta]`` for each threshold."""
    thetas = task.thresholds() if thetas is None else np.asarray(thetas)
    return task.p @ _sign_matrix(task, thetas)


def threshold_estimates(
    task: EstimationTask, counts: np.ndarray, estimator: str, thetas: np.ndarray | None = None
) -> np.ndarray:
    """Estimates of ``E_nu[g_theta]`` for every threshold from one batch (or a stack)."""
    thetas = task.thresholds() if thetas is None else np.asarray(thetas)
    S = _sign_matrix(task, thetas)
    if estimator == "importance":
        return importance_from_batch(task, counts, S)
    if estimator == "rejection":
        return rejection_from_batch(task, counts, S)
    raise ValidationError(f"unknown estimator {estimator!r}")


def uniform_error(task: EstimationTask, estimates, thetas: np.ndarray | None = None) -> np.ndarray:
    """``sup_theta |estimate(theta) - E_nu[g_theta]|``.

    ``estimates`` is an array over the thresholds (or a stack of such
    arrays) or a mapping ``theta -> estimate``.
    """
    if isinstance(estimates, dict):
        thetas = np.array(sorted(estimates))
        estimates = np.array([estimates[t] for t in thetas])
    thetas = task.thresholds() if thetas is None else np.asarray(thetas)
    est = np.asarray(estimates, dtype=float)
    if est.shape[-1] != thetas.size:
        raise ValidationError("need one estimate per threshold")
    err = np.max(np.abs(est - threshold_truth(task, thetas)), axis=-1)
    return float(err) if err.ndim == 0 else err


# bound curves ------------------------------------------------------------------
def default_entropy(alpha: float) -> float:
    """Bracketing number of thresholds at scale ``alpha``: ``ceil(2 / alpha**2)``."""
    return float(math.ceil(2.0 / alpha**2))


def bracketing_integral(entropy: Callable[[float], float] = default_entropy) -> float:
    """``int_0^2 sqrt(log N(alpha)) d alpha``.

    Step-function entropies are integrated piecewise on dyadic intervals
    ``[2**-(j+1), 2**-j] * 2``; the part below ``2**-60`` is dropped.
    """

    def integrand(a: float) -> float:
        return math.sqrt(max(math.log(entropy(a)), 0.0))

    edges = 2.0 * 0.5 ** np.arange(61)
    total = 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        for hi, lo in zip(edges[:-1], edges[1:]):
            total += integrate.quad(integrand, lo, hi, limit=200)[0]
    return total


def bound_curves(
    mu: DiscreteDist,
    nu: DiscreteDist,
    n_grid: Sequence[int],
    entropy: Callable[[float], float] = default_entropy,
    generator: Generator | None = None,
) -> dict:
    """Order-bound curves for both estimators over ``n_grid``.

    Importance: ``sqrt(1 + chi2) max(n**(-1/3), sqrt((1 + chi2) / n) I)``.
    Rejection: ``I sqrt(m_n / n) + 2 eps_n`` with ``eps_n = n**(-1/3)``
    and ``m_n`` the planned budget for ``D_f`` under ``generator``
    (chi-square by default).  ``kl_marker`` is ``exp(KL(nu || mu))``.
    """
    g = Generator.renyi(2.0) if generator is None else generator
    chi2 = divergence(Generator.renyi(2.0), nu, mu)
    kl = divergence(Generator.kl(), nu, mu)
    D = divergence(g, nu, mu)
    I = bracketing_integral(entropy)
    n = np.asarray(n_grid, dtype=float)
    importance = math.sqrt(1 + chi2) * np.maximum(n ** (-1 / 3), np.sqrt((1 + chi2) / n) * I)
    eps = n ** (-1 / 3)
    m = np.array([_plan_budget(g, D, e) for e in eps], dtype=float)
    rejection = I * np.sqrt(m / n) + 2 * eps
    return {
        "n": n,
        "importance": importance,
        "rejection": rejection,
        "m": m,
        "eps": eps,
        "chi2": chi2,
        "kl": kl,
        "kl_marker": math.exp(kl) if math.isfinite(kl) else math.inf,
        "integral": I,
    }


def _plan_budget(g: Generator, D: float, eps: float) -> float:
    if not 0 < eps < 1:
        return math.inf
    try:
        return float(make_plan(g, D, eps).n)
    except Exception:
        return math.inf


# experiments -------------------------------------------------------------------
def kl_threshold_experiment(
    mu: DiscreteDist,
    nu: DiscreteDist,
    n_grid: Sequence[int] | None = None,
    replicates: int = 50,
    rng: np.random.Generator | int = 0,
    h=None,
) -> list[dict]:
    """Mean absolute error of ``I_n(h)`` across ``n`` around ``exp(KL)``.

    ``h`` defaults to the constant 1, whose target value is 1.  The last
    row carries the ``exp(KL)`` marker.
    """
    rng = np.random.default_rng(rng)
    kl = divergence(Generator.kl(), nu, mu)
    if not math.isfinite(kl):
        raise UndefinedRatioError("KL(nu || mu) is infinite")
    marker = math.exp(kl)
    if n_grid is None:
        n_grid = knee_grid(marker)
    h = (lambda _lab: 1.0) if h is None else h
    rows = []
    for n in n_grid:
        task = EstimationTask(mu, nu, int(n), generator=Generator.kl())
        target = float(task.p @ task.h_values(h))
        err = np.abs(importance_replicates(task, h, replicates, rng) - target)
        rows.append(_row("importance", int(n), None, None, err, None))
    rows.append(
        {"estimator": "kl_marker", "n": marker, "m": None, "eps": None,
         "mean_err": None, "std_err": None, "bound_value": kl}
    )
    return rows


def knee_grid(marker: float, points: int = 9) -> list[int]:
    """Integers spread log-evenly over ``[marker / 10, 10 marker]``, at least 1."""
    grid = np.geomspace(max(marker / 10, 1.0), max(10 * marker, 2.0), points)
    return sorted({max(1, int(round(v))) for v in grid})


def compare_experiment(
    mu: DiscreteDist,
    nu: DiscreteDist,
    n_grid: Sequence[int],
    replicates: int = 50,
    rng: np.random.Generator | int = 0,
    generator: Generator | None = None,
    entropy: Callable[[float], float] = default_entropy,
) -> list[dict]:
    """Uniform errors of both estimators over thresholds, with bound curves.

    The rejection estimator uses ``eps = n**(-1/3)``, its planned block
    size ``m`` and ``floor(n / m)`` blocks (at least one).
    """
    rng = np.random.default_rng(rng)
    g = Generator.renyi(2.0) if generator is None else generator
    curves = bound_curves(mu, nu, n_grid, entropy, g)
    D = divergence(g, nu, mu)
    rows = []
    for i, n in enumerate(n_grid):
        n = int(n)
        task = EstimationTask(mu, nu, n, generator=g)
        counts = rng.multinomial(n, task.q, size=replicates)
        err = uniform_error(task, threshold_estimates(task, counts, "importance"))
        rows.append(_row("importance", n, None, None, err, curves["importance"][i]))

        eps = n ** (-1 / 3)
        plan = make_plan(g, D, min(eps, 0.5))
        m = plan.n
        blocks = max(1, n // m)
        rtask = EstimationTask(
            mu, nu, blocks * m, m=m, generator=g, eps=min(eps, 0.5), M=plan.M
        )
        rc = _rejection_counts(rtask, replicates, rng)
        err = uniform_error(rtask, threshold_estimates(rtask, rc, "rejection"))
        rows.append(_row("rejection", n, m, eps, err, curves["rejection"][i]))
    return rows


def _row(estimator, n, m, eps, err, bound) -> dict:
    err = np.atleast_1d(np.asarray(err, dtype=float))
    return {
        "estimator": estimator,
        "n": n,
        "m": m,
        "eps": eps,
        "mean_err": float(err.mean()),
        "std_err": float(err.std(ddof=1) / math.sqrt(err.size)) if err.size > 1 else 0.0,
        "bound_value": None if bound is None else float(bound),
    }
