"""Truncated rejection sampling with exact output laws.

The selector draws ``n`` proposals from ``mu``, accepts proposal ``j`` with
probability ``r(X_j) / M`` when ``r(X_j) <= M`` (``r = dnu/dmu``), returns
the first accepted index and otherwise falls back to a uniform (or the
first) index.  Because acceptances are independent, the output law has the
closed form

    law = q nu_M + (1 - q) mu_rej,

where ``nu_M`` is ``nu`` conditioned on ``{r <= M}``, ``a = nu(r <= M) / M``
is the per-proposal acceptance probability, ``q = 1 - (1 - a)**n``, and
``mu_rej`` is ``mu`` conditioned on rejection: ``mu_rej(x) = mu(x) (1 -
alpha(x)) / (1 - a)`` with ``alpha(x) = r(x) / M`` on ``{r <= M}``.  When
nothing is accepted every proposal was rejected, and all of them are iid
``mu_rej``, so which index the fallback picks does not matter.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Hashable, Mapping, Sequence

import numpy as np

from .complexity import upper_bound_n
from .divergence import DiscreteDist, Generator, align, egamma, tv_distance
from .errors import (
    DataError,
    DegenerateTruncation,
    InvariantViolation,
    PreconditionError,
    SizeError,
    UnboundedTruncation,
    ValidationError,
)

__all__ = [
    "SamplerPlan",
    "SamplerOutcome",
    "OutputLaw",
    "ClampResult",
    "make_plan",
    "rejection_select",
    "exact_output_law",
    "clamp_projection",
    "brute_force_output_law",
    "label_order",
]

FALLBACKS = ("uniform_index", "fixed_first")


@dataclass(frozen=True)
class SamplerPlan:
    """Truncation level ``M``, proposal budget ``n`` and fallback rule."""

    M: float
    n: int
    fallback: str = "uniform_index"

    def __post_init__(self) -> None:
        if not (self.M >= 1 and math.isfinite(self.M)):
            raise ValidationError("M must be a finite real >= 1")
        if int(self.n) != self.n or self.n < 1:
            raise ValidationError("n must be a positive integer")
        if self.fallback not in FALLBACKS:
            raise ValidationError(f"fallback must be one of {FALLBACKS}")


@dataclass(frozen=True)
class SamplerOutcome:
    """Result of one selection; ``chosen_index`` is 0-based."""

    chosen_index: int
    accepted: bool
    draws: tuple

    @property
    def label(self) -> Hashable:
        return self.draws[self.chosen_index]


@dataclass(frozen=True)
class OutputLaw:
    law: DiscreteDist
    tv_to_target: float
    accept_prob: float
    success_prob: float


@dataclass(frozen=True)
class ClampResult:
    nu_tilde: DiscreteDist
    tv_min: float


def make_plan(g: Generator, D: float, eps: float, fallback: str = "uniform_index") -> SamplerPlan:
    """Plan with ``M = 2 (f')^{-1}(4 D / eps)`` and the matching proposal budget.

    Raises
    ------
    UnboundedTruncation
        When ``(f')^{-1}(4 D / eps)`` is infinite, as for TV with ``D > 0``.
    """
    if not 0.0 < eps < 1.0:
        raise ValidationError("eps must lie in (0, 1)")
    inv = g.inv_fprime(4.0 * D / eps)
    if math.isinf(inv):
        raise UnboundedTruncation(
            f"(f')^-1(4D/eps) is infinite for {g.spec()} with D={D!r}, eps={eps!r}"
        )
    return SamplerPlan(M=2.0 * inv, n=int(upper_bound_n(g, D, eps)), fallback=fallback)


def rejection_select(
    mu: DiscreteDist,
    ratio: Mapping[Hashable, float],
    plan: SamplerPlan,
    rng: np.random.Generator | int,
) -> SamplerOutcome:
    """Run the truncated rejection selector once.

    Parameters
    ----------
    mu : DiscreteDist
        Proposal law.
    ratio : mapping
        ``dnu/dmu`` on ``supp(mu)``.
    plan : SamplerPlan
    rng : numpy Generator or int seed
        Consumed as: ``n`` proposals, ``n`` uniforms, then one integer if
        the fallback is uniform and nothing was accepted.
    """
    rng = np.random.default_rng(rng)
    idx = rng.choice(len(mu), size=plan.n, p=mu.masses)
    draws = tuple(mu.labels[i] for i in idx)
    try:
        r = np.array([float(ratio[lab]) for lab in draws])
    except KeyError as exc:
        raise DataError(f"ratio undefined for drawn label {exc.args[0]!r}") from None
    alpha = np.where(r <= plan.M, r / plan.M, 0.0)
    accept = rng.random(plan.n) < alpha
    if accept.any():
        return SamplerOutcome(int(np.argmax(accept)), True, draws)
    if plan.fallback == "uniform_index":
        return SamplerOutcome(int(rng.integers(plan.n)), False, draws)
    return SamplerOutcome(0, False, draws)


def exact_output_law(nu: DiscreteDist, mu: DiscreteDist, M: float, n: int) -> OutputLaw:
    """Closed-form law of the selector's output and its TV distance to ``nu``.

    Raises
    ------
    DegenerateTruncation
        When ``nu(r <= M) = 0``.
    """
    if not M > 0 or n < 1:
        raise ValidationError("need M > 0 and n >= 1")
    labels, p, q = align(nu, mu)
    on = q > 0
    r = np.full_like(p, np.inf)
    r[on] = p[on] / q[on]
    keep = on & (r <= M)
    kept = float(p[keep].sum())
    if kept <= 0:
        raise DegenerateTruncation("no target mass has ratio <= M")
    nu_M = np.where(keep, p, 0.0) / kept
    alpha = np.where(keep, r / M, 0.0)
    alpha[~on] = 0.0
    a = min(kept / M, 1.0)
    if a >= 1.0:
        success = 1.0
        fallback = np.zeros_like(p)
    else:
        success = -math.expm1(n * math.log1p(-a))
        fallback = q * (1.0 - alpha) / (1.0 - a)
    masses = np.maximum(success * nu_M + (1.0 - success) * fallback, 0.0)
    law = DiscreteDist(labels, masses / masses.sum())
    return OutputLaw(law, tv_distance(law, nu), a, success)


def label_order(labels: Sequence[Hashable]) -> list[int]:
    """Positions of ``labels`` in ascending label order (string order if unorderable)."""
    try:
        return sorted(range(len(labels)), key=lambda i: labels[i])
    except TypeError:
        return sorted(range(len(labels)), key=lambda i: str(labels[i]))


def clamp_projection(nu: DiscreteDist, mu: DiscreteDist, gamma: float) -> ClampResult:
    """Closest law to ``nu`` in TV among laws with ratio to ``mu`` at most ``gamma``.

    Clamps ``nu`` to ``gamma mu`` and hands the removed mass to atoms with
    slack in ascending label order.  The attained TV equals
    ``E_gamma(nu || mu)``.
    """
    if not gamma >= 1:
        raise PreconditionError("gamma must be >= 1")
    labels, p, q = align(nu, mu)
    cap = gamma * q
    tilde = np.minimum(p, cap)
    remaining = float(p.sum() - tilde.sum())
    for i in label_order(labels):
        if remaining <= 0:
            break
        add = min(cap[i] - tilde[i], remaining)
        if add > 0:
            tilde[i] += add
            remaining -= add
    if remaining > 1e-12:
        raise InvariantViolation(f"could not redistribute {remaining} mass")
    nu_tilde = DiscreteDist(labels, tilde / tilde.sum())
    tv_min = tv_distance(nu_tilde, nu)
    target = egamma(nu, mu, gamma)
    if abs(tv_min - target) > 1e-12:
        raise InvariantViolation(f"clamp TV {tv_min} differs from E_gamma {target}")
    on = q > 0
    if np.any(nu_tilde.masses[~on] > 0) or np.any(
        nu_tilde.masses[on] > gamma * q[on] * (1 + 1e-12) + 1e-15
    ):
        raise InvariantViolation("clamped law exceeds the ratio cap")
    return ClampResult(nu_tilde, tv_min)


def brute_force_output_law(
    mu: DiscreteDist, rule: Callable[[tuple], int], n: int, max_outcomes: int = 10**6
) -> DiscreteDist:
    """Exact law of ``X_{rule(X_1..X_n)}`` by enumerating all proposal tuples.

    ``rule`` maps a tuple of ``n`` labels to a 0-based index.  The result is
    checked against the ratio cap ``law / mu <= n``.
    """
    atoms = [(lab, float(m)) for lab, m in zip(mu.labels, mu.masses) if m > 0]
    k = len(atoms)
    if n < 1:
        raise ValidationError("n must be positive")
    if k**n > max_outcomes:
        raise SizeError(f"{k}^{n} outcomes exceed the enumeration limit {max_outcomes}")
    law = dict.fromkeys(mu.labels, 0.0)
    for combo in itertools.product(range(k), repeat=n):
        draws = tuple(atoms[i][0] for i in combo)
        prob = math.prod(atoms[i][1] for i in combo)
        j = rule(draws)
        if not (isinstance(j, (int, np.integer)) and 0 <= j < n):
            raise DataError(f"rule returned invalid index {j!r}")
        law[draws[j]] += prob
    out = DiscreteDist(list(law), list(law.values()))
    for lab, m in atoms:
        if out.mass(lab) / m > n + 1e-12:
            raise InvariantViolation(f"output ratio at {lab!r} exceeds n = {n}")
    return out
