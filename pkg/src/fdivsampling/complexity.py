"""Sample-complexity and regret-bound evaluators.

All evaluators return plain floats or ints.  Sample counts are rounded up,
and ``math.inf`` marks a vacuous bound.  The regret bounds are order bounds
with universal constants set to one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .divergence import Generator
from .errors import PreconditionError, UnsupportedKindError, ValidationError

__all__ = [
    "ceil_count",
    "upper_bound_n",
    "lower_bound_n",
    "lower_bound_tv",
    "coupling_n",
    "RegretBounds",
    "regret_bounds",
    "GRID",
]

# log-spaced grid for the inner minimisations over eps and alpha
GRID = np.geomspace(1e-6, 1.0, 201)[:-1]


def ceil_count(x: float) -> int | float:
    """Ceiling that absorbs float noise just above an integer; passes ``inf`` through."""
    if math.isinf(x):
        return math.inf
    return int(math.ceil(x * (1.0 - 4e-16) - 1e-12))


def _check_eps(eps: float) -> None:
    if not 0.0 < eps < 1.0:
        raise ValidationError("eps must lie in (0, 1)")


def upper_bound_n(g: Generator, D: float, eps: float) -> int | float:
    """Number of proposals that suffices for total-variation error ``eps``.

    ``n = ceil(max((2 / (1 - eps)) log(2 / eps) (f')^{-1}(4 D / eps), 2))``.
    """
    _check_eps(eps)
    if not D >= 0:
        raise ValidationError("D must be nonnegative")
    inv = g.inv_fprime(4.0 * D / eps)
    if math.isinf(inv):
        return math.inf
    return ceil_count(max(2.0 / (1.0 - eps) * math.log(2.0 / eps) * inv, 2.0))


def lower_bound_n(g: Generator, delta: float, eps: float) -> float:
    """Proposals any selector needs on the hardest pair with ``D_f <= delta``.

    Returns ``0.5 (f')^{-1}(delta / (2 eps))``.  For superlinear generators
    the construction needs ``delta > 2 f(1/2)``; for linear generators the
    value is returned as is (infinite for TV).
    """
    if not 0.0 < eps <= 0.25:
        raise ValidationError("eps must lie in (0, 1/4]")
    if not delta > 0:
        raise ValidationError("delta must be positive")
    if g.is_superlinear and not delta > 2.0 * g.f(0.5):
        raise PreconditionError(f"delta must exceed 2 f(1/2) = {2.0 * g.f(0.5)!r}")
    return 0.5 * g.inv_fprime(delta / (2.0 * eps))


def lower_bound_tv(g: Generator, D: float, n: float, zeta: float) -> float:
    """Total-variation floor for ``n`` proposals under growth exponent ``zeta``.

    ``(zeta**(1+zeta) / 8) (D / f'(n))**(1+zeta)``, which coincides with
    ``(1/8) (zeta D / f'(n))**(1+zeta)``.
    """
    if not g.is_superlinear:
        raise UnsupportedKindError("the total-variation floor needs a superlinear generator")
    if not zeta > 0:
        raise ValidationError("zeta must be positive")
    if not D >= 0:
        raise ValidationError("D must be nonnegative")
    slope = float(g.fprime(n)) if n > 0 else 0.0
    if not slope > 0:
        raise PreconditionError("f'(n) must be positive (take n > 1)")
    value = zeta ** (1.0 + zeta) / 8.0 * (D / slope) ** (1.0 + zeta)
    packaged = (zeta * D / slope) ** (1.0 + zeta) / 8.0
    assert math.isclose(value, packaged, rel_tol=1e-12, abs_tol=1e-300)
    return value


def coupling_n(g: Generator, sigma: float, eps: float, delta: float, T: int) -> int | float:
    """Proposals per round for a ``delta``-probability coupling over ``T`` rounds.

    ``ceil((1 / (1 - eps)) log(T / delta) (f')^{-1}(1 / (eps sigma)))``.
    """
    _check_eps(eps)
    if not 0.0 < delta < 1.0:
        raise ValidationError("delta must lie in (0, 1)")
    if not 0.0 < sigma <= 1.0:
        raise ValidationError("sigma must lie in (0, 1]")
    if T < 1:
        raise ValidationError("T must be >= 1")
    inv = g.inv_fprime(1.0 / (eps * sigma))
    if math.isinf(inv):
        return math.inf
    return ceil_count(math.log(T / delta) * inv / (1.0 - eps))


@dataclass(frozen=True)
class RegretBounds:
    """Order bounds on regret, each capped at the trivial value ``T``."""

    minimax: float
    improper: float
    ftpl: float


def regret_bounds(
    g: Generator, sigma: float, T: int, d: int = 1, lam: float | None = None
) -> RegretBounds:
    """Evaluate the three smoothed-regret bounds for a class of VC dimension ``d``.

    Parameters
    ----------
    g : Generator
        Smoothness generator; drives ``(f')^{-1}`` in the first two bounds.
    sigma : float
        Smoothness level in ``(0, 1]``.
    T : int
        Horizon.
    d : int
        VC dimension.
    lam : float, optional
        Renyi order for the FTPL bound; defaults to ``g.param`` for Renyi
        generators.  For other generators the FTPL bound is ``T``.
    """
    if not 0.0 < sigma <= 1.0:
        raise ValidationError("sigma must lie in (0, 1]")
    if T < 1 or d < 1:
        raise ValidationError("T and d must be positive")
    T = float(T)
    logT = math.log(T)
    inv = np.array([g.inv_fprime(1.0 / (a * sigma)) for a in GRID])
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        minimax_vals = GRID * T + np.sqrt(T * d * np.log(T * inv)) + math.sqrt(T * logT * d)
        improper_vals = GRID * T + np.sqrt(d * T * logT * inv)
    minimax = min(float(np.nanmin(minimax_vals)), T)
    improper = min(float(np.nanmin(improper_vals)), T)

    if lam is None and g.kind == "renyi":
        lam = g.param
    if lam is None:
        ftpl = T
    else:
        if not lam > 1:
            raise ValidationError("lam must exceed 1")
        ftpl = math.sqrt(d) * T ** ((2 * lam + 1) / (4 * lam - 1)) * sigma ** (-1 / (4 * lam - 1))
        ftpl = min(ftpl, T)
    return RegretBounds(minimax=minimax, improper=improper, ftpl=ftpl)
