"""Generator calculus and exact f-divergences on finite distributions.

Four generator families are supported, each normalised so that ``f(1) = 0``:

=========  ==============================  =================
kind       f(x)                            f'(inf)
=========  ==============================  =================
``tv``     ``|x - 1| - (x - 1)``           0
``kl``     ``x log x - x + 1``             inf
``renyi``  ``x**lam - lam x + lam - 1``    inf
``egamma`` ``(x - gamma)_+``               1
=========  ==============================  =================

Derivatives follow the maximal-subgradient convention: at a kink the right
derivative is returned.  The divergence of ``nu`` from ``mu`` is

    D_f(nu || mu) = sum_{mu(x) > 0} mu(x) f(nu(x) / mu(x)) + f'(inf) nu(mu = 0)

with ``0 * inf = 0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Hashable, Iterable, Mapping, Sequence

import numpy as np
from scipy.special import xlogy

from .errors import DataError, DomainError, InvariantViolation, ValidationError

__all__ = [
    "Generator",
    "DiscreteDist",
    "align",
    "eval_f",
    "eval_fprime",
    "eval_fsecond",
    "fprime_at_infinity",
    "inv_fprime",
    "divergence",
    "egamma",
    "tv_distance",
    "likelihood_ratio",
    "ratio_tail_mass",
]

KINDS = ("tv", "kl", "renyi", "egamma")
NORMALIZATION_TOL = 1e-9


@dataclass(frozen=True)
class Generator:
    """An f-divergence generator.

    Parameters
    ----------
    kind : {"tv", "kl", "renyi", "egamma"}
    param : float, optional
        Order ``lam > 1`` for ``renyi`` and threshold ``gamma >= 1`` for
        ``egamma``.  Must be ``None`` for the other kinds.
    """

    kind: str
    param: float | None = None

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValidationError(f"unknown generator kind {self.kind!r}")
        if self.kind == "renyi":
            if self.param is None or not self.param > 1 or not math.isfinite(self.param):
                raise ValidationError("renyi order must be a finite real > 1")
        elif self.kind == "egamma":
            if self.param is None or not self.param >= 1 or not math.isfinite(self.param):
                raise ValidationError("egamma threshold must be a finite real >= 1")
        elif self.param is not None:
            raise ValidationError(f"{self.kind} takes no parameter")
        if self.param is not None:
            object.__setattr__(self, "param", float(self.param))

    # constructors -------------------------------------------------------
    @classmethod
    def tv(cls) -> "Generator":
        return cls("tv")

    @classmethod
    def kl(cls) -> "Generator":
        return cls("kl")

    @classmethod
    def renyi(cls, lam: float) -> "Generator":
        return cls("renyi", lam)

    @classmethod
    def egamma(cls, gamma: float) -> "Generator":
        return cls("egamma", gamma)

    @classmethod
    def parse(cls, spec: str) -> "Generator":
        """Parse ``"kl"``, ``"tv"``, ``"renyi:2"`` or ``"egamma:1.5"``."""
        name, _, arg = spec.strip().lower().partition(":")
        if name in ("tv", "kl"):
            if arg:
                raise ValidationError(f"{name} takes no parameter")
            return cls(name)
        if name in ("renyi", "egamma"):
            if not arg:
                raise ValidationError(f"{name} requires a parameter, e.g. {name}:2")
            try:
                value = float(arg)
            except ValueError as exc:
                raise ValidationError(f"bad generator parameter {arg!r}") from exc
            return cls(name, value)
        raise ValidationError(f"unknown generator {spec!r}")

    def spec(self) -> str:
        """Inverse of :meth:`parse`."""
        if self.param is None:
            return self.kind
        return f"{self.kind}:{self.param:g}"

    @property
    def is_superlinear(self) -> bool:
        """True when ``f'(inf)`` is infinite (KL and Renyi)."""
        return self.kind in ("kl", "renyi")

    # calculus -----------------------------------------------------------
    def f(self, t):
        """Generator value ``f(t)`` for ``t >= 0`` (scalar or array)."""
        x = np.asarray(t, dtype=float)
        if np.any(x < 0) or np.any(np.isnan(x)):
            raise DomainError("f is defined on [0, inf)")
        if self.kind == "tv":
            out = np.abs(x - 1.0) - (x - 1.0)
        elif self.kind == "kl":
            out = np.maximum(xlogy(x, x) - x + 1.0, 0.0)
        elif self.kind == "renyi":
            lam = self.param
            with np.errstate(over="ignore"):
                out = np.maximum(x**lam - lam * x + lam - 1.0, 0.0)
        else:
            out = np.maximum(x - self.param, 0.0)
        return _scalarize(out)

    def fprime(self, t):
        """Right derivative ``f'(t)`` for ``t > 0``."""
        x = np.asarray(t, dtype=float)
        if np.any(~(x > 0)):
            raise DomainError("f' is evaluated on (0, inf)")
        if self.kind == "tv":
            out = np.where(x < 1.0, -2.0, 0.0)
        elif self.kind == "kl":
            out = np.log(x)
        elif self.kind == "renyi":
            lam = self.param
            with np.errstate(over="ignore"):
                out = lam * x ** (lam - 1.0) - lam
        else:
            out = np.where(x < self.param, 0.0, 1.0)
        return _scalarize(out)

    def fsecond(self, t):
        """Right second derivative ``f''(t)`` for ``t > 0``."""
        x = np.asarray(t, dtype=float)
        if np.any(~(x > 0)):
            raise DomainError("f'' is evaluated on (0, inf)")
        if self.kind == "kl":
            out = 1.0 / x
        elif self.kind == "renyi":
            lam = self.param
            with np.errstate(over="ignore"):
                out = lam * (lam - 1.0) * x ** (lam - 2.0)
        else:
            out = np.zeros_like(x)
        return _scalarize(out)

    @property
    def fprime_inf(self) -> float:
        """``lim_{t -> inf} f'(t)``."""
        return {"tv": 0.0, "kl": math.inf, "renyi": math.inf, "egamma": 1.0}[self.kind]

    def inv_fprime(self, u: float) -> float:
        """Generalised inverse ``inf{t > 0 : f'(t) >= u}`` for ``u >= 0``.

        Returns ``math.inf`` when the set is empty.  For the linear kinds the
        value at ``u = 0`` is fixed to 1 by convention.
        """
        u = float(u)
        if not u >= 0:
            raise DomainError("inverse derivative is evaluated on [0, inf)")
        if self.kind == "kl":
            return math.exp(u) if u < 709.0 else math.inf
        if self.kind == "renyi":
            lam = self.param
            try:
                return max(1.0, (1.0 + u / lam) ** (1.0 / (lam - 1.0)))
            except OverflowError:
                return math.inf
        if self.kind == "tv":
            return 1.0 if u == 0 else math.inf
        if u == 0:
            return 1.0
        return self.param if u <= 1.0 else math.inf


def _scalarize(out: np.ndarray):
    return float(out) if out.ndim == 0 else out


def eval_f(g: Generator, t) -> float:
    """Functional alias of :meth:`Generator.f`."""
    return g.f(t)


def eval_fprime(g: Generator, t) -> float:
    """Functional alias of :meth:`Generator.fprime`."""
    return g.fprime(t)


def eval_fsecond(g: Generator, t) -> float:
    """Functional alias of :meth:`Generator.fsecond`."""
    return g.fsecond(t)


def fprime_at_infinity(g: Generator) -> float:
    return g.fprime_inf


def inv_fprime(g: Generator, u: float) -> float:
    """Functional alias of :meth:`Generator.inv_fprime`."""
    return g.inv_fprime(u)


class DiscreteDist:
    """Immutable finite distribution over distinct hashable labels.

    Masses must be nonnegative and sum to one within ``1e-9``; they are
    renormalised exactly on construction.  Zero-mass atoms are allowed and
    kept, which lets laws share a label universe.

    Parameters
    ----------
    labels : sequence of hashable
    masses : array_like of float
    """

    __slots__ = ("_labels", "_masses", "_index")

    def __init__(self, labels: Sequence[Hashable], masses: Iterable[float]):
        labels = tuple(labels)
        p = np.array(list(masses) if not isinstance(masses, np.ndarray) else masses, dtype=float)
        if p.ndim != 1 or p.size != len(labels):
            raise DataError("labels and masses must have equal length")
        if p.size == 0:
            raise DataError("a distribution needs at least one atom")
        if not np.all(np.isfinite(p)) or np.any(p < 0):
            raise DataError("masses must be finite and nonnegative")
        if len(set(labels)) != len(labels):
            raise DataError("labels must be distinct")
        total = float(p.sum())
        if abs(total - 1.0) > NORMALIZATION_TOL:
            raise DataError(f"masses sum to {total!r}, not 1")
        if total != 1.0:
            p = p / total
        p.setflags(write=False)
        self._labels = labels
        self._masses = p
        self._index = None

    @classmethod
    def _trusted(cls, labels: tuple, masses: np.ndarray) -> "DiscreteDist":
        """Skip validation; callers guarantee distinct labels and unit mass."""
        self = cls.__new__(cls)
        masses = np.array(masses, dtype=float)
        masses.setflags(write=False)
        self._labels, self._masses, self._index = labels, masses, None
        return self

    # construction helpers ----------------------------------------------
    @classmethod
    def from_mapping(cls, mapping: Mapping[Hashable, float]) -> "DiscreteDist":
        return cls(list(mapping.keys()), list(mapping.values()))

    @classmethod
    def point(cls, label: Hashable) -> "DiscreteDist":
        return cls([label], [1.0])

    @classmethod
    def bernoulli(cls, p: float) -> "DiscreteDist":
        """Two atoms ``"1"`` (mass ``p``) and ``"0"``."""
        if not 0.0 <= p <= 1.0:
            raise DataError("bernoulli parameter must lie in [0, 1]")
        return cls(["1", "0"], [p, 1.0 - p])

    @classmethod
    def uniform(cls, labels: Sequence[Hashable]) -> "DiscreteDist":
        k = len(labels)
        return cls(labels, np.full(k, 1.0 / k))

    @classmethod
    def from_records(cls, records: Sequence[Mapping[str, Any]]) -> "DiscreteDist":
        """Build from ``[{"label": ..., "mass": ...}, ...]``."""
        try:
            labels = [r["label"] for r in records]
            masses = [float(r["mass"]) for r in records]
        except (KeyError, TypeError, ValueError) as exc:
            raise DataError("distribution records need 'label' and numeric 'mass'") from exc
        return cls(labels, masses)

    def to_records(self) -> list[dict[str, Any]]:
        return [{"label": lab, "mass": float(m)} for lab, m in zip(self._labels, self._masses)]

    # accessors -----------------------------------------------------------
    @property
    def labels(self) -> tuple:
        return self._labels

    @property
    def masses(self) -> np.ndarray:
        return self._masses

    @property
    def support(self) -> tuple:
        return tuple(lab for lab, m in zip(self._labels, self._masses) if m > 0)

    @property
    def _lookup(self) -> dict:
        if self._index is None:
            self._index = {lab: i for i, lab in enumerate(self._labels)}
        return self._index

    def mass(self, label: Hashable) -> float:
        i = self._lookup.get(label)
        return 0.0 if i is None else float(self._masses[i])

    def index_of(self, label: Hashable) -> int:
        return self._lookup[label]

    def __contains__(self, label: Hashable) -> bool:
        return label in self._lookup

    def __len__(self) -> int:
        return len(self._labels)

    def as_dict(self) -> dict:
        return dict(zip(self._labels, self._masses.tolist()))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, DiscreteDist):
            return NotImplemented
        return self._labels == other._labels and np.array_equal(self._masses, other._masses)

    __hash__ = None  # type: ignore[assignment]

    def __repr__(self) -> str:
        body = ", ".join(f"{lab!r}: {m:.6g}" for lab, m in zip(self._labels, self._masses))
        return f"DiscreteDist({{{body}}})"


def align(nu: DiscreteDist, mu: DiscreteDist) -> tuple[tuple, np.ndarray, np.ndarray]:
    """Put ``nu`` and ``mu`` on their common label universe.

    Returns
    -------
    labels : tuple
        Labels of ``mu`` in order, followed by labels only ``nu`` carries.
    p, q : ndarray
        Masses of ``nu`` and ``mu`` on ``labels``.
    """
    k = len(mu)
    if nu.labels[:k] == mu.labels:
        # common case: nu extends mu's label list
        extra = nu.labels[k:]
        if not any(lab in mu for lab in extra):
            q = np.concatenate([mu.masses, np.zeros(len(extra))])
            return nu.labels, np.array(nu.masses), q
    extra = [lab for lab in nu.labels if lab not in mu]
    labels = mu.labels + tuple(extra)
    q = np.concatenate([mu.masses, np.zeros(len(extra))])
    p = np.array([nu.mass(lab) for lab in labels])
    return labels, p, q


def divergence(g: Generator, nu: DiscreteDist, mu: DiscreteDist) -> float:
    """Exact ``D_f(nu || mu)``; ``math.inf`` when singular mass meets ``f'(inf) = inf``."""
    _, p, q = align(nu, mu)
    on = q > 0
    total = float(np.sum(q[on] * np.asarray(g.f(p[on] / q[on]))))
    singular = float(p[~on].sum())
    if singular > 0:
        total += g.fprime_inf * singular
    return max(total, 0.0)


def egamma(nu: DiscreteDist, mu: DiscreteDist, gamma: float) -> float:
    """Hockey-stick divergence ``sum (nu - gamma mu)_+`` plus singular mass."""
    if not gamma >= 1:
        raise ValidationError("gamma must be >= 1")
    _, p, q = align(nu, mu)
    on = q > 0
    return float(np.maximum(p[on] - gamma * q[on], 0.0).sum() + p[~on].sum())


def tv_distance(nu: DiscreteDist, mu: DiscreteDist) -> float:
    """``sup_A |nu(A) - mu(A)|``, i.e. half the L1 distance."""
    _, p, q = align(nu, mu)
    return float(min(0.5 * np.abs(p - q).sum(), 1.0))


def likelihood_ratio(nu: DiscreteDist, mu: DiscreteDist) -> dict:
    """``nu(x) / mu(x)`` on ``supp(mu)``; labels outside the support are omitted."""
    return {lab: nu.mass(lab) / m for lab, m in zip(mu.labels, mu.masses) if m > 0}


def ratio_tail_mass(
    nu: DiscreteDist, mu: DiscreteDist, M: float, g: Generator | None = None
) -> float:
    """``nu(dnu/dmu > M)``, counting singular mass as ratio ``inf``.

    When a generator is given and ``M >= 2`` the tail is checked against
    ``2 D_f(nu || mu) / f'(M/2)``; the check is skipped if that bound is
    infinite or ``f'(M/2) <= 0``.

    Raises
    ------
    InvariantViolation
        If the checked bound fails.
    """
    _, p, q = align(nu, mu)
    on = q > 0
    ratio = np.full_like(p, np.inf)
    ratio[on] = p[on] / q[on]
    tail = float(p[ratio > M].sum())
    if g is not None and M >= 2:
        slope = float(g.fprime(M / 2.0))
        D = divergence(g, nu, mu)
        if slope > 0 and math.isfinite(D):
            bound = 2.0 * D / slope
            if tail > bound + 1e-12:
                raise InvariantViolation(f"tail mass {tail} exceeds 2D/f'(M/2) = {bound}")
    return tail
