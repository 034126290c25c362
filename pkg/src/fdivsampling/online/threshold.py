"""One-dimensional thresholds and an exact weighted ERM oracle.

Hypotheses are ``g_theta(x) = +1 if x >= theta else -1``.  With the linear
loss ``l(yhat, y) = (1 - yhat y) / 2`` the weighted empirical loss is

    L(theta) = sum_i w_i (1 - g_theta(x_i) y_i) / 2
             = A - sum_{x_i >= theta} w_i y_i,     A = sum_i w_i (1 + y_i) / 2,

a step function of ``theta`` that changes only at data points, so a single
sorted sweep evaluates it at every candidate threshold.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from ..errors import DataError, ValidationError

__all__ = [
    "ABOVE_ONE",
    "ThresholdClass",
    "WeightedExample",
    "ERMResult",
    "erm_oracle",
    "CountingOracle",
    "linear_loss",
]

# threshold that labels all of [0, 1] negative
ABOVE_ONE = math.nextafter(1.0, 2.0)


def linear_loss(yhat, y):
    return (1.0 - np.asarray(yhat) * np.asarray(y)) / 2.0


class WeightedExample(NamedTuple):
    x: float
    y: float
    w: float


class ERMResult(NamedTuple):
    theta: float
    value: float


@dataclass(frozen=True)
class ThresholdClass:
    """Thresholds on ``[0, 1]``.

    With ``grid=None`` the class is the full continuum ``[0, 1]`` together
    with :data:`ABOVE_ONE`; the ERM then searches ``{0, ABOVE_ONE}`` plus the
    data points, which covers every distinct behaviour.

    Parameters
    ----------
    grid : array_like, optional
        Sorted distinct candidate thresholds, at least two.
    """

    grid: tuple | None = None

    def __post_init__(self) -> None:
        if self.grid is None:
            return
        g = np.asarray(self.grid, dtype=float)
        if g.ndim != 1 or g.size < 2:
            raise ValidationError("a threshold grid needs at least two points")
        if np.any(np.diff(g) <= 0):
            raise ValidationError("threshold grid must be sorted and distinct")
        object.__setattr__(self, "grid", tuple(g.tolist()))

    @classmethod
    def uniform(cls, size: int) -> "ThresholdClass":
        """``size`` evenly spaced thresholds on ``[0, 1]`` plus :data:`ABOVE_ONE`."""
        if size < 2:
            raise ValidationError("size must be >= 2")
        return cls(tuple(np.linspace(0.0, 1.0, size).tolist()) + (ABOVE_ONE,))

    @classmethod
    def continuum(cls) -> "ThresholdClass":
        return cls(None)

    @property
    def is_continuum(self) -> bool:
        return self.grid is None

    def candidates(self, x: np.ndarray | None = None) -> np.ndarray:
        if self.grid is not None:
            return np.asarray(self.grid)
        pts = [0.0, ABOVE_ONE]
        if x is not None and x.size:
            pts.append(x[(x > 0.0) & (x <= 1.0)])
            return np.unique(np.concatenate([np.atleast_1d(p) for p in pts]))
        return np.array(pts)

    @staticmethod
    def predict(theta: float, x) -> np.ndarray:
        return np.where(np.asarray(x) >= theta, 1.0, -1.0)


def _as_arrays(data) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    if isinstance(data, tuple) and len(data) == 3 and not isinstance(data[0], (int, float)):
        x, y, w = (np.asarray(a, dtype=float).ravel() for a in data)
    else:
        rows = list(data)
        if not rows:
            return np.empty(0), np.empty(0), np.empty(0)
        arr = np.asarray(rows, dtype=float).reshape(len(rows), 3)
        x, y, w = arr[:, 0], arr[:, 1], arr[:, 2]
    if not (x.size == y.size == w.size):
        raise DataError("x, y and w must have equal length")
    return x, y, w


def erm_oracle(cls: ThresholdClass, data) -> ERMResult:
    """Exact minimiser of the weighted linear loss over the class.

    Parameters
    ----------
    cls : ThresholdClass
    data : sequence of WeightedExample or tuple ``(x, y, w)`` of arrays
        Weights may be negative.  Zero-weight examples are ignored.

    Returns
    -------
    ERMResult
        ``theta`` minimising the loss (smallest one among ties) and the
        minimal value.
    """
    x, y, w = _as_arrays(data)
    live = w != 0
    x, y, w = x[live], y[live], w[live]
    if x.size == 0:
        cand = cls.candidates(x)
        if cand.size == 0:
            raise ValidationError("empty threshold grid")
        return ERMResult(float(cand[0]), 0.0)
    base = float(np.sum(w * (1.0 + y) / 2.0))
    order = np.argsort(x, kind="stable")
    xs = x[order]
    s = (w * y)[order]
    suffix = np.concatenate([np.cumsum(s[::-1])[::-1], [0.0]])
    if cls.is_continuum:
        # 0, the distinct data points in (0, 1], then ABOVE_ONE
        first = np.flatnonzero(np.concatenate([[True], xs[1:] != xs[:-1]]))
        keep = (xs[first] > 0.0) & (xs[first] <= 1.0)
        cand = np.concatenate([[0.0], xs[first[keep]], [ABOVE_ONE]])
        pos = np.concatenate(
            [np.searchsorted(xs, [0.0]), first[keep], np.searchsorted(xs, [ABOVE_ONE])]
        )
    else:
        cand = np.asarray(cls.grid)
        pos = np.searchsorted(xs, cand, side="left")
    vals = base - suffix[pos]
    best = vals.min()
    tol = 1e-9 * (1.0 + float(np.abs(w).sum()))
    i = int(np.flatnonzero(vals <= best + tol)[0])
    return ERMResult(float(cand[i]), float(vals[i]))


class CountingOracle:
    """ERM oracle over a fixed class that counts its calls."""

    def __init__(self, cls: ThresholdClass):
        self.cls = cls
        self.calls = 0

    def __call__(self, data) -> ERMResult:
        self.calls += 1
        return erm_oracle(self.cls, data)
