"""Approximate rejection sampling under f-divergence budgets."""

from .divergence import (
    DiscreteDist,
    Generator,
    divergence,
    egamma,
    eval_f,
    eval_fprime,
    fprime_at_infinity,
    inv_fprime,
    ratio_tail_mass,
    tv_distance,
)
from .errors import FdivError

__version__ = "0.1.0"

__all__ = [
    "DiscreteDist",
    "FdivError",
    "Generator",
    "divergence",
    "egamma",
    "eval_f",
    "eval_fprime",
    "fprime_at_infinity",
    "inv_fprime",
    "ratio_tail_mass",
    "tv_distance",
    "__version__",
]
