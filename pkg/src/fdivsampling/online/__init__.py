"""Smoothed online learning over one-dimensional thresholds."""

from .adversaries import (
    AdversarySpec,
    build_adversary,
    max_mixing_weight,
    smoothness_check,
    uniform_grid,
)
from .game import CouplingReport, RegretTrace, coupling_demo, run_game
from .learners import (
    FTL,
    FTPL,
    LearnerSpec,
    Relaxation,
    draw_perturbation,
    ftpl_preset,
    ftpl_step,
    relaxation_step,
)
from .threshold import (
    ABOVE_ONE,
    CountingOracle,
    ThresholdClass,
    WeightedExample,
    erm_oracle,
    linear_loss,
)

__all__ = [
    "ABOVE_ONE",
    "AdversarySpec",
    "CountingOracle",
    "CouplingReport",
    "FTL",
    "FTPL",
    "LearnerSpec",
    "RegretTrace",
    "Relaxation",
    "ThresholdClass",
    "WeightedExample",
    "build_adversary",
    "coupling_demo",
    "draw_perturbation",
    "erm_oracle",
    "ftpl_preset",
    "ftpl_step",
    "linear_loss",
    "max_mixing_weight",
    "relaxation_step",
    "run_game",
    "smoothness_check",
    "uniform_grid",
]
