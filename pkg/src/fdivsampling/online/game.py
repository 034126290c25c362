"""Protocol loop, regret accounting and the coupling demonstration."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..complexity import coupling_n
from ..divergence import DiscreteDist, Generator, divergence
from ..errors import InvariantViolation, ValidationError
from ..sampler import exact_output_law, make_plan
from ..seeding import child_rng
from .adversaries import AdversarySpec, build_adversary
from .learners import LearnerSpec, build_learner
from .threshold import CountingOracle, ThresholdClass

__all__ = ["RegretTrace", "run_game", "CouplingReport", "coupling_demo"]


@dataclass
class RegretTrace:
    """Per-round record of one game and its regret against the best threshold."""

    x: np.ndarray
    y: np.ndarray
    prediction: np.ndarray
    loss: np.ndarray
    cumulative_loss: float
    best_loss: float
    best_theta: float
    regret: float
    seed: int
    oracle_calls: int
    final_calls: int
    max_divergence: float
    config: dict = field(default_factory=dict)

    @property
    def T(self) -> int:
        return int(self.loss.size)

    @property
    def calls_per_round(self) -> float:
        return self.oracle_calls / self.T

    def summary(self) -> dict:
        return {
            "seed": self.seed,
            "T": self.T,
            "regret": self.regret,
            "regret_per_round": self.regret / self.T,
            "cumulative_loss": self.cumulative_loss,
            "best_loss": self.best_loss,
            "best_theta": self.best_theta,
            "oracle_calls": self.oracle_calls,
            "calls_per_round": self.calls_per_round,
            "max_divergence": self.max_divergence,
        }


def run_game(
    T: int,
    adversary: AdversarySpec,
    learner: LearnerSpec,
    seed: int,
    cls: ThresholdClass | None = None,
) -> RegretTrace:
    """Play ``T`` rounds and score the learner against the best threshold in hindsight.

    Each round a proper learner commits to a threshold before the adversary
    draws the context; the improper relaxation learner predicts after
    seeing it.  The learner and the adversary use independent child streams
    of ``seed``.
    """
    if T < 1:
        raise ValidationError("T must be >= 1")
    cls = ThresholdClass.continuum() if cls is None else cls
    adv_rng = child_rng(seed, "adversary")
    learn_rng = child_rng(seed, "learner")
    adv = build_adversary(adversary, T, adv_rng)
    g = adversary.generator
    lam = g.param if g.kind == "renyi" else None
    agent = build_learner(learner, cls, adv.mu, T, sigma=adversary.sigma, lam=lam)

    xs, ys, preds = np.empty(T), np.empty(T), np.empty(T)
    for t in range(1, T + 1):
        theta = agent.commit(learn_rng) if agent.proper else None
        _, x, y = adv.step(t, agent, adv_rng)
        if agent.proper:
            yhat = 1.0 if x >= theta else -1.0
        else:
            yhat = agent.predict(x, t, learn_rng)
        xs[t - 1], ys[t - 1], preds[t - 1] = x, y, yhat
        agent.observe(x, y)

    loss = (1.0 - preds * ys) / 2.0
    final = CountingOracle(cls)
    best = final((xs, ys, np.ones(T)))
    cumulative = float(loss.sum())
    config = {
        "T": T,
        "seed": int(seed),
        "adversary": adversary.echo(),
        "learner": {
            "kind": learner.kind,
            "eta": getattr(agent, "eta", None),
            "m": getattr(agent, "m", None),
            "n": getattr(agent, "n", None),
            "c": getattr(agent, "c", None),
            "preset": learner.preset,
        },
        "threshold_class": "continuum" if cls.is_continuum else len(cls.grid),
    }
    return RegretTrace(
        x=xs,
        y=ys,
        prediction=preds,
        loss=loss,
        cumulative_loss=cumulative,
        best_loss=best.value,
        best_theta=best.theta,
        regret=cumulative - best.value,
        seed=int(seed),
        oracle_calls=agent.oracle.calls,
        final_calls=final.calls,
        max_divergence=adv.max_divergence,
        config=config,
    )


@dataclass(frozen=True)
class CouplingReport:
    D: float
    sigma: float
    n_coupling: int | float
    M: float
    n_plan: int
    n_used: int
    tv_exact: float
    eps: float
    ok: bool

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def coupling_demo(
    p: DiscreteDist, mu: DiscreteDist, g: Generator, eps: float, delta: float, T: int
) -> CouplingReport:
    """Couple one round of a smoothed adversary with rejection sampling from ``mu``.

    ``sigma = min(1, 1 / D_f(p || mu))``; the sampler uses the truncation
    level of :func:`make_plan` and ``max(coupling_n, plan.n)`` proposals.
    The exact TV of the output law to ``p`` must not exceed ``eps``.
    """
    D = divergence(g, p, mu)
    if not math.isfinite(D):
        raise ValidationError("divergence must be finite")
    sigma = 1.0 if D <= 1.0 else 1.0 / D
    plan = make_plan(g, D, eps)
    n_c = coupling_n(g, sigma, eps, delta, T)
    n_used = int(max(n_c, plan.n))
    out = exact_output_law(p, mu, plan.M, n_used)
    if out.tv_to_target > eps + 1e-10:
        raise InvariantViolation(f"coupling TV {out.tv_to_target} exceeds eps {eps}")
    return CouplingReport(D, sigma, n_c, plan.M, plan.n, n_used, out.tv_to_target, eps, True)
