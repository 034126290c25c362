"""Regret of three learners against a Renyi-smooth adversary on thresholds."""

import numpy as np

from fdivsampling import Generator
from fdivsampling.online.adversaries import AdversarySpec
from fdivsampling.online.game import run_game
from fdivsampling.online.learners import LearnerSpec

adv = AdversarySpec(kind="adaptive_greedy", sigma=0.5, generator=Generator.renyi(2.0), grid_size=64)
learners = {
    "ftl": LearnerSpec("ftl"),
    "ftpl preset": LearnerSpec("ftpl", preset=True),
    "relaxation": LearnerSpec("relaxation"),
}
print("learner        T     regret/T  calls/round")
for name, spec in learners.items():
    for T in (250, 1000):
        traces = [run_game(T, adv, spec, seed) for seed in range(5)]
        r = np.mean([t.regret / T for t in traces])
        c = np.mean([t.calls_per_round for t in traces])
        print(f"{name:12s} {T:5d}  {r:8.4f}  {c:6.2f}")
