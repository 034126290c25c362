"""How the proposal budget of the truncated rejection sampler scales with the divergence.

For one target/proposal pair, plan the sampler under KL and Renyi-2 budgets.  KL
budgets grow exponentially in D/eps, so the Monte Carlo check uses Renyi-2 and
compares the exact output law with a Monte Carlo histogram.
"""

import numpy as np

from fdivsampling import DiscreteDist, Generator, divergence
from fdivsampling.divergence import likelihood_ratio
from fdivsampling.sampler import exact_output_law, make_plan, rejection_select

labels = list(range(12))
mu = DiscreteDist(labels, np.full(12, 1 / 12))
nu_masses = np.exp(-0.5 * np.arange(12))
nu = DiscreteDist(labels, nu_masses / nu_masses.sum())

print("gen       D        eps    M           n           exact_tv")
for spec in ("kl", "renyi:2"):
    g = Generator.parse(spec)
    D = divergence(g, nu, mu)
    for eps in (0.2, 0.1, 0.05):
        plan = make_plan(g, D, eps)
        out = exact_output_law(nu, mu, plan.M, plan.n)
        print(f"{spec:8s} {D:7.4f}  {eps:5.2f}  {plan.M:10.4g}  {plan.n:10.4g}  {out.tv_to_target:.4f}")

g = Generator.renyi(2.0)
plan = make_plan(g, divergence(g, nu, mu), 0.1)
ratio = likelihood_ratio(nu, mu)
rng = np.random.default_rng(7)
hits = np.zeros(12)
for _ in range(20000):
    hits[rejection_select(mu, ratio, plan, rng).label] += 1
exact = exact_output_law(nu, mu, plan.M, plan.n).law
print("\nlabel  target   exact    empirical")
for k in labels:
    print(f"{k:5d}  {nu.masses[k]:.4f}  {exact.masses[exact.index_of(k)]:.4f}  {hits[k] / 20000:.4f}")
