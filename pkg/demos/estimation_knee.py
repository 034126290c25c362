"""Importance vs rejection mean estimation, and the importance error knee near exp(KL)."""

import numpy as np

from fdivsampling import DiscreteDist, Generator, divergence
from fdivsampling.estimate import compare_experiment, kl_threshold_experiment

labels = [i / 20 for i in range(21)]
mu = DiscreteDist(labels, np.full(21, 1 / 21))
w = np.exp(-0.3 * np.arange(21))
nu = DiscreteDist(labels, w / w.sum())

print(f"KL = {divergence(Generator.kl(), nu, mu):.4f}")
print("estimator   n      m     uniform_error  bound")
for row in compare_experiment(mu, nu, [100, 1000], replicates=20, rng=3):
    m = "" if row["m"] is None else row["m"]
    print(f"{row['estimator']:10s} {row['n']:5d}  {m!s:5s} {row['mean_err']:.4f}         {row['bound_value']:.4f}")

print("\nimportance error of the constant 1 around n = exp(KL)")
for row in kl_threshold_experiment(mu, nu, replicates=200, rng=3):
    if row["estimator"] == "kl_marker":
        print(f"exp(KL) = {row['n']:.3f}")
    else:
        print(f"n={row['n']:3d}  mean_err={row['mean_err']:.4f} +- {row['std_err']:.4f}")
