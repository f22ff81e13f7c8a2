"""Few major directions, many minor ones.

Splits a trained path into early / middle / later periods and reports the
major dimensionality D(beta) of each, then prints the detour ratio of the
leading left-singular coordinates u_{*,j}.
"""
import numpy as np

from policypath.config import RunConfig
from policypath.harness.training import train
from policypath.svd_analysis import coordinate_curves, path_svd, period_profiles

result = train(RunConfig(seed=5, max_steps=9000, eval_interval=3000, archive_interval=30))
path = result.path
print("path:", path.n, "x", path.m)

# the actor is frozen during warmup, so the early period is nearly rank one
print("        " + " ".join(f"{b:>5.2f}" for b in period_profiles(path, 1)[0].thresholds))
for label, prof in zip(("early", "middle", "later"), period_profiles(path, 3)):
    print(f"{label:>6}: " + " ".join(f"{k:5d}" for k in prof.major_dims))

svd = path_svd(path)
curves = coordinate_curves(svd)
print("\ndirection  sigma      detour  final change")
for j in range(6):
    det = curves.per_direction_detour[j]
    det = "  n/a" if np.ma.is_masked(det) else f"{det:7.2f}"
    print(f"{j + 1:9d}  {svd.sigma[j]:9.3f} {det}  {curves.per_direction_final_change[j]:.3f}")
# the first direction is the most direct; later ones oscillate more
