"""Temporal SVD on a synthetic parameter path.

A path that drifts along a couple of directions plus small noise should
need only a handful of singular directions to explain most of its mass.
"""
import numpy as np

from policypath import info_profile, reconstruct, relative_error, temporal_svd

rng = np.random.default_rng(0)

# 120 snapshots of a 500-parameter "policy": two slow drifts + jitter
t = np.linspace(0, 1, 120)[:, None]
drift = np.hstack([t, t ** 2]) @ rng.standard_normal((2, 500))
path = drift + 0.01 * rng.standard_normal((120, 500)) + rng.standard_normal(500)

svd = temporal_svd(path)
print("path matrix", path.shape, "-> d =", svd.d)
print("leading singular values:", np.round(svd.sigma[:5], 3))

prof = info_profile(svd.sigma)
for beta, k in zip(prof.thresholds, prof.major_dims):
    print(f"  D({beta:.2f}) = {k}")

# low-rank rebuilds get close quickly
for keep in (1, 2, 3, 8, svd.d):
    err = relative_error(reconstruct(svd, keep), path)
    print(f"rank {keep:3d} reconstruction error {err:.2e}")

# the first left-singular column is (nearly) the mean direction: smooth in time
u1 = svd.u[:, 0]
print("u1 start/middle/end:", np.round(u1[[0, 60, 119]], 4))
