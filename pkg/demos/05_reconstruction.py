"""Do low-rank rebuilds of stored policies still behave the same?

For each snapshot in the later third of a trained path, rebuild it from the
top r_t temporal directions and compare evaluation returns on shared start
states.
"""
from policypath.config import RunConfig
from policypath.harness.training import reconstruction_check, train
from policypath.linalg import temporal_svd
from policypath.path_metrics import split_periods

config = RunConfig(seed=2, max_steps=9000, eval_interval=3000, archive_interval=50)
path = train(config).path
later = split_periods(path, 3)[-1]
d = temporal_svd(later.params).d

print("r_t   avg dR        avg |dR|      max      min")
for row in reconstruction_check(later, [1, 2, 4, 8, 16, d], episodes=10, config=config):
    print(f"{row.r_t:3d}  {row.avg:8.2f} +- {row.avg_std:6.2f}  {row.avg_abs:8.2f}  {row.max:8.2f} {row.min:8.2f}")
