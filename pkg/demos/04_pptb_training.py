"""Training with and without the PPTB hook.

Every t_s steps the current actor is stored in a FIFO of recent policies.
Every t_p steps the FIFO is factorized, the newest policy is rebuilt from
its top r_t directions, and the leading r_b coordinates are pushed a bit
further along their start-to-now trend.
"""
from policypath.config import RunConfig
from policypath.harness.training import aggregate, train
from policypath.pptb import PptbConfig

base = RunConfig(max_steps=12000, eval_interval=1000)
boosted = base.replace(pptb_enabled=True, pptb=PptbConfig(r_t=16, r_b=2, p_b=0.1, t_s=25, t_p=1000, capacity_k=200))

rows = []
for seed in (2, 4):
    a = train(base.replace(seed=seed))
    b = train(boosted.replace(seed=seed))
    print(f"seed {seed}: baseline auc {a.report.auc:9.1f}  pptb auc {b.report.auc:9.1f}  "
          f"({len(b.transforms)} transforms)")
    rows.append((a.report.auc, b.report.auc))

print("baseline mean/std", aggregate([r[0] for r in rows]))
print("pptb     mean/std", aggregate([r[1] for r in rows]))
