"""How much does each actor parameter move, and how directly?

Trains a short TD3-lite run on the point mass, then looks at accumulated
change (total distance travelled), final change (net displacement) and
their ratio, the detour ratio, per layer.
"""
import numpy as np

from policypath.config import RunConfig
from policypath.harness.training import train
from policypath.path_metrics import change_report, clip_extremes, filter_top_fraction, histogram, slice_layer

config = RunConfig(seed=4, max_steps=8000, eval_interval=2000, archive_interval=50)
result = train(config)
print("eval returns:", [round(r, 1) for _, r in result.report.checkpoints])
path = result.path
print("archived path:", path.n, "snapshots x", path.m, "parameters")

for seg in path.layers:
    rep = change_report(slice_layer(path, seg.name))
    top = filter_top_fraction(np.arange(rep.apc.size), rep.apc, 0.8)
    pud = clip_extremes(rep.pud[top].compressed(), 0.99)
    print(f"\n{seg.name}: {seg.length} params")
    print("  accumulated change  median %.4f  max %.4f" % (np.median(rep.apc), rep.apc.max()))
    print("  final change        median %.4f  max %.4f" % (np.median(rep.fpc), rep.fpc.max()))
    print("  detour ratio (top 80%% movers) median %.2f" % np.median(pud))

    # a coarse text histogram of the detour ratios
    h = histogram(pud, 8)
    for lo, hi, c in zip(h.edges[:-1], h.edges[1:], h.counts):
        print(f"    [{lo:6.2f}, {hi:6.2f})  {'#' * int(60 * c / h.counts.max())}")
