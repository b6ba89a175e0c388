"""Smoothing a cone point and watching the distances converge.

Replacing ``beta log|x|`` by its convolution with a radial bump of radius
``eps`` gives a smooth metric that agrees with the cone outside ``D_eps``.
The distances of the smoothed metrics converge uniformly, and small disks
around the apex keep a small diameter in every smoothed metric (no ghost
bubble appears).

    python3 demos/mollification.py        # about half a minute
"""

from curvlab.approx import ghost_probe, mollify_metric, reshetnyak_experiment
from curvlab.metric import cone

g = cone(0.3)

for eps in (1 / 16, 1 / 64):
    m = mollify_metric(g, eps)
    print(f"eps = {eps:.4f}: u at the apex = {float(m.eval_u(0.0, 0.0)):.4f}, "
          f"u at (0.5, 0) unchanged: {float(m.eval_u(0.5, 0.0)):.6f} vs {float(g.eval_u(0.5, 0.0)):.6f}")

rep = reshetnyak_experiment(g, [1 / 16, 1 / 32, 1 / 64], threads=2)
print()
print(rep)

rep = ghost_probe(g, (0, 0), [1 / 32, 1 / 16, 1 / 8], [1 / 16, 1 / 64], threads=2)
print()
print(rep)
