"""Where a cone point stops being a point.

Cone points of mass below 2 pi sit at finite distance; at mass 2 pi and above
the apex is pushed off to infinity, unless a log-log correction (the
Hulin-Troyanov cusp) pulls it back. On the logarithmic cylinder
``x = exp(-t + i theta)`` these cases become decaying, flat and growing ends.

    python3 demos/cusps_and_completeness.py
"""

import numpy as np

from curvlab import catalog
from curvlab.approx import cone_split
from curvlab.curvature import point_mass_detect
from curvlab.cylinder import completeness_probe, three_circle_report
from curvlab.metric import ConformalMetric

print("distance from |x| = 0.5 down to |x| = r -> 0:")
for m in (1.0, 1.5, 1.9, 2.1, 3.0):
    g = ConformalMetric.probe(atoms=(((0.0, 0.0), -m / 2),))
    s = completeness_probe(g, (0, 0), 0.5).summary
    print(f"  cone of mass {m:.1f} pi: {s['classification']:<11} limit {s['limit']:.4f}")
for a in (1.5, 0.5):
    s = completeness_probe(catalog.build("hulin-troyanov", a=a), (0, 0), 0.5).summary
    print(f"  Hulin-Troyanov a = {a}: {s['classification']:<11} limit {s['limit']:.4f}"
          + ("  (2 / sqrt(log 2) = 2.4022)" if a == 1.5 else ""))

# Below 2 pi the three-circle inequalities hold ring by ring.
rep = three_circle_report(catalog.build("cone", beta=-0.5), (0, 0), L=4.0, n_rings=4, kappa=0.2)
print()
print(rep)
print("ring exponent", rep.summary["ring_exponent"])

# At exactly 2 pi, splitting off 1/k of a log lowers the mass to 2 pi (1 - 1/k).
g = catalog.build("cone-probe", beta=-1.0)
for k in (2, 10):
    print(f"\ncone_split k = {k}: point mass {point_mass_detect(cone_split(g, 0, 0.25, k), (0, 0)):.5f}"
          f" (2 pi (1 - 1/k) = {2 * np.pi * (1 - 1 / k):.5f})")
