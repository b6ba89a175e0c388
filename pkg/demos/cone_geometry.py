"""A walk around a single cone point.

The metric ``|x|^(2 beta) |dx|^2`` is the flat cone of total angle
``2 pi (1 + beta)``. Everything about it has a closed form, which makes it
the natural place to see what each part of curvlab measures.

    python3 demos/cone_geometry.py
"""

import numpy as np

from curvlab.curvature import gb_annulus_check, point_mass_detect
from curvlab.geodesic import ball_area, circle_length, distance_field
from curvlab.metric import cone, curvature_of

beta = 0.3
g = cone(beta)

# Curvature: a single atom of mass -2 pi beta at the apex.
mu = curvature_of(g)
print(f"curvature atom at {tuple(mu.atoms[0].location)} with mass {mu.atoms[0].mass:.5f}"
      f" (-2 pi beta = {-2 * np.pi * beta:.5f})")

# Gauss-Bonnet in measure form: r du*/dr is beta on every circle, so the
# annulus check is trivially balanced and the limit recovers the atom.
print("point mass from the radial flux:", round(point_mass_detect(g, (0, 0)), 6))
chk = gb_annulus_check(g, (0, 0), 0.1, 0.6)
print(f"annulus 0.1 < r < 0.6: lhs {chk.lhs:.2e}, rhs {chk.rhs:.2e}")

# Distances from the apex follow the radial integral |x|^(1+beta) / (1+beta).
field = distance_field(g, (0, 0))
for r in (0.125, 0.25, 0.5):
    print(f"d(apex, ({r}, 0)) = {field.at(r, 0.0):.5f}   closed form {r ** (1 + beta) / (1 + beta):.5f}")

# Circles shrink like r^(1+beta); metric balls have area (1 + beta) pi R^2.
for r in (0.5, 0.05, 0.005):
    print(f"length of |x| = {r}: {circle_length(g, (0, 0), r):.6f}   2 pi r^1.3 = {2 * np.pi * r ** 1.3:.6f}")
for R in (0.2, 0.3):
    print(f"area(B_R) / (pi R^2) at R = {R}: {ball_area(g, (0, 0), R) / (np.pi * R * R):.4f}   (exact 1.3)")
