"""Gauss-Bonnet diagnostics for measure-valued curvature.

Along circles the mean radial derivative ``lambda(r) = r du*/dr`` jumps by
``-mu(annulus) / 2pi`` across an annulus; its limit at a point recovers the
point mass there.
"""

from __future__ import annotations

import weakref
from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from .errors import AtomOnCircle
from .measure import Annulus, Atom, DensityField, LineMass, Point, SignedMeasure, integrate_test, measure_of
from .metric import circle_mean, curvature_of

FLUX_DELTA = 0.02

_CURVATURE_CACHE = weakref.WeakKeyDictionary()


def cached_curvature(g):
    if g not in _CURVATURE_CACHE:
        _CURVATURE_CACHE[g] = curvature_of(g)
    return _CURVATURE_CACHE[g]


def radial_flux(g, center, r, delta=FLUX_DELTA):
    """``r du*/dr`` by a centred difference in ``log r``.

    Raises ``AtomOnCircle`` when a singular point sits inside the difference
    band ``[r e^-delta, r e^delta]``, where ``lambda`` jumps.
    """
    bg = g.background
    for z in g.singular_points():
        dx, dy = bg.offset(center[0], center[1], z)
        d = float(np.hypot(dx, dy))
        if d > 0 and r * np.exp(-delta) <= d <= r * np.exp(delta):
            raise AtomOnCircle(f"singular point {tuple(z)} inside the band around r = {r:g}")
    lo = circle_mean(g, center, r * np.exp(-delta))
    hi = circle_mean(g, center, r * np.exp(delta))
    return (hi - lo) / (2.0 * delta)


@dataclass(frozen=True)
class GBCheck:
    lhs: float
    rhs: float
    residual: float
    passed: bool


def _recentred(mu, bg, center):
    """On the torus, move ``mu`` to the unit cell centred at ``center`` so that
    planar regions around ``center`` see every nearest image."""
    if not bg.periodic:
        return mu
    cx, cy = center
    atoms = []
    for a in mu.atoms:
        dx, dy = bg.offset(a.location.x, a.location.y, center)
        atoms.append(Atom(Point(cx + float(dx), cy + float(dy)), a.mass))
    lines = []
    for l in mu.lines:
        (px, py), (qx, qy) = l.segment
        dx, dy = bg.offset(0.5 * (px + qx), 0.5 * (py + qy), center)
        sx, sy = cx + float(dx) - 0.5 * (px + qx), cy + float(dy) - 0.5 * (py + qy)
        lines.append(LineMass(((px + sx, py + sy), (qx + sx, qy + sy)), l.linear_density))
    dens = mu.density
    if dens is not None:
        h = dens.spacing
        kx = int(np.round((cx - 0.5 - dens.origin.x) / h))
        ky = int(np.round((cy - 0.5 - dens.origin.y) / h))
        vals = np.roll(dens.values, (-ky, -kx), axis=(0, 1))
        dens = DensityField(vals, h, Point(dens.origin.x + kx * h, dens.origin.y + ky * h))
    return SignedMeasure(tuple(atoms), dens, tuple(lines))


def gb_annulus_check(g, center, s, t, rel_tol=0.01):
    """Compare ``lambda(t) - lambda(s)`` with ``-mu(D_t minus D_s) / 2pi``."""
    if not s < t:
        raise ValueError("need s < t")
    ls = radial_flux(g, center, s)
    lt = radial_flux(g, center, t)
    mass = measure_of(_recentred(cached_curvature(g), g.background, center), Annulus(Point(*center), s, t))
    lhs = lt - ls
    rhs = -mass / (2.0 * np.pi)
    res = abs(lhs - rhs)
    return GBCheck(lhs, rhs, res, res <= rel_tol * (abs(lt) + abs(ls) + 1.0))


def point_mass_detect(g, center, h=1.0 / 256):
    """``-2 pi lim r du*/dr`` extrapolated from ``r = 8h`` and ``16h``.

    The extrapolation assumes ``lambda(r) = lambda_0 + c / log r``, which is
    exact for cones and for the log-log cusp correction.
    """
    r1, r2 = 8.0 * h, 16.0 * h
    l1 = radial_flux(g, center, r1)
    l2 = radial_flux(g, center, r2)
    w1, w2 = np.log(r1), np.log(r2)
    lam0 = (l1 * w1 - l2 * w2) / (w1 - w2)
    return -2.0 * np.pi * lam0


class Bump:
    """Test function ``(1 - |x - c|^2 / rho^2)^4`` on ``D_rho(c)``."""

    def __init__(self, center, radius, power=4):
        self.center = Point(*map(float, center))
        self.radius = float(radius)
        self.power = power

    def __call__(self, x, y):
        s = 1.0 - ((np.asarray(x) - self.center.x) ** 2 + (np.asarray(y) - self.center.y) ** 2) / self.radius**2
        return np.where(s > 0, np.maximum(s, 0.0) ** self.power, 0.0)

    def grad(self, x, y):
        dx = np.asarray(x) - self.center.x
        dy = np.asarray(y) - self.center.y
        s = 1.0 - (dx * dx + dy * dy) / self.radius**2
        c = np.where(s > 0, -2.0 * self.power * np.maximum(s, 0.0) ** (self.power - 1) / self.radius**2, 0.0)
        return c * dx, c * dy

    @property
    def max_abs(self):
        return 1.0


@dataclass(frozen=True)
class WeakCheck:
    lhs: float
    rhs: float
    residual: float


def weak_laplacian_check(g, phi, n=600):
    """``|int grad phi . grad u dx - int phi dK_g|`` for a bump ``phi``.

    Hard atoms enter in closed form, ``int grad phi . grad(beta log r) =
    -2 pi beta phi(z)``; the rest of ``u`` is integrated by the midpoint rule
    on an ``n x n`` lattice over the support of ``phi``.
    """
    c, rho = phi.center, phi.radius
    bg = g.background
    hq = 2.0 * rho / n
    shift = 0.0
    sing = g.singular_points()
    for _ in range(4):
        offs = -rho + hq * (np.arange(n) + 0.5 + shift)
        near = [np.min(np.abs(c.x + offs - z[0])) < 1e-6 * hq and np.min(np.abs(c.y + offs - z[1])) < 1e-6 * hq
                for z in sing]
        if not any(near):
            break
        # keep the logarithmic singularities of analytic terms off the nodes
        shift += 1.0 / 3.0
    X, Y = np.meshgrid(c.x + offs, c.y + offs)
    inside = (X - c.x) ** 2 + (Y - c.y) ** 2 < rho * rho
    X, Y = X[inside], Y[inside]
    px, py = phi.grad(X, Y)
    ux, uy = g.replace(atoms=()).grad_u(X, Y)
    lhs = float(np.sum(px * ux + py * uy)) * hq * hq
    for a in g.atoms:
        dx, dy = bg.offset(c.x, c.y, a.location)
        z = (c.x - dx, c.y - dy)
        lhs += -2.0 * np.pi * a.beta * float(phi(*z))
        if g.periodic:
            # on the torus the hard atom is beta log r minus its core mollification
            dx, dy = bg.offset(X, Y, a.location)
            core = K.bump(np.hypot(dx, dy), g.core)
            lhs += 2.0 * np.pi * a.beta * float(np.sum(phi(X, Y) * core)) * hq * hq
    rhs = integrate_test(cached_curvature(g), phi)
    return WeakCheck(lhs, rhs, abs(lhs - rhs))
