"""Conformal metrics ``g = exp(2u) g0`` on a plane rectangle or the flat torus.

The conformal factor is a sum of

* hard atoms ``beta * log|x - z|`` (cone points, curvature ``-2 pi beta``),
* soft atoms, the same logs mollified by the radial bump of radius ``eps``,
* analytic terms (``|x^1|``, the log-log cusp correction, cut-off logs),
* a bilinearly interpolated grid ``smooth_part``.

On the torus the grid part is a spectral field that already contains the
far field of every atom mollified at radius ``core``; atoms then only add a
compactly supported correction inside that radius, so the nearest-image
convention never produces a kink.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from typing import NamedTuple, Optional

import numpy as np

from . import _kernels as K
from .errors import AnnulusOutOfDomain, AtomOnCircle, EvalAtAtom
from .measure import Atom, DensityField, LineMass, Point, SignedMeasure, add_measures

ATOM_TOL = 1e-12


@dataclass(frozen=True)
class Background:
    kind: str = "plane"
    extent: tuple = (-1.0, -1.0, 1.0, 1.0)

    def __post_init__(self):
        if self.kind not in ("plane", "torus"):
            raise ValueError(f"unknown background kind {self.kind!r}")
        ext = (0.0, 0.0, 1.0, 1.0) if self.kind == "torus" else tuple(float(e) for e in self.extent)
        if ext[2] <= ext[0] or ext[3] <= ext[1]:
            raise ValueError("background extent must be positive")
        object.__setattr__(self, "extent", ext)

    @property
    def periodic(self):
        return self.kind == "torus"

    @classmethod
    def torus(cls):
        return cls("torus")

    def contains(self, x, y, tol=1e-12):
        if self.periodic:
            return np.ones(np.broadcast(np.asarray(x), np.asarray(y)).shape, dtype=bool)
        x0, y0, x1, y1 = self.extent
        x = np.asarray(x)
        y = np.asarray(y)
        return (x >= x0 - tol) & (x <= x1 + tol) & (y >= y0 - tol) & (y <= y1 + tol)

    def offset(self, x, y, z):
        """Displacement ``x - z`` (nearest image on the torus)."""
        dx = np.asarray(x, dtype=float) - z[0]
        dy = np.asarray(y, dtype=float) - z[1]
        if self.periodic:
            dx = dx - np.round(dx)
            dy = dy - np.round(dy)
        return dx, dy

    def wrap(self, x, y):
        if self.periodic:
            return np.mod(x, 1.0), np.mod(y, 1.0)
        return x, y


class ConeAtom(NamedTuple):
    location: Point
    beta: float


class SoftAtom(NamedTuple):
    location: Point
    beta: float
    eps: float


# --------------------------------------------------------------------------
# analytic terms


class AbsLine:
    """``coef * |x^1 - x0|``; curvature is the line mass ``-2 coef`` on ``x^1 = x0``.

    The sign follows from ``int grad u . grad phi = -2 coef int phi dH^1``.
    """

    kind = "abs-line"

    def __init__(self, coef=1.0, x0=0.0):
        self.coef = float(coef)
        self.x0 = float(x0)

    def value(self, bg, x, y):
        return self.coef * np.abs(np.asarray(x, dtype=float) - self.x0)

    def grad(self, bg, x, y):
        x = np.asarray(x, dtype=float)
        return self.coef * np.sign(x - self.x0), np.zeros_like(x + np.asarray(y, dtype=float))

    def curvature(self, bg):
        x0, y0, x1, y1 = bg.extent
        return SignedMeasure(lines=(LineMass(((self.x0, y0), (self.x0, y1)), -2.0 * self.coef),))

    def density(self, bg, x, y):
        return np.zeros(np.broadcast(np.asarray(x), np.asarray(y)).shape)

    def singular_points(self):
        return ()

    def to_dict(self):
        return {"kind": self.kind, "coef": self.coef, "x0": self.x0}


class LogLog:
    """``-a log(-log|x - z|)`` for ``|x - z| < 1``: the non-atomic part of the
    Hulin-Troyanov cusp ``|dz|^2 / (|z|^2 |log|z||^(2a))``."""

    kind = "loglog"

    def __init__(self, a, center=(0.0, 0.0)):
        self.a = float(a)
        self.center = Point(*map(float, center))

    def value(self, bg, x, y):
        dx, dy = bg.offset(x, y, self.center)
        r = np.hypot(dx, dy)
        with np.errstate(divide="ignore", invalid="ignore"):
            w = -np.log(r)
            return np.where(r > 0, -self.a * np.log(w), np.inf)

    def grad(self, bg, x, y):
        dx, dy = bg.offset(x, y, self.center)
        r2 = dx * dx + dy * dy
        with np.errstate(divide="ignore", invalid="ignore"):
            w = -0.5 * np.log(r2)
            c = self.a / (r2 * w)
        return c * dx, c * dy

    def density(self, bg, x, y):
        dx, dy = bg.offset(x, y, self.center)
        r2 = dx * dx + dy * dy
        with np.errstate(divide="ignore", invalid="ignore"):
            w = -0.5 * np.log(r2)
            return -self.a / (r2 * w * w)

    def singular_cell_mass(self, h):
        rho = h / np.sqrt(np.pi)
        return -2.0 * np.pi * self.a / abs(np.log(rho))

    def curvature(self, bg):
        return SignedMeasure()

    def singular_points(self):
        return (self.center,)

    def to_dict(self):
        return {"kind": self.kind, "a": self.a, "x": self.center.x, "y": self.center.y}


class CutoffLog:
    """``(1 - eta_delta(|x - z|)) * coef * log|x - z|``.

    ``eta_delta`` vanishes on ``D_delta`` and equals one outside ``D_2delta``
    with ``|grad eta_delta| <= 15 / (8 delta)``.
    """

    kind = "cutoff-log"

    def __init__(self, center, coef, delta):
        self.center = Point(*map(float, center))
        self.coef = float(coef)
        self.delta = float(delta)

    def _profile(self, r):
        p = r / self.delta - 1.0
        return 1.0 - K.smoothstep(p), -K.smoothstep_d(p) / self.delta, -K.smoothstep_dd(p) / self.delta**2

    def value(self, bg, x, y):
        dx, dy = bg.offset(x, y, self.center)
        r = np.hypot(dx, dy)
        chi, _, _ = self._profile(r)
        out = np.zeros_like(r)
        m = chi > 0
        with np.errstate(divide="ignore"):
            out[m] = chi[m] * self.coef * np.log(r[m])
        return out

    def grad(self, bg, x, y):
        dx, dy = bg.offset(x, y, self.center)
        r = np.hypot(dx, dy)
        chi, dchi, _ = self._profile(r)
        with np.errstate(divide="ignore", invalid="ignore"):
            logr = np.where(r > 0, np.log(np.where(r > 0, r, 1.0)), 0.0)
            fr = self.coef * (dchi * logr + chi / r)
            gx = np.where(r > 0, fr * dx / r, 0.0)
            gy = np.where(r > 0, fr * dy / r, 0.0)
        return gx, gy

    def density(self, bg, x, y):
        dx, dy = bg.offset(x, y, self.center)
        r = np.hypot(dx, dy)
        chi, dchi, ddchi = self._profile(r)
        # chi = 1 - eta, so eta' = -dchi and eta'' = -ddchi
        with np.errstate(divide="ignore", invalid="ignore"):
            logr = np.log(np.where(r > 0, r, 1.0))
            dens = self.coef * (-ddchi * logr - dchi * (2.0 + logr) / r)
        return np.where(r > 0, dens, 0.0)

    def curvature(self, bg):
        return SignedMeasure((Atom(self.center, -2.0 * np.pi * self.coef),))

    def singular_points(self):
        return (self.center,)

    def to_dict(self):
        return {"kind": self.kind, "x": self.center.x, "y": self.center.y, "coef": self.coef, "delta": self.delta}


TERM_TYPES = {
    "abs-line": lambda d: AbsLine(d.get("coef", 1.0), d.get("x0", 0.0)),
    "loglog": lambda d: LogLog(d["a"], (d.get("x", 0.0), d.get("y", 0.0))),
    "cutoff-log": lambda d: CutoffLog((d["x"], d["y"]), d["coef"], d["delta"]),
}


# --------------------------------------------------------------------------
# the metric


def bilinear(field, x, y, periodic=False):
    """Bilinear interpolation of a sample grid (and its gradient)."""
    h = field.spacing
    ny, nx = field.values.shape
    fx = (np.asarray(x, dtype=float) - field.origin[0]) / h
    fy = (np.asarray(y, dtype=float) - field.origin[1]) / h
    if periodic:
        fx = np.mod(fx, nx)
        fy = np.mod(fy, ny)
        i0 = np.floor(fx).astype(int)
        j0 = np.floor(fy).astype(int)
        tx, ty = fx - i0, fy - j0
        i0 %= nx
        j0 %= ny
        i1 = (i0 + 1) % nx
        j1 = (j0 + 1) % ny
    else:
        i0 = np.clip(np.floor(fx).astype(int), 0, nx - 2)
        j0 = np.clip(np.floor(fy).astype(int), 0, ny - 2)
        tx, ty = fx - i0, fy - j0
        i1, j1 = i0 + 1, j0 + 1
    v = field.values
    v00, v10, v01, v11 = v[j0, i0], v[j0, i1], v[j1, i0], v[j1, i1]
    val = (1 - tx) * (1 - ty) * v00 + tx * (1 - ty) * v10 + (1 - tx) * ty * v01 + tx * ty * v11
    gx = ((1 - ty) * (v10 - v00) + ty * (v11 - v01)) / h
    gy = ((1 - tx) * (v01 - v00) + tx * (v11 - v10)) / h
    return val, gx, gy


@dataclass(frozen=True, eq=False)
class ConformalMetric:
    background: Background = field(default_factory=Background)
    atoms: tuple = ()
    soft_atoms: tuple = ()
    smooth_part: Optional[DensityField] = None
    terms: tuple = ()
    core: float = 0.0
    probe_only: bool = False
    name: str = ""

    def __post_init__(self):
        atoms = tuple(ConeAtom(Point(*map(float, a[0])), float(a[1])) for a in self.atoms)
        soft = tuple(SoftAtom(Point(*map(float, a[0])), float(a[1]), float(a[2])) for a in self.soft_atoms)
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "soft_atoms", soft)
        object.__setattr__(self, "terms", tuple(self.terms))
        locs = [a.location for a in atoms]
        if len(set(locs)) != len(locs):
            raise ValueError("atom locations must be distinct")
        if not self.probe_only:
            for a in atoms:
                beta = a.beta + sum(t.coef for t in self.terms
                                    if t.kind == "cutoff-log" and t.center == a.location)
                if not beta > -1.0:
                    raise ValueError(
                        f"cone exponent {beta} <= -1 (curvature mass >= 2 pi); use ConformalMetric.probe"
                    )
        if self.background.periodic and self.core <= 0 and (atoms or soft):
            raise ValueError("torus metrics with atoms need the spectral core radius")
        if self.smooth_part is not None and not np.all(np.isfinite(self.smooth_part.values)):
            raise ValueError("smooth part must be finite")

    @classmethod
    def probe(cls, **kw):
        """Constructor that skips the ``beta > -1`` check (probe-only metrics)."""
        return cls(probe_only=True, **kw)

    @property
    def periodic(self):
        return self.background.periodic

    def replace(self, **kw):
        return replace(self, **kw)

    # -- pointwise evaluation ---------------------------------------------

    def _atom_value(self, beta, own_eps, r):
        if self.periodic:
            reach = max(own_eps, self.core)
            out = np.zeros_like(r)
            m = r < reach
            with np.errstate(divide="ignore"):
                out[m] = beta * (K.mollified_log(r[m], own_eps) - K.mollified_log(r[m], self.core))
            return out
        with np.errstate(divide="ignore"):
            return beta * K.mollified_log(r, own_eps)

    def _atom_dr(self, beta, own_eps, r):
        if self.periodic:
            return beta * (K.mollified_log_dr(r, own_eps) - K.mollified_log_dr(r, self.core))
        return beta * K.mollified_log_dr(r, own_eps)

    def u_raw(self, x, y, skip_atom=None):
        """Conformal factor without the at-atom check (may be +-inf there).

        ``skip_atom`` drops the pure ``beta log r`` singularity of that hard
        atom, leaving the factor that is smooth near it.
        """
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        bg = self.background
        out = np.zeros(np.broadcast(x, y).shape)
        for i, a in enumerate(self.atoms):
            dx, dy = bg.offset(x, y, a.location)
            r = np.hypot(dx, dy)
            if i == skip_atom:
                if self.periodic:
                    with np.errstate(divide="ignore"):
                        out = out - a.beta * np.where(r < self.core, K.mollified_log(r, self.core), np.log(r))
                continue
            out = out + self._atom_value(a.beta, 0.0, r)
        for a in self.soft_atoms:
            dx, dy = bg.offset(x, y, a.location)
            out = out + self._atom_value(a.beta, a.eps, np.hypot(dx, dy))
        for t in self.terms:
            out = out + t.value(bg, x, y)
        if self.smooth_part is not None:
            out = out + bilinear(self.smooth_part, x, y, self.periodic)[0]
        return out

    def check_not_atom(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        for a in self.atoms:
            dx, dy = self.background.offset(x, y, a.location)
            if np.any(np.hypot(dx, dy) <= ATOM_TOL):
                raise EvalAtAtom(f"evaluation at the atom {tuple(a.location)}")

    def eval_u(self, x, y=None):
        """Conformal factor ``u``; accepts a point or coordinate arrays."""
        if y is None:
            x, y = x
        self.check_not_atom(x, y)
        out = self.u_raw(x, y)
        return float(out) if np.ndim(out) == 0 else out

    def grad_u(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        bg = self.background
        gx = np.zeros(np.broadcast(x, y).shape)
        gy = np.zeros_like(gx)
        allatoms = [(a.location, a.beta, 0.0) for a in self.atoms] + list(self.soft_atoms)
        for loc, beta, eps in allatoms:
            dx, dy = bg.offset(x, y, loc)
            r = np.hypot(dx, dy)
            with np.errstate(divide="ignore", invalid="ignore"):
                f = np.where(r > 0, self._atom_dr(beta, eps, r) / r, 0.0)
            gx = gx + f * dx
            gy = gy + f * dy
        for t in self.terms:
            tx, ty = t.grad(bg, x, y)
            gx = gx + tx
            gy = gy + ty
        if self.smooth_part is not None:
            _, sx, sy = bilinear(self.smooth_part, x, y, self.periodic)
            gx = gx + sx
            gy = gy + sy
        return gx, gy

    def conformal_factor(self, x, y):
        """Length density ``exp(u)``."""
        return np.exp(self.u_raw(x, y))

    def singular_points(self):
        pts = [a.location for a in self.atoms]
        for t in self.terms:
            pts.extend(t.singular_points())
        return list(dict.fromkeys(pts))

    # -- serialization -----------------------------------------------------

    def to_dict(self):
        sp = None
        if self.smooth_part is not None:
            f = self.smooth_part
            ny, nx = f.shape
            sp = {"spacing": f.spacing, "origin": list(f.origin), "nx": nx, "ny": ny,
                  "values": f.values.ravel().tolist()}
        return {
            "name": self.name,
            "background": {"kind": self.background.kind, "extent": list(self.background.extent)},
            "atoms": [{"x": a.location.x, "y": a.location.y, "beta": a.beta} for a in self.atoms],
            "soft_atoms": [{"x": a.location.x, "y": a.location.y, "beta": a.beta, "eps": a.eps}
                           for a in self.soft_atoms],
            "terms": [t.to_dict() for t in self.terms],
            "smooth_part": sp,
            "core": self.core,
            "probe_only": self.probe_only,
        }

    @classmethod
    def from_dict(cls, d):
        if "builtin" in d:
            from .catalog import build
            return build(d["builtin"], **d.get("params", {}))
        bg = Background(d["background"]["kind"], tuple(d["background"].get("extent", (-1, -1, 1, 1))))
        sp = None
        if d.get("smooth_part"):
            s = d["smooth_part"]
            sp = DensityField(np.asarray(s["values"], float).reshape(s["ny"], s["nx"]), s["spacing"],
                              Point(*s["origin"]))
        return cls(
            background=bg,
            atoms=tuple(((a["x"], a["y"]), a["beta"]) for a in d.get("atoms", [])),
            soft_atoms=tuple(((a["x"], a["y"]), a["beta"], a["eps"]) for a in d.get("soft_atoms", [])),
            smooth_part=sp,
            terms=tuple(TERM_TYPES[t["kind"]](t) for t in d.get("terms", [])),
            core=d.get("core", 0.0),
            probe_only=d.get("probe_only", False),
            name=d.get("name", ""),
        )

    def to_json(self, **kw):
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


def flat(background=None, c=0.0):
    """Flat metric, or the constant scaling ``exp(2c) g0``."""
    bg = background or Background()
    sp = None
    if c != 0.0:
        x0, y0, x1, y1 = bg.extent
        sp = DensityField(np.full((2, 2), float(c)), max(x1 - x0, y1 - y0), Point(x0, y0))
    return ConformalMetric(background=bg, smooth_part=sp, name="flat")


def cone(beta, center=(0.0, 0.0), background=None):
    return ConformalMetric(background=background or Background(), atoms=((center, beta),), name="cone")


def eval_u(g, x):
    return g.eval_u(x)


# --------------------------------------------------------------------------
# circle and disk statistics


def _periodic_mean(f, tol=1e-8, n0=64, nmax=2**16):
    n = n0
    prev = None
    while True:
        th = 2.0 * np.pi * np.arange(n) / n
        val = float(np.mean(f(th)))
        if prev is not None and abs(val - prev) <= tol * max(1.0, abs(val)):
            return val
        if n >= nmax:
            return val
        prev = val
        n *= 2


def circle_mean(g, center, r):
    """Mean of ``u`` over the circle ``|x - center| = r``."""
    cx, cy = center
    if not np.all(g.background.contains(cx + np.array([-r, r, 0, 0]), cy + np.array([0, 0, -r, r]))):
        raise AnnulusOutOfDomain("circle leaves the domain")
    for a in g.atoms:
        dx, dy = g.background.offset(cx, cy, a.location)
        if abs(np.hypot(dx, dy) - r) < 1e-9:
            raise AtomOnCircle(f"atom {tuple(a.location)} lies on the circle")
    total = 0.0
    rest = g
    if not g.periodic and g.atoms:
        # mean of log|x - z| over a circle is log max(r, |center - z|)
        for a in g.atoms:
            total += a.beta * np.log(max(r, float(np.hypot(cx - a.location.x, cy - a.location.y))))
        rest = g.replace(atoms=(), probe_only=True)
    if rest.atoms or rest.soft_atoms or rest.terms or rest.smooth_part is not None:
        total += _periodic_mean(lambda th: rest.u_raw(cx + r * np.cos(th), cy + r * np.sin(th)))
    return total


def _polar_disk_mean(f, cx, cy, r, nr=48, nth=128):
    s, w = K.gauss_legendre01(nr)
    rr = r * s
    th = 2.0 * np.pi * np.arange(nth) / nth
    R, T = np.meshgrid(rr, th, indexing="ij")
    vals = f(cx + R * np.cos(T), cy + R * np.sin(T))
    ring = vals.mean(axis=1)
    return float(np.dot(w * 2.0 * rr / r, ring))


def disk_mean(g, center, r):
    """Area average of ``u`` over ``D_r(center)``."""
    cx, cy = center
    total = 0.0
    rest = g
    if not g.periodic and g.atoms:
        for a in g.atoms:
            d = float(np.hypot(cx - a.location.x, cy - a.location.y))
            if d >= r:
                total += a.beta * np.log(d)
            else:
                total += a.beta * (np.log(r) - 0.5 + d * d / (2.0 * r * r))
        rest = g.replace(atoms=(), probe_only=True)
    if rest.atoms or rest.soft_atoms or rest.terms or rest.smooth_part is not None:
        total += _polar_disk_mean(rest.u_raw, cx, cy, r)
    return total


# --------------------------------------------------------------------------
# curvature extraction


def default_grid(bg, spacing):
    x0, y0, x1, y1 = bg.extent
    if bg.periodic:
        n = int(round(1.0 / spacing))
        return DensityField(np.zeros((n, n)), 1.0 / n, Point(0.0, 0.0))
    nx = int(round((x1 - x0) / spacing)) + 1
    ny = int(round((y1 - y0) / spacing)) + 1
    return DensityField(np.zeros((ny, nx)), spacing, Point(x0, y0))


def discrete_laplacian(field, periodic=False):
    """5-point Laplacian; the boundary ring is zero unless periodic."""
    v = field.values
    h2 = field.spacing**2
    if periodic:
        return (np.roll(v, 1, 0) + np.roll(v, -1, 0) + np.roll(v, 1, 1) + np.roll(v, -1, 1) - 4 * v) / h2
    lap = np.zeros_like(v)
    lap[1:-1, 1:-1] = (v[2:, 1:-1] + v[:-2, 1:-1] + v[1:-1, 2:] + v[1:-1, :-2] - 4 * v[1:-1, 1:-1]) / h2
    return lap


def curvature_of(g, spacing=None):
    """Curvature measure ``-Laplacian(u) dx`` of ``g``.

    Atom and analytic-term parts are exact; the grid part contributes the
    negated 5-point Laplacian of ``smooth_part``.
    """
    bg = g.background
    mu = SignedMeasure(tuple(Atom(a.location, -2.0 * np.pi * a.beta) for a in g.atoms))
    for t in g.terms:
        mu = add_measures(mu, t.curvature(bg))
    if g.smooth_part is not None:
        grid = g.smooth_part
    else:
        grid = default_grid(bg, spacing or 1.0 / 256)
    X, Y = grid.coords()
    dens = np.zeros_like(X)
    any_density = False
    for a in g.soft_atoms:
        dx, dy = bg.offset(X, Y, a.location)
        dens += -2.0 * np.pi * a.beta * K.bump(np.hypot(dx, dy), a.eps)
        any_density = True
    if bg.periodic:
        for a in list(g.atoms) + list(g.soft_atoms):
            # the spectral field holds each atom mollified at the core radius
            dx, dy = bg.offset(X, Y, a.location)
            dens -= -2.0 * np.pi * a.beta * K.bump(np.hypot(dx, dy), g.core)
    for t in g.terms:
        d = np.asarray(t.density(bg, X, Y), dtype=float)
        if not np.all(np.isfinite(d)):
            bad = ~np.isfinite(d)
            d[bad] = t.singular_cell_mass(grid.spacing) / grid.spacing**2
        if d.any():
            dens += d
            any_density = True
    if g.smooth_part is not None:
        dens += -discrete_laplacian(g.smooth_part, bg.periodic)
        any_density = True
    if any_density:
        mu = add_measures(mu, SignedMeasure(density=grid.with_values(dens)))
    return mu


# --------------------------------------------------------------------------
# logarithmic cylinder


@dataclass(frozen=True, eq=False)
class CylinderMetric:
    """``v(t, theta) = u(center + exp(-t) e^{i theta}) - t`` sampled on a grid.

    ``v_samples[k, j]`` sits at ``(t[k], theta[j])``.
    """

    v_samples: np.ndarray
    t: np.ndarray
    theta: np.ndarray
    center: Point
    source: ConformalMetric

    def dv_dt_integral(self):
        """``int_{S^1} dv/dt dtheta`` at every sampled ``t`` (centred differences)."""
        dv = np.gradient(self.v_samples, self.t, axis=0)
        return dv.mean(axis=1) * 2.0 * np.pi


def cylinder_v(g, center, t, theta):
    """``v`` at cylinder coordinates; a hard atom at the centre is handled exactly."""
    cx, cy = center
    r = np.exp(-np.asarray(t, dtype=float))
    x = cx + r * np.cos(theta)
    y = cy + r * np.sin(theta)
    skip = None
    extra = 0.0
    for i, a in enumerate(g.atoms):
        dx, dy = g.background.offset(cx, cy, a.location)
        if np.hypot(dx, dy) <= ATOM_TOL:
            skip = i
            extra = -a.beta * np.asarray(t, dtype=float)
    return g.u_raw(x, y, skip_atom=skip) + extra - np.asarray(t, dtype=float)


def cylinder_transform(g, center, t0, t1, resolution=(64, 64)):
    nt, nth = (resolution, resolution) if np.isscalar(resolution) else resolution
    rmax, rmin = np.exp(-t0), np.exp(-t1)
    cx, cy = center
    if not g.periodic:
        x0, y0, x1, y1 = g.background.extent
        if cx - rmax < x0 - 1e-12 or cx + rmax > x1 + 1e-12 or cy - rmax < y0 - 1e-12 or cy + rmax > y1 + 1e-12:
            raise AnnulusOutOfDomain("annulus leaves the domain")
    if not (t1 > t0):
        raise AnnulusOutOfDomain("need t1 > t0")
    t = np.linspace(t0, t1, nt)
    theta = 2.0 * np.pi * np.arange(nth) / nth
    T, TH = np.meshgrid(t, theta, indexing="ij")
    v = cylinder_v(g, Point(cx, cy), T, TH)
    return CylinderMetric(v, t, theta, Point(cx, cy), g)
