"""Signed Radon measures made of atoms, a sampled density and line masses.

Regions are restricted to disks, axis-aligned rectangles and annuli; that
is enough for every experiment in the package and lets line/region
intersections be computed exactly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Optional

import numpy as np

from ._kernels import gauss_legendre01

ATOM_TOL = 1e-12


class Point(NamedTuple):
    x: float
    y: float


# --------------------------------------------------------------------------
# regions


@dataclass(frozen=True)
class Disk:
    center: Point
    r: float

    def contains(self, x, y):
        return np.hypot(np.asarray(x) - self.center[0], np.asarray(y) - self.center[1]) < self.r

    def segment_length(self, p, q):
        return _disk_clip(self.center, self.r, p, q)

    def signed_distance(self, x, y):
        """Distance to the boundary, positive outside."""
        return np.hypot(np.asarray(x) - self.center[0], np.asarray(y) - self.center[1]) - self.r

    @property
    def bbox(self):
        cx, cy = self.center
        return cx - self.r, cy - self.r, cx + self.r, cy + self.r


@dataclass(frozen=True)
class Rect:
    x0: float
    y0: float
    x1: float
    y1: float

    def contains(self, x, y):
        x = np.asarray(x)
        y = np.asarray(y)
        return (x >= self.x0) & (x < self.x1) & (y >= self.y0) & (y < self.y1)

    def signed_distance(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        dx = np.maximum(self.x0 - x, x - self.x1)
        dy = np.maximum(self.y0 - y, y - self.y1)
        outside = np.hypot(np.maximum(dx, 0.0), np.maximum(dy, 0.0))
        return np.where((dx > 0) | (dy > 0), outside, np.maximum(dx, dy))

    def segment_length(self, p, q):
        # Liang-Barsky clipping
        (px, py), (qx, qy) = p, q
        dx, dy = qx - px, qy - py
        t0, t1 = 0.0, 1.0
        for den, num in ((-dx, px - self.x0), (dx, self.x1 - px), (-dy, py - self.y0), (dy, self.y1 - py)):
            if den == 0:
                if num < 0:
                    return 0.0
                continue
            t = num / den
            if den < 0:
                t0 = max(t0, t)
            else:
                t1 = min(t1, t)
        if t1 <= t0:
            return 0.0
        return (t1 - t0) * float(np.hypot(dx, dy))

    @property
    def bbox(self):
        return self.x0, self.y0, self.x1, self.y1


@dataclass(frozen=True)
class Annulus:
    center: Point
    r_in: float
    r_out: float

    def contains(self, x, y):
        d = np.hypot(np.asarray(x) - self.center[0], np.asarray(y) - self.center[1])
        return (d >= self.r_in) & (d < self.r_out)

    def segment_length(self, p, q):
        return _disk_clip(self.center, self.r_out, p, q) - _disk_clip(self.center, self.r_in, p, q)

    @property
    def bbox(self):
        cx, cy = self.center
        return cx - self.r_out, cy - self.r_out, cx + self.r_out, cy + self.r_out


def _disk_clip(center, r, p, q):
    px, py = p[0] - center[0], p[1] - center[1]
    dx, dy = q[0] - p[0], q[1] - p[1]
    a = dx * dx + dy * dy
    b = 2.0 * (px * dx + py * dy)
    c = px * px + py * py - r * r
    disc = b * b - 4.0 * a * c
    if a == 0 or disc <= 0:
        return 0.0
    sq = np.sqrt(disc)
    t0 = max((-b - sq) / (2 * a), 0.0)
    t1 = min((-b + sq) / (2 * a), 1.0)
    return max(t1 - t0, 0.0) * float(np.sqrt(a))


# --------------------------------------------------------------------------
# measure components


@dataclass(frozen=True)
class Atom:
    location: Point
    mass: float

    def __post_init__(self):
        object.__setattr__(self, "location", Point(float(self.location[0]), float(self.location[1])))
        if self.mass == 0:
            raise ValueError("atom mass must be nonzero")


@dataclass(frozen=True, eq=False)
class DensityField:
    """Samples ``values[j, i]`` at ``origin + (i * spacing, j * spacing)``.

    Each sample stands for the square cell of side ``spacing`` centred on it.
    """

    values: np.ndarray
    spacing: float
    origin: Point = Point(0.0, 0.0)

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim != 2 or min(v.shape) < 2:
            raise ValueError("density grid must be at least 2x2")
        if not np.all(np.isfinite(v)):
            raise ValueError("density samples must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "origin", Point(float(self.origin[0]), float(self.origin[1])))

    @property
    def shape(self):
        return self.values.shape

    def coords(self):
        ny, nx = self.values.shape
        xs = self.origin[0] + self.spacing * np.arange(nx)
        ys = self.origin[1] + self.spacing * np.arange(ny)
        return np.meshgrid(xs, ys)

    def with_values(self, values):
        return DensityField(values, self.spacing, self.origin)

    def coverage(self, region, sub=4):
        """Fraction of each cell lying in ``region`` (``sub x sub`` supersampling)."""
        X, Y = self.coords()
        h = self.spacing
        offs = (np.arange(sub) + 0.5) / sub - 0.5
        cov = np.zeros_like(X)
        x0, y0, x1, y1 = region.bbox
        near = (X > x0 - h) & (X < x1 + h) & (Y > y0 - h) & (Y < y1 + h)
        if not near.any():
            return cov
        xs, ys = X[near], Y[near]
        acc = np.zeros_like(xs)
        for ox in offs:
            for oy in offs:
                acc += region.contains(xs + ox * h, ys + oy * h)
        cov[near] = acc / sub**2
        return cov


@dataclass(frozen=True)
class LineMass:
    segment: tuple
    linear_density: float

    def __post_init__(self):
        p, q = self.segment
        p, q = Point(*map(float, p)), Point(*map(float, q))
        if p == q:
            raise ValueError("line mass needs a segment of nonzero length")
        object.__setattr__(self, "segment", (p, q))

    @property
    def length(self):
        (px, py), (qx, qy) = self.segment
        return float(np.hypot(qx - px, qy - py))


@dataclass(frozen=True, eq=False)
class SignedMeasure:
    atoms: tuple = ()
    density: Optional[DensityField] = None
    lines: tuple = field(default=())

    def __post_init__(self):
        atoms = tuple(a if isinstance(a, Atom) else Atom(*a) for a in self.atoms)
        locs = [a.location for a in atoms]
        if len(set(locs)) != len(locs):
            raise ValueError("duplicate atom locations")
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "lines", tuple(self.lines))

    @classmethod
    def zero(cls):
        return cls()

    @classmethod
    def from_atoms(cls, mapping):
        """Build from ``{(x, y): mass}``."""
        return cls(tuple(Atom(Point(*k), v) for k, v in mapping.items()))

    def is_zero(self):
        return not self.atoms and not self.lines and (self.density is None or not self.density.values.any())

    def total_mass(self):
        m = sum(a.mass for a in self.atoms)
        m += sum(l.linear_density * l.length for l in self.lines)
        if self.density is not None:
            m += float(self.density.values.sum()) * self.density.spacing**2
        return m

    def __add__(self, other):
        return add_measures(self, other)

    def scaled(self, c):
        if c == 0:
            return SignedMeasure()
        dens = None if self.density is None else self.density.with_values(c * self.density.values)
        return SignedMeasure(
            tuple(Atom(a.location, c * a.mass) for a in self.atoms),
            dens,
            tuple(LineMass(l.segment, c * l.linear_density) for l in self.lines),
        )

    # -- serialization ---------------------------------------------------

    def to_dict(self):
        out = {
            "atoms": [{"x": a.location.x, "y": a.location.y, "mass": a.mass} for a in self.atoms],
            "lines": [
                {"x0": l.segment[0].x, "y0": l.segment[0].y, "x1": l.segment[1].x, "y1": l.segment[1].y,
                 "density": l.linear_density}
                for l in self.lines
            ],
            "density": None,
        }
        if self.density is not None:
            d = self.density
            ny, nx = d.shape
            out["density"] = {
                "spacing": d.spacing,
                "origin": [d.origin.x, d.origin.y],
                "nx": nx,
                "ny": ny,
                "values": d.values.ravel().tolist(),
            }
        return out

    @classmethod
    def from_dict(cls, data):
        atoms = tuple(Atom(Point(a["x"], a["y"]), a["mass"]) for a in data.get("atoms", []))
        lines = tuple(
            LineMass(((l["x0"], l["y0"]), (l["x1"], l["y1"])), l["density"]) for l in data.get("lines", [])
        )
        dens = None
        d = data.get("density")
        if d:
            vals = np.asarray(d["values"], dtype=float).reshape(d["ny"], d["nx"])
            dens = DensityField(vals, d["spacing"], Point(*d["origin"]))
        return cls(atoms, dens, lines)

    def to_json(self, **kw):
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


def add_measures(a, b):
    """Sum of two measures; atoms at a common location are merged."""
    masses = {}
    for atom in a.atoms + b.atoms:
        masses[atom.location] = masses.get(atom.location, 0.0) + atom.mass
    atoms = tuple(Atom(k, v) for k, v in masses.items() if v != 0)
    if a.density is None:
        dens = b.density
    elif b.density is None:
        dens = a.density
    else:
        if a.density.shape != b.density.shape or a.density.spacing != b.density.spacing \
                or a.density.origin != b.density.origin:
            raise ValueError("density grids differ")
        dens = a.density.with_values(a.density.values + b.density.values)
    return SignedMeasure(atoms, dens, a.lines + b.lines)


# --------------------------------------------------------------------------
# operations


def jordan_decompose(mu):
    """Split ``mu`` into nonnegative parts ``(mu_plus, mu_minus)``."""
    pos = tuple(a for a in mu.atoms if a.mass > 0)
    neg = tuple(Atom(a.location, -a.mass) for a in mu.atoms if a.mass < 0)
    dp = dn = None
    if mu.density is not None:
        v = mu.density.values
        dp = mu.density.with_values(np.maximum(v, 0.0))
        dn = mu.density.with_values(np.maximum(-v, 0.0))
    lp = tuple(l for l in mu.lines if l.linear_density > 0)
    ln = tuple(LineMass(l.segment, -l.linear_density) for l in mu.lines if l.linear_density < 0)
    return SignedMeasure(pos, dp, lp), SignedMeasure(neg, dn, ln)


def _measure_of(mu, region, absolute):
    f = abs if absolute else (lambda t: t)
    total = 0.0
    for a in mu.atoms:
        if region.contains(*a.location):
            total += f(a.mass)
    for l in mu.lines:
        total += f(l.linear_density) * region.segment_length(*l.segment)
    if mu.density is not None:
        d = mu.density
        v = np.abs(d.values) if absolute else d.values
        total += float((v * d.coverage(region)).sum()) * d.spacing**2
    return total


def total_variation(mu, region):
    """``|mu|(region)``."""
    return _measure_of(mu, region, absolute=True)


def measure_of(mu, region):
    """Signed mass ``mu(region)``."""
    return _measure_of(mu, region, absolute=False)


def integrate_test(mu, phi: Callable, n_line=64):
    """``int phi dmu``; ``phi`` must accept coordinate arrays."""
    total = 0.0
    if mu.atoms:
        xy = np.array([a.location for a in mu.atoms])
        m = np.array([a.mass for a in mu.atoms])
        total += float(np.dot(m, np.asarray(phi(xy[:, 0], xy[:, 1]), dtype=float)))
    if mu.density is not None:
        X, Y = mu.density.coords()
        total += float((np.asarray(phi(X, Y)) * mu.density.values).sum()) * mu.density.spacing**2
    if mu.lines:
        s, w = gauss_legendre01(n_line)
        for l in mu.lines:
            (px, py), (qx, qy) = l.segment
            vals = np.asarray(phi(px + s * (qx - px), py + s * (qy - py)), dtype=float)
            total += l.linear_density * l.length * float(np.dot(w, vals))
    return total


def point_mass(mu, x):
    for a in mu.atoms:
        if np.hypot(a.location.x - x[0], a.location.y - x[1]) <= ATOM_TOL:
            return a.mass
    return 0.0
