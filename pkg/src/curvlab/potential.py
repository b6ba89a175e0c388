"""Logarithmic potentials of measures and their integrability estimates."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from . import _kernels as K
from .errors import Divergent, EvalAtAtom, NoDensityRepresentable, NonzeroTotalMass
from .measure import ATOM_TOL, DensityField, Point

log = logging.getLogger(__name__)


def _check_atoms(mu, x):
    for a in mu.atoms:
        if np.hypot(x[0] - a.location.x, x[1] - a.location.y) <= ATOM_TOL:
            raise EvalAtAtom(f"potential evaluated at the atom {tuple(a.location)}")


def log_potential(mu, x):
    """``I_mu(x) = -(1/2pi) int log|x - y| dmu(y)``."""
    _check_atoms(mu, x)
    total = 0.0
    for a in mu.atoms:
        total += a.mass * np.log(np.hypot(x[0] - a.location.x, x[1] - a.location.y))
    if mu.density is not None:
        d = mu.density
        X, Y = d.coords()
        r = np.hypot(X - x[0], Y - x[1])
        h = d.spacing
        self_cell = (np.abs(X - x[0]) < h / 2) & (np.abs(Y - x[1]) < h / 2)
        with np.errstate(divide="ignore"):
            kern = np.where(self_cell, 0.0, np.log(np.where(self_cell, 1.0, r))) * h * h
        total += float((kern * d.values).sum())
        if self_cell.any():
            # exact log integral over the cell containing x (x assumed near its centre)
            total += float(d.values[self_cell].sum()) * K.square_log_integral(h / 2)
    for l in mu.lines:
        (px, py), (qx, qy) = l.segment

        def f(s):
            return np.log(np.hypot(px + s * (qx - px) - x[0], py + s * (qy - py) - x[1]))

        # split at the foot of the perpendicular
        dx, dy = qx - px, qy - py
        s0 = ((x[0] - px) * dx + (x[1] - py) * dy) / (dx * dx + dy * dy)
        pts = [s0] if 0 < s0 < 1 else None
        val, _ = integrate.quad(f, 0.0, 1.0, points=pts, limit=200)
        total += l.linear_density * l.length * val
    return -total / (2.0 * np.pi)


def grad_log_potential(mu, x):
    """Gradient of :func:`log_potential`."""
    _check_atoms(mu, x)
    gx = gy = 0.0
    for a in mu.atoms:
        dx, dy = x[0] - a.location.x, x[1] - a.location.y
        r2 = dx * dx + dy * dy
        gx += a.mass * dx / r2
        gy += a.mass * dy / r2
    if mu.density is not None:
        d = mu.density
        X, Y = d.coords()
        dx, dy = x[0] - X, x[1] - Y
        r2 = dx * dx + dy * dy
        # the self cell integrates an odd kernel and contributes nothing at its centre
        far = r2 > (d.spacing / 2) ** 2
        w = np.where(far, d.values / np.where(far, r2, 1.0), 0.0) * d.spacing**2
        gx += float((w * dx).sum())
        gy += float((w * dy).sum())
    for l in mu.lines:
        (px, py), (qx, qy) = l.segment

        def fx(s, comp):
            ex = x[0] - (px + s * (qx - px))
            ey = x[1] - (py + s * (qy - py))
            return (ex if comp == 0 else ey) / (ex * ex + ey * ey)

        for comp in (0, 1):
            val, _ = integrate.quad(fx, 0.0, 1.0, args=(comp,), limit=200)
            if comp == 0:
                gx += l.linear_density * l.length * val
            else:
                gy += l.linear_density * l.length * val
    return np.array([-gx, -gy]) / (2.0 * np.pi)


def _total_variation(mu):
    tv = sum(abs(a.mass) for a in mu.atoms) + sum(abs(l.linear_density) * l.length for l in mu.lines)
    if mu.density is not None:
        tv += float(np.abs(mu.density.values).sum()) * mu.density.spacing**2
    return tv


def _disk_samples(disk, n):
    cx, cy = disk.center
    r = disk.r
    h = 2.0 * r / n
    c = -r + h * (np.arange(n) + 0.5)
    X, Y = np.meshgrid(cx + c, cy + c)
    inside = np.hypot(X - cx, Y - cy) < r
    return X[inside], Y[inside], h


def _grad_field(mu, X, Y, chunk=2048):
    """Vectorized :func:`grad_log_potential` over sample arrays."""
    gx = np.zeros_like(X)
    gy = np.zeros_like(Y)
    for a in mu.atoms:
        dx, dy = X - a.location.x, Y - a.location.y
        r2 = dx * dx + dy * dy
        gx += a.mass * dx / r2
        gy += a.mass * dy / r2
    if mu.density is not None:
        d = mu.density
        DX, DY = d.coords()
        nz = d.values != 0
        sx, sy, sv = DX[nz], DY[nz], d.values[nz] * d.spacing**2
        for k in range(0, X.size, chunk):
            ex = X[k:k + chunk, None] - sx[None, :]
            ey = Y[k:k + chunk, None] - sy[None, :]
            r2 = ex * ex + ey * ey
            far = r2 > (d.spacing / 2) ** 2
            w = np.where(far, sv / np.where(far, r2, 1.0), 0.0)
            gx[k:k + chunk] += (w * ex).sum(axis=1)
            gy[k:k + chunk] += (w * ey).sum(axis=1)
    if mu.lines:
        s, wq = K.gauss_legendre01(64)
        for l in mu.lines:
            (px, py), (qx, qy) = l.segment
            lx = px + s * (qx - px)
            ly = py + s * (qy - py)
            ex = X[:, None] - lx[None, :]
            ey = Y[:, None] - ly[None, :]
            r2 = ex * ex + ey * ey
            c = l.linear_density * l.length * wq[None, :] / r2
            gx += (c * ex).sum(axis=1)
            gy += (c * ey).sum(axis=1)
    return -gx / (2.0 * np.pi), -gy / (2.0 * np.pi)


def _potential_field(mu, X, Y, chunk=2048):
    """Vectorized :func:`log_potential` (midpoint kernel, no self-cell correction)."""
    tot = np.zeros_like(X)
    for a in mu.atoms:
        tot += a.mass * np.log(np.hypot(X - a.location.x, Y - a.location.y))
    if mu.density is not None:
        d = mu.density
        DX, DY = d.coords()
        nz = d.values != 0
        sx, sy, sv = DX[nz], DY[nz], d.values[nz] * d.spacing**2
        self_val = K.square_log_integral(d.spacing / 2) / d.spacing**2
        for k in range(0, X.size, chunk):
            r = np.hypot(X[k:k + chunk, None] - sx[None, :], Y[k:k + chunk, None] - sy[None, :])
            near = r < d.spacing / 2
            kern = np.where(near, self_val, np.log(np.where(near, 1.0, r)))
            tot[k:k + chunk] += (kern * sv).sum(axis=1)
    if mu.lines:
        s, wq = K.gauss_legendre01(64)
        for l in mu.lines:
            (px, py), (qx, qy) = l.segment
            r = np.hypot(X[:, None] - (px + s * (qx - px))[None, :], Y[:, None] - (py + s * (qy - py))[None, :])
            tot += l.linear_density * l.length * (np.log(r) * wq[None, :]).sum(axis=1)
    return -tot / (2.0 * np.pi)


def wq_seminorm(mu, disk, q, n=400):
    """Scale-invariant ``r^(q-2) int_{D_r} |grad I_mu|^q``.

    Midpoint samples skip the cells holding atoms; each skipped cell gets the
    closed-form contribution of its own atom over the equal-area disk.
    """
    if not 1.0 <= q < 2.0:
        raise ValueError("q must lie in [1, 2)")
    if mu.is_zero():
        return 0.0
    X, Y, h = _disk_samples(disk, n)
    skip = np.zeros(X.shape, dtype=bool)
    atom_cells = []
    for a in mu.atoms:
        cell = (np.abs(X - a.location.x) < h / 2 + 1e-15) & (np.abs(Y - a.location.y) < h / 2 + 1e-15)
        if cell.any():
            skip |= cell
            atom_cells.append((a, int(cell.sum())))
    gx, gy = _grad_field(mu, X[~skip], Y[~skip])
    total = float((np.hypot(gx, gy) ** q).sum()) * h * h
    for a, ncell in atom_cells:
        rho = h * np.sqrt(ncell / np.pi)
        c = abs(a.mass) / (2.0 * np.pi)
        total += 2.0 * np.pi * c**q * rho ** (2.0 - q) / (2.0 - q)
    return disk.r ** (q - 2.0) * total


def exp_integrability(mu, p, disk, n=400):
    """``int_{disk} exp(p |I_mu|)``; returns ``(value, bound_applies)``.

    ``bound_applies`` is False when ``p |mu|(R^2) >= 4 pi``, the regime where
    the uniform estimate no longer holds even though the integral may be finite.
    """
    for a in mu.atoms:
        if p * abs(a.mass) >= 4.0 * np.pi:
            raise Divergent(f"p*|m| = {p * abs(a.mass):.6g} >= 4 pi at atom {tuple(a.location)}")
    bound_applies = p * _total_variation(mu) < 4.0 * np.pi
    if mu.is_zero():
        return np.pi * disk.r**2, bound_applies
    cx, cy = disk.center
    pieces = []
    for a in mu.atoms:
        if np.hypot(a.location.x - cx, a.location.y - cy) < disk.r:
            pieces.append(a)
    if len(pieces) == 1 and len(mu.atoms) == 1 and mu.density is None and not mu.lines \
            and pieces[0].location == Point(cx, cy):
        # single centred atom: exact radial integral, split at r = 1 where |log r| kinks
        c = p * abs(pieces[0].mass) / (2.0 * np.pi)

        def f(s):
            return 2.0 * np.pi * s * np.exp(c * abs(np.log(s)))

        brk = [1.0] if disk.r > 1.0 else None
        val, _ = integrate.quad(f, 0.0, disk.r, points=brk, limit=200)
        return val, bound_applies
    X, Y, h = _disk_samples(disk, n)
    skip = np.zeros(X.shape, dtype=bool)
    for a in pieces:
        skip |= (np.abs(X - a.location.x) < h / 2 + 1e-15) & (np.abs(Y - a.location.y) < h / 2 + 1e-15)
    vals = _potential_field(mu, X[~skip], Y[~skip])
    total = float(np.exp(p * np.abs(vals)).sum()) * h * h
    for a in pieces:
        # closed-form ring integral of |x - z|^(-p|m|/2pi) over the equal-area cell disk
        c = p * abs(a.mass) / (2.0 * np.pi)
        rho = h / np.sqrt(np.pi)
        total += 2.0 * np.pi * rho ** (2.0 - c) / (2.0 - c)
    return total, bound_applies


# --------------------------------------------------------------------------
# torus


@dataclass(frozen=True, eq=False)
class TorusPotential:
    """Grid samples of ``u`` with ``-Laplacian(u) = mu`` on the unit torus.

    ``field`` holds the spectral solution for the atoms mollified at radius
    ``core``; ``atoms`` lists ``(location, beta)`` so a metric can restore the
    exact log singularity inside ``core``.
    """

    field: DensityField
    atoms: tuple
    core: float


def _rasterize_bump(n, z, mass, eps):
    h = 1.0 / n
    c = np.arange(n) * h
    X, Y = np.meshgrid(c, c)
    dx = X - z[0]
    dy = Y - z[1]
    dx -= np.round(dx)
    dy -= np.round(dy)
    b = K.bump(np.hypot(dx, dy), eps)
    return mass * b / (b.sum() * h * h)


def torus_potential(mu, grid_resolution=256):
    """Zero-mean periodic solution of ``-Laplacian(u) = mu`` by FFT.

    The 5-point symbol is used so the discrete Laplacian of the result returns
    the rasterized right-hand side exactly.
    """
    n = int(grid_resolution)
    if n < 16:
        raise NoDensityRepresentable("grid_resolution must be at least 16")
    total = mu.total_mass()
    if abs(total) > 1e-10:
        raise NonzeroTotalMass(f"torus curvature must have zero total mass, got {total:.3e}")
    h = 1.0 / n
    core = 3.0 * h
    rhs = np.zeros((n, n))
    for a in mu.atoms:
        rhs += _rasterize_bump(n, a.location, a.mass, core)
    if mu.density is not None:
        d = mu.density
        if d.shape != (n, n) or abs(d.spacing - h) > 1e-15:
            raise ValueError("density must live on the torus grid of the requested resolution")
        rhs += d.values
    if mu.lines:
        raise ValueError("line masses are not supported on the torus")
    rhs -= rhs.mean()
    k = 2.0 * np.pi * np.fft.fftfreq(n)
    symbol = (2.0 * np.cos(k)[None, :] + 2.0 * np.cos(k)[:, None] - 4.0) / (h * h)
    symbol[0, 0] = 1.0
    U = np.fft.fft2(rhs) / (-symbol)
    U[0, 0] = 0.0
    u = np.real(np.fft.ifft2(U))
    atoms = tuple((a.location, -a.mass / (2.0 * np.pi)) for a in mu.atoms)
    return TorusPotential(DensityField(u, h, Point(0.0, 0.0)), atoms, core)


def calibrate_wq_constant(measures, disks, q):
    """Empirical ``max wq_seminorm / |mu|^q`` over a family; logged once."""
    ratios = []
    for mu, disk in zip(measures, disks):
        tv = _total_variation(mu)
        if tv == 0:
            continue
        ratios.append(wq_seminorm(mu, disk, q) / tv**q)
    c = max(ratios)
    log.info("calibrated C(q=%.2f) = %.4f over %d measures", q, c, len(ratios))
    return c


__all__ = [
    "log_potential",
    "grad_log_potential",
    "wq_seminorm",
    "exp_integrability",
    "torus_potential",
    "TorusPotential",
    "calibrate_wq_constant",
]
