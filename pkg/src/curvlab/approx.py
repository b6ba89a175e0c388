"""Mollification of measures and metrics, cone splitting, and the
uniform-convergence and ghost-bubble experiments.

All mollifiers use the radial bump ``eta_eps(s) = (4/pi)(1 - (s/eps)^2)^3 / eps^2``
of unit mass supported in ``D_eps``.
"""

from __future__ import annotations

import numpy as np
from scipy.signal import fftconvolve

from . import _kernels as K
from .errors import NotBorderlineAtom
from .geodesic import GridGraph, diameter, distance_field
from .measure import Disk, DensityField, Point, SignedMeasure, jordan_decompose
from .metric import CutoffLog, SoftAtom, default_grid
from .report import ExperimentReport, parallel_map

BORDERLINE_TOL = 1e-3


# --------------------------------------------------------------------------
# measures


def _bbox_of(mu):
    xs, ys = [], []
    for a in mu.atoms:
        xs.append(a.location.x)
        ys.append(a.location.y)
    for l in mu.lines:
        for p in l.segment:
            xs.append(p.x)
            ys.append(p.y)
    if mu.density is not None:
        X, Y = mu.density.coords()
        xs += [X.min(), X.max()]
        ys += [Y.min(), Y.max()]
    return min(xs), min(ys), max(xs), max(ys)


def _target_grid(mu, eps, spacing):
    """A grid (aligned with the density grid if there is one) covering the
    support of ``mu`` blown up by ``eps``."""
    if mu.density is not None:
        h = mu.density.spacing
        ox, oy = mu.density.origin
    else:
        h = float(spacing) if spacing else eps / 8.0
        ox = oy = 0.0
    if eps < 2.0 * h * (1 - 1e-12):
        raise ValueError(f"mollifier radius {eps} is below twice the grid spacing {h}")
    x0, y0, x1, y1 = _bbox_of(mu)
    pad = eps + 2.0 * h
    i0 = int(np.floor((x0 - pad - ox) / h))
    j0 = int(np.floor((y0 - pad - oy) / h))
    i1 = int(np.ceil((x1 + pad - ox) / h))
    j1 = int(np.ceil((y1 + pad - oy) / h))
    origin = Point(ox + i0 * h, oy + j0 * h)
    return np.zeros((j1 - j0 + 1, i1 - i0 + 1)), h, origin


def _splat(values, h, origin, z, mass, eps):
    """Add ``mass * eta_eps(. - z)``, renormalized to the exact mass on the grid."""
    ny, nx = values.shape
    r_cells = int(np.ceil(eps / h)) + 1
    ci = int(np.round((z[0] - origin[0]) / h))
    cj = int(np.round((z[1] - origin[1]) / h))
    ia, ib = max(0, ci - r_cells), min(nx, ci + r_cells + 1)
    ja, jb = max(0, cj - r_cells), min(ny, cj + r_cells + 1)
    xs = origin[0] + h * np.arange(ia, ib)
    ys = origin[1] + h * np.arange(ja, jb)
    X, Y = np.meshgrid(xs, ys)
    b = K.bump(np.hypot(X - z[0], Y - z[1]), eps)
    s = b.sum()
    if s <= 0:
        # bump narrower than the grid: fall back to the nearest cell
        values[cj, ci] += mass / (h * h)
        return
    values[ja:jb, ia:ib] += mass * b / (s * h * h)


def _mollify_nonneg(mu, eps, values, h, origin, n_per_cell=2):
    if mu.density is not None:
        d = mu.density
        r_cells = int(np.ceil(eps / h))
        k = np.arange(-r_cells, r_cells + 1) * h
        KX, KY = np.meshgrid(k, k)
        ker = K.bump(np.hypot(KX, KY), eps)
        ker /= ker.sum()
        src = np.zeros_like(values)
        i0 = int(round((d.origin.x - origin.x) / h))
        j0 = int(round((d.origin.y - origin.y) / h))
        ny, nx = d.shape
        src[j0:j0 + ny, i0:i0 + nx] = d.values
        conv = fftconvolve(src, ker, mode="same")
        conv = np.maximum(conv, 0.0)
        tot = src.sum()
        if conv.sum() > 0:
            conv *= tot / conv.sum()
        values += conv
    for a in mu.atoms:
        _splat(values, h, origin, a.location, a.mass, eps)
    for l in mu.lines:
        (px, py), (qx, qy) = l.segment
        n = max(2, int(np.ceil(n_per_cell * l.length / h)))
        s = (np.arange(n) + 0.5) / n
        m = l.linear_density * l.length / n
        for t in s:
            _splat(values, h, origin, (px + t * (qx - px), py + t * (qy - py)), m, eps)


def mollify_jordan(mu, eps, spacing=None):
    """Mollified Jordan parts ``(f1, f2)`` as nonnegative density-only measures."""
    if mu.is_zero():
        return SignedMeasure(), SignedMeasure()
    values, h, origin = _target_grid(mu, eps, spacing)
    plus, minus = jordan_decompose(mu)
    out = []
    for part in (plus, minus):
        v = values.copy()
        _mollify_nonneg(part, eps, v, h, origin)
        out.append(SignedMeasure(density=DensityField(v, h, origin)))
    return tuple(out)


def mollify_measure(mu, eps, spacing=None):
    """Density-only measure ``mu * eta_eps`` (Jordan parts mollified separately).

    Without a density part the grid spacing defaults to ``eps / 8``; with one
    the density grid is extended by ``eps`` on every side.
    """
    f1, f2 = mollify_jordan(mu, eps, spacing)
    if f1.density is None:
        return SignedMeasure()
    return SignedMeasure(density=f1.density.with_values(f1.density.values - f2.density.values))


# --------------------------------------------------------------------------
# metrics


def _term_grid(g, h):
    if g.smooth_part is not None:
        return g.smooth_part
    return default_grid(g.background, h)


def mollify_metric(g, eps, h=1.0 / 256):
    """Atom-free metric with ``u_eps = u * eta_eps``.

    Each hard atom becomes a soft atom carrying the closed-form radial
    profile of ``(beta log) * eta_eps``; this agrees with ``u`` outside
    ``D_eps`` by harmonicity. Analytic terms are convolved numerically onto
    the grid part; an existing grid part is kept as is.
    """
    if eps < 2.0 * h * (1 - 1e-12):
        raise ValueError(f"mollifier radius {eps} is below twice the grid spacing {h}")
    soft = tuple(g.soft_atoms) + tuple(SoftAtom(a.location, a.beta, float(eps)) for a in g.atoms)
    smooth = g.smooth_part
    if g.terms:
        grid = _term_grid(g, h)
        hs = grid.spacing
        r_cells = int(np.ceil(eps / hs))
        ny, nx = grid.shape
        xs = grid.origin.x + hs * np.arange(-r_cells, nx + r_cells)
        ys = grid.origin.y + hs * np.arange(-r_cells, ny + r_cells)
        X, Y = np.meshgrid(xs, ys)
        vals = np.zeros_like(X)
        for t in g.terms:
            with np.errstate(all="ignore"):
                v = np.asarray(t.value(g.background, X, Y), dtype=float)
            if not np.all(np.isfinite(v)):
                raise ValueError(f"term {t.kind!r} is not finite on the grid and cannot be mollified")
            vals += v
        k = np.arange(-r_cells, r_cells + 1) * hs
        KX, KY = np.meshgrid(k, k)
        ker = K.bump(np.hypot(KX, KY), eps)
        ker /= ker.sum()
        conv = fftconvolve(vals, ker, mode="valid")
        base = np.zeros(grid.shape) if smooth is None else smooth.values
        smooth = DensityField(base + conv, hs, grid.origin)
    return g.replace(atoms=(), soft_atoms=soft, smooth_part=smooth, terms=(),
                     name=f"{g.name}~eps={eps:g}" if g.name else "")


def cone_split(g, atom_index, delta, k, tol=BORDERLINE_TOL):
    """Add ``(1 - eta_delta) (1/k) log|x - z|`` at a borderline atom ``z``.

    The atom's exponent becomes ``beta + 1/k`` inside ``D_delta`` while the
    metric is unchanged outside ``D_2delta``.
    """
    a = g.atoms[atom_index]
    mass = -2.0 * np.pi * a.beta
    if not (2.0 * np.pi - tol <= mass <= 2.0 * np.pi + 1e-12):
        raise NotBorderlineAtom(f"atom mass {mass:.6g} is not within {tol} below 2 pi")
    if k < 1:
        raise ValueError("k must be a positive integer")
    if not 0 < delta < 0.5:
        raise ValueError("delta must lie in (0, 1/2) so that log|x - z| <= 0 on D_2delta")
    z = a.location
    for i, b in enumerate(g.atoms):
        if i != atom_index:
            dx, dy = g.background.offset(b.location.x, b.location.y, z)
            if np.hypot(dx, dy) < 2.0 * delta:
                raise ValueError("another atom lies inside D_2delta")
    if not g.periodic:
        x0, y0, x1, y1 = g.background.extent
        if z.x - 2 * delta < x0 or z.x + 2 * delta > x1 or z.y - 2 * delta < y0 or z.y + 2 * delta > y1:
            raise ValueError("D_2delta leaves the domain")
    term = CutoffLog(z, 1.0 / k, delta)
    return g.replace(terms=tuple(g.terms) + (term,), probe_only=False,
                     name=f"{g.name}+split(k={k})" if g.name else "")


# --------------------------------------------------------------------------
# experiments


def default_pairs(g, n=10, seed=0):
    """Deterministic point pairs: mirror pairs through each atom, then random."""
    rng = np.random.default_rng(seed)
    x0, y0, x1, y1 = g.background.extent
    pairs = []
    for a in g.atoms:
        for ang, s in ((0.3, 0.2), (1.4, 0.15)):
            dx, dy = s * np.cos(ang), s * np.sin(ang)
            p = Point(a.location.x - dx, a.location.y - dy)
            q = Point(a.location.x + dx, a.location.y + 0.8 * dy)
            if g.periodic:
                p = Point(p.x % 1.0, p.y % 1.0)
                q = Point(q.x % 1.0, q.y % 1.0)
            pairs.append((p, q))
    mx = 0.0 if g.periodic else 0.25 * (x1 - x0)
    my = 0.0 if g.periodic else 0.25 * (y1 - y0)
    while len(pairs) < n:
        p = Point(*rng.uniform((x0 + mx, y0 + my), (x1 - mx, y1 - my)))
        q = Point(*rng.uniform((x0 + mx, y0 + my), (x1 - mx, y1 - my)))
        pairs.append((p, q))
    return pairs


def _pair_distances(g, pairs, h, stencil):
    gr = GridGraph(g, h, stencil)
    out = []
    for p, q in pairs:
        out.append(distance_field(g, p, graph=gr).at(*q))
    return np.array(out)


def reshetnyak_experiment(g, eps_schedule, pairs=None, h=1.0 / 256, stencil=16,
                          final_tol=0.01, threads=None):
    """Uniform convergence of distances under mollification.

    Every metric of the schedule is discretized on the same lattice (same
    ``h`` and stencil) as ``g`` so the errors isolate the mollification.
    Rows are ``(eps, sup_err, mean_err)``.
    """
    eps_schedule = [float(e) for e in eps_schedule]
    if any(b >= a for a, b in zip(eps_schedule[:-1], eps_schedule[1:])):
        raise ValueError("eps_schedule must be strictly decreasing")
    pairs = default_pairs(g) if pairs is None else [(Point(*p), Point(*q)) for p, q in pairs]
    for p, q in pairs:
        if not (g.background.contains(*p) and g.background.contains(*q)):
            raise ValueError(f"pair {(tuple(p), tuple(q))} outside the domain")
    metrics = [g] + [mollify_metric(g, e, h) for e in eps_schedule]
    dists = parallel_map(lambda m: _pair_distances(m, pairs, h, stencil), metrics, threads)
    ref = dists[0]
    rep = ExperimentReport("reshetnyak", ["eps", "sup_err", "mean_err"],
                           config={"metric": g.name, "eps": eps_schedule, "h": h, "stencil": stencil,
                                   "pairs": [[*p, *q] for p, q in pairs], "final_tol": final_tol})
    sups = []
    for e, d in zip(eps_schedule, dists[1:]):
        err = np.abs(d - ref)
        sups.append(float(err.max()))
        rep.add_row(e, float(err.max()), float(err.mean()))
    rep.checks["sup_err_decreasing"] = all(b < a for a, b in zip(sups[:-1], sups[1:]))
    rep.checks["final_sup_err_below_tol"] = sups[-1] < final_tol
    return rep


def ghost_probe(g, center, r_schedule, eps_schedule, h=1.0 / 256, stencil=16,
                threshold=0.05, n_samples=64, threads=None):
    """``diam(D_r)`` in the mollified metrics over an ``(r, eps)`` table.

    ``diam`` is the sampled lower estimate (largest distance among sampled
    nodes inside the disk, paths restricted to it); ``diam_upper`` is the
    boundary-based upper estimate.
    """
    center = Point(*center)
    idx = [i for i, a in enumerate(g.atoms) if np.hypot(*g.background.offset(*a.location, center)) < 1e-12]
    if not idx:
        raise ValueError("ghost_probe needs an atom at the centre")
    if -2.0 * np.pi * g.atoms[idx[0]].beta >= 2.0 * np.pi:
        raise ValueError("ghost_probe needs an atom of mass below 2 pi")
    r_schedule = sorted(float(r) for r in r_schedule)
    eps_schedule = sorted((float(e) for e in eps_schedule), reverse=True)
    metrics = [mollify_metric(g, e, h) for e in eps_schedule]

    def column(m):
        return [diameter(m, Disk(center, r), n_samples, h, stencil) for r in r_schedule]

    table = parallel_map(column, metrics, threads)
    rep = ExperimentReport("ghost", ["r", "eps", "diam", "diam_upper"],
                           config={"metric": g.name, "center": list(center), "r": r_schedule,
                                   "eps": eps_schedule, "h": h, "stencil": stencil, "threshold": threshold})
    for e, col in zip(eps_schedule, table):
        for r, (lo, hi) in zip(r_schedule, col):
            rep.add_row(r, e, lo, hi)
    last = [lo for lo, _ in table[-1]]
    rep.checks["diam_decreasing_in_r"] = all(a < b for a, b in zip(last[:-1], last[1:]))
    rep.checks["corner_below_threshold"] = last[0] < threshold
    return rep
