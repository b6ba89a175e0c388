"""Geodesic distances of conformal metrics via shortest paths on grid graphs.

Every lattice node is joined to the offsets of a wide stencil; an edge
weighs the ``g``-length of the straight segment, ``int exp(u) ds``. Edges
touching or grazing a singular point are integrated with graded panels and
a Gauss-Jacobi rule for the ``s**beta`` endpoint factor, so cone points do
not pollute the distance field.
"""

from __future__ import annotations

import json
import weakref
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import integrate, sparse
from scipy.sparse import csgraph

from . import _kernels as K
from .errors import CurveTooShort, SegmentOutOfDomain, SourceOutOfDomain
from .measure import Disk, Point, Rect
from .metric import ATOM_TOL, disk_mean

_KING = [(1, 0), (0, 1), (1, 1), (-1, 1)]
_KNIGHT = [(2, 1), (1, 2), (-1, 2), (-2, 1)]
_WIDE = [(3, 1), (1, 3), (-1, 3), (-3, 1), (3, 2), (2, 3), (-2, 3), (-3, 2)]
HALF_STENCILS = {8: _KING, 16: _KING + _KNIGHT, 32: _KING + _KNIGHT + _WIDE}

BULK_ORDER = 4
NEAR_ORDER = 16
FINE_ORDER = 16


def stencil_offsets(n):
    """All ``n`` offsets of a stencil (closed under negation)."""
    half = HALF_STENCILS[n]
    return half + [(-a, -b) for a, b in half]


def singularities(g):
    """``(location, exponent)`` for every point where ``exp(u)`` is singular.

    The exponent is the coefficient of ``log|x - z|`` in ``u`` near ``z``.
    """
    out = {}
    for a in g.atoms:
        out[a.location] = out.get(a.location, 0.0) + a.beta
    for t in g.terms:
        for z in t.singular_points():
            coef = getattr(t, "coef", 0.0) if t.kind == "cutoff-log" else 0.0
            out[z] = out.get(z, 0.0) + coef
    return list(out.items())


# --------------------------------------------------------------------------
# segment integrals


def line_integral(g, p, q, sing=None, order=FINE_ORDER):
    """``int_[p, q] exp(u) ds`` with graded panels near singular points."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    v = q - p
    L = float(np.hypot(*v))
    if L == 0.0:
        return 0.0
    if sing is None:
        sing = singularities(g)
    bg = g.background
    breaks = {0.0, 1.0}
    on_line = {}
    for z, beta in sing:
        pz = np.array(bg.offset(p[0], p[1], z), dtype=float)
        t = float(np.clip(-(pz @ v) / (L * L), 0.0, 1.0))
        d = float(np.hypot(*(pz + t * v)))
        if d > 4.0 * L:
            continue
        breaks.add(t)
        if d <= ATOM_TOL * max(1.0, L):
            on_line[t] = (z, beta)
            continue
        rel = d / L
        step = rel
        while step < 1.0:
            for tt in (t - step, t + step):
                if 0.0 < tt < 1.0:
                    breaks.add(tt)
            step *= 2.0
    bs = sorted(breaks)
    total = 0.0
    for a, b in zip(bs[:-1], bs[1:]):
        if b - a <= 1e-15:
            continue
        sa = _lookup(on_line, a)
        sb = _lookup(on_line, b)
        if sa is not None and sb is not None:
            m = 0.5 * (a + b)
            total += _jacobi_panel(g, p, v, L, a, m, sa) + _jacobi_panel(g, p, v, L, b, m, sb)
        elif sa is not None:
            total += _jacobi_panel(g, p, v, L, a, b, sa)
        elif sb is not None:
            total += _jacobi_panel(g, p, v, L, b, a, sb)
        else:
            s, w = K.gauss_legendre01(order)
            tt = a + (b - a) * s
            vals = np.exp(g.u_raw(p[0] + tt * v[0], p[1] + tt * v[1]))
            total += (b - a) * L * float(np.dot(w, vals))
    return total


def _lookup(d, t):
    for k, val in d.items():
        if abs(k - t) <= 1e-14:
            return val
    return None


def _jacobi_panel(g, p, v, L, t_sing, t_other, sing, order=FINE_ORDER):
    """Integral over the panel from the singular parameter to ``t_other``."""
    z, beta = sing
    if beta <= -1.0:
        return np.inf
    ell = abs(t_other - t_sing) * L
    s, w = K.gauss_jacobi01(order, beta)
    sign = 1.0 if t_other > t_sing else -1.0
    tt = t_sing + sign * s * abs(t_other - t_sing)
    sigma = s * ell
    u = g.u_raw(p[0] + tt * v[0], p[1] + tt * v[1])
    f = np.exp(u - beta * np.log(sigma))
    return ell ** (1.0 + beta) * float(np.dot(w, f))


def edge_weight(g, p, q):
    """``g``-length of the straight segment ``[p, q]``."""
    bg = g.background
    if not (bg.contains(*p) and bg.contains(*q)):
        raise SegmentOutOfDomain(f"segment {tuple(p)} -> {tuple(q)} leaves the domain")
    return line_integral(g, p, q)


def _bulk_weights(g, P, Q, order):
    s, w = K.gauss_legendre01(order)
    V = Q - P
    L = np.hypot(V[:, 0], V[:, 1])
    X = P[:, 0, None] + s[None, :] * V[:, 0, None]
    Y = P[:, 1, None] + s[None, :] * V[:, 1, None]
    return L * (np.exp(g.u_raw(X, Y)) @ w)


def _segment_point_distance(bg, P, Q, z):
    V = Q - P
    PZx, PZy = bg.offset(P[:, 0], P[:, 1], z)
    L2 = V[:, 0] ** 2 + V[:, 1] ** 2
    t = np.clip(-(PZx * V[:, 0] + PZy * V[:, 1]) / L2, 0.0, 1.0)
    return np.hypot(PZx + t * V[:, 0], PZy + t * V[:, 1])


# --------------------------------------------------------------------------
# the graph


_GRAPH_CACHE = weakref.WeakKeyDictionary()


class GridGraph:
    """Lattice graph of spacing ``h`` over the background of ``g``.

    Nodes are numbered row-major (``j * nx + i``); the node nearest each
    singular point is moved exactly onto it.
    """

    def __init__(self, g, h=1.0 / 256, stencil=16):
        if h <= 0:
            raise ValueError("grid spacing must be positive")
        if stencil not in HALF_STENCILS:
            raise ValueError("stencil must be 8, 16 or 32")
        self.metric = g
        self.h = float(h)
        self.stencil = stencil
        bg = g.background
        self.periodic = bg.periodic
        x0, y0, x1, y1 = bg.extent
        if self.periodic:
            n = int(round(1.0 / h))
            self.nx = self.ny = n
            self.h = 1.0 / n
        else:
            self.nx = int(round((x1 - x0) / h)) + 1
            self.ny = int(round((y1 - y0) / h)) + 1
        self.x0, self.y0 = x0, y0
        ii, jj = np.meshgrid(np.arange(self.nx), np.arange(self.ny))
        self.lattice_x = (x0 + self.h * ii).ravel()
        self.lattice_y = (y0 + self.h * jj).ravel()
        self.X = self.lattice_x.copy()
        self.Y = self.lattice_y.copy()
        self.sing = singularities(g)
        self.singular_nodes = {}
        for z, beta in self.sing:
            k = self.nearest_node(*z)
            self.X[k], self.Y[k] = z
            self.singular_nodes[k] = (z, beta)
        self.matrix = self._assemble()

    @classmethod
    def for_metric(cls, g, h=1.0 / 256, stencil=16):
        """Cached graph per (metric, h, stencil)."""
        per = _GRAPH_CACHE.setdefault(g, {})
        key = (round(h, 15), stencil)
        if key not in per:
            per[key] = cls(g, h, stencil)
        return per[key]

    @property
    def n_nodes(self):
        return self.nx * self.ny

    def nearest_node(self, x, y):
        fi = (x - self.x0) / self.h
        fj = (y - self.y0) / self.h
        if self.periodic:
            i = int(np.round(fi)) % self.nx
            j = int(np.round(fj)) % self.ny
        else:
            i = int(np.clip(np.round(fi), 0, self.nx - 1))
            j = int(np.clip(np.round(fj), 0, self.ny - 1))
        return j * self.nx + i

    def node_point(self, k):
        return Point(float(self.X[k]), float(self.Y[k]))

    def _assemble(self):
        g = self.metric
        bg = g.background
        rows, cols, data = [], [], []
        idx = np.arange(self.n_nodes).reshape(self.ny, self.nx)
        for di, dj in HALF_STENCILS[self.stencil]:
            if self.periodic:
                src = idx.ravel()
                dst = np.roll(np.roll(idx, -dj, axis=0), -di, axis=1).ravel()
            else:
                js = slice(max(0, -dj), self.ny - max(0, dj))
                is_ = slice(max(0, -di), self.nx - max(0, di))
                src = idx[js, is_].ravel()
                dst = (idx[js, is_] + dj * self.nx + di).ravel()
            P = np.column_stack([self.X[src], self.Y[src]])
            # unwrapped far endpoint so edges across the torus seam stay short
            Q = np.column_stack([self.lattice_x[src] + di * self.h, self.lattice_y[src] + dj * self.h])
            Q[:, 0] += self.X[dst] - self.lattice_x[dst]
            Q[:, 1] += self.Y[dst] - self.lattice_y[dst]
            w = _bulk_weights(g, P, Q, BULK_ORDER)
            if self.sing:
                near = np.zeros(len(src), dtype=bool)
                close = np.zeros(len(src), dtype=bool)
                for z, _ in self.sing:
                    d = _segment_point_distance(bg, P, Q, z)
                    near |= d < 8.0 * self.h
                    close |= d < 2.0 * self.h
                mid = near & ~close
                if mid.any():
                    w[mid] = _bulk_weights(g, P[mid], Q[mid], NEAR_ORDER)
                for k in np.flatnonzero(close):
                    w[k] = line_integral(g, P[k], Q[k], self.sing)
            keep = np.isfinite(w)
            w = np.maximum(w[keep], 1e-300)
            rows += [src[keep], dst[keep]]
            cols += [dst[keep], src[keep]]
            data += [w, w]
        rows = np.concatenate(rows)
        cols = np.concatenate(cols)
        data = np.concatenate(data)
        return sparse.csr_matrix((data, (rows, cols)), shape=(self.n_nodes, self.n_nodes))

    # -- node sets -----------------------------------------------------------

    def region_mask(self, region, closed=True):
        tol = 1e-9 * self.h
        sd = region.signed_distance(self.lattice_x, self.lattice_y)
        return sd <= tol if closed else sd < -tol

    def boundary_nodes(self, mask):
        """Nodes of ``mask`` with a stencil neighbour outside it."""
        m2 = mask.reshape(self.ny, self.nx)
        out = np.zeros_like(m2)
        pad = np.pad(m2, 3, constant_values=False)
        for di, dj in stencil_offsets(self.stencil):
            shifted = pad[3 + dj:3 + dj + self.ny, 3 + di:3 + di + self.nx]
            out |= m2 & ~shifted
        return out.ravel()

    def attach_edges(self, x, y, count=16):
        """Direct edges from an off-lattice point to its ``count`` nearest nodes."""
        bg = self.metric.background
        fi = (x - self.x0) / self.h
        fj = (y - self.y0) / self.h
        ci, cj = int(np.floor(fi)), int(np.floor(fj))
        cand = []
        for dj in range(-2, 4):
            for di in range(-2, 4):
                i, j = ci + di, cj + dj
                if self.periodic:
                    i %= self.nx
                    j %= self.ny
                elif not (0 <= i < self.nx and 0 <= j < self.ny):
                    continue
                k = j * self.nx + i
                dx, dy = bg.offset(self.X[k], self.Y[k], (x, y))
                cand.append((float(np.hypot(dx, dy)), k, dx, dy))
        cand.sort()
        nodes, weights = [], []
        for _, k, dx, dy in cand[:count]:
            w = line_integral(self.metric, (x, y), (x + dx, y + dy), self.sing)
            if np.isfinite(w):
                nodes.append(k)
                weights.append(max(w, 1e-300))
        return np.array(nodes, dtype=int), np.array(weights)

    def node_at(self, x, y):
        """Index of a node located at ``(x, y)``, or ``None``."""
        k = self.nearest_node(x, y)
        dx, dy = self.metric.background.offset(self.X[k], self.Y[k], (x, y))
        if np.hypot(dx, dy) <= 1e-12:
            return k
        return None

    # -- shortest paths -------------------------------------------------------

    def shortest(self, seeds, mask=None, predecessors=False):
        """Multi-source Dijkstra.

        ``seeds`` is a list of ``(node, initial_distance)`` or a virtual seed
        ``(None, (nodes, weights))``. Returns distances over all nodes
        (``inf`` outside ``mask``) and optionally predecessors.
        """
        A = self.matrix
        n = self.n_nodes
        if mask is not None:
            keep = np.flatnonzero(mask)
            A = A[keep][:, keep]
            remap = -np.ones(n, dtype=int)
            remap[keep] = np.arange(len(keep))
        else:
            keep = None
            remap = None
        m = A.shape[0]
        targets, weights = [], []
        for node, w in seeds:
            if node is None:
                nodes, ws = w
                targets.append(np.asarray(nodes, dtype=int))
                weights.append(np.asarray(ws, dtype=float))
            else:
                targets.append(np.array([node]))
                weights.append(np.array([max(w, 1e-300)]))
        targets = np.concatenate(targets)
        weights = np.concatenate(weights)
        if remap is not None:
            ok = remap[targets] >= 0
            targets, weights = remap[targets[ok]], weights[ok]
        if len(targets) == 0:
            raise SourceOutOfDomain("no source node inside the graph")
        row = sparse.csr_matrix((weights, (np.zeros(len(targets), dtype=int), targets)), shape=(1, m + 1))
        B = sparse.vstack([sparse.hstack([A, sparse.csr_matrix((m, 1))]), row]).tocsr()
        res = csgraph.dijkstra(B, directed=True, indices=m, return_predecessors=predecessors)
        dist, pred = (res if predecessors else (res, None))
        dist = dist[:m]
        # seeds carry a tiny positive weight so csgraph keeps the edge
        dist[dist < 1e-250] = 0.0
        if keep is not None:
            full = np.full(n, np.inf)
            full[keep] = dist
            if predecessors:
                fp = np.full(n, -9999, dtype=int)
                ok = pred[:m] >= 0
                p = pred[:m].copy()
                p[ok & (p < m)] = keep[p[ok & (p < m)]]
                p[p == m] = -1
                fp[keep] = p
                pred = fp
            dist = full
        elif predecessors:
            pred = pred[:m].copy()
            pred[pred == m] = -1
        return (dist, pred) if predecessors else dist

    def seeds_for(self, source):
        """Seeds for a point, a list of points, or an integer node array."""
        if isinstance(source, np.ndarray) and source.dtype.kind in "iu":
            return [(int(k), 0.0) for k in source]
        pts = [source] if _is_point(source) else list(source)
        seeds = []
        bg = self.metric.background
        for x, y in pts:
            if not bool(bg.contains(x, y)):
                raise SourceOutOfDomain(f"source {(x, y)} outside the domain")
            k = self.node_at(x, y)
            if k is not None:
                seeds.append((k, 0.0))
            else:
                seeds.append((None, self.attach_edges(x, y)))
        return seeds


def _is_point(obj):
    return len(obj) == 2 and np.isscalar(obj[0])


# --------------------------------------------------------------------------
# distance fields


@dataclass(eq=False)
class DistanceField:
    values: np.ndarray
    graph: GridGraph
    source: object
    predecessors: Optional[np.ndarray] = None
    meta: dict = field(default_factory=dict)

    @property
    def h(self):
        return self.graph.h

    @property
    def grid(self):
        return self.values.reshape(self.graph.ny, self.graph.nx)

    def at(self, x, y):
        """Bilinear interpolation between the 4 surrounding nodes."""
        gr = self.graph
        if gr.node_at(x, y) is not None:
            return float(self.values[gr.node_at(x, y)])
        fi = (x - gr.x0) / gr.h
        fj = (y - gr.y0) / gr.h
        i0, j0 = int(np.floor(fi)), int(np.floor(fj))
        tx, ty = fi - i0, fj - j0
        acc = wsum = 0.0
        for di, dj, w in ((0, 0, (1 - tx) * (1 - ty)), (1, 0, tx * (1 - ty)), (0, 1, (1 - tx) * ty), (1, 1, tx * ty)):
            i, j = i0 + di, j0 + dj
            if gr.periodic:
                i %= gr.nx
                j %= gr.ny
            elif not (0 <= i < gr.nx and 0 <= j < gr.ny):
                continue
            val = self.values[j * gr.nx + i]
            if np.isfinite(val) and w > 0:
                acc += w * val
                wsum += w
        if wsum == 0:
            return np.inf
        return acc / wsum

    def path_to(self, x, y):
        """Predecessor polyline from the source to the node nearest ``(x, y)``.

        On the torus the polyline is lifted to the plane (no seam jumps).
        """
        if self.predecessors is None:
            raise ValueError("field computed without predecessors")
        gr = self.graph
        k = gr.nearest_node(x, y)
        pts = []
        while k >= 0:
            pts.append(gr.node_point(k))
            k = self.predecessors[k]
        if k == -1 and _is_point(self.source) and gr.node_at(*self.source) is None:
            pts.append(Point(*self.source))
        pts = pts[::-1]
        if gr.periodic:
            # continuous lift: each step goes to the nearest image of the next node
            bg = gr.metric.background
            lifted = [pts[0]]
            for q in pts[1:]:
                dx, dy = bg.offset(q.x, q.y, lifted[-1])
                lifted.append(Point(lifted[-1].x + float(dx), lifted[-1].y + float(dy)))
            pts = lifted
        return pts

    def to_csv(self, path):
        gr = self.graph
        with open(path, "w") as fh:
            fh.write("x,y,value\n")
            for xx, yy, vv in zip(gr.X, gr.Y, self.values):
                fh.write(f"{xx:.10g},{yy:.10g},{vv:.12g}\n")
        side = {"source": _jsonable_source(self.source), "h": gr.h, "stencil": gr.stencil,
                "nx": gr.nx, "ny": gr.ny, "periodic": gr.periodic}
        with open(str(path) + ".json", "w") as fh:
            json.dump(side, fh, indent=2)


def _jsonable_source(src):
    if isinstance(src, np.ndarray):
        return src.tolist()
    if _is_point(src):
        return [float(src[0]), float(src[1])]
    return [[float(a), float(b)] for a, b in src]


def distance_field(g, source, h=1.0 / 256, stencil=16, mask=None, predecessors=False, graph=None):
    """Geodesic distance from ``source`` to every lattice node."""
    gr = graph or GridGraph.for_metric(g, h, stencil)
    seeds = gr.seeds_for(source)
    res = gr.shortest(seeds, mask=mask, predecessors=predecessors)
    if predecessors:
        dist, pred = res
    else:
        dist, pred = res, None
    return DistanceField(dist, gr, source, pred, {"h": gr.h, "stencil": gr.stencil})


def distance(g, x, y, h=1.0 / 256, stencil=16, graph=None):
    """``d_g(x, y)`` from the field of ``x`` read at ``y``."""
    if np.hypot(x[0] - y[0], x[1] - y[1]) == 0:
        return 0.0
    return distance_field(g, x, h, stencil, graph=graph).at(*y)


def curve_length(g, polyline):
    pts = list(polyline)
    return float(sum(line_integral(g, p, q) for p, q in zip(pts[:-1], pts[1:])))


def circle_length(g, center, r, tol=1e-10):
    """``int_{|x - c| = r} exp(u) ds`` by refined periodic trapezoid sums."""
    cx, cy = center
    n = 64
    prev = None
    while True:
        th = 2.0 * np.pi * np.arange(n) / n
        val = float(np.mean(np.exp(g.u_raw(cx + r * np.cos(th), cy + r * np.sin(th))))) * 2.0 * np.pi * r
        if prev is not None and abs(val - prev) <= tol * abs(val):
            return val
        if n >= 2**17:
            return val
        prev = val
        n *= 2


def _stub_seeds(gr, region, mask, outside=True):
    """Virtual seed joining ``region``'s boundary to nearby mask nodes."""
    g = gr.metric
    sd = region.signed_distance(gr.lattice_x, gr.lattice_y)
    dist = sd if outside else -sd
    band = mask & (dist >= -1e-12) & (dist <= 2.0 * gr.h)
    nodes = np.flatnonzero(band)
    w = np.exp(g.u_raw(gr.X[nodes], gr.Y[nodes])) * np.maximum(dist[nodes], 0.0)
    return nodes, w


def annulus_distance(g, inner, outer, h=1.0 / 256, stencil=16):
    """``d_g(boundary of inner, boundary of outer)`` inside ``outer`` minus ``inner``."""
    if inner == outer:
        return 0.0
    gr = GridGraph.for_metric(g, h, stencil)
    mask = gr.region_mask(outer) & ~gr.region_mask(inner, closed=False)
    nodes, w = _stub_seeds(gr, inner, mask, outside=True)
    dist = gr.shortest([(None, (nodes, w))], mask=mask)
    tnodes, tw = _stub_seeds(gr, outer, mask, outside=False)
    return float(np.min(dist[tnodes] + tw))


def ball_area(g, center, R, h=1.0 / 256, stencil=16):
    """``g``-area of the metric ball ``{d_g(center, .) < R}``."""
    field_ = distance_field(g, center, h, stencil)
    gr = field_.graph
    inside = field_.values < R
    if not gr.periodic:
        edge = np.zeros((gr.ny, gr.nx), dtype=bool)
        edge[0, :] = edge[-1, :] = edge[:, 0] = edge[:, -1] = True
        if np.any(inside & edge.ravel()):
            raise SourceOutOfDomain("metric ball reaches the domain boundary")
    rho = gr.h / np.sqrt(np.pi)
    total = 0.0
    special = set()
    for k, (z, beta) in gr.singular_nodes.items():
        if inside[k]:
            special.add(k)
            if 2.0 * beta + 2.0 <= 0:
                return np.inf
            # ring integral of s^(2 beta + 1) times the regular factor at the atom
            reg = _regular_factor(g, z, beta, rho)
            total += 2.0 * np.pi * rho ** (2.0 * beta + 2.0) / (2.0 * beta + 2.0) * reg
    idx = np.flatnonzero(inside)
    if special:
        idx = np.setdiff1d(idx, np.fromiter(special, dtype=int))
    total += float(np.exp(2.0 * g.u_raw(gr.X[idx], gr.Y[idx])).sum()) * gr.h**2
    return total


def _regular_factor(g, z, beta, rho):
    th = 2.0 * np.pi * np.arange(16) / 16
    r = 0.5 * rho
    x = z[0] + r * np.cos(th)
    y = z[1] + r * np.sin(th)
    return float(np.mean(np.exp(2.0 * (g.u_raw(x, y) - beta * np.log(r)))))


def diameter(g, region, n_samples=64, h=1.0 / 256, stencil=16):
    """``(lower, upper)`` estimates of ``diam(region, g)``.

    ``lower`` is the largest restricted distance among ``n_samples`` nodes of
    the region; ``upper`` is ``2 sup d_g(x, boundary) + length(boundary)``.
    """
    gr = GridGraph.for_metric(g, h, stencil)
    mask = gr.region_mask(region)
    nodes = np.flatnonzero(mask)
    if len(nodes) <= 1:
        return 0.0, 0.0
    bnd = np.flatnonzero(gr.boundary_nodes(mask))
    interior = np.setdiff1d(nodes, bnd)
    nb = min(len(bnd), max(n_samples // 2, 1))
    sample = list(bnd[np.linspace(0, len(bnd) - 1, nb).astype(int)]) if len(bnd) else []
    ni = min(len(interior), n_samples - nb)
    if ni > 0:
        sample += list(interior[np.linspace(0, len(interior) - 1, ni).astype(int)])
    sample = np.unique(np.array(sample, dtype=int))
    keep = nodes
    A = gr.matrix[keep][:, keep]
    remap = -np.ones(gr.n_nodes, dtype=int)
    remap[keep] = np.arange(len(keep))
    D = csgraph.dijkstra(A, directed=True, indices=remap[sample])
    sub = D[:, remap[sample]]
    lower = float(np.max(sub[np.isfinite(sub)]))
    dist_b = gr.shortest([(int(k), 0.0) for k in bnd], mask=mask)
    sup_b = float(np.max(dist_b[nodes][np.isfinite(dist_b[nodes])]))
    if isinstance(region, Disk):
        perim = circle_length(g, region.center, region.r)
    else:
        corners = [(region.x0, region.y0), (region.x1, region.y0), (region.x1, region.y1),
                   (region.x0, region.y1), (region.x0, region.y0)]
        perim = curve_length(g, corners)
    return lower, 2.0 * sup_b + perim


# --------------------------------------------------------------------------
# a-strings


def euclidean(p, q):
    return float(np.hypot(q[0] - p[0], q[1] - p[1]))


@dataclass
class AString:
    points: list
    a: float
    base: Callable = euclidean

    def gaps(self):
        return [self.base(p, q) for p, q in zip(self.points[:-1], self.points[1:])]


def build_a_string(curve, a, d0=euclidean):
    """Greedy ``a``-string on a polyline.

    Each new point is the first point along the curve at base distance
    exactly ``a`` from the previous one; the last such point is replaced by
    the curve's endpoint.
    """
    pts = [np.asarray(p, dtype=float) for p in curve]
    if sum(d0(p, q) for p, q in zip(pts[:-1], pts[1:])) <= a:
        raise CurveTooShort("curve base length does not exceed a")
    out = [pts[0]]
    seg, frac = 0, 0.0
    prev = pts[0]
    while True:
        found = None
        s, f0 = seg, frac
        while s < len(pts) - 1:
            p, q = pts[s], pts[s + 1]
            end_far = d0(prev, q) >= a
            if end_far:
                lo, hi = f0, 1.0
                # first crossing on this segment
                if d0(prev, p + lo * (q - p)) >= a:
                    hi = lo
                for _ in range(100):
                    if hi - lo < 1e-15:
                        break
                    mid = 0.5 * (lo + hi)
                    if d0(prev, p + mid * (q - p)) >= a:
                        hi = mid
                    else:
                        lo = mid
                found = (s, hi, p + hi * (q - p))
                break
            s += 1
            f0 = 0.0
        if found is None:
            break
        seg, frac, prev = found
        out.append(prev)
    if len(out) == 1:
        raise CurveTooShort("curve never leaves the a-ball of its start")
    out[-1] = pts[-1]
    return AString([Point(*p) for p in out], a, d0)


def string_estimate(g, alpha, r):
    """``sum_i exp(mean of u over D_r(P_i)) * d0(P_i, P_i+1)``."""
    pts = alpha.points
    if len(pts) < 2:
        return 0.0
    total = 0.0
    for p, q in zip(pts[:-1], pts[1:]):
        total += np.exp(disk_mean(g, p, r)) * alpha.base(p, q)
    return float(total)


def gradient_check(field_, g, min_atom_dist_cells=4, slack=0.05):
    """Fraction of eligible interior nodes with ``|grad d| <= exp(u) (1 + slack)``."""
    gr = field_.graph
    D = field_.grid
    h = gr.h
    if gr.periodic:
        gx = (np.roll(D, -1, 1) - np.roll(D, 1, 1)) / (2 * h)
        gy = (np.roll(D, -1, 0) - np.roll(D, 1, 0)) / (2 * h)
        elig = np.ones_like(D, dtype=bool)
    else:
        gx = np.full_like(D, np.nan)
        gy = np.full_like(D, np.nan)
        gx[:, 1:-1] = (D[:, 2:] - D[:, :-2]) / (2 * h)
        gy[1:-1, :] = (D[2:, :] - D[:-2, :]) / (2 * h)
        elig = np.zeros_like(D, dtype=bool)
        elig[1:-1, 1:-1] = True
    X = gr.lattice_x.reshape(D.shape)
    Y = gr.lattice_y.reshape(D.shape)
    bg = g.background
    for z, _ in gr.sing:
        dx, dy = bg.offset(X, Y, z)
        elig &= np.hypot(dx, dy) >= min_atom_dist_cells * h
    src = field_.source
    if _is_point(src):
        dx, dy = bg.offset(X, Y, src)
        elig &= np.hypot(dx, dy) >= 2 * h
    elig &= np.isfinite(gx) & np.isfinite(gy)
    mag = np.hypot(gx, gy)
    bound = np.exp(g.u_raw(X, Y)) * (1.0 + slack)
    ok = mag[elig] <= bound[elig]
    return float(ok.mean()), int(elig.sum())
