"""Three-circle decay and completeness probes on logarithmic cylinders.

Around a centre ``c`` write ``x = c + exp(-t) e^{i theta}``; the metric
becomes ``exp(2v)(dtheta^2 + dt^2)`` with ``v = u - t``. Ring distances,
block diameters and annulus distances are computed by Dijkstra on a lattice
in ``(theta, t)``, which resolves radii far below any planar grid spacing.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import integrate, sparse
from scipy.sparse import csgraph

from . import _kernels as K
from .errors import AnnulusOutOfDomain, PreconditionFail
from .geodesic import HALF_STENCILS, circle_length, singularities
from .measure import Point
from .metric import cylinder_v
from .report import ExperimentReport, parallel_map

LAMBDA_INFLATION = 1.5
RATIO_TOL = 0.01


def center_mass(g, center):
    """Curvature mass ``-2 pi beta`` of the singularity at ``center`` (0 if none)."""
    for z, beta in singularities(g):
        dx, dy = g.background.offset(z[0], z[1], center)
        if np.hypot(dx, dy) <= 1e-12:
            return -2.0 * np.pi * beta
    return 0.0


def _check_in_domain(g, center, t_min):
    if g.periodic:
        if np.exp(-t_min) > 0.5:
            raise AnnulusOutOfDomain("circle wider than the torus")
        return
    r = np.exp(-t_min)
    cx, cy = center
    x0, y0, x1, y1 = g.background.extent
    tol = 1e-12
    if cx - r < x0 - tol or cx + r > x1 + tol or cy - r < y0 - tol or cy + r > y1 + tol:
        raise AnnulusOutOfDomain(f"circle of radius {r:.4g} leaves the domain")


class LogCylinder:
    """Weighted lattice graph on ``S^1 x [t_marks[0], t_marks[-1]]``.

    Every value of ``t_marks`` is a lattice row, so circles ``|x - c| =
    exp(-t)`` at those marks are exact node sets.
    """

    def __init__(self, g, center, t_marks, n_theta=64, dt=None, stencil=16, order=4):
        self.metric = g
        self.center = Point(*map(float, center))
        marks = np.unique(np.asarray(t_marks, dtype=float))
        if len(marks) < 2:
            raise ValueError("need at least two t marks")
        _check_in_domain(g, self.center, marks[0])
        self.n_theta = int(n_theta)
        self.dtheta = 2.0 * np.pi / self.n_theta
        dt = self.dtheta if dt is None else float(dt)
        rows = [marks[:1]]
        for a, b in zip(marks[:-1], marks[1:]):
            n = max(1, int(np.ceil((b - a) / dt - 1e-9)))
            rows.append(np.linspace(a, b, n + 1)[1:])
        self.t = np.concatenate(rows)
        self.marks = marks
        self.theta = self.dtheta * np.arange(self.n_theta)
        self.stencil = stencil
        self.matrix = self._assemble(order)

    @property
    def n_nodes(self):
        return len(self.t) * self.n_theta

    def row_of(self, t):
        k = int(np.argmin(np.abs(self.t - t)))
        if abs(self.t[k] - t) > 1e-9:
            raise ValueError(f"t = {t} is not a lattice row")
        return k

    def rows_between(self, ta, tb):
        return (self.t >= ta - 1e-12) & (self.t <= tb + 1e-12)

    def _assemble(self, order):
        nt, nth = len(self.t), self.n_theta
        s, w = K.gauss_legendre01(order)
        idx = np.arange(nt * nth).reshape(nt, nth)
        rows, cols, data = [], [], []
        for di, dj in HALF_STENCILS[self.stencil]:
            if dj >= nt:
                continue
            src = idx[: nt - dj].ravel()
            dst = np.roll(idx[dj:], -di, axis=1).ravel()
            k = src // nth
            j = src % nth
            t0 = self.t[k]
            t1 = self.t[k + dj]
            th0 = self.theta[j]
            dth = di * self.dtheta
            T = t0[:, None] + s[None, :] * (t1 - t0)[:, None]
            TH = th0[:, None] + s[None, :] * dth
            with np.errstate(over="ignore", divide="ignore"):
                vals = np.exp(cylinder_v(self.metric, self.center, T, TH))
            length = np.hypot(dth, t1 - t0)
            wt = (vals @ w) * length
            keep = np.isfinite(wt)
            wt = np.maximum(wt[keep], 1e-300)
            rows += [src[keep], dst[keep]]
            cols += [dst[keep], src[keep]]
            data += [wt, wt]
        return sparse.csr_matrix(
            (np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))),
            shape=(self.n_nodes, self.n_nodes),
        )

    def _submatrix(self, mask):
        keep = np.flatnonzero(mask)
        return self.matrix[keep][:, keep], keep

    def row_nodes(self, k):
        return np.arange(k * self.n_theta, (k + 1) * self.n_theta)

    def distance_from_row(self, t_from, ta=None, tb=None):
        """Distances from the circle ``t_from`` with paths in ``ta <= t <= tb``."""
        ta = self.t[0] if ta is None else ta
        tb = self.t[-1] if tb is None else tb
        node_mask = np.repeat(self.rows_between(ta, tb), self.n_theta)
        A, keep = self._submatrix(node_mask)
        remap = -np.ones(self.n_nodes, dtype=int)
        remap[keep] = np.arange(len(keep))
        src = remap[self.row_nodes(self.row_of(t_from))]
        d = csgraph.dijkstra(A, directed=True, indices=src, min_only=True)
        full = np.full(self.n_nodes, np.inf)
        full[keep] = d
        return full.reshape(len(self.t), self.n_theta)

    def circle_distance(self, ta, tb):
        """``d_g(S_ta, S_tb)`` inside the annulus between the two circles."""
        lo, hi = min(ta, tb), max(ta, tb)
        D = self.distance_from_row(lo, lo, hi)
        return float(D[self.row_of(hi)].min())

    def block_diameter(self, ta, tb, n_samples=64):
        """Sampled lower estimate of ``diam`` of the block ``S^1 x [ta, tb]``."""
        mask_rows = self.rows_between(ta, tb)
        node_mask = np.repeat(mask_rows, self.n_theta)
        A, keep = self._submatrix(node_mask)
        nk = len(keep)
        ka, kb = self.row_of(ta), self.row_of(tb)
        ring_a = self.row_nodes(ka)
        ring_b = self.row_nodes(kb)
        pick = max(1, n_samples // 4)
        step = max(1, self.n_theta // pick)
        sample = np.concatenate([ring_a[::step], ring_b[::step]])
        inner = keep[(keep >= ring_a[-1] + 1) & (keep < ring_b[0])]
        if len(inner):
            sample = np.concatenate([sample, inner[np.linspace(0, len(inner) - 1, n_samples // 2).astype(int)]])
        remap = -np.ones(self.n_nodes, dtype=int)
        remap[keep] = np.arange(nk)
        sample = np.unique(remap[sample])
        D = csgraph.dijkstra(A, directed=True, indices=sample)
        return float(np.max(D[np.isfinite(D)]))


def meridian_length(g, center, ta, tb, theta=0.0):
    """``g``-length of the segment ``{theta} x [ta, tb]``."""
    f = lambda t: float(np.exp(cylinder_v(g, Point(*center), np.array([t]), np.array([theta]))[0]))
    val, _ = integrate.quad(f, ta, tb, limit=200, epsabs=0.0, epsrel=1e-10)
    return val


def cylinder_circle_length(g, center, t):
    return circle_length(g, center, float(np.exp(-t)))


def estimate_lambda(g, center, t0, t1, n_theta=64, per_unit=16):
    """Largest ``int |grad v|`` over unit blocks ``S^1 x [s, s+1]`` in ``[t0, t1]``."""
    nt = max(2, int(np.ceil((t1 - t0) * per_unit)) + 1)
    t = np.linspace(t0, t1, nt)
    th = 2.0 * np.pi * np.arange(n_theta) / n_theta
    T, TH = np.meshgrid(t, th, indexing="ij")
    v = cylinder_v(g, Point(*center), T, TH)
    dvt = np.gradient(v, t, axis=0)
    dvth = (np.roll(v, -1, axis=1) - np.roll(v, 1, axis=1)) / (2.0 * (th[1] - th[0]))
    dens = np.hypot(dvt, dvth).mean(axis=1) * 2.0 * np.pi  # int over theta
    best = 0.0
    starts = np.arange(t0, max(t0, t1 - 1.0) + 1e-12, 1.0 / per_unit)
    for s in starts:
        m = (t >= s - 1e-12) & (t <= s + 1.0 + 1e-12)
        if m.sum() >= 2:
            best = max(best, float(integrate.trapezoid(dens[m], t[m])))
    return best


def ring_distance(g, center, i, L, n_theta=64):
    """``d_g`` between the circles of radii ``exp(-iL)`` and ``exp(-(i+1)L)``."""
    cyl = LogCylinder(g, center, [i * L, (i + 1) * L], n_theta=n_theta)
    return cyl.circle_distance(i * L, (i + 1) * L)


def diam_constant(lam):
    """``2 e^{8 Lambda} (1 + 8 Lambda) / (1 - e^{-16 Lambda})``."""
    return 2.0 * np.exp(8.0 * lam) * (1.0 + 8.0 * lam) / (-np.expm1(-16.0 * lam))


def three_circle_report(g, center, L, n_rings, kappa, Lambda=None, n_theta=64, threads=None):
    """Decay inequalities on the circles ``S_i`` at ``t = iL``, ``i = 0..n_rings``.

    Ring ``i`` is the block ``Q_i`` between ``S_i`` and ``S_{i+1}``. For
    ``i >= 1`` the ring distance, circle length and meridian length of ring
    ``i`` must be below ``exp(-kappa L / 2)`` times those of ring ``i - 1``;
    every ring checks ``diam(Q_i) / d_ring`` against the diameter constant.
    """
    center = Point(*center)
    m = center_mass(g, center)
    if not m < 2.0 * np.pi:
        raise PreconditionFail(f"centre mass {m:.6g} is not below 2 pi")
    kmax = (2.0 * np.pi - m) / (4.0 * np.pi)
    if not 0 < kappa < kmax:
        raise PreconditionFail(f"kappa = {kappa} must lie in (0, {kmax:.6g})")
    if n_rings < 1:
        raise PreconditionFail("need at least one ring")
    T = n_rings * L
    measured = estimate_lambda(g, center, 0.0, T, n_theta)
    lam = LAMBDA_INFLATION * measured if Lambda is None else float(Lambda)
    cyl = LogCylinder(g, center, [i * L for i in range(n_rings + 1)], n_theta=n_theta)

    def ring(i):
        ta, tb = i * L, (i + 1) * L
        return (cyl.circle_distance(ta, tb), cylinder_circle_length(g, center, ta),
                meridian_length(g, center, ta, tb), cyl.block_diameter(ta, tb))

    data = parallel_map(ring, range(n_rings), threads)
    bound = float(np.exp(-0.5 * kappa * L))
    dconst = diam_constant(lam)
    rep = ExperimentReport(
        "three_circle",
        ["ring", "check", "d_ring", "l_circle", "l_meridian", "diam", "ratio", "bound", "pass"],
        config={"metric": g.name, "center": list(center), "L": L, "n_rings": n_rings, "kappa": kappa,
                "Lambda": lam, "n_theta": n_theta},
    )
    ok = True
    for i, (d, lc, lm, dm) in enumerate(data):
        if i >= 1:
            dp, lcp, lmp, _ = data[i - 1]
            for name, ratio in (("decay.SS", d / dp), ("decay.S", lc / lcp), ("decay.L", lm / lmp)):
                p = bool(ratio < bound)
                ok &= p
                rep.add_row(i, name, d, lc, lm, dm, ratio, bound, p)
        ratio = dm / d
        p = bool(ratio <= dconst)
        ok &= p
        rep.add_row(i, "decay.diam", d, lc, lm, dm, ratio, dconst, p)
    rep.checks["all_inequalities"] = ok
    d = np.array([x[0] for x in data])
    if len(d) >= 2:
        rep.summary["ring_exponent"] = float(np.mean(np.log(d[1:] / d[:-1])) / L)
    rep.summary["centre_mass"] = m
    rep.summary["Lambda_measured"] = measured
    rep.summary["Lambda_used"] = lam
    rep.summary["L_exceeds_16Lambda_over_kappa"] = bool(L > 16.0 * lam / kappa)
    return rep


@dataclass(frozen=True)
class BalancedCheck:
    ratio: float
    lower: float
    upper: float
    passed: bool


def balanced_ratio_check(g, center, i, Lambda=None, L=1.0, n_theta=64):
    """Ring distance over meridian length on the unit block ``Q_i``.

    Passes when the ratio lies in ``(e^{-8 Lambda - 1}, e^{8 Lambda + 1})``.
    """
    center = Point(*center)
    ta, tb = i * L, (i + 1) * L
    lam = LAMBDA_INFLATION * estimate_lambda(g, center, ta, tb, n_theta) if Lambda is None else float(Lambda)
    d = ring_distance(g, center, i, L, n_theta)
    ratio = d / meridian_length(g, center, ta, tb)
    lo, hi = np.exp(-8.0 * lam - 1.0), np.exp(8.0 * lam + 1.0)
    return BalancedCheck(ratio, lo, hi, bool(lo < ratio < hi))


def _aitken(s):
    if len(s) < 3:
        return s[-1]
    a, b, c = s[-3:]
    den = (c - b) - (b - a)
    if den == 0 or not np.isfinite(den):
        return c
    return c - (c - b) ** 2 / den


def _squaring_root(q):
    # y with y (1 + y) = q
    return 0.5 * (np.sqrt(1.0 + 4.0 * q) - 1.0)


def _squaring_tail(s):
    """Limit under ``d_k = A - B y_k`` with ``y_{k+1} = y_k^2``.

    This is the tail of a cone point (``y = r^(1+beta)``) on the schedule
    ``r_k = delta^(2^k)``.
    """
    a, b, c = s[-3:]
    d1, d2 = b - a, c - b
    y = _squaring_root(d2 / d1)
    return c + d1 * y**3 / (1.0 - y)


def _extrapolate(s):
    """Limit of an increasing sequence with shrinking increments.

    Two tail models are compared on how well they predict the last increment
    ratio from the one before: geometric increments (log-log cusps, where the
    tail is a power of ``t = -log r``; Aitken) and squaring increments (cone
    points; see ``_squaring_tail``).
    """
    s = [float(v) for v in s]
    if len(s) < 4:
        return _aitken(s)
    inc = np.diff(s)
    q_prev, q_last = inc[-2] / inc[-3], inc[-1] / inc[-2]
    y = _squaring_root(q_prev)
    y2 = y * y
    err_squaring = abs(y2 * (1.0 + y2) - q_last)
    err_geometric = abs(q_prev - q_last)
    if err_squaring < err_geometric and 0 < q_last < 2.0:
        return _squaring_tail(s)
    return _aitken(s)


def completeness_probe(g, center, delta, r_schedule=None, growth=4.0, n_theta=64, dt=0.05):
    """``d_g(boundary D_delta, boundary D_r)`` along ``r`` decreasing to 0.

    The default schedule is ``r_k = delta^(2^k)``, ``k = 1..6``, so ``t = -log r``
    doubles at each step. With ``q`` the ratio of the last two increments:

    * CONVERGENT if ``q < 1 - RATIO_TOL``; the limit is extrapolated by
      ``_extrapolate``;
    * DIVERGENT if the last value is infinite, or if ``q >= 1 - RATIO_TOL``,
      ``q`` is not falling, and the last value exceeds ``growth`` times the
      first;
    * INCONCLUSIVE otherwise (e.g. masses just below ``2 pi``, where the
      increments are still growing but ever more slowly).
    """
    center = Point(*center)
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    if r_schedule is None:
        r_schedule = [delta ** (2**k) for k in range(1, 7)]
    r_schedule = [float(r) for r in r_schedule]
    if any(not 0 < r < delta for r in r_schedule) or any(b >= a for a, b in zip(r_schedule[:-1], r_schedule[1:])):
        raise ValueError("r_schedule must decrease inside (0, delta)")
    t0 = -np.log(delta)
    ts = [-np.log(r) for r in r_schedule]
    cyl = LogCylinder(g, center, [t0] + ts, n_theta=n_theta, dt=dt)
    D = cyl.distance_from_row(t0)
    vals = []
    for t in ts:
        k = cyl.row_of(t)
        vals.append(float(D[k:].min()))
    rep = ExperimentReport("completeness", ["r", "distance"],
                           config={"metric": g.name, "center": list(center), "delta": delta,
                                   "r": r_schedule, "growth": growth, "n_theta": n_theta, "dt": dt})
    for r, v in zip(r_schedule, vals):
        rep.add_row(r, v)
    with np.errstate(invalid="ignore", divide="ignore"):
        inc = np.diff(vals)
        ratios = inc[1:] / inc[:-1]
    q = float(ratios[-1]) if len(ratios) and inc[-2] > 0 else float("nan")
    q_prev = float(ratios[-2]) if len(ratios) >= 2 else q
    if np.isfinite(vals[-1]) and q < 1.0 - RATIO_TOL:
        verdict = "CONVERGENT"
        limit = float(_extrapolate(vals))
    elif (not np.isfinite(vals[-1])) or (q >= 1.0 - RATIO_TOL and q >= q_prev - RATIO_TOL
                                         and vals[-1] > growth * vals[0]):
        verdict = "DIVERGENT"
        limit = float("inf")
    else:
        verdict = "INCONCLUSIVE"
        limit = float("nan")
    rep.summary.update({"classification": verdict, "limit": limit, "increment_ratio": q})
    return rep
