"""Scenario runner: ``curvlab run <scenario.toml> --out <dir>`` and ``curvlab list``.

A scenario has three tables::

    [metric]                 # builtin = "<name>" with optional [metric.params],
    builtin = "cone"         # or json = "<file>" relative to the scenario
    params = { beta = 0.3 }

    [grid]                   # h (default 1/256) or n (h = 1/n); stencil 8/16/32
    h = 0.00390625
    stencil = 16

    [experiment]
    kind = "area"            # distance-field | converge | three-circle |
    center = [0.0, 0.0]      # gauss-bonnet | area | completeness | ghost
    radii = [0.2, 0.3, 0.4]

Exit codes: 0 all checks pass, 1 some check fails, 2 configuration error
(the message names the offending key) or an error raised by the library.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import __version__
from .approx import ghost_probe, reshetnyak_experiment
from .catalog import BUILTINS, build, list_builtins
from .curvature import cached_curvature, gb_annulus_check, point_mass_detect
from .cylinder import completeness_probe, three_circle_report
from .errors import ConfigError, CurvlabError
from .geodesic import ball_area, distance_field, gradient_check, singularities
from .measure import Point, Rect, jordan_decompose, total_variation
from .metric import ConformalMetric
from .report import ExperimentReport

log = logging.getLogger("curvlab")

KINDS = ("distance-field", "converge", "three-circle", "gauss-bonnet", "area", "completeness", "ghost")


class _Table:
    """Key access that records which keys were read, for unknown-key errors."""

    def __init__(self, data, prefix):
        if not isinstance(data, dict):
            raise ConfigError(f"[{prefix}] must be a table")
        self.data = data
        self.prefix = prefix
        self.used = set()

    def get(self, key, default=None, kind=None, required=False):
        full = f"{self.prefix}.{key}"
        if key not in self.data:
            if required:
                raise ConfigError(f"missing required key '{full}'")
            return default
        self.used.add(key)
        val = self.data[key]
        try:
            if kind == "float":
                return float(val)
            if kind == "int":
                if isinstance(val, bool) or int(val) != val:
                    raise ValueError
                return int(val)
            if kind == "point":
                if len(val) != 2:
                    raise ValueError
                return Point(float(val[0]), float(val[1]))
            if kind == "floats":
                return [float(v) for v in val]
            if kind == "str":
                if not isinstance(val, str):
                    raise ValueError
                return val
        except (TypeError, ValueError):
            raise ConfigError(f"key '{full}' has an invalid value {val!r}") from None
        return val

    def finish(self):
        extra = sorted(set(self.data) - self.used)
        if extra:
            raise ConfigError(f"unknown key '{self.prefix}.{extra[0]}'")


def load_metric(tab, base_dir):
    if "builtin" in tab.data:
        name = tab.get("builtin", kind="str")
        if name not in BUILTINS:
            raise ConfigError(f"key 'metric.builtin' names an unknown metric {name!r}")
        params = tab.get("params", {})
        if not isinstance(params, dict):
            raise ConfigError("key 'metric.params' must be a table")
        try:
            g = build(name, **params)
        except TypeError as exc:
            raise ConfigError(f"key 'metric.params' is invalid for {name!r}: {exc}") from None
    elif "json" in tab.data:
        path = Path(base_dir) / tab.get("json", kind="str")
        try:
            g = ConformalMetric.from_json(path.read_text())
        except OSError:
            raise ConfigError(f"key 'metric.json' names an unreadable file {path.name!r}") from None
    else:
        raise ConfigError("missing required key 'metric.builtin' (or 'metric.json')")
    tab.finish()
    return g


# --------------------------------------------------------------------------
# experiments


def _distance_field(g, ex, h, stencil, threads, out):
    src = ex.get("source", required=True, kind="point")
    slack = ex.get("slack", 0.05, "float")
    min_fraction = ex.get("min_fraction", 0.99, "float")
    targets = ex.get("targets", [])
    tol = ex.get("rel_tol", 0.03, "float")
    ex.finish()
    f = distance_field(g, src, h, stencil)
    f.to_csv(Path(out) / "distance_field.csv")
    rep = ExperimentReport("distance_field", ["check", "params", "lhs", "rhs", "residual", "pass"])
    frac, count = gradient_check(f, g, slack=slack)
    ok = frac >= min_fraction
    rep.add_row("gradient_bound", f"slack={slack:g};nodes={count}", frac, min_fraction, max(0.0, min_fraction - frac), ok)
    rep.checks["gradient_bound"] = ok
    for i, t in enumerate(targets):
        try:
            x, y, want = map(float, t)
        except (TypeError, ValueError):
            raise ConfigError(f"key 'experiment.targets[{i}]' must be [x, y, expected]") from None
        got = f.at(x, y)
        res = abs(got - want) / abs(want)
        rep.add_row("distance", f"x={x:g};y={y:g}", got, want, res, res <= tol)
        rep.checks[f"distance[{i}]"] = res <= tol
    return rep


def _converge(g, ex, h, stencil, threads, out):
    eps = ex.get("eps", [1 / 16, 1 / 32, 1 / 64], "floats")
    pairs = ex.get("pairs")
    tol = ex.get("final_tol", 0.01, "float")
    ex.finish()
    if pairs is not None:
        try:
            pairs = [((float(p[0]), float(p[1])), (float(p[2]), float(p[3]))) for p in pairs]
        except (TypeError, ValueError, IndexError):
            raise ConfigError("key 'experiment.pairs' must list [x0, y0, x1, y1]") from None
    return reshetnyak_experiment(g, eps, pairs, h, stencil, tol, threads)


def _three_circle(g, ex, h, stencil, threads, out):
    c = ex.get("center", (0.0, 0.0), "point")
    L = ex.get("L", 4.0, "float")
    rings = ex.get("rings", 4, "int")
    kappa = ex.get("kappa", required=True, kind="float")
    lam = ex.get("Lambda", None, "float")
    n_theta = ex.get("n_theta", 64, "int")
    exponent = ex.get("expect_exponent", None, "float")
    exp_tol = ex.get("exponent_tol", 0.05, "float")
    ex.finish()
    rep = three_circle_report(g, c, L, rings, kappa, lam, n_theta, threads)
    if exponent is not None:
        got = rep.summary["ring_exponent"]
        rep.checks["ring_exponent"] = abs(got - exponent) <= exp_tol * abs(exponent)
    return rep


def _random_annuli(g, n, rng, h):
    x0, y0, x1, y1 = g.background.extent
    sing = [z for z, _ in singularities(g)]
    out = []
    while len(out) < n:
        c = rng.uniform((x0, y0), (x1, y1))
        s = rng.uniform(8 * h, 0.2)
        t = s + rng.uniform(0.05, 0.25)
        if g.periodic:
            if t > 0.45:
                continue
        else:
            room = min(c[0] - x0, x1 - c[0], c[1] - y0, y1 - c[1])
            if t * 1.03 > room:
                continue
        bad = False
        for z in sing:
            d = float(np.hypot(*g.background.offset(c[0], c[1], z)))
            if d < 8 * h or min(abs(d - s), abs(d - t)) < 0.05 * max(s, 0.05):
                bad = True
        if not bad:
            out.append((Point(float(c[0]), float(c[1])), float(s), float(t)))
    return out


def _gauss_bonnet(g, ex, h, stencil, threads, out):
    n = ex.get("n_annuli", 20, "int")
    seed = ex.get("seed", 0, "int")
    rel_tol = ex.get("rel_tol", 0.01, "float")
    pm_tol = ex.get("point_mass_tol", 0.01, "float")
    ex.finish()
    rng = np.random.default_rng(seed)
    rep = ExperimentReport("gauss_bonnet", ["check", "params", "lhs", "rhs", "residual", "pass"],
                           config={"n_annuli": n, "seed": seed, "rel_tol": rel_tol})
    ok = True
    for c, s, t in _random_annuli(g, n, rng, h):
        r = gb_annulus_check(g, c, s, t, rel_tol)
        rep.add_row("annulus", f"c=({c.x:.6g};{c.y:.6g});s={s:.6g};t={t:.6g}", r.lhs, r.rhs, r.residual, r.passed)
        ok &= r.passed
    rep.checks["annuli"] = ok
    pm_ok = True
    for z, beta in singularities(g):
        want = -2.0 * np.pi * beta
        got = point_mass_detect(g, z, h)
        res = abs(got - want)
        p = res <= pm_tol * max(abs(want), 1e-12)
        pm_ok &= p
        rep.add_row("point_mass", f"z=({z[0]:.6g};{z[1]:.6g})", got, want, res, p)
    rep.checks["point_masses"] = pm_ok
    return rep


def _area(g, ex, h, stencil, threads, out):
    c = ex.get("center", (0.0, 0.0), "point")
    radii = ex.get("radii", [0.2, 0.3, 0.4], "floats")
    tol = ex.get("rel_tol", 0.03, "float")
    expect = ex.get("expect", None, "float")
    ex.finish()
    mu = cached_curvature(g)
    _, minus = jordan_decompose(mu)
    bound = 1.0 + total_variation(minus, Rect(*g.background.extent)) / (2.0 * np.pi)
    rep = ExperimentReport("area", ["R", "area", "ratio", "bound", "pass"],
                           config={"center": list(c), "radii": radii, "rel_tol": tol, "expect": expect})
    ok = True
    for R in radii:
        a = ball_area(g, c, R, h, stencil)
        ratio = a / (np.pi * R * R)
        p = ratio <= bound * (1 + tol)
        if expect is not None:
            p = p and abs(ratio - expect) <= tol * expect
        ok &= p
        rep.add_row(R, a, ratio, bound, p)
    rep.checks["area_ratio"] = ok
    return rep


def _completeness(g, ex, h, stencil, threads, out):
    c = ex.get("center", (0.0, 0.0), "point")
    delta = ex.get("delta", 0.5, "float")
    rs = ex.get("r", None, "floats")
    growth = ex.get("growth", 4.0, "float")
    expect = ex.get("expect", None, "str")
    limit = ex.get("limit", None, "float")
    limit_tol = ex.get("limit_tol", 0.03, "float")
    ex.finish()
    if expect is not None and expect not in ("CONVERGENT", "DIVERGENT"):
        raise ConfigError("key 'experiment.expect' must be CONVERGENT or DIVERGENT")
    rep = completeness_probe(g, c, delta, rs, growth)
    if expect is not None:
        rep.checks["classification"] = rep.summary["classification"] == expect
    if limit is not None:
        rep.checks["limit"] = abs(rep.summary["limit"] - limit) <= limit_tol * abs(limit)
    return rep


def _ghost(g, ex, h, stencil, threads, out):
    c = ex.get("center", (0.0, 0.0), "point")
    rs = ex.get("r", [1 / 32, 1 / 16, 1 / 8, 1 / 4], "floats")
    eps = ex.get("eps", [1 / 16, 1 / 32, 1 / 64], "floats")
    thr = ex.get("threshold", 0.05, "float")
    ex.finish()
    return ghost_probe(g, c, rs, eps, h, stencil, thr, threads=threads)


RUNNERS = {
    "distance-field": _distance_field,
    "converge": _converge,
    "three-circle": _three_circle,
    "gauss-bonnet": _gauss_bonnet,
    "area": _area,
    "completeness": _completeness,
    "ghost": _ghost,
}


def run_scenario(path, out, stencil=None, grid=None, threads=None):
    """Run one scenario file; returns ``(exit_code, report)``."""
    path = Path(path)
    try:
        cfg = tomllib.loads(path.read_text())
    except OSError:
        raise ConfigError(f"cannot read scenario {path.name!r}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"scenario {path.name!r} is not valid TOML: {exc}") from None
    for key in cfg:
        if key not in ("metric", "grid", "experiment", "name"):
            raise ConfigError(f"unknown key '{key}'")
    if "metric" not in cfg:
        raise ConfigError("missing required key 'metric'")
    if "experiment" not in cfg:
        raise ConfigError("missing required key 'experiment'")
    g = load_metric(_Table(cfg["metric"], "metric"), path.parent)
    gt = _Table(cfg.get("grid", {}), "grid")
    h = gt.get("h", None, "float")
    n = gt.get("n", None, "int")
    st = gt.get("stencil", 16, "int")
    gt.finish()
    if grid is not None:
        n, h = grid, None
    if h is None:
        h = 1.0 / (n or 256)
    if stencil is not None:
        st = stencil
    if st not in (8, 16, 32):
        raise ConfigError(f"key 'grid.stencil' must be 8, 16 or 32, got {st}")
    ex = _Table(cfg["experiment"], "experiment")
    kind = ex.get("kind", required=True, kind="str")
    if kind not in RUNNERS:
        raise ConfigError(f"key 'experiment.kind' has unknown value {kind!r}; choose from {', '.join(KINDS)}")
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    rep = RUNNERS[kind](g, ex, h, st, threads, out)
    rep.config.update({"scenario": path.name, "kind": kind, "metric": g.name, "h": h, "stencil": st})
    rep.write(out, stem=kind.replace("-", "_"))
    return (0 if rep.passed else 1), rep


def main(argv=None):
    parser = argparse.ArgumentParser(prog="curvlab", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"curvlab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    pr = sub.add_parser("run", help="run a scenario file")
    pr.add_argument("scenario")
    pr.add_argument("--out", required=True, help="output directory for the CSV/JSON reports")
    pr.add_argument("--stencil", type=int, choices=(8, 16, 32))
    pr.add_argument("--grid", type=int, help="grid resolution N (spacing 1/N)")
    pr.add_argument("--threads", type=int, help="worker threads (default: $CURVLAB_THREADS or 1)")
    sub.add_parser("list", help="list the builtin metrics")
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")

    if args.command == "list":
        print(list_builtins())
        return 0
    threads = args.threads
    if threads is None and os.environ.get("CURVLAB_THREADS"):
        try:
            threads = int(os.environ["CURVLAB_THREADS"])
        except ValueError:
            print("error: CURVLAB_THREADS must be an integer", file=sys.stderr)
            return 2
    name = Path(args.scenario).name
    try:
        code, rep = run_scenario(args.scenario, args.out, args.stencil, args.grid, threads)
    except ConfigError as exc:
        print(f"config error in {name}: {exc}", file=sys.stderr)
        return 2
    except (CurvlabError, ValueError) as exc:
        print(f"error in {name}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    print(rep)
    print(f"{name}: {'PASS' if code == 0 else 'FAIL'}")
    return code


if __name__ == "__main__":
    sys.exit(main())
