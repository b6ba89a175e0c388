"""End-to-end acceptance checks at the default resolution (h = 1/256, 16-stencil).

Each test prints one ``CRITERION <n> PASS|FAIL`` line with its measured
numbers, then asserts. Run ``pytest tests/test_acceptance.py -v`` to see them.
"""

import numpy as np
import pytest

from curvlab import catalog
from curvlab.approx import cone_split, ghost_probe, reshetnyak_experiment
from curvlab.cli import main
from curvlab.curvature import Bump, gb_annulus_check, point_mass_detect, weak_laplacian_check
from curvlab.cylinder import completeness_probe, three_circle_report
from curvlab.errors import AtomOnCircle
from curvlab.geodesic import (
    GridGraph, ball_area, build_a_string, circle_length, distance_field, gradient_check, string_estimate,
)
from curvlab.measure import Disk, Point, Rect, jordan_decompose, total_variation
from curvlab.metric import ConformalMetric, cone, curvature_of, disk_mean, flat

from pathlib import Path

H = 1.0 / 256
SCEN = Path(__file__).resolve().parent.parent / "scenarios"
BUILTINS = ["cone", "cone-probe", "flat", "multicone", "hulin-troyanov", "abs-line", "torus-dipole"]


@pytest.fixture
def verdict(capsys):
    def emit(n, ok, detail):
        with capsys.disabled():
            print(f"\nCRITERION {n:>2} {'PASS' if ok else 'FAIL'}: {detail}")
        assert ok, detail
    return emit


def radial(beta, r):
    return r ** (1 + beta) / (1 + beta)


def test_01_cone_radial_distance(verdict):
    rows = []
    ok = True
    for beta in (-0.5, 0.3, 0.9):
        d = distance_field(cone(beta), (0, 0), H).at(0.5, 0.0)
        want = radial(beta, 0.5)
        err = d / want - 1
        ok &= abs(err) <= 0.03
        rows.append(f"beta={beta:+.1f} d={d:.5f} want={want:.5f} err={err:+.2%}")
    ok &= abs(radial(0.3, 0.5) - 0.31240) < 5e-6
    verdict(1, ok, "; ".join(rows))


def test_02_distance_comparison(verdict):
    beta = 0.02
    g = cone(beta)
    field = distance_field(g, (0, 0), H)
    lo, hi = np.exp(-0.05), np.exp(0.05)
    ratios = []
    for k, r in enumerate(np.linspace(0.08, 0.9, 10)):
        ang = 0.37 * k
        x = (r * np.cos(ang), r * np.sin(ang))
        ratios.append(field.at(*x) / (r * np.exp(disk_mean(g, (0, 0), r))))
    ratios = np.array(ratios)
    ok = bool(np.all((ratios >= lo) & (ratios <= hi)))
    verdict(2, ok, f"ratios in [{ratios.min():.5f}, {ratios.max():.5f}] (closed form "
                   f"{np.exp(beta / 2) / (1 + beta):.5f}), window [{lo:.5f}, {hi:.5f}]")


def _random_annuli(g, rng, n=20):
    x0, y0, x1, y1 = g.background.extent
    out = []
    while len(out) < n:
        c = rng.uniform((x0, y0), (x1, y1))
        s = rng.uniform(8 * H, 0.2)
        t = s + rng.uniform(0.05, 0.25)
        if g.periodic:
            if t > 0.45:
                continue
        elif t * 1.03 > min(c[0] - x0, x1 - c[0], c[1] - y0, y1 - c[1]):
            continue
        try:
            out.append(gb_annulus_check(g, tuple(c), s, t))
        except AtomOnCircle:
            continue
    return out


def test_03_gauss_bonnet(verdict):
    parts = []
    ok = True
    for beta in (-0.9, -0.5, 0.3, 0.9):
        got = point_mass_detect(cone(beta), (0, 0), H)
        want = -2 * np.pi * beta
        err = got / want - 1
        ok &= abs(err) <= 0.01
        parts.append(f"beta={beta:+.1f}: {err:+.2e}")
    rng = np.random.default_rng(2024)
    worst = 0.0
    for name in BUILTINS:
        checks = _random_annuli(catalog.build(name), rng)
        ok &= all(c.passed for c in checks)
        worst = max(worst, max(c.residual for c in checks))
    verdict(3, ok, "point-mass rel. errors " + ", ".join(parts)
            + f"; 20 annuli x {len(BUILTINS)} builtins, worst residual {worst:.2e}")


def test_04_weak_identity(verdict):
    ok = True
    worst_atom = 0.0
    for beta, z, c, rho in [(0.3, (0.0, 0.0), (0.05, -0.02), 0.4), (-0.6, (0.1, 0.2), (0.0, 0.1), 0.3),
                            (0.9, (-0.3, 0.1), (-0.25, 0.0), 0.35)]:
        phi = Bump(c, rho)
        chk = weak_laplacian_check(cone(beta, center=z), phi)
        rel = chk.residual / (2 * np.pi * abs(beta) * phi.max_abs)
        worst_atom = max(worst_atom, rel)
    ok &= worst_atom <= 0.01
    g = catalog.build("abs-line")
    worst_line = 0.0
    for c, rho in [((0.0, 0.0), 0.35), ((0.1, 0.2), 0.3), ((-0.15, -0.3), 0.4)]:
        phi = Bump(c, rho)
        chord = 2 * np.sqrt(rho**2 - c[0] ** 2)
        mass = 2.0 * chord  # |K| carried by the line inside supp(phi)
        chk = weak_laplacian_check(g, phi)
        worst_line = max(worst_line, chk.residual / (mass * phi.max_abs))
    ok &= worst_line <= 0.02
    verdict(4, ok, f"atoms worst residual/(|m| max|phi|) = {worst_atom:.2e}; "
                   f"abs-line worst = {worst_line:.2e}")


@pytest.mark.slow
@pytest.mark.parametrize("name", ["cone", "torus-dipole"])
def test_05_reshetnyak_convergence(verdict, name):
    g = catalog.build(name)
    rep = reshetnyak_experiment(g, [1 / 16, 1 / 32, 1 / 64], h=H, final_tol=0.01, threads=2)
    sups = rep.column("sup_err")
    npairs = len(rep.config["pairs"])
    ok = rep.passed and npairs >= 10
    verdict(5, ok, f"{name}: sup_err = " + ", ".join(f"{s:.2e}" for s in sups) + f" over {npairs} pairs")


def test_06_three_circle(verdict):
    rep = three_circle_report(cone(-0.5), (0, 0), 4.0, 4, 0.2)
    expo = rep.summary["ring_exponent"]
    ok = rep.passed and abs(expo / -0.5 - 1) <= 0.05
    fails = sum(1 for r in rep.rows if not r[-1])
    verdict(6, ok, f"{len(rep.rows)} inequality rows, {fails} failing; exponent {expo:.5f} (want -0.5); "
                   f"Lambda measured {rep.summary['Lambda_measured']:.4f}")


def test_07_completeness(verdict):
    delta = 0.5
    c15 = completeness_probe(cone(-0.75), (0, 0), delta).summary
    want15 = radial(-0.75, delta)
    c3 = completeness_probe(ConformalMetric.probe(atoms=(((0.0, 0.0), -1.5),)), (0, 0), delta).summary
    ht15 = completeness_probe(catalog.build("hulin-troyanov", a=1.5), (0, 0), delta).summary
    ht05 = completeness_probe(catalog.build("hulin-troyanov", a=0.5), (0, 0), delta).summary
    ok = (c15["classification"] == "CONVERGENT" and abs(c15["limit"] / want15 - 1) <= 0.03
          and c3["classification"] == "DIVERGENT"
          and ht15["classification"] == "CONVERGENT" and abs(ht15["limit"] / 2.402 - 1) <= 0.05
          and ht05["classification"] == "DIVERGENT")
    verdict(7, ok, f"m=1.5pi {c15['classification']} limit {c15['limit']:.5f} (want {want15:.5f}); "
                   f"m=3pi {c3['classification']}; HT a=1.5 {ht15['classification']} limit {ht15['limit']:.5f}; "
                   f"HT a=0.5 {ht05['classification']}")


def test_08_area_comparison(verdict):
    g = cone(0.3)
    _, minus = jordan_decompose(curvature_of(g))
    bound = 1 + total_variation(minus, Rect(-1, -1, 1, 1)) / (2 * np.pi)
    cone_ratios = [ball_area(g, (0, 0), R) / (np.pi * R * R) for R in (0.2, 0.3, 0.4)]
    flat_ratios = [ball_area(flat(), (0, 0), R) / (np.pi * R * R) for R in (0.2, 0.3, 0.4)]
    ok = (all(abs(r / 1.3 - 1) <= 0.03 for r in cone_ratios)
          and all(abs(r - 1) <= 0.03 for r in flat_ratios)
          and abs(bound - 1.3) < 1e-9 and all(r <= bound * 1.03 for r in cone_ratios))
    verdict(8, ok, "cone " + ", ".join(f"{r:.4f}" for r in cone_ratios) + f" (bound {bound:.4f}); flat "
            + ", ".join(f"{r:.4f}" for r in flat_ratios))


def test_09_gradient_bound(verdict):
    parts = []
    ok = True
    for name in BUILTINS:
        g = catalog.build(name)
        frac, count = gradient_check(distance_field(g, (0.3, 0.2), H), g)
        ok &= frac >= 0.99
        parts.append(f"{name} {frac:.4f}")
    verdict(9, ok, "fraction of nodes within e^u(1+5%): " + ", ".join(parts))


def test_10_circle_length_decay(verdict):
    worst = 0.0
    for beta in (-0.9, -0.5, 0.3, 0.9):
        for r in (0.05, 0.2, 0.6):
            want = 2 * np.pi * r ** (1 + beta)
            worst = max(worst, abs(circle_length(cone(beta), (0, 0), r) / want - 1))
    ok = worst <= 0.005
    g = catalog.build("multicone")
    decays = True
    worst_rate = 0.0
    metrics = [(cone(b), (0.0, 0.0), b) for b in (-0.9, -0.5, 0.3, 0.9)]
    metrics += [(g, tuple(a.location), a.beta) for a in g.atoms]
    for m, z, beta in metrics:
        lens = [circle_length(m, z, 2.0**-k) for k in range(2, 22)]
        # strictly decreasing, with the geometric rate 2^-(1+beta) of r^(1+beta) -> 0
        rate = lens[-1] / lens[-2]
        worst_rate = max(worst_rate, abs(rate / 2.0 ** -(1 + beta) - 1))
        decays &= all(b < a for a, b in zip(lens, lens[1:])) and abs(rate / 2.0 ** -(1 + beta) - 1) <= 0.01
    ok &= decays
    verdict(10, ok, f"worst rel. error vs 2 pi r^(1+beta): {worst:.2e}; monotone to 0 along 2^-k: {decays} "
                    f"(worst halving-rate error {worst_rate:.2e})")


def test_11_a_string_estimator(verdict):
    a, r = 1 / 32, 1 / 64
    parts = []
    ok = True
    for name, p, q in [("cone", (-0.6, -0.3), (0.7, 0.4)), ("cone", (0.1, 0.0), (0.7, 0.0)),
                       ("torus-dipole", (0.3, 0.3), (0.7, 0.6)), ("torus-dipole", (0.1, 0.5), (0.45, 0.55))]:
        g = catalog.build(name)
        f = distance_field(g, p, H, predecessors=True)
        path = f.path_to(*q)
        est = string_estimate(g, build_a_string(path, a), r)
        d = f.at(*path[-1])
        err = est / d - 1
        ok &= abs(err) <= 0.05
        parts.append(f"{name} {err:+.2%}")
    verdict(11, ok, "string_estimate vs distance: " + ", ".join(parts))


def test_12_cone_splitting(verdict):
    delta, k = 0.25, 10
    g0 = catalog.build("cone-probe", beta=-1.0)
    g = cone_split(g0, 0, delta, k)
    pm = point_mass_detect(g, (0, 0), H)
    pm_ok = abs(pm / (2 * np.pi * 0.9) - 1) <= 0.01
    gr = GridGraph.for_metric(g0, H)
    X, Y = gr.lattice_x, gr.lattice_y
    out = np.hypot(X, Y) > 2 * delta
    same = np.array_equal(g.u_raw(X[out], Y[out]), g0.u_raw(X[out], Y[out]))
    worst = -np.inf
    for p, q in [((0.6, 0.1), (-0.5, -0.2)), ((0.3, 0.3), (-0.3, -0.3)), ((0.1, -0.6), (-0.1, 0.7))]:
        d0 = distance_field(g0, p, H).at(*q)
        d1 = distance_field(g, p, H).at(*q)
        worst = max(worst, d1 - d0)
    dist_ok = worst <= 2 * H
    verdict(12, pm_ok and same and dist_ok,
            f"point mass {pm:.5f} (want {2 * np.pi * 0.9:.5f}); bit-identical outside D_2delta: {same}; "
            f"max d_split - d_orig = {worst:.2e} (tol {2 * H:.2e})")


@pytest.mark.slow
def test_13_ghost_probe(verdict):
    rep = ghost_probe(cone(0.3), (0, 0), [1 / 32, 1 / 16, 1 / 8, 1 / 4], [1 / 16, 1 / 32, 1 / 64], h=H,
                      threshold=0.05, threads=2)
    col = [row[2] for row in rep.rows if row[1] == 1 / 64]
    verdict(13, rep.passed, "diam at eps=1/64: " + ", ".join(f"{d:.4f}" for d in col)
            + f"; corner {col[0]:.4f} < 0.05")


def test_14_determinism(verdict, tmp_path):
    same = True
    for scen, stem in [("cone_three_circle.toml", "three_circle"), ("multicone_gauss_bonnet.toml", "gauss_bonnet"),
                       ("ht_completeness.toml", "completeness")]:
        a, b = tmp_path / f"{stem}_a", tmp_path / f"{stem}_b"
        main(["run", str(SCEN / scen), "--out", str(a), "--threads", "1"])
        main(["run", str(SCEN / scen), "--out", str(b), "--threads", "4"])
        same &= (a / f"{stem}.csv").read_bytes() == (b / f"{stem}.csv").read_bytes()
    verdict(14, same, "three-circle, gauss-bonnet and completeness CSVs byte-identical across runs/thread counts")
