import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from curvlab.errors import CurveTooShort, SegmentOutOfDomain, SourceOutOfDomain
from curvlab.geodesic import (
    GridGraph, annulus_distance, ball_area, build_a_string, circle_length, curve_length, diameter,
    distance, distance_field, edge_weight, gradient_check, line_integral, string_estimate,
)
from curvlab.measure import Disk, Point, Rect
from curvlab.metric import Background, ConformalMetric, cone, flat

H = 1.0 / 256
COARSE = 1.0 / 64


def radial(beta, r):
    return r ** (1 + beta) / (1 + beta)


def test_edge_weight_examples():
    big = flat(Background("plane", (-5, -5, 5, 5)))
    assert edge_weight(big, (0, 0), (3, 4)) == pytest.approx(5.0, rel=1e-12)
    assert edge_weight(cone(0.3), (0, 0), (0.5, 0)) == pytest.approx(radial(0.3, 0.5), rel=1e-10)
    assert edge_weight(flat(c=0.4), (0.1, 0.2), (0.5, -0.1)) == pytest.approx(np.exp(0.4) * 0.5, rel=1e-12)


def test_edge_weight_outside_domain():
    with pytest.raises(SegmentOutOfDomain):
        edge_weight(flat(), (0.5, 0), (1.5, 0))


@given(st.floats(-0.9, 0.9), st.floats(0.01, 0.5), st.floats(0.0, 2 * np.pi))
def test_line_integral_through_cone_apex(beta, s, ang):
    # segment crossing the apex: two radial pieces
    g = cone(beta)
    e = np.array([np.cos(ang), np.sin(ang)])
    p, q = -0.5 * s * e, s * e
    want = radial(beta, 0.5 * s) + radial(beta, s)
    assert line_integral(g, p, q) == pytest.approx(want, rel=1e-8)


def test_line_integral_near_apex_matches_adaptive_quadrature():
    from scipy import integrate
    g = cone(-0.6)
    p, q = np.array([-0.3, 1e-3]), np.array([0.4, 1e-3])
    f = lambda t: float(np.exp(g.u_raw(*(p + t * (q - p)))))
    want, _ = integrate.quad(f, 0, 1, points=[3 / 7], limit=400, epsrel=1e-12)
    assert line_integral(g, p, q) == pytest.approx(want * 0.7, rel=1e-6)


@pytest.mark.parametrize("beta", [-0.5, 0.3, 0.9])
def test_cone_distance_from_apex(beta):
    field = distance_field(cone(beta), (0, 0), H)
    assert field.at(0.5, 0.0) == pytest.approx(radial(beta, 0.5), rel=0.03)
    assert field.at(0.0, 0.0) == 0.0


def test_flat_unit_square_diagonal():
    g = flat(Background("plane", (0, 0, 1, 1)))
    assert distance(g, (0, 0), (1, 1), COARSE) == pytest.approx(np.sqrt(2), rel=0.03)


def test_torus_wraparound():
    g = flat(Background.torus())
    assert distance(g, (0, 0), (0.5, 0.5), COARSE) == pytest.approx(np.sqrt(2) / 2, rel=0.03)
    assert distance(g, (0.05, 0.5), (0.95, 0.5), COARSE) == pytest.approx(0.1, rel=1e-9)


def test_distance_self_and_source_errors():
    g = flat()
    assert distance(g, (0.1, 0.2), (0.1, 0.2), COARSE) == 0.0
    with pytest.raises(SourceOutOfDomain):
        distance_field(g, (2.0, 0.0), COARSE)


def test_off_lattice_source_attaches():
    g = flat()
    f = distance_field(g, (0.0013, -0.0021), COARSE)
    assert f.at(0.5, 0.3) == pytest.approx(np.hypot(0.5 - 0.0013, 0.3 + 0.0021), rel=0.03)


@settings(max_examples=10)
@given(st.integers(0, 2**20))
def test_symmetry_random_pairs(seed):
    g = cone(0.3)
    rng = np.random.default_rng(seed)
    x, y = rng.uniform(-0.7, 0.7, (2, 2))
    dxy = distance(g, x, y, COARSE)
    dyx = distance(g, y, x, COARSE)
    assert dxy == pytest.approx(dyx, rel=0.01, abs=COARSE * 0.05)


def test_triangle_inequality():
    g = cone(-0.3, center=(0.1, 0.05))
    gr = GridGraph.for_metric(g, COARSE)
    rng = np.random.default_rng(1)
    pts = rng.uniform(-0.8, 0.8, (12, 2))
    fields = [distance_field(g, p, graph=gr) for p in pts]
    tol = 2 * COARSE
    for _ in range(50):
        i, j, k = rng.choice(12, 3, replace=False)
        xz = fields[i].at(*pts[k])
        xy = fields[i].at(*pts[j])
        yz = fields[j].at(*pts[k])
        assert xz <= xy + yz + tol


def test_field_edge_lipschitz():
    g = cone(0.3, center=(0.2, 0.1))
    f = distance_field(g, (-0.3, -0.2), COARSE)
    A = f.graph.matrix.tocoo()
    d = f.values
    assert np.all(np.abs(d[A.row] - d[A.col]) <= A.data + 1e-12)
    assert np.all(d >= 0)


def test_refinement_approaches_oracle():
    g = cone(0.3)
    target = (0.3, 0.4)
    want = radial(0.3, 0.5)
    vals = [distance_field(g, (0, 0), h).at(*target) for h in (1 / 64, 1 / 128, 1 / 256)]
    assert all(v >= want * (1 - 1e-6) for v in vals)
    assert vals[-1] <= vals[0] + 1e-9
    assert vals[-1] == pytest.approx(want, rel=0.03)


def test_domain_monotonicity_and_locality():
    g = cone(0.02, center=(0.05, 0.0))
    gr = GridGraph.for_metric(g, COARSE)
    full = distance_field(g, (0.0, 0.0), graph=gr)
    big = gr.region_mask(Disk(Point(0, 0), 0.8))
    small = gr.region_mask(Disk(Point(0, 0), 0.3))
    seeds = gr.seeds_for((0.0, 0.0))
    d_big = gr.shortest(seeds, mask=big)
    d_small = gr.shortest(seeds, mask=small)
    inner = gr.region_mask(Disk(Point(0, 0), 0.15))
    assert np.all(d_small[small] >= full.values[small] - 1e-12)
    assert np.allclose(d_big[inner], full.values[inner], rtol=1e-3)
    assert np.allclose(d_small[inner], full.values[inner], rtol=0.01)


def test_curve_length_examples():
    g = cone(0.3)
    assert curve_length(g, []) == 0.0
    assert curve_length(g, [(0, 0), (0.5, 0)]) == pytest.approx(edge_weight(g, (0, 0), (0.5, 0)))
    r = 0.3
    th = 2 * np.pi * np.arange(257) / 256
    poly = list(zip(r * np.cos(th), r * np.sin(th)))
    assert curve_length(g, poly) == pytest.approx(2 * np.pi * r**1.3, rel=0.005)


def test_circle_length_examples():
    assert circle_length(cone(-0.5), (0, 0), 0.25) == pytest.approx(np.pi, abs=1e-4)
    assert circle_length(flat(), (0.2, 0.1), 0.3) == pytest.approx(2 * np.pi * 0.3)
    lengths = [circle_length(cone(-0.9), (0, 0), 2.0**-k) for k in range(1, 12)]
    assert all(b < a for a, b in zip(lengths, lengths[1:]))


def test_annulus_distance_examples():
    assert annulus_distance(flat(), Disk(Point(0, 0), 0.2), Disk(Point(0, 0), 0.4), COARSE) == pytest.approx(0.2, rel=0.03)
    beta = -0.4
    d = annulus_distance(cone(beta), Disk(Point(0, 0), 0.1), Disk(Point(0, 0), 0.5), COARSE)
    assert d == pytest.approx(radial(beta, 0.5) - radial(beta, 0.1), rel=0.03)
    D = Disk(Point(0, 0), 0.3)
    assert annulus_distance(flat(), D, D) == 0.0


def test_ball_area():
    assert ball_area(flat(), (0, 0), 0.4) / (np.pi * 0.16) == pytest.approx(1.0, rel=0.03)
    assert ball_area(cone(0.3), (0, 0), 0.3) / (np.pi * 0.09) == pytest.approx(1.3, rel=0.03)
    with pytest.raises(SourceOutOfDomain):
        ball_area(flat(), (0, 0), 1.5, COARSE)


def test_ball_area_constant_scaling():
    # u = c rescales lengths and areas together: the ratio stays 1
    g = flat(c=0.2)
    R = 0.05
    assert ball_area(g, (0.1, 0.1), R) / (np.pi * R * R) == pytest.approx(1.0, rel=0.05)


def test_diameter_examples():
    lo, hi = diameter(flat(), Rect(0, 0, 1, 1), h=COARSE)
    assert lo >= 1.35 and lo <= np.sqrt(2) * 1.03
    assert hi == pytest.approx(2 * 0.5 + 4.0, rel=0.03)
    R = 0.3
    lo, hi = diameter(cone(0.3), Disk(Point(0, 0), R), h=COARSE)
    assert lo <= 2 * radial(0.3, R) + circle_length(cone(0.3), (0, 0), R)
    assert lo <= hi
    assert diameter(flat(), Disk(Point(0.0, 0.0), 1e-4), h=COARSE) == (0.0, 0.0)


def test_a_string_segment_hand_trace():
    s = build_a_string([(0, 0), (1, 0)], 0.3)
    xs = [p.x for p in s.points]
    assert xs == pytest.approx([0.0, 0.3, 0.6, 1.0])
    gaps = s.gaps()
    assert all(0.3 - 1e-12 <= d <= 0.6 + 1e-12 for d in gaps)


def test_a_string_circle_hand_trace():
    r = 1 / (2 * np.pi)
    th = 2 * np.pi * np.arange(1025) / 1024
    circ = list(zip(r * np.cos(th), r * np.sin(th)))
    s = build_a_string(circ, 0.26)
    assert len(s.points) == 4
    assert all(0.26 - 1e-9 <= d <= 0.52 + 1e-9 for d in s.gaps())


def test_a_string_too_short():
    with pytest.raises(CurveTooShort):
        build_a_string([(0, 0), (0.1, 0)], 0.3)


@given(st.floats(0.05, 0.3), st.integers(3, 12), st.integers(0, 2**16))
def test_a_string_gap_invariant(a, n, seed):
    rng = np.random.default_rng(seed)
    pts = np.cumsum(rng.uniform(0.05, 0.4, (n, 2)) * rng.choice([-1, 1], (n, 2)), axis=0)
    total = np.sum(np.hypot(*np.diff(pts, axis=0).T))
    if total <= 2 * a or np.hypot(*(pts[-1] - pts[0])) < 1e-6:
        return
    try:
        s = build_a_string(pts, a)
    except CurveTooShort:
        return
    gaps = s.gaps()
    assert all(a - 1e-9 <= d <= 2 * a + 1e-9 for d in gaps[:-1])
    assert gaps[-1] <= 2 * a + 1e-9


def test_string_estimate_examples():
    g = flat(c=0.3)
    s = build_a_string([(0, 0), (0.5, 0.2)], 0.05)
    assert string_estimate(g, s, 0.01) == pytest.approx(np.exp(0.3) * np.hypot(0.5, 0.2), rel=1e-9)
    from curvlab.geodesic import AString
    assert string_estimate(g, AString([], 0.1), 0.01) == 0.0
    gc = cone(0.3)
    s = build_a_string([(0.1, 0.0), (0.7, 0.0)], 1 / 32)
    est = string_estimate(gc, s, 1 / 64)
    assert est == pytest.approx(distance(gc, (0.1, 0.0), (0.7, 0.0)), rel=0.05)


def test_gradient_bound_on_cone():
    g = cone(0.3)
    f = distance_field(g, (0.3, 0.2), COARSE)
    frac, count = gradient_check(f, g)
    assert count > 1000 and frac >= 0.99


def test_predecessor_path_is_consistent():
    g = cone(-0.3)
    f = distance_field(g, (0.5, 0.5), COARSE, predecessors=True)
    path = f.path_to(-0.5, -0.4)
    assert path[0] == Point(0.5, 0.5)
    # lattice edges use fixed-order quadrature, curve_length is adaptive
    assert curve_length(g, path) == pytest.approx(f.at(-0.5, -0.4), rel=0.01)


def test_csv_export(tmp_path):
    f = distance_field(flat(), (0.0, 0.0), 1 / 8)
    out = tmp_path / "d.csv"
    f.to_csv(out)
    lines = out.read_text().splitlines()
    assert lines[0] == "x,y,value" and len(lines) == 1 + 17 * 17
    import json
    side = json.loads((tmp_path / "d.csv.json").read_text())
    assert side["h"] == 1 / 8 and side["stencil"] == 16


def test_torus_path_is_lifted_across_the_seam():
    g = flat(Background.torus())
    f = distance_field(g, (0.05, 0.5), COARSE, predecessors=True)
    path = f.path_to(0.95, 0.5)
    steps = np.hypot(*np.diff(np.array(path), axis=0).T)
    assert steps.max() < 2 * COARSE
    # the path ends at the node nearest (0.95, 0.5)
    end = f.graph.nearest_node(0.95, 0.5)
    assert curve_length(g, path) == pytest.approx(f.values[end], rel=1e-9)
