import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from curvlab import _kernels as K
from curvlab import catalog
from curvlab.approx import (
    cone_split, default_pairs, ghost_probe, mollify_jordan, mollify_measure, mollify_metric,
    reshetnyak_experiment,
)
from curvlab.curvature import Bump, point_mass_detect
from curvlab.errors import NotBorderlineAtom
from curvlab.geodesic import GridGraph, distance_field, line_integral
from curvlab.measure import (
    Atom, DensityField, LineMass, Point, Rect, SignedMeasure, integrate_test, jordan_decompose,
    total_variation,
)
from curvlab.metric import ConformalMetric, cone, flat

BIG = Rect(-5, -5, 5, 5)


def mixed_measure():
    s = np.linspace(-0.5, 0.5, 65)
    X, Y = np.meshgrid(s, s)
    dens = DensityField(np.sin(4 * X) * np.cos(3 * Y), 1 / 64, Point(-0.5, -0.5))
    return SignedMeasure(
        atoms=(Atom(Point(0.2, 0.1), 1.5), Atom(Point(-0.3, 0.2), -0.7)),
        density=dens,
        lines=(LineMass(((0.0, -0.4), (0.0, 0.4)), -0.5),),
    )


def test_atom_becomes_radial_density_of_same_mass():
    mu = SignedMeasure.from_atoms({(0.1, -0.2): 2.5})
    out = mollify_measure(mu, 0.1)
    assert not out.atoms and not out.lines
    assert out.total_mass() == pytest.approx(2.5, abs=1e-8)
    X, Y = out.density.coords()
    r = np.hypot(X - 0.1, Y + 0.2)
    assert np.all(out.density.values[r > 0.1 + 1e-12] == 0)


def test_zero_measure():
    out = mollify_measure(SignedMeasure(), 0.1)
    assert out.is_zero()


def test_jordan_parts_nonnegative_and_mass_conserved():
    mu = mixed_measure()
    f1, f2 = mollify_jordan(mu, 1 / 16)
    plus, minus = jordan_decompose(mu)
    assert np.all(f1.density.values >= 0) and np.all(f2.density.values >= 0)
    assert abs(total_variation(f1, BIG) - total_variation(plus, BIG)) <= 1e-8
    assert abs(total_variation(f2, BIG) - total_variation(minus, BIG)) <= 1e-8


def test_eps_below_twice_spacing_rejected():
    with pytest.raises(ValueError):
        mollify_measure(mixed_measure(), 1 / 64)


@settings(max_examples=15)
@given(st.lists(st.tuples(st.floats(-0.8, 0.8), st.floats(-0.8, 0.8), st.floats(-3, 3).filter(lambda m: abs(m) > 1e-3)),
                min_size=1, max_size=4, unique_by=lambda t: (t[0], t[1])),
       st.sampled_from([0.05, 0.1, 0.2]))
def test_mass_conservation_property(atoms, eps):
    mu = SignedMeasure.from_atoms({(x, y): m for x, y, m in atoms})
    f1, f2 = mollify_jordan(mu, eps)
    plus, minus = jordan_decompose(mu)
    for f, p in ((f1, plus), (f2, minus)):
        got = 0.0 if f.density is None else total_variation(f, BIG)
        assert abs(got - total_variation(p, BIG)) <= 1e-8


def _max_grad(phi):
    s = np.linspace(-1, 1, 801)
    X, Y = np.meshgrid(s, s)
    gx, gy = phi.grad(X, Y)
    return float(np.hypot(gx, gy).max())


def test_weak_convergence_gap_bound_on_bumps():
    mu = mixed_measure()
    tv = total_variation(mu, BIG)
    rng = np.random.default_rng(3)
    bumps = [Bump(rng.uniform(-0.3, 0.3, 2), rng.uniform(0.2, 0.5)) for _ in range(5)]
    for eps in (1 / 8, 1 / 16, 1 / 32):
        out = mollify_measure(mu, eps)
        for phi in bumps:
            gap = abs(integrate_test(out, phi) - integrate_test(mu, phi))
            assert gap <= eps * _max_grad(phi) * tv


def test_weak_convergence_is_linear_in_eps_or_better():
    mu = SignedMeasure.from_atoms({(0.0, 0.0): 1.0})
    phi = lambda x, y: np.asarray(x) + 0.5  # Lipschitz, linear: the radial bump is exact
    for eps in (0.2, 0.1):
        assert integrate_test(mollify_measure(mu, eps), phi) == pytest.approx(0.5, abs=1e-10)


def test_mollify_metric_unchanged_outside_eps_disks():
    g = catalog.build("multicone")
    eps = 1 / 16
    m = mollify_metric(g, eps)
    assert m.atoms == ()
    rng = np.random.default_rng(0)
    pts = rng.uniform(-0.95, 0.95, (400, 2))
    far = np.all([np.hypot(*(pts - a.location).T) > eps for a in g.atoms], axis=0)
    assert np.max(np.abs(m.eval_u(pts[far, 0], pts[far, 1]) - g.eval_u(pts[far, 0], pts[far, 1]))) <= 1e-8


@pytest.mark.parametrize("beta", [-0.6, 0.3])
def test_mollify_metric_centre_value(beta):
    eps = 1 / 32
    m = mollify_metric(cone(beta), eps)
    assert m.eval_u(0.0, 0.0) == pytest.approx(beta * (np.log(eps) - 25 / 24), rel=1e-12)


def test_mollify_metric_centre_value_matches_quadrature():
    eps = 0.1
    want, _ = integrate.quad(lambda s: np.log(s) * K.bump(s, eps) * 2 * np.pi * s, 0, eps)
    assert mollify_metric(cone(1.0), eps).eval_u(0.0, 0.0) == pytest.approx(want, rel=1e-8)


def test_mollify_metric_smooth_is_unchanged():
    g = flat(c=0.3)
    assert mollify_metric(g, 1 / 16) .eval_u(0.2, 0.1) == pytest.approx(0.3, abs=1e-12)


def test_mollify_metric_abs_line_convolved():
    # the bump has zero first moment, so away from the crease |x| is reproduced exactly
    m = mollify_metric(catalog.build("abs-line"), 1 / 16)
    assert m.eval_u(0.5, 0.2) == pytest.approx(0.5, abs=1e-9)
    assert 0 < m.eval_u(0.0, 0.2) < 1 / 16


@pytest.mark.parametrize("beta", [-0.5, 0.3])
def test_mollified_radial_distance_matches_radial_oracle(beta):
    eps = 1 / 16
    m = mollify_metric(cone(beta), eps)
    got = line_integral(m, (0, 0), (0.5, 0))
    want, _ = integrate.quad(lambda s: np.exp(beta * K.mollified_log(np.array([s]), eps)[0]), 0, 0.5,
                             points=[eps], epsabs=1e-13)
    orig = 0.5 ** (1 + beta) / (1 + beta)
    assert got == pytest.approx(want, rel=1e-4)
    # beta > 0: log is subharmonic, so averaging raises u; beta < 0 lowers it
    assert (got >= orig) if beta > 0 else (got <= orig)


def borderline(k_center=(0.0, 0.0)):
    return ConformalMetric.probe(atoms=((k_center, -1.0),), name="m=2pi")


def test_cone_split_point_mass():
    g = cone_split(borderline(), 0, 0.25, 10)
    assert point_mass_detect(g, (0, 0)) == pytest.approx(2 * np.pi * 0.9, rel=0.01)


def test_cone_split_unchanged_outside_and_monotone():
    g0 = borderline()
    delta = 0.2
    g = cone_split(g0, 0, delta, 4)
    rng = np.random.default_rng(5)
    pts = rng.uniform(-1, 1, (2000, 2))
    r = np.hypot(*pts.T)
    out = r > 2 * delta
    assert np.array_equal(g.u_raw(pts[out, 0], pts[out, 1]), g0.u_raw(pts[out, 0], pts[out, 1]))
    inn = (r > 1e-6) & ~out
    assert np.all(g.u_raw(pts[inn, 0], pts[inn, 1]) <= g0.u_raw(pts[inn, 0], pts[inn, 1]))


def test_cone_split_errors():
    with pytest.raises(NotBorderlineAtom):
        cone_split(cone(0.3), 0, 0.2, 10)
    with pytest.raises(ValueError):
        cone_split(borderline(), 0, 0.6, 10)
    with pytest.raises(ValueError):
        cone_split(borderline((0.8, 0.0)), 0, 0.2, 10)


def test_cone_split_distance_does_not_grow():
    g0 = borderline()
    g = cone_split(g0, 0, 0.25, 10)
    h = 1 / 64
    for p, q in [((0.6, 0.1), (-0.5, -0.2)), ((0.3, 0.3), (-0.3, -0.3))]:
        d0 = distance_field(g0, p, h).at(*q)
        d1 = distance_field(g, p, h).at(*q)
        assert d1 <= d0 + h


def test_default_pairs_deterministic():
    g = catalog.build("cone")
    a, b = default_pairs(g), default_pairs(g)
    assert a == b and len(a) == 10


def test_reshetnyak_flat_is_exact():
    rep = reshetnyak_experiment(flat(), [1 / 8, 1 / 16, 1 / 32], h=1 / 64)
    assert max(rep.column("sup_err")) <= 1e-12
    assert rep.columns == ["eps", "sup_err", "mean_err"] and len(rep.rows) == 3


def test_reshetnyak_cone_coarse_trend():
    rep = reshetnyak_experiment(cone(0.3), [1 / 8, 1 / 16, 1 / 32], h=1 / 64)
    sups = rep.column("sup_err")
    assert sups[0] > sups[1] > sups[2]
    assert rep.checks["sup_err_decreasing"]


def test_reshetnyak_rejects_bad_schedule():
    with pytest.raises(ValueError):
        reshetnyak_experiment(flat(), [1 / 16, 1 / 8], h=1 / 64)


def test_ghost_probe_table_shape_and_trend():
    rep = ghost_probe(cone(0.3), (0, 0), [0.1, 0.2, 0.4], [1 / 8, 1 / 16], h=1 / 64, n_samples=16)
    assert len(rep.rows) == 6
    assert rep.checks["diam_decreasing_in_r"]
    for r, e, lo, hi in rep.rows:
        assert lo <= hi


def test_ghost_probe_needs_central_atom():
    with pytest.raises(ValueError):
        ghost_probe(cone(0.3), (0.5, 0.5), [0.1], [1 / 8], h=1 / 64)
