import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from hardylab.radial import (CLASSICAL_HARDY, PLAIN_MASS, AngularMode, Grid, RadialProfile,
                             WeightSpec, build_grid, critical_hardy, grid_for, integrate,
                             integrate_adaptive, load_profile_csv, merge_grids, mode_energy,
                             mode_energy_adaptive, sphere_area)
from hardylab.testfunctions import VM, make_family


def power_profile(N, e=1.0, R=1.0, dirichlet=False):
    return RadialProfile(N, R, lambda r: np.asarray(r, float) ** e,
                         lambda r: e * np.asarray(r, float) ** (e - 1), dirichlet)


# ---------------------------------------------------------------- grids


def test_uniform_grid_three_nodes():
    g = build_grid((0, 1), 3)
    assert np.array_equal(g.nodes, [0.0, 0.5, 1.0])


def test_uniform_grid_spacing():
    g = build_grid((1, 41), 4001)
    assert np.allclose(g.spacing, 0.01, rtol=0, atol=1e-14 * 40)


def test_geometric_ratio():
    g = build_grid((0, 1), 100, "geometric", 0.9)
    ratios = g.nodes[:-1] / g.nodes[1:]
    assert np.allclose(ratios, 0.9, rtol=1e-12, atol=0)
    assert g.nodes[0] > 0


def test_geometric_right():
    g = build_grid((0, 1), 50, "geometric", 0.8, toward="right")
    d = 1 - g.nodes
    assert np.allclose(d[1:] / d[:-1], 0.8, rtol=1e-12)


@pytest.mark.parametrize("args", [((1, 1), 3), ((0, 1), 1), ((2, 1), 5)])
def test_grid_errors(args):
    with pytest.raises(ValueError):
        build_grid(*args)


def test_grid_invariants():
    with pytest.raises(ValueError):
        Grid(np.array([0.0, 0.0, 1.0]))
    with pytest.raises(ValueError):
        Grid(np.array([0.5]))
    with pytest.raises(ValueError):
        build_grid((0, 1), 10, "geometric", 1.2)
    with pytest.raises(ValueError):
        Grid(np.array([0.0, 2.0]), interval=(0.0, 1.0))
    g = build_grid((0, 1), 5)
    with pytest.raises(ValueError):
        g.nodes[0] = 3.0


def test_merge_grids():
    g = merge_grids(build_grid((0, 1), 3), build_grid((0, 2), 3))
    assert np.array_equal(g.nodes, [0, 0.5, 1, 2])


@settings(max_examples=60, deadline=None)
@given(lo=st.floats(-1e3, 1e3), width=st.floats(1e-3, 1e3), n=st.integers(2, 5000))
def test_uniform_spacing_property(lo, width, n):
    g = build_grid((lo, lo + width), n)
    h = width / (n - 1)
    # equal spacing relative to the interval length; rounding of lo + k h is
    # bounded by that scale, not by h
    assert np.max(np.abs(g.spacing - h)) <= 1e-14 * max(abs(lo), abs(lo + width), width) * 4
    assert g.nodes[0] == lo and np.all(np.diff(g.nodes) > 0)


# ---------------------------------------------------------------- profiles and weights


def test_sphere_area():
    assert sphere_area(2) == pytest.approx(2 * math.pi, rel=1e-15)
    assert sphere_area(3) == pytest.approx(4 * math.pi, rel=1e-15)


def test_angular_modes():
    assert AngularMode(0, 5).mu == 0
    for N in (2, 3, 4, 7):
        assert AngularMode(1, N).mu == N - 1
    assert AngularMode(0, 2).l2_mass == pytest.approx(2 * math.pi)
    for k in (1, 2, 5):
        assert AngularMode(k, 2).l2_mass == pytest.approx(math.pi, rel=1e-14)
    # k = 1 in N = 3: int x_1^2 dS = 4 pi / 3
    assert AngularMode(1, 3).l2_mass == pytest.approx(4 * math.pi / 3, rel=1e-14)
    with pytest.raises(ValueError):
        AngularMode(-1, 2)


@pytest.mark.parametrize("q", [2.0, 3.0, 4.0, 7.5])
def test_lq_mass_planar(q):
    want = quad(lambda t: abs(math.cos(t)) ** q, 0, 2 * math.pi, limit=200, epsabs=0, epsrel=1e-13)[0]
    assert AngularMode(1, 2).lq_mass(q) == pytest.approx(want, rel=1e-12)


def test_weight_densities():
    r = np.array([0.25, 0.5])
    assert np.allclose(PLAIN_MASS.density(r, 3), r ** 2)
    assert np.allclose(CLASSICAL_HARDY.density(r, 3), np.ones(2))
    w = critical_hardy(math.e)
    assert np.allclose(w.density(r, 2), 1 / (r * np.log(math.e / r) ** 2))
    with pytest.raises(ValueError):
        w.density(r, 3)
    with pytest.raises(ValueError):
        WeightSpec("critical", 0.5)
    with pytest.raises(ValueError):
        WeightSpec("critical", 2.0, 1.5)


def test_log_density_matches_density():
    s = np.linspace(-5, -0.1, 7)
    r = np.exp(s)
    for w, N in ((PLAIN_MASS, 3), (CLASSICAL_HARDY, 4), (critical_hardy(2.0, 3.0), 2)):
        assert np.allclose(w.log_density(s, N), w.density(r, N) * r, rtol=1e-13)


def test_profile_validation():
    g = build_grid((0, 1), 11)
    RadialProfile(2, 1.0, lambda r: 1 - r, lambda r: -1 + 0 * r, True).validate(g)
    with pytest.raises(ValueError, match="Dirichlet"):
        RadialProfile(2, 1.0, lambda r: 2 - r, lambda r: -1 + 0 * r, True).validate(g)
    with pytest.raises(ValueError):
        RadialProfile(2, 1.0, lambda r: 1 / (r - 0.5), lambda r: r, False).validate(g)
    with pytest.raises(ValueError):
        RadialProfile(1, 1.0, lambda r: r, lambda r: r)


def test_from_samples_derivative():
    r = np.linspace(0, 1, 401)
    p = RadialProfile.from_samples(r, r ** 2, 2)
    x = np.array([0.0, 0.3, 1.0])
    assert np.allclose(p.derivative(x), 2 * x, atol=1e-12)
    assert np.allclose(p.value(x), x ** 2, atol=1e-5)


def test_profile_csv(tmp_path):
    f = tmp_path / "p.csv"
    f.write_text("r,value\n0,0\n0.5,0.25\n1,1\n")
    p = load_profile_csv(f, 2)
    assert p.value(np.array([0.5]))[0] == 0.25
    f.write_text("r,value\n0,0\n0.5,0.25\n0.5,1\n")
    with pytest.raises(ValueError, match="duplicate"):
        load_profile_csv(f, 2)
    f.write_text("r,value\n0,0\n0.7,0.25\n0.5,1\n")
    with pytest.raises(ValueError, match="increasing"):
        load_profile_csv(f, 2)
    f.write_text("x,y\n0,0\n")
    with pytest.raises(ValueError, match="header"):
        load_profile_csv(f, 2)


# ---------------------------------------------------------------- integrals


def test_integrate_constant_plain():
    p = RadialProfile(2, 1.0, lambda r: 1 + 0 * r, lambda r: 0 * r)
    assert integrate(p, PLAIN_MASS, build_grid((0, 1), 101)) == pytest.approx(0.5, rel=1e-14)


def test_integrate_hardy_linear():
    assert integrate(power_profile(3), CLASSICAL_HARDY, build_grid((0, 1), 2001)) == \
        pytest.approx(1 / 3, rel=1e-6)


def test_integrate_critical_against_oracle():
    # closed form by L = 1 - log r: 1 - 2e E_2(1) + e^2 E_2(2)
    want = 0.470037490869942979
    p = RadialProfile(2, 1.0, lambda r: 1 - r, lambda r: -1 + 0 * r, True)
    w = critical_hardy(math.e)
    assert integrate_adaptive(p, w) == pytest.approx(want, rel=1e-12)
    g = merge_grids(build_grid((0, 1), 2), grid_for(p, count=16001, r_min=1e-2))
    v, err = integrate(p, w, g, full_output=True)
    assert abs(v - want) < 1e-8
    assert err == pytest.approx(abs(v - want), rel=0.2)


@pytest.mark.parametrize("e,N,mass,energy", [
    (-1.0, 3, 1.0, math.inf), (-0.5, 2, 1.0, math.inf), (-2.0, 3, math.inf, math.inf),
    (-1.0, 2, math.inf, math.inf), (0.5, 2, 1 / 3, 0.25),
])
def test_adaptive_reports_divergence_as_inf(e, N, mass, energy):
    # int_0^1 r^(2e + N - 1) dr and int_0^1 e^2 r^(2e + N - 3) dr
    p = power_profile(N, e)
    assert integrate_adaptive(p, PLAIN_MASS) == pytest.approx(mass, rel=1e-12)
    assert mode_energy_adaptive(p, AngularMode(0, N)) == pytest.approx(energy, rel=1e-12)


def test_adaptive_divergent_tail_at_infinity():
    p = RadialProfile(3, math.inf, lambda r: 1 / (1 + r), lambda r: -1 / (1 + r) ** 2)
    assert integrate_adaptive(p, PLAIN_MASS) == math.inf
    assert mode_energy_adaptive(p, AngularMode(0, 3)) == pytest.approx(1 / 3, rel=1e-10)


def test_mode_energy_examples():
    g = build_grid((0, 1), 2001)
    assert mode_energy(power_profile(2), AngularMode(1, 2), g) == pytest.approx(1.0, rel=1e-12)
    assert mode_energy(power_profile(3), AngularMode(0, 3), g) == pytest.approx(1 / 3, rel=1e-6)


def test_mode_energy_infinite_flag():
    p = RadialProfile(2, 1.0, lambda r: 1 - r, lambda r: -1 + 0 * r, True)
    with pytest.raises(ValueError, match="infinite energy"):
        mode_energy(p, AngularMode(1, 2), build_grid((0, 1), 101))
    # k = 0 is fine
    assert mode_energy(p, AngularMode(0, 2), build_grid((0, 1), 101)) == pytest.approx(0.5, rel=1e-12)


def test_mode_energy_h_m_symbolic():
    import sympy as sp
    r = sp.symbols("r", positive=True)
    m, N = 100, 3
    b = sp.Rational(N - 2, 2)
    s = 2 * m * (sp.Integer(m) ** b - 1)
    r0, r1 = sp.Rational(1, 2 * m), sp.Rational(1, m)
    ramp = s * (r - r0)
    tail = r ** -b - 1
    mu = N - 1
    e = lambda f, lo, hi: sp.integrate((sp.diff(f, r) ** 2 + mu * f ** 2 / r ** 2) * r ** (N - 1),
                                       (r, lo, hi))
    want = float(sp.N(e(ramp, r0, r1) + e(tail, r1, 1), 30))
    prof, mode = make_family(VM(m, N))
    grid = grid_for(prof, count=8001)
    got, err = mode_energy(prof, mode, grid, full_output=True)
    assert abs(got - want) <= max(5 * err, 1e-9 * want)
    assert mode_energy_adaptive(prof, mode) == pytest.approx(want, rel=1e-12)


def test_h_m_energy_growth_structure():
    # numerator - [(N-2)^2/4 + N - 1] log m settles to a constant
    c = []
    for m in (10 ** 2, 10 ** 3, 10 ** 4, 10 ** 5):
        prof, mode = make_family(VM(m, 3))
        c.append(mode_energy_adaptive(prof, mode) - 2.25 * math.log(m))
    d = np.abs(np.diff(c))
    # differences shrink like m^(-1/2): a factor sqrt(10) per decade
    assert np.all(d[:-1] / d[1:] > 3.0) and d[-1] < 0.05


def test_singular_interior_rejected():
    p = RadialProfile(2, 1.0, lambda r: 1 / np.abs(r - 0.5), lambda r: 0 * r)
    with pytest.raises(ValueError):
        integrate(p, PLAIN_MASS, build_grid((0, 1), 11))


def test_nan_profile_rejected():
    p = RadialProfile(2, 1.0, lambda r: np.where(r > 0.3, np.nan, r), lambda r: 0 * r)
    with pytest.raises(ValueError, match="NaN"):
        integrate(p, PLAIN_MASS, build_grid((0, 1), 11))


def test_second_order_convergence():
    p = RadialProfile(3, 1.0, lambda r: np.cos(r), lambda r: -np.sin(r))
    exact = quad(lambda r: math.cos(r) ** 2 * r ** 2, 0, 1, epsabs=0, epsrel=1e-13)[0]
    errs = [abs(integrate(p, PLAIN_MASS, build_grid((0, 1), n)) - exact) for n in (41, 81, 161)]
    assert errs[0] / errs[1] >= 3.5 and errs[1] / errs[2] >= 3.5
    exact_e = quad(lambda r: math.sin(r) ** 2 * r ** 2 + 2 * math.cos(r) ** 2, 0, 1,
                   epsabs=0, epsrel=1e-13)[0]
    errs = [abs(mode_energy(p, AngularMode(1, 3), build_grid((0, 1), n)) - exact_e)
            for n in (41, 81, 161)]
    assert errs[0] / errs[1] >= 3.5 and errs[1] / errs[2] >= 3.5


@settings(max_examples=40, deadline=None)
@given(alpha=st.floats(-1e3, 1e3).filter(lambda x: abs(x) > 1e-3))
def test_integrate_quadratic_scaling(alpha):
    base = RadialProfile(3, 1.0, lambda r: np.sin(3 * r) + r, lambda r: 3 * np.cos(3 * r) + 1)
    scaled = RadialProfile(3, 1.0, lambda r: alpha * (np.sin(3 * r) + r),
                           lambda r: alpha * (3 * np.cos(3 * r) + 1))
    g = build_grid((0, 1), 201)
    assert integrate(scaled, CLASSICAL_HARDY, g) == pytest.approx(
        alpha ** 2 * integrate(base, CLASSICAL_HARDY, g), rel=1e-12)


@settings(max_examples=30, deadline=None)
@given(c=st.floats(0.1, 5), N=st.integers(2, 5))
def test_mode_energy_monotone_in_k(c, N):
    p = RadialProfile(N, 1.0, lambda r: r * np.exp(-c * r), lambda r: (1 - c * r) * np.exp(-c * r))
    g = build_grid((0, 1), 101)
    vals = [mode_energy(p, AngularMode(k, N), g) for k in range(1, 5)]
    assert all(b >= a for a, b in zip(vals, vals[1:]))
