import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hardylab.radial import RadialProfile, build_grid
from hardylab.rearrangement import (
    LorentzParams, StepFunction, ball_volume_radius, decreasing_rearrangement, dilate,
    load_step_csv, lorentz_norm, lp_norm, polya_szego_energies, save_step_csv,
    symmetrize_radial, tail_head_bound, weak_norm,
)

from oracles import lorentz_quadrature, weak_norm_scan

REL = 1e-12


def rel(a, b):
    return abs(a - b) / max(abs(b), 1e-300)


def random_step(seed, n=100, N=3):
    rng = np.random.default_rng(seed)
    return StepFunction(10 ** rng.uniform(-3, 3, n), 10 ** rng.uniform(-3, 3, n), N)


steps = st.builds(
    lambda seed, n: random_step(seed, n),
    st.integers(0, 2 ** 32 - 1), st.integers(1, 50),
)


# ---------------------------------------------------------------- rearrangement

def test_rearrangement_trivial_single_piece():
    out = decreasing_rearrangement(StepFunction([1.0], [2.0]))
    assert out.values.tolist() == [1.0] and out.measures.tolist() == [2.0]


def test_rearrangement_sorts():
    out = decreasing_rearrangement(StepFunction([1, 3, 2], [1.0, 0.5, 0.25]))
    assert out.values.tolist() == [3.0, 2.0, 1.0]
    assert out.measures.tolist() == [0.5, 0.25, 1.0]


def test_rearrangement_merges_equal_values():
    out = decreasing_rearrangement(StepFunction([2, 1, 2], [1.0, 1.0, 0.5]))
    assert out.values.tolist() == [2.0, 1.0]
    assert out.measures.tolist() == [1.5, 1.0]
    assert out.is_canonical()


@pytest.mark.parametrize("s", [1, 2, 3])
def test_rearrangement_equimeasurable_100_pieces(s):
    u = random_step(7)
    us = decreasing_rearrangement(u)
    direct = float(np.sum(u.values ** s * u.measures))
    assert rel(us.moment(s), direct) <= REL
    assert np.all(np.diff(us.values) < 0)


def test_rearrangement_rejects_negative():
    with pytest.raises(ValueError):
        decreasing_rearrangement(StepFunction([1.0, -1.0], [1.0, 1.0]))


@pytest.mark.parametrize("values,measures", [
    ([1.0], [0.0]), ([1.0], [-1.0]), ([math.nan], [1.0]), ([1.0, 2.0], [1.0]), ([], []),
    ([1.0, 2.0], [math.inf, 1.0]),
])
def test_step_function_invariants(values, measures):
    with pytest.raises(ValueError):
        StepFunction(values, measures)


def test_evaluation_right_continuous():
    u = StepFunction([3.0, 1.0], [1.0, 2.0])
    np.testing.assert_array_equal(u([0.0, 0.999, 1.0, 2.5, 3.0, 10.0]), [3, 3, 1, 1, 0, 0])


@settings(max_examples=60, deadline=None)
@given(steps, st.sampled_from([1.0, 2.0, 2.5, 6.0]))
def test_equimeasurability_property(u, s):
    assert rel(decreasing_rearrangement(u).moment(s), u.moment(s)) <= REL


@settings(max_examples=60, deadline=None)
@given(steps)
def test_rearrangement_idempotent_and_monotone(u):
    us = decreasing_rearrangement(u)
    again = decreasing_rearrangement(us)
    np.testing.assert_array_equal(us.values, again.values)
    np.testing.assert_array_equal(us.measures, again.measures)
    assert np.all(np.diff(us.values) < 0)


# ---------------------------------------------------------------- Lorentz norms

@pytest.mark.parametrize("p,q", [(2, 2), (1, 1), (3, 2), (1.5, 4), (5, 2)])
def test_slab_closed_form(p, q):
    V = 4.0
    u = StepFunction([1.0], [V])
    assert rel(lorentz_norm(u, LorentzParams(p, q)), (p / q) ** (1 / q) * V ** (1 / p)) <= REL


def test_slab_p2_q2_is_sqrt_v():
    assert rel(lorentz_norm(StepFunction([1.0], [4.0]), LorentzParams(2, 2)), 2.0) <= REL


@pytest.mark.parametrize("p", [1, 2, 3.5])
def test_slab_weak_norm(p):
    assert rel(lorentz_norm(StepFunction([1.0], [4.0]), LorentzParams(p, math.inf)),
               4.0 ** (1 / p)) <= REL


@pytest.mark.parametrize("p", [1.0, 1.5, 2.0, 5.0])
def test_lpp_equals_lp(p):
    u = random_step(11)
    direct = float(np.sum(u.values ** p * u.measures)) ** (1 / p)
    assert rel(lorentz_norm(u, LorentzParams(p, p)), direct) <= REL
    assert rel(lp_norm(u, p), direct) <= REL


@pytest.mark.parametrize("p,q", [(2, 1), (3, 2), (1.5, 4), (4, 1.5)])
def test_lorentz_against_quadrature_oracle(p, q):
    u = random_step(5, n=12)
    ref = lorentz_quadrature(u.values, u.measures, p, q)
    assert rel(lorentz_norm(u, LorentzParams(p, q)), ref) <= 1e-12


@pytest.mark.parametrize("p", [1.0, 1.7, 4.0])
def test_weak_norm_against_scan(p):
    u = random_step(3, n=20)
    scan = weak_norm_scan(u.values, u.measures, p)
    # the sup is attained at a right endpoint, so the dense scan reaches it
    assert rel(weak_norm(u, p), scan) <= 1e-12


def test_divergent_norm_is_inf_not_nan():
    u = StepFunction([2.0, 1.0], [1.0, math.inf])
    assert lorentz_norm(u, LorentzParams(2, 2)) == math.inf
    assert lorentz_norm(u, LorentzParams(2, math.inf)) == math.inf
    assert lp_norm(u, 2) == math.inf
    zero_tail = StepFunction([2.0, 0.0], [1.0, math.inf])
    assert rel(lorentz_norm(zero_tail, LorentzParams(2, 2)), 2.0) <= REL


def test_lorentz_params_validation():
    for p, q in [(0.5, 2), (math.inf, 2), (2, 0.5)]:
        with pytest.raises(ValueError):
            LorentzParams(p, q)


def test_nesting_witness_weak_finite_strong_diverging():
    p = 2.0
    norms = []
    for decades in (2, 4, 8, 16):
        T = np.geomspace(1.0, 10.0 ** decades, 20 * decades + 1)
        u = StepFunction(T[1:] ** (-1 / p), np.diff(T), 3)
        assert weak_norm(u, p) <= 1.0 + 1e-12
        norms.append(lorentz_norm(u, LorentzParams(p, p)))
    # the L^p norm grows like sqrt(log window) while the weak norm stays bounded
    assert all(b > a for a, b in zip(norms, norms[1:]))
    assert norms[-1] > 5.0


@settings(max_examples=60, deadline=None)
@given(steps, st.floats(1.0, 8.0), st.floats(1.0, 8.0))
def test_weak_dominated_by_lorentz(u, p, q):
    w = weak_norm(u, p)
    assert w <= (q / p) ** (1 / q) * lorentz_norm(u, LorentzParams(p, q)) * (1 + 1e-12)


@settings(max_examples=60, deadline=None)
@given(steps, st.floats(1.0, 8.0))
def test_weak_sup_at_right_endpoint(u, p):
    us = decreasing_rearrangement(u)
    T = us.breakpoints
    assert weak_norm(u, p) == float(np.max(T ** (1 / p) * us.values))


# ---------------------------------------------------------------- dilation

def test_dilate_identity():
    u = random_step(1)
    d = dilate(u, 1.0, 0.37)
    np.testing.assert_array_equal(d.values, u.values)
    np.testing.assert_array_equal(d.measures, u.measures)


def test_dilate_rejects_nonpositive():
    with pytest.raises(ValueError):
        dilate(random_step(1), 0.0, 1.0)


@pytest.mark.parametrize("m", [0.01, 0.5, 3.0, 1e4])
def test_dilate_p5_q2_n3(m):
    u = random_step(2)
    par = LorentzParams(5, 2)
    assert rel(lorentz_norm(dilate(u, m, 0.5, 3), par),
               m ** (0.5 - 3 / 5) * lorentz_norm(u, par)) <= REL


@pytest.mark.parametrize("m", [0.01, 3.0, 1e4])
def test_vanishing_sequence_l2_invariant(m):
    # m^(-N/2) u(x/m) is the dilation by 1/m with amplitude (1/m)^(N/2)
    u = random_step(4)
    par = LorentzParams(2, 2)
    assert rel(lorentz_norm(dilate(u, 1 / m, 1.5, 3), par), lorentz_norm(u, par)) <= REL


@settings(max_examples=60, deadline=None)
@given(steps, st.floats(1e-3, 1e3), st.floats(-3, 3), st.floats(1.0, 8.0),
       st.sampled_from(["1", "2", "p", "inf"]))
def test_dilation_law_property(u, m, beta, p, qs):
    q = {"1": 1.0, "2": 2.0, "p": p, "inf": math.inf}[qs]
    par = LorentzParams(p, q)
    expect = m ** (beta - u.N / p) * lorentz_norm(u, par)
    assert rel(lorentz_norm(dilate(u, m, beta), par), expect) <= REL


# ---------------------------------------------------------------- tail / head

def test_tail_support_before_r():
    lhs, rhs = tail_head_bound(StepFunction([1.0], [1.0]), LorentzParams(1.0), 2.0, "tail")
    assert lhs == 0.0 and rhs > 0


def test_tail_extremal_ratio_tends_to_one():
    p, R = 1.5, 1.0
    ratios = []
    for n in (50, 200, 800):
        # window of sqrt(n) decades: both the step ratio and the cut tail shrink
        T = np.geomspace(R, R * 10.0 ** math.sqrt(n), n + 1)
        head = StepFunction([R ** (-1 / p)], [R])
        u = StepFunction(np.concatenate([head.values, T[1:] ** (-1 / p)]),
                         np.concatenate([head.measures, np.diff(T)]))
        lhs, rhs = tail_head_bound(u, LorentzParams(p), R, "tail")
        exact_rhs = R ** (1 - 2 / p) / (2 / p - 1)
        assert rel(rhs, exact_rhs) <= 1e-12
        assert lhs <= rhs
        ratios.append(lhs / rhs)
    assert ratios[0] < ratios[1] < ratios[2] < 1.0
    assert ratios[2] > 0.94
    # the deficit halves (within 20%) each time the step count quadruples
    for a, b in zip(ratios, ratios[1:]):
        assert 1.0 - b < 0.6 * (1.0 - a)


def test_head_bound_holds():
    u = random_step(9, N=3)
    R = float(np.median(decreasing_rearrangement(u).breakpoints))
    lhs, rhs = tail_head_bound(u, LorentzParams(8.0), R, "head")
    assert lhs <= rhs * (1 + 1e-12)


@pytest.mark.parametrize("kw", [
    dict(params=LorentzParams(3.0), R=1.0, side="tail"),
    dict(params=LorentzParams(2.0), R=1.0, side="head"),
    dict(params=LorentzParams(1.2), R=-1.0, side="tail"),
    dict(params=LorentzParams(1.2), R=1.0, side="middle"),
])
def test_tail_head_errors(kw):
    with pytest.raises(ValueError):
        tail_head_bound(random_step(1), **kw)


def test_divergent_rhs_rejected():
    u = StepFunction([1.0], [math.inf])
    with pytest.raises(ValueError):
        tail_head_bound(u, LorentzParams(1.2), 1.0, "tail")


@settings(max_examples=100, deadline=None)
@given(steps, st.floats(1.0, 1.99), st.floats(0.0, 1.0))
def test_tail_property(u, p, frac):
    us = decreasing_rearrangement(u)
    R = float(np.quantile(us.breakpoints, frac))
    lhs, rhs = tail_head_bound(u, LorentzParams(p), R, "tail")
    assert lhs <= rhs * (1 + 1e-12)


@settings(max_examples=100, deadline=None)
@given(steps, st.floats(6.01, 20.0), st.floats(0.0, 1.0))
def test_head_property(u, p, frac):
    us = decreasing_rearrangement(u)
    R = float(np.quantile(us.breakpoints, frac))
    lhs, rhs = tail_head_bound(u, LorentzParams(p), R, "head")
    assert lhs <= rhs * (1 + 1e-12)


# ---------------------------------------------------------------- symmetrization

def _profile(fn, N=2, R=1.0):
    return RadialProfile(N=N, R=R, value=fn, derivative=lambda r: np.zeros_like(r))


def test_symmetrize_decreasing_is_unchanged():
    g = build_grid((0.0, 1.0), 101)
    out = symmetrize_radial(_profile(lambda r: 1.0 - r), g)
    r = g.nodes
    mid = 0.5 * (r[1:] + r[:-1])
    np.testing.assert_allclose(out.values, 1.0 - mid, rtol=0, atol=1e-15)
    np.testing.assert_allclose(out.measures, math.pi * (r[1:] ** 2 - r[:-1] ** 2), rtol=1e-12)


def test_symmetrize_increasing_is_reversed():
    g = build_grid((0.0, 1.0), 101)
    out = symmetrize_radial(_profile(lambda r: r), g)
    r = g.nodes
    mid = 0.5 * (r[1:] + r[:-1])
    np.testing.assert_allclose(out.values, mid[::-1], rtol=0, atol=1e-15)
    np.testing.assert_allclose(out.measures, (math.pi * (r[1:] ** 2 - r[:-1] ** 2))[::-1],
                               rtol=1e-12)
    assert rel(out.total_measure, math.pi) <= 1e-12


def test_symmetrize_preserves_l2():
    g = build_grid((0.0, 1.0), 201)
    prof = _profile(lambda r: np.sin(3 * np.pi * r) ** 2, N=3)
    r = g.nodes
    mid = 0.5 * (r[1:] + r[:-1])
    before = float(np.sum(prof.value(mid) ** 2 * 4 * np.pi * (r[1:] ** 3 - r[:-1] ** 3) / 3))
    after = symmetrize_radial(prof, g).moment(2)
    assert rel(after, before) <= 1e-12


def test_symmetrize_matches_u_sharp_relation():
    g = build_grid((0.0, 1.0), 51)
    out = symmetrize_radial(_profile(lambda r: 1.0 - r ** 2, N=3), g)
    t = out.breakpoints
    np.testing.assert_allclose(ball_volume_radius(t, 3), g.nodes[1:], rtol=1e-12)


def test_symmetrize_rejects_negative():
    with pytest.raises(ValueError):
        symmetrize_radial(_profile(lambda r: r - 0.5), build_grid((0.0, 1.0), 11))


def test_polya_szego_decreasing_equality():
    r = np.linspace(0.1, 1.0, 10)
    f = 1.0 - r
    orig, sym = polya_szego_energies(r, f, 2)
    assert rel(sym, orig) <= 1e-9


@pytest.mark.parametrize("N", [2, 3])
def test_polya_szego_bump_decreases(N):
    r = np.linspace(0.1, 1.0, 10)
    f = np.sin(np.pi * (r - 0.1) / 0.9) * (1.0 - r) + 0.0
    f[-1] = 0.0
    orig, sym = polya_szego_energies(r, f, N)
    assert sym < orig


def test_polya_szego_errors():
    with pytest.raises(ValueError):
        polya_szego_energies([0.1, 0.5, 1.0], [1.0, 0.5, 0.1], 2)
    with pytest.raises(ValueError):
        polya_szego_energies([0.1, 0.5, 1.0], [1.0, -0.5, 0.0], 2)


# ---------------------------------------------------------------- CSV

def test_csv_round_trip(tmp_path):
    u = decreasing_rearrangement(random_step(8))
    path = tmp_path / "u.csv"
    save_step_csv(u, path)
    back = load_step_csv(path, N=3)
    np.testing.assert_array_equal(back.values, u.values)
    np.testing.assert_array_equal(back.measures, u.measures)


def test_csv_canonicalized_on_load(tmp_path):
    path = tmp_path / "u.csv"
    path.write_text("value,measure\n1,1\n3,0.5\n2,0.25\n")
    back = load_step_csv(path)
    assert back.values.tolist() == [3.0, 2.0, 1.0]


@pytest.mark.parametrize("text", ["v,m\n1,1\n", "value,measure\n", "value,measure\n1,-1\n"])
def test_csv_rejects_bad_files(tmp_path, text):
    path = tmp_path / "bad.csv"
    path.write_text(text)
    with pytest.raises(ValueError):
        load_step_csv(path)
