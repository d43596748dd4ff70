import csv
import json
import math

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from fheat.discretize import grid_for, periodic_grid, radial_grid, sample
from fheat.errors import BoundAuditError, DomainError, ParameterError, PreconditionError
from fheat.estimates import (baseest_ratio, bochner_residual, constants, hamilton_rhs_bracket,
                             interior_mask, lemma1_residual, lemma2_residual, min_residual,
                             residual_tolerance, souplet_zhang_rhs_bracket, souplet_zhang_tail,
                             verify_hamilton, verify_souplet_zhang)
from fheat.geometry import CurvatureBounds, curvature_bounds, make_space
from fheat.solver import EvolutionParams, solve

COTH1 = math.cosh(1) / math.sinh(1)


# --- constants -------------------------------------------------------------

def test_c1_vanishes_for_small_bound():
    assert constants(3, 0.0, 1.0, math.exp(-2)).c1 == pytest.approx(0.0, abs=1e-15)


def test_c2_vanishes_for_lower_bound():
    c = constants(3, 0.0, -1.0, 1.0, math.exp(-2))
    assert c.c2 == pytest.approx(0.0, abs=1e-15)


def test_constants_plugged_in():
    c = constants(2, 1.0, 0.0, 10.0)
    assert c.c1 == 2.0 and c.c3 == 1.0
    assert c.kappa == pytest.approx(math.log(10)) and c.mu == pytest.approx(1 + math.log(10))


def test_constants_need_delta_for_negative_rate():
    with pytest.raises(ParameterError):
        constants(2, 0.0, -1.0, 1.0)
    with pytest.raises(ParameterError):
        constants(2, 0.0, 1.0, -1.0)


@given(st.integers(1, 6), st.floats(0, 5), st.floats(-5, 5), st.floats(1e-3, 1e3),
       st.floats(1e-3, 1.0))
def test_constants_are_clamped(n, K, a, D, frac):
    c = constants(n, K, a, D, D * frac)
    assert c.c1 >= 0 and c.c2 >= 0 and c.c3 >= 0 and c.kappa >= 1
    assert c.mu == pytest.approx(1 + math.log(D))


@given(st.integers(1, 6), st.floats(0, 5), st.floats(-5, 5), st.floats(1e-3, 1e3))
def test_lemma_bracket_identity(n, K, a, D):
    delta = D / 2
    c = constants(n, K, a, D, delta)
    x = D if a >= 0 else delta
    assert c.lemma1_bracket() == pytest.approx(2 * (n - 1) * K + a * math.log(x) + 2 * a,
                                               abs=1e-12)
    assert max(c.lemma1_bracket(), 0.0) == pytest.approx(c.tail_constant(), abs=1e-12)


# --- brackets --------------------------------------------------------------

def test_hamilton_bracket_large_radius_limit():
    p = EvolutionParams(a=0.0, D=1.0, t0=1.0, T=1.0)
    b = CurvatureBounds(K=0.0, lambda_min=0.0, alpha=0.0)
    val = hamilton_rhs_bracket(p, constants(2, 0.0, 0.0, 1.0), b, 1e6, 1.0)
    assert val == pytest.approx(1.0, abs=1e-5)


def test_hamilton_bracket_flat_plane():
    p = EvolutionParams(a=0.0, D=1.0)
    b = curvature_bounds(make_space("flat", n=2), 0.0, 2.0)
    val = hamilton_rhs_bracket(p, constants(2, 0.0, 0.0, 1.0), b, 2.0, 1.0)
    assert val == pytest.approx(0.5 + math.sqrt(0.5) + 1.0)


def test_hamilton_bracket_hyperbolic_plane():
    p = EvolutionParams(a=0.0, D=math.e)
    b = curvature_bounds(make_space("hyperbolic", n=2), 1.0, 4.0)
    c = constants(2, 1.0, 0.0, math.e)
    want = math.sqrt(math.e) * (0.25 + math.sqrt(COTH1 / 4) + 1 + 1 + math.sqrt(2))
    assert hamilton_rhs_bracket(p, c, b, 4.0, 1.0) == pytest.approx(want)


def test_hamilton_bracket_excludes_initial_slice():
    p = EvolutionParams(a=0.0, D=1.0)
    b = CurvatureBounds(0.0, 0.0, 1.0)
    with pytest.raises(DomainError):
        hamilton_rhs_bracket(p, constants(2, 0, 0, 1.0), b, 2.0, 0.0)


@given(st.floats(2, 100), st.floats(1.0, 50), st.floats(1e-3, 2.0), st.floats(0, 3),
       st.floats(0, 3))
def test_hamilton_bracket_positive_and_decreasing_in_radius(R, grow, s, K, alpha):
    p = EvolutionParams(a=0.0, D=2.0, t0=1.0, T=2.0)
    b = CurvatureBounds(K, 0.0, alpha)
    c = constants(3, K, 0.0, 2.0)
    t = p.t_start + s
    lo = hamilton_rhs_bracket(p, c, b, R * grow, t)
    hi = hamilton_rhs_bracket(p, c, b, R, t)
    assert 0 < lo <= hi * (1 + 1e-12)


def test_souplet_zhang_factor_is_one_at_bound():
    p = EvolutionParams(a=0.0, D=1.0)
    b = CurvatureBounds(0.0, 0.0, 0.0)
    c = constants(2, 0.0, 0.0, 1.0)
    assert souplet_zhang_rhs_bracket(p, c, b, 1e12, 1.0, 1.0) == pytest.approx(1.0, abs=1e-5)
    at_half = souplet_zhang_rhs_bracket(p, c, b, 1e12, 0.5, 1.0)
    assert at_half == pytest.approx(1 + math.log(2), abs=1e-5)


def test_souplet_zhang_negative_rate_tail():
    c = constants(2, 0.0, -1.0, math.e, 0.5)
    assert c.c3 == 0.0 and c.kappa == 1.0
    assert souplet_zhang_tail(c) == pytest.approx(1.0)
    assert souplet_zhang_tail(constants(2, 0.0, 2.0, math.e)) == pytest.approx(2.0)


def test_souplet_zhang_bracket_audits_bound():
    p = EvolutionParams(a=0.0, D=1.0)
    b = CurvatureBounds(0.0, 0.0, 0.0)
    with pytest.raises(BoundAuditError):
        souplet_zhang_rhs_bracket(p, constants(2, 0, 0, 1.0), b, 4.0, 1.5, 1.0)
    with pytest.raises(DomainError):
        souplet_zhang_rhs_bracket(p, constants(2, 0, 0, 1.0), b, 4.0, 0.0, 1.0)


# --- gradient reports ------------------------------------------------------

def _bump_solution(name="gaussian", N=80, dt=0.02, a=0.0, D=2.0, audit=True):
    space = make_space(name)
    u0 = sample(radial_grid(8.0, N), lambda r: 1 + np.exp(-r**2))
    return solve(space, u0, EvolutionParams(a=a, D=D), dt, audit=audit)


def _circle_solution(N=80, dt=0.02, a=-0.5):
    space = make_space("circle")
    u0 = sample(periodic_grid(2 * math.pi, N), lambda r: 1 + 0.5 * np.sin(r))
    return solve(space, u0, EvolutionParams(a=a, D=1.5, delta=0.5 if a < 0 else 0.0), dt)


def test_constant_solution_has_zero_ratio():
    space = make_space("flat")
    u0 = sample(radial_grid(8.0, 40), lambda r: 1.3 + 0 * r)
    sol = solve(space, u0, EvolutionParams(a=0.0, D=2.0), 0.1)
    b = curvature_bounds(space, 0.0, 4.0)
    assert verify_hamilton(sol, b, 4.0).ratio_max <= 1e-12
    assert verify_souplet_zhang(sol, b, 4.0).ratio_max <= 1e-12


def test_souplet_zhang_at_the_bound_is_zero():
    space = make_space("circle")
    u0 = sample(periodic_grid(2 * math.pi, 32), lambda r: 1.5 + 0 * r)
    sol = solve(space, u0, EvolutionParams(a=0.0, D=1.5), 0.1)
    rep = verify_souplet_zhang(sol, curvature_bounds(space, 0.0, math.pi), 2.0)
    assert rep.ratio_max <= 1e-12
    assert any("tail terms vanish" in n for n in rep.notes)


def test_gaussian_bump_report(tmp_path):
    sol = _bump_solution()
    b = curvature_bounds(sol.space, 0.0, 4.0)
    rep = verify_hamilton(sol, b, 4.0)
    assert 0 < rep.ratio_max < np.inf and rep.empirical_cn == rep.ratio_max
    assert rep.argmax[0] <= 2.0 and rep.argmax[1] > sol.params.t_start
    assert rep.window == (2.0, sol.times[1], sol.times[-1])
    d = rep.to_dict()
    json.dumps(d)
    assert set(d) >= {"theorem", "ratio_max", "argmax", "empirical_cn", "window", "grid"}
    rep.to_csv(tmp_path / "h.csv")
    with open(tmp_path / "h.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["r", "t", "lhs", "rhs_bracket", "ratio"]
    assert len(rows) - 1 == rep.lhs.size
    assert np.all(rep.rhs_bracket > 0)


def test_understated_bound_raises():
    sol = _bump_solution(D=1.5, audit=False)
    b = curvature_bounds(sol.space, 0.0, 4.0)
    with pytest.raises(BoundAuditError):
        verify_hamilton(sol, b, 4.0)


def test_verify_preconditions():
    sol = _bump_solution()
    b = curvature_bounds(sol.space, 0.0, 4.0)
    with pytest.raises(DomainError):
        verify_hamilton(sol, b, 1.5)
    with pytest.raises(DomainError):
        verify_hamilton(sol, b, 20.0)
    hyp = make_space("hyperbolic")
    u0 = sample(radial_grid(8.0, 40), lambda r: 1 + np.exp(-r**2))
    hsol = solve(hyp, u0, EvolutionParams(a=0.0, D=2.0), 0.1)
    with pytest.raises(PreconditionError):
        verify_hamilton(hsol, CurvatureBounds(0.0, 0.0, COTH1), 4.0)


@pytest.mark.parametrize("theorem", [verify_hamilton, verify_souplet_zhang])
def test_empirical_constant_stable_under_refinement(theorem):
    coarse, fine = _circle_solution(80, 0.02, 0.0), _circle_solution(160, 0.01, 0.0)
    b = curvature_bounds(coarse.space, 0.0, math.pi)
    r0, r1 = theorem(coarse, b, 2.0).ratio_max, theorem(fine, b, 2.0).ratio_max
    assert abs(r1 - r0) / r0 < 0.2


@pytest.mark.parametrize("lam", [0.1, 3.0, 250.0])
def test_scale_invariance_for_heat(lam):
    sol = _bump_solution()
    b = curvature_bounds(sol.space, 0.0, 4.0)
    for theorem in (verify_hamilton, verify_souplet_zhang):
        base = theorem(sol, b, 4.0).ratio_max
        assert abs(theorem(sol.scaled(lam), b, 4.0).ratio_max - base) < 1e-8


def test_negative_rate_notes():
    sol = _circle_solution()
    b = curvature_bounds(sol.space, 0.0, math.pi)
    rep = verify_souplet_zhang(sol, b, 2.0)
    assert "a < 0 branch" in rep.notes
    assert rep.constants.c3 == 0.0 and rep.constants.empirical_cn == rep.ratio_max


# --- Bochner ---------------------------------------------------------------

def test_bochner_linear_on_line():
    space = make_space("flat", n=1)
    u = sample(radial_grid(3.0, 30), lambda r: 2 * r + 1)
    res, _ = bochner_residual(space, u)
    assert np.max(np.abs(res.values)) <= 1e-10


def test_bochner_identity_hessian_margin():
    space = make_space("flat", n=3)
    u = sample(radial_grid(3.0, 60), lambda r: r**2 / 2)
    res, margin = bochner_residual(space, u, m=1.0)
    mask = interior_mask(u)
    assert np.max(np.abs(res.values[mask])) < 1e-8
    np.testing.assert_allclose(margin.values[mask], 3 - 9 / 4, atol=1e-8)


@pytest.mark.parametrize("case", ["circle", "gaussian"])
def test_bochner_second_order(case):
    if case == "circle":
        space = make_space("circle", weight="cosine", weight_c=1.0)
        fields = [sample(periodic_grid(2 * math.pi, N), np.sin) for N in (64, 128, 256)]
    else:
        space = make_space("gaussian", n=3)
        fields = [sample(radial_grid(4.0, N), lambda r: np.exp(-r**2)) for N in (64, 128, 256)]
    errs = []
    for u in fields:
        res, margin = bochner_residual(space, u, m=10.0)
        mask = interior_mask(u)
        errs.append(np.max(np.abs(res.values[mask])))
        assert np.min(margin.values[mask]) >= -10 * u.grid.h**2
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all((orders > 1.5) & (orders < 2.5))


def test_bochner_rejects_bad_m():
    with pytest.raises(DomainError):
        bochner_residual(make_space("circle"), sample(periodic_grid(1.0, 32), np.sin), m=0.0)


@settings(max_examples=20, deadline=None)
@given(st.floats(0.5, 2.0), st.floats(0.1, 1.0), st.floats(0.5, 20.0))
def test_bochner_margin_nonnegative_for_soliton(width, amp, m):
    space = make_space("gaussian", n=3)
    u = sample(radial_grid(6.0, 240), lambda r: amp * np.exp(-(r / width) ** 2))
    _, margin = bochner_residual(space, u, m=m)
    mask = interior_mask(u)
    assert np.min(margin.values[mask]) >= -10 * u.grid.h**2


# --- lemmas ----------------------------------------------------------------

def test_lemma_residuals_vanish_for_constants():
    space = make_space("circle")
    u0 = sample(periodic_grid(2 * math.pi, 32), lambda r: 1.5 + 0 * r)
    sol = solve(space, u0, EvolutionParams(a=0.0, D=1.5), 0.1)
    c = constants(1, 0.0, 0.0, 1.5)
    assert np.max(np.abs(lemma1_residual(sol, c, 3).values)) <= 1e-20
    assert np.max(np.abs(lemma2_residual(sol, c, 3).values)) <= 1e-20
    with pytest.raises(DomainError):
        lemma1_residual(sol, c, 0)
    with pytest.raises(DomainError):
        lemma2_residual(sol, c, len(sol.frames) - 1)
    with pytest.raises(ValueError):
        lemma1_residual(sol, c, 2, mutation="other")


def test_lemmas_hold_on_flat_heat_flow():
    tols, mins = [], []
    for N, dt in ((80, 0.02), (160, 0.01)):
        space = make_space("flat")
        u0 = sample(radial_grid(8.0, N), lambda r: 1 + 0.5 * np.cos(2 * r))
        sol = solve(space, u0, EvolutionParams(a=0.0, D=1.5), dt)
        c = constants(2, 0.0, 0.0, 1.5)
        tol = residual_tolerance(sol)
        for which in ("lemma1", "lemma2"):
            m, _, _ = min_residual(sol, c, which, 4.0)
            assert m >= -tol
            mins.append(m)
        tols.append(tol)
    assert tols[1] < tols[0]


def test_coupling_mutation_is_caught():
    sols = [_circle_solution(N, dt) for N, dt in ((160, 0.01), (320, 0.005))]
    c = constants(1, 0.0, -0.5, 1.5, 0.5)
    for which in ("lemma1", "lemma2"):
        vals = [min_residual(s, c, which, math.pi, mutation="coupling_sign")[0] for s in sols]
        assert vals[0] < 0 and vals[1] < 0
        assert abs(vals[1]) >= 0.5 * abs(vals[0])
        honest = min_residual(sols[1], c, which, math.pi)[0]
        assert honest >= -residual_tolerance(sols[1])


def test_quadratic_sign_mutation_only_weakens():
    sol = _circle_solution()
    c = constants(1, 0.0, -0.5, 1.5, 0.5)
    for fn in (lemma1_residual, lemma2_residual):
        honest = fn(sol, c, 5).values
        weak = fn(sol, c, 5, mutation="quadratic_sign").values
        assert np.all(weak >= honest - 1e-15)


def test_base_bound_on_every_frame():
    sol = _circle_solution()
    kappa = constants(1, 0.0, -0.5, 1.5, 0.5).kappa
    for k in range(len(sol.frames)):
        assert np.all(baseest_ratio(sol, k) <= kappa**2)


@given(st.floats(1e-3, 1e3), st.floats(1e-6, 1.0))
def test_base_bound_pointwise(D, frac):
    g = math.log(D * frac)
    mu = 1 + math.log(D)
    kappa = max(abs(math.log(D)), 1.0)
    assume(mu - g >= 1)
    assert g**2 / (mu - g) ** 2 <= kappa**2 * (1 + 1e-12)


def test_grid_helpers_accept_both_kinds():
    assert grid_for(make_space("circle"), 32).kind == "periodic"
    assert grid_for(make_space("flat"), 32, 4.0).kind == "radial"
