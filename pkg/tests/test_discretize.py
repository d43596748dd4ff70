import math

import numpy as np
import pytest
import sympy
from hypothesis import given, settings, strategies as st
from scipy.special import erf

from fheat.discretize import (Field, Grid, dirichlet_energy, f_laplacian_fd, f_laplacian_matrix,
                              field_from_csv, field_from_dict, field_from_json, field_to_csv,
                              field_to_dict, field_to_json, flux_laplacian_matrix, gradient_fd,
                              grid_for, periodic_grid, quadrature_weights, radial_grid, sample,
                              second_derivative_fd, sphere_area, weighted_inner,
                              weighted_integral, weighted_volume)
from fheat.errors import DomainError, ParameterError, ShapeError
from fheat.geometry import ModelSpace, Profile, linear_warp, make_space


def test_grid_invariants():
    g = radial_grid(4.0, 40)
    assert g.size == 41 and g.h == pytest.approx(0.1) and g.R == 4.0
    p = periodic_grid(2 * math.pi, 64)
    assert p.size == 64 and p.nodes[-1] < p.L
    with pytest.raises(ParameterError):
        radial_grid(1.0, 8)
    with pytest.raises(ParameterError):
        Grid("radial", np.array([0.0, 0.1, 0.3] + list(np.linspace(0.4, 2, 20))), 2.0)
    with pytest.raises(ParameterError):
        radial_grid(-1.0, 20)


def test_field_checks():
    g = radial_grid(1.0, 16)
    with pytest.raises(ShapeError):
        Field(g, np.ones(5))
    with pytest.raises(DomainError):
        Field(g, np.full(17, np.nan))
    f = Field(g, np.ones(17))
    with pytest.raises(ValueError):
        f.values[0] = 2.0
    with pytest.raises(DomainError):
        f.with_values(np.zeros(17)).require_positive()


def test_gradient_of_constant_and_linear():
    g = radial_grid(3.0, 30)
    assert np.all(gradient_fd(sample(g, lambda r: 0 * r + 2.5)).values == 0)
    d = gradient_fd(sample(g, lambda r: r)).values
    assert np.max(np.abs(d - 1)) <= 1e-10


@pytest.mark.parametrize("kind", ["radial", "periodic"])
def test_gradient_second_order(kind):
    errs = []
    for N in (64, 128):
        g = radial_grid(3.0, N) if kind == "radial" else periodic_grid(2 * math.pi, N)
        d = gradient_fd(sample(g, np.sin)).values
        errs.append(np.max(np.abs(d - np.cos(g.nodes))))
    assert errs[0] / errs[1] == pytest.approx(4.0, abs=0.5)


def test_second_derivative_second_order():
    errs = []
    for N in (64, 128):
        g = periodic_grid(2 * math.pi, N)
        d = second_derivative_fd(sample(g, np.sin)).values
        errs.append(np.max(np.abs(d + np.sin(g.nodes))))
    assert errs[0] / errs[1] == pytest.approx(4.0, abs=0.5)


def test_flat_laplacian_of_r_squared():
    space = make_space("flat", n=3)
    g = radial_grid(2.0, 40)
    lap = f_laplacian_fd(space, sample(g, lambda r: r**2), outer="one_sided").values
    np.testing.assert_allclose(lap, 6.0, atol=1e-9)


def test_circle_eigenfunction():
    for L in (2 * math.pi, 3.0):
        space = make_space("circle", L=L)
        errs = []
        for N in (64, 128):
            g = grid_for(space, N)
            k = 2 * math.pi / L
            u = sample(g, lambda r: np.sin(k * r))
            errs.append(np.max(np.abs(f_laplacian_fd(space, u).values + k * k * u.values)))
        assert errs[1] < 1e-2 * k * k and errs[0] / errs[1] == pytest.approx(4.0, abs=0.5)


def test_gaussian_line_symbolic_oracle():
    r = sympy.symbols("r")
    u = r**2
    f = r**2 / 4
    expr = sympy.lambdify(r, sympy.diff(u, r, 2) - sympy.diff(f, r) * sympy.diff(u, r))
    space = make_space("gaussian", n=1)
    g = radial_grid(4.0, 80)
    lap = f_laplacian_fd(space, sample(g, lambda x: x**2), outer="one_sided",
                         inner="one_sided").values
    np.testing.assert_allclose(lap, expr(g.nodes), atol=1e-9)


def test_laplacian_grid_mismatch():
    with pytest.raises(ShapeError):
        f_laplacian_matrix(make_space("circle"), radial_grid(1.0, 20))
    with pytest.raises(ShapeError):
        f_laplacian_matrix(make_space("flat"), periodic_grid(1.0, 20))


def test_pole_requires_even_weight():
    space = make_space("flat", n=2, weight="cosine", weight_c=1.0, weight_k=1.0)
    f_laplacian_matrix(space, radial_grid(2.0, 20))  # f'(0) = 0 for cosine
    ramp = Profile("ramp", lambda r: r * 1.0, lambda r: np.ones_like(r), lambda r: 0 * r)
    odd = ModelSpace("flat", 2, ramp, linear_warp())
    with pytest.raises(DomainError):
        f_laplacian_matrix(odd, radial_grid(2.0, 20))


def test_unknown_boundary_rejected():
    with pytest.raises(ParameterError):
        f_laplacian_matrix(make_space("flat"), radial_grid(2.0, 20), outer="robin")
    with pytest.raises(DomainError):
        f_laplacian_matrix(make_space("flat"), radial_grid(2.0, 20), inner="one_sided")


def test_radial_drift_form_converges():
    space = make_space("gaussian", n=3)
    errs = []
    for N in (80, 160):
        g = radial_grid(4.0, N)
        u = sample(g, lambda r: np.exp(-r**2))
        r = g.nodes
        exact = (4 * r**2 - 2) * np.exp(-r**2) + (2 / np.where(r > 0, r, 1) - r / 2) * (
            -2 * r * np.exp(-r**2))
        exact[0] = 3 * -2.0
        lap = f_laplacian_fd(space, u, outer="one_sided").values
        errs.append(np.max(np.abs(lap - exact)))
    assert errs[0] / errs[1] == pytest.approx(4.0, abs=0.6)


def test_circle_volume_and_sine_square():
    space = make_space("circle")
    g = grid_for(space, 64)
    assert weighted_volume(space, g) == pytest.approx(2 * math.pi, abs=1e-10)
    assert weighted_integral(space, sample(g, lambda r: np.sin(r)**2)) == pytest.approx(
        math.pi, abs=1e-10)


def test_gaussian_line_normalization():
    space = make_space("gaussian", n=1, normalize=True)
    g = radial_grid(6.0, 6000)
    total = weighted_integral(space, sample(g, lambda r: 1 + 0 * r))
    # the segment misses the tail mass erfc(3)
    assert total == pytest.approx(erf(3.0), abs=1e-6)
    assert abs(total - 1.0) < 3e-5


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_sphere_area(n):
    known = {1: 2.0, 2: 2 * math.pi, 3: 4 * math.pi, 4: 2 * math.pi**2}
    assert sphere_area(n) == pytest.approx(known[n])


def test_flat_ball_volume():
    space = make_space("flat", n=3)
    assert weighted_volume(space, radial_grid(1.0, 400)) == pytest.approx(4 * math.pi / 3, rel=1e-4)


def test_radial_self_adjoint():
    space = make_space("gaussian", n=3)
    diffs = []
    for N in (100, 200):
        g = radial_grid(8.0, N)
        u = sample(g, lambda r: np.exp(-r**2))
        v = sample(g, lambda r: (1 + r**2) * np.exp(-r**2 / 2))
        lu = f_laplacian_fd(space, u)
        lv = f_laplacian_fd(space, v)
        diffs.append(abs(weighted_inner(space, lu, v) - weighted_inner(space, u, lv)))
    assert diffs[1] < 1e-2 and diffs[1] < diffs[0]


def test_radial_integration_by_parts():
    space = make_space("gaussian", n=2)
    g = radial_grid(8.0, 400)
    u = sample(g, lambda r: np.exp(-r**2))
    lhs = -weighted_inner(space, f_laplacian_fd(space, u), u)
    du = gradient_fd(u)
    rhs = weighted_inner(space, du, du)
    assert lhs == pytest.approx(rhs, rel=1e-3)


@settings(max_examples=25, deadline=None)
@given(st.lists(st.floats(-1, 1), min_size=6, max_size=6), st.floats(-0.8, 0.8))
def test_flux_form_exactly_self_adjoint(coef, c):
    space = make_space("circle", weight="cosine", weight_c=c)
    g = grid_for(space, 48)
    x = g.nodes
    u = sample(g, lambda r: coef[0] * np.cos(r) + coef[1] * np.sin(2 * r) + coef[2])
    v = sample(g, lambda r: coef[3] * np.sin(r) + coef[4] * np.cos(3 * r) + coef[5])
    A = flux_laplacian_matrix(space, g)
    lhs = weighted_inner(space, u.with_values(A @ u.values), v)
    rhs = weighted_inner(space, u, v.with_values(A @ v.values))
    assert lhs == pytest.approx(rhs, abs=1e-9)
    energy = -weighted_inner(space, u.with_values(A @ u.values), u)
    assert energy == pytest.approx(dirichlet_energy(space, u), abs=1e-9)
    assert x.size == 48


def test_flux_form_periodic_only():
    with pytest.raises(ShapeError):
        flux_laplacian_matrix(make_space("flat"), radial_grid(1.0, 20))


def test_quadrature_weights_positive():
    for name in ("flat", "gaussian", "hyperbolic"):
        w = quadrature_weights(make_space(name), radial_grid(3.0, 30))
        assert w[0] >= 0 and np.all(w[1:] > 0)


def test_csv_round_trip(tmp_path):
    g = radial_grid(2.0, 20)
    f = sample(g, lambda r: np.exp(-r) / 3, time=0.25)
    field_to_csv(f, tmp_path / "f.csv")
    back = field_from_csv(tmp_path / "f.csv", g, time=0.25)
    assert np.array_equal(back.values, f.values)
    with pytest.raises(ShapeError):
        field_from_csv(tmp_path / "f.csv", radial_grid(2.0, 30))


@settings(max_examples=30)
@given(st.lists(st.floats(-1e300, 1e300, allow_nan=False), min_size=16, max_size=16),
       st.floats(-1e3, 1e3))
def test_json_bit_exact_round_trip(vals, t):
    f = Field(periodic_grid(1.7, 16), np.array(vals), t)
    back = field_from_dict(field_to_dict(f))
    assert np.array_equal(back.values, f.values) and back.time == f.time
    assert back.grid.same_as(f.grid)


def test_json_file_round_trip(tmp_path):
    f = sample(radial_grid(math.pi, 17), np.cos, time=1 / 3)
    field_to_json(f, tmp_path / "f.json")
    back = field_from_json(tmp_path / "f.json")
    assert np.array_equal(back.values, f.values) and back.time == f.time
