import numpy as np
import pytest
import sympy as sp

from billiard_twist.billiard_map import PhasePoint, step
from billiard_twist.errors import CompositionError, ImplicitSingularityError, SeriesDivisionError
from billiard_twist.formulas import third_partials
from billiard_twist.geometry import CurvatureJet, TableConfig, profile_from_curvature
from billiard_twist.jets import (
    Series2,
    compose_maps,
    jacobian_determinant,
    map_jet,
    monomials,
    solve_implicit,
)
from billiard_twist.tables import asymmetric_lemon, eh_lens_shift

X, Y = sp.symbols("x y")
ORDER = 5


def sympy_coeffs(expr, order=ORDER):
    """Taylor coefficients of ``expr`` at the origin up to total degree ``order``."""
    e = sp.symbols("e")
    ser = sp.series(expr.subs({X: e * X, Y: e * Y}), e, 0, order + 1).removeO()
    poly = sp.Poly(sp.expand(ser.subs(e, 1)), X, Y)
    return {m: float(c) for m, c in zip(poly.monoms(), poly.coeffs())}


def assert_series(series, expected, tol=1e-13):
    for j, k in monomials(series.order):
        assert complex(series[j, k]) == pytest.approx(expected.get((j, k), 0.0), abs=tol), (j, k)


x = Series2.var(0, ORDER)
y = Series2.var(1, ORDER)


def test_products_and_powers():
    assert_series((1 + x - 2 * y) * (x + y * y), sympy_coeffs((1 + X - 2 * Y) * (X + Y**2)))
    assert_series((1 + x + y) ** 4, sympy_coeffs((1 + X + Y) ** 4))


def test_reciprocal_and_sqrt():
    assert_series((2 + x + 3 * y).reciprocal(), sympy_coeffs(1 / (2 + X + 3 * Y)))
    assert_series((1 + x - y * y).sqrt(), sympy_coeffs(sp.sqrt(1 + X - Y**2)))
    assert_series((1 + x) / (1 - y), sympy_coeffs((1 + X) / (1 - Y)))
    with pytest.raises(SeriesDivisionError):
        x.reciprocal()
    with pytest.raises(SeriesDivisionError):
        (-1 + x).sqrt()


def test_derivative_integral_and_compose():
    f = (1 + x + 2 * y).sqrt()
    F = sp.sqrt(1 + X + 2 * Y)
    d = sympy_coeffs(sp.diff(F, Y))
    assert_series(f.diff(1), {m: v for m, v in d.items() if sum(m) < ORDER})
    g = f.compose(x + y * y, x * y)
    assert_series(g, sympy_coeffs(F.subs({X: X + Y**2, Y: X * Y}, simultaneous=True)))
    i = f.integrate(0)
    expected = sympy_coeffs(sp.integrate(sp.series(F, X, 0, ORDER + 1).removeO(), X))
    assert_series(i, expected)


def test_solve_implicit_matches_reversion():
    # w + w^3 = x + y, w(0) = 0
    w = solve_implicit(lambda w: w + w * w * w - x - y, 0.0)
    t = sp.symbols("t")
    inv = sp.series(t - t**3 + 3 * t**5, t, 0, 6).removeO()  # reversion of t + t^3
    assert_series(w, sympy_coeffs(inv.subs(t, X + Y)))
    with pytest.raises(ImplicitSingularityError):
        solve_implicit(lambda w: w * w - x, 0.0)


def random_table(seed):
    rng = np.random.default_rng(seed)
    R0, R1 = rng.uniform(0.9, 2.0, 2)
    L = rng.uniform(0.3, 0.8) * min(R0, R1)
    mk = lambda R: profile_from_curvature(CurvatureJet(R, rng.uniform(-1, 1), rng.uniform(-2, 2)))  # noqa: E731
    return TableConfig(L, mk(R0), mk(R1))


@pytest.mark.parametrize("seed", [1, 2, 3])
def test_jet_truncation_error_scales_with_order(seed):
    """The degree-5 jet reproduces the exact map with an error of order h^6."""
    table = random_table(seed)
    for source in (0, 1):
        jet = map_jet(table, source)
        errs = []
        for h in (0.12, 0.06):
            s, u = 0.7 * h, -0.4 * h
            exact, _ = step(table, PhasePoint(source, s, u))
            errs.append(abs(jet.S1(s, u).real - exact.s) + abs(jet.U1(s, u).real - exact.u))
        assert errs[1] < 1e-6
        assert 2**6 * 0.5 < errs[0] / errs[1] < 2**6 * 2


@pytest.mark.parametrize("table", [asymmetric_lemon(1.0, 2.0, 0.5), eh_lens_shift(2.0, 0.3), random_table(9)])
def test_jacobian_determinant_is_one(table):
    for jet in (map_jet(table, 0), map_jet(table, 1)):
        det = jacobian_determinant(jet)
        assert (det - 1.0).max_abs() < 1e-12


def test_composition_matches_two_steps():
    table = asymmetric_lemon(1.0, 2.0, 0.5)
    F2 = compose_maps(map_jet(table, 0), map_jet(table, 1))
    h = 5e-3
    p = PhasePoint(0, h, 0.5 * h)
    q, _ = step(table, step(table, p)[0])
    assert F2.S1(p.s, p.u).real == pytest.approx(q.s, abs=1e-11)
    assert F2.U1(p.s, p.u).real == pytest.approx(q.u, abs=1e-11)
    with pytest.raises(CompositionError):
        compose_maps(map_jet(table, 0), map_jet(table, 0))
    with pytest.raises(CompositionError):
        compose_maps(map_jet(table, 0, 5), map_jet(table, 1, 3))


@pytest.mark.parametrize("L,R,R2", [(0.5, 1.0, 0.3), (1.4, 1.1, -0.7), (0.9, 2.0, 1.5)])
def test_third_partials_of_symmetric_map(L, R, R2):
    prof = profile_from_curvature(CurvatureJet(R, R2, 0.4))
    jet = map_jet(TableConfig.mirror(L, prof), 0)
    for (which, j, k), value in third_partials(L, R, R2).items():
        assert jet.derivative(which, j, k) == pytest.approx(value, rel=1e-11, abs=1e-12)
