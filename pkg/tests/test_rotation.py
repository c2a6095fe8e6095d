import csv
import io
import math

import numpy as np
import pytest

from billiard_twist.errors import DomainError
from billiard_twist.rotation import (
    COMPARISON_HEADER,
    CausticSpec,
    comparison_csv_text,
    comparison_rows,
    ellipse_start,
    ellipse_table,
    elliptic_E,
    elliptic_F,
    fd_fourth,
    fd_second,
    rho2_exact,
    rho4_exact,
    rho_kolodziej,
    rho_kolodziej_t,
    rho_numeric_estimate,
    rho_twist,
    rotation_report,
    theta,
)


def central_binomial_sq(n):
    return (math.comb(2 * n, n) / 4**n) ** 2


def test_elliptic_integrals_at_zero_modulus():
    for a in (0.0, 0.3, math.pi / 2):
        assert elliptic_F(a, 0.0) == pytest.approx(a, abs=1e-15)
        assert elliptic_E(a, 0.0) == pytest.approx(a, abs=1e-15)


def test_complete_integrals_match_hypergeometric_series():
    k = 0.3
    K = math.pi / 2 * sum(central_binomial_sq(n) * k ** (2 * n) for n in range(40))
    E = math.pi / 2 * (1 - sum(central_binomial_sq(n) * k ** (2 * n) / (2 * n - 1) for n in range(1, 40)))
    assert elliptic_F(math.pi / 2, k) == pytest.approx(K, rel=1e-14)
    assert elliptic_E(math.pi / 2, k) == pytest.approx(E, rel=1e-14)


@pytest.mark.parametrize("a", [0.2, 0.9, 1.5])
def test_incomplete_integral_bounds(a):
    k = 0.7
    assert elliptic_E(a, k) < a < elliptic_F(a, k)


def test_elliptic_domain():
    with pytest.raises(DomainError):
        elliptic_F(0.3, 1.0)
    with pytest.raises(DomainError):
        elliptic_E(2.0, 0.5)
    with pytest.raises(DomainError):
        CausticSpec(1.2, 2.0)
    with pytest.raises(DomainError):
        CausticSpec(0.5, 0.9)
    with pytest.raises(DomainError):
        rho_twist(0.8, 0.1)  # twist data needs b < 1/sqrt(2)


def test_caustic_parametrizations_agree():
    b, t = 0.6, 0.25
    spec = CausticSpec(math.sqrt(1 - b * b), 1 / math.sin(t))
    assert rho_kolodziej(spec) == pytest.approx(rho_kolodziej_t(b, t), abs=1e-15)
    assert 0 < rho_kolodziej(spec) < 1


def test_rotation_number_limit_and_symmetry():
    b = 0.6
    assert rho_kolodziej_t(b, 1e-7) == pytest.approx(theta(b) / (2 * math.pi), abs=1e-12)
    assert rho_kolodziej_t(b, -0.2) == rho_kolodziej_t(b, 0.2)
    assert rho_twist(b, 0.0) == pytest.approx(theta(b) / (2 * math.pi), abs=1e-15)


def test_rotation_number_increases_near_the_orbit():
    b = 0.6
    ts = np.linspace(0.02, 0.3, 8)
    kol = [rho_kolodziej_t(b, t) for t in ts]
    tw = [rho_twist(b, t) for t in ts]
    assert np.all(np.diff(kol) > 0)
    assert np.all(np.diff(tw) > 0)


@pytest.mark.parametrize("b", [0.3, 0.6])
def test_even_derivatives_at_the_orbit(b):
    assert fd_second(lambda t: rho_kolodziej_t(b, t)) == pytest.approx(rho2_exact(b), rel=1e-5)
    assert fd_second(lambda t: rho_twist(b, t)) == pytest.approx(rho2_exact(b), rel=1e-5)
    assert fd_fourth(lambda t: rho_kolodziej_t(b, t)) == pytest.approx(rho4_exact(b), rel=1e-3)
    assert fd_fourth(lambda t: rho_twist(b, t)) == pytest.approx(rho4_exact(b), rel=1e-3)


def test_twist_expansion_error_is_sixth_order():
    b = 0.6
    ts = np.array([0.05, 0.1, 0.2])
    err = np.array([abs(rho_kolodziej_t(b, t) - rho_twist(b, t)) for t in ts])
    slope = np.polyfit(np.log(ts), np.log(err), 1)[0]
    assert slope >= 5.5


def test_orbit_winding_matches_exact_rotation_number():
    b, t = 0.6, 0.1
    est = rho_numeric_estimate(ellipse_table(b), ellipse_start(b, t), 20_000)
    assert not est.left_domain
    assert est.rho == pytest.approx(rho_kolodziej_t(b, t), abs=1e-10)
    assert est.stderr < 1e-9


def test_report_and_csv():
    rep = rotation_report(0.6, 0.1, numeric=False)
    d = rep.to_dict()
    assert d["rho_numeric"] is None
    assert d["residuals"]["kolodziej_minus_numeric"] is None
    assert abs(d["residuals"]["kolodziej_minus_twist"]) < 1e-7
    assert d["derivatives"]["expected"][2] == pytest.approx(rho2_exact(0.6))
    rows = comparison_rows(0.6, [0.05, 0.1], numeric=False)
    parsed = list(csv.reader(io.StringIO(comparison_csv_text(rows))))
    assert tuple(parsed[0]) == COMPARISON_HEADER
    assert len(parsed) == 3
    assert math.isnan(float(parsed[1][3]))
