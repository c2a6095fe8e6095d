import csv
import io
import math

import numpy as np
import pytest
from scipy.special import ellipeinc

from billiard_twist.billiard_map import (
    PhasePoint,
    arclength,
    arclength_array,
    arclength_inverse,
    iterate,
    orbit_csv_text,
    step,
    to_cartesian,
    write_orbit_csv,
)
from billiard_twist.errors import DomainError
from billiard_twist.geometry import CurvatureJet, TableConfig, named_profile, profile_from_curvature
from billiard_twist.jets import map_jet
from billiard_twist.tables import asymmetric_lemon, ellipse, eh_lens_shift, lemon


def random_tables(n, seed=7):
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n):
        R0, R1 = rng.uniform(0.8, 2.5, 2)
        L = rng.uniform(0.3, 0.9) * min(R0, R1)
        left = profile_from_curvature(CurvatureJet(R0, rng.uniform(-1, 1), rng.uniform(-2, 2)))
        right = profile_from_curvature(CurvatureJet(R1, rng.uniform(-1, 1), rng.uniform(-2, 2)))
        out.append(TableConfig(L, left, right))
    return out


def fd_jacobian(table, p, h=1e-6):
    cols = []
    for ds, du in ((h, 0.0), (0.0, h)):
        plus, _ = step(table, PhasePoint(p.arc, p.s + ds, p.u + du))
        minus, _ = step(table, PhasePoint(p.arc, p.s - ds, p.u - du))
        cols.append([(plus.s - minus.s) / (2 * h), (plus.u - minus.u) / (2 * h)])
    return np.array(cols).T


def test_vertices_form_period_two_orbit():
    table = eh_lens_shift(2.0, 0.3)
    p1, ell = step(table, PhasePoint(0, 0.0, 0.0))
    assert (p1.arc, p1.s, p1.u) == (1, pytest.approx(0.0, abs=1e-15), pytest.approx(0.0, abs=1e-15))
    assert ell == pytest.approx(table.L)
    p2, _ = step(table, p1)
    assert p2.arc == 0 and abs(p2.s) < 1e-15 and abs(p2.u) < 1e-15


@pytest.mark.parametrize("table", random_tables(10), ids=lambda t: f"L={t.L:.3f}")
def test_map_preserves_area(table):
    rng = np.random.default_rng(3)
    for _ in range(10):
        arc = int(rng.integers(2))
        p = PhasePoint(arc, rng.uniform(-0.1, 0.1), rng.uniform(-0.1, 0.1))
        assert np.linalg.det(fd_jacobian(table, p)) == pytest.approx(1.0, abs=1e-7)


def test_reversibility():
    table = asymmetric_lemon(1.0, 2.0, 0.5)
    p = PhasePoint(0, 0.07, -0.04)
    q, _ = step(table, p)
    back, _ = step(table, PhasePoint(q.arc, q.s, -q.u))
    assert back.arc == 0
    assert back.s == pytest.approx(p.s, abs=1e-13)
    assert back.u == pytest.approx(-p.u, abs=1e-13)


def test_linear_part_matches_jet():
    table = random_tables(1, seed=11)[0]
    for source in (0, 1):
        J = fd_jacobian(table, PhasePoint(source, 0.0, 0.0))
        np.testing.assert_allclose(J, map_jet(table, source).linear_matrix(), atol=1e-8)


def radius_at(profile, t):
    curv2 = sum(c * (2 * i + 2) * (2 * i + 1) * t ** (2 * i) for i, c in enumerate(profile.coeffs))
    return (1 + profile.slope(t) ** 2) ** 1.5 / curv2


@pytest.mark.parametrize("table", random_tables(3, seed=5), ids=lambda t: f"L={t.L:.3f}")
def test_first_partials_off_the_orbit(table):
    p = PhasePoint(0, 0.08, -0.11)
    q, ell = step(table, p)
    R = radius_at(table.left, arclength_inverse(table.left, p.s))
    R1 = radius_at(table.right, arclength_inverse(table.right, q.s))
    w, w1 = math.sqrt(1 - p.u**2), math.sqrt(1 - q.u**2)
    # diagonal terms carry w/w1 and w1/w; this is what det = 1 forces
    expected = np.array(
        [
            [ell / (R * w1) - w / w1, ell / (w * w1)],
            [ell / (R * R1) - w1 / R - w / R1, ell / (R1 * w) - w1 / w],
        ]
    )
    np.testing.assert_allclose(fd_jacobian(table, p), expected, rtol=0, atol=2e-8)


def test_arclength_flat_circle_ellipse():
    flat = named_profile("flat")
    assert arclength(flat, 0.3) == pytest.approx(0.3, abs=1e-15)
    R = 1.7
    circ = named_profile("circle", [R], 30)
    for t in (0.1, 0.5, 0.9):
        assert arclength(circ, t) == pytest.approx(R * math.asin(t / R), rel=1e-13)
    b = 0.6
    ell = named_profile("ellipse_minor_vertex", [b], 40)
    t = np.array([-0.4, 0.2, 0.5])
    np.testing.assert_allclose(arclength_array(ell, t), ellipeinc(np.arcsin(t), 1 - b * b), rtol=1e-13)
    s = arclength(ell, 0.45)
    assert arclength_inverse(ell, s) == pytest.approx(0.45, abs=1e-14)


def test_joachimsthal_invariant_in_ellipse():
    b = 0.6
    table = ellipse(b)
    seg = iterate(table, PhasePoint(0, 0.05, 0.2), 200)
    assert not seg.left_domain

    def J(p):
        x, v = to_cartesian(table, p)
        return abs((x[0] - b) * v[0] / b**2 + x[1] * v[1])

    vals = np.array([J(p) for p in seg.points])
    assert np.ptp(vals) < 1e-12


def test_orbit_leaving_domain_is_flagged():
    table = lemon(0.5)
    seg = iterate(table, PhasePoint(0, 0.0, 0.95), 10)
    assert seg.left_domain
    assert seg.message
    assert len(seg) < 11


def test_orbits_near_elliptic_orbit_stay_bounded():
    table = asymmetric_lemon(1.0, 2.0, 0.5)
    seg = iterate(table, PhasePoint(0, 0.01, 0.0), 2000)
    assert not seg.left_domain
    assert max(abs(p.s) + abs(p.u) for p in seg.points) < 0.1


def test_phase_point_validation():
    with pytest.raises(DomainError):
        PhasePoint(2, 0.0, 0.0)
    with pytest.raises(DomainError):
        PhasePoint(0, 0.0, 1.0)
    with pytest.raises(ValueError):
        iterate(lemon(0.5), PhasePoint(0, 0.0, 0.0), -1)


def test_orbit_csv(tmp_path):
    seg = iterate(lemon(0.5), PhasePoint(0, 0.01, 0.02), 5)
    text = orbit_csv_text(seg)
    rows = list(csv.reader(io.StringIO(text)))
    assert rows[0] == ["n", "arc", "s", "u", "chord"]
    assert len(rows) == 7
    assert rows[1][4] == ""
    assert float(rows[2][4]) == pytest.approx(seg.chords[0])
    path = tmp_path / "orbit.csv"
    write_orbit_csv(seg, path)
    assert path.read_text() == text
    empty = iterate(lemon(0.5), PhasePoint(0, 0.0, 0.0), 0)
    assert len(empty) == 1 and empty.chords == ()
