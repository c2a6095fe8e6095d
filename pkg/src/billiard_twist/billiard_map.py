"""Exact billiard map near the period-2 orbit.

Phase points are ``(arc, s, u)`` with ``s`` the arclength from the arc's
vertex (counterclockwise) and ``u = -cos(theta)``, ``theta`` being the angle
from the positive tangent to the outgoing ray.  Internally the map works on
the graph parameter ``t`` of each arc, which avoids an arclength inversion
per bounce; conversions happen only at the public boundary.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import TextIO

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq

from .errors import DomainError, OrbitLeftDomainError
from .geometry import BoundaryProfile, TableConfig

U_MAX = 1 - 1e-9
NEWTON_TOL = 1e-15
BRACKET_SAMPLES = 64

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(48)


@dataclass(frozen=True)
class PhasePoint:
    arc: int
    s: float
    u: float

    def __post_init__(self) -> None:
        if self.arc not in (0, 1):
            raise DomainError("arc must be 0 or 1")
        if not abs(self.u) < 1:
            raise DomainError("|u| must be below 1")


@dataclass(frozen=True)
class OrbitSegment:
    points: tuple[PhasePoint, ...]
    chords: tuple[float, ...]
    left_domain: bool = False
    message: str = ""

    def __len__(self) -> int:
        return len(self.points)


@dataclass
class _RawOrbit:
    arcs: np.ndarray
    t: np.ndarray
    u: np.ndarray
    chords: np.ndarray
    left_domain: bool = False
    message: str = ""
    extra: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------
# arclength


def arclength(profile: BoundaryProfile, t: float) -> float:
    """``s(t) = int_0^t sqrt(1 + a'(x)^2) dx`` by adaptive quadrature."""
    if not abs(t) <= profile.eps:
        raise DomainError(f"|t| = {abs(t):.6g} exceeds the arc domain {profile.eps:.6g}")
    if profile.flat or t == 0:
        return float(t)
    val, _ = quad(lambda x: math.sqrt(1 + profile.slope(x) ** 2), 0.0, t, epsabs=1e-14, epsrel=1e-13, limit=200)
    return val


def arclength_array(profile: BoundaryProfile, t: np.ndarray) -> np.ndarray:
    """Vectorized ``s(t)`` by fixed 48-point Gauss-Legendre quadrature."""
    t = np.asarray(t, dtype=float)
    if profile.flat:
        return t.copy()
    half = 0.5 * t[..., None]
    x = half * (_GL_NODES + 1.0)
    speed = np.sqrt(1.0 + profile.slope_array(x) ** 2)
    return (half * speed * _GL_WEIGHTS).sum(axis=-1)


def arclength_inverse(profile: BoundaryProfile, s: float) -> float:
    """Graph parameter ``t`` with ``s(t) = s`` by safeguarded Newton."""
    if profile.flat:
        if not abs(s) <= profile.eps:
            raise DomainError("arclength outside the arc domain")
        return float(s)
    smax = arclength(profile, profile.eps)
    if not abs(s) <= smax:
        raise DomainError(f"|s| = {abs(s):.6g} exceeds the arc length {smax:.6g}")
    lo, hi = -profile.eps, profile.eps
    t = s / math.sqrt(1 + profile.slope(0.5 * s) ** 2)
    for _ in range(60):
        g = arclength(profile, t) - s
        if g > 0:
            hi = t
        else:
            lo = t
        step = g / math.sqrt(1 + profile.slope(t) ** 2)
        nt = t - step
        if not lo <= nt <= hi:
            nt = 0.5 * (lo + hi)
        if abs(nt - t) <= 1e-16 * max(1.0, abs(t)):
            return nt
        t = nt
    return t


# ---------------------------------------------------------------------------
# one bounce in graph coordinates


def _direction(dep: BoundaryProfile, t: float, u: float) -> tuple[float, float, float, float]:
    """Departure point and unit direction in the departure arc's frame."""
    sl = dep.slope(t)
    inv = 1.0 / math.sqrt(1.0 + sl * sl)
    st = math.sqrt(1.0 - u * u)
    return dep.height(t), -t, (st - u * sl) * inv, (u + st * sl) * inv


def _bracket_root(arr: BoundaryProfile, L: float, px: float, py: float, dx: float, dy: float, guess: float) -> float:
    grid = np.linspace(-arr.eps, arr.eps, BRACKET_SAMPLES)
    f = (L - arr.height_array(grid) - px) * dy - (grid - py) * dx
    forward = (L - arr.height_array(grid) - px) * dx + (grid - py) * dy
    candidates = [
        i for i in range(BRACKET_SAMPLES - 1) if f[i] * f[i + 1] <= 0 and max(forward[i], forward[i + 1]) > 0
    ]
    if not candidates:
        raise OrbitLeftDomainError("ray misses the opposite arc inside its domain")
    i = min(candidates, key=lambda k: abs(0.5 * (grid[k] + grid[k + 1]) - guess))

    def fun(x: float) -> float:
        return (L - arr.height(x) - px) * dy - (x - py) * dx

    return brentq(fun, grid[i], grid[i + 1], xtol=1e-16, rtol=4.5e-16)


def bounce(dep: BoundaryProfile, arr: BoundaryProfile, L: float, t: float, u: float) -> tuple[float, float, float]:
    """One reflection: ``(t, u)`` on ``dep`` to ``(t1, u1)`` on ``arr`` and the chord.

    The impact solves ``(q(t1) - p) x d = 0`` with ``q(t1) = (L - b(t1), t1)``.
    Newton from the flat-wall guess handles the near-orbit regime; if it
    fails to converge inside the domain the root is bracketed on a
    64-point grid and refined with Brent's method.
    """
    if not abs(u) <= U_MAX:
        raise DomainError("near-tangential shot rejected (|u| > 1 - 1e-9)")
    if not abs(t) <= dep.eps:
        raise OrbitLeftDomainError("departure point outside the arc domain")
    px, py, dx, dy = _direction(dep, t, u)
    if dx <= 0:
        raise OrbitLeftDomainError("ray points away from the opposite arc")
    t1 = py + (L - px) / dx * dy
    guess = t1
    ok = False
    for _ in range(40):
        f = (L - arr.height(t1) - px) * dy - (t1 - py) * dx
        fp = -arr.slope(t1) * dy - dx
        step = f / fp
        t1 -= step
        if not abs(t1) < 2 * arr.eps:
            break
        if abs(step) <= NEWTON_TOL * max(1.0, abs(t1)):
            ok = True
            break
    if not ok or not abs(t1) <= arr.eps:
        if abs(guess) > arr.eps and not ok:
            raise OrbitLeftDomainError("ray leaves the opposite arc's domain")
        t1 = _bracket_root(arr, L, px, py, dx, dy, guess)
        if not abs(t1) <= arr.eps:
            raise OrbitLeftDomainError("impact outside the opposite arc's domain")
    qx = L - arr.height(t1)
    ell = math.hypot(qx - px, t1 - py)
    sl = arr.slope(t1)
    u1 = (sl * dx - dy) / math.sqrt(1.0 + sl * sl)
    return t1, u1, ell


def _orbit_tu(table: TableConfig, arc: int, t: float, u: float, n: int, stride: int = 1) -> _RawOrbit:
    """Iterate ``n`` bounces, keeping every ``stride``-th state."""
    L = table.L
    profiles = (table.left, table.right)
    arcs, ts, us, chords = [arc], [t], [u], []
    left, msg = False, ""
    acc = 0.0
    for i in range(1, n + 1):
        try:
            t, u, ell = bounce(profiles[arc], profiles[1 - arc], L, t, u)
        except (OrbitLeftDomainError, DomainError) as exc:
            left, msg = True, f"step {i}: {exc}"
            break
        arc = 1 - arc
        acc += ell
        if i % stride == 0:
            arcs.append(arc)
            ts.append(t)
            us.append(u)
            chords.append(acc)
            acc = 0.0
    return _RawOrbit(np.array(arcs), np.array(ts), np.array(us), np.array(chords), left, msg)


def _s_values(table: TableConfig, arcs: np.ndarray, ts: np.ndarray) -> np.ndarray:
    s = np.empty_like(ts)
    for a in (0, 1):
        mask = arcs == a
        if mask.any():
            s[mask] = arclength_array(table.profile(a), ts[mask])
    return s


# ---------------------------------------------------------------------------
# public map


def step(table: TableConfig, point: PhasePoint) -> tuple[PhasePoint, float]:
    """Apply the billiard map once, returning the new point and the chord length."""
    dep = table.profile(point.arc)
    arr = table.profile(1 - point.arc)
    t = arclength_inverse(dep, point.s)
    t1, u1, ell = bounce(dep, arr, table.L, t, point.u)
    return PhasePoint(1 - point.arc, arclength(arr, t1), u1), ell


def iterate(table: TableConfig, point: PhasePoint, n: int) -> OrbitSegment:
    """Orbit of length ``n``; stops early with ``left_domain`` set if it escapes."""
    if n < 0:
        raise ValueError("n must be non-negative")
    t = arclength_inverse(table.profile(point.arc), point.s)
    raw = _orbit_tu(table, point.arc, t, point.u, n)
    s = _s_values(table, raw.arcs, raw.t)
    s[0] = point.s
    pts = tuple(PhasePoint(int(a), float(si), float(ui)) for a, si, ui in zip(raw.arcs, s, raw.u))
    return OrbitSegment(pts, tuple(float(c) for c in raw.chords), raw.left_domain, raw.message)


def to_cartesian(table: TableConfig, point: PhasePoint) -> tuple[np.ndarray, np.ndarray]:
    """Impact position and outgoing unit direction in table coordinates.

    The left vertex is the origin and the right vertex is ``(L, 0)``.
    """
    dep = table.profile(point.arc)
    t = arclength_inverse(dep, point.s)
    px, py, dx, dy = _direction(dep, t, point.u)
    if point.arc == 0:
        return np.array([px, py]), np.array([dx, dy])
    return np.array([table.L - px, -py]), np.array([-dx, -dy])


def orbit_rows(segment: OrbitSegment) -> list[tuple]:
    rows = []
    for i, p in enumerate(segment.points):
        chord = segment.chords[i - 1] if i > 0 else ""
        rows.append((i, p.arc, repr(p.s), repr(p.u), repr(chord) if chord != "" else ""))
    return rows


def write_orbit_csv(segment: OrbitSegment, target: str | Path | TextIO) -> None:
    """CSV with header ``n,arc,s,u,chord``; the first row has an empty chord."""
    if isinstance(target, (str, Path)):
        with open(target, "w", newline="", encoding="utf-8") as fh:
            write_orbit_csv(segment, fh)
        return
    writer = csv.writer(target, lineterminator="\n")
    writer.writerow(["n", "arc", "s", "u", "chord"])
    writer.writerows(orbit_rows(segment))


def orbit_csv_text(segment: OrbitSegment) -> str:
    buf = io.StringIO()
    write_orbit_csv(segment, buf)
    return buf.getvalue()
