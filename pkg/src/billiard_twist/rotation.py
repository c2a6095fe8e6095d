"""Rotation numbers of ``F^2`` on the invariant circles of the ellipse's minor-axis orbit.

Three routes are compared: the exact elliptic-integral formula for
hyperbolic caustics, the fourth-order twist expansion and direct
measurement of the winding of long orbits.  The ellipse is
``x^2/b^2 + y^2 = 1`` with the orbit along the minor axis; ``t`` is the
angular parameter of the launch point ``(b cos t, sin t)``, from which the
ray leaves along the inward normal.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Callable, Sequence, TextIO

import numpy as np
from scipy.special import ellipeinc, ellipkinc

from .billiard_map import PhasePoint, _orbit_tu, _s_values, arclength_inverse
from .errors import DomainError, InvalidParameterError
from .geometry import TableConfig, named_profile
from .jets import compose_maps, map_jet
from .normal_form import linearize, normal_form_of_jet

B_MAX_TWIST = 1 / math.sqrt(2)
ELLIPSE_TERMS = 40
ELLIPSE_EPS = 0.6


def _check_elliptic_args(alpha: float, k: float) -> None:
    if not 0 <= k < 1:
        raise DomainError(f"elliptic modulus must lie in [0, 1), got {k}")
    if not -1e-15 <= alpha <= math.pi / 2 + 1e-15:
        raise DomainError(f"amplitude must lie in [0, pi/2], got {alpha}")


def elliptic_F(alpha: float, k: float) -> float:
    """Incomplete integral of the first kind, ``int_0^alpha dθ / sqrt(1 - k² sin² θ)``."""
    _check_elliptic_args(alpha, k)
    return float(ellipkinc(alpha, k * k))


def elliptic_E(alpha: float, k: float) -> float:
    """Incomplete integral of the second kind, ``int_0^alpha sqrt(1 - k² sin² θ) dθ``."""
    _check_elliptic_args(alpha, k)
    return float(ellipeinc(alpha, k * k))


@dataclass(frozen=True)
class CausticSpec:
    """Ellipse eccentricity ``e`` and confocal hyperbolic caustic eccentricity ``h``."""

    e: float
    h: float

    def __post_init__(self) -> None:
        if not 0 < self.e < 1:
            raise DomainError("ellipse eccentricity must lie in (0, 1)")
        if not self.h > 1:
            raise DomainError("hyperbola eccentricity must exceed 1")

    @property
    def k(self) -> float:
        return 2 * math.sqrt(self.h) / (1 + self.h)

    @property
    def delta(self) -> float:
        h2 = self.h * self.h
        return math.asin(self.e * (h2 - 1) / (h2 - self.e**2))


def rho_kolodziej(caustic: CausticSpec) -> float:
    """Exact rotation number ``[F(π/2 - δ/2, k) - F(δ/2, k)] / F(π/2, k)``."""
    k, d = caustic.k, caustic.delta
    return (elliptic_F(math.pi / 2 - d / 2, k) - elliptic_F(d / 2, k)) / elliptic_F(math.pi / 2, k)


def _check_b(b: float, upper: float = 1.0) -> None:
    if not 0 < b < upper:
        raise DomainError(f"b must lie in (0, {upper:.6g}), got {b}")


def theta(b: float) -> float:
    """Rotation angle of the linearized ``F^2`` at the orbit, in ``(0, π)``."""
    _check_b(b)
    return math.acos(2 * (1 - 2 * b * b) ** 2 - 1)


def rho_kolodziej_t(b: float, t: float) -> float:
    """Exact rotation number on the circle through the normal launch at angle ``t``.

    At ``t = 0`` the circle degenerates to the fixed point and the
    limiting value ``θ/(2π)`` is returned.
    """
    _check_b(b)
    st = abs(math.sin(t))
    if st == 0:
        return theta(b) / (2 * math.pi)
    k = 2 * math.sqrt(st) / (1 + st)
    c2 = 1 - b * b
    d = math.asin(math.sqrt(c2) * (1 - st * st) / (1 - c2 * st * st))
    return (elliptic_F(math.pi / 2 - d / 2, k) - elliptic_F(d / 2, k)) / elliptic_F(math.pi / 2, k)


def ellipse_table(b: float, terms: int = ELLIPSE_TERMS, eps: float = ELLIPSE_EPS) -> TableConfig:
    """Both minor-axis arcs of ``x^2/b^2 + y^2 = 1`` as long even series."""
    _check_b(b)
    prof = named_profile("ellipse_minor_vertex", [b], terms=terms).with_eps(eps)
    return TableConfig.mirror(2 * b, prof)


@dataclass(frozen=True)
class TwistData:
    eta: float
    theta: float
    tau1: float
    tau2: float
    p30: float


@lru_cache(maxsize=64)
def twist_data(b: float) -> TwistData:
    """Normal-form constants of the ellipse entering the twist expansion."""
    _check_b(b, B_MAX_TWIST)
    nf = normal_form_of_jet(map_jet(ellipse_table(b, terms=8), 0, 5))
    o3, o5 = nf["o3"], nf["o5"]
    return TwistData(nf["linear"].eta, theta(b), o3.tau1, o5.tau2, o3.p[(3, 0)])


def rho_twist(b: float, t: float) -> float:
    """Fourth-order twist prediction ``(θ + b η⁻²s² + 2(p30 b + τ2) η⁻⁴ s⁴) / 2π``.

    ``s = E(t, sqrt(1 - b²))`` is the arclength of the launch point, ``τ2``
    the second twist coefficient of the one-step map and ``p30`` the cubic
    ``x^3`` coefficient of the normalizing transform.
    """
    _check_b(b, B_MAX_TWIST)
    d = twist_data(b)
    s = math.copysign(elliptic_E(abs(t), math.sqrt(1 - b * b)), t)
    s2 = (s / d.eta) ** 2
    return (d.theta + b * s2 + 2 * (d.p30 * b + d.tau2) * s2 * s2) / (2 * math.pi)


def ellipse_start(b: float, t: float) -> PhasePoint:
    """Phase point of the normal launch at angle ``t`` on the left arc."""
    return PhasePoint(0, math.copysign(elliptic_E(abs(t), math.sqrt(1 - b * b)), t), 0.0)


@dataclass(frozen=True)
class WindingEstimate:
    rho: float
    stderr: float
    iterates: int
    left_domain: bool = False
    message: str = ""


def _bump_weights(n: int) -> np.ndarray:
    x = (np.arange(1, n + 1)) / (n + 1)
    w = np.exp(-1.0 / (x * (1 - x)))
    return w / w.sum()


def rho_numeric_estimate(table: TableConfig, start: PhasePoint, n: int) -> WindingEstimate:
    """Winding of ``n`` iterates of ``F^2`` around the fixed point.

    Angles are taken in the linearized frame ``(s/η, η u)`` where the
    linear part is a rotation, with its angle folded into ``(0, π)``.
    Increments are unwrapped around that angle and combined by a
    smooth-weight Birkhoff average, which converges far faster than the
    plain mean on quasi-periodic circles.  ``stderr`` is
    the spread between the averages over the full orbit and its first half.
    """
    if n < 1:
        raise InvalidParameterError("n must be at least 1")
    if table.symmetric:
        linear, _, _ = linearize(map_jet(table, 0, 1))
        base = math.acos(math.cos(2 * linear.theta))
    else:
        linear, _, _ = linearize(compose_maps(map_jet(table, 0, 1), map_jet(table, 1, 1)))
        base = math.acos(math.cos(linear.theta))
    if start.s == 0 and start.u == 0:
        return WindingEstimate(base / (2 * math.pi), 0.0, 0)
    t0 = arclength_inverse(table.profile(start.arc), start.s)
    raw = _orbit_tu(table, start.arc, t0, start.u, 2 * n, stride=2)
    m = len(raw.t) - 1
    if m < 2:
        raise DomainError(f"orbit left the arc domain immediately: {raw.message}")
    s = _s_values(table, raw.arcs, raw.t)
    eta = linear.eta
    ang = np.arctan2(eta * raw.u, s / eta)
    inc = np.diff(ang)
    # orientation of the linear rotation in this frame
    sign = 1.0 if np.mean(np.sin(inc)) >= 0 else -1.0
    inc = sign * inc
    inc = base + np.mod(inc - base + math.pi, 2 * math.pi) - math.pi
    full = float(_bump_weights(m) @ inc) / (2 * math.pi)
    half = float(_bump_weights(m // 2) @ inc[: m // 2]) / (2 * math.pi) if m >= 4 else full
    return WindingEstimate(full, abs(full - half), m, raw.left_domain, raw.message)


def rho_numeric(table: TableConfig, start: PhasePoint, n: int) -> float:
    est = rho_numeric_estimate(table, start, n)
    if est.left_domain:
        raise DomainError(f"orbit left the arc domain: {est.message}")
    return est.rho


# ---------------------------------------------------------------------------
# derivatives at t = 0


def fd_second(f: Callable[[float], float], h: float = 1e-3) -> float:
    return (f(h) - 2 * f(0.0) + f(-h)) / (h * h)


def fd_fourth(f: Callable[[float], float], h: float = 5e-3) -> float:
    """Central fourth difference with one Richardson step (error O(h^4))."""

    def d4(k: float) -> float:
        return (f(2 * k) - 4 * f(k) + 6 * f(0.0) - 4 * f(-k) + f(-2 * k)) / k**4

    return (4 * d4(h) - d4(2 * h)) / 3


def fd_first(f: Callable[[float], float], h: float = 1e-3) -> float:
    return (f(h) - f(-h)) / (2 * h)


def fd_third(f: Callable[[float], float], h: float = 5e-3) -> float:
    return (f(2 * h) - 2 * f(h) + 2 * f(-h) - f(-2 * h)) / (2 * h**3)


def rho2_exact(b: float) -> float:
    return b * math.sqrt(1 - b * b) / math.pi


def rho4_exact(b: float) -> float:
    return b * (17 - 18 * b * b) * math.sqrt(1 - b * b) / (4 * math.pi)


def derivative_table(f: Callable[[float], float]) -> list[float]:
    """``[ρ(0), ρ'(0), ρ''(0), ρ'''(0), ρ''''(0)]`` by central differences."""
    return [f(0.0), fd_first(f), fd_second(f), fd_third(f), fd_fourth(f)]


@dataclass
class RotationReport:
    b: float
    t: float
    rho_kolodziej: float
    rho_twist: float
    rho_numeric: float | None
    numeric_stderr: float | None
    derivatives_kolodziej: list[float] = field(default_factory=list)
    derivatives_twist: list[float] = field(default_factory=list)
    derivatives_expected: list[float] = field(default_factory=list)

    @property
    def residuals(self) -> dict[str, float | None]:
        num = self.rho_numeric
        return {
            "kolodziej_minus_twist": self.rho_kolodziej - self.rho_twist,
            "kolodziej_minus_numeric": None if num is None else self.rho_kolodziej - num,
        }

    def to_dict(self) -> dict:
        return {
            "b": self.b,
            "t": self.t,
            "rho_kolodziej": self.rho_kolodziej,
            "rho_twist": self.rho_twist,
            "rho_numeric": self.rho_numeric,
            "numeric_stderr": self.numeric_stderr,
            "derivatives": {
                "kolodziej": self.derivatives_kolodziej,
                "twist": self.derivatives_twist,
                "expected": self.derivatives_expected,
            },
            "residuals": self.residuals,
        }


def rotation_report(b: float, t: float, n: int = 100_000, numeric: bool = True) -> RotationReport:
    kol = rho_kolodziej_t(b, t)
    tw = rho_twist(b, t)
    num = err = None
    if numeric:
        est = rho_numeric_estimate(ellipse_table(b), ellipse_start(b, t), n)
        num, err = est.rho, est.stderr
    expected = [theta(b) / (2 * math.pi), 0.0, rho2_exact(b), 0.0, rho4_exact(b)]
    return RotationReport(
        b,
        t,
        kol,
        tw,
        num,
        err,
        derivative_table(lambda x: rho_kolodziej_t(b, x)),
        derivative_table(lambda x: rho_twist(b, x)),
        expected,
    )


COMPARISON_HEADER = ("t", "rho_kol", "rho_twist", "rho_num", "err_kt", "err_kn")


def comparison_rows(b: float, ts: Sequence[float], n: int = 100_000, numeric: bool = True) -> list[tuple[float, ...]]:
    table = ellipse_table(b)
    rows = []
    for t in ts:
        kol, tw = rho_kolodziej_t(b, t), rho_twist(b, t)
        num = rho_numeric(table, ellipse_start(b, t), n) if numeric else math.nan
        rows.append((t, kol, tw, num, kol - tw, kol - num))
    return rows


def write_comparison_csv(rows: Sequence[Sequence[float]], target: str | Path | TextIO) -> None:
    if isinstance(target, (str, Path)):
        with open(target, "w", newline="", encoding="utf-8") as fh:
            write_comparison_csv(rows, fh)
        return
    writer = csv.writer(target, lineterminator="\n")
    writer.writerow(COMPARISON_HEADER)
    writer.writerows([repr(float(x)) for x in row] for row in rows)


def comparison_csv_text(rows: Sequence[Sequence[float]]) -> str:
    buf = io.StringIO()
    write_comparison_csv(rows, buf)
    return buf.getvalue()
