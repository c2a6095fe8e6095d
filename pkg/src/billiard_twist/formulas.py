"""Closed-form twist coefficients, stability classification and named examples."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
import numpy as np
from scipy.optimize import bisect

from .errors import DomainError, NotApplicableError, PoleError, StabilityError
from .geometry import CurvatureJet, curvature_jet, named_profile, profile_from_curvature

GUARD = 1e-12
RESONANCE_TOL = 1e-8


# ---------------------------------------------------------------------------
# stability and nonresonance


@dataclass(frozen=True)
class StabilityReport:
    cls: str
    symmetric: bool
    flags: dict[str, bool]
    lam: complex | None = None
    moser_stable: bool | None = None

    def with_twist(self, tau1: float | None, tau2: float | None, zero_tol: float = 1e-12) -> StabilityReport:
        """Moser-type conclusion from the twist coefficients.

        Needs the first flag for ``tau1`` and both flags for ``tau2``;
        otherwise the conclusion is left undecided (``None``).
        """
        first, second = ("A1", "A2") if self.symmetric else ("B1", "B2")
        verdict = None
        if self.cls == "elliptic" and self.flags.get(first) and tau1 is not None:
            if abs(tau1) > zero_tol:
                verdict = True
            elif self.flags.get(second) and tau2 is not None:
                verdict = abs(tau2) > zero_tol
        return StabilityReport(self.cls, self.symmetric, self.flags, self.lam, verdict)

    def to_dict(self) -> dict:
        return {
            "class": self.cls,
            "symmetric": self.symmetric,
            "flags": dict(self.flags),
            "lambda": None if self.lam is None else [self.lam.real, self.lam.imag],
            "moser_stable": self.moser_stable,
        }


def classify(L: float, R0: float, R1: float | None = None, symmetric: bool | None = None) -> StabilityReport:
    """Type of the period-2 orbit and the nonresonance predicates.

    A symmetric table is classified through its one-step map: elliptic for
    ``0 < L/R < 2``, with (A1) ``lambda^4 != 1`` and (A2) ``lambda^6 != 1``.
    Otherwise ``F^2`` is used, whose trace is ``2 P - 1`` with
    ``P = (L/R0 - 1)(L/R1 - 1)``: elliptic for ``0 < P < 1``, (B1) excludes
    ``P = 1/2`` and (B2) excludes ``P = 1/4, 3/4``.  ``inf`` marks a flat arc.
    """
    if R1 is None:
        R1 = R0
    if symmetric is None:
        symmetric = R0 == R1
    if symmetric:
        half_trace = L / R0 - 1
        keys = ("A1", "A2")
    else:
        half_trace = 2 * (L / R0 - 1) * (L / R1 - 1) - 1
        keys = ("B1", "B2")
    if abs(abs(half_trace) - 1) <= GUARD:
        return StabilityReport("parabolic", symmetric, {keys[0]: False, keys[1]: False})
    if abs(half_trace) > 1:
        return StabilityReport("hyperbolic", symmetric, {keys[0]: False, keys[1]: False})
    lam = complex(half_trace, -math.sqrt(1 - half_trace**2))
    flags = {
        keys[0]: abs(lam**4 - 1) >= RESONANCE_TOL,
        keys[1]: abs(lam**4 - 1) >= RESONANCE_TOL and abs(lam**6 - 1) >= RESONANCE_TOL,
    }
    return StabilityReport("elliptic", symmetric, flags, lam)


# ---------------------------------------------------------------------------
# symmetric tables, one-step map


def tau1_sym(L: float, R: float, R2: float) -> float:
    return 1 / (8 * R) - L * R2 / (8 * (2 * R - L))


def tau2_sym(L: float, R: float, R2: float, R4: float) -> float:
    if abs(L - R) < GUARD * R:
        raise PoleError("R - L")
    if not 0 < L < 2 * R:
        raise StabilityError("hyperbolic" if L > 2 * R else "parabolic")
    m = 2 * R - L
    return (
        3 * (7 * R**2 - 8 * R * L + 2 * L**2) / (256 * R**2 * (R - L) * math.sqrt(L * m))
        - math.sqrt(L) * (27 * R**2 - 40 * R * L + 10 * L**2) * R2 / (384 * R * (R - L) * m**1.5)
        + L**1.5 * (31 * R**2 - 36 * R * L + 6 * L**2) * R2**2 / (768 * (R - L) * m**2.5)
        - L**1.5 * R * R4 / (192 * m**1.5)
    )


def third_partials(L: float, R: float, R2: float) -> dict[tuple[str, int, int], float]:
    """Third-order partials of ``(s1, u1)`` at the orbit of a symmetric table.

    Keys are ``(component, j, k)`` for ``d^3 / ds^j du^k``.
    """
    return {
        ("s1", 3, 0): (L**3 - 6 * L**2 * R + 11 * L * R**2 - 6 * R**3) / R**5 - L * R2 / R**2,
        ("s1", 2, 1): (L**3 - 5 * L**2 * R + 7 * L * R**2 - 2 * R**3) / R**4,
        ("s1", 1, 2): L * (L - 2 * R) ** 2 / R**3,
        ("s1", 0, 3): L * (L**2 - 3 * L * R + 3 * R**2) / R**2,
        ("u1", 3, 0): (2 * R - L) / R**4 + (-(L**3) + 3 * L**2 * R - 4 * L * R**2 + 2 * R**3) * R2 / R**5,
        ("u1", 2, 1): (2 * R - L) / R**3 + (-(L**3) + 2 * L**2 * R - L * R**2) * R2 / R**4,
        ("u1", 1, 2): (2 * R - L) / R**2 + (-(L**3) + L**2 * R) * R2 / R**3,
        ("u1", 0, 3): -(L**3) * R2 / R**2,
    }


# ---------------------------------------------------------------------------
# asymmetric tables, F^2


@dataclass(frozen=True)
class TwistInput:
    L: float
    jets: tuple[CurvatureJet, CurvatureJet]

    @property
    def R0(self) -> float:
        return self.jets[0].R

    @property
    def R1(self) -> float:
        return self.jets[1].R

    @property
    def delta(self) -> float:
        L, R0, R1 = self.L, self.R0, self.R1
        return L * (R0 - L) * (R1 - L) * (R0 + R1 - L)

    @property
    def gamma(self) -> float:
        L, R0, R1 = self.L, self.R0, self.R1
        return 2 * (R0 - L) * (R1 - L) - R0 * R1

    @property
    def gamma_alt(self) -> float:
        L, R0, R1 = self.L, self.R0, self.R1
        return (R0 - L) * (R1 - L) - L * (R0 + R1 - L)

    @property
    def k(self) -> int:
        L, R0, R1 = self.L, self.R0, self.R1
        if L < min(R0, R1):
            return 0
        if max(R0, R1) < L < R0 + R1:
            return 1
        raise StabilityError(classify(L, R0, R1, symmetric=False).cls)


def tau1_asym(inp: TwistInput) -> float:
    L = inp.L
    j0, j1 = inp.jets
    if j0.flat and j1.flat:
        raise StabilityError("parabolic")
    if j1.flat or j0.flat:
        R, R2 = (j0.R, j0.R2) if j1.flat else (j1.R, j1.R2)
        if not 0 < L < R:
            raise StabilityError("hyperbolic")
        return (1 / R - L * R2 / (R - L)) / 8
    R0, R1 = j0.R, j1.R
    inp.k  # ellipticity check
    return (
        (R0 + R1) / (R0 * R1)
        - L / (R0 + R1 - L) * ((R1 - L) / (R0 - L) * j0.R2 + (R0 - L) / (R1 - L) * j1.R2)
    ) / 8


def N_poly(L: float, R0: float, R1: float) -> float:
    return (
        8 * L**4 * (R0**2 + R1**2)
        - 16 * L**3 * (R0**3 + 2 * R0**2 * R1 + 2 * R0 * R1**2 + R1**3)
        + 8 * L**2 * (R0 + R1) ** 2 * (R0**2 + 4 * R0 * R1 + R1**2)
        - 8 * L * R0 * R1 * (2 * R0**3 + 7 * R0**2 * R1 + 7 * R0 * R1**2 + 2 * R1**3)
        + 7 * R0**2 * R1**2 * (R0 + R1) ** 2
    )


def P_poly(L: float, R0: float, R1: float) -> float:
    return (
        L**2
        * (R1 - L) ** 4
        * (
            48 * R0**3 * (R1 - 2 * L)
            + 24 * L**2 * (R1 - L) ** 2
            - 72 * L * R0 * (R1 - L) * (R1 - 2 * L)
            + R0**2 * (216 * L**2 - 216 * R1 * L + 31 * R1**2)
        )
    )


def Q_poly(L: float, R0: float, R1: float) -> float:
    return -(L**2) * R0 * R1 * (32 * L**2 + 17 * R0 * R1 - 32 * L * (R0 + R1))


def S_poly(L: float, R0: float, R1: float) -> float:
    return (
        L
        * (R1 - L) ** 2
        * (
            40 * (R1 - L) ** 2 * L**2
            + 3 * R0**3 * (9 * R1 - 16 * L)
            - 80 * R0 * (2 * L**2 - 3 * R1 * L + R1**2) * L
            + 3 * R0**2 * (56 * L**2 - 56 * R1 * L + 9 * R1**2)
        )
    )


def T_poly(L: float, R0: float, R1: float) -> float:
    return L**2 * R0 * (R1 - L) ** 2


def tau2_flat(L: float, jet: CurvatureJet) -> float:
    """``tau2(F^2)`` when the opposite arc is a straight wall."""
    R, R2, R4 = jet.R, jet.R2, jet.R4
    if not 0 < L < R:
        raise StabilityError("hyperbolic" if L > R else "parabolic")
    if abs(R - 2 * L) < GUARD * R:
        raise PoleError("R - 2L")
    w = math.sqrt(L * (R - L))
    return (
        3 * (7 * R**2 - 16 * R * L + 8 * L**2) / (512 * R**2 * (R - 2 * L) * w)
        - L * (27 * R**2 - 80 * R * L + 40 * L**2) * R2 / (768 * R * (R - 2 * L) * w * (R - L))
        + L**2 * (31 * R**2 - 72 * R * L + 24 * L**2) * R2**2 / (1536 * (R - 2 * L) * w * (R - L) ** 2)
        - L**2 * R * R4 / (192 * w * (R - L))
    )


def tau2_asym(inp: TwistInput, flat_formula: bool = True) -> float:
    """``tau2(F^2)`` for an asymmetric table.

    A flat arc is routed to the half-table formula unless
    ``flat_formula=False``, which is only meaningful for finite radii.
    """
    j0, j1 = inp.jets
    if flat_formula and (j0.flat or j1.flat):
        if j0.flat and j1.flat:
            raise StabilityError("parabolic")
        return tau2_flat(inp.L, j0 if j1.flat else j1)
    L, R0, R1 = inp.L, j0.R, j1.R
    sign = -1.0 if inp.k else 1.0
    scale = max(R0, R1, L)
    G = inp.gamma
    if abs(G) < GUARD * scale**2:
        raise PoleError("Gamma")
    for name, f in (("R0 - L", R0 - L), ("R1 - L", R1 - L), ("R0 + R1 - L", R0 + R1 - L)):
        if abs(f) < GUARD * scale:
            raise PoleError(name)
    a, b, c = R0 - L, R1 - L, R0 + R1 - L
    total = (
        3 * N_poly(L, R0, R1) / (512 * R0**2 * R1**2 * G)
        + (P_poly(L, R0, R1) * j0.R2**2 + P_poly(L, R1, R0) * j1.R2**2) / (1536 * a**2 * b**2 * c**2 * G)
        + Q_poly(L, R0, R1) * j0.R2 * j1.R2 / (768 * c**2 * G)
        - (S_poly(L, R0, R1) * R1 * j0.R2 + S_poly(L, R1, R0) * R0 * j1.R2) / (768 * R0 * R1 * a * b * c * G)
        - (T_poly(L, R0, R1) * b * j0.R4 + T_poly(L, R1, R0) * a * j1.R4) / (192 * a * b * c)
    )
    return sign * total / math.sqrt(inp.delta)


def tau1_equal_radii(L: float, R: float, R0_2: float, R1_2: float) -> float:
    return (2 / R - L / (2 * R - L) * (R0_2 + R1_2)) / 8


def tau2_equal_radii(L: float, R: float, R0_2: float, R1_2: float, R0_4: float, R1_4: float) -> float:
    m = 2 * R - L
    return (
        3 * (2 * L**2 - 8 * L * R + 7 * R**2) / (128 * R**2 * (R - L) * math.sqrt(L * m))
        - math.sqrt(L) * (10 * L**2 - 40 * L * R + 27 * R**2) * (R0_2 + R1_2) / (384 * R * (R - L) * m**1.5)
        + (
            L**1.5 * (24 * L**4 - 192 * L**3 * R + 456 * L**2 * R**2 - 384 * L * R**3 + 79 * R**4) * (R0_2**2 + R1_2**2)
            - 2 * L**1.5 * R**2 * (32 * L**2 - 64 * L * R + 17 * R**2) * R0_2 * R1_2
        )
        / (1536 * (R - L) * m**2.5 * (2 * (R - L) ** 2 - R**2))
        - L**1.5 * R * (R0_4 + R1_4) / (192 * m**1.5)
    )


# ---------------------------------------------------------------------------
# pole along L = R


def c03_at_pole(R: float, R2: float) -> complex:
    """``c03`` of the symmetric one-step map at ``L = R``."""
    return -1j * (3 + R * R2) / (24 * R)


def pole_coefficient(R: float, R2: float) -> float:
    """Limit of ``(R - L) tau2_sym`` as ``L -> R``."""
    c03 = c03_at_pole(R, R2)
    L = R
    return float(np.real(-3 * R**4 * c03**2 / (4 * math.sqrt(L) * (2 * R - L) ** 2.5)))


def pole_structure_check(R: float, R2: float, R4: float, m_range: range = range(4, 13)) -> float:
    """Relative residual between the extrapolated and predicted pole coefficient.

    ``(R - L) tau2`` is sampled at ``L = R (1 +- 2^-m)``; averaging the two
    sides cancels the linear term, and a Richardson step on the finest pair
    removes the quadratic one.
    """
    predicted = pole_coefficient(R, R2)
    if abs(predicted) < 1e-14 / R:
        raise NotApplicableError("c03 vanishes at L = R; tau2 has no pole there")
    sym = []
    for m in m_range:
        h = R * 2.0**-m
        vals = [(R - L) * tau2_sym(L, R, R2, R4) for L in (R - h, R + h)]
        sym.append(0.5 * (vals[0] + vals[1]))
    limit = (4 * sym[-1] - sym[-2]) / 3
    return abs(limit - predicted) / abs(predicted)


def pole_order(R: float, R2: float, R4: float, m_range: range = range(6, 13)) -> float:
    """Log-log slope of ``|tau2|`` against ``|R - L|`` approaching the pole."""
    h = np.array([R * 2.0**-m for m in m_range])
    vals = np.array([abs(tau2_sym(R - x, R, R2, R4)) for x in h])
    return float(np.polyfit(np.log(h), np.log(vals), 1)[0])


# ---------------------------------------------------------------------------
# named examples


def rho1(a: float) -> float:
    return (3 * a**4 - 2 * a**2 + 3) / (3 * a**4 + 2 * a**2 + 3)


def eh_shift_jets(a: float) -> tuple[CurvatureJet, CurvatureJet]:
    """Curvature data of the confocal ellipse (index 0) and hyperbola (index 1)."""
    R = a - 1 / a
    ell = CurvatureJet(R, 3 / (a * (a**2 - 1)), -3 * (4 * a**2 - 3) / (a * (a**2 - 1) ** 3))
    hyp = CurvatureJet(R, 3 * a**3 / (a**2 - 1), -3 * a**5 * (4 - 3 * a**2) / (a**2 - 1) ** 3)
    return ell, hyp


def eh_shift_tau1(a: float, s: float) -> float:
    return a / (4 * (a**2 - 1)) - 3 * (a**4 + 1) * (a**2 - a * s - 1) / (8 * a * (a**2 - 1) * (a**2 + a * s - 1))


def _eh_tau2_parts(a: float) -> tuple[float, float]:
    num = a * np.polyval(
        [729, 0, -2214, 0, -315, 0, -2568, 0, -2206, 0, -1188, 0, -2206, 0, -2568, 0, -315, 0, -2214, 0, 729], a
    )
    den = (
        96
        * math.sqrt(6)
        * (a**2 - 1) ** 2
        * (a**4 + 1) ** 1.5
        * (3 * a**4 - 2 * a**2 + 3)
        * (9 * a**8 - 36 * a**6 + 22 * a**4 - 36 * a**2 + 9)
    )
    return float(num), float(den)


def eh_tau2_closed_form(a: float) -> float:
    """Closed-form ``tau2(a)`` of the shift family on its ``tau1 = 0`` locus."""
    num, den = _eh_tau2_parts(a)
    return num / den


def eh_tau2_roots(lo: float = 1.05, hi: float = 4.0, cells: int = 2000) -> list[float]:
    """Zeros of the closed-form ``tau2(a)`` by scanning and bisection.

    Sign changes caused by the denominator (poles) are discarded.
    """
    grid = np.linspace(lo, hi, cells + 1)
    parts = [_eh_tau2_parts(a) for a in grid]
    roots = []
    for i in range(cells):
        (n0, d0), (n1, d1) = parts[i], parts[i + 1]
        if n0 * n1 < 0 and d0 * d1 > 0:
            roots.append(float(bisect(eh_tau2_closed_form, grid[i], grid[i + 1], xtol=1e-13)))
    return roots


def eh_tau2_root() -> float:
    roots = eh_tau2_roots()
    if len(roots) != 1:
        raise DomainError(f"expected a single zero of tau2(a), found {roots}")
    return roots[0]


def eh_deform_tau1(a: float, p: float, q: float) -> float:
    q2 = q * q
    inner = 3 * (p * p + q2) * (a * p - 1) / (a * q2 * (a * p - p * p - q2)) + 3 * (a * p - p * p - q2) / (
        p * (a * a - 1) * (a * p - 1)
    )
    return ((a * a * p + a * q2 - p) / (q2 * (a * a - 1)) + a * p * (a - p) * inner / (a * (p * p + q2) - p)) / 8


def hyperbola_jet(p: float, q: float) -> CurvatureJet:
    """Hyperbola ``x^2/p^2 - y^2/q^2 = 1`` at ``(p, 0)``."""
    c2 = p * p + q * q
    return CurvatureJet(q * q / p, 3 * p / q**2 + 3 / p, -3 * (p * p - 3 * q * q) * c2 / (p * q**6))


def ellipse_major_jet(a: float) -> CurvatureJet:
    """Ellipse ``x^2/a^2 + y^2/(a^2-1) = 1`` at ``(a, 0)``."""
    return CurvatureJet(a - 1 / a, 3 / (a * (a**2 - 1)), -3 * (4 * a**2 - 3) / (a * (a**2 - 1) ** 3))


def corollary_a4(a2: float) -> float:
    return a2**2 * (4 * a2 - 1) / 3


def corollary_a6(a2: float) -> float:
    return 2 * a2**3 * (-1 + 46 * a2 - 168 * a2**2 + 168 * a2**3) / (45 * (2 * a2 - 1))


def tau2_on_tau1_zero_locus(R: float, R4: float) -> float:
    """``tau2`` at ``L = 1`` when ``R'' = 2 - 1/R``."""
    return math.sqrt(2 * R - 1) * (5 * R - 1) / (192 * (R - 1) * R**2) - R * R4 / (192 * (2 * R - 1) ** 1.5)


@dataclass(frozen=True)
class ExampleRow:
    name: str
    expected: float
    computed: float
    tol: float = 1e-10
    note: str = ""
    ok: bool = field(init=False)

    def __post_init__(self) -> None:
        err = abs(self.computed - self.expected)
        object.__setattr__(self, "ok", bool(err <= self.tol * max(1.0, abs(self.expected))))


def _sym_jet(R: float, R2: float, R4: float = 0.0) -> CurvatureJet:
    return CurvatureJet(R, R2, R4)


def example_suite() -> list[ExampleRow]:
    """Evaluate the closed-form examples against the general formulas."""
    rows: list[ExampleRow] = []
    add = rows.append
    for b in (0.3, 0.6, 0.65):
        j = curvature_jet(named_profile("ellipse_minor_vertex", [b]))
        add(ExampleRow(f"ellipse tau1(F) b={b}", b / 2, tau1_sym(2 * b, j.R, j.R2)))
    b = 0.5
    j = curvature_jet(named_profile("ellipse_minor_vertex", [b]))
    add(ExampleRow(f"ellipse tau2(F) b={b}", 3 * b * (3 - 2 * b * b) / (32 * math.sqrt(1 - b * b)), tau2_sym(2 * b, j.R, j.R2, j.R4)))
    for L in (0.3, 0.5, 1.7):
        add(ExampleRow(f"lemon tau1(F) L={L}", 0.125, tau1_sym(L, 1.0, 0.0)))
    for r, R, B in ((1.0, 2.0, 0.5), (1.0, 3.0, 3.5), (1.0, 2.0, 2.5)):
        inp = TwistInput(R + r - B, (_sym_jet(r, 0.0), _sym_jet(R, 0.0)))
        add(ExampleRow(f"asymmetric lemon tau1(F2) r={r} R={R} B={B}", (1 / r + 1 / R) / 8, tau1_asym(inp)))
    for b0, b1 in ((0.5, 0.3), (0.45, 0.4)):
        j0 = curvature_jet(named_profile("ellipse_minor_vertex", [b0]))
        j1 = curvature_jet(named_profile("ellipse_minor_vertex", [b1]))
        val = tau1_asym(TwistInput(b0 + b1, (j0, j1)))
        add(ExampleRow(f"half-ellipses tau1(F2) > 0 b0={b0} b1={b1}", 1.0, float(val > 0), 0.0, f"tau1={val:.6g}"))
    for a in (1.5, 2.0, 3.0):
        ell, hyp = eh_shift_jets(a)
        for s in (0.2, 0.5):
            L = a - 1 / a - s
            add(ExampleRow(f"EH shift tau1(F2) a={a} s={s}", eh_shift_tau1(a, s), tau1_asym(TwistInput(L, (ell, hyp)))))
        s0 = rho1(a) * (a - 1 / a)
        add(ExampleRow(f"EH shift tau1 zero at rho1(a)(a-1/a) a={a}", 0.0, tau1_asym(TwistInput(a - 1 / a - s0, (ell, hyp))), 1e-12))
        if abs(a - 2.0) < 1e-12:
            add(ExampleRow("rho1(2) = 43/59", 43 / 59, rho1(a)))
    for a in (1.5, 2.5):
        ell, hyp = eh_shift_jets(a)
        L = (a - 1 / a) * 4 * a**2 / (3 * a**4 + 2 * a**2 + 3)
        add(ExampleRow(f"EH shift tau2 on tau1=0 a={a}", eh_tau2_closed_form(a), tau2_asym(TwistInput(L, (ell, hyp))), 1e-9))
    add(ExampleRow("EH tau2 root a*", 1.87861, eh_tau2_root(), 1e-4 / 1.87861))
    for a, p, q in ((2.0, 0.7, 1.5), (3.0, 0.5, 2.0)):
        inp = TwistInput(a - p, (ellipse_major_jet(a), hyperbola_jet(p, q)))
        add(ExampleRow(f"EH deform tau1(F2) a={a} p={p} q={q}", eh_deform_tau1(a, p, q), tau1_asym(inp)))
    for a2 in (0.3, 0.4, 0.7):
        prof = profile_from_curvature(_sym_jet(1 / (2 * a2), 0.0))
        a4 = corollary_a4(a2)
        a6 = corollary_a6(a2)
        j = curvature_jet(type(prof)((a2, a4, prof.a6)))
        add(ExampleRow(f"Corollary a4 threshold gives tau1=0 a2={a2}", 0.0, tau1_sym(1.0, j.R, j.R2), 1e-12))
        j = curvature_jet(type(prof)((a2, a4, a6)))
        add(ExampleRow(f"Corollary a6 threshold gives tau2=0 a2={a2}", 0.0, tau2_sym(1.0, j.R, j.R2, j.R4), 1e-10))
        R4 = 3.0
        add(
            ExampleRow(
                f"tau2 on tau1=0 locus L=1 a2={a2}",
                tau2_on_tau1_zero_locus(j.R, R4),
                tau2_sym(1.0, j.R, 2 - 1 / j.R, R4),
            )
        )
    for R in (1.0, 2.0):
        add(ExampleRow(f"pole coefficient lemon-like R={R}", (3 + 0.0) ** 2 / (768 * R), pole_coefficient(R, 0.0)))
    return rows
