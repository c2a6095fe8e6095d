"""Birkhoff reduction of a map jet at an elliptic fixed point, through order 5.

Pipeline: rescale ``(x, y) = (s/eta, eta u)`` so the linear part becomes a
rotation, complexify with ``z = x + iy``, remove the non-resonant cubic terms
with a symplectic generating-function change of coordinates, conjugate the
jet by that change, and read the twist coefficients off ``Im c21`` and
``Im C32``.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .errors import ResonanceError, StabilityError, UnsupportedError
from .geometry import TableConfig, curvature_jet
from .jets import DEFAULT_ORDER, MapJet, Series2, compose_maps, map_jet


@dataclass(frozen=True)
class NormalFormConfig:
    resonance_tol: float = 1e-8
    tol_c03: float = 1e-10
    pole_tol: float = 1e-6
    order: int = DEFAULT_ORDER


@dataclass(frozen=True)
class LinearData:
    eta: float
    lam: complex
    theta: float
    stability: str
    trace: float


@dataclass(frozen=True)
class ComplexJet:
    """Coefficients ``c_jk`` of ``z1 = lam (z + sum c_jk z^j w^k)``."""

    c: dict[tuple[int, int], complex]
    lam: complex

    def jacobi3(self) -> dict[str, float]:
        c = self.c
        return {
            "c12+3conj(c30)": abs(c[1, 2] + 3 * np.conj(c[3, 0])),
            "Re(c21)": abs(c[2, 1].real),
        }


@dataclass(frozen=True)
class Order3:
    d: dict[tuple[int, int], complex]
    tau1: float
    p: dict[tuple[int, int], float]
    q: dict[tuple[int, int], float]
    removable: bool
    p_series: Series2
    q_series: Series2


@dataclass(frozen=True)
class Order5:
    A: dict[tuple[int, int], float]
    B: dict[tuple[int, int], float]
    C: dict[tuple[int, int], complex]
    D: dict[tuple[int, int], complex]
    tau2: float
    p5: dict[tuple[int, int], float]
    q5: dict[tuple[int, int], float]
    resonant: tuple[tuple[int, int], ...] = ()

    def jacobi5(self, tau1: float) -> dict[str, float]:
        C = self.C
        return {
            "5C50+conj(C14)": abs(5 * C[5, 0] + np.conj(C[1, 4])),
            "2C41+conj(C23)": abs(2 * C[4, 1] + np.conj(C[2, 3])),
            "tau1^2+2Re(C32)": abs(tau1**2 + 2 * C[3, 2].real),
        }


@dataclass(frozen=True)
class NormalFormResult:
    map: str
    linear: LinearData
    tau1: float
    tau2: float | None
    tau1_F2: float
    tau2_F2: float | None
    resonances: dict[int, bool]
    c03: complex
    verdict: str
    notes: tuple[str, ...] = ()
    c: dict[tuple[int, int], complex] = field(default_factory=dict)
    C: dict[tuple[int, int], complex] = field(default_factory=dict)
    d: dict[tuple[int, int], complex] = field(default_factory=dict)
    p: dict[tuple[int, int], float] = field(default_factory=dict)
    q: dict[tuple[int, int], float] = field(default_factory=dict)
    D: dict[tuple[int, int], complex] = field(default_factory=dict)
    p5: dict[tuple[int, int], float] = field(default_factory=dict)
    q5: dict[tuple[int, int], float] = field(default_factory=dict)
    jacobi: dict[str, float] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        def cx(v: complex) -> list[float]:
            return [float(np.real(v)), float(np.imag(v))]

        def table(d: dict, complex_values: bool) -> dict[str, Any]:
            return {f"{j}{k}": (cx(v) if complex_values else float(np.real(v))) for (j, k), v in sorted(d.items())}

        lin = self.linear
        return {
            "map": self.map,
            "lambda": cx(lin.lam),
            "theta": lin.theta,
            "eta": lin.eta,
            "stability": lin.stability,
            "tau1": self.tau1,
            "tau2": self.tau2,
            "tau1_F2": self.tau1_F2,
            "tau2_F2": self.tau2_F2,
            "resonances": {f"lambda^{n}=1": flag for n, flag in self.resonances.items()},
            "c03": cx(self.c03),
            "verdict": self.verdict,
            "notes": list(self.notes),
            "c": table(self.c, True),
            "C": table(self.C, True),
            "d": table(self.d, True),
            "p": table(self.p, False),
            "q": table(self.q, False),
            "D": table(self.D, True),
            "p5": table(self.p5, False),
            "q5": table(self.q5, False),
            "jacobi_residuals": dict(self.jacobi),
        }


def _arg_positive(lam: complex) -> float:
    theta = cmath.phase(lam)
    return theta + 2 * math.pi if theta <= 0 else theta


def is_resonant(lam: complex, n: int, tol: float = 1e-8) -> bool:
    return abs(lam**n - 1) < tol


def linearize(jet: MapJet) -> tuple[LinearData, Series2, Series2]:
    """Rescale the jet so that its linear part is a rotation.

    Returns the linear data and the series ``(x1, y1)`` in ``(x, y)``.
    """
    M = jet.linear_matrix()
    a10, a01 = M[0]
    b10, b01 = M[1]
    tr = a10 + b01
    if abs(abs(tr) - 2) <= 1e-12:
        raise StabilityError("parabolic")
    if abs(tr) > 2:
        raise StabilityError("hyperbolic")
    if abs(a10 - b01) > 1e-10 * max(1.0, abs(a10)):
        raise UnsupportedError("linear part needs a10 = b01; compose the one-step jets into F^2 first")
    eta = (-a01 / b10) ** 0.25
    order = jet.order
    x = Series2.var(0, order) * eta
    y = Series2.var(1, order) / eta
    A = jet.S1.compose(x, y) / eta
    B = jet.U1.compose(x, y) * eta
    lam = complex(A[1, 0], -A[0, 1])
    lam = lam / abs(lam)
    return LinearData(eta, lam, _arg_positive(lam), "elliptic", tr), A, B


def _to_complex(A: Series2, B: Series2) -> Series2:
    """``X1 + i Y1`` as a series in ``(z, w)`` with ``x = (z+w)/2``, ``y = (z-w)/(2i)``."""
    order = A.order
    z = Series2.var(0, order)
    w = Series2.var(1, order)
    x = (z + w) * 0.5
    y = (z - w) * (-0.5j)
    return (A + B * 1j).compose(x, y)


def complexify(A: Series2, B: Series2, lam: complex) -> ComplexJet:
    K = _to_complex(A, B) * np.conj(lam)
    c = {m: complex(v) for m, v in K.items() if sum(m) >= 2}
    return ComplexJet(c, lam)


def reduce_order3(cjet: ComplexJet, lam: complex, config: NormalFormConfig = NormalFormConfig()) -> Order3:
    """Remove the non-resonant cubic terms; ``d21 = 0`` keeps the twist term."""
    c = cjet.c
    lamc = np.conj(lam)
    removable = False
    if is_resonant(lam, 4, config.resonance_tol):
        if abs(c[0, 3]) > config.tol_c03:
            raise ResonanceError(4, f"lambda^4 = 1 and c03 = {c[0, 3]:.3e} cannot be removed")
        d03 = 0j
        removable = True
    else:
        d03 = c[0, 3] / (1 - lamc**4)
    d = {
        (3, 0): c[3, 0] / (1 - lam**2),
        (2, 1): 0j,
        (1, 2): c[1, 2] / (1 - lamc**2),
        (0, 3): d03,
    }
    order = max(j + k for j, k in c)
    p3 = Series2.from_dict({m: complex(v) for m, v in d.items()}, order)
    x = Series2.var(0, order)
    Y = Series2.var(1, order)
    P = p3.compose(x + Y * 1j, x - Y * 1j)
    p_series, q_series = P.real, P.imag
    p = {m: float(v) for m, v in p_series.items() if sum(m) == 3}
    q = {m: float(v) for m, v in q_series.items() if sum(m) == 3}
    return Order3(d, float(c[2, 1].imag), p, q, removable, p_series, q_series)


def generating_transform(o3: Order3) -> tuple[Series2, Series2, Series2, Series2]:
    """Forward ``(x, y) -> (X, Y)`` and inverse series of the cubic change.

    The change is defined implicitly by ``X = x + p(x, Y)`` and
    ``y = Y - q(x, Y)``; both directions are solved by fixed-point iteration
    on series, each sweep gaining two orders.
    """
    p, q = o3.p_series, o3.q_series
    order = p.order
    x = Series2.var(0, order)
    y = Series2.var(1, order)
    sweeps = order // 2 + 1
    Y = y
    for _ in range(sweeps):
        Y = y + q.compose(x, Y)
    X = x + p.compose(x, Y)
    # inverse: given (X, Y) recover x, then y
    Xv, Yv = x, y
    xi = Xv
    for _ in range(sweeps):
        xi = Xv - p.compose(xi, Yv)
    yi = Yv - q.compose(xi, Yv)
    return X, Y, xi, yi


def reduce_order5(
    A: Series2,
    B: Series2,
    o3: Order3,
    lam: complex,
    config: NormalFormConfig = NormalFormConfig(),
) -> Order5:
    """Conjugate by the cubic change and read off the quintic coefficients.

    ``tau2 = Im C32`` needs no division, so it is returned even when a root
    of unity blocks some other quintic term; such monomials are listed in
    ``resonant`` and left out of ``D``.
    """
    Hx, Hy, Ix, Iy = generating_transform(o3)
    x1 = A.compose(Ix, Iy)
    y1 = B.compose(Ix, Iy)
    GX = Hx.compose(x1, y1)
    GY = Hy.compose(x1, y1)
    K = _to_complex(GX, GY) * np.conj(lam)
    C = {m: complex(v) for m, v in K.items() if sum(m) in (3, 5)}
    D, resonant = {}, []
    for (j, k), v in C.items():
        if j + k != 5:
            continue
        if (j, k) == (3, 2):
            D[j, k] = 0j
        elif is_resonant(lam, j - k - 1, config.resonance_tol):
            resonant.append((j, k))
        else:
            D[j, k] = v / (1 - lam ** (j - k - 1))
    A_out = {m: float(v) for m, v in GX.items() if sum(m) in (3, 5)}
    B_out = {m: float(v) for m, v in GY.items() if sum(m) in (3, 5)}
    p5 = {m: float(v) for m, v in Hx.items() if sum(m) == 5}
    q5 = {m: float(v) for m, v in Hy.items() if sum(m) == 5}
    return Order5(A_out, B_out, C, D, float(C[3, 2].imag), p5, q5, tuple(resonant))


def normal_form_of_jet(jet: MapJet, config: NormalFormConfig = NormalFormConfig()) -> dict[str, Any]:
    """Run the reduction on a single jet and collect every intermediate."""
    linear, A, B = linearize(jet)
    lam = linear.lam
    cjet = complexify(A, B, lam)
    flags = {n: is_resonant(lam, n, config.resonance_tol) for n in (3, 4, 6)}
    out: dict[str, Any] = {"linear": linear, "A": A, "B": B, "cjet": cjet, "flags": flags, "notes": []}
    try:
        out["o3"] = reduce_order3(cjet, lam, config)
    except ResonanceError as exc:
        out["o3"] = None
        out["notes"].append(str(exc))
        return out
    if out["o3"].removable:
        out["notes"].append("resonant-but-removable: lambda^4 = 1 with c03 = 0, d03 set to 0")
    o5 = reduce_order5(A, B, out["o3"], lam, config)
    if o5.resonant:
        terms = ", ".join(f"Z^{j}W^{k}" for j, k in o5.resonant)
        out["notes"].append(f"resonant quintic terms kept in the normal form: {terms}")
    out["o5"] = o5
    return out


def analyze(table: TableConfig, config: NormalFormConfig = NormalFormConfig()) -> NormalFormResult:
    """Normal form of the one-step map (symmetric table) or of ``F^2``.

    Raises ``StabilityError`` when the period-2 orbit is not elliptic.
    Resonances are reported in the result rather than raised.
    """
    order = config.order
    notes: list[str] = []
    if table.symmetric:
        jet = map_jet(table, 0, order)
        label, factor = "F", 2.0
    else:
        jet = compose_maps(map_jet(table, 0, order), map_jet(table, 1, order))
        label, factor = "F2", 1.0

    near_pole = False
    if table.symmetric:
        R = curvature_jet(table.left).R
        if abs(table.L - R) < config.pole_tol * R:
            near_pole = True

    nf = normal_form_of_jet(jet, config)
    notes.extend(nf["notes"])
    linear, cjet, flags = nf["linear"], nf["cjet"], nf["flags"]
    o3, o5 = nf.get("o3"), nf.get("o5")
    c = cjet.c
    c03 = c[0, 3]
    jacobi = cjet.jacobi3()

    if flags[4] and abs(c03) > config.tol_c03:
        verdict = "not_locally_analytically_integrable"
    elif flags[6] or flags[3]:
        verdict = "inconclusive"
    else:
        verdict = "ok"

    tau1 = float(c[2, 1].imag)
    tau2 = None
    if o5 is not None:
        jacobi.update(o5.jacobi5(tau1))
        if near_pole:
            notes.append("near-pole: tau2 has a simple pole along L = R and is not evaluated")
        else:
            tau2 = o5.tau2

    return NormalFormResult(
        map=label,
        linear=linear,
        tau1=tau1,
        tau2=tau2,
        tau1_F2=factor * tau1,
        tau2_F2=None if tau2 is None else factor * tau2,
        resonances=flags,
        c03=complex(c03),
        verdict=verdict,
        notes=tuple(notes),
        c={m: v for m, v in c.items() if sum(m) in (3, 5)},
        C=o5.C if o5 else {},
        d=o3.d if o3 else {},
        p=o3.p if o3 else {},
        q=o3.q if o3 else {},
        D=o5.D if o5 else {},
        p5=o5.p5 if o5 else {},
        q5=o5.q5 if o5 else {},
        jacobi=jacobi,
    )
