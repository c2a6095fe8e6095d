"""Truncated bivariate power series and the Taylor jet of the billiard map.

A ``Series2`` of order ``D`` stores the coefficients of ``x^j y^k`` for
``j + k <= D`` in a flat vector ordered by total degree.  Products are taken
through a precomputed index table, so every operation is exact arithmetic in
the truncated ring.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Iterable, Mapping

import numpy as np

from .errors import (
    CompositionError,
    DegenerateOrbitError,
    ImplicitSingularityError,
    InvalidParameterError,
    SeriesDivisionError,
)
from .geometry import BoundaryProfile, TableConfig

DEFAULT_ORDER = 5
MAX_ORDER = 7


@lru_cache(maxsize=None)
def monomials(order: int) -> tuple[tuple[int, int], ...]:
    """Exponent pairs ``(j, k)`` in storage order."""
    return tuple((deg - k, k) for deg in range(order + 1) for k in range(deg + 1))


@lru_cache(maxsize=None)
def _index(order: int) -> dict[tuple[int, int], int]:
    return {m: i for i, m in enumerate(monomials(order))}


@lru_cache(maxsize=None)
def _product_matrix(order: int) -> np.ndarray:
    """Matrix ``M`` with ``(a*b).c = M @ outer(a.c, b.c).ravel()``."""
    mons = monomials(order)
    idx = _index(order)
    n = len(mons)
    M = np.zeros((n, n * n))
    for i, (j1, k1) in enumerate(mons):
        for l, (j2, k2) in enumerate(mons):
            target = idx.get((j1 + j2, k1 + k2))
            if target is not None:
                M[target, i * n + l] = 1.0
    return M


@lru_cache(maxsize=None)
def _degrees(order: int) -> np.ndarray:
    return np.array([j + k for j, k in monomials(order)])


def _check_order(order: int) -> int:
    if not (1 <= order <= MAX_ORDER):
        raise InvalidParameterError(f"truncation order must be in 1..{MAX_ORDER}")
    return order


class Series2:
    """Truncated power series in two variables, real or complex coefficients."""

    __slots__ = ("c", "order")
    __array_ufunc__ = None

    def __init__(self, coeffs: np.ndarray, order: int = DEFAULT_ORDER):
        self.order = _check_order(order)
        c = np.asarray(coeffs)
        if c.dtype.kind not in "fc":
            c = c.astype(float)
        if c.shape != (len(monomials(order)),):
            raise ValueError("coefficient vector has the wrong length for this order")
        self.c = c

    # construction -------------------------------------------------------
    @classmethod
    def zeros(cls, order: int = DEFAULT_ORDER, dtype=float) -> Series2:
        return cls(np.zeros(len(monomials(order)), dtype=dtype), order)

    @classmethod
    def constant(cls, value: complex, order: int = DEFAULT_ORDER) -> Series2:
        out = cls.zeros(order, complex if isinstance(value, complex) else float)
        out.c[0] = value
        return out

    @classmethod
    def var(cls, i: int, order: int = DEFAULT_ORDER) -> Series2:
        out = cls.zeros(order)
        out.c[1 + i] = 1.0
        return out

    @classmethod
    def from_dict(cls, terms: Mapping[tuple[int, int], complex], order: int = DEFAULT_ORDER) -> Series2:
        cplx = any(isinstance(v, complex) for v in terms.values())
        out = cls.zeros(order, complex if cplx else float)
        idx = _index(order)
        for m, v in terms.items():
            if m in idx:
                out.c[idx[m]] = v
        return out

    def _like(self, c: np.ndarray) -> Series2:
        return Series2(c, self.order)

    def _coerce(self, other) -> Series2 | None:
        if isinstance(other, Series2):
            if other.order != self.order:
                raise ValueError("series orders differ")
            return other
        if isinstance(other, (int, float, complex, np.number)):
            return Series2.constant(other, self.order)
        return None

    # access ---------------------------------------------------------------
    def __getitem__(self, jk: tuple[int, int]):
        i = _index(self.order).get(jk)
        return 0.0 if i is None else self.c[i]

    def items(self) -> Iterable[tuple[tuple[int, int], complex]]:
        return zip(monomials(self.order), self.c)

    def to_dict(self, degree: int | None = None) -> dict[tuple[int, int], complex]:
        return {m: v for m, v in self.items() if degree is None or sum(m) == degree}

    @property
    def const(self):
        return self.c[0]

    @property
    def real(self) -> Series2:
        return self._like(self.c.real.copy())

    @property
    def imag(self) -> Series2:
        return self._like(self.c.imag.copy())

    def homogeneous(self, degree: int) -> Series2:
        return self._like(np.where(_degrees(self.order) == degree, self.c, 0))

    def truncate(self, degree: int) -> Series2:
        return self._like(np.where(_degrees(self.order) <= degree, self.c, 0))

    def max_abs(self, degree: int | None = None) -> float:
        c = self.c if degree is None else self.c[_degrees(self.order) == degree]
        return float(np.max(np.abs(c))) if c.size else 0.0

    def __call__(self, x: complex, y: complex) -> complex:
        return sum(v * x**j * y**k for (j, k), v in self.items())

    def __repr__(self) -> str:
        terms = ", ".join(f"{j}{k}:{v:.6g}" for (j, k), v in self.items() if v != 0)
        return f"Series2(order={self.order}, {{{terms}}})"

    # ring operations ----------------------------------------------------
    def __add__(self, other):
        o = self._coerce(other)
        return NotImplemented if o is None else self._like(self.c + o.c)

    __radd__ = __add__

    def __sub__(self, other):
        o = self._coerce(other)
        return NotImplemented if o is None else self._like(self.c - o.c)

    def __rsub__(self, other):
        o = self._coerce(other)
        return NotImplemented if o is None else self._like(o.c - self.c)

    def __neg__(self):
        return self._like(-self.c)

    def __mul__(self, other):
        if isinstance(other, (int, float, complex, np.number)):
            return self._like(self.c * other)
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return self._like(_product_matrix(self.order) @ np.outer(self.c, o.c).ravel())

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, (int, float, complex, np.number)):
            return self._like(self.c / other)
        o = self._coerce(other)
        return NotImplemented if o is None else self * o.reciprocal()

    def __rtruediv__(self, other):
        o = self._coerce(other)
        return NotImplemented if o is None else o * self.reciprocal()

    def __pow__(self, n: int) -> Series2:
        if not isinstance(n, int) or n < 0:
            raise ValueError("only non-negative integer powers are supported")
        out = Series2.constant(1.0, self.order)
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    # analytic functions ---------------------------------------------------
    def apply(self, derivs: list[complex]) -> Series2:
        """``f(self)`` from the Taylor coefficients ``derivs[n] = f^(n)(c0)/n!``."""
        h = self - self.const
        out = Series2.constant(derivs[self.order], self.order)
        for n in range(self.order - 1, -1, -1):
            out = out * h + derivs[n]
        return out

    def reciprocal(self) -> Series2:
        c0 = self.const
        if c0 == 0:
            raise SeriesDivisionError("reciprocal of a series with zero constant term")
        return self.apply([(-1) ** n / c0 ** (n + 1) for n in range(self.order + 1)])

    def sqrt(self) -> Series2:
        c0 = self.const
        if np.iscomplexobj(self.c):
            if c0 == 0:
                raise SeriesDivisionError("square root of a series with zero constant term")
            root = complex(np.sqrt(c0))
        else:
            if not c0 > 0:
                raise SeriesDivisionError("square root needs a positive constant term")
            root = math.sqrt(c0)
        derivs, coef = [], 1.0
        for n in range(self.order + 1):
            derivs.append(coef * root / c0**n)
            coef *= (0.5 - n) / (n + 1)
        return self.apply(derivs)

    def diff(self, var: int) -> Series2:
        """Partial derivative; the top-degree coefficients become zero."""
        idx = _index(self.order)
        out = np.zeros_like(self.c)
        for (j, k), v in self.items():
            p = j if var == 0 else k
            if p:
                target = (j - 1, k) if var == 0 else (j, k - 1)
                out[idx[target]] += p * v
        return self._like(out)

    def integrate(self, var: int) -> Series2:
        """Antiderivative vanishing on ``var = 0``; top degree is dropped."""
        idx = _index(self.order)
        out = np.zeros_like(self.c)
        for (j, k), v in self.items():
            target = (j + 1, k) if var == 0 else (j, k + 1)
            if target in idx:
                out[idx[target]] += v / (target[var])
        return self._like(out)

    def compose(self, g0: Series2, g1: Series2) -> Series2:
        """Substitute ``x -> g0``, ``y -> g1``.

        Both substitutes must vanish at the origin unless ``self`` is a
        polynomial of degree at most the truncation order (always the case
        here), in which case the substitution is exact.
        """
        order = self.order
        p0 = [Series2.constant(1.0, order)]
        p1 = [Series2.constant(1.0, order)]
        for _ in range(order):
            p0.append(p0[-1] * g0)
            p1.append(p1[-1] * g1)
        cplx = np.iscomplexobj(self.c) or np.iscomplexobj(g0.c) or np.iscomplexobj(g1.c)
        out = Series2.zeros(order, complex if cplx else float)
        for (j, k), v in self.items():
            if v != 0:
                out = out + (p0[j] * p1[k]) * v
        return out


def compose_univariate(coeffs: Iterable[float], w: Series2) -> Series2:
    """Evaluate the polynomial ``sum coeffs[n] w^n`` by Horner's rule."""
    coeffs = list(coeffs)
    out = Series2.zeros(w.order, w.c.dtype)
    for c in reversed(coeffs):
        out = out * w + c
    return out


def solve_implicit(
    G: Callable[[Series2], Series2],
    w0: float,
    dG: Callable[[Series2], Series2] | None = None,
    order: int = DEFAULT_ORDER,
    sweeps: int | None = None,
) -> Series2:
    """Series root ``w(x, y)`` of ``G(w) = 0`` with ``w(0, 0) = w0``.

    Newton's method doubles the number of correct orders per sweep.  When
    ``dG`` is omitted the derivative is taken by a complex step, which is
    exact to rounding for real-analytic ``G`` built from ``Series2``
    operations.
    """
    if dG is None:
        hstep = 1e-30

        def dG(w: Series2) -> Series2:
            return G(w + 1j * hstep).imag / hstep

    w = Series2.constant(float(w0), order)
    sweeps = sweeps if sweeps is not None else max(2, math.ceil(math.log2(order + 1)) + 2)
    for _ in range(sweeps):
        d = dG(w)
        scale = max(1.0, float(np.max(np.abs(d.c))))
        if abs(d.const) <= 1e-12 * scale:
            raise ImplicitSingularityError("implicit equation has vanishing linear sensitivity")
        w = w - G(w) / d
    return w


# ---------------------------------------------------------------------------
# Taylor jet of the billiard map


@dataclass(frozen=True)
class MapJet:
    """Expansion of ``(s1, u1)`` in ``(s, u)`` at the period-2 orbit.

    ``source``/``target`` name the departure and arrival arcs.  A symmetric
    table has the same one-step map in both directions; ``symmetric`` records
    that so the jet may be composed with itself.
    """

    S1: Series2
    U1: Series2
    L: float
    source: int
    target: int
    symmetric: bool = False

    @property
    def order(self) -> int:
        return self.S1.order

    def linear_matrix(self) -> np.ndarray:
        return np.array([[self.S1[1, 0], self.S1[0, 1]], [self.U1[1, 0], self.U1[0, 1]]], dtype=float)

    def derivative(self, which: str, j: int, k: int) -> float:
        """Partial derivative ``d^{j+k}/ds^j du^k`` of ``s1`` or ``u1`` at the orbit."""
        series = self.S1 if which == "s1" else self.U1
        return float(np.real(series[j, k])) * math.factorial(j) * math.factorial(k)

    def dump(self) -> str:
        lines = [f"# order {self.order} L {self.L!r} source {self.source} target {self.target}"]
        for name, series in (("S1", self.S1), ("U1", self.U1)):
            for (j, k), v in series.items():
                lines.append(f"{name} {j} {k} {float(np.real(v))!r}")
        return "\n".join(lines) + "\n"


def identity_jet(L: float, arc: int = 0, order: int = DEFAULT_ORDER) -> MapJet:
    return MapJet(Series2.var(0, order), Series2.var(1, order), L, arc, arc, True)


def _arclength_series(profile: BoundaryProfile, order: int) -> list[float]:
    """Coefficients of ``s(t) = int_0^t sqrt(1 + a'^2)`` as a polynomial in ``t``."""
    t = Series2.var(0, order)
    slope = compose_univariate(_slope_coeffs(profile, order), t)
    speed = (1.0 + slope * slope).sqrt()
    s = speed.integrate(0)
    return [float(s[n, 0]) for n in range(order + 1)]


def _value_coeffs(profile: BoundaryProfile, order: int) -> list[float]:
    out = [0.0] * (order + 1)
    for i, c in enumerate(profile.coeffs):
        if 2 * (i + 1) <= order:
            out[2 * (i + 1)] = c
    return out


def _slope_coeffs(profile: BoundaryProfile, order: int) -> list[float]:
    out = [0.0] * (order + 1)
    for i, c in enumerate(profile.coeffs):
        if 2 * i + 1 <= order:
            out[2 * i + 1] = 2 * (i + 1) * c
    return out


def map_jet(table: TableConfig, source: int = 0, order: int = DEFAULT_ORDER) -> MapJet:
    """Taylor jet of the one-step map leaving arc ``source``.

    The departure arc is placed at the origin as ``(a(t), -t)`` and the
    arrival arc as ``(L - b(t), t)``; this picture covers both directions
    because the table is its own image under a half-turn about the chord
    midpoint once the two profiles are swapped.
    """
    _check_order(order)
    if source not in (0, 1):
        raise InvalidParameterError("source arc must be 0 or 1")
    dep = table.profile(source)
    arr = table.profile(1 - source)
    L = table.L
    s = Series2.var(0, order)
    u = Series2.var(1, order)

    # t0(s): reversion of the departure arclength series
    s_of_t = _arclength_series(dep, order)
    t0 = solve_implicit(
        lambda w: compose_univariate(s_of_t, w) - s,
        0.0,
        lambda w: compose_univariate([n * c for n, c in enumerate(s_of_t)][1:], w),
        order,
    )
    a = compose_univariate(_value_coeffs(dep, order), t0)
    da = compose_univariate(_slope_coeffs(dep, order), t0)
    inv_n0 = (1.0 + da * da).sqrt().reciprocal()
    # tangent (a', -1)/n, inward normal (1, a')/n, direction -u T + sqrt(1-u^2) N
    sin_th = (1.0 - u * u).sqrt()
    dx = (-u * da + sin_th) * inv_n0
    dy = (u + sin_th * da) * inv_n0
    px, py = a, -t0

    b_val = _value_coeffs(arr, order)
    b_slope = _slope_coeffs(arr, order)

    def G(ell: Series2) -> Series2:
        return px + ell * dx + compose_univariate(b_val, py + ell * dy) - L

    def dG(ell: Series2) -> Series2:
        return dx + compose_univariate(b_slope, py + ell * dy) * dy

    try:
        ell = solve_implicit(G, L, dG, order)
    except ImplicitSingularityError as exc:
        raise DegenerateOrbitError("chord meets the arrival arc tangentially") from exc
    t1 = py + ell * dy
    s1 = compose_univariate(_arclength_series(arr, order), t1)
    db = compose_univariate(b_slope, t1)
    # arrival tangent (-b', 1)/n; cos(theta1) = d . T1 and u1 = -cos(theta1)
    u1 = -(-dx * db + dy) * (1.0 + db * db).sqrt().reciprocal()
    return MapJet(s1, u1, L, source, 1 - source, bool(table.symmetric))


def compose_maps(j1: MapJet, j2: MapJet) -> MapJet:
    """The jet of ``j2 after j1``."""
    if j1.order != j2.order:
        raise CompositionError("jets have different truncation orders")
    if j1.target != j2.source and not j2.symmetric:
        raise CompositionError(f"first map lands on arc {j1.target}, second leaves arc {j2.source}")
    S = j2.S1.compose(j1.S1, j1.U1)
    U = j2.U1.compose(j1.S1, j1.U1)
    target = j2.target if j1.target == j2.source else 1 - j1.target
    return MapJet(S, U, j1.L, j1.source, target, j1.symmetric and j2.symmetric)


def jacobian_determinant(jet: MapJet) -> Series2:
    """``det D(S1, U1)`` truncated at degree ``order - 1``."""
    S, U = jet.S1, jet.U1
    det = S.diff(0) * U.diff(1) - S.diff(1) * U.diff(0)
    return det.truncate(jet.order - 1)
