"""Boundary arcs near the period-2 chord.

Each arc is stored as an even graph over its tangent line at the impact
point, ``x = a(t) = a2 t^2 + a4 t^4 + a6 t^6 + ...``, with the table lying on
the side ``x > a(t)``.  The left arc sits at the origin and the right arc is
its mirror image at distance ``L``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np

from .errors import InvalidParameterError, InvalidProfileError, UnsupportedError

MIN_COEFFS = 3


def _half_binomial(n: int) -> float:
    """Binomial coefficient C(1/2, n)."""
    c = 1.0
    for i in range(1, n + 1):
        c *= (0.5 - i + 1) / i
    return c


@dataclass(frozen=True)
class BoundaryProfile:
    """Even power series ``a(t) = sum a_{2n} t^{2n}`` on ``|t| < eps``.

    ``coeffs`` holds ``(a2, a4, a6, ...)``; it is zero-padded to length 3.
    Coefficients past ``a6`` are kept: they do not affect the twist
    coefficients but they do improve the exact reflection geometry.
    """

    coeffs: tuple[float, ...]
    eps: float | None = None

    def __post_init__(self) -> None:
        c = tuple(float(x) for x in self.coeffs)
        if len(c) < MIN_COEFFS:
            c = c + (0.0,) * (MIN_COEFFS - len(c))
        if not all(math.isfinite(x) for x in c):
            raise InvalidProfileError("profile coefficients must be finite")
        if c[0] < 0:
            raise InvalidProfileError("a2 must be positive (the arc must be focusing or flat)")
        if c[0] == 0 and any(x != 0 for x in c[1:]):
            raise InvalidProfileError("a2 = 0 requires every higher coefficient to vanish")
        object.__setattr__(self, "coeffs", c)
        eps = self.eps
        if eps is None:
            eps = 1.0 if c[0] == 0 else min(0.9 / (2 * c[0]), 1.0)
        if not eps > 0:
            raise InvalidProfileError("domain half-width eps must be positive")
        object.__setattr__(self, "eps", float(eps))
        # Horner tables in x = t^2 for the value t^2 P(t^2) and slope t Q(t^2).
        object.__setattr__(self, "_value_poly", tuple(reversed(c)))
        object.__setattr__(self, "_slope_poly", tuple(reversed([2 * (n + 1) * x for n, x in enumerate(c)])))

    @property
    def flat(self) -> bool:
        return self.coeffs[0] == 0

    @property
    def a2(self) -> float:
        return self.coeffs[0]

    @property
    def a4(self) -> float:
        return self.coeffs[1]

    @property
    def a6(self) -> float:
        return self.coeffs[2]

    def height(self, t: float) -> float:
        x = t * t
        acc = 0.0
        for c in self._value_poly:
            acc = acc * x + c
        return acc * x

    def slope(self, t: float) -> float:
        x = t * t
        acc = 0.0
        for c in self._slope_poly:
            acc = acc * x + c
        return acc * t

    def slope_array(self, t: np.ndarray) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        return t * np.polyval(self._slope_poly, t * t)

    def height_array(self, t: np.ndarray) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        return t * t * np.polyval(self._value_poly, t * t)

    def with_eps(self, eps: float) -> BoundaryProfile:
        return BoundaryProfile(self.coeffs, eps)

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {"a2": self.coeffs[0], "a4": self.coeffs[1], "a6": self.coeffs[2]}
        if len(self.coeffs) > MIN_COEFFS:
            out["coeffs"] = list(self.coeffs)
        out["eps"] = self.eps
        return out


@dataclass(frozen=True)
class CurvatureJet:
    """Radius of curvature and its even arclength derivatives at the vertex."""

    R: float
    R2: float = 0.0
    R4: float = 0.0
    flat: bool = False

    def __post_init__(self) -> None:
        if self.flat:
            object.__setattr__(self, "R", math.inf)
            object.__setattr__(self, "R2", 0.0)
            object.__setattr__(self, "R4", 0.0)
        elif not (self.R > 0 and math.isfinite(self.R)):
            raise InvalidProfileError("radius of curvature must be positive and finite")

    @classmethod
    def flat_wall(cls) -> CurvatureJet:
        return cls(math.inf, 0.0, 0.0, flat=True)


@dataclass(frozen=True)
class TableConfig:
    """Two-arc table: chord ``L``, left arc (index 0), right arc (index 1)."""

    L: float
    left: BoundaryProfile
    right: BoundaryProfile
    symmetric: bool | None = field(default=None)

    def __post_init__(self) -> None:
        if not (self.L > 0 and math.isfinite(self.L)):
            raise InvalidParameterError("chord length L must be positive")
        same = self.left.coeffs == self.right.coeffs
        if self.symmetric is None:
            object.__setattr__(self, "symmetric", same)
        elif self.symmetric and not same:
            raise InvalidProfileError("symmetric table needs identical arcs")

    @classmethod
    def mirror(cls, L: float, profile: BoundaryProfile) -> TableConfig:
        return cls(L, profile, profile, True)

    def profile(self, arc: int) -> BoundaryProfile:
        return self.left if arc == 0 else self.right

    def to_dict(self) -> dict[str, Any]:
        return {
            "L": self.L,
            "left": self.left.to_dict(),
            "right": "same" if self.symmetric else self.right.to_dict(),
        }


def curvature_jet(profile: BoundaryProfile) -> CurvatureJet:
    """Radius of curvature ``R`` and ``R''``, ``R''''`` in arclength at ``t = 0``."""
    if profile.flat:
        return CurvatureJet.flat_wall()
    a2, a4, a6 = profile.coeffs[:3]
    R = 1.0 / (2.0 * a2)
    R2 = 6.0 * a2 - 6.0 * a4 / a2**2
    R4 = -12.0 * (2 * a2**6 + 4 * a2**3 * a4 - 36 * a4**2 + 15 * a2 * a6) / a2**3
    return CurvatureJet(R, R2, R4)


def profile_from_curvature(jet: CurvatureJet, eps: float | None = None) -> BoundaryProfile:
    """Degree-6 profile whose curvature jet is ``jet``."""
    if jet.flat:
        raise UnsupportedError("a flat jet has no unique curved profile; use named_profile('flat')")
    a2 = 1.0 / (2.0 * jet.R)
    a4 = a2**2 * (a2 - jet.R2 / 6.0)
    a6 = (-jet.R4 * a2**3 / 12.0 - 2 * a2**6 - 4 * a2**3 * a4 + 36 * a4**2) / (15.0 * a2)
    return BoundaryProfile((a2, a4, a6), eps)


def _positive(params: Sequence[float], count: int, kind: str) -> list[float]:
    if len(params) != count:
        raise InvalidParameterError(f"{kind} takes {count} parameter(s), got {len(params)}")
    vals = [float(p) for p in params]
    if not all(v > 0 and math.isfinite(v) for v in vals):
        raise InvalidParameterError(f"{kind} parameters must be positive, got {vals}")
    return vals


def named_profile(kind: str, params: Sequence[float] = (), terms: int = MIN_COEFFS) -> BoundaryProfile:
    """Conic arcs written as graphs over the tangent at a vertex.

    Kinds
    -----
    ``circle(R)``, ``ellipse_minor_vertex(b)`` for ``x^2/b^2 + y^2 = 1`` at
    ``(b, 0)``, ``ellipse_vertex(A, B)`` for ``x^2/A^2 + y^2/B^2 = 1`` at
    ``(A, 0)``, ``hyperbola_vertex(p, q)`` for ``x^2/p^2 - y^2/q^2 = 1`` at
    ``(p, 0)`` and ``flat``.  ``terms`` is the number of even coefficients kept.
    """
    if terms < MIN_COEFFS:
        raise InvalidParameterError("at least three series terms are required")
    n = range(1, terms + 1)
    if kind == "flat":
        if params:
            raise InvalidParameterError("flat takes no parameters")
        return BoundaryProfile((0.0,) * terms, 1.0)
    if kind == "circle":
        (R,) = _positive(params, 1, kind)
        coeffs = [-R * _half_binomial(k) * (-1) ** k / R ** (2 * k) for k in n]
        return BoundaryProfile(tuple(coeffs), 0.9 * R)
    if kind in ("ellipse_minor_vertex", "ellipse_vertex"):
        if kind == "ellipse_minor_vertex":
            (A,) = _positive(params, 1, kind)
            B = 1.0
        else:
            A, B = _positive(params, 2, kind)
        coeffs = [-A * _half_binomial(k) * (-1) ** k / B ** (2 * k) for k in n]
        return BoundaryProfile(tuple(coeffs), 0.9 * B)
    if kind == "hyperbola_vertex":
        p, q = _positive(params, 2, kind)
        coeffs = [p * _half_binomial(k) / q ** (2 * k) for k in n]
        return BoundaryProfile(tuple(coeffs), 0.9 * q)
    raise InvalidParameterError(f"unknown profile kind {kind!r}")


def scale_table(table: TableConfig, k: float) -> TableConfig:
    """Similarity-scale the table by ``k``."""
    if not (k > 0 and math.isfinite(k)):
        raise InvalidParameterError("scale factor must be positive")

    def scaled(p: BoundaryProfile) -> BoundaryProfile:
        coeffs = tuple(c * k ** (1 - 2 * (i + 1)) for i, c in enumerate(p.coeffs))
        return BoundaryProfile(coeffs, p.eps * k)

    left = scaled(table.left)
    right = left if table.symmetric else scaled(table.right)
    return TableConfig(k * table.L, left, right, table.symmetric)


def profile_from_dict(obj: Mapping[str, Any]) -> BoundaryProfile:
    eps = obj.get("eps")
    if "named" in obj:
        spec = obj["named"]
        prof = named_profile(spec["kind"], spec.get("params", []), int(spec.get("terms", MIN_COEFFS)))
        return prof if eps is None else prof.with_eps(float(eps))
    if "coeffs" in obj:
        return BoundaryProfile(tuple(obj["coeffs"]), eps)
    if obj.get("flat"):
        return BoundaryProfile((0.0, 0.0, 0.0), eps)
    try:
        coeffs = (obj["a2"], obj.get("a4", 0.0), obj.get("a6", 0.0))
    except KeyError as exc:
        raise InvalidProfileError("profile needs 'named', 'coeffs', 'flat' or 'a2'") from exc
    return BoundaryProfile(tuple(coeffs), eps)


def table_from_dict(obj: Mapping[str, Any]) -> TableConfig:
    """Build a table from the JSON-compatible config structure."""
    try:
        L = float(obj["L"])
        left = profile_from_dict(obj["left"])
        right_spec = obj.get("right", "same")
    except (KeyError, TypeError) as exc:
        raise InvalidParameterError(f"malformed table config: {exc}") from exc
    if right_spec == "same":
        return TableConfig.mirror(L, left)
    return TableConfig(L, left, profile_from_dict(right_spec))


def load_table(path: str | Path) -> TableConfig:
    with open(path, encoding="utf-8") as fh:
        return table_from_dict(json.load(fh))
