"""Named example tables with their conventional parameter names."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Mapping

from .errors import InvalidParameterError
from .geometry import TableConfig, named_profile

# Series length for exact conic geometry; the normal form reads only a2..a6.
GEOMETRY_TERMS = 24


def lemon(L: float, R: float = 1.0) -> TableConfig:
    """Two circular arcs of radius ``R`` whose vertices are ``L`` apart."""
    return TableConfig.mirror(L, named_profile("circle", [R], GEOMETRY_TERMS))


def ellipse(b: float) -> TableConfig:
    """``x^2/b^2 + y^2 = 1`` with the orbit along the minor axis (``0 < b < 1``)."""
    if not 0 < b < 1:
        raise InvalidParameterError("ellipse needs 0 < b < 1")
    return TableConfig.mirror(2 * b, named_profile("ellipse_minor_vertex", [b], GEOMETRY_TERMS))


def asymmetric_lemon(r: float, R: float, B: float) -> TableConfig:
    """Arcs of radii ``r < R`` whose centers are ``B`` apart, ``L = R + r - B``.

    ``R - r < B < R + r`` is the genuine lens; smaller ``B`` is still a valid
    local two-arc table near the orbit and is accepted.
    """
    if not 0 < r < R:
        raise InvalidParameterError("asymmetric lemon needs 0 < r < R")
    if not 0 < B < R + r:
        raise InvalidParameterError("asymmetric lemon needs 0 < B < R + r")
    return TableConfig(
        R + r - B, named_profile("circle", [r], GEOMETRY_TERMS), named_profile("circle", [R], GEOMETRY_TERMS)
    )


def asymmetric_lemon_resonant_B(r: float, R: float, sign: int = 1) -> float:
    """Center distances ``B±`` where the fourth-order resonance occurs."""
    return 0.5 * (r + R + math.copysign(math.hypot(r, R), sign))


def _confocal_ellipse(a: float):
    if not a > 1:
        raise InvalidParameterError("ellipse-hyperbola lens needs a > 1 (focal distance 1)")
    return named_profile("ellipse_vertex", [a, math.sqrt(a * a - 1)], GEOMETRY_TERMS)


def eh_lens_shift(a: float, s: float) -> TableConfig:
    """Confocal ellipse-hyperbola lens with the hyperbola shifted by ``s``.

    Arc 0 is the ellipse vertex ``(a, 0)``; arc 1 is the vertex of the
    hyperbola with ``p = 1/a``, ``q^2 = 1 - 1/a^2``.
    """
    ell = _confocal_ellipse(a)
    p = 1 / a
    hyp = named_profile("hyperbola_vertex", [p, math.sqrt(1 - p * p)], GEOMETRY_TERMS)
    return TableConfig(a - p - s, ell, hyp)


def eh_lens_deform(a: float, p: float, q: float) -> TableConfig:
    """Ellipse of focal distance 1 against the hyperbola ``x^2/p^2 - y^2/q^2 = 1``."""
    ell = _confocal_ellipse(a)
    if not 0 < p < a:
        raise InvalidParameterError("ellipse-hyperbola lens needs 0 < p < a")
    return TableConfig(a - p, ell, named_profile("hyperbola_vertex", [p, q], GEOMETRY_TERMS))


def half_ellipses(b0: float, b1: float) -> TableConfig:
    """Left half of ``x^2/b0^2 + y^2 = 1`` joined to the right half of ``x^2/b1^2 + y^2 = 1``."""
    for b in (b0, b1):
        if not 0 < b < 1:
            raise InvalidParameterError("half ellipses need 0 < b0, b1 < 1")
    return TableConfig(
        b0 + b1,
        named_profile("ellipse_minor_vertex", [b0], GEOMETRY_TERMS),
        named_profile("ellipse_minor_vertex", [b1], GEOMETRY_TERMS),
    )


@dataclass(frozen=True)
class NamedExample:
    builder: Callable[..., TableConfig]
    params: tuple[str, ...]
    defaults: Mapping[str, float]


EXAMPLES: dict[str, NamedExample] = {
    "lemon": NamedExample(lemon, ("L", "R"), {"R": 1.0}),
    "ellipse": NamedExample(ellipse, ("b",), {}),
    "asymmetric-lemon": NamedExample(asymmetric_lemon, ("r", "R", "B"), {}),
    "eh-lens-shift": NamedExample(eh_lens_shift, ("a", "s"), {}),
    "eh-lens-deform": NamedExample(eh_lens_deform, ("a", "p", "q"), {}),
    "half-ellipses": NamedExample(half_ellipses, ("b0", "b1"), {}),
}


def build_example(name: str, params: Mapping[str, float]) -> TableConfig:
    """Construct a named example; missing parameters without defaults are an error."""
    try:
        ex = EXAMPLES[name]
    except KeyError:
        raise InvalidParameterError(f"unknown example {name!r}; choose from {sorted(EXAMPLES)}") from None
    unknown = set(params) - set(ex.params)
    if unknown:
        raise InvalidParameterError(f"{name} does not take {sorted(unknown)}")
    values = dict(ex.defaults)
    values.update(params)
    missing = [p for p in ex.params if p not in values]
    if missing:
        raise InvalidParameterError(f"{name} needs parameter(s) {missing}")
    return ex.builder(**{p: float(values[p]) for p in ex.params})
