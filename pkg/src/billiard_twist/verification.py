"""Acceptance suite: each criterion is a function returning a ``CriterionResult``."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator

import numpy as np

from .formulas import (
    TwistInput,
    classify,
    eh_tau2_root,
    pole_structure_check,
    tau1_asym,
    tau1_sym,
    tau2_asym,
    tau2_equal_radii,
    tau2_flat,
    tau2_sym,
    third_partials,
)
from .geometry import CurvatureJet, TableConfig, profile_from_curvature, scale_table
from .jets import map_jet
from .normal_form import analyze
from .rotation import (
    ellipse_start,
    ellipse_table,
    fd_fourth,
    fd_second,
    rho2_exact,
    rho4_exact,
    rho_kolodziej_t,
    rho_numeric_estimate,
    rho_twist,
)
from .tables import asymmetric_lemon, ellipse, lemon

SEED = 20240611
RES_MARGIN = 0.05


@dataclass
class CriterionResult:
    number: int
    title: str
    passed: bool
    detail: str
    seconds: float = 0.0
    metrics: dict = field(default_factory=dict)

    def line(self) -> str:
        mark = "PASS" if self.passed else "FAIL"
        return f"[{mark}] criterion {self.number:>2}: {self.title} ({self.seconds:.2f}s) {self.detail}"


# ---------------------------------------------------------------------------
# random admissible tables


@dataclass(frozen=True)
class SampledTable:
    table: TableConfig
    L: float
    jets: tuple[CurvatureJet, CurvatureJet]


def _far_from_resonance(lam: complex, margin: float = RES_MARGIN) -> bool:
    return all(abs(lam**n - 1) >= margin for n in (3, 4, 6))


def _random_jet(rng: np.random.Generator, R: float) -> CurvatureJet:
    return CurvatureJet(R, rng.uniform(-3, 3), rng.uniform(-10, 10))


def random_symmetric_tables(rng: np.random.Generator, n: int) -> Iterator[SampledTable]:
    """Symmetric tables with ``L/R`` in ``(0, 2)`` away from the 3, 4, 6 resonances."""
    made = 0
    while made < n:
        R = rng.uniform(0.5, 2.0)
        L = R * rng.uniform(0.02, 1.98)
        rep = classify(L, R, symmetric=True)
        if rep.cls != "elliptic" or not _far_from_resonance(rep.lam):
            continue
        jet = _random_jet(rng, R)
        yield SampledTable(TableConfig.mirror(L, profile_from_curvature(jet)), L, (jet, jet))
        made += 1


def random_asymmetric_tables(rng: np.random.Generator, n: int) -> Iterator[SampledTable]:
    """Asymmetric tables alternating between the two elliptic branches of ``L``."""
    made = 0
    while made < n:
        R0, R1 = rng.uniform(0.5, 2.0, size=2)
        lo, hi = min(R0, R1), max(R0, R1)
        if made % 2 == 0:
            L = lo * rng.uniform(0.05, 0.95)
        else:
            L = hi + lo * rng.uniform(0.05, 0.95)
        rep = classify(L, R0, R1, symmetric=False)
        if rep.cls != "elliptic" or not _far_from_resonance(rep.lam):
            continue
        j0, j1 = _random_jet(rng, R0), _random_jet(rng, R1)
        table = TableConfig(L, profile_from_curvature(j0), profile_from_curvature(j1), symmetric=False)
        yield SampledTable(table, L, (j0, j1))
        made += 1


def _rel(a: float, b: float) -> float:
    return abs(a - b) / max(1.0, abs(b))


# ---------------------------------------------------------------------------
# criteria


def criterion_formula_pipeline(n_sym: int = 100, n_asym: int = 100, seed: int = SEED) -> CriterionResult:
    rng = np.random.default_rng(seed)
    worst1 = worst2 = 0.0
    bad: list[str] = []
    for sample in random_symmetric_tables(rng, n_sym):
        res = analyze(sample.table)
        jet = sample.jets[0]
        e1 = _rel(res.tau1, tau1_sym(sample.L, jet.R, jet.R2))
        e2 = _rel(res.tau2, tau2_sym(sample.L, jet.R, jet.R2, jet.R4))
        worst1, worst2 = max(worst1, e1), max(worst2, e2)
        if e1 > 1e-8 or e2 > 1e-7:
            bad.append(f"sym L={sample.L:.4g} R={jet.R:.4g}")
    for sample in random_asymmetric_tables(rng, n_asym):
        res = analyze(sample.table)
        inp = TwistInput(sample.L, sample.jets)
        e1 = _rel(res.tau1, tau1_asym(inp))
        e2 = _rel(res.tau2, tau2_asym(inp))
        worst1, worst2 = max(worst1, e1), max(worst2, e2)
        if e1 > 1e-8 or e2 > 1e-7:
            bad.append(f"asym L={sample.L:.4g} R0={inp.R0:.4g} R1={inp.R1:.4g}")
    detail = f"max rel err tau1 {worst1:.2e} (tol 1e-8), tau2 {worst2:.2e} (tol 1e-7)"
    if bad:
        detail += f"; {len(bad)} failing tables, first: {bad[0]}"
    return CriterionResult(1, "formula/pipeline agreement", not bad, detail, metrics={"tau1": worst1, "tau2": worst2})


def criterion_fixtures() -> CriterionResult:
    checks: list[tuple[str, float, float]] = []
    for b in (0.3, 0.6, 0.65):
        checks.append((f"ellipse b={b} tau1 pipeline", analyze(ellipse(b)).tau1, b / 2))
        checks.append((f"ellipse b={b} tau1 formula", tau1_sym(2 * b, 1 / b, 3 * b - 3 / b), b / 2))
    for L in (0.3, 1.7):
        checks.append((f"lemon L={L} tau1 pipeline", analyze(lemon(L)).tau1, 1 / 8))
        checks.append((f"lemon L={L} tau1 formula", tau1_sym(L, 1.0, 0.0), 1 / 8))
    for r, R in ((1.0, 2.0), (1.0, 3.0)):
        B = R + 0.5 * r
        expected = (1 / r + 1 / R) / 8
        checks.append((f"asym lemon r={r} R={R} tau1(F2) pipeline", analyze(asymmetric_lemon(r, R, B)).tau1_F2, expected))
        inp = TwistInput(R + r - B, (CurvatureJet(r), CurvatureJet(R)))
        checks.append((f"asym lemon r={r} R={R} tau1(F2) formula", tau1_asym(inp), expected))
    b = 0.5
    expected = 3 * b * (3 - 2 * b * b) / (32 * math.sqrt(1 - b * b))
    checks.append(("ellipse b=0.5 tau2 pipeline", analyze(ellipse(b)).tau2, expected))
    checks.append(("ellipse b=0.5 tau2 formula", tau2_sym(2 * b, 1 / b, 3 * b - 3 / b, 9 / b - 6 * b - 3 * b**3), expected))
    errs = [(name, abs(got - want) if got is not None else math.inf) for name, got, want in checks]
    worst = max(errs, key=lambda x: x[1])
    ok = worst[1] <= 1e-10
    return CriterionResult(2, "closed-form fixtures", ok, f"{len(checks)} checks, worst {worst[1]:.2e} ({worst[0]})")


def criterion_third_derivatives(n: int = 20, seed: int = SEED + 3) -> CriterionResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n):
        R = rng.uniform(0.5, 2.0)
        L = R * rng.uniform(0.05, 1.95)
        R2 = rng.uniform(-3, 3)
        jet = map_jet(TableConfig.mirror(L, profile_from_curvature(CurvatureJet(R, R2, 0.0))), 0, 3)
        for (comp, j, k), want in third_partials(L, R, R2).items():
            got = jet.derivative(comp, j, k)
            worst = max(worst, abs(got - want) / max(abs(want), 1e-12))
    return CriterionResult(3, "third-order partials", worst <= 1e-9, f"{8 * n} partials, max rel err {worst:.2e} (tol 1e-9)")


def criterion_jacobi(n_sym: int = 100, n_asym: int = 100, seed: int = SEED) -> CriterionResult:
    rng = np.random.default_rng(seed)
    worst3 = worst5 = 0.0
    samples = list(random_symmetric_tables(rng, n_sym)) + list(random_asymmetric_tables(rng, n_asym))
    for sample in samples:
        res = analyze(sample.table)
        for key, val in res.jacobi.items():
            if key in ("c12+3conj(c30)", "Re(c21)"):
                worst3 = max(worst3, val)
            else:
                worst5 = max(worst5, val)
    ok = worst3 <= 1e-9 and worst5 <= 1e-8
    return CriterionResult(
        4, "Jacobian identities", ok, f"{len(samples)} tables, order-3 max {worst3:.2e} (1e-9), order-5 max {worst5:.2e} (1e-8)"
    )


def criterion_rotation(b: float = 0.6, t: float = 0.1, n: int = 100_000) -> CriterionResult:
    est = rho_numeric_estimate(ellipse_table(b), ellipse_start(b, t), n)
    kol = rho_kolodziej_t(b, t)
    e_num = abs(est.rho - kol)
    d2_k = fd_second(lambda x: rho_kolodziej_t(b, x))
    d2_t = fd_second(lambda x: rho_twist(b, x))
    d4_k = fd_fourth(lambda x: rho_kolodziej_t(b, x))
    d4_t = fd_fourth(lambda x: rho_twist(b, x))
    e2 = max(abs(d2_k - rho2_exact(b)), abs(d2_t - rho2_exact(b)))
    e4 = max(abs(d4_k - rho4_exact(b)), abs(d4_t - rho4_exact(b))) / abs(rho4_exact(b))
    ok = e_num <= 1e-5 and e2 <= 1e-5 and e4 <= 1e-3 and not est.left_domain
    detail = f"|num-kol| {e_num:.2e} (1e-5), rho'' err {e2:.2e} (1e-5), rho'''' rel err {e4:.2e} (1e-3)"
    return CriterionResult(5, "rotation numbers on the ellipse", ok, detail)


def criterion_asymmetric_limits(n: int = 10, seed: int = SEED + 6) -> CriterionResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n):
        while True:
            R = rng.uniform(0.5, 2.0)
            L = R * rng.uniform(0.05, 1.95)
            if abs(L - R) > 0.05 * R and _far_from_resonance(classify(L, R, symmetric=True).lam**2, 1e-3):
                break
        j0, j1 = _random_jet(rng, R), _random_jet(rng, R)
        same = tau2_asym(TwistInput(L, (j0, j0)))
        worst = max(worst, abs(same - 2 * tau2_sym(L, R, j0.R2, j0.R4)) / abs(same))
        mixed = tau2_asym(TwistInput(L, (j0, j1)))
        equal = tau2_equal_radii(L, R, j0.R2, j1.R2, j0.R4, j1.R4)
        worst = max(worst, abs(mixed - equal) / abs(equal))
    # flat-wall limit
    R0 = 1.3
    j0 = CurvatureJet(R0, 0.7, -2.0)
    L = 0.4
    far = tau2_asym(TwistInput(L, (j0, CurvatureJet(1e8 * L, 0.0, 0.0))))
    flat = tau2_flat(L, j0)
    e_flat = abs(far - flat) / abs(flat)
    ok = worst <= 1e-10 and e_flat <= 1e-5
    return CriterionResult(
        6, "asymmetric limits", ok, f"equal radii max rel err {worst:.2e} (1e-10), flat wall rel err {e_flat:.2e} (1e-5)"
    )


def criterion_scaling(n: int = 10, k: float = 2.0, seed: int = SEED + 7) -> CriterionResult:
    rng = np.random.default_rng(seed)
    samples = list(random_symmetric_tables(rng, n // 2)) + list(random_asymmetric_tables(rng, n - n // 2))
    worst = 0.0
    for sample in samples:
        a = analyze(sample.table)
        b = analyze(scale_table(sample.table, k))
        worst = max(worst, abs(b.tau1 * k / a.tau1 - 1), abs(b.tau2 * k * k / a.tau2 - 1))
    return CriterionResult(7, "scaling degrees", worst <= 1e-9, f"{n} tables at k={k}, max rel err {worst:.2e} (1e-9)")


def criterion_resonance() -> CriterionResult:
    res = analyze(lemon(1.0))
    e_c03 = abs(res.c03 - (-1j / 8))
    ok_lemon = res.verdict == "not_locally_analytically_integrable" and e_c03 <= 1e-10
    R = 1.0
    jet = CurvatureJet(R, -3 / R, 0.0)
    rem = analyze(TableConfig.mirror(R, profile_from_curvature(jet)))
    ok_rem = abs(rem.c03) <= 1e-10 and any("removable" in note for note in rem.notes) and abs(rem.tau1 - 1 / (2 * R)) <= 1e-10
    ok = ok_lemon and ok_rem
    detail = (
        f"lemon verdict {res.verdict}, |c03 + i/8| {e_c03:.1e}; "
        f"removable case |c03| {abs(rem.c03):.1e}, tau1 {rem.tau1:.12g}"
    )
    return CriterionResult(8, "resonance verdicts", ok, detail)


def criterion_pole(n: int = 3, seed: int = SEED + 9) -> CriterionResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    done = 0
    while done < n:
        R = rng.uniform(0.5, 2.0)
        R2 = rng.uniform(-3, 3)
        if abs(3 + R * R2) < 0.1:
            continue
        worst = max(worst, pole_structure_check(R, R2, rng.uniform(-10, 10)))
        done += 1
    return CriterionResult(9, "pole structure along L = R", worst <= 1e-3, f"{n} jets, max rel err {worst:.2e} (1e-3)")


def criterion_eh_root() -> CriterionResult:
    a = eh_tau2_root()
    err = abs(a - 1.87861)
    return CriterionResult(10, "EH-lens tau2 root", err <= 1e-4, f"a* = {a:.10f}, |a* - 1.87861| = {err:.1e} (1e-4)")


CRITERIA: dict[int, tuple[Callable[[], CriterionResult], tuple[str, ...]]] = {
    1: (criterion_formula_pipeline, ("formulas", "normal_form", "pipeline")),
    2: (criterion_fixtures, ("fixtures", "formulas", "normal_form")),
    3: (criterion_third_derivatives, ("jets",)),
    4: (criterion_jacobi, ("normal_form", "jacobi")),
    5: (criterion_rotation, ("rotation",)),
    6: (criterion_asymmetric_limits, ("formulas", "asymmetric")),
    7: (criterion_scaling, ("scaling", "normal_form")),
    8: (criterion_resonance, ("resonance", "normal_form")),
    9: (criterion_pole, ("pole", "formulas")),
    10: (criterion_eh_root, ("eh", "formulas")),
}


def select(filter_text: str | None) -> list[int]:
    """Criterion numbers whose number or tags match ``filter_text``."""
    if not filter_text:
        return sorted(CRITERIA)
    f = filter_text.strip().lower()
    return [n for n, (_, tags) in sorted(CRITERIA.items()) if f == str(n) or any(f in t for t in tags)]


def run_criterion(number: int) -> CriterionResult:
    fn, _ = CRITERIA[number]
    start = time.perf_counter()
    try:
        result = fn()
    except Exception as exc:  # a crash is a failure, reported with its cause
        result = CriterionResult(number, fn.__name__.removeprefix("criterion_"), False, f"raised {type(exc).__name__}: {exc}")
    result.seconds = time.perf_counter() - start
    return result


def run_all(numbers: Iterable[int] | None = None) -> list[CriterionResult]:
    return [run_criterion(n) for n in (sorted(CRITERIA) if numbers is None else numbers)]
