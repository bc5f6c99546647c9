"""The acceptance checks, shared by the command line and the test suite.

Every check returns a CheckResult whose ``margin`` is the worst slack found
(nonnegative means pass) together with enough detail to locate a failure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .geometry import Profile, SurfaceKind, SurfaceSpec
from .measure import QuadratureConfig, integrate
from .optimal import (ALPHA_KLEIN, BETA0, BETA1, QUARTER_PI, KleinCase, _s_equation,
                      alpha_sys_closed_form, klein_branch_alpha, klein_optimal, optimal_profile,
                      phi0, phi0_integral, solve_s_beta, sphere_chart)
from .projections import (LemmaVerdict, decreasing_lemma_check, defect_report,
                          projection_inequality_check, pu_equality_residual, random_profile)
from .systole import GridConfig, systole_estimate

SUITE_BETAS = (0.5, 0.85, 1.0, 1.6)


@dataclass(frozen=True)
class VerifyConfig:
    grid: tuple[int, int] = (256, 256)
    stencil: int = 16
    word_bounds: tuple[int, int] = (4, 2)
    suite_grid: tuple[int, int] = (128, 128)
    sys_tol: float = 0.02
    quad_tol: float = 1e-8
    trials: int = 100
    lemma_trials: int = 1000
    seed: int = 0

    def systole_grid(self) -> GridConfig:
        return GridConfig(*self.grid, self.stencil, self.word_bounds)

    def suite_systole_grid(self) -> GridConfig:
        return GridConfig(*self.suite_grid, self.stencil, self.word_bounds)


@dataclass
class CheckResult:
    criterion: int
    name: str
    passed: bool
    margin: float
    detail: dict = field(default_factory=dict)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] {self.criterion:2d} {self.name}: margin {self.margin:.3e}"


def _result(criterion, name, slacks, detail=None) -> CheckResult:
    worst = float(min(slacks))
    return CheckResult(criterion, name, worst >= 0, worst, detail or {})


def check_constants(cfg: VerifyConfig) -> CheckResult:
    tol = 1e-10
    quad = integrate(phi0, 0.0, BETA0, QuadratureConfig(1e-13))
    errs = {
        "phi0(beta1) - 1/2": abs(phi0(BETA1) - 0.5),
        "quadrature int phi0 - pi/4": abs(quad - QUARTER_PI),
        "antiderivative int phi0 - pi/4": abs(phi0_integral(BETA0) - QUARTER_PI),
    }
    return _result(1, "constants", [tol - e for e in errs.values()], errs)


def check_closed_forms(cfg: VerifyConfig) -> CheckResult:
    errs = {}
    for b in (0.3, BETA0, 1.0, BETA1, 2.0):
        val = integrate(lambda y: phi0(y) ** 2, 0.0, b, QuadratureConfig(1e-13))
        errs[f"{b:.6f}"] = abs(val - math.tanh(b))
    return _result(2, "int phi0^2 = tanh", [1e-10 - e for e in errs.values()], errs)


def alpha_curve_grid(beta_min: float = 0.2, beta_max: float = 3.0, step: float = 1e-3) -> np.ndarray:
    """Uniform grid with the case boundaries inserted, so the kink at beta0 is sampled."""
    n = int(math.floor((beta_max - beta_min) / step + 1e-9))
    grid = beta_min + step * np.arange(n + 1)
    extra = [b for b in (QUARTER_PI, BETA0, BETA1) if beta_min <= b <= beta_max]
    return np.unique(np.concatenate((grid, extra)))


def check_klein_minimum(cfg: VerifyConfig) -> CheckResult:
    step = 1e-3
    betas = alpha_curve_grid(0.2, 3.0, step)
    alphas = np.array([alpha_sys_closed_form(SurfaceKind.KLEIN, b) for b in betas])
    i = int(np.argmin(alphas))
    branch_pairs = [(KleinCase.THIN, KleinCase.ROUND_FLAT_THIN, QUARTER_PI),
                    (KleinCase.ROUND_FLAT_THIN, KleinCase.ROUND, BETA0),
                    (KleinCase.ROUND, KleinCase.ROUND_FLAT_THICK, BETA1)]
    jumps = [abs(klein_branch_alpha(a, b) - klein_branch_alpha(c, b)) for a, c, b in branch_pairs]
    detail = {
        "min_alpha": float(alphas[i]),
        "argmin": float(betas[i]),
        "min_minus_target": float(alphas[i] - ALPHA_KLEIN),
        "lowest_value_minus_target": float(alphas.min() - ALPHA_KLEIN),
        "branch_jumps": jumps,
    }
    slacks = [1e-6 - abs(alphas[i] - ALPHA_KLEIN),
              step - abs(betas[i] - BETA0),
              float(alphas.min() - ALPHA_KLEIN) + 1e-12]
    slacks += [1e-10 - j for j in jumps]
    return _result(3, "Klein alpha_sys minimum 2 sqrt2 / pi at beta0", slacks, detail)


def check_s_beta(cfg: VerifyConfig) -> CheckResult:
    betas = np.linspace(QUARTER_PI, BETA0, 22)[1:-1]
    s = np.array([solve_s_beta(b) for b in betas])
    res = np.array([abs(_s_equation(si, b) - QUARTER_PI) for si, b in zip(s, betas)])
    gaps = np.diff(s)
    detail = {"max_residual": float(res.max()), "min_increment": float(gaps.min())}
    return _result(4, "s_beta solver", [1e-12 - res.max(), float(gaps.min())], detail)


def _rel_err_check(criterion, name, cases, grid, tol) -> CheckResult:
    detail, slacks = {}, []
    for label, surface, profile, expected in cases:
        est = systole_estimate(surface, profile, grid)
        rel = abs(est.value / expected - 1.0)
        detail[label] = {"estimate": est.value, "expected": expected, "rel_err": rel,
                         "word": str(est.word)}
        slacks.append(tol - rel)
    return _result(criterion, name, slacks, detail)


def check_systole_closed_forms(cfg: VerifyConfig) -> CheckResult:
    cases = []
    for b in (0.5, 1.0, BETA1, 1.6, 2.0):
        exp = math.pi if b <= BETA1 else 2 * math.pi * phi0(b)
        cases.append((f"mobius phi0 beta={b:.4f}", SurfaceSpec.mobius(b),
                      Profile.expression(b, phi0, "phi0", decreasing=True), exp))
    for b in (0.3, 0.7854, 1.2):
        cases.append((f"klein flat beta={b}", SurfaceSpec.klein(b), Profile.flat(b),
                      min(math.pi, 4 * b)))
    return _rel_err_check(5, "systole estimates vs closed forms", cases, cfg.systole_grid(),
                          cfg.sys_tol)


def check_normalization(cfg: VerifyConfig) -> CheckResult:
    cases = [(f"klein optimal beta={b}", SurfaceSpec.klein(b), klein_optimal(b), math.pi)
             for b in (0.5, 0.85, 1.0, 1.5, 2.0)]
    return _rel_err_check(6, "optimal Klein metrics have systole pi", cases, cfg.systole_grid(),
                          cfg.sys_tol)


def pu_fixtures(beta: float) -> dict[str, Profile]:
    return {
        "phi0": Profile.expression(beta, phi0, "phi0"),
        "constant": Profile.flat(beta),
        "ramp": Profile.expression(beta, lambda y: 1.0 + 0.5 * y, "ramp"),
        "wave": Profile.expression(beta, lambda y: 1.2 + 0.4 * np.cos(3.0 * y), "wave"),
        "gauss": Profile.expression(beta, lambda y: 0.6 + np.exp(-4.0 * (y - 0.5 * beta) ** 2),
                                    "gauss"),
    }


def check_pu_equality(cfg: VerifyConfig) -> CheckResult:
    detail = {}
    for b in (0.8, 1.0):
        for name, prof in pu_fixtures(b).items():
            detail[f"{name} beta={b}"] = pu_equality_residual(b, prof)
    return _result(7, "Pu equality", [1e-4 - r for r in detail.values()], detail)


@dataclass(frozen=True)
class SuiteEntry:
    surface: SurfaceSpec
    profile: Profile
    systole: float


def random_suite(cfg: VerifyConfig, kinds=(SurfaceKind.KLEIN, SurfaceKind.MOBIUS)) -> list[SuiteEntry]:
    """``trials`` seeded random profiles for each suite beta and surface kind."""
    grid = cfg.suite_systole_grid()
    entries = []
    for kind in kinds:
        for j, b in enumerate(SUITE_BETAS):
            surface = SurfaceSpec(kind, b)
            rng = np.random.default_rng([cfg.seed, j, 0 if kind is SurfaceKind.KLEIN else 1])
            for _ in range(cfg.trials):
                prof = random_profile(surface, rng)
                entries.append(SuiteEntry(surface, prof, systole_estimate(surface, prof, grid).value))
    return entries


def _label(e: SuiteEntry, i: int) -> str:
    return f"{e.surface.kind.value} beta={e.surface.beta} #{i} {e.profile.name}"


def check_projection_inequality(cfg: VerifyConfig, suite: list[SuiteEntry]) -> CheckResult:
    slacks, worst = [], None
    raw_min = math.inf
    for i, e in enumerate(suite):
        chk = projection_inequality_check(e.surface, e.profile, systole=e.systole,
                                          quad_tol=cfg.quad_tol, sys_tol=cfg.sys_tol)
        slack = chk.margin + chk.budget
        raw_min = min(raw_min, chk.margin)
        if worst is None or slack < min(slacks):
            worst = {"case": _label(e, i), "margin": chk.margin, "budget": chk.budget}
        slacks.append(slack)
    return _result(8, "projection inequality", slacks,
                   {"profiles": len(suite), "min_raw_margin": raw_min, "worst": worst})


def check_defects(cfg: VerifyConfig, suite: list[SuiteEntry],
                  equality_profiles: list[tuple[SurfaceSpec, Profile]] | None = None) -> CheckResult:
    slacks, worst = [], None
    for i, e in enumerate(suite):
        r = defect_report(e.surface, e.profile, systole=e.systole)
        budget = r.budget(cfg.quad_tol, cfg.sys_tol)
        s = [r.rhs_defect - r.lhs_defect + budget]
        if r.bavard_gap is not None:
            s.append(r.alpha_g - ALPHA_KLEIN + budget - r.bavard_gap - r.lhs_defect)
            s.append(r.bavard_gap + cfg.quad_tol)
        if worst is None or min(s) < min(slacks):
            worst = {"case": _label(e, i), "lhs_defect": r.lhs_defect,
                     "rhs_defect": r.rhs_defect, "budget": budget}
        slacks.extend(s)
    eq = equality_failures(cfg, equality_profiles)
    slacks.extend(eq["slacks"])
    detail = {"profiles": len(suite), "worst": worst, "equality_cases": eq["cases"]}
    if eq["violations"]:
        detail["violated"] = eq["violations"]
    return _result(9, "defect theorems", slacks, detail)


def default_equality_profiles() -> list[tuple[SurfaceSpec, Profile]]:
    out = []
    for kind in SurfaceKind:
        for b in SUITE_BETAS + (BETA0, 2.0):
            s = SurfaceSpec(kind, b)
            out.append((s, optimal_profile(s)))
    return out


def equality_failures(cfg: VerifyConfig, profiles=None, tol: float = 1e-6) -> dict:
    """Equality case: the optimal profiles must have both defects 0 +- tol."""
    profiles = default_equality_profiles() if profiles is None else profiles
    grid = cfg.systole_grid()
    slacks, cases, violations = [], {}, []
    for surface, prof in profiles:
        r = defect_report(surface, prof, grid)
        label = f"{surface.kind.value} beta={surface.beta:.6f}"
        cases[label] = {"lhs_defect": r.lhs_defect, "rhs_defect": r.rhs_defect}
        for key in ("lhs_defect", "rhs_defect"):
            slack = tol - abs(getattr(r, key))
            slacks.append(slack)
            if slack < 0:
                violations.append(f"equality case {label}: {key} = {getattr(r, key):.3e}")
    return {"slacks": slacks, "cases": cases, "violations": violations}


def check_variance(cfg: VerifyConfig, suite: list[SuiteEntry]) -> CheckResult:
    slacks = []
    worst = 0.0
    for e in suite:
        r = defect_report(e.surface, e.profile, systole=e.systole)
        vf = r.variance_form
        gap = abs(r.residual_norm_sq - vf.area_opt * vf.var_h)
        worst = max(worst, gap / vf.area_opt)
        slacks.append(1e-6 * vf.area_opt - gap)
    return _result(10, "variance reformulation", slacks,
                   {"profiles": len(suite), "max_relative_gap": worst})


def check_sphere_isometry(cfg: VerifyConfig) -> CheckResult:
    beta, h = 1.0, 1e-5
    rng = np.random.default_rng(cfg.seed)
    pts = np.column_stack((rng.uniform(-0.5 * math.pi + 2 * h, 0.5 * math.pi - 2 * h, 100),
                           rng.uniform(-beta + 2 * h, beta - 2 * h, 100)))
    ex, ey = np.array([h, 0.0]), np.array([0.0, h])
    dx = (sphere_chart(beta, pts + ex) - sphere_chart(beta, pts - ex)) / (2 * h)
    dy = (sphere_chart(beta, pts + ey) - sphere_chart(beta, pts - ey)) / (2 * h)
    target = phi0(pts[:, 1]) ** 2
    errs = np.concatenate((np.abs(np.sum(dx * dx, axis=1) - target),
                           np.abs(np.sum(dy * dy, axis=1) - target),
                           np.abs(np.sum(dx * dy, axis=1))))
    return _result(11, "sphere chart isometry", [1e-5 - errs.max()],
                   {"max_gram_error": float(errs.max())})


def random_lemma_pair(rng: np.random.Generator, n: int | None = None):
    """Random (h, g, ys) meeting the lemma's premise.

    h is a sorted decreasing positive sample; g is drawn until the running
    integrals of h g stay nonnegative.  Candidates come from a reflected
    random walk of the running integral, which often touches zero.
    """
    n = n or int(rng.integers(5, 200))
    ys = np.sort(rng.uniform(0.0, rng.uniform(0.5, 3.0), n))
    ys[0] = 0.0
    ys = np.unique(ys)
    n = ys.size
    h = np.sort(rng.uniform(0.05, 5.0, n))[::-1]
    while True:
        walk = np.abs(np.cumsum(rng.normal(size=n - 1)))
        s = np.concatenate(([0.0], walk))
        g = np.empty(n)
        g[:-1] = np.diff(s) / (h[:-1] * np.diff(ys))
        g[-1] = rng.normal()
        if decreasing_lemma_check(h, g, ys) is not LemmaVerdict.PREMISE_FAILED:
            return h, g, ys


def premise_violating_fixtures() -> dict[str, tuple[np.ndarray, np.ndarray, np.ndarray]]:
    ys = np.linspace(0.0, 1.0, 101)
    up = 1.0 + ys
    return {
        # increasing h; the conclusion itself fails for this pair
        "increasing_h": (up, np.where(ys < 0.5, 1.0, -0.9), ys),
        "nonpositive_h": (np.where(ys < 0.5, 1.0, 0.0), np.ones_like(ys), ys),
        "negative_running_integral": (2.0 - ys, np.where(ys < 0.3, -1.0, 3.0), ys),
    }


def check_decreasing_lemma(cfg: VerifyConfig) -> CheckResult:
    rng = np.random.default_rng(cfg.seed)
    verdicts = [decreasing_lemma_check(*random_lemma_pair(rng)) for _ in range(cfg.lemma_trials)]
    holds = sum(v is LemmaVerdict.HOLDS for v in verdicts)
    bad = {k: decreasing_lemma_check(*f).value for k, f in premise_violating_fixtures().items()}
    slacks = [float(holds - len(verdicts))]
    slacks += [0.0 if v == LemmaVerdict.PREMISE_FAILED.value else -1.0 for v in bad.values()]
    return _result(12, "decreasing-function lemma", slacks,
                   {"random_pairs": len(verdicts), "holds": holds, "fixtures": bad})


SIMPLE_CHECKS: dict[int, Callable[[VerifyConfig], CheckResult]] = {
    1: check_constants,
    2: check_closed_forms,
    3: check_klein_minimum,
    4: check_s_beta,
    5: check_systole_closed_forms,
    6: check_normalization,
    7: check_pu_equality,
    11: check_sphere_isometry,
    12: check_decreasing_lemma,
}
SUITE_CHECKS = {8: check_projection_inequality, 9: check_defects, 10: check_variance}
ALL_CRITERIA = tuple(range(1, 13))


def run_checks(cfg: VerifyConfig = VerifyConfig(), criteria=ALL_CRITERIA,
               progress: Callable[[CheckResult], None] | None = None) -> list[CheckResult]:
    results = []
    suite = None
    for c in sorted(set(criteria)):
        if c in SIMPLE_CHECKS:
            res = SIMPLE_CHECKS[c](cfg)
        elif c in SUITE_CHECKS:
            if suite is None:
                suite = random_suite(cfg)
            res = SUITE_CHECKS[c](cfg, suite)
        else:
            raise ValueError(f"unknown criterion {c}")
        results.append(res)
        if progress:
            progress(res)
    return results


def check_user_profile(cfg: VerifyConfig, surface: SurfaceSpec, profile: Profile,
                       label: str = "profile") -> CheckResult:
    """Defect-report invariants for one supplied profile; failures name the invariant."""
    est = systole_estimate(surface, profile, cfg.systole_grid())
    r = defect_report(surface, profile, systole=est.value)
    chk = projection_inequality_check(surface, profile, systole=est.value,
                                      quad_tol=cfg.quad_tol, sys_tol=cfg.sys_tol)
    budget = r.budget(cfg.quad_tol, cfg.sys_tol)
    vf = r.variance_form
    slacks = {
        "lhs_defect <= rhs_defect": r.rhs_defect - r.lhs_defect + budget,
        "residual_norm_sq = area_opt var_h": 1e-6 * vf.area_opt
                                             - abs(r.residual_norm_sq - vf.area_opt * vf.var_h),
        "projection margin >= 0": chk.margin + chk.budget,
    }
    if r.bavard_gap is not None:
        slacks["bavard_gap >= 0"] = r.bavard_gap + cfg.quad_tol
    detail = {"report": r.to_dict(), "slacks": slacks,
              "violated": [k for k, v in slacks.items() if v < 0]}
    return _result(0, f"user profile {label}", list(slacks.values()), detail)
