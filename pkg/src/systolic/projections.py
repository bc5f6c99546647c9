"""L2 projections of conformal factors and the defect inequalities built on them."""

from __future__ import annotations

import enum
import math
from dataclasses import asdict, dataclass
from typing import Callable

import numpy as np

from .geometry import Profile, SurfaceSpec
from .measure import (CLOSED_FORM_TOL, QuadratureConfig, Singularity, _default_tol, adaptive_simpson,
                      area, curve_length, integrate, l2_inner, profile_integral)
from .optimal import (ALPHA_KLEIN, BETA1, optimal_profile, optimal_summary, phi0, phi0_sq_gap,
                      pu_curve)
from .systole import GridConfig, systole_estimate

QUADRATURE_TOL = 1e-8
SYSTOLE_TOL = 0.02
X_SAMPLES = 256


class ProjectionError(ValueError):
    pass


# --- Haar average -------------------------------------------------------------


def _x_nodes(nx: int) -> np.ndarray:
    # the periodic trapezoid rule is spectrally accurate for smooth periodic data
    return np.arange(nx) * (math.pi / nx)


def _average_callable(surface: SurfaceSpec, phi2d: Callable, nx: int) -> Profile:
    beta = surface.beta
    xs = _x_nodes(nx)
    probe_y = np.linspace(-surface.half_height, surface.half_height, 65)
    probe = np.asarray(phi2d(xs[:, None], probe_y[None, :]), dtype=float)
    if not np.all(probe > 0):
        raise ProjectionError("conformal factor must be positive")

    def xmean(y):
        return np.asarray(phi2d(xs[:, None], y[None, :]), dtype=float).mean(axis=0)

    def averaged(y):
        y = np.asarray(y, dtype=float)
        flat = y.ravel()
        v = 0.5 * (xmean(flat) + xmean(-flat))
        if surface.is_klein:
            v = 0.5 * (v + 0.5 * (xmean(flat + 2 * beta) + xmean(2 * beta - flat)))
        return v.reshape(y.shape)

    return Profile.expression(beta, averaged, "isometry_average")


def _average_grid(surface: SurfaceSpec, values: np.ndarray) -> Profile:
    """Grid input: rows are x = i pi / nx, columns y = linspace(-H, H, ny), H the half height."""
    values = np.asarray(values, dtype=float)
    if values.ndim != 2:
        raise ProjectionError("grid input must be a 2-D array indexed [x, y]")
    if not np.all(values > 0):
        raise ProjectionError("conformal factor must be positive")
    ny = values.shape[1]
    quarter = 4 if surface.is_klein else 2
    if (ny - 1) % quarter:
        raise ProjectionError(f"need ny - 1 divisible by {quarter} so that y = 0, beta are nodes")
    v = values.mean(axis=0)
    v = 0.5 * (v + v[::-1])
    if surface.is_klein:
        # the shift by 2 beta is half the 4 beta period; node ny-1 duplicates node 0
        period = v[:-1]
        shifted = np.roll(period, -(ny - 1) // 2)
        v = 0.5 * (period + shifted)
        v = np.append(v, v[0])
    center = (ny - 1) // 2
    stop = center + (ny - 1) // quarter
    ys = np.linspace(0.0, surface.beta, stop - center + 1)
    return Profile.sampled(ys, v[center:stop + 1])


def isometry_average(surface: SurfaceSpec, phi2d, nx: int = X_SAMPLES) -> Profile:
    """Average of a deck-invariant factor over the isometry group.

    ``phi2d`` is either a broadcasting callable of (x, y) or an array sampled
    at x = i pi / nx (rows) and y = linspace(-H, H, ny) (columns), where H is
    beta on the Möbius strip and 2 beta on the Klein bottle.  The average is
    taken in x over [0, pi), then over y -> -y, then (Klein) over the shift
    y -> y + 2 beta.
    """
    if callable(phi2d):
        return _average_callable(surface, phi2d, nx)
    return _average_grid(surface, phi2d)


def surface_area_2d(surface: SurfaceSpec, phi2d: Callable, nx: int = X_SAMPLES,
                    tol: float = CLOSED_FORM_TOL) -> float:
    """Area of phi2d^2 (dx^2 + dy^2) over the fundamental domain [0, pi) x [-H, H]."""
    xs = _x_nodes(nx)
    h = surface.half_height

    def row(y):
        return math.pi * (np.asarray(phi2d(xs[:, None], y[None, :]), dtype=float) ** 2).mean(axis=0)

    return adaptive_simpson(row, np.linspace(-h, h, 9), tol)


# --- rank-one projection ------------------------------------------------------


def rank1_project(surface: SurfaceSpec, phi: Profile, target: Profile,
                  tol: float | None = None) -> tuple[float, Profile]:
    """Orthogonal projection of phi onto the line spanned by target."""
    if target.minimum() <= 0:
        raise ProjectionError("target profile must be positive")
    c = l2_inner(surface, phi, target, tol) / l2_inner(surface, target, target, tol)
    return c, target.scaled(c)


def _residual_sq(surface: SurfaceSpec, phi: Profile, target: Profile, c: float,
                 tol: float | None = None) -> float:
    bps = np.union1d(phi.breakpoints(), target.breakpoints())
    val = adaptive_simpson(lambda y: (phi(y) - c * target(y)) ** 2, bps,
                           tol or _default_tol(phi, target))
    return surface.measure_factor * val


# --- Pu's equality ------------------------------------------------------------


def pu_weight(beta: float, tau):
    """phi0(tau)^2 tanh(tau) / sqrt(phi0(tau)^2 - phi0(beta)^2); integrates to tanh(beta)."""
    tau = np.asarray(tau, dtype=float)
    return phi0(tau) ** 2 * np.tanh(tau) / np.sqrt(phi0_sq_gap(tau, beta))


def pu_curve_lengths(beta: float, phi: Profile, taus, n_vertices: int = 1025,
                     tol: float | None = None) -> np.ndarray:
    surface = SurfaceSpec.mobius(beta)
    return np.array([curve_length(surface, phi, pu_curve(beta, float(t), n_vertices), tol)
                     for t in np.atleast_1d(taus)])


def pu_equality_sides(beta: float, phi: Profile, tol: float = 1e-7,
                      n_vertices: int = 1025) -> tuple[float, float]:
    """Both sides of the averaged-length identity over the curves gamma_tau."""
    if not beta > 0:
        raise ProjectionError("beta must be positive")
    if not math.isclose(phi.beta, beta, rel_tol=1e-12):
        raise ProjectionError("profile beta does not match")
    lhs = profile_integral(phi, Profile.expression(beta, phi0, "phi0"))
    curve_tol = 1e-9 if not phi.is_sampled else 1e-8

    def integrand(tau):
        return pu_curve_lengths(beta, phi, tau, n_vertices, curve_tol) * pu_weight(beta, tau)

    cfg = QuadratureConfig(abs_tol=tol, endpoint_singularity=Singularity.INVERSE_SQRT)
    rhs = integrate(integrand, 0.0, beta, cfg) / math.pi
    return lhs, rhs


def pu_equality_residual(beta: float, phi: Profile, tol: float = 1e-7) -> float:
    lhs, rhs = pu_equality_sides(beta, phi, tol)
    return abs(lhs - rhs)


# --- projection inequality ----------------------------------------------------


@dataclass(frozen=True)
class ProjectionCheck:
    margin: float
    budget: float
    systole: float
    scale: float

    @property
    def passed(self) -> bool:
        return self.margin >= -self.budget


def projection_inequality_check(surface: SurfaceSpec, phi: Profile,
                                grid: GridConfig = GridConfig(),
                                systole: float | None = None,
                                quad_tol: float = QUADRATURE_TOL,
                                sys_tol: float = SYSTOLE_TOL) -> ProjectionCheck:
    """int phi phi_opt - int phi_opt^2 after rescaling phi to systole pi.

    The estimated systole may exceed the true one by the relative amount
    ``sys_tol``; after rescaling this lowers the margin by at most
    sys_tol * int phi phi_opt, which is the reported budget (plus quadrature).
    ``systole`` may be passed to reuse an estimate of the unscaled profile.
    """
    if systole is None:
        systole = systole_estimate(surface, phi, grid).value
    scale = math.pi / systole
    target = optimal_profile(surface)
    cross = scale * profile_integral(phi, target)
    margin = cross - profile_integral(target, target)
    return ProjectionCheck(margin, quad_tol + sys_tol * abs(cross), systole, scale)


# --- decreasing-function lemma ------------------------------------------------


class LemmaVerdict(str, enum.Enum):
    HOLDS = "holds"
    VIOLATED = "violated"
    PREMISE_FAILED = "premise_failed"


def decreasing_lemma_check(h, g, ys=None, tol: float = 1e-12) -> LemmaVerdict:
    """Grid version of: int_0^z h g >= 0 for all z implies int_0^z h g >= h(z) int_0^z g.

    Integrals are cell sums with left endpoint values, so on a grid
    z_0 < ... < z_n the implication holds exactly (Abel summation), and a
    VIOLATED verdict would indicate a genuine failure rather than quadrature
    error.  ``tol`` is relative to the scale sum |h g| dz.
    """
    h = np.asarray(h, dtype=float)
    g = np.asarray(g, dtype=float)
    if h.ndim != 1 or h.shape != g.shape or h.size < 2:
        raise ValueError("h and g must be 1-D arrays of equal length >= 2")
    ys = np.linspace(0.0, 1.0, h.size) if ys is None else np.asarray(ys, dtype=float)
    if ys.shape != h.shape or np.any(np.diff(ys) <= 0):
        raise ValueError("ys must be strictly increasing and match h")
    dz = np.diff(ys)
    hg = np.concatenate(([0.0], np.cumsum(h[:-1] * g[:-1] * dz)))
    gs = np.concatenate(([0.0], np.cumsum(g[:-1] * dz)))
    slack = tol * max(1.0, float(np.sum(np.abs(h[:-1] * g[:-1]) * dz)))
    if np.any(h <= 0) or np.any(np.diff(h) > 0) or np.any(hg < -slack):
        return LemmaVerdict.PREMISE_FAILED
    if np.all(hg >= h * gs - slack):
        return LemmaVerdict.HOLDS
    return LemmaVerdict.VIOLATED


# --- defect reports -----------------------------------------------------------


@dataclass(frozen=True)
class VarianceForm:
    expected_h: float
    var_h: float
    area_opt: float


@dataclass(frozen=True)
class DefectReport:
    surface: str
    beta: float
    area_g: float
    sys_g: float
    alpha_g: float
    alpha_conformal_opt: float
    residual_norm_sq: float
    lhs_defect: float
    rhs_defect: float
    variance_form: VarianceForm
    bavard_gap: float | None = None

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> DefectReport:
        d = dict(d)
        d["variance_form"] = VarianceForm(**d["variance_form"])
        return cls(**d)

    def budget(self, quad_tol: float = QUADRATURE_TOL, sys_tol: float = SYSTOLE_TOL) -> float:
        """Slack for an estimated systole that may be too large by the factor 1 + sys_tol."""
        return quad_tol + 2.0 * sys_tol * self.alpha_g


def variance_form(surface: SurfaceSpec, phi: Profile, target: Profile,
                  tol: float | None = None) -> VarianceForm:
    """Mean and variance of phi / target under the probability density target^2 / area."""
    tol = tol or _default_tol(phi, target)
    area_opt = area(surface, target, tol)
    bps = np.union1d(phi.breakpoints(), target.breakpoints())
    w = surface.measure_factor / area_opt

    def h(y):
        return phi(y) / target(y)

    m1 = w * adaptive_simpson(lambda y: h(y) * target(y) ** 2, bps, tol)
    m2 = w * adaptive_simpson(lambda y: h(y) ** 2 * target(y) ** 2, bps, tol)
    return VarianceForm(m1, m2 - m1 * m1, area_opt)


def defect_report(surface: SurfaceSpec, phi: Profile, grid: GridConfig = GridConfig(),
                  systole: float | None = None, tol: float | None = None) -> DefectReport:
    """Both sides of the systolic inequality with remainder for one profile."""
    if systole is None:
        systole = systole_estimate(surface, phi, grid).value
    target = optimal_profile(surface)
    area_g = area(surface, phi, tol)
    alpha_g = area_g / systole ** 2
    alpha_opt = optimal_summary(surface).alpha_sys
    c, _ = rank1_project(surface, phi, target, tol)
    residual = _residual_sq(surface, phi, target, c, tol)
    return DefectReport(
        surface=surface.kind.value,
        beta=surface.beta,
        area_g=area_g,
        sys_g=systole,
        alpha_g=alpha_g,
        alpha_conformal_opt=alpha_opt,
        residual_norm_sq=residual,
        lhs_defect=residual / systole ** 2,
        rhs_defect=alpha_g - alpha_opt,
        variance_form=variance_form(surface, phi, target, tol),
        bavard_gap=alpha_opt - ALPHA_KLEIN if surface.is_klein else None,
    )


# --- random test profiles -----------------------------------------------------


PROFILE_FAMILIES = ("cosine", "bump", "walk")


def random_profile(surface: SurfaceSpec, rng: np.random.Generator,
                   family: str | None = None) -> Profile:
    """A random positive invariant profile near the optimal one.

    Families: a multiplicative cosine series in pi y / beta (smooth under the
    even, 2 beta periodic extension), a Gaussian bump added to the optimal
    profile, and a sampled log-random walk.
    """
    beta = surface.beta
    base = optimal_profile(surface)
    family = family or PROFILE_FAMILIES[int(rng.integers(len(PROFILE_FAMILIES)))]
    if family == "cosine":
        n = int(rng.integers(1, 6))
        amp = rng.uniform(0.02, 0.4)
        coef = amp * rng.normal(size=n) / np.arange(1, n + 1)

        def f(y, coef=coef):
            y = np.asarray(y, dtype=float)
            s = sum(c * np.cos((j + 1) * math.pi * y / beta) for j, c in enumerate(coef))
            return base(y) * np.exp(s)

        return Profile.expression(beta, f, "random_cosine", knots=base.knots)
    if family == "bump":
        center = rng.uniform(0.0, beta)
        width = rng.uniform(0.05, 0.5) * beta
        height = rng.uniform(-0.4, 0.6)

        def f(y, center=center, width=width, height=height):
            y = np.asarray(y, dtype=float)
            bump = np.exp(-0.5 * ((y - center) / width) ** 2)
            return base(y) * (1.0 + height * bump)

        return Profile.expression(beta, f, "random_bump", knots=base.knots)
    if family == "walk":
        n = 65
        ys = np.linspace(0.0, beta, n)
        steps = rng.normal(scale=rng.uniform(0.01, 0.08), size=n)
        logs = np.cumsum(steps) - steps[0]
        return Profile.sampled(ys, base(ys) * np.exp(logs - logs.mean()))
    raise ValueError(f"unknown profile family {family!r}")


def bump_above_beta1(beta: float, height: float = 0.3) -> Profile:
    """Thick-case optimal profile plus a smooth bump supported in (beta1, beta)."""
    if beta <= BETA1:
        raise ProjectionError("need beta > beta1")
    base = optimal_profile(SurfaceSpec.klein(beta))
    a, b = BETA1, beta

    def f(y):
        y = np.asarray(y, dtype=float)
        t = np.clip((y - a) / (b - a), 0.0, 1.0)
        return base(y) + height * np.sin(math.pi * t) ** 2

    return Profile.expression(beta, f, "thick_bump", knots=base.knots)
