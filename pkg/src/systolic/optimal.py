"""Closed-form optimal conformal factors and their systolic data."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .geometry import CurvePolyline, DeckWord, Profile, SurfaceKind, SurfaceSpec

BETA0 = math.log(1.0 + math.sqrt(2.0))
BETA1 = math.log(2.0 + math.sqrt(3.0))
QUARTER_PI = math.pi / 4.0
ALPHA_KLEIN = 2.0 * math.sqrt(2.0) / math.pi
ALPHA_TORUS = math.sqrt(3.0) / 2.0
ALPHA_RP2 = 2.0 / math.pi

S_BETA_TOL = 1e-12


class DomainError(ValueError):
    pass


def constants() -> tuple[float, float]:
    return BETA0, BETA1


def phi0(y):
    """Pu's factor 2 e^y / (1 + e^{2y}) = sech(y)."""
    y = np.asarray(y, dtype=float)
    out = 1.0 / np.cosh(y)
    return float(out) if out.ndim == 0 else out


def phi0_integral(y):
    """Antiderivative of phi0 vanishing at 0."""
    return 2.0 * np.arctan(np.exp(y)) - 0.5 * math.pi


def phi0_sq_gap(s, tau):
    """phi0(s)^2 - phi0(tau)^2 without cancellation for s close to tau."""
    s = np.asarray(s, dtype=float)
    tau = np.asarray(tau, dtype=float)
    # sinh(tau)^2 - sinh(s)^2 = sinh(tau - s) sinh(tau + s)
    num = np.sinh(np.abs(tau) - np.abs(s)) * np.sinh(np.abs(tau) + np.abs(s))
    return num / (np.cosh(s) ** 2 * np.cosh(tau) ** 2)


def mobius_optimal(beta: float) -> Profile:
    """max(phi0, 1/2) on [0, beta]."""
    beta = float(beta)
    knots = (BETA1,) if beta > BETA1 else ()
    return Profile(beta, "mobius_optimal", lambda y: np.maximum(1.0 / np.cosh(y), 0.5),
                   knots=knots, params={"beta": beta}, decreasing=True)


def _s_equation(s, beta):
    return phi0_integral(s) + (beta - s) * phi0(s)


def solve_s_beta(beta: float, closed: bool = False) -> float:
    """The knot s in (0, beta) with int_0^s phi0 + (beta - s) phi0(s) = pi/4.

    With ``closed`` the endpoints beta = pi/4 (s = 0) and beta = beta0
    (s = beta) are admitted, which is what branch-continuity checks need.
    """
    beta = float(beta)
    inside = QUARTER_PI <= beta <= BETA0 if closed else QUARTER_PI < beta < BETA0
    if not inside:
        raise DomainError(f"s_beta is defined for pi/4 < beta < beta0, got {beta}")
    lo, hi = 0.0, beta
    # the defining function is strictly decreasing in s
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if _s_equation(mid, beta) > QUARTER_PI:
            lo = mid
        else:
            hi = mid
    s = lo if abs(_s_equation(lo, beta) - QUARTER_PI) <= abs(_s_equation(hi, beta) - QUARTER_PI) else hi
    if abs(_s_equation(s, beta) - QUARTER_PI) > S_BETA_TOL:
        raise ArithmeticError(f"s_beta bisection stalled at residual "
                              f"{_s_equation(s, beta) - QUARTER_PI:.3e}")
    return s


class KleinCase(str, enum.Enum):
    THIN = "thin"
    ROUND_FLAT_THIN = "round_flat_thin"
    ROUND = "round"
    ROUND_FLAT_THICK = "round_flat_thick"


class MobiusCase(str, enum.Enum):
    ROUND = "round"
    THICK = "thick"


def klein_case(beta: float) -> KleinCase:
    if beta <= QUARTER_PI:
        return KleinCase.THIN
    if beta < BETA0:
        return KleinCase.ROUND_FLAT_THIN
    if beta <= BETA1:
        return KleinCase.ROUND
    return KleinCase.ROUND_FLAT_THICK


def mobius_case(beta: float) -> MobiusCase:
    return MobiusCase.ROUND if beta <= BETA1 else MobiusCase.THICK


def klein_optimal(beta: float) -> Profile:
    beta = float(beta)
    case = klein_case(beta)
    params = {"beta": beta, "case": case.value}
    if case is KleinCase.THIN:
        c = math.pi / (4.0 * beta)
        return Profile(beta, "klein_optimal", lambda y: np.full_like(y, c),
                       params=params, decreasing=True)
    if case is KleinCase.ROUND_FLAT_THIN:
        s = solve_s_beta(beta)
        params["s_beta"] = s
        return Profile(beta, "klein_optimal",
                       lambda y: 1.0 / np.cosh(np.minimum(y, s)),
                       knots=(s,), params=params, decreasing=True)
    if case is KleinCase.ROUND:
        return Profile(beta, "klein_optimal", lambda y: 1.0 / np.cosh(y),
                       params=params, decreasing=True)
    return Profile(beta, "klein_optimal", lambda y: np.maximum(1.0 / np.cosh(y), 0.5),
                   knots=(BETA1,), params=params, decreasing=True)


def optimal_profile(surface: SurfaceSpec) -> Profile:
    if surface.is_klein:
        return klein_optimal(surface.beta)
    return mobius_optimal(surface.beta)


@dataclass(frozen=True)
class OptimalSummary:
    beta: float
    kind: SurfaceKind
    case_tag: str
    s_beta: float | None
    sys: float
    area: float
    alpha_sys: float


def optimal_summary(surface: SurfaceSpec | str, beta: float | None = None) -> OptimalSummary:
    """Closed-form systole, area and systolic area of the optimal metric."""
    if not isinstance(surface, SurfaceSpec):
        surface = SurfaceSpec(SurfaceKind(surface), float(beta))
    beta = surface.beta
    pi = math.pi
    s = None
    if surface.is_klein:
        case = klein_case(beta)
        if case is KleinCase.THIN:
            area = pi ** 3 / (4.0 * beta)
        elif case is KleinCase.ROUND_FLAT_THIN:
            s = solve_s_beta(beta)
            area = 4 * pi * math.tanh(s) + 4 * pi * (beta - s) * phi0(s) ** 2
        elif case is KleinCase.ROUND:
            area = 4 * pi * math.tanh(beta)
        else:
            area = 2 * pi * math.sqrt(3.0) + pi * (beta - BETA1)
    else:
        case = mobius_case(beta)
        if case is MobiusCase.ROUND:
            area = 2 * pi * math.tanh(beta)
        else:
            area = pi * math.sqrt(3.0) + 0.5 * pi * (beta - BETA1)
    return OptimalSummary(beta, surface.kind, case.value, s, pi, area, area / pi ** 2)


def alpha_sys_closed_form(kind: SurfaceKind | str, beta: float) -> float:
    """The piecewise systolic-area formula, written branch by branch."""
    kind = SurfaceKind(kind)
    pi = math.pi
    if kind is SurfaceKind.MOBIUS:
        if beta <= BETA1:
            return 2.0 / pi * math.tanh(beta)
        return math.sqrt(3.0) / pi + (beta - BETA1) / (2 * pi)
    if beta <= QUARTER_PI:
        return pi / (4 * beta)
    if beta < BETA0:
        s = solve_s_beta(beta)
        return 4 / pi * math.tanh(s) + 4 / pi * (beta - s) * phi0(s) ** 2
    if beta <= BETA1:
        return 4 / pi * math.tanh(beta)
    return 2 * math.sqrt(3.0) / pi + (beta - BETA1) / pi


def klein_branch_alpha(case: KleinCase | str, beta: float) -> float:
    """One branch of the Klein systolic-area formula, evaluated even off its range."""
    case = KleinCase(case)
    pi = math.pi
    if case is KleinCase.THIN:
        return pi / (4 * beta)
    if case is KleinCase.ROUND_FLAT_THIN:
        s = solve_s_beta(beta, closed=True)
        return 4 / pi * math.tanh(s) + 4 / pi * (beta - s) * phi0(s) ** 2
    if case is KleinCase.ROUND:
        return 4 / pi * math.tanh(beta)
    return 2 * math.sqrt(3.0) / pi + (beta - BETA1) / pi


def _pu_x_offsets(tau: float, u: np.ndarray, panel_nodes: int = 8) -> np.ndarray:
    """int_0^{tau sin u} phi0(tau) / sqrt(phi0(s)^2 - phi0(tau)^2) ds for sorted u.

    Uses s = tau sin(u); the transformed integrand is bounded, and each gap
    between consecutive u values is integrated by Gauss-Legendre.
    """
    nodes, weights = np.polynomial.legendre.leggauss(panel_nodes)
    ptau = phi0(tau)

    def g(w):
        s = tau * np.sin(w)
        return ptau * tau * np.cos(w) / np.sqrt(phi0_sq_gap(s, tau))

    grid = np.union1d(u, [0.0])
    lo, hi = grid[:-1], grid[1:]
    half, mid = 0.5 * (hi - lo), 0.5 * (hi + lo)
    vals = g(mid[:, None] + half[:, None] * nodes[None, :])
    pieces = half * (vals @ weights)
    cum = np.concatenate(([0.0], np.cumsum(pieces)))
    cum -= cum[np.searchsorted(grid, 0.0)]
    return cum[np.searchsorted(grid, u)]


def pu_curve(beta: float, tau: float, n_vertices: int = 1025) -> CurvePolyline:
    """Pu's curve at parameter tau as a lifted Möbius polyline with word (1, 0).

    For tau > 0 the vertices are t = tau sin(u) for u uniform in
    [-pi/2, pi/2], with x(t) = pi/2 + int_0^t phi0(tau)/sqrt(phi0^2(s) - phi0^2(tau)) ds
    and y(t) = -t.
    """
    if not 0 <= tau < beta:
        raise DomainError(f"need 0 <= tau < beta, got tau={tau}, beta={beta}")
    if n_vertices < 16:
        raise ValueError("n_vertices must be at least 16")
    surface = SurfaceSpec.mobius(beta)
    if tau == 0:
        xs = np.linspace(0.0, math.pi, n_vertices)
        return CurvePolyline(np.column_stack((xs, np.zeros_like(xs))), DeckWord(1, 0), surface)
    u = np.linspace(-0.5 * math.pi, 0.5 * math.pi, n_vertices)
    t = tau * np.sin(u)
    t[0], t[-1] = -tau, tau
    x = 0.5 * math.pi + _pu_x_offsets(tau, u)
    return CurvePolyline(np.column_stack((x, -t)), DeckWord(1, 0), surface)


def sphere_chart(beta: float, point) -> np.ndarray:
    """Round-sphere image of a point of [-pi/2, pi/2] x [-beta, beta].

    Latitude is arcsin(tanh y); the pullback of the round metric is
    phi0(y)^2 (dx^2 + dy^2).
    """
    p = np.asarray(point, dtype=float)
    x, y = p[..., 0], p[..., 1]
    eps = 1e-12
    if np.any(np.abs(x) > 0.5 * math.pi + eps) or np.any(np.abs(y) > beta + eps):
        raise DomainError("point outside [-pi/2, pi/2] x [-beta, beta]")
    lat = np.arcsin(np.tanh(y))
    return np.stack((np.cos(x) * np.cos(lat), np.sin(x) * np.cos(lat), np.sin(lat)), axis=-1)
