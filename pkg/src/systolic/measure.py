"""Curve lengths, areas and L2 products of invariant conformal factors."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .geometry import CurvePolyline, Profile, SurfaceSpec, fold_y

CLOSED_FORM_TOL = 1e-10
SAMPLED_TOL = 1e-8


class Singularity(str, enum.Enum):
    NONE = "none"
    INVERSE_SQRT = "inverse_sqrt"


@dataclass(frozen=True)
class QuadratureConfig:
    abs_tol: float = CLOSED_FORM_TOL
    max_subdivisions: int = 50
    endpoint_singularity: Singularity = Singularity.NONE

    def __post_init__(self):
        if not self.abs_tol > 0:
            raise ValueError("abs_tol must be positive")
        if self.max_subdivisions < 1:
            raise ValueError("max_subdivisions must be at least 1")
        object.__setattr__(self, "endpoint_singularity", Singularity(self.endpoint_singularity))


class QuadratureError(RuntimeError):
    pass


def adaptive_simpson(f: Callable[[np.ndarray], np.ndarray], breakpoints,
                     abs_tol: float = CLOSED_FORM_TOL, max_subdivisions: int = 50) -> float:
    """Integrate a vectorized ``f`` over [breakpoints[0], breakpoints[-1]].

    Every panel between consecutive breakpoints is bisected until the
    Richardson estimate |S2 - S1| / 15 falls below its share of ``abs_tol``
    (proportional to panel width).  All panels of one level are evaluated in
    a single call to ``f``.
    """
    bp = np.asarray(breakpoints, dtype=float)
    a, b = bp[:-1], bp[1:]
    keep = b > a
    a, b = a[keep], b[keep]
    if a.size == 0:
        return 0.0
    total_width = float(b[-1] - a[0]) if bp[-1] > bp[0] else float(np.sum(b - a))
    density = abs_tol / total_width

    m = 0.5 * (a + b)
    vals = f(np.concatenate((a, m, b)))
    n = a.size
    fa, fm, fb = vals[:n], vals[n:2 * n], vals[2 * n:]
    whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb)

    result = 0.0
    for _ in range(max_subdivisions + 1):
        lm = 0.5 * (a + m)
        rm = 0.5 * (m + b)
        mids = f(np.concatenate((lm, rm)))
        k = a.size
        flm, frm = mids[:k], mids[k:]
        left = (m - a) / 6.0 * (fa + 4.0 * flm + fm)
        right = (b - m) / 6.0 * (fm + 4.0 * frm + fb)
        err = (left + right - whole) / 15.0
        done = np.abs(err) <= density * (b - a)
        result += float(np.sum((left + right + err)[done]))
        if done.all():
            return result
        nd = ~done
        # split unfinished panels into their two halves
        a = np.concatenate((a[nd], m[nd]))
        b = np.concatenate((m[nd], b[nd]))
        fa_new = np.concatenate((fa[nd], fm[nd]))
        fb_new = np.concatenate((fm[nd], fb[nd]))
        fm_new = np.concatenate((flm[nd], frm[nd]))
        whole = np.concatenate((left[nd], right[nd]))
        fa, fb, fm = fa_new, fb_new, fm_new
        m = 0.5 * (a + b)
    raise QuadratureError(f"adaptive Simpson did not converge in {max_subdivisions} subdivisions")


_GL_LOW = np.polynomial.legendre.leggauss(10)
_GL_HIGH = np.polynomial.legendre.leggauss(21)


def _gauss_panels(f, a, b, nodes, weights):
    half = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    pts = mid[:, None] + half[:, None] * nodes[None, :]
    vals = f(pts.ravel()).reshape(pts.shape)
    return half * (vals @ weights)


def adaptive_gauss(f, a: float, b: float, abs_tol: float, max_subdivisions: int = 50) -> float:
    """Adaptive Gauss-Legendre panels; ``f`` is never evaluated at panel ends."""
    lo = np.array([a], dtype=float)
    hi = np.array([b], dtype=float)
    density = abs_tol / (b - a)
    result = 0.0
    for _ in range(max_subdivisions + 1):
        coarse = _gauss_panels(f, lo, hi, *_GL_LOW)
        fine = _gauss_panels(f, lo, hi, *_GL_HIGH)
        done = np.abs(fine - coarse) <= density * (hi - lo)
        result += float(np.sum(fine[done]))
        if done.all():
            return result
        nd = ~done
        mid = 0.5 * (lo[nd] + hi[nd])
        lo, hi = np.concatenate((lo[nd], mid)), np.concatenate((mid, hi[nd]))
    raise QuadratureError(f"adaptive Gauss did not converge in {max_subdivisions} subdivisions")


def integrate(f, a: float, b: float, config: QuadratureConfig = QuadratureConfig(),
              breakpoints=()) -> float:
    """Integral of a vectorized ``f`` over [a, b].

    With ``Singularity.INVERSE_SQRT`` the integrand may blow up like an
    inverse square root at either end; the substitution
    t = (a + b)/2 + (b - a)/2 sin(u) makes it bounded, and the bounded
    integrand (a 0/0 limit at u = +-pi/2) is integrated with interior nodes.
    """
    if b <= a:
        return 0.0
    if config.endpoint_singularity is Singularity.INVERSE_SQRT:
        mid, half = 0.5 * (a + b), 0.5 * (b - a)

        def g(u):
            return f(mid + half * np.sin(u)) * half * np.cos(u)

        return adaptive_gauss(g, -0.5 * math.pi, 0.5 * math.pi, config.abs_tol,
                              config.max_subdivisions)
    inner = [p for p in breakpoints if a < p < b]
    return adaptive_simpson(f, [a, *sorted(inner), b], config.abs_tol, config.max_subdivisions)


def _default_tol(*profiles: Profile) -> float:
    return SAMPLED_TOL if any(p.is_sampled for p in profiles) else CLOSED_FORM_TOL


def _check_beta(surface: SurfaceSpec, *profiles: Profile) -> None:
    for p in profiles:
        if not math.isclose(p.beta, surface.beta, rel_tol=1e-12):
            raise ValueError(f"profile beta {p.beta} does not match surface beta {surface.beta}")


def profile_integral(f: Profile, h: Profile | None = None, upper: float | None = None,
                     tol: float | None = None) -> float:
    """Plain integral over [0, upper] of f (or f*h)."""
    upper = f.beta if upper is None else upper
    profiles = (f,) if h is None else (f, h)
    bps = np.union1d(*(p.breakpoints() for p in profiles)) if h is not None else f.breakpoints()
    bps = np.union1d(bps[bps < upper], [upper])
    integrand = f if h is None else (lambda y: f(y) * h(y))
    return adaptive_simpson(integrand, bps, tol or _default_tol(*profiles))


def l2_inner(surface: SurfaceSpec, f: Profile, h: Profile, tol: float | None = None) -> float:
    """L2 product on the surface of two invariant factors."""
    _check_beta(surface, f, h)
    return surface.measure_factor * profile_integral(f, h, tol=tol)


def area(surface: SurfaceSpec, profile: Profile, tol: float | None = None) -> float:
    return l2_inner(surface, profile, profile, tol=tol)


def _segment_breaks(y0: float, y1: float, knots_unfolded: Callable[[float, float], np.ndarray]):
    lo, hi = min(y0, y1), max(y0, y1)
    ks = knots_unfolded(lo, hi)
    if ks.size == 0 or y1 == y0:
        return np.empty(0)
    t = (ks - y0) / (y1 - y0)
    return t[(t > 0) & (t < 1)]


def _unfolded_knots(beta: float, knots: np.ndarray):
    # kinks of the folded profile: +-knot + 2 beta j, and the fold lines beta j
    base = np.concatenate((knots, -knots, [0.0, beta]))

    def within(lo, hi):
        j0 = math.floor(lo / (2 * beta)) - 1
        j1 = math.ceil(hi / (2 * beta)) + 1
        shifts = 2 * beta * np.arange(j0, j1 + 1)
        allk = (base[None, :] + shifts[:, None]).ravel()
        return allk[(allk > lo) & (allk < hi)]

    return within


def curve_length(surface: SurfaceSpec, profile: Profile, curve: CurvePolyline,
                 tol: float | None = None) -> float:
    """Length of a lifted polyline in the metric profile^2 (dx^2 + dy^2).

    The integrand profile(y(s)) is taken in Euclidean arc length s, which
    keeps it continuous across vertices.  Segments are cut where y crosses a
    profile knot or a fold line, so no Simpson panel straddles a kink.
    """
    _check_beta(surface, profile)
    v = curve.vertices
    d = np.diff(v, axis=0)
    seg_len = np.hypot(d[:, 0], d[:, 1])
    if not np.all(seg_len > 0):
        raise ValueError("degenerate curve")
    cum = np.concatenate(([0.0], np.cumsum(seg_len)))
    knots_in = _unfolded_knots(surface.beta, np.asarray(profile.knots, dtype=float))
    cuts = [cum]
    for i, (p0, p1) in enumerate(zip(v[:-1, 1], v[1:, 1])):
        t = _segment_breaks(p0, p1, knots_in)
        if t.size:
            cuts.append(cum[i] + t * seg_len[i])
    params = np.unique(np.concatenate(cuts))
    nseg = len(d)
    dy = d[:, 1] / seg_len

    def integrand(s):
        i = np.clip(np.searchsorted(cum, s, side="right") - 1, 0, nseg - 1)
        y = v[i, 1] + (s - cum[i]) * dy[i]
        return profile(fold_y(surface.beta, y))

    return adaptive_simpson(integrand, params, tol or _default_tol(profile))
