"""Quotient surfaces, deck words, invariant conformal profiles and lifted curves.

Coordinates are those of the universal cover (the plane).  The Möbius strip
is the strip |y| <= beta modulo the glide A(x, y) = (x + pi, -y); the Klein
bottle is the plane modulo A and B(x, y) = (x, y + 4 beta).  Fundamental
domains are [0, pi] x [-beta, beta] and [0, pi] x [-2 beta, 2 beta].
"""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

CLOSURE_TOL = 1e-9
DEFAULT_SAMPLES = 2048


class InvalidWordError(ValueError):
    pass


class UnsupportedSurfaceError(ValueError):
    pass


class ProfileFormatError(ValueError):
    """Raised for malformed profile CSV data; carries the offending row."""

    def __init__(self, message: str, row: int | None = None):
        self.row = row
        if row is not None:
            message = f"row {row}: {message}"
        super().__init__(message)


class SurfaceKind(str, enum.Enum):
    MOBIUS = "mobius"
    KLEIN = "klein"


@dataclass(frozen=True)
class SurfaceSpec:
    kind: SurfaceKind
    beta: float

    def __post_init__(self):
        object.__setattr__(self, "kind", SurfaceKind(self.kind))
        if not (self.beta > 0 and math.isfinite(self.beta)):
            raise ValueError(f"beta must be positive, got {self.beta}")

    @classmethod
    def mobius(cls, beta: float) -> SurfaceSpec:
        return cls(SurfaceKind.MOBIUS, float(beta))

    @classmethod
    def klein(cls, beta: float) -> SurfaceSpec:
        return cls(SurfaceKind.KLEIN, float(beta))

    @property
    def is_klein(self) -> bool:
        return self.kind is SurfaceKind.KLEIN

    @property
    def half_height(self) -> float:
        """Half the y-extent of the fundamental domain."""
        return 2 * self.beta if self.is_klein else self.beta

    @property
    def flat_area(self) -> float:
        return 2 * math.pi * self.half_height

    @property
    def measure_factor(self) -> float:
        """Weight turning an integral over [0, beta] into one over the surface."""
        return 4 * math.pi if self.is_klein else 2 * math.pi


@dataclass(frozen=True)
class DeckWord:
    """The deck transformation A^k composed with B^m."""

    k: int
    m: int = 0

    def __post_init__(self):
        object.__setattr__(self, "k", int(self.k))
        object.__setattr__(self, "m", int(self.m))

    @property
    def is_trivial(self) -> bool:
        return self.k == 0 and self.m == 0

    def then(self, other: DeckWord) -> DeckWord:
        """The word acting as ``other`` after ``self``."""
        sign = -1 if other.k % 2 else 1
        return DeckWord(self.k + other.k, other.m + sign * self.m)

    def inverse(self) -> DeckWord:
        sign = -1 if self.k % 2 else 1
        return DeckWord(-self.k, -sign * self.m)

    def __str__(self) -> str:
        return f"({self.k},{self.m})"


def _check_word(surface: SurfaceSpec, word: DeckWord) -> None:
    if word.m != 0 and not surface.is_klein:
        raise InvalidWordError(f"word {word} has a B component on a Möbius strip")


def deck_apply(surface: SurfaceSpec, word: DeckWord, point) -> np.ndarray:
    """Image of plane point(s) under the deck transformation ``word``.

    ``point`` may be a single (x, y) pair or an (N, 2) array.
    """
    _check_word(surface, word)
    p = np.asarray(point, dtype=float)
    sign = -1.0 if word.k % 2 else 1.0
    out = np.empty_like(p)
    out[..., 0] = p[..., 0] + word.k * math.pi
    out[..., 1] = sign * p[..., 1] + 4.0 * surface.beta * word.m
    return out


def fold_y(beta: float, y):
    """Reduce y to [0, beta] using evenness and 2 beta periodicity.

    On the Möbius strip this is |y| for |y| <= beta; points outside the strip
    receive the mirror extension so evaluation is total on the plane.
    """
    t = np.mod(np.asarray(y, dtype=float), 2.0 * beta)
    return np.minimum(t, 2.0 * beta - t)


@dataclass(frozen=True, eq=False)
class Profile:
    """A positive conformal factor on [0, beta], constant in x.

    Closed forms carry a ``tag``; sampled profiles carry ``ys``/``values`` and
    are interpolated piecewise linearly.  ``knots`` lists interior points of
    (0, beta) where the profile may fail to be smooth, so quadrature never
    straddles them.  ``scale`` multiplies every value.
    """

    beta: float
    tag: str
    func: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    knots: tuple[float, ...] = ()
    scale: float = 1.0
    params: dict = field(default_factory=dict)
    ys: np.ndarray | None = field(default=None, repr=False)
    values: np.ndarray | None = field(default=None, repr=False)
    decreasing: bool = False

    @classmethod
    def flat(cls, beta: float, c: float = 1.0) -> Profile:
        if c <= 0:
            raise ValueError("flat profile constant must be positive")
        return cls(float(beta), "flat", lambda y: np.ones_like(y), scale=float(c),
                   params={"c": float(c)}, decreasing=True)

    @classmethod
    def expression(cls, beta: float, func: Callable, name: str,
                   knots=(), decreasing: bool = False) -> Profile:
        """A named vectorized expression of y on [0, beta]."""
        kn = tuple(sorted(float(k) for k in knots if 0 < k < beta))
        return cls(float(beta), "expression", func, knots=kn,
                   params={"name": name}, decreasing=decreasing)

    @classmethod
    def sampled(cls, ys, values) -> Profile:
        ys = np.array(ys, dtype=float)
        values = np.array(values, dtype=float)
        if ys.ndim != 1 or ys.shape != values.shape or ys.size < 2:
            raise ProfileFormatError("need matching 1-D arrays with at least 2 samples")
        if ys[0] != 0.0:
            raise ProfileFormatError("sample grid must start at y = 0")
        bad = np.nonzero(np.diff(ys) <= 0)[0]
        if bad.size:
            raise ProfileFormatError("y values must be strictly increasing", row=int(bad[0]) + 2)
        bad = np.nonzero(~(values > 0) | ~np.isfinite(values))[0]
        if bad.size:
            raise ProfileFormatError("phi values must be positive and finite", row=int(bad[0]) + 1)
        ys.setflags(write=False)
        values.setflags(write=False)
        beta = float(ys[-1])

        def interp(y, _ys=ys, _v=values):
            return np.interp(y, _ys, _v)

        return cls(beta, "sampled", interp, knots=tuple(ys[1:-1]), ys=ys, values=values)

    @classmethod
    def from_function(cls, beta: float, func: Callable, n: int = DEFAULT_SAMPLES) -> Profile:
        """Sample ``func`` on a uniform grid of ``n`` points in [0, beta]."""
        ys = np.linspace(0.0, beta, n)
        return cls.sampled(ys, func(ys))

    @property
    def is_sampled(self) -> bool:
        return self.ys is not None

    @property
    def name(self) -> str:
        return self.params.get("name", self.tag)

    def __call__(self, y) -> np.ndarray:
        """Values at y in [0, beta] (clipped); vectorized."""
        y = np.clip(np.asarray(y, dtype=float), 0.0, self.beta)
        return self.scale * np.asarray(self.func(y), dtype=float)

    def scaled(self, c: float) -> Profile:
        if c <= 0:
            raise ValueError("scale factor must be positive")
        return Profile(self.beta, self.tag, self.func, self.knots, self.scale * c,
                       dict(self.params), self.ys, self.values, self.decreasing)

    def breakpoints(self) -> np.ndarray:
        return np.concatenate(([0.0], np.asarray(self.knots, dtype=float), [self.beta]))

    def minimum(self) -> float:
        if self.is_sampled:
            return float(self.scale * self.values.min())
        if self.decreasing:
            return float(self(self.beta))
        ys = np.union1d(np.linspace(0.0, self.beta, 4097), self.breakpoints())
        return float(self(ys).min())

    def to_samples(self, n: int = DEFAULT_SAMPLES) -> tuple[np.ndarray, np.ndarray]:
        if self.is_sampled:
            return np.array(self.ys), self.scale * np.array(self.values)
        ys = np.union1d(np.linspace(0.0, self.beta, n), self.breakpoints())
        return ys, self(ys)


def profile_eval(surface: SurfaceSpec, profile: Profile, point) -> np.ndarray | float:
    """Conformal factor at plane point(s); independent of x."""
    if not math.isclose(profile.beta, surface.beta, rel_tol=1e-12):
        raise ValueError(f"profile beta {profile.beta} does not match surface beta {surface.beta}")
    p = np.asarray(point, dtype=float)
    out = profile(fold_y(surface.beta, p[..., 1]))
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True, eq=False)
class CurvePolyline:
    """A lifted closed curve: the last vertex is the word image of the first."""

    vertices: np.ndarray
    word: DeckWord
    surface: SurfaceSpec

    def __post_init__(self):
        v = np.array(self.vertices, dtype=float)
        if v.ndim != 2 or v.shape[1] != 2 or len(v) < 2:
            raise ValueError("a curve needs at least two plane vertices")
        if np.any(np.all(np.diff(v, axis=0) == 0, axis=1)):
            raise ValueError("consecutive vertices must be distinct")
        image = deck_apply(self.surface, self.word, v[0])
        gap = float(np.max(np.abs(image - v[-1])))
        if gap > CLOSURE_TOL:
            raise ValueError(f"curve not closed under word {self.word}: gap {gap:.3e}")
        v.setflags(write=False)
        object.__setattr__(self, "vertices", v)

    @property
    def y_range(self) -> float:
        return float(np.ptp(self.vertices[:, 1]))

    def euclidean_length(self) -> float:
        return float(np.sum(np.hypot(*np.diff(self.vertices, axis=0).T)))

    def to_csv(self, path) -> None:
        """Write ``x,y`` rows after a comment line carrying the deck word."""
        path = Path(path)
        with path.open("w", newline="") as fh:
            fh.write(f"# word k={self.word.k} m={self.word.m} "
                     f"surface={self.surface.kind.value} beta={self.surface.beta!r}\n")
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["x", "y"])
            for x, y in self.vertices:
                writer.writerow([repr(float(x)), repr(float(y))])


class CurveClass(str, enum.Enum):
    VERTICAL = "vertical"
    HORIZONTAL = "horizontal"


def classify_curve(surface: SurfaceSpec, curve: CurvePolyline) -> CurveClass:
    """Vertical iff the lifted y-range covers a full period 4 beta."""
    if not surface.is_klein:
        raise UnsupportedSurfaceError("curve classification applies to Klein bottles only")
    if curve.y_range >= 4 * surface.beta - CLOSURE_TOL:
        return CurveClass.VERTICAL
    return CurveClass.HORIZONTAL


def read_profile_csv(path) -> Profile:
    """Read a ``y,phi`` CSV into a sampled profile, rejecting bad rows."""
    path = Path(path)
    ys, phis = [], []
    with path.open(newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and not r[0].lstrip().startswith("#")]
    if not rows or [c.strip() for c in rows[0]] != ["y", "phi"]:
        raise ProfileFormatError("expected header 'y,phi'", row=1)
    for i, row in enumerate(rows[1:], start=2):
        if len(row) != 2:
            raise ProfileFormatError(f"expected 2 columns, got {len(row)}", row=i)
        try:
            y, phi = float(row[0]), float(row[1])
        except ValueError as exc:
            raise ProfileFormatError(f"not a number: {exc}", row=i) from None
        if phi <= 0 or not math.isfinite(phi):
            raise ProfileFormatError(f"phi must be positive, got {phi}", row=i)
        if ys and y <= ys[-1]:
            raise ProfileFormatError("y values must be strictly increasing", row=i)
        ys.append(y)
        phis.append(phi)
    if len(ys) < 2:
        raise ProfileFormatError("need at least two data rows")
    if ys[0] != 0.0:
        raise ProfileFormatError("first y must be 0", row=2)
    return Profile.sampled(ys, phis)


def write_profile_csv(path, profile: Profile, n: int = DEFAULT_SAMPLES) -> None:
    ys, phis = profile.to_samples(n)
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["y", "phi"])
        for y, phi in zip(ys, phis):
            writer.writerow([repr(float(y)), repr(float(phi))])
