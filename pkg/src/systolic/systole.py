"""Grid estimates of the systole of x-invariant conformal metrics.

For a deck word w, the shortest closed curve in its class is a shortest
path in the universal cover from a seam point (0, y0) to w(0, y0).  The
plane is discretized on a regular grid whose edges follow an 8, 16 or 32
direction stencil; an edge costs its Euclidean length times the profile at
its midpoint.  Every estimate is the exact (quadrature) length of an actual
closed polyline in the class, hence an upper bound for the class minimum.

Two reductions are used.  The metric is invariant under x-translations, so
the seam x = 0 carries every class.  The reflection y -> -y and the shift
y -> y + 2 beta (Klein only) are isometries normalizing the deck group; they
map the seam onto itself and permute the enumerated word set, so seam
points with y0 in [0, beta] suffice.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

import numba
import numpy as np

from .geometry import (CurveClass, CurvePolyline, DeckWord, Profile, SurfaceSpec, classify_curve,
                       fold_y)
from .measure import curve_length

_STENCIL_8 = [(1, 0), (0, 1), (1, 1)]
_STENCIL_16 = _STENCIL_8 + [(1, 2), (2, 1)]
_STENCIL_32 = _STENCIL_16 + [(1, 3), (3, 1), (2, 3), (3, 2)]
_STENCILS = {8: _STENCIL_8, 16: _STENCIL_16, 32: _STENCIL_32}


def stencil_offsets(n: int) -> np.ndarray:
    """All (dcol, drow) moves of an n-direction stencil."""
    if n not in _STENCILS:
        raise ValueError(f"stencil must be one of {sorted(_STENCILS)}, got {n}")
    moves = set()
    for a, b in _STENCILS[n]:
        for sa in (1, -1):
            for sb in (1, -1):
                moves.add((sa * a, sb * b))
    return np.array(sorted(moves), dtype=np.int64)


@dataclass(frozen=True)
class GridConfig:
    """Grid resolution: ``nx`` columns per pi in x, ``ny`` rows per fundamental height."""

    nx: int = 256
    ny: int = 256
    neighbor_stencil: int = 16
    word_bounds: tuple[int, int] = (4, 2)

    def __post_init__(self):
        if self.nx < 8 or self.ny < 8:
            raise ValueError("nx and ny must be at least 8")
        if self.neighbor_stencil not in _STENCILS:
            raise ValueError(f"stencil must be one of {sorted(_STENCILS)}")
        k_max, m_max = self.word_bounds
        if k_max < 2 or m_max < 1:
            raise ValueError("word bounds need k_max >= 2 and m_max >= 1")

    def rows_per_beta(self, surface: SurfaceSpec) -> int:
        return max(2, self.ny // (4 if surface.is_klein else 2))


@dataclass(frozen=True, eq=False)
class SystoleEstimate:
    value: float
    witness: CurvePolyline
    word: DeckWord
    grid: tuple[int, int]
    discretization_note: str
    grid_value: float = math.nan


@numba.njit(cache=True)
def _astar(ncols, nrows, src, tgt, moves, wtab, hmin, hx, hy, bound):
    n = ncols * nrows
    dist = np.full(n, np.inf)
    prev = np.full(n, -1, dtype=np.int64)
    closed = np.zeros(n, dtype=np.bool_)
    tc, tr = tgt // nrows, tgt % nrows
    sc, sr = src // nrows, src % nrows
    dist[src] = 0.0
    h0 = hmin * math.hypot((tc - sc) * hx, (tr - sr) * hy)
    heap = [(h0, src)]
    nmoves = moves.shape[0]
    while len(heap) > 0:
        f, u = heapq.heappop(heap)
        if closed[u]:
            continue
        if f >= bound:
            return np.inf, prev
        if u == tgt:
            return dist[u], prev
        closed[u] = True
        uc, ur = u // nrows, u % nrows
        g = dist[u]
        for q in range(nmoves):
            vc = uc + moves[q, 0]
            vr = ur + moves[q, 1]
            if vc < 0 or vc >= ncols or vr < 0 or vr >= nrows:
                continue
            v = vc * nrows + vr
            if closed[v]:
                continue
            # edge weight uses the row of the segment midpoint
            nd = g + wtab[ur, q]
            if nd < dist[v]:
                dist[v] = nd
                prev[v] = u
                h = hmin * math.hypot((tc - vc) * hx, (tr - vr) * hy)
                heapq.heappush(heap, (nd + h, v))
    return np.inf, prev


class _Lattice:
    """Grid window for one word: absolute rows j (y = j hy), columns c (x = c hx)."""

    def __init__(self, surface: SurfaceSpec, profile: Profile, word: DeckWord, grid: GridConfig):
        self.surface = surface
        self.word = word
        r = grid.rows_per_beta(surface)
        self.r = r
        self.hx = math.pi / grid.nx
        self.hy = surface.beta / r
        sign = -1 if word.k % 2 else 1
        self.sources = np.arange(0, r + 1)
        self.targets = sign * self.sources + 4 * r * word.m
        if surface.is_klein:
            lo = min(0, int(self.targets.min())) - 2 * r
            hi = max(r, int(self.targets.max())) + 2 * r
        else:
            lo, hi = -r, r
        self.row0, self.nrows = lo, hi - lo + 1
        margin = max(2, grid.nx // 8)
        span = word.k * grid.nx
        self.col0 = min(0, span) - margin
        self.ncols = abs(span) + 2 * margin + 1
        self.target_col = span
        self.moves = stencil_offsets(grid.neighbor_stencil)
        self.lengths = np.hypot(self.moves[:, 0] * self.hx, self.moves[:, 1] * self.hy)
        rows = np.arange(self.nrows) + lo
        ymid = (rows[:, None] + 0.5 * self.moves[None, :, 1]) * self.hy
        phi = profile(fold_y(surface.beta, ymid))
        self.wtab = np.ascontiguousarray(phi * self.lengths[None, :])
        self.hmin = float(phi.min())

    def node(self, col: int, row: int) -> int:
        return (col - self.col0) * self.nrows + (row - self.row0)

    def point(self, node: int) -> tuple[float, float]:
        c, j = divmod(int(node), self.nrows)
        return (c + self.col0) * self.hx, (j + self.row0) * self.hy

    def lower_bound(self) -> float:
        dx = self.target_col * self.hx
        dy = (self.targets - self.sources) * self.hy
        return self.hmin * float(np.min(np.hypot(dx, dy)))

    def trace(self, prev: np.ndarray, src: int, tgt: int) -> np.ndarray:
        path = [tgt]
        while path[-1] != src:
            path.append(int(prev[path[-1]]))
        return np.array([self.point(u) for u in reversed(path)])


def _orient(word: DeckWord) -> DeckWord:
    return word.inverse() if word.k < 0 or (word.k == 0 and word.m < 0) else word


def shortest_in_class(surface: SurfaceSpec, profile: Profile, word: DeckWord,
                      grid: GridConfig = GridConfig(), bound: float = math.inf):
    """Shortest grid curve in the class of ``word``.

    Returns (length, witness) where length is the quadrature length of the
    witness polyline, or None if no grid curve is shorter than ``bound``
    (a grid-distance cutoff).
    """
    res = _shortest(surface, profile, word, grid, bound)
    if res is None:
        return None
    return res[1], res[2]


def _shortest(surface, profile, word, grid, bound=math.inf):
    if word.is_trivial:
        raise ValueError("the trivial word has no noncontractible curves")
    if word.m != 0 and not surface.is_klein:
        raise ValueError(f"word {word} is not a Möbius deck word")
    oriented = _orient(word)
    lat = _Lattice(surface, profile, oriented, grid)
    # try promising seam points first so the cutoff tightens early
    order = np.argsort(np.abs(lat.targets - lat.sources))
    best = None
    best_grid = bound
    for i in order:
        src = lat.node(0, int(lat.sources[i]))
        tgt = lat.node(lat.target_col, int(lat.targets[i]))
        d, prev = _astar(lat.ncols, lat.nrows, src, tgt, lat.moves, lat.wtab,
                         lat.hmin, lat.hx, lat.hy, best_grid)
        if d < best_grid:
            best_grid = d
            best = (src, tgt, prev.copy())
    if best is None:
        return None
    src, tgt, prev = best
    verts = lat.trace(prev, src, tgt)
    witness = CurvePolyline(verts, oriented, surface)
    return best_grid, curve_length(surface, profile, witness), witness


def candidate_words(surface: SurfaceSpec, grid: GridConfig) -> list[DeckWord]:
    """Enumerated words up to inversion: k >= 1 with |m| <= m_max, plus (0, m) on Klein."""
    k_max, m_max = grid.word_bounds
    if not surface.is_klein:
        return [DeckWord(k, 0) for k in range(1, k_max + 1)]
    words = [DeckWord(k, m) for k in range(1, k_max + 1) for m in range(-m_max, m_max + 1)]
    words += [DeckWord(0, m) for m in range(1, m_max + 1)]
    return words


def systole_estimate(surface: SurfaceSpec, profile: Profile,
                     grid: GridConfig = GridConfig()) -> SystoleEstimate:
    """Minimum over the word set of the class estimates, with lower-bound pruning."""
    if profile.minimum() <= 0:
        raise ValueError("profile must be positive")
    lattices = [(_Lattice(surface, profile, w, grid).lower_bound(), i, w)
                for i, w in enumerate(candidate_words(surface, grid))]
    lattices.sort()
    best_grid = math.inf
    found = []
    for lb, _, word in lattices:
        if lb >= best_grid:
            continue
        res = _shortest(surface, profile, word, grid, best_grid)
        if res is None:
            continue
        best_grid = min(best_grid, res[0])
        found.append(res)
    grid_value, value, witness = min(found, key=lambda t: t[1])
    note = (f"{grid.neighbor_stencil}-direction stencil, {grid.nx} columns per pi, "
            f"{grid.rows_per_beta(surface)} rows per beta, words |k|<={grid.word_bounds[0]} "
            f"|m|<={grid.word_bounds[1]}; upper bound")
    return SystoleEstimate(value, witness, witness.word, (grid.nx, grid.ny), note, grid_value)


def fold_to_mobius(surface: SurfaceSpec, curve: CurvePolyline) -> CurvePolyline:
    """Image of a Klein curve under the fold onto the embedded Möbius strip.

    The fold is the 4 beta periodic, odd triangle wave in y with values in
    [-beta, beta]; vertices are inserted where segments cross its kinks
    (y = beta + 2 beta j) so the image is again a polyline.
    """
    if not surface.is_klein:
        raise ValueError("folding applies to Klein bottle curves")
    beta = surface.beta
    v = curve.vertices
    pts = [v[0]]
    for p0, p1 in zip(v[:-1], v[1:]):
        lo, hi = sorted((p0[1], p1[1]))
        j0 = math.ceil((lo - beta) / (2 * beta))
        j1 = math.floor((hi - beta) / (2 * beta))
        ts = []
        for j in range(j0, j1 + 1):
            yk = beta + 2 * beta * j
            if p1[1] != p0[1]:
                t = (yk - p0[1]) / (p1[1] - p0[1])
                if 0 < t < 1:
                    ts.append(t)
        for t in sorted(ts):
            pts.append(p0 + t * (p1 - p0))
        pts.append(p1)
    pts = np.array(pts)
    y = pts[:, 1]
    t = np.mod(y + beta, 4 * beta)
    pts[:, 1] = np.where(t <= 2 * beta, t - beta, 3 * beta - t)
    keep = np.concatenate(([True], np.any(np.diff(pts, axis=0) != 0, axis=1)))
    pts = pts[keep]
    mobius = SurfaceSpec.mobius(beta)
    # the fold commutes with the deck group, so the image closes under A^k
    return CurvePolyline(pts, DeckWord(curve.word.k, 0), mobius)


def witness_is_consistent(surface: SurfaceSpec, estimate: SystoleEstimate) -> bool:
    """Vertical words (0, m != 0) must yield vertical witnesses."""
    if not surface.is_klein:
        return True
    cls = classify_curve(surface, estimate.witness)
    if estimate.word.k == 0:
        return cls is CurveClass.VERTICAL
    return True
