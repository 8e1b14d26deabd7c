"""Planar convex geometry: polygons, disks, gauges, frustums and steepness.

Polygons are stored as counter-clockwise vertex arrays.  Most queries go
through the support-function form ``⟨n_i, x⟩ ≤ h_i`` over the outward edge
normals, which keeps gauge and frustum evaluation vectorized.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .convex_core import Halfspace, as_point
from .errors import ConfigError, GeometryError
from .tolerances import DEFAULT


@dataclass(frozen=True)
class Degenerate:
    """Hull of collinear input: a segment (two endpoints) or a single point."""

    points: np.ndarray

    @property
    def kind(self) -> str:
        return "point" if len(self.points) == 1 else "segment"


@dataclass(frozen=True, eq=False)
class ConvexPolygon:
    vertices: np.ndarray

    def __post_init__(self):
        v = np.array(self.vertices, dtype=float)
        if v.ndim != 2 or v.shape[1] != 2 or v.shape[0] < 3:
            raise GeometryError("a convex polygon needs at least 3 planar vertices")
        v.setflags(write=False)
        object.__setattr__(self, "vertices", v)

    def __len__(self):
        return self.vertices.shape[0]

    @cached_property
    def normals(self) -> np.ndarray:
        """Outward unit normal of edge i (from vertex i to vertex i+1)."""
        e = np.roll(self.vertices, -1, axis=0) - self.vertices
        n = np.column_stack([e[:, 1], -e[:, 0]])
        return n / np.linalg.norm(n, axis=1)[:, None]

    @cached_property
    def offsets(self) -> np.ndarray:
        return np.einsum("ij,ij->i", self.normals, self.vertices)

    @cached_property
    def area(self) -> float:
        x, y = self.vertices[:, 0], self.vertices[:, 1]
        return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))

    @cached_property
    def centroid(self) -> np.ndarray:
        return self.vertices.mean(axis=0)

    def support(self, directions) -> np.ndarray:
        d = np.atleast_2d(directions)
        return np.max(d @ self.vertices.T, axis=1)

    def excess(self, x) -> np.ndarray:
        """max_i ⟨n_i, x⟩ − h_i per point: ≤ 0 inside, > 0 outside (a signed distance for exterior-near points)."""
        X = np.atleast_2d(x)
        return np.max(X @ self.normals.T - self.offsets, axis=1)

    def contains(self, x, tol: float = DEFAULT.containment) -> bool:
        return bool(self.excess(x)[0] <= tol)

    def inner_margin(self, x) -> float:
        """Distance from an interior point to the boundary (negative outside)."""
        return float(-self.excess(x)[0])

    def max_distance(self, a) -> float:
        return float(np.max(np.linalg.norm(self.vertices - as_point(a, 2), axis=1)))

    def to_dict(self) -> dict:
        return {"vertices": self.vertices.tolist()}

    @classmethod
    def from_dict(cls, data: dict) -> "ConvexPolygon":
        return cls(np.asarray(data["vertices"], dtype=float))


@dataclass(frozen=True)
class Disk:
    center: np.ndarray
    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise GeometryError("disk radius must be positive")
        object.__setattr__(self, "center", as_point(self.center, 2))


@dataclass(frozen=True)
class LeveledBody:
    polygon: ConvexPolygon
    level: float


def _cross(o, a, b):
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def convex_hull(points, collinear: float = DEFAULT.collinear):
    """Monotone-chain hull, CCW, collinear points dropped.

    Returns a ``ConvexPolygon`` or a ``Degenerate`` tag when all points are
    (numerically) collinear.
    """
    P = np.unique(np.asarray(points, dtype=float).reshape(-1, 2), axis=0)
    if len(P) == 0:
        raise GeometryError("hull of an empty point set")
    pts = [tuple(p) for p in P]  # np.unique sorts lexicographically
    if len(pts) < 3:
        return Degenerate(np.array(pts))

    def turn_ok(o, a, b):
        c = _cross(o, a, b)
        la = math.hypot(a[0] - o[0], a[1] - o[1])
        lb = math.hypot(b[0] - o[0], b[1] - o[1])
        return c > collinear * la * lb

    lower = []
    for p in pts:
        while len(lower) >= 2 and not turn_ok(lower[-2], lower[-1], p):
            lower.pop()
        lower.append(p)
    upper = []
    for p in reversed(pts):
        while len(upper) >= 2 and not turn_ok(upper[-2], upper[-1], p):
            upper.pop()
        upper.append(p)
    hull = lower[:-1] + upper[:-1]
    if len(hull) < 3:
        ends = np.array([pts[0], pts[-1]])
        return Degenerate(ends)
    return ConvexPolygon(np.array(hull))


def _require_polygon(obj, what="hull") -> ConvexPolygon:
    if not isinstance(obj, ConvexPolygon):
        raise GeometryError(f"{what} is degenerate")
    return obj


def clip(poly: ConvexPolygon, h: Halfspace):
    """poly ∩ H⁺; returns a polygon, a ``Degenerate`` sliver, or ``None`` when empty."""
    if h.degenerate:
        return poly
    n = np.asarray(h.normal, dtype=float)[:2]
    n = n / np.linalg.norm(n)
    s = (poly.vertices - np.asarray(h.anchor)[:2]) @ n
    if np.all(s >= 0):
        return poly
    if np.all(s < 0):
        return None
    out = []
    V = poly.vertices
    m = len(V)
    for i in range(m):
        j = (i + 1) % m
        if s[i] >= 0:
            out.append(V[i])
        if (s[i] >= 0) != (s[j] >= 0):
            t = s[i] / (s[i] - s[j])
            out.append(V[i] + t * (V[j] - V[i]))
    return convex_hull(np.array(out))


def disk_polygon(d: Disk, k: int = DEFAULT.disk_k, phase: float = 0.0) -> ConvexPolygon:
    """Regular k-gon inscribed in the disk (a subset of it)."""
    if k < 8:
        raise ConfigError(f"disk polygon needs k >= 8, got {k}")
    theta = phase + 2.0 * np.pi * np.arange(k) / k
    V = d.center + d.radius * np.column_stack([np.cos(theta), np.sin(theta)])
    return ConvexPolygon(V)


def tangent_disk(x, g, r: float) -> Disk:
    """Disk of radius r touching the line H(x, g) at x from the H⁺ side."""
    x = as_point(x, 2)
    g = as_point(g, 2)
    norm = np.linalg.norm(g)
    if norm == 0:
        raise GeometryError("tangent disk needs a nonzero normal")
    if not r > 0:
        raise GeometryError("tangent disk radius must be positive")
    return Disk(x + r * g / norm, float(r))


def minkowski_sum(P: ConvexPolygon, Q: ConvexPolygon) -> ConvexPolygon:
    sums = (P.vertices[:, None, :] + Q.vertices[None, :, :]).reshape(-1, 2)
    return _require_polygon(convex_hull(sums), "Minkowski sum")


def offset_body(poly: ConvexPolygon, r: float, arc_k: int = DEFAULT.arc_k) -> ConvexPolygon:
    """Inner polygonal approximation of {x : dist(x, poly) ≤ r}.

    Realized as poly ⊕ (regular 4·arc_k-gon of radius r): every vertex is
    replaced by the fan of arc points whose directions fall in its normal
    cone (arc_k points per quarter turn), and the arc directions sit on one
    fixed angular lattice, so repeated offsets do not multiply vertex counts.
    """
    if not r > 0:
        raise GeometryError("offset radius must be positive")
    if arc_k < 1:
        raise ConfigError("arc_k must be positive")
    fan = disk_polygon(Disk(np.zeros(2), r), k=max(8, 4 * arc_k))
    return minkowski_sum(poly, fan)


def gauge(poly: ConvexPolygon, a, x, interior: float = DEFAULT.interior):
    """Minkowski gauge of poly about a: λ with x = (1−λ)a + λy, y on the boundary.

    ``x`` may be a single point (returns float) or an (N, 2) array.
    """
    a = as_point(a, 2)
    denom = poly.offsets - poly.normals @ a
    if np.min(denom) <= interior * (1.0 + poly.max_distance(a)):
        raise GeometryError("gauge anchor is not interior to the polygon")
    X = np.asarray(x, dtype=float)
    single = X.ndim == 1
    X = np.atleast_2d(X)
    vals = np.max(((X - a) @ poly.normals.T) / denom, axis=1)
    vals = np.maximum(vals, 0.0)
    return float(vals[0]) if single else vals


def blend_polygon(D1: ConvexPolygon, D2: ConvexPolygon, s: float) -> ConvexPolygon:
    """(1−s)·D1 ⊕ s·D2 as the hull of pairwise scaled vertex sums."""
    if not 0.0 <= s <= 1.0:
        raise GeometryError("blend parameter must lie in [0, 1]")
    if s == 0.0:
        return D1
    if s == 1.0:
        return D2
    sums = ((1 - s) * D1.vertices[:, None, :] + s * D2.vertices[None, :, :]).reshape(-1, 2)
    return _require_polygon(convex_hull(sums), "blend")


def minkowski_blend_membership(D1, D2, s, x, tol: float = DEFAULT.containment) -> bool:
    return blend_polygon(D1, D2, s).contains(as_point(x, 2), tol)


def containment_margin(inner: ConvexPolygon, outer: ConvexPolygon) -> float:
    """min over inner vertices of their distance inside outer (> 0 ⇔ inner ⊂ int outer)."""
    return float(-np.max(outer.excess(inner.vertices)))


def _check_top_heavy(bottom: LeveledBody, top: LeveledBody):
    if not bottom.level < top.level:
        raise GeometryError("frustum bottom level must be below top level")
    if containment_margin(bottom.polygon, top.polygon) <= 0:
        raise GeometryError("frustum is not top-heavy: bottom not inside int top")


def frustum_eval(bottom: LeveledBody, top: LeveledBody, x, tol: float = DEFAULT.containment,
                 iters: int = DEFAULT.bisection_iters) -> float:
    """Lateral height of conv(bottom, top) above x, by bisection on the blend parameter."""
    _check_top_heavy(bottom, top)
    x = as_point(x, 2)
    if bottom.polygon.excess(x)[0] < -tol:
        raise GeometryError("point lies in the interior of the frustum bottom")
    if top.polygon.excess(x)[0] > tol:
        raise GeometryError("point lies outside the frustum top")
    D1, D2 = bottom.polygon, top.polygon
    # domain checks above are tolerant; the bisection itself uses exact membership
    if minkowski_blend_membership(D1, D2, 0.0, x, 0.0):
        s = 0.0
    else:
        lo, hi = 0.0, 1.0
        for _ in range(iters):
            mid = 0.5 * (lo + hi)
            if minkowski_blend_membership(D1, D2, mid, x, 0.0):
                hi = mid
            else:
                lo = mid
        s = hi
    return (1 - s) * bottom.level + s * top.level


class FrustumTable:
    """Precomputed support data for fast lateral-height evaluation.

    Membership in (1−s)D1 ⊕ sD2 is ⟨n, x⟩ ≤ (1−s)h1(n) + s·h2(n) over the
    union of both edge-normal sets, so the minimal s is a max of ratios.
    """

    def __init__(self, bottom: LeveledBody, top: LeveledBody):
        _check_top_heavy(bottom, top)
        self.bottom, self.top = bottom, top
        N = np.vstack([bottom.polygon.normals, top.polygon.normals])
        self.normals = N
        self.h1 = bottom.polygon.support(N)
        self.h2 = top.polygon.support(N)
        self.gap = self.h2 - self.h1
        if np.min(self.gap) <= 0:
            raise GeometryError("frustum is not top-heavy along some normal")

    def blend_parameter(self, X) -> np.ndarray:
        X = np.atleast_2d(X)
        s = np.max((X @ self.normals.T - self.h1) / self.gap, axis=1)
        return np.clip(s, 0.0, 1.0)

    def levels(self, X) -> np.ndarray:
        c1, c2 = self.bottom.level, self.top.level
        return c1 + (c2 - c1) * self.blend_parameter(X)

    @property
    def steepness(self) -> float:
        """Largest gradient norm of the lateral, Δc / min support gap."""
        return (self.top.level - self.bottom.level) / float(np.min(self.gap))


def frustum_steepness(bottom: LeveledBody, top: LeveledBody) -> float:
    return FrustumTable(bottom, top).steepness


def steepness_bound(apex, apex_level: float, base: LeveledBody) -> float:
    """|p − h| / dist(apex, bdry D): bound on the lateral slope of a truncated cone."""
    apex = as_point(apex, 2)
    dist = base.polygon.inner_margin(apex)
    if dist <= 0:
        raise GeometryError("apex must be interior to the base polygon")
    return abs(apex_level - base.level) / dist


def _in_cone(apex_pt, a, delta, X, tol):
    """Membership of rows of X in apex + cone(apex − B(a, δ))."""
    p = apex_pt - a
    Q = X - apex_pt
    qq = np.einsum("ij,ij->i", Q, Q)
    pq = Q @ p
    pp = float(p @ p)
    # min over ν > 0 of ‖p − νq‖
    perp2 = np.where(qq > 0, pp - np.where(pq > 0, pq**2 / np.where(qq > 0, qq, 1.0), 0.0), 0.0)
    dist = np.where(qq == 0, 0.0, np.where(pq > 0, np.sqrt(np.maximum(perp2, 0.0)), math.sqrt(pp)))
    return dist < delta + tol


def cone_inclusion_check(a, b, theta: float, delta: float, samples: int = 1000, rng=None,
                         reach: float = 10.0, tol: float = 1e-12) -> bool:
    """Sample b + cone(b − B(a, δ)) and test membership in c + cone(c − B(a, δ)), c = (1−θ)a + θb."""
    if not (0.0 < delta < theta < 1.0):
        raise ConfigError("cone inclusion requires 0 < delta < theta < 1")
    a = as_point(a, 2)
    b = as_point(b, 2)
    rng = np.random.default_rng(0) if rng is None else rng
    c = (1 - theta) * a + theta * b
    ang = rng.uniform(0, 2 * np.pi, samples)
    rad = delta * np.sqrt(rng.uniform(0, 1, samples)) * (1 - 1e-9)
    U = a + rad[:, None] * np.column_stack([np.cos(ang), np.sin(ang)])
    lam = rng.uniform(0, reach, samples)
    X = b + lam[:, None] * (b - U)
    return bool(np.all(_in_cone(c, a, delta, X, tol * (1 + np.linalg.norm(X, axis=1)))))
