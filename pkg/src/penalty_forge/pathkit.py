"""Search paths: generation, ingestion, grouping and admissibility checks."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog

from .convex_core import LossSpec, SubgradientOracle, as_point, halfspace_plus
from .errors import ConfigError, DivergenceError, EmptyRegionError, PathOrderError
from .geometry2d import ConvexPolygon, clip
from .tolerances import DEFAULT, Tolerances

log = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class SearchPath:
    points: np.ndarray
    f_values: np.ndarray
    subgradients: np.ndarray
    source: str = "ingested"
    loss: LossSpec | None = None
    times: np.ndarray | None = None

    def __len__(self):
        return self.points.shape[0]

    @property
    def dimension(self) -> int:
        return self.points.shape[1]

    def halfspace(self, i):
        return halfspace_plus(self.points[i], self.subgradients[i])

    def is_degenerate(self, i) -> bool:
        return bool(np.linalg.norm(self.subgradients[i]) == 0.0)

    def to_dict(self) -> dict:
        out = {"points": self.points.tolist(), "source": self.source}
        if self.loss is not None:
            out["loss"] = self.loss.to_dict()
        if self.times is not None:
            out["times"] = self.times.tolist()
        return out

    def reordered(self, order) -> "SearchPath":
        order = np.asarray(order)
        return SearchPath(
            self.points[order], self.f_values[order], self.subgradients[order],
            source=self.source + " (relabeled by decreasing f)", loss=self.loss,
            times=None if self.times is None else self.times[order],
        )


@dataclass(frozen=True)
class PathGroups:
    groups: list  # list of tuples of point indices
    group_f: list

    def __len__(self):
        return len(self.groups)


@dataclass
class AdmissibilityReport:
    cond_i: list = field(default_factory=list)       # (i, j, margin) violations
    cond_ii: list = field(default_factory=list)      # per-group residual records
    cond_iii: dict = field(default_factory=dict)     # witness / certificate
    verdict: str = "admissible"
    reason: str = ""
    bbox: ConvexPolygon | None = None

    @property
    def admissible(self) -> bool:
        return self.verdict == "admissible"

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "reason": self.reason,
            "cond_i": [{"i": int(i), "j": int(j), "margin": float(m)} for i, j, m in self.cond_i],
            "cond_ii": self.cond_ii,
            "cond_iii": self.cond_iii,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "AdmissibilityReport":
        return cls([(int(c["i"]), int(c["j"]), float(c["margin"])) for c in data.get("cond_i", [])],
                   list(data.get("cond_ii", [])), dict(data.get("cond_iii", {})),
                   data["verdict"], data.get("reason", ""))


@dataclass(frozen=True)
class UltimateRegion:
    polygon: object  # ConvexPolygon or Degenerate (planar case only)
    chebyshev_center: np.ndarray
    chebyshev_radius: float


# ---------------------------------------------------------------------------
# Path generation
# ---------------------------------------------------------------------------


def _make_path(f: SubgradientOracle, pts, source, times=None) -> SearchPath:
    P = np.array([as_point(p, f.dimension) for p in pts])
    for i, p in enumerate(P):
        if not f.in_domain(p):
            raise ConfigError(f"path point {i} is outside dom f")
    fv = np.array([f.value(p) for p in P])
    if not np.all(np.isfinite(fv)):
        raise ConfigError("f is not finite along the path")
    G = np.array([f.subgrad(p) for p in P])
    return SearchPath(P, fv, G, source=source, loss=f.spec, times=times)


def run_gradient_descent(f: SubgradientOracle, x0, step: float, iters: int,
                         box: float | None = None) -> SearchPath:
    if not step > 0:
        raise ConfigError("step must be positive")
    if iters < 1:
        raise ConfigError("iters must be at least 1")
    x = as_point(x0, f.dimension)
    if not f.in_domain(x):
        raise ConfigError("x0 is outside dom f")
    box = 1e6 * (1.0 + np.linalg.norm(x)) if box is None else box
    pts = [x]
    for t in range(iters):
        x = x - step * f.subgrad(x)
        if not np.all(np.isfinite(x)) or np.max(np.abs(x)) > box:
            raise DivergenceError(f"gradient descent left the box |x| <= {box:g} at iteration {t + 1}")
        pts.append(x)
    return _make_path(f, pts, source=f"gradient-descent step={step!r} iters={iters}")


def ingest_path(points, f: SubgradientOracle, source: str = "ingested", times=None) -> SearchPath:
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[0] == 0:
        raise ConfigError("a path needs a nonempty list of points")
    return _make_path(f, pts, source, times=times)


def sort_path(path: SearchPath) -> SearchPath:
    """Relabel the iterates by decreasing f (stable)."""
    order = np.argsort(-path.f_values, kind="stable")
    return path.reordered(order)


def group_by_value(path: SearchPath, tol: float = DEFAULT.group_f) -> PathGroups:
    """Consecutive blocks of (tol-)equal f, required to strictly decrease block to block."""
    if tol < 0:
        raise ConfigError("grouping tolerance must be nonnegative")
    fv = path.f_values
    groups, current = [], [0]
    for i in range(1, len(fv)):
        if abs(fv[i] - fv[current[0]]) <= tol:
            current.append(i)
        else:
            groups.append(current)
            current = [i]
    groups.append(current)
    means = [float(np.mean(fv[g])) for g in groups]
    for k in range(1, len(groups)):
        if not means[k] < means[k - 1]:
            bad = [groups[k - 1][-1], groups[k][0]]
            raise PathOrderError(
                f"f does not strictly decrease between points {bad[0]} and {bad[1]}", bad)
    return PathGroups([tuple(g) for g in groups], means)


# ---------------------------------------------------------------------------
# Ultimate region and Chebyshev witness
# ---------------------------------------------------------------------------


def default_bbox(path: SearchPath) -> tuple[np.ndarray, float]:
    """Axis-aligned box (center, half-width) of half-width 10·(1 + max‖x_i‖) about the centroid."""
    center = path.points.mean(axis=0)
    half = 10.0 * (1.0 + float(np.max(np.linalg.norm(path.points, axis=1))))
    return center, half


def box_polygon(center, half) -> ConvexPolygon:
    cx, cy = as_point(center, 2)
    hx, hy = np.broadcast_to(np.asarray(half, dtype=float), (2,))
    return ConvexPolygon(np.array([[cx - hx, cy - hy], [cx + hx, cy - hy],
                                   [cx + hx, cy + hy], [cx - hx, cy + hy]]))


def _box_of(bbox, path):
    """Normalize a bbox argument to (center, half-widths)."""
    if bbox is None:
        c, h = default_bbox(path)
        return c, np.full(path.dimension, h)
    if isinstance(bbox, ConvexPolygon):
        lo, hi = bbox.vertices.min(axis=0), bbox.vertices.max(axis=0)
        return 0.5 * (lo + hi), 0.5 * (hi - lo)
    c, h = bbox
    c = as_point(c)
    return c, np.broadcast_to(np.asarray(h, dtype=float), c.shape).copy()


def chebyshev(normals, offsets, center, half):
    """Largest ball inside {⟨n_i, y⟩ ≥ b_i} ∩ box; radius may be ≤ 0 when the interior is empty.

    Returns (center, radius, duals) where duals are the multipliers of the
    halfspace rows (box rows excluded).
    """
    n = center.shape[0]
    N = np.asarray(normals, dtype=float).reshape(-1, n)
    b = np.asarray(offsets, dtype=float).reshape(-1)
    m = N.shape[0]
    if m == 0:
        # nothing but the box: its center is the unique Chebyshev center
        return center.copy(), float(np.min(half)), np.zeros(0)
    # rows: -⟨n_i, y⟩ + r ≤ -b_i ; box: ±y_k + r ≤ ±c_k + half_k
    A = [np.hstack([-N, np.ones((m, 1))])] if m else []
    rhs = [-b] if m else []
    eye = np.eye(n)
    A.append(np.hstack([eye, np.ones((n, 1))]))
    rhs.append(center + half)
    A.append(np.hstack([-eye, np.ones((n, 1))]))
    rhs.append(-(center - half))
    A_ub = np.vstack(A)
    b_ub = np.concatenate(rhs)
    cost = np.zeros(n + 1)
    cost[-1] = -1.0
    bounds = [(None, None)] * (n + 1)
    res = linprog(cost, A_ub=A_ub, b_ub=b_ub, bounds=bounds, method="highs")
    if res.status != 0:
        raise EmptyRegionError(f"Chebyshev LP failed: {res.message}", [], float("nan"))
    r = float(res.x[-1])
    duals = -np.asarray(res.ineqlin.marginals[:m]) if m else np.zeros(0)
    y = res.x[:n]
    if r > 0:
        # pick the optimal center nearest (in L1) to the box center
        slack = r * (1.0 - 1e-9)
        k = n
        cost2 = np.concatenate([np.zeros(n), np.ones(k)])
        A2 = []
        b2 = []
        if m:
            A2.append(np.hstack([-N, np.zeros((m, k))]))
            b2.append(-b - slack)
        A2.append(np.hstack([eye, np.zeros((n, k))]))
        b2.append(center + half - slack)
        A2.append(np.hstack([-eye, np.zeros((n, k))]))
        b2.append(-(center - half) - slack)
        A2.append(np.hstack([eye, -eye]))
        b2.append(center)
        A2.append(np.hstack([-eye, -eye]))
        b2.append(-center)
        res2 = linprog(cost2, A_ub=np.vstack(A2), b_ub=np.concatenate(b2),
                       bounds=[(None, None)] * (2 * n), method="highs")
        if res2.status == 0:
            y = res2.x[:n]
            margins = (N @ y - b) if m else np.zeros(0)
            box_m = np.min(half - np.abs(y - center))
            r = float(min(np.min(margins) if m else np.inf, box_m))
    return y, r, duals


def _path_halfspace_rows(path: SearchPath):
    idx = [i for i in range(len(path)) if not path.is_degenerate(i)]
    if not idx:
        return idx, np.zeros((0, path.dimension)), np.zeros(0)
    G = path.subgradients[idx]
    N = G / np.linalg.norm(G, axis=1)[:, None]
    b = np.einsum("ij,ij->i", N, path.points[idx])
    return idx, N, b


def ultimate_region(path: SearchPath, bbox=None) -> UltimateRegion:
    """Intersection of the path halfspaces with a bounding box, plus its Chebyshev ball."""
    center, half = _box_of(bbox, path)
    idx, N, b = _path_halfspace_rows(path)
    y, r, duals = chebyshev(N, b, center, half)
    if r <= 0:
        order = np.argsort(-duals, kind="stable")
        cert = [idx[k] for k in order[:2] if duals[k] > 0] or [idx[k] for k in order[:2]]
        raise EmptyRegionError(
            f"path halfspaces have empty common interior (best radius {r:.3g}); "
            f"most conflicting points {cert}", cert, r)
    polygon = None
    if path.dimension == 2:
        polygon = box_polygon(center, half)
        for i in idx:
            polygon = clip(polygon, path.halfspace(i))
            if not isinstance(polygon, ConvexPolygon):
                break
    return UltimateRegion(polygon, y, r)


# ---------------------------------------------------------------------------
# Admissibility
# ---------------------------------------------------------------------------


def check_admissibility(path: SearchPath, groups: PathGroups, bbox=None,
                        tol: Tolerances = DEFAULT) -> AdmissibilityReport:
    report = AdmissibilityReport()
    P, G = path.points, path.subgradients
    gnorm = np.linalg.norm(G, axis=1)
    scale = 1.0 + np.linalg.norm(P, axis=1)
    group_of = np.empty(len(path), dtype=int)
    for k, g in enumerate(groups.groups):
        group_of[list(g)] = k

    # (i): earlier-group points strictly inside later halfspaces
    nondeg = gnorm > 0
    U = np.zeros_like(G)
    U[nondeg] = G[nondeg] / gnorm[nondeg, None]
    # margin[i, j] = ⟨u_j, x_i − x_j⟩
    M = P @ U.T - np.einsum("ij,ij->i", U, P)[None, :]
    later = group_of[:, None] < group_of[None, :]
    need = later & nondeg[None, :]
    thresh = tol.interior * (scale[:, None] + scale[None, :])
    bad = np.argwhere(need & (M <= thresh))
    report.cond_i = [(int(i), int(j), float(M[i, j])) for i, j in bad]

    # (ii): equal-f points share one supporting hyperplane
    for k, g in enumerate(groups.groups):
        g = list(g)
        rec = {"group": k, "indices": g, "max_angle": 0.0, "max_offset": 0.0, "ok": True}
        degs = [i for i in g if not nondeg[i]]
        if degs and len(degs) != len(g):
            rec.update(max_angle=float("inf"), max_offset=float("inf"), ok=False)
        elif not degs:
            for i in g:
                for j in g:
                    if i >= j:
                        continue
                    cosang = float(np.clip(U[i] @ U[j], -1.0, 1.0))
                    ang = float(np.arccos(cosang))
                    off = max(abs(float(U[i] @ (P[j] - P[i]))), abs(float(U[j] @ (P[i] - P[j]))))
                    rec["max_angle"] = max(rec["max_angle"], ang)
                    rec["max_offset"] = max(rec["max_offset"], off)
                    if ang > tol.hyperplane_angle or off > tol.hyperplane_offset * max(scale[i], scale[j]):
                        rec["ok"] = False
        report.cond_ii.append(rec)

    # (iii): ultimate region has nonempty interior
    center, half = _box_of(bbox, path)
    report.bbox = box_polygon(center, half) if path.dimension == 2 else None
    try:
        region = ultimate_region(path, (center, half))
        report.cond_iii = {
            "witness": region.chebyshev_center.tolist(),
            "radius": region.chebyshev_radius,
            "bbox_center": center.tolist(),
            "bbox_half_width": half.tolist(),
        }
        feasible = region.chebyshev_radius > 0
    except EmptyRegionError as exc:
        report.cond_iii = {"certificate": exc.certificate, "radius": exc.radius,
                           "bbox_center": center.tolist(), "bbox_half_width": half.tolist()}
        feasible = False

    reasons = []
    if report.cond_i:
        i, j, m = report.cond_i[0]
        reasons.append(f"condition (i): point {i} not interior to H+ of point {j} (margin {m:.3g})")
    if not all(r["ok"] for r in report.cond_ii):
        reasons.append("condition (ii): equal-f points do not share a supporting hyperplane")
    if not feasible:
        reasons.append(f"condition (iii): empty ultimate region, certificate {report.cond_iii.get('certificate')}")
    if reasons:
        report.verdict = "rejected"
        report.reason = "; ".join(reasons)
    log.info("admissibility: %s %s", report.verdict, report.reason)
    return report
