"""Constructive synthesis of a convex penalty reproducing an admissible path.

Nested polygons K_0 ⊂ K_1 ⊂ … ⊂ K_k are built so that K_j touches the
supporting line of the j-th f-level group at its points.  The penalty is the
gauge of K_0 about the anchor inside K_0, frustum laterals between
consecutive shells, and a cone over K_k outside it.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .convex_core import SubgradientOracle, as_point
from .errors import BuildError, GeometryError
from .geometry2d import (
    ConvexPolygon,
    Disk,
    FrustumTable,
    LeveledBody,
    containment_margin,
    convex_hull,
    disk_polygon,
    gauge,
    offset_body,
    steepness_bound,
    tangent_disk,
)
from .pathkit import AdmissibilityReport, PathGroups, SearchPath
from .tolerances import DEFAULT, Tolerances

log = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class PenaltyModel:
    anchor: np.ndarray
    shells: tuple  # of LeveledBody, innermost first; shells[0].level == 1
    outer_apex_level: float
    # positive output factor; levels stay in construction units, values are scaled
    scale: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "anchor", as_point(self.anchor, 2))
        object.__setattr__(self, "shells", tuple(self.shells))
        if not self.shells:
            raise BuildError("a penalty model needs at least one shell")
        if not self.scale > 0:
            raise BuildError("penalty scale must be positive")

    @cached_property
    def _gauge_tables(self):
        a = self.anchor
        out = []
        for body in self.shells:
            P = body.polygon
            denom = P.offsets - P.normals @ a
            if np.min(denom) <= 0:
                raise GeometryError("anchor is not interior to every shell")
            out.append((P.normals, denom))
        return out

    @cached_property
    def _frustums(self):
        return [FrustumTable(self.shells[j], self.shells[j + 1]) for j in range(len(self.shells) - 1)]

    def _gauge(self, j, X):
        N, denom = self._gauge_tables[j]
        return np.maximum(np.max(((X - self.anchor) @ N.T) / denom, axis=1), 0.0)

    def values(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        out = np.empty(X.shape[0])
        todo = np.ones(X.shape[0], dtype=bool)
        g = self._gauge(0, X)
        inside = g <= 1.0
        out[inside] = g[inside]
        todo &= ~inside
        for j in range(1, len(self.shells)):
            if not todo.any():
                break
            idx = np.flatnonzero(todo)
            gj = self._gauge(j, X[idx])
            sel = idx[gj <= 1.0]
            if sel.size:
                out[sel] = self._frustums[j - 1].levels(X[sel])
                todo[sel] = False
        if todo.any():
            idx = np.flatnonzero(todo)
            ck, p = self.shells[-1].level, self.outer_apex_level
            out[idx] = p + self._gauge(len(self.shells) - 1, X[idx]) * (ck - p)
        return self.scale * out

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if x.ndim == 1:
            return float(self.values(x[None, :])[0])
        return self.values(x)

    @property
    def levels(self) -> list:
        return [b.level for b in self.shells]

    def to_dict(self) -> dict:
        return {
            "anchor": self.anchor.tolist(),
            "shells": [{"vertices": b.polygon.vertices.tolist(), "level": b.level} for b in self.shells],
            "outer_apex_level": self.outer_apex_level,
            "scale": self.scale,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "PenaltyModel":
        shells = [LeveledBody(ConvexPolygon(np.asarray(s["vertices"], dtype=float)), float(s["level"]))
                  for s in data["shells"]]
        return cls(np.asarray(data["anchor"], dtype=float), shells, float(data["outer_apex_level"]),
                   float(data.get("scale", 1.0)))


@dataclass(frozen=True)
class TangencyCertificate:
    index: int
    shell: int
    psi_normal: list
    subgradient: list
    angle: float
    boundary_residual: float
    lam: float

    def to_dict(self) -> dict:
        return dict(self.__dict__)

    @classmethod
    def from_dict(cls, data: dict) -> "TangencyCertificate":
        return cls(**data)


@dataclass
class LambdaSchedule:
    lambdas: list
    method: list
    joint_minimizer: list = field(default_factory=list)
    slope_bounds: list = field(default_factory=list)  # (inward, outward) ψ slopes along −g

    def __len__(self):
        return len(self.lambdas)

    def to_dict(self) -> dict:
        return {
            "lambdas": [float(v) for v in self.lambdas],
            "method": list(self.method),
            "joint_minimizer": list(self.joint_minimizer),
            "slope_bounds": [list(map(float, s)) for s in self.slope_bounds],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "LambdaSchedule":
        return cls(list(map(float, data["lambdas"])), list(data.get("method", ["ratio"] * len(data["lambdas"]))),
                   list(data.get("joint_minimizer", [])), [tuple(s) for s in data.get("slope_bounds", [])])


# ---------------------------------------------------------------------------
# Construction steps
# ---------------------------------------------------------------------------


def choose_anchor(report: AdmissibilityReport) -> tuple[np.ndarray, float]:
    """Chebyshev witness of the ultimate region and a ball radius with slack."""
    if not report.admissible:
        raise BuildError(f"cannot anchor a rejected path: {report.reason}")
    center = np.asarray(report.cond_iii["witness"], dtype=float)
    radius = float(report.cond_iii["radius"])
    return center, min(radius / 2.0, 1.0)


def _unit_rows(halfspaces):
    if not halfspaces:
        return np.zeros((0, 2)), np.zeros(0)
    N = np.array([h.normal / np.linalg.norm(h.normal) for h in halfspaces])
    b = np.einsum("ij,ij->i", N, np.array([h.anchor for h in halfspaces]))
    return N, b


def tangent_radius(x, u, N, b, eps: float) -> tuple[float, float]:
    """Radius of a disk tangent at x (inner normal u) that stays inside ⟨N_h, y⟩ ≥ b_h.

    The disk center x + r·u has margin slack_h + r·cos_h against row h, so
    r ≤ slack_h / (1 − cos_h) keeps it inside; half of the tightest bound is
    used, capped at eps.  Returns (r, min slack).
    """
    slack = N @ x - b
    if slack.size and np.min(slack) <= 0:
        raise BuildError("group point is not interior to a later halfspace")
    cosv = N @ u
    r = eps
    for sl, c in zip(slack, cosv):
        if 1.0 - c > 1e-15:
            r = min(r, 0.5 * sl / (1.0 - c))
    return r, (float(np.min(slack)) if slack.size else math.inf)


def _group_support_points(group, path: SearchPath, later_halfspaces, eps, k):
    """Points whose hull is C_j: two tangent disks, the group points, and two collar points."""
    idx = list(group)
    P = path.points[idx]
    G = path.subgradients[idx]
    if np.all(np.linalg.norm(G, axis=1) == 0):
        return P
    u = G[0] / np.linalg.norm(G[0])
    tau = np.array([-u[1], u[0]])
    N, b = _unit_rows(later_halfspaces)

    def room(x):
        return tangent_radius(x, u, N, b, eps)

    pts = [P]
    for x in (P[0], P[-1]):
        r, _ = room(x)
        if not r > 0:
            raise BuildError("no positive tangent-disk radius fits the later halfspaces")
        pts.append(disk_polygon(tangent_disk(x, u, r), k).vertices)
    t = P @ tau
    for x, sign in ((P[np.argmin(t)], -1.0), (P[np.argmax(t)], 1.0)):
        r, slack = room(x)
        w = 0.5 * min(r, slack)
        pts.append((x + sign * w * tau)[None, :])
    return np.vstack(pts)


def build_group_hull(group, path: SearchPath, later_halfspaces, eps: float = 1.0,
                     k: int = DEFAULT.disk_k) -> ConvexPolygon:
    hull = convex_hull(_group_support_points(group, path, later_halfspaces, eps, k))
    if not isinstance(hull, ConvexPolygon):
        raise BuildError("group hull is degenerate")
    return hull


def _group_halfspaces(path, groups, start):
    hs = []
    for g in groups.groups[start:]:
        for i in g:
            if not path.is_degenerate(i):
                hs.append(path.halfspace(i))
    return hs


def build_shells(path: SearchPath, groups: PathGroups, a, eps: float,
                 tol: Tolerances = DEFAULT) -> list:
    """Nested shells K_0 ⊂ … ⊂ K_k, each tangent to its group's supporting line."""
    a = as_point(a, 2)
    ngroups = len(groups)
    degenerate = [i for i in range(len(path)) if path.is_degenerate(i)]
    if degenerate and (ngroups > 1 or len(degenerate) != len(path)):
        raise BuildError(
            f"points {degenerate} are stationary for f while the path has other f-levels; "
            "no positive tuner can make them minimizers of f + λψ")
    if degenerate and len(np.unique(path.points, axis=0)) > 1:
        raise BuildError("distinct stationary points cannot all minimize one penalized objective")

    disk_a = disk_polygon(Disk(a, eps), tol.disk_k).vertices
    C0 = _group_support_points(groups.groups[0], path, _group_halfspaces(path, groups, 1), eps, tol.disk_k)
    K = convex_hull(np.vstack([disk_a, C0]))
    if not isinstance(K, ConvexPolygon):
        raise BuildError("K_0 is degenerate")
    shells = [K]
    for j in range(ngroups - 1):
        later = _group_halfspaces(path, groups, j + 1)
        N, b = _unit_rows(later)
        d = float(np.min(K.vertices @ N.T - b))
        if not d > 0:
            raise BuildError(f"shell {j} touches a later halfspace (d_j = {d:.3g})")
        E = offset_body(K, d / 2.0, tol.arc_k)
        C = _group_support_points(groups.groups[j + 1], path, _group_halfspaces(path, groups, j + 2),
                                  eps, tol.disk_k)
        K = convex_hull(np.vstack([E.vertices, C]))
        shells.append(K)

    for j in range(len(shells) - 1):
        m = containment_margin(shells[j], shells[j + 1])
        if not m > tol.containment:
            raise BuildError(f"shells {j} and {j + 1} are not strictly nested (margin {m:.3g})")
    for j, g in enumerate(groups.groups):
        for i in g:
            res = abs(float(shells[j].excess(path.points[i])[0]))
            if res > tol.tangency * (1.0 + np.linalg.norm(path.points[i])) and not path.is_degenerate(i):
                raise BuildError(f"shell {j} misses path point {i} by {res:.3g}")
    return shells


def level_schedule(shells, a):
    """Leveled shells, apex levels p_j and running steepness bounds S_j."""
    a = as_point(a, 2)
    levels = [1.0]
    bodies = [LeveledBody(shells[0], 1.0)]
    steep = [steepness_bound(a, 0.0, bodies[0])]
    apexes = []
    for j in range(len(shells) - 1):
        c = levels[-1]
        p = c - (steep[-1] + 1.0) * shells[j].max_distance(a)
        lam_star = float(np.max(gauge(shells[j], a, shells[j + 1].vertices)))
        if not lam_star > 1.0:
            raise BuildError(f"shell {j + 1} is not strictly larger than shell {j} (λ* = {lam_star:.6g})")
        c_next = (1.0 - lam_star) * p + lam_star * c
        apexes.append(p)
        levels.append(c_next)
        bodies.append(LeveledBody(shells[j + 1], c_next))
        steep.append(max(steep[-1], FrustumTable(bodies[-2], bodies[-1]).steepness))
    return bodies, apexes, steep


def assign_levels(shells, a) -> list:
    return level_schedule(shells, a)[0]


def outer_apex_level(bodies, a, steepness: float) -> float:
    """Apex level for the conic extension beyond the outermost shell."""
    return bodies[-1].level - (steepness + 1.0) * bodies[-1].polygon.max_distance(a)


def eval_penalty(model: PenaltyModel, x):
    return model(x)


def build_model(path: SearchPath, groups: PathGroups, report: AdmissibilityReport,
                tol: Tolerances = DEFAULT, normalize: bool = True) -> PenaltyModel:
    """Anchor, shells, levels and exterior apex in one step.

    Levels grow roughly geometrically with the number of shells, so by default
    the output is divided by the unit-gauge rise of the exterior cone.  That
    keeps rounding in f + λψ at the scale of f; λ absorbs the factor.
    """
    a, eps = choose_anchor(report)
    shells = build_shells(path, groups, a, eps, tol)
    bodies, _, steep = level_schedule(shells, a)
    p_out = outer_apex_level(bodies, a, steep[-1])
    scale = 1.0 / max(1.0, bodies[-1].level - p_out) if normalize else 1.0
    model = PenaltyModel(a, bodies, p_out, scale)
    log.info("built %d shells, levels %s", len(bodies), [f"{c:.4g}" for c in model.levels])
    return model


# ---------------------------------------------------------------------------
# Tuning parameters
# ---------------------------------------------------------------------------


def _shell_of(model: PenaltyModel, x) -> tuple[int, float]:
    res = [abs(float(b.polygon.excess(x)[0])) for b in model.shells]
    j = int(np.argmin(res))
    return j, res[j]


def one_sided_slopes(model: PenaltyModel, x, g, step: float = DEFAULT.lambda_fd_step):
    """Inward and outward slopes of ψ at x along the direction −g."""
    x = as_point(x, 2)
    u = g / np.linalg.norm(g)
    h = step * (1.0 + np.linalg.norm(x))
    v0, v_out, v_in = model.values(np.array([x, x - h * u, x + h * u]))
    return (v0 - v_in) / h, (v_out - v0) / h


def extract_lambdas(model: PenaltyModel, path: SearchPath, f: SubgradientOracle | None = None,
                    tol: Tolerances = DEFAULT, bbox=None, fallback: bool = True):
    """One tuner per path point from opposed subgradients.

    Along the shared normal the penalty has an inward slope t_in and an
    outward slope t_out at x_i; every λ with ‖g‖/λ in [t_in, t_out] makes x_i
    stationary.  The ratio method takes the midpoint of that slope interval.
    When ``f`` is given and ``fallback`` is on, each λ is checked with the
    independent minimization oracle and replaced by a line search if the
    recovery misses x_i.
    Returns (LambdaSchedule, list of TangencyCertificate).
    """
    lambdas, methods, joint, bounds, certs = [], [], [], [], []
    for i in range(len(path)):
        x, g = path.points[i], path.subgradients[i]
        j, resid = _shell_of(model, x)
        gn = float(np.linalg.norm(g))
        if gn == 0.0:
            lambdas.append(1.0)
            methods.append("joint-minimizer")
            joint.append(True)
            bounds.append((0.0, 0.0))
            certs.append(TangencyCertificate(i, j, [0.0, 0.0], [0.0, 0.0], math.pi, resid, 1.0))
            continue
        t_in, t_out = one_sided_slopes(model, x, g, tol.lambda_fd_step)
        if not t_out > 0:
            raise BuildError(f"penalty does not increase outward at point {i} (slope {t_out:.3g})")
        lam = gn / (0.5 * (max(t_in, 0.0) + t_out))
        P = model.shells[j].polygon
        e = np.argmin(np.abs(P.normals @ x - P.offsets))
        n_psi = P.normals[e]
        angle = float(np.arccos(np.clip(-(n_psi @ g) / gn, -1.0, 1.0)))
        angle = math.pi - angle  # angle between ψ-normal and g; π when opposed
        method = "ratio"
        if f is not None and fallback:
            from .verifier import line_search_lambda, recovery_distance
            dist = recovery_distance(f, model, lam, x, bbox=bbox, tol=tol)
            if dist > tol.verify:
                lam = line_search_lambda(f, model, x, lam, bbox=bbox, tol=tol)
                method = "line-search"
        if not lam > 0:
            raise BuildError(f"non-positive tuner at point {i}")
        lambdas.append(float(lam))
        methods.append(method)
        joint.append(False)
        bounds.append((float(t_in), float(t_out)))
        certs.append(TangencyCertificate(i, j, n_psi.tolist(), list(map(float, g)), angle, resid, float(lam)))
    return LambdaSchedule(lambdas, methods, joint, bounds), certs
