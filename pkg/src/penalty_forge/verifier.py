"""Independent minimization oracle for f + λψ and continuous-path discretization.

Nothing here looks inside the penalty: ψ is any vectorized callable.  The
oracle is a shrinking grid search followed by Nelder-Mead restarts, which is
slow but sound for convex objectives.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.optimize import minimize, minimize_scalar

from .convex_core import SubgradientOracle, as_point, make_oracle
from .errors import BuildError, ConfigError, VerificationError
from .geometry2d import ConvexPolygon
from .pathkit import SearchPath, check_admissibility, group_by_value, ingest_path
from .tolerances import DEFAULT, Tolerances

log = logging.getLogger(__name__)


@dataclass
class MinimizeResult:
    argmin: np.ndarray
    value: float
    iterations: int
    converged: bool
    simplex_diameter: float = math.inf
    stage_values: list = field(default_factory=list)  # incumbent value after each stage

    def to_dict(self) -> dict:
        return {
            "argmin": self.argmin.tolist(),
            "value": self.value,
            "iterations": self.iterations,
            "converged": self.converged,
            "simplex_diameter": self.simplex_diameter,
        }


@dataclass
class VerificationReport:
    rows: list
    tol: float
    approximation_error: float | None = None

    @property
    def max_distance(self) -> float:
        return max((r["distance"] for r in self.rows), default=0.0)

    @property
    def passed(self) -> bool:
        ok = all(r["pass"] for r in self.rows)
        return ok and (self.approximation_error is None or self.approximation_error < self.tol_approx)

    # bound for the continuous-path check; set by approximate_continuous
    tol_approx: float = math.inf

    def to_dict(self) -> dict:
        out = {"rows": self.rows, "max_distance": self.max_distance, "tol": self.tol, "passed": self.passed}
        if self.approximation_error is not None:
            out["approximation_error"] = self.approximation_error
            out["approximation_bound"] = self.tol_approx
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "VerificationReport":
        rep = cls(list(data["rows"]), float(data["tol"]), data.get("approximation_error"))
        if "approximation_bound" in data:
            rep.tol_approx = float(data["approximation_bound"])
        return rep


@dataclass
class ContinuousPath:
    sampler: Callable  # t in [0, 1] -> point
    lipschitz: float | None = None

    def __call__(self, t) -> np.ndarray:
        return as_point(self.sampler(float(t)))


# ---------------------------------------------------------------------------
# Minimization oracle
# ---------------------------------------------------------------------------


def _box_bounds(bbox) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(bbox, ConvexPolygon):
        V = bbox.vertices
        return V.min(axis=0), V.max(axis=0)
    center, half = bbox
    center = as_point(center, 2)
    half = np.broadcast_to(np.asarray(half, dtype=float), (2,))
    return center - half, center + half


def penalty_bbox(psi, points=None) -> tuple[np.ndarray, np.ndarray]:
    """Box around the outermost shell (and any extra points), padded by half its size."""
    pts = []
    if hasattr(psi, "shells"):
        pts.append(psi.shells[-1].polygon.vertices)
    if points is not None:
        pts.append(np.atleast_2d(points))
    P = np.vstack(pts)
    lo, hi = P.min(axis=0), P.max(axis=0)
    half = 0.75 * (hi - lo).max() + 1.0
    return 0.5 * (lo + hi), np.array([half, half])


def _values(func, X):
    if hasattr(func, "values"):
        return np.asarray(func.values(X), dtype=float)
    return np.asarray(func(X), dtype=float)


def _simplex_diameter(S):
    d = S[:, None, :] - S[None, :, :]
    return float(np.sqrt(np.max(np.einsum("ijk,ijk->ij", d, d))))


def minimize_penalized(f, psi, lam: float, x_init, bbox=None,
                       tol: Tolerances = DEFAULT, max_restarts: int = 20) -> MinimizeResult:
    """Minimize f + lam·psi by a shrinking grid and Nelder-Mead restarts.

    ``f`` and ``psi`` are evaluated on batches of rows.  The first grid covers
    ``bbox``; an incumbent on its edge means the box does not contain the
    minimizer and raises VerificationError.
    """
    if not lam > 0:
        raise ConfigError(f"λ must be positive, got {lam}")
    x_init = as_point(x_init, 2)
    if bbox is None:
        bbox = penalty_bbox(psi, x_init[None, :])
    lo, hi = _box_bounds(bbox)

    def obj(X):
        return _values(f, X) + lam * _values(psi, X)

    best = x_init
    best_val = float(obj(best[None, :])[0])
    stages = []
    n = tol.grid_n
    cell = None
    for level in range(tol.grid_levels):
        xs = np.linspace(lo[0], hi[0], n)
        ys = np.linspace(lo[1], hi[1], n)
        GX, GY = np.meshgrid(xs, ys, indexing="ij")
        X = np.column_stack([GX.ravel(), GY.ravel()])
        V = obj(X)
        k = int(np.argmin(V))
        if level == 0:
            i, j = divmod(k, n)
            if i in (0, n - 1) or j in (0, n - 1):
                raise VerificationError(
                    f"box too small: grid minimum at {X[k].tolist()} lies on the box edge")
        if V[k] < best_val:
            best, best_val = X[k], float(V[k])
        stages.append(best_val)
        cell = (hi - lo) / (n - 1)
        half = 0.5 * (hi - lo) / tol.grid_shrink
        lo, hi = best - half, best + half

    step = float(max(cell.max(), 1e-6))
    iters = 0
    diam = math.inf
    x = best
    for _ in range(max_restarts):
        simplex = np.array([x, x + [step, 0.0], x + [0.0, step]])
        res = minimize(lambda z: float(obj(z[None, :])[0]), x, method="Nelder-Mead",
                       options={"initial_simplex": simplex, "xatol": 0.1 * tol.simplex_diameter,
                                "fatol": 0.0, "maxiter": 4000, "maxfev": 8000})
        iters += int(res.nit)
        S = res.final_simplex[0]
        diam = _simplex_diameter(S)
        x_new = np.asarray(res.x, dtype=float)
        moved = float(np.linalg.norm(x_new - x))
        x = x_new
        if diam < tol.simplex_diameter and moved < tol.simplex_diameter:
            break
        step = max(10.0 * diam, 10.0 * tol.simplex_diameter, moved)
    val = float(obj(x[None, :])[0])
    if val > best_val:
        # never hand back something worse than the grid incumbent
        x, val = best, best_val
    stages.append(val)
    return MinimizeResult(np.array(x), val, iters, diam < tol.simplex_diameter, diam, stages)


def recovery_distance(f, psi, lam, x, bbox=None, tol: Tolerances = DEFAULT) -> float:
    r = minimize_penalized(f, psi, lam, x, bbox, tol)
    return float(np.linalg.norm(r.argmin - as_point(x)))


def line_search_lambda(f, psi, x, lam0: float, bbox=None, tol: Tolerances = DEFAULT) -> float:
    """λ in [lam0/10, 10·lam0] whose penalized minimizer lands closest to x."""
    res = minimize_scalar(lambda s: recovery_distance(f, psi, math.exp(s), x, bbox, tol),
                          bounds=(math.log(lam0) - math.log(10), math.log(lam0) + math.log(10)),
                          method="bounded", options={"xatol": 1e-3})
    return float(math.exp(res.x))


def _loss_of(path: SearchPath, f):
    if f is not None:
        return f
    if path.loss is None:
        raise ConfigError("no loss available to verify against")
    return make_oracle(path.loss)


def verify_schedule(path: SearchPath, model, schedule, tol: float = DEFAULT.verify, f=None,
                    bbox=None, seed: int = 0, tolerances: Tolerances = DEFAULT) -> VerificationReport:
    """Recover every path point from a near and a far start."""
    lambdas = schedule.lambdas if hasattr(schedule, "lambdas") else list(schedule)
    if len(lambdas) != len(path):
        raise ConfigError(f"{len(lambdas)} tuners for {len(path)} path points")
    f = _loss_of(path, f)
    if bbox is None:
        bbox = penalty_bbox(model, path.points)
    rng = np.random.default_rng(seed)
    anchor = np.asarray(getattr(model, "anchor", path.points.mean(axis=0)), dtype=float)
    reach = float(np.max(np.linalg.norm(path.points - anchor, axis=1))) + 1.0
    rows = []
    for i, lam in enumerate(lambdas):
        x = path.points[i]
        near = minimize_penalized(f, model, lam, x, bbox, tolerances)
        far_init = anchor + rng.normal(size=2) * reach
        far = minimize_penalized(f, model, lam, far_init, bbox, tolerances)
        dn = float(np.linalg.norm(near.argmin - x))
        df = float(np.linalg.norm(far.argmin - x))
        rows.append({
            "index": i,
            "lambda": float(lam),
            "near_argmin": near.argmin.tolist(),
            "near_distance": dn,
            "far_argmin": far.argmin.tolist(),
            "far_distance": df,
            "distance": max(dn, df),
            "converged": bool(near.converged and far.converged),
            "pass": bool(max(dn, df) < tol),
        })
        log.debug("point %d: λ=%.6g near %.3g far %.3g", i, lam, dn, df)
    return VerificationReport(rows, float(tol))


# ---------------------------------------------------------------------------
# Continuous paths
# ---------------------------------------------------------------------------

_SAMPLES = 20
_MAX_KNOTS = 100_000


def _interval_ok(cp, knot_pt, t0, t1, eps):
    ts = t0 + (t1 - t0) * np.arange(1, _SAMPLES + 1) / _SAMPLES
    return all(np.linalg.norm(cp(t) - knot_pt) < eps for t in ts)


def _partition(cp: ContinuousPath, eps: float) -> int:
    m = 1 if cp.lipschitz is None else max(1, math.ceil(cp.lipschitz / eps))
    while m <= _MAX_KNOTS:
        knots = np.arange(1, m + 1) / m
        if all(_interval_ok(cp, cp(t1), t1 - 1.0 / m, t1, eps) for t1 in knots):
            return m
        m *= 2
    raise BuildError(f"no partition with at most {_MAX_KNOTS} knots keeps every piece within {eps}")


def _coarsen(cp: ContinuousPath, m: int, eps: float) -> np.ndarray:
    """Greedily merge uniform pieces while every sample stays within eps of the right knot."""
    fine = np.arange(1, m + 1) / m
    knots_pt = np.array([cp(t) for t in fine])
    # samples of piece j are t_{j-1} + kΔ/20, k = 1..20 (the last one is the knot itself)
    offs = np.arange(1, _SAMPLES + 1) / _SAMPLES / m
    S = np.array([[cp(t0 + o) for o in offs] for t0 in fine - 1.0 / m])  # (m, 20, dim)
    # a point between two samples is within half their spacing of one of them
    # (up to curvature), so merged pieces keep that much slack below eps
    flat = np.vstack([cp(0.0)[None, :], S.reshape(-1, S.shape[-1])])
    gaps = np.linalg.norm(np.diff(flat, axis=0), axis=1).reshape(m, _SAMPLES)
    slack = 0.5 * gaps
    keep = []
    start = 0
    while start < m:
        end = start
        while end + 1 < m:
            cand = end + 1
            d = np.linalg.norm(S[start:cand + 1] - knots_pt[cand], axis=-1) + slack[start:cand + 1]
            if not np.max(d) < eps:
                break
            end = cand
        keep.append(end)
        start = end + 1
    return fine[keep]


def discretize_continuous(cp: ContinuousPath, f: SubgradientOracle, eps: float, coarsen: bool = True):
    """Knots t_1..t_m of a partition whose pieces stay within eps of their right knot.

    A uniform grid is doubled until every piece passes (20 samples per
    piece); adjacent pieces are then merged greedily while the merged piece
    still passes, so slow stretches of the path do not pile up knots.
    Returns the SearchPath of knot points (parameter values in ``times``).
    A knot where f is stationary, inside a path that is not stationary
    elsewhere, is pulled back along its piece to the nearest sample that is
    not stationary and still covers the piece.
    """
    if not eps > 0:
        raise ConfigError("eps must be positive")
    m = _partition(cp, eps)
    ts = _coarsen(cp, m, eps) if coarsen else np.arange(1, m + 1) / m
    pts = np.array([cp(t) for t in ts])
    grads = np.array([f.subgrad(p) for p in pts])
    still = np.linalg.norm(grads, axis=1) == 0.0
    if still.any() and not still.all():
        for j in np.flatnonzero(still):
            t0 = ts[j - 1] if j > 0 else 0.0
            width = ts[j] - t0
            for k in range(1, 40):
                t = ts[j] - width * 2.0 ** (-k - 4)
                p = cp(t)
                covers = _interval_ok(cp, p, t0, t, eps) and _interval_ok(cp, p, t, ts[j], eps)
                if np.linalg.norm(f.subgrad(p)) > 0 and covers:
                    ts[j], pts[j] = t, p
                    break
            else:
                raise BuildError(f"knot {j} sits on a stationary point and cannot be moved")
    return ingest_path(pts, f, source="continuous", times=ts)


def approximate_continuous(cp: ContinuousPath, f: SubgradientOracle, eps: float,
                           tol: float = DEFAULT.verify, seed: int = 0,
                           tolerances: Tolerances = DEFAULT):
    """Discretize, build, verify, then check the dense piecewise-constant approximation."""
    from .penalty_builder import build_model, extract_lambdas

    path = discretize_continuous(cp, f, eps)
    groups = group_by_value(path, tolerances.group_f)
    report = check_admissibility(path, groups, tol=tolerances)
    if not report.admissible:
        raise BuildError(f"discretized path is not admissible: {report.reason}")
    model = build_model(path, groups, report, tolerances)
    schedule, _ = extract_lambdas(model, path, f, tolerances)
    ver = verify_schedule(path, model, schedule, tol, f, seed=seed, tolerances=tolerances)

    recovered = [np.array(r["near_argmin"]) for r in ver.rows]
    ts = path.times
    m = len(ts)
    err = 0.0
    prev = 0.0
    for j in range(m):
        # the first piece also owns t = 0
        k0 = 0 if j == 0 else 1
        for k in range(k0, _SAMPLES + 1):
            t = prev + (ts[j] - prev) * k / _SAMPLES
            err = max(err, float(np.linalg.norm(cp(t) - recovered[j])))
        prev = ts[j]
    if ts[-1] < 1.0:
        # a pulled-back last knot still owns the tail of the interval
        for k in range(1, _SAMPLES + 1):
            t = ts[-1] + (1.0 - ts[-1]) * k / _SAMPLES
            err = max(err, float(np.linalg.norm(cp(t) - recovered[-1])))
    ver.approximation_error = err
    ver.tol_approx = eps + tol
    return model, schedule, ver
