"""Convex losses as value/subgradient oracles, and halfspace primitives."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import ConfigError, GeometryError
from .tolerances import DEFAULT


def as_point(x, dim: int | None = None) -> np.ndarray:
    p = np.asarray(x, dtype=float).reshape(-1)
    if dim is not None and p.shape[0] != dim:
        raise ConfigError(f"expected a point of dimension {dim}, got {p.shape[0]}")
    if not np.all(np.isfinite(p)):
        raise ConfigError("point coordinates must be finite")
    return p


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=float)
    arr.setflags(write=False)
    return arr


# ---------------------------------------------------------------------------
# Loss specifications
# ---------------------------------------------------------------------------

LOSS_KINDS = ("quadratic", "shifted-quadratic", "logistic", "custom-tabulated")


@dataclass(frozen=True)
class LossSpec:
    """Serializable description of a convex loss.

    ``quadratic``          ½‖Ax − b‖², needs ``A`` and ``b``.
    ``shifted-quadratic``  ½‖x − c‖², needs ``c``.
    ``logistic``           Σ log(1 + exp(−y⟨w, z⟩)); ``data`` rows are ``[z..., y]``
                           with labels in {−1, +1} (0 is read as −1).
    ``custom-tabulated``   max_k ⟨a_k, x⟩ + β_k; ``data`` rows are ``[a_k..., β_k]``.
                           Subgradients come from central finite differences.
    """

    kind: str
    A: list | None = None
    b: list | None = None
    c: list | None = None
    data: list | None = None

    def to_dict(self) -> dict:
        out = {"kind": self.kind}
        for key in ("A", "b", "c", "data"):
            val = getattr(self, key)
            if val is not None:
                out[key] = np.asarray(val, dtype=float).tolist()
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "LossSpec":
        if not isinstance(data, dict) or "kind" not in data:
            raise ConfigError("loss spec must be an object with a 'kind' field")
        unknown = set(data) - {"kind", "A", "b", "c", "data"}
        if unknown:
            raise ConfigError(f"unknown loss fields: {sorted(unknown)}")
        return cls(
            kind=data["kind"],
            A=data.get("A"),
            b=data.get("b"),
            c=data.get("c"),
            data=data.get("data"),
        )


# ---------------------------------------------------------------------------
# Oracles
# ---------------------------------------------------------------------------


class SubgradientOracle:
    """A proper convex function queried pointwise.

    Subclasses implement ``value`` and ``subgrad``; ``values`` evaluates a
    batch of points (rows) and may be overridden with a vectorized version.
    """

    dimension: int
    spec: LossSpec | None = None
    # Lipschitz constant of the gradient when known (used for safe GD steps).
    smoothness: float | None = None

    def value(self, x) -> float:
        raise NotImplementedError

    def subgrad(self, x) -> np.ndarray:
        raise NotImplementedError

    def in_domain(self, x) -> bool:
        # every shipped kind has dom f = R^n
        return bool(np.all(np.isfinite(np.asarray(x, dtype=float))))

    def values(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return np.array([self.value(x) for x in X])

    def __call__(self, x) -> float:
        return self.value(x)


class QuadraticLoss(SubgradientOracle):
    def __init__(self, A, b, spec=None):
        self.A = _frozen(A)
        self.b = _frozen(b)
        if self.A.ndim != 2 or self.b.ndim != 1 or self.A.shape[0] != self.b.shape[0]:
            raise ConfigError(f"quadratic loss: A {self.A.shape} and b {self.b.shape} are inconsistent")
        self.dimension = self.A.shape[1]
        self.spec = spec
        self.smoothness = float(np.linalg.norm(self.A.T @ self.A, 2))

    def value(self, x):
        r = self.A @ as_point(x, self.dimension) - self.b
        return 0.5 * float(r @ r)

    def values(self, X):
        R = np.atleast_2d(X) @ self.A.T - self.b
        return 0.5 * np.einsum("ij,ij->i", R, R)

    def subgrad(self, x):
        return self.A.T @ (self.A @ as_point(x, self.dimension) - self.b)

    def minimizer(self):
        return np.linalg.lstsq(self.A, self.b, rcond=None)[0]


class ShiftedQuadraticLoss(SubgradientOracle):
    def __init__(self, c, spec=None):
        self.c = _frozen(c)
        if self.c.ndim != 1 or self.c.size == 0:
            raise ConfigError("shifted-quadratic loss needs a nonempty vector c")
        self.dimension = self.c.shape[0]
        self.spec = spec
        self.smoothness = 1.0

    def value(self, x):
        d = as_point(x, self.dimension) - self.c
        return 0.5 * float(d @ d)

    def values(self, X):
        D = np.atleast_2d(X) - self.c
        return 0.5 * np.einsum("ij,ij->i", D, D)

    def subgrad(self, x):
        return as_point(x, self.dimension) - self.c

    def minimizer(self):
        return np.array(self.c)


class LogisticLoss(SubgradientOracle):
    def __init__(self, data, spec=None):
        rows = np.asarray(data, dtype=float)
        if rows.ndim != 2 or rows.shape[1] < 2 or rows.shape[0] == 0:
            raise ConfigError("logistic loss needs data rows [z..., y]")
        y = rows[:, -1]
        if not np.all(np.isin(y, (-1.0, 0.0, 1.0))):
            raise ConfigError("logistic labels must be in {-1, 0, +1}")
        self.Z = _frozen(rows[:, :-1])
        self.y = _frozen(np.where(y == 0.0, -1.0, y))
        self.dimension = self.Z.shape[1]
        self.spec = spec
        self.smoothness = 0.25 * float(np.linalg.norm(self.Z, 2) ** 2)

    def value(self, x):
        m = self.y * (self.Z @ as_point(x, self.dimension))
        return float(np.sum(np.logaddexp(0.0, -m)))

    def values(self, X):
        M = (np.atleast_2d(X) @ self.Z.T) * self.y
        return np.sum(np.logaddexp(0.0, -M), axis=1)

    def subgrad(self, x):
        m = self.y * (self.Z @ as_point(x, self.dimension))
        # d/dm log(1+e^{-m}) = -sigmoid(-m)
        w = -self.y * np.exp(-np.logaddexp(0.0, m))
        return self.Z.T @ w


class TabulatedLoss(SubgradientOracle):
    """Max of tabulated affine pieces; subgradient by central differences."""

    def __init__(self, data=None, func: Callable | None = None, dimension: int | None = None,
                 fd_step: float = DEFAULT.fd_step, spec=None):
        if func is None:
            rows = np.asarray(data, dtype=float)
            if rows.ndim != 2 or rows.shape[1] < 2 or rows.shape[0] == 0:
                raise ConfigError("custom-tabulated loss needs data rows [a..., beta]")
            self.slopes = _frozen(rows[:, :-1])
            self.offsets = _frozen(rows[:, -1])
            self.dimension = self.slopes.shape[1]
            self._func = None
        else:
            if dimension is None or dimension < 1:
                raise ConfigError("a callable loss needs a positive dimension")
            self._func = func
            self.dimension = int(dimension)
        self.fd_step = fd_step
        self.spec = spec

    def value(self, x):
        x = as_point(x, self.dimension)
        if self._func is not None:
            return float(self._func(x))
        return float(np.max(self.slopes @ x + self.offsets))

    def values(self, X):
        if self._func is not None:
            return super().values(X)
        return np.max(np.atleast_2d(X) @ self.slopes.T + self.offsets, axis=1)

    def subgrad(self, x):
        x = as_point(x, self.dimension)
        h = self.fd_step * (1.0 + np.linalg.norm(x))
        g = np.empty(self.dimension)
        for k in range(self.dimension):
            e = np.zeros(self.dimension)
            e[k] = h
            g[k] = (self.value(x + e) - self.value(x - e)) / (2.0 * h)
        return g


def make_oracle(spec: LossSpec | dict) -> SubgradientOracle:
    if isinstance(spec, dict):
        spec = LossSpec.from_dict(spec)
    try:
        if spec.kind == "quadratic":
            if spec.A is None or spec.b is None:
                raise ConfigError("quadratic loss needs A and b")
            return QuadraticLoss(spec.A, spec.b, spec=spec)
        if spec.kind == "shifted-quadratic":
            if spec.c is None:
                raise ConfigError("shifted-quadratic loss needs c")
            return ShiftedQuadraticLoss(spec.c, spec=spec)
        if spec.kind == "logistic":
            return LogisticLoss(spec.data, spec=spec)
        if spec.kind == "custom-tabulated":
            return TabulatedLoss(spec.data, spec=spec)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad {spec.kind} loss parameters: {exc}") from exc
    raise ConfigError(f"unknown loss kind {spec.kind!r}; expected one of {LOSS_KINDS}")


# ---------------------------------------------------------------------------
# Halfspaces
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Halfspace:
    """H⁺(anchor, normal) = {y : ⟨normal, y − anchor⟩ ≥ 0}; all of Rⁿ if normal = 0."""

    anchor: np.ndarray
    normal: np.ndarray
    degenerate: bool = field(default=False)

    def contains(self, y, tol: float = 0.0) -> bool:
        if self.degenerate:
            return True
        return float(self.normal @ (as_point(y) - self.anchor)) >= -tol

    @property
    def unit_normal(self) -> np.ndarray:
        if self.degenerate:
            raise GeometryError("degenerate halfspace has no unit normal")
        return self.normal / np.linalg.norm(self.normal)

    @property
    def offset(self) -> float:
        """b in the form ⟨unit_normal, y⟩ ≥ b."""
        return float(self.unit_normal @ self.anchor)


def halfspace_plus(x, g) -> Halfspace:
    x = as_point(x)
    g = as_point(g)
    if x.shape != g.shape:
        raise ConfigError(f"dimension mismatch: point {x.shape[0]}, normal {g.shape[0]}")
    return Halfspace(_frozen(x), _frozen(g), degenerate=bool(np.linalg.norm(g) == 0.0))


def signed_margin(h: Halfspace, y) -> float:
    """Signed distance of y from the boundary of h, positive inside."""
    if h.degenerate:
        raise GeometryError("signed margin of a degenerate halfspace is undefined")
    y = as_point(y, h.anchor.shape[0])
    return float(h.normal @ (y - h.anchor)) / float(np.linalg.norm(h.normal))
