"""JSON artifacts and run configuration."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .convex_core import LossSpec, make_oracle
from .errors import ConfigError
from .pathkit import SearchPath, ingest_path
from .tolerances import Tolerances


def _plain(obj):
    """Recursively convert numpy scalars/arrays and non-finite floats to JSON-safe values."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isfinite(v):
            return v
        return "nan" if math.isnan(v) else ("inf" if v > 0 else "-inf")
    return obj


def dumps(obj) -> str:
    # floats use Python's shortest round-trip repr, so loads(dumps(x)) is exact
    return json.dumps(_plain(obj), indent=2, allow_nan=False) + "\n"


def write_json(path, obj) -> None:
    Path(path).write_text(dumps(obj), encoding="utf-8")


def read_json(path):
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError as exc:
        raise ConfigError(f"no such file: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: malformed JSON ({exc})") from exc


def path_from_dict(data: dict, loss: LossSpec | dict | None = None) -> SearchPath:
    """Rebuild a SearchPath from its points; f-values and subgradients are recomputed."""
    if not isinstance(data, dict) or "points" not in data:
        raise ConfigError("a path file must be an object with 'points'")
    spec = loss if loss is not None else data.get("loss")
    if spec is None:
        raise ConfigError("path has no loss; pass one explicitly")
    f = make_oracle(spec)
    times = data.get("times")
    return ingest_path(data["points"], f, source=data.get("source", "ingested"),
                       times=None if times is None else np.asarray(times, dtype=float))


def path_to_dict(path: SearchPath) -> dict:
    out = path.to_dict()
    out["f_values"] = path.f_values.tolist()
    out["subgradients"] = path.subgradients.tolist()
    return out


@dataclass
class RunConfig:
    """Everything a ``run`` needs.

    ``path`` is either ``{"algorithm": "gradient-descent", "x0", "step", "iters"}``,
    ``{"points": [...]}`` or ``{"file": "path.json"}`` (relative to the config).
    """

    loss: LossSpec
    path: dict
    tolerances: Tolerances = field(default_factory=Tolerances)
    bbox: dict | None = None  # {"center": [x, y], "half_width": h}
    out: str = "out"
    seed: int = 0
    tol: float | None = None
    sort: bool = False
    base_dir: Path = field(default_factory=Path.cwd, repr=False)

    KEYS = ("loss", "path", "tolerances", "bbox", "out", "seed", "tol", "sort")

    @classmethod
    def from_dict(cls, data: dict, base_dir=None) -> "RunConfig":
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        unknown = set(data) - set(cls.KEYS)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        for key in ("loss", "path"):
            if key not in data:
                raise ConfigError(f"config is missing {key!r}")
        if not isinstance(data["path"], dict):
            raise ConfigError("'path' must be an object")
        bbox = data.get("bbox")
        if bbox is not None and not ({"center", "half_width"} <= set(bbox)):
            raise ConfigError("bbox needs 'center' and 'half_width'")
        try:
            tol = Tolerances.from_dict(data.get("tolerances", {}))
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad tolerances: {exc}") from exc
        return cls(
            loss=LossSpec.from_dict(data["loss"]),
            path=dict(data["path"]),
            tolerances=tol,
            bbox=bbox,
            out=str(data.get("out", "out")),
            seed=int(data.get("seed", 0)),
            tol=None if data.get("tol") is None else float(data["tol"]),
            sort=bool(data.get("sort", False)),
            base_dir=Path(base_dir) if base_dir is not None else Path.cwd(),
        )

    def to_dict(self) -> dict:
        out = {
            "loss": self.loss.to_dict(),
            "path": self.path,
            "tolerances": self.tolerances.to_dict(),
            "out": self.out,
            "seed": self.seed,
            "sort": self.sort,
        }
        if self.bbox is not None:
            out["bbox"] = self.bbox
        if self.tol is not None:
            out["tol"] = self.tol
        return out

    @property
    def verify_tol(self) -> float:
        return self.tolerances.verify if self.tol is None else self.tol

    def bbox_tuple(self):
        if self.bbox is None:
            return None
        return np.asarray(self.bbox["center"], dtype=float), float(self.bbox["half_width"])


def load_config(path) -> RunConfig:
    path = Path(path)
    return RunConfig.from_dict(read_json(path), base_dir=path.parent)
