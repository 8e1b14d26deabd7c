"""Path → check → build → verify, as one call."""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .convex_core import make_oracle
from .errors import ConfigError
from .pathkit import (
    AdmissibilityReport,
    PathGroups,
    SearchPath,
    check_admissibility,
    group_by_value,
    ingest_path,
    run_gradient_descent,
    sort_path,
)
from .penalty_builder import LambdaSchedule, PenaltyModel, build_model, extract_lambdas
from .tolerances import DEFAULT, Tolerances
from .verifier import VerificationReport, verify_schedule

log = logging.getLogger(__name__)


@dataclass
class PipelineResult:
    path: SearchPath
    groups: PathGroups | None = None
    report: AdmissibilityReport | None = None
    model: PenaltyModel | None = None
    schedule: LambdaSchedule | None = None
    certificates: list | None = None
    verification: VerificationReport | None = None

    def penalty_dict(self) -> dict:
        return {
            "model": self.model.to_dict(),
            "schedule": self.schedule.to_dict(),
            "certificates": [c.to_dict() for c in self.certificates],
        }


def make_path(loss, source: dict, base_dir=None) -> SearchPath:
    """Generate or load a path from a config ``path`` block."""
    from pathlib import Path

    from .artifacts import path_from_dict, read_json

    f = make_oracle(loss)
    if "algorithm" in source:
        if source["algorithm"] != "gradient-descent":
            raise ConfigError(f"unknown path algorithm {source['algorithm']!r}")
        try:
            return run_gradient_descent(f, source["x0"], float(source["step"]), int(source["iters"]))
        except KeyError as exc:
            raise ConfigError(f"gradient-descent path needs {exc}") from exc
    if "points" in source:
        return ingest_path(source["points"], f)
    if "file" in source:
        p = Path(source["file"])
        if base_dir is not None and not p.is_absolute():
            p = Path(base_dir) / p
        return path_from_dict(read_json(p), loss)
    raise ConfigError("path block needs 'algorithm', 'points' or 'file'")


def check(path: SearchPath, sort: bool = False, bbox=None, tol: Tolerances = DEFAULT):
    """Grouping plus admissibility; PathOrderError propagates for unsorted paths."""
    if sort:
        path = sort_path(path)
    groups = group_by_value(path, tol.group_f)
    return path, groups, check_admissibility(path, groups, bbox, tol)


def run_pipeline(path: SearchPath, f=None, sort: bool = False, bbox=None,
                 tol: Tolerances = DEFAULT, verify_tol: float | None = None,
                 seed: int = 0, verify: bool = True) -> PipelineResult:
    f = make_oracle(path.loss) if f is None else f
    path, groups, report = check(path, sort, bbox, tol)
    res = PipelineResult(path, groups, report)
    if not report.admissible:
        return res
    res.model = build_model(path, groups, report, tol)
    res.schedule, res.certificates = extract_lambdas(res.model, path, f, tol)
    if verify:
        res.verification = verify_schedule(path, res.model, res.schedule,
                                           tol.verify if verify_tol is None else verify_tol,
                                           f, seed=seed, tolerances=tol)
        log.info("max recovery distance %.3g", res.verification.max_distance)
    return res


def psi_along_path(model: PenaltyModel, path: SearchPath) -> np.ndarray:
    return model.values(path.points)
