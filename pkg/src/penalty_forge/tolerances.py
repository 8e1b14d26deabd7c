"""Numerical tolerances shared by every stage of the pipeline.

All geometric and verification epsilons live here so that a run can be
reproduced (and tightened or loosened) from a single config block.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, fields, replace


@dataclass(frozen=True)
class Tolerances:
    # geometry
    collinear: float = 1e-12
    containment: float = 1e-9
    interior: float = 1e-12
    # path conditions
    group_f: float = 0.0
    hyperplane_angle: float = 1e-8
    hyperplane_offset: float = 1e-8
    # builder
    tangency: float = 1e-6
    disk_k: int = 32
    arc_k: int = 8
    lambda_fd_step: float = 1e-5
    # oracles
    fd_step: float = 1e-6
    # verifier
    verify: float = 1e-2
    grid_n: int = 64
    grid_levels: int = 3
    grid_shrink: float = 8.0
    simplex_diameter: float = 1e-8
    bisection_iters: int = 60

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict | None) -> "Tolerances":
        if not data:
            return cls()
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown tolerance keys: {sorted(unknown)}")
        return replace(cls(), **data)


DEFAULT = Tolerances()
