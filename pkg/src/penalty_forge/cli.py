"""penalty-forge command line.

Exit codes: 0 ok, 1 config error, 2 inadmissible path, 3 verification
failure, 4 build failure.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from . import artifacts
from .convex_core import make_oracle
from .errors import (
    BuildError,
    ConfigError,
    DivergenceError,
    GeometryError,
    PathOrderError,
    VerificationError,
)
from .penalty_builder import LambdaSchedule, PenaltyModel
from .pipeline import check, make_path, run_pipeline
from .svg import build_scene, render_svg
from .tolerances import DEFAULT
from .verifier import verify_schedule

EXIT_OK, EXIT_CONFIG, EXIT_INADMISSIBLE, EXIT_VERIFY, EXIT_BUILD = 0, 1, 2, 3, 4

log = logging.getLogger("penalty_forge")


def _setup_logging():
    level = os.environ.get("PENALTY_FORGE_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")


def _config(args) -> artifacts.RunConfig:
    if args.config is None:
        raise ConfigError("--config is required")
    cfg = artifacts.load_config(args.config)
    if args.sort:
        cfg.sort = True
    if args.tol is not None:
        cfg.tol = args.tol
    if args.seed is not None:
        cfg.seed = args.seed
    if args.out is not None:
        cfg.out = args.out
    return cfg


def _outdir(cfg) -> Path:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_check(out: Path, path, groups, report):
    artifacts.write_json(out / "path.json", artifacts.path_to_dict(path))
    data = report.to_dict()
    if groups is not None:
        data["groups"] = [list(g) for g in groups.groups]
    artifacts.write_json(out / "admissibility.json", data)


def _order_failure(out: Path, path, exc: PathOrderError) -> int:
    artifacts.write_json(out / "path.json", artifacts.path_to_dict(path))
    artifacts.write_json(out / "admissibility.json", {
        "verdict": "rejected",
        "reason": str(exc),
        "order_violation": exc.indices,
    })
    print(f"inadmissible: {exc}", file=sys.stderr)
    return EXIT_INADMISSIBLE


def cmd_check(args) -> int:
    if args.config is not None:
        cfg = _config(args)
        path = make_path(cfg.loss.to_dict(), cfg.path, cfg.base_dir)
        sort, bbox, tol, out = cfg.sort, cfg.bbox_tuple(), cfg.tolerances, _outdir(cfg)
    else:
        if args.path_file is None or args.loss_file is None:
            raise ConfigError("check needs --config or PATH_FILE LOSS_FILE")
        path = artifacts.path_from_dict(artifacts.read_json(args.path_file),
                                        artifacts.read_json(args.loss_file))
        sort, bbox, out = args.sort, None, Path(args.out or ".")
        out.mkdir(parents=True, exist_ok=True)
        tol = DEFAULT
    try:
        path, groups, report = check(path, sort, bbox, tol)
    except PathOrderError as exc:
        return _order_failure(out, path, exc)
    _write_check(out, path, groups, report)
    print(f"{report.verdict}" + (f": {report.reason}" if report.reason else ""))
    return EXIT_OK if report.admissible else EXIT_INADMISSIBLE


def _run(args, verify: bool) -> int:
    cfg = _config(args)
    out = _outdir(cfg)
    f = make_oracle(cfg.loss)
    path = make_path(cfg.loss.to_dict(), cfg.path, cfg.base_dir)
    try:
        res = run_pipeline(path, f, cfg.sort, cfg.bbox_tuple(), cfg.tolerances, cfg.verify_tol,
                           cfg.seed, verify=verify)
    except PathOrderError as exc:
        return _order_failure(out, path, exc)
    _write_check(out, res.path, res.groups, res.report)
    if not res.report.admissible:
        print(f"inadmissible: {res.report.reason}", file=sys.stderr)
        return EXIT_INADMISSIBLE
    artifacts.write_json(out / "penalty.json", res.penalty_dict())
    if not verify:
        print(f"built {len(res.model.shells)} shells")
        return EXIT_OK
    artifacts.write_json(out / "verification.json", res.verification.to_dict())
    render_svg(build_scene(res.path, f, res.model), out / "scene.svg")
    print(f"max recovery distance {res.verification.max_distance:.3g} (tol {res.verification.tol:g})")
    return EXIT_OK if res.verification.passed else EXIT_VERIFY


def cmd_run(args) -> int:
    return _run(args, verify=True)


def cmd_build(args) -> int:
    return _run(args, verify=False)


def _load_artifacts(d: Path):
    path = artifacts.path_from_dict(artifacts.read_json(d / "path.json"))
    pen = artifacts.read_json(d / "penalty.json")
    try:
        model = PenaltyModel.from_dict(pen["model"])
        schedule = LambdaSchedule.from_dict(pen["schedule"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"{d / 'penalty.json'} is malformed: {exc}") from exc
    return path, model, schedule


def cmd_verify(args) -> int:
    d = Path(args.dir or args.out or ".")
    path, model, schedule = _load_artifacts(d)
    tol = args.tol if args.tol is not None else DEFAULT.verify
    rep = verify_schedule(path, model, schedule, tol, seed=args.seed or 0)
    artifacts.write_json(d / "verification.json", rep.to_dict())
    print(f"max recovery distance {rep.max_distance:.3g} (tol {tol:g})")
    return EXIT_OK if rep.passed else EXIT_VERIFY


def cmd_plot(args) -> int:
    d = Path(args.dir or args.out or ".")
    path = artifacts.path_from_dict(artifacts.read_json(d / "path.json"))
    model = None
    if (d / "penalty.json").exists():
        model = _load_artifacts(d)[1]
    render_svg(build_scene(path, make_oracle(path.loss), model), d / "scene.svg")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="run configuration (JSON)")
    common.add_argument("--sort", action="store_true", help="relabel iterates by decreasing f")
    common.add_argument("--tol", type=float, help="recovery tolerance (default 1e-2)")
    common.add_argument("--seed", type=int, help="seed for randomized starts")
    common.add_argument("--out", help="output directory")

    p = argparse.ArgumentParser(prog="penalty-forge",
                                description="Build a convex penalty that reproduces an optimization path.")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("run", parents=[common], help="path, check, build, verify, plot").set_defaults(fn=cmd_run)
    sp = sub.add_parser("check", parents=[common], help="admissibility only")
    sp.add_argument("path_file", nargs="?")
    sp.add_argument("loss_file", nargs="?")
    sp.set_defaults(fn=cmd_check)
    sub.add_parser("build", parents=[common], help="check and build, no verification").set_defaults(fn=cmd_build)
    for name, fn, text in (("verify", cmd_verify, "re-verify artifacts in a directory"),
                           ("plot", cmd_plot, "re-render scene.svg from artifacts")):
        sp = sub.add_parser(name, parents=[common], help=text)
        sp.add_argument("dir", nargs="?")
        sp.set_defaults(fn=fn)
    return p


def main(argv=None) -> int:
    _setup_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (ConfigError, DivergenceError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except VerificationError as exc:
        print(f"verification error: {exc}", file=sys.stderr)
        return EXIT_VERIFY
    except (BuildError, GeometryError) as exc:
        print(f"build error: {exc}", file=sys.stderr)
        return EXIT_BUILD


if __name__ == "__main__":
    sys.exit(main())
