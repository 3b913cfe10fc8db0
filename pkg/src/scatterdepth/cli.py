"""Command-line interface binding the library operations to files.

All randomness flows from the single ``--seed`` through named substreams
(directions, robust fits, search starts), so identical invocations produce
byte-identical outputs regardless of the thread count.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .analytic import (
    cauchy_scatter_depth,
    cauchy_shape_depth,
    gaussian_scatter_depth,
    gaussian_shape_depth,
)
from .data import Dataset, DirectionBudget, DirectionScheme, LocationKind, LocationSpec
from .empirical import scatter_depth
from .pipeline import DetectConfig, detect, load_windowed_csv
from .search import deepest_scatter, deepest_shape, depth_along_path
from .shape import ScaleFunctional, scale_and_shape, shape_depth
from .spd import PathKind, PathSpec, SpdMatrix

_SUBSTREAMS = {"directions": 0, "mcd": 1, "search": 2, "pairs": 3}


def _substream(seed: int, name: str) -> int:
    child = np.random.SeedSequence(entropy=seed, spawn_key=(_SUBSTREAMS[name],))
    return int(child.generate_state(1, dtype=np.uint64)[0])


def _parse_location(text: str) -> LocationSpec:
    if text == "tukey":
        return LocationSpec.tukey()
    if text == "coordmedian":
        return LocationSpec.coord_median()
    if text.startswith("fixed:"):
        theta = [float(x) for x in text[len("fixed:") :].split(",") if x.strip()]
        if not theta:
            raise ValueError("fixed location needs coordinates, e.g. fixed:0,0")
        return LocationSpec.fixed(theta)
    raise ValueError(f"unknown location {text!r}; use tukey, coordmedian or fixed:...")


def _budget(args, exact2d: bool = False) -> DirectionBudget:
    scheme = DirectionScheme.EXACT_2D if exact2d else DirectionScheme.UNIFORM_SPHERE
    return DirectionBudget(
        count=args.directions,
        seed=_substream(args.seed, "directions"),
        scheme=scheme,
    )


def _emit(args, text: str) -> None:
    if getattr(args, "output", None):
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _depth_eval_dict(evaluation) -> dict:
    return {
        "value": evaluation.value,
        "argmin_direction": [float(x) for x in evaluation.argmin_direction],
        "binding_side": evaluation.binding_side.value,
        "n_directions_used": evaluation.n_directions_used,
    }


def _cmd_depth(args) -> int:
    data = Dataset.from_csv(args.data)
    sigma = SpdMatrix.from_json(args.sigma)
    location = _parse_location(args.location)
    evaluation = scatter_depth(data, location, sigma, _budget(args, args.exact2d))
    _emit(args, json.dumps(_depth_eval_dict(evaluation), sort_keys=True) + "\n")
    return 0


def _cmd_shape_depth(args) -> int:
    data = Dataset.from_csv(args.data)
    functional = ScaleFunctional.from_name(args.scale)
    _, shape_mat = scale_and_shape(SpdMatrix.from_json(args.shape), functional)
    location = _parse_location(args.location)
    result = shape_depth(data, location, shape_mat, _budget(args))
    payload = {"value": result.value, "sigma2": result.scale, "scale": args.scale}
    _emit(args, json.dumps(payload, sort_keys=True) + "\n")
    return 0


def _cmd_deepest(args) -> int:
    data = Dataset.from_csv(args.data)
    location = _parse_location(args.location)
    budget = _budget(args)
    seed = _substream(args.seed, "search")
    if args.shape:
        result = deepest_shape(
            data,
            location,
            ScaleFunctional.from_name(args.scale),
            budget,
            seed=seed,
            threads=args.threads,
        )
    else:
        result = deepest_scatter(data, location, budget, seed=seed, threads=args.threads)
    payload = {
        "argmax": result.argmax.entries.tolist(),
        "value": result.value,
        "representative": result.representative.entries.tolist(),
        "n_near_maximizers": len(result.near_maximizers),
    }
    _emit(args, json.dumps(payload, sort_keys=True) + "\n")
    return 0


def _cmd_profile(args) -> int:
    data = Dataset.from_csv(args.data)
    path = PathSpec(
        SpdMatrix.from_json(args.a),
        SpdMatrix.from_json(args.b),
        PathKind(args.kind),
    )
    location = _parse_location(args.location)
    profile = depth_along_path(data, path, m=args.grid, location=location, dirs=_budget(args))
    lines = [f"# quasi_concave={str(profile.quasi_concave).lower()}"]
    if profile.first_violation is not None:
        lines.append(
            f"# first_violation_t={profile.first_violation[0]!r}"
            f" deficit={profile.first_violation[1]!r}"
        )
    lines.append("t,depth")
    for t, v in zip(profile.ts, profile.values):
        lines.append(f"{float(t)!r},{float(v)!r}")
    _emit(args, "\n".join(lines) + "\n")
    return 0


def _cmd_region(args) -> int:
    data = Dataset.from_csv(args.data)
    sigma = SpdMatrix.from_json(args.sigma)
    location = _parse_location(args.location)
    evaluation = scatter_depth(data, location, sigma, _budget(args, args.exact2d))
    inside = evaluation.value >= args.alpha
    _emit(args, ("true" if inside else "false") + "\n")
    return 0


def _cmd_detect(args) -> int:
    series = load_windowed_csv(args.data, min_rows=args.min_rows, window_column=args.window_column)
    location = (
        LocationKind.TUKEY_MEDIAN if args.location == "tukey" else LocationKind.COORD_MEDIAN
    )
    config = DetectConfig(
        directions=args.directions,
        seed=_substream(args.seed, "mcd"),
        location=location,
        min_rows=args.min_rows,
        threads=args.threads,
    )
    report = detect(series, config)
    prefix = args.output or "detection"
    report.to_json(prefix + ".json")
    report.to_csv(prefix + ".csv")
    flagged = sum(1 for w in report.windows if w.flags)
    sys.stdout.write(
        f"windows={len(report.windows)} flagged={flagged} "
        f"report={prefix}.json table={prefix}.csv\n"
    )
    return 0


def _cmd_oracle(args) -> int:
    sigma = SpdMatrix.from_json(args.sigma)
    if args.model == "gaussian":
        if args.shape:
            v0 = SpdMatrix.from_json(args.sigma0) if args.sigma0 else SpdMatrix(np.eye(sigma.dim))
            value = gaussian_shape_depth(v0, sigma)
        else:
            sigma0 = SpdMatrix.from_json(args.sigma0) if args.sigma0 else None
            value = gaussian_scatter_depth(sigma, sigma0)
    else:
        value = cauchy_shape_depth(sigma) if args.shape else cauchy_scatter_depth(sigma)
    _emit(args, f"{value!r}\n")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="scatterdepth",
        description="Halfspace depth for scatter, concentration and shape matrices",
    )
    parser.add_argument("--seed", type=int, default=0, help="master seed for every substream")
    parser.add_argument("--directions", type=int, default=10000, help="projection directions")
    parser.add_argument("--threads", type=int, default=1, help="worker threads")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, with_sigma=False, exact2d=False):
        p.add_argument("--data", required=True, help="observations CSV")
        if with_sigma:
            p.add_argument("--sigma", required=True, help="matrix JSON file")
        p.add_argument("--location", default="tukey", help="tukey | coordmedian | fixed:c1,c2,...")
        if exact2d:
            p.add_argument("--exact2d", action="store_true", help="exact bivariate enumeration")
        p.add_argument("--output", default=None, help="output file (stdout when omitted)")

    p = sub.add_parser("depth", help="scatter halfspace depth of a matrix")
    common(p, with_sigma=True, exact2d=True)
    p.set_defaults(func=_cmd_depth)

    p = sub.add_parser("shape-depth", help="profile shape depth of a matrix")
    common(p)
    p.add_argument("--shape", required=True, help="matrix JSON file")
    p.add_argument("--scale", default="det", choices=[s.value for s in ScaleFunctional])
    p.set_defaults(func=_cmd_shape_depth)

    p = sub.add_parser("deepest", help="search the deepest scatter or shape matrix")
    common(p)
    p.add_argument("--shape", action="store_true", help="search over unit-scale shapes")
    p.add_argument("--scale", default="det", choices=[s.value for s in ScaleFunctional])
    p.set_defaults(func=_cmd_deepest)

    p = sub.add_parser("profile", help="depth along a path between two matrices")
    common(p)
    p.add_argument("--a", required=True, help="start matrix JSON")
    p.add_argument("--b", required=True, help="end matrix JSON")
    p.add_argument("--kind", default="linear", choices=[k.value for k in PathKind])
    p.add_argument("--grid", type=int, default=101)
    p.set_defaults(func=_cmd_profile)

    p = sub.add_parser("region", help="membership in an order-alpha depth region")
    common(p, with_sigma=True, exact2d=True)
    p.add_argument("--alpha", type=float, required=True)
    p.set_defaults(func=_cmd_region)

    p = sub.add_parser("detect", help="windowed dispersion outlier detection")
    p.add_argument("--data", required=True, help="timestamped observations CSV")
    p.add_argument("--min-rows", type=int, default=70, dest="min_rows")
    p.add_argument("--window-column", default=None, dest="window_column")
    p.add_argument("--location", default="tukey", choices=["tukey", "coordmedian"])
    p.add_argument("--output", default=None, help="output path prefix")
    p.set_defaults(func=_cmd_detect)

    p = sub.add_parser("oracle", help="closed-form reference depths")
    p.add_argument("model", choices=["gaussian", "cauchy"])
    p.add_argument("--sigma", required=True, help="matrix JSON file")
    p.add_argument("--sigma0", default=None, help="model scatter or shape JSON")
    p.add_argument("--shape", action="store_true", help="shape depth instead of scatter")
    p.add_argument("--output", default=None)
    p.set_defaults(func=_cmd_oracle)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError, np.linalg.LinAlgError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
