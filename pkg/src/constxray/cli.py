"""Command-line front end.

Exit codes: 0 pass, 1 mathematical rejection, 2 usage or data error.
Reports are JSON with a ``schema_version`` field; sampled curves are CSV.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone

import numpy as np

from . import __version__, abel, boundary, metric, xray2d
from .expr import ProfileSyntaxError
from .metric import RadialProfile

SCHEMA_VERSION = 1

EXIT_PASS = 0
EXIT_REJECT = 1
EXIT_USAGE = 2


class UsageError(Exception):
    pass


@dataclass
class TransformReport:
    experiment: str
    parameters: dict
    records: list = field(default_factory=list)
    summary: dict = field(default_factory=dict)
    result: dict = field(default_factory=dict)
    tool_version: str = __version__
    schema_version: int = SCHEMA_VERSION
    timestamp: str = ""

    def to_json(self) -> str:
        payload = asdict(self)
        payload["timestamp"] = self.timestamp or datetime.now(timezone.utc).isoformat()
        return json.dumps(_plain(payload), indent=2, sort_keys=True) + "\n"


def summarize(values) -> dict:
    """Summary of transform values against the target 1."""
    v = np.asarray(values, dtype=float)
    return {"count": int(v.size), "max_abs_deviation": float(np.max(np.abs(v - 1.0))),
            "mean": float(np.mean(v))}


def _plain(obj):
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _emit(text: str, out):
    if out:
        with open(out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _rows_csv(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([repr(float(x)) for x in row])
    return buf.getvalue()


def _profile(args) -> RadialProfile:
    if args.profile is not None and args.profile_csv is not None:
        raise UsageError("give only one of --profile and --profile-csv")
    if args.profile_csv is not None:
        try:
            return RadialProfile.from_csv(args.profile_csv).validate()
        except OSError as exc:
            raise UsageError(f"cannot read profile CSV: {exc}") from None
    if args.profile is None:
        raise UsageError("a profile is required (--profile EXPR or --profile-csv PATH)")
    return RadialProfile.from_expression(args.profile).validate()


def _shape(args) -> xray2d.SupportFunction:
    if args.shape_csv is not None:
        try:
            return xray2d.SupportFunction.from_csv(args.shape_csv)
        except OSError as exc:
            raise UsageError(f"cannot read shape CSV: {exc}") from None
    if args.shape is None:
        raise UsageError("a shape is required (--shape SPEC or --shape-csv PATH)")
    return xray2d.SupportFunction.from_spec(args.shape)


def _vector(text, name):
    if text is None:
        return None
    try:
        return np.array([float(t) for t in text.split(",")])
    except ValueError:
        raise UsageError(f"{name} must be comma-separated numbers") from None


def _parameters(args) -> dict:
    skip = {"func", "out", "format", "command"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def cmd_synth(args) -> int:
    profile = _profile(args)
    try:
        density = abel.synthesize_constant(profile)
    except abel.SynthesisError as exc:
        print(f"rejected: {exc}", file=sys.stderr)
        return EXIT_REJECT
    r = np.linspace(0.0, 1.0, args.grid, endpoint=False)
    if args.format == "csv":
        _emit(density.to_csv(r), args.out)
    else:
        rep = TransformReport("synth", _parameters(args),
                              records=[{"r": float(a), "f": float(b)} for a, b in zip(r, density(r))],
                              result={"boundary_w": density.boundary_w})
        _emit(rep.to_json(), args.out)
    return EXIT_PASS


def cmd_verify(args) -> int:
    profile = _profile(args)
    try:
        density = abel.synthesize_constant(profile)
    except abel.SynthesisError as exc:
        print(f"rejected: {exc}", file=sys.stderr)
        return EXIT_REJECT
    rng = np.random.default_rng(args.seed)
    s = np.sort(rng.uniform(0.0, 1.0, args.chords))
    s = np.clip(s, 1e-9, 1 - 1e-9)
    if args.method == "abel":
        values = abel.abel_forward(density, profile, s, tol=min(args.tol, 1e-10) * 1e-2)
    else:
        spatial = density.spatial()
        values = np.array([metric.integrate_along_trace(
            metric.trace_geodesic(profile, *metric.chord_start(profile, si)), spatial) for si in s])
    summary = summarize(values)
    passed = summary["max_abs_deviation"] <= args.tol
    rep = TransformReport("verify", _parameters(args),
                          records=[{"turning_radius": float(a), "integral": float(b)} for a, b in zip(s, values)],
                          summary=summary, result={"passed": passed})
    if args.format == "csv":
        _emit(_rows_csv(["turning_radius", "integral"], zip(s, values)), args.out)
    else:
        _emit(rep.to_json(), args.out)
    if not passed:
        print(f"max |If - 1| = {summary['max_abs_deviation']:.3e} exceeds {args.tol:g}", file=sys.stderr)
    return EXIT_PASS if passed else EXIT_REJECT


def cmd_herglotz(args) -> int:
    profile = _profile(args)
    res = metric.herglotz_check(profile, args.grid)
    rep = TransformReport("herglotz", _parameters(args), result=asdict(res))
    _emit(rep.to_json(), args.out)
    if not res.passed:
        print(f"Herglotz condition fails at r = {res.witness:.6g}", file=sys.stderr)
        return EXIT_REJECT
    return EXIT_PASS


def cmd_disctest(args) -> int:
    dom = _shape(args)
    res = xray2d.disc_test(dom, tol=args.tol)
    rep = TransformReport("disctest", _parameters(args), result={"accepted": res.accepted, **asdict(res)})
    _emit(rep.to_json(), args.out)
    if not res.accepted:
        print(f"rejected: {res.reason}", file=sys.stderr)
        return EXIT_REJECT
    return EXIT_PASS


def _depths(args):
    return boundary.default_depths(args.min_depth, args.max_depth, args.grid)


def cmd_iiest(args) -> int:
    depths = _depths(args)
    if args.profile is not None or args.profile_csv is not None:
        profile = _profile(args)
        est = boundary.estimate_II_radial(profile, depths)
        exact = metric.boundary_second_fundamental_form(profile)
    else:
        if args.body is not None:
            body = boundary.ImplicitBody.from_spec(args.body)
        else:
            body = _shape(args)
        x = _vector(args.point, "--point")
        v = _vector(args.tangent, "--tangent")
        if x is None or v is None:
            raise UsageError("--point and --tangent are required for a body or shape")
        est = boundary.estimate_II_chords(body, x, v, depths)
        exact = None
    if args.format == "csv":
        _emit(est.to_csv(), args.out)
    else:
        rep = TransformReport("iiest", _parameters(args),
                              records=[{"h": float(h), "raw": float(r)} for h, r in zip(est.depths, est.raw)],
                              result={"II": est.value, "II_metric": exact,
                                      "w": boundary.predicted_w(est.value)})
        _emit(rep.to_json(), args.out)
    return EXIT_PASS


def cmd_slicetest(args) -> int:
    if args.body is None:
        raise UsageError("--body is required")
    body = boundary.ImplicitBody.from_spec(args.body)
    x = _vector(args.point, "--point")
    if x is None:
        raise UsageError("--point is required")
    planes = boundary.tangent_planes(body, x, seed=args.seed)
    res = boundary.slice_umbilicity_test(body, x, planes, _depths(args), tol=args.tol)
    rep = TransformReport("slicetest", _parameters(args),
                          records=[{"plane": [list(p[0]), list(p[1])], "ratio": r} for p, r in zip(planes, res.ratios)],
                          result={"umbilical": res.umbilical, "witness_ratio": res.witness_ratio})
    _emit(rep.to_json(), args.out)
    if not res.umbilical:
        print(f"non-umbilical: limiting axis ratio {res.witness_ratio:.6g}", file=sys.stderr)
        return EXIT_REJECT
    return EXIT_PASS


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="constxray",
                                     description="Densities with constant X-ray transform and boundary tests.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, tol=1e-6, grid=1001):
        p.add_argument("--profile", help="sound speed c(r) as an expression in r")
        p.add_argument("--profile-csv", help="CSV of r,c samples")
        p.add_argument("--shape", help='support-function shape, e.g. "ellipse 1 1.2"')
        p.add_argument("--shape-csv", help="CSV of theta,h samples")
        p.add_argument("--grid", type=int, default=grid)
        p.add_argument("--tol", type=float, default=tol)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", help="output file (default stdout)")
        p.add_argument("--format", choices=("json", "csv"), default="json")

    p = sub.add_parser("synth", help="sample the constant-transform density")
    common(p, grid=100)
    p.set_defaults(func=cmd_synth, format="csv")

    p = sub.add_parser("verify", help="check that the synthesized density integrates to 1")
    common(p)
    p.add_argument("--chords", type=int, default=200)
    p.add_argument("--method", choices=("abel", "trace"), default="abel")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("herglotz", help="check d/dr (r/c) > 0")
    common(p)
    p.set_defaults(func=cmd_herglotz)

    p = sub.add_parser("disctest", help="decide whether a convex shape is a disc")
    common(p)
    p.set_defaults(func=cmd_disctest)

    for name, func, helptext in (("iiest", cmd_iiest, "estimate the second fundamental form"),
                                 ("slicetest", cmd_slicetest, "near-tangent slice umbilicity test")):
        p = sub.add_parser(name, help=helptext)
        common(p, tol=1e-3, grid=5)
        p.add_argument("--body", help='implicit body, e.g. "sphere 1" or "ellipsoid 1 1 2"')
        p.add_argument("--point", help="boundary point, comma separated")
        p.add_argument("--tangent", help="tangent direction, comma separated")
        p.add_argument("--min-depth", type=float, default=1e-5)
        p.add_argument("--max-depth", type=float, default=1e-2)
        p.set_defaults(func=func)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (UsageError, ProfileSyntaxError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
