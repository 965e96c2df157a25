"""Command-line interface.

Subcommands: compare, calibrate, sweep, bound, weighted, export.  All
numeric output is deterministic: fixed grids, no randomness, sorted JSON
keys, and floats rounded to a configurable number of significant digits
(9 by default).  Report paths write plot-ready CSV plus rendered PNG
figures next to it.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

from . import accountant, divergence, mechanisms, moments
from .curves import (
    DEFAULT_GRID_SIZE,
    bayes_error_curve,
    profile_from_tradeoff,
    save_json,
)
from .exceptions import (
    AccumulatedErrorExceeded,
    BracketFailure,
    CurveValidationError,
    DivergentMoment,
    NoFixedPoint,
    PreconditionUnmet,
    SpecParseError,
    TruncationError,
    WindowTooSmall,
)

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_NUMERIC = 3
EXIT_PRECONDITION = 4

_NUMERIC_ERRORS = (
    CurveValidationError,
    TruncationError,
    WindowTooSmall,
    AccumulatedErrorExceeded,
    BracketFailure,
    NoFixedPoint,
    DivergentMoment,
)


def _round_sig(value, precision):
    if isinstance(value, float):
        if math.isnan(value):
            return None
        if precision is None:
            return float(f"{value:.9g}")
        return round(value, precision)
    if isinstance(value, dict):
        return {k: _round_sig(v, precision) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_round_sig(v, precision) for v in value]
    return value


def _emit_json(obj: dict, args) -> None:
    text = json.dumps(_round_sig(obj, args.precision), indent=2, sort_keys=True)
    print(text)
    if args.out and getattr(args, "_json_to_out", False):
        Path(args.out).mkdir(parents=True, exist_ok=True)
        (Path(args.out) / "result.json").write_text(text + "\n")


def _emit_csv_rows(rows, header, path=None) -> str:
    lines = [",".join(header)]
    for row in rows:
        cells = []
        for key in header:
            val = row[key]
            cells.append(f"{val:.9g}" if isinstance(val, float) else str(val))
        lines.append(",".join(cells))
    text = "\n".join(lines) + "\n"
    if path is not None:
        Path(path).write_text(text)
    return text


def _grid_size(args) -> int:
    if args.tolerance is not None:
        return int(math.ceil(1.0 / args.tolerance)) + 1
    return args.grid_size


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--grid-size", type=int, default=DEFAULT_GRID_SIZE,
                        help="nodes on the alpha/pi grids (default %(default)s)")
    parser.add_argument("--tolerance", type=float, default=None,
                        help="grid tolerance; overrides --grid-size as ceil(1/tol)+1")
    parser.add_argument("--format", choices=("json", "csv"), default="json",
                        help="stdout format for scalar results")
    parser.add_argument("--out", default=None, help="directory for report files")
    parser.add_argument("--precision", type=int, default=None,
                        help="decimal places in printed numbers "
                             "(default: 9 significant digits)")
    parser.add_argument("--figures", dest="figures", action="store_true", default=True,
                        help="render PNG figures with report files (default)")
    parser.add_argument("--no-figures", dest="figures", action="store_false")


def _add_accountant_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--grid-spacing", type=float, default=accountant.DEFAULT_GRID_SPACING,
                        help="PLD loss grid step (default %(default)s)")
    parser.add_argument("--rounding", choices=(accountant.PESSIMISTIC, accountant.MIDPOINT),
                        default=accountant.PESSIMISTIC)


def _curve_of(spec, args):
    return mechanisms.tradeoff_curve(spec, _grid_size(args), grid_spacing=args.grid_spacing)


def _write_curve_report(tag: str, curve, out_dir: Path, grid_size: int, figures: bool) -> dict:
    out_dir.mkdir(parents=True, exist_ok=True)
    bayes = bayes_error_curve(curve, grid_size)
    profile = profile_from_tradeoff(curve)
    paths = {}
    for name, obj in (("tradeoff", curve), ("bayes", bayes), ("profile", profile)):
        csv_path = out_dir / f"{tag}_{name}.csv"
        obj.to_csv(csv_path)
        save_json(obj, out_dir / f"{tag}_{name}.json")
        paths[name] = str(csv_path)
    if figures:
        from . import figures as figs

        figs.save_tradeoff_figure({tag: curve}, out_dir / f"{tag}_tradeoff.png")
        figs.save_bayes_figure({tag: bayes}, out_dir / f"{tag}_bayes.png")
        figs.save_profile_figure({tag: profile}, out_dir / f"{tag}_profile.png")
    return paths


def cmd_compare(args) -> int:
    spec_a = mechanisms.parse_mechanism(args.spec_a)
    spec_b = mechanisms.parse_mechanism(args.spec_b)
    grid_size = _grid_size(args)
    curve_a = _curve_of(spec_a, args)
    curve_b = _curve_of(spec_b, args)
    verdict = divergence.dominance_verdict(curve_a, curve_b, grid_size)
    result = verdict.to_json_obj()
    result["spec_a"] = spec_a.spec_string()
    result["spec_b"] = spec_b.spec_string()
    if args.curves:
        out_dir = Path(args.out or ".")
        _write_curve_report("a", curve_a, out_dir, grid_size, args.figures)
        _write_curve_report("b", curve_b, out_dir, grid_size, args.figures)
        if args.figures:
            from . import figures as figs

            labels = {spec_a.spec_string(): curve_a, spec_b.spec_string(): curve_b}
            figs.save_tradeoff_figure(labels, out_dir / "compare_tradeoff.png")
            figs.save_bayes_figure(
                {k: bayes_error_curve(v, grid_size) for k, v in labels.items()},
                out_dir / "compare_bayes.png",
            )
            figs.save_profile_figure(
                {k: profile_from_tradeoff(v) for k, v in labels.items()},
                out_dir / "compare_profile.png",
            )
    _emit_json(result, args)
    return EXIT_OK


def cmd_calibrate(args) -> int:
    result = accountant.calibrate_sigma(
        args.eps, args.delta, args.p, args.steps, grid_spacing=args.grid_spacing
    )
    _emit_json(result.to_json_obj(), args)
    return EXIT_OK


def _parse_axis(text: str, integer: bool):
    if ":" in text:
        lo, hi, count = text.split(":")
        values = accountant.geometric_range(float(lo), float(hi), int(count))
    else:
        values = tuple(float(v) for v in text.split(","))
    if integer:
        return tuple(sorted({int(round(v)) for v in values}))
    return tuple(sorted(set(values)))


def cmd_sweep(args) -> int:
    base = mechanisms.parse_mechanism(args.base)
    if base.family is not mechanisms.Family.SUBSAMPLED_GAUSSIAN:
        raise SpecParseError("sweep base must be an sgm spec")
    config = accountant.SweepConfig(
        base_sigma=base.sigma,
        base_p=base.p,
        base_steps=base.steps,
        target_eps=args.eps,
        target_delta=args.delta,
        p_range=_parse_axis(args.p_range, integer=False),
        steps_range=_parse_axis(args.steps_range, integer=True),
        output_path=args.out,
    )
    rows = accountant.run_sweep(
        config,
        grid_size=_grid_size(args),
        grid_spacing=args.grid_spacing,
        workers=args.workers,
    )
    header = ["p", "steps", "sigma", "delta_ab", "delta_ba", "eps_error", "status"]
    out_dir = Path(args.out) if args.out else None
    csv_path = None
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
        csv_path = out_dir / "sweep.csv"
    text = _emit_csv_rows(rows, header, csv_path)
    if args.format == "csv" or out_dir is None:
        print(text, end="")
    if out_dir is not None and args.figures:
        from . import figures as figs

        figs.save_sweep_figure(rows, out_dir / "sweep.png")
    if args.format == "json":
        _emit_json({"rows": rows}, args)
    return EXIT_OK


def cmd_bound(args) -> int:
    spec_a = mechanisms.parse_mechanism(args.spec_a)
    spec_b = mechanisms.parse_mechanism(args.spec_b)
    report = moments.empirical_vs_bound(
        spec_a, spec_b, grid_size=_grid_size(args), grid_spacing=args.grid_spacing
    )
    if report.bound is None:
        raise PreconditionUnmet(
            "neither composition order satisfies the eta-ratio precondition"
        )
    _emit_json(report.to_json_obj(), args)
    return EXIT_OK


def cmd_weighted(args) -> int:
    spec_a = mechanisms.parse_mechanism(args.spec_a)
    spec_b = mechanisms.parse_mechanism(args.spec_b)
    prior = divergence.HyperPrior.by_name(args.prior)
    grid_size = _grid_size(args)
    curve_a = _curve_of(spec_a, args)
    curve_b = _curve_of(spec_b, args)
    result = {
        "prior": prior.kind,
        "delta_ab_weighted": divergence.weighted_delta_divergence(
            curve_a, curve_b, prior, grid_size
        ),
        "delta_ba_weighted": divergence.weighted_delta_divergence(
            curve_b, curve_a, prior, grid_size
        ),
        "grid_size": grid_size,
        "spec_a": spec_a.spec_string(),
        "spec_b": spec_b.spec_string(),
    }
    _emit_json(result, args)
    return EXIT_OK


def cmd_export(args) -> int:
    spec = mechanisms.parse_mechanism(args.spec)
    grid_size = _grid_size(args)
    curve = _curve_of(spec, args)
    out_dir = Path(args.out or ".")
    paths = _write_curve_report(args.tag, curve, out_dir, grid_size, args.figures)
    _emit_json({"spec": spec.spec_string(), "files": paths}, args)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dpb",
        description="Compare differential-privacy mechanisms beyond a single "
        "(epsilon, delta) calibration point.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_compare = sub.add_parser("compare", help="two-sided divergence verdict")
    p_compare.add_argument("spec_a")
    p_compare.add_argument("spec_b")
    p_compare.add_argument("--curves", action="store_true",
                           help="write trade-off, Bayes and profile reports")
    _add_common(p_compare)
    _add_accountant_flags(p_compare)
    p_compare.set_defaults(func=cmd_compare)

    p_cal = sub.add_parser("calibrate", help="noise multiplier for a DP target")
    p_cal.add_argument("--eps", type=float, required=True)
    p_cal.add_argument("--delta", type=float, required=True)
    p_cal.add_argument("--p", type=float, required=True)
    p_cal.add_argument("--steps", type=int, required=True)
    _add_common(p_cal)
    _add_accountant_flags(p_cal)
    p_cal.set_defaults(func=cmd_calibrate)

    p_sweep = sub.add_parser("sweep", help="lattice of calibrated comparisons")
    p_sweep.add_argument("--base", required=True, help="base sgm spec")
    p_sweep.add_argument("--eps", type=float, required=True)
    p_sweep.add_argument("--delta", type=float, required=True)
    p_sweep.add_argument("--p-range", required=True,
                         help="lo:hi:count (log-spaced) or comma list")
    p_sweep.add_argument("--steps-range", required=True,
                         help="lo:hi:count (log-spaced) or comma list")
    p_sweep.add_argument("--workers", type=int, default=None)
    _add_common(p_sweep)
    _add_accountant_flags(p_sweep)
    p_sweep.set_defaults(func=cmd_sweep)

    p_bound = sub.add_parser("bound", help="composition bound vs accountant")
    p_bound.add_argument("spec_a")
    p_bound.add_argument("spec_b")
    _add_common(p_bound)
    _add_accountant_flags(p_bound)
    p_bound.set_defaults(func=cmd_bound)

    p_weighted = sub.add_parser("weighted", help="hyper-prior weighted divergence")
    p_weighted.add_argument("spec_a")
    p_weighted.add_argument("spec_b")
    p_weighted.add_argument("--prior", default="uniform",
                            choices=("uniform", "jeffreys", "uquadratic"))
    _add_common(p_weighted)
    _add_accountant_flags(p_weighted)
    p_weighted.set_defaults(func=cmd_weighted)

    p_export = sub.add_parser("export", help="write curve CSV/JSON/PNG reports")
    p_export.add_argument("spec")
    p_export.add_argument("--tag", default="mechanism", help="file name prefix")
    _add_common(p_export)
    _add_accountant_flags(p_export)
    p_export.set_defaults(func=cmd_export)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except SpecParseError as exc:
        print(json.dumps({"error": "parse", "message": str(exc)}), file=sys.stderr)
        return EXIT_PARSE
    except PreconditionUnmet as exc:
        print(json.dumps({"error": "precondition_unmet", "message": str(exc)}))
        return EXIT_PRECONDITION
    except _NUMERIC_ERRORS as exc:
        print(json.dumps({"error": "numeric", "message": str(exc)}), file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    raise SystemExit(main())
