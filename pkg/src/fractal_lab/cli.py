"""Command-line entry point: ``fractal-lab {build,dim,moran,verify,gen,plot}``.

Exit codes: 0 success (a ``hypothesis-not-met`` verdict is a success),
2 input error, 3 no convergence, 4 internal invariant violation.
"""

from __future__ import annotations

import argparse
import re
import sys
from typing import List, Optional, Sequence

from . import io as fio
from .core import SampledFunction
from .dimension import (
    ContractionBounds,
    box_count_series_2d,
    box_count_series_3d,
    dimension_bounds,
    estimate_contraction_bounds,
    estimate_dimension,
    moran_solve,
)
from .errors import FractalLabError, InputError, InvalidParameterError
from .fif import DEFAULT_MAX_ITERATIONS, DEFAULT_TOLERANCE, alpha_fractal, build_ifs, graph_cloud
from .generators import FunctionExpr, sample
from .theorems import (
    DIMENSION_TOL,
    THEOREM_IDS,
    check_bounds_theorem,
    check_bv_theorem,
    check_holder_theorem,
    check_mainthm,
    compare_graph_dimensions,
    estimate_constants,
    lemma_3_5_counts,
    peano_remark_experiment,
)

MODES = ("real2d", "imag2d", "complex3d")
PAIR_THEOREMS = ("lemma-3.1", "prop-3.2", "prop-3.3", "lemma-3.4", "lemma-3.5")


class UsageError(InputError):
    pass


def _float_list(text: str) -> List[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _scales(text: str):
    m = re.fullmatch(r"\s*(\d+)\s*(?:\.\.|:|-)\s*(\d+)\s*", text)
    if not m:
        raise argparse.ArgumentTypeError(f"expected j1..j2, got {text!r}")
    return int(m.group(1)), int(m.group(2))


def _domain(text: str):
    vals = _float_list(text)
    if len(vals) != 2:
        raise argparse.ArgumentTypeError("domain needs two numbers a,b")
    return vals[0], vals[1]


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="fractal-lab", description="Fractal interpolation and graph-dimension experiments.")
    p.add_argument("--record", metavar="PATH", help="write a RunRecord JSON file")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    b = sub.add_parser("build", help="compute f^alpha for a problem file")
    b.add_argument("problem")
    b.add_argument("--tol", type=float, default=DEFAULT_TOLERANCE)
    b.add_argument("--max-iter", type=int, default=DEFAULT_MAX_ITERATIONS)
    b.add_argument("--out", metavar="PREFIX", help="output prefix (default: problem path without extension)")

    d = sub.add_parser("dim", help="box-counting dimension of samples or a built problem")
    d.add_argument("input", help="samples CSV (t, re, im) or problem JSON")
    d.add_argument("--mode", choices=MODES, default="real2d")
    d.add_argument("--scales", type=_scales, metavar="J1..J2")
    d.add_argument("--out", metavar="PREFIX", help="write PREFIX.dim.json and PREFIX.series.csv")

    m = sub.add_parser("moran", help="solve the Moran equation")
    m.add_argument("--ratios", type=_float_list)
    m.add_argument("--lower", type=_float_list)
    m.add_argument("--upper", type=_float_list)

    v = sub.add_parser("verify", help="check a theorem's hypotheses and predictions")
    v.add_argument("theorem", choices=THEOREM_IDS)
    v.add_argument("problem", nargs="?")
    v.add_argument("--sigma", type=float, default=0.5)
    v.add_argument("--delta0", type=float, default=2.0**-6)
    v.add_argument("--tol", type=float, default=DIMENSION_TOL)
    v.add_argument("--lower", type=_float_list)
    v.add_argument("--upper", type=_float_list)
    v.add_argument("--pair", nargs=2, metavar=("G", "H"), help="two generator expressions on [0, 1]")
    v.add_argument("--grid-exponent", type=int, default=14, help="pair grid has 2**L + 1 points")
    v.add_argument("--depth", type=int, default=8, help="Hilbert depth for peano-remark")
    v.add_argument("--out", metavar="PATH", help="write the report JSON here instead of stdout")

    g = sub.add_parser("gen", help="sample a generator expression")
    g.add_argument("spec")
    g.add_argument("--domain", type=_domain, default=(0.0, 1.0))
    g.add_argument("-M", "--size", type=int, default=2**12 + 1)
    g.add_argument("--out", metavar="CSV", required=True)

    pl = sub.add_parser("plot", help="SVG of a samples or series CSV")
    pl.add_argument("input")
    pl.add_argument("--svg", required=True, metavar="PATH")
    pl.add_argument("--component", choices=("re", "im"), default="re")
    return p


# commands ------------------------------------------------------------------------


def _load_problem(path: str):
    pf = fio.ProblemFile.load(path)
    return pf, pf.to_problem()


def cmd_build(args, out) -> dict:
    pf, problem = _load_problem(args.problem)
    f_alpha, report = alpha_fractal(problem, args.tol, args.max_iter)
    prefix = args.out or fio.default_prefix(args.problem)
    csv_path, json_path = prefix + ".csv", prefix + ".report.json"
    fio.write_text(csv_path, fio.samples_csv(f_alpha))
    fio.write_text(json_path, fio.dumps_json(report.to_dict()))
    out.write(f"converged after {report.iterations} iterations; wrote {csv_path}, {json_path}\n")
    return {"samples": csv_path, "report": json_path, "fixed_point": report.to_dict()}


def _dim_source(path: str) -> SampledFunction:
    if path.endswith(".json"):
        _, problem = _load_problem(path)
        return alpha_fractal(problem)[0]
    return fio.read_samples(path)


def cmd_dim(args, out) -> dict:
    f = _dim_source(args.input)
    if args.mode == "complex3d":
        series = box_count_series_3d(graph_cloud(f, "complex-3d"), args.scales)
    else:
        series = box_count_series_2d(f, "real" if args.mode == "real2d" else "imag", args.scales)
    est = estimate_dimension(series)
    payload = est.to_dict()
    text = fio.dumps_json(payload)
    result = {"estimate": payload}
    if args.out:
        fio.write_text(args.out + ".dim.json", text)
        fio.write_text(args.out + ".series.csv", fio.series_csv(series))
        result["files"] = [args.out + ".dim.json", args.out + ".series.csv"]
    out.write(text)
    return result


def cmd_moran(args, out) -> dict:
    if args.ratios is not None:
        if args.lower is not None or args.upper is not None:
            raise UsageError("use either --ratios or --lower/--upper")
        root = moran_solve(args.ratios)
        payload = {"exponent": root.exponent, "residual": root.residual}
    elif args.lower is not None and args.upper is not None:
        r, R = dimension_bounds(ContractionBounds(tuple(args.lower), tuple(args.upper)))
        payload = {"r": r.exponent, "R": R.exponent}
    else:
        raise UsageError("need --ratios, or both --lower and --upper")
    out.write(fio.dumps_json(payload))
    return payload


def _pair(args):
    if args.pair:
        M = 2**args.grid_exponent + 1
        try:
            return tuple(sample(FunctionExpr.from_text(s), (0.0, 1.0), M).real for s in args.pair)
        except InvalidParameterError as exc:
            raise UsageError(f"--pair: {exc}") from None
    if not args.problem:
        raise UsageError(f"{args.theorem} needs a problem file or --pair G H")
    f = fio.ProblemFile.load(args.problem).germ_samples()
    return f.real, f.imag


def _run_verify(args):
    tid = args.theorem
    if tid == "peano-remark":
        return peano_remark_experiment(args.depth)
    if tid in PAIR_THEOREMS:
        g, h = _pair(args)
        if tid == "lemma-3.5":
            return lemma_3_5_counts(g, h)
        return compare_graph_dimensions(g, h, theorem_id=tid)
    if tid == "bounds-3.6" and args.lower is not None and args.upper is not None:
        bounds = ContractionBounds(tuple(args.lower), tuple(args.upper))
        f_alpha = None
        if args.problem:
            f_alpha = alpha_fractal(_load_problem(args.problem)[1])[0]
        return check_bounds_theorem(bounds, f_alpha, args.tol)
    if not args.problem:
        raise UsageError(f"{tid} needs a problem file")
    pf, problem = _load_problem(args.problem)
    f_alpha = alpha_fractal(problem)[0]
    if tid == "bv":
        return check_bv_theorem(problem, f_alpha, args.tol)
    if tid == "bounds-3.6":
        v = f_alpha.values
        pad = 1.0 + float(abs(v).max())
        box = ((-pad, pad), (-pad, pad))
        bounds = estimate_contraction_bounds(build_ifs(problem), seed=pf.seed, y_box=box)
        if bounds is None:
            raise UsageError("sampled D-ratios reach 1; pass --lower and --upper")
        return check_bounds_theorem(bounds, f_alpha, args.tol)
    constants = estimate_constants(problem, f_alpha, args.sigma, args.delta0)
    if tid == "holder-3.11":
        return check_holder_theorem(constants, f_alpha, args.tol)
    return check_mainthm(constants, f_alpha, args.tol)


def cmd_verify(args, out) -> dict:
    report = _run_verify(args)
    text = fio.dumps_json(report.to_dict())
    if args.out:
        fio.write_text(args.out, text)
    else:
        out.write(text)
    out.write(report.summary() + "\n")
    return {"report": report.to_dict(), "file": args.out}


def cmd_gen(args, out) -> dict:
    f = sample(FunctionExpr.from_text(args.spec), args.domain, args.size)
    fio.write_text(args.out, fio.samples_csv(f))
    out.write(f"wrote {f.size} samples to {args.out}\n")
    return {"samples": args.out}


def cmd_plot(args, out) -> dict:
    header = fio.csv_header(args.input)
    if "delta" in header or "log_delta" in header:
        cols = fio.read_table(args.input, fio.SERIES_COLUMNS)
        if cols["delta"].size == 0:
            raise InputError(f"{args.input}: empty series")
        svg = fio.loglog_svg(cols["log_delta"], cols["log_count"], title=args.input)
    else:
        cols = fio.read_table(args.input, fio.SAMPLE_COLUMNS)
        if cols["t"].size == 0:
            raise InputError(f"{args.input}: no samples")
        svg = fio.graph_svg(cols["t"], cols[args.component], title=args.input)
    fio.write_text(args.svg, svg)
    out.write(f"wrote {args.svg}\n")
    return {"svg": args.svg}


COMMANDS = {
    "build": cmd_build,
    "dim": cmd_dim,
    "moran": cmd_moran,
    "verify": cmd_verify,
    "gen": cmd_gen,
    "plot": cmd_plot,
}


def _slug(exc: Exception) -> str:
    name = type(exc).__name__
    name = name[:-5] if name.endswith("Error") else name
    return re.sub(r"(?<!^)(?=[A-Z])", "-", name).lower()


def _input_path(args) -> Optional[str]:
    for attr in ("problem", "input"):
        path = getattr(args, attr, None)
        if path:
            return path
    return None


def main(argv: Optional[Sequence[str]] = None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        err.write(f"error (usage): {exc}\n")
        return exc.exit_code
    record = fio.RunRecord(tuple(argv)) if args.record else None
    try:
        if record is not None:
            path = _input_path(args)
            if path:
                try:
                    record.input_hash = fio.sha256_file(path)
                except OSError:
                    record.input_hash = None
        result = COMMANDS[args.command](args, out)
    except FractalLabError as exc:
        err.write(f"error ({_slug(exc)}): {exc}\n")
        return exc.exit_code
    except AssertionError as exc:
        err.write(f"error (invariant-violation): {exc}\n")
        return 4
    if record is not None:
        record.finish(result)
        record.write(args.record)
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
