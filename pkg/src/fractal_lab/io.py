"""Problem files, CSV/JSON persistence, SVG plots and run records.

Problem files are versioned JSON with a closed set of fields::

    {
      "version": 1,
      "knots": [0, 0.5, 1],
      "germ": "weierstrass:2,0.5",
      "base": "linear-through-endpoints + polynomial:0,1,-1",
      "scalings": [{"form": "constant", "data": {"re": 0.2, "im": 0.1}}, ...],
      "grid_exponent": 13,
      "seed": 0
    }

The working grid has ``M - 1 = max(N - 1, 2) ** grid_exponent`` intervals,
so every affine map ``P_k`` of a uniform partition sends grid points to grid
points. A bare ``linear-through-endpoints`` term in ``base`` is completed
with the germ's endpoint values.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import os
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Optional, Sequence, Tuple

import numpy as np

from .core import Partition, SampledFunction
from .dimension import BoxCountSeries
from .errors import InputError, InvalidParameterError, ProblemFileError
from .fif import FractalProblem, ScalingFunction
from .generators import FunctionExpr

FORMAT_VERSION = 1
MAX_GRID_POINTS = 2**24 + 1
_FIELDS = ("version", "knots", "values", "germ", "base", "scalings", "grid_exponent", "seed")
_REQUIRED = ("version", "knots", "germ", "base", "scalings", "grid_exponent")
SAMPLE_COLUMNS = ("t", "re", "im")
SERIES_COLUMNS = ("delta", "count", "log_delta", "log_count")


# -- number formatting ---------------------------------------------------------


def fmt17(x: float) -> str:
    """17 significant digits, '.' decimal; round-trips every double."""
    return format(float(x), ".17g")


def dumps_json(obj) -> str:
    """Canonical JSON text used for every report file."""
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n"


def write_text(path: str, text: str):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


# -- problem files -------------------------------------------------------------


def _complex_field(obj, where: str) -> complex:
    if isinstance(obj, bool):
        raise ProblemFileError(where, "expected a number or {re, im}")
    if isinstance(obj, (int, float)):
        return complex(float(obj), 0.0)
    if isinstance(obj, dict):
        extra = set(obj) - {"re", "im"}
        if extra:
            raise ProblemFileError(where, f"unknown keys {sorted(extra)}")
        try:
            re_, im_ = float(obj.get("re", 0.0)), float(obj.get("im", 0.0))
        except (TypeError, ValueError):
            raise ProblemFileError(where, "re and im must be numbers") from None
        return complex(re_, im_)
    raise ProblemFileError(where, "expected a number or {re, im}")


def _complex_json(c: complex) -> dict:
    return {"re": c.real, "im": c.imag}


@dataclass(frozen=True)
class ScalingSpec:
    """Textual scaling: constant value, (slope, intercept) pair or generator text."""

    form: str
    data: object

    def to_json(self):
        if self.form == "constant":
            return {"form": self.form, "data": _complex_json(self.data)}
        if self.form == "affine-in-t":
            slope, intercept = self.data
            return {"form": self.form, "data": {"slope": _complex_json(slope), "intercept": _complex_json(intercept)}}
        return {"form": self.form, "data": self.data}

    @classmethod
    def from_json(cls, obj, where: str) -> "ScalingSpec":
        if not isinstance(obj, dict):
            raise ProblemFileError(where, "expected an object with form and data")
        extra = set(obj) - {"form", "data"}
        if extra:
            raise ProblemFileError(where, f"unknown keys {sorted(extra)}")
        if "form" not in obj or "data" not in obj:
            raise ProblemFileError(where, "needs both form and data")
        form, data = obj["form"], obj["data"]
        if form == "constant":
            return cls(form, _complex_field(data, where + ".data"))
        if form == "affine-in-t":
            if not isinstance(data, dict) or set(data) != {"slope", "intercept"}:
                raise ProblemFileError(where + ".data", "affine-in-t needs slope and intercept")
            return cls(
                form,
                (_complex_field(data["slope"], where + ".data.slope"),
                 _complex_field(data["intercept"], where + ".data.intercept")),
            )
        if form == "sampled":
            if not isinstance(data, str):
                raise ProblemFileError(where + ".data", "sampled scaling needs a generator expression")
            try:
                FunctionExpr.from_text(data)
            except InvalidParameterError as exc:
                raise ProblemFileError(where + ".data", str(exc)) from None
            return cls(form, data)
        raise ProblemFileError(where + ".form", f"unknown scaling form {form!r}")

    def build(self, like: SampledFunction) -> ScalingFunction:
        if self.form == "sampled":
            expr = FunctionExpr.from_text(self.data)
            return ScalingFunction("sampled", SampledFunction(like.domain, expr.evaluate(like.grid, like.domain)))
        return ScalingFunction(self.form, self.data)


@dataclass(frozen=True)
class ProblemFile:
    knots: Tuple[float, ...]
    germ: str
    base: str
    scalings: Tuple[ScalingSpec, ...]
    grid_exponent: int
    values: Optional[Tuple[complex, ...]] = None
    seed: int = 0
    version: int = FORMAT_VERSION

    @property
    def grid_size(self) -> int:
        return max(len(self.knots) - 1, 2) ** self.grid_exponent + 1

    # parsing -------------------------------------------------------------------

    @classmethod
    def from_json(cls, text: str) -> "ProblemFile":
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ProblemFileError(f"line {exc.lineno} column {exc.colno}", exc.msg) from None
        return cls.from_dict(obj)

    @classmethod
    def from_dict(cls, obj) -> "ProblemFile":
        if not isinstance(obj, dict):
            raise ProblemFileError("<root>", "expected a JSON object")
        for key in obj:
            if key not in _FIELDS:
                raise ProblemFileError(key, "unknown field")
        for key in _REQUIRED:
            if key not in obj:
                raise ProblemFileError(key, "missing required field")
        version = obj["version"]
        if version != FORMAT_VERSION or isinstance(version, bool):
            raise ProblemFileError("version", f"unsupported version {version!r}")
        knots = obj["knots"]
        if not isinstance(knots, list) or not all(_is_number(x) for x in knots):
            raise ProblemFileError("knots", "expected a list of numbers")
        try:
            Partition(tuple(knots))
        except InvalidParameterError as exc:
            raise ProblemFileError("knots", str(exc)) from None
        values = obj.get("values")
        if values is not None:
            if not isinstance(values, list):
                raise ProblemFileError("values", "expected a list of {re, im}")
            if len(values) != len(knots):
                raise ProblemFileError("values", "need one value per knot")
            values = tuple(_complex_field(v, f"values[{i}]") for i, v in enumerate(values))
        for key in ("germ", "base"):
            if not isinstance(obj[key], str):
                raise ProblemFileError(key, "expected a generator expression")
            try:
                FunctionExpr.from_text(obj[key], endpoints=(0.0, 0.0))
            except InvalidParameterError as exc:
                raise ProblemFileError(key, str(exc)) from None
        sc = obj["scalings"]
        if not isinstance(sc, list):
            raise ProblemFileError("scalings", "expected a list")
        if len(sc) != len(knots) - 1:
            raise ProblemFileError("scalings", f"need {len(knots) - 1} entries, got {len(sc)}")
        scalings = tuple(ScalingSpec.from_json(s, f"scalings[{i}]") for i, s in enumerate(sc))
        L = obj["grid_exponent"]
        if not isinstance(L, int) or isinstance(L, bool) or L < 1:
            raise ProblemFileError("grid_exponent", "expected a positive integer")
        if max(len(knots) - 1, 2) ** L + 1 > MAX_GRID_POINTS:
            raise ProblemFileError("grid_exponent", f"grid larger than {MAX_GRID_POINTS} points")
        seed = obj.get("seed", 0)
        if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
            raise ProblemFileError("seed", "expected a nonnegative integer")
        return cls(
            knots=tuple(float(x) for x in knots),
            germ=obj["germ"],
            base=obj["base"],
            scalings=scalings,
            grid_exponent=L,
            values=values,
            seed=seed,
            version=version,
        )

    @classmethod
    def load(cls, path: str) -> "ProblemFile":
        try:
            with open(path, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise ProblemFileError(path, exc.strerror or "cannot read file") from None
        return cls.from_json(text)

    # serialization -------------------------------------------------------------

    def to_dict(self) -> dict:
        out = {
            "version": self.version,
            "knots": list(self.knots),
            "germ": self.germ,
            "base": self.base,
            "scalings": [s.to_json() for s in self.scalings],
            "grid_exponent": self.grid_exponent,
            "seed": self.seed,
        }
        if self.values is not None:
            out["values"] = [_complex_json(v) for v in self.values]
        return out

    def to_json(self) -> str:
        return dumps_json(self.to_dict())

    # realization ---------------------------------------------------------------

    def germ_samples(self) -> SampledFunction:
        domain = (self.knots[0], self.knots[-1])
        t = np.linspace(domain[0], domain[1], self.grid_size)
        expr = FunctionExpr.from_text(self.germ)
        return SampledFunction(domain, expr.evaluate(t, domain))

    def to_problem(self) -> FractalProblem:
        """Sample germ, base and scalings on the working grid."""
        try:
            f = self.germ_samples()
        except InvalidParameterError as exc:
            raise ProblemFileError("germ", str(exc)) from None
        domain = f.domain
        try:
            base = FunctionExpr.from_text(self.base, endpoints=(f.values[0], f.values[-1]))
            b = SampledFunction(domain, base.evaluate(f.grid, domain))
        except InvalidParameterError as exc:
            raise ProblemFileError("base", str(exc)) from None
        scalings = tuple(s.build(f) for s in self.scalings)
        try:
            return FractalProblem(Partition(self.knots), f, b, scalings, self.values)
        except InputError as exc:
            raise ProblemFileError(_field_for(exc), str(exc)) from None


def _is_number(x) -> bool:
    return isinstance(x, (int, float)) and not isinstance(x, bool)


def _field_for(exc: InputError) -> str:
    name = type(exc).__name__
    if name in ("EndpointMismatchError", "BaseEqualsGermError"):
        return "base"
    if name == "ScalingTooLargeError":
        return "scalings"
    if name == "GridMismatchError":
        return "knots"
    if "interpolation value" in str(exc):
        return "values"
    return "scalings"


# -- CSV -----------------------------------------------------------------------


def samples_csv(f: SampledFunction) -> str:
    lines = [",".join(SAMPLE_COLUMNS)]
    for t, v in zip(f.grid, f.values):
        lines.append(f"{fmt17(t)},{fmt17(v.real)},{fmt17(v.imag)}")
    return "\n".join(lines) + "\n"


def series_csv(series: BoxCountSeries) -> str:
    lines = [",".join(SERIES_COLUMNS)]
    for delta, count, ld, lc in series.rows():
        lines.append(f"{fmt17(delta)},{count},{fmt17(ld)},{fmt17(lc)}")
    return "\n".join(lines) + "\n"


def read_table(path: str, required: Sequence[str]) -> dict:
    """Read a headed numeric CSV; returns column name -> float array."""
    try:
        with open(path, encoding="utf-8", newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror or 'cannot read file'}") from None
    if not rows:
        raise InputError(f"{path}: empty file, expected columns {', '.join(required)}")
    header = [h.strip() for h in rows[0]]
    for col in required:
        if col not in header:
            raise InputError(f"{path}: missing column '{col}'")
    data = {}
    body = [r for r in rows[1:] if r]
    for col in required:
        i = header.index(col)
        try:
            data[col] = np.array([float(r[i]) for r in body], dtype=float)
        except (ValueError, IndexError):
            raise InputError(f"{path}: non-numeric or missing value in column '{col}'") from None
    return data


def csv_header(path: str) -> Tuple[str, ...]:
    try:
        with open(path, encoding="utf-8", newline="") as fh:
            first = next(csv.reader(fh), [])
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror or 'cannot read file'}") from None
    return tuple(h.strip() for h in first)


def read_samples(path: str) -> SampledFunction:
    """Samples CSV back to a :class:`SampledFunction`; the grid must be uniform."""
    cols = read_table(path, SAMPLE_COLUMNS)
    t = cols["t"]
    if t.size < 2:
        raise InputError(f"{path}: need at least 2 samples")
    expected = np.linspace(t[0], t[-1], t.size)
    if not np.allclose(t, expected, rtol=0.0, atol=1e-9 * max(1.0, abs(t[-1] - t[0]))):
        raise InputError(f"{path}: column 't' is not a uniform grid")
    try:
        return SampledFunction((t[0], t[-1]), cols["re"] + 1j * cols["im"])
    except InvalidParameterError as exc:
        raise InputError(f"{path}: {exc}") from None


# -- SVG -----------------------------------------------------------------------

SVG_WIDTH = 640
SVG_HEIGHT = 400
SVG_MARGIN = 40


def _scaler(lo, hi, out_lo, out_hi):
    span = hi - lo
    if span <= 0 or not math.isfinite(span):
        mid = 0.5 * (out_lo + out_hi)
        return lambda v: np.full(np.shape(v), mid)
    return lambda v: out_lo + (np.asarray(v, dtype=float) - lo) * (out_hi - out_lo) / span


def _frame(x, y):
    fx = _scaler(np.min(x), np.max(x), SVG_MARGIN, SVG_WIDTH - SVG_MARGIN)
    # SVG y grows downwards
    fy = _scaler(np.min(y), np.max(y), SVG_HEIGHT - SVG_MARGIN, SVG_MARGIN)
    return fx, fy


def _svg_open(title: str) -> list:
    return [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{SVG_WIDTH}" height="{SVG_HEIGHT}" '
        f'viewBox="0 0 {SVG_WIDTH} {SVG_HEIGHT}">',
        f"<title>{_escape(title)}</title>",
        f'<rect x="{SVG_MARGIN}" y="{SVG_MARGIN}" width="{SVG_WIDTH - 2 * SVG_MARGIN}" '
        f'height="{SVG_HEIGHT - 2 * SVG_MARGIN}" fill="none" stroke="#999"/>',
    ]


def _escape(s: str) -> str:
    return s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def graph_svg(x, y, title: str = "graph") -> str:
    """One polyline through every sample."""
    x, y = np.asarray(x, float), np.asarray(y, float)
    if x.size == 0:
        raise InputError("nothing to plot")
    fx, fy = _frame(x, y)
    pts = " ".join(f"{a:.3f},{b:.3f}" for a, b in zip(fx(x), fy(y)))
    out = _svg_open(title)
    out.append(f'<polyline fill="none" stroke="#1f4e9c" stroke-width="1" points="{pts}"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def loglog_svg(log_x, log_y, title: str = "box counts") -> str:
    """Scatter of (log delta, log count) with the least-squares line."""
    lx, ly = np.asarray(log_x, float), np.asarray(log_y, float)
    if lx.size == 0:
        raise InputError("empty series")
    fx, fy = _frame(lx, ly)
    out = _svg_open(title)
    for a, b in zip(fx(lx), fy(ly)):
        out.append(f'<circle cx="{a:.3f}" cy="{b:.3f}" r="3" fill="#c0392b"/>')
    if lx.size >= 2 and np.ptp(lx) > 0:
        slope, icpt = np.polyfit(lx, ly, 1)
        x0, x1 = float(lx.min()), float(lx.max())
        X, Y = fx([x0, x1]), fy([slope * x0 + icpt, slope * x1 + icpt])
        out.append(
            f'<line x1="{X[0]:.3f}" y1="{Y[0]:.3f}" x2="{X[1]:.3f}" y2="{Y[1]:.3f}" '
            'stroke="#333" stroke-width="1.5"/>'
        )
        out.append(f'<text x="{SVG_MARGIN}" y="{SVG_MARGIN - 10}" font-size="12">slope {-slope:.4f}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


# -- run records ---------------------------------------------------------------


def sha256_file(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


@dataclass
class RunRecord:
    """Provenance of one CLI run. Timestamps make the record itself non-reproducible;
    the listed outputs are."""

    command: Tuple[str, ...]
    input_hash: Optional[str] = None
    started: str = field(default_factory=_now)
    finished: Optional[str] = None
    outputs: dict = field(default_factory=dict)

    def finish(self, outputs: dict):
        self.outputs = dict(outputs)
        self.finished = _now()

    def to_dict(self) -> dict:
        return {
            "command": list(self.command),
            "input_hash": self.input_hash,
            "started": self.started,
            "finished": self.finished,
            "outputs": self.outputs,
        }

    def write(self, path: str):
        write_text(path, dumps_json(self.to_dict()))


def default_prefix(path: str) -> str:
    root, _ = os.path.splitext(path)
    return root
