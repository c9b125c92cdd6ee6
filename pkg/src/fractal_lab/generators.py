"""Catalog of test functions and their text form.

A single generator is written ``kind:p1,p2,...``. Problem files and the CLI
accept a linear combination of generators, e.g.::

    weierstrass:2,0.5 + 0.5j*weierstrass:2,0.5,1.3

Coefficients are parsed by :func:`complex`, with ``i`` accepted for ``j``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from .core import SampledFunction
from .errors import InvalidParameterError

KINDS = (
    "polynomial",
    "trig-sum",
    "weierstrass",
    "takagi",
    "hilbert-coordinate-1",
    "hilbert-coordinate-2",
    "constant",
    "linear-through-endpoints",
)

TAIL_TOLERANCE = 1e-12


def _series_depth(ratio: float) -> int:
    """Smallest K with ``ratio**K < TAIL_TOLERANCE``; the amplitude is ``1/(1-ratio)``.

    A tail ``sum_{n>=K} ratio**n`` equals ``ratio**K`` times the amplitude.
    """
    return int(math.ceil(math.log(TAIL_TOLERANCE) / math.log(ratio)))


def _fractional_orbit(t: np.ndarray, base: int, depth: int):
    """Yield ``frac(base**n * t)`` for n = 0..depth-1 using exact digit shifts."""
    x = np.mod(t, 1.0)
    for _ in range(depth):
        yield x
        x = np.mod(base * x, 1.0)


def hilbert_vertices(depth: int) -> np.ndarray:
    """Exact Hilbert-curve points at ``t = k / 4**depth``, k = 0..4**depth.

    The curve starts at (0, 0) and ends at (1, 0). Each base-4 digit of ``k``
    selects one of the four quadrant similarities; values are dyadic and exact.
    """
    n = 4**depth
    k = np.arange(n, dtype=np.int64)
    x = np.zeros(n)
    y = np.zeros(n)
    for level in range(depth):
        q = (k >> (2 * level)) & 3
        x, y = (
            np.select([q == 0, q == 1, q == 2], [y / 2, x / 2, x / 2 + 0.5], 1.0 - y / 2),
            np.select([q == 0, q == 1, q == 2], [x / 2, y / 2 + 0.5, y / 2 + 0.5], 0.5 - x / 2),
        )
    pts = np.empty((n + 1, 2))
    pts[:n, 0], pts[:n, 1] = x, y
    pts[n] = (1.0, 0.0)
    return pts


@dataclass(frozen=True)
class GeneratorSpec:
    kind: str
    params: Tuple[float, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "params", tuple(float(p) for p in self.params))
        if self.kind not in KINDS:
            raise InvalidParameterError(f"unknown generator kind {self.kind!r}")
        getattr(self, "_check_" + self.kind.replace("-", "_"), lambda: None)()

    # parameter validation -------------------------------------------------

    def _need(self, lo, hi=None):
        n = len(self.params)
        hi = lo if hi is None else hi
        if not lo <= n <= (hi if hi >= 0 else n):
            raise InvalidParameterError(f"{self.kind}: wrong number of parameters ({n})")

    def _check_polynomial(self):
        self._need(1, -1)

    def _check_trig_sum(self):
        if not self.params or len(self.params) % 3:
            raise InvalidParameterError("trig-sum: parameters are (amplitude, frequency, phase) triples")

    def _check_weierstrass(self):
        self._need(2, 3)
        lam, sigma = self.params[:2]
        if lam < 2 or lam != int(lam):
            raise InvalidParameterError("weierstrass: frequency base must be an integer >= 2")
        if not 0.0 < sigma < 1.0:
            raise InvalidParameterError("weierstrass: amplitude exponent must lie in (0, 1)")

    def _check_takagi(self):
        self._need(0, 1)
        if self.params and not 0.0 < self.params[0] < 1.0:
            raise InvalidParameterError("takagi: weight must lie in (0, 1)")

    def _check_hilbert(self):
        self._need(1)
        d = self.params[0]
        if d < 1 or d != int(d) or d > 12:
            raise InvalidParameterError("hilbert coordinate: depth must be an integer in [1, 12]")

    _check_hilbert_coordinate_1 = _check_hilbert
    _check_hilbert_coordinate_2 = _check_hilbert

    def _check_constant(self):
        self._need(1, 2)

    def _check_linear_through_endpoints(self):
        self._need(4)

    # evaluation --------------------------------------------------------------

    def evaluate(self, t, domain) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        a, b = domain
        p = self.params
        kind = self.kind
        if kind == "constant":
            c = complex(p[0], p[1] if len(p) > 1 else 0.0)
            return np.full(t.shape, c, dtype=np.complex128)
        if kind == "linear-through-endpoints":
            y0, y1 = complex(p[0], p[1]), complex(p[2], p[3])
            s = (t - a) / (b - a)
            return (y0 + (y1 - y0) * s).astype(np.complex128)
        if kind == "polynomial":
            return np.polynomial.polynomial.polyval(t, p).astype(np.complex128)
        if kind == "trig-sum":
            out = np.zeros(t.shape)
            for amp, freq, phase in zip(p[0::3], p[1::3], p[2::3]):
                out += amp * np.sin(2 * np.pi * freq * t + phase)
            return out.astype(np.complex128)
        if kind == "weierstrass":
            lam, sigma = int(p[0]), p[1]
            phase = p[2] if len(p) > 2 else 0.0
            ratio = lam ** (-sigma)
            out = np.zeros(t.shape)
            for n, x in enumerate(_fractional_orbit(t, lam, _series_depth(ratio))):
                out += ratio**n * np.sin(2 * np.pi * x + phase)
            # normalized so the amplitude sum_n ratio**n is 1
            return ((1.0 - ratio) * out).astype(np.complex128)
        if kind == "takagi":
            w = p[0] if p else 0.5
            out = np.zeros(t.shape)
            for n, x in enumerate(_fractional_orbit(t, 2, _series_depth(w))):
                out += w**n * np.minimum(x, 1.0 - x)
            return out.astype(np.complex128)
        # Hilbert coordinates: piecewise-linear through the exact dyadic vertices.
        depth = int(p[0])
        verts = hilbert_vertices(depth)
        s = np.clip((t - a) / (b - a), 0.0, 1.0)
        knots = np.linspace(0.0, 1.0, verts.shape[0])
        col = 0 if kind == "hilbert-coordinate-1" else 1
        return np.interp(s, knots, verts[:, col]).astype(np.complex128)

    def to_text(self) -> str:
        if not self.params:
            return self.kind
        return self.kind + ":" + ",".join(_fmt(p) for p in self.params)

    @classmethod
    def from_text(cls, text: str, endpoints=None) -> "GeneratorSpec":
        """Parse ``kind:p1,p2``.

        A bare ``linear-through-endpoints`` takes its two values from
        ``endpoints`` when given.
        """
        text = text.strip()
        kind, _, rest = text.partition(":")
        kind = kind.strip()
        try:
            params = tuple(float(s) for s in rest.split(",")) if rest.strip() else ()
        except ValueError as exc:
            raise InvalidParameterError(f"bad generator parameters in {text!r}") from exc
        if kind == "linear-through-endpoints" and not params and endpoints is not None:
            y0, y1 = (complex(e) for e in endpoints)
            params = (y0.real, y0.imag, y1.real, y1.imag)
        return cls(kind, params)


def _fmt(x: float) -> str:
    return repr(float(x)) if x != int(x) or abs(x) >= 1e16 else str(int(x))


def _fmt_complex(c: complex) -> str:
    if c.imag == 0:
        return _fmt(c.real)
    if c.real == 0:
        return ("" if c.imag == 1 else _fmt(c.imag)) + "i"
    return f"({_fmt(c.real)}{'+' if c.imag >= 0 else '-'}{_fmt(abs(c.imag))}i)"


_TERM = re.compile(r"^\s*(?:(?P<coef>\([^)]*\)|[^*(]+?)\s*\*)?\s*(?P<gen>[a-z][a-z0-9-]*(?::.*)?)\s*$")


@dataclass(frozen=True)
class FunctionExpr:
    """Linear combination ``sum_i c_i g_i`` of catalog generators."""

    terms: Tuple[Tuple[complex, GeneratorSpec], ...]

    def __post_init__(self):
        if not self.terms:
            raise InvalidParameterError("empty function expression")
        object.__setattr__(self, "terms", tuple((complex(c), g) for c, g in self.terms))

    @classmethod
    def of(cls, spec: GeneratorSpec, coef: complex = 1.0) -> "FunctionExpr":
        return cls(((coef, spec),))

    def __add__(self, other: "FunctionExpr") -> "FunctionExpr":
        return FunctionExpr(self.terms + other.terms)

    def evaluate(self, t, domain) -> np.ndarray:
        out = np.zeros(np.shape(t), dtype=np.complex128)
        for coef, spec in self.terms:
            vals = spec.evaluate(t, domain)
            out += vals if coef == 1 else coef * vals
        return out

    def to_text(self) -> str:
        parts = []
        for coef, spec in self.terms:
            prefix = "" if coef == 1 else _fmt_complex(coef) + "*"
            parts.append(prefix + spec.to_text())
        return " + ".join(parts)

    @classmethod
    def from_text(cls, text: str, endpoints=None) -> "FunctionExpr":
        terms = []
        # split on '+' outside parentheses and not inside a parameter list
        depth, buf, chunks = 0, [], []
        for ch in text:
            if ch == "(":
                depth += 1
            elif ch == ")":
                depth -= 1
            if ch == "+" and depth == 0 and _ends_term(buf):
                chunks.append("".join(buf))
                buf = []
            else:
                buf.append(ch)
        chunks.append("".join(buf))
        for chunk in chunks:
            m = _TERM.match(chunk)
            if not m:
                raise InvalidParameterError(f"cannot parse function term {chunk.strip()!r}")
            coef = 1.0 + 0j
            if m.group("coef"):
                raw = m.group("coef").strip().replace("i", "j")
                if raw.startswith("(") and raw.endswith(")"):
                    raw = raw[1:-1]
                if raw in ("j", "+j", "-j"):
                    raw = raw.replace("j", "1j")
                try:
                    coef = complex(raw.replace(" ", ""))
                except ValueError as exc:
                    raise InvalidParameterError(f"bad coefficient {m.group('coef')!r}") from exc
            terms.append((coef, GeneratorSpec.from_text(m.group("gen"), endpoints)))
        return cls(tuple(terms))


def _ends_term(buf) -> bool:
    """A '+' separates terms only after a blank; '1e+3' stays a number."""
    return bool(buf) and buf[-1] == " "


def sample(spec, domain, M: int) -> SampledFunction:
    """Evaluate a generator (or combination) on the uniform M-point grid of ``domain``."""
    if M < 2:
        raise InvalidParameterError("grid size must be at least 2")
    if isinstance(spec, str):
        spec = FunctionExpr.from_text(spec)
    a, b = float(domain[0]), float(domain[1])
    t = np.linspace(a, b, M)
    return SampledFunction((a, b), spec.evaluate(t, (a, b)))


# random test pairs ---------------------------------------------------------------

ROUGH_SIGMAS = (0.3, 0.4, 0.5, 0.6, 0.7, 0.8)
TAKAGI_WEIGHTS = (0.5, 0.6, 0.7)


def random_rough(rng: np.random.Generator) -> str:
    """A Weierstrass (base 2 or 3, random phase) or Takagi generator."""
    if rng.integers(0, 2) == 0:
        lam = int(rng.choice([2, 3]))
        sigma = float(rng.choice(ROUGH_SIGMAS))
        phase = round(float(rng.uniform(0.0, 2 * np.pi)), 3)
        return f"weierstrass:{lam},{sigma},{phase}"
    return f"takagi:{float(rng.choice(TAKAGI_WEIGHTS))}"


def random_smooth(rng: np.random.Generator) -> str:
    """A Lipschitz generator: quadratic, one sine, constant or line, coefficients O(1)."""
    kind = rng.integers(0, 4)
    u = lambda lo, hi: round(float(rng.uniform(lo, hi)), 3)  # noqa: E731
    if kind == 0:
        return f"polynomial:{u(-1, 1)},{u(-1, 1)},{u(-1, 1)}"
    if kind == 1:
        return f"trig-sum:{u(0.1, 1)},1,{u(0, 2 * np.pi)}"
    if kind == 2:
        return f"constant:{u(-1, 1)}"
    return f"linear-through-endpoints:0,0,{u(-1, 1)},0"


def random_pair(rng: np.random.Generator) -> Tuple[str, str]:
    """``(g, h)``: rough with smooth h two times in three, otherwise two rough functions."""
    if rng.integers(0, 3) < 2:
        return random_rough(rng), random_smooth(rng)
    return random_rough(rng), random_rough(rng)
