"""Sequences, step functions, rearrangements and the averaging operators.

Step functions are stored as right endpoints of their pieces together with
the piece values; piece ``i`` covers ``(t_{i-1}, t_i]`` with ``t_0 = 0``.
When every breakpoint and value is an ``int`` or ``Fraction`` the arrays are
kept as object arrays of exact rationals, otherwise as ``float64``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Integral, Rational
from typing import Callable, Iterable

import numpy as np

UNIT = "unit"
HALF_LINE = "half_line"
_DOMAINS = (UNIT, HALF_LINE)


def _is_exact(xs: Iterable) -> bool:
    return all(isinstance(v, Rational) and not isinstance(v, bool) for v in xs)


def as_array(xs, exact: bool | None = None) -> np.ndarray:
    """Convert to ``float64``, or to an object array of Fractions when exact."""
    if isinstance(xs, np.ndarray) and xs.dtype != object:
        if exact:
            raise TypeError("cannot make a float array exact")
        return np.asarray(xs, dtype=float)
    items = list(np.ravel(np.asarray(xs, dtype=object)))
    if exact is None:
        exact = len(items) > 0 and _is_exact(items)
    if exact:
        return np.array([Fraction(int(v)) if isinstance(v, Integral) else Fraction(v) for v in items], dtype=object)
    return np.array([float(v) for v in items], dtype=float)


def as_sequence(a) -> np.ndarray:
    """Validate a finite coefficient sequence; keeps exact rationals exact."""
    arr = as_array(a)
    if arr.dtype != object and not np.all(np.isfinite(arr)):
        raise ValueError("sequence entries must be finite")
    return arr


def rearrange_sequence(a) -> np.ndarray:
    """Absolute values sorted nonincreasingly, ``(a_k^*)``."""
    arr = np.abs(as_sequence(a))
    if arr.size == 0:
        return arr
    return np.array(sorted(arr, reverse=True), dtype=arr.dtype)


def seq_dilation(a, n: int) -> np.ndarray:
    """Repeat every entry ``n`` times, keeping order."""
    if int(n) != n or n < 1:
        raise ValueError(f"dilation factor must be a positive integer, got {n!r}")
    return np.repeat(as_sequence(a), int(n))


@dataclass(frozen=True, eq=False)
class StepFunction:
    """Piecewise-constant function on ``(0, 1]`` or ``(0, inf)``.

    ``breaks`` holds the right endpoints ``t_1 < ... < t_m`` and ``values``
    the value on each piece. Construction canonicalizes: adjacent equal values
    are merged, and on the half line trailing zero pieces are dropped so that
    ``t_m`` is the end of the support.
    """

    breaks: np.ndarray
    values: np.ndarray
    domain: str = UNIT

    def __post_init__(self):
        if self.domain not in _DOMAINS:
            raise ValueError(f"unknown domain {self.domain!r}")
        b_raw, v_raw = self.breaks, self.values
        if all(isinstance(z, np.ndarray) and z.dtype.kind == "f" for z in (b_raw, v_raw)):
            exact = False
        else:
            b_raw = list(np.ravel(np.asarray(b_raw, dtype=object)))
            v_raw = list(np.ravel(np.asarray(v_raw, dtype=object)))
            exact = _is_exact(b_raw + v_raw)
        b = as_array(b_raw, exact=exact).ravel()
        v = as_array(v_raw, exact=exact).ravel()
        if len(b) != len(v):
            raise ValueError("breaks and values must have equal length")
        if not exact:
            if not (np.all(np.isfinite(b)) and np.all(np.isfinite(v))):
                raise ValueError("breakpoints and values must be finite")
            if self.domain == UNIT and len(b) and abs(b[-1] - 1.0) <= 1e-12:
                b = b.copy()
                b[-1] = 1.0
        if len(b):
            widths = np.diff(np.concatenate([as_array([0], exact=exact), b]))
            if not np.all(widths > 0):
                raise ValueError("breakpoints must be strictly increasing and positive")
        if self.domain == UNIT and (len(b) == 0 or b[-1] != 1):
            raise ValueError("unit-interval step functions must end at t_m = 1")
        if len(v) > 1:
            keep = np.append(v[:-1] != v[1:], True).astype(bool)
            b, v = b[keep], v[keep]
        if self.domain == HALF_LINE:
            nz = np.flatnonzero(v != 0)
            m = nz[-1] + 1 if len(nz) else 0
            b, v = b[:m], v[:m]
        b = b.copy()
        v = v.copy()
        b.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "breaks", b)
        object.__setattr__(self, "values", v)

    @classmethod
    def constant(cls, c, domain: str = UNIT, length=1) -> "StepFunction":
        return cls([1 if domain == UNIT else length], [c], domain)

    @classmethod
    def indicator(cls, b, domain: str = UNIT) -> "StepFunction":
        """Indicator of ``(0, b]``."""
        if domain == UNIT and b != 1:
            return cls([b, 1], [1, 0], domain)
        return cls([b], [1], domain)

    @property
    def exact(self) -> bool:
        return self.values.dtype == object

    @property
    def edges(self) -> np.ndarray:
        zero = Fraction(0) if self.exact else 0.0
        return np.concatenate([np.array([zero], dtype=self.breaks.dtype), self.breaks])

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.edges)

    @property
    def length(self):
        """Right end of the represented part of the domain."""
        if len(self.breaks) == 0:
            return 0
        return self.breaks[-1]

    def __len__(self) -> int:
        return len(self.values)

    def __call__(self, u):
        u_arr = np.asarray(u, dtype=float)
        out = np.zeros(u_arr.shape, dtype=float)
        if len(self.values):
            idx = np.searchsorted(self.breaks.astype(float), u_arr, side="left")
            inside = (idx < len(self.values)) & (u_arr > 0)
            out[inside] = self.values.astype(float)[idx[inside]]
        return out if out.ndim else float(out)

    def abs(self) -> "StepFunction":
        return StepFunction(self.breaks, np.abs(self.values), self.domain)

    def to_float(self) -> "StepFunction":
        if not self.exact:
            return self
        return StepFunction(self.breaks.astype(float), self.values.astype(float), self.domain)

    def integral(self, power: int | float = 1):
        """``int |x|^power``; exact for exact functions and integer powers."""
        if len(self.values) == 0:
            return 0
        if self.exact and isinstance(power, int):
            return sum(w * abs(v) ** power for w, v in zip(self.widths, self.values))
        w, v = self.widths.astype(float), np.abs(self.values.astype(float))
        return float(np.sum(w * v**power))

    def __repr__(self) -> str:
        pieces = ", ".join(f"(..{b}]->{v}" for b, v in zip(self.breaks[:6], self.values[:6]))
        more = "" if len(self) <= 6 else f", ... {len(self)} pieces"
        return f"StepFunction({self.domain}: {pieces}{more})"


def rearrange_step(x: StepFunction) -> StepFunction:
    """Nonincreasing rearrangement ``x^*`` of ``|x|``."""
    if len(x) == 0:
        return x
    vals = np.abs(x.values)
    widths = x.widths
    if x.exact:
        order = sorted(range(len(vals)), key=lambda i: vals[i], reverse=True)
    else:
        order = np.argsort(-vals, kind="stable")
    v = vals[order]
    breaks = np.cumsum(widths[order])
    if x.domain == UNIT:
        breaks[-1] = x.length
    return StepFunction(breaks, v, x.domain)


def is_nonincreasing(x: StepFunction) -> bool:
    v = x.values
    return all(v[i] >= v[i + 1] for i in range(len(v) - 1)) and all(val >= 0 for val in v)


def head_integrals(x: StepFunction, u) -> np.ndarray:
    """Vectorized ``int_0^u x(s) ds`` in floating point.

    Past the end of the represented domain the integrand is taken as 0, so
    the result saturates at the total integral.
    """
    u_arr = np.asarray(u, dtype=float)
    if np.any(u_arr <= 0):
        raise ValueError("head integral needs u > 0")
    if len(x) == 0:
        return np.zeros_like(u_arr)
    edges = x.edges.astype(float)
    vals = x.values.astype(float)
    cum = np.concatenate([[0.0], np.cumsum(vals * np.diff(edges))])
    idx = np.clip(np.searchsorted(edges, u_arr, side="left") - 1, 0, len(vals) - 1)
    inside = u_arr < edges[-1]
    out = np.where(inside, cum[idx] + vals[idx] * (np.minimum(u_arr, edges[-1]) - edges[idx]), cum[-1])
    return out


def head_integral(x_star: StepFunction, u):
    """``int_0^u x^*(s) ds``; exact when both ``x_star`` and ``u`` are rational."""
    if u <= 0:
        raise ValueError(f"head integral needs u > 0, got {u!r}")
    if x_star.exact and isinstance(u, Rational):
        total = Fraction(0)
        left = Fraction(0)
        for right, v in zip(x_star.breaks, x_star.values):
            if u <= right:
                return total + v * (u - left)
            total += v * (right - left)
            left = right
        return total
    return float(head_integrals(x_star, u))


def _level(t) -> int:
    """Smallest ``j`` with ``2^{-j} <= t``."""
    if isinstance(t, Fraction):
        j = max(0, math.ceil(math.log2(1 / float(t))) - 1)
        while Fraction(1, 2**j) > t:
            j += 1
        return j
    return max(0, math.ceil(-math.log2(float(t))))


def dyadic_average(y: StepFunction, min_depth: int = 20) -> StepFunction:
    """Dyadic averaging ``U_1 y``.

    On ``(2^{-k}, 2^{-k+1}]`` the value is ``2^k int_0^{2^{-k}} y``. The
    construction stops at depth ``max(level(t_1), min_depth)`` where
    ``2^{-level} <= t_1``; below that level every average equals the first
    piece value, so the head ``(0, 2^{-depth}]`` carries that exact average.
    """
    if y.domain != UNIT:
        raise ValueError("dyadic averaging is defined on the unit interval")
    depth = max(_level(y.breaks[0]), min_depth)
    if y.exact:
        points = [Fraction(1, 2**k) for k in range(depth, -1, -1)]
        avgs = [head_integral(y, p) / p for p in points[:-1]]
        breaks = points
        values = [avgs[0]] + avgs
    else:
        points = 2.0 ** -np.arange(depth, -1, -1)
        avgs = head_integrals(y, points[:-1]) / points[:-1]
        breaks = points
        values = np.concatenate([[avgs[0]], avgs])
    return StepFunction(breaks, values, UNIT)


def unit_average(x: StepFunction) -> np.ndarray:
    """``(int_{k-1}^k x(s) ds)_{k=1..K}`` with ``K = ceil(support end)``."""
    if x.domain != HALF_LINE:
        raise ValueError("unit averaging expects a half-line step function")
    if len(x) == 0:
        return np.zeros(0)
    top = math.ceil(x.length)
    if x.exact:
        cum = [Fraction(0)] + [head_integral(x, Fraction(k)) for k in range(1, top + 1)]
        return np.array([cum[k] - cum[k - 1] for k in range(1, top + 1)], dtype=object)
    cum = np.concatenate([[0.0], head_integrals(x, np.arange(1, top + 1, dtype=float))])
    return np.diff(cum)


def sequence_as_step(a) -> StepFunction:
    """Synthesize ``sum_k a_k chi_{(k-1,k]}`` on the half line."""
    arr = as_sequence(a)
    n = len(arr)
    if n == 0:
        return StepFunction([], [], HALF_LINE)
    breaks = list(range(1, n + 1)) if arr.dtype == object else np.arange(1, n + 1, dtype=float)
    return StepFunction(breaks, arr, HALF_LINE)


@dataclass(frozen=True)
class ConcaveFn:
    """Evaluatable parameter function with its declared properties."""

    fn: Callable[[np.ndarray], np.ndarray]
    domain: str = UNIT
    claims_concave: bool = True
    claims_zero_at_origin: bool = False
    name: str = field(default="", compare=False)

    def __call__(self, t):
        t_arr = np.asarray(t, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            out = np.asarray(self.fn(t_arr), dtype=float)
        out = np.broadcast_to(out, t_arr.shape)
        return out if out.ndim else float(out)

    def at_zero(self, probe: float = 1e-15) -> float:
        """``phi(0+)``: zero if declared, otherwise the value at ``probe``."""
        if self.claims_zero_at_origin:
            return 0.0
        return float(self(probe))

    def violations(self, grid=None, tol: float = 1e-12) -> list[str]:
        if grid is None:
            top = 1.0 if self.domain == UNIT else 2.0**20
            grid = np.geomspace(2.0**-30, top, 257)
        grid = np.asarray(grid, dtype=float)
        vals = self(grid)
        out = []
        if np.any(~np.isfinite(vals)) or np.any(vals < -tol):
            out.append("negative or non-finite values")
        if np.any(np.diff(vals) < -tol * np.maximum(1.0, np.abs(vals[1:]))):
            out.append("not nondecreasing")
        if self.claims_concave:
            mids = self((grid[1:] + grid[:-1]) / 2)
            chord = (vals[1:] + vals[:-1]) / 2
            if np.any(mids < chord - tol * np.maximum(1.0, np.abs(chord))):
                out.append("midpoint concavity fails")
        return out


def power_fn(alpha: float, domain: str = UNIT) -> ConcaveFn:
    return ConcaveFn(lambda t: t**alpha, domain, alpha <= 1, alpha > 0, name=f"t^{alpha}")


def identity_fn(domain: str = UNIT) -> ConcaveFn:
    return ConcaveFn(lambda t: t, domain, True, True, name="t")


def phi_gaussian(domain: str = UNIT) -> ConcaveFn:
    """``u log_2^{1/2}(2/u)``, the Marcinkiewicz function equivalent to ``L_N``."""
    return ConcaveFn(lambda u: u * np.sqrt(np.log2(2.0 / u)), domain, True, True, name="u*log2(2/u)^0.5")


def _golden_max(f: Callable[[float], float], lo: float, hi: float, iters: int = 64, rtol: float = 1e-8):
    """Golden-section search for a maximum of ``f`` on ``[lo, hi]``."""
    g = (math.sqrt(5.0) - 1.0) / 2.0
    c, d = hi - g * (hi - lo), lo + g * (hi - lo)
    fc, fd = f(c), f(d)
    for _ in range(iters):
        if hi - lo <= rtol * max(abs(hi), abs(lo), 1e-300):
            break
        if fc >= fd:
            hi, d, fd = d, c, fc
            c = hi - g * (hi - lo)
            fc = f(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + g * (hi - lo)
            fd = f(d)
    return (c, fc) if fc >= fd else (d, fd)


def sup_head_ratio(
    x_star: StepFunction,
    denom: Callable[[np.ndarray], np.ndarray],
    extra=(),
    refine: str = "adjacent",
    upper: float | None = None,
) -> tuple[float, float]:
    """``sup_{0<u<=upper} int_0^u x^* / denom(u)`` and its maximizer.

    On a piece of ``x^*`` the head integral is affine, so for a concave
    positive ``denom`` the ratio is quasiconvex there and its maximum sits on
    an endpoint. Candidates are therefore the breakpoints, the caller's
    ``extra`` points (where ``denom`` changes branch) and ``upper``. A
    golden-section pass then refines the pieces next to the best candidate,
    or every piece when ``refine="all"``.
    """
    if len(x_star) == 0:
        return 0.0, float(upper or 1.0)
    top = float(x_star.length if upper is None else upper)
    b = x_star.breaks.astype(float)
    extra = np.asarray([e for e in np.ravel(extra) if 0 < e <= top], dtype=float)
    cand = np.unique(np.concatenate([b[b <= top], extra, [top, min(b[0], top) * 1e-12]]))
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = head_integrals(x_star, cand) / np.asarray(denom(cand), dtype=float)
    ratios = np.where(np.isfinite(ratios), ratios, -np.inf)
    i = int(np.argmax(ratios))
    best, arg = float(ratios[i]), float(cand[i])
    if refine == "none":
        return best, arg

    def f(u: float) -> float:
        r = float(head_integrals(x_star, u)) / float(denom(np.asarray(u)))
        return r if math.isfinite(r) else -math.inf

    if refine == "all":
        spans = zip(cand[:-1], cand[1:])
    else:
        spans = [(cand[j], cand[j + 1]) for j in (i - 1, i) if 0 <= j < len(cand) - 1]
    for lo, hi in spans:
        u, r = _golden_max(f, float(lo), float(hi))
        if r > best:
            best, arg = r, u
    return best, arg
