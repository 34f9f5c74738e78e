"""Laws of Rademacher sums ``Ta = sum a_k r_k``.

The exact law comes from convolving the two-point laws of ``a_k r_k`` one
coefficient at a time, merging equal values. Rational coefficients are
scaled to integers first, so the values stay exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property, reduce

import numpy as np

from .core import StepFunction, as_sequence, rearrange_sequence
from .kfunc import holmstedt_head, k_l1_l2_seq

EXACT_CAP = 24
MC_CHUNK = 1 << 16


@dataclass(frozen=True, eq=False)
class Distribution:
    """Atoms ``(value, measure)`` with values strictly decreasing."""

    values: np.ndarray
    measures: np.ndarray

    def __post_init__(self):
        if len(self.values) != len(self.measures):
            raise ValueError("values and measures differ in length")
        if len(self.values) > 1 and not np.all(self.values[:-1] > self.values[1:]):
            raise ValueError("atom values must be strictly decreasing")
        if not np.all(self.measures > 0):
            raise ValueError("atom measures must be positive")

    @classmethod
    def from_samples(cls, samples) -> "Distribution":
        vals, counts = np.unique(np.asarray(samples, dtype=float), return_counts=True)
        return cls(vals[::-1], counts[::-1] / counts.sum())

    @property
    def exact(self) -> bool:
        return self.values.dtype == object

    @property
    def total(self):
        return sum(self.measures) if self.exact else float(np.sum(self.measures))

    def __len__(self) -> int:
        return len(self.values)

    def abs_rearrangement(self, domain: str = "unit") -> StepFunction:
        """``|X|^*`` as a step function on ``(0, total]``."""
        a = np.abs(self.values)
        if self.exact:
            merged: dict = {}
            for v, m in zip(a, self.measures):
                merged[v] = merged.get(v, 0) + m
            vals = sorted(merged, reverse=True)
            widths = [merged[v] for v in vals]
            breaks = np.cumsum(np.array(widths, dtype=object))
            return StepFunction(breaks, np.array(vals, dtype=object), domain)
        uniq, inv = np.unique(a, return_inverse=True)
        w = np.bincount(inv, weights=self.measures.astype(float))
        breaks = np.cumsum(w[::-1])
        # atoms lighter than one ulp of the running total leave no piece
        keep = np.diff(breaks, prepend=0.0) > 0
        breaks, vals = breaks[keep], uniq[::-1][keep].astype(float)
        if domain == "unit":
            breaks[-1] = 1.0
        return StepFunction(breaks, vals, domain)

    def cdf(self, x) -> np.ndarray:
        """``P(X <= x)`` in floating point."""
        v = self.values.astype(float)[::-1]
        c = np.cumsum(self.measures.astype(float)[::-1])
        idx = np.searchsorted(v, np.asarray(x, dtype=float), side="right")
        return np.where(idx > 0, c[np.maximum(idx - 1, 0)], 0.0)


def tail_probability(d: Distribution, tau) -> float:
    """``meas{|X| > tau}`` (strict)."""
    hit = np.abs(d.values) > tau
    return sum(d.measures[hit]) if d.exact else float(np.sum(d.measures[hit]))


def upper_tail_probability(d: Distribution, tau) -> float:
    """``meas{X > tau}`` (strict), the one-sided set in the lower tail bound."""
    hit = d.values > tau
    return sum(d.measures[hit]) if d.exact else float(np.sum(d.measures[hit]))


def kolmogorov_distance(p: Distribution, q: Distribution) -> float:
    pts = np.union1d(p.values.astype(float), q.values.astype(float))
    return float(np.max(np.abs(p.cdf(pts) - q.cdf(pts))))


@dataclass(frozen=True, eq=False)
class RademacherSum:
    coeffs: np.ndarray
    law: Distribution

    @cached_property
    def as_step(self) -> StepFunction:
        """``|Ta|^*`` on ``(0, 1]``."""
        return self.law.abs_rearrangement()

    @property
    def ess_sup(self):
        return abs(self.law.values[0])


def _convolve_signs(vals: np.ndarray, counts: np.ndarray, c) -> tuple[np.ndarray, np.ndarray]:
    both = np.concatenate([vals + c, vals - c])
    weights = np.concatenate([counts, counts])
    uniq, inv = np.unique(both, return_inverse=True)
    merged = np.zeros(len(uniq), dtype=counts.dtype)
    np.add.at(merged, inv.ravel(), weights)
    return uniq, merged


def synthesize_exact(a, cap: int = EXACT_CAP) -> RademacherSum:
    """Exact law of ``sum a_k r_k``; rational coefficients give rational atoms."""
    arr = as_sequence(a)
    n = len(arr)
    if n > cap:
        raise ValueError(
            f"exact synthesis is capped at {cap} coefficients (got {n}); "
            "use sample_monte_carlo or synthesize_lattice instead"
        )
    if arr.dtype == object:
        denom = reduce(math.lcm, (c.denominator for c in arr), 1)
        nums = [int(c * denom) for c in arr]
        big = sum(abs(v) for v in nums) >= 2**62
        vals = np.zeros(1, dtype=object if big else np.int64)
        counts = np.ones(1, dtype=np.int64)
        for c in nums:
            vals, counts = _convolve_signs(vals, counts, c)
        total = 2**n
        values = np.array([Fraction(int(v), denom) for v in vals[::-1]], dtype=object)
        measures = np.array([Fraction(int(c), total) for c in counts[::-1]], dtype=object)
    else:
        vals = np.zeros(1)
        counts = np.ones(1, dtype=np.int64)
        for c in arr:
            vals, counts = _convolve_signs(vals, counts, c)
        values = vals[::-1].copy()
        measures = counts[::-1] / float(2**n)
    return RademacherSum(arr, Distribution(values, measures))


def sample_monte_carlo(a, samples: int, seed: int) -> Distribution:
    """Empirical law of ``sum a_k eps_k`` over ``samples`` random sign vectors.

    Samples are drawn in fixed-size chunks from child streams of one
    ``SeedSequence``, so the result depends only on ``seed`` and ``samples``.
    """
    if samples < 1:
        raise ValueError("need at least one sample")
    arr = as_sequence(a).astype(float)
    chunks = -(-samples // MC_CHUNK)
    streams = np.random.SeedSequence(seed).spawn(chunks)
    out = []
    for i, ss in enumerate(streams):
        m = min(MC_CHUNK, samples - i * MC_CHUNK)
        rng = np.random.default_rng(ss)
        signs = rng.integers(0, 2, size=(m, len(arr)), dtype=np.int8) * 2 - 1
        out.append(signs @ arr if len(arr) else np.zeros(m))
    return Distribution.from_samples(np.concatenate(out))


def synthesize_lattice(a, step: float) -> Distribution:
    """Approximate law of ``sum a_k r_k`` on the grid ``step * Z``.

    Each shift by ``+-a_k`` splits mass linearly between the two nearest
    grid points, which keeps the law symmetric and every partial sum's mean
    exact. Grid error in value is of order ``step``; the added variance per
    coefficient is at most ``step^2 / 4``.
    """
    arr = np.abs(as_sequence(a).astype(float))
    reach = int(math.ceil(arr.sum() / step)) + 2
    p = np.zeros(2 * reach + 1)
    p[reach] = 1.0
    for c in arr:
        s = c / step
        m = int(math.floor(s))
        f = s - m
        q = np.zeros_like(p)
        for shift, w in ((m, 1 - f), (m + 1, f)):
            if w == 0:
                continue
            q[shift:] += 0.5 * w * p[: len(p) - shift] if shift else 0.5 * w * p
            q[: len(p) - shift] += 0.5 * w * p[shift:] if shift else 0.5 * w * p
        p = q
    keep = p > 0
    grid = (np.arange(len(p)) - reach) * step
    vals, meas = grid[keep][::-1], p[keep][::-1]
    return Distribution(vals, meas / meas.sum())


def holmstedt_phi(a, t: float) -> float:
    """``sum_{k<=[t^2]} a_k^* + t (sum_{k>[t^2]} (a_k^*)^2)^{1/2}``."""
    if t <= 0:
        raise ValueError("need t > 0")
    s = rearrange_sequence(a).astype(float)
    m = min(holmstedt_head(t), len(s))
    scale = float(s[0]) if len(s) and s[0] > 0 else 1.0
    tail = scale * math.sqrt(float(np.sum((s[m:] / scale) ** 2)))
    return float(np.sum(s[:m]) + t * tail)


@dataclass(frozen=True)
class MontgomeryReport:
    a: tuple
    t_grid: tuple
    minimal_A: float
    witness: tuple  # (t, lhs, rhs) with the smallest lhs/rhs at minimal_A
    search_cap: float = field(default=math.inf)


def _upper_tails(law: Distribution, taus: np.ndarray) -> np.ndarray:
    """``meas{X > tau}`` for many ``tau`` at once, in floating point."""
    cum = np.concatenate([[0.0], np.cumsum(law.measures.astype(float))])
    k = np.searchsorted(-law.values.astype(float), -np.asarray(taus, dtype=float), side="left")
    return cum[k]


def _montgomery_ok(law: Distribution, phis: np.ndarray, t: np.ndarray, A: float):
    lhs = _upper_tails(law, phis / A)
    rhs = np.exp(-A * t**2) / A
    return bool(np.all(lhs >= rhs)), lhs, rhs


def montgomery_smith_min_A(a, t_grid, search_cap: float = 100.0, tol: float = 1e-3, law: Distribution | None = None) -> MontgomeryReport:
    """Smallest ``A`` in ``[1, search_cap]`` with
    ``meas{Ta > phi_a(t)/A} >= exp(-A t^2)/A`` on every grid point.

    ``phi_a`` is the exact ``K(t, a; l_1, l_2)``. Raising ``A`` lowers the
    threshold and the right side alike, so the condition is monotone in
    ``A`` and bisection applies. ``minimal_A`` is ``inf`` when even the cap
    fails; the witness then records the failing grid point.
    """
    t = np.asarray(t_grid, dtype=float)
    if law is None:
        law = synthesize_exact(np.asarray(as_sequence(a), dtype=float)).law
    phis = np.asarray(k_l1_l2_seq(a, t), dtype=float)

    def witness(A):
        _, lhs, rhs = _montgomery_ok(law, phis, t, A)
        with np.errstate(divide="ignore"):
            i = int(np.argmin(lhs / rhs))
        return (float(t[i]), float(lhs[i]), float(rhs[i]))

    ok, _, _ = _montgomery_ok(law, phis, t, search_cap)
    key = tuple(float(v) for v in np.asarray(a, dtype=float))
    if not ok:
        return MontgomeryReport(key, tuple(t), math.inf, witness(search_cap), search_cap)
    lo, hi = 1.0, float(search_cap)
    if _montgomery_ok(law, phis, t, lo)[0]:
        hi = lo
    while hi - lo > tol:
        mid = (lo + hi) / 2
        if _montgomery_ok(law, phis, t, mid)[0]:
            hi = mid
        else:
            lo = mid
    return MontgomeryReport(key, tuple(t), hi, witness(hi), search_cap)
