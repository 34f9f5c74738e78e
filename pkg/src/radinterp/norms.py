"""Norms of the function and sequence spaces in play.

Function norms act on :class:`StepFunction` and depend only on the
rearrangement. Sequence norms act on finite coefficient arrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .core import ConcaveFn, StepFunction, rearrange_sequence, rearrange_step, sup_head_ratio

LP = "weighted_lp"
LINF = "weighted_linf"


def N_gauss(t):
    """Young function ``exp(t^2) - 1`` of the exponential Orlicz space."""
    with np.errstate(over="ignore"):
        return np.expm1(np.square(t))


def marcinkiewicz_norm(x: StepFunction, phi: ConcaveFn, refine: str = "adjacent") -> float:
    """``sup_{0<t<=1} phi(t)^{-1} int_0^t x^*``."""
    xs = rearrange_step(x).to_float()
    if len(xs) == 0:
        return 0.0
    value, _ = sup_head_ratio(xs, phi, refine=refine)
    return value


def _luxemburg_rows(values: np.ndarray, widths: np.ndarray, S, rtol: float, max_iter: int) -> np.ndarray:
    """Vectorized Luxemburg norm for rows of piece values sharing ``widths``."""
    v = np.abs(np.atleast_2d(np.asarray(values, dtype=float)))
    w = np.asarray(widths, dtype=float)
    top = v.max(axis=1)
    out = np.zeros(len(v))
    live = top > 0
    if not np.any(live):
        return out
    v, top = v[live], top[live]

    def modular(u):
        with np.errstate(over="ignore", invalid="ignore"):
            return np.sum(w * S(v / u[:, None]), axis=1)

    hi = top.copy()
    for _ in range(max_iter):
        bad = modular(hi) > 1
        if not np.any(bad):
            break
        hi = np.where(bad, hi * 2, hi)
    else:
        raise ArithmeticError("Luxemburg norm: could not bracket from above")
    lo = hi / 2
    for _ in range(max_iter):
        bad = modular(lo) <= 1
        if not np.any(bad):
            break
        lo = np.where(bad, lo / 2, lo)
    else:
        raise ArithmeticError("Luxemburg norm: could not bracket from below")
    for _ in range(max_iter):
        if np.all(hi - lo <= rtol * hi):
            break
        mid = (lo + hi) / 2
        ok = modular(mid) <= 1
        hi = np.where(ok, mid, hi)
        lo = np.where(ok, lo, mid)
    out[live] = hi
    return out


def orlicz_luxemburg_norm(x: StepFunction, S: Callable = N_gauss, tol: float = 1e-13) -> float:
    """``inf{u > 0: int S(|x|/u) <= 1}`` by bracketing and bisection.

    ``S`` must be convex, nonnegative and vanish at 0. The integral over a
    step function is a finite sum over its pieces.
    """
    if len(x) == 0 or not np.any(x.values != 0):
        return 0.0
    xf = x.to_float()
    return float(_luxemburg_rows(xf.values, xf.widths, S, tol, 200)[0])


def lorentz_norm(x: StepFunction, phi: ConcaveFn, p: float) -> float:
    """``(int (x^*)^p dphi)^{1/p}`` as a Stieltjes sum over the pieces of ``x^*``."""
    if p < 1:
        raise ValueError("Lorentz exponent must be >= 1")
    xs = rearrange_step(x).to_float()
    if len(xs) == 0:
        return 0.0
    phis = np.concatenate([[phi.at_zero()], phi(xs.breaks)])
    return float(np.sum(xs.values**p * np.diff(phis)) ** (1.0 / p))


def _scaled_lp(values: np.ndarray, weights, p: float) -> float:
    """``(sum w |v|^p)^{1/p}`` with ``v`` scaled by its max to avoid under/overflow."""
    top = float(values.max()) if values.size else 0.0
    if top == 0:
        return 0.0
    return top * float(np.sum(weights * (values / top) ** p) ** (1.0 / p))


def lp_norm(x: StepFunction, p: float) -> float:
    """``L_p`` norm; ``p = inf`` gives the essential supremum."""
    if len(x) == 0:
        return 0.0
    if math.isinf(p):
        return float(np.max(np.abs(x.values.astype(float))))
    if p < 1:
        raise ValueError("p must be >= 1")
    # evaluated on x* so that equimeasurable inputs give identical floats
    xs = rearrange_step(x)
    return _scaled_lp(np.abs(xs.values.astype(float)), xs.widths.astype(float), p)


def seq_lp_norm(a, p: float) -> float:
    arr = np.abs(np.asarray(a, dtype=float))
    if arr.size == 0:
        return 0.0
    if math.isinf(p):
        return float(arr.max())
    return _scaled_lp(arr, 1.0, p)


def seq_l1log_norm(a) -> float:
    """``sup_k log_2(2k)^{-1} sum_{i<=k} a_i^*``.

    Beyond ``n`` the partial sums stop growing while the weight keeps
    shrinking, so the sup over ``k <= n`` is the sup over all ``k``.
    """
    s = rearrange_sequence(a).astype(float)
    if s.size == 0:
        return 0.0
    k = np.arange(1, len(s) + 1)
    return float(np.max(np.cumsum(s) / np.log2(2 * k)))


def seq_lorentz_rp_norm(a, r: float, p: float) -> float:
    """``(sum (a_k^*)^p k^{p/r - 1})^{1/p}``."""
    if r < 1 or p < 1:
        raise ValueError("need r, p >= 1")
    s = rearrange_sequence(a).astype(float)
    k = np.arange(1, len(s) + 1, dtype=float)
    return float(np.sum(s**p * k ** (p / r - 1)) ** (1.0 / p))


@dataclass(frozen=True)
class LatticeParam:
    """Weighted ``l_p`` or ``l_inf`` lattice of two-sided sequences, truncated."""

    kind: str
    weight: Callable[[np.ndarray], np.ndarray]
    p: float = 1.0
    k_min: int = -40
    k_max: int = 40
    tail_tol: float = 1e-6
    name: str = field(default="", compare=False)

    @property
    def ks(self) -> np.ndarray:
        return np.arange(self.k_min, self.k_max + 1)

    def weights(self, ks=None) -> np.ndarray:
        ks = self.ks if ks is None else np.asarray(ks)
        return np.asarray(self.weight(ks.astype(float)), dtype=float) * np.ones(ks.shape)

    def _combine(self, terms: np.ndarray) -> float:
        terms = np.abs(terms)
        if terms.size == 0:
            return 0.0
        if self.kind == LINF:
            return float(terms.max())
        return float(np.sum(terms**self.p) ** (1.0 / self.p))

    def tail_bound(self, bound: Callable[[np.ndarray], np.ndarray], ext: int = 400) -> float:
        """Size of the part of ``(w_k b_k)`` lying outside the window.

        ``bound`` majorizes the sequence off the window. For ``l_p`` the sum
        over ``ext`` extra indices per side is closed off with a geometric
        remainder; a non-decaying end gives ``inf``.
        """
        hi = np.arange(self.k_max + 1, self.k_max + 1 + ext, dtype=float)
        lo = np.arange(self.k_min - ext, self.k_min, dtype=float)
        parts = []
        for ks, end in ((hi, -1), (lo, 0)):
            terms = np.abs(self.weights(ks) * np.asarray(bound(ks), dtype=float))
            if self.kind == LINF:
                parts.append(terms.max())
                continue
            powered = terms**self.p
            last, prev = (powered[-1], powered[-2]) if end == -1 else (powered[0], powered[1])
            if last == 0:
                rem = 0.0
            elif prev > 0 and last / prev < 1:
                r = last / prev
                rem = last * r / (1 - r)
            else:
                return math.inf
            parts.append(np.sum(powered) + rem)
        if self.kind == LINF:
            return float(max(parts))
        return float(sum(parts) ** (1.0 / self.p))

    def admissibility(self) -> tuple[float, float]:
        """Norm of ``(min(1, 2^k))`` on the window and its tail bound."""
        canon = lambda k: np.minimum(1.0, 2.0**k)
        inside = self._combine(self.weights() * canon(self.ks.astype(float)))
        return inside, self.tail_bound(canon)

    def validate(self) -> None:
        if self.kind not in (LP, LINF):
            raise ValueError(f"unknown lattice kind {self.kind!r}")
        if self.kind == LP and self.p < 1:
            raise ValueError("lattice exponent must be >= 1")
        w = self.weights()
        if np.any(~np.isfinite(w)) or np.any(w <= 0):
            raise ValueError("lattice weights must be positive and finite")
        inside, tail = self.admissibility()
        excess = max(0.0, tail - inside) if self.kind == LINF else tail
        if not math.isfinite(excess) or excess > self.tail_tol * max(inside, 1e-300):
            raise ValueError(
                f"lattice {self.name or self.kind} is not admissible on k in "
                f"[{self.k_min}, {self.k_max}]: tail {tail:.3g} vs window norm {inside:.3g}"
            )


def lattice_norm(s, E: LatticeParam) -> float:
    """Weighted norm of a sequence given on ``E``'s window ``k_min..k_max``."""
    E.validate()
    s = np.asarray(s, dtype=float)
    if s.shape != E.ks.shape:
        raise ValueError(f"window has {s.size} entries, lattice expects {E.ks.size}")
    return E._combine(E.weights() * s)


def example1_lattice(k_min: int = -40, k_max: int = 40) -> LatticeParam:
    """``l_inf(u_k)`` with ``u_k = 1/(k+1)`` for ``k >= 0`` and 1 otherwise."""
    return LatticeParam(LINF, lambda k: np.where(k >= 0, 1.0 / (np.maximum(k, 0) + 1), 1.0), np.inf, k_min, k_max, name="l_inf(u_k)")


def theta_p_lattice(theta: float, p: float, k_min: int = -80, k_max: int = 80, tail_tol: float = 1e-6) -> LatticeParam:
    """``l_p(2^{-k theta})``; the K-method space is the ``(theta, p)`` real space."""
    kind = LINF if math.isinf(p) else LP
    return LatticeParam(kind, lambda k: 2.0 ** (-k * theta), p, k_min, k_max, tail_tol, name=f"l_{p}(2^-k{theta})")
