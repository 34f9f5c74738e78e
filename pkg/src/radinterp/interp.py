"""Real-method norms, generalized Marcinkiewicz norms, dilation indices and
the sequence realizing a prescribed K-functional."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import HALF_LINE, UNIT, ConcaveFn, _golden_max
from .kfunc import endpoint_norms, engine
from .norms import LINF, LatticeParam, lattice_norm


@dataclass(frozen=True)
class KMethodReport:
    value: float
    tail: float  # size of the K-sequence outside the window, bounded above
    tail_excess: float  # part of ``tail`` that could change ``value``
    k_min: int
    k_max: int
    couple: str


def _k_sequence(subject, couple: str, E: LatticeParam, q: float | None) -> np.ndarray:
    return np.asarray(engine(couple, q)(subject, np.exp2(E.ks.astype(float))), dtype=float)


def kmethod_report(subject, couple: str, E: LatticeParam, q: float | None = None) -> KMethodReport:
    """``||(K(2^k, x))_k||_E`` over the window of ``E``, with a tail bound.

    Off the window ``K(2^k) <= min(||x||_{X0}, 2^k ||x||_{X1})``, which
    ``E.tail_bound`` turns into a bound on the discarded part.
    """
    value = lattice_norm(_k_sequence(subject, couple, E, q), E)
    n0, n1 = endpoint_norms(subject, couple, q)
    tail = E.tail_bound(lambda k: np.minimum(n0, np.exp2(k) * n1))
    excess = max(0.0, tail - value) if E.kind == LINF else tail
    return KMethodReport(value, tail, excess, E.k_min, E.k_max, couple)


def kmethod_norm(subject, couple: str, E: LatticeParam, q: float | None = None) -> float:
    return kmethod_report(subject, couple, E, q).value


def gen_marcinkiewicz_norm(
    x,
    couple: str,
    phi: ConcaveFn,
    q: float | None = None,
    log2_range: tuple[float, float] = (-40.0, 40.0),
    points: int = 161,
) -> float:
    """``sup_t K(t, x) / phi(t)`` on a log grid, refined around the best point."""
    K = engine(couple, q)
    t = np.exp2(np.linspace(*log2_range, points))
    with np.errstate(divide="ignore", invalid="ignore"):
        r = np.asarray(K(x, t), dtype=float) / phi(t)
    r = np.where(np.isfinite(r), r, -np.inf)
    i = int(np.argmax(r))
    best = float(r[i])
    if best <= 0:
        return max(best, 0.0)
    f = lambda e: float(K(x, 2.0**e)) / float(phi(2.0**e))
    e = np.log2(t)
    for j in (i - 1, i):
        if 0 <= j < len(t) - 1:
            _, v = _golden_max(f, float(e[j]), float(e[j + 1]), rtol=1e-12)
            best = max(best, v)
    return best


def phi_rho(phi0: ConcaveFn, phi1: ConcaveFn, rho: ConcaveFn) -> ConcaveFn:
    """``phi0(t) rho(phi1(t) / phi0(t))``."""
    return ConcaveFn(
        lambda t: phi0(t) * rho(phi1(t) / phi0(t)),
        phi0.domain,
        claims_concave=False,
        claims_zero_at_origin=phi0.claims_zero_at_origin,
        name=f"{phi0.name}*rho({phi1.name}/{phi0.name})",
    )


def _s_window(domain: str, log2_t: float, span: float) -> tuple[float, float]:
    """Range of ``log2 s`` keeping ``s`` and ``st`` in the domain."""
    if domain == UNIT:
        hi = min(0.0, -log2_t)
        return hi - span, hi
    return max(-span, -span - log2_t), min(span, span - log2_t)


def _dilation_sup(f: ConcaveFn, t: float, size: int, span: float) -> float:
    lo, hi = _s_window(f.domain, math.log2(t), span)
    s = np.exp2(np.linspace(lo, hi, size))
    with np.errstate(divide="ignore", invalid="ignore"):
        r = f(s * t) / f(s)
    return float(np.max(r[np.isfinite(r)]))


def dilation_function(f: ConcaveFn, t: float, s_grid_size: int = 64, span: float = 64.0, rtol: float = 1e-4, max_size: int = 1 << 16) -> float:
    """``M_f(t) = sup_s f(st) / f(s)`` over a log-spaced ``s`` grid.

    The grid doubles until the sup changes by less than ``rtol`` relative.
    """
    if t <= 0:
        raise ValueError("need t > 0")
    size = s_grid_size
    prev = _dilation_sup(f, t, size, span)
    while size < max_size:
        size *= 2
        cur = _dilation_sup(f, t, size, span)
        if abs(cur - prev) <= rtol * abs(cur):
            return cur
        prev = cur
    return prev


@dataclass(frozen=True)
class DilationIndices:
    gamma: float
    delta: float
    grid_meta: dict = field(default_factory=dict)


def _extrapolate(j: np.ndarray, v: np.ndarray, window: int = 5) -> tuple[float, float]:
    """Limit of ``v_j`` under ``v_j = L + (c1 + c2 ln j)/j``, fitted on the
    last ``window`` points; spread is the range over shifted windows."""
    if np.ptp(v) == 0:
        return float(v[-1]), 0.0
    design = lambda jj: np.column_stack([np.ones_like(jj), 1 / jj, np.log(jj) / jj])
    fits = []
    for end in range(len(j) - window + 1, len(j) + 1):
        jj, vv = j[end - window : end], v[end - window : end]
        coef, *_ = np.linalg.lstsq(design(jj), vv, rcond=None)
        fits.append(coef[0])
    return float(fits[-1]), float(np.ptp(fits))


def dilation_indices(f: ConcaveFn, j_range: tuple[int, int] = (10, 30), extend: bool = False, spread_tol: float = 0.1) -> DilationIndices:
    """Lower and upper dilation indices from ``ln M_f(t) / ln t``.

    ``gamma`` uses ``t = 2^{-j}`` and ``delta`` uses ``t = 2^j``. On the unit
    interval ``delta`` is taken over ``s, st <= 1``; ``extend=True`` instead
    continues ``f`` linearly past 1 as ``f(1) t``.
    """
    if extend and f.domain == UNIT:
        f1 = float(f(1.0))
        f = ConcaveFn(lambda u: np.where(u <= 1, f(np.minimum(u, 1.0)), f1 * u), HALF_LINE, f.claims_concave, f.claims_zero_at_origin, f.name)
    j = np.arange(j_range[0], j_range[1] + 1, dtype=float)
    lows = np.array([math.log(dilation_function(f, 2.0**-jj)) / (-jj * math.log(2)) for jj in j])
    highs = np.array([math.log(dilation_function(f, 2.0**jj)) / (jj * math.log(2)) for jj in j])
    gamma, g_spread = _extrapolate(j, lows)
    delta, d_spread = _extrapolate(j, highs)
    meta = {
        "j": [int(v) for v in j],
        "gamma_raw": lows.tolist(),
        "delta_raw": highs.tolist(),
        "gamma_spread": g_spread,
        "delta_spread": d_spread,
        "domain": f.domain,
        "non_convergent": bool(max(g_spread, d_spread) > spread_tol),
    }
    return DilationIndices(gamma, delta, meta)


@dataclass(frozen=True)
class RealizerSpec:
    f: ConcaveFn
    n: int
    a: np.ndarray
    flags: tuple = ()


def check_class_F(f: ConcaveFn, tol: float = 1e-12, far: float = 2.0**40) -> tuple[list[str], list[str]]:
    """Membership checks for concave ``f`` with ``f(t) = f(1) t`` on ``(0, 1]``.

    Returns hard failures and soft flags. Sublinear growth ``f(t)/t -> 0``
    can only be seen up to ``far``, so it is a flag.
    """
    errors = []
    u = np.geomspace(2.0**-30, 1.0, 129)
    f1 = float(f(1.0))
    if not f1 > 0:
        errors.append("f(1) must be positive")
    elif np.any(np.abs(f(u) - f1 * u) > tol * f1):
        errors.append("f is not linear on (0, 1]")
    errors += f.violations(np.geomspace(2.0**-30, far, 513), tol=tol)
    flags = []
    ratio = float(f(far)) / far
    if not ratio < 1e-3 * f1:
        flags.append(f"f(t)/t = {ratio:.3g} at t = {far:.3g}: sublinear growth not evident")
    return errors, flags


def realize_kfunctional(f: ConcaveFn, n: int) -> np.ndarray:
    """``a_k = g(k) - g(k-1)`` with ``g(t) = f(sqrt t)``, ``k = 1..n``."""
    return build_realizer(f, n).a


def build_realizer(f: ConcaveFn, n: int) -> RealizerSpec:
    if n < 8:
        raise ValueError("realizer needs n >= 8")
    errors, flags = check_class_F(f)
    if errors:
        raise ValueError(f"f is not in the class of K-functionals: {'; '.join(errors)}")
    g = np.array(f(np.sqrt(np.arange(0, n + 1, dtype=float))))
    g[0] = f.at_zero()
    a = np.maximum(np.diff(g), 0.0)
    return RealizerSpec(f, n, a, tuple(flags))
