"""Peetre K-functionals for the couples used here, plus a brute-force oracle.

Engines accept a scalar or an array of ``t`` and return the same shape.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from . import norms
from .core import (
    ConcaveFn,
    StepFunction,
    as_sequence,
    head_integral,
    head_integrals,
    rearrange_sequence,
    rearrange_step,
    sup_head_ratio,
)

COUPLES = ("l1_l2", "l1_linf", "linf_G", "l1_l2_fun", "linf_lq")


def _t_array(t) -> np.ndarray:
    t_arr = np.asarray(t, dtype=float)
    if np.any(~(t_arr > 0)):
        raise ValueError("K-functional needs t > 0")
    return t_arr


def _shaped(t, out: np.ndarray):
    return float(out.reshape(())) if np.ndim(t) == 0 else out.reshape(np.shape(t))


def k_l1_l2_seq(a, t):
    """Exact ``K(t, a; l_1, l_2)``.

    The optimal split keeps ``min(|a_k|, lam)`` in ``l_2`` for one level
    ``lam``. With ``j`` entries above ``lam`` the cost is
    ``P_j - j lam + t sqrt(j lam^2 + S_j)``, convex on its bracket, with the
    stationary point ``lam = sqrt(S_j / (t^2 - j))`` when ``t^2 > j``.
    """
    t_arr = _t_array(t).ravel()
    s = rearrange_sequence(a).astype(float)
    if s.size == 0 or s[0] == 0:
        return _shaped(t, np.zeros_like(t_arr))
    # K is homogeneous; normalizing keeps the squares away from underflow
    scale = s[0]
    s = s / scale
    n = len(s)
    j = np.arange(1, n + 1, dtype=float)
    head = np.cumsum(s)
    sq = s**2
    tail_sq = np.concatenate([np.cumsum(sq[::-1])[::-1][1:], [0.0]])
    upper = s
    lower = np.concatenate([s[1:], [0.0]])
    t2 = t_arr[:, None] ** 2
    with np.errstate(divide="ignore", invalid="ignore"):
        stat = np.sqrt(tail_sq[None, :] / (t2 - j[None, :]))
    lam = np.where(t2 > j[None, :], np.clip(np.nan_to_num(stat, nan=0.0), lower, upper), upper)
    cost = head - j * lam + t_arr[:, None] * np.sqrt(j * lam**2 + tail_sq)
    best = np.minimum(cost.min(axis=1), t_arr * math.sqrt(float(np.sum(sq))))
    return _shaped(t, scale * best)


def holmstedt_head(t: float) -> int:
    """Integer part of ``t^2``, robust to rounding just below an integer."""
    t2 = float(t) * float(t)
    m = math.floor(t2)
    if (m + 1) - t2 <= 4 * np.finfo(float).eps * (m + 1):
        m += 1
    return m


def k_l1_linf_fun(x: StepFunction, u):
    """``K(u, x; L_1, L_inf) = int_0^u x^*``; exact for rational inputs."""
    xs = rearrange_step(x)
    if np.ndim(u) == 0 and xs.exact and not isinstance(u, float):
        if u <= 0:
            raise ValueError("K-functional needs t > 0")
        if len(xs) == 0:
            return 0
        return head_integral(xs, min(u, xs.length))
    u_arr = _t_array(u)
    if len(xs) == 0:
        return _shaped(u, np.zeros(u_arr.size))
    return _shaped(u, head_integrals(xs.to_float(), u_arr.ravel()))


def k_linf_G(x: StepFunction, t):
    """``K(t, x; L_inf, G)`` through the Marcinkiewicz-couple sup formula.

    The objective ``(1/u) int_0^u x^* min(1, t / sqrt(log2(2/u)))`` is
    maximized on a breakpoint of ``x^*`` or at ``u = 2^{1 - t^2}``, where the
    weight saturates: inside a piece it is quasiconvex in ``u`` below that
    point and decreasing above it.
    """
    if x.domain != "unit":
        raise ValueError("(L_inf, G) lives on the unit interval")
    t_arr = _t_array(t).ravel()
    xs = rearrange_step(x).to_float()
    if len(xs) == 0 or xs.values[0] == 0:
        return _shaped(t, np.zeros_like(t_arr))
    b = xs.breaks
    top = xs.values[0]

    def average(u):
        # exact on the first piece, where the sup saturates at x*(0+)
        return np.where(u <= b[0], top, head_integrals(xs, u) / u)

    root_log = np.sqrt(np.log2(2.0 / b))
    vals = np.max(average(b)[None, :] * np.minimum(1.0, t_arr[:, None] / root_log[None, :]), axis=1)
    u0 = np.exp2(1.0 - t_arr**2)
    inside = (u0 < 1.0) & (u0 > 0)
    if np.any(inside):
        vals[inside] = np.maximum(vals[inside], average(u0[inside]))
    return _shaped(t, vals)


def _crossings(f, lo_exp: float = -1000.0, hi: float = 1.0, num: int = 2001) -> list[float]:
    grid = np.exp2(np.linspace(lo_exp, math.log2(hi), num))
    with np.errstate(all="ignore"):
        d = np.asarray(f(grid), dtype=float)
    out = []
    for i in np.flatnonzero(np.sign(d[:-1]) * np.sign(d[1:]) < 0):
        g = lambda e: float(f(np.exp2(np.asarray(e))))
        out.append(float(np.exp2(brentq(g, math.log2(grid[i]), math.log2(grid[i + 1]), xtol=1e-15))))
    out += [float(g) for g in grid[np.flatnonzero(d == 0)]]
    return out


def k_marcinkiewicz_pair(x: StepFunction, t, phi0: ConcaveFn, phi1: ConcaveFn, refine: str = "auto"):
    """``K(t, x; M(phi0), M(phi1)) = sup_u int_0^u x^* / max(phi0(u), phi1(u)/t)``.

    Each branch of the max is concave, so the sup is taken over the
    breakpoints of ``x^*`` and the points where the branches cross.
    ``refine="auto"`` skips the golden-section pass when both functions
    claim concavity, since the candidates are then exhaustive.
    """
    t_arr = _t_array(t).ravel()
    xs = rearrange_step(x).to_float()
    out = np.zeros_like(t_arr)
    if len(xs) == 0:
        return _shaped(t, out)
    if refine == "auto":
        refine = "none" if phi0.claims_concave and phi1.claims_concave else "adjacent"
    for i, tv in enumerate(t_arr):
        denom = lambda u, tv=tv: np.maximum(phi0(u), phi1(u) / tv)
        cross = _crossings(lambda u, tv=tv: tv * phi0(u) - phi1(u), hi=float(xs.length))
        out[i], _ = sup_head_ratio(xs, denom, extra=cross, refine=refine)
    return _shaped(t, out)


def k_l1_l2_fun(x: StepFunction, t):
    """Holmstedt-type value ``max(int_0^{t^2} x^*, t (int_{t^2}^inf (x^*)^2)^{1/2})``.

    Equivalent to ``K(t, x; L_1, L_2)`` up to universal constants; this is a
    surrogate, not the K-functional itself.
    """
    t_arr = _t_array(t).ravel()
    xs = rearrange_step(x).to_float()
    if len(xs) == 0:
        return _shaped(t, np.zeros_like(t_arr))
    sq = StepFunction(xs.breaks, xs.values**2, xs.domain)
    head = head_integrals(xs, t_arr**2)
    tail_sq = np.maximum(sq.integral() - head_integrals(sq, t_arr**2), 0.0)
    return _shaped(t, np.maximum(head, t_arr * np.sqrt(tail_sq)))


def k_linf_lq(x: StepFunction, t, q: float):
    """``t (int_0^{min(1, t^-q)} (x^*)^q)^{1/q}`` for the couple ``(L_inf, L_q)``."""
    if not 1 <= q < math.inf:
        raise ValueError("q must lie in [1, inf)")
    t_arr = _t_array(t).ravel()
    xs = rearrange_step(x).to_float()
    if len(xs) == 0:
        return _shaped(t, np.zeros_like(t_arr))
    powered = StepFunction(xs.breaks, xs.values**q, xs.domain)
    with np.errstate(over="ignore"):
        s = np.minimum(float(xs.length), t_arr ** (-q))
    s = np.maximum(s, np.finfo(float).tiny)
    return _shaped(t, t_arr * head_integrals(powered, s) ** (1.0 / q))


# --- brute-force oracle -----------------------------------------------------


def _couple_norms(couple: str, widths: np.ndarray, q: float | None):
    w = np.asarray(widths, dtype=float)
    l1 = lambda v: np.sum(w * np.abs(v), axis=-1)
    linf = lambda v: np.max(np.abs(v), axis=-1)
    l2 = lambda v: np.sqrt(np.sum(w * v**2, axis=-1))
    if couple in ("l1_l2", "l1_l2_fun"):
        return l1, l2
    if couple == "l1_linf":
        return l1, linf
    if couple == "linf_lq":
        lq = lambda v: np.sum(w * np.abs(v) ** q, axis=-1) ** (1.0 / q)
        return linf, lq
    if couple == "linf_G":
        lux = lambda v: norms._luxemburg_rows(np.reshape(v, (-1, len(w))), w, norms.N_gauss, 1e-12, 200).reshape(np.shape(v)[:-1])
        return linf, lux
    raise ValueError(f"unknown couple {couple!r}; expected one of {COUPLES}")


def _zoom_min(obj, lo: float, hi: float, points: int, levels: int) -> tuple[float, float]:
    """Nested grid search for a minimum of a vectorized 1-D objective."""
    best_x, best_f = lo, math.inf
    for _ in range(levels):
        grid = np.linspace(lo, hi, points)
        vals = obj(grid)
        i = int(np.argmin(vals))
        if vals[i] < best_f:
            best_x, best_f = float(grid[i]), float(vals[i])
        step = (hi - lo) / (points - 1)
        lo, hi = max(lo, grid[i] - step), min(hi, grid[i] + step)
    return best_x, best_f


def k_oracle(
    subject,
    t: float,
    couple: str = "l1_l2",
    q: float | None = None,
    grid_points: int = 50,
    max_sweeps: int = 400,
    cap: int = 8,
    rtol: float = 1e-13,
) -> float:
    """Brute-force ``inf ||x0|| + t ||x1||`` over per-piece splits.

    Each piece is split as ``x1 = theta x``, ``x0 = (1 - theta) x`` with
    ``theta`` in ``[0, 1]``. Descent starts from the best uniform ``theta``
    on a ``grid_points`` grid and from the best truncation of either part at
    a level. Each sweep runs nested grid searches per coordinate, plus joint
    moves (rescaling all ``theta``, and moving the pieces tied at the maximum
    of either part together) until the objective stops improving.
    """
    if t <= 0:
        raise ValueError("K-functional needs t > 0")
    if isinstance(subject, StepFunction):
        if couple == "l1_l2":
            raise ValueError("couple l1_l2 takes a sequence")
        v, widths = np.abs(subject.values.astype(float)), subject.widths.astype(float)
    else:
        if couple != "l1_l2":
            raise ValueError(f"couple {couple} takes a StepFunction")
        v = np.abs(as_sequence(subject).astype(float))
        widths = np.ones_like(v)
    if len(v) > cap:
        raise ValueError(f"oracle is capped at {cap} pieces, got {len(v)}")
    if couple == "linf_lq" and (q is None or q < 1):
        raise ValueError("linf_lq needs q >= 1")
    if len(v) == 0 or not np.any(v):
        return 0.0
    n0, n1 = _couple_norms(couple, widths, q)

    def objective(theta: np.ndarray) -> np.ndarray:
        theta = np.atleast_2d(theta)
        return n0((1 - theta) * v) + t * n1(theta * v)

    grid = np.linspace(0.0, 1.0, grid_points)
    uniform = objective(np.repeat(grid[:, None], len(v), axis=1))
    starts = [np.full(len(v), grid[int(np.argmin(uniform))]), np.full(len(v), grid[1])]
    # truncation splits: x1 = clip(x, lam) or x0 = clip(x, lam)
    top_v = float(v.max())
    v_safe = np.where(v > 0, v, top_v)  # zero pieces cost nothing either way
    for clip_x1 in (True, False):
        def level(lam, clip_x1=clip_x1):
            with np.errstate(over="ignore"):
                r = np.minimum(1.0, lam[:, None] / v_safe[None, :])
            return objective(r if clip_x1 else 1.0 - r)

        lam, _ = _zoom_min(level, 0.0, top_v, grid_points, 12)
        with np.errstate(over="ignore"):
            r = np.minimum(1.0, lam / v_safe)
        starts.append(r if clip_x1 else 1.0 - r)
    best = math.inf
    for theta in starts:
        theta = theta.copy()
        f = float(objective(theta)[0])
        for _ in range(max_sweeps):
            f_old = f
            for k in range(len(v)):
                def line(z, k=k):
                    th = np.repeat(theta[None, :], len(z), axis=0)
                    th[:, k] = z
                    return objective(th)
                z, fz = _zoom_min(line, 0.0, 1.0, grid_points, 6)
                if fz < f:
                    theta[k], f = z, fz
            top = float(theta.max())
            if top > 0:
                scale = lambda z: objective(np.clip(z[:, None] * theta[None, :], 0, 1))
                z, fz = _zoom_min(scale, 0.0, 1.0 / top, grid_points, 6)
                if fz < f:
                    theta, f = np.clip(z * theta, 0, 1), fz
            for is_x1 in (True, False):
                part = theta * v if is_x1 else (1 - theta) * v
                tied = part >= part.max() * (1 - 1e-9)
                if tied.all() or not tied.any():
                    continue

                def block(z, tied=tied, is_x1=is_x1):
                    th = np.repeat(theta[None, :], len(z), axis=0)
                    level = z[:, None] / v[tied][None, :]
                    th[:, tied] = level if is_x1 else 1 - level
                    return objective(np.clip(th, 0, 1))

                z, fz = _zoom_min(block, 0.0, float(v[tied].max()), grid_points, 6)
                if fz < f:
                    lvl = z / v[tied]
                    theta[tied] = np.clip(lvl if is_x1 else 1 - lvl, 0, 1)
                    f = float(objective(theta)[0])
            if f_old - f <= rtol * max(f, 1e-300):
                break
        best = min(best, f)
    return float(best)


# --- curves -------------------------------------------------------------------


@dataclass(frozen=True)
class KCurve:
    t_grid: np.ndarray
    values: np.ndarray
    couple_tag: str

    def violations(self, rtol: float = 1e-9) -> list[str]:
        t, k = np.asarray(self.t_grid, float), np.asarray(self.values, float)
        out = []
        if np.any(np.diff(t) <= 0):
            out.append("t grid not increasing")
        scale = np.maximum(np.abs(k[1:]), np.abs(k[:-1]))
        if np.any(k[1:] < k[:-1] - rtol * scale):
            out.append("not nondecreasing")
        r = k / t
        if np.any(r[1:] > r[:-1] + rtol * np.abs(r[:-1])):
            out.append("K(t)/t not nonincreasing")
        slopes = np.diff(k) / np.diff(t)
        if len(slopes) > 1:
            tol = rtol * (np.abs(slopes[:-1]) + r[1:-1])
            if np.any(slopes[1:] > slopes[:-1] + tol):
                out.append("not concave")
        return out


def kcurve(engine, subject, t_grid, couple_tag: str, **kw) -> KCurve:
    t_grid = np.asarray(t_grid, dtype=float)
    return KCurve(t_grid, np.asarray(engine(subject, t_grid, **kw), dtype=float), couple_tag)


def engine(couple: str, q: float | None = None):
    """The K engine for ``couple`` as a function ``(subject, t) -> K``."""
    if couple == "l1_l2":
        return k_l1_l2_seq
    if couple == "l1_linf":
        return k_l1_linf_fun
    if couple == "linf_G":
        return k_linf_G
    if couple == "l1_l2_fun":
        return k_l1_l2_fun
    if couple == "linf_lq":
        if q is None:
            raise ValueError("couple linf_lq needs q")
        return lambda x, t: k_linf_lq(x, t, q)
    raise ValueError(f"unknown couple {couple!r}; expected one of {COUPLES}")


def endpoint_norms(subject, couple: str, q: float | None = None) -> tuple[float, float]:
    """``(||x||_{X0}, ||x||_{X1})``, the limits of ``K(t)`` and ``K(t)/t``."""
    if couple == "l1_l2":
        return norms.seq_lp_norm(subject, 1), norms.seq_lp_norm(subject, 2)
    if couple == "l1_linf":
        return norms.lp_norm(subject, 1), norms.lp_norm(subject, math.inf)
    if couple == "linf_G":
        return norms.lp_norm(subject, math.inf), norms.orlicz_luxemburg_norm(subject)
    if couple == "l1_l2_fun":
        return norms.lp_norm(subject, 1), norms.lp_norm(subject, 2)
    if couple == "linf_lq":
        return norms.lp_norm(subject, math.inf), norms.lp_norm(subject, q)
    raise ValueError(f"unknown couple {couple!r}; expected one of {COUPLES}")
