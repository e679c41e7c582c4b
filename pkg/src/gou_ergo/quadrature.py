"""Adaptive Gauss-Kronrod quadrature used for all Levy-measure integrals.

Three building blocks:

* :func:`gk_quad` - globally adaptive G7/K15 on a finite interval, with
  user breakpoints.  The integrand is called with a 1-D array of nodes,
  so one call evaluates every panel that needs refinement.
* :func:`tail_scan` - integral over ``[r0, inf)`` accumulated over doubling
  panels ``[r_k, 2 r_k]``.  This is where divergence is detected.
* :func:`nested_quad` - iterated integral over a 2-D region whose inner
  limits depend on the outer variable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

# Kronrod 15-point nodes on [0, 1] (symmetric); odd indices are the Gauss 7 nodes.
_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

_NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])          # 15 nodes in [-1, 1]
_WK = np.concatenate([_WGK[:-1], _WGK[::-1]])
_WG15 = np.zeros(15)
_WG15[[1, 3, 5]] = _WG[:3]
_WG15[[9, 11, 13]] = _WG[:3][::-1]
_WG15[7] = _WG[3]

DIVERGENCE_CAP = 1e6


class QuadratureError(ArithmeticError):
    """Raised when an integral cannot be brought within tolerance."""

    def __init__(self, message: str, achieved: float = math.nan):
        super().__init__(message)
        self.achieved = achieved


@dataclass(frozen=True)
class QuadResult:
    value: float
    err: float
    status: str = "converged"      # converged | divergent | undetermined | maxiter
    neval: int = 0
    history: tuple = field(default=(), repr=False)

    @property
    def finite(self) -> bool:
        return self.status in ("converged", "maxiter") and math.isfinite(self.value)

    def __add__(self, other: "QuadResult") -> "QuadResult":
        return QuadResult(
            self.value + other.value,
            self.err + other.err,
            _worse(self.status, other.status),
            self.neval + other.neval,
        )

    def scaled(self, c: float) -> "QuadResult":
        return QuadResult(c * self.value, abs(c) * self.err, self.status, self.neval, self.history)


ZERO = QuadResult(0.0, 0.0)

_RANK = {"converged": 0, "maxiter": 1, "undetermined": 2, "divergent": 3}


def _worse(a: str, b: str) -> str:
    return a if _RANK[a] >= _RANK[b] else b


def qsum(results) -> QuadResult:
    out = ZERO
    for r in results:
        out = out + r
    return out


def _panel_eval(fn, a: np.ndarray, b: np.ndarray):
    half = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    x = mid[:, None] + half[:, None] * _NODES[None, :]
    y = np.asarray(fn(x.ravel()), dtype=float).reshape(x.shape)
    k = half * (y @ _WK)
    g = half * (y @ _WG15)
    return k, np.abs(k - g)


def gk_quad(fn, a: float, b: float, points=(), rtol: float = 1e-8, atol: float = 1e-13,
            max_panels: int = 4000) -> QuadResult:
    """Integrate a vectorized ``fn`` over the finite interval ``[a, b]``.

    Breakpoints in ``points`` falling strictly inside ``(a, b)`` start new
    panels, so kinks, jumps and integrable endpoint singularities located
    there never sit inside a panel.
    """
    if not (math.isfinite(a) and math.isfinite(b)):
        raise ValueError("gk_quad needs finite limits; use tail_scan for infinite ranges")
    if b == a:
        return ZERO
    sign = 1.0
    if b < a:
        a, b, sign = b, a, -1.0
    inner = sorted({float(p) for p in points if a < p < b})
    edges = np.array([a, *inner, b])
    lo, hi = edges[:-1], edges[1:]
    with np.errstate(all="ignore"):
        val, err = _panel_eval(fn, lo, hi)
    neval = 15 * lo.size
    status = "converged"
    while True:
        if not (np.all(np.isfinite(val)) and np.all(np.isfinite(err))):
            return QuadResult(sign * float(np.sum(val)), math.inf, "divergent", neval)
        total, total_err = float(np.sum(val)), float(np.sum(err))
        tol = max(atol, rtol * abs(total))
        if total_err <= tol:
            break
        if lo.size >= max_panels:
            status = "maxiter"
            break
        # refine every panel carrying more than its share of the budget
        share = tol / lo.size
        pick = err > share
        if not np.any(pick):
            pick = err >= err.max()
        widths = hi - lo
        # panels shrunk to rounding level cannot improve further
        pick &= widths > 64 * np.finfo(float).eps * np.maximum(np.abs(lo), np.abs(hi)) + 1e-300
        if not np.any(pick):
            status = "maxiter"
            break
        mid = 0.5 * (lo[pick] + hi[pick])
        new_lo = np.concatenate([lo[pick], mid])
        new_hi = np.concatenate([mid, hi[pick]])
        with np.errstate(all="ignore"):
            nv, ne = _panel_eval(fn, new_lo, new_hi)
        neval += 15 * new_lo.size
        keep = ~pick
        lo = np.concatenate([lo[keep], new_lo])
        hi = np.concatenate([hi[keep], new_hi])
        val = np.concatenate([val[keep], nv])
        err = np.concatenate([err[keep], ne])
    return QuadResult(sign * total, total_err, status, neval)


def tail_scan(fn, r0: float, rtol: float = 1e-8, atol: float = 1e-13,
              max_doublings: int = 200, cap: float = DIVERGENCE_CAP) -> QuadResult:
    """Integrate ``fn`` over ``[r0, inf)`` on doubling panels.

    The integral is declared divergent once the running value exceeds
    ``cap`` while each of the last three panels added more than 1% of it,
    or when four consecutive panels stop shrinking (the borderline
    logarithmic case, which never reaches any cap).  It is declared
    converged when two consecutive panels, plus a geometric estimate of
    everything beyond them, fall below the tolerance.
    """
    r = max(float(r0), 1.0)
    total = 0.0
    total_err = 0.0
    neval = 0
    quiet = 0
    growth = 0
    flat = 0
    stable = 0
    last_rho = None
    last_rho_floor = math.inf
    history = []
    prev = None
    for _ in range(max_doublings):
        part = gk_quad(fn, r, 2.0 * r, rtol=rtol, atol=atol * 1e-3)
        neval += part.neval
        if part.status == "divergent" or not math.isfinite(part.value):
            return QuadResult(math.inf, math.inf, "divergent", neval, tuple(history))
        total += part.value
        total_err += part.err
        history.append((2.0 * r, total))
        tol = max(atol, rtol * abs(total))
        if abs(total) > 0 and abs(part.value) > 0.01 * abs(total):
            growth += 1
        else:
            growth = 0
        if growth >= 3 and abs(total) > cap:
            return QuadResult(math.inf, math.inf, "divergent", neval, tuple(history))
        rho = part.value / prev if prev else 0.0
        settled = last_rho is not None and abs(rho - last_rho) < 1e-4
        if rho >= 1.0 - 1e-6 and (settled or rho >= last_rho_floor) and abs(part.value) > tol:
            flat += 1
            if flat >= 4:
                return QuadResult(math.inf, math.inf, "divergent", neval, tuple(history))
        else:
            flat = 0
        # geometric estimate of the panels not yet summed
        rest = part.value * rho / (1.0 - rho) if 0.0 < rho < 1.0 else 0.0
        if abs(part.value) + abs(rest) + part.err <= tol:
            quiet += 1
            if quiet >= 2:
                return QuadResult(total + rest, total_err + abs(rest) * 1e-2 + abs(part.value) * 1e-2,
                                  "converged", neval)
        else:
            quiet = 0
        # power-law tail: once the panel ratio is constant the remainder is geometric
        # a ratio creeping towards 1 (1/(x log x)-type tails) is not constant
        steady = last_rho is not None and abs(rho - last_rho) <= 1e-3 * (1.0 - rho) ** 2 + 1e-12
        stable = stable + 1 if steady and 0.0 < rho < 1.0 - 1e-3 else 0
        if stable >= 3 and abs(rest) < cap:
            spread = abs(rest) * abs(rho - last_rho) / (1.0 - rho) + abs(rest) * 1e-6
            return QuadResult(total + rest, total_err + spread, "converged", neval, tuple(history))
        last_rho_floor = rho - 1e-3 if last_rho is None else min(rho, last_rho) - 1e-3
        last_rho = rho if prev else None
        prev = part.value if part.value != 0 else prev
        r *= 2.0
        if not math.isfinite(r):
            break
    return QuadResult(total, math.inf, "undetermined", neval, tuple(history))


def nested_quad(g, outer: tuple[float, float], outer_points, inner_pieces,
                rtol: float = 1e-8, atol: float = 1e-13) -> QuadResult:
    """Iterated integral of ``g(z1, z2)`` over a 2-D region.

    ``inner_pieces(z1)`` returns a list of ``(lo, hi, points)`` describing
    the z2-section at ``z1``; ``g`` must accept a scalar ``z1`` and an
    array of ``z2`` values.
    """
    inner_errs = []

    def section(z1s):
        out = np.empty(z1s.shape)
        for i, z1 in enumerate(z1s):
            acc = 0.0
            e = 0.0
            for lo, hi, pts in inner_pieces(float(z1)):
                if hi <= lo:
                    continue
                r = gk_quad(lambda z2: g(float(z1), z2), lo, hi, pts, rtol=0.1 * rtol, atol=0.1 * atol)
                if r.status == "divergent":
                    acc = math.inf
                    break
                acc += r.value
                e += r.err
            out[i] = acc
            inner_errs.append(e)
        return out

    res = gk_quad(section, outer[0], outer[1], outer_points, rtol=rtol, atol=atol)
    spread = max(inner_errs, default=0.0) * (outer[1] - outer[0])
    return QuadResult(res.value, res.err + spread, res.status, res.neval)
