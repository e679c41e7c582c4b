"""Parametric jump-size laws used as components of a finite Levy measure.

A component is a probability law on R^2 describing the joint jump
``(dU, dL)``.  Two shapes occur:

* line components, where one coordinate is fixed and the other follows a
  one-dimensional law (possibly heavy tailed);
* planar components with a bounded, light-tailed density.

Every component integrates functions over regions of the form
``{z1 in [a, b]} ∩ {|z| <= 1 or |z| > 1}`` and splits the quadrature at
the unit circle, at ``z1 = -1`` and at caller supplied breakpoints.
"""

from __future__ import annotations

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .quadrature import ZERO, QuadResult, gk_quad, nested_quad, qsum, tail_scan

INF = math.inf


@dataclass(frozen=True)
class Region:
    """``{z1_lo <= z1 <= z1_hi}`` intersected with the unit disk (``in``),
    its complement (``out``) or nothing (``None``)."""

    z1_lo: float = -INF
    z1_hi: float = INF
    disk: str | None = None


WHOLE = Region()


def _intervals_minus(lo, hi, cut_lo, cut_hi):
    """``[lo, hi]`` minus the open interval ``(cut_lo, cut_hi)``."""
    out = []
    if lo < min(hi, cut_lo):
        out.append((lo, min(hi, cut_lo)))
    if max(lo, cut_hi) < hi:
        out.append((max(lo, cut_hi), hi))
    return out


def _disk_sections(c, lo, hi, disk):
    """Intervals of the moving coordinate v with (c, v) in the disk region."""
    if disk is None:
        return [(lo, hi)] if lo < hi else []
    s = math.sqrt(max(1.0 - c * c, 0.0)) if abs(c) <= 1.0 else None
    if disk == "in":
        if s is None:
            return []
        a, b = max(lo, -s), min(hi, s)
        return [(a, b)] if a < b else []
    if s is None:
        return [(lo, hi)] if lo < hi else []
    return _intervals_minus(lo, hi, -s, s)


# ---------------------------------------------------------------------------
# one-dimensional tail laws
# ---------------------------------------------------------------------------

class TailLaw(ABC):
    """Law of a jump coordinate supported on ``[lo, inf)``.

    Integration runs in a natural variable ``s`` in which the tail is
    tame; ``log_v`` gives ``log v`` without forming ``v`` so that tail
    integrands can be evaluated where ``v`` itself would overflow.
    """

    lo: float
    s_lo: float

    @abstractmethod
    def pdf(self, v): ...

    @abstractmethod
    def sample(self, rng, n): ...

    @abstractmethod
    def v(self, s): ...

    @abstractmethod
    def s(self, v): ...

    @abstractmethod
    def log_v(self, s): ...

    @abstractmethod
    def s_of_log_v(self, logv): ...

    @abstractmethod
    def weight(self, s): ...

    def log_weight(self, s):
        with np.errstate(divide="ignore"):
            return np.log(self.weight(s))

    def integrate(self, h, lo=-INF, hi=INF, points=(), tail=None, tail_start=None,
                  rtol=1e-8) -> QuadResult:
        """``∫_{lo}^{hi} h(v) p(v) dv`` over the support."""
        lo = max(lo, self.lo)
        if hi <= lo:
            return ZERO
        s_lo = self.s(lo)
        pts = [self.s(p) for p in points if lo < p < hi]

        def body(s):
            with np.errstate(all="ignore"):
                return h(self.v(s)) * self.weight(s)

        if math.isfinite(hi):
            return gk_quad(body, s_lo, self.s(hi), pts, rtol=rtol)
        s_sw = max([s_lo + 1.0, 1.0, *[p + 1.0 for p in pts]])
        if tail is not None and tail_start is not None:
            s_sw = max(s_sw, self.s_of_log_v(tail_start))
        head = gk_quad(body, s_lo, s_sw, pts, rtol=rtol)
        if tail is not None:
            def far(s):
                with np.errstate(all="ignore"):
                    return tail(self.log_v(s), self.log_weight(s))
        else:
            far = body
        return head + tail_scan(far, s_sw, rtol=rtol)


class Pareto(TailLaw):
    """``P(v > y) = (scale / y)^theta`` for ``y >= scale``."""

    def __init__(self, theta: float, scale: float = 1.0):
        if theta <= 0 or scale <= 0:
            raise ValueError("pareto needs theta > 0 and scale > 0")
        self.theta, self.scale = float(theta), float(scale)
        self.lo = self.scale
        self.s_lo = 0.0

    def pdf(self, v):
        v = np.asarray(v, dtype=float)
        with np.errstate(all="ignore"):
            return np.where(v >= self.scale, self.theta * self.scale ** self.theta / v ** (self.theta + 1), 0.0)

    def sample(self, rng, n):
        return self.scale * np.exp(rng.standard_exponential(n) / self.theta)

    def v(self, s):
        return self.scale * np.exp(s)

    def s(self, v):
        return math.log(v / self.scale)

    def log_v(self, s):
        return math.log(self.scale) + s

    def s_of_log_v(self, logv):
        return logv - math.log(self.scale)

    def weight(self, s):
        return self.theta * np.exp(-self.theta * s)

    def log_weight(self, s):
        return math.log(self.theta) - self.theta * s


class LogPareto(TailLaw):
    """``v = exp(Y)`` with ``Y`` Pareto(index, scale): only log-moments of
    order below ``index`` are finite."""

    def __init__(self, index: float, scale: float = 1.0):
        if index <= 0 or scale <= 0:
            raise ValueError("logpareto needs index > 0 and scale > 0")
        self.index, self.scale = float(index), float(scale)
        self.lo = math.exp(self.scale)
        self.s_lo = self.scale

    def pdf(self, v):
        v = np.asarray(v, dtype=float)
        with np.errstate(all="ignore"):
            y = np.log(v)
            return np.where(v >= self.lo, self.index * self.scale ** self.index * y ** (-self.index - 1) / v, 0.0)

    def sample(self, rng, n):
        with np.errstate(over="ignore"):
            return np.exp(self.scale * np.exp(rng.standard_exponential(n) / self.index))

    def v(self, s):
        return np.exp(s)

    def s(self, v):
        return math.log(v)

    def log_v(self, s):
        return s

    def s_of_log_v(self, logv):
        return logv

    def weight(self, s):
        return self.index * self.scale ** self.index * s ** (-self.index - 1)

    def log_weight(self, s):
        return math.log(self.index) + self.index * math.log(self.scale) - (self.index + 1) * np.log(s)


class Exponential(TailLaw):
    def __init__(self, rate: float, loc: float = 0.0):
        if rate <= 0:
            raise ValueError("exp needs rate > 0")
        self.rate, self.loc = float(rate), float(loc)
        self.lo = self.loc
        self.s_lo = 0.0

    def pdf(self, v):
        v = np.asarray(v, dtype=float)
        return np.where(v >= self.loc, self.rate * np.exp(-self.rate * (v - self.loc)), 0.0)

    def sample(self, rng, n):
        return self.loc + rng.standard_exponential(n) / self.rate

    def v(self, s):
        return self.loc + s / self.rate

    def s(self, v):
        return (v - self.loc) * self.rate

    def log_v(self, s):
        with np.errstate(divide="ignore"):
            return np.log(np.abs(self.v(s)))

    def s_of_log_v(self, logv):
        # light tail: no need to switch to the asymptotic form
        return 1.0

    def weight(self, s):
        return np.exp(-s)

    def log_weight(self, s):
        return -s


# ---------------------------------------------------------------------------
# two-dimensional components
# ---------------------------------------------------------------------------

class Component(ABC):
    family: str

    @abstractmethod
    def params(self) -> dict: ...

    @abstractmethod
    def pdf(self, z1, z2): ...

    @abstractmethod
    def sample(self, rng, n) -> tuple[np.ndarray, np.ndarray]: ...

    @abstractmethod
    def integrate(self, g, region: Region = WHOLE, z1_points=(), z2_points=(), tail=None,
                  tail_start=None, rtol=1e-8) -> QuadResult:
        """``∫∫_region g(z1, z2) p(z1, z2) dz``.

        ``z2_points`` may be a sequence or a callable of ``z1``.  ``tail``,
        when given, is ``tail(log|v|, log_w, axis, fixed)``: the integrand
        for a huge moving coordinate ``v`` along ``axis`` ('z1' or 'z2',
        the other coordinate being ``fixed``), already multiplied by the
        density weight ``exp(log_w)`` so that products like ``|v|^b * w``
        can be formed in log space.
        """

    def mass(self, region: Region = WHOLE) -> QuadResult:
        return self.integrate(lambda z1, z2: np.ones(np.broadcast(z1, z2).shape), region)

    def to_dict(self) -> dict:
        return {"family": self.family, "params": self.params()}


def _pts(spec, z1):
    return list(spec(z1)) if callable(spec) else list(spec)


class _Z2Line(Component):
    """z1 fixed at ``z1``; z2 follows a tail law."""

    law: TailLaw
    z1: float

    def pdf(self, z1, z2):
        return np.where(np.asarray(z1) == self.z1, self.law.pdf(z2), 0.0)

    def sample(self, rng, n):
        return np.full(n, self.z1), self.law.sample(rng, n)

    def integrate(self, g, region=WHOLE, z1_points=(), z2_points=(), tail=None, tail_start=None, rtol=1e-8):
        c = self.z1
        if not region.z1_lo <= c <= region.z1_hi:
            return ZERO
        pts = _pts(z2_points, c)
        t = None if tail is None else (lambda lv, lw: tail(lv, lw, "z2", c))
        parts = [
            self.law.integrate(lambda v: g(c, v), lo, hi, pts, t, tail_start, rtol)
            for lo, hi in _disk_sections(c, -INF, INF, region.disk)
        ]
        return qsum(parts)


class _Z1Line(Component):
    """z2 fixed at ``z2``; ``z1 = shift + X`` with X from a tail law."""

    law: TailLaw
    z2: float
    shift: float

    def pdf(self, z1, z2):
        return np.where(np.asarray(z2) == self.z2, self.law.pdf(np.asarray(z1) - self.shift), 0.0)

    def sample(self, rng, n):
        return self.shift + self.law.sample(rng, n), np.full(n, self.z2)

    def integrate(self, g, region=WHOLE, z1_points=(), z2_points=(), tail=None, tail_start=None, rtol=1e-8):
        c, sh = self.z2, self.shift
        pts = [p - sh for p in (-1.0, 1.0, *z1_points)]
        t = None if tail is None else (lambda lv, lw: tail(lv, lw, "z1", c))
        parts = []
        for lo, hi in _disk_sections(c, region.z1_lo, region.z1_hi, region.disk):
            # disk sections are in z1 here since z2 is the fixed coordinate
            parts.append(self.law.integrate(lambda x: g(sh + x, c), lo - sh, hi - sh, pts, t, tail_start, rtol))
        return qsum(parts)


class ParetoZ2(_Z2Line):
    family = "pareto_z2"

    def __init__(self, theta, scale=1.0, z1=0.0):
        self.law = Pareto(theta, scale)
        self.z1 = float(z1)

    def params(self):
        return {"theta": self.law.theta, "scale": self.law.scale, "z1": self.z1}


class LogParetoZ2(_Z2Line):
    family = "logpareto_z2"

    def __init__(self, index, scale=1.0, z1=0.0):
        self.law = LogPareto(index, scale)
        self.z1 = float(z1)

    def params(self):
        return {"index": self.law.index, "scale": self.law.scale, "z1": self.z1}


class ExpZ2(_Z2Line):
    family = "exp_z2"

    def __init__(self, rate, loc=0.0, z1=0.0):
        self.law = Exponential(rate, loc)
        self.z1 = float(z1)

    def params(self):
        return {"rate": self.law.rate, "loc": self.law.loc, "z1": self.z1}


class ParetoZ1Shift(_Z1Line):
    family = "pareto_z1shift"

    def __init__(self, theta, scale=1.0, shift=0.0, z2=0.0):
        self.law = Pareto(theta, scale)
        self.shift = float(shift)
        self.z2 = float(z2)

    def params(self):
        return {"theta": self.law.theta, "scale": self.law.scale, "shift": self.shift, "z2": self.z2}


class UniformRect(Component):
    family = "uniform_rect"

    def __init__(self, a1, b1, a2, b2):
        if not (a1 < b1 and a2 < b2):
            raise ValueError("uniform_rect needs a1 < b1 and a2 < b2")
        self.a1, self.b1, self.a2, self.b2 = map(float, (a1, b1, a2, b2))
        self.density = 1.0 / ((self.b1 - self.a1) * (self.b2 - self.a2))

    def params(self):
        return {"a1": self.a1, "b1": self.b1, "a2": self.a2, "b2": self.b2}

    def pdf(self, z1, z2):
        z1, z2 = np.asarray(z1), np.asarray(z2)
        inside = (z1 >= self.a1) & (z1 <= self.b1) & (z2 >= self.a2) & (z2 <= self.b2)
        return np.where(inside, self.density, 0.0)

    def sample(self, rng, n):
        return rng.uniform(self.a1, self.b1, n), rng.uniform(self.a2, self.b2, n)

    def integrate(self, g, region=WHOLE, z1_points=(), z2_points=(), tail=None, tail_start=None, rtol=1e-8):
        lo, hi = max(self.a1, region.z1_lo), min(self.b1, region.z1_hi)
        if hi <= lo:
            return ZERO

        def pieces(z1):
            pts = _pts(z2_points, z1)
            if abs(z1) < 1:
                s = math.sqrt(1 - z1 * z1)
                pts = pts + [-s, s]
            return [(a, b, pts) for a, b in _disk_sections(z1, self.a2, self.b2, region.disk)]

        # the disk boundary meets the rectangle's z2 edges at kinks of the section length
        kinks = [k * math.sqrt(1 - e * e) for e in (self.a2, self.b2) if abs(e) < 1 for k in (-1, 1)]
        res = nested_quad(g, (lo, hi), [-1.0, 1.0, *kinks, *z1_points], pieces, rtol=rtol)
        return res.scaled(self.density)


class Gaussian2D(Component):
    family = "gaussian2d"
    _WIDTH = 12.0

    def __init__(self, mean, cov):
        self.mean = np.asarray(mean, dtype=float).reshape(2)
        self.cov = np.asarray(cov, dtype=float).reshape(2, 2)
        if not np.allclose(self.cov, self.cov.T) or np.linalg.det(self.cov) <= 0 or self.cov[0, 0] <= 0:
            raise ValueError("gaussian2d needs a symmetric positive definite covariance")
        self.chol = np.linalg.cholesky(self.cov)
        self.s1 = math.sqrt(self.cov[0, 0])
        self.beta = self.cov[0, 1] / self.cov[0, 0]
        self.s_cond = math.sqrt(self.cov[1, 1] - self.cov[0, 1] ** 2 / self.cov[0, 0])

    def params(self):
        return {"mean": self.mean.tolist(), "cov": self.cov.tolist()}

    def pdf(self, z1, z2):
        return stats.multivariate_normal(self.mean, self.cov).pdf(np.stack(np.broadcast_arrays(z1, z2), -1))

    def sample(self, rng, n):
        z = self.mean[:, None] + self.chol @ rng.standard_normal((2, n))
        return z[0], z[1]

    def integrate(self, g, region=WHOLE, z1_points=(), z2_points=(), tail=None, tail_start=None, rtol=1e-8):
        m1, m2 = self.mean
        w = self._WIDTH
        lo, hi = max(m1 - w * self.s1, region.z1_lo), min(m1 + w * self.s1, region.z1_hi)
        if hi <= lo:
            return ZERO
        sc = self.s_cond

        def pieces(z1):
            mc = m2 + self.beta * (z1 - m1)
            pts = _pts(z2_points, z1) + [mc]
            if abs(z1) < 1:
                s = math.sqrt(1 - z1 * z1)
                pts = pts + [-s, s]
            return [(a, b, pts) for a, b in _disk_sections(z1, mc - w * sc, mc + w * sc, region.disk)]

        def h(z1, z2):
            mc = m2 + self.beta * (z1 - m1)
            dens = math.exp(-0.5 * ((z1 - m1) / self.s1) ** 2) / (2 * math.pi * self.s1 * sc)
            return g(z1, z2) * dens * np.exp(-0.5 * ((z2 - mc) / sc) ** 2)

        return nested_quad(h, (lo, hi), [-1.0, 1.0, m1, *z1_points], pieces, rtol=rtol)


FAMILIES = {
    "uniform_rect": UniformRect,
    "gaussian2d": Gaussian2D,
    "pareto_z2": ParetoZ2,
    "exp_z2": ExpZ2,
    "pareto_z1shift": ParetoZ1Shift,
    "logpareto_z2": LogParetoZ2,
}


def make_component(family: str, params: dict) -> Component:
    try:
        cls = FAMILIES[family]
    except KeyError:
        raise ValueError(f"unknown component family {family!r}") from None
    return cls(**params)
