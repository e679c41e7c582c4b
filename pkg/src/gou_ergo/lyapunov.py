"""Norm-like test functions for the drift conditions.

Three families, each even in ``x`` and given in closed form for
``|x| >= cutoff``:

* ``LogPow(alpha)``:        ``(log|x|)^alpha``
* ``ExpLogPow(gamma, a)``:  ``exp(gamma (log|x|)^a)``
* ``AbsPow(beta)``:         ``|x|^beta``

Inside the cutoff the function is the even quartic ``a0 + a2 x^2 + a4 x^4``
matching value, slope and curvature at ``±cutoff``, so f is C^2 with
closed-form derivatives everywhere.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


def _closed(kind, tag, y):
    """g, g', g'' of the closed form at ``y > 1``."""
    L = np.log(y)
    if tag == "logpow":
        a = kind[0]
        g = L ** a
        d1 = a * L ** (a - 1) / y
        d2 = a * L ** (a - 2) * ((a - 1) - L) / y ** 2
    elif tag == "explogpow":
        gam, a = kind
        g = np.exp(gam * L ** a)
        d1 = g * gam * a * L ** (a - 1) / y
        d2 = g * gam * a / y ** 2 * (gam * a * L ** (2 * a - 2) + (a - 1) * L ** (a - 2) - L ** (a - 1))
    else:
        b = kind[0]
        g = y ** b
        d1 = b * y ** (b - 1)
        d2 = b * (b - 1) * y ** (b - 2)
    return g, d1, d2


def _quartic(g, d1, d2, c):
    a4 = (d2 - d1 / c) / (8 * c * c)
    a2 = d1 / (2 * c) - 2 * a4 * c * c
    a0 = g - a2 * c * c - a4 * c ** 4
    return a0, a2, a4


_BASE_CUTOFF = {"logpow": 3.0, "explogpow": math.e, "abspow": 1.0}


@dataclass(frozen=True)
class LyapunovFn:
    tag: str                       # logpow | explogpow | abspow
    params: tuple
    cutoff: float = field(default=None)

    def __post_init__(self):
        t, p = self.tag, tuple(float(v) for v in self.params)
        object.__setattr__(self, "params", p)
        if t == "logpow":
            if not p[0] >= 1:
                raise ValueError("LogPow needs alpha >= 1")
        elif t == "explogpow":
            if not (p[0] > 0 and 0 < p[1] < 1):
                raise ValueError("ExpLogPow needs gamma > 0 and 0 < alpha < 1")
        elif t == "abspow":
            if not 0 < p[0] <= 1:
                raise ValueError("AbsPow needs 0 < beta <= 1")
        else:
            raise ValueError(f"unknown Lyapunov family {t!r}")
        base = self.base_cutoff
        if self.cutoff is None:
            object.__setattr__(self, "cutoff", self._grow_cutoff(base))
        elif self.cutoff < base:
            raise ValueError(f"cutoff must be >= {base:.6g} for {t}")
        object.__setattr__(self, "_coef", _quartic(*_closed(p, t, self.cutoff), self.cutoff))

    @property
    def base_cutoff(self) -> float:
        if self.tag == "logpow" and self.params[0] == 1.0:
            return math.e
        return _BASE_CUTOFF[self.tag]

    @property
    def floor(self) -> float:
        return 0.0 if self.tag == "abspow" else 1.0

    def _grow_cutoff(self, c: float) -> float:
        # the quartic extension must stay above the floor on [0, c]
        for _ in range(400):
            a0, a2, a4 = _quartic(*_closed(self.params, self.tag, c), c)
            x = np.linspace(0, c, 513)
            if np.min(a0 + a2 * x * x + a4 * x ** 4) >= self.floor:
                return c
            c *= 1.05
        raise ValueError("no admissible cutoff found")

    # -- evaluation --------------------------------------------------------

    def _split(self, x):
        x = np.asarray(x, dtype=float)
        y = np.abs(x)
        return x, y, y >= self.cutoff

    def __call__(self, x):
        x, y, far = self._split(x)
        a0, a2, a4 = self._coef
        with np.errstate(all="ignore"):
            g = _closed(self.params, self.tag, np.where(far, y, self.cutoff))[0]
        return np.where(far, g, a0 + a2 * y * y + a4 * y ** 4)

    def d1(self, x):
        x, y, far = self._split(x)
        a0, a2, a4 = self._coef
        with np.errstate(all="ignore"):
            g1 = _closed(self.params, self.tag, np.where(far, y, self.cutoff))[1]
        return np.where(far, np.sign(x) * g1, 2 * a2 * x + 4 * a4 * x ** 3)

    def d2(self, x):
        x, y, far = self._split(x)
        a0, a2, a4 = self._coef
        with np.errstate(all="ignore"):
            g2 = _closed(self.params, self.tag, np.where(far, y, self.cutoff))[2]
        return np.where(far, g2, 2 * a2 + 12 * a4 * x * x)

    def log_value_at_log(self, L):
        """``log f(x)`` for ``log|x| = L >= log(cutoff)``, safe for huge ``L``."""
        L = np.asarray(L, dtype=float)
        if self.tag == "logpow":
            return self.params[0] * np.log(L)
        if self.tag == "explogpow":
            return self.params[0] * L ** self.params[1]
        return self.params[0] * L

    # -- drift-condition helpers ------------------------------------------

    def phi(self, v):
        """Concave rate function with ``A f ≈ drift * phi(f)`` at infinity."""
        v = np.asarray(v, dtype=float)
        if self.tag == "logpow":
            a = self.params[0]
            return a * v ** (1 - 1 / a)
        if self.tag == "explogpow":
            gam, a = self.params
            with np.errstate(all="ignore"):
                return a * gam ** (1 / a) * v * np.log(v) ** (1 - 1 / a)
        return self.params[0] * v

    @property
    def condition(self) -> str:
        if self.tag == "logpow" and self.params[0] == 1.0:
            return "CD2"
        return "CD3" if self.tag == "abspow" else "CDsubexp"

    def spec_string(self) -> str:
        return f"{self.tag}:" + ",".join(repr(p) for p in self.params)


def LogPow(alpha: float, cutoff=None) -> LyapunovFn:
    return LyapunovFn("logpow", (alpha,), cutoff)


def ExpLogPow(gamma: float, alpha: float, cutoff=None) -> LyapunovFn:
    return LyapunovFn("explogpow", (gamma, alpha), cutoff)


def AbsPow(beta: float, cutoff=None) -> LyapunovFn:
    return LyapunovFn("abspow", (beta,), cutoff)


def parse_lyapunov(text: str) -> LyapunovFn:
    """``log``, ``logpow:1.5``, ``explogpow:0.5,0.5`` or ``abspow:0.5``."""
    tag, _, rest = text.strip().lower().partition(":")
    if tag == "log":
        return LogPow(1.0)
    try:
        params = tuple(float(p) for p in rest.split(",")) if rest else ()
    except ValueError:
        raise ValueError(f"bad Lyapunov parameters in {text!r}") from None
    n = {"logpow": 1, "explogpow": 2, "abspow": 1}.get(tag)
    if n is None or len(params) != n:
        raise ValueError(f"cannot parse Lyapunov function {text!r}")
    return LyapunovFn(tag, params)


def subadditivity_constant(f, xmax: float = 1e6, n: int = 241) -> float:
    """Scan estimate of ``sup f(x+y) - f(x) - f(y)`` over a symmetric log grid."""
    pos = np.geomspace(1e-3, xmax, n // 2)
    g = np.concatenate([-pos[::-1], [0.0], pos])
    X, Y = np.meshgrid(g, g)
    return float(np.max(f(X + Y) - f(X) - f(Y)))
