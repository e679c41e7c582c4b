"""Bivariate Levy triplets with finite jump measures.

The jump measure ``nu`` of ``(U, L)`` is a finite sum of weighted atoms and
weighted probability laws (see :mod:`gou_ergo.families`).  Integrals
against ``nu`` and its one-dimensional views (the U-marginal, the
projection ``nu'`` of the mass outside the unit disk onto ``[-1, 1]``)
are computed by quadrature with error estimates.

Truncation convention: the drift ``gamma`` belongs to the triplet with
indicator ``I(|z| <= 1)``.  Since every jump is simulated, the drift
actually applied between jumps is ``gamma - ∫_{|z|<=1} z nu(dz)``.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable

import numpy as np

from .families import FAMILIES, WHOLE, Component, Region, make_component
from .quadrature import ZERO, QuadResult, QuadratureError, gk_quad, qsum

INF = math.inf
TOL_PSD = 1e-12
SPEC_VERSION = 1


@dataclass(frozen=True)
class Atom:
    z1: float
    z2: float
    mass: float

    def in_region(self, region: Region) -> bool:
        if not region.z1_lo <= self.z1 <= region.z1_hi:
            return False
        r2 = self.z1 ** 2 + self.z2 ** 2
        if region.disk == "in":
            return r2 <= 1.0
        if region.disk == "out":
            return r2 > 1.0
        return True


@dataclass(frozen=True)
class JumpMeasure:
    atoms: tuple[Atom, ...] = ()
    components: tuple[tuple[float, Component], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "atoms", tuple(Atom(*a) if not isinstance(a, Atom) else a for a in self.atoms))
        object.__setattr__(self, "components", tuple((float(w), c) for w, c in self.components))

    @property
    def total_rate(self) -> float:
        return sum(a.mass for a in self.atoms) + sum(w for w, _ in self.components)

    @property
    def is_zero(self) -> bool:
        return not self.atoms and not self.components

    def integrate(self, g: Callable, region: Region = WHOLE, z1_points=(), z2_points=(),
                  tail=None, tail_start=None, rtol: float = 1e-8) -> QuadResult:
        """``∫∫_region g(z1, z2) nu(dz)``; ``tail`` as in :meth:`Component.integrate`."""
        val = 0.0
        for a in self.atoms:
            if a.in_region(region):
                val += a.mass * float(g(a.z1, np.array(a.z2)))
        out = QuadResult(val, 0.0)
        for w, c in self.components:
            out = out + c.integrate(g, region, z1_points, z2_points, tail, tail_start, rtol).scaled(w)
        return out

    def rect_mass(self, a1, b1, a2, b2) -> QuadResult:
        """``nu([a1, b1] x [a2, b2])``."""

        def ind(z1, z2):
            z2 = np.asarray(z2, dtype=float)
            return np.where((z2 >= a2) & (z2 <= b2), 1.0, 0.0) * np.ones(np.broadcast(z1, z2).shape)

        pts = [p for p in (a2, b2) if math.isfinite(p)]
        return self.integrate(ind, Region(a1, b1), z1_points=[a1, b1], z2_points=pts)

    def sample_marks(self, rng: np.random.Generator, n: int) -> tuple[np.ndarray, np.ndarray]:
        """``n`` i.i.d. marks from ``nu / total_rate``."""
        masses = [a.mass for a in self.atoms] + [w for w, _ in self.components]
        z1, z2 = np.empty(n), np.empty(n)
        if n == 0:
            return z1, z2
        p = np.asarray(masses) / sum(masses)
        src = rng.choice(len(p), size=n, p=p) if len(p) > 1 else np.zeros(n, dtype=int)
        k = len(self.atoms)
        for i, a in enumerate(self.atoms):
            sel = src == i
            z1[sel], z2[sel] = a.z1, a.z2
        for j, (_, c) in enumerate(self.components):
            sel = src == k + j
            m = int(sel.sum())
            if m:
                z1[sel], z2[sel] = c.sample(rng, m)
        return z1, z2

    def to_dict(self) -> dict:
        return {
            "atoms": [[float(a.z1), float(a.z2), float(a.mass)] for a in self.atoms],
            "components": [{"weight": w, **c.to_dict()} for w, c in self.components],
        }


@dataclass(frozen=True)
class Measure1D:
    """One-dimensional image of ``nu`` under ``z -> z1`` restricted to a region.

    ``integrate(g)`` computes ``∫ g(z1) nu(dz)`` over ``region ∩ {lo <= z1 <= hi}``.
    """

    measure: JumpMeasure
    region: Region = WHOLE

    def integrate(self, g: Callable, lo: float = -INF, hi: float = INF, points=(), g_log=None,
                  rtol: float = 1e-8) -> QuadResult:
        """``g_log(log z1, log_w)``, if given, is ``g(z1) * exp(log_w)`` for huge positive ``z1``."""
        reg = Region(max(lo, self.region.z1_lo), min(hi, self.region.z1_hi), self.region.disk)
        if reg.z1_hi < reg.z1_lo:
            return ZERO

        def h(z1, z2):
            return np.asarray(g(z1), dtype=float) * np.ones(np.broadcast(z1, z2).shape)

        def tail(lv, lw, axis, fixed):
            if axis == "z2":
                return float(g(fixed)) * np.exp(lw)
            if g_log is not None:
                return g_log(lv, lw)
            with np.errstate(all="ignore"):
                return g(np.exp(lv)) * np.exp(lw)

        pts = [-1.0, 0.0, 1.0, *points]
        return self.measure.integrate(h, reg, z1_points=pts, tail=tail, tail_start=30.0, rtol=rtol)

    def mass(self, lo: float = -INF, hi: float = INF) -> QuadResult:
        return self.integrate(lambda z: np.ones(np.shape(z)), lo, hi)

    def point_masses(self) -> dict[float, float]:
        """Atoms of this view: atoms of ``nu`` and line components with fixed z1."""
        out: dict[float, float] = {}
        for a in self.measure.atoms:
            if a.in_region(self.region):
                out[a.z1] = out.get(a.z1, 0.0) + a.mass
        for w, c in self.measure.components:
            if hasattr(c, "z1") and not hasattr(c, "shift"):
                z1 = c.z1
                if self.region.z1_lo <= z1 <= self.region.z1_hi:
                    m = c.mass(self.region).value * w
                    if m > 0:
                        out[z1] = out.get(z1, 0.0) + m
        return out


@dataclass(frozen=True)
class LevyTriplet2D:
    gamma_U: float = 0.0
    gamma_L: float = 0.0
    sigma2_U: float = 0.0
    sigma_UL: float = 0.0
    sigma2_L: float = 0.0
    nu: JumpMeasure = field(default_factory=JumpMeasure)

    def __post_init__(self):
        errs = triplet_errors(self)
        if errs:
            raise ValueError("; ".join(errs))

    @property
    def cov(self) -> np.ndarray:
        return np.array([[self.sigma2_U, self.sigma_UL], [self.sigma_UL, self.sigma2_L]])

    @cached_property
    def chol(self) -> np.ndarray:
        """Lower factor ``A`` with ``A A^T = cov`` (valid for singular ``cov``)."""
        su = math.sqrt(self.sigma2_U)
        if su > 0:
            a21 = self.sigma_UL / su
            a22 = math.sqrt(max(self.sigma2_L - a21 * a21, 0.0))
        else:
            a21, a22 = 0.0, math.sqrt(self.sigma2_L)
        return np.array([[su, 0.0], [a21, a22]])

    @cached_property
    def compensator(self) -> tuple[QuadResult, QuadResult]:
        """``∫∫_{|z|<=1} z nu(dz)`` per coordinate."""
        inside = Region(disk="in")
        c1 = self.nu.integrate(lambda z1, z2: z1 + 0 * z2, inside, z1_points=[-1.0, 0.0, 1.0])
        c2 = self.nu.integrate(lambda z1, z2: z2 + 0 * z1, inside, z1_points=[-1.0, 0.0, 1.0])
        for c in (c1, c2):
            if not c.finite:
                raise QuadratureError("compensator integral failed", c.err)
        return c1, c2

    @property
    def actual_drift(self) -> tuple[float, float]:
        """Drift of ``(U, L)`` between jumps."""
        c1, c2 = self.compensator
        return self.gamma_U - c1.value, self.gamma_L - c2.value

    def with_drift(self, gamma_U=None, gamma_L=None) -> "LevyTriplet2D":
        return LevyTriplet2D(
            self.gamma_U if gamma_U is None else gamma_U,
            self.gamma_L if gamma_L is None else gamma_L,
            self.sigma2_U, self.sigma_UL, self.sigma2_L, self.nu,
        )


def triplet_errors(t: LevyTriplet2D) -> list[str]:
    errs = []
    for name in ("gamma_U", "gamma_L", "sigma2_U", "sigma_UL", "sigma2_L"):
        if not math.isfinite(getattr(t, name)):
            errs.append(f"{name} must be finite")
    if t.sigma2_U < 0:
        errs.append("sigma2_U must be >= 0")
    if t.sigma2_L < 0:
        errs.append("sigma2_L must be >= 0")
    if t.sigma2_U * t.sigma2_L - t.sigma_UL ** 2 < -TOL_PSD:
        errs.append("covariance matrix is not positive semidefinite")
    for a in t.nu.atoms:
        if not a.mass > 0:
            errs.append(f"atom ({a.z1}, {a.z2}) has non-positive mass {a.mass}")
        if a.z1 == 0 and a.z2 == 0:
            errs.append("atom at (0, 0) is not allowed")
    for w, c in t.nu.components:
        if not w > 0:
            errs.append(f"component {c.family} has non-positive weight {w}")
        if getattr(c, "z1", None) == -1.0 and not hasattr(c, "shift"):
            errs.append(f"component {c.family} sits on z1 = -1; restart jumps must be atoms")
    return errs


@dataclass(frozen=True)
class ProcessSpec:
    triplet: LevyTriplet2D
    x0: float = 0.0
    lambda_minus1: float = field(default=None)

    def __post_init__(self):
        lam = sum(a.mass for a in self.triplet.nu.atoms if a.z1 == -1.0)
        if self.lambda_minus1 is None:
            object.__setattr__(self, "lambda_minus1", lam)
        elif not math.isclose(self.lambda_minus1, lam, rel_tol=1e-12, abs_tol=0.0):
            raise ValueError(f"lambda_minus1={self.lambda_minus1} but atoms at z1=-1 carry {lam}")
        object.__setattr__(self, "x0", float(self.x0))

    @property
    def nu(self) -> JumpMeasure:
        return self.triplet.nu

    @property
    def is_restart(self) -> bool:
        return self.lambda_minus1 > 0

    @property
    def pure_diffusion(self) -> bool:
        return self.nu.is_zero

    def with_x0(self, x0: float) -> "ProcessSpec":
        return ProcessSpec(self.triplet, x0)

    def to_dict(self) -> dict:
        t = self.triplet
        return {
            "spec_version": SPEC_VERSION,
            "gamma_U": float(t.gamma_U), "gamma_L": float(t.gamma_L),
            "sigma2_U": float(t.sigma2_U), "sigma_UL": float(t.sigma_UL), "sigma2_L": float(t.sigma2_L),
            "x0": self.x0,
            **t.nu.to_dict(),
        }

    def spec_hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


def marginal_nu_U(spec: ProcessSpec) -> Measure1D:
    return Measure1D(spec.nu)


def nu_prime(spec: ProcessSpec) -> Measure1D:
    """Image on ``[-1, 1]`` of the mass outside the unit disk."""
    return Measure1D(spec.nu, Region(-1.0, 1.0, "out"))


def nu_one(spec: ProcessSpec) -> Measure1D:
    """Image on ``[-1, 1]`` of the mass inside the unit disk."""
    return Measure1D(spec.nu, Region(-1.0, 1.0, "in"))


# ---------------------------------------------------------------------------
# moment conditions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Log:
    def log_h(self, L):
        return np.log(L)


@dataclass(frozen=True)
class LogPow:
    alpha: float

    def log_h(self, L):
        return self.alpha * np.log(L)


@dataclass(frozen=True)
class ExpLogPow:
    gamma: float
    alpha: float

    def log_h(self, L):
        return self.gamma * L ** self.alpha


@dataclass(frozen=True)
class AbsPow:
    beta: float

    def log_h(self, L):
        return self.beta * L


@dataclass(frozen=True)
class LogNearMinus1:
    pass


MomentKind = Log | LogPow | ExpLogPow | AbsPow | LogNearMinus1


@dataclass(frozen=True)
class MomentResult:
    holds: bool
    value: float
    err: float
    status: str = "converged"
    diagnostic: str = ""


def _moment_outside(spec: ProcessSpec, kind) -> QuadResult:
    """``∫_{|z|>=1} h(|z|) nu(dz)`` with ``h = exp(log_h(log|z|))``."""

    def g(z1, z2):
        with np.errstate(all="ignore"):
            L = 0.5 * np.log(z1 * z1 + z2 * z2)
            return np.where(L > 0, np.exp(kind.log_h(np.maximum(L, 1e-300))), 0.0)

    def tail(lv, lw, axis, fixed):
        with np.errstate(all="ignore"):
            L = lv + 0.5 * np.log1p(fixed * fixed * np.exp(-2 * lv))
            return np.exp(kind.log_h(L) + lw)

    val = 0.0
    for a in spec.nu.atoms:
        if a.z1 ** 2 + a.z2 ** 2 >= 1.0:
            L = 0.5 * math.log(a.z1 ** 2 + a.z2 ** 2)
            with np.errstate(divide="ignore"):
                val += a.mass * float(np.exp(kind.log_h(L)))
    out = QuadResult(val, 0.0)
    outside = Region(disk="out")
    for w, c in spec.nu.components:
        out = out + c.integrate(g, outside, z1_points=[-1.0, 0.0, 1.0], tail=tail, tail_start=30.0).scaled(w)
    return out


def moment_check(spec: ProcessSpec, kind) -> MomentResult:
    """Finiteness of the integrability condition named by ``kind``."""
    if isinstance(kind, LogNearMinus1):
        return _near_minus1(spec)
    res = _moment_outside(spec, kind)
    if res.status == "divergent":
        return MomentResult(False, INF, INF, "divergent", f"{kind} moment diverges")
    if res.status == "undetermined":
        return MomentResult(False, res.value, res.err, "undetermined", f"{kind} moment tail not resolved")
    return MomentResult(True, res.value, res.err, res.status)


def _near_minus1(spec: ProcessSpec) -> MomentResult:
    """``∫_{[-3/2, -1/2]} |log|1 + z1|| nu_U(dz)``."""
    if spec.lambda_minus1 > 0:
        return MomentResult(False, INF, INF, "divergent", "atoms at z1 = -1")

    def g(z):
        with np.errstate(divide="ignore"):
            return np.abs(np.log(np.abs(1.0 + np.asarray(z, dtype=float))))

    res = marginal_nu_U(spec).integrate(g, -1.5, -0.5, points=[-1.0])
    if not res.finite:
        return MomentResult(False, INF, INF, res.status, "log|1+z| not integrable near -1")
    # shrinking windows around -1 must carry shrinking mass for an integrable
    # singularity; atoms are finite point evaluations and are left out
    dens = Measure1D(JumpMeasure((), spec.nu.components))
    windows = []
    for k in range(1, 4):
        d = 2.0 ** (-4 * k)
        windows.append(dens.integrate(g, -1 - d, -1 + d, points=[-1.0]).value)
    if windows[-1] > 0.5 * windows[0] > 0:
        return MomentResult(False, INF, INF, "divergent", "mass near z1 = -1 does not shrink")
    return MomentResult(True, res.value, res.err, res.status)


# ---------------------------------------------------------------------------
# JSON ingestion
# ---------------------------------------------------------------------------

_SCALARS = ("gamma_U", "gamma_L", "sigma2_U", "sigma_UL", "sigma2_L", "x0")


def spec_errors(d: dict) -> list[str]:
    """Every problem found in a spec document (empty when valid)."""
    errs = []
    if not isinstance(d, dict):
        return ["spec must be a JSON object"]
    if d.get("spec_version") != SPEC_VERSION:
        errs.append(f"spec_version must be {SPEC_VERSION}")
    known = set(_SCALARS) | {"spec_version", "atoms", "components", "name", "description"}
    for k in d:
        if k not in known:
            errs.append(f"unknown field {k!r}")
    for k in _SCALARS:
        v = d.get(k, 0.0)
        if not isinstance(v, (int, float)) or isinstance(v, bool) or not math.isfinite(v):
            errs.append(f"{k} must be a finite number")
    atoms = d.get("atoms", [])
    if not isinstance(atoms, list):
        errs.append("atoms must be a list")
        atoms = []
    for i, a in enumerate(atoms):
        if not (isinstance(a, list) and len(a) == 3 and all(isinstance(x, (int, float)) for x in a)):
            errs.append(f"atoms[{i}] must be [z1, z2, mass]")
            continue
        if not a[2] > 0:
            errs.append(f"atoms[{i}] has negative or zero mass {a[2]}")
        if a[0] == 0 and a[1] == 0:
            errs.append(f"atoms[{i}] puts mass at (0, 0)")
    comps = d.get("components", [])
    if not isinstance(comps, list):
        errs.append("components must be a list")
        comps = []
    for i, c in enumerate(comps):
        if not isinstance(c, dict):
            errs.append(f"components[{i}] must be an object")
            continue
        w = c.get("weight")
        if not isinstance(w, (int, float)) or not w > 0:
            errs.append(f"components[{i}] has negative or zero weight {w}")
        fam = c.get("family")
        if fam not in FAMILIES:
            errs.append(f"components[{i}] has unknown family {fam!r}")
            continue
        try:
            comp = make_component(fam, c.get("params", {}))
        except (TypeError, ValueError) as e:
            errs.append(f"components[{i}] ({fam}): {e}")
            continue
        if getattr(comp, "z1", None) == -1.0 and not hasattr(comp, "shift"):
            errs.append(f"components[{i}] sits on z1 = -1; restart jumps must be atoms")
    if not any("must be a finite number" in e for e in errs):
        s2u, s2l, sul = (float(d.get(k, 0.0)) for k in ("sigma2_U", "sigma2_L", "sigma_UL"))
        if s2u < 0 or s2l < 0:
            errs.append("variances must be >= 0")
        if s2u * s2l - sul ** 2 < -TOL_PSD:
            errs.append("covariance matrix is not positive semidefinite")
    return errs


def spec_from_dict(d: dict) -> ProcessSpec:
    errs = spec_errors(d)
    if errs:
        raise ValueError("; ".join(errs))
    nu = JumpMeasure(
        tuple(Atom(float(a[0]), float(a[1]), float(a[2])) for a in d.get("atoms", [])),
        tuple((float(c["weight"]), make_component(c["family"], c.get("params", {}))) for c in d.get("components", [])),
    )
    t = LevyTriplet2D(*(float(d.get(k, 0.0)) for k in _SCALARS[:5]), nu=nu)
    return ProcessSpec(t, float(d.get("x0", 0.0)))


def load_spec(path) -> ProcessSpec:
    with open(path) as fh:
        return spec_from_dict(json.load(fh))
