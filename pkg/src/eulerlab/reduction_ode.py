"""Numerical integration of the reduced ODEs and reconstruction of Euler flows.

The temporal system ``f' = (c1-1) f^2, g' = (c1-2) f g + c2 f`` and the
profile equation ``(c1 z + c2) W' = W`` are integrated with fixed-step RK4.
The resulting paths are pushed through the reduction map and the Euler
residual is measured, without reference to any closed form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicHermiteSpline

from .calculus import Jet1, value
from .errors import BlowUpError, DomainError, SingularityError
from .lattice import SampleLattice
from .residuals import NormReport, euler_residual, summarize
from .solutions import FlowState, SolutionParams, profile, temporal_coefficients

BLOWUP = 1e12


@dataclass(frozen=True)
class IntegratorConfig:
    dt: float = 1e-3
    method: str = "rk4"

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.method != "rk4":
            raise ValueError(f"unsupported method {self.method!r}")


class OdePath:
    """Samples (s, y, y') with cubic Hermite dense output."""

    def __init__(self, s, y, dy):
        s = np.asarray(s, dtype=float)
        y = np.asarray(y, dtype=float)
        dy = np.asarray(dy, dtype=float)
        if s[0] > s[-1]:
            s, y, dy = s[::-1], y[::-1], dy[::-1]
        if np.any(np.diff(s) <= 0):
            raise ValueError("path abscissae must be strictly monotone")
        self.s, self.y, self.dy = s, y, dy
        self._spline = CubicHermiteSpline(s, y, dy, extrapolate=False)

    @classmethod
    def from_function(cls, s, fn, dfn) -> "OdePath":
        s = np.asarray(s, dtype=float)
        return cls(s, fn(s), dfn(s))

    @property
    def bounds(self):
        return float(self.s[0]), float(self.s[-1])

    def _check(self, q):
        lo, hi = self.bounds
        slack = 1e-12 * max(1.0, abs(lo), abs(hi))
        qa = np.asarray(q)
        if qa.size and (qa.min() < lo - slack or qa.max() > hi + slack):
            raise DomainError(
                f"path queried on [{float(qa.min())!r}, {float(qa.max())!r}] outside [{lo!r}, {hi!r}]"
            )
        return np.clip(qa, lo, hi)

    def __call__(self, q, nu: int = 0):
        q = self._check(q)
        r = np.asarray(self._spline(q, nu))
        if nu < 2:
            # return stored samples verbatim at the nodes
            k = np.clip(np.searchsorted(self.s, q), 0, self.s.size - 1)
            hit = self.s[k] == q
            if np.any(hit):
                r = np.where(hit, (self.y, self.dy)[nu][k], r)
        return r if r.ndim else float(r)

    def derivative(self, q, nu: int = 1):
        return self(q, nu)

    def compose(self, u):
        """The path evaluated at ``u``; jets pick up the chain rule."""
        if isinstance(u, Jet1):
            return u._map(self(u.v), self(u.v, 1))
        return self(u)

    def compose_derivative(self, u):
        if isinstance(u, Jet1):
            return u._map(self(u.v, 1), self(u.v, 2))
        return self(u, 1)


def rk4(rhs, s0: float, y0, s1: float, dt: float):
    """Fixed-step RK4 from s0 to s1; the final step is shortened to land on s1.

    Returns sample abscissae, states and state derivatives.
    """
    y = np.atleast_1d(np.asarray(y0, dtype=float)).copy()
    span = s1 - s0
    n = max(1, math.ceil(abs(span) / dt - 1e-9))
    h = math.copysign(dt, span)
    ss, ys, ds = [s0], [y.copy()], [rhs(s0, y)]
    s = s0
    for i in range(n):
        step = h if i < n - 1 else s1 - s
        k1 = ds[-1]
        k2 = rhs(s + step / 2, y + step / 2 * k1)
        k3 = rhs(s + step / 2, y + step / 2 * k2)
        k4 = rhs(s + step, y + step * k3)
        y = y + step / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        s = s1 if i == n - 1 else s0 + (i + 1) * h
        if not np.all(np.isfinite(y)) or np.abs(y).max() > BLOWUP:
            raise BlowUpError(f"solution blew up near s = {s!r}", at=s)
        ss.append(s)
        ys.append(y.copy())
        ds.append(rhs(s, y))
    return np.asarray(ss), np.asarray(ys), np.asarray(ds)


def integrate_fg(params: SolutionParams, t0, f0, g0, t1, cfg=IntegratorConfig()):
    """Integrate the temporal pair (f, g) over [t0, t1]."""
    dt = cfg.dt
    if min(t0, t1) < 10 * dt:
        raise SingularityError(
            f"time interval [{min(t0, t1)}, {max(t0, t1)}] must stay {10 * dt:g} away from t = 0"
        )
    c1, c2 = params.c1, params.c2

    def rhs(t, s):
        f, g = s
        return np.array([(c1 - 1.0) * f * f, (c1 - 2.0) * f * g + c2 * f])

    ts, ys, ds = rk4(rhs, t0, [f0, g0], t1, dt)
    return OdePath(ts, ys[:, 0], ds[:, 0]), OdePath(ts, ys[:, 1], ds[:, 1])


def integrate_W(params: SolutionParams, z0, W0, z1, cfg=IntegratorConfig()) -> OdePath:
    """Integrate ``(c1 z + c2) W' = W`` from z0 to z1 (Q is the negated path)."""
    c1, c2 = params.c1, params.c2
    if c1 == 0 and c2 == 0:
        raise SingularityError("profile equation is singular everywhere for c1 = c2 = 0")
    if c1 != 0:
        zs = -c2 / c1
        lo, hi = min(z0, z1), max(z0, z1)
        if lo - 10 * cfg.dt <= zs <= hi + 10 * cfg.dt:
            raise SingularityError(f"interval [{lo}, {hi}] reaches the singular point z = {zs!r}")

    def rhs(z, s):
        return s / (c1 * z + c2)

    zs_, ys, ds = rk4(rhs, z0, [W0], z1, cfg.dt)
    return OdePath(zs_, ys[:, 0], ds[:, 0])


@dataclass(frozen=True)
class NumericReduction:
    """Reduction-map flow built from numerical (f, g, W) paths."""

    f: OdePath
    g: OdePath
    W: OdePath

    def __call__(self, x, y, t) -> FlowState:
        f, fp = self.f.compose(t), self.f.compose_derivative(t)
        g, gp = self.g.compose(t), self.g.compose_derivative(t)
        s = x + y
        z = f * s + g
        W, Wp = self.W.compose(z), self.W(value(z), 1)
        u1 = f * y + g + W
        u2 = f * x + g - W
        p = -0.5 * f * f * (x * x + y * y) - fp * (x * y) - (gp + f * g) * s
        fv = value(f)
        return FlowState(u1=u1, u2=u2, p=p, z=z, div=0.0 * fv, vort=-2.0 * fv * Wp)

    def z_values(self, x, y, t):
        return self.f(t) * (x + y) + self.g(t)


def reconstruct_and_verify(
    params: SolutionParams, fg_paths, W_path: OdePath, lattice: SampleLattice
) -> NormReport:
    """Euler residual of the flow assembled from numerical paths on ``lattice``."""
    flow = NumericReduction(*fg_paths, W_path)
    X, Y, T = lattice.points()
    res = euler_residual(flow, (X, Y, T), "jet")
    return summarize(res, X, Y, T)


def sampled_closed_form(params: SolutionParams, t_range, z_range, dt: float, amplitude=1.0):
    """Closed-form (f, g, W) sampled on uniform grids as OdePaths."""
    ts = np.linspace(*t_range, max(2, math.ceil((t_range[1] - t_range[0]) / dt) + 1))
    zs = np.linspace(*z_range, max(2, math.ceil((z_range[1] - z_range[0]) / dt) + 1))
    pair = temporal_coefficients(params, ts)
    f = np.broadcast_to(pair.f, ts.shape)
    fp = np.broadcast_to(pair.fp, ts.shape)
    prof = profile(params, zs, amplitude)
    return (
        OdePath(ts, f, fp),
        OdePath(ts, pair.g, pair.gp),
        OdePath(zs, prof.W, prof.Wp),
    )


def build_numeric_reduction(
    params: SolutionParams,
    lattice: SampleLattice,
    cfg=IntegratorConfig(),
    amplitude: float = 1.0,
    margin: float | None = None,
) -> NumericReduction:
    """Integrate (f, g) over the lattice times and W over the induced z range.

    Initial data come from the closed forms at the earliest time and the
    lowest z, with the profile scaled by ``amplitude``.
    """
    ts = lattice.axes()[2]
    t0, t1 = float(ts.min()), float(ts.max())
    pair0 = temporal_coefficients(params, t0)
    if t1 > t0:
        fpath, gpath = integrate_fg(params, t0, value(pair0.f), value(pair0.g), t1, cfg)
    else:
        fpath, gpath = integrate_fg(params, t0, value(pair0.f), value(pair0.g), t0 + cfg.dt, cfg)
    X, Y, T = lattice.points()
    z = fpath(T) * (X + Y) + gpath(T)
    margin = 2 * cfg.dt if margin is None else margin
    z0, z1 = float(z.min()) - margin, float(z.max()) + margin
    W0 = amplitude * float(profile(params, z0).W)
    Wpath = integrate_W(params, z0, W0, z1, cfg)
    return NumericReduction(fpath, gpath, Wpath)
