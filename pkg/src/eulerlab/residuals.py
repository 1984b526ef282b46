"""Residuals of the Euler system, the reduced ODEs and the reduction constraints."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import partial
from typing import Callable

import numpy as np

from . import calculus as cal
from .calculus import Jet1, StencilSpec
from .errors import DomainError
from .lattice import SampleLattice
from .solutions import (
    ReducedProfile,
    SolutionParams,
    TemporalPair,
    admissible,
    evaluate_case,
    temporal_coefficients,
)

N_CONSTRAINTS = 18


@dataclass(frozen=True)
class EulerResidual:
    r_div: object
    r_mx: object
    r_my: object

    def as_array(self):
        return np.stack(np.broadcast_arrays(self.r_div, self.r_mx, self.r_my))


@dataclass
class NormReport:
    max_abs: float
    l2: float
    worst_point: tuple
    components: dict = field(default_factory=dict)
    n_points: int = 0
    skipped: int = 0

    def to_dict(self) -> dict:
        return {
            "max_abs": self.max_abs,
            "l2": self.l2,
            "worst_point": list(self.worst_point),
            "components": dict(self.components),
            "n_points": self.n_points,
            "skipped": self.skipped,
        }


def case_field(params: SolutionParams, amplitude: float = 1.0) -> Callable:
    return partial(evaluate_case, params, amplitude=amplitude)


def _jet(u) -> Jet1:
    return u if isinstance(u, Jet1) else Jet1(u)


def euler_residual(
    field: Callable, point, method: str = "jet", spec: StencilSpec | None = None
) -> EulerResidual:
    """Continuity and momentum residuals of ``field`` at ``point``.

    ``field(x, y, t)`` returns a FlowState. With ``method="jet"`` it is called
    on jets and must use generic arithmetic; with ``method="fd"`` it is called
    on arrays and differentiated with central stencils.
    """
    x, y, t = point
    if method == "jet":
        st = field(*cal.seed(x, y, t))
        u1, u2, p = _jet(st.u1), _jet(st.u2), _jet(st.p)
        return EulerResidual(
            r_div=u1.dx + u2.dy,
            r_mx=u1.dt + u1.v * u1.dx + u2.v * u1.dy + p.dx,
            r_my=u2.dt + u1.v * u2.dx + u2.v * u2.dy + p.dy,
        )
    if method != "fd":
        raise ValueError(f"unknown residual method {method!r}")
    spec = spec or StencilSpec()
    st = field(x, y, t)

    def d(name, axis):
        return cal.fd_partial(lambda *q: getattr(field(*q), name), point, axis, spec)

    u1, u2 = np.asarray(st.u1), np.asarray(st.u2)
    return EulerResidual(
        r_div=d("u1", "x") + d("u2", "y"),
        r_mx=d("u1", "t") + u1 * d("u1", "x") + u2 * d("u1", "y") + d("p", "x"),
        r_my=d("u2", "t") + u1 * d("u2", "x") + u2 * d("u2", "y") + d("p", "y"),
    )


def summarize(res: EulerResidual, x, y, t, skipped: int = 0) -> NormReport:
    """Max, RMS (compensated sum) and worst point of a residual over samples."""
    comps = {
        name: np.abs(np.broadcast_to(np.asarray(getattr(res, name), dtype=float), np.shape(x))).ravel()
        for name in ("r_div", "r_mx", "r_my")
    }
    stacked = np.stack(list(comps.values()))
    if stacked.size == 0:
        return NormReport(0.0, 0.0, (math.nan,) * 3, {k: 0.0 for k in comps}, 0, skipped)
    pointwise = stacked.max(axis=0)
    k = int(np.argmax(pointwise))
    xs, ys, ts = (np.broadcast_to(np.asarray(a, float), np.shape(x)).ravel() for a in (x, y, t))
    n = pointwise.size
    l2 = math.sqrt(math.fsum((stacked**2).ravel().tolist()) / n)
    return NormReport(
        max_abs=float(pointwise[k]),
        l2=l2,
        worst_point=(float(xs[k]), float(ys[k]), float(ts[k])),
        components={name: float(v.max()) for name, v in comps.items()},
        n_points=n,
        skipped=skipped,
    )


def residual_norms(
    params: SolutionParams,
    lattice: SampleLattice,
    method: str = "jet",
    spec: StencilSpec | None = None,
    allow_skip: bool = False,
    amplitude: float = 1.0,
) -> NormReport:
    X, Y, T = lattice.points()
    ok = admissible(params, X, Y, T)
    skipped = int(ok.size - ok.sum())
    if skipped and not allow_skip:
        raise DomainError(f"{skipped} of {ok.size} lattice points are outside the domain")
    x, y, t = X[ok], Y[ok], T[ok]
    res = euler_residual(case_field(params, amplitude), (x, y, t), method, spec)
    return summarize(res, x, y, t, skipped)


def ode_residual_fg(params: SolutionParams, t, pair: TemporalPair):
    """Residuals of f' = (c1-1) f^2 and g' = (c1-2) f g + c2 f."""
    c1, c2 = params.c1, params.c2
    f, g = pair.f, pair.g
    r_f = pair.fp - (c1 - 1.0) * f * f
    r_g = pair.gp - (c1 - 2.0) * f * g - c2 * f
    return r_f, r_g


def ode_residual_WQ(params: SolutionParams, z, prof: ReducedProfile):
    """Residuals of the three reduced profile equations."""
    s = params.c1 * z + params.c2
    W, Wp, Q, Qp = prof.W, prof.Wp, prof.Q, prof.Qp
    r1 = Wp + Qp
    r2 = W * Wp + s * Wp + Q * Wp + Q
    r3 = Q * Qp + s * Qp + W * Qp + W
    return r1, r2, r3


def constraint_terms(params: SolutionParams, x, y, t):
    """Left- and right-hand sides of the 18 coefficient-ratio relations.

    Returned lists are ordered by the index i of the ratio function Gamma_i.
    """
    X, Y, T = cal.seed(x, y, t)
    pair = temporal_coefficients(params, T)
    f, fp, g, gp = (_jet(v) for v in (pair.f, pair.fp, pair.g, pair.gp))
    one = Jet1(1.0)
    alpha = f * Y + g
    beta = one
    xi = f * X + g  # h = g
    eta = one
    z = f * (X + Y) + g
    p = -0.5 * f * f * (X * X + Y * Y) - fp * (X * Y) - (gp + f * g) * (X + Y)

    zval = z.v
    G = [0.0] * (N_CONSTRAINTS + 1)
    for i in (1, 6, 10, 13, 17):
        G[i] = 1.0
    G[5] = G[12] = params.c1 * zval + params.c2

    a, b, xv, e = alpha.v, beta.v, xi.v, eta.v
    zx, zy, zt = z.dx, z.dy, z.dt
    bz = b * zx
    b2z = b * b * zx
    e2z = e * e * zy
    lhs = [
        e * zy,
        beta.dx,
        eta.dy,
        alpha.dx + xi.dy,
        b * zt + a * b * zx + xv * b * zy,
        e * b * zy,
        b * beta.dx,
        beta.dt + a * beta.dx + alpha.dx * b + xv * beta.dy,
        e * beta.dy,
        e * alpha.dy,
        alpha.dt + a * alpha.dx + xv * alpha.dy + p.dx,
        e * zt + a * e * zx + xv * e * zy,
        e * b * zx,
        e * eta.dy,
        eta.dt + a * eta.dx + xv * eta.dy + e * xi.dy,
        b * eta.dx,
        b * xi.dx,
        xi.dt + a * xi.dx + xv * xi.dy + p.dy,
    ]
    scale = [bz, bz, bz, bz] + [b2z] * 7 + [e2z] * 7
    rhs = [s * G[i + 1] for i, s in enumerate(scale)]
    return lhs, rhs


def constraint_check(params: SolutionParams, x, y, t, relative: bool = False):
    """Array of 18 residuals (LHS - RHS), row i for ratio function Gamma_{i+1}.

    ``relative`` divides each residual by max(|LHS|, |RHS|, 1).
    """
    lhs, rhs = constraint_terms(params, x, y, t)
    shape = np.broadcast(np.asarray(x), np.asarray(y), np.asarray(t)).shape
    L = np.stack([np.broadcast_to(np.asarray(v, float), shape) for v in lhs])
    R = np.stack([np.broadcast_to(np.asarray(v, float), shape) for v in rhs])
    r = L - R
    if relative:
        r = r / np.maximum(np.maximum(np.abs(L), np.abs(R)), 1.0)
    return r
