"""Closed-form similarity solutions of the 2D incompressible Euler equations.

Every solution is built from the reduction

    z  = f(t) (x + y) + g(t)
    u1 = f(t) y + g(t) + W(z)
    u2 = f(t) x + g(t) + Q(z)
    p  = -f^2 (x^2 + y^2) / 2 - f' x y - (g' + f g)(x + y)

where f, g solve ``f' = (c1 - 1) f^2``, ``g' = (c1 - 2) f g + c2 f`` and
the profiles satisfy ``Q = -W`` with ``(c1 z + c2) W' = W``.

All evaluators are written against plain arithmetic so that the inputs may be
floats, numpy arrays or :class:`~eulerlab.calculus.Jet1` values.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from . import calculus as cal
from .calculus import value
from .errors import DomainError


class Case(enum.Enum):
    CASE1 = "Case1_c1_0_c2_0"
    CASE2 = "Case2_c1_0_c2_nonzero"
    CASE3 = "Case3_c1_1"
    CASE4 = "Case4_c1_2"
    CASE5 = "Case5_general"

    @property
    def number(self) -> int:
        return int(self.value[4])


CASE_CATALOGUE = {
    Case.CASE1: "c1 = 0, c2 = 0: rational solution, W = Q = 0",
    Case.CASE2: "c1 = 0, c2 != 0: exponential profile W = -Q = exp(z/c2)",
    Case.CASE3: "c1 = 1 (c3 free): f = c3, linear profile W = -Q = z + c2",
    Case.CASE4: "c1 = 2: f = -1/t, square-root profile W = -Q = (z + c2/2)^(1/2)",
    Case.CASE5: "c1 not in {0, 1, 2}: power profile W = -Q = (z + c2/c1)^(1/c1)",
}


@dataclass(frozen=True)
class SolutionParams:
    c1: float
    c2: float
    c3: float = 0.0  # only read when c1 == 1

    def __post_init__(self):
        for name in ("c1", "c2", "c3"):
            v = float(getattr(self, name))
            if not math.isfinite(v):
                raise ValueError(f"{name} must be finite")
            object.__setattr__(self, name, v)

    @property
    def case(self) -> Case:
        return classify(self)


@dataclass(frozen=True)
class TemporalPair:
    f: object
    fp: object
    g: object
    gp: object


@dataclass(frozen=True)
class ReducedProfile:
    W: object
    Wp: object
    Q: object
    Qp: object


@dataclass(frozen=True)
class FlowState:
    u1: object
    u2: object
    p: object
    z: object
    div: object
    vort: object

    def values(self) -> "FlowState":
        """Strip jet partials, keeping only point values."""
        return FlowState(*(value(getattr(self, k)) for k in _FLOW_FIELDS))


_FLOW_FIELDS = ("u1", "u2", "p", "z", "div", "vort")


def classify(params: SolutionParams) -> Case:
    c1, c2 = params.c1, params.c2
    if c1 == 0:
        return Case.CASE1 if c2 == 0 else Case.CASE2
    if c1 == 1:
        return Case.CASE3
    if c1 == 2:
        return Case.CASE4
    return Case.CASE5


def needs_positive_time(params: SolutionParams) -> bool:
    return classify(params) is not Case.CASE3


def _check_time(params, t):
    if needs_positive_time(params) and np.any(np.asarray(value(t)) <= 0.0):
        raise DomainError(
            f"{classify(params).value} needs t > 0, got t = {float(np.min(value(t)))!r}"
        )


def gamma(c1: float) -> float:
    """Decay exponent of the homogeneous part of g for c1 not in {1, 2}."""
    return (c1 - 2.0) / (c1 - 1.0)


def temporal_coefficients(params: SolutionParams, t) -> TemporalPair:
    """Closed-form f, f', g, g' at time ``t``."""
    _check_time(params, t)
    c1, c2, c3 = params.c1, params.c2, params.c3
    case = classify(params)
    if case is Case.CASE3:
        decay = cal.exp(-c3 * t)
        return TemporalPair(f=c3, fp=0.0, g=decay + c2, gp=-c3 * decay)
    if case is Case.CASE4:
        return TemporalPair(
            f=-1.0 / t, fp=1.0 / (t * t), g=-c2 * cal.log(t), gp=-c2 / t
        )
    # Cases 1, 2 and 5 share f = 1/((1 - c1) t), g = t^-gamma - c2/(c1 - 2).
    gam = gamma(c1)
    k = 1.0 - c1
    tg = cal.power(t, -gam)
    return TemporalPair(
        f=1.0 / (k * t),
        fp=-1.0 / (k * t * t),
        g=tg - c2 / (c1 - 2.0),
        gp=-gam * tg / t,
    )


def profile(params: SolutionParams, z, amplitude: float = 1.0) -> ReducedProfile:
    """Similarity profiles W(z), Q(z) = -W(z) and their z-derivatives.

    ``amplitude`` is the free multiplicative constant of the linear profile
    equation; the printed solutions use 1.
    """
    c1, c2 = params.c1, params.c2
    if c1 == 0 and c2 == 0:
        zero = 0.0 * z
        return ReducedProfile(zero, zero, zero, zero)
    if c1 == 0:
        W = amplitude * cal.exp(z / c2)
        Wp = W / c2
    else:
        a = 1.0 / c1
        base = z + c2 / c1
        bv = np.asarray(value(base))
        if not float(a).is_integer():
            bad = bv <= 0.0
        else:
            bad = (bv == 0.0) & (a < 0)
        if np.any(bad):
            zv = np.asarray(value(z))
            worst = zv[bad] if zv.ndim else zv
            raise DomainError(
                f"profile base z + c2/c1 must be positive for exponent {a:g}; "
                f"offending z = {float(np.ravel(worst)[0])!r}"
            )
        W = amplitude * cal.power(base, a)
        Wp = amplitude * a * cal.power(base, a - 1.0)
    return ReducedProfile(W=W, Wp=Wp, Q=-W, Qp=-Wp)


def similarity_z(pair: TemporalPair, x, y):
    return pair.f * (x + y) + pair.g


def reduction_map(params, pair: TemporalPair, prof: ReducedProfile, x, y, t) -> FlowState:
    """Assemble (u1, u2, p) from temporal coefficients and profiles at z."""
    f, fp, g, gp = pair.f, pair.fp, pair.g, pair.gp
    s = x + y
    u1 = f * y + g + prof.W
    u2 = f * x + g + prof.Q
    p = -0.5 * (f * f) * (x * x + y * y) - fp * (x * y) - (gp + f * g) * s
    return FlowState(
        u1=u1,
        u2=u2,
        p=p,
        z=f * s + g,
        div=f * (prof.Wp + prof.Qp),
        vort=f * (prof.Qp - prof.Wp),
    )


def evaluate_case(params: SolutionParams, x, y, t, amplitude: float = 1.0) -> FlowState:
    """Canonical evaluator: temporal coefficients -> profile -> reduction map."""
    pair = temporal_coefficients(params, t)
    z = similarity_z(pair, x, y)
    prof = profile(params, z, amplitude)
    return reduction_map(params, pair, prof, x, y, t)


def evaluate_jet(params: SolutionParams, x, y, t, amplitude: float = 1.0) -> FlowState:
    """:func:`evaluate_case` with every field carrying its (x, y, t) partials."""
    return evaluate_case(params, *cal.seed(x, y, t), amplitude=amplitude)


def admissible(params: SolutionParams, x, y, t):
    """Boolean mask of points where :func:`evaluate_case` is real-valued."""
    x, y, t = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (x, y, t)))
    ok = np.ones(x.shape, dtype=bool)
    if needs_positive_time(params):
        ok &= t > 0
    tt = np.where(ok, t, 1.0)
    pair = temporal_coefficients(params, tt)
    z = similarity_z(pair, x, y)
    c1, c2 = params.c1, params.c2
    if c1 != 0:
        a = 1.0 / c1
        base = z + c2 / c1
        if not float(a).is_integer():
            ok &= base > 0
        elif a < 0:
            ok &= base != 0
    return ok


# --- printed formulas -----------------------------------------------------


def _printed_fields(case: Case, params: SolutionParams, x, y, t):
    c1, c2, c3 = params.c1, params.c2, params.c3
    if case is Case.CASE1:
        u1 = y / t + 1.0 / (t * t)
        u2 = x / t + 1.0 / (t * t)
        p = -((x - y) * (x - y)) / (2.0 * t * t) + (x + y) / (t * t * t)
    elif case is Case.CASE2:
        e = cal.exp((t * x + t * y + 1.0) / (c2 * t * t) + 0.5)
        u1 = y / t + 1.0 / (t * t) + c2 / 2.0 + e
        u2 = x / t + 1.0 / (t * t) + c2 / 2.0 - e
        p = -((x - y) * (x - y)) / (2.0 * t * t) + (1.0 / (t * t * t) - c2 / (2.0 * t)) * (x + y)
    elif case is Case.CASE3:
        u1 = c3 * (x + 2.0 * y) + 2.0 * cal.exp(-c3 * t) + 3.0 * c2
        u2 = -c3 * y - c2 + 0.0 * x
        p = -0.5 * c3 * c3 * (x * x + y * y) - c2 * c3 * (x + y)
    elif case is Case.CASE4:
        lt = cal.log(t)
        root = cal.sqrt(-(x + y) / t - c2 * lt + c2 / 2.0)
        u1 = -y / t - c2 * lt + root
        u2 = -x / t - c2 * lt - root
        p = -((x + y) * (x + y)) / (2.0 * t * t) + c2 / t * (1.0 - lt) * (x + y)
    else:
        terms = printed_case5_terms(params, x, y, t)
        a = 1.0 / c1
        u1 = terms["u1_outer"] + cal.power(terms["u1_bracket"], a)
        u2 = terms["u2_outer"] - cal.power(terms["u2_bracket"], a)
        p = terms["p_quadratic"] + terms["p_xy"] + terms["p_linear_coeff"] * (x + y)
    return u1, u2, p


def printed_case5_terms(params: SolutionParams, x, y, t) -> dict:
    """Sub-expressions of the printed Case 5 solution, transcribed as printed."""
    c1, c2 = params.c1, params.c2
    gam = gamma(c1)
    tg = cal.power(t, -gam)
    k = 1.0 - c1
    outer_const = tg - c2 / (c1 - 2.0)
    shift = 2.0 * c2 / (c1 * (c1 - 2.0))
    return {
        "u1_outer": y / (t * k) + outer_const,
        "u2_outer": x / (t * k) + outer_const,
        "u1_bracket": -(x + y) / (t * k) + tg - shift,
        "u2_bracket": -(x + y) / (t * k) + tg + shift,
        "p_quadratic": -(x * x + y * y) / (t * t * (c1 - 1.0) ** 2) / 2.0,
        "p_xy": -(x * y) / (t * t * k),
        "p_linear_coeff": -gam * tg - c2 / (t * k * (c1 - 2.0)),
    }


def derived_case5_terms(params: SolutionParams, x, y, t) -> dict:
    """The same sub-expressions as produced by the reduction map."""
    pair = temporal_coefficients(params, t)
    z = similarity_z(pair, x, y)
    return {
        "u1_outer": pair.f * y + pair.g,
        "u2_outer": pair.f * x + pair.g,
        "u1_bracket": z + params.c2 / params.c1,
        "u2_bracket": z + params.c2 / params.c1,
        "p_quadratic": -0.5 * pair.f * pair.f * (x * x + y * y),
        "p_xy": -pair.fp * x * y,
        "p_linear_coeff": -(pair.gp + pair.f * pair.g),
    }


def printed_case_solution(case: Case, params: SolutionParams, x, y, t) -> FlowState:
    """The case solution exactly as printed (no re-derivation).

    ``div`` and ``vort`` are obtained by differentiating the printed formulas
    with jets; ``z`` is not part of the printed solutions and is NaN.
    """
    if classify(params) is not case:
        raise ValueError(f"parameters {params} do not belong to {case.value}")
    _check_time(params, t)
    u1, u2, p = _printed_fields(case, params, *cal.seed(x, y, t))
    div = u1.dx + u2.dy
    vort = u2.dx - u1.dy
    nan = np.full(np.shape(u1.v), np.nan) if np.ndim(u1.v) else math.nan
    return FlowState(u1=u1.v, u2=u2.v, p=p.v, z=nan, div=div, vort=vort)


def errata_report(params: SolutionParams, points, tol: float = 1e-12) -> dict:
    """Diff the printed solution against :func:`evaluate_case` at ``points``.

    ``points`` is an iterable of (x, y, t). The result is JSON-serializable.
    """
    case = classify(params)
    pts = np.asarray(list(points), dtype=float).reshape(-1, 3)
    x, y, t = pts.T
    ref = evaluate_case(params, x, y, t)
    got = printed_case_solution(case, params, x, y, t)
    components = {}
    for name in ("u1", "u2", "p", "div", "vort"):
        d = np.abs(np.asarray(getattr(got, name)) - np.asarray(getattr(ref, name)))
        components[name] = {
            "max_abs_diff": float(d.max()),
            "match": bool(d.max() <= tol * max(1.0, float(np.abs(getattr(ref, name)).max()))),
        }
    report = {
        "case": case.value,
        "params": {"c1": params.c1, "c2": params.c2, "c3": params.c3},
        "n_points": int(len(pts)),
        "tol": tol,
        "components": components,
        "match": all(c["match"] for c in components.values() if c is not None),
        "terms": [],
    }
    if case is Case.CASE5:
        printed = printed_case5_terms(params, x, y, t)
        derived = derived_case5_terms(params, x, y, t)
        for name in printed:
            d = np.abs(printed[name] - derived[name])
            report["terms"].append(
                {
                    "term": name,
                    "max_abs_diff": float(d.max()),
                    "match": bool(d.max() <= tol * max(1.0, float(np.abs(derived[name]).max()))),
                }
            )
    return report
