"""First-order jets in (x, y, t) and central finite-difference stencils.

A :class:`Jet1` carries a value together with its three first partials.
Components may be Python floats or numpy arrays of a common shape, so a
whole sampling lattice can be differentiated in one pass.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DomainError


def _is_integer(a: float) -> bool:
    return float(a).is_integer()


@dataclass(frozen=True)
class Jet1:
    v: object
    dx: object = 0.0
    dy: object = 0.0
    dt: object = 0.0

    def _lift(self, other) -> "Jet1":
        if isinstance(other, Jet1):
            return other
        return Jet1(other, 0.0, 0.0, 0.0)

    def _map(self, value, slope) -> "Jet1":
        # chain rule for a scalar function with derivative `slope` at self.v
        return Jet1(value, slope * self.dx, slope * self.dy, slope * self.dt)

    def __add__(self, other):
        o = self._lift(other)
        return Jet1(self.v + o.v, self.dx + o.dx, self.dy + o.dy, self.dt + o.dt)

    __radd__ = __add__

    def __sub__(self, other):
        o = self._lift(other)
        return Jet1(self.v - o.v, self.dx - o.dx, self.dy - o.dy, self.dt - o.dt)

    def __rsub__(self, other):
        return self._lift(other) - self

    def __neg__(self):
        return Jet1(-self.v, -self.dx, -self.dy, -self.dt)

    def __mul__(self, other):
        o = self._lift(other)
        return Jet1(
            self.v * o.v,
            self.v * o.dx + o.v * self.dx,
            self.v * o.dy + o.v * self.dy,
            self.v * o.dt + o.v * self.dt,
        )

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._lift(other)
        if np.any(np.asarray(o.v) == 0.0):
            raise DomainError("jet division by a zero value")
        inv = 1.0 / o.v
        q = self.v * inv
        return Jet1(
            q,
            (self.dx - q * o.dx) * inv,
            (self.dy - q * o.dy) * inv,
            (self.dt - q * o.dt) * inv,
        )

    def __rtruediv__(self, other):
        return self._lift(other) / self

    def __pow__(self, a):
        if isinstance(a, Jet1):
            raise TypeError("only real exponents are supported")
        return power(self, a)

    @property
    def grad(self):
        return self.dx, self.dy, self.dt


def seed_x(x) -> Jet1:
    return Jet1(x, 1.0, 0.0, 0.0)


def seed_y(y) -> Jet1:
    return Jet1(y, 0.0, 1.0, 0.0)


def seed_t(t) -> Jet1:
    return Jet1(t, 0.0, 0.0, 1.0)


def seed(x, y, t) -> tuple[Jet1, Jet1, Jet1]:
    """Independent-variable jets for a point (or broadcastable arrays)."""
    return seed_x(x), seed_y(y), seed_t(t)


def value(u):
    return u.v if isinstance(u, Jet1) else u


def exp(u):
    if isinstance(u, Jet1):
        e = np.exp(u.v)
        return u._map(e, e)
    return np.exp(u)


def log(u):
    v = value(u)
    if np.any(np.asarray(v) <= 0.0):
        raise DomainError(f"log of non-positive value {float(np.min(v))!r}")
    if isinstance(u, Jet1):
        return u._map(np.log(v), 1.0 / v)
    return np.log(v)


def sqrt(u):
    v = value(u)
    if np.any(np.asarray(v) <= 0.0):
        raise DomainError(f"sqrt of non-positive value {float(np.min(v))!r}")
    r = np.sqrt(v)
    if isinstance(u, Jet1):
        return u._map(r, 0.5 / r)
    return r


def power(u, a: float):
    """``u**a`` for a real exponent; non-integer exponents need a positive base."""
    v = np.asarray(value(u), dtype=float)
    if not _is_integer(a) and np.any(v <= 0.0):
        raise DomainError(f"non-integer power {a} of non-positive base {float(v.min())!r}")
    r = np.power(v, a)
    if r.ndim == 0:
        r = float(r)
    if not isinstance(u, Jet1):
        return r
    slope = a * np.power(v, a - 1) if a != 0 else 0.0
    return u._map(r, slope)


# --- finite differences ---------------------------------------------------

_AXES = {"x": 0, "y": 1, "t": 2}


@dataclass(frozen=True)
class StencilSpec:
    h: float | None = None  # None: 1e-4 * max(1, |coordinate|)
    order: int = 4

    def __post_init__(self):
        if self.order not in (2, 4):
            raise ValueError(f"stencil order must be 2 or 4, got {self.order}")
        if self.h is not None and not self.h > 0:
            raise ValueError(f"stencil step must be positive, got {self.h}")

    def step_for(self, coord):
        if self.h is not None:
            return self.h
        return 1e-4 * np.maximum(1.0, np.abs(coord))


def fd_partial(
    field: Callable, point, axis: str, spec: StencilSpec = StencilSpec()
):
    """Central-difference partial of ``field(x, y, t)`` along ``axis``.

    ``point`` components may be arrays; the field must then be vectorized.
    """
    k = _AXES[axis]
    p = [np.asarray(c, dtype=float) for c in point]
    h = spec.step_for(p[k])

    def at(offset):
        q = list(p)
        q[k] = p[k] + offset * h
        return np.asarray(field(*q), dtype=float)

    if spec.order == 2:
        d = (at(1) - at(-1)) / (2 * h)
    else:
        d = (-at(2) + 8 * at(1) - 8 * at(-1) + at(-2)) / (12 * h)
    return d if d.ndim else float(d)
