"""Regular sampling lattices over (x, y, t)."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class SampleLattice:
    x_min: float
    x_max: float
    nx: int
    y_min: float
    y_max: float
    ny: int
    t: tuple = field(default=(1.0,))

    def __post_init__(self):
        object.__setattr__(self, "t", tuple(float(v) for v in np.atleast_1d(self.t)))
        if self.nx < 2 or self.ny < 2:
            raise ValueError(f"lattice needs nx, ny >= 2, got {self.nx} x {self.ny}")
        if not self.t:
            raise ValueError("lattice needs at least one time value")
        bounds = (self.x_min, self.x_max, self.y_min, self.y_max, *self.t)
        if not np.all(np.isfinite(bounds)):
            raise ValueError("lattice bounds must be finite")

    @classmethod
    def with_times(cls, x_range, y_range, nx, ny, t_min, t_max, nt):
        return cls(*x_range, nx, *y_range, ny, tuple(np.linspace(t_min, t_max, nt)))

    @property
    def shape(self):
        return (len(self.t), self.ny, self.nx)

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    @property
    def spacing(self):
        return (
            (self.x_max - self.x_min) / (self.nx - 1),
            (self.y_max - self.y_min) / (self.ny - 1),
        )

    def axes(self):
        return (
            np.linspace(self.x_min, self.x_max, self.nx),
            np.linspace(self.y_min, self.y_max, self.ny),
            np.asarray(self.t),
        )

    def points(self):
        """Arrays (x, y, t) of shape (nt, ny, nx): t-major, then y, then x."""
        xs, ys, ts = self.axes()
        T, Y, X = np.meshgrid(ts, ys, xs, indexing="ij")
        return X, Y, T
