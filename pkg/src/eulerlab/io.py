"""Field records on sampling lattices, CSV round-trips and legacy VTK export."""

from __future__ import annotations

import csv
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from .errors import DomainError
from .lattice import SampleLattice
from .solutions import SolutionParams, admissible, evaluate_case

COLUMNS = ("x", "y", "t", "u1", "u2", "p", "div", "vort", "z")
FLOAT_FMT = ".17g"


@dataclass
class FieldRecords:
    """Flat columns, one entry per sample point."""

    x: np.ndarray
    y: np.ndarray
    t: np.ndarray
    u1: np.ndarray
    u2: np.ndarray
    p: np.ndarray
    div: np.ndarray
    vort: np.ndarray
    z: np.ndarray

    def __post_init__(self):
        shape = np.shape(self.x)
        for f in fields(self):
            try:
                col = np.broadcast_to(np.asarray(getattr(self, f.name), dtype=float), shape)
            except ValueError as exc:
                raise ValueError(f"record column {f.name} does not match x") from exc
            setattr(self, f.name, np.ascontiguousarray(col).ravel())

    def __len__(self) -> int:
        return int(self.x.size)

    def columns(self):
        return [getattr(self, c) for c in COLUMNS]

    def ordered(self) -> "FieldRecords":
        """Copy sorted t-major, then y, then x."""
        k = np.lexsort((self.x, self.y, self.t))
        return FieldRecords(*(c[k] for c in self.columns()))


def sample(params: SolutionParams, lattice: SampleLattice, allow_skip: bool = False,
           amplitude: float = 1.0) -> tuple[FieldRecords, int]:
    """Evaluate the case solution on ``lattice``; returns records and skip count."""
    X, Y, T = lattice.points()
    ok = admissible(params, X, Y, T)
    skipped = int(ok.size - ok.sum())
    if skipped and not allow_skip:
        raise DomainError(f"{skipped} of {ok.size} lattice points are outside the domain")
    x, y, t = X[ok], Y[ok], T[ok]
    st = evaluate_case(params, x, y, t, amplitude=amplitude)
    return FieldRecords(x, y, t, st.u1, st.u2, st.p, st.div, st.vort, st.z), skipped


def write_csv(records: FieldRecords, path) -> None:
    path = Path(path)
    rec = records.ordered()
    try:
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(COLUMNS)
            for row in zip(*rec.columns()):
                w.writerow([format(v, FLOAT_FMT) for v in row])
    except OSError as exc:
        raise OSError(f"cannot write CSV to {path}: {exc.strerror or exc}") from exc


def read_csv(path) -> FieldRecords:
    path = Path(path)
    with path.open(newline="") as fh:
        r = csv.reader(fh)
        header = next(r, None)
        if header is None or tuple(header) != COLUMNS:
            raise ValueError(f"{path}: expected header {','.join(COLUMNS)}")
        rows = [[float(v) for v in row] for row in r if row]
    data = np.asarray(rows, dtype=float).reshape(-1, len(COLUMNS))
    return FieldRecords(*data.T)


def _regular_axis(v, name):
    u = np.unique(v)
    if u.size < 2:
        raise ValueError(f"VTK export needs at least two distinct {name} values")
    d = np.diff(u)
    if not np.allclose(d, d[0], rtol=1e-9, atol=0.0):
        raise ValueError(f"{name} values are not regularly spaced")
    return u


def write_vtk(records: FieldRecords, path, title: str = "eulerlab fields") -> None:
    """Legacy ASCII VTK, STRUCTURED_POINTS, for records at a single time."""
    if np.unique(records.t).size != 1:
        raise ValueError("VTK export takes records at a single time value")
    rec = records.ordered()
    xs = _regular_axis(rec.x, "x")
    ys = _regular_axis(rec.y, "y")
    nx, ny = xs.size, ys.size
    if nx * ny != len(rec):
        raise ValueError(f"{len(rec)} records do not fill a {nx} x {ny} lattice")
    gx = np.tile(xs, ny)
    gy = np.repeat(ys, nx)
    if not (np.array_equal(gx, rec.x) and np.array_equal(gy, rec.y)):
        raise ValueError("records do not form a regular lattice")
    dx = (xs[-1] - xs[0]) / (nx - 1)
    dy = (ys[-1] - ys[0]) / (ny - 1)

    def num(v):
        return format(float(v) + 0.0, FLOAT_FMT)  # + 0.0 turns -0 into 0

    lines = [
        "# vtk DataFile Version 3.0",
        title.replace("\n", " ")[:255],
        "ASCII",
        "DATASET STRUCTURED_POINTS",
        f"DIMENSIONS {nx} {ny} 1",
        f"ORIGIN {num(xs[0])} {num(ys[0])} 0",
        f"SPACING {num(dx)} {num(dy)} 1",
        f"POINT_DATA {nx * ny}",
        "VECTORS velocity double",
    ]
    lines += [f"{num(a)} {num(b)} 0" for a, b in zip(rec.u1, rec.u2)]
    for name, col in (("pressure", rec.p), ("vorticity", rec.vort)):
        lines += [f"SCALARS {name} double 1", "LOOKUP_TABLE default"]
        lines += [num(v) for v in col]
    path = Path(path)
    try:
        path.write_text("\n".join(lines) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write VTK to {path}: {exc.strerror or exc}") from exc


def evolve_records(state, grid, z=None) -> FieldRecords:
    """Cell-centred records of an evolution state (z is NaN unless given)."""
    from .evolve import cell_records

    X, Y, u1, u2, p, div, vort = cell_records(state, grid)
    # transpose (i, j) -> (j, i) so rows run over x fastest
    cols = [a.T for a in (X, Y, u1, u2, p, div, vort)]
    zz = np.full_like(cols[0], np.nan) if z is None else np.asarray(z).T
    return FieldRecords(cols[0], cols[1], np.full_like(cols[0], state.t), *cols[2:], zz)
