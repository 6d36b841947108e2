"""Uniform grids, node-based scalar fields and edge-based vector fields.

A grid with ``extents = (N_1, ..., N_d)`` cells has ``N_k + 1`` nodes along
axis ``k``. Scalar fields store one value per node. Vector fields store, at
every node, the forward difference to the next node along each axis; entries
with no forward neighbour are padded with zeros. With this layout
``div_h = -grad_h^T`` holds exactly (summation by parts).
"""

from __future__ import annotations

import io
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import GridMismatch, InvalidExponent, ZeroStep

__all__ = [
    "Grid",
    "ScalarField",
    "VectorField",
    "grad_h",
    "div_h",
    "difference_quotient",
    "lp_norm",
    "inner",
    "write_field_csv",
    "read_field_csv",
]

FLOAT_FMT = "%.17g"


@dataclass(frozen=True)
class Grid:
    """Uniform tensor grid on a box.

    Parameters
    ----------
    extents : tuple of int
        Cell counts per axis (at least 2 each).
    spacing : tuple of float
        Positive cell widths per axis.
    origin : tuple of float, optional
        Coordinates of node ``(0, ..., 0)``; defaults to zeros.
    """

    extents: tuple
    spacing: tuple
    origin: tuple | None = None

    def __post_init__(self):
        ext = tuple(int(e) for e in np.atleast_1d(self.extents))
        sp = tuple(float(s) for s in np.atleast_1d(self.spacing))
        if len(sp) == 1 and len(ext) > 1:
            sp = sp * len(ext)
        org = (0.0,) * len(ext) if self.origin is None else tuple(
            float(o) for o in np.atleast_1d(self.origin)
        )
        if not 1 <= len(ext) <= 3 or len(sp) != len(ext) or len(org) != len(ext):
            raise ValueError("extents, spacing and origin must share a dimension in 1..3")
        if any(e < 2 for e in ext):
            raise ValueError(f"need at least 2 cells per axis, got {ext}")
        if any(not (s > 0 and np.isfinite(s)) for s in sp):
            raise ValueError(f"spacing must be positive, got {sp}")
        object.__setattr__(self, "extents", ext)
        object.__setattr__(self, "spacing", sp)
        object.__setattr__(self, "origin", org)

    @classmethod
    def on_box(cls, lower, upper, extents) -> "Grid":
        """Grid covering ``[lower, upper]`` with the given cell counts."""
        lower = np.atleast_1d(np.asarray(lower, dtype=float))
        upper = np.atleast_1d(np.asarray(upper, dtype=float))
        extents = np.atleast_1d(extents)
        return cls(tuple(extents), tuple((upper - lower) / extents), tuple(lower))

    @property
    def dim(self) -> int:
        return len(self.extents)

    @property
    def shape(self) -> tuple:
        """Node-array shape."""
        return tuple(e + 1 for e in self.extents)

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    def axis_coords(self, axis: int) -> np.ndarray:
        return self.origin[axis] + self.spacing[axis] * np.arange(self.shape[axis])

    def coords(self) -> np.ndarray:
        """Node coordinates, shape ``(dim, *shape)``."""
        return np.stack(np.meshgrid(*[self.axis_coords(k) for k in range(self.dim)], indexing="ij"))

    @property
    def upper(self) -> tuple:
        return tuple(o + e * h for o, e, h in zip(self.origin, self.extents, self.spacing))

    def boundary_mask(self) -> np.ndarray:
        mask = np.zeros(self.shape, dtype=bool)
        for k in range(self.dim):
            idx = [slice(None)] * self.dim
            idx[k] = 0
            mask[tuple(idx)] = True
            idx[k] = -1
            mask[tuple(idx)] = True
        return mask

    def interior_mask(self) -> np.ndarray:
        return ~self.boundary_mask()

    def edge_mask(self) -> np.ndarray:
        """Which vector-field entries correspond to an actual forward edge."""
        mask = np.ones((self.dim,) + self.shape, dtype=bool)
        for k in range(self.dim):
            idx = [k] + [slice(None)] * self.dim
            idx[1 + k] = -1
            mask[tuple(idx)] = False
        return mask

    def quadrature_weights(self) -> np.ndarray:
        """Per-node weights of the trapezoidal (cell-corner average) rule."""
        w = np.ones(self.shape)
        for k in range(self.dim):
            wk = np.ones(self.shape[k])
            wk[[0, -1]] = 0.5
            w = w * wk.reshape([-1 if j == k else 1 for j in range(self.dim)])
        return w * self.cell_volume

    def refine(self, factor: int = 2) -> "Grid":
        return Grid(
            tuple(e * factor for e in self.extents),
            tuple(h / factor for h in self.spacing),
            self.origin,
        )

    def to_dict(self) -> dict:
        return {
            "dim": self.dim,
            "extents": list(self.extents),
            "spacing": list(self.spacing),
            "origin": list(self.origin),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Grid":
        grid = cls(tuple(data["extents"]), tuple(data["spacing"]), tuple(data.get("origin") or [0.0] * len(data["extents"])))
        if "dim" in data and int(data["dim"]) != grid.dim:
            raise ValueError("grid 'dim' does not match 'extents'")
        return grid


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class ScalarField:
    """Node values on a grid.

    ``boundary`` is ``"dirichlet"`` (values on boundary nodes are a pinned
    trace) or ``"zero"`` (the field is extended by zero outside the grid when
    sampled off-grid, as in difference quotients).
    """

    grid: Grid
    values: np.ndarray
    boundary: str = "dirichlet"

    def __post_init__(self):
        v = _frozen(self.values)
        if v.shape != self.grid.shape:
            raise GridMismatch(f"values of shape {v.shape} do not fit grid nodes {self.grid.shape}")
        if self.boundary not in ("dirichlet", "zero"):
            raise ValueError(f"unknown boundary mode {self.boundary!r}")
        if not np.all(np.isfinite(v[self.grid.boundary_mask()])):
            raise ValueError("boundary trace must be finite")
        object.__setattr__(self, "values", v)

    @classmethod
    def from_function(cls, grid: Grid, func, boundary: str = "dirichlet") -> "ScalarField":
        """Sample ``func(*coords)`` at the nodes."""
        vals = np.broadcast_to(func(*grid.coords()), grid.shape)
        return cls(grid, vals, boundary)

    def with_values(self, values) -> "ScalarField":
        return ScalarField(self.grid, values, self.boundary)


@dataclass(frozen=True, eq=False)
class VectorField:
    """Forward-edge vectors stored per node, shape ``(dim, *grid.shape)``.

    Entries without a forward edge (last node along an axis) are zero.
    """

    grid: Grid
    components: np.ndarray

    def __post_init__(self):
        c = np.array(self.components, dtype=float)
        expected = (self.grid.dim,) + self.grid.shape
        if c.shape != expected:
            raise GridMismatch(f"components of shape {c.shape} do not fit {expected}")
        c[~self.grid.edge_mask()] = 0.0
        c.setflags(write=False)
        object.__setattr__(self, "components", c)

    def magnitude(self) -> np.ndarray:
        return np.sqrt(np.sum(self.components**2, axis=0))


def _check_same_grid(*grids: Grid) -> None:
    first = grids[0]
    for g in grids[1:]:
        if g != first:
            raise GridMismatch("fields live on different grids")


def grad_array(values: np.ndarray, spacing) -> np.ndarray:
    """Forward differences of a node array, zero-padded at the last node."""
    dim = values.ndim
    out = np.zeros((dim,) + values.shape)
    for k in range(dim):
        idx = [k] + [slice(None)] * dim
        idx[1 + k] = slice(0, -1)
        out[tuple(idx)] = np.diff(values, axis=k) / spacing[k]
    return out


def div_array(components: np.ndarray, spacing) -> np.ndarray:
    """Backward-difference divergence, the exact negative adjoint of ``grad_array``."""
    dim = components.shape[0]
    out = np.zeros(components.shape[1:])
    for k in range(dim):
        c = components[k] / spacing[k]
        out += c
        dst = [slice(None)] * dim
        src = [slice(None)] * dim
        dst[k], src[k] = slice(1, None), slice(0, -1)
        out[tuple(dst)] -= c[tuple(src)]
    return out


def grad_h(u: ScalarField) -> VectorField:
    """Forward-difference gradient ``(u[i+1] - u[i]) / h`` per axis."""
    return VectorField(u.grid, grad_array(u.values, u.grid.spacing))


def div_h(Z: VectorField) -> ScalarField:
    """Backward-difference divergence; ``<grad_h u, Z> = -<u, div_h Z>``."""
    return ScalarField(Z.grid, div_array(Z.components, Z.grid.spacing))


def inner(a, b) -> float:
    """Cell-volume weighted inner product of two scalar or two vector fields."""
    _check_same_grid(a.grid, b.grid)
    va = a.values if isinstance(a, ScalarField) else a.components
    vb = b.values if isinstance(b, ScalarField) else b.components
    return float(np.sum(va * vb) * a.grid.cell_volume)


def _shift_zero_extended(values: np.ndarray, axis: int, shift: float) -> np.ndarray:
    """Sample the zero-extended piecewise-linear interpolant at ``node + shift`` (in cells)."""
    k = int(np.floor(shift))
    theta = shift - k
    n = values.shape[axis]
    pad = abs(k) + 2
    widths = [(0, 0)] * values.ndim
    widths[axis] = (pad, pad)
    padded = np.pad(values, widths)
    lo = np.take(padded, np.arange(n) + pad + k, axis=axis)
    hi = np.take(padded, np.arange(n) + pad + k + 1, axis=axis)
    return (1 - theta) * lo + theta * hi


def difference_quotient(u: ScalarField, axis: int, step: float) -> ScalarField:
    """Nodewise ``(ubar(x + step e_axis) - u(x)) / step`` with ``ubar`` the zero extension.

    Off-node positions are sampled from the piecewise-linear interpolant.
    """
    if step == 0:
        raise ZeroStep("difference quotient needs a nonzero step")
    if not 0 <= axis < u.grid.dim:
        raise ValueError(f"axis {axis} out of range for a {u.grid.dim}-d grid")
    shifted = _shift_zero_extended(u.values, axis, step / u.grid.spacing[axis])
    return ScalarField(u.grid, (shifted - u.values) / step, boundary="zero")


def lp_norm(field, p: float = 2.0) -> float:
    """Discrete ``L^p`` norm (``p = np.inf`` gives the max norm).

    Scalar fields use the trapezoidal rule (each cell contributes its volume
    times the mean of ``|v|^p`` over its corner nodes). Vector fields sum
    ``|v|^p`` (Euclidean length per node) times the cell volume over edges.
    """
    if not p >= 1:
        raise InvalidExponent(f"Lp exponent must be >= 1, got {p}")
    if isinstance(field, ScalarField):
        mag = np.abs(field.values)
        weights = field.grid.quadrature_weights()
    elif isinstance(field, VectorField):
        mag = field.magnitude()
        weights = field.grid.cell_volume
    else:
        raise TypeError("lp_norm expects a ScalarField or VectorField")
    if np.isinf(p):
        return float(mag.max())
    return float(np.sum(weights * mag**p) ** (1.0 / p))


# --- serialization -------------------------------------------------------------


def write_field_csv(field, path) -> None:
    """Write a field as CSV with a one-line JSON header comment.

    Every row holds the node coordinates followed by the value(s), encoded
    with 17 significant digits so doubles round-trip exactly.
    """
    grid = field.grid
    coords = grid.coords().reshape(grid.dim, -1).T
    if isinstance(field, ScalarField):
        kind, data = "scalar", field.values.reshape(-1, 1)
        names = ["value"]
        extra = {"boundary": field.boundary}
    else:
        kind = "vector"
        data = field.components.reshape(grid.dim, -1).T
        names = [f"z{k}" for k in range(grid.dim)]
        extra = {}
    header = {"kind": kind, "grid": grid.to_dict(), **extra}
    axes = ["x", "y", "z"][: grid.dim]
    buf = io.StringIO()
    buf.write("# " + json.dumps(header, sort_keys=True) + "\n")
    buf.write(",".join(axes + names) + "\n")
    np.savetxt(buf, np.hstack([coords, data]), fmt=FLOAT_FMT, delimiter=",")
    Path(path).write_text(buf.getvalue())


def read_field_csv(path):
    """Inverse of :func:`write_field_csv`."""
    text = Path(path).read_text()
    first, rest = text.split("\n", 1)
    if not first.startswith("# "):
        raise ValueError(f"{path} lacks the JSON header line")
    header = json.loads(first[2:])
    grid = Grid.from_dict(header["grid"])
    table = np.loadtxt(io.StringIO(rest), delimiter=",", skiprows=1, ndmin=2)
    data = table[:, grid.dim :]
    if header["kind"] == "scalar":
        return ScalarField(grid, data[:, 0].reshape(grid.shape), header.get("boundary", "dirichlet"))
    return VectorField(grid, data.T.reshape((grid.dim,) + grid.shape))
