"""Checks on discrete convex fields: subdifferentials, facets, blow-ups, moduli."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .discrete import Grid, ScalarField
from .errors import BoundaryNode, NotConvex, WindowTooLarge

__all__ = [
    "SubdifferentialEstimate",
    "FacetReport",
    "BlowUpSequence",
    "GradientModulus",
    "convexity_defect",
    "is_convex",
    "subdifferential_at",
    "default_facet_tol",
    "facet_detect",
    "blow_up",
    "slope_bound_check",
    "gradient_modulus",
]

MIDPOINT_STEPS = (1, 2)  # node pairs at distance 2h and 4h


def _default_tol(u: ScalarField) -> float:
    return 1e-12 * (1.0 + float(np.abs(u.values).max()))


def convexity_defect(u: ScalarField) -> float:
    """Largest violation ``2u(x) - u(x-kh) - u(x+kh)`` over aligned triples, clipped at 0."""
    worst = 0.0
    v = u.values
    for axis in range(u.grid.dim):
        n = v.shape[axis]
        for k in MIDPOINT_STEPS:
            if 2 * k >= n:
                continue
            lo = np.take(v, range(0, n - 2 * k), axis=axis)
            mid = np.take(v, range(k, n - k), axis=axis)
            hi = np.take(v, range(2 * k, n), axis=axis)
            worst = max(worst, float(np.max(2 * mid - lo - hi)))
    return max(worst, 0.0)


def is_convex(u: ScalarField, tol: float | None = None) -> bool:
    """Midpoint convexity ``u(x) + u(y) >= 2u((x+y)/2) - tol`` along grid axes.

    Node pairs at distances ``2h`` and ``4h`` are tested. In 1D this is exact
    for the piecewise-linear interpolant.
    """
    tol = _default_tol(u) if tol is None else tol
    return convexity_defect(u) <= tol


def _require_convex(u: ScalarField, tol: float | None) -> None:
    if not is_convex(u, tol):
        raise NotConvex(f"field fails midpoint convexity by {convexity_defect(u):.3e}")


@dataclass(frozen=True)
class SubdifferentialEstimate:
    """Per-axis one-sided slopes ``[D-u, D+u]`` at a node."""

    point: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    is_singleton: bool
    witness: np.ndarray

    @property
    def width(self) -> np.ndarray:
        return self.upper - self.lower


def _as_index(grid: Grid, node) -> tuple:
    idx = tuple(int(i) for i in np.atleast_1d(node))
    if len(idx) != grid.dim:
        raise ValueError(f"node index {node} does not match a {grid.dim}-d grid")
    for i, n in zip(idx, grid.shape):
        if not 0 <= i < n:
            raise IndexError(f"node {node} lies outside the grid")
    return idx


def _point(grid: Grid, idx: tuple) -> np.ndarray:
    return np.array([grid.origin[k] + idx[k] * grid.spacing[k] for k in range(grid.dim)])


def subdifferential_at(
    u: ScalarField, node, tol: float = 1e-9, convexity_tol: float | None = None
) -> SubdifferentialEstimate:
    """One-sided difference slopes at an interior node of a convex field.

    ``is_singleton`` holds when every per-axis interval is no wider than
    ``tol``. The witness is the midpoint of the intervals.
    """
    _require_convex(u, convexity_tol)
    grid = u.grid
    idx = _as_index(grid, node)
    if any(i == 0 or i == n - 1 for i, n in zip(idx, grid.shape)):
        raise BoundaryNode(f"node {idx} lies on the boundary")
    lower = np.empty(grid.dim)
    upper = np.empty(grid.dim)
    for k in range(grid.dim):
        prev = list(idx)
        nxt = list(idx)
        prev[k] -= 1
        nxt[k] += 1
        lower[k] = (u.values[idx] - u.values[tuple(prev)]) / grid.spacing[k]
        upper[k] = (u.values[tuple(nxt)] - u.values[idx]) / grid.spacing[k]
    return SubdifferentialEstimate(
        point=_point(grid, idx),
        lower=lower,
        upper=upper,
        is_singleton=bool(np.all(upper - lower <= tol)),
        witness=0.5 * (lower + upper),
    )


@dataclass(frozen=True, eq=False)
class FacetReport:
    """Facet ``F = argmin u`` (up to ``tol``) and its complement ``D``."""

    facet_mask: np.ndarray
    complement_mask: np.ndarray
    min_value: float
    boundary_nodes: list
    tol: float
    meets_boundary: bool
    grid: Grid

    def interval(self) -> tuple[float, float]:
        """Coordinate range of the facet along the first axis (1D grids)."""
        x = self.grid.axis_coords(0)
        idx = np.flatnonzero(self.facet_mask)
        return float(x[idx[0]]), float(x[idx[-1]])

    def is_interval(self) -> bool:
        """In 1D, whether the facet nodes are contiguous."""
        idx = np.flatnonzero(self.facet_mask)
        return bool(idx.size and idx[-1] - idx[0] + 1 == idx.size)

    def to_dict(self) -> dict:
        out = {
            "min_value": self.min_value,
            "tol": self.tol,
            "meets_boundary": self.meets_boundary,
            "facet_node_count": int(self.facet_mask.sum()),
            "boundary_nodes": [list(map(int, n)) for n in self.boundary_nodes],
        }
        if self.grid.dim == 1:
            out["interval"] = list(self.interval())
        return out


def default_facet_tol(u: ScalarField) -> float:
    """Argmin tolerance ``Lip(u) h**2 / (2 L)`` with a relative floor.

    ``h`` is the largest spacing, ``L`` the largest domain extent and
    ``Lip(u)`` the largest forward difference. For growth like
    ``dist**(p/(p-1))`` off the facet with ``p >= 2`` this keeps the detected
    edge within a cell while staying far above solver noise.
    """
    grid = u.grid
    h = max(grid.spacing)
    extent = max(hi - lo for lo, hi in zip(grid.origin, grid.upper))
    lip = max(float(np.abs(np.diff(u.values, axis=k)).max()) / grid.spacing[k] for k in range(grid.dim))
    return max(lip * h * h / (2 * extent), _default_tol(u))


def facet_detect(u: ScalarField, tol: float | None = None, convexity_tol: float | None = None) -> FacetReport:
    """Facet of a convex field as its near-argmin set ``{u <= min u + tol}``.

    ``tol`` defaults to :func:`default_facet_tol`; for ``p < 2`` the growth
    off the facet is flatter and a smaller ``tol`` sharpens the edge. The
    convexity precondition is checked with ``convexity_tol``, which defaults
    to ``tol``.
    """
    if tol is None:
        tol = default_facet_tol(u)
    _require_convex(u, tol if convexity_tol is None else convexity_tol)
    grid = u.grid
    vmin = float(u.values.min())
    mask = u.values <= vmin + tol
    boundary = grid.boundary_mask()
    # facet nodes in the open domain with a neighbour outside the facet
    edge_nodes = []
    for idx in zip(*np.nonzero(mask & ~boundary)):
        for k in range(grid.dim):
            for s in (-1, 1):
                nb = list(idx)
                nb[k] += s
                if not mask[tuple(nb)]:
                    edge_nodes.append(tuple(int(i) for i in idx))
                    break
            else:
                continue
            break
    return FacetReport(
        facet_mask=mask,
        complement_mask=~mask,
        min_value=vmin,
        boundary_nodes=edge_nodes,
        tol=float(tol),
        meets_boundary=bool(np.any(mask & boundary)),
        grid=grid,
    )


# --- blow-up ------------------------------------------------------------------------


def _interpolate(u: ScalarField, pts: np.ndarray) -> np.ndarray:
    """Multilinear interpolation of ``u`` at points of shape ``(dim, ...)``."""
    grid = u.grid
    if grid.dim == 1:
        return np.interp(pts[0], grid.axis_coords(0), u.values)
    from scipy.interpolate import RegularGridInterpolator

    interp = RegularGridInterpolator([grid.axis_coords(k) for k in range(grid.dim)], u.values)
    flat = pts.reshape(grid.dim, -1).T
    return interp(flat).reshape(pts.shape[1:])


@dataclass(frozen=True, eq=False)
class BlowUpSequence:
    """Rescalings ``u_a(y) = (u(a y + x0) - u(x0)) / a`` on a fixed window."""

    center: np.ndarray
    scales: np.ndarray
    window: np.ndarray
    fields: np.ndarray
    deviations: np.ndarray
    classification: str
    slope: np.ndarray

    def rescaled_gradients(self) -> np.ndarray:
        """Gradients of each rescaling on the window, shape ``(len(scales), dim, ...)``."""
        dim = self.window.shape[0]
        spacing = [np.ptp(self.window[k]) / (self.window.shape[1 + k] - 1) for k in range(dim)]
        out = []
        for f in self.fields:
            g = np.gradient(f, *spacing)
            out.append(np.stack(g if isinstance(g, (list, tuple)) else [g]))
        return np.stack(out)

    def to_dict(self) -> dict:
        return {
            "center": self.center.tolist(),
            "scales": self.scales.tolist(),
            "deviations": self.deviations.tolist(),
            "classification": self.classification,
            "slope": self.slope.tolist(),
        }


def default_scales(grid: Grid, window_radius: float = 1.0, min_cells: float = 2.0) -> np.ndarray:
    """``a_N = 2**-N`` for ``N = 1, 2, ...`` while the window spans ``min_cells`` cells."""
    h = max(grid.spacing)
    n_max = int(np.floor(np.log2(window_radius / (min_cells * h))))
    if n_max < 2:
        raise WindowTooLarge("grid too coarse for a blow-up sequence")
    return 2.0 ** -np.arange(1, n_max + 1)


def blow_up(
    u: ScalarField,
    x0,
    scales=None,
    window_radius: float = 1.0,
    window_points: int = 201,
) -> BlowUpSequence:
    """Rescale ``u`` around ``x0`` at decreasing scales and classify the limit.

    The limit is classified from a least-squares affine fit ``c . y + d`` of
    the smallest-scale rescaling: ``"unresolved"`` if the sup-norm deviations
    between consecutive rescalings are not nonincreasing, ``"zero"`` if
    ``|c| <= 10 * (smallest deviation)``, and ``"affine"`` otherwise.
    """
    grid = u.grid
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    if x0.shape != (grid.dim,):
        raise ValueError("center must have one coordinate per grid axis")
    scales = default_scales(grid, window_radius) if scales is None else np.asarray(scales, dtype=float)
    if scales.ndim != 1 or scales.size < 2 or np.any(scales <= 0) or np.any(np.diff(scales) >= 0):
        raise ValueError("scales must be a strictly decreasing positive sequence of length >= 2")
    reach = window_radius * scales.max()
    eps = 1e-12 * max(1.0, *np.abs(grid.upper), *np.abs(grid.origin))
    for k in range(grid.dim):
        if x0[k] - reach < grid.origin[k] - eps or x0[k] + reach > grid.upper[k] + eps:
            raise WindowTooLarge(f"window of radius {reach} around {x0} leaves the grid")

    axes = [np.linspace(-window_radius, window_radius, window_points)] * grid.dim
    window = np.stack(np.meshgrid(*axes, indexing="ij"))
    shape = (grid.dim,) + (1,) * grid.dim
    lo = np.array(grid.origin).reshape(shape)
    hi = np.array(grid.upper).reshape(shape)
    u0 = float(_interpolate(u, x0.reshape(shape)).ravel()[0])
    fields = []
    for a in scales:
        pts = np.clip(a * window + x0.reshape(shape), lo, hi)
        fields.append((_interpolate(u, pts) - u0) / a)
    fields = np.stack(fields)
    deviations = np.abs(np.diff(fields, axis=0)).reshape(len(scales) - 1, -1).max(axis=1)

    design = np.column_stack([window.reshape(grid.dim, -1).T, np.ones(window[0].size)])
    coef, *_ = np.linalg.lstsq(design, fields[-1].ravel(), rcond=None)
    slope = coef[: grid.dim]
    floor = 1e-12 * (1.0 + float(np.abs(fields).max()))
    if np.any(np.diff(deviations) > floor):
        label = "unresolved"
    elif np.linalg.norm(slope) <= 10 * deviations[-1]:
        label = "zero"
    else:
        label = "affine"
    return BlowUpSequence(x0, scales, window, fields, deviations, label, slope)


# --- convexity inequalities and regularity instruments -------------------------------


def slope_bound_check(u: ScalarField, x1, x2, z2, tol: float = 1e-12, convexity_tol: float | None = None) -> bool:
    """Check ``<z2, nu> >= (u(x2) - u(x1)) / d - tol`` for grid-aligned nodes.

    ``x1`` and ``x2`` are node indices on a common grid line, ``d`` their
    distance and ``nu`` the unit vector from ``x1`` to ``x2``; ``z2`` is a
    subgradient at ``x2``.
    """
    _require_convex(u, convexity_tol)
    grid = u.grid
    i1, i2 = _as_index(grid, x1), _as_index(grid, x2)
    diff = np.array(i2) - np.array(i1)
    if np.count_nonzero(diff) != 1:
        raise ValueError("x1 and x2 must be distinct and aligned with a grid axis")
    p1, p2 = _point(grid, i1), _point(grid, i2)
    d = float(np.linalg.norm(p2 - p1))
    nu = (p2 - p1) / d
    rhs = (u.values[i2] - u.values[i1]) / d
    return bool(np.dot(np.atleast_1d(z2), nu) >= rhs - tol)


@dataclass(frozen=True)
class GradientModulus:
    """Largest gradient jump between adjacent cells and the oscillation table."""

    max_jump: float
    distances: np.ndarray
    oscillation: np.ndarray

    def table(self) -> np.ndarray:
        return np.column_stack([self.distances, self.oscillation])


def gradient_modulus(u: ScalarField, region_mask=None, max_offset: int = 8) -> GradientModulus:
    """Oscillation of the discrete gradient inside a region.

    Gradients are the full forward-difference vectors at nodes that have a
    forward edge along every axis. ``max_jump`` is the largest
    ``|grad u(x) - grad u(y)|`` over grid neighbours ``x, y`` in the region;
    the table lists the same maximum for neighbours ``k`` nodes apart along
    an axis, ``k = 1..max_offset``, against the distance ``k h``.
    """
    grid = u.grid
    region = np.ones(grid.shape, bool) if region_mask is None else np.asarray(region_mask, bool)
    if region.shape != grid.shape:
        raise ValueError("region mask must match the grid nodes")
    # restrict every component to nodes with all forward edges
    full = tuple(slice(0, n - 1) for n in grid.shape)
    comps = []
    for k in range(grid.dim):
        d = np.diff(u.values, axis=k) / grid.spacing[k]
        comps.append(d[tuple(full[j] if j != k else slice(None) for j in range(grid.dim))])
    grad = np.stack(comps)
    region = region[full]
    h = min(grid.spacing)
    distances, osc = [], []
    for k in range(1, max_offset + 1):
        worst = 0.0
        for axis in range(grid.dim):
            n = grad.shape[1 + axis]
            if k >= n:
                continue
            a = np.take(grad, range(0, n - k), axis=1 + axis)
            b = np.take(grad, range(k, n), axis=1 + axis)
            ok = np.take(region, range(0, n - k), axis=axis) & np.take(region, range(k, n), axis=axis)
            if ok.any():
                jump = np.sqrt(np.sum((a - b) ** 2, axis=0))[ok]
                worst = max(worst, float(jump.max()))
        distances.append(k * h)
        osc.append(worst)
    return GradientModulus(max_jump=osc[0], distances=np.array(distances), oscillation=np.array(osc))
