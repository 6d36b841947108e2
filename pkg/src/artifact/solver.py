"""Primal-dual minimization of the discrete energy and weak-form diagnostics.

The discrete problem is::

    minimize  sum_nodes vol * E(grad_h u) - sum_interior vol * f u
    subject to u = g on boundary nodes

with ``E = Psi + W``. It is solved as the saddle-point problem::

    min_u max_{|Z| <= 1, w}  <grad_h u, b B Z + w> - sum W*(w) - <f, u>

where ``B = A**(1/2)`` (identity for the standard family). The dual ``Z``
is updated by projection onto the unit ball and ``w`` by the resolvent of
``W*``, found per edge by a safeguarded Newton iteration on a scalar equation.
At a saddle point ``Z`` is a subgradient field and ``b B Z + grad W(grad_h u)``
is the discrete flux.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, asdict

import numpy as np
from scipy.optimize import brentq

from .discrete import Grid, ScalarField, VectorField, grad_array, div_array
from .energy import EnergyModel
from .errors import BoundaryOrderViolated, GridMismatch, InvalidOptions, NotConverged

__all__ = [
    "ProblemInstance",
    "SolveOptions",
    "ResidualReport",
    "WeakPair",
    "OracleSolution",
    "solve",
    "weak_residual",
    "oracle_solve_1d",
    "oracle_dirichlet_1d",
    "comparison_check",
    "discrete_energy",
    "energy_monotonicity",
    "conjugate_resolvent",
]

logger = logging.getLogger(__name__)

NEWTON_TOL = 1e-14


@dataclass(frozen=True, eq=False)
class ProblemInstance:
    """Dirichlet problem ``-b div(Z) - div(grad W(grad u)) = f``.

    Only the boundary values of ``dirichlet`` are used. ``q_exponent`` records
    the integrability exponent of ``f`` for bookkeeping; it must exceed the
    space dimension.
    """

    model: EnergyModel
    grid: Grid
    f: ScalarField
    dirichlet: ScalarField
    q_exponent: float = np.inf

    def __post_init__(self):
        if self.f.grid != self.grid or self.dirichlet.grid != self.grid:
            raise GridMismatch("f and dirichlet data must live on the instance grid")
        if not np.all(np.isfinite(self.f.values)):
            raise ValueError("source term must be finite")
        if not self.q_exponent > self.grid.dim:
            raise ValueError("integrability exponent of f must exceed the dimension")
        if self.model.dim is not None and self.model.dim != self.grid.dim:
            raise ValueError("anisotropy matrix size does not match the grid dimension")


@dataclass(frozen=True)
class SolveOptions:
    """Iteration controls for :func:`solve`.

    ``step_ratio`` is ``tau / sigma`` up to the common factor fixed by the
    operator norm. With ``multilevel`` the solver first solves on successively
    coarser grids (by factors of two) and interpolates the result as a warm
    start; ``max_iters`` applies to each level.
    """

    max_iters: int = 50_000
    tol_primal: float = 1e-8
    tol_residual: float = 1e-8
    step_ratio: float = 0.3
    check_every: int = 50
    multilevel: bool = True
    coarsest_cells: int = 16
    power_iters: int = 50
    strict: bool = False

    def __post_init__(self):
        if int(self.max_iters) < 1:
            raise InvalidOptions("max_iters must be at least 1")
        if not (self.tol_primal > 0 and self.tol_residual > 0):
            raise InvalidOptions("tolerances must be positive")
        if not (self.step_ratio > 0 and np.isfinite(self.step_ratio)):
            raise InvalidOptions("step_ratio must be positive")
        if int(self.check_every) < 1 or int(self.power_iters) < 1:
            raise InvalidOptions("check_every and power_iters must be positive")
        if int(self.coarsest_cells) < 2:
            raise InvalidOptions("coarsest_cells must be at least 2")

    @classmethod
    def from_dict(cls, data: dict | None) -> "SolveOptions":
        data = dict(data or {})
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise InvalidOptions(f"unknown solver options: {sorted(unknown)}")
        return cls(**data)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class ResidualReport:
    weak_residual_max: float
    complementarity_gap: float
    z_norm_excess: float

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True, eq=False)
class WeakPair:
    """Candidate weak solution ``(u, Z)`` with its flux and residual report."""

    u: ScalarField
    Z: VectorField
    flux: VectorField
    residual_report: ResidualReport
    iterations: int = 0
    converged: bool = False
    energy_history: np.ndarray = field(default_factory=lambda: np.empty(0))
    levels: tuple = ()


@dataclass(frozen=True, eq=False)
class OracleSolution:
    """Exact 1D solution sampled on a grid (nodes for ``u``, edges for ``Z``)."""

    u: ScalarField
    Z: VectorField
    flux: VectorField
    slope: np.ndarray
    anchor_flux: float

    @property
    def grid(self) -> Grid:
        return self.u.grid

    def facet_interval(self) -> tuple[float, float] | None:
        """Hull of the nodes touching a zero-slope edge, ``None`` if there is none."""
        x = self.grid.axis_coords(0)
        flat = np.flatnonzero(self.slope == 0)
        if flat.size == 0:
            return None
        return float(x[flat[0]]), float(x[flat[-1] + 1])


# --- pointwise building blocks -----------------------------------------------------


def _sqrt_aniso(model: EnergyModel):
    if model.is_standard:
        return None
    vals, vecs = np.linalg.eigh(model.anisotropy)
    return (vecs * np.sqrt(vals)) @ vecs.T


def _apply_matrix(M, comps: np.ndarray) -> np.ndarray:
    if M is None:
        return comps
    return np.einsum("ij,j...->i...", M, comps)


def _project_unit_ball(Z: np.ndarray) -> np.ndarray:
    norm = np.sqrt(np.sum(Z**2, axis=0))
    return Z / np.maximum(norm, 1.0)


def _safeguarded_newton(fun, a_lo, a_hi, t0, max_iter=100):
    """Newton with bisection fallback for increasing scalar equations, elementwise.

    ``fun(t, idx)`` returns the residual and derivative for the entries
    ``idx`` of the flattened problem. Only unconverged entries are iterated.
    """
    shape = np.shape(a_lo)
    lo = np.ravel(a_lo).astype(float)
    hi = np.ravel(a_hi).astype(float)
    t = np.clip(np.ravel(t0).astype(float), lo, hi)
    idx = np.arange(t.size)
    for _ in range(max_iter):
        tt = t[idx]
        val, der = fun(tt, idx)
        lo_i = np.where(val < 0, tt, lo[idx])
        hi_i = np.where(val > 0, tt, hi[idx])
        with np.errstate(divide="ignore", invalid="ignore"):
            step = val / der
        done = (val == 0) | (np.abs(step) <= NEWTON_TOL * (1.0 + np.abs(tt)))
        t_new = tt - step
        outside = ~done & (~np.isfinite(t_new) | (t_new < lo_i) | (t_new > hi_i))
        t_new = np.where(outside, 0.5 * (lo_i + hi_i), t_new)
        t[idx] = np.where(val == 0, tt, t_new)
        lo[idx], hi[idx] = lo_i, hi_i
        idx = idx[~done]
        if idx.size == 0:
            break
    return t.reshape(shape)


class _Resolvent:
    """Resolvent of ``sigma * W*`` for one model, with warm-started radii.

    For ``p <= 2`` the equation ``y + sigma grad W*(y) = v`` is solved
    directly; for ``p > 2`` Moreau's identity turns it into the resolvent of
    ``W / sigma``. Either way the unknown is a norm ``t >= 0`` solving an
    increasing scalar equation ``t (1 + kappa t**r) = |x|`` (standard family)
    with ``r >= 0``, which keeps Newton's derivative bounded below by one.
    """

    def __init__(self, model: EnergyModel):
        self.model = model
        p = model.p
        self.direct = p <= 2
        self.r = (2 - p) / (p - 1) if self.direct else p - 2
        if not model.is_standard:
            vals, vecs = np.linalg.eigh(model.anisotropy)
            self.vals, self.vecs = vals, vecs
        self.t = None

    def __call__(self, v: np.ndarray, sigma: float) -> np.ndarray:
        if self.direct:
            x, kappa = v, sigma
        else:
            x, kappa = v / sigma, 1.0 / sigma
        if self.model.is_standard:
            y = self._standard(x, kappa)
        else:
            y = self._aniso(x, kappa)
        return y if self.direct else v - sigma * y

    def _standard(self, x, kappa):
        r = self.r
        mag = np.sqrt(np.sum(x**2, axis=0))

        flat = mag.ravel()

        def fun(t, idx):
            tr = t**r
            return t * (1 + kappa * tr) - flat[idx], 1 + kappa * (r + 1) * tr

        if r == 0:
            # linear and quadratic cases: start Newton at the exact root
            t0 = mag / (1 + kappa)
        elif r == 1:
            t0 = 2 * mag / (1 + np.sqrt(1 + 4 * kappa * mag))
        elif self.t is not None and self.t.shape == mag.shape:
            t0 = self.t
        else:
            t0 = mag
        t = _safeguarded_newton(fun, np.zeros_like(mag), mag, t0)
        self.t = t
        with np.errstate(invalid="ignore", divide="ignore"):
            scale = np.where(mag > 0, t / mag, 0.0)
        return scale * x

    def _aniso(self, x, kappa):
        # Work in eigen-coordinates of A, where the resolvent is diagonal:
        # y_i = x_i / (1 + c k_i) with the scalar c = kappa * |y|_M**r, M being
        # A^{-1} (direct) or A (Moreau). The equation for c has slope >= 1.
        r = self.r
        xe = np.einsum("ji,j...->i...", self.vecs, x)
        k = 1 / self.vals if self.direct else self.vals
        k = k.reshape((-1,) + (1,) * (x.ndim - 1))
        mx2 = k * xe**2  # the metric weights coincide with k
        flat = mx2.reshape(mx2.shape[0], -1)
        kf = k.reshape(-1, 1)

        def fun(c, idx):
            m = flat[:, idx]
            denom = 1 + c * kf
            g = np.sqrt(np.sum(m / denom**2, axis=0))
            dg = -np.sum(m * kf / denom**3, axis=0)
            with np.errstate(divide="ignore", invalid="ignore"):
                gr = g**r
                der = 1 - kappa * r * np.where(g > 0, gr / g**2, 0.0) * dg
            return c - kappa * gr, der

        c_hi = kappa * np.sqrt(np.sum(mx2, axis=0)) ** r
        c0 = c_hi if self.t is None or self.t.shape != c_hi.shape else self.t
        c = _safeguarded_newton(fun, np.zeros_like(c_hi), c_hi, c0)
        self.t = c
        return np.einsum("ij,j...->i...", self.vecs, xe / (1 + c * k))


def conjugate_resolvent(model: EnergyModel, v, sigma: float) -> np.ndarray:
    """Resolvent ``(I + sigma d W*)^{-1}`` applied to vectors ``v`` of shape ``(n, ...)``."""
    v = np.asarray(v, dtype=float)
    return _Resolvent(model)(v, sigma)


def _w_map(model: EnergyModel, comps: np.ndarray) -> np.ndarray:
    """``grad W`` applied to a component-first vector array."""
    return np.moveaxis(model.grad_w(np.moveaxis(comps, 0, -1)), -1, 0)


def _energy_density(model: EnergyModel, comps: np.ndarray) -> np.ndarray:
    return model.psi(np.moveaxis(comps, 0, -1)) + model.w(np.moveaxis(comps, 0, -1))


def discrete_energy(model: EnergyModel, u: ScalarField, f: ScalarField) -> float:
    """``sum vol * E(grad_h u) - sum_interior vol * f u``."""
    grid = u.grid
    du = grad_array(u.values, grid.spacing)
    interior = grid.interior_mask()
    vol = grid.cell_volume
    return float(vol * _energy_density(model, du).sum() - vol * np.sum(f.values[interior] * u.values[interior]))


# --- residuals --------------------------------------------------------------------


def energy_monotonicity(history, tol: float = 1e-9) -> dict:
    """Summary of the increases in a recorded energy history.

    Primal-dual iterates need not decrease the energy, so this is a
    diagnostic only. Returns the number of checkpoints, the number of steps
    whose increase exceeds ``tol`` and the largest increase.
    """
    e = np.asarray(history, dtype=float)
    d = np.diff(e)
    return {
        "checkpoints": int(e.size),
        "violations": int(np.count_nonzero(d > tol)),
        "max_increase": float(d.max(initial=0.0)),
        "final_energy": float(e[-1]) if e.size else float("nan"),
    }


def _report_arrays(model, grid, u, Z, f, B):
    du = grad_array(u, grid.spacing)
    flux = model.b * _apply_matrix(B, Z) + _w_map(model, du)
    vol = grid.cell_volume
    interior = grid.interior_mask()
    # <flux, grad phi_i> = -vol * div(flux)_i for the hat function phi_i
    res = -vol * div_array(flux, grid.spacing) - vol * f
    weak = float(np.abs(res[interior]).max()) if interior.any() else 0.0
    Bdu = _apply_matrix(B, du)
    gap = np.sqrt(np.sum(Bdu**2, axis=0)) - np.sum(Z * Bdu, axis=0)
    znorm = np.sqrt(np.sum(Z**2, axis=0))
    report = ResidualReport(
        weak_residual_max=weak,
        complementarity_gap=float(max(gap.max(), 0.0)),
        z_norm_excess=float(max(znorm.max() - 1.0, 0.0)),
    )
    return report, flux


def weak_residual(pair, instance: ProblemInstance) -> ResidualReport:
    """Residual report of a pair ``(u, Z)`` against the discrete weak form.

    ``pair`` may be a :class:`WeakPair`, an :class:`OracleSolution` or a
    ``(u, Z)`` tuple. Reports

    * ``weak_residual_max``: max over interior hat functions ``phi`` of
      ``|b <Z, grad phi> + <grad W(grad u), grad phi> - <f, phi>|``,
    * ``complementarity_gap``: max over edges of ``|grad u| - <Z, grad u>``,
    * ``z_norm_excess``: ``max(0, max |Z| - 1)``.
    """
    if isinstance(pair, tuple):
        u, Z = pair
    else:
        u, Z = pair.u, pair.Z
    if u.grid != instance.grid or Z.grid != instance.grid:
        raise GridMismatch("pair and instance live on different grids")
    report, _ = _report_arrays(
        instance.model, instance.grid, u.values, Z.components, instance.f.values, _sqrt_aniso(instance.model)
    )
    return report


# --- primal-dual iteration -------------------------------------------------------


def _operator_norm_sq(grid: Grid, iters: int) -> float:
    """Power iteration for ``||grad_h||^2`` on fields vanishing at the boundary."""
    interior = grid.interior_mask()
    rng = np.random.default_rng(0)
    x = rng.standard_normal(grid.shape) * interior
    est = 0.0
    for _ in range(iters):
        y = -div_array(grad_array(x, grid.spacing), grid.spacing) * interior
        est = float(np.sqrt(np.sum(y**2)) / np.sqrt(np.sum(x**2)))
        x = y / np.sqrt(np.sum(y**2))
    return est


def _prolong_scalar(coarse: np.ndarray, fine_grid: Grid) -> np.ndarray:
    out = coarse
    for k in range(coarse.ndim):
        n = out.shape[k]
        xc = np.arange(n) * 2.0
        xf = np.arange(2 * n - 1, dtype=float)
        out = np.apply_along_axis(lambda row: np.interp(xf, xc, row), k, out)
    return out


def _prolong_vector(coarse: np.ndarray, fine_grid: Grid) -> np.ndarray:
    # piecewise constant: fine node i takes the coarse value at node i // 2
    idx = np.ix_(*[np.arange(s) // 2 for s in fine_grid.shape])
    return np.stack([c[idx] for c in coarse])


def _coarsen(instance: ProblemInstance, min_cells: int) -> ProblemInstance | None:
    ext = instance.grid.extents
    if any(e % 2 or e // 2 < min_cells for e in ext):
        return None
    grid = Grid(tuple(e // 2 for e in ext), tuple(2 * h for h in instance.grid.spacing), instance.grid.origin)
    sl = tuple(slice(None, None, 2) for _ in ext)
    return ProblemInstance(
        instance.model,
        grid,
        ScalarField(grid, instance.f.values[sl], instance.f.boundary),
        ScalarField(grid, instance.dirichlet.values[sl]),
        instance.q_exponent,
    )


def _run_pdhg(instance: ProblemInstance, opts: SolveOptions, start=None):
    model, grid = instance.model, instance.grid
    h, vol = grid.spacing, grid.cell_volume
    interior = grid.interior_mask()
    boundary = ~interior
    f = instance.f.values
    B = _sqrt_aniso(model)
    b = model.b

    if start is None:
        u = _harmonic_guess(instance)
        Z = np.zeros((grid.dim,) + grid.shape)
        w = np.zeros_like(Z)
    else:
        u, Z, w = (np.array(a, dtype=float) for a in start)
    u[boundary] = instance.dirichlet.values[boundary]

    bnorm = 1.0 if B is None else float(np.linalg.eigvalsh(model.anisotropy)[-1])
    K = np.sqrt((b * b * bnorm + 1.0) * _operator_norm_sq(grid, opts.power_iters)) * 1.01
    tau = opts.step_ratio / K
    sigma = 1.0 / (opts.step_ratio * K)
    resolvent = _Resolvent(model)
    Bt = None if B is None else B.T

    ubar = u.copy()
    best = None
    history = []
    converged = False
    it = 0
    for it in range(1, opts.max_iters + 1):
        du = grad_array(ubar, h)
        Z = _project_unit_ball(Z + sigma * b * _apply_matrix(B, du))
        w = resolvent(w + sigma * du, sigma)
        # K^T(Z, w) = -div(b B^T Z + w); objective gradient of -<f,u> is -f
        u_new = u + tau * (div_array(b * _apply_matrix(Bt, Z) + w, h) + f)
        u_new[boundary] = u[boundary]
        ubar = 2 * u_new - u
        u = u_new
        if it % opts.check_every == 0 or it == opts.max_iters:
            report, _ = _report_arrays(model, grid, u, Z, f, B)
            history.append(_energy_value(model, grid, u, f, interior, vol))
            score = max(report.weak_residual_max / opts.tol_residual, report.complementarity_gap / opts.tol_primal)
            if best is None or score <= best[0]:
                best = (score, u.copy(), Z.copy(), w.copy(), it)
            if score < 1.0:
                converged = True
                break
    _, u, Z, w, best_it = best
    return u, Z, w, it, converged, np.asarray(history)


def _energy_value(model, grid, u, f, interior, vol):
    du = grad_array(u, grid.spacing)
    return float(vol * _energy_density(model, du).sum() - vol * np.sum(f[interior] * u[interior]))


def _harmonic_guess(instance: ProblemInstance) -> np.ndarray:
    """Initial guess: multilinear blend of the boundary data (exact in 1D)."""
    grid = instance.grid
    g = instance.dirichlet.values
    if grid.dim == 1:
        x = grid.axis_coords(0)
        return np.interp(x, [x[0], x[-1]], [g[0], g[-1]])
    u = np.zeros(grid.shape)
    u[grid.boundary_mask()] = g[grid.boundary_mask()]
    interior = grid.interior_mask()
    u[interior] = g[grid.boundary_mask()].mean()
    return u


def solve(instance: ProblemInstance, opts: SolveOptions | None = None) -> WeakPair:
    """Minimize the discrete energy and return the pair ``(u, Z)``.

    Convergence means both ``complementarity_gap <= tol_primal`` and
    ``weak_residual_max <= tol_residual``. When ``max_iters`` is reached first
    the best iterate seen is returned with ``converged=False``, or
    :class:`NotConverged` is raised if ``opts.strict`` is set.
    """
    opts = opts or SolveOptions()
    chain = [instance]
    if opts.multilevel:
        while (coarse := _coarsen(chain[-1], opts.coarsest_cells)) is not None:
            chain.append(coarse)
    start = None
    levels = []
    for level, inst in enumerate(reversed(chain)):
        u, Z, w, its, conv, history = _run_pdhg(inst, opts, start)
        levels.append({"extents": list(inst.grid.extents), "iterations": its, "converged": conv})
        logger.debug("level %s: %d iterations, converged=%s", inst.grid.extents, its, conv)
        if level < len(chain) - 1:
            fine = chain[len(chain) - 2 - level].grid
            start = (_prolong_scalar(u, fine), _prolong_vector(Z, fine), _prolong_vector(w, fine))
    grid = instance.grid
    report, flux = _report_arrays(
        instance.model, grid, u, Z, instance.f.values, _sqrt_aniso(instance.model)
    )
    pair = WeakPair(
        u=ScalarField(grid, u),
        Z=VectorField(grid, Z),
        flux=VectorField(grid, flux),
        residual_report=report,
        iterations=its,
        converged=conv,
        energy_history=history,
        levels=tuple(levels),
    )
    if not conv:
        logger.warning("solver stopped after %d iterations without converging: %s", its, report)
        if opts.strict:
            raise NotConverged(f"no convergence within {opts.max_iters} iterations", pair)
    return pair


# --- exact one-dimensional oracle ------------------------------------------------


def _f_nodes(grid: Grid, f) -> np.ndarray:
    if isinstance(f, ScalarField):
        return f.values
    if callable(f):
        return np.broadcast_to(np.asarray(f(grid.axis_coords(0)), dtype=float), grid.shape).copy()
    arr = np.broadcast_to(np.asarray(f, dtype=float), grid.shape)
    return arr.copy()


def _edge_flux(grid: Grid, f: np.ndarray, anchor_flux: float) -> np.ndarray:
    # q' = -f; the half-cell at the left end followed by full cells, which makes
    # the sampled triple satisfy the discrete weak form exactly
    h = grid.spacing[0]
    increments = np.concatenate([[0.5 * h * f[0]], h * f[1:-1]])
    return anchor_flux - np.cumsum(increments)


def _slope_from_flux(model: EnergyModel, q: np.ndarray) -> np.ndarray:
    excess = np.maximum(np.abs(q) - model.b, 0.0)
    return np.sign(q) * excess ** (1.0 / (model.p - 1))


def oracle_solve_1d(model: EnergyModel, grid: Grid, f, anchor_flux: float, u_left: float = 0.0) -> OracleSolution:
    """Exact solution of the 1D equation for a prescribed flux at the left end.

    The flux is ``q(x) = anchor_flux - int_{x_0}^x f``; the slope inverts
    ``q = b sign(u') + |u'|^{p-2} u'``, i.e.
    ``u' = sign(q) max(|q| - b, 0)**(1/(p-1))``, and ``Z = clamp(q/b, -1, 1)``
    where ``u' = 0`` and ``sign(u')`` elsewhere. Fluxes are sampled at edge
    midpoints and ``u`` is accumulated from ``u_left``.
    """
    if grid.dim != 1:
        raise ValueError("the oracle is one-dimensional")
    if not model.is_standard:
        raise ValueError("the oracle covers the standard family")
    fn = _f_nodes(grid, f)
    h = grid.spacing[0]
    q = _edge_flux(grid, fn, anchor_flux)
    slope = _slope_from_flux(model, q)
    Z = np.where(slope == 0, np.clip(q / model.b, -1.0, 1.0), np.sign(slope))
    u = u_left + np.concatenate([[0.0], np.cumsum(h * slope)])
    pad = lambda a: np.concatenate([a, [0.0]])[None, :]
    flux = model.b * Z + np.sign(slope) * np.abs(slope) ** (model.p - 1)
    return OracleSolution(
        u=ScalarField(grid, u),
        Z=VectorField(grid, pad(Z)),
        flux=VectorField(grid, pad(flux)),
        slope=slope,
        anchor_flux=float(anchor_flux),
    )


def oracle_dirichlet_1d(model: EnergyModel, grid: Grid, f, u_left: float, u_right: float) -> OracleSolution:
    """Exact 1D solution matching Dirichlet data at both ends.

    The anchor flux is found by a bracketed root search on the total rise
    ``h * sum(u') - (u_right - u_left)``, which is nondecreasing in the anchor.
    """
    fn = _f_nodes(grid, f)
    h = grid.spacing[0]
    target = u_right - u_left

    def rise(anchor):
        return h * np.sum(_slope_from_flux(model, _edge_flux(grid, fn, anchor))) - target

    lo, hi = -1.0, 1.0
    while rise(lo) > 0:
        lo *= 2
    while rise(hi) < 0:
        hi *= 2
    anchor = brentq(rise, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)
    return oracle_solve_1d(model, grid, fn, anchor, u_left)


def oracle_instance_1d(model: EnergyModel, oracle: OracleSolution, f) -> ProblemInstance:
    """Problem instance whose Dirichlet data are the oracle's boundary values."""
    grid = oracle.grid
    return ProblemInstance(model, grid, ScalarField(grid, _f_nodes(grid, f)), oracle.u)


# --- comparison principle ----------------------------------------------------------


def comparison_check(u_minus: ScalarField, u_plus: ScalarField, tol: float = 0.0) -> bool:
    """``True`` iff ``u_minus <= u_plus + tol`` at every node.

    Raises :class:`BoundaryOrderViolated` if the ordering already fails on
    the boundary, which is the hypothesis rather than the conclusion.
    """
    if u_minus.grid != u_plus.grid:
        raise GridMismatch("comparison needs a shared grid")
    bnd = u_minus.grid.boundary_mask()
    if np.any(u_minus.values[bnd] > u_plus.values[bnd] + tol):
        raise BoundaryOrderViolated("boundary data are not ordered")
    return bool(np.all(u_minus.values <= u_plus.values + tol))
