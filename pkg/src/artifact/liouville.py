"""Piecewise-linear convex candidates with a facet and why they are not weak solutions.

A convex function on ``R^n`` whose facet is neither empty nor everything,
and which is affine off the facet, depends on one variable only and takes
one of three forms (after a rotation and translation):

* ``type1``: ``max(t1 x1, 0)``, facet the half space ``x1 <= 0``;
* ``type2``: ``max(t1 x1, -t2 x1)``, facet the hyperplane ``x1 = 0``;
* ``type3``: ``max(t1 x1, 0, -t2 (x1 + l0))``, facet the slab ``-l0 <= x1 <= 0``.

Testing the equation against ``phi = phi1(x1) phi2(x')`` on the box
``Q = (-d, d) x (-1, 1)^(n-1)`` gives a closed-form value (type 2) or an
upper bound (types 1 and 3, worst case over admissible fields on the
facet). A strictly negative value shows that no admissible field makes the
candidate a weak solution.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .energy import EnergyModel, grad_energy
from .errors import InvalidDimension, NotGeneralized, SlabTooNarrow

__all__ = [
    "PLCandidate",
    "FacetRegion",
    "TestBump",
    "LiouvilleCertificate",
    "eval_candidate",
    "grad_candidate",
    "facet_of_candidate",
    "canonical_bumps",
    "bump_values",
    "type1_residual_bound",
    "choose_d",
    "type2_residual",
    "generalized_residuals",
    "quadrature_crosscheck",
    "certify",
]

KINDS = ("type1", "type2", "type3")
D_FRACTION = 0.5
SLAB_CAP = 0.99
GAUSS_NODES = 64


@dataclass(frozen=True)
class PLCandidate:
    """Parameters of one of the three piecewise-linear forms."""

    kind: str
    t1: float
    t2: float = 1.0
    l0: float = 1.0
    n: int = 2

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown candidate kind {self.kind!r}")
        if not (self.t1 > 0 and self.t2 > 0 and self.l0 > 0):
            raise ValueError("t1, t2 and l0 must be positive")
        if int(self.n) < 1:
            raise InvalidDimension("dimension must be at least 1")

    def to_dict(self) -> dict:
        return asdict(self)


def _first_coord(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return x if x.ndim == 0 else x[..., 0]


def eval_candidate(cand: PLCandidate, x) -> np.ndarray | float:
    """Value at points ``x`` of shape ``(..., n)``; only ``x1`` matters."""
    x1 = _first_coord(x)
    if cand.kind == "type1":
        out = np.maximum(cand.t1 * x1, 0.0)
    elif cand.kind == "type2":
        out = np.maximum(cand.t1 * x1, -cand.t2 * x1)
    else:
        out = np.maximum(np.maximum(cand.t1 * x1, 0.0), -cand.t2 * (x1 + cand.l0))
    return float(out) if np.ndim(out) == 0 else out


def grad_candidate(cand: PLCandidate, x1: float) -> np.ndarray:
    """Gradient at a point off the kinks, as an ``n``-vector."""
    g = np.zeros(cand.n)
    if x1 > 0:
        g[0] = cand.t1
    elif cand.kind == "type2" or (cand.kind == "type3" and x1 < -cand.l0):
        g[0] = -cand.t2
    return g


@dataclass(frozen=True)
class FacetRegion:
    """Facet as the set ``lower <= x1 <= upper``."""

    kind: str
    lower: float
    upper: float


def facet_of_candidate(cand: PLCandidate) -> FacetRegion:
    if cand.kind == "type1":
        return FacetRegion("halfspace", -np.inf, 0.0)
    if cand.kind == "type2":
        return FacetRegion("hyperplane", 0.0, 0.0)
    return FacetRegion("slab", -cand.l0, 0.0)


# --- test functions ---------------------------------------------------------------------


@dataclass(frozen=True)
class TestBump:
    """Norms of a product test function ``phi1(x1) phi2(x')``.

    ``norm_grad_phi2_L1`` integrates the l1 norm of the gradient, which
    dominates the Euclidean one, so bounds built from it stay valid.
    """

    __test__ = False  # not a pytest class

    d: float
    phi1_at_0: float
    norm_phi2_L1: float
    norm_grad_phi2_L1: float
    n: int = 2
    canonical: bool = True

    def to_dict(self) -> dict:
        return asdict(self)


def canonical_bumps(d: float, n: int) -> TestBump:
    """``phi1 = cos^2(pi x1 / (2d))`` and ``phi2 = prod cos^2(pi x_i / 2)``.

    ``phi1`` peaks at 0 with value 1 and is nondecreasing on ``(-d, 0)``.
    Each factor of ``phi2`` has unit integral over ``(-1, 1)`` and its
    derivative has ``L1`` norm 2, so ``||grad phi2||_1 = 2 (n - 1)``.
    """
    if not d > 0:
        raise ValueError("d must be positive")
    if n < 2:
        raise InvalidDimension("product bumps need n >= 2")
    return TestBump(float(d), 1.0, 1.0, 2.0 * (n - 1), int(n), True)


def bump_values(bump: TestBump, x) -> tuple[np.ndarray, np.ndarray]:
    """Canonical ``phi`` and its gradient at points ``x`` of shape ``(..., n)`` in ``Q``."""
    x = np.asarray(x, dtype=float)
    d = bump.d
    c1 = np.cos(np.pi * x[..., 0] / (2 * d))
    phi1 = c1**2
    dphi1 = -(np.pi / (2 * d)) * np.sin(np.pi * x[..., 0] / d)
    c = np.cos(0.5 * np.pi * x[..., 1:]) ** 2
    dc = -(np.pi / 2) * np.sin(np.pi * x[..., 1:])
    phi2 = np.prod(c, axis=-1)
    grad = np.empty(x.shape)
    grad[..., 0] = dphi1 * phi2
    for k in range(1, x.shape[-1]):
        others = np.prod(np.delete(c, k - 1, axis=-1), axis=-1)
        grad[..., k] = phi1 * dc[..., k - 1] * others
    return phi1 * phi2, grad


# --- closed-form values and bounds --------------------------------------------------------


def _require_standard(model: EnergyModel) -> None:
    if not model.is_standard:
        raise ValueError("this formula is for the standard family; use generalized_residuals")


def _check_slab(cand: PLCandidate, d: float) -> None:
    if cand.kind == "type3" and d >= cand.l0:
        raise SlabTooNarrow(f"need d < l0, got d={d}, l0={cand.l0}")


def type1_residual_bound(cand: PLCandidate, model: EnergyModel, bump: TestBump) -> float:
    """``phi1(0) (b d ||grad phi2||_1 - t1^(p-1) ||phi2||_1)`` for type 1 or 3.

    A negative value certifies that the candidate is not a weak solution.
    """
    if cand.kind == "type2":
        raise ValueError("type2 candidates have a closed-form residual")
    _require_standard(model)
    _check_slab(cand, bump.d)
    b, p = model.b, model.p
    return bump.phi1_at_0 * (
        b * bump.d * bump.norm_grad_phi2_L1 - cand.t1 ** (p - 1) * bump.norm_phi2_L1
    )


def type2_residual(cand: PLCandidate, model: EnergyModel, bump: TestBump | None = None) -> float:
    """``-phi1(0) (2b + t1^(p-1) + t2^(p-1)) ||phi2||_1``, always negative.

    With ``n = 1`` and no bump, ``phi1(0) = ||phi2||_1 = 1``.
    """
    if cand.kind != "type2":
        raise ValueError("type2_residual needs a type2 candidate")
    _require_standard(model)
    b, p = model.b, model.p
    phi1_0, norm2 = (1.0, 1.0) if bump is None else (bump.phi1_at_0, bump.norm_phi2_L1)
    return -phi1_0 * (2 * b + cand.t1 ** (p - 1) + cand.t2 ** (p - 1)) * norm2


def _gauss_panels(lo: float, hi: float, splits, nodes: int) -> tuple[np.ndarray, np.ndarray]:
    """Composite Gauss-Legendre rule on ``[lo, hi]`` with panel breaks at ``splits``."""
    t, w = np.polynomial.legendre.leggauss(nodes)
    edges = np.unique(np.clip(np.concatenate([[lo, hi], np.asarray(splits, float)]), lo, hi))
    xs, ws = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        xs.append(0.5 * (b - a) * t + 0.5 * (a + b))
        ws.append(0.5 * (b - a) * w)
    return np.concatenate(xs), np.concatenate(ws)


def _transverse_psi_norm(model: EnergyModel, n: int, nodes: int = GAUSS_NODES) -> float:
    """``|| Psi(0, grad phi2) ||_1`` over ``(-1, 1)^(n-1)`` for the canonical ``phi2``."""
    x, w = _gauss_panels(-1.0, 1.0, [0.0], nodes)
    grids = np.meshgrid(*([x] * (n - 1)), indexing="ij")
    weights = np.prod(np.meshgrid(*([w] * (n - 1)), indexing="ij"), axis=0)
    pts = np.stack(grids, axis=-1)
    c = np.cos(0.5 * np.pi * pts) ** 2
    dc = -(np.pi / 2) * np.sin(np.pi * pts)
    grad = np.zeros(pts.shape[:-1] + (n,))
    for k in range(n - 1):
        grad[..., k + 1] = dc[..., k] * np.prod(np.delete(c, k, axis=-1), axis=-1)
    return float(np.sum(weights * model.psi(grad)))


def _transverse_factor(cand: PLCandidate, model: EnergyModel, bump: TestBump) -> float:
    """Coefficient of ``d`` in the type-1 bound."""
    if model.is_standard:
        return model.b * bump.norm_grad_phi2_L1
    return _transverse_psi_norm(model, cand.n)


def _mu(model: EnergyModel, n: int, z1: float) -> float:
    """``<grad W(z1 e1), sign(z1) e1>``."""
    e1 = np.zeros(n)
    e1[0] = 1.0
    return float(np.dot(model.grad_w(z1 * e1), np.sign(z1) * e1))


def choose_d(cand: PLCandidate, model: EnergyModel, bump: TestBump | None = None) -> float:
    """Half the width at which the type-1 bound changes sign.

    For type 3 the result is also capped at ``0.99 l0``. Type-2 certificates
    hold for every ``d``; 1 is returned.
    """
    if cand.kind == "type2":
        return 1.0
    bump = canonical_bumps(1.0, cand.n) if bump is None else bump
    mu = _mu(model, cand.n, cand.t1)
    d_star = mu * bump.norm_phi2_L1 / _transverse_factor(cand, model, bump)
    d = D_FRACTION * d_star
    if cand.kind == "type3":
        d = min(d, SLAB_CAP * cand.l0)
    return float(d)


def generalized_residuals(cand: PLCandidate, model: EnergyModel, bump: TestBump) -> dict:
    """Bound (types 1 and 3) or closed-form value (type 2) for the generalized family.

    Uses ``mu = <grad W(t1 e1), e1>`` and ``mu2 = <grad W(-t2 e1), -e1>``; the
    transverse term ``||Psi(0, grad phi2)||_1`` is integrated by Gauss-Legendre
    quadrature. The identity anisotropy reproduces the standard formulas.
    """
    if model.variant != "generalized":
        raise NotGeneralized("generalized_residuals needs a generalized model")
    n = cand.n
    e1 = np.zeros(n)
    e1[0] = 1.0
    mu1 = _mu(model, n, cand.t1)
    if not mu1 > 0:
        raise AssertionError("grad W must be positive along its argument")
    if cand.kind == "type2":
        mu2 = _mu(model, n, -cand.t2)
        if not mu2 > 0:
            raise AssertionError("grad W must be positive along its argument")
        psi_sum = float(model.psi(e1) + model.psi(-e1))
        value = -bump.phi1_at_0 * (psi_sum + mu1 + mu2) * bump.norm_phi2_L1
        return {"mu_values": [mu1, mu2], "psi_e1": psi_sum, "residual": value}
    _check_slab(cand, bump.d)
    transverse = _transverse_psi_norm(model, n)
    value = bump.phi1_at_0 * (bump.d * transverse - mu1 * bump.norm_phi2_L1)
    return {"mu_values": [mu1], "transverse_psi_L1": transverse, "bound": value}


# --- direct quadrature of the tested weak form ----------------------------------------------


def quadrature_crosscheck(
    cand: PLCandidate,
    model: EnergyModel,
    bump: TestBump,
    grid_resolution: int = 1_000_000,
    rule: str = "gauss",
) -> float:
    """Integrate ``<flux, grad phi>`` over ``Q`` numerically.

    Off the facet the flux is ``grad E(grad u)``; on the facet the worst
    admissible field is taken, which contributes ``Psi(grad phi)``. The
    tensor rule uses about ``grid_resolution`` points, with panel breaks at
    the kinks of the integrand (``rule="gauss"``) or a uniform midpoint rule
    (``rule="midpoint"``).
    """
    n, d = cand.n, bump.d
    _check_slab(cand, d)
    if n < 2:
        raise InvalidDimension("quadrature needs n >= 2")
    per_axis = max(4, int(round(grid_resolution ** (1.0 / n))))
    if rule == "gauss":
        nodes = max(2, per_axis // 2)
        axes = [_gauss_panels(-d, d, [0.0], nodes)] + [_gauss_panels(-1.0, 1.0, [0.0], nodes)] * (n - 1)
    elif rule == "midpoint":
        m = per_axis + per_axis % 2  # even, so x1 = 0 is a cell face
        axes = []
        for lo, hi in [(-d, d)] + [(-1.0, 1.0)] * (n - 1):
            h = (hi - lo) / m
            axes.append((lo + h * (np.arange(m) + 0.5), np.full(m, h)))
    else:
        raise ValueError(f"unknown quadrature rule {rule!r}")

    pts = np.stack(np.meshgrid(*[a[0] for a in axes], indexing="ij"), axis=-1)
    weights = np.prod(np.meshgrid(*[a[1] for a in axes], indexing="ij"), axis=0)
    _, grad_phi = bump_values(bump, pts)
    x1 = pts[..., 0]
    right = x1 > 0
    integrand = np.empty(x1.shape)
    flux_r = grad_energy(model, grad_candidate(cand, 1.0))
    integrand[right] = grad_phi[right] @ flux_r
    left = ~right
    if cand.kind == "type2":
        flux_l = grad_energy(model, grad_candidate(cand, -1.0))
        integrand[left] = grad_phi[left] @ flux_l
    else:
        # facet: sup over admissible Z of <Z, grad phi> is Psi(grad phi); grad W(0) = 0
        integrand[left] = model.psi(grad_phi[left])
    return float(np.sum(weights * integrand))


# --- certificate ----------------------------------------------------------------------------


@dataclass(frozen=True)
class LiouvilleCertificate:
    candidate: PLCandidate
    model: dict
    bump: TestBump | None
    d: float
    bound_or_residual: float
    verdict: str
    crosscheck: float | None
    details: dict

    def to_dict(self) -> dict:
        return {
            "candidate": self.candidate.to_dict(),
            "model": self.model,
            "bump": None if self.bump is None else self.bump.to_dict(),
            "d": self.d,
            "bound_or_residual": self.bound_or_residual,
            "verdict": self.verdict,
            "crosscheck": self.crosscheck,
            "details": self.details,
        }


def certify(
    cand: PLCandidate,
    model: EnergyModel,
    d: float | None = None,
    crosscheck_resolution: int | None = None,
) -> LiouvilleCertificate:
    """Bound or residual for ``cand`` with the canonical bump of width ``d``.

    ``d`` defaults to :func:`choose_d`. The verdict is ``"not_weak_solution"``
    when the value is strictly negative and ``"inconclusive"`` otherwise.
    """
    d = choose_d(cand, model) if d is None else float(d)
    if cand.n == 1:
        if cand.kind != "type2":
            raise InvalidDimension("only type2 has a one-dimensional closed form")
        value, bump, details = type2_residual(cand, model), None, {}
    else:
        bump = canonical_bumps(d, cand.n)
        if model.is_standard:
            details = {}
            if cand.kind == "type2":
                value = type2_residual(cand, model, bump)
            else:
                value = type1_residual_bound(cand, model, bump)
        else:
            details = generalized_residuals(cand, model, bump)
            value = details.get("residual", details.get("bound"))
    cross = None
    if crosscheck_resolution and bump is not None:
        cross = quadrature_crosscheck(cand, model, bump, crosscheck_resolution)
    verdict = "not_weak_solution" if value < 0 else "inconclusive"
    return LiouvilleCertificate(cand, model.to_dict(), bump, d, float(value), verdict, cross, details)
