"""Radial barrier functions for affine data and their sampled verification.

Around a center ``x*`` and on the annulus ``R/2 < |x - x*| < R`` two radial
profiles are built:

* exponential: ``h(x) = exp(-alpha |y|^2) - exp(-alpha R^2)``
* power: ``h(x) = beta ((R/|y|)^alpha - 1)``

with ``y = x - x*``. Parameters are chosen so that ``h`` vanishes on the
outer sphere, stays in ``[0, m]``, has gradient at most ``|c|/2`` and a
Hessian with positive minimal Pucci value for the ellipticity constants of
``E`` on the gradient window ``[|c|/2, 3|c|/2]``. Then ``v = h + <c, x>`` is a
classical subsolution.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize, special, stats

from .energy import EllipticityBounds, EnergyModel, hessian_energy, lambda_Lambda_bounds, pucci_minus
from .errors import CenterSingularity, InvalidDimension

__all__ = [
    "BarrierContext",
    "BarrierSpec",
    "BarrierEval",
    "BarrierCertificate",
    "construct_exponential",
    "construct_power",
    "eval_barrier",
    "verify_barrier",
]

ALPHA_RTOL = 1e-9
POWER_ALPHA_MARGIN = 1.0
POWER_BETA_SAFETY = 0.99


@dataclass(frozen=True, eq=False)
class BarrierContext:
    """Data a barrier is built for: energy parameters, affine slope ``c`` and height ``m``."""

    b: float
    p: float
    c: np.ndarray
    m: float = 1.0
    R: float = 1.0
    center: np.ndarray | None = None
    model: EnergyModel | None = field(default=None, repr=False)

    def __post_init__(self):
        c = np.atleast_1d(np.asarray(self.c, dtype=float))
        if c.ndim != 1 or c.size < 2:
            raise InvalidDimension("barriers need dimension n >= 2")
        if not np.linalg.norm(c) > 0:
            raise ValueError("affine slope c must be nonzero")
        if not (self.m > 0 and self.R > 0):
            raise ValueError("m and R must be positive")
        center = np.zeros_like(c) if self.center is None else np.asarray(self.center, dtype=float)
        if center.shape != c.shape:
            raise ValueError("center and c must have the same dimension")
        model = EnergyModel(self.b, self.p) if self.model is None else self.model
        if model.b != self.b or model.p != self.p:
            raise ValueError("model parameters disagree with b and p")
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "model", model)

    @property
    def n(self) -> int:
        return self.c.size

    @property
    def c_norm(self) -> float:
        return float(np.linalg.norm(self.c))

    def bounds(self) -> EllipticityBounds:
        return lambda_Lambda_bounds(self.model, 0.5 * self.c_norm, 1.5 * self.c_norm)

    def to_dict(self) -> dict:
        return {
            "b": self.b,
            "p": self.p,
            "c": self.c.tolist(),
            "m": self.m,
            "R": self.R,
            "center": self.center.tolist(),
            "n": self.n,
            "model": self.model.to_dict(),
        }


@dataclass(frozen=True, eq=False)
class BarrierSpec:
    """A barrier variant with its parameters. ``beta`` is 1 for the exponential variant."""

    variant: str
    alpha: float
    beta: float
    context: BarrierContext
    bounds: EllipticityBounds

    def __post_init__(self):
        if self.variant not in ("exponential", "power"):
            raise ValueError(f"unknown barrier variant {self.variant!r}")
        if not (self.alpha > 0 and self.beta > 0):
            raise ValueError("alpha and beta must be positive")

    def with_alpha(self, alpha: float) -> "BarrierSpec":
        """Same barrier with ``alpha`` overridden (no feasibility check)."""
        return dataclasses.replace(self, alpha=float(alpha))

    def conditions(self) -> dict:
        """Parameter inequalities as ``{name: {"satisfied", "margin"}}``.

        Margins are positive when the condition holds with room to spare.
        """
        ctx, a, R = self.context, self.alpha, self.context.R
        lam, Lam, n = self.bounds.lam, self.bounds.Lam, ctx.n
        if self.variant == "exponential":
            margins = {
                # h <= m, divided through by exp(alpha R^2)
                "c1": (ctx.m - np.exp(-0.25 * a * R**2) + np.exp(-a * R**2), False),
                "c2": (ctx.c_norm / (4 * R) - a * np.exp(-0.25 * a * R**2), False),
                "c3": (a - 2 / R**2, True),
                "pucci": (lam * (0.5 * R**2 * a - 1) - (n - 1) * Lam, True),
            }
        else:
            b1, b2 = _power_beta_bounds(ctx, a)
            margins = {
                "c1": (b1 - self.beta, False),
                "c2": (b2 - self.beta, False),
                "c3": (a, True),
                "pucci": ((a + 1) * lam - (n - 1) * Lam, True),
            }
        return {
            k: {"satisfied": bool(v > 0 if strict else v >= 0), "margin": float(v)}
            for k, (v, strict) in margins.items()
        }

    def to_dict(self) -> dict:
        return {
            "variant": self.variant,
            "alpha": self.alpha,
            "beta": self.beta,
            "context": self.context.to_dict(),
            "bounds": self.bounds.to_dict(),
            "conditions": self.conditions(),
        }


def _power_beta_bounds(ctx: BarrierContext, alpha: float) -> tuple[float, float]:
    R = ctx.R
    first = ctx.m / np.expm1(alpha * np.log(2))
    second = ctx.c_norm * R * 2.0 ** -(alpha + 1) / (2 * alpha)
    return first, second


def _upper_roots(g, peak: float) -> list[float]:
    """Right endpoint of ``{g < 0}`` for a function that is smallest at ``peak`` and rises after it."""
    if g(peak) >= 0:
        return []
    hi = 2 * peak
    while g(hi) < 0:
        hi *= 2
    return [optimize.brentq(g, peak, hi, rtol=1e-15, xtol=1e-300)]


def construct_exponential(context: BarrierContext) -> BarrierSpec:
    """Exponential barrier with the smallest feasible ``alpha``.

    ``alpha`` must exceed the Pucci threshold ``(2/R^2)(1 + (n-1) Lam/lam)``
    (which also covers ``alpha > 2/R^2``) and satisfy the two parameter
    inequalities. Each of those fails only on a bounded interval of
    ``alpha``, so the answer is the threshold itself or the right end of a
    failing interval, located by root finding and nudged up by a relative
    ``1e-9``.
    """
    bounds = context.bounds()
    R2 = context.R**2
    threshold = max(2 / R2, 2 / R2 * (1 + (context.n - 1) * bounds.Lam / bounds.lam))
    probe = BarrierSpec("exponential", 1.0, 1.0, context, bounds)

    def margin(name):
        return lambda a: probe.with_alpha(a).conditions()[name]["margin"]

    candidates = [threshold]
    # c1 in s = exp(alpha R^2 / 4) reads m s^4 - s^3 + 1 >= 0; its dip is at s = 3/(4m)
    s_dip = 0.75 / context.m
    if s_dip > 1:
        candidates += _upper_roots(margin("c1"), 4 * np.log(s_dip) / R2)
    # alpha exp(-alpha R^2/4) peaks at alpha = 4/R^2
    candidates += _upper_roots(margin("c2"), 4 / R2)
    for a in sorted(candidates):
        if a < threshold:
            continue
        spec = probe.with_alpha(a * (1 + ALPHA_RTOL))
        if all(c["satisfied"] for c in spec.conditions().values()):
            return spec
    raise AssertionError("no feasible alpha among candidates")  # pragma: no cover


def construct_power(context: BarrierContext) -> BarrierSpec:
    """Power barrier with ``alpha = (n-1) Lam/lam - 1 + 1`` and ``beta = 0.99 min(bounds)``."""
    bounds = context.bounds()
    threshold = (context.n - 1) * bounds.Lam / bounds.lam - 1
    alpha = max(threshold, 0.0) + POWER_ALPHA_MARGIN
    beta = POWER_BETA_SAFETY * min(_power_beta_bounds(context, alpha))
    return BarrierSpec("power", float(alpha), float(beta), context, bounds)


@dataclass(frozen=True, eq=False)
class BarrierEval:
    """Closed-form value, derivatives and Hessian eigenvalues of a barrier.

    Both derivatives share a positive radial factor: ``grad_h = -exp(log_factor) y``
    and ``hess_h = exp(log_factor) hess_unit``. Sign checks use the unit form,
    which stays finite where the factor underflows (large ``alpha``).
    """

    h: np.ndarray
    grad_h: np.ndarray
    hess_h: np.ndarray
    eig_parallel: np.ndarray
    eig_perp: np.ndarray
    hess_unit: np.ndarray
    log_factor: np.ndarray


def eval_barrier(spec: BarrierSpec, x) -> BarrierEval:
    """Evaluate ``h`` at points ``x`` of shape ``(n,)`` or ``(..., n)``.

    ``eig_parallel`` is the Hessian eigenvalue along ``x - x*`` and
    ``eig_perp`` the one of multiplicity ``n - 1`` orthogonal to it.
    """
    x = np.asarray(x, dtype=float)
    y = x - spec.context.center
    r2 = np.sum(y * y, axis=-1)
    if np.any(r2 == 0):
        raise CenterSingularity("barrier is singular at its center")
    n = y.shape[-1]
    a, beta, R = spec.alpha, spec.beta, spec.context.R
    outer = y[..., :, None] * y[..., None, :]
    eye = np.eye(n)
    if spec.variant == "exponential":
        e = np.exp(-a * r2)
        h = e - np.exp(-a * R**2)
        log_k = np.log(2 * a) - a * r2
        unit = 2 * a * outer - eye
    else:
        log_rho = np.log(R) - 0.5 * np.log(r2)
        h = beta * np.expm1(a * log_rho)
        log_k = np.log(a * beta) + a * log_rho - np.log(r2)
        unit = (a + 2) * outer / r2[..., None, None] - eye
    k = np.exp(log_k)
    if spec.variant == "exponential":
        par = k * (2 * a * r2 - 1)
    else:
        par = (a + 1) * k
    grad = -k[..., None] * y
    hess = k[..., None, None] * unit
    return BarrierEval(h, grad, hess, par, -k, unit, log_k)


# --- verification ---------------------------------------------------------------------


def _unit_directions(u: np.ndarray) -> np.ndarray:
    """Map points of ``(0,1)^(n)`` to the unit sphere in ``R^n`` via Gaussian normalization."""
    g = special.ndtri(np.clip(u, 1e-12, 1 - 1e-12))
    return g / np.linalg.norm(g, axis=-1, keepdims=True)


def sample_points(context: BarrierContext, count: int, seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Deterministic scrambled Halton samples of the annulus and of the outer sphere.

    Annulus radii are distributed uniformly in volume.
    """
    n, R = context.n, context.R
    q = stats.qmc.Halton(d=n + 1, scramble=True, seed=seed).random(count)
    dirs = _unit_directions(q[:, 1:])
    inner = (R / 2) ** n
    r = (inner + q[:, :1] * (R**n - inner)) ** (1.0 / n)
    annulus = context.center + r * dirs
    qs = stats.qmc.Halton(d=n, scramble=True, seed=seed + 1).random(count)
    sphere = context.center + R * _unit_directions(qs)
    return annulus, sphere


@dataclass(frozen=True, eq=False)
class BarrierCertificate:
    """Outcome of a sampled barrier verification.

    ``checks`` maps each property to its sampled extreme value, whether it
    held at every sample and the worst sample point. ``witness`` is the worst
    point of the first failed check.
    """

    spec: BarrierSpec
    samples: int
    seed: int
    checks: dict
    passed: bool
    witness: dict | None

    def to_dict(self) -> dict:
        return {
            "variant": self.spec.variant,
            "alpha": self.spec.alpha,
            "beta": self.spec.beta,
            "context": self.spec.context.to_dict(),
            "bounds": self.spec.bounds.to_dict(),
            "conditions": self.spec.conditions(),
            "samples": self.samples,
            "seed": self.seed,
            "checks": self.checks,
            "worst_points": {k: v["worst_point"] for k, v in self.checks.items()},
            "passed": self.passed,
            "witness": self.witness,
        }


def _check(values: np.ndarray, points: np.ndarray, ok: np.ndarray, worst: str) -> dict:
    i = int(np.argmin(values) if worst == "min" else np.argmax(values))
    return {
        "extreme": worst,
        "value": float(values[i]),
        "satisfied": bool(np.all(ok)),
        "failures": int(np.count_nonzero(~ok)),
        "worst_point": points[i].tolist(),
    }


def verify_barrier(spec: BarrierSpec, sample_count: int = 10_000, seed: int = 0) -> BarrierCertificate:
    """Check the barrier properties at deterministic sample points.

    On the annulus: ``0 <= h <= m``, ``|grad h| <= |c|/2``, positive minimal
    Pucci value of the Hessian and positive ``tr(D^2E(grad v) D^2h)`` with
    ``v = h + <c, x>``. On the outer sphere: ``h = 0`` (to rounding) and a
    negative outward normal derivative. Every inequality must hold at every
    sample.

    The Pucci, trace and normal-derivative values are reported with the
    positive radial factor ``exp(log_factor)`` divided out, so that their
    signs survive underflow of the factor.
    """
    if sample_count < 1:
        raise ValueError("sample_count must be at least 1")
    ctx = spec.context
    annulus, sphere = sample_points(ctx, sample_count, seed)
    ev = eval_barrier(spec, annulus)
    es = eval_barrier(spec, sphere)
    round_tol = 64 * np.finfo(float).eps * max(1.0, ctx.m)

    grad_norm = np.linalg.norm(ev.grad_h, axis=-1)
    pucci = pucci_minus(ev.hess_unit, spec.bounds)
    grad_v = ev.grad_h + ctx.c
    trace = np.einsum("...ij,...ji->...", hessian_energy(ctx.model, grad_v), ev.hess_unit)
    normal = (sphere - ctx.center) / ctx.R
    dnu = np.sum(-(sphere - ctx.center) * normal, axis=-1)
    gv = np.linalg.norm(grad_v, axis=-1)
    in_window = (gv >= spec.bounds.mu0) & (gv <= spec.bounds.M0)

    checks = {
        "pucci": _check(pucci, annulus, pucci > 0, "min"),
        "trace": _check(trace, annulus, trace > 0, "min"),
        "h_min": _check(ev.h, annulus, ev.h >= 0, "min"),
        "h_max": _check(ev.h, annulus, ev.h <= ctx.m, "max"),
        "h_sphere": _check(np.abs(es.h), sphere, np.abs(es.h) <= round_tol, "max"),
        "normal_derivative": _check(dnu, sphere, dnu < 0, "max"),
        "grad_norm": _check(grad_norm, annulus, grad_norm <= 0.5 * ctx.c_norm, "max"),
        # trace dominates the Pucci value wherever grad v sits in the window
        "trace_dominance": _check(
            trace - pucci, annulus, ~in_window | (trace >= pucci - 1e-12 * np.abs(pucci)), "min"
        ),
    }
    failed = [k for k, v in checks.items() if not v["satisfied"]]
    witness = None
    if failed:
        witness = {"check": failed[0], "point": checks[failed[0]]["worst_point"],
                   "value": checks[failed[0]]["value"]}
    return BarrierCertificate(spec, int(sample_count), int(seed), checks, not failed, witness)
