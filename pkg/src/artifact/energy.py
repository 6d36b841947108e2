"""Energy integrand E = Psi + W and its convex-analysis toolkit.

Two families are built in:

* ``standard``: ``Psi(z) = b|z|`` and ``W(z) = |z|**p / p``.
* ``generalized``: ``Psi(z) = b*sqrt(z^T A z)`` and ``W(z) = (z^T A z)**(p/2) / p``
  for a symmetric positive-definite matrix ``A``.

All functions accept a single vector of shape ``(n,)`` or a stack of vectors
of shape ``(..., n)`` and broadcast over the leading axes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidRange, NotSymmetric, ZeroGradientPoint

__all__ = [
    "EnergyModel",
    "EllipticityBounds",
    "HessianSpectrum",
    "EllipticityRatio",
    "eval_energy",
    "grad_energy",
    "hessian_energy",
    "hessian_eigenvalues",
    "ellipticity_ratio",
    "lambda_Lambda_bounds",
    "pucci_minus",
    "support_function",
    "subdifferential_membership",
    "monotonicity_gap",
]


@dataclass(frozen=True, eq=False)
class EnergyModel:
    """Parameters of the integrand ``E = Psi + W``.

    Parameters
    ----------
    b : float
        Weight of the 1-homogeneous part, ``b > 0``.
    p : float
        Growth exponent of ``W``, ``p > 1``.
    variant : {"standard", "generalized"}
        Integrand family.
    anisotropy : array_like, optional
        SPD matrix of the generalized family. Ignored (must be ``None``) for
        the standard family.
    """

    b: float
    p: float
    variant: str = "standard"
    anisotropy: np.ndarray | None = field(default=None)

    def __post_init__(self):
        if not (np.isfinite(self.b) and self.b > 0):
            raise ValueError(f"b must be positive, got {self.b}")
        if not (np.isfinite(self.p) and self.p > 1):
            raise ValueError(f"p must exceed 1, got {self.p}")
        object.__setattr__(self, "b", float(self.b))
        object.__setattr__(self, "p", float(self.p))
        if self.variant == "standard":
            if self.anisotropy is not None:
                raise ValueError("standard variant takes no anisotropy matrix")
        elif self.variant == "generalized":
            if self.anisotropy is None:
                raise ValueError("generalized variant needs an anisotropy matrix")
            A = np.array(self.anisotropy, dtype=float)
            if A.ndim != 2 or A.shape[0] != A.shape[1]:
                raise ValueError("anisotropy must be a square matrix")
            if not np.allclose(A, A.T, rtol=0, atol=1e-12 * max(1.0, np.abs(A).max())):
                raise NotSymmetric("anisotropy matrix is not symmetric")
            A = 0.5 * (A + A.T)
            eig = np.linalg.eigvalsh(A)
            if eig[0] <= 0:
                raise ValueError("anisotropy matrix must be positive definite")
            A.setflags(write=False)
            Ainv = np.linalg.inv(A)
            Ainv = 0.5 * (Ainv + Ainv.T)
            Ainv.setflags(write=False)
            object.__setattr__(self, "anisotropy", A)
            object.__setattr__(self, "_inverse", Ainv)
            object.__setattr__(self, "_eig_range", (float(eig[0]), float(eig[-1])))
        else:
            raise ValueError(f"unknown variant {self.variant!r}")

    @classmethod
    def generalized(cls, b: float, p: float, anisotropy) -> "EnergyModel":
        return cls(b=b, p=p, variant="generalized", anisotropy=anisotropy)

    @property
    def is_standard(self) -> bool:
        return self.variant == "standard"

    @property
    def dim(self) -> int | None:
        """Space dimension fixed by the anisotropy, ``None`` for the standard family."""
        return None if self.is_standard else self.anisotropy.shape[0]

    def to_dict(self) -> dict:
        out = {"b": self.b, "p": self.p, "variant": self.variant}
        if not self.is_standard:
            out["anisotropy"] = self.anisotropy.tolist()
        return out

    # --- quadratic form helpers -------------------------------------------------

    def _apply(self, z: np.ndarray) -> np.ndarray:
        """``A z`` (identity for the standard family)."""
        if self.is_standard:
            return z
        return z @ self.anisotropy

    def norm(self, z) -> np.ndarray:
        """``sqrt(z^T A z)``, the Euclidean norm for the standard family."""
        z = np.asarray(z, dtype=float)
        return np.sqrt(np.maximum(np.sum(z * self._apply(z), axis=-1), 0.0))

    # --- the two parts of the integrand --------------------------------------------

    def psi(self, z) -> np.ndarray:
        return self.b * self.norm(z)

    def grad_psi(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        s = _nonzero_norm(self, z)
        return self.b * self._apply(z) / s[..., None]

    def hess_psi(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        s = _nonzero_norm(self, z)[..., None, None]
        a = self._apply(z)
        base = np.eye(z.shape[-1]) if self.is_standard else self.anisotropy
        return (self.b / s) * (base - a[..., :, None] * a[..., None, :] / s**2)

    def w(self, z) -> np.ndarray:
        return self.norm(z) ** self.p / self.p

    def grad_w(self, z) -> np.ndarray:
        """The monotone map ``A(z) = grad W(z)``, with ``A(0) = 0``."""
        z = np.asarray(z, dtype=float)
        s = self.norm(z)
        with np.errstate(divide="ignore", invalid="ignore"):
            scale = np.where(s > 0, s ** (self.p - 2), 0.0)
        return scale[..., None] * self._apply(z)

    def hess_w(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        s = _nonzero_norm(self, z)[..., None, None]
        a = self._apply(z)
        base = np.eye(z.shape[-1]) if self.is_standard else self.anisotropy
        return s ** (self.p - 2) * base + (self.p - 2) * s ** (self.p - 4) * (
            a[..., :, None] * a[..., None, :]
        )


def _nonzero_norm(model: EnergyModel, z: np.ndarray) -> np.ndarray:
    s = model.norm(z)
    if np.any(s == 0):
        raise ZeroGradientPoint("E is not differentiable at z = 0")
    return s


@dataclass(frozen=True)
class EllipticityBounds:
    """Uniform ellipticity constants of the Hessian on a gradient window."""

    mu0: float
    M0: float
    lam: float
    Lam: float

    def to_dict(self) -> dict:
        return {"mu0": self.mu0, "M0": self.M0, "lambda": self.lam, "Lambda": self.Lam}


@dataclass(frozen=True)
class HessianSpectrum:
    """Eigenvalues of the Hessian of E.

    ``radial`` and ``tangential`` are the closed-form values of the standard
    family (``None`` for the generalized one); ``eigenvalues`` is always the
    sorted spectrum.
    """

    radial: float | None
    tangential: float | None
    tangential_multiplicity: int
    eigenvalues: np.ndarray


@dataclass(frozen=True)
class EllipticityRatio:
    """Exact largest/smallest eigenvalue quotient and the displayed upper bound."""

    exact: float
    paper_bound: float | None


def eval_energy(model: EnergyModel, z) -> np.ndarray | float:
    """Evaluate ``E(z) = Psi(z) + W(z)``."""
    out = model.psi(z) + model.w(z)
    return float(out) if np.ndim(out) == 0 else out


def grad_energy(model: EnergyModel, z) -> np.ndarray:
    """Gradient ``grad Psi(z) + grad W(z)``; raises ``ZeroGradientPoint`` at 0."""
    return model.grad_psi(z) + model.grad_w(z)


def hessian_energy(model: EnergyModel, z) -> np.ndarray:
    """Hessian of E at ``z != 0``, shape ``(..., n, n)``."""
    return model.hess_psi(z) + model.hess_w(z)


def hessian_eigenvalues(model: EnergyModel, z) -> HessianSpectrum:
    """Spectrum of the Hessian of E at a single point ``z != 0``.

    For the standard family the Hessian has the radial eigenvalue
    ``(p-1)|z|**(p-2)`` along ``z`` and the tangential eigenvalue
    ``b/|z| + |z|**(p-2)`` with multiplicity ``n - 1``.
    """
    z = np.asarray(z, dtype=float)
    n = z.shape[-1]
    if model.is_standard:
        r = float(_nonzero_norm(model, z))
        radial = (model.p - 1) * r ** (model.p - 2)
        tangential = model.b / r + r ** (model.p - 2)
        eig = np.sort(np.array([radial] + [tangential] * (n - 1)))
        return HessianSpectrum(radial, tangential, n - 1, eig)
    eig = np.linalg.eigvalsh(hessian_energy(model, z))
    return HessianSpectrum(None, None, n - 1, eig)


def ellipticity_ratio(model: EnergyModel, z) -> EllipticityRatio:
    """Ratio of extreme Hessian eigenvalues at ``z``.

    ``paper_bound`` is ``(max(p-1, 1) + b|z|**(1-p)) / min(p-1, 1)``, which
    dominates the exact ratio for the standard family and coincides with it
    at ``p = 2``. It is not defined for the generalized family.
    """
    spec = hessian_eigenvalues(model, z)
    exact = float(spec.eigenvalues[-1] / spec.eigenvalues[0])
    if not model.is_standard:
        return EllipticityRatio(exact, None)
    p, b = model.p, model.b
    r = float(np.linalg.norm(z))
    bound = (max(p - 1, 1.0) + b * r ** (1 - p)) / min(p - 1, 1.0)
    return EllipticityRatio(exact, bound)


def lambda_Lambda_bounds(model: EnergyModel, mu0: float, M0: float) -> EllipticityBounds:
    """Ellipticity constants of the Hessian of E for ``mu0 <= |z| <= M0``.

    Standard family::

        lam = min_t min(1, p-1) t**(p-2)
        Lam = max_t (b/t + max(1, p-1) t**(p-2))

    Both expressions are extremal at the window endpoints (the only critical
    point of the second one is a minimum). The generalized family uses the
    same expressions with ``t`` replaced by the A-norm range and the spectrum
    of ``A`` folded in, which gives valid, possibly loose, bounds.
    """
    if not (mu0 > 0 and M0 >= mu0 and np.isfinite(M0)):
        raise InvalidRange(f"need 0 < mu0 <= M0, got mu0={mu0}, M0={M0}")
    p, b = model.p, model.b
    lo, hi = min(1.0, p - 1), max(1.0, p - 1)
    t = np.array([mu0, M0], dtype=float)
    if model.is_standard:
        lam = float(np.min(lo * t ** (p - 2)))
        Lam = float(np.max(b / t + hi * t ** (p - 2)))
    else:
        amin, amax = model._eig_range
        s = np.concatenate([np.sqrt(amin) * t, np.sqrt(amax) * t])
        lam = float(lo * amin * np.min(s ** (p - 2)))
        s_lo, s_hi = np.sqrt(amin) * t, np.sqrt(amax) * t
        w_part = hi * amax * np.maximum(s_lo ** (p - 2), s_hi ** (p - 2))
        Lam = float(np.max(b * amax / s_lo + w_part))
    return EllipticityBounds(float(mu0), float(M0), lam, Lam)


def pucci_minus(M, bounds: EllipticityBounds) -> np.ndarray | float:
    """Minimal Pucci operator ``lam * sum(pos. eigenvalues) + Lam * sum(neg. eigenvalues)``.

    Accepts a single symmetric matrix or a stack of shape ``(..., n, n)``.
    """
    M = np.asarray(M, dtype=float)
    scale = max(1.0, float(np.abs(M).max(initial=0.0)))
    if not np.allclose(M, np.swapaxes(M, -1, -2), rtol=0, atol=1e-12 * scale):
        raise NotSymmetric("Pucci operator needs a symmetric matrix")
    eig = np.linalg.eigvalsh(0.5 * (M + np.swapaxes(M, -1, -2)))
    out = bounds.lam * np.where(eig > 0, eig, 0).sum(-1) + bounds.Lam * np.where(
        eig < 0, eig, 0
    ).sum(-1)
    return float(out) if np.ndim(out) == 0 else out


def support_function(model: EnergyModel, zeta) -> np.ndarray | float:
    """Support function ``sup{<zeta, z> : Psi(z) <= 1}``.

    Equals ``|zeta| / b`` for the standard family and
    ``sqrt(zeta^T A^{-1} zeta) / b`` for the generalized one.
    """
    zeta = np.asarray(zeta, dtype=float)
    if model.is_standard:
        out = np.linalg.norm(zeta, axis=-1) / model.b
    else:
        q = np.sum(zeta * (zeta @ model._inverse), axis=-1)
        out = np.sqrt(np.maximum(q, 0.0)) / model.b
    return float(out) if np.ndim(out) == 0 else out


def subdifferential_membership(model: EnergyModel, z, zeta, tol: float = 0.0) -> bool:
    """Test ``zeta in dPsi(z)``: unit support value and the Euler equality."""
    if tol < 0:
        raise ValueError("tol must be nonnegative")
    z = np.asarray(z, dtype=float)
    zeta = np.asarray(zeta, dtype=float)
    if support_function(model, zeta) > 1 + tol:
        return False
    gap = abs(float(model.psi(z)) - float(z @ zeta))
    return gap <= tol * (1 + float(np.linalg.norm(z)))


def monotonicity_gap(model: EnergyModel, z1, z2) -> float:
    """``<A(z2) - A(z1), z2 - z1>`` for the monotone map ``A = grad W``."""
    z1 = np.asarray(z1, dtype=float)
    z2 = np.asarray(z2, dtype=float)
    return float((model.grad_w(z2) - model.grad_w(z1)) @ (z2 - z1))
