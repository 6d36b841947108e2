"""Variational solver and certificates for the (1, p)-Laplacian type operator -b*div(Du/|Du|) - div(|Du|^{p-2} Du)."""

from .energy import EnergyModel, EllipticityBounds

__version__ = "0.1.0"

__all__ = ["EnergyModel", "EllipticityBounds", "__version__"]
