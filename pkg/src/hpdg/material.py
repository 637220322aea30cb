"""Isotropic linear elasticity: strain, stress and the energy pairing.

All functions broadcast over leading axes, so a stack of ``(..., 2, 2)``
tensors is handled in one call.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

SYM_TOL = 1e-12


@dataclass(frozen=True)
class Material:
    lame_lambda: float
    lame_mu: float

    def __post_init__(self):
        if not self.lame_mu > 0:
            raise ValueError(f"lame_mu must be positive, got {self.lame_mu}")
        if not self.lame_lambda >= 0:
            raise ValueError(f"lame_lambda must be non-negative, got {self.lame_lambda}")


def strain(grad_u):
    g = np.asarray(grad_u, dtype=float)
    return 0.5 * (g + np.swapaxes(g, -1, -2))


def _stress(m: Material, eps):
    tr = eps[..., 0, 0] + eps[..., 1, 1]
    return m.lame_lambda * tr[..., None, None] * np.eye(2) + 2.0 * m.lame_mu * eps


def stress(m: Material, eps):
    """``lambda tr(eps) I + 2 mu eps`` for symmetric ``eps``."""
    eps = np.asarray(eps, dtype=float)
    skew = eps - np.swapaxes(eps, -1, -2)
    scale = max(1.0, float(np.max(np.abs(eps), initial=0.0)))
    if np.max(np.abs(skew), initial=0.0) > SYM_TOL * scale:
        raise ValueError("stress() requires a symmetric strain tensor")
    return _stress(m, eps)


def stress_from_grad(m: Material, grad_u):
    """Stress of a displacement gradient; skips the symmetry check."""
    return _stress(m, strain(grad_u))


def energy_pairing(m: Material, eps_a, eps_b):
    """``stress(m, eps_a) : eps_b``."""
    return np.sum(stress(m, eps_a) * np.asarray(eps_b, dtype=float), axis=(-2, -1))
