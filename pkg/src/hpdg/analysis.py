"""Error norms and observed convergence rates."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .assembly import DgConfig, _stress_of, lame_arrays
from .mesh import DIRICHLET, INTERIOR, Mesh
from .space import DgSpace


class UndefinedRateError(ValueError):
    pass


def error_space(mesh: Mesh, degree: int) -> DgSpace:
    """Space with the raised quadrature order ``2r + 4`` used for errors."""
    order = 2 * degree + 4
    return DgSpace(mesh, degree, vol_order=order, edge_order=order)


@dataclass(frozen=True)
class ErrorReport:
    level: int
    h: float
    n_dof: int
    l2_error: float
    energy_error: float
    volume_part: float
    jump_part: float


@dataclass
class ConvergenceTable:
    rows: list[ErrorReport]
    degree: int = 1
    regularity: float = np.inf
    l2_rates: np.ndarray = field(init=False)
    energy_rates: np.ndarray = field(init=False)

    def __post_init__(self):
        if len(self.rows) >= 2:
            self.l2_rates = rates([r.l2_error for r in self.rows])
            self.energy_rates = rates([r.energy_error for r in self.rows])
        else:
            self.l2_rates = np.zeros(0)
            self.energy_rates = np.zeros(0)

    @property
    def approximation_exponent(self) -> float:
        """``min(r + 1, s)`` for regularity index ``s``."""
        return min(self.degree + 1, self.regularity)

    @property
    def expected_l2_rate(self) -> float:
        return self.approximation_exponent

    @property
    def expected_energy_rate(self) -> float:
        return self.approximation_exponent - 1


def rates(errors) -> np.ndarray:
    """``log2(e_i / e_{i+1})`` for consecutive errors on halved meshes."""
    e = np.asarray(errors, dtype=float)
    if e.ndim != 1 or len(e) < 2:
        raise UndefinedRateError("need at least two error values")
    if np.any(~(e > 0)):
        raise UndefinedRateError(f"errors must be positive, got {e.tolist()}")
    return np.log2(e[:-1] / e[1:])


def l2_error(space: DgSpace, coeffs, exact: Callable) -> float:
    P = space.vol_points
    diff = np.asarray(exact(P[..., 0], P[..., 1]), dtype=float) - space.volume_values(coeffs)
    return float(np.sqrt(np.einsum("eq,eqc,eqc->", space.vol_weights, diff, diff)))


def _volume_energy(space, lam, mu, grads):
    S = _stress_of(grads, lam, mu)
    eps = 0.5 * (grads + np.swapaxes(grads, -1, -2))
    return float(np.einsum("eq,eqij,eqij->", space.vol_weights, S, eps))


def _jump_energy(space, config, jumps, edges):
    pen_b, pen_g = (p[edges] for p in config.penalties(space.mesh))
    w = space.edge_weights[edges]
    n = space.mesh.edge_normal[edges]
    nj = np.einsum("eqc,ec->eq", jumps, n)
    return float(np.einsum("eq,e,eqc,eqc->", w, pen_b, jumps, jumps)
                 + np.einsum("eq,e,eq,eq->", w, pen_g, nj, nj))


def energy_parts(space: DgSpace, config: DgConfig, material, coeffs) -> tuple[float, float]:
    """Squared volume and jump contributions to the energy norm of a field."""
    mesh = space.mesh
    lam, mu = lame_arrays(material, mesh.n_elements)
    vol = _volume_energy(space, lam, mu, space.volume_grads(coeffs))
    edges = np.flatnonzero((mesh.edge_tag == INTERIOR) | (mesh.edge_tag == DIRICHLET))
    vp, _ = space.trace(coeffs, 0)
    vm, _ = space.trace(coeffs, 1)
    jumps = (vp - vm)[edges]  # minus traces are zero on boundary edges
    return vol, _jump_energy(space, config, jumps, edges)


def energy_norm_squared(space: DgSpace, config: DgConfig, material, coeffs) -> float:
    """Broken elastic energy plus the penalty-weighted jump terms.

    The penalty weights follow ``config`` (``h**d`` denominators and the
    chosen ``h`` mode), so superpenalised runs get their modified norm.
    """
    vol, jump = energy_parts(space, config, material, coeffs)
    return vol + jump


def energy_error(space: DgSpace, config: DgConfig, material, coeffs, exact: Callable,
                 exact_grad: Callable) -> tuple[float, float, float]:
    """Energy norm of ``u - u_h`` as ``(total, volume_part, jump_part)``.

    ``exact_grad(x, y)`` returns ``[..., component, direction]``.  The
    exact solution is continuous, so interior jumps are those of ``u_h``
    and only Dirichlet traces see ``u`` itself.
    """
    mesh = space.mesh
    lam, mu = lame_arrays(material, mesh.n_elements)
    P = space.vol_points
    G = np.asarray(exact_grad(P[..., 0], P[..., 1]), dtype=float) - space.volume_grads(coeffs)
    vol = _volume_energy(space, lam, mu, G)

    tag = mesh.edge_tag
    edges = np.flatnonzero((tag == INTERIOR) | (tag == DIRICHLET))
    vp, _ = space.trace(coeffs, 0)
    vm, _ = space.trace(coeffs, 1)
    X = space.edge_points
    u = np.asarray(exact(X[..., 0], X[..., 1]), dtype=float)
    jumps = np.where((tag == INTERIOR)[:, None, None], vm - vp, u - vp)[edges]
    jump = _jump_energy(space, config, jumps, edges)
    vol_part, jump_part = np.sqrt(max(vol, 0.0)), np.sqrt(max(jump, 0.0))
    return float(np.hypot(vol_part, jump_part)), float(vol_part), float(jump_part)


def error_report(space: DgSpace, config: DgConfig, material, coeffs, exact, exact_grad,
                 level: Optional[int] = None) -> ErrorReport:
    mesh = space.mesh
    total, vol, jump = energy_error(space, config, material, coeffs, exact, exact_grad)
    return ErrorReport(
        level=mesh.level if level is None else level,
        h=mesh.h_cell,
        n_dof=space.n_dof,
        l2_error=l2_error(space, coeffs, exact),
        energy_error=total,
        volume_part=vol,
        jump_part=jump,
    )
