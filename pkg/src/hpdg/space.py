"""Broken vector P_r space on a mesh: quadrature-point tables and field traces.

Degrees of freedom are numbered element-major, then local node, then
displacement component: ``dof = (element * n_local + node) * 2 + comp``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .basis import edge_rule, reference_basis, trace_points, triangle_rule
from .mesh import Mesh


def vector_values(phi):
    """Expand scalar basis values ``(..., nl)`` to ``(..., 2 nl, 2)``.

    Local vector function ``2 i + c`` is ``phi_i`` times unit vector ``e_c``.
    """
    nl = phi.shape[-1]
    out = np.zeros(phi.shape + (2, 2))
    out[..., 0, 0] = phi
    out[..., 1, 1] = phi
    return out.reshape(phi.shape[:-1] + (2 * nl, 2))


def vector_grads(grads):
    """Expand scalar gradients ``(..., nl, 2)`` to displacement gradients
    ``(..., 2 nl, 2, 2)`` indexed ``[..., a, component, direction]``."""
    nl = grads.shape[-2]
    out = np.zeros(grads.shape[:-2] + (nl, 2, 2, 2))
    out[..., 0, 0, :] = grads
    out[..., 1, 1, :] = grads
    return out.reshape(grads.shape[:-2] + (2 * nl, 2, 2))


@dataclass(eq=False)
class DgSpace:
    """Quadrature tables for volume and edge integrals of a broken space.

    ``vol_order`` and ``edge_order`` default to ``2r + 2`` and ``2r + 3``.
    """

    mesh: Mesh
    degree: int
    vol_order: int | None = None
    edge_order: int | None = None

    def __post_init__(self):
        r = self.degree
        self.basis = reference_basis(r)
        self.vol_order = self.vol_order or 2 * r + 2
        self.edge_order = self.edge_order or 2 * r + 3
        self.vol_rule = triangle_rule(self.vol_order)
        self.edge_rule_ = edge_rule(self.edge_order)

    @property
    def n_local(self) -> int:
        return self.basis.n_local

    @property
    def n_dof(self) -> int:
        return 2 * self.mesh.n_elements * self.n_local

    def split(self, coeffs) -> np.ndarray:
        coeffs = np.asarray(coeffs, dtype=float)
        if coeffs.shape != (self.n_dof,):
            raise ValueError(f"coefficient vector has shape {coeffs.shape}, expected ({self.n_dof},)")
        return coeffs.reshape(self.mesh.n_elements, self.n_local, 2)

    # volume tables

    @cached_property
    def _affine(self):
        B, x0 = self.mesh.jacobians()
        det = np.linalg.det(B)
        return B, x0, det, np.linalg.inv(B)

    @cached_property
    def vol_phi(self) -> np.ndarray:
        return self.basis.values(self.vol_rule.points)

    @cached_property
    def vol_grads(self) -> np.ndarray:
        """Physical basis gradients, ``(n_el, nq, nl, 2)``."""
        ref = self.basis.grads(self.vol_rule.points)
        Binv = self._affine[3]
        return np.einsum("qik,ekd->eqid", ref, Binv)

    @cached_property
    def vol_points(self) -> np.ndarray:
        B, x0 = self._affine[:2]
        return np.einsum("edk,qk->eqd", B, self.vol_rule.points) + x0[:, None, :]

    @cached_property
    def vol_weights(self) -> np.ndarray:
        """Quadrature weights times ``|det B|``, ``(n_el, nq)``."""
        return self.vol_rule.weights[None, :] * self._affine[2][:, None]

    # edge tables

    @cached_property
    def edge_points(self) -> np.ndarray:
        m = self.mesh
        a = m.vertices[m.edge_vertices[:, 0]]
        b = m.vertices[m.edge_vertices[:, 1]]
        t = self.edge_rule_.points
        return a[:, None, :] + t[None, :, None] * (b - a)[:, None, :]

    @cached_property
    def edge_weights(self) -> np.ndarray:
        return self.edge_rule_.weights[None, :] * self.mesh.edge_length[:, None]

    @cached_property
    def _trace_tables(self):
        # [local edge, reversed] -> reference trace points
        phi = np.empty((3, 2, len(self.edge_rule_), self.n_local))
        grad = np.empty((3, 2, len(self.edge_rule_), self.n_local, 2))
        for k in range(3):
            for rev in (0, 1):
                pts = trace_points(k, self.edge_rule_, reverse=bool(rev))
                phi[k, rev] = self.basis.values(pts)
                grad[k, rev] = self.basis.grads(pts)
        return phi, grad

    def _side(self, side: int):
        m = self.mesh
        elem = m.edge_elements[:, side]
        loc = m.edge_local[:, side]
        valid = elem >= 0
        elem_c = np.where(valid, elem, 0)
        loc_c = np.where(valid, loc, 0)
        phi_t, grad_t = self._trace_tables
        phi = phi_t[loc_c, side]
        ref = grad_t[loc_c, side]
        Binv = self._affine[3][elem_c]
        grads = np.einsum("eqik,ekd->eqid", ref, Binv)
        phi[~valid] = 0.0
        grads[~valid] = 0.0
        return elem_c, valid, phi, grads

    @cached_property
    def plus(self):
        """``(element, valid, phi, grads)`` traces from the plus side."""
        return self._side(0)

    @cached_property
    def minus(self):
        """Minus-side traces; rows for boundary edges are zero."""
        return self._side(1)

    # field evaluation

    def volume_values(self, coeffs) -> np.ndarray:
        return np.einsum("qi,eic->eqc", self.vol_phi, self.split(coeffs))

    def volume_grads(self, coeffs) -> np.ndarray:
        """Displacement gradients ``[el, q, component, direction]``."""
        return np.einsum("eqid,eic->eqcd", self.vol_grads, self.split(coeffs))

    def trace(self, coeffs, side: int):
        """Values ``(n_edges, nq, 2)`` and gradients ``(n_edges, nq, 2, 2)``."""
        U = self.split(coeffs)
        elem, valid, phi, grads = self.plus if side == 0 else self.minus
        Ue = U[elem]
        vals = np.einsum("eqi,eic->eqc", phi, Ue)
        g = np.einsum("eqid,eic->eqcd", grads, Ue)
        return vals, g

    def interpolate(self, func) -> np.ndarray:
        """Nodal interpolant of ``func(x, y) -> (..., 2)``."""
        B, x0 = self._affine[:2]
        pts = np.einsum("edk,ik->eid", B, self.basis.nodes) + x0[:, None, :]
        vals = np.asarray(func(pts[..., 0], pts[..., 1]), dtype=float)
        return vals.reshape(-1)
