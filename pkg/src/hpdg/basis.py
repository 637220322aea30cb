"""Reference-triangle Lagrange bases and quadrature rules.

The reference triangle has vertices (0, 0), (1, 0), (0, 1).  Its local
edges are numbered ``k = 0, 1, 2`` running from vertex ``k`` to vertex
``(k + 1) % 3``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
import math

import numpy as np
from scipy.special import roots_jacobi

MAX_DEGREE = 4
MAX_ORDER = 40

REF_VERTICES = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])


class CapabilityError(ValueError):
    """Requested degree or quadrature order is not supported."""


def _lattice_nodes(r: int) -> np.ndarray:
    """Equispaced nodes, ordered vertices, edge interiors, then interior."""
    nodes = [tuple(v) for v in REF_VERTICES]
    for k in range(3):
        a, b = REF_VERTICES[k], REF_VERTICES[(k + 1) % 3]
        for m in range(1, r):
            nodes.append(tuple(a + (b - a) * m / r))
    for j in range(1, r):
        for i in range(1, r - j):
            nodes.append((i / r, j / r))
    return np.array(nodes, dtype=float)


def _monomial_exponents(r: int) -> list[tuple[int, int]]:
    return [(a, t - a) for t in range(r + 1) for a in range(t, -1, -1)]


@dataclass(frozen=True)
class ReferenceBasis:
    """Nodal Lagrange basis of degree ``r`` on the reference triangle."""

    degree: int
    nodes: np.ndarray = field(init=False, repr=False)
    _coeffs: np.ndarray = field(init=False, repr=False)
    _exps: tuple = field(init=False, repr=False)

    def __post_init__(self):
        r = self.degree
        if not 1 <= r <= MAX_DEGREE:
            raise CapabilityError(f"degree {r} not in 1..{MAX_DEGREE}")
        nodes = _lattice_nodes(r)
        exps = _monomial_exponents(r)
        vdm = np.array([[x**a * y**b for a, b in exps] for x, y in nodes])
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "_exps", tuple(exps))
        # column j holds the monomial coefficients of basis function j
        object.__setattr__(self, "_coeffs", np.linalg.inv(vdm))

    @property
    def n_local(self) -> int:
        return (self.degree + 1) * (self.degree + 2) // 2

    def _monomials(self, pts):
        x, y = pts[..., 0], pts[..., 1]
        return np.stack([x**a * y**b for a, b in self._exps], axis=-1)

    def _monomial_grads(self, pts):
        x, y = pts[..., 0], pts[..., 1]
        dx, dy = [], []
        for a, b in self._exps:
            dx.append(a * x ** max(a - 1, 0) * y**b if a else np.zeros_like(x))
            dy.append(b * x**a * y ** max(b - 1, 0) if b else np.zeros_like(y))
        return np.stack([np.stack(dx, -1), np.stack(dy, -1)], axis=-1)

    def values(self, points) -> np.ndarray:
        """Basis values, shape ``(..., n_local)`` for points ``(..., 2)``."""
        pts = np.asarray(points, dtype=float)
        return self._monomials(pts) @ self._coeffs

    def grads(self, points) -> np.ndarray:
        """Reference gradients, shape ``(..., n_local, 2)``."""
        pts = np.asarray(points, dtype=float)
        g = self._monomial_grads(pts)  # (..., n_mono, 2)
        return np.einsum("...md,mi->...id", g, self._coeffs)

    def interpolate(self, func) -> np.ndarray:
        """Nodal values of ``func`` evaluated at the reference nodes."""
        return np.asarray(func(self.nodes[:, 0], self.nodes[:, 1]), dtype=float)


@lru_cache(maxsize=None)
def reference_basis(degree: int) -> ReferenceBasis:
    return ReferenceBasis(degree)


def eval_basis(basis: ReferenceBasis, point) -> np.ndarray:
    return basis.values(point)


def eval_grad(basis: ReferenceBasis, point) -> np.ndarray:
    return basis.grads(point)


@dataclass(frozen=True)
class QuadratureRule:
    points: np.ndarray
    weights: np.ndarray
    order: int

    def __len__(self):
        return len(self.weights)


def _check_order(order: int):
    if not 1 <= order <= MAX_ORDER:
        raise CapabilityError(f"quadrature order {order} not in 1..{MAX_ORDER}")


@lru_cache(maxsize=None)
def edge_rule(order: int) -> QuadratureRule:
    """Gauss-Legendre rule on the unit interval [0, 1]."""
    _check_order(order)
    n = math.ceil((order + 1) / 2)
    t, w = np.polynomial.legendre.leggauss(n)
    return QuadratureRule((t + 1.0) / 2.0, w / 2.0, order)


@lru_cache(maxsize=None)
def triangle_rule(order: int) -> QuadratureRule:
    """Collapsed Gauss-Jacobi rule on the reference triangle.

    Order 1 is the one-point centroid rule.  Higher orders use the Duffy
    map ``(s, t) -> (s (1 - t), t)``; the ``(1 - t)`` Jacobian is carried by
    a Gauss-Jacobi(1, 0) rule in ``t``.  All weights are positive.
    """
    _check_order(order)
    if order == 1:
        return QuadratureRule(np.array([[1 / 3, 1 / 3]]), np.array([0.5]), 1)
    n = math.ceil((order + 1) / 2)
    s, ws = np.polynomial.legendre.leggauss(n)
    s, ws = (s + 1.0) / 2.0, ws / 2.0
    t, wt = roots_jacobi(n, 1.0, 0.0)
    t, wt = (t + 1.0) / 2.0, wt / 4.0
    S, T = np.meshgrid(s, t, indexing="ij")
    W = np.outer(ws, wt)
    pts = np.column_stack([(S * (1.0 - T)).ravel(), T.ravel()])
    return QuadratureRule(pts, W.ravel(), order)


def trace_points(edge: int, rule: QuadratureRule, reverse: bool = False) -> np.ndarray:
    """Map edge-rule abscissae onto local edge ``edge`` of the reference triangle.

    With ``reverse`` the edge is traversed from its end vertex back to its
    start, which is how the neighbour across an edge sees the same points.
    """
    if edge not in (0, 1, 2):
        raise ValueError(f"edge index must be 0, 1 or 2, got {edge}")
    a = REF_VERTICES[edge]
    b = REF_VERTICES[(edge + 1) % 3]
    t = 1.0 - rule.points if reverse else rule.points
    return a[None, :] + t[:, None] * (b - a)[None, :]
