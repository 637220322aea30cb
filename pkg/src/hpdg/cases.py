"""Manufactured solutions on rectangles."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .assembly import ProblemData
from .material import Material, stress_from_grad
from .mesh import DEFAULT_DOMAIN

PAPER_MATERIAL = Material(lame_lambda=0.03, lame_mu=0.035)


def _stack(a, b):
    return np.stack(np.broadcast_arrays(a, b), axis=-1)


def rectangle_normal(domain, x, y, tol=1e-12):
    """Outward unit normal of the rectangle at boundary points."""
    x0, x1, y0, y1 = domain
    x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
    nx = np.where(np.abs(x - x1) < tol, 1.0, np.where(np.abs(x - x0) < tol, -1.0, 0.0))
    ny = np.where(np.abs(y - y1) < tol, 1.0, np.where(np.abs(y - y0) < tol, -1.0, 0.0))
    n = np.stack([nx, ny], axis=-1)
    return n / np.maximum(np.linalg.norm(n, axis=-1, keepdims=True), 1e-300)


@dataclass(frozen=True)
class MmsCase:
    """Exact displacement with its gradient, forcing and boundary data.

    ``grad(x, y)`` is indexed ``[..., component, direction]``.
    ``dirichlet(x, y)`` selects the Dirichlet part of the boundary; the
    remainder is Neumann with traction ``sigma(u) n``.
    """

    name: str
    material: Material
    u: Callable
    grad: Callable
    f: Callable
    dirichlet: Callable = lambda x, y: True
    domain: tuple = DEFAULT_DOMAIN

    def g_D(self, x, y):
        return self.u(x, y)

    def g_N(self, x, y):
        sig = stress_from_grad(self.material, self.grad(x, y))
        return np.einsum("...ij,...j->...i", sig, rectangle_normal(self.domain, x, y))

    def problem(self) -> ProblemData:
        return ProblemData(material=self.material, f=self.f, g_D=self.g_D, g_N=self.g_N)


def builtin_case_paper(material: Material = PAPER_MATERIAL) -> MmsCase:
    """Both displacement components equal cos(pi x / 2) cos(pi y / 2) on (-1, 1)^2.

    The solution vanishes on the whole boundary, which is all Dirichlet.
    """
    lam, mu = material.lame_lambda, material.lame_mu
    k = np.pi / 2

    def u(x, y):
        z = np.cos(k * x) * np.cos(k * y)
        return _stack(z, z)

    def grad(x, y):
        gx = -k * np.sin(k * x) * np.cos(k * y)
        gy = -k * np.cos(k * x) * np.sin(k * y)
        row = np.stack(np.broadcast_arrays(gx, gy), axis=-1)
        return np.stack([row, row], axis=-2)

    def f(x, y):
        z1 = np.cos(k * x + k * y)
        z2 = np.cos(k * x) * np.cos(k * y)
        c = lam * k**2 * z1 + 2 * mu * (k**2 * z2 + 0.5 * k**2 * z1)
        return _stack(c, c)

    return MmsCase("paper", material, u, grad, f)


def builtin_case_linear(material: Material = PAPER_MATERIAL) -> MmsCase:
    """``u = (x, y)``: zero forcing, reproduced exactly by every degree."""

    def u(x, y):
        return _stack(np.asarray(x, float), np.asarray(y, float))

    def grad(x, y):
        shape = np.broadcast(np.asarray(x), np.asarray(y)).shape
        return np.broadcast_to(np.eye(2), shape + (2, 2)).copy()

    def f(x, y):
        return np.zeros(np.broadcast(np.asarray(x), np.asarray(y)).shape + (2,))

    return MmsCase("linear", material, u, grad, f)


BUILTIN_CASES = {"paper": builtin_case_paper, "linear": builtin_case_linear}


def fd_body_force(case: MmsCase, x: float, y: float, step: float = 1e-5) -> np.ndarray:
    """``-div sigma(u)`` at one point from central differences of ``case.u``.

    Independent of ``case.grad`` and ``case.f``; used to check them.
    """
    lam, mu = case.material.lame_lambda, case.material.lame_mu

    def u(px, py):
        return np.asarray(case.u(np.float64(px), np.float64(py)), dtype=float)

    def d2(i, j):
        # second derivative of u along axes i, j
        e = np.eye(2) * step
        p = np.array([x, y])
        if i == j:
            return (u(*(p + e[i])) - 2 * u(*p) + u(*(p - e[i]))) / step**2
        return (u(*(p + e[i] + e[j])) - u(*(p + e[i] - e[j]))
                - u(*(p - e[i] + e[j])) + u(*(p - e[i] - e[j]))) / (4 * step**2)

    H = [[d2(i, j) for j in range(2)] for i in range(2)]  # H[i][j][c] = d_i d_j u_c
    out = np.zeros(2)
    for i in range(2):
        grad_div = H[i][0][0] + H[i][1][1]
        lap = H[0][0][i] + H[1][1][i]
        out[i] = -((lam + mu) * grad_div + mu * lap)
    return out
