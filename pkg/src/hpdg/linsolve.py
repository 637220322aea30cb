"""Block-Jacobi preconditioned CG and BiCGStab."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

BREAKDOWN_EPS = 1e-300
MAX_RESTARTS = 20
SOLVE_METHODS = ("krylov", "direct", "auto")
AUTO_STALL = 400


class BreakdownError(ArithmeticError):
    """A Krylov recurrence divided by a vanishing inner product."""


@dataclass(frozen=True)
class SolveReport:
    iterations: int
    residual: float
    method: str
    converged: bool
    floor: float = 0.0


class BlockJacobi:
    """Inverse of the diagonal blocks of ``A`` with uniform block size."""

    def __init__(self, A, block_size: int):
        n = A.shape[0]
        if n % block_size:
            raise ValueError(f"matrix size {n} is not a multiple of block size {block_size}")
        nb = n // block_size
        C = sp.coo_matrix(A)
        keep = C.row // block_size == C.col // block_size
        blocks = np.zeros((nb, block_size, block_size))
        np.add.at(blocks, (C.row[keep] // block_size, C.row[keep] % block_size, C.col[keep] % block_size),
                  C.data[keep])
        self.inv = np.linalg.inv(blocks)
        self.block_size = block_size

    def __call__(self, r):
        bs = self.block_size
        return np.einsum("bij,bj->bi", self.inv, r.reshape(-1, bs)).reshape(-1)


def _identity(r):
    return r.copy()


def default_max_iter(n: int) -> int:
    return int(20 * math.sqrt(n)) + 2000


def residual_floor(A, x, b) -> float:
    """Rounding floor of ``||b - A x|| / ||b||`` evaluated in double precision.

    Uses the standard bound ``k eps || |A| |x| + |b| ||`` with ``k`` the
    largest number of stored entries in a row.  A computed residual below
    this level carries no information.
    """
    nb = np.linalg.norm(b)
    if nb == 0.0:
        return 0.0
    k = math.sqrt(np.diff(A.indptr).max() + 1) if A.nnz else 1.0
    absA = abs(A)
    return float(k * np.finfo(float).eps * np.linalg.norm(absA @ np.abs(x) + np.abs(b)) / nb)


class _Krylov:
    """Shared stopping logic: recursive residual first, then the true one."""

    def __init__(self, A, b, M, tol, max_iter, stall=None):
        self.A, self.b, self.M, self.tol, self.max_iter = A, b, M, tol, max_iter
        self.nb = np.linalg.norm(b)
        self.best = (np.zeros_like(b), np.inf)
        self.stall = stall
        self._mark = (0, np.inf)

    def stalled(self, it, res) -> bool:
        """No halving of the recursive residual within ``stall`` iterations."""
        if self.stall is None:
            return False
        if res < 0.5 * self._mark[1]:
            self._mark = (it, res)
        return it - self._mark[0] > self.stall

    def target(self, x) -> float:
        return max(self.tol, residual_floor(self.A, x, self.b))

    def true_residual(self, x):
        r = self.b - self.A @ x
        res = np.linalg.norm(r) / self.nb
        if res < self.best[1]:
            self.best = (x.copy(), res)
        return r, res


def _cg(A, b, M, tol, max_iter, stall=None):
    k = _Krylov(A, b, M, tol, max_iter, stall)
    x = np.zeros_like(b)
    if k.nb == 0.0:
        return x, 0
    r = b.copy()
    target = tol
    z = M(r)
    p = z.copy()
    rz = r @ z
    for it in range(1, max_iter + 1):
        Ap = A @ p
        pAp = p @ Ap
        if abs(pAp) < BREAKDOWN_EPS:
            raise BreakdownError(f"CG breakdown at iteration {it}: p.Ap = {pAp:g}")
        a = rz / pAp
        x += a * p
        r -= a * Ap
        rel = np.linalg.norm(r) / k.nb
        if k.stalled(it, rel):
            break
        if rel <= target:
            r, res = k.true_residual(x)
            target = k.target(x)
            if res <= target:
                return x, it
            # restart from the true residual
            z = M(r)
            p = z.copy()
            rz = r @ z
            continue
        z = M(r)
        rz_new = r @ z
        p = z + (rz_new / rz) * p
        rz = rz_new
    k.true_residual(x)
    return k.best[0], it


def _bicgstab(A, b, M, tol, max_iter, stall=None):
    k = _Krylov(A, b, M, tol, max_iter, stall)
    x = np.zeros_like(b)
    if k.nb == 0.0:
        return x, 0
    r = b.copy()
    target = tol

    def fresh(r):
        return r.copy(), 1.0, 1.0, 1.0, np.zeros_like(b), np.zeros_like(b)

    r_hat, rho, alpha, omega, v, p = fresh(r)
    restarts = 0
    for it in range(1, max_iter + 1):
        rho_new = r_hat @ r
        if abs(rho_new) < BREAKDOWN_EPS * max(1.0, np.linalg.norm(r) * np.linalg.norm(r_hat)) or rho_new == 0.0:
            # a shadow residual orthogonal to r: restart with r_hat = r
            restarts += 1
            if restarts > MAX_RESTARTS:
                raise BreakdownError(f"BiCGStab breakdown at iteration {it}: rho = {rho_new:g}")
            r_hat, rho, alpha, omega, v, p = fresh(r)
            rho_new = r_hat @ r
        beta = (rho_new / rho) * (alpha / omega)
        p = r + beta * (p - omega * v)
        p_hat = M(p)
        v = A @ p_hat
        rv = r_hat @ v
        if abs(rv) < BREAKDOWN_EPS:
            raise BreakdownError(f"BiCGStab breakdown at iteration {it}: r_hat.v = {rv:g}")
        alpha = rho_new / rv
        s = r - alpha * v
        if np.linalg.norm(s) / k.nb <= target:
            x += alpha * p_hat
            r = s
        else:
            s_hat = M(s)
            t = A @ s_hat
            tt = t @ t
            if tt < BREAKDOWN_EPS:
                raise BreakdownError(f"BiCGStab breakdown at iteration {it}: t.t = {tt:g}")
            omega = (t @ s) / tt
            if abs(omega) < BREAKDOWN_EPS:
                raise BreakdownError(f"BiCGStab breakdown at iteration {it}: omega = {omega:g}")
            x += alpha * p_hat + omega * s_hat
            r = s - omega * t
        rho = rho_new
        rel = np.linalg.norm(r) / k.nb
        if k.stalled(it, rel):
            break
        if rel <= target:
            r, res = k.true_residual(x)
            target = k.target(x)
            if res <= target:
                return x, it
            r_hat, rho, alpha, omega, v, p = fresh(r)
    k.true_residual(x)
    return k.best[0], it


def _direct(A, b):
    lu = spla.splu(A.tocsc())
    x = lu.solve(b)
    # one step of refinement recovers the last digits lost to pivoting
    return x + lu.solve(b - A @ x)


def solve(system, symmetric_hint: bool = False, tol: float = 1e-10, max_iter: int | None = None,
          precondition: bool = True, method: str = "krylov"):
    """Solve ``A x = b``; returns ``(x, SolveReport)``.

    ``system`` is a :class:`~hpdg.assembly.SparseSystem` or a ``(A, b)``
    pair.  With ``method="krylov"`` CG is used under ``symmetric_hint``
    and BiCGStab otherwise, both block-Jacobi preconditioned; a
    non-converged run returns the best iterate with ``converged=False``.
    ``method="direct"`` factorises with SuperLU, and ``"auto"`` tries
    the Krylov path first and falls back to the factorisation when it
    fails, breaks down, or stops making progress for ``AUTO_STALL``
    iterations.  ``iterations`` counts Krylov steps taken, including
    abandoned ones.

    Convergence means ``||b - A x|| / ||b|| <= max(tol, floor)`` where
    ``floor`` is :func:`residual_floor`, the level below which the
    residual itself is rounding noise.
    """
    if method not in SOLVE_METHODS:
        raise ValueError(f"method must be one of {SOLVE_METHODS}, got {method!r}")
    if isinstance(system, tuple):
        A, b = system
        block = 1
    else:
        A, b, block = system.matrix, system.rhs, system.block_size
    A = sp.csr_matrix(A)
    b = np.asarray(b, dtype=float)
    n = A.shape[0]
    if A.shape != (n, n) or b.shape != (n,):
        raise ValueError(f"incompatible system: A {A.shape}, b {b.shape}")
    if not 0.0 < tol < 1.0:
        raise ValueError(f"tol must lie in (0, 1), got {tol}")
    if symmetric_hint:
        asym = abs(A - A.T).max() if A.nnz else 0.0
        if asym > 1e-12 * max(abs(A).max(), 1e-300):
            raise ValueError("symmetric_hint given for a nonsymmetric matrix")
    max_iter = default_max_iter(n) if max_iter is None else max_iter
    nb = np.linalg.norm(b)

    def report(x, it, tag):
        res = float(np.linalg.norm(b - A @ x) / nb) if nb else 0.0
        floor = residual_floor(A, x, b)
        return SolveReport(iterations=it, residual=res, method=tag,
                           converged=res <= max(tol, floor), floor=floor)

    it = 0
    if method in ("krylov", "auto"):
        M = BlockJacobi(A, block) if precondition else _identity
        tag = "cg" if symmetric_hint else "bicgstab"
        try:
            stall = AUTO_STALL if method == "auto" else None
            if symmetric_hint:
                x, it = _cg(A, b, M, tol, max_iter, stall)
            else:
                x, it = _bicgstab(A, b, M, tol, max_iter, stall)
        except BreakdownError:
            if method == "krylov":
                raise
        else:
            rep = report(x, it, tag)
            if rep.converged or method == "krylov":
                return x, rep
    x = _direct(A, b) if nb else np.zeros_like(b)
    return x, report(x, it, "lu")
