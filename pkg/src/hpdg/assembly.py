"""Interior penalty DG discretisation of linear elasticity.

The bilinear form, summed over elements ``K`` and over interior and
Dirichlet edges ``e``, is::

    B(w, v) = sum_K (sigma(w), eps(v))_K
              - sum_e <{sigma(w) n}, [v]>_e
              + alpha sum_e <{sigma(v) n}, [w]>_e
              + beta r^2 / h^d sum_e <[w], [v]>_e
              + gamma r^2 / h^d sum_e <[n.w], [n.v]>_e

with ``alpha = -1, 0, 1`` for the symmetric, incomplete and nonsymmetric
variants.  On boundary edges the average and the jump both reduce to
the interior trace.  Neumann edges carry no matrix terms.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Union

import numpy as np
import scipy.sparse as sp

from .material import Material
from .mesh import DIRICHLET, INTERIOR, NEUMANN, Mesh, single_triangle_mesh, triangle_geometry
from .space import DgSpace, vector_grads, vector_values

METHOD_ALPHA = {"sipg": -1, "iipg": 0, "nipg": 1}
PENALTY_H_MODES = ("global", "per-edge")

VectorField = Callable[[np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class DgConfig:
    alpha: int = -1
    beta: float = 125.0
    gamma: float = 0.0
    degree: int = 1
    superpenalty_d: int = 1
    penalty_h_mode: str = "global"

    def __post_init__(self):
        if self.alpha not in (-1, 0, 1):
            raise ValueError(f"alpha must be -1, 0 or 1, got {self.alpha}")
        if not self.beta > 0:
            raise ValueError(f"beta must be positive, got {self.beta}")
        if not self.gamma >= 0:
            raise ValueError(f"gamma must be non-negative, got {self.gamma}")
        if int(self.degree) != self.degree or self.degree < 1:
            raise ValueError(f"degree must be a positive integer, got {self.degree}")
        if int(self.superpenalty_d) != self.superpenalty_d or self.superpenalty_d < 1:
            raise ValueError(f"superpenalty_d must be an integer >= 1, got {self.superpenalty_d}")
        if self.penalty_h_mode not in PENALTY_H_MODES:
            raise ValueError(f"penalty_h_mode must be one of {PENALTY_H_MODES}")

    @classmethod
    def for_method(cls, method: str, **kw) -> "DgConfig":
        return cls(alpha=METHOD_ALPHA[method], **kw)

    def penalty_h(self, mesh: Mesh) -> np.ndarray:
        """Per-edge ``h`` entering the penalty denominators."""
        if self.penalty_h_mode == "global":
            return np.full(mesh.n_edges, mesh.h_max)
        return mesh.edge_length.copy()

    def penalties(self, mesh: Mesh) -> tuple[np.ndarray, np.ndarray]:
        """Jump and normal-jump penalty weights per edge."""
        scale = self.degree**2 / self.penalty_h(mesh) ** self.superpenalty_d
        return self.beta * scale, self.gamma * scale


def _zero_field(x, y):
    return np.zeros(np.shape(x) + (2,))


@dataclass(frozen=True)
class ProblemData:
    """Body force, boundary data and material.

    Fields are called as ``f(x, y)`` on coordinate arrays and return an
    array with a trailing axis of length 2.  ``material`` is either one
    :class:`Material` or one per element.
    """

    material: Union[Material, Sequence[Material]]
    f: VectorField = _zero_field
    g_D: VectorField = _zero_field
    g_N: VectorField = _zero_field


def lame_arrays(material, n_elements: int) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(material, Material):
        return np.full(n_elements, material.lame_lambda), np.full(n_elements, material.lame_mu)
    if len(material) != n_elements:
        raise ValueError(f"got {len(material)} materials for {n_elements} elements")
    return (np.array([m.lame_lambda for m in material], dtype=float),
            np.array([m.lame_mu for m in material], dtype=float))


def _stress_of(grads, lam, mu):
    """Stress tensors of displacement gradients with per-row Lame values.

    ``grads`` has shape ``(n, ..., 2, 2)``; ``lam``/``mu`` have shape ``(n,)``.
    """
    extra = (None,) * (grads.ndim - 3)
    tr = grads[..., 0, 0] + grads[..., 1, 1]
    sym = 0.5 * (grads + np.swapaxes(grads, -1, -2))
    lam = lam[(slice(None),) + extra]
    mu = mu[(slice(None),) + extra]
    return lam[..., None, None] * tr[..., None, None] * np.eye(2) + 2.0 * mu[..., None, None] * sym


# local blocks

def volume_blocks(space: DgSpace, lam, mu) -> np.ndarray:
    """Element stiffness blocks ``(n_el, 2 nl, 2 nl)``."""
    G = vector_grads(space.vol_grads)  # (e, q, a, c, d)
    S = _stress_of(G, lam, mu)
    eps = 0.5 * (G + np.swapaxes(G, -1, -2))
    return np.einsum("eq,eqbij,eqaij->eab", space.vol_weights, S, eps)


def local_volume_matrix(xy, material: Material, degree: int) -> np.ndarray:
    """Stiffness block of a single triangle with vertex coordinates ``xy``."""
    triangle_geometry(xy)
    one = DgSpace(single_triangle_mesh(xy), degree)
    return volume_blocks(one, np.array([material.lame_lambda]), np.array([material.lame_mu]))[0]


@dataclass(eq=False)
class _FaceData:
    edges: np.ndarray
    weights: np.ndarray  # (E, q)
    normal: np.ndarray  # (E, 2)
    pen_b: np.ndarray
    pen_g: np.ndarray
    jump: list  # per side (E, q, a, 2)
    avg: list  # per side (E, q, a, 2), weighted traction of each basis function
    elem: list


def _face_data(space: DgSpace, config: DgConfig, lam, mu, edges) -> _FaceData:
    mesh = space.mesh
    n = mesh.edge_normal[edges]
    pen_b, pen_g = config.penalties(mesh)
    interior = (mesh.edge_tag[edges] == INTERIOR)
    half = np.where(interior, 0.5, 1.0)
    jump, avg, elem = [], [], []
    for side, sign in ((0, 1.0), (1, -1.0)):
        el, valid, phi, grads = space.plus if side == 0 else space.minus
        el, phi, grads = el[edges], phi[edges], grads[edges]
        V = vector_values(phi)  # (E, q, a, 2)
        G = vector_grads(grads)  # (E, q, a, c, d)
        S = _stress_of(G, lam[el], mu[el])
        T = np.einsum("eqacd,ed->eqac", S, n) * half[:, None, None, None]
        if side == 1:
            V = V * interior[:, None, None, None]
            T = T * interior[:, None, None, None]
        jump.append(sign * V)
        avg.append(T)
        elem.append(el)
    return _FaceData(edges, space.edge_weights[edges], n, pen_b[edges], pen_g[edges], jump, avg, elem)


def _face_block(fd: _FaceData, alpha: int, s: int, t: int) -> np.ndarray:
    """Block coupling test functions on side ``s`` to trial functions on ``t``."""
    Js, Jt = fd.jump[s], fd.jump[t]
    Ss, St = fd.avg[s], fd.avg[t]
    w = fd.weights
    blk = -np.einsum("eq,eqbc,eqac->eab", w, St, Js)
    if alpha:
        blk += alpha * np.einsum("eq,eqac,eqbc->eab", w, Ss, Jt)
    blk += np.einsum("eq,e,eqbc,eqac->eab", w, fd.pen_b, Jt, Js)
    if np.any(fd.pen_g):
        nJs = np.einsum("eqac,ec->eqa", Js, fd.normal)
        nJt = np.einsum("eqbc,ec->eqb", Jt, fd.normal)
        blk += np.einsum("eq,e,eqb,eqa->eab", w, fd.pen_g, nJt, nJs)
    return blk


def _check_tags(mesh: Mesh, edges):
    bad = ~np.isin(mesh.edge_tag[edges], (INTERIOR, DIRICHLET, NEUMANN))
    if np.any(bad):
        raise ValueError(f"edge {int(np.asarray(edges)[bad][0])} has no valid boundary tag")


def local_face_matrices(space: DgSpace, config: DgConfig, material, edge: int):
    """Blocks ``(pp, pm, mp, mm)`` for one edge; first letter is the test side.

    On boundary edges only ``pp`` is nonzero, and all four vanish on
    Neumann edges.
    """
    mesh = space.mesh
    _check_tags(mesh, [edge])
    lam, mu = lame_arrays(material, mesh.n_elements)
    fd = _face_data(space, config, lam, mu, np.array([edge]))
    nl2 = 2 * space.n_local
    if mesh.edge_tag[edge] == NEUMANN:
        z = np.zeros((nl2, nl2))
        return z, z.copy(), z.copy(), z.copy()
    return tuple(_face_block(fd, config.alpha, s, t)[0] for s, t in ((0, 0), (0, 1), (1, 0), (1, 1)))


# global system

@dataclass(eq=False)
class SparseSystem:
    matrix: sp.csr_matrix
    rhs: np.ndarray
    block_size: int

    @property
    def n_dof(self) -> int:
        return self.matrix.shape[0]

    @property
    def indptr(self):
        return self.matrix.indptr

    @property
    def indices(self):
        return self.matrix.indices

    @property
    def values(self):
        return self.matrix.data


def _element_dofs(space: DgSpace) -> np.ndarray:
    nl2 = 2 * space.n_local
    return np.arange(space.mesh.n_elements)[:, None] * nl2 + np.arange(nl2)[None, :]


def assemble_matrix(space: DgSpace, config: DgConfig, material) -> sp.csr_matrix:
    mesh = space.mesh
    if config.degree != space.degree:
        raise ValueError(f"config degree {config.degree} != space degree {space.degree}")
    _check_tags(mesh, np.arange(mesh.n_edges))
    lam, mu = lame_arrays(material, mesh.n_elements)
    dofs = _element_dofs(space)

    rows, cols, vals = [], [], []

    def add(blocks, test_el, trial_el):
        r = dofs[test_el]
        c = dofs[trial_el]
        rows.append(np.broadcast_to(r[:, :, None], blocks.shape).ravel())
        cols.append(np.broadcast_to(c[:, None, :], blocks.shape).ravel())
        vals.append(blocks.ravel())

    add(volume_blocks(space, lam, mu), np.arange(mesh.n_elements), np.arange(mesh.n_elements))

    active = np.flatnonzero(mesh.edge_tag != NEUMANN)
    if len(active):
        fd = _face_data(space, config, lam, mu, active)
        add(_face_block(fd, config.alpha, 0, 0), fd.elem[0], fd.elem[0])
        inner = mesh.edge_tag[active] == INTERIOR
        if np.any(inner):
            sub = _FaceData(
                fd.edges[inner], fd.weights[inner], fd.normal[inner], fd.pen_b[inner], fd.pen_g[inner],
                [j[inner] for j in fd.jump], [a[inner] for a in fd.avg], [e[inner] for e in fd.elem],
            )
            for s, t in ((0, 1), (1, 0), (1, 1)):
                add(_face_block(sub, config.alpha, s, t), sub.elem[s], sub.elem[t])

    n = space.n_dof
    A = sp.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n))
    A = A.tocsr()
    A.sum_duplicates()
    A.sort_indices()
    return A


def assemble_rhs(space: DgSpace, config: DgConfig, data: ProblemData) -> np.ndarray:
    mesh = space.mesh
    lam, mu = lame_arrays(data.material, mesh.n_elements)
    nl2 = 2 * space.n_local

    P = space.vol_points
    fq = np.asarray(data.f(P[..., 0], P[..., 1]), dtype=float)
    V = vector_values(space.vol_phi)  # (q, a, 2)
    b = np.einsum("eq,eqc,qac->ea", space.vol_weights, fq, V)

    el, _, phi, grads = space.plus
    pen_b, pen_g = config.penalties(mesh)

    neu = np.flatnonzero(mesh.edge_tag == NEUMANN)
    if len(neu):
        X = space.edge_points[neu]
        g = np.asarray(data.g_N(X[..., 0], X[..., 1]), dtype=float)
        Vn = vector_values(phi[neu])
        np.add.at(b, el[neu], np.einsum("eq,eqc,eqac->ea", space.edge_weights[neu], g, Vn))

    dir_ = np.flatnonzero(mesh.edge_tag == DIRICHLET)
    if len(dir_):
        X = space.edge_points[dir_]
        g = np.asarray(data.g_D(X[..., 0], X[..., 1]), dtype=float)
        w = space.edge_weights[dir_]
        n = mesh.edge_normal[dir_]
        Vd = vector_values(phi[dir_])
        contrib = np.einsum("eq,e,eqc,eqac->ea", w, pen_b[dir_], g, Vd)
        if np.any(pen_g[dir_]):
            ng = np.einsum("eqc,ec->eq", g, n)
            nV = np.einsum("eqac,ec->eqa", Vd, n)
            contrib += np.einsum("eq,e,eq,eqa->ea", w, pen_g[dir_], ng, nV)
        if config.alpha:
            e2 = el[dir_]
            S = _stress_of(vector_grads(grads[dir_]), lam[e2], mu[e2])
            T = np.einsum("eqacd,ed->eqac", S, n)
            contrib += config.alpha * np.einsum("eq,eqac,eqc->ea", w, T, g)
        np.add.at(b, el[dir_], contrib)

    return b.reshape(-1)


def assemble(mesh: Mesh, config: DgConfig, data: ProblemData, space: Optional[DgSpace] = None) -> SparseSystem:
    """Global matrix and load vector for ``B(u, v) = L(v)``."""
    space = space or DgSpace(mesh, config.degree)
    A = assemble_matrix(space, config, data.material)
    b = assemble_rhs(space, config, data)
    return SparseSystem(A, b, 2 * space.n_local)


# matrix-free evaluation

def bilinear_apply(space: DgSpace, config: DgConfig, material, w, v) -> float:
    """Evaluate ``B(w, v)`` directly from quadrature-point field values."""
    mesh = space.mesh
    lam, mu = lame_arrays(material, mesh.n_elements)

    Gw, Gv = space.volume_grads(w), space.volume_grads(v)
    Sw = _stress_of(Gw, lam, mu)
    eps_v = 0.5 * (Gv + np.swapaxes(Gv, -1, -2))
    total = np.einsum("eq,eqij,eqij->", space.vol_weights, Sw, eps_v)

    active = np.flatnonzero(mesh.edge_tag != NEUMANN)
    if not len(active):
        return float(total)
    inner = (mesh.edge_tag[active] == INTERIOR)[:, None]
    n = mesh.edge_normal[active]
    wq = space.edge_weights[active]
    pen_b, pen_g = (p[active] for p in config.penalties(mesh))

    def jump_and_avg(coeffs):
        vp, gp = (a[active] for a in space.trace(coeffs, 0))
        vm, gm = (a[active] for a in space.trace(coeffs, 1))
        ep, em = space.plus[0][active], space.minus[0][active]
        tp = np.einsum("eqij,ej->eqi", _stress_of(gp, lam[ep], mu[ep]), n)
        tm = np.einsum("eqij,ej->eqi", _stress_of(gm, lam[em], mu[em]), n)
        jump = np.where(inner[..., None], vp - vm, vp)
        avg = np.where(inner[..., None], 0.5 * (tp + tm), tp)
        return jump, avg

    jw, aw = jump_and_avg(w)
    jv, av = jump_and_avg(v)
    total -= np.einsum("eq,eqi,eqi->", wq, aw, jv)
    total += config.alpha * np.einsum("eq,eqi,eqi->", wq, av, jw)
    total += np.einsum("eq,e,eqi,eqi->", wq, pen_b, jw, jv)
    njw = np.einsum("eqi,ei->eq", jw, n)
    njv = np.einsum("eqi,ei->eq", jv, n)
    total += np.einsum("eq,e,eq,eq->", wq, pen_g, njw, njv)
    return float(total)


def residual_flux(space: DgSpace, config: DgConfig, data: ProblemData, solution,
                  element: Optional[int] = None) -> np.ndarray:
    """Per-element equilibrium defect ``int_dK Sigma_n + int_K f``.

    The numerical normal flux seen from element ``K`` with outward normal
    ``n_K`` is::

        interior:  {sigma(u) n_K} - pb [u]_K - pg (n_K . [u]_K) n_K
        Dirichlet: sigma(u) n_K - pb (u - g_D) - pg (n_K . (u - g_D)) n_K
        Neumann:   g_N

    with ``[u]_K = u_K - u_neighbour``.  Returns shape ``(n_el, 2)``, or
    ``(2,)`` when ``element`` is given.
    """
    mesh = space.mesh
    lam, mu = lame_arrays(data.material, mesh.n_elements)
    defect = np.einsum("eq,eqc->ec", space.vol_weights,
                       np.asarray(data.f(space.vol_points[..., 0], space.vol_points[..., 1]), dtype=float))

    pen_b, pen_g = config.penalties(mesh)
    vp, gp = space.trace(solution, 0)
    vm, gm = space.trace(solution, 1)
    ep, em = space.plus[0], space.minus[0]
    n = mesh.edge_normal
    wq = space.edge_weights
    tp = np.einsum("eqij,ej->eqi", _stress_of(gp, lam[ep], mu[ep]), n)
    tm = np.einsum("eqij,ej->eqi", _stress_of(gm, lam[em], mu[em]), n)

    X = space.edge_points
    flux_plus = np.zeros_like(vp)
    tag = mesh.edge_tag

    it = tag == INTERIOR
    jump = vp - vm
    nj = np.einsum("eqi,ei->eq", jump, n)
    f_int = 0.5 * (tp + tm) - pen_b[:, None, None] * jump - pen_g[:, None, None] * nj[..., None] * n[:, None, :]
    flux_plus[it] = f_int[it]

    dt = tag == DIRICHLET
    if np.any(dt):
        g = np.asarray(data.g_D(X[dt][..., 0], X[dt][..., 1]), dtype=float)
        diff = vp[dt] - g
        nd = np.einsum("eqi,ei->eq", diff, n[dt])
        flux_plus[dt] = (tp[dt] - pen_b[dt, None, None] * diff
                         - pen_g[dt, None, None] * nd[..., None] * n[dt][:, None, :])

    nt = tag == NEUMANN
    if np.any(nt):
        flux_plus[nt] = np.asarray(data.g_N(X[nt][..., 0], X[nt][..., 1]), dtype=float)

    integral = np.einsum("eq,eqi->ei", wq, flux_plus)
    np.add.at(defect, ep, integral)
    # the minus side sees n_K = -n and [u]_K = -jump, so its flux is the negative
    np.add.at(defect, em[it], -integral[it])

    return defect if element is None else defect[element]
