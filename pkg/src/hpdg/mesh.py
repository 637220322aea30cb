"""Structured triangular meshes of axis-aligned rectangles."""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np

INTERIOR, DIRICHLET, NEUMANN = 0, 1, 2
TAG_NAMES = {INTERIOR: "interior", DIRICHLET: "dirichlet", NEUMANN: "neumann"}

DEFAULT_DOMAIN = (-1.0, 1.0, -1.0, 1.0)
MAX_CELLS = 1 << 22


class GeometryError(ValueError):
    pass


class ResourceLimitError(RuntimeError):
    pass


@dataclass(frozen=True)
class Edge:
    """Single-edge view of the mesh edge table."""

    endpoints: tuple[int, int]
    plus_element: int
    minus_element: Optional[int]
    unit_normal: np.ndarray
    length: float
    boundary_tag: str

    def swapped(self) -> "Edge":
        if self.minus_element is None:
            raise ValueError("boundary edge has no minus element")
        return replace(
            self,
            endpoints=self.endpoints[::-1],
            plus_element=self.minus_element,
            minus_element=self.plus_element,
            unit_normal=-self.unit_normal,
        )


@dataclass(frozen=True, eq=False)
class Mesh:
    """Triangulation with a flat edge table.

    Edge ``e`` runs from ``edge_vertices[e, 0]`` to ``edge_vertices[e, 1]``,
    which is the counterclockwise direction of its plus element.  The
    minus element (``-1`` on the boundary) traverses it the other way.
    ``edge_local[e]`` gives the local edge index in the plus and minus
    element.
    """

    vertices: np.ndarray
    elements: np.ndarray
    edge_vertices: np.ndarray
    edge_elements: np.ndarray
    edge_local: np.ndarray
    edge_normal: np.ndarray
    edge_length: np.ndarray
    edge_tag: np.ndarray
    h_cell: float
    level: int
    domain: tuple = DEFAULT_DOMAIN

    @property
    def n_elements(self) -> int:
        return len(self.elements)

    @property
    def n_edges(self) -> int:
        return len(self.edge_vertices)

    @property
    def edge_plus(self) -> np.ndarray:
        return self.edge_elements[:, 0]

    @property
    def edge_minus(self) -> np.ndarray:
        return self.edge_elements[:, 1]

    @property
    def interior_edges(self) -> np.ndarray:
        return np.flatnonzero(self.edge_tag == INTERIOR)

    @property
    def boundary_edges(self) -> np.ndarray:
        return np.flatnonzero(self.edge_tag != INTERIOR)

    def edge(self, e: int) -> Edge:
        minus = int(self.edge_elements[e, 1])
        return Edge(
            endpoints=(int(self.edge_vertices[e, 0]), int(self.edge_vertices[e, 1])),
            plus_element=int(self.edge_elements[e, 0]),
            minus_element=None if minus < 0 else minus,
            unit_normal=self.edge_normal[e].copy(),
            length=float(self.edge_length[e]),
            boundary_tag=TAG_NAMES[int(self.edge_tag[e])],
        )

    def element_coords(self) -> np.ndarray:
        """Vertex coordinates per element, shape ``(n_elements, 3, 2)``."""
        return self.vertices[self.elements]

    def jacobians(self) -> tuple[np.ndarray, np.ndarray]:
        """Affine-map matrices ``B`` (n, 2, 2) and offsets (n, 2)."""
        xy = self.element_coords()
        B = np.stack([xy[:, 1] - xy[:, 0], xy[:, 2] - xy[:, 0]], axis=-1)
        return B, xy[:, 0]

    def areas(self) -> np.ndarray:
        B, _ = self.jacobians()
        return 0.5 * np.linalg.det(B)

    def diameters(self) -> np.ndarray:
        xy = self.element_coords()
        d = [np.linalg.norm(xy[:, i] - xy[:, j], axis=1) for i, j in ((0, 1), (1, 2), (2, 0))]
        return np.max(d, axis=0)

    @property
    def h_max(self) -> float:
        """Largest element diameter."""
        return float(self.diameters().max())


def element_geometry(mesh: Mesh, k: int):
    """Return ``(area, (B, x0), det B)`` for element ``k``.

    The affine map sends reference point ``xi`` to ``B @ xi + x0``.
    """
    xy = mesh.vertices[mesh.elements[k]]
    return triangle_geometry(xy)


def triangle_geometry(xy):
    xy = np.asarray(xy, dtype=float)
    B = np.column_stack([xy[1] - xy[0], xy[2] - xy[0]])
    det = float(np.linalg.det(B))
    if det <= 0.0:
        raise GeometryError(f"degenerate or clockwise triangle (det={det:g})")
    return 0.5 * det, (B, xy[0].copy()), det


def _build_edges(vertices, elements):
    """Edge table from element connectivity; lower element index is plus."""
    lookup: dict[tuple[int, int], int] = {}
    ev, ee, el = [], [], []
    for k, tri in enumerate(elements):
        for loc in range(3):
            a, b = int(tri[loc]), int(tri[(loc + 1) % 3])
            key = (min(a, b), max(a, b))
            e = lookup.get(key)
            if e is None:
                lookup[key] = len(ev)
                ev.append((a, b))
                ee.append([k, -1])
                el.append([loc, -1])
            else:
                if ee[e][1] != -1:
                    raise GeometryError(f"edge {key} shared by more than two elements")
                ee[e][1] = k
                el[e][1] = loc
    ev = np.array(ev, dtype=np.int64)
    ee = np.array(ee, dtype=np.int64)
    el = np.array(el, dtype=np.int64)
    d = vertices[ev[:, 1]] - vertices[ev[:, 0]]
    length = np.hypot(d[:, 0], d[:, 1])
    normal = np.column_stack([d[:, 1], -d[:, 0]]) / length[:, None]
    tag = np.where(ee[:, 1] < 0, DIRICHLET, INTERIOR)
    return ev, ee, el, normal, length, tag


def build_structured(level: int, domain=DEFAULT_DOMAIN, max_cells: int = MAX_CELLS) -> Mesh:
    """Uniform grid of ``2**(level+1)`` cells per side, each split along
    its lower-left to upper-right diagonal.

    On (-1, 1)^2 this gives a cell side of ``2**-level``.  All boundary
    edges start out tagged Dirichlet; see :func:`classify_boundary`.
    """
    if int(level) != level or level < 1:
        raise ValueError(f"level must be a positive integer, got {level!r}")
    x0, x1, y0, y1 = map(float, domain)
    if not (x1 > x0 and y1 > y0):
        raise ValueError(f"degenerate domain {domain!r}")
    n = 2 ** (level + 1)
    if n * n > max_cells:
        raise ResourceLimitError(f"level {level} needs {n * n} cells, limit is {max_cells}")

    xs = np.linspace(x0, x1, n + 1)
    ys = np.linspace(y0, y1, n + 1)
    X, Y = np.meshgrid(xs, ys, indexing="xy")
    vertices = np.column_stack([X.ravel(), Y.ravel()])

    j, i = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    v00 = (j * (n + 1) + i).ravel()
    v10, v01 = v00 + 1, v00 + n + 1
    v11 = v01 + 1
    lower = np.column_stack([v00, v10, v11])
    upper = np.column_stack([v00, v11, v01])
    elements = np.stack([lower, upper], axis=1).reshape(-1, 3)

    ev, ee, el, normal, length, tag = _build_edges(vertices, elements)
    h_cell = max((x1 - x0) / n, (y1 - y0) / n)
    return Mesh(vertices, elements, ev, ee, el, normal, length, tag,
                h_cell=h_cell, level=int(level), domain=(x0, x1, y0, y1))


def mesh_from_triangles(vertices, elements, h_cell: Optional[float] = None, level: int = 0) -> Mesh:
    """Mesh from explicit counterclockwise triangles; boundary tagged Dirichlet."""
    vertices = np.asarray(vertices, dtype=float)
    elements = np.asarray(elements, dtype=np.int64)
    for tri in elements:
        triangle_geometry(vertices[tri])
    ev, ee, el, normal, length, tag = _build_edges(vertices, elements)
    lo, hi = vertices.min(axis=0), vertices.max(axis=0)
    if h_cell is None:
        h_cell = float(length.max())
    return Mesh(vertices, elements, ev, ee, el, normal, length, tag, h_cell=h_cell, level=level,
                domain=(lo[0], hi[0], lo[1], hi[1]))


def classify_boundary(mesh: Mesh, dirichlet: Callable[[float, float], bool]) -> Mesh:
    """Retag boundary edges by evaluating ``dirichlet(x, y)`` at midpoints."""
    tag = mesh.edge_tag.copy()
    mid = 0.5 * (mesh.vertices[mesh.edge_vertices[:, 0]] + mesh.vertices[mesh.edge_vertices[:, 1]])
    for e in mesh.boundary_edges:
        tag[e] = DIRICHLET if dirichlet(*mid[e]) else NEUMANN
    return replace(mesh, edge_tag=tag)


def write_mesh_dump(mesh: Mesh, path) -> None:
    """Debug dump; not a stable format.

    Header line, then ``v x y``, ``t a b c`` and
    ``e a b plus minus nx ny length tag`` records.
    """
    with open(path, "w") as fh:
        fh.write(f"# hpdg mesh level={mesh.level} h_cell={mesh.h_cell!r} "
                 f"nv={len(mesh.vertices)} nt={mesh.n_elements} ne={mesh.n_edges}\n")
        for x, y in mesh.vertices:
            fh.write(f"v {x!r} {y!r}\n")
        for a, b, c in mesh.elements:
            fh.write(f"t {a} {b} {c}\n")
        for e in range(mesh.n_edges):
            a, b = mesh.edge_vertices[e]
            p, m = mesh.edge_elements[e]
            nx, ny = mesh.edge_normal[e]
            fh.write(f"e {a} {b} {p} {m} {nx!r} {ny!r} {mesh.edge_length[e]!r} "
                     f"{TAG_NAMES[int(mesh.edge_tag[e])]}\n")



def single_triangle_mesh(xy) -> Mesh:
    """One-element mesh with all edges tagged Neumann."""
    m = mesh_from_triangles(xy, [[0, 1, 2]])
    return replace(m, edge_tag=np.full(3, NEUMANN))
