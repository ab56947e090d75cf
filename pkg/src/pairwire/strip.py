"""Structured P1 discretization of the symmetry-reduced pair strip.

The reduced domain is ``{0 <= y <= x <= L, x - y <= d}``. Symmetric pair
wavefunctions on the full strip correspond one-to-one to functions on this
half with a natural condition on the diagonal, and the contact term becomes a
Robin term with coefficient ``alpha / (2 sqrt 2)`` per unit arclength of the
diagonal. Nodes sit at ``(i h, j h)`` with ``h = d / m`` so that the diagonal
and the line ``x - y = d`` are unions of mesh edges.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp

SQRT2 = math.sqrt(2.0)

#: Default cap on mesh nodes; a 1-D wire of length 80 at m=80 needs ~520k.
NODE_BUDGET = 2_000_000


class Tag(enum.IntEnum):
    DIRICHLET_PAIR = 0  # x - y = d
    DIRICHLET_BOX = 1  # x = L
    NEUMANN_AXIS = 2  # y = 0, x <= d
    ROBIN_DIAG = 3  # x = y


class MeshBudgetError(MemoryError):
    pass


@dataclass(frozen=True)
class StripGeometry:
    d: float
    L: float

    def __post_init__(self) -> None:
        if not (self.d > 0 and math.isfinite(self.d)):
            raise ValueError(f"d must be positive, got {self.d!r}")
        if not (self.L > self.d and math.isfinite(self.L)):
            raise ValueError(f"need L > d, got L={self.L!r}, d={self.d!r}")

    @property
    def area(self) -> float:
        return self.d * self.L - 0.5 * self.d**2


@dataclass(frozen=True)
class StripMesh:
    d: float
    L: float  # effective box size, a multiple of h
    m: int
    h: float
    nodes: np.ndarray  # (n, 2) float
    ij: np.ndarray  # (n, 2) integer lattice coordinates
    triangles: np.ndarray  # (t, 3), counter-clockwise
    edges: np.ndarray  # (e, 2) boundary edges
    edge_tags: np.ndarray  # (e,) Tag values

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_cells(self) -> int:
        """Number of lattice steps ``L / h`` along the box."""
        return int(round(self.L / self.h))

    def nodes_with_tag(self, tag: Tag) -> np.ndarray:
        sel = self.edges[self.edge_tags == tag]
        return np.unique(sel)

    def diagonal_nodes(self) -> np.ndarray:
        return np.flatnonzero(self.ij[:, 0] == self.ij[:, 1])


def expected_node_count(n_cells: int, m: int) -> int:
    """Closed-form count of lattice points with 0 <= j <= i <= n_cells, i - j <= m."""
    if n_cells <= m:
        return (n_cells + 1) * (n_cells + 2) // 2
    return (m + 1) * (m + 2) // 2 + (n_cells - m) * (m + 1)


def build_mesh(geometry: StripGeometry, m: int, node_budget: int = NODE_BUDGET) -> StripMesh:
    """Right-triangle mesh of the reduced strip, cells split parallel to the diagonal.

    ``L`` is rounded up to a multiple of ``h = d/m``; the effective value is
    stored on the returned mesh.
    """
    if m < 2:
        raise ValueError(f"m must be >= 2, got {m}")
    d = geometry.d
    h = d / m
    n_cells = int(math.ceil(geometry.L / h - 1e-9))
    count = expected_node_count(n_cells, m)
    if count > node_budget:
        raise MeshBudgetError(
            f"mesh with L={geometry.L}, m={m} needs {count} nodes, over the node budget {node_budget}"
        )

    i_idx = np.repeat(np.arange(n_cells + 1), [min(i, m) + 1 for i in range(n_cells + 1)])
    offsets = np.concatenate([[0], np.cumsum([min(i, m) + 1 for i in range(n_cells + 1)])])
    j_idx = np.arange(len(i_idx)) - offsets[i_idx] + np.maximum(i_idx - m, 0)
    ij = np.column_stack([i_idx, j_idx])
    assert len(ij) == count

    def node(i: np.ndarray, j: np.ndarray) -> np.ndarray:
        return offsets[i] + j - np.maximum(i - m, 0)

    # Lower triangles (i,j),(i+1,j),(i+1,j+1) need i-j+1 <= m; upper (i,j),(i+1,j+1),(i,j+1) need i-j >= 1.
    ii, jj = ij[:, 0], ij[:, 1]
    low = (ii < n_cells) & (ii - jj + 1 <= m)
    up = (ii < n_cells) & (ii - jj >= 1)
    li, lj = ii[low], jj[low]
    ui, uj = ii[up], jj[up]
    tri_low = np.column_stack([node(li, lj), node(li + 1, lj), node(li + 1, lj + 1)])
    tri_up = np.column_stack([node(ui, uj), node(ui + 1, uj + 1), node(ui, uj + 1)])
    triangles = np.vstack([tri_low, tri_up])

    edges, tags = _boundary_edges(triangles, ij, n_cells, m)
    return StripMesh(
        d=d,
        L=n_cells * h,
        m=m,
        h=h,
        nodes=ij * h,
        ij=ij,
        triangles=triangles,
        edges=edges,
        edge_tags=tags,
    )


def _boundary_edges(triangles: np.ndarray, ij: np.ndarray, n_cells: int, m: int):
    all_edges = np.vstack([triangles[:, [0, 1]], triangles[:, [1, 2]], triangles[:, [2, 0]]])
    keyed = np.sort(all_edges, axis=1)
    uniq, counts = np.unique(keyed, axis=0, return_counts=True)
    edges = uniq[counts == 1]

    a, b = ij[edges[:, 0]], ij[edges[:, 1]]
    tags = np.full(len(edges), -1, dtype=int)
    both = lambda cond: cond(a) & cond(b)  # noqa: E731
    tags[both(lambda p: p[:, 0] - p[:, 1] == m)] = Tag.DIRICHLET_PAIR
    tags[both(lambda p: p[:, 0] == n_cells)] = Tag.DIRICHLET_BOX
    tags[both(lambda p: p[:, 1] == 0)] = Tag.NEUMANN_AXIS
    tags[both(lambda p: p[:, 0] == p[:, 1])] = Tag.ROBIN_DIAG
    if np.any(tags < 0):
        raise AssertionError(f"untagged boundary edges: {edges[tags < 0][:5]}")
    return edges, tags


@dataclass
class AssembledForms:
    """Matrices of the discrete form ``u'K u + alpha/(2 sqrt 2) u'R u``.

    ``dirichlet_mask`` marks constrained nodes; they are eliminated at solve
    time. An infinite ``alpha`` is represented by adding the diagonal to the
    mask and dropping the Robin term.
    """

    mesh: StripMesh
    alpha: float
    K: sp.csr_matrix
    M: sp.csr_matrix
    R: sp.csr_matrix
    dirichlet_mask: np.ndarray
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def robin_coefficient(self) -> float:
        return 0.0 if math.isinf(self.alpha) else self.alpha / (2.0 * SQRT2)

    @property
    def free(self) -> np.ndarray:
        return np.flatnonzero(~self.dirichlet_mask)

    def operator(self) -> sp.csr_matrix:
        """Full (unconstrained) operator matrix ``K + c R``."""
        c = self.robin_coefficient
        return (self.K + c * self.R).tocsr() if c else self.K

    def pencil(self) -> tuple[sp.csr_matrix, sp.csr_matrix]:
        """Operator and mass matrices restricted to free nodes."""
        key = ("pencil", self.dirichlet_mask.tobytes())
        if key not in self._cache:
            f = self.free
            A = self.operator()[f][:, f].tocsr()
            Mf = self.M[f][:, f].tocsr()
            self._cache = {key: (A, Mf)}
        return self._cache[key]

    def expand(self, u_free: np.ndarray) -> np.ndarray:
        """Scatter free-node values into full-length vectors (zeros on the mask)."""
        u_free = np.asarray(u_free)
        out = np.zeros((self.mesh.n_nodes,) + u_free.shape[1:], dtype=u_free.dtype)
        out[self.free] = u_free
        return out


def _symmetric(rows: np.ndarray, cols: np.ndarray, vals: np.ndarray, n: int) -> sp.csr_matrix:
    # Upper triangle only, then mirror, so the result is bit-exactly symmetric.
    keep = rows <= cols
    U = sp.coo_matrix((vals[keep], (rows[keep], cols[keep])), shape=(n, n)).tocsr()
    U.sum_duplicates()
    return (U + sp.triu(U, k=1).T).tocsr()


def assemble(mesh: StripMesh, alpha: float) -> AssembledForms:
    if not (alpha >= 0):
        raise ValueError(f"alpha must be >= 0, got {alpha!r}")
    n = mesh.n_nodes
    tri = mesh.triangles
    p = mesh.nodes[tri]  # (t, 3, 2)
    e1 = p[:, 1] - p[:, 0]
    e2 = p[:, 2] - p[:, 0]
    det = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
    area = 0.5 * det
    bad = np.flatnonzero(area <= 1e-14 * mesh.h**2)
    if len(bad):
        raise ArithmeticError(f"degenerate or inverted triangle at index {bad[0]}")

    # Gradients of the barycentric basis: grad phi_k = rot(opposite edge) / (2 area).
    opp = np.stack([p[:, 2] - p[:, 1], p[:, 0] - p[:, 2], p[:, 1] - p[:, 0]], axis=1)
    grads = np.stack([-opp[..., 1], opp[..., 0]], axis=-1) / det[:, None, None]
    Ke = area[:, None, None] * np.einsum("tak,tbk->tab", grads, grads)
    Me = area[:, None, None] / 12.0 * (np.ones((3, 3)) + np.eye(3))

    rows = np.repeat(tri, 3, axis=1).ravel()
    cols = np.tile(tri, (1, 3)).ravel()
    K = _symmetric(rows, cols, Ke.ravel(), n)
    M = _symmetric(rows, cols, Me.ravel(), n)

    diag_edges = mesh.edges[mesh.edge_tags == Tag.ROBIN_DIAG]
    seg = np.linalg.norm(mesh.nodes[diag_edges[:, 1]] - mesh.nodes[diag_edges[:, 0]], axis=1)
    Re = seg[:, None, None] / 6.0 * np.array([[2.0, 1.0], [1.0, 2.0]])
    rrows = np.repeat(diag_edges, 2, axis=1).ravel()
    rcols = np.tile(diag_edges, (1, 2)).ravel()
    R = _symmetric(rrows, rcols, Re.ravel(), n)

    ij = mesh.ij
    mask = (ij[:, 0] - ij[:, 1] == mesh.m) | (ij[:, 0] == mesh.n_cells)
    if math.isinf(alpha):
        mask |= ij[:, 0] == ij[:, 1]
    return AssembledForms(mesh=mesh, alpha=float(alpha), K=K, M=M, R=R, dirichlet_mask=mask)


def trace_ratio(forms: AssembledForms, u: np.ndarray) -> float:
    """Diagonal-trace to H1-norm ratio ``(int |u(x,x)|^2 dx) / ||u||_{H1}^2``.

    The trace integral is taken against ``dx`` along the diagonal, i.e. the
    arclength integral divided by ``sqrt 2``. ``u`` may be given on all nodes
    or on the free nodes only.
    """
    u = np.asarray(u, dtype=float)
    if u.shape[0] != forms.mesh.n_nodes:
        u = forms.expand(u)
    energy = float(u @ (forms.K @ u) + u @ (forms.M @ u))
    if energy == 0.0:
        raise ValueError("trace ratio undefined for the zero vector")
    return float(u @ (forms.R @ u)) / SQRT2 / energy


MESH_HEADER = "# pairwire strip mesh v1"


def write_mesh(mesh: StripMesh, path: str | Path) -> None:
    """Plain-text dump: header, then ``nodes``/``triangles``/``edges`` blocks.

    Each block starts with ``<name> <count>`` followed by one record per line:
    ``x y`` for nodes, three 0-based node indices for triangles, and two node
    indices plus a tag name for boundary edges.
    """
    lines = [MESH_HEADER, f"# d={mesh.d!r} L={mesh.L!r} m={mesh.m} h={mesh.h!r}"]
    lines.append(f"nodes {mesh.n_nodes}")
    lines += [f"{x!r} {y!r}" for x, y in mesh.nodes.tolist()]
    lines.append(f"triangles {len(mesh.triangles)}")
    lines += [f"{a} {b} {c}" for a, b, c in mesh.triangles.tolist()]
    lines.append(f"edges {len(mesh.edges)}")
    lines += [f"{a} {b} {Tag(t).name}" for (a, b), t in zip(mesh.edges.tolist(), mesh.edge_tags.tolist())]
    Path(path).write_text("\n".join(lines) + "\n")


def read_mesh(path: str | Path) -> dict[str, np.ndarray]:
    """Parse a dump written by :func:`write_mesh` into plain arrays."""
    out: dict[str, np.ndarray] = {}
    it = iter(ln for ln in Path(path).read_text().splitlines() if ln and not ln.startswith("#"))
    for header in it:
        name, count = header.split()
        rows = [next(it).split() for _ in range(int(count))]
        if name == "nodes":
            out[name] = np.array(rows, dtype=float).reshape(-1, 2)
        elif name == "triangles":
            out[name] = np.array(rows, dtype=int).reshape(-1, 3)
        elif name == "edges":
            out[name] = np.array([r[:2] for r in rows], dtype=int).reshape(-1, 2)
            out["edge_tags"] = np.array([Tag[r[2]] for r in rows], dtype=int)
        else:
            raise ValueError(f"unknown block {name!r} in {path}")
    return out
