"""Ghost penalty on the normal-gradient jump across boundary element edges."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

# corner sign of d/dx and d/dy for CCW element nodes (ll, lr, ur, ul)
_EX = np.array([-1.0, 1.0, 1.0, -1.0])
_EY = np.array([-1.0, -1.0, 1.0, 1.0])


@dataclass(eq=False)
class GhostFaceSet:
    faces: np.ndarray
    plus: np.ndarray
    minus: np.ndarray
    bodies: dict = field(default_factory=dict)  # face id -> set of body ids
    step: int | None = None

    def __len__(self):
        return len(self.faces)


def boundary_faces(grid, active):
    """Faces flagged for one body whose active elements are given.

    Boundary elements are active elements sharing a face with an inactive
    element; every face of a boundary element with both neighbours active is
    returned.  Faces on the outer rim of the grid never qualify.
    """
    mask = np.zeros(grid.n_elements, dtype=bool)
    mask[np.asarray(active, dtype=np.int64)] = True
    conn = grid.face_connectivity
    ap, am = mask[conn[:, 0]], mask[conn[:, 1]]
    mixed = ap ^ am
    boundary = np.zeros(grid.n_elements, dtype=bool)
    boundary[conn[mixed & ap, 0]] = True
    boundary[conn[mixed & am, 1]] = True
    keep = ap & am & (boundary[conn[:, 0]] | boundary[conn[:, 1]])
    return np.flatnonzero(keep)


def identify_boundary_edges(grid, active_by_body, step=None):
    """Union over bodies of :func:`boundary_faces`.

    ``active_by_body`` maps body id to that body's active element ids.
    """
    prov = {}
    for body in sorted(active_by_body):
        for f in boundary_faces(grid, active_by_body[body]):
            prov.setdefault(int(f), set()).add(body)
    faces = np.array(sorted(prov), dtype=np.int64)
    conn = grid.face_connectivity[faces] if len(faces) else np.zeros((0, 2), np.int64)
    return GhostFaceSet(faces=faces, plus=conn[:, 0], minus=conn[:, 1], bodies=prov, step=step)


def _element_gradients(grid, elements, pts):
    """Bi-linear shape-function gradients of ``elements`` at ``pts`` (nf, ngp, 2)."""
    xc = grid.node_coords[grid.element_topology[elements]]  # (nf, 4, 2)
    h = grid.h
    d = pts[:, :, None, :] - xc[:, None, :, :]  # (nf, ngp, 4, 2)
    nx = 1.0 - np.abs(d[..., 0]) / h
    ny = 1.0 - np.abs(d[..., 1]) / h
    return np.stack([_EX / h * ny, _EY / h * nx], axis=-1)  # (nf, ngp, 4, 2)


def assemble_jg(grid, face_set):
    """Global ghost matrix ``J_G`` over interleaved dofs ``2*node + axis``.

    Per face the penalty is ``h^3/3`` times the integral of the squared jump
    of the normal derivative of each displacement component, evaluated with
    two-point Gauss quadrature.  The operator is block diagonal in the axes.
    """
    faces = np.asarray(face_set.faces if hasattr(face_set, "faces") else face_set, dtype=np.int64)
    n_nodes = grid.n_nodes
    if len(faces) == 0:
        return sp.csr_matrix((2 * n_nodes, 2 * n_nodes))
    if np.any(faces < 0) or np.any(faces >= grid.n_faces):
        raise IndexError("face id outside the grid skeleton")
    conn = grid.face_connectivity[faces]
    normals = grid.face_normals[faces]
    pts, wj = grid.face_quadrature(faces)
    gp = _element_gradients(grid, conn[:, 0], pts)
    gm = _element_gradients(grid, conn[:, 1], pts)
    # normal derivative of each shape function: [+ element, - element]
    g = np.concatenate(
        [np.einsum("fgad,fd->fga", gp, normals), -np.einsum("fgad,fd->fga", gm, normals)], axis=2
    )  # (nf, ngp, 8)
    ke = (grid.h**3 / 3.0) * np.einsum("g,fga,fgb->fab", wj, g, g)
    nodes = np.concatenate(
        [grid.element_topology[conn[:, 0]], grid.element_topology[conn[:, 1]]], axis=1
    )
    rows = np.repeat(nodes, 8, axis=1).ravel()
    cols = np.tile(nodes, (1, 8)).ravel()
    js = sp.coo_matrix((ke.ravel(), (rows, cols)), shape=(n_nodes, n_nodes)).tocsr()
    js.sum_duplicates()
    return sp.kron(js, sp.identity(2, format="csr"), format="csr")


def mass_stabilisation(J_G, gamma_M):
    if gamma_M < 0:
        raise ValueError("gamma_M must be non-negative")
    return gamma_M * J_G


def stiffness_stabilisation(J_G, gamma_k):
    if gamma_k < 0:
        raise ValueError("gamma_k must be non-negative")
    return gamma_k * J_G


def ghost_force(K_G, u_step):
    return K_G @ u_step
