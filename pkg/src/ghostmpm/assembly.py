"""Global assembly of point quantities onto grid degrees of freedom.

Everything is assembled over the full interleaved dof space (``2*node+axis``)
and then restricted to the free, supported dofs through a :class:`DofMap`.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp


@dataclass(eq=False)
class DofMap:
    n_dofs: int
    free: np.ndarray  # sorted global dof ids kept in the reduced system
    index: np.ndarray  # (n_dofs,) reduced index or -1

    @classmethod
    def build(cls, n_dofs, active_nodes, fixed_mask):
        active = np.zeros(n_dofs, dtype=bool)
        an = np.asarray(active_nodes, dtype=np.int64)
        active[2 * an] = True
        active[2 * an + 1] = True
        active &= ~np.asarray(fixed_mask, dtype=bool)
        free = np.flatnonzero(active)
        index = -np.ones(n_dofs, dtype=np.int64)
        index[free] = np.arange(len(free))
        return cls(n_dofs=n_dofs, free=free, index=index)

    @property
    def n_free(self):
        return len(self.free)

    def reduce_matrix(self, A):
        A = sp.csr_matrix(A)
        return A[self.free][:, self.free]

    def reduce_vector(self, v):
        return np.asarray(v)[self.free]

    def expand(self, vr):
        out = np.zeros(self.n_dofs)
        out[self.free] = vr
        return out


@dataclass(eq=False)
class GlobalSystem:
    dof_map: DofMap
    M: sp.csr_matrix | None = None
    M_lumped: np.ndarray | None = None
    f_int: np.ndarray | None = None
    f_ext: np.ndarray | None = None
    K: sp.csr_matrix | None = None
    step: int | None = None


def _safe(basis):
    nodes = np.where(basis.nodes >= 0, basis.nodes, 0)
    return nodes, basis.S, basis.dS


def _scatter_pairs(nodes, vals, n):
    """Sparse ``n x n`` from per-point dense blocks ``vals[p, a, b]`` on ``nodes[p]``."""
    W = nodes.shape[1]
    rows = np.repeat(nodes, W, axis=1).ravel()
    cols = np.tile(nodes, (1, W)).ravel()
    # tocsr sums duplicate entries
    return sp.coo_matrix((vals.ravel(), (rows, cols)), shape=(n, n)).tocsr()


def assemble_mass(grid, basis, m):
    """Consistent mass; identical x and y blocks."""
    nodes, S, _ = _safe(basis)
    vals = m[:, None, None] * S[:, :, None] * S[:, None, :]
    Ms = _scatter_pairs(nodes, vals, grid.n_nodes)
    return sp.kron(Ms, sp.identity(2, format="csr"), format="csr")


def assemble_lumped_mass(grid, basis, m):
    nodes, S, _ = _safe(basis)
    ms = np.bincount(nodes.ravel(), weights=(m[:, None] * S).ravel(), minlength=grid.n_nodes)
    return np.repeat(ms, 2)


def _scatter_vector(grid, nodes, vals):
    """vals (n, W, 2) -> global interleaved vector."""
    out = np.zeros(grid.n_dofs)
    np.add.at(out, 2 * nodes, vals[..., 0])
    np.add.at(out, 2 * nodes + 1, vals[..., 1])
    return out


def assemble_internal_force(grid, basis, sigma, V):
    """``f_int = sum_p grad(S)^T sigma_p V_p`` with the in-plane Cauchy stress."""
    nodes, _, dS = _safe(basis)
    s2 = np.asarray(sigma)[:, :2, :2]
    vals = V[:, None, None] * np.einsum("pij,paj->pai", s2, dS)
    return _scatter_vector(grid, nodes, vals)


def assemble_body_force(grid, basis, m, g):
    """``f_ext = sum_p S_p m_p g`` (rho g V with the current density)."""
    nodes, S, _ = _safe(basis)
    vals = (m[:, None] * S)[:, :, None] * np.asarray(g, dtype=float)[None, None, :]
    return _scatter_vector(grid, nodes, vals)


def assemble_point_forces(grid, basis, forces):
    nodes, S, _ = _safe(basis)
    vals = S[:, :, None] * np.asarray(forces, dtype=float)[:, None, :]
    return _scatter_vector(grid, nodes, vals)


def assemble_stiffness(grid, basis, a, V):
    """``K = sum_p grad(S)^T a_p grad(S) V_p``; ``a`` is (n, 2, 2, 2, 2)."""
    nodes, _, dS = _safe(basis)
    n, W = nodes.shape
    # two batched matmuls; a single einsum over five indices is much slower
    t = (a.reshape(n, 8, 2) @ np.swapaxes(dS, 1, 2)).reshape(n, 2, 2, 2, W)  # (p, i, j, k, b)
    t = np.transpose(t, (0, 2, 1, 3, 4)).reshape(n, 2, 4 * W)  # (p, j, ikb)
    ke = (dS @ t).reshape(n, W, 2, 2, W)  # (p, a, i, k, b)
    ke = V[:, None, None, None, None] * np.transpose(ke, (0, 1, 2, 4, 3))  # (n, W, 2, W, 2)
    dofs = (2 * nodes[:, :, None] + np.arange(2)[None, None, :]).reshape(n, 2 * W)
    return _scatter_pairs(dofs, ke.reshape(n, 2 * W, 2 * W), grid.n_dofs)


def interpolate(basis, nodal):
    """Point values ``sum_v S_v u_v`` of an interleaved nodal vector."""
    nodes, S, _ = _safe(basis)
    u = np.asarray(nodal).reshape(-1, 2)[nodes]  # (n, W, 2)
    return np.einsum("pa,pad->pd", S, u)


def interpolate_gradient(basis, nodal):
    """Point gradients ``sum_v u_v (x) grad S_v`` of an interleaved nodal vector."""
    nodes, _, dS = _safe(basis)
    u = np.asarray(nodal).reshape(-1, 2)[nodes]
    return np.einsum("pai,paj->pij", u, dS)
