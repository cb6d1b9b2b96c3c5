"""sMPM and GIMPM basis functions.

Contributions are stored per point in fixed-width arrays; unused slots carry
node id -1 and zero values.  Only exact zeros are ever dropped, so very small
basis values from tiny domain/grid overlaps survive untouched.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DivergenceError, OutOfDomainError

METHODS = ("smpm", "gimp")


@dataclass(frozen=True)
class BasisContribution:
    point: int
    nodes: np.ndarray
    S: np.ndarray
    gradS: np.ndarray


@dataclass(eq=False)
class Basis:
    nodes: np.ndarray  # (n, W), -1 for unused slots
    S: np.ndarray  # (n, W)
    dS: np.ndarray  # (n, W, 2) spatial gradient
    elements: np.ndarray  # (n, We) elements each point is active in, -1 padded

    @property
    def n_points(self):
        return self.nodes.shape[0]

    def contribution(self, p):
        keep = (self.nodes[p] >= 0) & ((self.S[p] != 0) | np.any(self.dS[p] != 0, axis=-1))
        return BasisContribution(int(p), self.nodes[p][keep], self.S[p][keep], self.dS[p][keep])

    def active_elements(self, mask=None):
        el = self.elements if mask is None else self.elements[mask]
        el = el[el >= 0]
        return np.unique(el)

    def active_nodes(self):
        n = self.nodes[self.nodes >= 0]
        return np.unique(n)

    def subset(self, mask):
        return Basis(self.nodes[mask], self.S[mask], self.dS[mask], self.elements[mask])


def gimp_1d(d, l, h):
    """uGIMP value and derivative for node-to-point offset ``d = x_p - x_v``.

    The hat function is convolved with a unit characteristic function of
    half-width ``l``.  Evaluated through the tail integral of the hat so that
    tiny overlaps produce tiny (not cancelled) values.  Valid for any ``l > 0``.
    """
    d = np.asarray(d, dtype=float)
    l = np.broadcast_to(np.asarray(l, dtype=float), d.shape)
    sgn = np.where(d < 0, -1.0, 1.0)
    a = np.abs(d)

    def tail(s):
        # integral of the hat from s to +inf
        return np.where(
            s >= h,
            0.0,
            np.where(
                s >= 0,
                (h - s) ** 2 / (2 * h),
                np.where(s > -h, h - (h + s) ** 2 / (2 * h), h),
            ),
        )

    def hat(s):
        return np.maximum(0.0, 1.0 - np.abs(s) / h)

    S = (tail(a - l) - tail(a + l)) / (2 * l)
    dS = sgn * (hat(a + l) - hat(a - l)) / (2 * l)
    return S, dS


def smpm_basis(grid, x):
    """Bi-linear shape functions of each point's containing element."""
    x = np.asarray(x, dtype=float).reshape(-1, 2)
    el = grid.locate_elements(x)
    if np.any(el < 0):
        bad = int(np.flatnonzero(el < 0)[0])
        raise OutOfDomainError(f"material point {bad} at {x[bad].tolist()} is outside the grid")
    nodes = grid.element_topology[el]
    xv = grid.node_coords[nodes]  # (n, 4, 2)
    d = x[:, None, :] - xv
    h = grid.h
    # within the containing element |d| <= h, so the hat is the bilinear function
    nx_, dnx = 1.0 - np.abs(d[..., 0]) / h, -np.sign(d[..., 0]) / h
    ny_, dny = 1.0 - np.abs(d[..., 1]) / h, -np.sign(d[..., 1]) / h
    # sign(0) = 0 would lose the gradient for a point sitting on a node line;
    # take the one-sided derivative from inside the element instead
    ex = np.array([-1.0, 1.0, 1.0, -1.0])
    ey = np.array([-1.0, -1.0, 1.0, 1.0])
    dnx = np.where(d[..., 0] == 0, ex / h, dnx)
    dny = np.where(d[..., 1] == 0, ey / h, dny)
    S = nx_ * ny_
    dS = np.stack([dnx * ny_, nx_ * dny], axis=-1)
    return Basis(nodes=nodes.astype(np.int64), S=S, dS=dS, elements=el[:, None].astype(np.int64))


def gimpm_basis(grid, x, half_lengths):
    """uGIMP basis for axis-aligned point domains.

    A point is active in every element its domain overlaps with positive
    area; all nodes of those elements receive a contribution.
    """
    x = np.asarray(x, dtype=float).reshape(-1, 2)
    hl = np.asarray(half_lengths, dtype=float).reshape(-1, 2)
    n = len(x)
    h = grid.h
    tol = 1e-12 * h
    lower = x - hl
    upper = x + hl
    outside = np.any(lower < grid.origin - tol, axis=1) | np.any(upper > grid.upper + tol, axis=1)
    if np.any(outside):
        bad = int(np.flatnonzero(outside)[0])
        raise OutOfDomainError(
            f"domain of material point {bad} at {x[bad].tolist()} extends beyond the grid"
        )
    if n == 0:
        return Basis(
            np.zeros((0, 0), np.int64), np.zeros((0, 0)), np.zeros((0, 0, 2)), np.zeros((0, 0), np.int64)
        )
    rel_lo = (lower - grid.origin) / h
    rel_hi = (upper - grid.origin) / h
    i0 = np.clip(np.floor(rel_lo).astype(np.int64), 0, [grid.nx - 1, grid.ny - 1])
    i1 = np.clip(np.ceil(rel_hi).astype(np.int64), 1, [grid.nx, grid.ny])
    w = int(np.max(i1[:, 0] - i0[:, 0])) + 1
    wy = int(np.max(i1[:, 1] - i0[:, 1])) + 1

    kx = i0[:, 0:1] + np.arange(w)[None, :]  # (n, w)
    ky = i0[:, 1:2] + np.arange(wy)[None, :]
    vx = kx <= i1[:, 0:1]
    vy = ky <= i1[:, 1:2]
    Sx, dSx = gimp_1d(x[:, 0:1] - (grid.origin[0] + h * kx), hl[:, 0:1], h)
    Sy, dSy = gimp_1d(x[:, 1:2] - (grid.origin[1] + h * ky), hl[:, 1:2], h)
    Sx, dSx = np.where(vx, Sx, 0.0), np.where(vx, dSx, 0.0)
    Sy, dSy = np.where(vy, Sy, 0.0), np.where(vy, dSy, 0.0)

    S = (Sy[:, :, None] * Sx[:, None, :]).reshape(n, -1)
    dS = np.stack(
        [(Sy[:, :, None] * dSx[:, None, :]).reshape(n, -1), (dSy[:, :, None] * Sx[:, None, :]).reshape(n, -1)],
        axis=-1,
    )
    valid = (vy[:, :, None] & vx[:, None, :]).reshape(n, -1)
    nodes = (kx[:, None, :] + ky[:, :, None] * (grid.nx + 1)).reshape(n, -1)
    nodes = np.where(valid, nodes, -1)

    # overlapped elements: one fewer per axis than nodes
    ex = kx[:, : w - 1] if w > 1 else kx[:, :0]
    ey = ky[:, : wy - 1] if wy > 1 else ky[:, :0]
    evx = ex < i1[:, 0:1]
    evy = ey < i1[:, 1:2]
    elements = (ex[:, None, :] + ey[:, :, None] * grid.nx).reshape(n, -1)
    elements = np.where((evy[:, :, None] & evx[:, None, :]).reshape(n, -1), elements, -1)
    return Basis(nodes=nodes.astype(np.int64), S=S, dS=dS, elements=elements.astype(np.int64))


def evaluate(grid, points, method):
    if method == "smpm":
        return smpm_basis(grid, points.x)
    if method == "gimp":
        return gimpm_basis(grid, points.x, points.half_lengths)
    raise ValueError(f"unknown basis method {method!r}; expected one of {METHODS}")


def stretch_diagonal(F):
    """Diagonal of the right stretch tensor ``U = sqrt(F^T F)`` for 2x2 ``F``."""
    F = np.asarray(F, dtype=float)
    C = np.einsum("...ki,...kj->...ij", F, F)
    detC = C[..., 0, 0] * C[..., 1, 1] - C[..., 0, 1] * C[..., 1, 0]
    trC = C[..., 0, 0] + C[..., 1, 1]
    if np.any(~(detC > 0)) or np.any(~(trC > 0)):
        raise DivergenceError("F^T F is not positive definite")
    sdet = np.sqrt(detC)
    # Cayley-Hamilton: U = (C + sqrt(det C) I) / sqrt(tr C + 2 sqrt(det C))
    denom = np.sqrt(trC + 2.0 * sdet)
    return np.stack([(C[..., 0, 0] + sdet) / denom, (C[..., 1, 1] + sdet) / denom], axis=-1)


def update_domains(points):
    points.half_lengths = stretch_diagonal(points.F) * points.half_lengths0
