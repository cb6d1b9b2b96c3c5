"""Regular bi-linear quadrilateral background grid and its face skeleton.

Node ``(i, j)`` has id ``i + j*(nx+1)``; element ``(i, j)`` has id ``i + j*nx``.
Element topology is counter-clockwise from the lower-left corner.  Global
degrees of freedom are interleaved, ``2*node + axis``.

Internal faces are numbered vertical faces first (between elements
``(i, j)`` and ``(i+1, j)``), then horizontal faces (between ``(i, j)`` and
``(i, j+1)``).  The "+" element of a face is always the one with the lower
index along the face normal, so the normal points from "+" into "-".
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError

# 2-point Gauss-Legendre rule on [-1, 1]
_GAUSS_XI = np.array([-1.0, 1.0]) / np.sqrt(3.0)
_GAUSS_W = np.array([1.0, 1.0])

_AXES = {"x": 0, "y": 1}


@dataclass(frozen=True)
class FaceGeometry:
    face: int
    normal: np.ndarray
    length: float
    points: np.ndarray  # (n_gp, 2) global coordinates
    weights: np.ndarray  # reference-interval weights
    jacobian: np.ndarray  # surface Jacobian determinant per point


@dataclass(eq=False)
class BackgroundGrid:
    origin: np.ndarray
    h: float
    nx: int
    ny: int
    node_coords: np.ndarray
    element_topology: np.ndarray
    face_connectivity: np.ndarray  # (n_faces, 2): plus, minus element
    face_topology: np.ndarray  # (n_faces, 2) node ids
    face_normals: np.ndarray  # (n_faces, 2)
    element_faces: np.ndarray  # (n_elements, 4) face ids, -1 on the grid boundary
    fixed_dofs: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))

    @property
    def n_nodes(self):
        return (self.nx + 1) * (self.ny + 1)

    @property
    def n_elements(self):
        return self.nx * self.ny

    @property
    def n_faces(self):
        return len(self.face_connectivity)

    @property
    def n_dofs(self):
        return 2 * self.n_nodes

    @property
    def upper(self):
        return self.origin + self.h * np.array([self.nx, self.ny])

    def node_id(self, i, j):
        return np.asarray(i) + np.asarray(j) * (self.nx + 1)

    def element_id(self, i, j):
        return np.asarray(i) + np.asarray(j) * self.nx

    def element_ij(self, e):
        e = np.asarray(e)
        return e % self.nx, e // self.nx

    def element_centroids(self, elements=None):
        if elements is None:
            elements = np.arange(self.n_elements)
        i, j = self.element_ij(elements)
        return self.origin + self.h * np.stack([i + 0.5, j + 0.5], axis=-1)

    def fixed_mask(self):
        mask = np.zeros(self.n_dofs, dtype=bool)
        mask[self.fixed_dofs] = True
        return mask

    def locate_element(self, x):
        """Element whose closed box contains ``x``, or ``None``.

        Points on an interior grid line go to the higher-index element.
        """
        e = self.locate_elements(np.asarray(x, dtype=float).reshape(1, 2))[0]
        return None if e < 0 else int(e)

    def locate_elements(self, x):
        """Vectorised :meth:`locate_element`; returns -1 outside the grid."""
        x = np.asarray(x, dtype=float)
        rel = (x - self.origin) / self.h
        ij = np.floor(rel).astype(np.int64)
        # the far closed edge of the grid belongs to the last element
        ij[:, 0] = np.where(rel[:, 0] == self.nx, self.nx - 1, ij[:, 0])
        ij[:, 1] = np.where(rel[:, 1] == self.ny, self.ny - 1, ij[:, 1])
        inside = (
            (ij[:, 0] >= 0) & (ij[:, 0] < self.nx) & (ij[:, 1] >= 0) & (ij[:, 1] < self.ny)
        )
        return np.where(inside, ij[:, 0] + ij[:, 1] * self.nx, -1)

    def face_geometry(self, face):
        if not 0 <= face < self.n_faces:
            raise IndexError(f"face {face} out of range [0, {self.n_faces})")
        a, b = self.node_coords[self.face_topology[face]]
        mid = 0.5 * (a + b)
        half = 0.5 * (b - a)
        pts = mid + _GAUSS_XI[:, None] * half
        return FaceGeometry(
            face=int(face),
            normal=self.face_normals[face].copy(),
            length=self.h,
            points=pts,
            weights=_GAUSS_W.copy(),
            jacobian=np.full(len(_GAUSS_XI), self.h / 2.0),
        )

    def face_quadrature(self, faces):
        """Gauss points (n_f, n_gp, 2) and weight*Jacobian (n_gp,) for many faces."""
        faces = np.asarray(faces, dtype=np.int64)
        nodes = self.node_coords[self.face_topology[faces]]
        mid = 0.5 * (nodes[:, 0] + nodes[:, 1])
        half = 0.5 * (nodes[:, 1] - nodes[:, 0])
        pts = mid[:, None, :] + _GAUSS_XI[None, :, None] * half[:, None, :]
        return pts, _GAUSS_W * (self.h / 2.0)


def _parse_dirichlet(spec, origin, h, nx, ny):
    """Translate grid-line / node constraints into fixed dof ids.

    Each entry is a mapping with exactly one of ``x`` (a vertical grid line),
    ``y`` (a horizontal grid line) or ``node`` (a coordinate pair), plus
    ``fix``: a list of axes (``"x"``, ``"y"``).  All constraints are
    homogeneous.
    """
    fixed = []
    for entry in spec or ():
        keys = [k for k in ("x", "y", "node") if k in entry]
        if len(keys) != 1:
            raise ConfigurationError(f"dirichlet entry needs exactly one of x/y/node: {entry!r}")
        try:
            axes = [_AXES[a] for a in entry.get("fix", ("x", "y"))]
        except KeyError as exc:
            raise ConfigurationError(f"unknown axis in {entry!r}") from exc
        key = keys[0]
        if key == "node":
            rel = (np.asarray(entry["node"], dtype=float) - origin) / h
            ij = np.rint(rel)
            if np.any(np.abs(rel - ij) > 1e-9) or np.any(ij < 0) or ij[0] > nx or ij[1] > ny:
                raise ConfigurationError(f"constraint {entry!r} is not on a grid node")
            nodes = [int(ij[0] + ij[1] * (nx + 1))]
        else:
            ax = _AXES[key]
            rel = (float(entry[key]) - origin[ax]) / h
            k = int(round(rel))
            n_line = nx if ax == 0 else ny
            if abs(rel - k) > 1e-9 or not 0 <= k <= n_line:
                raise ConfigurationError(f"constraint {entry!r} is not on a grid line")
            if ax == 0:
                nodes = [k + j * (nx + 1) for j in range(ny + 1)]
            else:
                nodes = [i + k * (nx + 1) for i in range(nx + 1)]
        fixed.extend(2 * n + a for n in nodes for a in axes)
    return np.unique(np.asarray(fixed, dtype=np.int64))


def build_grid(origin, h, nx, ny, dirichlet_spec=None):
    """Build a regular grid of ``nx`` by ``ny`` square elements of side ``h``."""
    if not h > 0:
        raise ConfigurationError(f"element size must be positive, got {h}")
    if int(nx) != nx or int(ny) != ny or nx < 1 or ny < 1:
        raise ConfigurationError(f"element counts must be positive integers, got {nx}, {ny}")
    nx, ny, h = int(nx), int(ny), float(h)
    origin = np.asarray(origin, dtype=float).reshape(2)

    ii, jj = np.meshgrid(np.arange(nx + 1), np.arange(ny + 1))
    node_coords = origin + h * np.stack([ii.ravel(), jj.ravel()], axis=1).astype(float)

    ei, ej = np.meshgrid(np.arange(nx), np.arange(ny))
    ei, ej = ei.ravel(), ej.ravel()
    n0 = ei + ej * (nx + 1)
    topo = np.stack([n0, n0 + 1, n0 + nx + 2, n0 + nx + 1], axis=1)

    conn, ftopo, normals = [], [], []
    # vertical faces: + is the left element
    vi, vj = np.meshgrid(np.arange(nx - 1), np.arange(ny))
    vi, vj = vi.ravel(), vj.ravel()
    conn.append(np.stack([vi + vj * nx, vi + 1 + vj * nx], axis=1))
    na = (vi + 1) + vj * (nx + 1)
    ftopo.append(np.stack([na, na + nx + 1], axis=1))
    normals.append(np.tile([1.0, 0.0], (len(vi), 1)))
    # horizontal faces: + is the lower element
    hi, hj = np.meshgrid(np.arange(nx), np.arange(ny - 1))
    hi, hj = hi.ravel(), hj.ravel()
    conn.append(np.stack([hi + hj * nx, hi + (hj + 1) * nx], axis=1))
    na = hi + (hj + 1) * (nx + 1)
    ftopo.append(np.stack([na, na + 1], axis=1))
    normals.append(np.tile([0.0, 1.0], (len(hi), 1)))

    conn = np.concatenate(conn).astype(np.int64).reshape(-1, 2)
    ftopo = np.concatenate(ftopo).astype(np.int64).reshape(-1, 2)
    normals = np.concatenate(normals).reshape(-1, 2)

    # element -> faces, ordered bottom, right, top, left
    n_v = len(vi)
    efaces = -np.ones((nx * ny, 4), dtype=np.int64)
    fid = np.arange(len(conn))
    efaces[conn[:n_v, 0], 1] = fid[:n_v]
    efaces[conn[:n_v, 1], 3] = fid[:n_v]
    efaces[conn[n_v:, 0], 2] = fid[n_v:]
    efaces[conn[n_v:, 1], 0] = fid[n_v:]

    return BackgroundGrid(
        origin=origin,
        h=h,
        nx=nx,
        ny=ny,
        node_coords=node_coords,
        element_topology=topo.astype(np.int64),
        face_connectivity=conn,
        face_topology=ftopo,
        face_normals=normals,
        element_faces=efaces,
        fixed_dofs=_parse_dirichlet(dirichlet_spec, origin, h, nx, ny),
    )
