"""Material point state, materials, and point generators.

Point state is held as a structure of arrays so that basis evaluation,
constitutive updates and assembly vectorise over points.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, fields

import numpy as np

from .errors import ConfigurationError, PointCloudParseError

POINT_CLOUD_HEADER = ("x", "y", "V0", "lx", "ly", "body_id", "material_id")


@dataclass(frozen=True)
class Material:
    """Isotropic Hencky material; ``yield_stress`` of ``None`` means elastic.

    ``yield_stress`` is the deviatoric yield stress, i.e. the limit on
    ``sqrt(2 J2)`` of the Kirchhoff stress.
    """

    E: float
    nu: float
    rho0: float
    yield_stress: float | None = None

    def __post_init__(self):
        if self.E < 0:
            raise ConfigurationError(f"Young's modulus must be >= 0, got {self.E}")
        if not -1.0 < self.nu < 0.5:
            raise ConfigurationError(f"Poisson's ratio must lie in (-1, 0.5), got {self.nu}")
        if self.rho0 < 0:
            raise ConfigurationError(f"density must be >= 0, got {self.rho0}")
        if self.yield_stress is not None and not self.yield_stress > 0:
            raise ConfigurationError(f"yield stress must be positive, got {self.yield_stress}")

    @property
    def lam(self):
        return self.E * self.nu / ((1 + self.nu) * (1 - 2 * self.nu))

    @property
    def mu(self):
        return self.E / (2 * (1 + self.nu))


@dataclass(eq=False)
class MaterialPoints:
    body_id: np.ndarray
    material_id: np.ndarray
    x: np.ndarray
    x0: np.ndarray
    V0: np.ndarray
    V: np.ndarray
    m: np.ndarray
    v: np.ndarray
    F: np.ndarray
    eps_e: np.ndarray  # (n, 3, 3) elastic log strain, in-plane block + out-of-plane
    sigma: np.ndarray  # (n, 3, 3) Cauchy stress
    half_lengths: np.ndarray
    half_lengths0: np.ndarray
    plastic_work: np.ndarray  # cumulative dissipation per point (J)
    eps_p: np.ndarray  # accumulated plastic log-strain norm
    point_force: np.ndarray  # (n, 2) reference point loads (N)

    def __len__(self):
        return len(self.m)

    @classmethod
    def create(cls, x, V0, half_lengths, rho0, body_id=0, material_id=0):
        x = np.asarray(x, dtype=float).reshape(-1, 2)
        n = len(x)
        V0 = np.broadcast_to(np.asarray(V0, dtype=float), (n,)).copy()
        hl = np.broadcast_to(np.asarray(half_lengths, dtype=float), (n, 2)).copy()
        rho0 = np.broadcast_to(np.asarray(rho0, dtype=float), (n,))
        return cls(
            body_id=np.broadcast_to(np.asarray(body_id, dtype=np.int64), (n,)).copy(),
            material_id=np.broadcast_to(np.asarray(material_id, dtype=np.int64), (n,)).copy(),
            x=x.copy(),
            x0=x.copy(),
            V0=V0,
            V=V0.copy(),
            m=rho0 * V0,
            v=np.zeros((n, 2)),
            F=np.tile(np.eye(2), (n, 1, 1)),
            eps_e=np.zeros((n, 3, 3)),
            sigma=np.zeros((n, 3, 3)),
            half_lengths=hl,
            half_lengths0=hl.copy(),
            plastic_work=np.zeros(n),
            eps_p=np.zeros(n),
            point_force=np.zeros((n, 2)),
        )

    @classmethod
    def concatenate(cls, sets):
        sets = list(sets)
        return cls(**{f.name: np.concatenate([getattr(s, f.name) for s in sets]) for f in fields(cls)})

    def copy(self):
        return MaterialPoints(**{f.name: getattr(self, f.name).copy() for f in fields(self)})

    @property
    def displacement(self):
        return self.x - self.x0

    def kirchhoff(self):
        return np.linalg.det(self.F)[:, None, None] * self.sigma


def _check_rect(rect):
    (x0, y0), (x1, y1) = np.asarray(rect, dtype=float).reshape(2, 2)
    if not (x1 > x0 and y1 > y0):
        raise ConfigurationError(f"degenerate rectangle {rect!r}")
    return x0, y0, x1, y1


def generate_rect(rect, n_per_axis, material, body_id=0, material_id=0):
    """Equally spaced points tiling ``rect = ((x0, y0), (x1, y1))``.

    ``n_per_axis`` is an int or a pair; each point's GIMP domain is its own
    tile, so domains cover the rectangle without gaps or overlaps.
    """
    x0, y0, x1, y1 = _check_rect(rect)
    nx, ny = np.broadcast_to(np.asarray(n_per_axis, dtype=np.int64), (2,))
    if nx < 1 or ny < 1:
        raise ConfigurationError("need at least one point per axis")
    dx, dy = (x1 - x0) / nx, (y1 - y0) / ny
    px = x0 + dx * (np.arange(nx) + 0.5)
    py = y0 + dy * (np.arange(ny) + 0.5)
    X, Y = np.meshgrid(px, py)
    pts = np.stack([X.ravel(), Y.ravel()], axis=1)
    return MaterialPoints.create(
        pts, dx * dy, (dx / 2, dy / 2), material.rho0, body_id=body_id, material_id=material_id
    )


def generate_block(rect, grid, points_per_cell_axis, material, body_id=0, material_id=0):
    """Fill every grid cell covered by ``rect`` with ``n x n`` equally spaced points."""
    x0, y0, x1, y1 = _check_rect(rect)
    n = int(points_per_cell_axis)
    if n < 1:
        raise ConfigurationError("points_per_cell_axis must be >= 1")
    rel = (np.array([x0, y0, x1, y1]) - np.tile(grid.origin, 2)) / grid.h
    k = np.rint(rel)
    if np.any(np.abs(rel - k) > 1e-9):
        raise ConfigurationError(f"rectangle {rect!r} is not aligned with the grid lines")
    i0, j0, i1, j1 = k.astype(np.int64)
    if i0 < 0 or j0 < 0 or i1 > grid.nx or j1 > grid.ny:
        raise ConfigurationError(f"rectangle {rect!r} extends beyond the grid")
    sub = (np.arange(n) + 0.5) / n
    cx = (np.arange(i0, i1)[:, None] + sub[None, :]).ravel()
    cy = (np.arange(j0, j1)[:, None] + sub[None, :]).ravel()
    X, Y = np.meshgrid(cx, cy)
    pts = grid.origin + grid.h * np.stack([X.ravel(), Y.ravel()], axis=1)
    d = grid.h / n
    return MaterialPoints.create(
        pts, d * d, (d / 2, d / 2), material.rho0, body_id=body_id, material_id=material_id
    )


def import_point_cloud(path, materials):
    """Load the CSV point-cloud format ``x,y,V0,lx,ly,body_id,material_id``.

    Blank lines and lines starting with ``#`` are ignored.  Mass is
    ``rho0 * V0`` of the referenced material.
    """
    rows = []
    header_seen = False
    with open(path, newline="", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            cells = [c.strip() for c in next(csv.reader([stripped]))]
            if not header_seen:
                if tuple(cells) != POINT_CLOUD_HEADER:
                    raise PointCloudParseError(
                        f"expected header {','.join(POINT_CLOUD_HEADER)}", lineno
                    )
                header_seen = True
                continue
            if len(cells) != len(POINT_CLOUD_HEADER):
                raise PointCloudParseError(f"expected 7 columns, got {len(cells)}", lineno)
            try:
                x, y, V0, lx, ly = (float(c) for c in cells[:5])
                body, mat = int(cells[5]), int(cells[6])
            except ValueError as exc:
                raise PointCloudParseError(str(exc), lineno) from exc
            if not V0 > 0:
                raise PointCloudParseError(f"non-positive volume {V0}", lineno)
            if not (lx > 0 and ly > 0):
                raise PointCloudParseError("non-positive domain half-length", lineno)
            if not 0 <= mat < len(materials):
                raise PointCloudParseError(f"unknown material id {mat}", lineno)
            rows.append((x, y, V0, lx, ly, body, mat))
    if not rows:
        return MaterialPoints.create(np.zeros((0, 2)), np.zeros(0), np.zeros((0, 2)), np.zeros(0))
    a = np.array(rows)
    mat = a[:, 6].astype(np.int64)
    rho = np.array([materials[k].rho0 for k in mat])
    return MaterialPoints.create(
        a[:, :2], a[:, 2], a[:, 3:5], rho, body_id=a[:, 5].astype(np.int64), material_id=mat
    )


def write_point_cloud(path, points):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(POINT_CLOUD_HEADER)
        for k in range(len(points)):
            w.writerow(
                [
                    repr(float(points.x[k, 0])),
                    repr(float(points.x[k, 1])),
                    repr(float(points.V0[k])),
                    repr(float(points.half_lengths[k, 0])),
                    repr(float(points.half_lengths[k, 1])),
                    int(points.body_id[k]),
                    int(points.material_id[k]),
                ]
            )
