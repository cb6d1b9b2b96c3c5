"""CSV, JSON and legacy-VTK writers for run artifacts."""
from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .constitutive import yield_measure


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        if math.isnan(v):
            return "nan"
        return repr(v)
    return v


def write_csv(path, header, rows):
    """Write ``rows`` under ``header``; infinities become the string ``inf``."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(v) for v in r])
    return path


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else _fmt(v)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def write_summary(path, summary):
    path = Path(path)
    path.write_text(json.dumps(_jsonable(summary), indent=2, sort_keys=True) + "\n")
    return path


def point_scalars(points, displacement_error=None):
    """Default per-point fields for snapshots."""
    out = {
        "speed": np.linalg.norm(points.v, axis=1),
        "sigma_yy": points.sigma[:, 1, 1],
        "eps_p": points.eps_p,
        "yield_measure": yield_measure(points.kirchhoff()),
        "body_id": points.body_id.astype(float),
    }
    if displacement_error is not None:
        out["displacement_error"] = np.asarray(displacement_error, dtype=float)
    return out


def write_vtk_points(path, points, scalars=None, title="material points"):
    """Legacy ASCII POLYDATA: one vertex per material point plus point scalars."""
    x = np.asarray(points.x, dtype=float)
    n = len(x)
    scalars = point_scalars(points) if scalars is None else scalars
    lines = [
        "# vtk DataFile Version 2.0",
        title.replace("\n", " ")[:255],
        "ASCII",
        "DATASET POLYDATA",
        f"POINTS {n} double",
    ]
    lines += [f"{float(px)!r} {float(py)!r} 0.0" for px, py in x]
    lines.append(f"VERTICES {n} {2 * n}")
    lines += [f"1 {i}" for i in range(n)]
    lines.append(f"POINT_DATA {n}")
    for name, vals in scalars.items():
        vals = np.asarray(vals, dtype=float).reshape(n)
        lines.append(f"SCALARS {name} double 1")
        lines.append("LOOKUP_TABLE default")
        lines += [repr(float(v)) for v in vals]
    vel = np.asarray(points.v, dtype=float)
    lines.append("VECTORS velocity double")
    lines += [f"{float(vx)!r} {float(vy)!r} 0.0" for vx, vy in vel]
    path = Path(path)
    path.write_text("\n".join(lines) + "\n")
    return path


def ghost_edge_rows(grid, step, face_set):
    """Rows ``step, face, plus, minus, nx, ny, x0, y0, x1, y1`` for a face set."""
    faces = np.asarray(face_set.faces if hasattr(face_set, "faces") else face_set, dtype=np.int64)
    rows = []
    for f in faces:
        a, b = grid.face_topology[f]
        (x0, y0), (x1, y1) = grid.node_coords[a], grid.node_coords[b]
        plus, minus = grid.face_connectivity[f]
        nx, ny = grid.face_normals[f]
        rows.append((step, int(f), int(plus), int(minus), float(nx), float(ny), float(x0), float(y0), float(x1), float(y1)))
    return rows


GHOST_EDGE_HEADER = ("step", "face", "plus", "minus", "nx", "ny", "x0", "y0", "x1", "y1")
