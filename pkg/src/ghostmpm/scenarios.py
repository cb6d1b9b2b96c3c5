"""Build and run scenarios described by a :class:`~ghostmpm.config.ScenarioConfig`.

``run_scenario`` returns a :class:`ScenarioResult` holding the summary and
every table it produced, and writes them to disk when an output directory
is given.  Tables are ``(header, rows)`` pairs.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import assembly as asm
from . import output
from .basis import evaluate
from .config import ScenarioConfig
from .constitutive import return_map, yield_measure
from .diagnostics import (
    cfl_number,
    condition_number,
    displacement_error_stretch,
    elastica_tip,
    normalised_mean_energy_error,
    stress_error_column,
)
from .errors import ConfigurationError, DivergenceError
from .explicit import ExplicitConfig, run_explicit, setup_grid_problem
from .ghost import assemble_jg, identify_boundary_edges
from .grid import build_grid
from .implicit import run_implicit
from .mpoints import MaterialPoints, generate_block, generate_rect, import_point_cloud

log = logging.getLogger(__name__)

ENERGY_HEADER = ("step", "t", "W_kin", "W_strain", "W_plastic", "energy_error")
EXPLICIT_DIAG_HEADER = ("step", "t", "n_free", "n_ghost_faces", "max_nodal_velocity", "max_yield_measure", "diverged")
NEWTON_HEADER = ("step", "load_factor", "iterations", "converged", "final_residual", "residuals", "n_ghost_faces", "tip_u", "tip_v")
IMPLICIT_DIAG_HEADER = ("step", "load_factor", "converged", "n_ghost_faces", "tip_u", "tip_v")
SWEEP_HEADER = (
    "basis", "a_over_h", "kappa_M", "kappa_Mstab", "kappa_Mlumped",
    "kappa_K", "kappa_Kstab", "C_CFL", "C_CFL_stab",
)
VELOCITY_HEADER = ("step", "a", "err_ghost", "err_lumped", "err_consistent", "kappa_M", "kappa_Mstab", "kappa_Mlumped")


@dataclass
class ScenarioResult:
    summary: dict
    tables: dict = field(default_factory=dict)
    points: MaterialPoints | None = None


# -- construction ------------------------------------------------------------

def grid_from_config(cfg: ScenarioConfig):
    g = cfg.grid
    return build_grid(g.get("origin", (0.0, 0.0)), float(g["h"]), g["nx"], g["ny"], g.get("dirichlet"))


def _body_points(cfg, k, body, grid, materials):
    mat_id = int(body.get("material", 0))
    body_id = int(body.get("body_id", k))
    kind = body["generator"]
    if kind == "rect":
        pts = generate_rect(body["rect"], body.get("points_per_axis", 2), materials[mat_id], body_id, mat_id)
    elif kind == "block":
        pts = generate_block(body["rect"], grid, body.get("points_per_cell", 2), materials[mat_id], body_id, mat_id)
    else:
        pts = import_point_cloud(cfg.resolve(body["path"]), materials)
    if "rotate" in body:
        # rigid rotation of the point layout (degrees) about the centroid; domains stay axis-aligned
        t = np.radians(float(body["rotate"]))
        R = np.array([[np.cos(t), -np.sin(t)], [np.sin(t), np.cos(t)]])
        c = pts.x.mean(axis=0)
        pts.x = (pts.x - c) @ R.T + c
        pts.x0 = pts.x.copy()
    if "velocity" in body:
        pts.v[:] = np.asarray(body["velocity"], dtype=float)
    if "expansion" in body:
        e = body["expansion"]
        pts.v = float(e.get("rate", 1.0)) * (pts.x - np.asarray(e.get("centre", (0.0, 0.0)), dtype=float))
    return pts


def tip_pair(points, body_id=None):
    """The two points at the largest ``x`` closest to mid-depth, one either side."""
    sel = np.arange(len(points)) if body_id is None else np.flatnonzero(points.body_id == body_id)
    x = points.x0[sel]
    end = sel[np.isclose(x[:, 0], x[:, 0].max())]
    y = points.x0[end, 1]
    mid = 0.5 * (y.min() + y.max())
    below, above = end[y < mid], end[y > mid]
    if not len(below) or not len(above):
        raise ConfigurationError("tip_pair needs points on both sides of the mid-depth")
    return np.array([below[np.argmax(points.x0[below, 1])], above[np.argmin(points.x0[above, 1])]])


def apply_loads(points, loads):
    """Attach reference point loads; returns the loaded point ids."""
    loaded = []
    for k, load in enumerate(loads):
        force = np.asarray(load.get("force", (0.0, 0.0)), dtype=float)
        sel = load.get("select")
        if sel == "tip_pair":
            ids = tip_pair(points, load.get("body"))
        elif sel == "nearest":
            at = np.asarray(load["at"], dtype=float)
            ids = np.array([int(np.argmin(np.linalg.norm(points.x0 - at, axis=1)))])
        else:
            raise ConfigurationError(f"loads[{k}]: select must be tip_pair or nearest")
        points.point_force[ids] += force / len(ids)
        loaded.extend(int(i) for i in ids)
    return np.array(loaded, dtype=np.int64)


def build_problem(cfg: ScenarioConfig):
    grid = grid_from_config(cfg)
    materials = cfg.material_objects()
    pts = MaterialPoints.concatenate(
        [_body_points(cfg, k, b, grid, materials) for k, b in enumerate(cfg.bodies)]
    )
    loaded = apply_loads(pts, cfg.loads)
    return grid, materials, pts, loaded


# -- sweeps ------------------------------------------------------------------

def _elastic_tangent(materials, points):
    lam = np.array([m.lam for m in materials])[points.material_id]
    mu = np.array([m.mu for m in materials])[points.material_id]
    n = len(points)
    res = return_map(lam, mu, np.full(n, np.inf), np.tile(np.eye(2), (n, 1, 1)), np.zeros((n, 3, 3)), np.ones(n))
    return res.a


def conditioning_row(grid, points, materials, basis_name, gamma_M, gamma_k, with_mass=True):
    """Condition and CFL numbers of one configuration (reduced, dense)."""
    b = evaluate(grid, points, basis_name)
    active = np.unique(np.concatenate([b.active_elements(points.body_id == k) for k in np.unique(points.body_id)]))
    dm = asm.DofMap.build(grid.n_dofs, np.unique(grid.element_topology[active]), grid.fixed_mask())
    faces = identify_boundary_edges(grid, {0: active})
    J = dm.reduce_matrix(assemble_jg(grid, faces)).toarray()
    K = dm.reduce_matrix(asm.assemble_stiffness(grid, b, _elastic_tangent(materials, points), points.V)).toarray()
    Ks = K + gamma_k * J
    row = {"kappa_K": condition_number(K), "kappa_Kstab": condition_number(Ks)}
    if with_mass:
        M = dm.reduce_matrix(asm.assemble_mass(grid, b, points.m)).toarray()
        ML = dm.reduce_vector(asm.assemble_lumped_mass(grid, b, points.m))
        Ms = M + gamma_M * J
        row.update(
            kappa_M=condition_number(M),
            kappa_Mstab=condition_number(Ms),
            kappa_Mlumped=condition_number(np.diag(ML)),
            C_CFL=cfl_number(K, M, grid.h),
            C_CFL_stab=cfl_number(Ks, Ms, grid.h),
        )
    return row


def translating_domain_sweep(grid, points, materials, n_positions, displacement, bases=("gimp",), gamma_M=None, gamma_k=None):
    """Move ``points`` rigidly by ``displacement`` in ``n_positions`` equal increments.

    One row per basis and position, recorded after each increment; the
    translation is accumulated so the positions carry the same rounding a
    time-stepped translation would.
    """
    gamma_M = 0.25 * max(m.rho0 for m in materials) if gamma_M is None else gamma_M
    gamma_k = max(m.E for m in materials) if gamma_k is None else gamma_k
    d = np.asarray(displacement, dtype=float) / n_positions
    nd = np.linalg.norm(d)
    rows = []
    for basis_name in bases:
        pts = points.copy()
        for k in range(1, n_positions + 1):
            pts.x = pts.x + d
            r = conditioning_row(grid, pts, materials, basis_name, gamma_M, gamma_k)
            rows.append((basis_name, k * nd / grid.h) + tuple(r[c] for c in SWEEP_HEADER[2:]))
    return rows


def _map_error(grid, points, mode, gamma_M, v_exact):
    cfg = ExplicitConfig(dt=1.0, n_steps=1, mass_mode=mode, gamma_M=gamma_M)
    try:
        basis, dm, mop, _ = setup_grid_problem(grid, points, cfg)
        p = asm.assemble_point_forces(grid, basis, points.m[:, None] * points.v)
        v = mop.solve(dm.reduce_vector(p)).reshape(-1, 2)
    except DivergenceError:
        return np.inf
    return float(np.max(np.abs(v - v_exact)))


def velocity_map_sweep(grid, points, n_positions, displacement, velocity, gamma_M, conditioning=False):
    """Nodal velocity error of each mass treatment as a body translates rigidly."""
    pts = points.copy()
    v_exact = np.asarray(velocity, dtype=float)
    pts.v[:] = v_exact
    d = np.asarray(displacement, dtype=float) / n_positions
    rows = []
    for k in range(n_positions + 1):
        if k:
            pts.x = pts.x + d
        errs = [_map_error(grid, pts, m, gamma_M, v_exact) for m in ("ghost", "lumped", "consistent")]
        kap = [np.nan] * 3
        if conditioning:
            b = evaluate(grid, pts, "gimp")
            active = b.active_elements()
            dm = asm.DofMap.build(grid.n_dofs, np.unique(grid.element_topology[active]), grid.fixed_mask())
            M = dm.reduce_matrix(asm.assemble_mass(grid, b, pts.m)).toarray()
            J = dm.reduce_matrix(assemble_jg(grid, identify_boundary_edges(grid, {0: active}))).toarray()
            ML = dm.reduce_vector(asm.assemble_lumped_mass(grid, b, pts.m))
            kap = [condition_number(M), condition_number(M + gamma_M * J), condition_number(np.diag(ML))]
        rows.append((k, k * float(np.linalg.norm(d))) + tuple(errs) + tuple(kap))
    return rows


# -- time/load stepping ------------------------------------------------------

class _Writer:
    def __init__(self, out_dir, stride, dump_edges, grid):
        self.out = None if out_dir is None else Path(out_dir)
        self.stride = stride
        self.dump_edges = dump_edges
        self.grid = grid
        self.edge_rows = []
        if self.out is not None:
            self.out.mkdir(parents=True, exist_ok=True)

    def snapshot(self, step, points, scalars=None, force=False):
        if self.out is None or not self.stride:
            return
        if force or step % self.stride == 0:
            output.write_vtk_points(self.out / f"points_{step:05d}.vtk", points, scalars, title=f"step {step}")

    def edges(self, step, faces):
        if self.dump_edges and faces is not None:
            self.edge_rows.extend(output.ghost_edge_rows(self.grid, step, faces))


def _run_explicit_scenario(cfg, grid, materials, pts, writer):
    ecfg = cfg.explicit_config()
    v0 = pts.v.copy()
    stretching = any("expansion" in b for b in cfg.bodies)
    diag_rows = []
    ymax = [float(np.max(yield_measure(pts.kirchhoff()), initial=0.0))]

    def scalars(points, t):
        err = np.linalg.norm(points.x - points.x0 - t * v0, axis=1) if stretching else None
        return output.point_scalars(points, err)

    writer.snapshot(0, pts, scalars(pts, 0.0), force=True)

    def cb(k, points, info, row):
        ym = float(np.max(yield_measure(points.kirchhoff()), initial=0.0))
        ymax[0] = max(ymax[0], ym)
        diag_rows.append((k, info.t, info.n_free, info.n_ghost_faces, info.max_nodal_velocity, ym, 0))
        writer.snapshot(k, points, scalars(points, info.t))
        writer.edges(k, info.ghost_faces)

    res = run_explicit(grid, pts, materials, ecfg, callback=cb)
    if res.diverged_at is not None:
        diag_rows.append((res.diverged_at, res.diverged_at * ecfg.dt, 0, 0, np.nan, np.nan, 1))
    elif res.completed_steps and res.completed_steps % (writer.stride or 1):
        writer.snapshot(res.completed_steps, pts, scalars(pts, res.energy[-1].t), force=True)

    W0 = res.energy[0].W_kin + res.energy[0].W_strain
    energy_rows = [
        (k, r.t, r.W_kin, r.W_strain, r.W_plastic, r.W_kin + r.W_strain - W0) for k, r in enumerate(res.energy)
    ]
    last = res.energy[-1]
    summary = {
        "solver": "explicit",
        "completed_steps": res.completed_steps,
        "n_steps": ecfg.n_steps,
        "diverged_at": res.diverged_at,
        "message": res.message,
        "mass_mode": ecfg.mass_mode,
        "stress_order": ecfg.stress_order,
        "velocity_update": ecfg.velocity_update,
        "gamma_M": ecfg.gamma_M,
        "W0": W0,
        "final_energy": {"W_kin": last.W_kin, "W_strain": last.W_strain, "W_plastic": last.W_plastic},
        "normalised_mean_energy_error": normalised_mean_energy_error(res.energy) if W0 > 0 and len(res.energy) > 1 else None,
        "max_yield_measure": ymax[0],
        "plastic_work_monotone": bool(np.all(np.diff([r.W_plastic for r in res.energy]) >= 0)),
    }
    if stretching:
        summary["max_displacement_error"] = displacement_error_stretch(pts, last.t, v0)
    tables = {"energy": (ENERGY_HEADER, energy_rows), "diagnostics": (EXPLICIT_DIAG_HEADER, diag_rows)}
    return summary, tables


def _run_implicit_scenario(cfg, grid, materials, pts, loaded, writer):
    icfg = cfg.implicit_config()
    rows = []
    tip = []

    def tip_disp(points):
        if len(loaded) == 0:
            return (np.nan, np.nan)
        u = (points.x - points.x0)[loaded].mean(axis=0)
        return float(u[0]), float(u[1])

    def record(rep, points):
        tu, tv = tip_disp(points) if rep.converged else (np.nan, np.nan)
        rows.append((
            rep.step, rep.load_factor, rep.iterations, int(rep.converged),
            rep.residuals[-1] if rep.residuals else np.nan,
            ";".join(f"{r:.6e}" for r in rep.residuals), rep.n_ghost_faces, tu, tv,
        ))
        if rep.converged:
            tip.append((rep.load_factor, tu, tv))

    writer.snapshot(0, pts, force=True)

    def cb(k, points, rep):
        record(rep, points)
        writer.snapshot(k, points)
        writer.edges(k, rep.ghost_faces)

    res = run_implicit(grid, pts, materials, icfg, callback=cb)
    if res.failed_at is not None:
        record(res.reports[-1], pts)
    if res.completed_steps and res.completed_steps % (writer.stride or 1):
        writer.snapshot(res.completed_steps, pts, force=True)

    summary = {
        "solver": "implicit",
        "completed_steps": res.completed_steps,
        "n_steps": icfg.n_steps,
        "failed_at": res.failed_at,
        "final_stable_step": res.completed_steps,
        "total_iterations": res.total_iterations,
        "max_iterations": res.max_iterations,
        "ghost_enabled": icfg.ghost_enabled,
        "gamma_k": icfg.gamma_k if icfg.gamma_k is not None else max(m.E for m in materials),
        "message": res.reports[-1].message if res.reports else "",
    }
    if cfg.name == "column":
        # the base of the column sits on y = 0
        l0 = float(np.max(pts.x0[:, 1] + pts.half_lengths0[:, 1]))
        g = float(np.linalg.norm(icfg.gravity))
        rho0 = materials[int(pts.material_id[0])].rho0
        if res.completed_steps == icfg.n_steps:
            summary["stress_error"] = stress_error_column(pts, l0, g, rho0)
        summary["final_height"] = float(np.max(pts.x[:, 1] + pts.half_lengths[:, 1]))
        summary["l0"] = l0
    if len(loaded):
        summary["tip_history"] = tip
        if cfg.name == "beam":
            summary.update(beam_reference(pts, materials, loaded))
            if tip:
                summary["tip_displacement"] = list(tip[-1][1:])
    diag = [(r[0], r[1], r[3], r[6], r[7], r[8]) for r in rows]
    return summary, {"newton": (NEWTON_HEADER, rows), "diagnostics": (IMPLICIT_DIAG_HEADER, diag)}


def beam_reference(points, materials, loaded):
    """Inextensible elastica prediction for the end-loaded cantilever.

    Bending stiffness per unit thickness uses the plane-strain modulus
    ``E / (1 - nu^2)`` consistent with the plane-strain continuum model.
    """
    lo = points.x0 - points.half_lengths0
    hi = points.x0 + points.half_lengths0
    L = float(hi[:, 0].max() - lo[:, 0].min())
    d = float(hi[:, 1].max() - lo[:, 1].min())
    mat = materials[int(points.material_id[loaded[0]])]
    P = float(np.linalg.norm(points.point_force.sum(axis=0)))
    EI = mat.E / (1 - mat.nu**2) * d**3 / 12.0
    alpha = P * L**2 / EI
    theta, u, v = elastica_tip(alpha)
    return {"beam_length": L, "beam_depth": d, "elastica_alpha": alpha, "elastica_tip": [u * L, v * L], "elastica_rotation": theta}


# -- entry point -------------------------------------------------------------

def run_scenario(cfg: ScenarioConfig, output_dir=None, snapshot_stride=None, dump_ghost_edges=False):
    """Run ``cfg``; artifacts go to ``output_dir`` when given."""
    grid, materials, pts, loaded = build_problem(cfg)
    stride = snapshot_stride if snapshot_stride is not None else int(cfg.output.get("snapshot_stride", 0) or 0)
    writer = _Writer(output_dir, stride, dump_ghost_edges, grid)
    summary = {"scenario": cfg.name, "n_points": len(pts), "grid": {"h": grid.h, "nx": grid.nx, "ny": grid.ny}}
    tables = {}

    if cfg.solver_kind == "sweep":
        s = cfg.solver
        n = int(s.get("n_positions", 1000))
        disp = s.get("displacement", (1.0, 0.0))
        gamma_M = cfg.ghost.get("gamma_M")
        if cfg.name == "translating_body":
            gm = 0.25 * max(m.rho0 for m in materials) if gamma_M is None else float(gamma_M)
            rows = velocity_map_sweep(grid, pts, n, disp, s.get("velocity", (1.0, 1.0)), gm, bool(s.get("conditioning", False)))
            tables["velocity_map"] = tables["diagnostics"] = (VELOCITY_HEADER, rows)
            a = np.array([r[2:5] for r in rows], dtype=float)
            summary.update(max_error_ghost=a[:, 0].max(), max_error_lumped=a[:, 1].max(), max_error_consistent=a[:, 2].max())
            if s.get("conditioning", False):
                k = np.array([r[5:] for r in rows], dtype=float)
                summary.update(max_kappa_M=k[:, 0].max(), max_kappa_Mstab=k[:, 1].max(), max_kappa_Mlumped=k[:, 2].max())
        else:
            gk = cfg.ghost.get("gamma_k")
            rows = translating_domain_sweep(
                grid, pts, materials, n, disp, tuple(s.get("bases", ("gimp",))),
                None if gamma_M is None else float(gamma_M), None if gk is None else float(gk),
            )
            tables["conditioning"] = tables["diagnostics"] = (SWEEP_HEADER, rows)
            for basis_name in s.get("bases", ("gimp",)):
                sub = np.array([r[1:] for r in rows if r[0] == basis_name], dtype=float)
                summary[basis_name] = {
                    f"max_{c}": float(np.nanmax(sub[:, j])) for j, c in enumerate(SWEEP_HEADER[2:], start=1)
                }
        summary["completed"] = True
    elif cfg.solver_kind == "explicit":
        s, t = _run_explicit_scenario(cfg, grid, materials, pts, writer)
        summary.update(s)
        tables.update(t)
    else:
        s, t = _run_implicit_scenario(cfg, grid, materials, pts, loaded, writer)
        summary.update(s)
        tables.update(t)

    if dump_ghost_edges:
        tables["ghost_edges"] = (output.GHOST_EDGE_HEADER, writer.edge_rows)
    if writer.out is not None:
        for name, (header, rows) in tables.items():
            output.write_csv(writer.out / f"{name}.csv", header, rows)
        output.write_summary(writer.out / "summary.json", summary)
    return ScenarioResult(summary=summary, tables=tables, points=pts)


__all__ = [
    "ScenarioResult",
    "apply_loads",
    "beam_reference",
    "build_problem",
    "conditioning_row",
    "grid_from_config",
    "run_scenario",
    "tip_pair",
    "translating_domain_sweep",
    "velocity_map_sweep",
]
