"""Explicit dynamic time stepping.

Each step rebuilds the grid problem from the material points: basis,
active dofs, mass (consistent, lumped or ghost-stabilised consistent),
momentum projection, forces and accelerations.  Point velocities are
updated FLIP or PIC style and positions always move with the end-of-step
nodal velocities.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import assembly as asm
from .basis import evaluate
from .diagnostics import EnergyRow, energy_budget
from .errors import ConfigurationError, DivergenceError, OutOfDomainError
from .ghost import assemble_jg, identify_boundary_edges, mass_stabilisation
from .kinematics import apply_increment

log = logging.getLogger(__name__)

MASS_MODES = ("consistent", "lumped", "ghost")
STRESS_ORDERS = ("USF", "USL")
VELOCITY_UPDATES = ("FLIP", "PIC")


@dataclass
class ExplicitConfig:
    dt: float
    n_steps: int
    mass_mode: str = "ghost"
    stress_order: str = "USL"
    velocity_update: str = "FLIP"
    gamma_M: float | None = None  # defaults to rho0 / 4 of the densest material
    gravity: tuple = (0.0, 0.0)
    basis: str = "gimp"

    def __post_init__(self):
        if not self.dt > 0:
            raise ConfigurationError("dt must be positive")
        if int(self.n_steps) != self.n_steps or self.n_steps < 0:
            raise ConfigurationError("n_steps must be a non-negative integer")
        if self.mass_mode not in MASS_MODES:
            raise ConfigurationError(f"mass_mode must be one of {MASS_MODES}")
        if self.stress_order not in STRESS_ORDERS:
            raise ConfigurationError(f"stress_order must be one of {STRESS_ORDERS}")
        if self.velocity_update not in VELOCITY_UPDATES:
            raise ConfigurationError(f"velocity_update must be one of {VELOCITY_UPDATES}")
        if self.gamma_M is not None and self.gamma_M < 0:
            raise ConfigurationError("gamma_M must be non-negative")


@dataclass
class StepInfo:
    step: int
    t: float
    n_free: int
    n_ghost_faces: int
    max_nodal_velocity: float
    ghost_faces: np.ndarray | None = None


@dataclass
class ExplicitResult:
    energy: list = field(default_factory=list)
    steps: list = field(default_factory=list)
    completed_steps: int = 0
    diverged_at: int | None = None
    message: str = ""


class MassOperator:
    """Solve ``M x = b`` on the reduced dofs for one mass treatment."""

    def __init__(self, Mr=None, diag=None):
        self.diag = diag
        self.Mr = Mr
        if diag is None:
            try:
                self._lu = spla.splu(sp.csc_matrix(Mr))
            except RuntimeError as exc:
                raise DivergenceError(f"mass matrix factorisation failed: {exc}") from exc

    def solve(self, b):
        if self.diag is not None:
            if np.any(~(self.diag > 0)):
                raise DivergenceError("non-positive lumped mass")
            x = b / self.diag
        else:
            x = self._lu.solve(b)
        if not np.all(np.isfinite(x)):
            raise DivergenceError("non-finite nodal solution")
        return x


def active_elements_by_body(basis, body_id):
    return {int(b): basis.active_elements(body_id == b) for b in np.unique(body_id)}


def setup_grid_problem(grid, points, cfg, step=None):
    basis = evaluate(grid, points, cfg.basis)
    by_body = active_elements_by_body(basis, points.body_id)
    active_el = np.unique(np.concatenate([v for v in by_body.values()])) if by_body else np.zeros(0, int)
    active_nodes = np.unique(grid.element_topology[active_el])
    dm = asm.DofMap.build(grid.n_dofs, active_nodes, grid.fixed_mask())
    faces = None
    if cfg.mass_mode == "lumped":
        mop = MassOperator(diag=dm.reduce_vector(asm.assemble_lumped_mass(grid, basis, points.m)))
    else:
        M = asm.assemble_mass(grid, basis, points.m)
        if cfg.mass_mode == "ghost":
            faces = identify_boundary_edges(grid, by_body, step=step)
            M = M + mass_stabilisation(assemble_jg(grid, faces), cfg.gamma_M)
        mop = MassOperator(Mr=dm.reduce_matrix(M))
    return basis, dm, mop, faces


def _increment(basis, nodal_v, dt):
    return np.eye(2)[None] + dt * asm.interpolate_gradient(basis, nodal_v)


def explicit_step(grid, points, materials, cfg, step=0, t=0.0):
    """Advance ``points`` by one time step in place."""
    gimp = cfg.basis == "gimp"
    basis, dm, mop, faces = setup_grid_problem(grid, points, cfg, step)

    p = asm.assemble_point_forces(grid, basis, points.m[:, None] * points.v)
    v_n = dm.expand(mop.solve(dm.reduce_vector(p)))

    if cfg.stress_order == "USF":
        apply_increment(points, materials, _increment(basis, v_n, cfg.dt), gimp)

    f_int = asm.assemble_internal_force(grid, basis, points.sigma, points.V)
    f_ext = asm.assemble_body_force(grid, basis, points.m, cfg.gravity)
    acc = dm.expand(mop.solve(dm.reduce_vector(f_ext - f_int)))
    v_n1 = v_n + cfg.dt * acc

    if cfg.velocity_update == "FLIP":
        points.v = points.v + cfg.dt * asm.interpolate(basis, acc)
    else:
        points.v = asm.interpolate(basis, v_n1)
    points.x = points.x + cfg.dt * asm.interpolate(basis, v_n1)

    if cfg.stress_order == "USL":
        apply_increment(points, materials, _increment(basis, v_n1, cfg.dt), gimp)

    if not (np.all(np.isfinite(points.x)) and np.all(np.isfinite(points.v))):
        raise DivergenceError("non-finite point state")
    vmax = float(np.max(np.abs(v_n1))) if len(v_n1) else 0.0
    return StepInfo(
        step=step,
        t=t + cfg.dt,
        n_free=dm.n_free,
        n_ghost_faces=0 if faces is None else len(faces),
        max_nodal_velocity=vmax,
        ghost_faces=None if faces is None else faces.faces,
    )


def run_explicit(grid, points, materials, cfg, callback=None):
    """Run ``cfg.n_steps`` steps; divergence stops the run and is reported, not raised."""
    if cfg.gamma_M is None:
        cfg.gamma_M = 0.25 * max(m.rho0 for m in materials)
    res = ExplicitResult()
    res.energy.append(energy_budget(points, 0.0))
    t = 0.0
    for k in range(1, cfg.n_steps + 1):
        try:
            info = explicit_step(grid, points, materials, cfg, step=k, t=t)
        except (DivergenceError, OutOfDomainError, np.linalg.LinAlgError) as exc:
            res.diverged_at = k
            res.message = str(exc)
            log.info("diverged at step %d: %s", k, exc)
            break
        t = info.t
        row = energy_budget(points, t)
        res.energy.append(row)
        res.steps.append(info)
        res.completed_steps = k
        if callback is not None:
            callback(k, points, info, row)
    return res


__all__ = [
    "EnergyRow",
    "ExplicitConfig",
    "ExplicitResult",
    "MassOperator",
    "StepInfo",
    "explicit_step",
    "run_explicit",
    "setup_grid_problem",
]
