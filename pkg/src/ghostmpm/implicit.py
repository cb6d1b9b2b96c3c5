"""Implicit quasi-static Newton-Raphson load stepping (updated Lagrangian).

Within a load step the basis gradients are frozen at their start-of-step
values and the ghost stiffness ``K_G = gamma_k J_G`` is held constant.  The
increment ``dF = I + sum_v u_v (x) grad_X S_v`` is built from the
accumulated step displacement ``u``.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import assembly as asm
from .basis import evaluate
from .errors import ConfigurationError, DivergenceError, OutOfDomainError
from .explicit import active_elements_by_body
from .ghost import assemble_jg, identify_boundary_edges, stiffness_stabilisation
from .kinematics import commit, trial_stress

log = logging.getLogger(__name__)


@dataclass
class ImplicitConfig:
    n_steps: int
    tol: float = 1e-6
    max_newton_iters: int = 10
    gamma_k: float | None = None  # defaults to the largest Young's modulus
    ghost_enabled: bool = True
    gravity: tuple = (0.0, 0.0)  # full body-force acceleration, ramped linearly
    basis: str = "gimp"
    force_floor: float = 1.0  # N, used when the external force vanishes

    def __post_init__(self):
        if int(self.n_steps) != self.n_steps or self.n_steps < 1:
            raise ConfigurationError("n_steps must be a positive integer")
        if not self.tol > 0:
            raise ConfigurationError("tol must be positive")
        if self.max_newton_iters < 1:
            raise ConfigurationError("max_newton_iters must be >= 1")
        if self.gamma_k is not None and self.gamma_k < 0:
            raise ConfigurationError("gamma_k must be non-negative")


@dataclass
class NewtonReport:
    step: int
    load_factor: float
    iterations: int
    converged: bool
    residuals: list = field(default_factory=list)
    message: str = ""
    n_ghost_faces: int = 0
    ghost_faces: np.ndarray | None = None


@dataclass
class ImplicitResult:
    reports: list = field(default_factory=list)
    completed_steps: int = 0
    failed_at: int | None = None

    @property
    def total_iterations(self):
        return sum(r.iterations for r in self.reports if r.converged)

    @property
    def max_iterations(self):
        conv = [r.iterations for r in self.reports if r.converged]
        return max(conv) if conv else 0


def newton_converged(R, f_ext, tol, floor=1.0):
    """``|R| / max(|f_ext|, floor) < tol`` (strict)."""
    return _normalised(R, f_ext, floor) < tol


def _normalised(R, f_ext, floor=1.0):
    return float(np.linalg.norm(R) / max(float(np.linalg.norm(f_ext)), floor))


class _StepProblem:
    """Residual and tangent of one load step as functions of the step displacement."""

    def __init__(self, grid, points, materials, basis, dm, K_G, f_ext):
        self.grid, self.points, self.materials = grid, points, materials
        self.basis, self.dm, self.K_G, self.f_ext = basis, dm, K_G, f_ext
        self.gimp = True

    def state(self, u):
        b = self.basis
        dF = np.eye(2)[None] + asm.interpolate_gradient(b, u)
        res, F_new, J = trial_stress(self.points, self.materials, dF)
        dS = np.einsum("pai,pij->paj", b.dS, np.linalg.inv(dF))
        cur = type(b)(b.nodes, b.S, dS, b.elements)
        V = J * self.points.V0
        f_int = asm.assemble_internal_force(self.grid, cur, res.sigma, V)
        R = self.dm.reduce_vector(f_int) - self.f_ext
        if self.K_G is not None:
            R = R + self.K_G @ self.dm.reduce_vector(u)
        return R, (res, F_new, J, cur, V)

    def tangent(self, st):
        res, _, _, cur, V = st
        K = self.dm.reduce_matrix(asm.assemble_stiffness(self.grid, cur, res.a, V))
        if self.K_G is not None:
            K = K + self.K_G
        return K


def load_step(grid, points, materials, cfg, step, load_factor):
    """Solve one load increment in place; returns a :class:`NewtonReport`.

    Points are only modified when the step converges.
    """
    gamma_k = cfg.gamma_k if cfg.gamma_k is not None else max(m.E for m in materials)
    basis = evaluate(grid, points, cfg.basis)
    by_body = active_elements_by_body(basis, points.body_id)
    active_el = np.unique(np.concatenate(list(by_body.values())))
    dm = asm.DofMap.build(grid.n_dofs, np.unique(grid.element_topology[active_el]), grid.fixed_mask())

    K_G = None
    n_faces = 0
    if cfg.ghost_enabled:
        faces = identify_boundary_edges(grid, by_body, step=step)
        n_faces = len(faces)
        K_G = dm.reduce_matrix(stiffness_stabilisation(assemble_jg(grid, faces), gamma_k))

    g = load_factor * np.asarray(cfg.gravity, dtype=float)
    f_ext = asm.assemble_body_force(grid, basis, points.m, g)
    f_ext = f_ext + asm.assemble_point_forces(grid, basis, load_factor * points.point_force)
    f_ext = dm.reduce_vector(f_ext)

    prob = _StepProblem(grid, points, materials, basis, dm, K_G, f_ext)
    report = NewtonReport(step=step, load_factor=load_factor, iterations=0, converged=False, n_ghost_faces=n_faces)
    if cfg.ghost_enabled:
        report.ghost_faces = faces.faces
    u = np.zeros(grid.n_dofs)
    try:
        R, st = prob.state(u)
        report.residuals.append(_normalised(R, f_ext, cfg.force_floor))
        for it in range(1, cfg.max_newton_iters + 1):
            K = sp.csc_matrix(prob.tangent(st))
            try:
                du = spla.splu(K).solve(-R)
            except RuntimeError as exc:
                raise DivergenceError(f"singular tangent: {exc}") from exc
            if not np.all(np.isfinite(du)):
                raise DivergenceError("non-finite Newton update")
            u = u + dm.expand(du)
            R, st = prob.state(u)
            err = _normalised(R, f_ext, cfg.force_floor)
            report.residuals.append(err)
            report.iterations = it
            if err < cfg.tol:
                report.converged = True
                break
        else:
            report.message = f"no convergence in {cfg.max_newton_iters} iterations"
    except (DivergenceError, np.linalg.LinAlgError) as exc:
        report.message = str(exc)
    if not report.converged:
        return report

    res, F_new, J, _, _ = st
    points.x = points.x + asm.interpolate(basis, u)
    commit(points, res, F_new, J, gimp=cfg.basis == "gimp")
    return report


def run_implicit(grid, points, materials, cfg, callback=None):
    """Apply the load in ``cfg.n_steps`` equal increments; stop at the first failed step."""
    out = ImplicitResult()
    for k in range(1, cfg.n_steps + 1):
        try:
            rep = load_step(grid, points, materials, cfg, k, k / cfg.n_steps)
        except OutOfDomainError as exc:
            rep = NewtonReport(step=k, load_factor=k / cfg.n_steps, iterations=0, converged=False, message=str(exc))
        out.reports.append(rep)
        if not rep.converged:
            out.failed_at = k
            log.info("load step %d failed: %s", k, rep.message)
            break
        out.completed_steps = k
        if callback is not None:
            callback(k, points, rep)
    return out
