"""Point deformation updates shared by the explicit and implicit solvers."""
from __future__ import annotations

import numpy as np

from .basis import update_domains
from .constitutive import material_arrays, return_map
from .errors import DivergenceError


def trial_stress(points, materials, dF, tangent=True):
    """Constitutive response to ``dF`` applied on top of the committed state."""
    F_new = dF @ points.F
    J = np.linalg.det(F_new)
    if np.any(~(J > 0)):
        bad = int(np.flatnonzero(~(J > 0))[0])
        raise DivergenceError(f"det(F) <= 0 at material point {bad}")
    lam, mu, ys = material_arrays(materials, points.material_id)
    return return_map(lam, mu, ys, dF, points.eps_e, J, tangent), F_new, J


def commit(points, result, F_new, J, gimp=True):
    points.F = F_new
    points.V = J * points.V0
    points.eps_e = result.eps_e_new
    points.sigma = result.sigma
    points.plastic_work = points.plastic_work + result.dWp * points.V0
    points.eps_p = points.eps_p + result.deps_p
    if gimp:
        update_domains(points)


def apply_increment(points, materials, dF, gimp=True):
    res, F_new, J = trial_stress(points, materials, dF, tangent=False)
    commit(points, res, F_new, J, gimp)
    return res
