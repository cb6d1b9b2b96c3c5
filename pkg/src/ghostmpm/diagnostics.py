"""Conditioning, CFL, energy and error measures."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

MAX_DENSE_DOFS = 4000


def _dense(A):
    A = A.toarray() if sp.issparse(A) else np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    return A


def condition_number(A):
    """Spectral condition number ``lmax / lmin`` of a symmetric matrix.

    Eigenvalues at or below ``n * eps * lmax`` cannot be told apart from
    zero in double precision; the matrix is then reported singular as
    ``inf``.
    """
    A = _dense(A)
    n = A.shape[0]
    if n == 0:
        return np.nan
    if n > MAX_DENSE_DOFS:
        raise ValueError(f"{n} dofs exceeds the dense eigen-analysis limit of {MAX_DENSE_DOFS}")
    w = np.linalg.eigvalsh(0.5 * (A + A.T))
    lmax = w[-1]
    if not lmax > 0:
        return np.inf
    if w[0] <= n * np.finfo(float).eps * lmax:
        return np.inf
    return float(lmax / w[0])


def cfl_number(K, M, h):
    """``1 / (h sqrt(lambda_max))`` of ``K x = lambda M x``; ``nan`` if ``M`` is not SPD."""
    K, M = _dense(K), _dense(M)
    if K.shape != M.shape:
        raise ValueError("K and M must have the same shape")
    try:
        w = sla.eigh(0.5 * (K + K.T), 0.5 * (M + M.T), eigvals_only=True)
    except (np.linalg.LinAlgError, ValueError):
        return np.nan
    lmax = w[-1]
    if not np.isfinite(lmax) or lmax <= 0:
        return np.nan
    return float(1.0 / (h * np.sqrt(lmax)))


@dataclass
class EnergyRow:
    t: float
    W_kin: float
    W_strain: float
    W_plastic: float


def kinetic_energy(points):
    return float(0.5 * np.sum(points.m * np.sum(points.v**2, axis=1)))


def strain_energy(points):
    """Hencky energy ``sum 1/2 tau : eps_e V0``."""
    tau = points.kirchhoff()
    return float(0.5 * np.sum(np.einsum("pij,pij->p", tau, points.eps_e) * points.V0))


def energy_budget(points, t=0.0):
    return EnergyRow(
        t=float(t),
        W_kin=kinetic_energy(points),
        W_strain=strain_energy(points),
        W_plastic=float(np.sum(points.plastic_work)),
    )


def normalised_mean_energy_error(rows, W0=None):
    """``1/(n W0) sum |W_kin + W_strain - W0|`` over the recorded steps after the initial state."""
    kin = np.array([r.W_kin for r in rows])
    strain = np.array([r.W_strain for r in rows])
    if W0 is None:
        W0 = kin[0] + strain[0]
    err = np.abs(kin[1:] + strain[1:] - W0)
    return float(np.mean(err) / W0)


def stress_error_column(points, l0, g, rho0):
    """Volume-weighted vertical stress error against the self-weight solution.

    The analytical stress at reference height ``Y`` is compressive,
    ``sigma_yy = -rho0 g (l0 - Y)`` with tension positive.
    """
    Y = points.x0[:, 1]
    exact = -rho0 * g * (l0 - Y)
    err = np.abs(points.sigma[:, 1, 1] - exact)
    return float(np.sum(err * points.V0) / (g * rho0 * l0 * np.sum(points.V0)))


def displacement_error_stretch(points, t, v0):
    u = points.x - points.x0
    return float(np.max(np.linalg.norm(u - t * np.asarray(v0), axis=1))) if len(points) else 0.0


def convergence_order(h, err):
    """Least-squares slope of ``log(err)`` against ``log(h)``."""
    h = np.log(np.asarray(h, dtype=float))
    e = np.log(np.asarray(err, dtype=float))
    return float(np.polyfit(h, e, 1)[0])


def elastica_tip(alpha):
    """Tip rotation and normalised displacements of an inextensible cantilever.

    ``alpha = P L^2 / EI`` for a transverse end load that keeps its
    direction.  Returns ``(theta_tip, u/L, v/L)`` with ``u`` the horizontal
    shortening and ``v`` the deflection along the load.
    """
    if alpha == 0:
        return 0.0, 0.0, 0.0

    # theta'' = -alpha cos(theta) on s in [0, 1], theta(0) = 0, theta'(1) = 0
    def rhs(s, y):
        return [y[1], -alpha * np.cos(y[0]), np.cos(y[0]), np.sin(y[0])]

    def shoot(k0):
        sol = solve_ivp(rhs, (0.0, 1.0), [0.0, k0, 0.0, 0.0], rtol=1e-12, atol=1e-14)
        return sol.y[:, -1]

    # curvature at the root lies in (0, alpha] since |M| <= P L
    k0 = brentq(lambda k: shoot(k)[1], 1e-12, alpha, xtol=1e-14)
    th, _, x, y = shoot(k0)
    return float(th), float(1.0 - x), float(y)
