"""Finite-strain Hencky elasticity with von Mises perfect plasticity.

The elastic state is carried as the logarithmic elastic strain
``eps_e = 1/2 log(b_e)``.  A step takes a deformation increment ``dF``,
builds the trial left stretch ``b_tr = dF exp(2 eps_e) dF^T`` and, when the
trial Kirchhoff deviator exceeds the yield limit, projects it radially back
onto the cylinder ``sqrt(2 J2) = rho_y``.  Plane strain keeps the
out-of-plane stretch of the increment at one while carrying the
out-of-plane log strain and stress explicitly.

All routines operate on batches of points (leading axis ``n``).

References
----------
Simo, J. C. (1992). Algorithms for static and dynamic multiplicative
plasticity that preserve the classical return mapping schemes of the
infinitesimal theory.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DivergenceError

_I2 = np.eye(2)
# symmetric fourth-order identity restricted to the plane
_ISYM = 0.5 * (np.einsum("ik,jl->ijkl", _I2, _I2) + np.einsum("il,jk->ijkl", _I2, _I2))
_II = np.einsum("ij,kl->ijkl", _I2, _I2)


@dataclass
class StressResult:
    tau: np.ndarray  # (n, 3, 3)
    sigma: np.ndarray  # (n, 3, 3)
    eps_e_new: np.ndarray  # (n, 3, 3)
    a: np.ndarray | None  # (n, 2, 2, 2, 2) spatial tangent, None when not requested
    dWp: np.ndarray  # (n,) plastic work per unit reference volume
    deps_p: np.ndarray  # (n,) norm of the plastic log-strain increment
    plastic: np.ndarray  # (n,) bool


def lame(E, nu):
    E = np.asarray(E, dtype=float)
    nu = np.asarray(nu, dtype=float)
    return E * nu / ((1 + nu) * (1 - 2 * nu)), E / (2 * (1 + nu))


def elastic_moduli(material):
    """Plane-strain Hencky stiffness ``D_ijkl = lam d_ij d_kl + 2 mu I_sym``."""
    return material.lam * _II + 2 * material.mu * _ISYM


def material_arrays(materials, material_id):
    """Per-point ``lam, mu, yield`` arrays; elastic materials get ``inf`` yield."""
    lam = np.array([m.lam for m in materials])[material_id]
    mu = np.array([m.mu for m in materials])[material_id]
    ys = np.array([np.inf if m.yield_stress is None else m.yield_stress for m in materials])
    return lam, mu, ys[material_id]


def _divided_log(la, lb):
    """First divided difference of ``1/2 log`` between eigenvalues ``la`` and ``lb``."""
    x = (la - lb) / lb
    small = np.abs(x) < 1e-8
    xs = np.where(small, 1.0, x)
    return np.where(small, 0.5 / lb * (1.0 - 0.5 * x), 0.5 * np.log1p(xs) / (lb * xs))


def _sym_exp(eps2):
    w, v = np.linalg.eigh(eps2)
    return np.einsum("...ia,...a,...ja->...ij", v, np.exp(2.0 * w), v)


def return_map(lam, mu, yield_stress, dF, eps_e_old, J, tangent=True):
    """Return-mapped stress state and spatial tangent for a batch of points.

    Parameters
    ----------
    lam, mu, yield_stress : (n,) arrays
        Lame parameters and deviatoric yield limit (``inf`` for elastic).
    dF : (n, 2, 2) array
        In-plane deformation increment relative to ``eps_e_old``'s state.
    eps_e_old : (n, 3, 3) array
        Elastic log strain at the start of the increment.
    J : (n,) array
        ``det`` of the total deformation gradient, for the Cauchy stress.
    tangent : bool
        Skip the consistent tangent when False (explicit dynamics).

    Returns
    -------
    StressResult
    """
    dF = np.asarray(dF, dtype=float)
    n = dF.shape[0]
    detdF = dF[:, 0, 0] * dF[:, 1, 1] - dF[:, 0, 1] * dF[:, 1, 0]
    if np.any(~(detdF > 0)):
        raise DivergenceError("non-positive determinant of the deformation increment")
    b_old = _sym_exp(eps_e_old[:, :2, :2])
    b = dF @ b_old @ np.swapaxes(dF, 1, 2)
    b = 0.5 * (b + np.swapaxes(b, 1, 2))
    lb, vb = np.linalg.eigh(b)
    if np.any(~(lb > 0)):
        raise DivergenceError("trial elastic left stretch is not positive definite")
    eps_pr = np.empty((n, 3))
    eps_pr[:, :2] = 0.5 * np.log(lb)
    eps_pr[:, 2] = eps_e_old[:, 2, 2]

    tr = eps_pr.sum(axis=1)
    tau_pr = lam[:, None] * tr[:, None] + 2.0 * mu[:, None] * eps_pr
    p = tau_pr.mean(axis=1)
    s = tau_pr - p[:, None]
    rho = np.sqrt(np.sum(s * s, axis=1))

    plastic = rho > yield_stress
    rho_safe = np.where(rho > 0, rho, 1.0)
    nvec = s / rho_safe[:, None]
    gamma = np.where(plastic, (rho - yield_stress) / np.where(mu > 0, 2.0 * mu, 1.0), 0.0)
    ys = np.where(plastic, yield_stress, 0.0)
    eps_pr_new = eps_pr - gamma[:, None] * nvec
    tau_pr_new = np.where(plastic[:, None], p[:, None] + ys[:, None] * nvec, tau_pr)
    dWp = ys * gamma

    def rebuild(pr):
        out = np.zeros((n, 3, 3))
        out[:, :2, :2] = np.einsum("nia,na,nja->nij", vb, pr[:, :2], vb)
        out[:, 2, 2] = pr[:, 2]
        return out

    tau = rebuild(tau_pr_new)
    eps_new = rebuild(eps_pr_new)
    sigma = tau / J[:, None, None]
    deps_p = gamma * np.sqrt(np.sum(nvec * nvec, axis=1))
    if not tangent:
        return StressResult(tau=tau, sigma=sigma, eps_e_new=eps_new, a=None, dWp=dWp, deps_p=deps_p, plastic=plastic)

    # algorithmic moduli d tau / d eps_trial restricted to the plane
    kappa = lam + 2.0 * mu / 3.0
    theta = np.where(plastic, ys / rho_safe, 1.0)
    n2 = np.einsum("nia,na,nja->nij", vb, nvec[:, :2], vb)
    D = (
        kappa[:, None, None, None, None] * _II
        + 2.0 * (mu * theta)[:, None, None, None, None] * (_ISYM - _II / 3.0)
        - np.where(plastic, 2.0 * mu * theta, 0.0)[:, None, None, None, None]
        * np.einsum("nij,nkl->nijkl", n2, n2)
    )

    # d eps_trial / d b (Daleckii-Krein for 1/2 log)
    f = np.empty((n, 2, 2))
    for a_ in range(2):
        for b_ in range(2):
            if a_ == b_:
                f[:, a_, a_] = 0.5 / lb[:, a_]
            else:
                f[:, a_, b_] = _divided_log(lb[:, a_], lb[:, b_])
    L = np.einsum("nab,nia,njb,nka,nlb->nijkl", f, vb, vb, vb, vb, optimize=True)
    # d b / d (perturbation E_kl with dF -> (I + E) dF)
    T = np.einsum("rk,nls->nrskl", _I2, b) + np.einsum("nrl,sk->nrskl", b, _I2)
    DLT = np.einsum("nijpq,npqrs,nrskl->nijkl", D, L, T, optimize=True)
    sig2 = sigma[:, :2, :2]
    a = DLT / J[:, None, None, None, None] - np.einsum("nil,jk->nijkl", sig2, _I2)
    return StressResult(tau=tau, sigma=sigma, eps_e_new=eps_new, a=a, dWp=dWp, deps_p=deps_p, plastic=plastic)


def update_stress(material, dF, eps_e_old, J=None):
    """Single-material convenience wrapper around :func:`return_map`."""
    dF = np.asarray(dF, dtype=float)
    squeeze = dF.ndim == 2
    dF = dF.reshape(-1, 2, 2)
    eps = np.asarray(eps_e_old, dtype=float).reshape(-1, 3, 3)
    n = len(dF)
    if J is None:
        J = np.linalg.det(dF)
    J = np.broadcast_to(np.asarray(J, dtype=float), (n,))
    ys = np.inf if material.yield_stress is None else material.yield_stress
    res = return_map(
        np.full(n, material.lam), np.full(n, material.mu), np.full(n, ys), dF, eps, J
    )
    if squeeze:
        res = StressResult(*(getattr(res, k)[0] for k in res.__dataclass_fields__))
    return res


def yield_measure(tau):
    """``sqrt(2 J2)`` of a batch of 3x3 Kirchhoff stresses."""
    tau = np.asarray(tau, dtype=float)
    dev = tau - np.trace(tau, axis1=-2, axis2=-1)[..., None, None] / 3.0 * np.eye(3)
    return np.sqrt(np.sum(dev * dev, axis=(-2, -1)))

