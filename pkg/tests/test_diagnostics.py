from pathlib import Path

import numpy as np
import pytest
import scipy.sparse as sp
from scipy.optimize import brentq
from scipy.special import ellipe, ellipeinc, ellipk, ellipkinc
from hypothesis import given, settings
from hypothesis import strategies as st

from ghostmpm.config import load_config
from ghostmpm.diagnostics import (
    EnergyRow,
    cfl_number,
    condition_number,
    convergence_order,
    displacement_error_stretch,
    elastica_tip,
    energy_budget,
    normalised_mean_energy_error,
    stress_error_column,
)
from ghostmpm.grid import build_grid
from ghostmpm.mpoints import Material, generate_block, generate_rect
from ghostmpm.scenarios import build_problem

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def test_condition_number_examples():
    assert condition_number(np.eye(5)) == pytest.approx(1.0)
    assert condition_number(np.diag([1.0, 1e-12])) == pytest.approx(1e12, rel=1e-12)
    assert condition_number(sp.identity(3)) == pytest.approx(1.0)
    assert condition_number(np.diag([1.0, 0.0])) == np.inf
    assert condition_number(np.diag([1.0, -1.0])) == np.inf
    assert np.isnan(condition_number(np.zeros((0, 0))))
    with pytest.raises(ValueError):
        condition_number(np.ones((2, 3)))


def _spd(seed, n=6):
    rng = np.random.default_rng(seed)
    A = rng.normal(size=(n, n))
    return A @ A.T + 0.1 * np.eye(n)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**31 - 1), st.floats(1e-6, 1e6))
def test_condition_number_properties(seed, c):
    A = _spd(seed)
    k = condition_number(A)
    assert k >= 1.0
    assert condition_number(c * A) == pytest.approx(k, rel=1e-8)


def test_cfl_examples():
    I = np.eye(4)
    assert cfl_number(I, I, 1.0) == pytest.approx(1.0)
    assert cfl_number(4 * I, I, 0.5) == pytest.approx(1 / (2 * 0.5))
    # singular mass gives the sentinel
    assert np.isnan(cfl_number(I, np.diag([1.0, 1.0, 1.0, 0.0]), 1.0))
    with pytest.raises(ValueError):
        cfl_number(np.eye(2), np.eye(3), 1.0)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**31 - 1), st.floats(1e-4, 1e4))
def test_cfl_scale_invariance(seed, c):
    K, M = _spd(seed), _spd(seed + 1)
    assert cfl_number(c * K, c * M, 0.3) == pytest.approx(cfl_number(K, M, 0.3), rel=1e-8)


def test_energy_of_resting_body_is_zero():
    mat = Material(100.0, 0.3, 10.0)
    pts = generate_rect(((0, 0), (1, 1)), 3, mat)
    row = energy_budget(pts, 0.0)
    assert (row.W_kin, row.W_strain, row.W_plastic) == (0.0, 0.0, 0.0)


def test_colliding_squares_initial_energy():
    cfg = load_config(CONFIGS / "colliding_elastic.yaml")
    _, _, pts, _ = build_problem(cfg)
    assert energy_budget(pts).W_kin == pytest.approx(3.2, rel=1e-12)


def test_normalised_mean_energy_error():
    rows = [EnergyRow(0.0, 2.0, 0.0, 0.0), EnergyRow(1.0, 1.5, 0.4, 0.0), EnergyRow(2.0, 1.0, 1.2, 0.0)]
    # |1.9 - 2| and |2.2 - 2| averaged over two steps, divided by W0 = 2
    assert normalised_mean_energy_error(rows) == pytest.approx(0.15 / 2)
    assert normalised_mean_energy_error(rows, W0=4.0) == pytest.approx((2.1 + 1.8) / 2 / 4)


def test_column_stress_error_of_exact_field_is_zero():
    mat = Material(1e4, 0.0, 80.0)
    g = build_grid((0, 0), 6.25, 1, 9)
    pts = generate_block(((0, 0), (6.25, 50.0)), g, 2, mat)
    pts.sigma[:, 1, 1] = -80.0 * 10.0 * (50.0 - pts.x0[:, 1])
    assert stress_error_column(pts, 50.0, 10.0, 80.0) == pytest.approx(0.0, abs=1e-15)
    pts.sigma[:, 1, 1] += 80.0 * 10.0 * 50.0 * 0.01
    assert stress_error_column(pts, 50.0, 10.0, 80.0) == pytest.approx(0.01)


def test_stretch_displacement_error():
    mat = Material(0.0, 0.0, 1.0)
    pts = generate_rect(((0, 0), (1, 1)), 4, mat)
    v0 = pts.x - 0.5
    assert displacement_error_stretch(pts, 0.0, v0) == 0.0
    pts.x = pts.x + 0.5 * v0
    assert displacement_error_stretch(pts, 0.5, v0) == pytest.approx(0.0, abs=1e-15)


def test_convergence_order_exact_power_law():
    h = np.array([1.0, 0.5, 0.25, 0.125])
    assert convergence_order(h, 3 * h**1.5) == pytest.approx(1.5)


def test_elastica_small_load_matches_linear_theory():
    theta, u, v = elastica_tip(1e-4)
    assert v == pytest.approx(1e-4 / 3, rel=1e-6)
    assert theta == pytest.approx(1e-4 / 2, rel=1e-6)
    assert u == pytest.approx(0.0, abs=1e-8)


def _elliptic_elastica(alpha):
    """Closed form of the end-loaded cantilever through incomplete elliptic integrals."""
    def parts(th):
        m = (1 + np.sin(th)) / 2
        phi = np.arcsin(1 / np.sqrt(2 * m))
        return m, phi

    def f(th):
        m, phi = parts(th)
        return ellipk(m) - ellipkinc(phi, m) - np.sqrt(alpha)

    th = brentq(f, 1e-12, np.pi / 2 - 1e-12, xtol=1e-15)
    m, phi = parts(th)
    u = 1 - np.sqrt(2 * np.sin(th) / alpha)
    v = 1 - 2 / np.sqrt(alpha) * (ellipe(m) - ellipeinc(phi, m))
    return th, u, v


@pytest.mark.parametrize("alpha", [0.5, 1.0, 3.0, 9.6, 10.0])
def test_elastica_matches_elliptic_integrals(alpha):
    ref = _elliptic_elastica(alpha)
    assert np.allclose(elastica_tip(alpha), ref, rtol=0, atol=1e-9)


def test_elastica_zero_load():
    assert elastica_tip(0.0) == (0.0, 0.0, 0.0)
