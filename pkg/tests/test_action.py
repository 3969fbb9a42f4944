import numpy as np
import pytest

from pwstab.action import (
    action_gradient,
    action_hessian,
    action_value,
    constraints_matrix,
    hessian_column,
    wave_coordinates,
    whitham_matrix_S,
    whitham_system,
)
from pwstab.errors import DegenerateParametrization
from pwstab.models import Model, WaveParams, structure

from conftest import CUBIC, EKL_CUBIC, HARMONIC

# mpmath oracle for f = v^3, c = -1, lambda = 0, mu = 0.01: Theta, int v dx, int v^2/2 dx
ORACLE_THETA = 0.065832739956906889
ORACLE_INT_V = 0.26849833625152869
ORACLE_INT_Q = 0.044749722708588115


def harmonic_theta(mu, lam, c):
    return 2 * np.pi * (mu + lam**2 / (2 * abs(c))) / np.sqrt(abs(c))


@pytest.mark.parametrize("mu,c", [(0.5, -1.0), (1.0, -4.0)])
def test_harmonic_action_is_ellipse_area(mu, c):
    assert action_value(HARMONIC, WaveParams(mu, (0.0,), c)) == pytest.approx(np.pi, rel=1e-13)


def test_harmonic_gradient():
    g = action_gradient(HARMONIC, WaveParams(0.5, (0.0,), -1.0))
    assert g == pytest.approx([2 * np.pi, 0.0, np.pi * 0.5], abs=1e-13)


def test_cubic_action_and_gradient_match_oracle(cubic_point):
    m, p = cubic_point
    assert action_value(m, p) == pytest.approx(ORACLE_THETA, rel=1e-12)
    assert action_gradient(m, p)[1:] == pytest.approx([ORACLE_INT_V, ORACLE_INT_Q], rel=1e-12)


def test_action_converged_against_dense_quadrature(cubic_point):
    m, p = cubic_point
    assert action_value(m, p, nodes=200) == pytest.approx(action_value(m, p, nodes=2000), rel=1e-10)


def test_gradient_matches_differences_of_action(cubic_point):
    m, p = cubic_point
    w = p.as_vector()
    g = action_gradient(m, p)
    for i in range(3):
        h = 1e-5 * max(abs(w[i]), 1e-2)
        wp, wm = w.copy(), w.copy()
        wp[i] += h
        wm[i] -= h
        fd = (action_value(m, WaveParams.from_vector(wp)) - action_value(m, WaveParams.from_vector(wm))) / (2 * h)
        assert fd == pytest.approx(g[i], rel=1e-6)


def test_harmonic_hessian_closed_form():
    mu, lam, c = 0.4, 0.3, -2.0
    a = action_hessian(HARMONIC, WaveParams(mu, (lam,), c))
    s = abs(c)
    # Theta = 2 pi (mu + lam^2 / (2 s)) s^{-1/2} with s = -c
    expected = np.array([
        [0.0, 0.0, np.pi * s**-1.5],
        [0.0, 2 * np.pi * s**-1.5, 3 * np.pi * lam * s**-2.5],
        [np.pi * s**-1.5, 3 * np.pi * lam * s**-2.5, 1.5 * np.pi * mu * s**-2.5 + 3.75 * np.pi * lam**2 * s**-3.5],
    ])
    assert np.allclose(a.hess, expected, atol=1e-6)
    assert a.theta == pytest.approx(harmonic_theta(mu, lam, c), rel=1e-12)


def test_cubic_hessian_symmetric_and_step_stable(cubic_point):
    m, p = cubic_point
    a = action_hessian(m, p)
    assert a.asymmetry < 1e-6
    b = action_hessian(m, p, rel_step=0.5e-4)
    assert np.allclose(a.hess, b.hess, rtol=1e-5, atol=1e-5 * np.max(np.abs(a.hess)))


def test_hessian_column_near_boundary_shrinks_step():
    # mu just above the well bottom: a wide stencil leaves the periodic region
    p = WaveParams(2e-6, (0.0,), -1.0)
    col = hessian_column(CUBIC, p, 0, rel_step=1.0)
    assert np.all(np.isfinite(col))


def test_hessian_fails_when_no_stencil_fits():
    with pytest.raises(DegenerateParametrization):
        hessian_column(CUBIC, WaveParams(1e-12, (0.0,), -1.0), 0, rel_step=1e-4)


def test_constraints_matrix_example():
    S = np.array([[2.0, 0, 1], [0, 3, 0], [1, 0, 4]])
    cm = constraints_matrix(S)
    assert np.allclose(cm.C, [[3.0, 0.0], [0.0, 3.5]])
    assert cm.xi_mu == 2.0


def test_constraints_matrix_without_coupling():
    S = np.array([[2.0, 0, 0], [0, 3, 1], [0, 1, 4]])
    assert np.allclose(constraints_matrix(S).C, S[1:, 1:])


def test_constraints_matrix_harmonic_is_degenerate():
    a = action_hessian(HARMONIC, WaveParams(0.5, (0.0,), -1.0))
    with pytest.raises(DegenerateParametrization):
        constraints_matrix(a)


def test_wave_coordinates_harmonic():
    a = action_hessian(HARMONIC, WaveParams(0.5, (0.0,), -1.0))
    k, M, P, omega = wave_coordinates(a)
    assert k == pytest.approx(1 / (2 * np.pi))
    assert M == pytest.approx([0.0], abs=1e-14)
    assert P == pytest.approx(0.25)
    assert omega == pytest.approx(1 / (2 * np.pi))


def test_wave_coordinates_reciprocal():
    class Fake:
        grad = np.array([np.pi, 1.0, 2.0])
        params = WaveParams(0.0, (0.0,), 1.0)

    k, M, P, _ = wave_coordinates(Fake)
    assert k == pytest.approx(1 / np.pi)
    assert P == pytest.approx(2 / np.pi)


def test_ekl_wave_coordinates_shape():
    a = action_hessian(EKL_CUBIC, WaveParams(0.009, (0.0, 0.0), 1.0))
    assert a.M.shape == (2,)
    assert a.hess.shape == (4, 4)


def test_whitham_S_patterns():
    assert np.array_equal(whitham_matrix_S(structure(Model("KDV", (0.0,))).B),
                          [[0, 0, -1], [0, 1, 0], [-1, 0, 0]])
    S4 = whitham_matrix_S(structure(Model("EKL", (0.0,))).B)
    assert np.array_equal(S4, [[0, 0, 0, -1], [0, 0, 1, 0], [0, 1, 0, 0], [-1, 0, 0, 0]])
    for S, B in ((S4, [[0, 1], [1, 0]]), (whitham_matrix_S([[1.0]]), [[1.0]])):
        assert np.array_equal(S, S.T)
        assert abs(np.linalg.det(S)) == pytest.approx(abs(np.linalg.det(B)))


def test_whitham_system_fields(cubic_point):
    a = action_hessian(*cubic_point)
    w = whitham_system(a)
    assert w.theta_mu == pytest.approx(a.Xi)
    assert w.c == -1.0
    assert np.array_equal(w.Sigma, a.hess)
