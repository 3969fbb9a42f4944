"""Action integral, its gradient and Hessian, constraints matrix and Whitham matrices.

Parameter vectors are always ordered (mu, lambda_1, ..., lambda_N, c).
"""

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateParametrization, HessianAsymmetry, NoOrbit, QuadratureFailure
from .models import WaveParams, impulse, profile_state, reduced_potential
from .profile import make_orbit, orbit_quadrature

FD_MIN_STEP = 1e-6
MAX_HALVINGS = 8


@dataclass(frozen=True, eq=False)
class ActionData:
    theta: float
    grad: np.ndarray
    hess: np.ndarray
    k: float
    M: np.ndarray
    P: float
    params: WaveParams
    asymmetry: float = 0.0

    @property
    def N(self):
        return len(self.grad) - 2

    @property
    def Xi(self):
        return float(self.grad[0])

    @property
    def omega(self):
        return -self.k * self.params.c


@dataclass(frozen=True, eq=False)
class ConstraintsMatrix:
    C: np.ndarray
    xi_mu: float


@dataclass(frozen=True, eq=False)
class WhithamSystem:
    Sigma: np.ndarray
    S: np.ndarray
    c: float
    theta_mu: float


def _quadrature(model, params, hint, nodes):
    orbit = make_orbit(model, params, hint=hint, nodes=nodes)
    pot = reduced_potential(model, params)
    return orbit, orbit_quadrature(pot, params.mu, orbit.v1, orbit.v2, nodes)


def action_value(model, params, hint=None, nodes=200):
    """Theta = 2 int sqrt(2 kappa (mu - W)) dv, i.e. the moment of kappa v_x^2 = 2 (mu - W)."""
    _, quad = _quadrature(model, params, hint, nodes)
    return quad.moment(2.0 * quad.energy)


def action_gradient(model, params, hint=None, nodes=200):
    """(Xi, int U_1, ..., int U_N, int Q(U)) as orbit moments."""
    _, quad = _quadrature(model, params, hint, nodes)
    U = profile_state(model, params, quad.v)
    parts = [np.sum(quad.weights)]
    parts.extend(quad.weights @ U.T)
    parts.append(quad.moment(impulse(model, U)))
    return np.array(parts, dtype=float)


def _theta_and_grad(model, params, hint, nodes):
    _, quad = _quadrature(model, params, hint, nodes)
    U = profile_state(model, params, quad.v)
    grad = np.concatenate([[np.sum(quad.weights)], quad.weights @ U.T, [quad.moment(impulse(model, U))]])
    return quad.moment(2.0 * quad.energy), grad


def _central(model, w, i, h, hint, nodes):
    wp, wm = w.copy(), w.copy()
    wp[i] += h
    wm[i] -= h
    gp = action_gradient(model, WaveParams.from_vector(wp), hint, nodes)
    gm = action_gradient(model, WaveParams.from_vector(wm), hint, nodes)
    return (gp - gm) / (2.0 * h)


def hessian_column(model, params, i, hint=None, nodes=200, rel_step=1e-4):
    """d grad / d w_i by central differences with one Richardson level."""
    w = params.as_vector()
    h = max(rel_step * abs(w[i]), FD_MIN_STEP)
    for _ in range(MAX_HALVINGS + 1):
        try:
            d1 = _central(model, w, i, h, hint, nodes)
            d2 = _central(model, w, i, 0.5 * h, hint, nodes)
        except (NoOrbit, QuadratureFailure):
            h *= 0.5
            continue
        return (4.0 * d2 - d1) / 3.0
    raise DegenerateParametrization(
        f"finite-difference stencil in slot {i} leaves the periodic region even after {MAX_HALVINGS} halvings"
    )


def action_hessian(model, params, hint=None, nodes=200, rel_step=1e-4, symmetry_tol=1e-6):
    """Full ActionData at ``params``; the Hessian is the Jacobian of the exact gradient."""
    params.validate(model)
    if hint is None:
        hint = make_orbit(model, params, nodes=nodes).well_bottom
    theta, grad = _theta_and_grad(model, params, hint, nodes)
    n = len(grad)
    hess = np.empty((n, n))
    for i in range(n):
        hess[:, i] = hessian_column(model, params, i, hint, nodes, rel_step)
    norm = np.max(np.abs(hess))
    asym = float(np.max(np.abs(hess - hess.T)))
    if norm > 0 and asym > symmetry_tol * norm:
        raise HessianAsymmetry(f"||Sigma - Sigma^T|| = {asym:.3g} exceeds {symmetry_tol:g} * ||Sigma|| = {norm:.3g}")
    hess = 0.5 * (hess + hess.T)
    k = 1.0 / grad[0]
    return ActionData(
        theta=theta, grad=grad, hess=hess, k=k, M=k * grad[1:-1], P=k * grad[-1],
        params=params, asymmetry=asym / norm if norm > 0 else 0.0,
    )


def constraints_matrix(action, sign_tol=1e-8):
    """C = Hess_(lambda,c) Theta - grad_(lambda,c) Theta_mu (x) grad_(lambda,c) Theta_mu / Theta_mumu."""
    sigma = action.hess if isinstance(action, ActionData) else np.asarray(action, dtype=float)
    xi_mu = sigma[0, 0]
    if abs(xi_mu) <= sign_tol * np.max(np.abs(sigma)):
        raise DegenerateParametrization(f"Theta_mumu = {xi_mu:.3g} is within tolerance of zero")
    b = sigma[1:, 0]
    C = sigma[1:, 1:] - np.outer(b, b) / xi_mu
    return ConstraintsMatrix(C=0.5 * (C + C.T), xi_mu=float(xi_mu))


def wave_coordinates(action):
    """(k, M, P, omega): wavenumber, mean of U, mean impulse and time frequency."""
    k = 1.0 / action.grad[0]
    return k, k * action.grad[1:-1], k * action.grad[-1], -k * action.params.c


def whitham_matrix_S(B):
    B = np.atleast_2d(B)
    n = B.shape[0] + 2
    S = np.zeros((n, n))
    S[0, -1] = S[-1, 0] = -1.0
    S[1:-1, 1:-1] = B
    return S


def whitham_system(action, struct=None):
    B = struct.B if struct is not None else (np.eye(1) if action.N == 1 else np.array([[0.0, 1.0], [1.0, 0.0]]))
    return WhithamSystem(
        Sigma=action.hess, S=whitham_matrix_S(B), c=action.params.c, theta_mu=float(action.grad[0]),
    )
