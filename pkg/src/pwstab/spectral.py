"""Hessian operator, negative-eigenvalue counts and the Evans function.

The eigenvalue problem d/dx(B A U) = tau U is integrated in flux variables,
which only need kappa(vbar) and the zeroth-order coefficient q(x):

    KDV  y = (u, kappa u', A u)
    EKL  y = (v, kappa v', (A U)_1, (A U)_2)

Both systems are trace free, so det F(Xi; tau) = 1 serves as an error
estimate. The Evans function det(F - e^{i nu}) does not depend on the choice
of periodic basis, so these variables give the same D as (u, u', u'').
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from ._fourier import differentiation_matrix
from .errors import (
    ConstantProfile,
    ContourThroughZero,
    FactorizationBreakdown,
    GridMismatch,
    GridTooCoarse,
    IntegrationFailure,
    PreconditionError,
    SignatureContradiction,
)
from .profile import second_derivative

DEFAULT_MODES = 64
DEFAULT_CONTOUR_POINTS = 128
MAX_CONTOUR_DOUBLINGS = 7


@dataclass(frozen=True, eq=False)
class HillOperator:
    modes: int
    matrix: np.ndarray
    nu: float
    x: np.ndarray
    profile: object
    kind: str = "A"


@dataclass(frozen=True, eq=False)
class MonodromyResult:
    tau: complex
    F: np.ndarray
    step_count: int
    error_estimate: float


@dataclass(frozen=True)
class EvansSample:
    tau: complex
    nu: float
    D: complex


def _coefficients(profile, x, kind):
    """kappa(vbar) and the potential term q(x) of the scalar v-block."""
    model, params = profile.model, profile.params
    pot = profile.potential
    v, vx = profile.sample(x)
    vxx = second_derivative(pot, v, vx)
    kap = pot.kappa(v)
    # -(kappa' v_x)_x + 1/2 kappa'' v_x^2 = -1/2 kappa'' v_x^2 - kappa' v_xx
    geom = -0.5 * pot.d2kappa(v) * vx**2 - pot.dkappa(v) * vxx
    if kind == "a":
        q = -pot.d2W(v) + geom
    elif model.family == "KDV":
        q = model.f.deriv(2)(v) + params.c + geom
    else:
        q = model.f.deriv(2)(v) + geom
    return v, vx, kap, q


def collocation_grid(Xi, modes):
    m = 2 * modes + 1
    return Xi * np.arange(m) / m


def hill_assemble(profile, nu=0.0, modes=DEFAULT_MODES, kind="A"):
    """Trigonometric collocation of the Bloch operator e^{-i nu x/Xi} A e^{i nu x/Xi}.

    ``kind="a"`` assembles the reduced Sturm-Liouville operator Hess l instead
    (identical to A for KDV).
    """
    if modes < 16:
        raise GridMismatch(f"Hill collocation needs at least 16 modes, got {modes}")
    Xi = profile.Xi
    x = collocation_grid(Xi, modes)
    m = x.size
    _, _, kap, q = _coefficients(profile, x, kind)
    D = (2.0 * np.pi / Xi) * differentiation_matrix(m)
    if nu:
        Dn = D + (1j * nu / Xi) * np.eye(m)
        Avv = Dn.conj().T @ (kap[:, None] * Dn) + np.diag(q)
    else:
        Avv = D.T @ (kap[:, None] * D) + np.diag(q)
    if profile.model.family == "KDV" or kind == "a":
        mat = Avv
    else:
        c = profile.params.c
        eye = np.eye(m)
        mat = np.block([[Avv, c * eye], [c * eye, eye]])
    if not nu:
        mat = 0.5 * (mat + mat.T)
    return HillOperator(modes=modes, matrix=mat, nu=float(nu), x=x, profile=profile, kind=kind)


def kernel_residual(hill):
    """||A Ubar_x|| / ||Ubar_x|| on the collocation grid."""
    prof = hill.profile
    _, vx = prof.sample(hill.x)
    if prof.model.family == "KDV" or hill.kind == "a":
        w = vx
    else:
        w = np.concatenate([vx, -prof.params.c * vx])
    return float(np.linalg.norm(hill.matrix @ w) / np.linalg.norm(w))


def _ldl_negative_count(mat):
    try:
        _, d, _ = scipy.linalg.ldl(mat, lower=True, hermitian=True)
    except (ValueError, np.linalg.LinAlgError) as exc:
        raise FactorizationBreakdown(str(exc)) from exc
    if not np.all(np.isfinite(d)):
        raise FactorizationBreakdown("non-finite pivots in the LDL^T factorization")
    n = d.shape[0]
    neg = 0
    i = 0
    while i < n:
        if i + 1 < n and d[i + 1, i] != 0.0:
            neg += int(np.sum(np.linalg.eigvalsh(d[i:i + 2, i:i + 2]) < 0))
            i += 2
        else:
            neg += int(d[i, i].real < 0)
            i += 1
    return neg


def inertia(hill, zero_tol=1e-6):
    """(n_neg, n_zero, n_pos) by Sylvester's law on shifted LDL^T factorizations.

    Eigenvalues in [-zero_tol, zero_tol] are counted as zero.
    """
    mat = hill.matrix if isinstance(hill, HillOperator) else np.asarray(hill)
    if isinstance(hill, HillOperator) and hill.nu:
        raise PreconditionError("inertia needs the real symmetric (nu = 0) operator")
    n = mat.shape[0]
    eye = np.eye(n)
    below = _ldl_negative_count(mat + zero_tol * eye)  # eigenvalues < -tol
    upto = _ldl_negative_count(mat - zero_tol * eye)  # eigenvalues < +tol
    return below, upto - below, n - upto


def sturm_liouville_check(profile, modes=DEFAULT_MODES, zero_tol=1e-6):
    """Negative count of the reduced operator a = Hess l[vbar] and ||a vbar_x|| / ||vbar_x||."""
    o = profile.orbit
    if o.v2 - o.v1 <= 1e-12 * max(1.0, abs(o.v1), abs(o.v2)):
        raise ConstantProfile("zero-amplitude profile")
    hill = hill_assemble(profile, 0.0, modes, kind="a")
    n_neg, _, _ = inertia(hill, zero_tol)
    res = kernel_residual(hill)
    if not 1 <= n_neg <= 2:
        raise SignatureContradiction(f"periodic Sturm-Liouville operator with {n_neg} negative eigenvalues")
    return n_neg, res


def hill_spectrum(profile, nu=0.0, modes=DEFAULT_MODES):
    """Eigenvalues of the collocated linearisation B d/dx A^nu (Hill's method)."""
    hill = hill_assemble(profile, nu, modes)
    return np.linalg.eigvals(_jacobian_matrix(hill))


def _jacobian_matrix(hill):
    prof = hill.profile
    m = hill.x.size
    D = (2.0 * np.pi / prof.Xi) * differentiation_matrix(m) + (1j * hill.nu / prof.Xi) * np.eye(m)
    if prof.model.family == "KDV":
        return D @ hill.matrix
    n = m
    JD = np.zeros((2 * n, 2 * n), dtype=complex)
    JD[:n, n:] = D
    JD[n:, :n] = D
    return JD @ hill.matrix


def hill_residual(profile, tau, modes=DEFAULT_MODES):
    """Smallest singular value of (J A - tau) relative to ||J A||."""
    J = _jacobian_matrix(hill_assemble(profile, 0.0, modes))
    s = np.linalg.svd(J - tau * np.eye(J.shape[0]), compute_uv=False)
    return float(s[-1] / s[0])


def _state_dim(model):
    return 3 if model.family == "KDV" else 4


def _apply_K(family, Y, tau, kap, q, c):
    """K(x, tau) Y for a stack of matrices Y with shape (ntau, d, cols)."""
    out = np.empty_like(Y)
    t = tau[:, None]
    if family == "KDV":
        out[:, 0] = Y[:, 1] / kap
        out[:, 1] = q * Y[:, 0] - Y[:, 2]
        out[:, 2] = t * Y[:, 0]
    else:
        out[:, 0] = Y[:, 1] / kap
        out[:, 1] = (q - c * c) * Y[:, 0] + c * Y[:, 3] - Y[:, 2]
        out[:, 2] = t * (Y[:, 3] - c * Y[:, 0])
        out[:, 3] = t * Y[:, 0]
    return out


def _apply_Ktau(family, Y, c):
    out = np.zeros_like(Y)
    if family == "KDV":
        out[:, 2] = Y[:, 0]
    else:
        out[:, 2] = Y[:, 3] - c * Y[:, 0]
        out[:, 3] = Y[:, 0]
    return out


def monodromy_batch(profile, taus, rtol=1e-10, derivative=False):
    """F(Xi; tau) for every tau in ``taus`` from one vectorised integration.

    Returns (F, dF, nfev) with F of shape (ntau, d, d); dF = dF/dtau or None.
    """
    model, params = profile.model, profile.params
    fam = model.family
    c = params.c
    pot = profile.potential
    taus = np.atleast_1d(np.asarray(taus, dtype=complex))
    nt = taus.size
    d = _state_dim(model)
    nblk = nt * d * d
    fpp = model.f.deriv(2)

    def rhs(x, y):
        v, p = y[0].real, y[1].real
        vxx = second_derivative(pot, v, p)
        kap = pot.kappa(v)
        geom = -0.5 * pot.d2kappa(v) * p * p - pot.dkappa(v) * vxx
        q = fpp(v) + geom + (c if fam == "KDV" else 0.0)
        Y = y[2:2 + nblk].reshape(nt, d, d)
        dY = _apply_K(fam, Y, taus, kap, q, c)
        parts = [np.array([p, vxx], dtype=complex), dY.ravel()]
        if derivative:
            Z = y[2 + nblk:].reshape(nt, d, d)
            dZ = _apply_K(fam, Z, taus, kap, q, c) + _apply_Ktau(fam, Y, c)
            parts.append(dZ.ravel())
        return np.concatenate(parts)

    eye = np.broadcast_to(np.eye(d, dtype=complex), (nt, d, d))
    y0 = [np.array([profile.orbit.v1, 0.0], dtype=complex), eye.ravel()]
    if derivative:
        y0.append(np.zeros(nblk, dtype=complex))
    y0 = np.concatenate(y0)
    sol = solve_ivp(rhs, (0.0, profile.Xi), y0, method="DOP853", rtol=rtol, atol=rtol * 1e-3)
    if not sol.success:
        raise IntegrationFailure(sol.message)
    yT = sol.y[:, -1]
    F = yT[2:2 + nblk].reshape(nt, d, d)
    dF = yT[2 + nblk:].reshape(nt, d, d) if derivative else None
    return F, dF, sol.nfev


def monodromy(profile, tau, rtol=1e-10):
    F, _, nfev = monodromy_batch(profile, [tau], rtol)
    F = F[0]
    return MonodromyResult(tau=complex(tau), F=F, step_count=nfev, error_estimate=float(abs(np.linalg.det(F) - 1.0)))


def evans_values(profile, taus, nu=0.0, rtol=1e-10, derivative=False):
    """D(tau, nu) = det(F(Xi; tau) - e^{i nu} I) on an array of tau (and dD/dtau if asked)."""
    F, dF, _ = monodromy_batch(profile, taus, rtol, derivative)
    d = F.shape[-1]
    M = F - np.exp(1j * nu) * np.eye(d)
    D = np.linalg.det(M)
    if not derivative:
        return D
    # Jacobi's formula: dD = D tr(M^{-1} dF); use the adjugate form for robustness near zeros
    adj = _adjugate(M)
    dD = np.einsum("tij,tji->t", adj, dF)
    return D, dD


def _adjugate(M):
    nt, d, _ = M.shape
    adj = np.empty_like(M)
    idx = np.arange(d)
    for i in range(d):
        for j in range(d):
            minor = M[:, idx != i][:, :, idx != j]
            adj[:, j, i] = (-1) ** (i + j) * np.linalg.det(minor)
    return adj


def evans_eval(profile, tau, nu=0.0, rtol=1e-10):
    D = evans_values(profile, [tau], nu, rtol)[0]
    return EvansSample(tau=complex(tau), nu=float(nu), D=complex(D))


def real_coperiodic_scan(profile, tau_max, n_grid=64, rtol=1e-10):
    """Bracketed positive real zeros of D(., 0) on (0, tau_max]."""
    if n_grid < 16:
        raise GridTooCoarse(f"co-periodic scan needs n_grid >= 16, got {n_grid}")
    if not tau_max > 0:
        raise PreconditionError("tau_max must be positive")
    grid = tau_max * np.logspace(-4, 0, n_grid)
    vals = evans_values(profile, grid, 0.0, rtol).real
    roots = []
    for a, b, fa, fb in zip(grid[:-1], grid[1:], vals[:-1], vals[1:]):
        if fa == 0.0:
            roots.append(float(a))
        elif fa * fb < 0.0:
            g = lambda t: evans_values(profile, [t], 0.0, rtol)[0].real  # noqa: E731
            roots.append(float(brentq(g, a, b, xtol=1e-14, rtol=1e-8)))
    return roots


@dataclass(frozen=True)
class SidebandCount:
    nu: float
    unstable_count: int
    winding: float
    points: int
    contour_radius: float


def _half_disc_contour(radius, offset, n):
    """n points (and tangents) on the boundary of {|tau| < r, Re tau > offset}, counter-clockwise."""
    beta = np.arcsin(min(offset / radius, 0.999))
    arc_len = radius * (np.pi - 2 * beta)
    seg_len = 2 * radius * np.cos(beta)
    s = np.arange(n) / n
    total = arc_len + seg_len
    L = s * total
    tau = np.empty(n, dtype=complex)
    dtau = np.empty(n, dtype=complex)  # d tau / d s
    on_arc = L < arc_len
    phi = -np.pi / 2 + beta + L[on_arc] / radius
    tau[on_arc] = radius * np.exp(1j * phi)
    dtau[on_arc] = 1j * radius * np.exp(1j * phi) * total / radius
    ls = L[~on_arc] - arc_len
    top = radius * np.cos(beta)
    tau[~on_arc] = offset + 1j * (top - ls)
    dtau[~on_arc] = -1j * total
    return tau, dtau


def winding_number(profile, nu, radius, offset=None, points=DEFAULT_CONTOUR_POINTS, rtol=1e-10):
    """Zeros of D(., nu) inside the right half-disc, by the trapezoid rule for D'/D."""
    if offset is None:
        offset = 1e-2 * radius
    n = points
    tau, dtau = _half_disc_contour(radius, offset, n)
    D, dD = evans_values(profile, tau, nu, rtol, derivative=True)
    w = None
    for _ in range(MAX_CONTOUR_DOUBLINGS + 1):
        scale = np.max(np.abs(D))
        if np.min(np.abs(D)) < 1e-12 * scale:
            raise ContourThroughZero(f"|D| vanishes on the contour (nu={nu}, radius={radius})")
        w_new = float(np.real(np.sum(dD / D * dtau) / n / (2j * np.pi)))
        near = abs(w_new - round(w_new)) <= 0.05
        if near and w is not None and round(w_new) == round(w):
            return w_new, n
        w = w_new
        # refine: insert midpoints
        t2, dt2 = _half_disc_contour(radius, offset, 2 * n)
        newt, newdt = t2[1::2], dt2[1::2]
        Dn, dDn = evans_values(profile, newt, nu, rtol, derivative=True)
        tau = np.empty(2 * n, dtype=complex)
        dtau = np.empty(2 * n, dtype=complex)
        Dm = np.empty(2 * n, dtype=complex)
        dDm = np.empty(2 * n, dtype=complex)
        tau[0::2], tau[1::2] = t2[0::2], newt
        dtau[0::2], dtau[1::2] = dt2[0::2], newdt
        Dm[0::2], Dm[1::2] = D, Dn
        dDm[0::2], dDm[1::2] = dD, dDn
        D, dD = Dm, dDm
        n *= 2
    return w, n


def sideband_scan(profile, nu_list, contour_radius, points=DEFAULT_CONTOUR_POINTS, offset=None, rtol=1e-10):
    """Per Floquet exponent, the number of zeros of D(., nu) in the right half-disc."""
    if not contour_radius > 0:
        raise PreconditionError("contour_radius must be positive")
    out = []
    for nu in sorted(float(x) for x in nu_list):
        if not 0.0 < nu < 2.0 * np.pi:
            raise PreconditionError(f"Floquet exponent {nu} outside (0, 2 pi)")
        w, used = winding_number(profile, nu, contour_radius, offset, points, rtol)
        out.append(SidebandCount(nu=nu, unstable_count=int(round(w)), winding=w, points=used,
                                 contour_radius=contour_radius))
    return out


def _apply_A_grid(profile, Y):
    """A applied to fields sampled on the profile grid (spectral derivatives)."""
    from ._fourier import diff

    x, Xi = profile.x, profile.Xi
    _, _, kap, q = _coefficients(profile, x, "A")
    yv = Y[0]
    out_v = -diff(kap * diff(yv, Xi), Xi) + q * yv
    if profile.model.family == "KDV":
        return out_v[None, :]
    c = profile.params.c
    return np.stack([out_v + c * Y[1], c * yv + Y[1]])


def constraints_matrix_dual(model, params, Sigma, hint=None, n=256, rel_step=1e-4, nodes=200):
    """C from inner products -<Y_b, A Y_a>, Y_a the period-preserving profile derivatives.

    Y_a is the derivative of the profile along e_a - (Xi_a / Xi_mu) e_mu, a
    direction in which the period is stationary, so Y_a is periodic. Profiles
    are compared on their own grids, i.e. at fixed x / Xi.
    """
    from .models import WaveParams
    from .profile import compute_profile, make_orbit

    Sigma = np.asarray(Sigma, dtype=float)
    w0 = params.as_vector()
    size = w0.size
    base = compute_profile(model, params, make_orbit(model, params, hint, nodes), n=n)
    if hint is None:
        hint = base.orbit.well_bottom

    def profile_at(w):
        p = WaveParams.from_vector(w)
        return compute_profile(model, p, make_orbit(model, p, hint, nodes), n=n).U

    Y = []
    for a in range(1, size):
        d = np.zeros(size)
        d[a] = 1.0
        d[0] = -Sigma[0, a] / Sigma[0, 0]
        h = rel_step * max(np.linalg.norm(w0), 1.0) / np.linalg.norm(d)
        Y.append((profile_at(w0 + h * d) - profile_at(w0 - h * d)) / (2 * h))
    dx = base.Xi / n
    k = size - 1
    C = np.empty((k, k))
    for a in range(k):
        AY = _apply_A_grid(base, Y[a])
        for b in range(k):
            C[b, a] = -np.sum(Y[b] * AY) * dx
    return 0.5 * (C + C.T)
