"""Periodic orbits of 1/2 kappa(v) v_x^2 + W(v) = mu.

The period and every orbit moment are computed with the substitution
v = v1 + (v2 - v1) sin^2(theta), after exact deflation of mu - W by the two
turning-point factors, so the Gauss-Legendre rule in theta never sees the
inverse square-root endpoint singularities.
"""

from dataclasses import dataclass
from enum import Enum
from functools import lru_cache

import numpy as np
from numpy.polynomial import Polynomial
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from .errors import NoOrbit, OrbitEscape, PeriodMismatch, PreconditionError, QuadratureFailure
from .models import eliminate_velocity, reduced_potential

HOMOCLINIC_TOL = 1e-10
PROFILE_RTOL = 1e-12


class OrbitKind(str, Enum):
    PERIODIC = "Periodic"
    HOMOCLINIC = "HomoclinicBoundary"
    NO_ORBIT = "NoOrbit"


@dataclass(frozen=True)
class Well:
    bottom: float
    depth: float  # W(bottom)
    left_max: float | None
    right_max: float | None

    @property
    def saddle_level(self):
        """Lowest saddle value bounding the well (inf when the well is unbounded)."""
        levels = [lvl for lvl in (self.left_level, self.right_level) if lvl is not None]
        return min(levels) if levels else np.inf

    # filled in by _wells
    left_level: float | None = None
    right_level: float | None = None

    def contains(self, v):
        lo = -np.inf if self.left_max is None else self.left_max
        hi = np.inf if self.right_max is None else self.right_max
        return lo < v < hi


@dataclass(frozen=True)
class Orbit:
    v1: float
    v2: float
    well_bottom: float
    Xi: float
    params: object
    model: object
    saddle_level: float = np.inf


def _critical_points(W):
    dW = W.deriv()
    if dW.degree() < 1 or np.allclose(dW.coef, 0.0):
        return []
    roots = dW.roots()
    real = np.sort(roots[np.abs(roots.imag) <= 1e-9 * (1.0 + np.abs(roots.real))].real)
    crit = []
    for r in real:
        if crit and abs(r - crit[-1]) <= 1e-9 * (1.0 + abs(r)):
            continue
        crit.append(float(r))
    # polish each simple critical point with Newton on W'
    d2W = W.deriv(2)
    polished = []
    for r in crit:
        for _ in range(3):
            h = d2W(r)
            if h == 0.0:
                break
            step = dW(r) / h
            r = r - step
            if abs(step) <= 1e-16 * (1.0 + abs(r)):
                break
        polished.append(float(r))
    return polished


def _wells(W):
    crit = _critical_points(W)
    if not crit:
        return []
    dW = W.deriv()
    pad = 1.0 + max(abs(c) for c in crit)
    probes = [crit[0] - pad] + [0.5 * (a + b) for a, b in zip(crit[:-1], crit[1:])] + [crit[-1] + pad]
    signs = np.sign(dW(np.array(probes)))
    kinds = []
    for i in range(len(crit)):
        left, right = signs[i], signs[i + 1]
        if left < 0 < right:
            kinds.append("min")
        elif left > 0 > right:
            kinds.append("max")
        else:
            kinds.append("flat")
    wells = []
    for i, (cp, kind) in enumerate(zip(crit, kinds)):
        if kind != "min":
            continue
        lmax = next((crit[j] for j in range(i - 1, -1, -1) if kinds[j] == "max"), None)
        rmax = next((crit[j] for j in range(i + 1, len(crit)) if kinds[j] == "max"), None)
        wells.append(
            Well(
                bottom=cp,
                depth=float(W(cp)),
                left_max=lmax,
                right_max=rmax,
                left_level=None if lmax is None else float(W(lmax)),
                right_level=None if rmax is None else float(W(rmax)),
            )
        )
    return wells


def select_well(W, hint=None):
    """Pick the well containing ``hint``, else the deepest one (ties: smallest abscissa)."""
    wells = _wells(W)
    if not wells:
        return None
    if hint is not None:
        point = float(np.mean(hint)) if np.ndim(hint) else float(hint)
        for w in wells:
            if w.contains(point):
                return w
        return None
    return min(wells, key=lambda w: (w.depth, w.bottom))


def _level_tol(level):
    return HOMOCLINIC_TOL * max(1.0, abs(level))


def classify_orbit(potential, mu, hint=None):
    W = potential.W if hasattr(potential, "W") else potential
    well = select_well(W, hint)
    if well is None or not mu > well.depth:
        return OrbitKind.NO_ORBIT
    upper = well.saddle_level
    if np.isfinite(upper):
        if abs(mu - upper) <= _level_tol(upper):
            return OrbitKind.HOMOCLINIC
        if mu > upper:
            return OrbitKind.NO_ORBIT
    return OrbitKind.PERIODIC


def _outer_bracket(W, mu, start, direction):
    step = 1.0 + abs(start)
    for _ in range(200):
        b = start + direction * step
        if W(b) > mu:
            return b
        step *= 2.0
    raise NoOrbit("potential does not rise above mu on one side of the well")


def find_turning_points(potential, mu, hint=None):
    """Return (v1, v2, well_bottom) for the selected well at level ``mu``."""
    W = potential.W if hasattr(potential, "W") else potential
    well = select_well(W, hint)
    if well is None:
        raise NoOrbit("no local minimum of W" + ("" if hint is None else f" contains hint {hint}"))
    kind = classify_orbit(W, mu, hint=hint if hint is not None else well.bottom)
    if kind is not OrbitKind.PERIODIC:
        raise NoOrbit(
            f"mu={mu:.17g} gives {kind.value} for the well at v={well.bottom:.6g} "
            f"(bottom {well.depth:.6g}, saddle level {well.saddle_level:.6g})"
        )
    g = lambda v: W(v) - mu  # noqa: E731
    lo = well.left_max if well.left_max is not None else _outer_bracket(W, mu, well.bottom, -1.0)
    hi = well.right_max if well.right_max is not None else _outer_bracket(W, mu, well.bottom, 1.0)
    v1 = brentq(g, lo, well.bottom, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)
    v2 = brentq(g, well.bottom, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)
    return v1, v2, well.bottom


@lru_cache(maxsize=16)
def _gauss_legendre(nodes):
    t, w = np.polynomial.legendre.leggauss(nodes)
    # map [-1, 1] -> [0, pi/2]
    return np.pi / 4 * (t + 1.0), np.pi / 4 * w


@dataclass(frozen=True)
class OrbitQuadrature:
    """Nodes v_j and weights w_j with sum_j w_j m(v_j) ~ int_0^Xi m(vbar(x)) dx."""

    v: np.ndarray
    weights: np.ndarray
    energy: np.ndarray  # mu - W(v_j), from the deflated factor

    def moment(self, values):
        return float(np.dot(self.weights, values))


def orbit_quadrature(potential, mu, v1, v2, nodes=200):
    W = potential.W
    P = Polynomial([mu]) - W
    Q = Polynomial([-v1 * v2, v1 + v2, -1.0])  # (v - v1)(v2 - v)
    g, _ = divmod(P, Q)
    theta, wt = _gauss_legendre(nodes)
    s2 = np.sin(theta) ** 2
    v = v1 + (v2 - v1) * s2
    gv = g(v)
    kap = potential.kappa(v)
    if np.any(gv <= 0.0) or np.any(kap <= 0.0):
        raise QuadratureFailure("deflated energy factor is not positive on the orbit (non-simple turning point?)")
    # dx = 2 sqrt(kappa / (2 g)) dtheta on each half orbit
    weights = 4.0 * np.sqrt(kap / (2.0 * gv)) * wt
    energy = gv * (v2 - v1) ** 2 * s2 * (1.0 - s2)
    return OrbitQuadrature(v=v, weights=weights, energy=energy)


def make_orbit(model, params, hint=None, nodes=200):
    """Turning points and quadrature period of the orbit selected by ``params``."""
    pot = reduced_potential(model, params)
    v1, v2, bottom = find_turning_points(pot, params.mu, hint)
    model.check_kappa(v1, v2)
    quad = orbit_quadrature(pot, params.mu, v1, v2, nodes)
    well = select_well(pot.W, bottom)
    return Orbit(
        v1=v1, v2=v2, well_bottom=bottom, Xi=float(np.sum(quad.weights)),
        params=params, model=model, saddle_level=well.saddle_level,
    )


def compute_period(model, params, orbit=None, nodes=200):
    """Spatial period Xi = 2 int_{v1}^{v2} sqrt(kappa / (2 (mu - W))) dv."""
    if orbit is None:
        return make_orbit(model, params, nodes=nodes).Xi
    pot = reduced_potential(model, params)
    quad = orbit_quadrature(pot, params.mu, orbit.v1, orbit.v2, nodes)
    return float(np.sum(quad.weights))


def profile_rhs(potential):
    dW, kap, dkap = potential.dW, potential.kappa, potential.dkappa

    def rhs(x, y):
        v, p = y[0], y[1]
        return [p, -(dW(v) + 0.5 * dkap(v) * p * p) / kap(v)]

    return rhs


def second_derivative(potential, v, vx):
    """v_xx from the regular second-order profile equation."""
    return -(potential.dW(v) + 0.5 * potential.dkappa(v) * vx**2) / potential.kappa(v)


@dataclass(frozen=True, eq=False)
class Profile:
    n: int
    x: np.ndarray
    vbar: np.ndarray
    vbar_x: np.ndarray
    ubar: np.ndarray | None
    orbit: Orbit
    return_time: float
    _dense: object = None

    @property
    def Xi(self):
        return self.orbit.Xi

    @property
    def model(self):
        return self.orbit.model

    @property
    def params(self):
        return self.orbit.params

    @property
    def potential(self):
        return reduced_potential(self.model, self.params)

    @property
    def U(self):
        """Profile components stacked along the first axis."""
        if self.ubar is None:
            return self.vbar[None, :]
        return np.stack([self.vbar, self.ubar])

    def sample(self, x):
        """(v, v_x) of the profile at arbitrary points, extended periodically."""
        xx = np.mod(np.asarray(x, dtype=float), self.Xi)
        y = self._dense(xx)
        return y[0], y[1]

    def energy_residual(self):
        pot = self.potential
        e = 0.5 * pot.kappa(self.vbar) * self.vbar_x**2 + pot.W(self.vbar) - self.params.mu
        return float(np.max(np.abs(e)))


def compute_profile(model, params, orbit=None, n=256, rtol=PROFILE_RTOL):
    """Sample the profile on n uniform points of [0, Xi) with vbar(0) = v1, vbar_x(0) = 0."""
    if n < 32 or n & (n - 1):
        raise PreconditionError(f"profile grid size must be a power of two >= 32, got {n}")
    if orbit is None:
        orbit = make_orbit(model, params)
    pot = reduced_potential(model, params)
    v1, v2, Xi = orbit.v1, orbit.v2, orbit.Xi
    scale = max(abs(v1), abs(v2), v2 - v1)

    def upward(x, y):
        return y[1]

    upward.direction = 1.0

    sol = solve_ivp(
        profile_rhs(pot), (0.0, 1.05 * Xi), [v1, 0.0], method="DOP853",
        rtol=rtol, atol=rtol * scale, dense_output=True, events=upward,
    )
    if not sol.success:
        raise OrbitEscape(sol.message)
    returns = [t for t in sol.t_events[0] if t > 0.5 * Xi]
    if not returns:
        raise OrbitEscape("trajectory did not return to the lower turning point")
    t_ret = float(returns[0])
    if abs(t_ret - Xi) > 1e-6 * Xi:
        raise PeriodMismatch(f"ODE return time {t_ret:.12g} vs quadrature period {Xi:.12g}")
    x = Xi * np.arange(n) / n
    y = sol.sol(x)
    delta = 1e-6 * (v2 - v1)
    if y[0].min() < v1 - delta or y[0].max() > v2 + delta:
        raise OrbitEscape("profile left the turning-point interval")
    end = sol.sol(Xi)
    if abs(end[0] - v1) + abs(end[1]) > 1e-8 * max(1.0, scale):
        raise PeriodMismatch(f"profile does not close: |v(Xi)-v1|+|v_x(Xi)| = {abs(end[0]-v1)+abs(end[1]):.3g}")
    ubar = eliminate_velocity(model, params, y[0]) if model.family == "EKL" else None
    return Profile(
        n=n, x=x, vbar=y[0].copy(), vbar_x=y[1].copy(), ubar=ubar, orbit=orbit,
        return_time=t_ret, _dense=sol.sol,
    )
