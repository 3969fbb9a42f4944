"""Pseudo-spectral time integration of KDV-family equations.

The evolution is v_t = d/dx(E H[v]) = d/dx(f'(v)) - kappa v_xxx, so the
wave vbar(x - c t) is an exact solution. The dispersive term is integrated
exactly and the nonlinear flux by fourth-order exponential Runge-Kutta
(ETDRK4) with 2/3-rule dealiasing. Only constant kappa is supported.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from . import _fourier
from .errors import BlowUp, PreconditionError, UnsupportedFamily

BLOWUP_LEVEL = 1e6
CONTOUR_POINTS = 32


class CFLWarning(RuntimeWarning):
    pass


@dataclass
class SimState:
    modes: int
    coeffs: np.ndarray  # rfft coefficients of v
    t: float
    model: object
    length: float
    baselines: dict = field(default_factory=dict)

    @property
    def v(self):
        return np.fft.irfft(self.coeffs, n=self.modes)

    @property
    def x(self):
        return self.length * np.arange(self.modes) / self.modes

    @classmethod
    def from_values(cls, model, v, length, t=0.0):
        _check_model(model)
        v = np.asarray(v, dtype=float)
        n = v.size
        if n < 16 or n & (n - 1):
            raise PreconditionError(f"simulation grid must be a power of two >= 16, got {n}")
        st = cls(modes=n, coeffs=np.fft.rfft(v), t=t, model=model, length=float(length))
        st.baselines = invariants(st)
        return st

    @classmethod
    def from_profile(cls, profile, modes=256, domain_multiplier=1):
        length = domain_multiplier * profile.Xi
        x = length * np.arange(modes) / modes
        v, _ = profile.sample(x)
        return cls.from_values(profile.model, v, length)


def _check_model(model):
    if model.family != "KDV":
        raise UnsupportedFamily("direct simulation covers the scalar KDV family only")
    if not model.constant_kappa:
        raise PreconditionError("direct simulation needs a constant kappa")
    if not model.kappa_coeffs[0] > 0:
        raise PreconditionError("kappa must be positive")


def invariants(state):
    """Integrals of v, Q = v^2/2 and H = f(v) + kappa v_x^2/2 over the domain."""
    v = state.v
    vx = _fourier.diff(v, state.length)
    dx = state.length / state.modes
    kap = state.model.kappa_coeffs[0]
    return {
        "M": float(np.sum(v) * dx),
        "Q": float(0.5 * np.sum(v * v) * dx),
        "H": float(np.sum(state.model.f(v) + 0.5 * kap * vx * vx) * dx),
    }


class _Stepper:
    """ETDRK4 coefficients for the diagonal linear symbol L = i kappa k^3."""

    def __init__(self, model, n, length, dt):
        self.n = n
        k = 2.0 * np.pi * np.fft.rfftfreq(n, d=length / n)
        if n % 2 == 0:
            k[-1] = 0.0
        self.ik = 1j * k
        self.fp = model.f.deriv()
        kmax = 2.0 * np.pi * (n // 2) / length
        self.dealias = k < (2.0 / 3.0) * kmax
        L = 1j * model.kappa_coeffs[0] * k**3
        self.E = np.exp(dt * L)
        self.E2 = np.exp(0.5 * dt * L)
        # contour averages of the phi-functions; full circle since L is imaginary
        r = np.exp(2j * np.pi * (np.arange(CONTOUR_POINTS) + 0.5) / CONTOUR_POINTS)
        LR = dt * L[:, None] + r[None, :]
        eLR = np.exp(LR)
        self.Q = dt * np.mean((np.exp(LR / 2) - 1) / LR, axis=1)
        self.f1 = dt * np.mean((-4 - LR + eLR * (4 - 3 * LR + LR**2)) / LR**3, axis=1)
        self.f2 = dt * np.mean((2 + LR + eLR * (LR - 2)) / LR**3, axis=1)
        self.f3 = dt * np.mean((-4 - 3 * LR - LR**2 + eLR * (4 - LR)) / LR**3, axis=1)

    def nonlinear(self, vh):
        v = np.fft.irfft(vh, n=self.n)
        return self.dealias * self.ik * np.fft.rfft(self.fp(v))

    def step(self, vh):
        Nv = self.nonlinear(vh)
        a = self.E2 * vh + self.Q * Nv
        Na = self.nonlinear(a)
        b = self.E2 * vh + self.Q * Na
        Nb = self.nonlinear(b)
        c = self.E2 * a + self.Q * (2 * Nb - Nv)
        Nc = self.nonlinear(c)
        return self.E * vh + self.f1 * Nv + 2 * self.f2 * (Na + Nb) + self.f3 * Nc


def orbital_distance(v, reference, length, period):
    """min over shifts s of the L2 distance between v and reference(. - s).

    ``reference`` is sampled on the same grid as ``v`` and is ``period``-periodic.
    The best shift is located by FFT cross-correlation and refined continuously.
    """
    n = v.size
    dx = length / n
    corr = np.real(np.fft.ifft(np.fft.fft(v) * np.conj(np.fft.fft(reference))))
    # corr[j] = sum_i v[i] ref[i - j], so the coarse shift is j dx
    s0 = np.argmax(corr) * dx

    def dist(s):
        return np.sqrt(np.sum((v - _fourier.shift(reference, s, length)) ** 2) * dx)

    res = minimize_scalar(dist, bracket=(s0 - dx, s0, s0 + dx), tol=1e-12)
    best = min(res.fun, dist(s0))
    shift = res.x if res.fun <= dist(s0) else s0
    return float(best), float(np.mod(shift, period))


@dataclass
class Trajectory:
    t: np.ndarray
    dist_to_orbit: np.ndarray
    dH: np.ndarray
    dQ: np.ndarray
    dM: np.ndarray
    final: SimState


def simulate(initial, t_max, dt, domain_multiplier=1, modes=256, reference=None, output_every=None):
    """Integrate from a Profile or a SimState up to t_max with a fixed step.

    ``reference`` (a Profile) enables the distance-to-orbit diagnostic; it
    defaults to the initial profile when ``initial`` is one.
    """
    if not dt > 0:
        raise PreconditionError("dt must be positive")
    if hasattr(initial, "orbit"):
        if reference is None:
            reference = initial
        state = SimState.from_profile(initial, modes, domain_multiplier)
    else:
        state = SimState(initial.modes, initial.coeffs.copy(), initial.t, initial.model, initial.length,
                         dict(initial.baselines))
    model = state.model
    _check_model(model)
    nsteps = int(round(t_max / dt))
    if abs(nsteps * dt - t_max) > 1e-9 * max(1.0, t_max):
        nsteps = int(np.ceil(t_max / dt))
        dt = t_max / nsteps
    stepper = _Stepper(model, state.modes, state.length, dt)
    v0 = state.v
    # advective speed f''(v) on the retained (dealiased) band; ETDRK4 tolerates roughly |dt lambda| < 2.8
    kmax = (2.0 / 3.0) * np.pi * state.modes / state.length
    fpp = np.max(np.abs(model.f.deriv(2)(np.linspace(v0.min(), v0.max(), 64)))) if model.f.degree() >= 2 else 0.0
    if dt * kmax * fpp > 2.5:
        warnings.warn(f"dt={dt:g} likely violates the advective step limit (k f'' dt = {dt * kmax * fpp:.3g})",
                      CFLWarning, stacklevel=2)
    every = 1 if output_every is None else max(1, int(round(output_every / dt)))
    ref = None
    if reference is not None:
        ref = reference.sample(state.x)[0]
    base = state.baselines or invariants(state)
    rows = []

    def record():
        inv = invariants(state)
        d = orbital_distance(state.v, ref, state.length, reference.Xi)[0] if ref is not None else np.nan
        rows.append((state.t, d, inv["H"] - base["H"], inv["Q"] - base["Q"], inv["M"] - base["M"]))

    record()
    vh = state.coeffs
    t0 = state.t
    for i in range(1, nsteps + 1):
        with np.errstate(over="ignore", invalid="ignore"):
            vh = stepper.step(vh)
        state.coeffs = vh
        state.t = t0 + i * dt
        if i % every == 0 or i == nsteps:
            with np.errstate(invalid="ignore"):
                v = state.v
            if not np.all(np.isfinite(v)) or np.max(np.abs(v)) > BLOWUP_LEVEL:
                raise BlowUp(f"|v| exceeded {BLOWUP_LEVEL:g} at t={state.t:.6g}")
            record()
    arr = np.array(rows)
    return Trajectory(t=arr[:, 0], dist_to_orbit=arr[:, 1], dH=arr[:, 2], dQ=arr[:, 3], dM=arr[:, 4], final=state)


@dataclass
class GrowthResult:
    rate: float
    residual: float
    growth_detected: bool
    window: tuple
    trajectory: Trajectory = None


def _band_limited_noise(n, length, period, kmax_index, rng):
    """Random smooth perturbation with unit L2 norm over one wave period."""
    x = length * np.arange(n) / n
    w = np.zeros(n)
    m = int(round(length / period))
    for j in range(1, kmax_index * m + 1):
        a, b = rng.standard_normal(2)
        w += (a * np.cos(2 * np.pi * j * x / length) + b * np.sin(2 * np.pi * j * x / length)) / j
    return w / np.sqrt(np.sum(w * w) * (length / n) / m)


def growth_rate_experiment(profile, perturbation_amplitude, nu_select=0.0, t_max=12.0, dt=1e-3,
                           modes=256, seed=0, saturation=1e-2, output_every=0.02):
    """Exponential growth rate of the distance to the orbit from a seeded perturbation.

    A Floquet exponent 2 pi / m is realised on a domain of m periods.
    """
    amp = 0.5 * (profile.orbit.v2 - profile.orbit.v1)
    if perturbation_amplitude > 1e-4 * amp * (1 + 1e-12):
        raise PreconditionError("perturbation amplitude must not exceed 1e-4 times the wave amplitude")
    if nu_select:
        m = 2.0 * np.pi / nu_select
        if abs(m - round(m)) > 1e-9 or round(m) < 1:
            raise PreconditionError("nu_select must be 0 or 2 pi / m for a positive integer m")
        m = int(round(m))
    else:
        m = 1
    length = m * profile.Xi
    n = modes * m
    rng = np.random.default_rng(seed)
    x = length * np.arange(n) / n
    vbar, _ = profile.sample(x)
    w = _band_limited_noise(n, length, profile.Xi, 8, rng)
    state = SimState.from_values(profile.model, vbar + perturbation_amplitude * w, length)
    traj = simulate(state, t_max, dt, reference=profile, output_every=output_every)
    t, d = traj.t, traj.dist_to_orbit
    logd = np.log(np.maximum(d, 1e-300))
    sat = np.nonzero(d > saturation * amp)[0]
    end = sat[0] if sat.size else len(t)
    # skip the initial transient: start once the distance has grown a decade past its early minimum
    early_min = np.min(logd[:max(end, 2)])
    start_candidates = np.nonzero(logd[:end] > early_min + np.log(10.0))[0]
    if end < 4 or start_candidates.size == 0 or end - start_candidates[0] < 4:
        return GrowthResult(rate=0.0, residual=float("nan"), growth_detected=False, window=(t[0], t[-1]),
                            trajectory=traj)
    i0 = start_candidates[0]
    tt, yy = t[i0:end], logd[i0:end]
    coef, res, *_ = np.polyfit(tt, yy, 1, full=True)
    slope = coef[0]
    resid = float(np.sqrt(res[0] / len(tt))) if res.size else 0.0
    noise = resid / max(tt[-1] - tt[0], 1e-300)
    if slope < 10.0 * noise:
        return GrowthResult(rate=0.0, residual=resid, growth_detected=False, window=(tt[0], tt[-1]),
                            trajectory=traj)
    return GrowthResult(rate=float(slope), residual=resid, growth_detected=True, window=(tt[0], tt[-1]),
                        trajectory=traj)
