"""Hamiltonian models, reduced potentials and conserved densities.

Two families are supported:

``KDV``  (N = 1)  U = v,      H = f(v) + 1/2 kappa(v) v_x^2,        Q = v^2 / 2,  B = [1]
``EKL``  (N = 2)  U = (v, u), H = u^2/2 + F(v) + 1/2 kappa(v) v_x^2, Q = v u,    B = [[0, 1], [1, 0]]

All nonlinearities are real polynomials stored with ascending coefficients.
"""

from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import Polynomial

from . import _fourier
from .errors import KappaNotPositive, UnsupportedFamily

FAMILIES = ("KDV", "EKL")


@dataclass(frozen=True)
class Model:
    family: str
    f_coeffs: tuple
    kappa_coeffs: tuple = (1.0,)

    def __post_init__(self):
        fam = self.family.upper()
        if fam not in FAMILIES:
            raise UnsupportedFamily(f"unknown family {self.family!r}")
        object.__setattr__(self, "family", fam)
        object.__setattr__(self, "f_coeffs", tuple(float(a) for a in self.f_coeffs) or (0.0,))
        object.__setattr__(self, "kappa_coeffs", tuple(float(a) for a in self.kappa_coeffs) or (1.0,))

    @property
    def N(self):
        return 1 if self.family == "KDV" else 2

    @property
    def f(self):
        """The nonlinearity f (KDV) or bulk energy F (EKL)."""
        return Polynomial(self.f_coeffs)

    @property
    def kappa(self):
        return Polynomial(self.kappa_coeffs)

    @property
    def constant_kappa(self):
        return all(a == 0.0 for a in self.kappa_coeffs[1:])

    def check_kappa(self, v1, v2, samples=1024):
        vv = np.linspace(v1, v2, samples)
        kmin = float(np.min(self.kappa(vv)))
        if not kmin > 0.0:
            raise KappaNotPositive(f"kappa(v) reaches {kmin:.3g} on [{v1:.6g}, {v2:.6g}]")


@dataclass(frozen=True)
class WaveParams:
    mu: float
    lam: tuple
    c: float

    def __post_init__(self):
        object.__setattr__(self, "mu", float(self.mu))
        object.__setattr__(self, "c", float(self.c))
        object.__setattr__(self, "lam", tuple(float(a) for a in np.atleast_1d(self.lam)))

    def as_vector(self):
        """Parameters in the fixed ordering (mu, lambda_1..lambda_N, c)."""
        return np.array([self.mu, *self.lam, self.c])

    @classmethod
    def from_vector(cls, w):
        w = np.asarray(w, dtype=float)
        return cls(w[0], tuple(w[1:-1]), w[-1])

    def validate(self, model):
        if len(self.lam) != model.N:
            raise ValueError(f"{model.family} needs {model.N} multipliers, got {len(self.lam)}")


@dataclass(frozen=True)
class StructureMatrices:
    B: np.ndarray
    Binv: np.ndarray = field(repr=False)


def structure(model):
    if model.family == "KDV":
        B = np.array([[1.0]])
    else:
        # Binv = [[a, b], [b, 0]] with a = 0, b = 1
        B = np.array([[0.0, 1.0], [1.0, 0.0]])
    return StructureMatrices(B=B, Binv=np.linalg.inv(B))


@dataclass(frozen=True)
class PotentialEvaluator:
    """Closed-form W(v; c, lambda) with its first two derivatives."""

    W: Polynomial
    kappa: Polynomial

    def __post_init__(self):
        object.__setattr__(self, "dW", self.W.deriv())
        object.__setattr__(self, "d2W", self.W.deriv(2))
        object.__setattr__(self, "dkappa", self.kappa.deriv())
        object.__setattr__(self, "d2kappa", self.kappa.deriv(2))

    def __call__(self, v):
        return self.W(v)


def reduced_potential(model, params):
    """W such that the profile obeys 1/2 kappa(v) v_x^2 + W(v) = mu."""
    params.validate(model)
    c = params.c
    v = Polynomial([0.0, 1.0])
    if model.family == "KDV":
        (lam1,) = params.lam
        W = -model.f - 0.5 * c * v**2 - lam1 * v
    else:
        lam1, lam2 = params.lam
        W = -model.f + 0.5 * (c * v + lam2) ** 2 - lam1 * v
    return PotentialEvaluator(W=Polynomial(W.coef), kappa=model.kappa)


def eliminate_velocity(model, params, v):
    """u = -(c v + lambda_2) from the second profile equation (T = 1, b = 1)."""
    if model.family != "EKL":
        raise UnsupportedFamily("velocity elimination only applies to EKL")
    return -(params.c * np.asarray(v, dtype=float) + params.lam[1])


def profile_state(model, params, v):
    """Stack U(v) along the orbit: v for KDV, (v, u(v)) for EKL."""
    v = np.asarray(v, dtype=float)
    if model.family == "KDV":
        return v[None, ...]
    return np.stack([v, eliminate_velocity(model, params, v)])


def impulse(model, U):
    """Q(U) = 1/2 U . Binv U, pointwise; ``U`` has the component axis first."""
    U = np.asarray(U, dtype=float)
    if model.family == "KDV":
        return 0.5 * U[0] ** 2
    return U[0] * U[1]


def _split(model, fields):
    fields = np.asarray(fields, dtype=float)
    if model.family == "KDV":
        v = fields if fields.ndim == 1 else fields[0]
        return v, None
    return fields[0], fields[1]


def variational_derivative(model, fields, length, method="spectral"):
    """E H[U] on a uniform periodic grid of period ``length``.

    ``fields`` is v (KDV) or the pair (v, u) (EKL). Returns an array of the
    same shape.
    """
    v, u = _split(model, fields)
    vx = _fourier.diff(v, length, method=method)
    kap = model.kappa
    ev = model.f.deriv()(v) + 0.5 * kap.deriv()(v) * vx**2 - _fourier.diff(kap(v) * vx, length, method=method)
    if model.family == "KDV":
        return ev if np.ndim(fields) == 1 else ev[None, :]
    return np.stack([ev, u])


def hamiltonian_density(model, fields, length, method="spectral"):
    v, u = _split(model, fields)
    vx = _fourier.diff(v, length, method=method)
    h = model.f(v) + 0.5 * model.kappa(v) * vx**2
    if model.family == "EKL":
        h = h + 0.5 * u**2
    return h


def conserved_densities(model, fields, length, method="spectral"):
    """Pointwise samples of (Q, S, H) where S = U . E H + L H is the impulse flux."""
    v, u = _split(model, fields)
    vx = _fourier.diff(v, length, method=method)
    H = hamiltonian_density(model, fields, length, method)
    EH = variational_derivative(model, fields, length, method)
    # Legendre transform in v_x only: v_x dH/dv_x - H
    LH = model.kappa(v) * vx**2 - H
    if model.family == "KDV":
        Q = 0.5 * v**2
        S = v * np.reshape(EH, v.shape) + LH
    else:
        Q = v * u
        S = v * EH[0] + u * EH[1] + LH
    return Q, S, H
