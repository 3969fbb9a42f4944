"""Stability verdicts from the action Hessian, the constraints matrix and operator signatures.

All sign tests are three-valued: positive, negative, or inside a relative
tolerance band, in which case the verdict is ``Degenerate``.
"""

from dataclasses import asdict, dataclass, field

import numpy as np
from numpy.polynomial import Polynomial

from .errors import BadDimension, NotApplicable, SignatureContradiction, SingularC

# coperiodic verdicts
UNSTABLE_BY_DET = "UnstableByDet"
INCONCLUSIVE_BY_DET = "InconclusiveByDet"
DEGENERATE = "Degenerate"
# johnson verdicts
ORBITALLY_STABLE = "OrbitallyStable"
INCONCLUSIVE = "Inconclusive"
NOT_APPLICABLE = "NotApplicable"
# modulational verdicts
HYPERBOLIC = "Hyperbolic"
WEAKLY_HYPERBOLIC = "WeaklyHyperbolic"
NOT_HYPERBOLIC = "NotHyperbolic"

# integer codes used in sweep tables
VERDICT_CODES = {
    UNSTABLE_BY_DET: 1, INCONCLUSIVE_BY_DET: 0,
    ORBITALLY_STABLE: 0, INCONCLUSIVE: 1, NOT_APPLICABLE: 3,
    HYPERBOLIC: 0, WEAKLY_HYPERBOLIC: 1, NOT_HYPERBOLIC: 2,
    DEGENERATE: -1,
}

# speeds are computed from a finite-difference Hessian, so realness is judged
# on a looser scale than the sign tests
SPEED_IMAG_TOL = 1e-6


def _sigma(Sigma):
    Sigma = np.asarray(Sigma, dtype=float)
    if Sigma.ndim != 2 or Sigma.shape[0] != Sigma.shape[1] or Sigma.shape[0] not in (3, 4):
        raise BadDimension(f"Sigma must be 3x3 or 4x4, got shape {Sigma.shape}")
    return Sigma


def coperiodic_test(Sigma, N=None, sign_tol=1e-8):
    """Parity verdict from det Sigma: an odd count of positive real eigenvalues is forced by its sign."""
    Sigma = _sigma(Sigma)
    if N is None:
        N = Sigma.shape[0] - 2
    if N not in (1, 2) or Sigma.shape[0] != N + 2:
        raise BadDimension(f"N={N} does not match Sigma of size {Sigma.shape[0]}")
    scale = np.max(np.abs(Sigma)) ** (N + 2)
    det = np.linalg.det(Sigma)
    if abs(det) <= sign_tol * scale:
        return DEGENERATE
    unstable_sign = 1.0 if N == 1 else -1.0
    return UNSTABLE_BY_DET if det * unstable_sign > 0 else INCONCLUSIVE_BY_DET


def johnson_test(Sigma, sign_tol=1e-8):
    """Orbital stability for N = 1 from Theta_mumu > 0 together with det Sigma < 0."""
    Sigma = _sigma(Sigma)
    if Sigma.shape[0] != 3:
        raise NotApplicable("the two-condition orbital test is stated for scalar (N = 1) models only")
    norm = np.max(np.abs(Sigma))
    t_mm = Sigma[0, 0]
    det = np.linalg.det(Sigma)
    if abs(t_mm) <= sign_tol * norm or abs(det) <= sign_tol * norm**3:
        return DEGENERATE
    if t_mm > 0 and det < 0:
        return ORBITALLY_STABLE
    return INCONCLUSIVE


def _det_poly(M):
    """Determinant of a small matrix of Polynomials by cofactor expansion along the first row."""
    n = len(M)
    if n == 1:
        return M[0][0]
    if n == 2:
        return M[0][0] * M[1][1] - M[0][1] * M[1][0]
    total = Polynomial([0.0])
    for j in range(n):
        minor = [row[:j] + row[j + 1:] for row in M[1:]]
        term = M[0][j] * _det_poly(minor)
        total = total + term if j % 2 == 0 else total - term
    return total


def characteristic_polynomial(Sigma, S, c, theta_mu):
    """p(s) = det((c - s) Sigma + Theta_mu S), ascending coefficients."""
    Sigma = np.asarray(Sigma, dtype=float)
    S = np.asarray(S, dtype=float)
    n = Sigma.shape[0]
    M = [[Polynomial([c * Sigma[i, j] + theta_mu * S[i, j], -Sigma[i, j]]) for j in range(n)] for i in range(n)]
    return _det_poly(M)


def kdv_modulation_matrix(Sigma):
    """S^{-1} Sigma for N = 1, written out in terms of second derivatives of Theta."""
    Sigma = _sigma(Sigma)
    return np.array([-Sigma[2], Sigma[1], -Sigma[0]])


def cubic_discriminant(coeffs):
    """Discriminant of a cubic given by ascending coefficients (d, c, b, a)."""
    d, c, b, a = coeffs
    return 18 * a * b * c * d - 4 * b**3 * d + b**2 * c**2 - 4 * a * c**3 - 27 * a**2 * d**2


def modulational_speeds(whitham, sign_tol=1e-8, imag_tol=SPEED_IMAG_TOL):
    """Characteristic speeds of the Whitham system and the hyperbolicity verdict."""
    Sigma = _sigma(whitham.Sigma)
    n = Sigma.shape[0]
    norm = np.max(np.abs(Sigma))
    if abs(np.linalg.det(Sigma)) <= sign_tol * norm**n:
        return [], DEGENERATE
    p = characteristic_polynomial(Sigma, whitham.S, whitham.c, whitham.theta_mu)
    speeds = np.roots(p.coef[::-1])
    order = np.lexsort((speeds.imag, speeds.real))
    speeds = speeds[order]
    smax = max(np.max(np.abs(speeds)), 1e-300)
    tol = imag_tol * smax
    if np.any(np.abs(speeds.imag) > tol):
        return list(speeds), NOT_HYPERBOLIC
    real = np.sort(speeds.real)
    if np.all(np.diff(real) > tol):
        return list(real.astype(complex)), HYPERBOLIC
    # repeated real speeds: count eigenvectors of each repeated speed
    i = 0
    while i < n:
        j = i
        while j + 1 < n and real[j + 1] - real[i] <= tol:
            j += 1
        mult = j - i + 1
        if mult > 1:
            s = np.mean(real[i:j + 1])
            pencil = (whitham.c - s) * Sigma + whitham.theta_mu * np.asarray(whitham.S)
            sv = np.linalg.svd(pencil, compute_uv=False)
            nullity = int(np.sum(sv <= np.sqrt(imag_tol) * sv[0]))
            if nullity < mult:
                return list(real.astype(complex)), NOT_HYPERBOLIC
        i = j + 1
    return list(real.astype(complex)), WEAKLY_HYPERBOLIC


@dataclass
class Signatures:
    neg_C: int
    neg_A: int | None = None
    neg_constrained: int | None = None
    orbital_by_signature: bool | None = None


def signature_report(C, negA=None, sign_tol=1e-8):
    """neg(-C), and with neg(A) the constrained count neg(A) - neg(-C)."""
    C = np.asarray(C, dtype=float)
    if negA is not None and negA < 0:
        raise ValueError("negA must be non-negative")
    eig = np.linalg.eigvalsh(-0.5 * (C + C.T))
    if np.any(np.abs(eig) <= sign_tol * max(1.0, np.max(np.abs(eig)))):
        raise SingularC(f"constraints matrix has an eigenvalue within tolerance of zero: {eig}")
    neg_C = int(np.sum(eig < 0))
    if negA is None:
        return Signatures(neg_C=neg_C)
    neg_con = int(negA) - neg_C
    if neg_con < 0:
        raise SignatureContradiction(f"neg(A) = {negA} is smaller than neg(-C) = {neg_C}")
    return Signatures(neg_C=neg_C, neg_A=int(negA), neg_constrained=neg_con, orbital_by_signature=neg_con == 0)


def cross_identity_check(Sigma, C):
    """Relative residual of Theta_mumu det C = det Sigma (N = 1 only)."""
    Sigma = _sigma(Sigma)
    if Sigma.shape[0] != 3:
        raise NotApplicable("the determinant identity is only established for N = 1")
    det = np.linalg.det(Sigma)
    lhs = Sigma[0, 0] * np.linalg.det(np.asarray(C, dtype=float))
    return float(abs(lhs - det) / max(abs(det), np.finfo(float).eps))


@dataclass
class StabilityReport:
    coperiodic: str
    johnson: str
    modulational: str
    speeds: list
    signatures: Signatures | None
    tolerances: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "coperiodic": self.coperiodic,
            "johnson": self.johnson,
            "modulational": {
                "verdict": self.modulational,
                "speeds": [[float(np.real(s)), float(np.imag(s))] for s in self.speeds],
            },
            "signatures": None if self.signatures is None else asdict(self.signatures),
            "tolerances": dict(self.tolerances),
        }
