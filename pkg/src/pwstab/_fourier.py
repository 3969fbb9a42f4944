"""Periodic differentiation and interpolation on uniform grids."""

import numpy as np

from .errors import GridTooCoarse

MIN_POINTS = 8


def wavenumbers(n, length):
    """Angular wavenumbers for ``np.fft.fft`` ordering; the Nyquist entry is zeroed."""
    k = 2.0 * np.pi * np.fft.fftfreq(n, d=length / n)
    if n % 2 == 0:
        k[n // 2] = 0.0
    return k


def diff(u, length, order=1, method="spectral"):
    """Derivative of periodic samples ``u`` (last axis) on ``[0, length)``."""
    u = np.asarray(u, dtype=float)
    n = u.shape[-1]
    if n < MIN_POINTS:
        raise GridTooCoarse(f"need at least {MIN_POINTS} grid points, got {n}")
    if method == "spectral":
        out = u
        k = wavenumbers(n, length)
        for _ in range(order):
            out = np.real(np.fft.ifft(1j * k * np.fft.fft(out, axis=-1), axis=-1))
        return out
    if method == "fd4":
        h = length / n
        out = u
        for _ in range(order):
            out = (
                -np.roll(out, -2, axis=-1) + 8 * np.roll(out, -1, axis=-1)
                - 8 * np.roll(out, 1, axis=-1) + np.roll(out, 2, axis=-1)
            ) / (12 * h)
        return out
    raise ValueError(f"unknown derivative method {method!r}")


def shift(u, s, length):
    """Return samples of ``x -> u(x - s)`` using the trigonometric interpolant."""
    n = u.shape[-1]
    k = 2.0 * np.pi * np.fft.fftfreq(n, d=length / n)
    phase = np.exp(-1j * k * s)
    if n % 2 == 0:
        # keep the Nyquist mode real so the shifted field stays real
        phase[n // 2] = np.cos(k[n // 2] * s)
    return np.real(np.fft.ifft(np.fft.fft(u, axis=-1) * phase, axis=-1))


def differentiation_matrix(m):
    """Fourier collocation first-derivative matrix on ``m`` (odd) points of [0, 2*pi)."""
    if m % 2 == 0:
        raise ValueError("collocation grid must have an odd number of points")
    j = np.arange(m)
    diffidx = j[:, None] - j[None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        d = 0.5 * (-1.0) ** diffidx / np.sin(np.pi * diffidx / m)
    d[diffidx == 0] = 0.0
    return d
