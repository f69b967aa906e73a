"""ETDRK4 stepping for u_t = L u + N(u) with diagonal Fourier symbol L on a periodic extension."""
from __future__ import annotations

import math
from typing import Callable

import numpy as np

from .errors import ResolutionError

# contour points for the phi-function coefficients (Kassam & Trefethen)
_CONTOUR_M = 64


class ETDRK4:
    """Fourth-order exponential time differencing.

    Equilibria of the continuous problem are exact fixed points of the scheme,
    and the linear part is integrated with its exact multiplier e^{L h}.
    """

    def __init__(self, symbol: np.ndarray, nonlinear: Callable[[np.ndarray], np.ndarray]):
        self.symbol = np.asarray(symbol, dtype=complex)
        self.nonlinear = nonlinear
        self._cache: dict[float, tuple] = {}

    def coefficients(self, h: float):
        c = self._cache.get(h)
        if c is None:
            Lh = h * self.symbol
            r = np.exp(2j * np.pi * (np.arange(1, _CONTOUR_M + 1) - 0.5) / _CONTOUR_M)
            z = Lh[:, None] + r[None, :]
            ez = np.exp(z)
            Q = h * np.mean((np.exp(z / 2) - 1) / z, axis=1)
            f1 = h * np.mean((-4 - z + ez * (4 - 3 * z + z * z)) / z**3, axis=1)
            f2 = h * np.mean((2 + z + ez * (z - 2)) / z**3, axis=1)
            f3 = h * np.mean((-4 - 3 * z - z * z + ez * (4 - z)) / z**3, axis=1)
            c = (np.exp(Lh), np.exp(Lh / 2), Q, f1, f2, f3)
            if len(self._cache) > 64:
                self._cache.clear()
            self._cache[h] = c
        return c

    def step(self, vh: np.ndarray, h: float) -> np.ndarray:
        E, E2, Q, f1, f2, f3 = self.coefficients(h)
        N = self.nonlinear
        Nv = N(vh)
        a = E2 * vh + Q * Nv
        Na = N(a)
        b = E2 * vh + Q * Na
        Nb = N(b)
        c = E2 * a + Q * (2 * Nb - Nv)
        Nc = N(c)
        return E * vh + f1 * Nv + 2 * f2 * (Na + Nb) + f3 * Nc


def segment_steps(t0: float, t1: float, dt: float) -> tuple[int, float]:
    """Number and size of equal steps covering [t0, t1] with size <= dt."""
    span = t1 - t0
    m = max(1, math.ceil(span / dt - 1e-9))
    return m, span / m


def top_third_fraction(vh: np.ndarray, n: int | None = None) -> float:
    """Share of spectral energy in the top third of resolved wavenumbers.

    Pass the physical length n when vh is an rfft half-spectrum.
    """
    if n is None:
        n = len(vh)
        a = np.abs(np.fft.fftshift(vh)) ** 2
        kk = np.abs(np.arange(n) - n // 2)
    else:
        a = np.abs(vh) ** 2
        a[1 : (n + 1) // 2] *= 2
        kk = np.arange(len(vh))
    total = a.sum()
    if total == 0:
        return 0.0
    return float(a[kk > n // 3].sum() / total)


def check_resolution(vh: np.ndarray, threshold: float, t: float, n: int | None = None) -> None:
    frac = top_third_fraction(vh, n)
    if frac > threshold:
        raise ResolutionError(
            f"spectral energy fraction {frac:.3g} in the top third of wavenumbers exceeds {threshold:.3g} at t = {t:.6g}"
        )


def spectral_derivative(values: np.ndarray, xi: np.ndarray, order: int = 1) -> np.ndarray:
    vh = np.fft.fft(values)
    if order % 2 == 1 and len(values) % 2 == 0:
        vh[len(values) // 2] = 0.0
    return np.real(np.fft.ifft((1j * xi) ** order * vh))
