"""Fourier-symbol calculus on a uniform periodic time window.

The time axis is sampled at ``t_j = j * dt`` for ``j = 0 .. n_t - 1`` and
treated as periodic with period ``T = n_t * dt``.  Every temporal operator
in the package is a Fourier multiplier on this window:

==================  ==================================
operator            symbol at angular frequency ``xi``
==================  ==================================
Hilbert transform   ``-1j * sign(xi)``
plus half-deriv.    ``sqrt(1j * xi)`` (principal branch)
minus half-deriv.   ``conj(sqrt(1j * xi))``
time derivative     ``1j * xi``
rotated Hilbert     ``exp(1j * phi * sign(xi))``
==================  ==================================

Odd symbols vanish at ``xi = 0`` and at the Nyquist index, which keeps
outputs real and makes the product identities between the operators hold
mode by mode in floating point.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

__all__ = [
    "TimeGrid",
    "FrequencySymbols",
    "hilbert",
    "half_derivative",
    "time_derivative",
    "h_phi",
    "hs_norm",
    "l2_inner",
]


class ContractError(ValueError):
    """Input does not match the grid it is supposed to live on."""


@dataclass(frozen=True)
class TimeGrid:
    """Uniform periodic time sampling.

    Parameters
    ----------
    n_t : int
        Number of samples, a power of two and at least 4.
    dt : float
        Sample spacing.
    """

    n_t: int
    dt: float

    def __post_init__(self):
        n = int(self.n_t)
        if n < 4 or n & (n - 1):
            raise ValueError(f"n_t must be a power of two >= 4, got {self.n_t}")
        if not (np.isfinite(self.dt) and self.dt > 0):
            raise ValueError(f"dt must be positive, got {self.dt}")

    @classmethod
    def from_period(cls, n_t: int, period: float, padding: int = 1) -> "TimeGrid":
        """Grid with ``n_t * padding`` samples covering ``period * padding``."""
        if padding < 1 or padding & (padding - 1):
            raise ValueError(f"padding must be a power of two >= 1, got {padding}")
        return cls(n_t * padding, period / n_t)

    @property
    def period(self) -> float:
        return self.n_t * self.dt

    @property
    def t(self) -> np.ndarray:
        return np.arange(self.n_t) * self.dt

    @property
    def parseval_weight(self) -> float:
        """``w`` such that ``dt * sum(u * v) == w * sum(fft(u) * conj(fft(v)))``."""
        return self.dt / self.n_t

    @cached_property
    def symbols(self) -> "FrequencySymbols":
        return FrequencySymbols.for_grid(self)

    @property
    def n_half(self) -> int:
        """Number of one-sided (rfft) modes."""
        return self.n_t // 2 + 1

    @cached_property
    def rfft_weights(self) -> np.ndarray:
        """Parseval weights for one-sided spectra of real signals."""
        w = np.full(self.n_half, 2.0 * self.parseval_weight)
        w[0] = w[-1] = self.parseval_weight
        return w

    def check(self, v: np.ndarray, axis: int = 0) -> np.ndarray:
        v = np.asarray(v)
        if v.ndim == 0 or v.shape[axis] != self.n_t:
            raise ContractError(
                f"signal has {v.shape[axis] if v.ndim else 0} samples on axis {axis}, "
                f"grid has {self.n_t}"
            )
        return v


@dataclass(frozen=True)
class FrequencySymbols:
    """Angular frequencies in standard DFT order and the derived symbols."""

    xi: np.ndarray
    sgn_xi: np.ndarray
    sqrt_i_xi: np.ndarray
    i_xi: np.ndarray

    @classmethod
    def for_grid(cls, grid: TimeGrid) -> "FrequencySymbols":
        n = grid.n_t
        k = np.fft.fftfreq(n, d=1.0 / n)  # signed alias, Nyquist lands on -n/2
        xi = 2.0 * np.pi * k / grid.period
        sgn = np.sign(xi)
        sgn[n // 2] = 0.0
        mag = np.sqrt(np.abs(xi) / 2.0)
        sqrt_i_xi = mag * (1.0 + 1j * sgn)
        sqrt_i_xi[n // 2] = 0.0
        i_xi = 1j * xi * np.abs(sgn)
        for arr in (xi, sgn, sqrt_i_xi, i_xi):
            arr.setflags(write=False)
        return cls(xi, sgn, sqrt_i_xi, i_xi)

    def half(self, name: str) -> np.ndarray:
        """One-sided (rfft layout) view of a symbol; Nyquist mapped to +n/2."""
        arr = getattr(self, name)
        n = arr.shape[0]
        out = arr[: n // 2 + 1].copy()
        if name == "xi":
            out[-1] = -arr[n // 2]
        return out


def _apply(v: np.ndarray, grid: TimeGrid, symbol: np.ndarray) -> np.ndarray:
    v = grid.check(v)
    if not np.all(np.isfinite(v)):
        raise ContractError("signal has non-finite samples")
    vh = np.fft.fft(v, axis=0)
    shape = (-1,) + (1,) * (v.ndim - 1)
    return np.fft.ifft(symbol.reshape(shape) * vh, axis=0).real


def hilbert(v: np.ndarray, grid: TimeGrid) -> np.ndarray:
    """Discrete Hilbert transform along axis 0."""
    return _apply(v, grid, -1j * grid.symbols.sgn_xi)


def half_derivative(v: np.ndarray, grid: TimeGrid, branch: str = "plus") -> np.ndarray:
    """Half-order time derivative; ``branch`` is ``"plus"`` or ``"minus"``."""
    if branch == "plus":
        sym = grid.symbols.sqrt_i_xi
    elif branch == "minus":
        sym = np.conj(grid.symbols.sqrt_i_xi)
    else:
        raise ValueError(f"branch must be 'plus' or 'minus', got {branch!r}")
    return _apply(v, grid, sym)


def time_derivative(v: np.ndarray, grid: TimeGrid) -> np.ndarray:
    """Spectral first derivative with the Nyquist mode removed."""
    return _apply(v, grid, grid.symbols.i_xi)


def _check_phi(phi: float) -> None:
    if not (0.0 <= phi <= np.pi / 2):
        raise ValueError(f"phi must lie in [0, pi/2], got {phi}")


def h_phi(v: np.ndarray, grid: TimeGrid, phi: float) -> np.ndarray:
    """``cos(phi) v - sin(phi) H v``."""
    _check_phi(phi)
    v = grid.check(v)
    return np.cos(phi) * v - np.sin(phi) * hilbert(v, grid)


def h_phi_symbol(grid: TimeGrid, phi: float) -> np.ndarray:
    _check_phi(phi)
    return np.cos(phi) + 1j * np.sin(phi) * grid.symbols.sgn_xi


def hs_norm(v: np.ndarray, grid: TimeGrid, s: float) -> float:
    """Fourier ``H^s`` norm; ``s = 0`` gives the discrete ``L^2(0, T)`` norm.

    Trailing axes of ``v`` are summed in the Euclidean sense.
    """
    if not (0.0 <= s <= 1.0):
        raise ValueError(f"s must lie in [0, 1], got {s}")
    v = grid.check(v)
    vh = np.fft.fft(v, axis=0)
    weight = (1.0 + grid.symbols.xi**2) ** s
    energy = np.abs(vh) ** 2
    if v.ndim > 1:
        energy = energy.reshape(grid.n_t, -1).sum(axis=1)
    return float(np.sqrt(grid.parseval_weight * np.dot(weight, energy)))


def l2_inner(u: np.ndarray, v: np.ndarray, grid: TimeGrid) -> float:
    """Rectangle-rule ``L^2(0, T)`` inner product (exact for trigonometric data)."""
    return float(grid.dt * np.sum(grid.check(u) * grid.check(v)))
