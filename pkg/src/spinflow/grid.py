"""Periodic grids with Fourier-spectral differentiation and trapezoid quadrature."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.fft as sfft


@dataclass(frozen=True)
class TorusGrid:
    """Uniform grid on the flat torus prod_j [0, L_j).

    ``shape`` is the number of nodes per axis; ``lengths`` the periods.
    Fields live on the leading ``ndim`` axes of an array; trailing axes
    (spinor components, tensor indices) are carried along untouched.
    """

    shape: tuple[int, ...]
    lengths: tuple[float, ...] = field(default=None)

    def __post_init__(self):
        shape = tuple(int(s) for s in self.shape)
        lengths = self.lengths
        if lengths is None:
            lengths = (1.0,) * len(shape)
        lengths = tuple(float(x) for x in lengths)
        if len(lengths) != len(shape):
            raise ValueError("shape and lengths must have the same length")
        if any(s < 2 for s in shape) or any(x <= 0 for x in lengths):
            raise ValueError("grid sizes must be >= 2 and lengths positive")
        object.__setattr__(self, "shape", shape)
        object.__setattr__(self, "lengths", lengths)

    @classmethod
    def cube(cls, n: int, dim: int, length: float = 1.0) -> "TorusGrid":
        return cls((n,) * dim, (length,) * dim)

    @property
    def ndim(self) -> int:
        return len(self.shape)

    @property
    def cell_volume(self) -> float:
        return float(np.prod([L / n for L, n in zip(self.lengths, self.shape)]))

    @property
    def volume(self) -> float:
        return float(np.prod(self.lengths))

    def axes(self) -> tuple[int, ...]:
        return tuple(range(self.ndim))

    def coords(self) -> list[np.ndarray]:
        """Meshgrid of node coordinates (``indexing='ij'``)."""
        pts = [np.arange(n) * (L / n) for n, L in zip(self.shape, self.lengths)]
        return list(np.meshgrid(*pts, indexing="ij"))

    @cached_property
    def _k1(self) -> list[np.ndarray]:
        # angular wavenumbers per axis; Nyquist zeroed for odd derivatives
        out = []
        for n, L in zip(self.shape, self.lengths):
            k = 2 * np.pi * np.fft.fftfreq(n, d=L / n)
            if n % 2 == 0:
                k[n // 2] = 0.0
            out.append(k)
        return out

    @cached_property
    def _k2(self) -> list[np.ndarray]:
        return [(2 * np.pi * np.fft.fftfreq(n, d=L / n)) ** 2
                for n, L in zip(self.shape, self.lengths)]

    def _bcast(self, vec: np.ndarray, axis: int, extra: int) -> np.ndarray:
        shp = [1] * (self.ndim + extra)
        shp[axis] = vec.size
        return vec.reshape(shp)

    def check(self, arr: np.ndarray) -> None:
        if tuple(arr.shape[: self.ndim]) != self.shape:
            raise ValueError(f"field shape {arr.shape} incompatible with grid {self.shape}")

    def fft(self, arr):
        return sfft.fftn(arr, axes=self.axes())

    def ifft(self, arr):
        return sfft.ifftn(arr, axes=self.axes())

    def diff(self, arr: np.ndarray, axis: int, shift: float = 0.0) -> np.ndarray:
        """Spectral first derivative along ``axis``.

        ``shift`` adds ``shift`` (in cycles per period) to every wavenumber,
        i.e. differentiates e^{2 pi i shift x/L} * arr without forming the phase.
        """
        self.check(arr)
        extra = arr.ndim - self.ndim
        if shift == 0.0:
            k = self._k1[axis]
        else:
            # shifted wavenumbers 2 pi (m + shift) / L form a symmetric set for
            # shift = 1/2, so the Nyquist entry is kept
            n, L = self.shape[axis], self.lengths[axis]
            k = 2 * np.pi * (np.fft.fftfreq(n, d=1.0 / n) + shift) / L
        spec = sfft.fft(arr, axis=axis)
        out = sfft.ifft(1j * self._bcast(k, axis, extra) * spec, axis=axis)
        if shift == 0.0 and np.isrealobj(arr):
            return out.real
        return out

    def grad(self, arr: np.ndarray) -> list[np.ndarray]:
        return [self.diff(arr, j) for j in self.axes()]

    def hessian(self, arr: np.ndarray) -> np.ndarray:
        """Matrix of second derivatives, shape grid + (n, n)."""
        n = self.ndim
        g = self.grad(arr)
        out = np.empty(arr.shape + (n, n), dtype=arr.dtype)
        for i in range(n):
            for j in range(i, n):
                h = self.diff(g[i], j)
                out[..., i, j] = h
                out[..., j, i] = h
        return out

    def laplacian(self, arr: np.ndarray, shift=None) -> np.ndarray:
        """Spectral Laplacian (Nyquist mode kept: symmetric negative semidefinite)."""
        self.check(arr)
        extra = arr.ndim - self.ndim
        symbol = 0.0
        for j in self.axes():
            if shift is None or shift[j] == 0.0:
                k2 = self._k2[j]
            else:
                n, L = self.shape[j], self.lengths[j]
                k2 = (2 * np.pi * (np.fft.fftfreq(n, d=1.0 / n) + shift[j]) / L) ** 2
            symbol = symbol + self._bcast(k2, j, extra)
        out = self.ifft(-symbol * self.fft(arr))
        if np.isrealobj(arr) and shift is None:
            return out.real
        return out

    def k_squared(self) -> np.ndarray:
        """|k|^2 on the full spectral grid (Nyquist kept)."""
        total = 0.0
        for j in self.axes():
            total = total + self._bcast(self._k2[j], j, 0)
        return np.broadcast_to(total, self.shape).copy()

    def integrate(self, arr: np.ndarray, weight=None):
        """Trapezoid rule; exact for trigonometric polynomials below Nyquist."""
        if weight is not None:
            arr = arr * weight
        return np.sum(arr, axis=self.axes()) * self.cell_volume

    def scaled(self, factor: float) -> "TorusGrid":
        return TorusGrid(self.shape, tuple(factor * L for L in self.lengths))


def philox(seed: int, stream: int = 0) -> np.random.Generator:
    """Counter-based generator: Philox4x64 keyed by the 64-bit seed.

    ``stream`` is placed in the high word of the counter so independent
    fields drawn under one seed never overlap.
    """
    key = int(seed) & 0xFFFFFFFFFFFFFFFF
    counter = np.array([0, 0, 0, int(stream)], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key, counter=counter))


def band_limited_field(grid: TorusGrid, rng: np.random.Generator, kmax: int,
                       amplitude: float = 1.0, components: int | None = None,
                       real: bool = True) -> np.ndarray:
    """Random trigonometric polynomial with modes |k_j| <= kmax on every axis.

    Coefficients are drawn in a fixed order so the result depends only on
    the generator state. Real fields are normalised so max |value| == amplitude.
    """
    ncomp = 1 if components is None else components
    modes = 2 * kmax + 1
    size = (modes,) * grid.ndim + (ncomp,)
    coeff = rng.standard_normal(size) + 1j * rng.standard_normal(size)
    spec = np.zeros(grid.shape + (ncomp,), dtype=complex)
    idx = [np.r_[0:kmax + 1, -kmax:0] for _ in grid.shape]
    src = [np.r_[kmax:2 * kmax + 1, 0:kmax] for _ in grid.shape]
    spec[np.ix_(*idx, np.arange(ncomp))] = coeff[np.ix_(*src, np.arange(ncomp))]
    vals = grid.ifft(spec) * np.prod(grid.shape)
    if real:
        vals = vals.real
    scale = np.max(np.abs(vals))
    vals = vals * (amplitude / scale)
    return vals[..., 0] if components is None else vals
