"""Periodic sampled-function substrate.

Everything downstream acts on complex-valued functions sampled on a uniform
grid over the torus ``[-L/2, L/2)^d`` (d = 1 or 2).  The grid resolution is a
power of two so dyadic frequency bands align with the FFT lattice; the
frequency lattice per axis is ``{2*pi*k/L : k = -N/2, ..., N/2 - 1}``.

Translations by arbitrary (off-lattice) offsets are realized spectrally, i.e.
by multiplying Fourier coefficients with the corresponding phase.  For
band-limited data this is exact, which is what makes several operator
identities in this package hold to machine precision rather than to
quadrature accuracy.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Sequence

import numpy as np


def _is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class TorusGrid:
    """Uniform periodic grid on ``[-L/2, L/2)^dims``."""

    n_points: int
    side_length: float
    dims: int = 2

    def __post_init__(self) -> None:
        if not isinstance(self.n_points, (int, np.integer)) or not _is_power_of_two(int(self.n_points)):
            raise ValueError(f"n_points must be a power of two, got {self.n_points}")
        if self.n_points < 8:
            raise ValueError(f"n_points must be >= 8, got {self.n_points}")
        if not self.side_length > 0:
            raise ValueError(f"side_length must be positive, got {self.side_length}")
        if self.dims not in (1, 2):
            raise ValueError(f"dims must be 1 or 2, got {self.dims}")

    @property
    def spacing(self) -> float:
        return self.side_length / self.n_points

    @property
    def cell_volume(self) -> float:
        return self.spacing**self.dims

    @property
    def nyquist(self) -> float:
        """Largest frequency magnitude carried by the lattice, ``pi*N/L``."""
        return np.pi * self.n_points / self.side_length

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n_points,) * self.dims

    @cached_property
    def coords(self) -> np.ndarray:
        """Sample coordinates along one axis."""
        n, L = self.n_points, self.side_length
        return -L / 2 + L * np.arange(n) / n

    @cached_property
    def freqs(self) -> np.ndarray:
        """Angular frequencies along one axis, in FFT order."""
        return 2 * np.pi * np.fft.fftfreq(self.n_points, d=self.spacing)

    def coord_mesh(self) -> tuple[np.ndarray, ...]:
        if self.dims == 1:
            return (self.coords,)
        x, y = np.meshgrid(self.coords, self.coords, indexing="ij")
        return x, y

    def freq_mesh(self) -> tuple[np.ndarray, ...]:
        if self.dims == 1:
            return (self.freqs,)
        xi, eta = np.meshgrid(self.freqs, self.freqs, indexing="ij")
        return xi, eta


def make_grid(n_points: int, side_length: float, dims: int = 2) -> TorusGrid:
    """Construct a :class:`TorusGrid`, validating the lattice preconditions."""
    return TorusGrid(int(n_points), float(side_length), int(dims))


@dataclass(frozen=True)
class GridFunction:
    """Complex samples on a :class:`TorusGrid`.

    Samples index as ``samples[i]`` (1D) or ``samples[i, j]`` with ``i`` the
    x-axis and ``j`` the y-axis.  Instances are treated as immutable; all
    operations return new functions.
    """

    grid: TorusGrid
    samples: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.samples, dtype=np.complex128)
        if arr.shape != self.grid.shape:
            raise ValueError(f"samples shape {arr.shape} does not match grid shape {self.grid.shape}")
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "samples", arr)

    @cached_property
    def spectrum(self) -> np.ndarray:
        """Forward FFT of the samples (unnormalized, numpy convention)."""
        spec = np.fft.fftn(self.samples)
        spec.flags.writeable = False
        return spec

    @classmethod
    def from_spectrum(cls, grid: TorusGrid, spectrum: np.ndarray) -> "GridFunction":
        return cls(grid, np.fft.ifftn(np.asarray(spectrum, dtype=np.complex128)))

    @classmethod
    def from_callable(cls, grid: TorusGrid, fn: Callable[..., np.ndarray]) -> "GridFunction":
        return cls(grid, fn(*grid.coord_mesh()))

    def with_samples(self, samples: np.ndarray) -> "GridFunction":
        return GridFunction(self.grid, samples)

    def abs(self) -> "GridFunction":
        return GridFunction(self.grid, np.abs(self.samples))


def norm_lp(f: GridFunction, p: float) -> float:
    """Riemann-sum L^p norm; ``p = inf`` gives the max of ``|f|``."""
    if not np.all(np.isfinite(f.samples)):
        raise ValueError("norm_lp requires finite samples")
    if p == np.inf:
        return float(np.max(np.abs(f.samples)))
    if p < 1:
        raise ValueError(f"norm_lp requires p >= 1, got {p}")
    return float((f.grid.cell_volume * np.sum(np.abs(f.samples) ** p)) ** (1.0 / p))


def spectral_shift(f: GridFunction, dx: float, dy: float = 0.0) -> GridFunction:
    """Band-limited translate: returns ``z -> f(x - dx, y - dy)``.

    Exact for band-limited ``f``; shifting by a full period is the identity.
    """
    if f.grid.dims == 1:
        phase = np.exp(-1j * f.grid.freqs * dx)
        return GridFunction.from_spectrum(f.grid, f.spectrum * phase)
    xi, eta = f.grid.freq_mesh()
    phase = np.exp(-1j * (xi * dx + eta * dy))
    return GridFunction.from_spectrum(f.grid, f.spectrum * phase)


@dataclass(frozen=True)
class BandSpec:
    """Frequency-band descriptor for :func:`random_field`.

    kind 'annulus': modes with ``|freq| / 2^k`` in ``[1, 2]`` (the plateau of
    the radial projection at scale ``2^k``, so projecting the field onto that
    annulus reproduces it exactly).  kind 'rect': signed per-axis windows.
    """

    kind: str
    k: float | None = None
    xi: tuple[float, float] | None = None
    eta: tuple[float, float] | None = None

    def mask(self, grid: TorusGrid) -> np.ndarray:
        if self.kind == "annulus":
            if self.k is None:
                raise ValueError("annulus band needs k")
            if grid.dims == 2:
                fx, fy = grid.freq_mesh()
                r = np.hypot(fx, fy)
            else:
                r = np.abs(grid.freqs)
            s = 2.0**self.k
            return (r >= s) & (r <= 2 * s)
        if self.kind == "rect":
            if self.xi is None:
                raise ValueError("rect band needs xi window")
            if grid.dims == 1:
                fx = grid.freqs
                m = (fx >= self.xi[0]) & (fx <= self.xi[1])
                return m
            fx, fy = grid.freq_mesh()
            m = (fx >= self.xi[0]) & (fx <= self.xi[1])
            if self.eta is not None:
                m &= (fy >= self.eta[0]) & (fy <= self.eta[1])
            return m
        raise ValueError(f"unknown band kind {self.kind!r}")


def annulus_band(k: float) -> BandSpec:
    return BandSpec(kind="annulus", k=k)


def rect_band(xi: tuple[float, float], eta: tuple[float, float] | None = None) -> BandSpec:
    return BandSpec(kind="rect", xi=xi, eta=eta)


def philox_rng(seed: int, *stream: int) -> np.random.Generator:
    """Counter-based generator; distinct ``stream`` tags give independent
    streams for the same seed, so trial i never depends on trial ordering."""
    key = np.array([np.uint64(seed & 0xFFFFFFFFFFFFFFFF), np.uint64(0)], dtype=np.uint64)
    counter = np.zeros(4, dtype=np.uint64)
    for i, s in enumerate(stream[:3]):
        counter[i + 1] = np.uint64(s & 0xFFFFFFFFFFFFFFFF)
    return np.random.Generator(np.random.Philox(key=key, counter=counter))


def random_field(grid: TorusGrid, seed: int, spectrum: BandSpec, *stream: int) -> GridFunction:
    """Gaussian random field supported on the requested frequency band.

    Independent standard complex Gaussian coefficients on the band, zero
    elsewhere; deterministic given (seed, stream).  Normalized so the
    expected L^2 norm is 1.
    """
    mask = spectrum.mask(grid)
    n_modes = int(np.count_nonzero(mask))
    if n_modes == 0:
        raise ValueError("empty band: no lattice frequencies selected")
    rng = philox_rng(seed, *stream)
    g = (rng.standard_normal(n_modes) + 1j * rng.standard_normal(n_modes)) / np.sqrt(2.0)
    spec = np.zeros(grid.shape, dtype=np.complex128)
    # fixed fill order: flat index order of the mask
    spec[mask] = g
    scale = grid.n_points**grid.dims / np.sqrt(n_modes * grid.side_length**grid.dims)
    return GridFunction.from_spectrum(grid, spec * scale)


def active_modes(spectrum: np.ndarray, rel_tol: float = 1e-12) -> np.ndarray:
    """Flat indices of coefficients above ``rel_tol`` times the peak.

    FFT round trips leave O(eps) dust on every mode; operators that walk the
    active spectrum use this mask so band-limited inputs stay cheap.
    """
    flat = np.abs(np.asarray(spectrum).ravel())
    peak = flat.max()
    if peak == 0.0:
        return np.zeros(0, dtype=np.int64)
    return np.nonzero(flat > rel_tol * peak)[0]


@dataclass(frozen=True)
class FitResult:
    """Least-squares line through ``(log2 abscissa, log2 value)`` pairs."""

    slope: float
    intercept: float
    r_squared: float
    points: tuple[tuple[float, float], ...]


def power_law_fit(points: Sequence[tuple[float, float]]) -> FitResult:
    """Fit ``log2(value) = slope*log2(abscissa) + intercept`` by least squares."""
    pts = [(float(a), float(v)) for a, v in points]
    if len(pts) < 3:
        raise ValueError(f"power-law fit needs at least 3 points, got {len(pts)}")
    if any(a <= 0 or v <= 0 for a, v in pts):
        raise ValueError("power-law fit needs positive abscissae and values")
    la = np.log2([a for a, _ in pts])
    lv = np.log2([v for _, v in pts])
    A = np.vstack([la, np.ones_like(la)]).T
    (slope, intercept), res, *_ = np.linalg.lstsq(A, lv, rcond=None)
    ss_tot = float(np.sum((lv - lv.mean()) ** 2))
    if ss_tot == 0.0:
        r2 = 1.0
    else:
        ss_res = float(np.sum((lv - A @ [slope, intercept]) ** 2))
        r2 = 1.0 - ss_res / ss_tot
    log_pts = tuple((float(a), float(v)) for a, v in zip(la, lv))
    return FitResult(float(slope), float(intercept), float(r2), log_pts)
