"""Smooth cutoff family and Littlewood-Paley projections.

The dyadic family is built from the standard ``exp(-1/s)`` mollifier, so the
partition of unity is an algebraic (telescoping) identity rather than a
numerical approximation:

* ``base_bump`` : even, 1 on [-1, 1], supported in [-2, 2];
* ``psi0(t) = base_bump(t) - base_bump(2t)`` : nonnegative, supported on
  ``[-2, -1/2] u [1/2, 2]``, and ``sum_l psi0(2^-l t) = 1`` for ``t != 0``;
* ``fattened_bump`` : 1 on [-1, 1], supported in [-3, 3];
* ``averaging_bump`` : 1 on [1, 2], supported in [1/2, 3] (the one-sided
  window used by the dilation-averaging operator and the radial projection).

All projections are Fourier multipliers sampled exactly at lattice
frequencies, with symbols in [0, 1]; dyadic indices may be real-valued (the
multiplier is a genuine dilation, not a rounded index).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import GridFunction

CUTOFF_ID = "expstep-mollifier-v1"  # recorded in experiment metadata


def _h(s: np.ndarray) -> np.ndarray:
    """exp(-1/s) for s > 0, else 0."""
    s = np.asarray(s, dtype=np.float64)
    out = np.zeros_like(s)
    pos = s > 0
    out[pos] = np.exp(-1.0 / s[pos])
    return out


def smooth_step(s) -> np.ndarray:
    """C^inf step: 0 for s <= 0, 1 for s >= 1, strictly increasing between."""
    s = np.asarray(s, dtype=np.float64)
    a = _h(s)
    b = _h(1.0 - s)
    return a / (a + b)


def base_bump(t) -> np.ndarray:
    """Even bump: 1 on [-1, 1], support [-2, 2]."""
    return smooth_step(2.0 - np.abs(np.asarray(t, dtype=np.float64)))


def psi0(t) -> np.ndarray:
    """Dyadic partition generator, supported on 1/2 <= |t| <= 2."""
    t = np.asarray(t, dtype=np.float64)
    return base_bump(t) - base_bump(2.0 * t)


def psi(l: float, t) -> np.ndarray:
    """``psi0(2^-l t)``; supported on ``2^(l-1) <= |t| <= 2^(l+1)``."""
    return psi0(np.asarray(t, dtype=np.float64) * 2.0 ** (-float(l)))


def fattened_bump(t) -> np.ndarray:
    """1 on [-1, 1], support [-3, 3]."""
    t = np.asarray(t, dtype=np.float64)
    return smooth_step((t + 3.0) / 2.0) * smooth_step((3.0 - t) / 2.0)


def averaging_bump(t) -> np.ndarray:
    """1 on [1, 2], support [1/2, 3]."""
    t = np.asarray(t, dtype=np.float64)
    return smooth_step((t - 0.5) / 0.5) * smooth_step(3.0 - t)


@dataclass(frozen=True)
class CutoffFamily:
    """Bundle of the cutoff functions with a construction identifier.

    Measured constants (never exponents) depend on this construction; the id
    string is recorded alongside experiment output.
    """

    construction: str = CUTOFF_ID

    @property
    def base_bump(self):
        return base_bump

    @property
    def psi0(self):
        return psi0

    @property
    def fattened_bump(self):
        return fattened_bump

    @property
    def averaging_bump(self):
        return averaging_bump

    def psi(self, l: float, t) -> np.ndarray:
        return psi(l, t)


DEFAULT_FAMILY = CutoffFamily()


def _require_2d(f: GridFunction, op: str) -> None:
    if f.grid.dims != 2:
        raise ValueError(f"{op} requires a 2D grid function")


def _check_dyadic_band(k: float, nyquist: float) -> None:
    if 2.0 ** (float(k) + 1) > nyquist:
        raise ValueError(f"band out of range: 2^(k+1) = {2.0**(k+1):g} exceeds Nyquist {nyquist:g}")


def project_second(f: GridFunction, k: float) -> GridFunction:
    """Dyadic frequency projection in the y-variable (multiplier psi_k(eta))."""
    _require_2d(f, "project_second")
    _check_dyadic_band(k, f.grid.nyquist)
    eta = f.grid.freqs
    mult = psi(k, eta)[None, :]
    return GridFunction.from_spectrum(f.grid, f.spectrum * mult)


def project_first(f: GridFunction, k: float) -> GridFunction:
    """Dyadic frequency projection in the x-variable (multiplier psi_k(xi))."""
    _require_2d(f, "project_first")
    _check_dyadic_band(k, f.grid.nyquist)
    xi = f.grid.freqs
    mult = psi(k, xi)[:, None]
    return GridFunction.from_spectrum(f.grid, f.spectrum * mult)


def project_annulus(f: GridFunction, k: float) -> GridFunction:
    """Radial projection onto the annulus at scale ``2^k``.

    The multiplier is ``averaging_bump(2^-k r)``: identically 1 for
    ``r/2^k`` in [1, 2] and supported in [1/2, 3].
    """
    _require_2d(f, "project_annulus")
    if 3.0 * 2.0 ** float(k) > f.grid.nyquist:
        raise ValueError(
            f"band out of range: annulus support 3*2^k = {3.0 * 2.0**k:g} exceeds Nyquist {f.grid.nyquist:g}"
        )
    fx, fy = f.grid.freq_mesh()
    r = np.hypot(fx, fy)
    mult = averaging_bump(r * 2.0 ** (-float(k)))
    return GridFunction.from_spectrum(f.grid, f.spectrum * mult)


def project_cone(f: GridFunction, k: float) -> GridFunction:
    """Conical projection: retains frequencies with ``xi/eta`` in the dyadic
    band ``+-[2^(k-1), 2^(k+1)]``; the eta = 0 row is zeroed by convention."""
    _require_2d(f, "project_cone")
    fx, fy = f.grid.freq_mesh()
    mult = np.zeros_like(fx)
    nz = fy != 0
    mult[nz] = psi(k, fx[nz] / fy[nz])
    return GridFunction.from_spectrum(f.grid, f.spectrum * mult)
