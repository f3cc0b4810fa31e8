"""Dyadic shifted maximal operators and vector-valued norm ratios.

``shifted_max_1d(f, n)`` computes, for every cell x, the sup over all dyadic
levels of the mean of ``|f|`` over the dyadic interval containing x shifted
left by n interval-lengths (``I -> I - n|I|``, staying dyadic).  ``n = 0``
recovers the dyadic Hardy-Littlewood maximal function.

Boundary convention is zero extension: a shifted interval falling outside the
array contributes no mass but keeps its full normalization.  A periodic
variant (``boundary='wrap'``) is provided for operators living on the torus,
where shifted dyadic blocks wrap around.
"""

from __future__ import annotations

import numpy as np

from .grid import GridFunction


def _level_means(arr: np.ndarray, axis: int) -> list[np.ndarray]:
    """Block means of ``arr`` along ``axis`` for block sizes 1, 2, 4, ..., N."""
    n = arr.shape[axis]
    means = [np.abs(arr)]
    cur = means[0]
    size = 1
    while size < n:
        cur = cur.reshape(cur.shape[:axis] + (cur.shape[axis] // 2, 2) + cur.shape[axis + 1 :]).mean(axis=axis + 1)
        means.append(cur)
        size *= 2
    return means


def _shifted_max_axis(arr: np.ndarray, n: int, axis: int, boundary: str) -> np.ndarray:
    if boundary not in ("zero", "wrap"):
        raise ValueError(f"unknown boundary convention {boundary!r}")
    n = int(round(n))
    size = arr.shape[axis]
    if size & (size - 1):
        raise ValueError("shifted maximal operator requires a power-of-two axis length")
    out = np.zeros_like(arr, dtype=np.float64)
    means = _level_means(np.abs(np.asarray(arr, dtype=np.float64)), axis)
    for lev, m in enumerate(means):
        nb = m.shape[axis]  # number of blocks at this level
        src = np.arange(nb) - n
        if boundary == "wrap":
            vals = np.take(m, src % nb, axis=axis)
        else:
            valid = (src >= 0) & (src < nb)
            vals = np.take(m, np.clip(src, 0, nb - 1), axis=axis)
            shape = [1] * arr.ndim
            shape[axis] = nb
            vals = vals * valid.reshape(shape)
        expanded = np.repeat(vals, size // nb, axis=axis)
        np.maximum(out, expanded, out=out)
    return out


def shifted_max_1d(f: np.ndarray, n: int, boundary: str = "zero") -> np.ndarray:
    """Dyadic shifted maximal function of a 1D array (treated as |f|)."""
    arr = np.asarray(f, dtype=np.float64)
    if arr.ndim != 1:
        raise ValueError("shifted_max_1d expects a 1D array")
    return _shifted_max_axis(arr, n, 0, boundary)


def shifted_max_2d(
    f: GridFunction,
    n1: float,
    n2: float,
    order: str = "12",
    boundary: str = "zero",
) -> GridFunction:
    """Composition of shifted maximal operators in the two variables.

    ``order='12'`` applies the second-variable operator first and then the
    first-variable operator (i.e. M1 o M2); ``order='21'`` swaps them.  Shift
    counts are rounded to integers.
    """
    if f.grid.dims != 2:
        raise ValueError("shifted_max_2d expects a 2D grid function")
    arr = np.abs(f.samples)
    if order == "12":
        arr = _shifted_max_axis(arr, int(round(n2)), 1, boundary)
        arr = _shifted_max_axis(arr, int(round(n1)), 0, boundary)
    elif order == "21":
        arr = _shifted_max_axis(arr, int(round(n1)), 0, boundary)
        arr = _shifted_max_axis(arr, int(round(n2)), 1, boundary)
    else:
        raise ValueError(f"order must be '12' or '21', got {order!r}")
    return GridFunction(f.grid, arr)


def _lq_aggregate(stack: np.ndarray, q: float) -> np.ndarray:
    if q == np.inf:
        return np.max(np.abs(stack), axis=0)
    return np.sum(np.abs(stack) ** q, axis=0) ** (1.0 / q)


def vv_norm_ratio(family: list[np.ndarray], n: int, p: float, q: float) -> float:
    """Vector-valued operator-norm sample for the shifted maximal operator.

    Returns ``|| (sum_k (M^(n) f_k)^q)^(1/q) ||_p / || (sum_k |f_k|^q)^(1/q) ||_p``
    over the given family (unit cell measure; the measure cancels).
    """
    if not 1 < p < np.inf:
        raise ValueError(f"p must be in (1, inf), got {p}")
    if not 1 < q:
        raise ValueError(f"q must be in (1, inf], got {q}")
    fam = np.asarray([np.abs(np.asarray(f, dtype=np.float64)) for f in family])
    denom_field = _lq_aggregate(fam, q)
    denom = float(np.sum(denom_field**p) ** (1.0 / p))
    if denom == 0.0:
        raise ValueError("trivial family: zero denominator")
    maxed = np.asarray([shifted_max_1d(f, n) for f in fam])
    num_field = _lq_aggregate(maxed, q)
    num = float(np.sum(num_field**p) ** (1.0 / p))
    return num / denom
