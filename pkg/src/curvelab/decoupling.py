"""Parabola extension operator, decoupling ratios, and local smoothing decay.

The extension of a density g on a frequency interval is
``E g(x) = int g(xi) exp(i (x1 xi + x2 xi^2)) dxi``.  Decoupling ratios
compare the weighted L^p norm of the full extension against the l^2
aggregate of its cap pieces on a ball of radius ``delta^-2``; evaluation is
on an integer lattice (the extension has frequency support of diameter <= 2,
so unit spacing oversamples it).

The local smoothing experiment measures the L^p gain of the sup over
dilation parameters of curve averages on a single frequency annulus.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import cutoffs
from ._kernels import uladder_sum
from .grid import GridFunction, TorusGrid, active_modes, annulus_band, norm_lp, philox_rng, random_field


@dataclass(frozen=True)
class CapDecomposition:
    """Disjoint caps ``[m delta, (m+1) delta)`` covering [0, 1] exactly."""

    delta: float
    caps: tuple[tuple[float, float], ...] = field(default=None)  # type: ignore[assignment]

    def __post_init__(self) -> None:
        n = 1.0 / self.delta
        if not (0 < self.delta <= 1) or abs(n - round(n)) > 1e-12 or (int(round(n)) & (int(round(n)) - 1)):
            raise ValueError(f"delta must be a dyadic fraction of 1, got {self.delta}")
        n = int(round(n))
        object.__setattr__(
            self, "caps", tuple((m * self.delta, (m + 1) * self.delta) for m in range(n))
        )

    @property
    def cap_count(self) -> int:
        return len(self.caps)


@dataclass(frozen=True)
class DecouplingWeight:
    """Ball weight ``(1 + |x - c| / radius)^(-decay_power)``."""

    center: tuple[float, float]
    radius: float
    decay_power: int = 10

    @property
    def cutoff_radius(self) -> float:
        return 4.0 * self.radius

    def __call__(self, x1: np.ndarray, x2: np.ndarray) -> np.ndarray:
        d = np.hypot(np.asarray(x1) - self.center[0], np.asarray(x2) - self.center[1])
        return (1.0 + d / self.radius) ** (-float(self.decay_power))


def _cap_nodes(cap: tuple[float, float], quad_depth: int) -> tuple[np.ndarray, np.ndarray]:
    lo, hi = cap
    if hi <= lo:
        raise ValueError("empty cap")
    t = lo + (np.arange(quad_depth) + 0.5) * (hi - lo) / quad_depth
    w = np.full(quad_depth, (hi - lo) / quad_depth)
    return t, w


def extension(g, cap: tuple[float, float], eval_points: np.ndarray, quad_depth: int = 64) -> np.ndarray:
    """Extension integral at arbitrary evaluation points ((P, 2) array)."""
    t, w = _cap_nodes(cap, quad_depth)
    gv = np.asarray(g(t), dtype=np.complex128) * w
    pts = np.asarray(eval_points, dtype=np.float64).reshape(-1, 2)
    out = np.empty(pts.shape[0], dtype=np.complex128)
    chunk = max(1, int(4e6) // max(t.size, 1))
    for p0 in range(0, pts.shape[0], chunk):
        sl = slice(p0, p0 + chunk)
        ph = np.exp(1j * (np.outer(pts[sl, 0], t) + np.outer(pts[sl, 1], t * t)))
        out[sl] = ph @ gv
    return out


def _extension_on_grid(gv: np.ndarray, t: np.ndarray, x1: np.ndarray, x2: np.ndarray) -> np.ndarray:
    """Separable evaluation on a product lattice: (X1, M) @ (M, X2) matmul."""
    A = np.exp(1j * np.outer(x1, t)) * gv[None, :]
    B = np.exp(1j * np.outer(t * t, x2))
    return A @ B


def _ratio_for_density(gv, t, w, caps_idx, x1, x2, weight, p) -> float:
    gvw = gv * w
    full = _extension_on_grid(gvw, t, x1, x2)
    wgt = weight(x1[:, None], x2[None, :])
    num = float((np.sum(wgt * np.abs(full) ** p)) ** (1.0 / p))
    denom_sq = 0.0
    for sl in caps_idx:
        piece = _extension_on_grid(gvw[sl], t[sl], x1, x2)
        denom_sq += float((np.sum(wgt * np.abs(piece) ** p)) ** (1.0 / p)) ** 2
    denom = np.sqrt(denom_sq)
    if denom == 0.0:
        raise ValueError("zero density: decoupling ratio undefined")
    return num / denom


def decoupling_ratio(
    g,
    delta: float,
    p: float,
    trials: int = 32,
    seed: int = 0,
    quad_depth: int = 64,
) -> float:
    """Ratio of the full-extension norm to the l^2 cap aggregate.

    ``g`` may be a callable density on [0, 1]; ``g = None`` draws ``trials``
    random densities (independent complex Gaussians per delta-cell, the
    random mode) and returns the max ratio.
    """
    if not 2 <= p <= 4:
        raise ValueError(f"p must be in [2, 4], got {p}")
    decomp = CapDecomposition(delta)
    weight = DecouplingWeight(center=(0.0, 0.0), radius=delta**-2)
    R = weight.cutoff_radius
    x1 = np.arange(-R, R + 0.5, 1.0)
    x2 = x1.copy()
    # common node set: the full-interval extension is the exact sum of the
    # per-cap extensions over the same nodes
    nodes = []
    caps_idx = []
    pos = 0
    for cap in decomp.caps:
        t, w = _cap_nodes(cap, quad_depth)
        nodes.append((t, w))
        caps_idx.append(slice(pos, pos + t.size))
        pos += t.size
    t = np.concatenate([n[0] for n in nodes])
    w = np.concatenate([n[1] for n in nodes])

    if g is not None:
        gv = np.asarray(g(t), dtype=np.complex128)
        return _ratio_for_density(gv, t, w, caps_idx, x1, x2, weight, p)

    best = 0.0
    for trial in range(trials):
        rng = philox_rng(seed, 101, trial)
        cells = (rng.standard_normal(decomp.cap_count) + 1j * rng.standard_normal(decomp.cap_count)) / np.sqrt(2)
        gv = cells[np.minimum((t / delta).astype(int), decomp.cap_count - 1)]
        best = max(best, _ratio_for_density(gv, t, w, caps_idx, x1, x2, weight, p))
    return best


def bilinear_ratio(
    g1,
    g2,
    R1: tuple[float, float],
    R2: tuple[float, float],
    nu: float,
    p4_points: tuple[np.ndarray, np.ndarray],
    quad_depth: int = 128,
) -> float:
    """Transversal bilinear restriction ratio on a product lattice.

    ``|| |E1 g1 E2 g2|^(1/2) ||_L4(lattice) / (||g1||_2 ||g2||_2)^(1/2)``;
    raises if the intervals are closer than ``nu``.
    """
    gap = max(R2[0] - R1[1], R1[0] - R2[1])
    if gap < nu:
        raise ValueError(f"transversality violated: separation {gap:g} < nu = {nu:g}")
    x1, x2 = p4_points
    x1 = np.asarray(x1, dtype=np.float64)
    x2 = np.asarray(x2, dtype=np.float64)
    cell = (x1[1] - x1[0]) * (x2[1] - x2[0])
    t1, w1 = _cap_nodes(R1, quad_depth)
    t2, w2 = _cap_nodes(R2, quad_depth)
    gv1 = np.asarray(g1(t1), dtype=np.complex128)
    gv2 = np.asarray(g2(t2), dtype=np.complex128)
    E1 = _extension_on_grid(gv1 * w1, t1, x1, x2)
    E2 = _extension_on_grid(gv2 * w2, t2, x1, x2)
    num = float((cell * np.sum(np.abs(E1 * E2) ** 2)) ** 0.25)
    n1 = float(np.sum(np.abs(gv1) ** 2 * w1) ** 0.5)
    n2 = float(np.sum(np.abs(gv2) ** 2 * w2) ** 0.5)
    if n1 == 0 or n2 == 0:
        return 0.0
    return num / np.sqrt(n1 * n2)


# ---------------------------------------------------------------------------
# local smoothing


def dilated_average_sup(
    f: GridFunction,
    alpha: float,
    u_ladder: np.ndarray,
    nodes: int | None = None,
) -> GridFunction:
    """Pointwise sup over the dilation ladder of the window-averaged curve
    integral ``A_u f = int f(x - u t, y - u t^a) w(t) dt``.

    The ladder must be uniform (the frequency accumulation uses a phase
    recurrence across it).
    """
    grid = f.grid
    u_ladder = np.asarray(u_ladder, dtype=np.float64)
    if u_ladder.size == 1:
        du = 1.0
    else:
        steps = np.diff(u_ladder)
        if not np.allclose(steps, steps[0], rtol=1e-12, atol=0):
            raise ValueError("u ladder must be uniform")
        du = float(steps[0])
    spec = f.spectrum
    flat = spec.ravel()
    modes = active_modes(spec)
    N = grid.n_points
    xi = grid.freqs[modes // N]
    eta = grid.freqs[modes % N]
    # node count resolving the oscillation of exp(-i u (xi t + eta t^a))
    fmax = float(np.max(np.hypot(xi, eta))) if modes.size else 1.0
    rate = 2.0 * fmax * (1.0 + alpha * 3.0 ** (alpha - 1.0))
    n_nodes = nodes if nodes is not None else int(max(256, 5 * 2.5 * rate / (2 * np.pi)))
    dt = 2.5 / n_nodes
    t = 0.5 + (np.arange(n_nodes) + 0.5) * dt
    w = cutoffs.averaging_bump(t) * dt
    s = t**alpha
    acc = uladder_sum(flat[modes], xi, eta, t, s, w, float(u_ladder[0]), du, u_ladder.size)
    sup = np.zeros(grid.shape, dtype=np.float64)
    out_spec = np.zeros(N * N, dtype=np.complex128)
    for q in range(u_ladder.size):
        out_spec[:] = 0
        out_spec[modes] = acc[q]
        vals = np.abs(np.fft.ifftn(out_spec.reshape(grid.shape)))
        np.maximum(sup, vals, out=sup)
    return GridFunction(grid, sup)


def local_smoothing_decay(
    k: int,
    p: float,
    alpha: float,
    u_samples: int,
    grid: TorusGrid,
    trials: int = 4,
    seed: int = 0,
) -> float:
    """Max over random annulus fields of the sup-average L^p ratio.

    Draws random fields on the annulus at scale ``2^k``, forms the sup over a
    ``u_samples``-point ladder in [1, 2] of the dilation averages, and
    returns the max of ``||sup_u |A_u f|||_p / ||f||_p`` over trials.
    """
    if p <= 2:
        raise ValueError(f"local smoothing measurement needs p > 2, got {p}")
    if u_samples <= 2**k / 8:
        raise ValueError(f"u-ladder under-resolved: need more than 2^k/8 = {2**k / 8:g} samples")
    u_ladder = np.linspace(1.0, 2.0, u_samples)
    best = 0.0
    for trial in range(trials):
        f = random_field(grid, seed, annulus_band(k), 7, trial)
        sup = dilated_average_sup(f, alpha, u_ladder)
        best = max(best, norm_lp(sup, p) / norm_lp(f, p))
    return best
