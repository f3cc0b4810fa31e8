"""Maximal averages and Hilbert transforms along variable plane curves.

The curve through the base point ``z = (x, y)`` is ``t -> (t, u(z) [t]^a)``
with ``[t]^a`` either ``|t|^a`` (even branch) or ``sgn(t)|t|^a`` (odd branch),
plus an optional linear term ``v(z) t`` in the second coordinate.

Evaluation strategy depends on how the coefficient field varies:

* constant ``u``: the operator is a Fourier multiplier, accumulated over
  quadrature nodes directly in the frequency domain (exact for band-limited
  inputs);
* one-variable ``u(x)``: x-shifts are uniform spectral shifts and
  y-displacements act as per-row phase multipliers on the y-spectrum.  Because
  those phases are diagonal in the y-frequency, the operator commutes with
  y-variable dyadic projections to machine precision by construction;
* fully two-dimensional ``u(x, y)``: each quadrature node requires a
  nonuniform evaluation of the band-limited interpolant (O(N^3) per node).

Principal-value quadrature uses symmetric open midpoint nodes
``+-(i + 1/2) dt`` so the odd kernel annihilates constants exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import cutoffs
from ._kernels import general_y_eval, phase_sum, rowphase_accum
from .grid import GridFunction, TorusGrid, active_modes
from .oscillatory import fresnel_segment
from .shifted import shifted_max_2d

Parity = str  # 'even' | 'odd'


def bracket_power(t: np.ndarray, alpha: float, parity: Parity) -> np.ndarray:
    """``[t]^alpha``: even branch ``|t|^a``, odd branch ``sgn(t)|t|^a``."""
    t = np.asarray(t, dtype=np.float64)
    mag = np.abs(t) ** alpha
    if parity == "even":
        return mag
    if parity == "odd":
        return np.sign(t) * mag
    raise ValueError(f"parity must be 'even' or 'odd', got {parity!r}")


@dataclass(frozen=True)
class CurveField:
    """Coefficient field of the curve, with its regularity class tag.

    ``u_class`` is one of 'constant', 'one-variable', 'lipschitz',
    'measurable'.  One-variable fields satisfy ``u(x, y) = u(x, 0)`` exactly
    (the evaluator is only ever called with the x coordinate); Lipschitz
    fields carry their recorded Lipschitz norm.
    """

    alpha: float
    u: float | Callable
    u_class: str
    parity: Parity = "even"
    v: float | Callable | None = None
    lip_norm: float | None = None

    def __post_init__(self) -> None:
        if self.alpha <= 0 or self.alpha == 1.0:
            raise ValueError(f"alpha must be positive and != 1, got {self.alpha}")
        if self.u_class not in ("constant", "one-variable", "lipschitz", "measurable"):
            raise ValueError(f"unknown u_class {self.u_class!r}")
        if self.parity not in ("even", "odd"):
            raise ValueError(f"parity must be 'even' or 'odd', got {self.parity!r}")

    def u_on(self, grid: TorusGrid):
        """Sample u: scalar, per-row (N,), or full (N, N) according to class."""
        if self.u_class == "constant":
            return float(self.u)
        x = grid.coords
        if self.u_class == "one-variable":
            return np.broadcast_to(np.asarray(self.u(x), dtype=np.float64), (grid.n_points,)).copy()
        X, Y = grid.coord_mesh()
        return np.asarray(self.u(X, Y), dtype=np.float64)

    def v_on(self, grid: TorusGrid):
        if self.v is None:
            return None
        if isinstance(self.v, (int, float)):
            return float(self.v)
        x = grid.coords
        if self.u_class in ("constant", "one-variable"):
            return np.broadcast_to(np.asarray(self.v(x), dtype=np.float64), (grid.n_points,)).copy()
        X, Y = grid.coord_mesh()
        return np.asarray(self.v(X, Y), dtype=np.float64)


def constant_field(alpha: float, u0: float, parity: Parity = "even", v0: float | None = None) -> CurveField:
    return CurveField(alpha=alpha, u=u0, u_class="constant", parity=parity, v=v0)


def one_variable_field(alpha: float, u_fn: Callable, parity: Parity = "even", v_fn: Callable | None = None) -> CurveField:
    return CurveField(alpha=alpha, u=u_fn, u_class="one-variable", parity=parity, v=v_fn)


def lipschitz_field(alpha: float, u_fn: Callable, lip_norm: float, parity: Parity = "even") -> CurveField:
    return CurveField(alpha=alpha, u=u_fn, u_class="lipschitz", parity=parity, lip_norm=lip_norm)


def measurable_field(alpha: float, u_fn: Callable, parity: Parity = "even") -> CurveField:
    return CurveField(alpha=alpha, u=u_fn, u_class="measurable", parity=parity)


def ball_adversarial_field(
    alpha: float,
    center: tuple[float, float],
    clip: float,
    parity: Parity = "even",
) -> CurveField:
    """Measurable field aiming every curve through the given point.

    ``u(x, y) = clip((y - y0) / [x - x0]^a)`` makes the curve through ``z``
    pass through ``(x0, y0)`` at ``t = x - x0``, which is the standard way to
    stress the operator with the characteristic function of a small ball.
    """
    x0, y0 = center

    def u_fn(X, Y):
        denom = bracket_power(X - x0, alpha, parity)
        with np.errstate(divide="ignore", invalid="ignore"):
            val = np.where(denom != 0, (Y - y0) / np.where(denom == 0, 1.0, denom), 0.0)
        return np.clip(val, -clip, clip)

    return CurveField(alpha=alpha, u=u_fn, u_class="measurable", parity=parity)


def safe_eps0(lip_norm: float, alpha: float, c_alpha: float | None = None) -> float:
    """Truncation scale guaranteeing the change of variables stays invertible
    (sufficient bound ``eps0 < 1 / (2 c_a ||u||_Lip)``)."""
    c = c_alpha if c_alpha is not None else 2.0**alpha
    return 1.0 / (2.0 * c * lip_norm)


@dataclass(frozen=True)
class TruncationScheme:
    """Truncation ladder and quadrature node family.

    ``eps_ladder`` defaults to the dyadic set ``{2^-m eps0}``.  Averages use
    ``avg_nodes`` midpoint nodes per side and epsilon; principal-value sums
    use ``pv_nodes`` per side over ``(0, eps0]``, i.e. ``dt = eps0/pv_nodes``.
    ``avg_nodes = 0`` requests the closed-form multiplier (constant-u,
    alpha = 2, even branch only).
    """

    eps0: float
    n_ladder: int = 8
    avg_nodes: int = 32
    pv_nodes: int = 4096
    eps_ladder: tuple[float, ...] | None = None

    def __post_init__(self) -> None:
        if not self.eps0 > 0:
            raise ValueError("eps0 must be positive")
        if self.eps_ladder is not None and len(self.eps_ladder) == 0:
            raise ValueError("empty ladder")

    def ladder(self) -> tuple[float, ...]:
        if self.eps_ladder is not None:
            return tuple(float(e) for e in self.eps_ladder)
        if not np.isfinite(self.eps0):
            raise ValueError("infinite eps0 requires an explicit eps_ladder")
        if self.n_ladder < 1:
            raise ValueError("empty ladder")
        return tuple(self.eps0 * 2.0 ** (-m) for m in range(self.n_ladder))

    def pv_dt(self) -> float:
        if not np.isfinite(self.eps0):
            raise ValueError("infinite eps0 has no finite pv node family")
        return self.eps0 / self.pv_nodes

    def pv_node_family(self) -> tuple[np.ndarray, np.ndarray]:
        """Positive-side nodes ``(i + 1/2) dt`` and weights ``dt / t``."""
        dt = self.pv_dt()
        t = (np.arange(self.pv_nodes) + 0.5) * dt
        return t, dt / t


# ---------------------------------------------------------------------------
# node-sum application, dispatched on the coefficient class


def _guard_eps(grid: TorusGrid, eps: float) -> None:
    if eps > grid.side_length / 4:
        raise ValueError(
            f"truncation exceeds safe torus range: eps = {eps:g} > L/4 = {grid.side_length / 4:g}"
        )


def _apply_nodes(
    f: GridFunction,
    t_nodes: np.ndarray,
    weights: np.ndarray,
    dx_nodes: np.ndarray,
    field: CurveField | None,
    u_vals,
    v_vals,
    s_nodes: np.ndarray,
    w_rows: np.ndarray | None = None,
) -> GridFunction:
    """Σ_j w_j f(x - dx_j, y - (v t_j + u s_j)) with exact spectral shifts.

    ``u_vals`` is a scalar, per-row vector, or full matrix; ``w_rows``
    optionally replaces scalar node weights with per-(node, row) weights.
    """
    grid = f.grid
    N = grid.n_points
    spec = f.spectrum
    if np.isscalar(u_vals) or (isinstance(u_vals, np.ndarray) and u_vals.ndim == 0):
        if w_rows is not None:
            raise ValueError("row weights need a row-dependent path")
        u0 = float(u_vals)
        v0 = 0.0 if v_vals is None else float(v_vals)
        dy = v0 * t_nodes + u0 * s_nodes
        flat = spec.ravel()
        modes = active_modes(spec)
        if modes.size == 0:
            return GridFunction(grid, np.zeros(grid.shape, dtype=np.complex128))
        if grid.dims == 1:
            xi = grid.freqs[modes]
            eta = np.zeros_like(xi)
        else:
            xi = grid.freqs[modes // N]
            eta = grid.freqs[modes % N]
        out_modes = phase_sum(flat[modes], xi, eta, dx_nodes, dy, weights.astype(np.complex128))
        out_spec = np.zeros(N**grid.dims, dtype=np.complex128)
        out_spec[modes] = out_modes
        return GridFunction.from_spectrum(grid, out_spec.reshape(grid.shape))

    u_vals = np.asarray(u_vals, dtype=np.float64)
    if grid.dims != 2:
        raise ValueError("row/matrix coefficient fields need a 2D grid")
    d_eta = 2 * np.pi / grid.side_length
    if u_vals.ndim == 1:
        vv = np.zeros(N) if v_vals is None else np.asarray(v_vals, dtype=np.float64)
        out_mixed = np.zeros((N, N), dtype=np.complex128)
        chunk = max(1, int(2e6) // (N * N) * 16 or 1)
        chunk = max(1, min(len(t_nodes), chunk))
        for j0 in range(0, len(t_nodes), chunk):
            j1 = min(j0 + chunk, len(t_nodes))
            xphase = np.exp(-1j * np.outer(dx_nodes[j0:j1], grid.freqs))  # (J', N)
            tmp = spec[None, :, :] * xphase[:, :, None]
            G = np.fft.ifft(tmp, axis=1)  # mixed (x, eta) per node
            disp = np.outer(t_nodes[j0:j1], vv) + np.outer(s_nodes[j0:j1], u_vals)  # (J', N)
            if w_rows is not None:
                wr = w_rows[j0:j1]
            else:
                wr = np.broadcast_to(weights[j0:j1, None], (j1 - j0, N)).copy()
            rowphase_accum(G, wr, disp, d_eta, out_mixed)
        return GridFunction(grid, np.fft.ifft(out_mixed, axis=1))

    # fully two-dimensional coefficients
    if w_rows is not None:
        raise ValueError("row weights are only supported for one-variable fields")
    vmat = None if v_vals is None else np.asarray(v_vals, dtype=np.float64)
    out = np.zeros((N, N), dtype=np.complex128)
    for j in range(len(t_nodes)):
        xphase = np.exp(-1j * grid.freqs * dx_nodes[j])
        G = np.fft.ifft(spec * xphase[:, None], axis=0)  # x-shifted, y-spectral
        disp = u_vals * s_nodes[j]
        if vmat is not None:
            disp = disp + vmat * t_nodes[j]
        tmp = np.zeros((N, N), dtype=np.complex128)
        general_y_eval(G, disp, d_eta, tmp)
        out += weights[j] * tmp
    return GridFunction(grid, out)


def _avg_multiplier_quadratic(f: GridFunction, u0: float, v0: float, eps: float) -> GridFunction:
    """Closed-form box-average multiplier for alpha = 2, even branch."""
    xi, eta = f.grid.freq_mesh()
    a1 = -(xi + v0 * eta)
    a2 = xi + v0 * eta
    b = -u0 * eta
    m = fresnel_segment(a1.ravel(), b.ravel(), 0.0, eps) + fresnel_segment(a2.ravel(), b.ravel(), 0.0, eps)
    m = m.reshape(xi.shape) / (2 * eps)
    return GridFunction.from_spectrum(f.grid, f.spectrum * m)


def average_along_curve(
    f: GridFunction,
    field: CurveField,
    u_scale: float = 1.0,
    eps: float | None = None,
    mode: str = "box",
    nodes: int = 32,
) -> GridFunction:
    """Average of f along the curve through each point.

    mode 'box': ``(1/2 eps) int_{-eps}^{eps} f(x - t, y - u_scale u(z) [t]^a) dt``
    by symmetric midpoint quadrature (``nodes`` per side; ``nodes = 0``
    selects the closed-form multiplier, constant-u alpha=2 even only).

    mode 'bump': the dilation average ``int f(x - u_scale t, y - u_scale t^a)
    w(t) dt`` with the smooth window equal to 1 on [1, 2] and supported in
    [1/2, 3]; the coefficient field only supplies alpha here.
    """
    grid = f.grid
    if grid.dims != 2:
        raise ValueError("average_along_curve expects a 2D grid function")
    alpha = field.alpha
    if mode == "box":
        if eps is None:
            raise ValueError("box mode requires eps")
        _guard_eps(grid, eps)
        u_vals = field.u_on(grid)
        v_vals = field.v_on(grid)
        if nodes == 0:
            if not (np.isscalar(u_vals) and alpha == 2.0 and field.parity == "even"):
                raise ValueError("closed-form averages require constant u, alpha = 2, even branch")
            v0 = 0.0 if v_vals is None else float(v_vals)
            return _avg_multiplier_quadratic(f, u_scale * float(u_vals), v0, eps)
        dt = eps / nodes
        tpos = (np.arange(nodes) + 0.5) * dt
        t = np.concatenate([-tpos[::-1], tpos])
        w = np.full(t.shape, 1.0 / (2 * nodes))
        s = u_scale * bracket_power(t, alpha, field.parity)
        return _apply_nodes(f, t, w, t, field, u_vals, v_vals, s)
    if mode == "bump":
        lo, hi = 0.5, 3.0
        dt = (hi - lo) / nodes
        t = lo + (np.arange(nodes) + 0.5) * dt
        w = cutoffs.averaging_bump(t) * dt
        dx = u_scale * t
        s = u_scale * bracket_power(t, alpha, field.parity)
        # constant displacement per node: u_vals = 1, s carries the curve
        return _apply_nodes(f, t, w, dx, field, 1.0, None, s)
    raise ValueError(f"unknown mode {mode!r}")


def maximal_along_curve(f: GridFunction, field: CurveField, trunc: TruncationScheme) -> GridFunction:
    """Pointwise sup over the truncation ladder of curve averages of |f|."""
    ladder = trunc.ladder()
    if len(ladder) == 0:
        raise ValueError("empty ladder")
    g = f.abs()
    out = None
    for eps in ladder:
        avg = average_along_curve(g, field, 1.0, eps, "box", trunc.avg_nodes)
        vals = avg.samples.real
        out = vals if out is None else np.maximum(out, vals)
    return GridFunction(f.grid, np.maximum(out, 0.0))


def hilbert_along_curve(f: GridFunction, field: CurveField, trunc: TruncationScheme) -> GridFunction:
    """Truncated principal-value transform along the curve.

    ``int_{-eps0}^{eps0} f(x - t, y - v(z) t - u(z) [t]^a) dt/t`` with
    symmetric open nodes, so constants are annihilated exactly.
    """
    grid = f.grid
    if grid.dims != 2:
        raise ValueError("hilbert_along_curve expects a 2D grid function")
    _guard_eps(grid, trunc.eps0)
    tpos, wpos = trunc.pv_node_family()
    t = np.concatenate([-tpos[::-1], tpos])
    w = np.concatenate([-wpos[::-1], wpos])
    s = bracket_power(t, field.alpha, field.parity)
    return _apply_nodes(f, t, w, t, field, field.u_on(grid), field.v_on(grid), s)


def dyadic_monomial_maximal(
    f: GridFunction,
    alpha: float,
    j_range: tuple[int, int],
    trunc: TruncationScheme,
    parity: Parity = "even",
) -> GridFunction:
    """Sup over dyadic coefficients ``2^j`` and the ladder of curve averages."""
    j_lo, j_hi = int(j_range[0]), int(j_range[1])
    if j_hi < j_lo:
        raise ValueError("empty j range")
    out = None
    for j in range(j_lo, j_hi + 1):
        fld = constant_field(alpha, 2.0**j, parity)
        m = maximal_along_curve(f, fld, trunc)
        out = m.samples.real if out is None else np.maximum(out, m.samples.real)
    return GridFunction(f.grid, out)


# ---------------------------------------------------------------------------
# single dyadic shell of the transform and its rectangle majorant


def _require_positive_u(u_vals) -> None:
    if np.isscalar(u_vals):
        if u_vals <= 0:
            raise ValueError("u must be strictly positive on the grid")
    elif np.any(np.asarray(u_vals) <= 0):
        raise ValueError("u must be strictly positive on the grid")


def truncated_piece(f: GridFunction, field: CurveField, j: float, min_nodes: int = 1024) -> GridFunction:
    """Single dyadic shell of the curve transform.

    ``int f(x - t, y - u(x)[t]^a) psi_j(u(x)^(1/a) t) dt/t``; requires a
    constant or one-variable coefficient field, strictly positive.
    """
    grid = f.grid
    if grid.dims != 2:
        raise ValueError("truncated_piece expects a 2D grid function")
    if field.u_class not in ("constant", "one-variable"):
        raise ValueError("truncated_piece needs a constant or one-variable field")
    u_vals = field.u_on(grid)
    _require_positive_u(u_vals)
    alpha = field.alpha
    u_arr = np.atleast_1d(np.asarray(u_vals, dtype=np.float64))
    scale = u_arr ** (1.0 / alpha)
    t_lo = 2.0 ** (j - 1) / float(np.max(scale))
    t_hi = 2.0 ** (j + 1) / float(np.min(scale))
    # resolve both the frequency content and the curve's y-oscillation
    ny = grid.nyquist
    max_dp = ny * (1 + float(np.max(u_arr)) * alpha * t_hi ** (alpha - 1.0))
    n_nodes = int(min(max(min_nodes, 6 * (t_hi - t_lo) * max_dp / (2 * np.pi)), 1 << 17))
    dt = (t_hi - t_lo) / n_nodes
    tpos = t_lo + (np.arange(n_nodes) + 0.5) * dt
    t = np.concatenate([-tpos[::-1], tpos])
    w_t = dt / t  # signed kernel weight
    s = bracket_power(t, alpha, field.parity)
    if np.isscalar(u_vals):
        wj = cutoffs.psi(j, float(u_vals) ** (1.0 / alpha) * t) * w_t
        return _apply_nodes(f, t, wj, t, field, u_vals, None, s)
    w_rows = cutoffs.psi(j, np.outer(t, scale)) * w_t[:, None]  # (nodes, N)
    return _apply_nodes(f, t, np.zeros_like(t), t, field, u_vals, None, s, w_rows=w_rows)


@dataclass(frozen=True)
class RectangleCover:
    """Rectangle geometry covering one thickened dyadic curve shell.

    For the shell at dyadic index j the curve piece over ``|t| ~ lam`` is cut
    into ``n_j`` pieces of width ``delta``; each piece sits inside an
    axis-parallel rectangle whose position is reached by shifted maximal
    operators with the recorded shift counts.
    """

    j: int
    alpha: float
    u_value: float
    tau: int = 0
    c_alpha: float = 1.0

    def __post_init__(self) -> None:
        if self.j < 1:
            raise ValueError("j must be >= 1")
        if self.u_value <= 0:
            raise ValueError("u must be positive")

    @property
    def lambda_xj(self) -> float:
        return 2.0**self.j * self.u_value ** (-1.0 / self.alpha)

    @property
    def delta_xj(self) -> float:
        return 2.0 ** (-(self.alpha - 1.0) * self.j) * self.u_value ** (-1.0 / self.alpha)

    @property
    def n_j(self) -> int:
        # (3/2) lam <= n delta <= 2 lam and independent of the base point
        return int(np.ceil(1.75 * 2.0 ** (self.alpha * self.j)))

    def sigma1(self) -> np.ndarray:
        m = np.arange(self.n_j)
        return 2.0 ** (self.alpha * self.j - 1.0) + m

    def sigma2(self) -> np.ndarray:
        m = np.arange(self.n_j)
        return self.c_alpha * (2.0**self.j + 2.0 ** (-(self.alpha - 1.0) * self.j) * m) ** self.alpha


def rectangle_majorant(
    f: GridFunction,
    field: CurveField,
    j: int,
    tau_window: int = 4,
) -> GridFunction:
    """Shifted-rectangle majorant of the dyadic shell transform.

    ``sum_{|tau| <= W} (1+|tau|)^-10 n_j^-1 sum_m M1 M2 f`` with the shift
    counts of :class:`RectangleCover`; dominates ``|truncated_piece(f, ., j)|``
    pointwise up to a grid-independent constant.  Uses the periodic variant of
    the shifted maximal operators, matching the torus geometry of the curve
    average; the x-shift is applied on both sides (the shell is two-sided).
    """
    grid = f.grid
    u_vals = field.u_on(grid)
    _require_positive_u(u_vals)
    u0 = float(np.mean(np.atleast_1d(u_vals)))
    cover = RectangleCover(j=int(j), alpha=field.alpha, u_value=u0)
    h = grid.spacing
    # shift counts: sigma1 counts delta-length intervals and sigma2+tau counts
    # unit intervals; when those lengths fall below the cell size, the shift
    # distance is re-expressed in single-cell counts
    if cover.delta_xj >= h:
        s1 = np.rint(cover.sigma1())
    else:
        s1 = np.rint(cover.sigma1() * cover.delta_xj / h)
    y_unit = 1.0 if h <= 1.0 else 1.0 / h
    base = f.abs()
    acc = np.zeros(grid.shape, dtype=np.float64)
    taus = np.arange(-tau_window, tau_window + 1)
    for tau in taus:
        wt = (1.0 + abs(float(tau))) ** (-10.0)
        inner = np.zeros(grid.shape, dtype=np.float64)
        s2 = np.rint((cover.sigma2() + tau) * y_unit)
        for m in range(cover.n_j):
            m2 = shifted_max_2d(base, 0, s2[m], boundary="wrap")
            best = np.maximum(
                shifted_max_2d(m2, s1[m], 0, boundary="wrap").samples.real,
                shifted_max_2d(m2, -s1[m], 0, boundary="wrap").samples.real,
            )
            inner += best
        acc += wt * inner / cover.n_j
    return GridFunction(grid, acc)


# ---------------------------------------------------------------------------
# modulation-invariant sup (discretized ladders)


def carleson_sup(
    g: GridFunction,
    alpha: float,
    u1_ladder,
    u2_ladder,
    trunc: TruncationScheme,
    parity: Parity = "odd",
) -> GridFunction:
    """Pointwise max over ladder pairs of the modulated truncated transform.

    ``x -> max_{u1, u2} | pv int g(x - t) exp(i u1 t + i u2 [t]^a) dt/t |``
    with symmetric principal-value quadrature.
    """
    if g.grid.dims != 1:
        raise ValueError("carleson_sup expects a 1D grid function")
    u1s = np.asarray(list(u1_ladder), dtype=np.float64)
    u2s = np.asarray(list(u2_ladder), dtype=np.float64)
    if u1s.size == 0 or u2s.size == 0:
        raise ValueError("empty ladders")
    tpos, wpos = trunc.pv_node_family()
    t = np.concatenate([-tpos[::-1], tpos])
    w = np.concatenate([-wpos[::-1], wpos])
    s = bracket_power(t, alpha, parity)
    spec = g.spectrum
    xi = g.grid.freqs
    # K[pair, xi] = sum_j w_j exp(i((u1 - xi) t_j + u2 s_j))
    E2 = np.exp(-1j * np.outer(t, xi)) * w[:, None]  # (nodes, xi)
    out = np.zeros(g.grid.n_points, dtype=np.float64)
    for u2 in u2s:
        mod2 = np.exp(1j * u2 * s)
        E1 = np.exp(1j * np.outer(u1s, t)) * mod2[None, :]  # (u1, nodes)
        K = E1 @ E2  # (u1, xi)
        fields = np.fft.ifft(K * spec[None, :], axis=1)
        np.maximum(out, np.abs(fields).max(axis=0), out=out)
    return GridFunction(g.grid, out)
