"""Sweep harness: named experiments, exponent fits, CSV/JSON/SVG output.

Each experiment is a pure function of its :class:`ExperimentConfig`; two runs
with equal configs produce byte-identical CSV.  Randomness flows from one
64-bit seed through counter-based streams, so trial i is independent of trial
ordering and of the worker count.  Worker threads only parallelize over
ladder points/trials and results are gathered in ladder order.
"""

from __future__ import annotations

import json
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

import numpy as np

from . import cutoffs, decoupling, oscillatory, shifted
from .curves import (
    TruncationScheme,
    ball_adversarial_field,
    carleson_sup,
    constant_field,
    dyadic_monomial_maximal,
    hilbert_along_curve,
    lipschitz_field,
    maximal_along_curve,
    measurable_field,
    one_variable_field,
    rectangle_majorant,
    safe_eps0,
    truncated_piece,
)
from .cutoffs import project_second
from .grid import (
    FitResult,
    GridFunction,
    TorusGrid,
    annulus_band,
    make_grid,
    norm_lp,
    philox_rng,
    power_law_fit,
    random_field,
    rect_band,
)


class ConfigError(ValueError):
    """Invalid experiment configuration (maps to CLI exit code 2)."""


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    seed: int = 0
    out: str = "out"
    tag: str | None = None
    threads: int = 1
    mem_cap_gib: float = 8.0
    params: dict[str, Any] = field(default_factory=dict)

    def get(self, key: str, default=None):
        return self.params.get(key, default)


@dataclass(frozen=True)
class SweepResult:
    experiment: str
    columns: tuple[str, ...]
    rows: tuple[tuple, ...]
    fit: FitResult | None
    metadata: dict[str, Any]

    def column(self, name: str) -> list:
        i = self.columns.index(name)
        return [r[i] for r in self.rows]


def fit_exponent(points) -> FitResult:
    """Least-squares power-law fit of (abscissa, value) pairs.

    Requires at least 3 points with positive abscissae and values.
    """
    return power_law_fit(points)


def _fmt(x) -> str:
    if isinstance(x, float):
        return repr(x)
    if isinstance(x, (np.floating,)):
        return repr(float(x))
    if isinstance(x, (np.integer,)):
        return repr(int(x))
    return str(x)


def emit_csv(result: SweepResult, path) -> None:
    path = Path(path)
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(",".join(result.columns) + "\n")
            for row in result.rows:
                fh.write(",".join(_fmt(v) for v in row) + "\n")
    except OSError as exc:
        raise OSError(f"failed writing CSV to {path}: {exc}") from exc


def emit_fit_json(result: SweepResult, path) -> None:
    path = Path(path)
    fit = result.fit
    payload = {
        "experiment": result.experiment,
        "slope": None if fit is None else fit.slope,
        "intercept": None if fit is None else fit.intercept,
        "r_squared": None if fit is None else fit.r_squared,
        "n_points": 0 if fit is None else len(fit.points),
        "metadata": {k: v for k, v in sorted(result.metadata.items()) if isinstance(v, (str, int, float))},
    }
    try:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")
    except OSError as exc:
        raise OSError(f"failed writing fit JSON to {path}: {exc}") from exc


def emit_plot(result: SweepResult, path) -> None:
    """Log-log scatter of the fitted points with the fitted line, as SVG."""
    import matplotlib

    matplotlib.use("Agg")
    matplotlib.rcParams["svg.hashsalt"] = "curvelab"
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(5, 4))
    if result.fit is not None and result.fit.points:
        xs = [p[0] for p in result.fit.points]
        ys = [p[1] for p in result.fit.points]
        ax.plot(xs, ys, "o", label="measured")
        grid_x = np.linspace(min(xs), max(xs), 50)
        ax.plot(grid_x, result.fit.slope * grid_x + result.fit.intercept, "-", label=f"slope {result.fit.slope:.3f}")
        ax.legend()
    ax.set_xlabel("log2 abscissa")
    ax.set_ylabel("log2 value")
    ax.set_title(result.experiment)
    try:
        fig.savefig(path, format="svg", metadata={"Date": None})
    except OSError as exc:
        raise OSError(f"failed writing plot to {path}: {exc}") from exc
    finally:
        plt.close(fig)


def _pmap(fn: Callable, items: list, threads: int) -> list:
    if threads <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


# ---------------------------------------------------------------------------
# test function library


def plane_wave(grid: TorusGrid, kx: int, ky: int) -> GridFunction:
    X, Y = grid.coord_mesh()
    b = 2 * np.pi / grid.side_length
    return GridFunction(grid, np.exp(1j * b * (kx * X + ky * Y)))


def ball_indicator(grid: TorusGrid, center: tuple[float, float], radius: float) -> GridFunction:
    X, Y = grid.coord_mesh()
    return GridFunction(grid, (np.hypot(X - center[0], Y - center[1]) <= radius).astype(np.complex128))


def rect_indicator(grid: TorusGrid, center: tuple[float, float], half_w: float, half_h: float) -> GridFunction:
    X, Y = grid.coord_mesh()
    mask = (np.abs(X - center[0]) <= half_w) & (np.abs(Y - center[1]) <= half_h)
    return GridFunction(grid, mask.astype(np.complex128))


def tilted_rect_indicator(grid: TorusGrid, angle: float, half_len: float, half_w: float) -> GridFunction:
    X, Y = grid.coord_mesh()
    c, s = np.cos(angle), np.sin(angle)
    mask = (np.abs(c * X + s * Y) <= half_len) & (np.abs(-s * X + c * Y) <= half_w)
    return GridFunction(grid, mask.astype(np.complex128))


def test_library(grid: TorusGrid, seed: int) -> list[tuple[str, GridFunction]]:
    """Norm-measurement test functions: random annulus fields at three
    scales, a plane wave, ball and rectangle indicators, a thin tilted slab."""
    L = grid.side_length
    ny = grid.nyquist
    ks = [np.log2(ny / 12), np.log2(ny / 6), np.log2(ny / 3)]
    lib: list[tuple[str, GridFunction]] = []
    for i, k in enumerate(ks):
        lib.append((f"annulus{i}", random_field(grid, seed, annulus_band(k), 11, i)))
    lib.append(("planewave", plane_wave(grid, 3, 2)))
    for i, r in enumerate((L / 8, L / 16, L / 32)):
        lib.append((f"ball{i}", ball_indicator(grid, (0.0, 0.0), r)))
        lib.append((f"rect{i}", rect_indicator(grid, (0.0, 0.0), r, L / 16)))
    lib.append(("tilted", tilted_rect_indicator(grid, np.arctan(0.5), L / 4, L / 64)))
    return lib


# ---------------------------------------------------------------------------
# experiment implementations

_REGISTRY: dict[str, Callable[[ExperimentConfig], SweepResult]] = {}
_DEFAULTS: dict[str, dict[str, Any]] = {}
_GUARDS: dict[str, Callable[[SweepResult], tuple[bool, str]]] = {}


def _experiment(name: str, defaults: dict[str, Any]):
    def deco(fn):
        _REGISTRY[name] = fn
        _DEFAULTS[name] = defaults
        return fn

    return deco


def _guard(name: str):
    def deco(fn):
        _GUARDS[name] = fn
        return fn

    return deco


def _meta(config: ExperimentConfig) -> dict[str, Any]:
    meta: dict[str, Any] = {"cutoff": cutoffs.CUTOFF_ID, "seed": config.seed, "experiment": config.experiment}
    for key, val in config.params.items():
        meta[key] = str(val) if isinstance(val, list) else val
    return meta


def _drift(values) -> float:
    vals = [v for v in values if np.isfinite(v)]
    if not vals or min(vals) <= 0:
        return np.inf
    return max(vals) / min(vals) - 1.0


def _lipschitz_u(L: float, strength: float):
    b = 2 * np.pi / L

    def u_fn(X, Y):
        return 1.0 + strength * (np.sin(b * X) + 0.5 * np.cos(b * Y))

    lip = strength * b * 1.5
    return u_fn, lip


def _rough_one_variable_u(L: float, seed: int, n_levels: int = 16):
    rng = philox_rng(seed, 23)
    levels = 1.0 + rng.random(n_levels)

    def u_fn(x):
        idx = np.floor((np.asarray(x) / L + 0.5) * n_levels).astype(int) % n_levels
        return levels[idx]

    return u_fn


def _rough_measurable_u(L: float, seed: int, n_cells: int = 16):
    rng = philox_rng(seed, 29)
    levels = 1.0 + rng.random((n_cells, n_cells))

    def u_fn(X, Y):
        i = np.floor((np.asarray(X) / L + 0.5) * n_cells).astype(int) % n_cells
        j = np.floor((np.asarray(Y) / L + 0.5) * n_cells).astype(int) % n_cells
        return levels[i, j]

    return u_fn


@_experiment(
    "max-norm-stability",
    {"alpha": 2.0, "p_values": [1.5, 2.5], "n_list": [32, 64, 128], "side_length": 8.0, "u_class": "lipschitz"},
)
def _run_max_norm_stability(config: ExperimentConfig) -> SweepResult:
    alpha = config.get("alpha")
    L = config.get("side_length")
    rows = []
    for N in config.get("n_list"):
        grid = make_grid(int(N), L, 2)
        if config.get("u_class") == "lipschitz":
            u_fn, lip = _lipschitz_u(L, 0.2)
            fld = lipschitz_field(alpha, u_fn, lip)
            eps0 = min(L / 4 * 0.99, safe_eps0(lip, alpha))
        else:
            fld = measurable_field(alpha, _rough_measurable_u(L, config.seed))
            eps0 = L / 4 * 0.99
        trunc = TruncationScheme(eps0=eps0, n_ladder=6, avg_nodes=12)
        lib = test_library(grid, config.seed)
        for p in config.get("p_values"):
            best = 0.0
            best_name = ""
            for name, f in lib:
                m = maximal_along_curve(f, fld, trunc)
                ratio = norm_lp(m, p) / norm_lp(f, p)
                if ratio > best:
                    best, best_name = ratio, name
                rows.append((int(N), float(p), name, float(ratio)))
            rows.append((int(N), float(p), "max-over-library", float(best)))
    return SweepResult(config.experiment, ("n", "p", "function", "ratio"), tuple(rows), None, _meta(config))


@_guard("max-norm-stability")
def _guard_max_norm(result: SweepResult) -> tuple[bool, str]:
    by_p: dict[float, list[float]] = {}
    for n, p, name, ratio in result.rows:
        if name == "max-over-library":
            by_p.setdefault(p, []).append(ratio)
    worst = max(_drift(v) for v in by_p.values())
    return worst < 0.2, f"max ratio drift across grids = {worst:.3f} (< 0.2 required)"


@_experiment(
    "ht-one-variable",
    {"alpha": 2.0, "p_values": [1.25, 2.0, 3.0], "n_list": [64, 128], "side_length": 8.0},
)
def _run_ht_one_variable(config: ExperimentConfig) -> SweepResult:
    alpha = config.get("alpha")
    L = config.get("side_length")
    rows = []
    for N in config.get("n_list"):
        grid = make_grid(int(N), L, 2)
        fld = one_variable_field(alpha, _rough_one_variable_u(L, config.seed), parity="odd")
        trunc = TruncationScheme(eps0=L / 4 * 0.99, pv_nodes=512)
        lib = test_library(grid, config.seed)
        for p in config.get("p_values"):
            best = 0.0
            for name, f in lib:
                h = hilbert_along_curve(f, fld, trunc)
                ratio = norm_lp(h, p) / norm_lp(f, p)
                best = max(best, ratio)
                rows.append((int(N), float(p), name, float(ratio)))
            rows.append((int(N), float(p), "max-over-library", float(best)))
    return SweepResult(config.experiment, ("n", "p", "function", "ratio"), tuple(rows), None, _meta(config))


@_guard("ht-one-variable")
def _guard_ht_one_variable(result: SweepResult) -> tuple[bool, str]:
    by_p: dict[float, list[float]] = {}
    for n, p, name, ratio in result.rows:
        if name == "max-over-library":
            by_p.setdefault(p, []).append(ratio)
    worst = max(_drift(v) for v in by_p.values())
    return worst < 0.25, f"max ratio drift across grids = {worst:.3f} (< 0.25 required)"


@_experiment(
    "single-annulus-measurable",
    {"alpha": 2.0, "p": 3.0, "k_values": [1, 2, 3], "n_points": 64, "side_length": 8.0, "trials": 3},
)
def _run_single_annulus(config: ExperimentConfig) -> SweepResult:
    alpha = config.get("alpha")
    grid = make_grid(int(config.get("n_points")), config.get("side_length"), 2)
    fld = measurable_field(alpha, _rough_measurable_u(grid.side_length, config.seed))
    trunc = TruncationScheme(eps0=grid.side_length / 4 * 0.99, pv_nodes=256)
    p = config.get("p")
    rows = []
    for k in config.get("k_values"):
        for trial in range(int(config.get("trials"))):
            f = random_field(grid, config.seed, rect_band((-grid.nyquist / 3, grid.nyquist / 3)), 31, trial)
            fk = project_second(f, k)
            if norm_lp(fk, 2) < 1e-12:
                continue
            h = hilbert_along_curve(fk, fld, trunc)
            rows.append((float(k), trial, float(norm_lp(h, p) / norm_lp(fk, p))))
    return SweepResult(config.experiment, ("k", "trial", "ratio"), tuple(rows), None, _meta(config))


@_guard("single-annulus-measurable")
def _guard_single_annulus(result: SweepResult) -> tuple[bool, str]:
    drift = _drift(result.column("ratio"))
    return drift < 1.0, f"single-annulus ratio spread = {drift:.3f} (< 1.0 required)"


@_experiment(
    "sharpness-ball",
    {"alpha": 2.0, "p": 1.5, "radii": [0.25, 0.125, 0.0625], "n_points": 256, "side_length": 4.0, "clip": 8.0},
)
def _run_sharpness_ball(config: ExperimentConfig) -> SweepResult:
    alpha = config.get("alpha")
    L = config.get("side_length")
    grid = make_grid(int(config.get("n_points")), L, 2)
    p = config.get("p")
    u_lip, lip = _lipschitz_u(L, 0.2)
    fields = {
        "lipschitz": lipschitz_field(alpha, u_lip, lip),
        "adversarial": ball_adversarial_field(alpha, (0.0, 0.0), config.get("clip")),
    }
    rows = []
    for label, fld in fields.items():
        if label == "lipschitz":
            eps0 = min(L / 4 * 0.99, safe_eps0(lip, alpha))
        else:
            eps0 = L / 4 * 0.99
        trunc = TruncationScheme(eps0=eps0, n_ladder=7, avg_nodes=12)
        for r in config.get("radii"):
            f = ball_indicator(grid, (0.0, 0.0), float(r))
            m = maximal_along_curve(f, fld, trunc)
            ratio = norm_lp(m, p) / norm_lp(f, p)
            rows.append((label, float(r), float(ratio)))
    adv = [(1.0 / r, ratio) for label, r, ratio in rows if label == "adversarial"]
    fit = power_law_fit(adv) if len(adv) >= 3 else None
    return SweepResult(config.experiment, ("u_class", "radius", "ratio"), tuple(rows), fit, _meta(config))


@_guard("sharpness-ball")
def _guard_sharpness(result: SweepResult) -> tuple[bool, str]:
    lip = [ratio for label, r, ratio in result.rows if label == "lipschitz"]
    drift = _drift(lip)
    slope = result.fit.slope if result.fit else float("nan")
    ok = drift < 0.2 and slope > 0.2
    return ok, f"lipschitz drift {drift:.3f} (< 0.2), adversarial blowup slope {slope:.3f} (> 0.2)"


@_experiment(
    "shifted-max-growth",
    {"length": 4096, "n_exponents": list(range(0, 9)), "p": 2.0, "q": 2.0, "families": 10, "family_size": 8},
)
def _run_shifted_max_growth(config: ExperimentConfig) -> SweepResult:
    length = int(config.get("length"))
    rows = []
    fams = []
    for fam_i in range(int(config.get("families"))):
        rng = philox_rng(config.seed, 41, fam_i)
        fam = [np.abs(rng.standard_normal(length)) for _ in range(int(config.get("family_size")))]
        fams.append(fam)
    p, q = config.get("p"), config.get("q")
    for ne in config.get("n_exponents"):
        n = int(2**ne)
        best = max(shifted.vv_norm_ratio(fam, n, p, q) for fam in fams)
        rows.append((n, float(best)))
    fit = power_law_fit([(max(n, 1), r) for n, r in rows if n >= 1])
    return SweepResult(config.experiment, ("n", "ratio"), tuple(rows), fit, _meta(config))


@_guard("shifted-max-growth")
def _guard_shifted(result: SweepResult) -> tuple[bool, str]:
    rows = dict(result.rows)
    base = rows[1] / np.log(2 + 1) ** 2
    worst = max(r / np.log(2 + n) ** 2 / base for n, r in result.rows)
    return worst <= 3.0, f"max R(n)/log^2<n> over baseline = {worst:.3f} (<= 3 required)"


@_experiment(
    "lemma21-decay",
    {"alpha": 3.0, "h": 1.0, "w": 0.0, "l_values": list(range(2, 9)), "xi_samples": 8, "quad_depth": 4096},
)
def _run_lemma21(config: ExperimentConfig) -> SweepResult:
    alpha = config.get("alpha")
    lam = alpha / 4.0
    rows = []
    pts = []
    for l in config.get("l_values"):
        xi_min = 2.0 ** (-lam * l)
        xis = np.geomspace(xi_min * 1.01, 1.5, int(config.get("xi_samples")))
        sup = 0.0
        for x in xis:
            params = oscillatory.OscillatoryKernelParams(
                alpha=alpha, l=int(l), h=config.get("h"), w=config.get("w"), xi=float(x)
            )
            sup = max(sup, oscillatory.kernel_I_xi(params, int(config.get("quad_depth"))))
        rows.append((int(l), float(sup)))
        pts.append((2.0**l, sup))
    fit = power_law_fit(pts)
    return SweepResult(config.experiment, ("l", "sup_I"), tuple(rows), fit, _meta(config))


@_guard("lemma21-decay")
def _guard_lemma21(result: SweepResult) -> tuple[bool, str]:
    ok = result.fit.slope <= -0.5 and result.fit.r_squared >= 0.8
    return ok, f"slope {result.fit.slope:.3f} (<= -0.5), R^2 {result.fit.r_squared:.3f} (>= 0.8)"


@_experiment(
    "vdc-baseline",
    {"phase_power": 2.0, "lambda_exponents": list(range(4, 15)), "quad_depth": 4096},
)
def _run_vdc(config: ExperimentConfig) -> SweepResult:
    lams = [2.0**e for e in config.get("lambda_exponents")]
    fit = oscillatory.vdc_baseline(config.get("phase_power"), lams, int(config.get("quad_depth")))
    rows = tuple((lam, float(2.0**v)) for (la, v), lam in zip(fit.points, lams))
    return SweepResult(config.experiment, ("lambda", "value"), rows, fit, _meta(config))


@_guard("vdc-baseline")
def _guard_vdc(result: SweepResult) -> tuple[bool, str]:
    p = result.metadata.get("phase_power", 2.0)
    target = -1.0 / p
    ok = abs(result.fit.slope - target) <= 0.05
    return ok, f"slope {result.fit.slope:.4f} within 0.05 of {target}"


@_experiment(
    "annulus-decay-1d",
    {"alpha": 3.0, "l_values": list(range(1, 8)), "n_levels": 16, "band_modes": 8},
)
def _run_annulus_decay(config: ExperimentConfig) -> SweepResult:
    alpha = config.get("alpha")
    rows = []
    pts = []
    for l in config.get("l_values"):
        ratio = annulus_decay_ratio(
            int(l), alpha, config.seed, int(config.get("n_levels")), int(config.get("band_modes"))
        )
        rows.append((int(l), float(ratio)))
        pts.append((2.0**l, ratio))
    fit = power_law_fit(pts)
    return SweepResult(config.experiment, ("l", "ratio"), tuple(rows), fit, _meta(config))


def annulus_decay_ratio(l: int, alpha: float, seed: int, n_levels: int = 16, band_modes: int = 8) -> float:
    """Single-shell decay measurement with the test band at the critical
    (stationary-phase) frequencies ``xi ~ a 2^((a-1) l)``; a fixed band would
    decay super-polynomially and fall below measurement noise immediately."""
    center = alpha * 1.5 * 2.0 ** ((alpha - 1.0) * l)
    n_pts = int(2 ** int(np.ceil(np.log2(center * 4))))
    n_pts = max(n_pts, 256)
    grid = make_grid(n_pts, 2 * np.pi, 1)
    g = random_field(grid, seed, rect_band((center, center + band_modes)), 47, l)
    u_fn = _rough_one_variable_u(grid.side_length, seed, n_levels)
    return oscillatory.annulus_decay_1d(g, u_fn, None, alpha, int(l))


@_guard("annulus-decay-1d")
def _guard_annulus_decay(result: SweepResult) -> tuple[bool, str]:
    return result.fit.slope < 0, f"slope {result.fit.slope:.3f} (< 0 required)"


@_experiment("multiplier-sum", {"xi": 1.0, "eta": 1.0, "ranges": [20, 30]})
def _run_multiplier_sum(config: ExperimentConfig) -> SweepResult:
    rows = []
    for R in config.get("ranges"):
        s = oscillatory.multiplier_diff_sum(config.get("xi"), config.get("eta"), int(R))
        rows.append((int(R), float(s)))
    return SweepResult(config.experiment, ("jk_range", "partial_sum"), tuple(rows), None, _meta(config))


@_guard("multiplier-sum")
def _guard_multiplier_sum(result: SweepResult) -> tuple[bool, str]:
    vals = dict(result.rows)
    Rs = sorted(vals)
    small, big = vals[Rs[0]], vals[Rs[-1]]
    ok = big <= 50.0 and abs(big - small) / big < 0.01
    return ok, f"partial sums {small:.4f} -> {big:.4f} (<= 50, tail change < 1%)"


@_experiment(
    "local-smoothing",
    {"alpha": 2.0, "p": 4.0, "k_values": list(range(3, 9)), "n_points": 512, "trials": 4},
)
def _run_local_smoothing(config: ExperimentConfig) -> SweepResult:
    alpha, p = config.get("alpha"), config.get("p")
    rows = []
    pts = []
    for k in config.get("k_values"):
        L = 2.0 ** (6.5 - k)
        grid = make_grid(int(config.get("n_points")), L, 2)
        us = max(9, int(2**k // 4))
        r = decoupling.local_smoothing_decay(int(k), p, alpha, us, grid, int(config.get("trials")), config.seed)
        rows.append((int(k), float(r)))
        pts.append((2.0**k, r))
    fit = power_law_fit(pts)
    return SweepResult(config.experiment, ("k", "ratio"), tuple(rows), fit, _meta(config))


@_guard("local-smoothing")
def _guard_local_smoothing(result: SweepResult) -> tuple[bool, str]:
    ok = result.fit.slope <= -0.05 and result.fit.r_squared >= 0.6
    return ok, f"slope {result.fit.slope:.3f} (<= -0.05), R^2 {result.fit.r_squared:.3f} (>= 0.6)"


@_experiment(
    "decoupling",
    {"p": 4.0, "deltas": [0.5, 0.25, 0.125, 0.0625], "trials": 32, "quad_depth": 48},
)
def _run_decoupling(config: ExperimentConfig) -> SweepResult:
    p = config.get("p")
    rows = []
    pts = []
    for d in config.get("deltas"):
        r = decoupling.decoupling_ratio(
            None, float(d), p, int(config.get("trials")), config.seed, int(config.get("quad_depth"))
        )
        rows.append((float(d), float(r)))
        pts.append((1.0 / d, r))
    fit = power_law_fit(pts)
    return SweepResult(config.experiment, ("delta", "max_ratio"), tuple(rows), fit, _meta(config))


@_guard("decoupling")
def _guard_decoupling(result: SweepResult) -> tuple[bool, str]:
    return result.fit.slope <= 0.25, f"slope vs log2(1/delta) = {result.fit.slope:.3f} (<= 0.25 required)"


@_experiment(
    "bilinear",
    {"nu": 0.25, "trials": 32, "window": 48.0, "spacings": [1.0, 0.5], "quad_depth": 64},
)
def _run_bilinear(config: ExperimentConfig) -> SweepResult:
    nu = config.get("nu")
    W = config.get("window")
    rows = []
    for spacing in config.get("spacings"):
        pts_ax = np.arange(-W, W, float(spacing))
        best = 0.0
        for trial in range(int(config.get("trials"))):
            rng = philox_rng(config.seed, 53, trial)
            nmodes = 32
            c1 = rng.standard_normal(nmodes) + 1j * rng.standard_normal(nmodes)
            c2 = rng.standard_normal(nmodes) + 1j * rng.standard_normal(nmodes)

            def gfun(cs, lo, hi):
                return lambda t: np.interp(t, np.linspace(lo, hi, nmodes), cs.real) + 1j * np.interp(
                    t, np.linspace(lo, hi, nmodes), cs.imag
                )

            r = decoupling.bilinear_ratio(
                gfun(c1, 0.0, 0.25),
                gfun(c2, 0.5, 0.75),
                (0.0, 0.25),
                (0.5, 0.75),
                nu,
                (pts_ax, pts_ax),
                int(config.get("quad_depth")),
            )
            best = max(best, r)
        rows.append((float(spacing), float(best)))
    return SweepResult(config.experiment, ("spacing", "max_ratio"), tuple(rows), None, _meta(config))


@_guard("bilinear")
def _guard_bilinear(result: SweepResult) -> tuple[bool, str]:
    drift = _drift(result.column("max_ratio"))
    return drift < 0.2, f"max ratio drift under lattice refinement = {drift:.3f} (< 0.2 required)"


@_experiment(
    "carleson-sup",
    {"alpha": 3.0, "n_points": 512, "band": 24.0, "u_range": 8.0, "base_ladder": 33, "base_nodes": 512},
)
def _run_carleson(config: ExperimentConfig) -> SweepResult:
    alpha = config.get("alpha")
    grid = make_grid(int(config.get("n_points")), 2 * np.pi, 1)
    g = random_field(grid, config.seed, rect_band((-config.get("band"), config.get("band"))), 59)
    U = config.get("u_range")
    rows = []
    for level in (0, 1):
        n_l = int((config.get("base_ladder") - 1) * 2**level + 1)
        ladder = np.linspace(-U, U, n_l)
        trunc = TruncationScheme(eps0=grid.side_length / 4 * 0.99, pv_nodes=int(config.get("base_nodes")) * 2**level)
        out = carleson_sup(g, alpha, ladder, ladder, trunc)
        rows.append((level, float(norm_lp(out, 2) / norm_lp(g, 2))))
    return SweepResult(config.experiment, ("refinement", "ratio"), tuple(rows), None, _meta(config))


@_guard("carleson-sup")
def _guard_carleson(result: SweepResult) -> tuple[bool, str]:
    drift = _drift(result.column("ratio"))
    return drift < 0.2, f"ratio drift under refinement = {drift:.3f} (< 0.2 required)"


@_experiment(
    "rectangle-domination",
    {"alpha": 2.0, "j_values": [1, 2, 3], "n_list": [32, 64], "spacing": 0.5, "tau_window": 4},
)
def _run_rect_domination(config: ExperimentConfig) -> SweepResult:
    alpha = config.get("alpha")
    rows = []
    for N in config.get("n_list"):
        L = float(N) * config.get("spacing")
        grid = make_grid(int(N), L, 2)
        fld = constant_field(alpha, 1.0)
        raw = random_field(grid, config.seed, rect_band((-grid.nyquist / 3, grid.nyquist / 3), (-4.0, 4.0)), 61)
        f = project_second(raw, 0)
        for j in config.get("j_values"):
            piece = truncated_piece(f, fld, int(j))
            major = rectangle_majorant(f, fld, int(j), int(config.get("tau_window")))
            with np.errstate(divide="ignore", invalid="ignore"):
                ratio = np.abs(piece.samples) / major.samples.real
            C = float(np.nanmax(np.where(major.samples.real > 1e-12, ratio, 0.0)))
            rows.append((int(N), int(j), C))
    return SweepResult(config.experiment, ("n", "j", "constant"), tuple(rows), None, _meta(config))


@_guard("rectangle-domination")
def _guard_rect_domination(result: SweepResult) -> tuple[bool, str]:
    by_j: dict[int, list[float]] = {}
    for n, j, c in result.rows:
        by_j.setdefault(j, []).append(c)
    finite = all(np.isfinite(c) for cs in by_j.values() for c in cs)
    worst = max(_drift(cs) for cs in by_j.values())
    return finite and worst < 0.2, f"constants finite, worst drift across N = {worst:.3f} (< 0.2 required)"


@_experiment(
    "mdyad-stability",
    {"alpha": 2.0, "p": 2.0, "j_range": [-2, 2], "n_list": [256, 512, 1024], "side_length": 16.0, "radius": 1.0},
)
def _run_mdyad(config: ExperimentConfig) -> SweepResult:
    alpha = config.get("alpha")
    rows = []
    j_lo, j_hi = config.get("j_range")
    for N in config.get("n_list"):
        grid = make_grid(int(N), config.get("side_length"), 2)
        f = ball_indicator(grid, (0.0, 0.0), config.get("radius"))
        trunc = TruncationScheme(eps0=grid.side_length / 8, n_ladder=6, avg_nodes=0)
        m = dyadic_monomial_maximal(f, alpha, (int(j_lo), int(j_hi)), trunc)
        rows.append((int(N), float(norm_lp(m, config.get("p")) / norm_lp(f, config.get("p")))))
    return SweepResult(config.experiment, ("n", "ratio"), tuple(rows), None, _meta(config))


@_guard("mdyad-stability")
def _guard_mdyad(result: SweepResult) -> tuple[bool, str]:
    drift = _drift(result.column("ratio"))
    return drift < 0.2, f"ratio drift across grids = {drift:.3f} (< 0.2 required)"


EXPERIMENTS = tuple(sorted(_REGISTRY))


def default_config(name: str, **overrides) -> ExperimentConfig:
    if name not in _REGISTRY:
        raise ConfigError(f"unknown experiment {name!r}; known: {', '.join(EXPERIMENTS)}")
    params = dict(_DEFAULTS[name])
    cfg_kwargs = {}
    for key in ("seed", "out", "tag", "threads", "mem_cap_gib"):
        if key in overrides:
            cfg_kwargs[key] = overrides.pop(key)
    for key, val in overrides.items():
        if key not in params:
            raise ConfigError(f"unknown parameter {key!r} for experiment {name}")
        params[key] = _coerce_like(params[key], val, key)
    return ExperimentConfig(experiment=name, params=params, **cfg_kwargs)


def _coerce_like(template, value, key: str):
    if isinstance(value, str):
        try:
            if isinstance(template, bool):
                return value.lower() in ("1", "true", "yes")
            if isinstance(template, int) and not isinstance(template, bool):
                return int(value)
            if isinstance(template, float):
                return float(value)
            if isinstance(template, list):
                elems = [v.strip() for v in value.split(",") if v.strip()]
                if template and isinstance(template[0], int):
                    return [int(v) for v in elems]
                return [float(v) for v in elems]
            return value
        except ValueError as exc:
            raise ConfigError(f"cannot parse {key} = {value!r}: {exc}") from exc
    return value


def parse_config_file(path) -> dict[str, str]:
    """Flat ``key = value`` per line, UTF-8, '#' comments; no nesting."""
    out: dict[str, str] = {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, val = line.split("=", 1)
        out[key.strip()] = val.strip()
    return out


def config_from_file(path, **cli_overrides) -> ExperimentConfig:
    kv = parse_config_file(path)
    name = cli_overrides.pop("experiment", None) or kv.pop("experiment", None)
    if not name:
        raise ConfigError("config must name an experiment (key 'experiment') or pass one on the CLI")
    merged: dict[str, Any] = {}
    for key, val in kv.items():
        if key in ("seed", "threads"):
            merged[key] = int(val)
        elif key in ("mem_cap_gib",):
            merged[key] = float(val)
        elif key in ("out", "tag"):
            merged[key] = val
        else:
            merged[key] = val
    merged.update({k: v for k, v in cli_overrides.items() if v is not None})
    return default_config(name, **merged)


def estimate_bytes(config: ExperimentConfig) -> int:
    """Crude upper bound for the main working arrays of an experiment."""
    n = int(config.get("n_points", 0) or (max(config.get("n_list", [0])) if config.get("n_list") else 0))
    base = 16 * 12 * n * n if n else 64 << 20
    if config.experiment == "decoupling":
        deltas = config.get("deltas", [0.5])
        R = 4.0 / min(deltas) ** 2
        base = int((2 * R + 1) ** 2 * 16 * 6)
    return int(base)


def run_experiment(config: ExperimentConfig) -> SweepResult:
    if config.experiment not in _REGISTRY:
        raise ConfigError(f"unknown experiment {config.experiment!r}; known: {', '.join(EXPERIMENTS)}")
    need = estimate_bytes(config)
    cap = int(config.mem_cap_gib * (1 << 30))
    if need > cap:
        raise ConfigError(
            f"estimated memory {need / 2**30:.2f} GiB exceeds cap {config.mem_cap_gib} GiB; refusing to run"
        )
    result = _REGISTRY[config.experiment](config)
    return result


def check_guard(result: SweepResult) -> tuple[bool, str]:
    guard = _GUARDS.get(result.experiment)
    if guard is None:
        return True, "no guard registered"
    return guard(result)


def write_outputs(result: SweepResult, config: ExperimentConfig) -> Path:
    tag = config.tag or time.strftime("%Y%m%dT%H%M%S", time.gmtime())
    out_dir = Path(config.out) / config.experiment / tag
    out_dir.mkdir(parents=True, exist_ok=True)
    emit_csv(result, out_dir / "result.csv")
    emit_fit_json(result, out_dir / "fit.json")
    emit_plot(result, out_dir / "plot.svg")
    return out_dir
