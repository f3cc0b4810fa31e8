"""Hot numerical loops, JIT-compiled when numba is available.

All kernels are sequential with fixed accumulation order, so results are
bit-reproducible regardless of how callers schedule work.  Each has a pure
numpy fallback with the same summation order (numpy reduces along the last
axis in index order).
"""

from __future__ import annotations

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except Exception:  # pragma: no cover - exercised only without numba
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def deco(fn):
            return fn

        if args and callable(args[0]):
            return args[0]
        return deco


@njit(cache=True)
def _phase_sum_nb(coef, xi, eta, dx, dy, w, out):
    for m in range(coef.size):
        acc = 0.0j
        xm = xi[m]
        em = eta[m]
        for j in range(dx.size):
            ph = -(xm * dx[j] + em * dy[j])
            acc += w[j] * complex(np.cos(ph), np.sin(ph))
        out[m] = coef[m] * acc


def phase_sum(coef, xi, eta, dx, dy, w):
    """``out[m] = coef[m] * sum_j w[j] exp(-i(xi[m] dx[j] + eta[m] dy[j]))``."""
    coef = np.ascontiguousarray(coef, dtype=np.complex128)
    xi = np.ascontiguousarray(xi, dtype=np.float64)
    eta = np.ascontiguousarray(eta, dtype=np.float64)
    dx = np.ascontiguousarray(dx, dtype=np.float64)
    dy = np.ascontiguousarray(dy, dtype=np.float64)
    w = np.ascontiguousarray(w, dtype=np.complex128)
    out = np.empty(coef.size, dtype=np.complex128)
    if HAVE_NUMBA:
        _phase_sum_nb(coef, xi, eta, dx, dy, w, out)
        return out
    # chunk over nodes to bound memory
    acc = np.zeros(coef.size, dtype=np.complex128)
    step = max(1, int(4e6 // max(coef.size, 1)))
    for j0 in range(0, dx.size, step):
        sl = slice(j0, j0 + step)
        ph = np.exp(-1j * (np.outer(xi, dx[sl]) + np.outer(eta, dy[sl])))
        acc += ph @ w[sl]
    return coef * acc


@njit(cache=True)
def _uladder_sum_nb(coef, xi, eta, t, s, w, u0, du, acc):
    n_u = acc.shape[0]
    for m in range(coef.size):
        xm = xi[m]
        em = eta[m]
        cm = coef[m]
        for j in range(t.size):
            phi = xm * t[j] + em * s[j]
            ph0 = -u0 * phi
            b = (w[j] * cm) * complex(np.cos(ph0), np.sin(ph0))
            phd = -du * phi
            r = complex(np.cos(phd), np.sin(phd))
            for q in range(n_u):
                acc[q, m] += b
                b *= r
    return acc


def uladder_sum(coef, xi, eta, t, s, w, u0, du, n_u):
    """``acc[q, m] = coef[m] * sum_j w[j] exp(-i u_q (xi[m] t[j] + eta[m] s[j]))``
    for the uniform ladder ``u_q = u0 + q*du``."""
    coef = np.ascontiguousarray(coef, dtype=np.complex128)
    xi = np.ascontiguousarray(xi, dtype=np.float64)
    eta = np.ascontiguousarray(eta, dtype=np.float64)
    t = np.ascontiguousarray(t, dtype=np.float64)
    s = np.ascontiguousarray(s, dtype=np.float64)
    w = np.ascontiguousarray(w, dtype=np.float64)
    acc = np.zeros((n_u, coef.size), dtype=np.complex128)
    if HAVE_NUMBA:
        return _uladder_sum_nb(coef, xi, eta, t, s, w, float(u0), float(du), acc)
    phi = np.outer(xi, t) + np.outer(eta, s)  # (modes, nodes)
    base = (w[None, :] * coef[:, None]) * np.exp(-1j * u0 * phi)
    ratio = np.exp(-1j * du * phi)
    for q in range(n_u):
        acc[q] = base.sum(axis=1)
        if q + 1 < n_u:
            base = base * ratio
    return acc


@njit(cache=True)
def _rowphase_accum_nb(G, w_rows, disp_rows, d_eta, out):
    # G: (J, N, N) mixed (x, eta) data per node; out[x, e] += w[j,x] G[j,x,e] exp(-i eta_e d[j,x])
    J, N, _ = G.shape
    half = N // 2
    for j in range(J):
        for x in range(N):
            wx = w_rows[j, x]
            if wx == 0.0:
                continue
            th = d_eta * disp_rows[j, x]
            r = complex(np.cos(th), np.sin(th))  # exp(-i d_eta d) with th = -d_eta*d folded below
            # e runs 0..N-1 with signed frequency e~ = e (e < half) else e - N
            p = 1.0 + 0.0j
            for e in range(half):
                out[x, e] += wx * G[j, x, e] * p
                p *= r
            # continue powers for upper half with the wrap factor exp(+i N d_eta d)
            thN = -N * th
            wrap = complex(np.cos(thN), np.sin(thN))
            for e in range(half, N):
                out[x, e] += wx * G[j, x, e] * (p * wrap)
                p *= r


def rowphase_accum(G, w_rows, disp_rows, d_eta, out):
    """Accumulate per-row y-frequency phases (one-variable coefficient path).

    ``out[x, e] += w[j, x] * G[j, x, e] * exp(-i eta_e * disp[j, x])`` where
    ``eta_e = d_eta * e~`` with signed FFT index ``e~``.
    """
    G = np.ascontiguousarray(G, dtype=np.complex128)
    w_rows = np.ascontiguousarray(w_rows, dtype=np.float64)
    disp_rows = np.ascontiguousarray(disp_rows, dtype=np.float64)
    if HAVE_NUMBA:
        # kernel uses r = exp(i th) with th = d_eta*d; phases need exp(-i e~ d_eta d):
        _rowphase_accum_nb(G, w_rows, -disp_rows, float(d_eta), out)
        return out
    N = G.shape[1]
    e_signed = np.fft.fftfreq(N, d=1.0 / N)  # 0..half-1, -half..-1
    phase = np.exp(-1j * d_eta * disp_rows[:, :, None] * e_signed[None, None, :])
    out += np.einsum("jx,jxe,jxe->xe", w_rows, G, phase)
    return out


@njit(cache=True)
def _general_y_eval_nb(G, theta, out_j_phase, out):
    # G: (N, N) mixed (x, eta); theta[i, jj] = d_eta * disp[i, jj]
    # out[i, jj] += (1/N) sum_e G[i, e] exp(i 2pi e jj / N) exp(-i eta_e disp)
    N = G.shape[0]
    half = N // 2
    for i in range(N):
        for jj in range(N):
            th = out_j_phase[jj] - theta[i, jj]
            q = complex(np.cos(th), np.sin(th))
            thN = N * theta[i, jj]
            wrap = complex(np.cos(thN), np.sin(thN))
            p = 1.0 + 0.0j
            acc_lo = 0.0j
            acc_hi = 0.0j
            for e in range(half):
                acc_lo += G[i, e] * p
                p *= q
            for e in range(half, N):
                acc_hi += G[i, e] * p
                p *= q
            out[i, jj] += (acc_lo + acc_hi * wrap) / N
    return out


def general_y_eval(G, disp, d_eta, out):
    """Evaluate the y-interpolant of mixed-domain data at per-point offsets.

    ``out[i, j] += (1/N) sum_e G[i, e] exp(i 2pi e j/N) exp(-i eta_e disp[i, j])``
    with signed FFT frequencies ``eta_e``; equivalent to sampling the shifted
    band-limited interpolant ``f(x_i, y_j - disp[i, j])``.
    """
    G = np.ascontiguousarray(G, dtype=np.complex128)
    disp = np.ascontiguousarray(disp, dtype=np.float64)
    N = G.shape[0]
    if HAVE_NUMBA:
        theta = d_eta * disp
        j_phase = 2 * np.pi * np.arange(N) / N
        return _general_y_eval_nb(G, theta, j_phase, out)
    e_signed = np.fft.fftfreq(N, d=1.0 / N)
    eta = d_eta * e_signed
    # unsigned exponent is fine in the spatial factor: exp(2pi i e j/N) is N-periodic in e
    spatial = np.exp(2j * np.pi * np.outer(np.arange(N), np.arange(N)) / N)  # (j, e)
    for i in range(N):
        shift = np.exp(-1j * disp[i][:, None] * eta[None, :])  # (j, e)
        out[i] += (spatial * shift * G[i][None, :]).sum(axis=1) / N
    return out


@njit(cache=True)
def _osc_sum_nb(env, phase, omega, tau, out):
    for q in range(omega.size):
        acc = 0.0j
        om = omega[q]
        for j in range(tau.size):
            ph = phase[j] - om * tau[j]
            acc += env[j] * complex(np.cos(ph), np.sin(ph))
        out[q] = acc
    return out


def osc_sum(env, phase, omega, tau):
    """``out[q] = sum_j env[j] exp(i (phase[j] - omega[q] tau[j]))``."""
    env = np.ascontiguousarray(env, dtype=np.float64)
    phase = np.ascontiguousarray(phase, dtype=np.float64)
    omega = np.ascontiguousarray(np.atleast_1d(omega), dtype=np.float64)
    tau = np.ascontiguousarray(tau, dtype=np.float64)
    out = np.empty(omega.size, dtype=np.complex128)
    if HAVE_NUMBA:
        return _osc_sum_nb(env, phase, omega, tau, out)
    step = max(1, int(8e6 // max(omega.size, 1)))
    acc = np.zeros(omega.size, dtype=np.complex128)
    for j0 in range(0, tau.size, step):
        sl = slice(j0, j0 + step)
        acc += np.exp(1j * (phase[None, sl] - np.outer(omega, tau[sl]))) @ env[sl]
    return acc
