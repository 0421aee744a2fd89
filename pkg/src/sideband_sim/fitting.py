"""Shared least-squares machinery: multi-Lorentzian and damped-cosine
models with analytic Jacobians, plus linear-fit helpers.

The nonlinear models are refined by Levenberg-Marquardt
(scipy.optimize.least_squares, method="lm") with convergence declared at
a relative parameter change below 1e-8 or after 200 iterations.
"""

from __future__ import annotations

import math
from typing import Callable, Tuple

import numpy as np
from scipy.optimize import least_squares

XTOL = 1e-8
MAX_ITER = 200


def lm_fit(residual: Callable, jacobian: Callable,
           p0: np.ndarray) -> Tuple[np.ndarray, bool, float]:
    """LM refinement; returns (params, converged, residual_2norm)."""
    p0 = np.asarray(p0, dtype=float)
    max_nfev = MAX_ITER * (len(p0) + 1)
    sol = least_squares(residual, p0, jac=jacobian, method="lm",
                        xtol=XTOL, ftol=1e-15, gtol=1e-15,
                        max_nfev=max_nfev)
    converged = bool(sol.status > 0) and sol.nfev < max_nfev
    return sol.x, converged, float(np.linalg.norm(sol.fun))


def multi_lorentzian(x: np.ndarray, params: np.ndarray) -> np.ndarray:
    """B + sum_p A_p / (1 + ((x - c_p)/(w_p/2))^2); params = [B, A,c,w, ...]."""
    y = np.full_like(x, params[0], dtype=float)
    for i in range(1, len(params), 3):
        a, c, w = params[i:i + 3]
        u = 2.0 * (x - c) / w
        y += a / (1.0 + u * u)
    return y


def _multi_lorentzian_jac(x: np.ndarray, params: np.ndarray) -> np.ndarray:
    jac = np.zeros((len(x), len(params)))
    jac[:, 0] = 1.0
    for i in range(1, len(params), 3):
        a, c, w = params[i:i + 3]
        u = 2.0 * (x - c) / w
        lor = 1.0 / (1.0 + u * u)
        lor2 = lor * lor
        jac[:, i] = lor
        jac[:, i + 1] = 4.0 * a * u * lor2 / w
        jac[:, i + 2] = 2.0 * a * u * u * lor2 / w
    return jac


def fit_multi_lorentzian(x: np.ndarray, y: np.ndarray,
                         p0: np.ndarray) -> Tuple[np.ndarray, bool, float]:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    params, converged, rnorm = lm_fit(
        lambda p: multi_lorentzian(x, p) - y,
        lambda p: _multi_lorentzian_jac(x, p),
        p0)
    # widths enter squared: normalize the sign degeneracy
    for i in range(3, len(params), 3):
        params[i] = abs(params[i])
    return params, converged, rnorm


def lorentzian_linear_base(x: np.ndarray, x_ref: float,
                           params: np.ndarray) -> np.ndarray:
    """b0 + b1*(x - x_ref) + A/(1 + ((x-c)/(w/2))^2); params = [b0,b1,A,c,w].

    The sloped baseline absorbs the smooth tail of a neighboring peak on
    a local fit window without biasing the peak parameters.
    """
    b0, b1, a, c, w = params
    u = 2.0 * (x - c) / w
    return b0 + b1 * (x - x_ref) + a / (1.0 + u * u)


def _lorentzian_linear_base_jac(x: np.ndarray, x_ref: float,
                                params: np.ndarray) -> np.ndarray:
    _, _, a, c, w = params
    u = 2.0 * (x - c) / w
    lor = 1.0 / (1.0 + u * u)
    lor2 = lor * lor
    jac = np.empty((len(x), 5))
    jac[:, 0] = 1.0
    jac[:, 1] = x - x_ref
    jac[:, 2] = lor
    jac[:, 3] = 4.0 * a * u * lor2 / w
    jac[:, 4] = 2.0 * a * u * u * lor2 / w
    return jac


def fit_lorentzian_linear_base(x: np.ndarray, y: np.ndarray, x_ref: float,
                               p0: np.ndarray) -> Tuple[np.ndarray, bool, float]:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    params, converged, rnorm = lm_fit(
        lambda p: lorentzian_linear_base(x, x_ref, p) - y,
        lambda p: _lorentzian_linear_base_jac(x, x_ref, p),
        p0)
    params[4] = abs(params[4])
    return params, converged, rnorm


def damped_cosine(t: np.ndarray, params: np.ndarray) -> np.ndarray:
    """A e^{-lam t} cos(2 pi nu t + phi) + C; params = [A, lam, nu, phi, C]."""
    a, lam, nu, phi, c = params
    return a * np.exp(-lam * t) * np.cos(2.0 * np.pi * nu * t + phi) + c


def _damped_cosine_u(t: np.ndarray, q: np.ndarray) -> np.ndarray:
    # internal parametrization lam = e^u keeps the envelope decaying,
    # which LM cannot otherwise guarantee on noisy data
    a, u, nu, phi, c = q
    lam = math.exp(min(u, 50.0))
    return a * np.exp(-lam * t) * np.cos(2.0 * np.pi * nu * t + phi) + c


def _damped_cosine_u_jac(t: np.ndarray, q: np.ndarray) -> np.ndarray:
    a, u, nu, phi, _ = q
    lam = math.exp(min(u, 50.0))
    env = np.exp(-lam * t)
    theta = 2.0 * np.pi * nu * t + phi
    cs, sn = np.cos(theta), np.sin(theta)
    jac = np.empty((len(t), 5))
    jac[:, 0] = env * cs
    jac[:, 1] = -a * t * env * cs * lam
    jac[:, 2] = -a * env * sn * 2.0 * np.pi * t
    jac[:, 3] = -a * env * sn
    jac[:, 4] = 1.0
    return jac


def seed_frequency(t: np.ndarray, y: np.ndarray) -> float:
    """Dominant frequency (1/ns) from the DFT of the mean-subtracted trace."""
    y0 = y - y.mean()
    spec = np.abs(np.fft.rfft(y0))
    freqs = np.fft.rfftfreq(len(y0), t[1] - t[0])
    if len(spec) < 2:
        return 0.0
    k = 1 + int(np.argmax(spec[1:]))
    return float(freqs[k])


def fit_damped_cosine(t: np.ndarray, y: np.ndarray,
                      p0=None) -> Tuple[np.ndarray, bool, float]:
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    def run(p_init):
        q0 = list(p_init)
        q0[1] = math.log(max(p_init[1], 1e-12))
        q, converged, rnorm = lm_fit(
            lambda p: _damped_cosine_u(t, p) - y,
            lambda p: _damped_cosine_u_jac(t, p), q0)
        params = np.array(q)
        params[1] = math.exp(min(q[1], 50.0))
        return params, converged, rnorm

    if p0 is None:
        # multi-start around the DFT peak: on noisy data the peak bin can
        # land one resolution step off and strand LM in a local optimum
        nu0 = seed_frequency(t, y)
        amp0 = 0.5 * (y.max() - y.min())
        dnu = 1.0 / max(t[-1] - t[0], 1e-9)
        best = None
        for nu_seed in (nu0, nu0 - 0.5 * dnu, nu0 + 0.5 * dnu):
            cand = run([amp0, 1.0 / max(t[-1], 1e-9), max(nu_seed, 0.0),
                        0.0, y.mean()])
            if best is None or cand[2] < best[2]:
                best = cand
        params, converged, rnorm = best
    else:
        params, converged, rnorm = run(p0)
    # cos is even in nu (phi -> -phi); report nu >= 0
    if params[2] < 0:
        params[2] = -params[2]
        params[3] = -params[3]
    # on a uniform grid the frequency is only identifiable modulo the
    # sampling rate: fold an aliased optimum back in band and refit
    f_sample = 1.0 / float(np.median(np.diff(t)))
    if params[2] > 0.5 * f_sample:
        nu_mod = params[2] % f_sample
        folded = list(params)
        folded[2] = min(nu_mod, f_sample - nu_mod)
        params2, converged2, rnorm2 = run(folded)
        if params2[2] < 0:
            params2[2] = -params2[2]
            params2[3] = -params2[3]
        if rnorm2 <= rnorm * (1.0 + 1e-9) and params2[2] <= 0.5 * f_sample:
            params, converged, rnorm = params2, converged2, rnorm2
    params[3] = (params[3] + np.pi) % (2.0 * np.pi) - np.pi
    return params, converged, rnorm


def r_squared(y: np.ndarray, y_model: np.ndarray) -> float:
    y = np.asarray(y, dtype=float)
    ss_res = float(np.sum((y - y_model) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    return 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0


def line_through_origin(x: np.ndarray, y: np.ndarray) -> Tuple[float, float]:
    """Least-squares slope of y = s*x and the fit's R^2."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    slope = float(np.dot(x, y) / np.dot(x, x))
    return slope, r_squared(y, slope * x)


def linear_fit(x: np.ndarray, y: np.ndarray) -> Tuple[float, float, float]:
    """(slope, intercept, R^2) of an ordinary straight-line fit."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    slope, intercept = np.polyfit(x, y, 1)
    return float(slope), float(intercept), r_squared(y, slope * x + intercept)
