"""Compiled evaluation and projection for the built-in curve families."""
import math

import numpy as np
from numba import njit

LINE = 0
HELIX = 1
POLYNOMIAL = 2


@njit(cache=True)
def curve_derivs(kind, prm, coeffs, s, n):
    out = np.zeros((n + 1, 3))
    if kind == LINE:
        for c in range(3):
            out[0, c] = prm[c] + s * prm[3 + c]
            if n >= 1:
                out[1, c] = prm[3 + c]
    elif kind == HELIX:
        # prm: radius, rise per radian, w = hypot(radius, rise), phase, center xyz
        radius, rise, w, phase = prm[0], prm[1], prm[2], prm[3]
        arg = phase + s / w
        ca, sa = math.cos(arg), math.sin(arg)
        scale = radius
        for j in range(n + 1):
            m = j % 4
            if m == 0:
                cj, sj = ca, sa
            elif m == 1:
                cj, sj = -sa, ca
            elif m == 2:
                cj, sj = -ca, -sa
            else:
                cj, sj = sa, -ca
            out[j, 0] = scale * cj
            out[j, 1] = scale * sj
            scale /= w
        out[0, 0] += prm[4]
        out[0, 1] += prm[5]
        out[0, 2] = prm[6] + rise * s / w
        if n >= 1:
            out[1, 2] = rise / w
    else:
        m = coeffs.shape[0]
        for j in range(min(n + 1, m)):
            for c in range(3):
                acc = 0.0
                for i in range(m - 1, j - 1, -1):
                    f = 1.0
                    for k in range(i - j + 1, i + 1):
                        f *= k
                    acc = acc * s + coeffs[i, c] * f
                out[j, c] = acc
    return out


@njit(cache=True)
def _dot3(a, b):
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]


@njit(cache=True)
def _half_dist2(kind, prm, coeffs, P, s):
    q = curve_derivs(kind, prm, coeffs, s, 0)[0]
    dx, dy, dz = P[0] - q[0], P[1] - q[1], P[2] - q[2]
    return 0.5 * (dx * dx + dy * dy + dz * dz)


@njit(cache=True)
def newton_project(kind, prm, coeffs, P, s, lo, hi, clamp, max_iter, grad_tol, step_tol):
    """Damped Newton on (P - eta(s)).eta'(s) = 0; returns (s, converged, iterations)."""
    converged = False
    it = 0
    r = np.zeros(3)
    for it in range(1, max_iter + 1):
        d = curve_derivs(kind, prm, coeffs, s, 2)
        for c in range(3):
            r[c] = P[c] - d[0, c]
        grad = -_dot3(r, d[1])
        speed2 = _dot3(d[1], d[1])
        hess = speed2 - _dot3(r, d[2])
        if hess > 0:
            step = -grad / hess
        else:
            step = -grad / speed2
        if hess <= 0 or abs(step) > 1e-3:
            f0 = 0.5 * _dot3(r, r)
            lam = 1.0
            while lam > 1e-6 and _half_dist2(kind, prm, coeffs, P, s + lam * step) > f0 + 1e-14 * max(f0, 1.0):
                lam *= 0.5
            step *= lam
        s += step
        if clamp:
            s = min(max(s, lo), hi)
        if abs(grad) < grad_tol and abs(step) < step_tol:
            converged = True
            break
    return s, converged, it
