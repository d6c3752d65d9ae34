"""Truncated Taylor series ("jets") in time for the path outputs.

A jet is a length ``ORDER + 1`` array of Taylor coefficients, ``a[k] =
(d^k a/dt^k) / k!``.  The kernels below push the plant state through the
closed-form dynamics and the implicit closest-point condition to obtain the
first four time derivatives of ``(s, e1, e2, delta_phi)`` exactly.
"""
import math

import numpy as np
from numba import njit

ORDER = 4
N = ORDER + 1
CURVE_ORDER = ORDER + 1  # derivative rows of the curve needed for eta'(s(t))


@njit(cache=True)
def jmul(a, b):
    out = np.zeros(N)
    for k in range(N):
        acc = 0.0
        for i in range(k + 1):
            acc += a[i] * b[k - i]
        out[k] = acc
    return out


@njit(cache=True)
def jdiv(a, b):
    out = np.zeros(N)
    for k in range(N):
        acc = a[k]
        for i in range(1, k + 1):
            acc -= b[i] * out[k - i]
        out[k] = acc / b[0]
    return out


@njit(cache=True)
def jsqrt(a):
    out = np.zeros(N)
    out[0] = math.sqrt(a[0])
    for k in range(1, N):
        acc = a[k]
        for i in range(1, k):
            acc -= out[i] * out[k - i]
        out[k] = acc / (2.0 * out[0])
    return out


@njit(cache=True)
def jsincos(w):
    s = np.zeros(N)
    c = np.zeros(N)
    s[0] = math.sin(w[0])
    c[0] = math.cos(w[0])
    for k in range(1, N):
        acc_s = 0.0
        acc_c = 0.0
        for j in range(1, k + 1):
            acc_s += j * w[j] * c[k - j]
            acc_c -= j * w[j] * s[k - j]
        s[k] = acc_s / k
        c[k] = acc_c / k
    return s, c


@njit(cache=True)
def jtanh(w):
    # y' = (1 - y^2) w'
    y = np.zeros(N)
    z = np.zeros(N)
    y[0] = math.tanh(w[0])
    z[0] = 1.0 - y[0] * y[0]
    for k in range(1, N):
        acc = 0.0
        for j in range(1, k + 1):
            acc += j * w[j] * z[k - j]
        y[k] = acc / k
        zk = 0.0
        for i in range(k + 1):
            zk -= y[i] * y[k - i]
        z[k] = zk
    return y


@njit(cache=True)
def jderiv(a):
    out = np.zeros(N)
    for k in range(1, N):
        out[k - 1] = k * a[k]
    return out


@njit(cache=True)
def plant_jets(xp, ext, ubar, g, level):
    """Taylor coefficients of position (N, 3) and yaw (N,) under constant inputs.

    ``xp`` is the 12-vector plant state, ``ext`` the thrust/yaw integrator
    state ``(u1_bar, rho1, u2, rho2)`` and ``ubar = (v1, v2, u3, u4)``.
    """
    ang = np.zeros((3, N))
    for i in range(3):
        ang[i, 0] = xp[6 + i]
        ang[i, 1] = xp[9 + i]
    ang[0, 2] = 0.5 * ext[2]
    ang[1, 2] = 0.5 * ubar[2]
    ang[2, 2] = 0.5 * ubar[3]

    ub = np.zeros(N)
    ub[0] = ext[0] / level
    ub[1] = ext[1] / level
    ub[2] = 0.5 * ubar[0] / level
    d = jtanh(ub) * level
    d[0] += g

    sf, cf = jsincos(ang[0])
    st, ct = jsincos(ang[1])
    sp, cp = jsincos(ang[2])
    stcp = jmul(st, cp)
    r0 = jmul(cf, stcp) + jmul(sf, sp)
    r1 = jmul(sf, stcp) - jmul(cf, sp)
    r2 = jmul(ct, cp)
    a0 = jmul(r0, d)
    a1 = jmul(r1, d)
    a2 = jmul(r2, d)
    a2[0] -= g

    P = np.zeros((N, 3))
    for c in range(3):
        P[0, c] = xp[c]
        P[1, c] = xp[3 + c]
    for k in range(N - 2):
        denom = (k + 1.0) * (k + 2.0)
        P[k + 2, 0] = a0[k] / denom
        P[k + 2, 1] = a1[k] / denom
        P[k + 2, 2] = a2[k] / denom

    phi = np.zeros(N)
    phi[0] = xp[6]
    phi[1] = xp[9]
    phi[2] = ext[2] / 2.0
    phi[3] = ext[3] / 6.0
    phi[4] = ubar[1] / 24.0
    return P, phi


@njit(cache=True)
def _compose(H, m, powers):
    # Taylor coefficients of eta^(m)(s0 + delta(t)), powers[j] = delta^j / j!
    out = np.zeros((N, 3))
    for j in range(N):
        row = m + j
        if row >= H.shape[0]:
            break
        for k in range(N):
            pk = powers[j, k]
            if pk != 0.0:
                for c in range(3):
                    out[k, c] += H[row, c] * pk
    return out


@njit(cache=True)
def _powers(delta):
    powers = np.zeros((N, N))
    powers[0, 0] = 1.0
    for j in range(1, N):
        powers[j] = jmul(powers[j - 1], delta) / j
    return powers


@njit(cache=True)
def output_jets(P, phi, H, s0):
    """Taylor coefficients (N, 4) of ``(s, e1, e2, phi - alpha)``.

    ``H`` holds curve derivatives at the closest point ``s0`` (rows 0..5).
    The constant term of the yaw channel is left unwrapped.
    """
    d1 = H[1]
    r0 = P[0] - H[0]
    gs = -(d1[0] * d1[0] + d1[1] * d1[1] + d1[2] * d1[2])
    gs += r0[0] * H[2, 0] + r0[1] * H[2, 1] + r0[2] * H[2, 2]

    # order-by-order solution of (P - eta(s)).eta'(s) = 0; each pass fixes one more order
    delta = np.zeros(N)
    for _ in range(ORDER):
        powers = _powers(delta)
        E0 = _compose(H, 0, powers)
        E1 = _compose(H, 1, powers)
        G = np.zeros(N)
        for c in range(3):
            G += jmul(P[:, c] - E0[:, c], E1[:, c])
        delta = delta - G / gs
        delta[0] = 0.0
    powers = _powers(delta)
    E0 = _compose(H, 0, powers)
    E1 = _compose(H, 1, powers)

    ex = E1[:, 0].copy()
    ey = E1[:, 1].copy()
    ez = E1[:, 2].copy()
    hxy2 = jmul(ex, ex) + jmul(ey, ey)
    hxy = jsqrt(hxy2)
    speed = jsqrt(hxy2 + jmul(ez, ez))
    n1x = -jdiv(ey, hxy)
    n1y = jdiv(ex, hxy)
    tx = jdiv(ex, speed)
    ty = jdiv(ey, speed)
    tz = jdiv(ez, speed)
    n2x = -jmul(tz, n1y)
    n2y = jmul(tz, n1x)
    n2z = jmul(tx, n1y) - jmul(ty, n1x)

    rx = P[:, 0] - E0[:, 0]
    ry = P[:, 1] - E0[:, 1]
    rz = P[:, 2] - E0[:, 2]
    e1 = jmul(n1x, rx) + jmul(n1y, ry)
    e2 = jmul(n2x, rx) + jmul(n2y, ry) + jmul(n2z, rz)

    # heading rate from d/dt atan2(ey, ex)
    alpha_rate = jdiv(jmul(ex, jderiv(ey)) - jmul(ey, jderiv(ex)), hxy2)
    alpha = np.zeros(N)
    alpha[0] = math.atan2(ey[0], ex[0])
    for k in range(1, N):
        alpha[k] = alpha_rate[k - 1] / k

    out = np.zeros((N, 4))
    out[0, 0] = s0
    for k in range(1, N):
        out[k, 0] = delta[k]
    out[:, 1] = e1
    out[:, 2] = e2
    out[:, 3] = phi - alpha
    return out


@njit(cache=True)
def normal_form_jets(xp, ext, ubar, H, s0, g, level):
    P, phi = plant_jets(xp, ext, ubar, g, level)
    return output_jets(P, phi, H, s0)


@njit(cache=True)
def _cross(a, b):
    return np.array([a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]])


@njit(cache=True)
def output_jacobian(position, H, s0):
    """Jacobian of ``(s, e1, e2, delta_phi)`` w.r.t. ``(x, y, z, phi)``."""
    d1 = H[1]
    d2 = H[2]
    r = position - H[0]
    sp2 = d1[0] * d1[0] + d1[1] * d1[1] + d1[2] * d1[2]
    ds_dP = d1 / (sp2 - (r[0] * d2[0] + r[1] * d2[1] + r[2] * d2[2]))

    sp = math.sqrt(sp2)
    dd = d1[0] * d2[0] + d1[1] * d2[1] + d1[2] * d2[2]
    T = d1 / sp
    T_s = (d2 * sp2 - d1 * dd) / (sp2 * sp)
    n = np.array([-d1[1], d1[0], 0.0])
    n_s = np.array([-d2[1], d2[0], 0.0])
    h2 = n[0] * n[0] + n[1] * n[1]
    h = math.sqrt(h2)
    N1 = n / h
    N1_s = n_s / h - n * (n[0] * n_s[0] + n[1] * n_s[1]) / (h2 * h)
    N2 = _cross(T, N1)
    N2_s = _cross(T_s, N1) + _cross(T, N1_s)
    alpha_s = (d1[0] * d2[1] - d1[1] * d2[0]) / h2

    k1 = N1_s[0] * r[0] + N1_s[1] * r[1] + N1_s[2] * r[2]
    k2 = N2_s[0] * r[0] + N2_s[1] * r[1] + N2_s[2] * r[2]
    J = np.zeros((4, 4))
    for c in range(3):
        J[0, c] = ds_dP[c]
        J[1, c] = N1[c] + k1 * ds_dP[c]
        J[2, c] = N2[c] + k2 * ds_dP[c]
        J[3, c] = -alpha_s * ds_dP[c]
    J[3, 3] = 1.0
    return J


@njit(cache=True)
def input_matrix(xp, ext, g, level):
    """Sensitivity of the fourth derivatives of ``(x, y, z, phi)`` to ``U_bar``."""
    cf, sf = math.cos(xp[6]), math.sin(xp[6])
    ct, st = math.cos(xp[7]), math.sin(xp[7])
    cp, sp = math.cos(xp[8]), math.sin(xp[8])
    th = math.tanh(ext[0] / level)
    d = g + level * th
    dsat = 1.0 - th * th
    B = np.zeros((4, 4))
    B[0, 0] = (cf * st * cp + sf * sp) * dsat
    B[1, 0] = (sf * st * cp - cf * sp) * dsat
    B[2, 0] = ct * cp * dsat
    B[0, 2] = d * cf * ct * cp
    B[1, 2] = d * sf * ct * cp
    B[2, 2] = -d * st * cp
    B[0, 3] = d * (-cf * st * sp + sf * cp)
    B[1, 3] = d * (-sf * st * sp - cf * cp)
    B[2, 3] = -d * ct * sp
    B[3, 1] = 1.0
    return B


@njit(cache=True)
def decoupling_kernel(xp, ext, H, s0, g, level):
    """Normal-form coordinates (4, 4), drift ``q``, input matrix ``b``, its inverse and 1-norm condition."""
    out = normal_form_jets(xp, ext, np.zeros(4), H, s0, g, level)
    xi = np.empty((4, 4))
    fact = 1.0
    for k in range(4):
        if k > 0:
            fact *= k
        for c in range(4):
            xi[k, c] = fact * out[k, c]
    q = 24.0 * out[4]
    b = output_jacobian(xp[:3].copy(), H, s0) @ input_matrix(xp, ext, g, level)
    # 1-norm condition number; infinite when b is exactly singular
    if abs(np.linalg.det(b)) == 0.0:
        return xi, q, b, np.full((4, 4), np.nan), np.inf
    b_inv = np.linalg.inv(b)
    cond = np.abs(b).sum(axis=0).max() * np.abs(b_inv).sum(axis=0).max()
    return xi, q, b, b_inv, cond
