"""Shared numerical oracles for the tests."""
import math

import numpy as np

from quadpath.controller import extension_derivative
from quadpath.dynamics import MassGeometryParams, plant_derivative
from quadpath.trajectory import frame_at, make_polynomial

G = 9.81
LEVEL = 0.9 * G
PARAMS = MassGeometryParams()


def open_loop_flow(xp, ext, U_bar, t, steps=None):
    """Plant plus thrust/yaw integrators under constant ``U_bar``, RK4 to time ``t`` (may be negative)."""
    X = np.concatenate([xp, ext]).astype(float)
    U_bar = np.asarray(U_bar, dtype=float)
    steps = steps or max(4, int(math.ceil(abs(t) / 1e-3)))
    dt = t / steps

    def f(z):
        d_ext, applied = extension_derivative(z[12:], U_bar, LEVEL)
        return np.concatenate([plant_derivative(z[:12], applied, PARAMS), d_ext])

    for _ in range(steps):
        k1 = f(X); k2 = f(X + dt / 2 * k1); k3 = f(X + dt / 2 * k2); k4 = f(X + dt * k3)
        X = X + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    return X[:12], X[12:]


def curve_with_frame(alpha, beta, eps):
    """Quadratic curve through the origin with frame angles (alpha, beta) and planar curvature eps at s = 0."""
    ca, sa, cb, sb = math.cos(alpha), math.sin(alpha), math.cos(beta), math.sin(beta)
    c1 = (ca * cb, sa * cb, sb)
    c2 = (-0.5 * eps * cb * sa, 0.5 * eps * cb * ca, 0.0)
    curve = make_polynomial([(0.0, 0.0, 0.0), c1, c2], s_range=(-5.0, 5.0))
    f = frame_at(curve, 0.0)
    assert abs(f.alpha - alpha) < 1e-12 and abs(f.beta - beta) < 1e-12 and abs(f.epsilon - eps) < 1e-12
    return curve


def fourth_derivative(f, h):
    """Five-point central estimate of f''''(0)."""
    v = [np.asarray(f(k * h), dtype=float) for k in (-2, -1, 0, 1, 2)]
    return (v[0] - 4 * v[1] + 6 * v[2] - 4 * v[3] + v[4]) / h ** 4
