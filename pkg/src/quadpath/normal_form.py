"""Normal-form coordinates of the path-following error system.

The regulated outputs are ``xi1 = (s, e1, e2, delta_phi)``.  After putting
double integrators in front of thrust and yaw acceleration every channel has
relative degree four, so with ``U_bar = (v1, v2, u3, u4)``

    xi1' = xi2,  xi2' = xi3,  xi3' = xi4,  xi4' = q + b U_bar.

``xi2..xi4``, ``q`` and ``b`` are obtained from the exact Taylor expansion of
the outputs along the plant flow (see :mod:`quadpath._jets`).  On the curve
they reduce to ``xi2 = W (vx, vy, vz, phi_dot)`` and ``b = W B0(phi)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import _jets
from .trajectory import (CurveDescriptor, CurveFrame, FrameDegeneracyError, PathTracker,
                         frame_from_derivatives, wrap_to_pi)

DEFAULT_LEVEL_FRACTION = 0.9
SINGULAR_COND = 1e8


class DecouplingSingularError(np.linalg.LinAlgError):
    pass


class OutputInversionError(ValueError):
    pass


def w_matrix(alpha: float, beta: float, epsilon: float) -> np.ndarray:
    ca, sa = math.cos(alpha), math.sin(alpha)
    cb, sb = math.cos(beta), math.sin(beta)
    return np.array([
        [ca * cb, sa * cb, sb, 0.0],
        [-sa, ca, 0.0, 0.0],
        [-ca * sb, -sa * sb, cb, 0.0],
        [-epsilon * ca * cb, -epsilon * sa * cb, -epsilon * sb, 1.0],
    ])


def w_inverse(alpha: float, beta: float, epsilon: float) -> np.ndarray:
    ca, sa = math.cos(alpha), math.sin(alpha)
    cb, sb = math.cos(beta), math.sin(beta)
    return np.array([
        [ca * cb, -sa, -ca * sb, 0.0],
        [sa * cb, ca, -sa * sb, 0.0],
        [sb, 0.0, cb, 0.0],
        [epsilon, 0.0, 0.0, 1.0],
    ])


@dataclass
class ExtensionState:
    u1_bar: float = 0.0
    rho1: float = 0.0
    u2: float = 0.0
    rho2: float = 0.0

    def to_vector(self) -> np.ndarray:
        return np.array([self.u1_bar, self.rho1, self.u2, self.rho2])

    @classmethod
    def from_vector(cls, v) -> "ExtensionState":
        return cls(*(float(x) for x in v))


@dataclass
class NormalFormState:
    xi1: np.ndarray
    xi2: np.ndarray
    xi3: np.ndarray
    xi4: np.ndarray

    def as_matrix(self) -> np.ndarray:
        return np.vstack([self.xi1, self.xi2, self.xi3, self.xi4])


@dataclass
class DecouplingData:
    q: np.ndarray
    b: np.ndarray
    b_inv: Optional[np.ndarray] = None


def b0_block(phi: float, g: float) -> np.ndarray:
    """Input matrix of the fourth position/yaw derivatives at hover with yaw ``phi``."""
    cf, sf = math.cos(phi), math.sin(phi)
    return np.array([
        [0.0, 0.0, g * cf, g * sf],
        [0.0, 0.0, g * sf, -g * cf],
        [1.0, 0.0, 0.0, 0.0],
        [0.0, 1.0, 0.0, 0.0],
    ])


def b_at_origin(phi: float, frame: CurveFrame, g: float) -> np.ndarray:
    """Input matrix at hover on the curve.

    Exact when the curve is arc-length parameterised at ``frame.s`` (all
    built-in curves are); otherwise every entry driven by ``s_dot`` is off by
    the factor ``1 / |eta'|``.
    """
    return w_matrix(frame.alpha, frame.beta, frame.epsilon) @ b0_block(phi, g)


def b_at_origin_inverse(phi: float, frame: CurveFrame, g: float) -> np.ndarray:
    """Closed-form inverse of :func:`b_at_origin`; the yaw-dependent 2x2 block is its own inverse."""
    cf, sf = math.cos(phi), math.sin(phi)
    b0_inv = np.array([
        [0.0, 0.0, 1.0, 0.0],
        [0.0, 0.0, 0.0, 1.0],
        [cf / g, sf / g, 0.0, 0.0],
        [sf / g, -cf / g, 0.0, 0.0],
    ])
    return b0_inv @ w_inverse(frame.alpha, frame.beta, frame.epsilon)


def _curve_rows(curve: CurveDescriptor, s: float) -> np.ndarray:
    H = np.asarray(curve.derivatives(s, _jets.CURVE_ORDER), dtype=float)
    if H.shape != (_jets.CURVE_ORDER + 1, 3):
        raise ValueError(f"curve must provide {_jets.CURVE_ORDER} derivatives")
    return np.ascontiguousarray(H)


class OutputMap:
    """Evaluates outputs, normal-form coordinates and decoupling data.

    One instance belongs to one simulation run; it owns the projection cache
    through ``tracker``.
    """

    def __init__(self, curve: CurveDescriptor, g: float = 9.81,
                 level_fraction: float = DEFAULT_LEVEL_FRACTION,
                 tracker: Optional[PathTracker] = None):
        if not 0.0 < level_fraction < 1.0:
            raise ValueError("thrust saturation fraction l must lie in (0, 1)")
        self.curve = curve
        self.g = g
        self.level = level_fraction * g
        self.tracker = tracker if tracker is not None else PathTracker(curve)

    def locate(self, position):
        """Projection, curve derivative rows and frame for ``position``."""
        proj = self.tracker.project(position)
        H = _curve_rows(self.curve, proj.s_star)
        frame = frame_from_derivatives(proj.s_star, H, self.tracker.alpha_ref,
                                       self.tracker.alpha_override)
        return proj, H, frame

    def jets(self, xp, ext, U_bar=None, located=None):
        xp = np.ascontiguousarray(xp, dtype=float)
        ext = np.ascontiguousarray(ext, dtype=float)
        U_bar = np.zeros(4) if U_bar is None else np.ascontiguousarray(U_bar, dtype=float)
        proj, H, frame = located if located is not None else self.locate(xp[:3])
        if frame.degenerate:
            raise FrameDegeneracyError(
                f"normal form undefined on a vertical tangent (s={proj.s_star:.6g})")
        out = _jets.normal_form_jets(xp, ext, U_bar, H, proj.s_star, self.g, self.level)
        return out, (proj, H, frame)

    @staticmethod
    def _xi_from_jets(out) -> np.ndarray:
        xi = out[:4] * np.array([1.0, 1.0, 2.0, 6.0])[:, None]
        xi[0, 3] = wrap_to_pi(out[0, 3])
        return xi

    def xi(self, xp, ext, located=None) -> NormalFormState:
        out, located = self.jets(xp, ext, located=located)
        xi = self._xi_from_jets(out)
        return NormalFormState(*xi)

    def input_matrix(self, xp, ext) -> np.ndarray:
        """Sensitivity of the fourth derivatives of ``(x, y, z, phi)`` to ``U_bar``."""
        return _jets.input_matrix(np.ascontiguousarray(xp, dtype=float),
                                  np.ascontiguousarray(ext, dtype=float), self.g, self.level)

    def decoupling_arrays(self, xp, ext, located=None, check: bool = True):
        """``(xi, q, b, b_inv, located)`` with ``xi`` as a 4x4 array (rows xi1..xi4)."""
        xp = np.ascontiguousarray(xp, dtype=float)
        ext = np.ascontiguousarray(ext, dtype=float)
        proj, H, frame = located if located is not None else self.locate(xp[:3])
        if frame.degenerate:
            raise FrameDegeneracyError(
                f"normal form undefined on a vertical tangent (s={proj.s_star:.6g})")
        xi, q, b, b_inv, cond = _jets.decoupling_kernel(xp, ext, H, proj.s_star, self.g, self.level)
        xi[0, 3] = wrap_to_pi(float(xi[0, 3]))
        if check and not cond < SINGULAR_COND:
            raise DecouplingSingularError(
                f"decoupling matrix singular (cond={cond:.3g}) at state {xp.tolist()}")
        return xi, q, b, b_inv, (proj, H, frame)

    def decoupling(self, xp, ext, located=None, check: bool = True):
        """Normal-form state together with ``q`` and ``b``."""
        xi, q, b, b_inv, located = self.decoupling_arrays(xp, ext, located, check)
        return NormalFormState(*xi), DecouplingData(q, b, b_inv), located


def xi_from_plant(x, ext, curve: CurveDescriptor, tracker: Optional[PathTracker] = None,
                  g: float = 9.81, level_fraction: float = DEFAULT_LEVEL_FRACTION) -> NormalFormState:
    """Normal-form coordinates of plant state ``x`` (QuadState or 12-vector)."""
    xp = x.to_vector() if hasattr(x, "to_vector") else np.asarray(x, dtype=float)
    ext = ext.to_vector() if hasattr(ext, "to_vector") else np.asarray(ext, dtype=float)
    return OutputMap(curve, g, level_fraction, tracker).xi(xp, ext)


def decoupling(x, ext, curve: CurveDescriptor, tracker: Optional[PathTracker] = None,
               g: float = 9.81, level_fraction: float = DEFAULT_LEVEL_FRACTION) -> DecouplingData:
    """Drift ``q`` and input matrix ``b`` with ``xi4' = q + b U_bar``."""
    xp = x.to_vector() if hasattr(x, "to_vector") else np.asarray(x, dtype=float)
    ext = ext.to_vector() if hasattr(ext, "to_vector") else np.asarray(ext, dtype=float)
    return OutputMap(curve, g, level_fraction, tracker).decoupling(xp, ext)[1]


def invert_outputs(xi2, xi3, phi: float, curve: CurveDescriptor, position,
                   s_hint: Optional[float] = None, g: float = 9.81):
    """Recover ``(u1, theta, psi)`` from the first two output derivatives.

    ``position`` fixes the offset from the curve, which enters the output map
    away from the curve.  Raises :class:`OutputInversionError` when the implied
    thrust axis points downward or pitch/roll reach +-pi/2.
    """
    position = np.asarray(position, dtype=float)
    tracker = PathTracker(curve, s_hint)
    proj = tracker.project(position)
    H = _curve_rows(curve, proj.s_star)
    J = _jets.output_jacobian(position, H, proj.s_star)
    rates = np.linalg.solve(J, np.asarray(xi2, dtype=float))
    P = np.zeros((_jets.N, 3))
    P[0] = position
    P[1] = rates[:3]
    phij = np.zeros(_jets.N)
    phij[0] = phi
    phij[1] = rates[3]
    quad = _jets.output_jets(P, phij, H, proj.s_star)[2]
    acc = np.linalg.solve(J, np.asarray(xi3, dtype=float) - 2.0 * quad)
    f = acc[:3] + np.array([0.0, 0.0, g])
    d = float(np.linalg.norm(f))
    if d == 0.0:
        raise OutputInversionError("zero thrust demand: thrust offset u1 = -g")
    cf, sf = math.cos(phi), math.sin(phi)
    # thrust axis seen from a frame yawed by phi: (s_th c_ps, -s_ps, c_th c_ps)
    tau = np.array([cf * f[0] + sf * f[1], -sf * f[0] + cf * f[1], f[2]]) / d
    if tau[2] <= 0.0 or abs(tau[1]) >= 1.0:
        raise OutputInversionError(f"attitude outside (-pi/2, pi/2): thrust axis {tau.tolist()}")
    theta = math.atan2(tau[0], tau[2])
    psi = -math.asin(tau[1])
    return d - g, theta, psi
