"""Rigid-body quadcopter plant with Euler-angle attitude and rotor mixing.

Attitude is ordered yaw, pitch, roll: ``Theta = (phi, theta, psi)``.  The
virtual controls are ``U = (u1, u2, u3, u4)`` where ``u1`` is the thrust
acceleration offset from hover (m/s^2) and ``u2..u4`` are the angular
accelerations of yaw, pitch and roll.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

logger = logging.getLogger(__name__)

# rotor forces -> (thrust, yaw, pitch, roll) before scaling by M
MIX = np.array([
    [1.0, 1.0, 1.0, 1.0],
    [1.0, -1.0, 1.0, -1.0],
    [-1.0, -1.0, 1.0, 1.0],
    [-1.0, 1.0, 1.0, -1.0],
])

# (1/4) * ALLOC @ MIX == I
ALLOC = np.array([
    [1.0, 1.0, -1.0, -1.0],
    [1.0, -1.0, -1.0, 1.0],
    [1.0, 1.0, 1.0, 1.0],
    [1.0, -1.0, 1.0, -1.0],
])


@dataclass(frozen=True)
class MassGeometryParams:
    """Mass and geometry constants of the airframe.

    Defaults give ``M = diag(1, 1, 1, 1)`` so that rotor forces and virtual
    controls share units.
    """

    m: float = 1.0
    C: float = 1.0
    rho: float = 1.0
    ell: float = 1.0
    J0: float = 1.0
    Jpsi: float = 1.0
    g: float = 9.81

    def __post_init__(self):
        for name in ("m", "C", "rho", "ell", "J0", "Jpsi", "g"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be strictly positive")

    @property
    def M(self) -> np.ndarray:
        return np.diag([1.0 / self.m, self.C / self.rho, self.ell / self.J0, self.ell / self.Jpsi])


@dataclass
class QuadState:
    """Position, velocity, attitude (yaw, pitch, roll) and attitude rates."""

    P: np.ndarray
    V: np.ndarray
    Theta: np.ndarray
    ThetaDot: np.ndarray

    def __post_init__(self):
        self.P = np.asarray(self.P, dtype=float).reshape(3)
        self.V = np.asarray(self.V, dtype=float).reshape(3)
        self.Theta = np.asarray(self.Theta, dtype=float).reshape(3)
        self.ThetaDot = np.asarray(self.ThetaDot, dtype=float).reshape(3)

    def to_vector(self) -> np.ndarray:
        return np.concatenate([self.P, self.V, self.Theta, self.ThetaDot])

    @classmethod
    def from_vector(cls, x) -> "QuadState":
        x = np.asarray(x, dtype=float)
        return cls(x[0:3], x[3:6], x[6:9], x[9:12])

    @classmethod
    def hover(cls, position=(0.0, 0.0, 0.0), yaw=0.0) -> "QuadState":
        return cls(position, np.zeros(3), [yaw, 0.0, 0.0], np.zeros(3))


def thrust_direction(Theta) -> np.ndarray:
    """Unit thrust axis in the world frame for attitude (yaw, pitch, roll)."""
    phi, theta, psi = (float(a) for a in Theta)
    cf, sf = math.cos(phi), math.sin(phi)
    ct, st = math.cos(theta), math.sin(theta)
    cp, sp = math.cos(psi), math.sin(psi)
    return np.array([
        cf * st * cp + sf * sp,
        sf * st * cp - cf * sp,
        ct * cp,
    ])


def thrust_direction_partials(Theta) -> tuple[np.ndarray, np.ndarray]:
    """Partial derivatives of :func:`thrust_direction` w.r.t. pitch and roll."""
    phi, theta, psi = (float(a) for a in Theta)
    cf, sf = math.cos(phi), math.sin(phi)
    ct, st = math.cos(theta), math.sin(theta)
    cp, sp = math.cos(psi), math.sin(psi)
    d_theta = np.array([cf * ct * cp, sf * ct * cp, -st * cp])
    d_psi = np.array([-cf * st * sp + sf * cp, -sf * st * sp - cf * cp, -ct * sp])
    return d_theta, d_psi


def mix_forces(F, p: MassGeometryParams) -> np.ndarray:
    """Virtual controls produced by rotor forces ``F``."""
    F = np.asarray(F, dtype=float)
    return p.M @ MIX @ F - np.array([p.g, 0.0, 0.0, 0.0])


def allocate_forces(U, p: MassGeometryParams) -> np.ndarray:
    """Rotor forces realising virtual controls ``U``; inverse of :func:`mix_forces`.

    Negative forces are returned as computed and only reported in the log.
    """
    U = np.asarray(U, dtype=float)
    M_inv = np.diag(1.0 / np.diag(p.M))
    F = 0.25 * ALLOC @ M_inv @ (U + np.array([p.g, 0.0, 0.0, 0.0]))
    if np.any(F < 0.0):
        logger.debug("negative rotor force requested: %s", F)
    return F


def plant_derivative(x, U, p: MassGeometryParams) -> np.ndarray:
    """Time derivative of the flat 12-vector plant state under controls ``U``."""
    x = np.asarray(x, dtype=float)
    Theta = x[6:9]
    acc = thrust_direction(Theta) * (U[0] + p.g)
    acc[2] -= p.g
    return np.concatenate([x[3:6], acc, x[9:12], np.asarray(U[1:4], dtype=float)])
