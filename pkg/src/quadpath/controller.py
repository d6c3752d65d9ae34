"""Pole-placement gains and the two control laws: exact linearization with
the full state, and observer-based output feedback.

Both control laws produce ``U_bar = (v1, v2, u3, u4)``: ``v1`` and ``v2`` drive
the double integrators in front of thrust and yaw acceleration, ``u3`` and
``u4`` are the pitch and roll accelerations.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


def _check_pole_set(poles, n: int) -> np.ndarray:
    poles = np.asarray(poles, dtype=complex).reshape(-1)
    if poles.size != n:
        raise ValueError(f"expected {n} poles, got {poles.size}")
    if np.any(poles.real >= 0):
        raise ValueError(f"poles must lie in the open left half-plane: {poles}")
    if not np.allclose(np.sort_complex(poles), np.sort_complex(poles.conj()), atol=1e-12):
        raise ValueError("complex poles must come in conjugate pairs")
    return poles


def is_hurwitz(coeffs) -> bool:
    """True when the monic polynomial ``p^n + c1 p^(n-1) + ... + cn`` is Hurwitz."""
    return bool(np.all(np.roots(np.concatenate([[1.0], coeffs])).real < 0))


def gains_from_poles(poles) -> "ControllerGains":
    """Feedback gains whose characteristic quartic has the given roots."""
    c = np.real(np.poly(_check_pole_set(poles, 4)))
    return ControllerGains(*c[:0:-1])


def observer_coeffs_from_poles(poles) -> tuple[float, ...]:
    """Coefficients ``(a1..a5)`` of the monic quintic with the given roots."""
    c = np.real(np.poly(_check_pole_set(poles, 5)))
    return tuple(float(v) for v in c[1:])


@dataclass(frozen=True)
class ControllerGains:
    """Coefficients of ``p^4 + gamma4 p^3 + gamma3 p^2 + gamma2 p + gamma1``."""

    gamma1: float
    gamma2: float
    gamma3: float
    gamma4: float

    def __post_init__(self):
        g = self.as_array()
        if np.any(g <= 0) or not is_hurwitz(g[::-1]):
            raise ValueError(f"controller gains {g.tolist()} are not Hurwitz")

    def as_array(self) -> np.ndarray:
        return np.array([self.gamma1, self.gamma2, self.gamma3, self.gamma4], dtype=float)


@dataclass(frozen=True)
class ObserverGains:
    """Hurwitz quintic ``a``, high-gain scale ``k`` and control saturation ``N``."""

    a: tuple[float, ...] = (5.0, 10.0, 10.0, 5.0, 1.0)
    k: float = 20.0
    N: float = 98.1

    def __post_init__(self):
        if len(self.a) != 5 or not is_hurwitz(self.a):
            raise ValueError(f"observer coefficients {self.a} are not Hurwitz")
        if not self.k > 0:
            raise ValueError("observer gain k must be positive")
        if not self.N > 0:
            raise ValueError("saturation level N must be positive")

    @property
    def injection(self) -> np.ndarray:
        return np.array([self.k ** (i + 1) * a for i, a in enumerate(self.a)])


@dataclass
class ObserverState:
    xi_hat: np.ndarray = field(default_factory=lambda: np.zeros((4, 4)))
    sigma_hat: np.ndarray = field(default_factory=lambda: np.zeros(4))

    def to_vector(self) -> np.ndarray:
        return np.concatenate([self.xi_hat.reshape(-1), self.sigma_hat])

    @classmethod
    def from_vector(cls, v) -> "ObserverState":
        v = np.asarray(v, dtype=float)
        return cls(v[:16].reshape(4, 4).copy(), v[16:20].copy())


@dataclass(frozen=True)
class ReferenceSpec:
    """Prescribed speed along the path and the heading mode.

    ``phi_star_mode`` is ``"tangent"`` (heading follows the tangent) or
    ``"constant"`` with ``phi_star_value`` used on vertical stretches.
    """

    v_star: float
    s0: float = 0.0
    phi_star_mode: str = "tangent"
    phi_star_value: float = 0.0

    def __post_init__(self):
        if not self.v_star > 0:
            raise ValueError("v_star must be positive")
        if self.phi_star_mode not in ("tangent", "constant"):
            raise ValueError(f"unknown phi_star_mode {self.phi_star_mode!r}")

    @property
    def alpha_override(self):
        return self.phi_star_value if self.phi_star_mode == "constant" else None


def smooth_sat(x, L: float):
    """Componentwise ``L * tanh(x / L)``."""
    return L * np.tanh(np.asarray(x, dtype=float) / L)


def error_state(xi1, t: float, ref: ReferenceSpec, xi=None):
    """Tracking errors against the ramp ``s*(t) = s0 + v_star t``.

    With only ``xi1`` returns the 4-vector of output errors; with the full
    ``xi`` (4x4, rows xi1..xi4) returns the 4x4 error state.
    """
    xi1 = np.asarray(xi1, dtype=float)
    e1 = xi1.copy()
    e1[0] -= ref.s0 + ref.v_star * t
    if xi is None:
        return e1
    err = np.array(xi, dtype=float).reshape(4, 4).copy()
    err[0] = e1
    err[1, 0] -= ref.v_star
    return err


def full_state_law(xi_tilde, dec, gains: ControllerGains) -> np.ndarray:
    """``b^-1 (-q - sum gamma_i xi_tilde_i)``; imposes the chosen poles on every channel."""
    xi_tilde = np.asarray(xi_tilde, dtype=float).reshape(4, 4)
    rhs = -dec.q - gains.as_array() @ xi_tilde
    if getattr(dec, "b_inv", None) is not None:
        return dec.b_inv @ rhs
    return np.linalg.solve(dec.b, rhs)


def observer_derivative(obs: ObserverState, xi_tilde1, U_bar, b0, og: ObserverGains) -> ObserverState:
    innovation = np.asarray(xi_tilde1, dtype=float) - obs.xi_hat[0]
    l = og.injection
    d_xi = np.empty((4, 4))
    d_xi[0] = obs.xi_hat[1] + l[0] * innovation
    d_xi[1] = obs.xi_hat[2] + l[1] * innovation
    d_xi[2] = obs.xi_hat[3] + l[2] * innovation
    d_xi[3] = obs.sigma_hat + b0 @ U_bar + l[3] * innovation
    return ObserverState(d_xi, l[4] * innovation)


def output_feedback_law(obs: ObserverState, xi_tilde1, b0, gains: ControllerGains, N: float,
                        b0_inv=None) -> np.ndarray:
    """Saturated certainty-equivalence law; the measured error replaces the first estimate."""
    g = gains.as_array()
    v = (-obs.sigma_hat - g[0] * np.asarray(xi_tilde1, dtype=float)
         - g[1] * obs.xi_hat[1] - g[2] * obs.xi_hat[2] - g[3] * obs.xi_hat[3])
    w = b0_inv @ v if b0_inv is not None else np.linalg.solve(b0, v)
    return smooth_sat(w, N)


def extension_derivative(ext, U_bar, level: float):
    """Integrator chains in front of thrust and yaw.

    Returns the derivative of ``(u1_bar, rho1, u2, rho2)`` and the applied
    virtual controls ``(sat(u1_bar), u2, u3, u4)``.
    """
    ext = np.asarray(ext, dtype=float)
    d_ext = np.array([ext[1], U_bar[0], ext[3], U_bar[1]])
    applied = np.array([float(smooth_sat(ext[0], level)), ext[2], U_bar[2], U_bar[3]])
    return d_ext, applied
