"""Fixed-step closed-loop simulation of the path-following controllers."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .controller import (ControllerGains, ObserverGains, ObserverState, ReferenceSpec,
                         error_state, extension_derivative, full_state_law, gains_from_poles,
                         observer_derivative, output_feedback_law)
from .dynamics import MassGeometryParams, QuadState, allocate_forces, plant_derivative
from .normal_form import (DEFAULT_LEVEL_FRACTION, DecouplingData, OutputMap, b_at_origin,
                          b_at_origin_inverse)
from .trajectory import (CurveDescriptor, PathTracker, frame_at, make_circle, make_helix,
                         make_line, make_polynomial, wrap_to_pi)

logger = logging.getLogger(__name__)

MODES = ("state", "output")


class IntegrationError(FloatingPointError):
    def __init__(self, message: str, index: Optional[int] = None):
        self.index = index
        super().__init__(message)


class SimulationAborted(RuntimeError):
    """Raised when a run cannot continue; ``log`` holds the rows recorded so far."""

    def __init__(self, message: str, log: "SimLog"):
        self.log = log
        super().__init__(message)


def rk4_step(f: Callable, x, t: float, dt: float) -> np.ndarray:
    """One classical Runge-Kutta step of ``x' = f(t, x)``."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    x = np.asarray(x, dtype=float)
    k1 = _checked(f(t, x))
    k2 = _checked(f(t + 0.5 * dt, x + 0.5 * dt * k1))
    k3 = _checked(f(t + 0.5 * dt, x + 0.5 * dt * k2))
    k4 = _checked(f(t + dt, x + dt * k3))
    return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _checked(dx) -> np.ndarray:
    dx = np.asarray(dx, dtype=float)
    bad = np.flatnonzero(~np.isfinite(dx))
    if bad.size:
        raise IntegrationError(f"non-finite derivative in component {int(bad[0])}", int(bad[0]))
    return dx


@dataclass(frozen=True)
class CurveSpec:
    kind: str
    params: dict = field(default_factory=dict)

    def build(self) -> CurveDescriptor:
        p = dict(self.params)
        if self.kind == "line":
            return make_line(p.get("origin", (0.0, 0.0, 0.0)), p.get("direction", (1.0, 0.0, 0.0)))
        if self.kind == "circle":
            return make_circle(p["radius"], p.get("center", (0.0, 0.0, 0.0)), p.get("phase", 0.0))
        if self.kind == "helix":
            return make_helix(p["radius"], p["pitch"], p.get("center", (0.0, 0.0, 0.0)),
                              p.get("turns", 10.0), p.get("phase", 0.0))
        if self.kind == "polynomial":
            return make_polynomial(p["coefficients"])
        raise ValueError(f"unknown curve type {self.kind!r}")


@dataclass(frozen=True)
class InitialCondition:
    """Start relative to the curve: path coordinate, offsets, heading error.

    ``speed`` is along the tangent and defaults to the reference speed.
    """

    s: float = 0.0
    e1: float = 0.0
    e2: float = 0.0
    delta_phi: float = 0.0
    speed: Optional[float] = None
    theta: float = 0.0
    psi: float = 0.0

    def resolve(self, curve: CurveDescriptor, v_star: float,
                alpha_override: Optional[float] = None) -> QuadState:
        frame = frame_at(curve, self.s, alpha_override=alpha_override)
        R = frame.rotation
        P = frame.point + self.e1 * R[1] + self.e2 * R[2]
        speed = v_star if self.speed is None else self.speed
        return QuadState(P, speed * frame.tangent,
                         [frame.alpha + self.delta_phi, self.theta, self.psi], np.zeros(3))


@dataclass(frozen=True)
class ScenarioConfig:
    curve: CurveSpec
    reference: ReferenceSpec
    initial: InitialCondition = InitialCondition()
    params: MassGeometryParams = MassGeometryParams()
    gains: ControllerGains = field(default_factory=lambda: gains_from_poles([-2.0] * 4))
    observer: ObserverGains = ObserverGains()
    controller_mode: str = "state"
    dt: float = 1e-3
    t_end: float = 20.0
    v_tilde_max: float = 0.025
    theta_tilde_max: float = 0.02
    e_max: float = 1e-3
    tail_fraction: float = 0.2
    level_fraction: float = DEFAULT_LEVEL_FRACTION
    name: str = "scenario"

    def __post_init__(self):
        if self.controller_mode not in MODES:
            raise ValueError(f"controller_mode must be one of {MODES}")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if not self.t_end > self.dt:
            raise ValueError("t_end must exceed dt")
        for name in ("v_tilde_max", "theta_tilde_max", "e_max"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not 0.0 < self.tail_fraction <= 1.0:
            raise ValueError("tail_fraction must lie in (0, 1]")
        if not 0.0 < self.level_fraction < 1.0:
            raise ValueError("level_fraction must lie in (0, 1)")

    @property
    def n_steps(self) -> int:
        return int(round(self.t_end / self.dt))


@dataclass
class SimLog:
    """Uniformly sampled time series of one run (row ``i`` at ``t[i]``)."""

    t: np.ndarray
    plant: np.ndarray
    extension: np.ndarray
    deviation: np.ndarray
    xi: np.ndarray
    xi_tilde: np.ndarray
    dist: np.ndarray
    controls: np.ndarray
    forces: np.ndarray
    U_bar: np.ndarray
    observer: Optional[np.ndarray] = None
    mode: str = "state"

    @property
    def s_dot(self) -> np.ndarray:
        return self.xi[:, 1, 0]

    def __len__(self) -> int:
        return len(self.t)


class _Recorder:
    _fields = ("t", "plant", "extension", "deviation", "xi", "xi_tilde", "dist",
               "controls", "forces", "U_bar", "observer")

    def __init__(self, mode: str):
        self.mode = mode
        self.rows = {k: [] for k in self._fields}

    def add(self, rec: dict) -> None:
        for k in self._fields:
            self.rows[k].append(rec.get(k))

    def log(self) -> SimLog:
        arrays = {}
        for k in self._fields:
            vals = self.rows[k]
            if k == "observer" and self.mode != "output":
                arrays[k] = None
            elif not vals:
                shape = {"t": (0,), "dist": (0,), "xi": (0, 4, 4), "xi_tilde": (0, 4, 4),
                         "plant": (0, 12), "deviation": (0, 6), "observer": (0, 20)}.get(k, (0, 4))
                arrays[k] = np.zeros(shape)
            else:
                arrays[k] = np.array(vals, dtype=float)
        return SimLog(mode=self.mode, **arrays)


class ClosedLoop:
    """Plant, thrust/yaw integrators, optional observer and control law as one ODE.

    State layout: plant (12), integrators (4), observer (20, output mode only).
    """

    def __init__(self, cfg: ScenarioConfig):
        self.cfg = cfg
        self.curve = cfg.curve.build()
        self.p = cfg.params
        self.ref = cfg.reference
        self.tracker = PathTracker(self.curve, cfg.initial.s, cfg.reference.alpha_override)
        self.outputs = OutputMap(self.curve, cfg.params.g, cfg.level_fraction, self.tracker)
        self.mode = cfg.controller_mode

    def initial_state(self) -> np.ndarray:
        cfg = self.cfg
        x0 = cfg.initial.resolve(self.curve, cfg.reference.v_star, cfg.reference.alpha_override)
        X = np.concatenate([x0.to_vector(), np.zeros(4)])
        if self.mode == "output":
            _, _, frame = self.outputs.locate(x0.P)
            xi1 = self._measured_xi1(x0.P, x0.Theta[0], frame)
            obs = ObserverState()
            obs.xi_hat[0] = error_state(xi1, 0.0, self.ref)
            X = np.concatenate([X, obs.to_vector()])
        return X

    def _measured_xi1(self, P, phi, frame) -> np.ndarray:
        _, e1, e2 = frame.rotation @ (np.asarray(P) - frame.point)
        return np.array([frame.s, e1, e2, wrap_to_pi(phi - frame.alpha)])

    def evaluate(self, t: float, X, record: bool = False):
        xp = X[:12]
        ext = X[12:16]
        located = self.outputs.locate(xp[:3])
        proj, _, frame = located
        rec = None
        if self.mode == "state":
            xi_m, q, b, b_inv, _ = self.outputs.decoupling_arrays(xp, ext, located)
            dec = DecouplingData(q, b, b_inv)
            xi_tilde = error_state(xi_m[0], t, self.ref, xi_m)
            U_bar = full_state_law(xi_tilde, dec, self.cfg.gains)
            d_obs = None
        else:
            xi1 = self._measured_xi1(xp[:3], xp[6], frame)
            xi_tilde1 = error_state(xi1, t, self.ref)
            obs = ObserverState.from_vector(X[16:36])
            b0 = b_at_origin(xp[6], frame, self.p.g)
            b0_inv = b_at_origin_inverse(xp[6], frame, self.p.g)
            U_bar = output_feedback_law(obs, xi_tilde1, b0, self.cfg.gains, self.cfg.observer.N, b0_inv)
            d = observer_derivative(obs, xi_tilde1, U_bar, b0, self.cfg.observer)
            d_obs = d.to_vector()
            if record:
                xi_m = self.outputs.xi(xp, ext, located).as_matrix()
                xi_tilde = error_state(xi_m[0], t, self.ref, xi_m)
        d_ext, applied = extension_derivative(ext, U_bar, self.outputs.level)
        dX = np.concatenate([plant_derivative(xp, applied, self.p), d_ext]
                            + ([d_obs] if d_obs is not None else []))
        if record:
            self.tracker.commit(proj.s_star, frame.alpha)
            rec = {
                "t": t,
                "plant": xp.copy(),
                "extension": ext.copy(),
                "deviation": np.array([xi_m[0, 0], xi_m[0, 1], xi_m[0, 2], xi_m[0, 3],
                                       xp[7], xp[8]]),
                "xi": xi_m,
                "xi_tilde": xi_tilde,
                "dist": proj.distance,
                "controls": applied,
                "forces": allocate_forces(applied, self.p),
                "U_bar": U_bar,
                "observer": X[16:36].copy() if self.mode == "output" else None,
            }
        return dX, rec


def run_scenario(cfg: ScenarioConfig) -> tuple[SimLog, "Metrics"]:
    """Integrate the closed loop over ``[0, t_end]`` and score the tail window.

    The control law is re-evaluated inside every Runge-Kutta stage.  Raises
    :class:`SimulationAborted` (carrying the partial log) when the projection,
    the frame or the state break down.
    """
    loop = ClosedLoop(cfg)
    recorder = _Recorder(cfg.controller_mode)
    dt = cfg.dt
    X = loop.initial_state()

    def f(t, x):
        return loop.evaluate(t, x)[0]

    t = 0.0
    try:
        for i in range(cfg.n_steps):
            t = i * dt
            k1, rec = loop.evaluate(t, X, record=True)
            recorder.add(rec)
            k1 = _checked(k1)
            k2 = _checked(f(t + 0.5 * dt, X + 0.5 * dt * k1))
            k3 = _checked(f(t + 0.5 * dt, X + 0.5 * dt * k2))
            k4 = _checked(f(t + dt, X + dt * k3))
            X = X + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            if not np.all(np.isfinite(X)):
                raise IntegrationError("non-finite state")
        t = cfg.n_steps * dt
        recorder.add(loop.evaluate(t, X, record=True)[1])
    except (ValueError, ArithmeticError, np.linalg.LinAlgError) as exc:
        log = recorder.log()
        raise SimulationAborted(f"run {cfg.name!r} aborted at t={t:.6g}: {exc}", log) from exc
    log = recorder.log()
    return log, compute_metrics(log, cfg)


@dataclass(frozen=True)
class Metrics:
    """Tail-window maxima and the three limit objectives."""

    speed_error: float
    distance: float
    attitude_error: tuple[float, float, float]
    velocity_ok: bool
    attitude_ok: bool
    distance_ok: bool
    settling_time: Optional[float]
    max_abs_u1: float

    @property
    def objectives_met(self) -> bool:
        return self.velocity_ok and self.attitude_ok and self.distance_ok

    def as_dict(self) -> dict:
        return {
            "speed_error": self.speed_error,
            "distance": self.distance,
            "yaw_error": self.attitude_error[0],
            "pitch_error": self.attitude_error[1],
            "roll_error": self.attitude_error[2],
            "velocity_ok": self.velocity_ok,
            "attitude_ok": self.attitude_ok,
            "distance_ok": self.distance_ok,
            "objectives_met": self.objectives_met,
            "settling_time": self.settling_time,
            "max_abs_u1": self.max_abs_u1,
        }


def compute_metrics(log: SimLog, cfg: ScenarioConfig) -> Metrics:
    if len(log) == 0:
        raise ValueError("empty log")
    t = log.t
    t_final = t[-1]
    tail = t >= t_final - cfg.tail_fraction * t_final - 1e-12
    speed_err = float(np.max(np.abs(log.s_dot[tail] - cfg.reference.v_star)))
    dist = float(np.max(log.dist[tail]))
    att = tuple(float(np.max(np.abs(log.deviation[tail, 3 + k]))) for k in range(3))
    outside = np.flatnonzero(log.dist > cfg.e_max)
    if outside.size == 0:
        settling = float(t[0])
    elif outside[-1] == len(t) - 1:
        settling = None
    else:
        settling = float(t[outside[-1] + 1])
    return Metrics(
        speed_error=speed_err,
        distance=dist,
        attitude_error=att,
        velocity_ok=speed_err <= cfg.v_tilde_max,
        attitude_ok=max(att) <= cfg.theta_tilde_max,
        distance_ok=dist <= cfg.e_max,
        settling_time=settling,
        max_abs_u1=float(np.max(np.abs(log.controls[:, 0]))),
    )
