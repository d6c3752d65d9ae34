"""Parametric reference curves, closest-point projection and path deviations.

A curve is described by a function returning its derivatives with respect to
the path coordinate ``s``.  The deviation frame at ``s`` is spanned by the unit
tangent ``T`` and two normals: ``N1`` lies in the horizontal plane, ``N2``
completes the right-handed triad.  In terms of the heading ``alpha`` and the
elevation ``beta`` of the tangent,

    T  = ( ca*cb,  sa*cb, sb)
    N1 = (   -sa,     ca,  0)
    N2 = (-ca*sb, -sa*sb, cb)
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import _curves

HORIZONTAL_TOL = 1e-9
GRID_SAMPLES = 512
NEWTON_MAX_ITER = 50
GRAD_TOL = 1e-10
STEP_TOL = 1e-12
FOCAL_TOL = 1e-6


class ProjectionAmbiguityError(ValueError):
    """Several points of the curve are equally close to the query point."""

    def __init__(self, point, candidates, reason: str = "ambiguous"):
        self.point = np.asarray(point)
        self.candidates = list(candidates)
        super().__init__(
            f"closest point to {self.point.tolist()} is {reason}; "
            f"candidate path coordinates {[round(c, 6) for c in self.candidates[:8]]}"
        )


class FrameDegeneracyError(ValueError):
    """The curve tangent is vertical and no heading has been supplied."""


def wrap_to_pi(angle):
    """Wrap an angle to (-pi, pi]."""
    if isinstance(angle, float):
        w = math.fmod(angle + math.pi, 2.0 * math.pi)
        w = w + math.pi if w <= 0.0 else w - math.pi
        return w
    wrapped = np.mod(np.asarray(angle) + np.pi, 2.0 * np.pi) - np.pi
    wrapped = np.where(wrapped == -np.pi, np.pi, wrapped)
    return float(wrapped) if np.ndim(wrapped) == 0 else wrapped


@dataclass(frozen=True)
class CurveDescriptor:
    """Smooth regular curve ``s -> eta(s)``.

    ``derivatives_fn(s, n)`` returns an ``(n + 1, 3)`` array whose row ``j`` is
    the ``j``-th derivative at ``s``.  The normal-form machinery asks for
    ``n = 5``.  ``s_range`` bounds the grid search used when no hint is
    available; periodic curves wrap ``s`` into it.
    """

    derivatives_fn: Callable[[float, int], np.ndarray]
    s_range: tuple[float, float]
    periodic: bool = False
    name: str = "curve"
    params: dict = field(default_factory=dict, compare=False)
    kernel: Optional[tuple] = field(default=None, compare=False, repr=False)

    def derivatives(self, s: float, n: int = 3) -> np.ndarray:
        return self.derivatives_fn(float(s), n)

    def point(self, s: float) -> np.ndarray:
        return self.derivatives_fn(float(s), 0)[0]

    def sample(self, n: int = 512) -> tuple[np.ndarray, np.ndarray]:
        s = np.linspace(self.s_range[0], self.s_range[1], n, endpoint=not self.periodic)
        return s, np.array([self.point(si) for si in s])

    @property
    def length(self) -> float:
        return self.s_range[1] - self.s_range[0]

    def normalize(self, s: float) -> float:
        if self.periodic:
            s0, s1 = self.s_range
            return s0 + (s - s0) % (s1 - s0)
        return s


def _compiled(kind: int, prm, coeffs=None):
    prm = np.ascontiguousarray(prm, dtype=float)
    coeffs = np.zeros((1, 3)) if coeffs is None else np.ascontiguousarray(coeffs, dtype=float)

    def derivs(s, n):
        return _curves.curve_derivs(kind, prm, coeffs, float(s), int(n))

    return derivs, (kind, prm, coeffs)


def make_line(origin, direction, s_range=(-1e3, 1e3)) -> CurveDescriptor:
    """Straight line ``origin + s * direction``; ``direction`` is normalised."""
    origin = np.asarray(origin, dtype=float)
    direction = np.asarray(direction, dtype=float)
    norm = np.linalg.norm(direction)
    if not norm > 0:
        raise ValueError("line direction must be nonzero")
    direction = direction / norm
    derivs, kernel = _compiled(_curves.LINE, np.concatenate([origin, direction]))
    return CurveDescriptor(derivs, tuple(s_range), False, "line",
                           {"origin": origin.tolist(), "direction": direction.tolist()}, kernel)


def make_helix(radius: float, pitch: float, center=(0.0, 0.0, 0.0), turns: float = 10.0,
               phase: float = 0.0) -> CurveDescriptor:
    """Arc-length parameterised helix about the Z axis.

    ``pitch`` is the rise per turn; a zero pitch gives a horizontal circle.
    The curve starts at angle ``phase`` and rises counter-clockwise.
    """
    if not radius > 0:
        raise ValueError("radius must be positive")
    center = np.asarray(center, dtype=float)
    rise = pitch / (2.0 * np.pi)
    w = math.hypot(radius, rise)
    derivs, kernel = _compiled(_curves.HELIX, [radius, rise, w, phase, *center])
    periodic = pitch == 0.0
    turn_length = 2.0 * np.pi * w
    s_range = (0.0, turn_length) if periodic else (0.0, turns * turn_length)
    name = "circle" if periodic else "helix"
    return CurveDescriptor(derivs, s_range, periodic, name,
                           {"radius": radius, "pitch": pitch, "center": center.tolist(),
                            "phase": phase, "turns": turns}, kernel)


def make_circle(radius: float, center=(0.0, 0.0, 0.0), phase: float = 0.0) -> CurveDescriptor:
    """Arc-length parameterised horizontal circle, counter-clockwise."""
    return make_helix(radius, 0.0, center=center, phase=phase)


def make_polynomial(coefficients, s_range=(-10.0, 10.0)) -> CurveDescriptor:
    """Polynomial curve ``sum_j c_j s^j`` with ``coefficients`` of shape (m, 3)."""
    coeffs = np.asarray(coefficients, dtype=float)
    if coeffs.ndim != 2 or coeffs.shape[1] != 3:
        raise ValueError("coefficients must have shape (m, 3)")
    derivs, kernel = _compiled(_curves.POLYNOMIAL, np.zeros(1), coeffs)
    return CurveDescriptor(derivs, tuple(s_range), False, "polynomial",
                           {"coefficients": coeffs.tolist()}, kernel)


@dataclass(frozen=True)
class CurveFrame:
    s: float
    point: np.ndarray
    tangent: np.ndarray
    alpha: float
    beta: float
    epsilon: float
    alpha_prime_s: float
    epsilon_prime_s: float
    degenerate: bool = False

    @property
    def rotation(self) -> np.ndarray:
        """Rows ``T, N1, N2``; maps world displacements into the deviation frame."""
        return frame_rotation(self.alpha, self.beta)


def frame_rotation(alpha: float, beta: float) -> np.ndarray:
    ca, sa = math.cos(alpha), math.sin(alpha)
    cb, sb = math.cos(beta), math.sin(beta)
    return np.array([
        [ca * cb, sa * cb, sb],
        [-sa, ca, 0.0],
        [-ca * sb, -sa * sb, cb],
    ])


def _unwrap_near(angle: float, reference: Optional[float]) -> float:
    if reference is None:
        return angle
    return reference + wrap_to_pi(angle - reference)


def frame_from_derivatives(s: float, d: np.ndarray, alpha_ref: Optional[float] = None,
                           alpha_override: Optional[float] = None) -> CurveFrame:
    """Frame quantities from derivative rows ``d[0..3]`` at ``s``."""
    p = d[0]
    x1, y1, z1 = d[1]
    x2, y2, _ = d[2]
    x3, y3, _ = d[3]
    hxy2 = x1 * x1 + y1 * y1
    hxy = math.sqrt(hxy2)
    speed = math.sqrt(hxy2 + z1 * z1)
    tangent = d[1] / speed
    beta = math.atan2(z1, hxy)
    if hxy < HORIZONTAL_TOL * speed:
        heading = alpha_override if alpha_override is not None else alpha_ref
        if heading is None:
            raise FrameDegeneracyError(
                f"vertical tangent at s={s:.6g}; a heading must be supplied")
        return CurveFrame(s, p.copy(), tangent, float(heading), beta, 0.0, 0.0, 0.0, True)
    alpha = _unwrap_near(math.atan2(y1, x1), alpha_ref)
    num = x1 * y2 - y1 * x2
    eps = num / hxy2
    num_p = x1 * y3 - y1 * x3
    hxy2_p = 2.0 * (x1 * x2 + y1 * y2)
    eps_p = num_p / hxy2 - num * hxy2_p / hxy2 ** 2
    return CurveFrame(s, p.copy(), tangent, alpha, beta, eps, eps, eps_p)


def frame_at(curve: CurveDescriptor, s: float, alpha_ref: Optional[float] = None,
             alpha_override: Optional[float] = None) -> CurveFrame:
    """Frame angles and curvature of ``curve`` at path coordinate ``s``.

    ``alpha`` is unwrapped to the branch closest to ``alpha_ref`` when given.
    On a vertical tangent the heading is held at ``alpha_override`` or, failing
    that, ``alpha_ref``; the curvature is reported as zero there.
    """
    lo, hi = curve.s_range
    if not curve.periodic and not (lo <= s <= hi):
        raise ValueError(f"s={s} outside curve range {curve.s_range}")
    return frame_from_derivatives(s, curve.derivatives(s, 3), alpha_ref, alpha_override)


@dataclass(frozen=True)
class ProjectionResult:
    s_star: float
    distance: float
    converged: bool
    iterations: int


def _grid_seed(curve: CurveDescriptor, P: np.ndarray, samples: int) -> float:
    s_grid, pts = curve.sample(samples)
    d2 = np.sum((pts - P) ** 2, axis=1)
    best = d2.min()
    close = np.flatnonzero(d2 <= best * (1.0 + 1e-9) + 1e-15)
    if close.size > 1:
        # contiguous runs of near-minimal samples, periodic runs joined
        breaks = np.flatnonzero(np.diff(close) > 1)
        runs = np.split(close, breaks + 1)
        if curve.periodic and len(runs) > 1 and runs[0][0] == 0 and runs[-1][-1] == samples - 1:
            runs[0] = np.concatenate([runs[-1], runs[0]])
            runs.pop()
        if len(runs) > 1 or close.size > 4:
            raise ProjectionAmbiguityError(P, s_grid[close])
    return float(s_grid[int(np.argmin(d2))])


def _newton_python(curve: CurveDescriptor, P: np.ndarray, s: float, max_iter: int):
    lo, hi = curve.s_range

    def objective(s_):
        r = P - curve.point(s_)
        return 0.5 * float(r @ r)

    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        d = curve.derivatives(s, 2)
        r = P - d[0]
        grad = -float(r @ d[1])
        speed2 = float(d[1] @ d[1])
        hess = speed2 - float(r @ d[2])
        # negative curvature of the distance: fall back to a gradient step
        step = -grad / hess if hess > 0 else -grad / speed2
        if hess <= 0 or abs(step) > 1e-3:
            f0 = 0.5 * float(r @ r)
            lam = 1.0
            while lam > 1e-6 and objective(s + lam * step) > f0 + 1e-14 * max(f0, 1.0):
                lam *= 0.5
            step *= lam
        s += step
        if not curve.periodic:
            s = min(max(s, lo), hi)
        if abs(grad) < GRAD_TOL and abs(step) < STEP_TOL:
            converged = True
            break
    return s, converged, it


def project_closest(curve: CurveDescriptor, P, s_hint: Optional[float] = None,
                    max_iter: int = NEWTON_MAX_ITER, grid_samples: int = GRID_SAMPLES
                    ) -> ProjectionResult:
    """Closest point of ``curve`` to ``P`` by damped Newton on ``(P - eta).eta' = 0``.

    Seeded by ``s_hint`` when given, otherwise by a grid search over
    ``curve.s_range``.  Raises :class:`ProjectionAmbiguityError` when the grid
    finds several equally close points.
    """
    P = np.asarray(P, dtype=float)
    grid_seed = None
    if s_hint is not None:
        s = float(s_hint)
    else:
        s = grid_seed = _grid_seed(curve, P, grid_samples)
    lo, hi = curve.s_range

    if curve.kernel is not None:
        kind, prm, coeffs = curve.kernel
        s, converged, it = _curves.newton_project(kind, prm, coeffs, P, s, lo, hi, not curve.periodic,
                                                  max_iter, GRAD_TOL, STEP_TOL)
    else:
        s, converged, it = _newton_python(curve, P, s, max_iter)
    if grid_seed is not None:
        # without a hint there is no branch to stay continuous with
        s = curve.normalize(s)
    d = curve.derivatives(s, 2)
    r = P - d[0]
    speed2 = float(d[1] @ d[1])
    if float(d[1] @ d[1] - r @ d[2]) <= FOCAL_TOL * speed2:
        # the distance is flat or concave along the curve: a centre of curvature
        raise ProjectionAmbiguityError(P, [s], "not locally unique (query sits on a centre of curvature)")
    return ProjectionResult(s, float(np.sqrt(r @ r)), converged, it)


@dataclass(frozen=True)
class DeviationState:
    s: float
    e1: float
    e2: float
    delta_phi: float
    delta_theta: float
    delta_psi: float
    tangential: float = 0.0

    def as_array(self) -> np.ndarray:
        return np.array([self.s, self.e1, self.e2, self.delta_phi, self.delta_theta, self.delta_psi])


def deviations(curve: CurveDescriptor, P, phi: float, theta: float, psi: float,
               s_hint: Optional[float] = None, alpha_ref: Optional[float] = None,
               alpha_override: Optional[float] = None) -> DeviationState:
    """Path coordinate, cross-track errors and attitude errors of a robot at ``P``.

    The reference attitude is ``(alpha(s), 0, 0)``.
    """
    proj = project_closest(curve, P, s_hint)
    frame = frame_at(curve, proj.s_star, alpha_ref, alpha_override)
    t, e1, e2 = frame.rotation @ (np.asarray(P, dtype=float) - frame.point)
    return DeviationState(proj.s_star, float(e1), float(e2), wrap_to_pi(phi - frame.alpha),
                          float(theta), float(psi), float(t))


class PathTracker:
    """Per-run cache of the last path coordinate and heading.

    Feeding the previous projection back as a Newton seed keeps ``s`` on the
    same branch as the robot moves, and the heading stays unwrapped.
    """

    def __init__(self, curve: CurveDescriptor, s_hint: Optional[float] = None,
                 alpha_override: Optional[float] = None):
        self.curve = curve
        self.s_hint = s_hint
        self.alpha_ref: Optional[float] = None
        self.alpha_override = alpha_override

    def project(self, P) -> ProjectionResult:
        res = project_closest(self.curve, P, self.s_hint)
        if not res.converged:
            res = project_closest(self.curve, P, None)
        return res

    def frame(self, s: float) -> CurveFrame:
        return frame_at(self.curve, s, self.alpha_ref, self.alpha_override)

    def commit(self, s: float, alpha: float) -> None:
        self.s_hint = s
        self.alpha_ref = alpha
