"""Scenario files: a flat ``key = value`` format with dotted section names.

Grammar (one entry per line)::

    # comment
    name = helix_state
    curve.type = helix
    curve.radius = 1.0
    controller.poles = -2, -2, -2, -2

Values are numbers, comma-separated number lists (complex poles written as
``-1+1j``) or bare words.  Keys not listed in ``KEYS`` are rejected.
"""
from __future__ import annotations

import math
from pathlib import Path
from typing import Optional

from .controller import (ControllerGains, ObserverGains, ReferenceSpec, gains_from_poles,
                         observer_coeffs_from_poles)
from .dynamics import MassGeometryParams
from .simulator import CurveSpec, InitialCondition, ScenarioConfig

BUNDLED_DIR = Path(__file__).with_name("scenarios")


class ConfigError(ValueError):
    def __init__(self, message: str, line: Optional[int] = None, path=None):
        self.line = line
        self.path = path
        where = f"{path if path is not None else '<config>'}"
        if line is not None:
            where += f":{line}"
        super().__init__(f"{where}: {message}")


# key -> kind; "float", "floats", "complexes", "word"
KEYS = {
    "name": "word",
    "mode": "word",
    "dt": "float",
    "t_end": "float",
    "tail_fraction": "float",
    "curve.type": "word",
    "curve.radius": "float",
    "curve.pitch": "float",
    "curve.center": "floats",
    "curve.turns": "float",
    "curve.phase": "float",
    "curve.origin": "floats",
    "curve.direction": "floats",
    "reference.v_star": "float",
    "reference.s0": "float",
    "reference.phi_star_mode": "word",
    "reference.phi_star_value": "float",
    "initial.s": "float",
    "initial.e1": "float",
    "initial.e2": "float",
    "initial.delta_phi": "float",
    "initial.speed": "float",
    "initial.theta": "float",
    "initial.psi": "float",
    "params.m": "float",
    "params.C": "float",
    "params.rho": "float",
    "params.ell": "float",
    "params.J0": "float",
    "params.Jpsi": "float",
    "params.g": "float",
    "controller.poles": "complexes",
    "controller.gamma": "floats",
    "controller.l": "float",
    "observer.poles": "complexes",
    "observer.a": "floats",
    "observer.k": "float",
    "observer.N": "float",
    "tolerances.v_tilde_max": "float",
    "tolerances.theta_tilde_max": "float",
    "tolerances.e_max": "float",
}

CURVE_KEYS = {
    "line": ("origin", "direction"),
    "circle": ("radius", "center", "phase"),
    "helix": ("radius", "pitch", "center", "turns", "phase"),
}


def _convert(key: str, text: str, line: Optional[int], path):
    kind = KEYS[key]
    try:
        if kind == "word":
            if not text or any(ch.isspace() for ch in text):
                raise ValueError("expected a single word")
            return text
        if kind == "float":
            value = float(text)
            if not math.isfinite(value):
                raise ValueError("not finite")
            return value
        parts = [p.strip() for p in text.split(",") if p.strip()]
        if not parts:
            raise ValueError("empty list")
        if kind == "floats":
            return tuple(float(p) for p in parts)
        values = tuple(complex(p.replace(" ", "")) for p in parts)
        return tuple(v.real if v.imag == 0 else v for v in values)
    except ValueError as exc:
        raise ConfigError(f"{key}: invalid value {text!r} ({exc})", line, path) from None


def parse_text(text: str, path=None) -> dict:
    """Parse scenario text into ``{key: (value, line)}``."""
    entries = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", lineno, path)
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in KEYS:
            raise ConfigError(f"unknown key {key!r}", lineno, path)
        if key in entries:
            raise ConfigError(f"duplicate key {key!r}", lineno, path)
        entries[key] = (_convert(key, value, lineno, path), lineno)
    return entries


def read_entries(path) -> dict:
    path = Path(path)
    try:
        text = path.read_text()
    except FileNotFoundError:
        raise ConfigError("file not found", None, path) from None
    except OSError as exc:
        raise ConfigError(f"cannot read file ({exc})", None, path) from None
    return parse_text(text, path)


def set_entry(entries: dict, key: str, text: str) -> dict:
    """Copy of ``entries`` with ``key`` overridden from its text form."""
    if key not in KEYS:
        raise ConfigError(f"unknown key {key!r}")
    out = dict(entries)
    out[key] = (_convert(key, text, None, None), None)
    return out


def build_config(entries: dict, path=None) -> ScenarioConfig:
    """Validate entries and assemble a :class:`ScenarioConfig` with defaults."""

    def get(key, default=None):
        return entries[key][0] if key in entries else default

    def line_of(key):
        return entries[key][1] if key in entries else None

    def fail(key, message):
        raise ConfigError(f"{key}: {message}", line_of(key), path)

    kind = get("curve.type")
    if kind is None:
        raise ConfigError("curve.type is required", None, path)
    if kind not in CURVE_KEYS:
        fail("curve.type", f"unknown curve type {kind!r}")
    for key in entries:
        if key.startswith("curve.") and key != "curve.type" and key.split(".", 1)[1] not in CURVE_KEYS[kind]:
            fail(key, f"not a parameter of a {kind} curve")
    curve_params = {}
    for name in CURVE_KEYS[kind]:
        value = get(f"curve.{name}")
        if value is None:
            continue
        if name in ("center", "origin", "direction") and len(value) != 3:
            fail(f"curve.{name}", "expected three components")
        curve_params[name] = value
    for name in ("radius", "pitch") if kind == "helix" else ("radius",) if kind == "circle" else ():
        if name not in curve_params:
            raise ConfigError(f"curve.{name} is required for a {kind} curve", None, path)
    curve = CurveSpec(kind, curve_params)
    try:
        curve.build()
    except ValueError as exc:
        culprit = next((f"curve.{n}" for n in CURVE_KEYS[kind] if n in str(exc) and f"curve.{n}" in entries),
                       "curve.type")
        fail(culprit, str(exc))

    v_star = get("reference.v_star")
    if v_star is None:
        raise ConfigError("reference.v_star is required", None, path)

    def checked(key, factory):
        try:
            return factory()
        except ValueError as exc:
            fail(key, str(exc))

    initial = InitialCondition(
        s=get("initial.s", 0.0), e1=get("initial.e1", 0.0), e2=get("initial.e2", 0.0),
        delta_phi=get("initial.delta_phi", 0.0), speed=get("initial.speed"),
        theta=get("initial.theta", 0.0), psi=get("initial.psi", 0.0))
    reference = checked("reference.v_star", lambda: ReferenceSpec(
        v_star, get("reference.s0", initial.s), get("reference.phi_star_mode", "tangent"),
        get("reference.phi_star_value", 0.0)))

    param_kwargs = {k.split(".", 1)[1]: v for k, (v, _) in entries.items() if k.startswith("params.")}
    params = checked(next((k for k in entries if k.startswith("params.")), "params"),
                     lambda: MassGeometryParams(**param_kwargs))

    if "controller.poles" in entries and "controller.gamma" in entries:
        fail("controller.gamma", "give either controller.poles or controller.gamma")
    if "controller.gamma" in entries:
        gamma = get("controller.gamma")
        if len(gamma) != 4:
            fail("controller.gamma", "expected four coefficients")
        gains = checked("controller.gamma", lambda: ControllerGains(*gamma))
    else:
        gains = checked("controller.poles",
                        lambda: gains_from_poles(get("controller.poles", (-2.0,) * 4)))

    if "observer.poles" in entries and "observer.a" in entries:
        fail("observer.a", "give either observer.poles or observer.a")
    if "observer.a" in entries:
        a = get("observer.a")
        if len(a) != 5:
            fail("observer.a", "expected five coefficients")
    else:
        a = checked("observer.poles",
                    lambda: observer_coeffs_from_poles(get("observer.poles", (-1.0,) * 5)))
    observer = checked("observer.k", lambda: ObserverGains(
        tuple(a), get("observer.k", 20.0), get("observer.N", 10.0 * params.g)))

    mode = get("mode", "state")
    fields = dict(
        curve=curve, reference=reference, initial=initial, params=params, gains=gains,
        observer=observer, controller_mode=mode, dt=get("dt", 1e-3), t_end=get("t_end", 20.0),
        v_tilde_max=get("tolerances.v_tilde_max", 0.05 * v_star),
        theta_tilde_max=get("tolerances.theta_tilde_max", 0.02),
        e_max=get("tolerances.e_max", 1e-3),
        tail_fraction=get("tail_fraction", 0.2),
        level_fraction=get("controller.l", 0.9),
        name=get("name", Path(path).stem if path is not None else "scenario"),
    )
    blame = {"controller_mode": "mode", "dt": "dt", "t_end": "t_end",
             "v_tilde_max": "tolerances.v_tilde_max", "theta_tilde_max": "tolerances.theta_tilde_max",
             "e_max": "tolerances.e_max", "tail_fraction": "tail_fraction", "level_fraction": "controller.l"}
    try:
        return ScenarioConfig(**fields)
    except ValueError as exc:
        msg = str(exc)
        key = next((k for f, k in blame.items() if msg.startswith(f)), "config")
        fail(key, msg)


def parse_config(path) -> ScenarioConfig:
    """Read, validate and default a scenario file."""
    return build_config(read_entries(path), path)


def resolve_path(name_or_path) -> Path:
    """A file path, or the name of a bundled scenario."""
    path = Path(name_or_path)
    if path.exists():
        return path
    bundled = BUNDLED_DIR / f"{name_or_path}.cfg"
    return bundled if bundled.exists() else path


def bundled_scenarios() -> list[Path]:
    return sorted(BUNDLED_DIR.glob("*.cfg"))


def _fmt(value) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, (tuple, list)):
        return ", ".join(_fmt(v) for v in value)
    if isinstance(value, complex):
        return repr(value).strip("()")
    return repr(float(value))


def dump_config(cfg: ScenarioConfig) -> str:
    """Canonical text of ``cfg``; :func:`build_config` of it reproduces ``cfg``."""
    lines = [
        f"name = {cfg.name}",
        f"mode = {cfg.controller_mode}",
        f"dt = {_fmt(cfg.dt)}",
        f"t_end = {_fmt(cfg.t_end)}",
        f"tail_fraction = {_fmt(cfg.tail_fraction)}",
        f"curve.type = {cfg.curve.kind}",
    ]
    for name in CURVE_KEYS[cfg.curve.kind]:
        if name in cfg.curve.params:
            lines.append(f"curve.{name} = {_fmt(cfg.curve.params[name])}")
    ref = cfg.reference
    lines += [
        f"reference.v_star = {_fmt(ref.v_star)}",
        f"reference.s0 = {_fmt(ref.s0)}",
        f"reference.phi_star_mode = {ref.phi_star_mode}",
        f"reference.phi_star_value = {_fmt(ref.phi_star_value)}",
    ]
    ini = cfg.initial
    for name in ("s", "e1", "e2", "delta_phi", "speed", "theta", "psi"):
        value = getattr(ini, name)
        if value is not None:
            lines.append(f"initial.{name} = {_fmt(value)}")
    for name in ("m", "C", "rho", "ell", "J0", "Jpsi", "g"):
        lines.append(f"params.{name} = {_fmt(getattr(cfg.params, name))}")
    lines += [
        f"controller.gamma = {_fmt(tuple(cfg.gains.as_array()))}",
        f"controller.l = {_fmt(cfg.level_fraction)}",
        f"observer.a = {_fmt(cfg.observer.a)}",
        f"observer.k = {_fmt(cfg.observer.k)}",
        f"observer.N = {_fmt(cfg.observer.N)}",
        f"tolerances.v_tilde_max = {_fmt(cfg.v_tilde_max)}",
        f"tolerances.theta_tilde_max = {_fmt(cfg.theta_tilde_max)}",
        f"tolerances.e_max = {_fmt(cfg.e_max)}",
    ]
    return "\n".join(lines) + "\n"
