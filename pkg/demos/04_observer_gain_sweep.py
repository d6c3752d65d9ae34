"""How the observer gain k trades off against tracking accuracy.

Only position and yaw are measured; the observer rebuilds the rest.  The
sweep reruns ``helix_output`` for several k and prints the steady-state
errors.  Takes about ten seconds per value.
"""
import dataclasses

from quadpath.config import parse_config, resolve_path
from quadpath.simulator import run_scenario

base = parse_config(resolve_path("helix_output"))
print(f"{'k':>6} {'speed err':>11} {'distance':>11} {'objectives':>11}")
for k in (5.0, 10.0, 20.0, 40.0):
    cfg = dataclasses.replace(base, observer=dataclasses.replace(base.observer, k=k))
    _, m = run_scenario(cfg)
    print(f"{k:6.0f} {m.speed_error:11.2e} {m.distance:11.2e} {str(m.objectives_met):>11}")
