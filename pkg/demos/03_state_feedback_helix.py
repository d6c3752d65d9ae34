"""Full-state feedback on the standard helix.

Runs the bundled ``helix_state`` scenario (start 0.2 m and 0.1 m off the
path, 0.3 rad heading error) and writes CSV plus SVG plots to
``demo_output/helix_state``.
"""
from pathlib import Path

from quadpath.cli import cmd_run
from quadpath.config import parse_config, resolve_path

cfg = parse_config(resolve_path("helix_state"))
report = cmd_run(cfg, Path("demo_output") / cfg.name)
m = report.metrics
print(f"{cfg.name}: {report.status} in {report.duration:.1f} s")
print(f"  tail speed error  {m.speed_error:.2e} m/s")
print(f"  tail distance     {m.distance:.2e} m")
print(f"  tail attitude     {max(m.attitude_error):.4f} rad (steady bank angle of the turn)")
print(f"  settled below {cfg.e_max} m at t = {m.settling_time} s")
print("artifacts:", ", ".join(p.name for p in report.artifacts))
