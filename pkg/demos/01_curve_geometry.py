"""Where is the drone relative to the path?

Builds a helix, drops a few points near it and prints the path coordinate,
the two cross-track errors and the heading error for each.
"""
import math

import numpy as np

from quadpath.trajectory import deviations, frame_at, make_helix, project_closest

helix = make_helix(radius=1.0, pitch=2 * math.pi)

# The frame at s = 2: tangent heading alpha, climb angle beta, planar curvature epsilon.
f = frame_at(helix, 2.0)
print(f"frame at s=2: alpha={f.alpha:.4f} rad, beta={f.beta:.4f} rad (pi/4={math.pi / 4:.4f}), "
      f"epsilon={f.epsilon:.4f} 1/m")

# Offset the curve point along the two normal directions and project back.
for a, b in [(0.0, 0.0), (0.2, 0.0), (0.0, -0.1), (0.15, 0.15)]:
    P = f.point + a * f.rotation[1] + b * f.rotation[2]
    proj = project_closest(helix, P, s_hint=2.0)
    dev = deviations(helix, P, phi=f.alpha + 0.1, theta=0.0, psi=0.0, s_hint=2.0)
    print(f"offset ({a:+.2f}, {b:+.2f}) -> s={proj.s_star:.6f}, e1={dev.e1:+.6f}, "
          f"e2={dev.e2:+.6f}, dphi={dev.delta_phi:+.3f}, distance={proj.distance:.6f}")

# Without a hint the projection searches the whole curve first.
P = np.array([1.3, 0.4, 3.0])
print("unhinted projection of", P.tolist(), "->", project_closest(helix, P))
