"""The output chain seen from a single plant state.

For a hovering drone sitting on a tilted, curving path, the input matrix of
the fourth output derivatives reduces to a closed form.  Away from that
point the code differentiates the outputs exactly; here we compare both and
check one link of the chain by a finite difference along the flow.
"""
import numpy as np

from quadpath.dynamics import MassGeometryParams, plant_derivative
from quadpath.controller import extension_derivative
from quadpath.normal_form import OutputMap, b_at_origin
from quadpath.trajectory import PathTracker, frame_at, make_polynomial

np.set_printoptions(precision=4, suppress=True)
g = 9.81
# unit first coefficient: the closed form below assumes arc-length parameterisation at s = 0
tangent = np.array([0.8, 0.5, 0.33]) / np.linalg.norm([0.8, 0.5, 0.33])
curve = make_polynomial([(0, 0, 0), tangent, (-0.1, 0.15, 0.0)])
f = frame_at(curve, 0.0)

x = np.zeros(12)
x[6] = 0.4  # yaw
om = OutputMap(curve, g, tracker=PathTracker(curve, 0.0))
xi, dec, _ = om.decoupling(x, np.zeros(4))
print("q at hover:", dec.q)
print("b at hover:\n", dec.b)
print("closed form W(alpha, beta, eps) B0(phi):\n", b_at_origin(0.4, f, g))

# Move the drone off the path and let it coast under a fixed input for a few ms.
x[:3] = f.point + 0.1 * f.rotation[1]
x[3:6] = (0.3, 0.1, -0.2)
ext = np.array([0.5, 0.1, 0.05, 0.0])
U = np.array([0.2, -0.1, 0.3, 0.1])
p = MassGeometryParams()


def step(state, dt):
    def rhs(z):
        d_ext, applied = extension_derivative(z[12:], U, 0.9 * g)
        return np.concatenate([plant_derivative(z[:12], applied, p), d_ext])
    k1 = rhs(state); k2 = rhs(state + dt / 2 * k1); k3 = rhs(state + dt / 2 * k2); k4 = rhs(state + dt * k3)
    return state + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)


h = 1e-4
z0 = np.concatenate([x, ext])
xi_plus = OutputMap(curve, g, tracker=PathTracker(curve, 0.0)).xi(*np.split(step(z0, h), [12]))
xi_minus = OutputMap(curve, g, tracker=PathTracker(curve, 0.0)).xi(*np.split(step(z0, -h), [12]))
xi0, dec, _ = OutputMap(curve, g, tracker=PathTracker(curve, 0.0)).decoupling(x, ext)
print("d/dt xi4 by finite difference:", (xi_plus.xi4 - xi_minus.xi4) / (2 * h))
print("q + b U                      :", dec.q + dec.b @ U)
