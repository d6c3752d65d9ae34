import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from helpers import G, LEVEL, curve_with_frame, open_loop_flow
from quadpath.normal_form import (DecouplingSingularError, OutputInversionError, OutputMap,
                                  b0_block, b_at_origin, b_at_origin_inverse, decoupling,
                                  invert_outputs, w_inverse, w_matrix, xi_from_plant)
from quadpath.dynamics import QuadState
from quadpath.trajectory import (FrameDegeneracyError, PathTracker, frame_at, make_helix,
                                 make_line)

finite = st.floats(-4.0, 4.0, allow_nan=False)
HELIX = make_helix(1.0, 2 * math.pi)


def test_w_at_zero_angles():
    W = w_matrix(0.0, 0.0, 0.7)
    expected = np.eye(4)
    expected[3, 0] = -0.7
    np.testing.assert_array_equal(W, expected)


@given(finite, finite, finite)
def test_w_determinant_and_inverse(a, b, e):
    W = w_matrix(a, b, e)
    assert np.linalg.det(W) == pytest.approx(1.0, abs=1e-13)
    np.testing.assert_allclose(W @ w_inverse(a, b, e), np.eye(4), atol=1e-13)


def test_b0_block_layout():
    np.testing.assert_array_equal(b0_block(0.0, G), [[0, 0, G, 0], [0, 0, 0, -G], [1, 0, 0, 0], [0, 1, 0, 0]])


@given(finite, finite, st.floats(-1.5, 1.5), finite)
def test_b_at_origin_invertible_with_closed_form_inverse(phi, a, b, e):
    f = frame_at(curve_with_frame(a % (2 * math.pi) - math.pi, b, e), 0.0)
    B = b_at_origin(phi, f, G)
    assert abs(np.linalg.det(B)) == pytest.approx(G ** 2, rel=1e-12)
    np.testing.assert_allclose(B @ b_at_origin_inverse(phi, f, G), np.eye(4), atol=1e-12)


def test_hover_on_line_is_origin():
    line = make_line((0, 0, 0), (1, 0, 0))
    x = QuadState.hover((2.5, 0, 0))
    xi = xi_from_plant(x, np.zeros(4), line)
    np.testing.assert_allclose(xi.xi1, [2.5, 0, 0, 0], atol=1e-14)
    for v in (xi.xi2, xi.xi3, xi.xi4):
        np.testing.assert_allclose(v, 0.0, atol=1e-14)


def test_x_line_velocity_passes_through():
    line = make_line((0, 0, 0), (1, 0, 0))
    x = QuadState.hover((0.0, 0.3, -0.2)).to_vector()
    x[3:6] = (1.2, 0.4, -0.1)
    x[9] = 0.05
    xi = xi_from_plant(x, np.zeros(4), line)
    np.testing.assert_allclose(xi.xi2, [1.2, 0.4, -0.1, 0.05], atol=1e-14)


def test_on_curve_xi2_is_w_times_velocity():
    f = frame_at(HELIX, 1.0)
    x = np.zeros(12)
    x[:3] = f.point
    x[3:6] = (0.3, -0.2, 0.5)
    x[6] = f.alpha
    x[9] = 0.4
    xi = OutputMap(HELIX, tracker=PathTracker(HELIX, 1.0)).xi(x, np.zeros(4))
    W = w_matrix(f.alpha, f.beta, f.epsilon)
    np.testing.assert_allclose(xi.xi2, W @ np.r_[x[3:6], x[9]], atol=1e-13)


def random_state(rng, curve, s):
    f = frame_at(curve, s)
    x = np.zeros(12)
    x[:3] = f.point + rng.uniform(-0.2, 0.2) * f.rotation[1] + rng.uniform(-0.2, 0.2) * f.rotation[2]
    x[3:6] = rng.normal(scale=0.5, size=3)
    x[6] = f.alpha + rng.uniform(-0.5, 0.5)
    x[7:9] = rng.uniform(-0.3, 0.3, 2)
    x[9:12] = rng.normal(scale=0.3, size=3)
    ext = np.array([rng.uniform(-2, 2), rng.normal(), rng.normal(scale=0.3), rng.normal(scale=0.3)])
    return x, ext


def test_xi4_rate_is_affine_in_inputs(rng):
    for _ in range(20):
        s = rng.uniform(0, 20)
        x, ext = random_state(rng, HELIX, s)
        om = OutputMap(HELIX, tracker=PathTracker(HELIX, s))
        _, dec, _ = om.decoupling(x, ext)
        for _ in range(3):
            U = rng.normal(scale=2.0, size=4)
            out, _ = om.jets(x, ext, U)
            np.testing.assert_allclose(24.0 * out[4], dec.q + dec.b @ U, rtol=1e-10, atol=1e-9)


def test_xi4_rate_matches_flow_finite_difference(rng):
    for _ in range(5):
        s = rng.uniform(0, 20)
        x, ext = random_state(rng, HELIX, s)
        U = rng.normal(size=4)
        om = OutputMap(HELIX, tracker=PathTracker(HELIX, s))
        _, dec, _ = om.decoupling(x, ext)
        h = 1e-3

        def xi4(t):
            xp, e = open_loop_flow(x, ext, U, t, steps=8)
            return OutputMap(HELIX, tracker=PathTracker(HELIX, s)).xi(xp, e).xi4

        fd = (xi4(h) - xi4(-h)) / (2 * h)
        exact = dec.q + dec.b @ U
        assert np.linalg.norm(fd - exact) < 1e-5 * max(1.0, np.linalg.norm(exact))


def test_chain_property_along_open_loop_flow(rng):
    s = 3.0
    x, ext = random_state(rng, HELIX, s)
    U = rng.normal(size=4)

    def xi(t):
        xp, e = open_loop_flow(x, ext, U, t, steps=8)
        return OutputMap(HELIX, tracker=PathTracker(HELIX, s)).xi(xp, e).as_matrix()

    ref = xi(0.0)
    errs = []
    for h in (2e-3, 1e-3):
        fd = (xi(h) - xi(-h)) / (2 * h)
        errs.append(np.abs(fd[:3] - ref[1:]).max())
    assert errs[1] < 1e-5
    assert 3.0 < errs[0] / errs[1] < 5.0


@pytest.mark.parametrize("phi, alpha, beta, eps", [
    (0.0, 0.0, 0.0, 0.0), (0.7, -1.2, 0.4, 0.3), (-2.5, 2.9, -1.1, -0.8)])
def test_origin_decoupling_is_closed_form(phi, alpha, beta, eps):
    curve = curve_with_frame(alpha, beta, eps)
    x = QuadState.hover((0, 0, 0), yaw=phi)
    dec = decoupling(x, np.zeros(4), curve, PathTracker(curve, 0.0))
    assert np.linalg.norm(dec.q) < 1e-12
    np.testing.assert_allclose(dec.b, b_at_origin(phi, frame_at(curve, 0.0), G), atol=1e-12)


def test_degenerate_frame_and_singular_b_are_reported():
    vertical = make_line((0, 0, 0), (0, 0, 1))
    with pytest.raises(FrameDegeneracyError):
        OutputMap(vertical).xi(QuadState.hover().to_vector(), np.zeros(4))
    # thrust saturated far below hover: d = u1 + g tiny makes the attitude columns of b vanish
    line = make_line((0, 0, 0), (1, 0, 0))
    om = OutputMap(line, level_fraction=0.999999)
    with pytest.raises(DecouplingSingularError):
        om.decoupling(QuadState.hover().to_vector(), np.array([-1e6, 0, 0, 0]))


def test_invert_outputs_hover_and_vertical_demand():
    line = make_line((0, 0, 0), (1, 0, 0))
    assert invert_outputs(np.zeros(4), np.zeros(4), 0.0, line, (0, 0, 0)) == (0.0, 0.0, 0.0)
    u1, th, ps = invert_outputs(np.zeros(4), np.array([0, 0, 1.5, 0]), 0.0, line, (0, 0, 0))
    assert (u1, th, ps) == pytest.approx((1.5, 0.0, 0.0), abs=1e-14)


def test_invert_outputs_round_trip(rng):
    for _ in range(50):
        s = rng.uniform(0, 20)
        x, ext = random_state(rng, HELIX, s)
        xi = OutputMap(HELIX, tracker=PathTracker(HELIX, s)).xi(x, ext)
        u1, th, ps = invert_outputs(xi.xi2, xi.xi3, x[6], HELIX, x[:3], s_hint=s)
        assert u1 == pytest.approx(LEVEL * math.tanh(ext[0] / LEVEL), abs=1e-9)
        assert th == pytest.approx(x[7], abs=1e-9)
        assert ps == pytest.approx(x[8], abs=1e-9)


def test_invert_outputs_rejects_free_fall_and_inverted_thrust():
    line = make_line((0, 0, 0), (1, 0, 0))
    with pytest.raises(OutputInversionError):
        invert_outputs(np.zeros(4), np.array([0, 0, -G, 0]), 0.0, line, (0, 0, 0))
    with pytest.raises(OutputInversionError):
        invert_outputs(np.zeros(4), np.array([0, 0, -2 * G, 0]), 0.0, line, (0, 0, 0))
