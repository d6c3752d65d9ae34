import numpy as np
import pytest
from hypothesis import given, strategies as st

from quadpath.controller import (ControllerGains, ObserverGains, ObserverState, ReferenceSpec,
                                 error_state, extension_derivative, full_state_law,
                                 gains_from_poles, is_hurwitz, observer_coeffs_from_poles,
                                 observer_derivative, output_feedback_law, smooth_sat)
from quadpath.normal_form import DecouplingData


@pytest.mark.parametrize("poles, expected", [
    ((-1, -1, -1, -1), (1, 4, 6, 4)),
    ((-1, -2, -3, -4), (24, 50, 35, 10)),
    ((-1 + 1j, -1 - 1j, -2, -2), (8, 16, 14, 6)),
])
def test_gains_from_poles(poles, expected):
    np.testing.assert_allclose(gains_from_poles(poles).as_array(), expected, rtol=1e-14)


@pytest.mark.parametrize("poles, expected", [
    ((-1,) * 5, (5, 10, 10, 5, 1)),
    ((-1, -2, -3, -4, -5), (15, 85, 225, 274, 120)),
    # (p^2 + 2p + 5)(p + 1)^3 expanded by hand
    ((-1 + 2j, -1 - 2j, -1, -1, -1), (5, 14, 22, 17, 5)),
])
def test_observer_coefficients(poles, expected):
    np.testing.assert_allclose(observer_coeffs_from_poles(poles), expected, rtol=1e-14)


@pytest.mark.parametrize("poles", [(-1, -1, -1, 0.5), (-1, -1, -1 + 1j, -2), (-1, -1, -1), (1j, -1j, -1, -1)])
def test_invalid_pole_sets(poles):
    with pytest.raises(ValueError):
        gains_from_poles(poles)


def test_gain_validation():
    assert is_hurwitz([4, 6, 4, 1])
    assert not is_hurwitz([1, 1, 1, 1])  # (p^4 + p^3 + p^2 + p + 1) has roots on the right
    with pytest.raises(ValueError):
        ControllerGains(1, 1, 1, 1)
    with pytest.raises(ValueError):
        ObserverGains(a=(1, 1, 1, 1, 1))
    with pytest.raises(ValueError):
        ObserverGains(k=0.0)
    with pytest.raises(ValueError):
        ObserverGains(N=-1.0)
    np.testing.assert_allclose(ObserverGains(k=2.0).injection, [10, 40, 80, 80, 32])


@given(st.floats(-1e3, 1e3), st.floats(0.01, 100))
def test_smooth_sat_properties(x, L):
    y = float(smooth_sat(x, L))
    assert abs(y) <= L
    assert float(smooth_sat(-x, L)) == -y
    assert abs(y) <= abs(x) + 1e-12


def test_smooth_sat_values():
    assert smooth_sat(0.0, 2.0) == 0.0
    assert 0.9999 * 3.0 < smooth_sat(30.0, 3.0) < 3.0
    h = 1e-6
    assert (smooth_sat(h, 1.5) - smooth_sat(-h, 1.5)) / (2 * h) == pytest.approx(1.0, abs=1e-10)


def test_reference_validation():
    with pytest.raises(ValueError):
        ReferenceSpec(0.0)
    with pytest.raises(ValueError):
        ReferenceSpec(1.0, phi_star_mode="sideways")
    assert ReferenceSpec(1.0).alpha_override is None
    assert ReferenceSpec(1.0, phi_star_mode="constant", phi_star_value=0.3).alpha_override == 0.3


def test_error_state():
    ref = ReferenceSpec(0.5, s0=2.0)
    np.testing.assert_allclose(error_state([2.0 + 0.5 * 3.0, 0, 0, 0], 3.0, ref), 0.0)
    assert error_state([3.0, 0.1, 0.2, 0.3], 0.0, ref)[0] == 1.0
    xi = np.arange(16.0).reshape(4, 4)
    err = error_state(xi[0], 1.0, ref, xi)
    assert err[1, 0] == xi[1, 0] - 0.5
    np.testing.assert_array_equal(err[2:], xi[2:])
    # s_tilde is constant along a trajectory moving at exactly v_star
    s_tilde = [error_state([2.0 + 0.5 * t + 0.1, 0, 0, 0], t, ref)[0] for t in np.linspace(0, 5, 11)]
    np.testing.assert_allclose(np.diff(s_tilde), 0.0, atol=1e-15)


def test_full_state_law_simple_cases():
    gains = gains_from_poles([-1, -2, -3, -4])
    dec = DecouplingData(np.zeros(4), np.eye(4))
    np.testing.assert_array_equal(full_state_law(np.zeros((4, 4)), dec, gains), 0.0)
    xi = np.zeros((4, 4))
    xi[0] = (1, 0, 0, 0)
    np.testing.assert_allclose(full_state_law(xi, dec, gains), [-24, 0, 0, 0])
    # with an explicit inverse the solve is skipped but the result is the same
    b = np.array([[2.0, 1, 0, 0], [0, 1, 0, 0], [0, 0, 3, 1], [1, 0, 0, 1]])
    q = np.array([0.3, -0.1, 0.2, 0.5])
    xi = np.random.default_rng(1).normal(size=(4, 4))
    np.testing.assert_allclose(full_state_law(xi, DecouplingData(q, b, np.linalg.inv(b)), gains),
                               full_state_law(xi, DecouplingData(q, b), gains), atol=1e-12)


def test_observer_pure_chain():
    obs = ObserverState(np.arange(16.0).reshape(4, 4), np.zeros(4))
    d = observer_derivative(obs, obs.xi_hat[0], np.zeros(4), np.eye(4), ObserverGains())
    np.testing.assert_array_equal(d.xi_hat[:3], obs.xi_hat[1:])
    np.testing.assert_array_equal(d.xi_hat[3], 0.0)
    np.testing.assert_array_equal(d.sigma_hat, 0.0)


def test_observer_state_vector_round_trip():
    obs = ObserverState(np.arange(16.0).reshape(4, 4), np.array([1.0, 2, 3, 4]))
    back = ObserverState.from_vector(obs.to_vector())
    np.testing.assert_array_equal(back.xi_hat, obs.xi_hat)
    np.testing.assert_array_equal(back.sigma_hat, obs.sigma_hat)


def _linear_observer_run(k, sigma_star, t_end=8.0, dt=1e-3):
    """Observer against a quadruple integrator driven by an unknown constant input, zero control."""
    og = ObserverGains(k=k)
    truth = np.zeros((4, 4))
    truth[0] = (0.5, -0.2, 0.1, 0.3)
    obs = ObserverState()
    b0 = np.eye(4)
    U = np.zeros(4)
    err = []

    def f(tr, o):
        d_tr = np.vstack([tr[1:], sigma_star + b0 @ U])
        return d_tr, observer_derivative(o, tr[0], U, b0, og)

    for _ in range(int(round(t_end / dt))):
        k1 = f(truth, obs)
        k2 = f(truth + dt / 2 * k1[0], ObserverState(obs.xi_hat + dt / 2 * k1[1].xi_hat, obs.sigma_hat + dt / 2 * k1[1].sigma_hat))
        k3 = f(truth + dt / 2 * k2[0], ObserverState(obs.xi_hat + dt / 2 * k2[1].xi_hat, obs.sigma_hat + dt / 2 * k2[1].sigma_hat))
        k4 = f(truth + dt * k3[0], ObserverState(obs.xi_hat + dt * k3[1].xi_hat, obs.sigma_hat + dt * k3[1].sigma_hat))
        truth = truth + dt / 6 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
        obs = ObserverState(
            obs.xi_hat + dt / 6 * (k1[1].xi_hat + 2 * k2[1].xi_hat + 2 * k3[1].xi_hat + k4[1].xi_hat),
            obs.sigma_hat + dt / 6 * (k1[1].sigma_hat + 2 * k2[1].sigma_hat + 2 * k3[1].sigma_hat + k4[1].sigma_hat))
        # estimation error in the high-gain scaled coordinates e_i / k^(i-1)
        e = np.vstack([obs.xi_hat - truth, obs.sigma_hat - sigma_star])
        err.append(max(np.abs(e[i]).max() / k ** i for i in range(5)))
    return obs, np.array(err)


def _settling_time(err, dt=1e-3, threshold=1e-4):
    above = np.flatnonzero(err > threshold)
    return (above[-1] + 1) * dt


def test_observer_recovers_constant_disturbance():
    sigma_star = np.array([0.4, -1.0, 0.25, 2.0])
    obs, _ = _linear_observer_run(10.0, sigma_star)
    assert np.abs(obs.sigma_hat - sigma_star).max() < 1e-6


def test_doubling_k_at_least_halves_settling():
    sigma_star = np.array([0.4, -1.0, 0.25, 2.0])
    t5 = _settling_time(_linear_observer_run(5.0, sigma_star)[1])
    t10 = _settling_time(_linear_observer_run(10.0, sigma_star)[1])
    t20 = _settling_time(_linear_observer_run(20.0, sigma_star, t_end=4.0)[1])
    # allow two samples of grid resolution
    assert t10 <= 0.5 * t5 + 2e-3 and t20 <= 0.5 * t10 + 2e-3


def test_output_law_zero_and_bounded(rng):
    gains = gains_from_poles([-2] * 4)
    np.testing.assert_array_equal(output_feedback_law(ObserverState(), np.zeros(4), np.eye(4), gains, 5.0), 0.0)
    for _ in range(100):
        obs = ObserverState(rng.normal(scale=50, size=(4, 4)), rng.normal(scale=50, size=4))
        U = output_feedback_law(obs, rng.normal(scale=50, size=4), np.eye(4) * 0.1, gains, 5.0)
        # tanh rounds to exactly 1.0 in double precision far out, so the bound is inclusive
        assert np.all(np.abs(U) <= 5.0)


def test_output_law_with_perfect_estimates_equals_state_law(rng):
    gains = gains_from_poles([-1, -2, -3, -4])
    b = rng.normal(size=(4, 4)) + 4 * np.eye(4)
    q = rng.normal(size=4)
    xi_tilde = rng.normal(scale=0.1, size=(4, 4))
    obs = ObserverState(xi_tilde.copy(), q.copy())
    U_state = full_state_law(xi_tilde, DecouplingData(q, b), gains)
    U_out = output_feedback_law(obs, xi_tilde[0], b, gains, 1e9)
    np.testing.assert_allclose(U_out, U_state, atol=1e-8)


def _closed_loop_linear(k, t_end=3.0, dt=5e-4):
    """Quadruple-integrator plant with drift sigma*: state law vs output law; returns final gap."""
    gains = gains_from_poles([-2] * 4)
    og = ObserverGains(k=k, N=1e3)
    sigma_star = np.array([0.3, -0.2, 0.1, 0.05])
    b0 = np.eye(4)
    x0 = np.zeros((4, 4))
    x0[0] = (0.2, -0.1, 0.05, 0.3)

    def state_rhs(x):
        U = full_state_law(x, DecouplingData(sigma_star, b0), gains)
        return np.vstack([x[1:], sigma_star + U])

    def out_rhs(z):
        x, o = z[:16].reshape(4, 4), ObserverState.from_vector(z[16:])
        U = output_feedback_law(o, x[0], b0, gains, og.N)
        d_o = observer_derivative(o, x[0], U, b0, og)
        return np.concatenate([np.vstack([x[1:], sigma_star + U]).ravel(), d_o.to_vector()])

    def rk4(f, y, n):
        for _ in range(n):
            k1 = f(y); k2 = f(y + dt / 2 * k1); k3 = f(y + dt / 2 * k2); k4 = f(y + dt * k3)
            y = y + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        return y

    n = int(round(t_end / dt))
    xs = rk4(state_rhs, x0, n)
    obs0 = ObserverState()
    obs0.xi_hat[0] = x0[0]
    zo = rk4(out_rhs, np.concatenate([x0.ravel(), obs0.to_vector()]), n)
    return np.abs(zo[:16].reshape(4, 4) - xs).max()


def test_output_feedback_approaches_state_feedback_as_k_grows():
    gaps = [_closed_loop_linear(k) for k in (10.0, 20.0, 40.0)]
    assert gaps[0] > gaps[1] > gaps[2]


def test_extension_derivative():
    d, applied = extension_derivative(np.zeros(4), np.zeros(4), 8.0)
    np.testing.assert_array_equal(d, 0.0)
    np.testing.assert_array_equal(applied, 0.0)
    d, applied = extension_derivative([100.0, 1.0, 0.3, -0.2], [2.0, -1.0, 0.5, 0.6], 8.0)
    np.testing.assert_array_equal(d, [1.0, 2.0, -0.2, -1.0])
    assert 0 < applied[0] < 8.0
    np.testing.assert_array_equal(applied[1:], [0.3, 0.5, 0.6])


@given(st.floats(-1e6, 1e6))
def test_thrust_offset_never_exceeds_level(u1_bar):
    _, applied = extension_derivative([u1_bar, 0, 0, 0], np.zeros(4), 0.9 * 9.81)
    assert abs(applied[0]) <= 0.9 * 9.81


def test_constant_v1_gives_quadratic_u1_bar():
    c, dt = 0.3, 1e-2
    ext = np.zeros(4)
    for _ in range(100):
        f = lambda e: extension_derivative(e, [c, 0, 0, 0], 8.0)[0]
        k1 = f(ext); k2 = f(ext + dt / 2 * k1); k3 = f(ext + dt / 2 * k2); k4 = f(ext + dt * k3)
        ext = ext + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    assert ext[0] == pytest.approx(c * 1.0 ** 2 / 2, rel=1e-12)
