import numpy as np
import pytest

from quadvs.observer import ObserverGains, correction_terms, sto_estimate, sto_init, sto_step

GAINS = ObserverGains(k1=10, k2=100, k3=0.05, k4=0.05, p=0.4)


def _run_observer(v_T, T, dt, L=np.eye(3)):
    """Target centroid driven only by the target motion; returns the estimate history."""
    h = np.array([0.0, 0.0, 1.0])
    st = sto_init(h)
    n = int(round(T / dt))
    ys = np.empty((n, 3))
    vs = np.empty((n, 3))
    for k in range(n):
        t = k * dt
        v = v_T(t)
        h = h + dt * (L @ v)
        st = sto_step(st, h, np.zeros(3), np.zeros(3), L, GAINS, dt)
        ys[k] = st.y
        vs[k] = v_T(t + dt)
    return ys, vs, st


def _scalar_reference(v, T, dt):
    """Independent scalar integration of the same observer."""
    x = xh = y = 0.0
    k1, k2, k3, k4, p = 10, 100, 0.05, 0.05, 0.4
    for _ in range(int(round(T / dt))):
        x += dt * v
        e = x - xh
        a = abs(e) ** (-p) if e != 0 else 0.0
        phi1 = k3 * a + k4
        phi2 = (k3 * (1 - p) * a + k4) * phi1
        xh += dt * (k1 * phi1 * e + y) if e != 0 else dt * y
        y += dt * k2 * phi2 * e if e != 0 else 0.0
    return y


def test_init():
    st = sto_init([0, 0, 1])
    np.testing.assert_array_equal(st.h_hat, [0, 0, 1])
    np.testing.assert_array_equal(sto_estimate(st), np.zeros(3))
    np.testing.assert_array_equal([0, 0, 1] - st.h_hat, np.zeros(3))


def test_reinit_resets_estimate():
    st = sto_init([0, 0, 1])
    st = sto_step(st, [0.01, 0, 1], np.zeros(3), np.zeros(3), np.eye(3), GAINS, 1e-3)
    assert np.any(st.y != 0)
    np.testing.assert_array_equal(sto_init([0.01, 0, 1]).y, np.zeros(3))


def test_zero_correction_step():
    rng = np.random.default_rng(0)
    y = rng.normal(size=3) * 0.1
    st = sto_init([0.1, 0.2, 0.97])
    st.y = y.copy()
    L = np.diag([2.0, 3.0, 0.5])
    dt = 1e-3
    out = sto_step(st, st.h_hat.copy(), np.zeros(3), np.zeros(3), L, GAINS, dt)
    np.testing.assert_allclose(out.h_hat, st.h_hat + dt * L @ y)
    np.testing.assert_array_equal(out.y, y)


def test_correction_terms_zero_at_origin():
    c1, c2 = correction_terms(np.zeros(3), GAINS)
    np.testing.assert_array_equal(c1, 0)
    np.testing.assert_array_equal(c2, 0)


def test_non_finite_measurement_rejected():
    st = sto_init([0, 0, 1])
    out = sto_step(st, [np.nan, 0, 1], np.zeros(3), np.zeros(3), np.eye(3), GAINS, 1e-3)
    assert out.rejected
    np.testing.assert_array_equal(out.h_hat, st.h_hat)
    np.testing.assert_array_equal(out.y, st.y)


def test_step_size_validated():
    with pytest.raises(ValueError):
        sto_step(sto_init([0, 0, 1]), [0, 0, 1], np.zeros(3), np.zeros(3), np.eye(3), GAINS, 0.02)


def test_gains_validated():
    with pytest.raises(ValueError):
        ObserverGains(p=0.7)
    with pytest.raises(ValueError):
        ObserverGains(k1=0.0)


def test_constant_velocity_converges():
    v = 0.3
    ys, _, _ = _run_observer(lambda t: np.array([v, 0, 0]), 5.0, 1e-4)
    assert abs(ys[-1, 0] - v) < 1e-3
    np.testing.assert_allclose(ys[-1, 1:], 0, atol=1e-12)
    # the vector observer reduces to the scalar one along the motion axis
    assert abs(ys[-1, 0] - _scalar_reference(v, 5.0, 1e-4)) < 1e-9
    # a ten-times finer reference integration agrees
    assert abs(_scalar_reference(v, 5.0, 1e-5) - v) < 1e-3


def test_ramp_velocity_lag_bounded():
    ys, vs, _ = _run_observer(lambda t: np.array([0.03 * t, 0, 0]), 15.0, 1e-3)
    after = slice(int(3.0 / 1e-3), None)
    assert np.max(np.abs(ys[after, 0] - vs[after, 0])) < 0.05


def test_static_target_estimate_stays_zero():
    ys, _, _ = _run_observer(lambda t: np.zeros(3), 2.0, 1e-3)
    np.testing.assert_allclose(ys[-1], 0, atol=1e-12)


def test_anti_windup_bound():
    st = sto_init([0, 0, 1])
    for _ in range(200):
        st = sto_step(st, [0.5, 0.5, 0.7], np.zeros(3), np.zeros(3), np.eye(3), GAINS, 1e-2)
    assert np.linalg.norm(st.y) <= GAINS.y_max + 1e-12
