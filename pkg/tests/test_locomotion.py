import itertools

import numpy as np
import pytest

from quadvs.kinematics import leg_kinematics
from quadvs.locomotion import GaitSchedule, LegGains, MpcWeights, SrbModel, leg_torque, raibert_footstep, srb_mpc
from quadvs.locomotion.gait import gait_contacts, swing_trajectory
from quadvs.locomotion.legs import operational_space_inertia
from quadvs.locomotion.mpc import build_qp, continuous_dynamics, kkt_residuals, solve_qp, srb_state

SRB = SrbModel(20.0, np.diag([0.1, 0.4, 0.45]), 9.81, 0.5)
FEET = np.array([[0.24, 0.13, -0.36], [0.24, -0.13, -0.36], [-0.24, 0.13, -0.36], [-0.24, -0.13, -0.36]])


# ------------------------------------------------------------------ gait


def test_trot_initial_contacts():
    c = gait_contacts(0.0, GaitSchedule())
    np.testing.assert_array_equal(c, [True, False, False, True])


def test_gait_periodic(rng):
    g = GaitSchedule()
    for t in rng.uniform(0, 5, 20):
        np.testing.assert_array_equal(g.contacts(t), g.contacts(t + g.period))


def test_stance_duration_per_cycle():
    g = GaitSchedule(period=0.4, duty=0.5)
    dt = 1e-4
    t = np.arange(int(round(g.period / dt))) * dt
    stance = np.array([g.contacts(ti) for ti in t]).sum(axis=0) * dt
    np.testing.assert_allclose(stance, 0.2, atol=2 * dt)


def test_gait_rejects_negative_time():
    with pytest.raises(ValueError):
        gait_contacts(-0.1, GaitSchedule())


def test_raibert_examples():
    hip = np.array([0.24, 0.13, 0.0])
    np.testing.assert_array_equal(raibert_footstep(hip, np.zeros(3), np.zeros(3), 0.2), hip)
    v = np.array([0.3, 0, 0])
    np.testing.assert_allclose(raibert_footstep(hip, v, v, 0.2) - hip, [0.03, 0, 0], atol=1e-15)


def test_raibert_linear_in_velocity_error():
    hip = np.zeros(3)
    vd = np.array([0.2, 0.0, 0.0])
    base = raibert_footstep(hip, vd, vd, 0.2, k_step=0.03)
    for dv in (0.05, 0.1, -0.2):
        v = vd + [dv, 0, 0]
        shift = raibert_footstep(hip, v, vd, 0.2, k_step=0.03) - base
        np.testing.assert_allclose(shift, [(0.1 + 0.03) * dv, 0, 0], atol=1e-15)


def test_swing_trajectory_boundary_conditions():
    p0, pf = np.array([0.1, 0.0, 0.0]), np.array([0.2, 0.05, 0.0])
    pos, vel, _ = swing_trajectory(p0, pf, 0.0, 0.2)
    np.testing.assert_allclose(pos, p0)
    np.testing.assert_allclose(vel, 0, atol=1e-15)
    pos, vel, _ = swing_trajectory(p0, pf, 1.0, 0.2)
    np.testing.assert_allclose(pos, pf)
    np.testing.assert_allclose(vel, 0, atol=1e-15)
    pos, _, _ = swing_trajectory(p0, pf, 0.5, 0.2, height=0.08)
    assert pos[2] == pytest.approx(0.08)


def test_swing_trajectory_derivatives():
    p0, pf, T = np.array([0.1, 0.0, 0.0]), np.array([0.2, 0.05, 0.0]), 0.2
    h = 1e-6
    for s in (0.1, 0.4, 0.7):
        _, vel, acc = swing_trajectory(p0, pf, s, T)
        pp, vp, _ = swing_trajectory(p0, pf, s + h / T, T)
        pm, vm, _ = swing_trajectory(p0, pf, s - h / T, T)
        np.testing.assert_allclose(vel, (pp - pm) / (2 * h), atol=1e-6)
        np.testing.assert_allclose(acc, (vp - vm) / (2 * h), atol=1e-4)


# ------------------------------------------------------------------ MPC


def _rest_state(z=0.36):
    return srb_state((0.0, 0.0, 0.0), (0.0, 0.0, z), np.zeros(3), np.zeros(3))


def test_standing_equilibrium():
    x0 = _rest_state()
    W = MpcWeights(horizon=10)
    x_ref = np.tile(x0[:12], (10, 1))
    sol = srb_mpc(x0, x_ref, np.ones((10, 4), bool), FEET, SRB, W)
    f = sol.first
    mg = SRB.mass * SRB.gravity
    assert abs(f[:, 2].sum() - mg) <= 1e-6 * mg
    moment = sum(np.cross(r, fi) for r, fi in zip(FEET, f))
    assert np.max(np.abs(moment)) <= 1e-6
    np.testing.assert_allclose(f[:, 2], mg / 4, rtol=1e-6)
    assert sol.constraint_residual <= 1e-8
    assert sol.kkt_residual <= 1e-6


def test_all_swing_gives_zero_forces():
    x0 = _rest_state()
    sol = srb_mpc(x0, np.tile(x0[:12], (5, 1)), np.zeros((5, 4), bool), FEET, SRB, MpcWeights(horizon=5))
    np.testing.assert_array_equal(sol.forces, 0)
    assert sol.status == "idle"


def test_single_foot_force_response():
    # a vertical push behind the CoM pitches the body nose-down (positive pitch about y)
    A, B = continuous_dynamics(SRB, 0.0, FEET)
    wdot = B[6:9, 9:12] @ np.array([0.0, 0.0, 10.0])  # right rear foot
    I_inv = np.linalg.inv(SRB.inertia)
    np.testing.assert_allclose(wdot, I_inv @ np.cross(FEET[3], [0, 0, 10.0]))
    assert wdot[1] > 0 and wdot[0] < 0
    np.testing.assert_allclose(B[9:12, 9:12], np.eye(3) / SRB.mass)


def _brute_force_qp(qp):
    """Exhaustive active-set enumeration: up to three active rows per force block."""
    n = qp.H.shape[0]
    blocks = len(qp.slots)
    per_block = [c for k in range(4) for c in itertools.combinations(range(6), k)]
    best = np.inf
    for choice in itertools.product(per_block, repeat=blocks):
        rows = [6 * j + r for j, sub in enumerate(choice) for r in sub]
        m = len(rows)
        K = np.zeros((n + m, n + m))
        K[:n, :n] = qp.H
        rhs = np.concatenate([-qp.g, qp.d[rows]])
        if m:
            Cr = qp.C[rows]
            K[:n, n:] = -Cr.T
            K[n:, :n] = Cr
        try:
            sol = np.linalg.solve(K, rhs)
        except np.linalg.LinAlgError:
            continue
        u = sol[:n]
        if np.min(qp.C @ u - qp.d) < -1e-9:
            continue
        best = min(best, qp.objective(u))
    return best


def _small_instances():
    rng = np.random.default_rng(7)
    cases = []
    patterns = [
        np.array([[1, 0, 0, 0]]),
        np.array([[1, 0, 0, 1]]),
        np.array([[1, 0, 0, 0], [0, 1, 0, 0]]),
        np.array([[0, 0, 1, 0], [0, 0, 1, 0]]),
        np.array([[1, 0, 0, 0], [1, 0, 0, 0], [0, 0, 0, 1]]),
    ]
    for pat in patterns:
        for _ in range(2):
            x0 = srb_state(rng.uniform(-0.1, 0.1, 3), [0, 0, 0.36], rng.normal(scale=0.2, size=3),
                           rng.normal(scale=0.3, size=3))
            x_ref = np.tile(_rest_state()[:12], (len(pat), 1))
            x_ref[:, 9] = rng.uniform(-2, 2)  # demanding lateral references push against the cone
            x_ref[:, 10] = rng.uniform(-2, 2)
            cases.append((x0, x_ref, pat.astype(bool)))
    return cases


@pytest.mark.parametrize("case", range(10))
def test_qp_matches_exhaustive_active_set(case):
    x0, x_ref, contacts = _small_instances()[case]
    W = MpcWeights(horizon=len(contacts), R=1e-4)
    qp = build_qp(x0, x_ref, contacts, FEET, SRB, W)
    u, lam, _ = solve_qp(qp)
    ref = _brute_force_qp(qp)
    assert abs(qp.objective(u) - ref) <= 1e-6 * max(1.0, abs(ref))
    cons, kkt = kkt_residuals(qp, u, lam)
    assert cons <= 1e-8
    assert kkt <= 1e-6


def test_friction_pinned_at_cone_boundary():
    x0 = _rest_state()
    W = MpcWeights(horizon=1, Q=(0,) * 9 + (100.0, 0, 0, 0), R=1e-6)
    x_ref = np.tile(x0[:12], (1, 1))
    x_ref[0, 9] = 5.0  # far more forward speed than friction allows in one step
    contacts = np.array([[True, False, False, False]])
    qp = build_qp(x0, x_ref, contacts, FEET, SRB, W)
    u, _, _ = solve_qp(qp)
    fx, fz = u[0], u[2]
    assert fz > 0
    assert fx == pytest.approx(SRB.mu * fz, rel=1e-9)
    assert abs(qp.objective(u) - _brute_force_qp(qp)) <= 1e-6 * max(1.0, qp.objective(u))


def test_stale_fallback(monkeypatch):
    import quadvs.locomotion.mpc as mpc

    x0 = _rest_state()
    W = MpcWeights(horizon=4)
    x_ref = np.tile(x0[:12], (4, 1))
    prev = srb_mpc(x0, x_ref, np.ones((4, 4), bool), FEET, SRB, W)

    def fail(*a, **k):
        raise RuntimeError("iteration cap")

    monkeypatch.setattr(mpc, "solve_qp", fail)
    sol = mpc.srb_mpc(x0, x_ref, np.ones((4, 4), bool), FEET, SRB, W, previous=prev)
    assert sol.stale and sol.status == "stale"
    np.testing.assert_array_equal(sol.forces[0], prev.forces[1])
    with pytest.raises(RuntimeError):
        mpc.srb_mpc(x0, x_ref, np.ones((4, 4), bool), FEET, SRB, W)


# ------------------------------------------------------------------ leg torques


def test_zero_errors_zero_torque(model):
    q = np.asarray(model.nominal_leg_angles)
    p, _ = leg_kinematics(model, 0, q)
    cmd = leg_torque(model, 0, "stance", q, np.zeros(3), p, np.zeros(3), np.zeros(3), np.eye(3), np.zeros(3))
    np.testing.assert_allclose(cmd.tau, 0, atol=1e-15)


def test_stance_torque_is_jacobian_transpose(model, rng):
    q = np.asarray(model.nominal_leg_angles)
    p, J = leg_kinematics(model, 2, q)
    f = np.array([0, 0, 20 * 9.81 / 4])
    gains = LegGains(kp_stance=(50.0,) * 3, kd_stance=(2.0,) * 3)
    dp = rng.normal(scale=0.01, size=3)
    qd = rng.normal(size=3)
    cmd = leg_torque(model, 2, "stance", q, qd, p + dp, np.zeros(3), np.zeros(3), np.eye(3), f, gains)
    expected = J.T @ f + J.T @ (50.0 * dp - 2.0 * (J @ qd))
    np.testing.assert_allclose(cmd.tau, expected, atol=1e-12)


def test_swing_torque_matches_operational_space_formula(model, rng):
    for _ in range(10):
        leg = int(rng.integers(4))
        q = np.asarray(model.nominal_leg_angles) + rng.uniform(-0.3, 0.3, 3)
        qd = rng.normal(size=3)
        g_B = rng.normal(size=3)
        ref, vref, aref = rng.normal(scale=0.1, size=(3, 3))
        cmd = leg_torque(model, leg, "swing", q, qd, ref, vref, aref, np.eye(3), np.zeros(3), LegGains(), g_B)
        chain = model.leg_chain(leg)
        # independent pieces: mass matrix from the energy form, bias from inverse dynamics,
        # Jacobian rate from a forward difference along the motion
        M = chain.mass_matrix(q)
        _, _, n = chain.rnea(q, qd, np.zeros(3), g_B)
        J = chain.jacobian(q)[:3]
        h = 1e-7
        Jdot = (chain.jacobian(q + h * qd)[:3] - J) / h
        Lam = np.linalg.pinv(J @ np.linalg.pinv(M) @ J.T)
        p = chain.forward_kinematics(q)[1]
        F = 400 * (ref - p) + 15 * (vref - J @ qd)
        expected = J.T @ (F + Lam @ (aref - Jdot @ qd)) + n
        np.testing.assert_allclose(cmd.tau, expected, rtol=1e-6, atol=1e-6)
        assert not cmd.damped


def test_damped_inverse_flag():
    J = np.diag([1.0, 1.0, 1e-6])
    Lam, damped = operational_space_inertia(J, np.eye(3))
    assert damped and np.all(np.isfinite(Lam))


def test_unknown_leg_mode(model):
    with pytest.raises(ValueError):
        leg_torque(model, 0, "hop", np.zeros(3), np.zeros(3), np.zeros(3), np.zeros(3), np.zeros(3), np.eye(3),
                   np.zeros(3))
