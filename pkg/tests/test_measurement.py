import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rbl.errors import DegenerateGeometryError
from rbl.geometry import Conformation, MotionParams, PoseParams, rotation_matrix_exact, rotation_matrix_small
from rbl.measurement import (
    LinearSystem,
    MeasurementSet,
    NoiseModel,
    build_motion_system,
    build_pose_system,
    build_position_system,
    build_velocity_system,
    ground_truth_unknowns,
    simulate,
    true_doppler,
    true_range,
)

ang = st.floats(-0.3, 0.3, allow_nan=False)
trans = st.floats(-5, 5, allow_nan=False)
vec3 = lambda el: st.tuples(el, el, el).map(np.array)  # noqa: E731


def _rel_residual(system, truth):
    r = system.y - system.apply(truth)
    return np.max(np.abs(r)) / max(1.0, np.max(np.abs(system.y)))


def test_true_range_examples():
    assert true_range([1, 2, 3], [1, 2, 3]) == 0.0
    assert true_range([-10, -10, -10], [-0.5, -0.5, -0.5]) == pytest.approx(9.5 * np.sqrt(3), abs=1e-12)
    assert 9.5 * np.sqrt(3) == pytest.approx(16.4545, abs=1e-4)
    a, s, v = np.array([1.0, 2, 3]), np.array([-4.0, 0, 7]), np.array([3.0, -2, 1])
    assert true_range(a + v, s + v) == pytest.approx(true_range(a, s), abs=1e-12)


def test_true_doppler_examples():
    assert true_doppler([0, 0, 0], [3, 4, 0], [1, 0, 0]) == pytest.approx(0.6, abs=1e-15)
    assert true_doppler([0, 0, 0], [3, 4, 0], [-4, 3, 0]) == pytest.approx(0.0, abs=1e-15)
    a, s = np.array([1.0, -2, 0.5]), np.array([4.0, 2, -1])
    u = (s - a) / np.linalg.norm(s - a)
    assert true_doppler(a, s, 2.5 * u) == pytest.approx(2.5, abs=1e-12)
    with pytest.raises(DegenerateGeometryError):
        true_doppler(a, a, [1, 0, 0])


def test_noise_model():
    nm = NoiseModel.coupled(0.01, seed=3)
    assert (nm.sigma_w, nm.sigma_eps, nm.seed) == (0.01, 0.1, 3)
    assert NoiseModel.coupled(2.0, coupling=0.1).sigma_eps == pytest.approx(0.2)
    with pytest.raises(ValueError):
        NoiseModel(sigma_w=-1.0)


def test_simulate_noiseless_matches_true_ranges(cube):
    pose = PoseParams([0.05, -0.1, 0.2], [1.0, -2.0, 0.5])
    motion = MotionParams([0.1, 0.0, -0.2], [0.3, 0.2, -1.0])
    meas = simulate(cube, pose, motion)
    S, S_dot = ground_truth_unknowns(cube, pose, motion)
    for m in range(cube.M):
        for n in range(cube.N):
            assert meas.ranges[m, n] == pytest.approx(true_range(cube.A[:, m], S[:3, n]), abs=1e-12)
            assert meas.dopplers[m, n] == pytest.approx(
                true_doppler(cube.A[:, m], S[:3, n], S_dot[:3, n]), abs=1e-12
            )
    assert meas.has_doppler
    assert not simulate(cube, pose).has_doppler


def test_simulate_is_deterministic(cube):
    pose = PoseParams([0.05, -0.1, 0.2], [1.0, -2.0, 0.5])
    motion = MotionParams([0.1, 0.0, -0.2], [0.3, 0.2, -1.0])
    a = simulate(cube, pose, motion, NoiseModel.coupled(0.1, seed=9))
    b = simulate(cube, pose, motion, NoiseModel.coupled(0.1, seed=9))
    assert a.ranges.tobytes() == b.ranges.tobytes()
    assert a.dopplers.tobytes() == b.dopplers.tobytes()
    c = simulate(cube, pose, motion, NoiseModel.coupled(0.1, seed=10))
    assert not np.array_equal(a.ranges, c.ranges)


def test_simulate_noise_variance():
    # every anchor 10 m from the origin, where all sensors sit
    A = 10.0 * np.column_stack([np.eye(3), -np.eye(3)[:, :2]])
    reps = 20000
    sigma = 0.3
    conf = Conformation(np.zeros((3, reps)), A)
    meas = simulate(conf, PoseParams.identity(), noise=NoiseModel(sigma, 0.0, seed=1))
    err = meas.ranges - 10.0
    assert err.size == 5 * reps
    assert np.var(err) == pytest.approx(sigma**2, rel=0.05)


def test_coincident_sensor_and_anchor_raises():
    conf = Conformation(np.zeros((3, 1)), np.column_stack([np.zeros(3), np.eye(3), -np.ones(3)]))
    with pytest.raises(DegenerateGeometryError):
        simulate(conf, PoseParams.identity(), MotionParams.still())


def _noiseless(cube, theta, t, omega=None, t_dot=None, exact=True):
    pose = PoseParams(theta, t)
    motion = None if omega is None else MotionParams(omega, t_dot)
    meas = simulate(cube, pose, motion, exact=exact)
    X, X_dot = ground_truth_unknowns(cube, pose, motion, exact=exact)
    return pose, motion, meas, X, X_dot


def test_position_system_structure(cube):
    _, _, meas, X, _ = _noiseless(cube, [0.1, 0.0, -0.1], [1.0, 2.0, -1.5])
    sys0 = build_position_system(meas, cube, 0)
    G = sys0.blocks["x"]
    np.testing.assert_array_equal(G[:, 3], np.ones(8))
    np.testing.assert_array_equal(G[:, :3], -2.0 * cube.A.T)
    assert _rel_residual(sys0, X[:, 0]) < 1e-12
    assert np.all(sys0.n0 > 0)


def test_position_system_origin_anchor():
    A = np.column_stack([np.zeros(3), 5 * np.eye(3), -5 * np.eye(3)])
    conf = Conformation(np.array([[0.5], [0.0], [0.0]]), A)
    meas = simulate(conf, PoseParams([0, 0, 0], [1.0, 1.0, 1.0]))
    s = build_position_system(meas, conf, 0)
    assert s.y[0] == meas.ranges[0, 0] ** 2
    np.testing.assert_array_equal(s.blocks["x"][0], [0, 0, 0, 1])


def test_position_noise_power(cube):
    meas = simulate(cube, PoseParams.identity(), noise=NoiseModel(0.2, 0.0, seed=0))
    s = build_position_system(meas, cube, 3)
    np.testing.assert_allclose(s.n0, 4 * meas.ranges[:, 3] ** 2 * 0.04)


def test_velocity_system_structure(cube):
    _, _, meas, X, X_dot = _noiseless(cube, [0.1, 0.0, -0.1], [1.0, 2.0, -1.5], [0.2, -0.1, 0.05], [1.0, 0.0, -2.0])
    for n in range(cube.N):
        sv = build_velocity_system(meas, cube, n)
        assert _rel_residual(sv, X_dot[:, n]) < 1e-12
        sp = build_position_system(meas, cube, n)
        np.testing.assert_array_equal(sv.blocks["x"][:, :3], sp.blocks["x"][:, :3] / 2)
        np.testing.assert_array_equal(sv.blocks["x"][:, 3], np.ones(8))


def test_velocity_system_static_body(cube):
    _, _, meas, _, _ = _noiseless(cube, [0.1, 0.0, -0.1], [1.0, 2.0, -1.5], [0, 0, 0], [0, 0, 0])
    np.testing.assert_allclose(build_velocity_system(meas, cube, 2).y, 0.0, atol=1e-13)


def test_velocity_noise_power(cube):
    meas = simulate(cube, PoseParams.identity(), MotionParams([0, 0, 0.1], [1, 0, 0]), NoiseModel(0.1, 1.0, 4))
    s = build_velocity_system(meas, cube, 0)
    d, nu = meas.ranges[:, 0], meas.dopplers[:, 0]
    np.testing.assert_allclose(s.n0, nu**2 * 0.01 + d**2 * 1.0)


def test_velocity_system_requires_doppler(cube):
    meas = simulate(cube, PoseParams.identity())
    with pytest.raises(ValueError, match="Doppler"):
        build_velocity_system(meas, cube, 0)


@given(vec3(ang), vec3(trans))
def test_pose_system_forward_consistency(theta, t):
    from rbl.bench import default_conformation

    cube = default_conformation()
    pose, _, meas, X, _ = _noiseless(cube, theta, t, exact=False)
    for n in range(cube.N):
        s = build_pose_system(meas, cube, n, X[3, n])
        assert s.labels == ("theta", "t")
        assert _rel_residual(s, {"theta": pose.theta, "t": pose.t}) < 1e-9


def test_pose_system_shapes(cube):
    pose, _, meas, X, _ = _noiseless(cube, [0.05, 0.02, -0.04], [0.5, -1.0, 2.0], exact=False)
    systems = [build_pose_system(meas, cube, n, X[3, n]) for n in range(cube.N)]
    for s in systems:
        assert s.blocks["theta"].shape == (8, 3)
        np.testing.assert_array_equal(s.blocks["t"], systems[0].blocks["t"])
    conf = Conformation(np.zeros((3, 1)), cube.A)
    meas0 = simulate(conf, pose)
    np.testing.assert_array_equal(build_pose_system(meas0, conf, 0, 1.0).blocks["theta"], 0.0)
    with pytest.raises(ValueError):
        build_pose_system(meas, cube, 0, -1.0)


@given(vec3(ang), vec3(trans), vec3(ang), vec3(trans))
def test_motion_system_forward_consistency(theta, t, omega, t_dot):
    from rbl.bench import default_conformation

    cube = default_conformation()
    pose, motion, meas, X, X_dot = _noiseless(cube, theta, t, omega, t_dot)
    Q = rotation_matrix_exact(theta)
    for n in range(cube.N):
        s = build_motion_system(meas, cube, n, X_dot[3, n], Q)
        assert _rel_residual(s, {"omega": motion.omega, "t_dot": motion.t_dot}) < 1e-9
        s2 = build_motion_system(meas, cube, n, Q_est=Q, s_est=X[:3, n], s_dot_est=X_dot[:3, n])
        np.testing.assert_allclose(s2.y, s.y, atol=1e-12)


def test_motion_system_small_angle_generation(cube):
    pose, motion, meas, X, X_dot = _noiseless(
        cube, [0.05, -0.02, 0.03], [1.0, 0.0, -1.0], [0.1, 0.2, -0.1], [0.5, -0.5, 0.2], exact=False
    )
    Q = rotation_matrix_small(pose.theta)
    s = build_motion_system(meas, cube, 5, X_dot[3, 5], Q)
    assert _rel_residual(s, {"omega": motion.omega, "t_dot": motion.t_dot}) < 1e-9


def test_motion_system_structure(cube):
    pose, motion, meas, X, X_dot = _noiseless(cube, [0.1, 0, 0], [0, 0, 0], [0, 0, 0], [0, 0, 0])
    s = build_motion_system(meas, cube, 1, X_dot[3, 1], rotation_matrix_exact(pose.theta))
    np.testing.assert_allclose(s.y, 0.0, atol=1e-13)
    sv = build_velocity_system(meas, cube, 1)
    np.testing.assert_array_equal(s.blocks["t_dot"], sv.blocks["x"][:, :3])
    # Q defaults to identity
    s_id = build_motion_system(meas, cube, 1, 0.0)
    s_eye = build_motion_system(meas, cube, 1, 0.0, np.eye(3))
    np.testing.assert_array_equal(s_id.blocks["omega"], s_eye.blocks["omega"])
    with pytest.raises(ValueError):
        build_motion_system(meas, cube, 1)


def test_linear_system_validation():
    with pytest.raises(ValueError, match="rows"):
        LinearSystem(np.zeros(3), {"x": np.zeros((4, 2))}, 1.0)
    with pytest.raises(ValueError, match="positive"):
        LinearSystem(np.zeros(3), {"x": np.zeros((3, 2))}, 0.0)
    with pytest.raises(ValueError):
        LinearSystem(np.zeros(3), {}, 1.0)


def test_linear_system_helpers(rng):
    A, B = rng.standard_normal((5, 3)), rng.standard_normal((5, 2))
    s = LinearSystem(rng.standard_normal(5), {"a": A, "b": B}, 0.5)
    assert s.labels == ("a", "b") and s.num_unknowns == 5 and s.num_rows == 5
    assert s.slices() == {"a": slice(0, 3), "b": slice(3, 5)}
    np.testing.assert_array_equal(s.matrix, np.hstack([A, B]))
    np.testing.assert_array_equal(s.per_unknown({"a": 1.0, "b": [2.0, 3.0]}), [1, 1, 1, 2, 3])
    np.testing.assert_array_equal(s.per_unknown(4.0), np.full(5, 4.0))
    with pytest.raises(KeyError):
        s.per_unknown({"a": 1.0})
    with pytest.raises(ValueError):
        s.per_unknown([1.0, 2.0])
    x = rng.standard_normal(5)
    np.testing.assert_allclose(s.apply(x), s.apply({"a": x[:3], "b": x[3:]}))
    assert s.select("b").labels == ("b",)
    st2 = LinearSystem.stack([s, s.with_y(np.zeros(5))])
    assert st2.num_rows == 10 and st2.labels == ("a", "b")
    np.testing.assert_array_equal(st2.n0, np.full(10, 0.5))
    with pytest.raises(ValueError):
        LinearSystem.stack([s, s.select("a")])


def test_measurement_set_fields():
    m = MeasurementSet(np.ones((5, 2)), NoiseModel())
    assert not m.has_doppler
