"""End-to-end stationary and moving rigid body estimators.

Stationary: sensor positions (linear GaBP per sensor), then pose via the
bivariate GaBP on the stacked pose system followed by interference-cancelled
rotation refinement. Moving adds sensor velocities and the analogous
two-stage estimate of angular and translational velocity.
"""
from dataclasses import dataclass, field

import numpy as np

from .baseline import ls_solve, wls_solve
from .errors import GabpDivergenceError
from .gabp import GabpConfig, bivariate_gabp, ic_refine, linear_gabp
from .geometry import rotation_matrix_exact, rotation_matrix_small
from .measurement import (
    N0_FLOOR,
    LinearSystem,
    NoiseModel,
    build_motion_system,
    build_pose_system,
    build_position_system,
    build_velocity_system,
    ground_truth_unknowns,
    simulate,
)

__all__ = [
    "PipelineConfig",
    "SensorStage",
    "TwoBlockStage",
    "StationaryEstimate",
    "MovingEstimate",
    "estimate_positions",
    "estimate_velocities",
    "estimate_pose",
    "estimate_motion",
    "estimate_stationary",
    "estimate_moving",
    "run_stationary",
    "run_moving",
    "deg2_to_rad2",
]


def deg2_to_rad2(value):
    """Convert a variance in deg^2 (or (deg/s)^2) to rad^2."""
    return float(value) * (np.pi / 180.0) ** 2


@dataclass(frozen=True)
class PipelineConfig:
    """Settings shared by all four stages.

    Prior variances are in SI units (rad^2, m^2, ...). The defaults for the
    rigid body parameters match the simulation priors: 10 deg^2, 5 m^2,
    10 (deg/s)^2 and 5 (m/s)^2.

    readout     ``"consensus"`` (combination of factor beliefs, no prior)
                or ``"posterior"`` (prior folded in).
    stacking    ``"joint"`` runs the two-block stages on all sensors' rows
                at once, ``"average"`` runs them per sensor and averages.
    norm_source ``"fourth"`` feeds the pose system with the position stage's
                ``|s|^2`` unknown, ``"coords"`` with the squared norm of the
                estimated coordinates (same for ``s^T s_dot``).
    q_source    rotation used in the motion system: ``"estimate"`` (small
                angle from the pose stage), ``"identity"`` or ``"truth"``.
    solver      ``"gabp"``, or the closed-form ``"ls"``/``"wls"`` baselines
                (joint solve of both blocks, no refinement pass).
    """

    rho: float = 0.5
    j_max: int = 30
    tol: float = 1e-8
    phi_x: float = 1e4
    phi_x_dot: float = 1e4
    phi_theta: float = deg2_to_rad2(10.0)
    phi_t: float = 5.0
    phi_omega: float = deg2_to_rad2(10.0)
    phi_t_dot: float = 5.0
    readout: str = "consensus"
    stacking: str = "joint"
    norm_source: str = "fourth"
    q_source: str = "estimate"
    n0_floor: float = N0_FLOOR
    solver: str = "gabp"

    def __post_init__(self):
        for name, allowed in (
            ("solver", ("gabp", "ls", "wls")),
            ("readout", ("consensus", "posterior")),
            ("stacking", ("joint", "average")),
            ("norm_source", ("fourth", "coords")),
            ("q_source", ("estimate", "identity", "truth")),
        ):
            if getattr(self, name) not in allowed:
                raise ValueError(f"{name} must be one of {allowed}, got {getattr(self, name)!r}")
        self.gabp(1.0)  # engine settings are validated there

    def gabp(self, prior_var, init=None):
        return GabpConfig(
            rho=self.rho, j_max=self.j_max, tol=self.tol, prior_var=prior_var, init=init
        )


@dataclass
class SensorStage:
    """Per-sensor linear GaBP output: ``values[:, n]`` is the 4-vector of sensor ``n``."""

    values: np.ndarray
    results: list

    @property
    def coords(self):
        return self.values[:3]

    @property
    def extra(self):
        return self.values[3]

    @property
    def iterations(self):
        return [getattr(r, "iterations", 0) for r in self.results]


@dataclass
class TwoBlockStage:
    """Two-block estimate: ``first`` is refined, ``second`` comes from the coarse run."""

    first: np.ndarray
    second: np.ndarray
    first_coarse: np.ndarray
    coarse: list
    refined: list

    @property
    def iterations(self):
        return (
            int(sum(getattr(r, "iterations", 0) for r in self.coarse)),
            int(sum(getattr(r, "iterations", 0) for r in self.refined)),
        )


@dataclass
class StationaryEstimate:
    positions: np.ndarray
    norms: np.ndarray
    theta: np.ndarray
    t: np.ndarray
    theta_coarse: np.ndarray
    diagnostics: dict = field(default_factory=dict)


@dataclass
class MovingEstimate:
    stationary: StationaryEstimate
    velocities: np.ndarray
    inner: np.ndarray
    omega: np.ndarray
    t_dot: np.ndarray
    omega_coarse: np.ndarray
    diagnostics: dict = field(default_factory=dict)


def _locate(exc, stage, sensor=None):
    return exc.located(sensor=sensor, stage=stage)


_CLOSED_FORM = {"ls": ls_solve, "wls": wls_solve}


def _sensor_stage(systems, config, prior_var, truths, stage):
    values, results = [], []
    for n, system in enumerate(systems):
        if config.solver in _CLOSED_FORM:
            res = _CLOSED_FORM[config.solver](system)
            values.append(res.estimate)
            results.append(res)
            continue
        init = None if truths is None else truths[:, n]
        try:
            res = linear_gabp(system, config.gabp(prior_var, init))
        except GabpDivergenceError as exc:
            raise _locate(exc, stage, n) from exc
        values.append(res.estimate(config.readout))
        results.append(res)
    return SensorStage(np.column_stack(values), results)


def estimate_positions(meas, conformation, config=PipelineConfig(), truth=None):
    """Linear GaBP on each sensor's squared-range system.

    ``truth`` (4 x N) switches to true-value initialization.
    """
    conformation.check_positioning()
    systems = [
        build_position_system(meas, conformation, n, config.n0_floor)
        for n in range(conformation.N)
    ]
    return _sensor_stage(systems, config, config.phi_x, truth, "position")


def estimate_velocities(meas, conformation, config=PipelineConfig(), truth=None):
    """Linear GaBP on each sensor's range-Doppler system."""
    conformation.check_positioning()
    systems = [
        build_velocity_system(meas, conformation, n, config.n0_floor)
        for n in range(conformation.N)
    ]
    return _sensor_stage(systems, config, config.phi_x_dot, truth, "velocity")


def _two_block(systems, config, priors, truth, stage):
    labels = systems[0].labels
    init = None if truth is None else dict(zip(labels, truth))
    gcfg = config.gabp(dict(zip(labels, priors)), init)
    groups = [LinearSystem.stack(systems)] if config.stacking == "joint" else systems
    first, second = labels
    if config.solver in _CLOSED_FORM:
        reports = [_CLOSED_FORM[config.solver](system) for system in groups]
        one = np.mean([r.block(first) for r in reports], axis=0)
        return TwoBlockStage(
            first=one,
            second=np.mean([r.block(second) for r in reports], axis=0),
            first_coarse=one,
            coarse=reports,
            refined=[],
        )
    coarse, refined = [], []
    for system in groups:
        try:
            c = bivariate_gabp(system, gcfg)
            r = ic_refine(system, c, gcfg, readout=config.readout)
        except GabpDivergenceError as exc:
            raise _locate(exc, stage) from exc
        coarse.append(c)
        refined.append(r)
    return TwoBlockStage(
        first=np.mean([r.estimate(config.readout) for r in refined], axis=0),
        second=np.mean([c.block(second, config.readout) for c in coarse], axis=0),
        first_coarse=np.mean([c.block(first, config.readout) for c in coarse], axis=0),
        coarse=coarse,
        refined=refined,
    )


def _norm_estimates(stage, config):
    if config.norm_source == "fourth":
        return np.maximum(stage.extra, 0.0)
    return np.sum(stage.coords**2, axis=0)


def estimate_pose(meas, conformation, position_est, config=PipelineConfig(), truth=None):
    """Rotation angles and translation from ranges and the position stage.

    Only the squared-norm estimates of ``position_est`` enter the pose
    system. ``truth`` is an optional ``(theta, t)`` pair for true-value
    initialization.
    """
    norms = _norm_estimates(position_est, config)
    systems = [
        build_pose_system(meas, conformation, n, norms[n], config.n0_floor)
        for n in range(conformation.N)
    ]
    return _two_block(systems, config, (config.phi_theta, config.phi_t), truth, "pose")


def _rotation_for_motion(config, theta_est, truth_pose):
    if config.q_source == "estimate":
        return rotation_matrix_small(theta_est)
    if config.q_source == "identity":
        return np.eye(3)
    if truth_pose is None:
        raise ValueError("q_source='truth' needs the true pose")
    return rotation_matrix_exact(truth_pose.theta)


def estimate_motion(
    meas,
    conformation,
    position_est,
    velocity_est,
    pose_est,
    config=PipelineConfig(),
    truth=None,
    truth_pose=None,
):
    """Angular and translational velocity from Doppler data and earlier stages."""
    theta = pose_est.first if isinstance(pose_est, TwoBlockStage) else np.asarray(pose_est)
    Q = _rotation_for_motion(config, theta, truth_pose)
    if config.norm_source == "fourth":
        inner = velocity_est.extra
    else:
        inner = np.sum(position_est.coords * velocity_est.coords, axis=0)
    systems = [
        build_motion_system(meas, conformation, n, inner[n], Q, n0_floor=config.n0_floor)
        for n in range(conformation.N)
    ]
    return _two_block(systems, config, (config.phi_omega, config.phi_t_dot), truth, "motion")


def run_stationary(
    truth, conformation, noise=NoiseModel(), config=PipelineConfig(), mfb=False, rng=None
):
    """Simulate ranges for pose ``truth`` and run positions then pose."""
    meas = simulate(conformation, truth, noise=noise, rng=rng)
    return estimate_stationary(meas, conformation, config, truth if mfb else None)


def estimate_stationary(meas, conformation, config=PipelineConfig(), mfb_truth=None):
    """Positions then pose from an existing measurement set.

    ``mfb_truth`` (a pose) starts every stage from the true values.
    """
    X_init = pose_init = None
    if mfb_truth is not None:
        X_init, _ = ground_truth_unknowns(conformation, mfb_truth)
        pose_init = (mfb_truth.theta, mfb_truth.t)
    pos = estimate_positions(meas, conformation, config, X_init)
    pose = estimate_pose(meas, conformation, pos, config, pose_init)
    return _stationary(pos, pose)


def _stationary(pos, pose):
    return StationaryEstimate(
        positions=pos.coords,
        norms=pos.extra,
        theta=pose.first,
        t=pose.second,
        theta_coarse=pose.first_coarse,
        diagnostics={
            "iterations": {"position": pos.iterations, "pose": pose.iterations},
            "position": pos,
            "pose": pose,
        },
    )


def run_moving(
    truth,
    motion,
    conformation,
    noise=NoiseModel(),
    config=PipelineConfig(),
    mfb=False,
    rng=None,
):
    """Simulate ranges and Doppler, then positions, velocities, pose and motion."""
    meas = simulate(conformation, truth, motion, noise=noise, rng=rng)
    return estimate_moving(
        meas, conformation, config, truth if mfb else None, motion if mfb else None, truth
    )


def estimate_moving(
    meas, conformation, config=PipelineConfig(), mfb_truth=None, mfb_motion=None, truth_pose=None
):
    X_init = Xd_init = pose_init = motion_init = None
    if mfb_truth is not None:
        X_init, Xd_init = ground_truth_unknowns(conformation, mfb_truth, mfb_motion)
        pose_init = (mfb_truth.theta, mfb_truth.t)
        motion_init = (mfb_motion.omega, mfb_motion.t_dot)
    pos = estimate_positions(meas, conformation, config, X_init)
    vel = estimate_velocities(meas, conformation, config, Xd_init)
    pose = estimate_pose(meas, conformation, pos, config, pose_init)
    mot = estimate_motion(
        meas, conformation, pos, vel, pose, config, motion_init, truth_pose=truth_pose
    )
    return MovingEstimate(
        stationary=_stationary(pos, pose),
        velocities=vel.coords,
        inner=vel.extra,
        omega=mot.first,
        t_dot=mot.second,
        omega_coarse=mot.first_coarse,
        diagnostics={
            "iterations": {"velocity": vel.iterations, "motion": mot.iterations},
            "velocity": vel,
            "motion": mot,
        },
    )

