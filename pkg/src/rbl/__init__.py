"""Gaussian belief propagation estimators for 6D rigid body localization."""
__version__ = "0.1.0"

from .baseline import SolveReport, ls_solve, ridge_solve, wls_solve
from .errors import DegenerateGeometryError, GabpDivergenceError, SingularSystemError
from .gabp import GabpConfig, GabpResult, GabpState, bivariate_gabp, ic_refine, linear_gabp, mfb_mode
from .geometry import (
    Conformation,
    MotionParams,
    PoseParams,
    rotation_matrix_exact,
    rotation_matrix_small,
    skew,
)
from .measurement import (
    LinearSystem,
    MeasurementSet,
    NoiseModel,
    build_motion_system,
    build_pose_system,
    build_position_system,
    build_velocity_system,
    simulate,
)
from .pipeline import (
    MovingEstimate,
    PipelineConfig,
    StationaryEstimate,
    estimate_motion,
    estimate_pose,
    estimate_positions,
    estimate_velocities,
    run_moving,
    run_stationary,
)
