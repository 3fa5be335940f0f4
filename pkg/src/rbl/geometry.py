"""Rigid body kinematics: rotations, skew operators and their vectorized forms.

All angles are radians. Vectorization is column-major (Fortran order), so
``vec(X @ Y @ Z) == np.kron(Z.T, X) @ vec(Y)``.
"""
from dataclasses import dataclass

import numpy as np

__all__ = [
    "PoseParams",
    "MotionParams",
    "Conformation",
    "rotation_matrix_exact",
    "rotation_matrix_small",
    "skew",
    "vec",
    "unvec",
    "vec_rotation_basis",
    "vec_skew_basis",
    "transform_sensor",
    "transform_conformation",
    "sensor_velocity",
]


def _vec3(v, name):
    v = np.asarray(v, dtype=float).reshape(-1)
    if v.shape != (3,):
        raise ValueError(f"{name} must have 3 entries, got shape {v.shape}")
    return v


@dataclass(frozen=True)
class PoseParams:
    """Rotation angles (roll, pitch, yaw) in rad and translation in m."""

    theta: np.ndarray
    t: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "theta", _vec3(self.theta, "theta"))
        object.__setattr__(self, "t", _vec3(self.t, "t"))
        if not (np.all(np.isfinite(self.theta)) and np.all(np.isfinite(self.t))):
            raise ValueError("pose parameters must be finite")
        if np.any(np.abs(self.theta) > np.pi):
            raise ValueError("rotation angles must lie in [-pi, pi]")

    @classmethod
    def identity(cls):
        return cls(np.zeros(3), np.zeros(3))


@dataclass(frozen=True)
class MotionParams:
    """Angular velocity (rad/s) and translational velocity (m/s)."""

    omega: np.ndarray
    t_dot: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "omega", _vec3(self.omega, "omega"))
        object.__setattr__(self, "t_dot", _vec3(self.t_dot, "t_dot"))
        if not (np.all(np.isfinite(self.omega)) and np.all(np.isfinite(self.t_dot))):
            raise ValueError("motion parameters must be finite")

    @classmethod
    def still(cls):
        return cls(np.zeros(3), np.zeros(3))


@dataclass(frozen=True)
class Conformation:
    """Body-frame sensor layout ``C`` (3 x N) and anchor positions ``A`` (3 x M), in m."""

    C: np.ndarray
    A: np.ndarray

    def __post_init__(self):
        C = np.atleast_2d(np.asarray(self.C, dtype=float))
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        if C.shape[0] != 3 or C.shape[1] < 1:
            raise ValueError(f"C must be 3 x N with N >= 1, got {C.shape}")
        if A.shape[0] != 3 or A.shape[1] < 1:
            raise ValueError(f"A must be 3 x M with M >= 1, got {A.shape}")
        if not (np.all(np.isfinite(C)) and np.all(np.isfinite(A))):
            raise ValueError("conformation entries must be finite")
        C.flags.writeable = False
        A.flags.writeable = False
        object.__setattr__(self, "C", C)
        object.__setattr__(self, "A", A)

    @property
    def N(self):
        return self.C.shape[1]

    @property
    def M(self):
        return self.A.shape[1]

    def check_positioning(self):
        """Raise ``ValueError`` unless the anchors support range-based positioning.

        Needs at least 5 anchors and anchors that are not coplanar, i.e. the
        matrix with rows ``[-2 a_m^T, 1]`` has full column rank.
        """
        if self.M < 5:
            raise ValueError(f"position estimation needs M >= 5 anchors, got {self.M}")
        G = np.column_stack([-2.0 * self.A.T, np.ones(self.M)])
        if np.linalg.matrix_rank(G) < 4:
            raise ValueError("anchors are coplanar; positioning system is rank deficient")


def rotation_matrix_exact(theta):
    """Return ``Qz(theta_z) @ Qy(theta_y) @ Qx(theta_x)``."""
    tx, ty, tz = _vec3(theta, "theta")
    cx, sx = np.cos(tx), np.sin(tx)
    cy, sy = np.cos(ty), np.sin(ty)
    cz, sz = np.cos(tz), np.sin(tz)
    Qz = np.array([[cz, -sz, 0.0], [sz, cz, 0.0], [0.0, 0.0, 1.0]])
    Qy = np.array([[cy, 0.0, sy], [0.0, 1.0, 0.0], [-sy, 0.0, cy]])
    Qx = np.array([[1.0, 0.0, 0.0], [0.0, cx, -sx], [0.0, sx, cx]])
    return Qz @ Qy @ Qx


def skew(omega):
    """Cross-product matrix: ``skew(w) @ v == np.cross(w, v)``."""
    w1, w2, w3 = _vec3(omega, "omega")
    return np.array([[0.0, -w3, w2], [w3, 0.0, -w1], [-w2, w1, 0.0]])


def rotation_matrix_small(theta):
    """First-order expansion of :func:`rotation_matrix_exact` about zero.

    ``I + skew(theta)``: ones on the diagonal and the angles off-diagonal,
    e.g. entry ``[0, 1]`` is ``-theta_z``. Accurate to second order in the
    angles, which in practice limits it to roughly 20 degrees.
    """
    return np.eye(3) + skew(theta)


def vec(X):
    """Column-major vectorization."""
    return np.asarray(X, dtype=float).reshape(-1, order="F")


def unvec(v, shape=(3, 3)):
    return np.asarray(v, dtype=float).reshape(shape, order="F")


# vec(skew(w)) = PHI @ w, column-major.
_PHI = np.array(
    [
        [0, 0, 0, 0, 0, 1, 0, -1, 0],
        [0, 0, -1, 0, 0, 0, 1, 0, 0],
        [0, 1, 0, -1, 0, 0, 0, 0, 0],
    ],
    dtype=float,
).T
_GAMMA = vec(np.eye(3))


def vec_rotation_basis():
    """Return ``(gamma, L)`` with ``vec(rotation_matrix_small(theta)) == gamma + L @ theta``."""
    # Small-angle Q is I + skew(theta), so L coincides with the skew basis.
    return _GAMMA.copy(), _PHI.copy()


def vec_skew_basis():
    """Return ``Phi`` (9 x 3) with ``vec(skew(omega)) == Phi @ omega``."""
    return _PHI.copy()


def _rotation(pose, exact):
    return rotation_matrix_exact(pose.theta) if exact else rotation_matrix_small(pose.theta)


def transform_sensor(pose, c_n, exact=True):
    """Global position ``Q c_n + t`` of a body-frame point."""
    return _rotation(pose, exact) @ _vec3(c_n, "c_n") + pose.t


def transform_conformation(pose, C, exact=True):
    """Apply :func:`transform_sensor` to every column of ``C`` (3 x N)."""
    C = np.asarray(C, dtype=float)
    return _rotation(pose, exact) @ C + pose.t[:, None]


def sensor_velocity(pose, motion, c_n, exact=True):
    """Velocity ``skew(omega) Q c_n + t_dot`` of a body-frame point."""
    Qc = _rotation(pose, exact) @ np.asarray(c_n, dtype=float)
    if Qc.ndim == 2:
        return skew(motion.omega) @ Qc + motion.t_dot[:, None]
    return skew(motion.omega) @ Qc + motion.t_dot
