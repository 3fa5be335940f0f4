"""Synthetic range/Doppler measurements and the linear systems built from them.

Four systems feed the GaBP engine:

* position  ``y = G [s; |s|^2]`` from squared ranges,
* velocity  ``y_dot = G_dot [s_dot; s^T s_dot]`` from range-Doppler products,
* pose      ``z = H_theta theta + H_t t`` (small-angle rotation),
* motion    ``u = B_omega omega + B_tdot t_dot``.

Each row carries the power of its linearized composite noise in ``n0``.
"""
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateGeometryError
from .geometry import (
    sensor_velocity,
    transform_conformation,
    vec_rotation_basis,
    vec_skew_basis,
)

__all__ = [
    "NoiseModel",
    "MeasurementSet",
    "LinearSystem",
    "true_range",
    "true_doppler",
    "simulate",
    "build_position_system",
    "build_velocity_system",
    "build_pose_system",
    "build_motion_system",
    "ground_truth_unknowns",
    "DEFAULT_COUPLING",
    "N0_FLOOR",
]

# Doppler noise std relative to range noise std (sigma_eps = 10 sigma_w).
DEFAULT_COUPLING = 10.0
# Keeps composite noise powers strictly positive in noiseless runs.
N0_FLOOR = 1e-12


@dataclass(frozen=True)
class NoiseModel:
    sigma_w: float = 0.0
    sigma_eps: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.sigma_w < 0 or self.sigma_eps < 0:
            raise ValueError("noise standard deviations must be non-negative")

    @classmethod
    def coupled(cls, sigma, coupling=DEFAULT_COUPLING, seed=0):
        """Single noise level: ``sigma_w = sigma`` and ``sigma_eps = coupling * sigma``."""
        return cls(sigma_w=float(sigma), sigma_eps=float(coupling * sigma), seed=seed)


@dataclass(frozen=True)
class MeasurementSet:
    """Noisy ranges (M x N, m) and optional range rates (M x N, m/s)."""

    ranges: np.ndarray
    noise: NoiseModel
    dopplers: np.ndarray | None = None

    @property
    def has_doppler(self):
        return self.dopplers is not None


@dataclass(frozen=True)
class LinearSystem:
    """``y = sum_b blocks[b] @ x_b + noise`` with per-row noise power ``n0``.

    ``blocks`` maps a label (``"x"``, ``"theta"``, ``"t"``, ...) to an
    ``M x K_b`` channel matrix; insertion order fixes the unknown ordering.
    """

    y: np.ndarray
    blocks: dict
    n0: np.ndarray
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        y = np.asarray(self.y, dtype=float).reshape(-1)
        n0 = np.broadcast_to(np.asarray(self.n0, dtype=float), y.shape).copy()
        blocks = {}
        for label, B in self.blocks.items():
            B = np.atleast_2d(np.asarray(B, dtype=float))
            if B.shape[0] != y.shape[0]:
                raise ValueError(f"block {label!r} has {B.shape[0]} rows, expected {y.shape[0]}")
            blocks[label] = B
        if not blocks:
            raise ValueError("a linear system needs at least one block")
        if np.any(n0 <= 0):
            raise ValueError("composite noise powers must be strictly positive")
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "n0", n0)
        object.__setattr__(self, "blocks", blocks)

    @property
    def labels(self):
        return tuple(self.blocks)

    @property
    def matrix(self):
        return np.hstack(list(self.blocks.values()))

    @property
    def num_rows(self):
        return self.y.shape[0]

    @property
    def num_unknowns(self):
        return sum(B.shape[1] for B in self.blocks.values())

    def slices(self):
        out, start = {}, 0
        for label, B in self.blocks.items():
            out[label] = slice(start, start + B.shape[1])
            start += B.shape[1]
        return out

    def per_unknown(self, spec, what="value"):
        """Expand a scalar, flat array or ``{label: value}`` mapping to one entry per unknown."""
        if isinstance(spec, dict):
            parts = []
            for label, B in self.blocks.items():
                if label not in spec:
                    raise KeyError(f"{what} has no entry for block {label!r}")
                parts.append(np.broadcast_to(np.asarray(spec[label], dtype=float), (B.shape[1],)))
            return np.concatenate(parts)
        arr = np.asarray(spec, dtype=float)
        if arr.ndim == 0:
            return np.full(self.num_unknowns, float(arr))
        if arr.shape != (self.num_unknowns,):
            raise ValueError(f"{what} has shape {arr.shape}, expected ({self.num_unknowns},)")
        return arr.copy()

    def apply(self, x):
        """Noiseless observation for unknowns ``x`` (flat array or label mapping)."""
        if isinstance(x, dict):
            return sum(B @ np.asarray(x[label], dtype=float) for label, B in self.blocks.items())
        return self.matrix @ np.asarray(x, dtype=float)

    def select(self, label):
        """Single-block system keeping only ``label``'s columns."""
        return LinearSystem(self.y, {label: self.blocks[label]}, self.n0, dict(self.meta))

    def with_y(self, y):
        return LinearSystem(y, self.blocks, self.n0, dict(self.meta))

    @classmethod
    def stack(cls, systems):
        """Concatenate the rows of systems sharing the same block labels."""
        systems = list(systems)
        labels = systems[0].labels
        if any(s.labels != labels for s in systems):
            raise ValueError("cannot stack systems with different blocks")
        return cls(
            np.concatenate([s.y for s in systems]),
            {lb: np.vstack([s.blocks[lb] for s in systems]) for lb in labels},
            np.concatenate([s.n0 for s in systems]),
        )


def true_range(a_m, s_n):
    return float(np.linalg.norm(np.asarray(a_m, dtype=float) - np.asarray(s_n, dtype=float)))


def true_doppler(a_m, s_n, s_dot_n):
    """Range rate ``(s - a)^T s_dot / |s - a|``."""
    diff = np.asarray(s_n, dtype=float) - np.asarray(a_m, dtype=float)
    d = np.linalg.norm(diff)
    if d == 0.0:
        raise DegenerateGeometryError("sensor coincides with anchor")
    return float(diff @ np.asarray(s_dot_n, dtype=float) / d)


def _pairwise(A, S):
    """Difference vectors ``s_n - a_m`` as an (M, N, 3) array."""
    return S.T[None, :, :] - A.T[:, None, :]


def simulate(conformation, pose, motion=None, noise=NoiseModel(), rng=None, exact=True):
    """Draw noisy ranges (and Doppler range rates if ``motion`` is given).

    Sensors are placed with the exact rotation unless ``exact=False``
    (first-order rotation, matching the estimator's model). ``rng``
    overrides the generator seeded from ``noise.seed``.
    """
    rng = np.random.default_rng(noise.seed) if rng is None else rng
    S = transform_conformation(pose, conformation.C, exact=exact)
    diff = _pairwise(conformation.A, S)
    d = np.linalg.norm(diff, axis=-1)
    M, N = d.shape
    ranges = d + noise.sigma_w * rng.standard_normal((M, N))
    dopplers = None
    if motion is not None:
        if np.any(d == 0.0):
            raise DegenerateGeometryError("sensor coincides with anchor")
        S_dot = sensor_velocity(pose, motion, conformation.C, exact=exact)
        nu = np.einsum("mnk,kn->mn", diff, S_dot) / d
        dopplers = nu + noise.sigma_eps * rng.standard_normal((M, N))
    return MeasurementSet(ranges=ranges, noise=noise, dopplers=dopplers)


def _range_n0(d_tilde, noise, floor):
    return np.maximum(4.0 * d_tilde**2 * noise.sigma_w**2, floor)


def _doppler_n0(d_tilde, nu_tilde, noise, floor):
    return np.maximum(nu_tilde**2 * noise.sigma_w**2 + d_tilde**2 * noise.sigma_eps**2, floor)


def _require_doppler(meas):
    if not meas.has_doppler:
        raise ValueError("measurement set has no Doppler data")


def build_position_system(meas, conformation, n, n0_floor=N0_FLOOR):
    """Squared-range system for sensor ``n``: unknowns ``[s_n; |s_n|^2]``."""
    A = conformation.A
    d = meas.ranges[:, n]
    y = d**2 - np.sum(A**2, axis=0)
    G = np.column_stack([-2.0 * A.T, np.ones(A.shape[1])])
    return LinearSystem(y, {"x": G}, _range_n0(d, meas.noise, n0_floor), {"sensor": n})


def build_velocity_system(meas, conformation, n, n0_floor=N0_FLOOR):
    """Range-Doppler system for sensor ``n``: unknowns ``[s_dot_n; s_n^T s_dot_n]``."""
    _require_doppler(meas)
    A = conformation.A
    d = meas.ranges[:, n]
    nu = meas.dopplers[:, n]
    G_dot = np.column_stack([-A.T, np.ones(A.shape[1])])
    return LinearSystem(
        d * nu, {"x": G_dot}, _doppler_n0(d, nu, meas.noise, n0_floor), {"sensor": n}
    )


def build_pose_system(meas, conformation, n, s_norm_sq_est, n0_floor=N0_FLOOR):
    """Small-angle pose system for sensor ``n``: blocks ``theta`` and ``t``.

    ``s_norm_sq_est`` is the estimate of ``|s_n|^2`` in m^2.
    """
    if s_norm_sq_est < 0:
        raise ValueError("squared norm estimate must be non-negative")
    gamma, L = vec_rotation_basis()
    A = conformation.A
    c = conformation.C[:, n]
    d = meas.ranges[:, n]
    # Row m of K is kron(c^T, a_m^T).
    K = np.kron(c[None, :], A.T)
    z = d**2 - np.sum(A**2, axis=0) - s_norm_sq_est + 2.0 * K @ gamma
    blocks = {"theta": -2.0 * K @ L, "t": -2.0 * A.T}
    return LinearSystem(z, blocks, _range_n0(d, meas.noise, n0_floor), {"sensor": n})


def build_motion_system(
    meas,
    conformation,
    n,
    s_dot_inner_est=None,
    Q_est=None,
    s_est=None,
    s_dot_est=None,
    n0_floor=N0_FLOOR,
):
    """Motion system for sensor ``n``: blocks ``omega`` and ``t_dot``.

    ``s_dot_inner_est`` estimates ``s_n^T s_dot_n``; when omitted it is formed
    from ``s_est`` and ``s_dot_est``. ``Q_est`` defaults to the identity.
    """
    _require_doppler(meas)
    if s_dot_inner_est is None:
        if s_est is None or s_dot_est is None:
            raise ValueError("need s_dot_inner_est or both s_est and s_dot_est")
        s_dot_inner_est = float(np.dot(s_est, s_dot_est))
    Q = np.eye(3) if Q_est is None else np.asarray(Q_est, dtype=float)
    Phi = vec_skew_basis()
    A = conformation.A
    Qc = Q @ conformation.C[:, n]
    d = meas.ranges[:, n]
    nu = meas.dopplers[:, n]
    u = d * nu - s_dot_inner_est
    blocks = {"omega": -np.kron(Qc[None, :], A.T) @ Phi, "t_dot": -A.T}
    return LinearSystem(u, blocks, _doppler_n0(d, nu, meas.noise, n0_floor), {"sensor": n})


def ground_truth_unknowns(conformation, pose, motion=None, exact=True):
    """Per-sensor truths for the position and velocity systems.

    Returns ``(X, X_dot)`` with ``X[:, n] = [s_n; |s_n|^2]`` and
    ``X_dot[:, n] = [s_dot_n; s_n^T s_dot_n]`` (``None`` without motion).
    """
    S = transform_conformation(pose, conformation.C, exact=exact)
    X = np.vstack([S, np.sum(S**2, axis=0)])
    if motion is None:
        return X, None
    S_dot = sensor_velocity(pose, motion, conformation.C, exact=exact)
    X_dot = np.vstack([S_dot, np.sum(S * S_dot, axis=0)])
    return X, X_dot

