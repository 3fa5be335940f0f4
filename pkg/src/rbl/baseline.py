"""Closed-form least-squares solvers on the same linear systems as GaBP.

These serve both as comparison baselines for the benchmark and as oracles
for the message-passing engine.
"""
from dataclasses import dataclass

import numpy as np

from .errors import SingularSystemError

__all__ = ["SolveReport", "ls_solve", "wls_solve", "ridge_solve"]


@dataclass(frozen=True)
class SolveReport:
    estimate: np.ndarray
    residual_norm: float
    condition: float
    slices: dict

    def block(self, label):
        return self.estimate[self.slices[label]]


def _spd_solve(N, b):
    try:
        L = np.linalg.cholesky(N)
    except np.linalg.LinAlgError as exc:
        raise SingularSystemError("normal equations are not positive definite") from exc
    return np.linalg.solve(L.T, np.linalg.solve(L, b))


def _solve(system, weights, reg=None, reg_target=None):
    B = system.matrix
    Bw = B * weights[:, None]
    N = B.T @ Bw
    rhs = Bw.T @ system.y
    if reg is not None:
        N = N + np.diag(reg)
        rhs = rhs + reg * reg_target
    elif np.linalg.matrix_rank(N) < B.shape[1]:
        raise SingularSystemError(
            f"system matrix has rank {np.linalg.matrix_rank(B)} < {B.shape[1]} unknowns"
        )
    x = _spd_solve(N, rhs)
    residual = system.y - B @ x
    return SolveReport(
        estimate=x,
        residual_norm=float(np.linalg.norm(residual)),
        condition=float(np.linalg.cond(N)),
        slices=system.slices(),
    )


def ls_solve(system):
    """Minimize ``|y - B x|^2`` jointly over all blocks."""
    return _solve(system, np.ones(system.num_rows))


def wls_solve(system):
    """Minimize ``sum_m (y_m - (B x)_m)^2 / n0_m``."""
    return _solve(system, 1.0 / system.n0)


def ridge_solve(system, prior_var, prior_mean=0.0):
    """Gaussian-prior MAP estimate (posterior mean) with noise powers ``n0``.

    ``prior_var``/``prior_mean`` are scalars, per-unknown arrays, or mappings
    from block label to either.
    """
    var = system.per_unknown(prior_var, "prior_var")
    mean = system.per_unknown(prior_mean, "prior_mean")
    if np.any(var <= 0):
        raise ValueError("prior variances must be positive")
    return _solve(system, 1.0 / system.n0, reg=1.0 / var, reg_target=mean)
