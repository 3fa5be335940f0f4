"""Scalar-Gaussian belief propagation over a :class:`~rbl.measurement.LinearSystem`.

Every observation row ``m`` is a factor node and every unknown ``k`` a
variable node. Edge ``(m, k)`` carries a soft replica ``xhat[m, k]`` with
error variance ``psi[m, k]``. One iteration:

1. soft interference cancellation of the other unknowns from row ``m``,
2. conditional variance of the residual interference plus noise,
3. leave-one-out (extrinsic) combination over the other rows,
4. Gaussian-prior denoising,
5. damped replica update.

Two-block systems (rotation/translation, angular/translational velocity)
run the same recursion on the concatenated unknown vector; only the prior
differs per block. :func:`ic_refine` then removes the second block's
consensus from the observations and re-runs on the first block alone.
"""
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import GabpDivergenceError

__all__ = [
    "GabpConfig",
    "GabpState",
    "GabpResult",
    "linear_gabp",
    "bivariate_gabp",
    "ic_refine",
    "mfb_mode",
    "run_gabp",
]

PSI_FLOOR = 1e-12


@dataclass(frozen=True)
class GabpConfig:
    """Engine settings.

    ``prior_var`` and ``prior_mean`` are either a scalar applied to every
    unknown or a mapping from block label to a scalar or per-unknown array.
    ``init`` is ``None`` (zero replicas, ``psi`` = prior variance) or the
    values every replica starts from, as a flat array or a label mapping.
    ``tol = 0`` always runs ``j_max`` iterations.
    """

    rho: float = 0.5
    j_max: int = 30
    prior_var: object = 1.0
    prior_mean: object = 0.0
    tol: float = 1e-8
    init: object = None
    psi_floor: float = PSI_FLOOR

    def __post_init__(self):
        if not 0.0 <= self.rho <= 1.0:
            raise ValueError("damping factor must lie in [0, 1]")
        if self.j_max < 1:
            raise ValueError("j_max must be at least 1")
        if self.tol < 0:
            raise ValueError("tol must be non-negative")


@dataclass
class GabpState:
    """Per-edge soft replicas and their error variances, both ``M x K``."""

    xhat: np.ndarray
    psi: np.ndarray
    iteration: int = 0


@dataclass
class GabpResult:
    """Consensus readout of a GaBP run.

    ``mean``/``var`` combine all factor beliefs without the prior;
    ``posterior_mean``/``posterior_var`` additionally fold in the prior.
    ``trace[j]`` is the max relative consensus change at iteration ``j+1``
    and ``history[j]`` the consensus itself.
    """

    mean: np.ndarray
    var: np.ndarray
    posterior_mean: np.ndarray
    posterior_var: np.ndarray
    iterations: int
    trace: np.ndarray
    history: np.ndarray
    slices: dict
    state: GabpState
    ic: np.ndarray = field(repr=False, default=None)
    cond_var: np.ndarray = field(repr=False, default=None)

    def block(self, label, readout="consensus"):
        src = self.mean if readout == "consensus" else self.posterior_mean
        return src[self.slices[label]]

    def estimate(self, readout="consensus"):
        if readout == "consensus":
            return self.mean
        if readout == "posterior":
            return self.posterior_mean
        raise ValueError(f"unknown readout {readout!r}")


def _consensus(lam, eta, prior_mean, prior_var):
    with np.errstate(divide="ignore", invalid="ignore"):
        mean = np.where(lam > 0, eta / lam, prior_mean)
        var = np.where(lam > 0, 1.0 / lam, np.inf)
    post_prec = 1.0 / prior_var + lam
    post_mean = (prior_mean / prior_var + eta) / post_prec
    return mean, var, post_mean, 1.0 / post_prec


def run_gabp(system, config):
    """Run GaBP on all blocks of ``system`` jointly."""
    G = system.matrix
    y = system.y
    n0 = system.n0[:, None]
    M, K = G.shape
    prior_var = system.per_unknown(config.prior_var, "prior_var")
    prior_mean = system.per_unknown(config.prior_mean, "prior_mean")
    if np.any(prior_var <= 0):
        raise ValueError("prior variances must be positive")

    if config.init is None:
        xhat = np.zeros((M, K))
        psi = np.broadcast_to(prior_var, (M, K)).copy()
        previous = xhat.mean(axis=0)
    else:
        start = system.per_unknown(config.init, "init")
        xhat = np.broadcast_to(start, (M, K)).copy()
        psi = np.full((M, K), config.psi_floor)
        previous = start

    G2 = G * G
    inv_prior = 1.0 / prior_var
    prior_info = prior_mean * inv_prior
    rho = config.rho
    trace, history = [], []
    iterations = 0
    # non-finite values are caught explicitly below
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        for j in range(1, config.j_max + 1):
            gx = G * xhat
            ic = y[:, None] - gx.sum(axis=1, keepdims=True) + gx
            gpsi = G2 * psi
            # Clipping at n0 guards the total-minus-own subtraction.
            cond_var = np.maximum(gpsi.sum(axis=1, keepdims=True) - gpsi + n0, n0)
            prec = G2 / cond_var
            info = G * ic / cond_var

            # Extrinsic beliefs in information form: all rows except m.
            lam = prec.sum(axis=0)
            eta = info.sum(axis=0)
            lam_ext = np.maximum(lam - prec, 0.0)
            post_prec = inv_prior + lam_ext
            x_check = (prior_info + (eta - info)) / post_prec
            psi_check = 1.0 / post_prec

            mean = np.where(lam > 0, eta / lam, prior_mean)
            if not np.isfinite(x_check.sum() + psi_check.sum() + mean.sum()):
                raise GabpDivergenceError(j)

            xhat = rho * xhat + (1.0 - rho) * x_check
            psi = rho * psi + (1.0 - rho) * psi_check
            iterations = j

            change = float(np.max(np.abs(mean - previous) / (1.0 + np.abs(mean)))) if K else 0.0
            trace.append(change)
            history.append(mean)
            previous = mean
            if change < config.tol:
                break

    mean, var, post_mean, post_var = _consensus(lam, eta, prior_mean, prior_var)
    return GabpResult(
        mean=mean,
        var=var,
        posterior_mean=post_mean,
        posterior_var=post_var,
        iterations=iterations,
        trace=np.asarray(trace),
        history=np.asarray(history),
        slices=system.slices(),
        state=GabpState(xhat=xhat, psi=psi, iteration=iterations),
        ic=ic,
        cond_var=cond_var,
    )


def linear_gabp(system, config):
    """GaBP on a single-block system (sensor positions or velocities)."""
    if len(system.blocks) != 1:
        raise ValueError(f"linear_gabp needs one block, got {len(system.blocks)}")
    return run_gabp(system, config)


def bivariate_gabp(system, config):
    """GaBP on a two-block system with per-block priors."""
    if len(system.blocks) != 2:
        raise ValueError(f"bivariate_gabp needs two blocks, got {len(system.blocks)}")
    return run_gabp(system, config)


def _restrict(spec, label, sl):
    if isinstance(spec, dict):
        return {label: spec[label]}
    arr = np.asarray(spec, dtype=float)
    return arr if arr.ndim == 0 else arr[sl]


def ic_refine(system, coarse, config, readout="consensus"):
    """Cancel the second block's consensus and re-run GaBP on the first block.

    Returns the result for the first block only.
    """
    if len(system.blocks) != 2:
        raise ValueError("ic_refine needs a two-block system")
    first, second = system.labels
    sl = system.slices()
    t_hat = coarse.block(second, readout)
    cleaned = system.with_y(system.y - system.blocks[second] @ t_hat).select(first)
    sub = replace(
        config,
        prior_var=_restrict(config.prior_var, first, sl[first]),
        prior_mean=_restrict(config.prior_mean, first, sl[first]),
        init=None if config.init is None else _restrict(config.init, first, sl[first]),
    )
    return run_gabp(cleaned, sub)


def mfb_mode(config, truth):
    """Config whose replicas start at ``truth`` with near-zero error variance."""
    if isinstance(truth, dict):
        truth = {k: np.asarray(v, dtype=float) for k, v in truth.items()}
    else:
        truth = np.asarray(truth, dtype=float)
    return replace(config, init=truth)
