"""Monte-Carlo sweeps, convergence traces and runtime measurements."""
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from ..errors import GabpDivergenceError
from ..geometry import Conformation, MotionParams, PoseParams
from ..measurement import NoiseModel, ground_truth_unknowns, simulate
from ..pipeline import (
    estimate_motion,
    estimate_moving,
    estimate_pose,
    estimate_positions,
    estimate_stationary,
    estimate_velocities,
)

__all__ = [
    "FAMILIES",
    "TRACES",
    "RmseRecord",
    "ConvergenceResult",
    "RuntimeSummary",
    "rmse",
    "trial_rng",
    "draw_truth",
    "run_trial",
    "run_sweep",
    "run_convergence",
    "run_runtime",
]

FAMILIES = {
    "position": "m",
    "translation": "m",
    "rotation": "rad",
    "velocity": "m/s",
    "translational-velocity": "m/s",
    "angular-velocity": "rad/s",
}
STATIONARY_FAMILIES = ("position", "translation", "rotation")

# per-iteration error traces: stage name -> unit
TRACES = {
    "position": "m",
    "pose": "rad|m",
    "pose-refine": "rad",
    "velocity": "m/s",
    "motion": "rad/s|m/s",
    "motion-refine": "rad/s",
}

MAX_ANGLE = np.deg2rad(20.0)


@dataclass(frozen=True)
class RmseRecord:
    sigma: float
    estimator: str
    family: str
    rmse: float
    unit: str
    trials: int
    mean_iters: float
    mean_ms: float
    diverged: int


def rmse(estimates, truths):
    """``sqrt(mean_i |x_i - x_i^true|^2)`` over trials ``i``."""
    est = np.asarray(estimates, dtype=float)
    tru = np.asarray(truths, dtype=float)
    if est.shape != tru.shape:
        raise ValueError(f"shape mismatch: {est.shape} vs {tru.shape}")
    if est.ndim == 0 or est.shape[0] == 0:
        raise ValueError("need at least one trial")
    err = (est - tru).reshape(est.shape[0], -1)
    return float(np.sqrt(np.mean(np.sum(err**2, axis=1))))


def trial_rng(seed, trial):
    """Generator for one trial; independent of the noise level, so trials pair across sigma."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(trial)]))


def draw_truth(rng, config):
    """Zero-mean Gaussian rigid-body parameters; angles are clipped to +-20 deg."""
    s_theta, s_t, s_omega, s_tdot = config.prior_std()
    theta = np.clip(s_theta * rng.standard_normal(3), -MAX_ANGLE, MAX_ANGLE)
    pose = PoseParams(theta, s_t * rng.standard_normal(3))
    if not config.moving:
        return pose, None
    motion = MotionParams(s_omega * rng.standard_normal(3), s_tdot * rng.standard_normal(3))
    return pose, motion


def _total_iterations(est):
    its = dict(est.diagnostics["iterations"])
    if hasattr(est, "stationary"):
        its.update(est.stationary.diagnostics["iterations"])
    total = 0
    for v in its.values():
        total += int(np.sum(v))
    return total


def _squared_errors(est, pose, motion, X, X_dot):
    st = est.stationary if motion is not None else est
    out = {
        "position": float(np.mean(np.sum((st.positions - X[:3]) ** 2, axis=0))),
        "translation": float(np.sum((st.t - pose.t) ** 2)),
        "rotation": float(np.sum((st.theta - pose.theta) ** 2)),
    }
    if motion is not None:
        out["velocity"] = float(np.mean(np.sum((est.velocities - X_dot[:3]) ** 2, axis=0)))
        out["translational-velocity"] = float(np.sum((est.t_dot - motion.t_dot) ** 2))
        out["angular-velocity"] = float(np.sum((est.omega - motion.omega) ** 2))
    return out


def run_trial(config, conformation, sigma, trial):
    """One paired trial: a single truth/noise draw shared by every estimator.

    Returns ``{estimator: {"sq": {family: squared error}, "iters", "ms", "diverged"}}``.
    """
    rng = trial_rng(config.seed, trial)
    pose, motion = draw_truth(rng, config)
    noise = NoiseModel.coupled(sigma, config.coupling)
    meas = simulate(conformation, pose, motion, noise=noise, rng=rng)
    X, X_dot = ground_truth_unknowns(conformation, pose, motion)
    out = {}
    for name in config.estimators:
        pcfg = config.pipeline(name)
        mfb = name == "mfb"
        t0 = time.perf_counter()
        try:
            if motion is None:
                est = estimate_stationary(meas, conformation, pcfg, pose if mfb else None)
            else:
                est = estimate_moving(
                    meas,
                    conformation,
                    pcfg,
                    pose if mfb else None,
                    motion if mfb else None,
                    truth_pose=pose,
                )
        except GabpDivergenceError:
            out[name] = {"sq": None, "iters": 0, "ms": 0.0, "diverged": True}
            continue
        ms = 1e3 * (time.perf_counter() - t0)
        out[name] = {
            "sq": _squared_errors(est, pose, motion, X, X_dot),
            "iters": _total_iterations(est),
            "ms": ms,
            "diverged": False,
        }
    return out


def _trial_job(args):
    config, conformation, sigma, trial = args
    return run_trial(config, conformation, sigma, trial)


def _map(fn, jobs, workers):
    if workers <= 1:
        return [fn(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, jobs, chunksize=max(1, len(jobs) // (4 * workers))))


def run_sweep(config, conformation=None):
    """RMSE per (sigma, estimator, family) over ``config.trials`` paired trials.

    Diverged trials are excluded from that estimator's RMSE and counted.
    Results do not depend on ``config.workers``.
    """
    conformation = config.conformation() if conformation is None else conformation
    families = tuple(FAMILIES) if config.moving else STATIONARY_FAMILIES
    records = []
    for sigma in config.sigmas:
        jobs = [(config, conformation, sigma, e) for e in range(config.trials)]
        results = _map(_trial_job, jobs, config.workers)
        for name in config.estimators:
            ok = [r[name] for r in results if not r[name]["diverged"]]
            diverged = len(results) - len(ok)
            iters = float(np.mean([r["iters"] for r in ok])) if ok else float("nan")
            ms = float(np.mean([r["ms"] for r in ok])) if ok and config.timing else float("nan")
            for fam in families:
                value = float(np.sqrt(np.mean([r["sq"][fam] for r in ok]))) if ok else float("nan")
                records.append(
                    RmseRecord(sigma, name, fam, value, FAMILIES[fam], len(ok), iters, ms, diverged)
                )
    return records


@dataclass
class ConvergenceResult:
    """Median per-iteration error traces, keyed by ``(sigma, estimator, stage)``."""

    traces: dict
    diverged: dict
    trials: int

    def trace(self, sigma, stage, estimator="gabp"):
        return self.traces[(float(sigma), estimator, stage)]


def _pad(history, j_max):
    h = np.asarray(history, dtype=float)
    if len(h) >= j_max:
        return h[:j_max]
    # early stop: the estimate no longer changes
    return np.concatenate([h, np.repeat(h[-1:], j_max - len(h), axis=0)])


def _stage_traces(est, pose, motion, X, X_dot, j_max):
    st = est.stationary if motion is not None else est
    pos = st.diagnostics["position"]
    pz = st.diagnostics["pose"]
    out = {}
    err = [np.sum((_pad(r.history, j_max)[:, :3] - X[:3, n]) ** 2, axis=1) for n, r in enumerate(pos.results)]
    out["position"] = np.sqrt(np.mean(err, axis=0))
    truth = np.concatenate([pose.theta, pose.t])
    out["pose"] = np.linalg.norm(_pad(pz.coarse[0].history, j_max) - truth, axis=1)
    out["pose-refine"] = np.linalg.norm(_pad(pz.refined[0].history, j_max) - pose.theta, axis=1)
    if motion is not None:
        vel = est.diagnostics["velocity"]
        mot = est.diagnostics["motion"]
        err = [
            np.sum((_pad(r.history, j_max)[:, :3] - X_dot[:3, n]) ** 2, axis=1)
            for n, r in enumerate(vel.results)
        ]
        out["velocity"] = np.sqrt(np.mean(err, axis=0))
        truth = np.concatenate([motion.omega, motion.t_dot])
        out["motion"] = np.linalg.norm(_pad(mot.coarse[0].history, j_max) - truth, axis=1)
        out["motion-refine"] = np.linalg.norm(
            _pad(mot.refined[0].history, j_max) - motion.omega, axis=1
        )
    return out


def _convergence_job(args):
    config, conformation, sigma, trial = args
    rng = trial_rng(config.seed, trial)
    pose, motion = draw_truth(rng, config)
    meas = simulate(conformation, pose, motion, NoiseModel.coupled(sigma, config.coupling), rng=rng)
    X, X_dot = ground_truth_unknowns(conformation, pose, motion)
    out = {}
    for name in config.estimators:
        if name not in ("gabp", "mfb"):
            continue
        pcfg = config.pipeline(name)
        mfb = name == "mfb"
        # joint stacking keeps a single trace per two-block stage
        pcfg = replace(pcfg, stacking="joint")
        try:
            if motion is None:
                est = estimate_stationary(meas, conformation, pcfg, pose if mfb else None)
            else:
                est = estimate_moving(
                    meas, conformation, pcfg, pose if mfb else None, motion if mfb else None, pose
                )
        except GabpDivergenceError:
            out[name] = None
            continue
        out[name] = _stage_traces(est, pose, motion, X, X_dot, config.j_max)
    return out


def run_convergence(config, sigmas=None, conformation=None):
    """Median (over trials) per-iteration estimate error for every GaBP stage.

    Only the ``gabp`` and ``mfb`` estimators produce traces. Traces have
    length ``j_max``; runs that stopped early are padded with their final value.
    """
    conformation = config.conformation() if conformation is None else conformation
    sigmas = config.sigmas if sigmas is None else tuple(float(s) for s in sigmas)
    traces, diverged = {}, {}
    for sigma in sigmas:
        jobs = [(config, conformation, sigma, e) for e in range(config.trials)]
        results = _map(_convergence_job, jobs, config.workers)
        for name in config.estimators:
            if name not in ("gabp", "mfb"):
                continue
            ok = [r[name] for r in results if r[name] is not None]
            diverged[(sigma, name)] = len(results) - len(ok)
            if not ok:
                continue
            for stage in ok[0]:
                traces[(sigma, name, stage)] = np.median([r[stage] for r in ok], axis=0)
    return ConvergenceResult(traces=traces, diverged=diverged, trials=config.trials)


@dataclass
class RuntimeSummary:
    """Median wall time (ms) per stage invocation, plus the anchor-doubling ratio."""

    median_ms: dict
    M: int
    N: int
    repeats: int
    position_ms_2m: float

    @property
    def doubling_ratio(self):
        return self.position_ms_2m / self.median_ms["position"]


def _doubled_anchors(conformation, seed=0):
    """Append M extra anchors drawn uniformly in the bounding box of the original ones."""
    A = conformation.A
    rng = np.random.default_rng(seed)
    lo, hi = A.min(axis=1), A.max(axis=1)
    extra = lo[:, None] + (hi - lo)[:, None] * rng.random((3, A.shape[1]))
    return Conformation(conformation.C, np.hstack([A, extra]))


def _median_ms(fn, repeats):
    fn()  # warm-up
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(1e3 * (time.perf_counter() - t0))
    return float(np.median(times))


def run_runtime(config, repeats=20, sigma=0.1, conformation=None):
    """Time each of the four stages on a single moving-body measurement set."""
    conformation = config.conformation() if conformation is None else conformation
    pcfg = config.pipeline("gabp")
    rng = trial_rng(config.seed, 0)
    moving = replace(config, scenario="moving")
    pose, motion = draw_truth(rng, moving)
    meas = simulate(conformation, pose, motion, NoiseModel.coupled(sigma, config.coupling), rng=rng)

    pos = estimate_positions(meas, conformation, pcfg)
    vel = estimate_velocities(meas, conformation, pcfg)
    pz = estimate_pose(meas, conformation, pos, pcfg)
    medians = {
        "position": _median_ms(lambda: estimate_positions(meas, conformation, pcfg), repeats),
        "pose": _median_ms(lambda: estimate_pose(meas, conformation, pos, pcfg), repeats),
        "velocity": _median_ms(lambda: estimate_velocities(meas, conformation, pcfg), repeats),
        "motion": _median_ms(
            lambda: estimate_motion(meas, conformation, pos, vel, pz, pcfg), repeats
        ),
    }
    big = _doubled_anchors(conformation, config.seed)
    meas2 = simulate(big, pose, noise=NoiseModel.coupled(sigma, config.coupling), rng=trial_rng(config.seed, 1))
    ms2 = _median_ms(lambda: estimate_positions(meas2, big, pcfg), repeats)
    return RuntimeSummary(
        median_ms=medians, M=conformation.M, N=conformation.N, repeats=repeats, position_ms_2m=ms2
    )
