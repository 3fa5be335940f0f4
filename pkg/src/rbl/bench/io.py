"""CSV and manifest output."""
import csv
import json
from dataclasses import astuple
from pathlib import Path

from .. import __version__

SWEEP_COLUMNS = (
    "sigma",
    "estimator",
    "family",
    "rmse",
    "unit",
    "trials",
    "mean_iters",
    "mean_ms",
    "diverged",
)
CONVERGENCE_COLUMNS = ("sigma", "estimator", "stage", "iteration", "median_error", "unit")
RUNTIME_COLUMNS = ("stage", "M", "N", "median_ms", "repeats")


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _write(path, columns, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_fmt(v) for v in row])
    return path


def write_sweep_csv(records, path):
    return _write(path, SWEEP_COLUMNS, (astuple(r) for r in records))


def read_sweep_csv(path):
    with Path(path).open(newline="") as fh:
        rows = list(csv.DictReader(fh))
    for r in rows:
        for key in ("sigma", "rmse", "mean_iters", "mean_ms"):
            r[key] = float(r[key])
        r["trials"] = int(r["trials"])
        r["diverged"] = int(r["diverged"])
    return rows


def write_convergence_csv(result, path):
    from .harness import TRACES

    rows = []
    for (sigma, name, stage), trace in sorted(result.traces.items()):
        for j, value in enumerate(trace, start=1):
            rows.append((sigma, name, stage, j, float(value), TRACES[stage]))
    return _write(path, CONVERGENCE_COLUMNS, rows)


def write_runtime_csv(summary, path):
    rows = [(stage, summary.M, summary.N, ms, summary.repeats) for stage, ms in summary.median_ms.items()]
    rows.append(("position", 2 * summary.M, summary.N, summary.position_ms_2m, summary.repeats))
    return _write(path, RUNTIME_COLUMNS, rows)


def write_manifest(config, path, command, extra=None):
    """Resolved configuration as sorted JSON, so identical runs give identical files."""
    payload = {
        "command": command,
        "version": __version__,
        "config": config.as_dict(),
        "pipeline": {k: v for k, v in vars(config.pipeline()).items()},
    }
    if extra:
        payload.update(extra)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True, default=str) + "\n")
    return path
