class DegenerateGeometryError(ValueError):
    """A sensor coincides with an anchor, so the line-of-sight direction is undefined."""


class SingularSystemError(ValueError):
    """Normal equations are rank deficient."""


class GabpDivergenceError(RuntimeError):
    """A message became non-finite during GaBP iterations."""

    def __init__(self, iteration, sensor=None, stage=None):
        self.iteration = iteration
        self.sensor = sensor
        self.stage = stage
        where = []
        if stage is not None:
            where.append(f"stage {stage}")
        if sensor is not None:
            where.append(f"sensor {sensor}")
        suffix = f" ({', '.join(where)})" if where else ""
        super().__init__(f"non-finite GaBP message at iteration {iteration}{suffix}")

    def located(self, sensor=None, stage=None):
        return GabpDivergenceError(
            self.iteration,
            sensor=self.sensor if sensor is None else sensor,
            stage=self.stage if stage is None else stage,
        )
