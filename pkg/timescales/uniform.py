import numpy as np

from .base import ScaleKind, TimeScale, TimeScaleError


class UniformScale(TimeScale):
    """n equally spaced points from start to stop, both included.

    Stands in for a real interval: accuracy against classical calculus is O(step).
    """

    def __init__(self, start: float, stop: float, n: int, label: str = ""):
        if int(n) != n or n < 2:
            raise TimeScaleError(f"uniform({start}, {stop}, {n}) needs an integer n >= 2")
        if not stop > start:
            raise TimeScaleError(f"uniform({start}, {stop}, {n}) needs start < stop")
        super().__init__(
            points=tuple(float(v) for v in np.linspace(start, stop, int(n))),
            kind=ScaleKind.UNIFORM,
            label=label or f"uniform({start!r},{stop!r},{int(n)})",
        )
