import math
from enum import Enum
from typing import Dict, Iterable, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, PrivateAttr, field_validator


# Points closer than this (relative) are merged by TimeScale.from_points.
DEDUP_REL_TOL = 1e-12


class TimeScaleError(ValueError):
    """A query outside the time scale: non-member point, reversed limits, degenerate axis."""


class NonRegressiveError(TimeScaleError):
    """1 + mu(t) * p(t) vanishes somewhere it is needed."""


class BoundaryError(TimeScaleError):
    """The delta derivative was requested at the maximum of a finite scale."""


class ScaleKind(str, Enum):
    EXPLICIT = "points"
    UNIFORM = "uniform"
    INTEGERS = "integers"
    QSCALE = "qscale"


class TimeScale(BaseModel):
    """A finite, strictly increasing set of real points.

    Every point except the maximum is right-scattered, so all delta-calculus
    identities on it are exact sums and products.
    """

    model_config = ConfigDict(frozen=True)

    points: Tuple[float, ...]
    kind: ScaleKind = ScaleKind.EXPLICIT
    label: str = ""

    _index: Dict[float, int] = PrivateAttr(default_factory=dict)
    _array: np.ndarray = PrivateAttr(default=None)
    _mu: np.ndarray = PrivateAttr(default=None)

    @field_validator("points")
    @classmethod
    def _strictly_increasing(cls, points: Tuple[float, ...]) -> Tuple[float, ...]:
        if len(points) == 0:
            raise ValueError("a time scale needs at least one point")
        values = tuple(float(p) for p in points)
        if not all(math.isfinite(p) for p in values):
            raise ValueError("time scale points must be finite")
        for left, right in zip(values, values[1:]):
            if not right > left:
                raise ValueError(f"time scale points must be strictly increasing ({left!r} then {right!r})")
        return values

    def model_post_init(self, __context) -> None:
        self._index = {p: i for i, p in enumerate(self.points)}
        array = np.asarray(self.points, dtype=float)
        array.flags.writeable = False
        mu = np.zeros_like(array)
        mu[:-1] = np.diff(array)
        mu.flags.writeable = False
        self._array = array
        self._mu = mu

    @classmethod
    def from_points(cls, values: Iterable[float], label: str = "") -> "TimeScale":
        """Build a scale from arbitrary values: sorted, with near-duplicates merged."""
        kept = []
        for value in sorted(float(v) for v in values):
            if kept and math.isclose(value, kept[-1], rel_tol=DEDUP_REL_TOL, abs_tol=0.0):
                continue
            kept.append(value)
        return cls(points=tuple(kept), kind=ScaleKind.EXPLICIT, label=label)

    def __len__(self) -> int:
        return len(self.points)

    # Two scales are equal when they hold the same points; labels do not matter.
    def __eq__(self, other: object) -> bool:
        if not isinstance(other, TimeScale):
            return NotImplemented
        return self.points == other.points

    def __hash__(self) -> int:
        return hash(self.points)

    @property
    def min(self) -> float:
        return self.points[0]

    @property
    def max(self) -> float:
        return self.points[-1]

    @property
    def array(self) -> np.ndarray:
        """Read-only numpy view of the points."""
        return self._array

    @property
    def mu(self) -> np.ndarray:
        """Read-only graininess per point; zero at the maximum."""
        return self._mu

    def contains(self, t: float) -> bool:
        return float(t) in self._index

    def index(self, t: float) -> int:
        """Position of t in the scale (exact match on stored abscissae)."""
        try:
            return self._index[float(t)]
        except (KeyError, TypeError, ValueError):
            raise TimeScaleError(f"{t!r} is not a point of the time scale") from None

    def describe(self) -> str:
        if self.label:
            return self.label
        return f"{self.kind.value}[{len(self)} points, {self.min!r}..{self.max!r}]"
