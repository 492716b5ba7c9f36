"""Single-variable delta calculus on finite time scales.

On a finite scale every point but the maximum is right-scattered, so the
delta derivative is a forward difference quotient, the delta integral is the
left sum of mu(t) * f(t), and the exponential e_p(t, t0) is the product of
1 + mu(s) * p(s) over [t0, t). Nothing here approximates anything.
"""

import math
from itertools import accumulate
from operator import mul
from typing import Callable, List, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, model_validator

from .base import BoundaryError, NonRegressiveError, TimeScale, TimeScaleError


class SampledFunction(BaseModel):
    """Real values attached to the points of a time scale."""

    model_config = ConfigDict(frozen=True)

    scale: TimeScale
    values: Tuple[float, ...]

    @model_validator(mode="after")
    def _one_value_per_point(self) -> "SampledFunction":
        if len(self.values) != len(self.scale):
            raise ValueError(
                f"{len(self.values)} values given for a scale of {len(self.scale)} points"
            )
        return self

    @classmethod
    def from_callable(cls, scale: TimeScale, fn: Callable[[float], float]) -> "SampledFunction":
        return cls(scale=scale, values=tuple(float(fn(t)) for t in scale.points))

    def __call__(self, t: float) -> float:
        return self.values[self.scale.index(t)]

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=float)


Coefficient = Union[float, int, Callable[[float], float], SampledFunction]


def sigma(ts: TimeScale, t: float) -> float:
    """Forward jump: the next point of the scale, or t itself at the maximum."""
    i = ts.index(t)
    return ts.points[min(i + 1, len(ts) - 1)]


def graininess(ts: TimeScale, t: float) -> float:
    return sigma(ts, t) - ts.points[ts.index(t)]


def delta_derivative(f: SampledFunction, t: float) -> float:
    ts = f.scale
    i = ts.index(t)
    if i == len(ts) - 1:
        raise BoundaryError(f"the delta derivative is undefined at the maximum point {t!r}")
    return (f.values[i + 1] - f.values[i]) / (ts.points[i + 1] - ts.points[i])


def delta_integral(f: SampledFunction, t1: float, t2: float) -> float:
    """Left sum of mu(t) * f(t) over t1 <= t < t2."""
    ts = f.scale
    i1, i2 = ts.index(t1), ts.index(t2)
    if i1 > i2:
        raise TimeScaleError(f"delta integral limits are reversed ({t1!r} > {t2!r})")
    total = 0.0
    for i in range(i1, i2):
        total += (ts.points[i + 1] - ts.points[i]) * f.values[i]
    return total


def delta_antiderivative(f: SampledFunction) -> SampledFunction:
    """t -> delta_integral(f, min, t) for every point of the scale."""
    ts = f.scale
    terms = [float(m) * v for m, v in zip(ts.mu[:-1], f.values[:-1])]
    return SampledFunction(scale=ts, values=tuple(accumulate(terms, initial=0.0)))


def circle_plus(p: float, q: float, mu: float) -> float:
    return p + q + mu * p * q


def circle_minus(p: float, mu: float) -> float:
    denominator = 1.0 + mu * p
    if denominator == 0.0:
        raise NonRegressiveError(f"p={p!r} is not regressive for mu={mu!r}")
    return -p / denominator


def _coefficients(p: Coefficient, ts: TimeScale, start: int, stop: int) -> List[float]:
    if isinstance(p, SampledFunction):
        if p.scale.points != ts.points:
            raise TimeScaleError("coefficient is sampled on a different time scale")
        return list(p.values[start:stop])
    if callable(p):
        return [float(p(t)) for t in ts.points[start:stop]]
    return [float(p)] * (stop - start)


def _resolve_scale(p: Coefficient, scale: Optional[TimeScale]) -> TimeScale:
    if scale is not None:
        return scale
    if isinstance(p, SampledFunction):
        return p.scale
    raise TimeScaleError("a scale is required unless the coefficient is a SampledFunction")


def _regressive_factors(p: Coefficient, ts: TimeScale, start: int, stop: int) -> List[float]:
    factors = [
        1.0 + float(m) * c for m, c in zip(ts.mu[start:stop], _coefficients(p, ts, start, stop))
    ]
    for offset, factor in enumerate(factors):
        if factor == 0.0:
            raise NonRegressiveError(
                f"1 + mu*p vanishes at t={ts.points[start + offset]!r}"
            )
    return factors


def ts_exp(p: Coefficient, t: float, t0: float, scale: Optional[TimeScale] = None) -> float:
    """The time-scale exponential e_p(t, t0).

    For t >= t0 this is the product of 1 + mu(s) p(s) over s in [t0, t);
    for t < t0 it is the reciprocal of e_p(t0, t).
    """
    ts = _resolve_scale(p, scale)
    i, i0 = ts.index(t), ts.index(t0)
    if i < i0:
        return 1.0 / ts_exp(p, t0, t, ts)
    return math.prod(_regressive_factors(p, ts, i0, i))


def exp_table(p: Coefficient, t0: float, scale: Optional[TimeScale] = None) -> SampledFunction:
    """e_p(t, t0) at every point t of the scale."""
    ts = _resolve_scale(p, scale)
    i0 = ts.index(t0)
    before = [ts_exp(p, t, t0, ts) for t in ts.points[:i0]]
    after = list(accumulate(_regressive_factors(p, ts, i0, len(ts) - 1), mul, initial=1.0))
    return SampledFunction(scale=ts, values=tuple(before + after))


def solve_first_order(p: Coefficient, u0: float, scale: TimeScale) -> SampledFunction:
    """Solution of u^delta = p u with u(min) = u0, by forward recursion."""
    growth = exp_table(p, scale.min, scale)
    return SampledFunction(scale=scale, values=tuple(u0 * e for e in growth.values))
