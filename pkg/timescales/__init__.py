from .base import (
    BoundaryError,
    NonRegressiveError,
    ScaleKind,
    TimeScale,
    TimeScaleError,
)
from .integers import IntegerScale
from .qscale import QScale
from .uniform import UniformScale
from .calculus import (
    Coefficient,
    SampledFunction,
    circle_minus,
    circle_plus,
    delta_antiderivative,
    delta_derivative,
    delta_integral,
    exp_table,
    graininess,
    sigma,
    solve_first_order,
    ts_exp,
)


def create_scale(kind: str, *args: float) -> TimeScale:
    """
    Factory function to build a time scale from a constructor name and its arguments.

    Args:
        kind: 'uniform', 'integers', 'qscale' or 'points'
        *args: constructor arguments; uniform(start, stop, n), integers(a, b),
               qscale(t0, q, n), points(v1, v2, ...)

    Returns:
        TimeScale instance

    Raises:
        TimeScaleError: If kind is not supported or the arguments do not fit it
    """
    try:
        kind = ScaleKind(kind)
    except ValueError:
        raise TimeScaleError(f"Unsupported time scale kind: {kind}") from None

    arity = {ScaleKind.UNIFORM: 3, ScaleKind.INTEGERS: 2, ScaleKind.QSCALE: 3}
    if kind in arity and len(args) != arity[kind]:
        raise TimeScaleError(f"{kind.value} takes {arity[kind]} arguments, got {len(args)}")

    if kind == ScaleKind.UNIFORM:
        return UniformScale(*args)
    elif kind == ScaleKind.INTEGERS:
        return IntegerScale(*args)
    elif kind == ScaleKind.QSCALE:
        return QScale(*args)
    if not args:
        raise TimeScaleError("points() needs at least one value")
    return TimeScale.from_points(args)


__all__ = [
    "BoundaryError",
    "Coefficient",
    "IntegerScale",
    "NonRegressiveError",
    "QScale",
    "SampledFunction",
    "ScaleKind",
    "TimeScale",
    "TimeScaleError",
    "UniformScale",
    "circle_minus",
    "circle_plus",
    "create_scale",
    "delta_antiderivative",
    "delta_derivative",
    "delta_integral",
    "exp_table",
    "graininess",
    "sigma",
    "solve_first_order",
    "ts_exp",
]
