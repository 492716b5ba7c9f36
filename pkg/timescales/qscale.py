from .base import ScaleKind, TimeScale, TimeScaleError


class QScale(TimeScale):
    """The geometric scale t0, t0*q, ..., t0*q**(n-1)."""

    def __init__(self, t0: float, q: float, n: int, label: str = ""):
        if t0 <= 0 or q <= 1:
            raise TimeScaleError(f"qscale({t0}, {q}, {n}) needs t0 > 0 and q > 1")
        if int(n) != n or n < 1:
            raise TimeScaleError(f"qscale({t0}, {q}, {n}) needs an integer n >= 1")
        super().__init__(
            points=tuple(float(t0) * float(q) ** k for k in range(int(n))),
            kind=ScaleKind.QSCALE,
            label=label or f"qscale({t0!r},{q!r},{int(n)})",
        )
