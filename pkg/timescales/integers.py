from .base import ScaleKind, TimeScale, TimeScaleError


class IntegerScale(TimeScale):
    def __init__(self, a: int, b: int, label: str = ""):
        if int(a) != a or int(b) != b:
            raise TimeScaleError(f"integers({a}, {b}) needs integer endpoints")
        if b < a:
            raise TimeScaleError(f"integers({a}, {b}) is empty")
        super().__init__(
            points=tuple(float(k) for k in range(int(a), int(b) + 1)),
            kind=ScaleKind.INTEGERS,
            label=label or f"integers({int(a)},{int(b)})",
        )
