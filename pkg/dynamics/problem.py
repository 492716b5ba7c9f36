"""
Problem specifications for the partial dynamic integrodifferential equation

    u^{delta1 delta2}(x, y, z) = F(x, y, z, u, u^delta1, u^delta2, (Hu)(x, y, z)),
    (Hu)(x, y, z) = integral over I of G(x, y, z, q, u(x, y, q), ...) delta q,
    u(x, y0, z) = alpha(x, z),  u(x0, y, z) = beta(y, z),

and of its reduced form with f(x, y, z, u, (hu)) and j(x, y, z, q, u).
"""

from enum import Enum
from typing import Dict, Mapping, Tuple, Union

import numpy as np
from annotated_types import Ge, Gt
from pydantic import BaseModel, ConfigDict, Field, model_validator
from typing_extensions import Annotated

from expr_parser import ExprError, Expression
from .grid import GridFunction, ProductDomain


class ProblemKind(str, Enum):
    FULL = "full"
    REDUCED = "reduced"


INPUTS: Dict[Tuple[ProblemKind, str], Tuple[str, ...]] = {
    (ProblemKind.FULL, "forcing"): ("x", "y", "z", "u", "u1", "u2", "Hu"),
    (ProblemKind.FULL, "kernel"): ("x", "y", "z", "q", "u", "u1", "u2"),
    (ProblemKind.REDUCED, "forcing"): ("x", "y", "z", "u", "Hu"),
    (ProblemKind.REDUCED, "kernel"): ("x", "y", "z", "q", "u"),
}
ALPHA_INPUTS = ("x", "z")
BETA_INPUTS = ("y", "z")


class ProblemEvaluationError(ValueError):
    """An expression of a problem failed to evaluate; label names which one."""

    def __init__(self, label: str, cause: ExprError):
        self.label = label
        self.cause = cause
        self.offset = cause.offset
        super().__init__(f"{label}: {cause}")


class ProblemSpec(BaseModel):
    """Everything the Picard solver needs: domain, equation, conditions and iteration controls."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    domain: ProductDomain = Field(description="T1 x T2 x I")
    kind: ProblemKind = Field(default=ProblemKind.FULL, description="full (F, G) or reduced (f, j)")
    forcing: Union[Expression, GridFunction] = Field(
        description="F or f as an expression, or a tabulated source term independent of u"
    )
    kernel: Expression = Field(description="G or j, integrated over q in H")
    alpha: Expression = Field(description="condition u(x, y0, z) = alpha(x, z)")
    beta: Expression = Field(description="condition u(x0, y, z) = beta(y, z)")
    lam: Annotated[float, Gt(0)] = Field(default=1.0, description="lambda of the weight E_lambda")
    tol: Annotated[float, Gt(0)] = Field(default=1e-10, description="S-norm stopping tolerance")
    max_iter: Annotated[int, Ge(1)] = Field(default=100, description="maximum number of Picard sweeps")
    name: str = ""

    @model_validator(mode="after")
    def _inputs_fit_kind(self) -> "ProblemSpec":
        if not (np.isfinite(self.lam) and np.isfinite(self.tol)):
            raise ValueError("lambda and tol must be finite")
        if len(self.domain.t1) < 2 or len(self.domain.t2) < 2:
            raise ValueError("t1 and t2 need at least two points for the mixed derivative")
        roles = [("kernel", self.kernel, INPUTS[(self.kind, "kernel")]),
                 ("alpha", self.alpha, ALPHA_INPUTS),
                 ("beta", self.beta, BETA_INPUTS)]
        if isinstance(self.forcing, Expression):
            roles.append(("forcing", self.forcing, INPUTS[(self.kind, "forcing")]))
        elif self.forcing.domain != self.domain:
            raise ValueError("tabulated forcing lives on a different domain")
        for role, expr, allowed in roles:
            extra = sorted(expr.variables - set(allowed))
            if extra:
                raise ValueError(
                    f"{expr.label} ({role}) of a {self.kind.value} problem may only use "
                    f"{', '.join(allowed)}; found {', '.join(extra)}"
                )
        return self

    @classmethod
    def from_texts(
        cls,
        domain: ProductDomain,
        forcing: Union[str, GridFunction],
        kernel: str,
        alpha: str,
        beta: str,
        kind: Union[str, ProblemKind] = ProblemKind.FULL,
        **controls,
    ) -> "ProblemSpec":
        """Parse the expressions of a problem; labels follow the problem kind (F, G or f, j)."""
        kind = ProblemKind(kind)
        forcing_label, kernel_label = ("F", "G") if kind == ProblemKind.FULL else ("f", "j")
        if isinstance(forcing, str):
            forcing = Expression(forcing, forcing_label)
        return cls(
            domain=domain,
            kind=kind,
            forcing=forcing,
            kernel=Expression(kernel, kernel_label),
            alpha=Expression(alpha, "alpha"),
            beta=Expression(beta, "beta"),
            **controls,
        )

    @property
    def forcing_label(self) -> str:
        return "F" if self.kind == ProblemKind.FULL else "f"

    @property
    def kernel_label(self) -> str:
        return "G" if self.kind == ProblemKind.FULL else "j"

    def evaluate(self, expr: Expression, env: Mapping[str, np.ndarray], shape: Tuple[int, ...]) -> np.ndarray:
        """Evaluate one of this problem's expressions, broadcast to shape."""
        try:
            values = expr.evaluate(env)
        except ExprError as exc:
            raise ProblemEvaluationError(expr.label, exc) from exc
        return np.broadcast_to(values, shape)

    def alpha_table(self) -> np.ndarray:
        """alpha(x, z) sampled on t1 x zscale."""
        d = self.domain
        env = {"x": d.t1.array[:, None], "z": d.zscale.array[None, :]}
        return self.evaluate(self.alpha, env, (len(d.t1), len(d.zscale)))

    def beta_table(self) -> np.ndarray:
        """beta(y, z) sampled on t2 x zscale."""
        d = self.domain
        env = {"y": d.t2.array[:, None], "z": d.zscale.array[None, :]}
        return self.evaluate(self.beta, env, (len(d.t2), len(d.zscale)))

    def with_conditions(self, alpha: Expression, beta: Expression, name: str = "") -> "ProblemSpec":
        """The same problem under a second pair of conditions."""
        fields = {key: getattr(self, key) for key in type(self).model_fields}
        fields.update(alpha=alpha, beta=beta, name=name or self.name)
        return type(self)(**fields)
