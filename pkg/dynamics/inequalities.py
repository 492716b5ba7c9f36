"""
Explicit bounds: the Gronwall-type surface bound on T1 x T2 x I, the
one-variable Lemma, and the gamma / eta constants of the Picard contraction.

For nonnegative kernels p(x, y, z) and r(x, y, z, q) and c >= 0, a
nonnegative w with

    w(x, y, z) <= c + sum_{s<x} sum_{t<y} mu1 mu2 [p w(s, t, z) + sum_q mu_I r w(s, t, q)]

is bounded by c * e_Q(x, x0), where

    Q(x, y, z) = sum_{t<y} mu2(t) [p(x, t, z) + sum_q mu_I(q) r(x, t, z, q)].
"""

import logging
import math
from typing import Dict, Mapping, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator, model_validator

from expr_parser import ExprError, Expression
from timescales import Coefficient, SampledFunction, exp_table
from .grid import (
    GridFunction,
    ProductDomain,
    SolutionTriple,
    decay_matrix,
    double_integral_table,
    forward_quotient,
    left_sum_table,
    log_weight_table,
    scale_log_weights,
    z_integral,
)
from .problem import ProblemEvaluationError, ProblemSpec
from .solver import forcing_values

logger = logging.getLogger(__name__)

P_INPUTS = ("x", "y", "z")
R_INPUTS = ("x", "y", "z", "q")


class NegativeKernelError(ValueError):
    """A kernel or Lipschitz modulus took a negative value on the grid."""


def _evaluate(expr: Expression, env: Mapping[str, np.ndarray], shape: Tuple[int, ...]) -> np.ndarray:
    try:
        return np.broadcast_to(expr.evaluate(env), shape)
    except ExprError as exc:
        raise ProblemEvaluationError(expr.label, exc) from exc


def _point_env(domain: ProductDomain) -> Dict[str, np.ndarray]:
    x, y, z = domain.mesh()
    return {"x": x, "y": y, "z": z}


def _pair_env(domain: ProductDomain) -> Dict[str, np.ndarray]:
    x, y, z = domain.mesh()
    return {"x": x[..., None], "y": y[..., None], "z": z[..., None], "q": domain.zscale.array[None, None, None, :]}


def tabulate_point_function(expr: Expression, domain: ProductDomain) -> np.ndarray:
    """An expression over (x, y, z) sampled on the grid."""
    return _evaluate(expr, _point_env(domain), domain.shape)


def tabulate_pair_function(expr: Expression, domain: ProductDomain) -> np.ndarray:
    """An expression over (x, y, z, q) sampled on the grid times zscale."""
    return _evaluate(expr, _pair_env(domain), domain.shape + (len(domain.zscale),))


def _require_nonnegative(values: np.ndarray, label: str) -> None:
    if np.any(values < 0):
        where = np.unravel_index(int(np.argmin(values)), values.shape)
        raise NegativeKernelError(f"{label} is negative ({float(values[where]):.6g}) at grid index {tuple(int(i) for i in where)}")


class KernelTables(BaseModel):
    """Tabulated nonnegative kernels: p of shape (n1, n2, nz), r of shape (n1, n2, nz, nz)."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    domain: ProductDomain
    p: np.ndarray
    r: np.ndarray

    @field_validator("p", "r", mode="before")
    @classmethod
    def _as_array(cls, values) -> np.ndarray:
        array = np.array(values, dtype=float)
        array.flags.writeable = False
        return array

    @model_validator(mode="after")
    def _fit_domain(self) -> "KernelTables":
        if self.p.shape != self.domain.shape:
            raise ValueError(f"p has shape {self.p.shape}, expected {self.domain.shape}")
        if self.r.shape != self.domain.shape + (len(self.domain.zscale),):
            raise ValueError(f"r has shape {self.r.shape}, expected {self.domain.shape + (len(self.domain.zscale),)}")
        return self

    @classmethod
    def from_arrays(cls, domain: ProductDomain, p: np.ndarray, r: np.ndarray) -> "KernelTables":
        """Build tables after checking both kernels are nonnegative (NegativeKernelError otherwise)."""
        _require_nonnegative(np.asarray(p, dtype=float), "p")
        _require_nonnegative(np.asarray(r, dtype=float), "r")
        return cls(domain=domain, p=p, r=r)

    def composed(self) -> "KernelTables":
        """(p1, p1 * p2): the Gronwall pair obtained by chaining the two growth bounds."""
        return KernelTables(domain=self.domain, p=self.p, r=self.p[..., None] * self.r)


class KernelPair(BaseModel):
    """Kernels p(x, y, z) and r(x, y, z, q) given as expressions."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    p: Expression
    r: Expression

    @model_validator(mode="after")
    def _inputs(self) -> "KernelPair":
        for expr, allowed in ((self.p, P_INPUTS), (self.r, R_INPUTS)):
            extra = sorted(expr.variables - set(allowed))
            if extra:
                raise ValueError(f"{expr.label} may only use {', '.join(allowed)}; found {', '.join(extra)}")
        return self

    @classmethod
    def parse(cls, p: str, r: str) -> "KernelPair":
        return cls(p=Expression(p, "p"), r=Expression(r, "r"))

    def tabulate(self, domain: ProductDomain) -> KernelTables:
        return KernelTables.from_arrays(
            domain, tabulate_point_function(self.p, domain), tabulate_pair_function(self.r, domain)
        )


Kernel = Union[KernelPair, KernelTables]


def as_tables(k: Kernel, domain: ProductDomain) -> KernelTables:
    if isinstance(k, KernelTables):
        if k.domain != domain:
            raise ValueError("kernel tables live on a different domain")
        return k
    return k.tabulate(domain)


def q_table(k: Kernel, domain: ProductDomain, uniform_in_z: bool = False) -> np.ndarray:
    """Q at every grid point; zero on the face y = y0 and nondecreasing in y."""
    t = as_tables(k, domain)
    inner = t.p + z_integral(t.r, domain.zscale)
    if uniform_in_z:
        inner = np.broadcast_to(inner.max(axis=2, keepdims=True), inner.shape)
    return left_sum_table(inner, domain.t2.mu, 1)


def compute_Q(k: Kernel, domain: ProductDomain, at: Tuple[float, float, float]) -> float:
    return float(q_table(k, domain)[domain.locate(*at)])


def gronwall_bound(k: Kernel, c: float, domain: ProductDomain, uniform_in_z: bool = False) -> GridFunction:
    """
    The surface c * prod_{s<x} (1 + mu1(s) Q(s, y, z)).

    With uniform_in_z, the integrand p + integral of r is replaced by its
    maximum over z before summing in y. That surface bounds max_z w and
    stays valid when r couples different z-levels; the pointwise surface
    does not always survive such coupling.

    Entries past the floating range are inf; c = 0 gives the zero surface.
    """
    if not c >= 0:
        raise ValueError(f"c must be nonnegative, got {c!r}")
    q = q_table(k, domain, uniform_in_z)
    if c == 0:
        return GridFunction.zeros(domain)
    factors = 1.0 + domain.t1.mu[:, None, None] * q
    growth = np.ones(domain.shape)
    with np.errstate(over="ignore"):
        growth[1:] = np.cumprod(factors[:-1], axis=0)
    return GridFunction(domain=domain, values=c * growth)


def gronwall_extremal(k: Kernel, c: float, domain: ProductDomain) -> GridFunction:
    """The w that satisfies the Gronwall premise with equality, by forward recursion."""
    t = as_tables(k, domain)
    n1, n2, _ = domain.shape
    cells = domain.t1.mu[:, None] * domain.t2.mu[None, :]
    muz = domain.zscale.mu
    w = np.full(domain.shape, float(c))
    contribution = np.zeros(domain.shape)
    for i in range(n1):
        for j in range(n2):
            if i > 0 and j > 0:
                w[i, j] = c + contribution[:i, :j].sum(axis=(0, 1))
            coupled = (t.r[i, j] * (muz * w[i, j])[None, :]).sum(axis=-1)
            contribution[i, j] = cells[i, j] * (t.p[i, j] * w[i, j] + coupled)
    return GridFunction(domain=domain, values=w)


def gronwall_premise_rhs(w: GridFunction, k: Kernel, c: float) -> np.ndarray:
    """c + double sum of (p w + integral of r w over q), the right side of the premise."""
    domain = w.domain
    t = as_tables(k, domain)
    coupled = z_integral(t.r * w.values[:, :, None, :], domain.zscale)
    return c + double_integral_table(t.p * w.values + coupled, domain)


def lemma_bound(u: SampledFunction, a: Coefficient) -> SampledFunction:
    """u(t0) * e_a(t, t0) on the scale of u, with t0 its minimum."""
    growth = exp_table(a, u.scale.min, u.scale)
    return SampledFunction(scale=u.scale, values=tuple(u.values[0] * e for e in growth.values))


class ContractionConstants(BaseModel):
    """Smallest admissible gamma_i and eta_i on the grid for a given lambda; inf when out of range."""

    model_config = ConfigDict(frozen=True)

    gamma1: float
    gamma2: float
    gamma3: float
    eta1: float
    eta2: float
    eta3: float
    lam: float

    @field_validator("gamma1", "gamma2", "gamma3", "eta1", "eta2", "eta3")
    @classmethod
    def _not_nan(cls, value: float) -> float:
        if math.isnan(value):
            raise ValueError("constant is NaN")
        return value

    @property
    def gamma(self) -> float:
        return self.gamma1 + self.gamma2 + self.gamma3

    @property
    def contracting(self) -> bool:
        return self.gamma < 1.0

    @property
    def apriori_bound(self):
        """S-norm bound (eta1 + eta2 + eta3) / (1 - gamma) on the fixed point, when gamma < 1."""
        if not self.contracting:
            return None
        return (self.eta1 + self.eta2 + self.eta3) / (1.0 - self.gamma)

    def as_tuple(self) -> Tuple[float, ...]:
        return self.gamma1, self.gamma2, self.gamma3, self.eta1, self.eta2, self.eta3, self.gamma


def _contract(subscripts: str, matrices: Tuple[np.ndarray, ...], g: np.ndarray) -> np.ndarray:
    """einsum of decay matrices against g; any point that sums over an infinite g is infinite."""
    finite = np.isfinite(g)
    with np.errstate(over="ignore"):
        total = np.einsum(subscripts, *matrices, np.where(finite, g, 0.0))
    if not finite.all():
        below = tuple(np.tril(np.ones(m.shape), k=-1) for m in matrices)
        reach = np.einsum(subscripts, *below, (~finite).astype(float))
        total = np.where(reach > 0, np.inf, total)
    return total


def constant_ratios(spec: ProblemSpec, M: Expression, K: Expression) -> Dict[str, np.ndarray]:
    """
    Left-hand sides of the six constant conditions divided by E_lambda, on the grid.

    M(x, y, z) and K(x, y, z, q) are Lipschitz moduli of F and G. Keys are
    gamma1..gamma3 and eta1..eta3. Every ratio is assembled from differences of
    log E_lambda, so large lambda or long grids never form E_lambda itself; a ratio
    is infinite only when its true value exceeds the floating range.
    """
    d = spec.domain
    m = tabulate_point_function(M, d)
    kq = tabulate_pair_function(K, d)
    _require_nonnegative(m, M.label)
    _require_nonnegative(kq, K.label)

    ax, ay = decay_matrix(d.t1, spec.lam), decay_matrix(d.t2, spec.lam)
    lz = scale_log_weights(d.zscale, spec.lam)
    muz = d.zscale.mu
    with np.errstate(over="ignore", under="ignore", divide="ignore", invalid="ignore"):
        # zw[z, q] = mu(q) e(q) / e(z)
        zw = np.where(muz[None, :] > 0, np.exp(np.log(muz)[None, :] + lz[None, :] - lz[:, None]), 0.0)
        coupled = np.sum(np.where(kq > 0, kq * zw, 0.0), axis=-1)
        g = np.where(m > 0, m * (1.0 + coupled), 0.0)
        inverse = np.exp(-log_weight_table(d, spec.lam))

    f0 = np.abs(forcing_values(SolutionTriple.zero(d), spec)) * inverse
    alpha = spec.alpha_table()
    beta = spec.beta_table()
    conditions = np.abs(alpha)[:, None, :] + np.abs(beta)[None, :, :] + np.abs(alpha[0])[None, None, :]
    return {
        "gamma1": _contract("xs,yt,stz->xyz", (ax, ay), g),
        "gamma2": _contract("yt,xtz->xyz", (ay,), g),
        "gamma3": _contract("xs,syz->xyz", (ax,), g),
        "eta1": conditions * inverse + _contract("xs,yt,stz->xyz", (ax, ay), f0),
        "eta2": np.abs(forward_quotient(alpha, d.t1.mu, 0))[:, None, :] * inverse + _contract("yt,xtz->xyz", (ay,), f0),
        "eta3": np.abs(forward_quotient(beta, d.t2.mu, 0))[None, :, :] * inverse + _contract("xs,syz->xyz", (ax,), f0),
    }


def estimate_constants(spec: ProblemSpec, M: Expression, K: Expression) -> ContractionConstants:
    """Suprema over the grid of each left-hand side divided by E_lambda."""
    values = {name: float(np.max(ratio)) for name, ratio in constant_ratios(spec, M, K).items()}
    constants = ContractionConstants(lam=spec.lam, **values)
    logger.info("gamma = %.6g (gamma1 %.6g, gamma2 %.6g, gamma3 %.6g)",
                constants.gamma, constants.gamma1, constants.gamma2, constants.gamma3)
    return constants


def constant_margins(spec: ProblemSpec, M: Expression, K: Expression, constants: ContractionConstants) -> Dict[str, float]:
    """min over the grid of (constant - left-hand side / E_lambda), per condition."""
    return {
        name: float(np.min(np.where(ratio == getattr(constants, name), 0.0, getattr(constants, name) - ratio)))
        for name, ratio in constant_ratios(spec, M, K).items()
    }
