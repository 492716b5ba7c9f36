"""
Functions on the product domain T1 x T2 x I.

Values live in numpy arrays of shape (|t1|, |t2|, |zscale|), indexed (i, j, k).
Partial delta derivatives are forward quotients; at the maximum of the
differentiated axis the last interior quotient is copied and the point is
flagged in the boundary mask.
"""

from typing import Callable, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator, model_validator

from timescales import SampledFunction, TimeScale, TimeScaleError, exp_table


Index = Tuple[int, int, int]


def _readonly(array: np.ndarray) -> np.ndarray:
    array = np.array(array, dtype=float)
    array.flags.writeable = False
    return array


class ProductDomain(BaseModel):
    """T1 x T2 x I with the lower corner (x0, y0, a) fixed at the minima."""

    model_config = ConfigDict(frozen=True)

    t1: TimeScale
    t2: TimeScale
    zscale: TimeScale

    @model_validator(mode="after")
    def _proper_interval(self) -> "ProductDomain":
        if len(self.zscale) < 2:
            raise ValueError("zscale must hold an interval [a, b] with a < b")
        return self

    @property
    def x0(self) -> float:
        return self.t1.min

    @property
    def y0(self) -> float:
        return self.t2.min

    @property
    def a(self) -> float:
        return self.zscale.min

    @property
    def b(self) -> float:
        return self.zscale.max

    @property
    def shape(self) -> Tuple[int, int, int]:
        return len(self.t1), len(self.t2), len(self.zscale)

    def mesh(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Broadcastable coordinate arrays (x, y, z) of shape (n1,1,1), (1,n2,1), (1,1,nz)."""
        return (
            self.t1.array[:, None, None],
            self.t2.array[None, :, None],
            self.zscale.array[None, None, :],
        )

    def locate(self, x: float, y: float, z: float) -> Index:
        return self.t1.index(x), self.t2.index(y), self.zscale.index(z)

    def coordinates(self, at: Index) -> Tuple[float, float, float]:
        i, j, k = at
        return self.t1.points[i], self.t2.points[j], self.zscale.points[k]

    def describe(self) -> str:
        return f"{self.t1.describe()} x {self.t2.describe()} x {self.zscale.describe()}"


class GridFunction(BaseModel):
    """A real value at every point of a product domain."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    domain: ProductDomain
    values: np.ndarray
    boundary: Optional[np.ndarray] = None

    @field_validator("values", mode="before")
    @classmethod
    def _as_array(cls, values) -> np.ndarray:
        return _readonly(values)

    @field_validator("boundary", mode="before")
    @classmethod
    def _as_mask(cls, boundary) -> Optional[np.ndarray]:
        if boundary is None:
            return None
        mask = np.array(boundary, dtype=bool)
        mask.flags.writeable = False
        return mask

    @model_validator(mode="after")
    def _matches_domain(self) -> "GridFunction":
        if self.values.shape != self.domain.shape:
            raise ValueError(f"values of shape {self.values.shape} do not fit a {self.domain.shape} domain")
        if self.boundary is not None and self.boundary.shape != self.domain.shape:
            raise ValueError("boundary mask does not fit the domain")
        return self

    @classmethod
    def zeros(cls, domain: ProductDomain) -> "GridFunction":
        return cls(domain=domain, values=np.zeros(domain.shape))

    @classmethod
    def constant(cls, domain: ProductDomain, value: float) -> "GridFunction":
        return cls(domain=domain, values=np.full(domain.shape, float(value)))

    @classmethod
    def from_callable(
        cls, domain: ProductDomain, fn: Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]
    ) -> "GridFunction":
        """Sample a vectorised fn(x, y, z) on the grid."""
        x, y, z = domain.mesh()
        return cls(domain=domain, values=np.broadcast_to(fn(x, y, z), domain.shape))

    def __getitem__(self, at: Index) -> float:
        return float(self.values[at])

    def at(self, x: float, y: float, z: float) -> float:
        return float(self.values[self.domain.locate(x, y, z)])

    def _check_domain(self, other: "GridFunction") -> None:
        if other.domain != self.domain:
            raise TimeScaleError("grid functions live on different domains")

    def __add__(self, other: "GridFunction") -> "GridFunction":
        self._check_domain(other)
        return GridFunction(domain=self.domain, values=self.values + other.values)

    def __sub__(self, other: "GridFunction") -> "GridFunction":
        self._check_domain(other)
        return GridFunction(domain=self.domain, values=self.values - other.values)

    def __mul__(self, factor: float) -> "GridFunction":
        return GridFunction(domain=self.domain, values=self.values * float(factor))

    __rmul__ = __mul__

    def __abs__(self) -> "GridFunction":
        return GridFunction(domain=self.domain, values=np.abs(self.values))


class SolutionTriple(BaseModel):
    """(u, u^delta1, u^delta2) on a common domain."""

    model_config = ConfigDict(frozen=True)

    u: GridFunction
    u_d1: GridFunction
    u_d2: GridFunction

    @model_validator(mode="after")
    def _common_domain(self) -> "SolutionTriple":
        if not (self.u.domain == self.u_d1.domain == self.u_d2.domain):
            raise ValueError("u, u_d1 and u_d2 must share one domain")
        return self

    @property
    def domain(self) -> ProductDomain:
        return self.u.domain

    @classmethod
    def zero(cls, domain: ProductDomain) -> "SolutionTriple":
        zero = GridFunction.zeros(domain)
        return cls(u=zero, u_d1=zero, u_d2=zero)

    @classmethod
    def constant(cls, domain: ProductDomain, value: float) -> "SolutionTriple":
        zero = GridFunction.zeros(domain)
        return cls(u=GridFunction.constant(domain, value), u_d1=zero, u_d2=zero)

    def __sub__(self, other: "SolutionTriple") -> "SolutionTriple":
        return SolutionTriple(u=self.u - other.u, u_d1=self.u_d1 - other.u_d1, u_d2=self.u_d2 - other.u_d2)

    def __mul__(self, factor: float) -> "SolutionTriple":
        return SolutionTriple(u=self.u * factor, u_d1=self.u_d1 * factor, u_d2=self.u_d2 * factor)

    __rmul__ = __mul__

    def __add__(self, other: "SolutionTriple") -> "SolutionTriple":
        return SolutionTriple(u=self.u + other.u, u_d1=self.u_d1 + other.u_d1, u_d2=self.u_d2 + other.u_d2)


def _along(mu: np.ndarray, axis: int, ndim: int) -> np.ndarray:
    shape = [1] * ndim
    shape[axis] = mu.shape[0]
    return mu.reshape(shape)


def forward_quotient(values: np.ndarray, mu: np.ndarray, axis: int) -> np.ndarray:
    """Delta difference quotient along one axis, last quotient copied to the maximum."""
    if values.shape[axis] < 2:
        raise TimeScaleError("cannot differentiate along an axis with a single point")
    quotient = np.diff(values, axis=axis) / _along(mu[:-1], axis, values.ndim)
    pad = [(0, 0)] * values.ndim
    pad[axis] = (0, 1)
    return np.pad(quotient, pad, mode="edge")


def left_sum_table(values: np.ndarray, mu: np.ndarray, axis: int) -> np.ndarray:
    """Cumulative delta integral along an axis: entry n holds the sum over m < n of mu[m] * values[m]."""
    weighted = values * _along(mu, axis, values.ndim)
    table = np.zeros_like(weighted)
    head = [slice(None)] * values.ndim
    tail = [slice(None)] * values.ndim
    head[axis] = slice(1, None)
    tail[axis] = slice(None, -1)
    table[tuple(head)] = np.cumsum(weighted[tuple(tail)], axis=axis)
    return table


def _boundary_mask(domain: ProductDomain, axes: Tuple[int, ...]) -> np.ndarray:
    mask = np.zeros(domain.shape, dtype=bool)
    for axis in axes:
        index = [slice(None)] * 3
        index[axis] = -1
        mask[tuple(index)] = True
    return mask


def partial_delta(u: GridFunction, direction: int) -> GridFunction:
    """Partial delta derivative along axis 1 (x) or 2 (y)."""
    if direction not in (1, 2):
        raise TimeScaleError(f"direction must be 1 or 2, got {direction!r}")
    scale = u.domain.t1 if direction == 1 else u.domain.t2
    axis = direction - 1
    return GridFunction(
        domain=u.domain,
        values=forward_quotient(u.values, scale.mu, axis),
        boundary=_boundary_mask(u.domain, (axis,)),
    )


def mixed_delta(u: GridFunction) -> GridFunction:
    """u^{delta1 delta2} by the four-point stencil, which is symmetric in the two orders."""
    d = u.domain
    if len(d.t1) < 2 or len(d.t2) < 2:
        raise TimeScaleError("mixed_delta needs at least two points along x and y")
    v = u.values
    cells = d.t1.mu[:-1, None, None] * d.t2.mu[None, :-1, None]
    quotient = (v[1:, 1:] - v[1:, :-1] - v[:-1, 1:] + v[:-1, :-1]) / cells
    return GridFunction(
        domain=d,
        values=np.pad(quotient, ((0, 1), (0, 1), (0, 0)), mode="edge"),
        boundary=_boundary_mask(d, (0, 1)),
    )


def differentiate(u: GridFunction) -> SolutionTriple:
    """The triple (u, partial_delta(u, 1), partial_delta(u, 2))."""
    return SolutionTriple(u=u, u_d1=partial_delta(u, 1), u_d2=partial_delta(u, 2))


def double_integral_table(g: Union[GridFunction, np.ndarray], domain: Optional[ProductDomain] = None) -> np.ndarray:
    """Sum over s < x, t < y of mu1(s) mu2(t) g(s, t, z) for every grid point."""
    if isinstance(g, GridFunction):
        domain, values = g.domain, g.values
    else:
        values = np.asarray(g, dtype=float)
    inner = left_sum_table(values, domain.t1.mu, 0)
    return left_sum_table(inner, domain.t2.mu, 1)


def double_integral(g: GridFunction, x: float, y: float, z: Optional[float] = None) -> float:
    """Double delta integral over [x0, x) x [y0, y) at level z (default a)."""
    d = g.domain
    i, j = d.t1.index(x), d.t2.index(y)
    k = d.zscale.index(d.a if z is None else z)
    cells = d.t1.mu[:i, None] * d.t2.mu[None, :j]
    return float(np.sum(cells * g.values[:i, :j, k]))


def z_integral(g: Union[SampledFunction, np.ndarray], zscale: Optional[TimeScale] = None) -> Union[float, np.ndarray]:
    """Delta integral over [a, b) along the last axis of g."""
    if isinstance(g, SampledFunction):
        zscale, g = g.scale, g.array
    values = np.asarray(g, dtype=float)
    if zscale is None:
        raise TimeScaleError("z_integral needs the zscale the values are sampled on")
    result = np.sum(values * zscale.mu, axis=-1)
    return float(result) if np.ndim(result) == 0 else result


def w_seminorm_table(s: SolutionTriple) -> np.ndarray:
    return np.abs(s.u.values) + np.abs(s.u_d1.values) + np.abs(s.u_d2.values)


def w_seminorm(s: SolutionTriple, at: Index) -> float:
    """|u| + |u^delta1| + |u^delta2| at one grid point."""
    return abs(s.u[at]) + abs(s.u_d1[at]) + abs(s.u_d2[at])


def _check_lam(lam: float) -> None:
    if not lam > 0:
        raise TimeScaleError(f"lambda must be positive, got {lam!r}")


def _axis_exponentials(domain: ProductDomain, lam: float) -> Tuple[np.ndarray, ...]:
    _check_lam(lam)
    return tuple(
        exp_table(lam, scale.min, scale).array for scale in (domain.t1, domain.t2, domain.zscale)
    )


def scale_log_weights(scale: TimeScale, lam: float) -> np.ndarray:
    """log e_lam(t, min) at every point: running sums of log(1 + mu * lam)."""
    _check_lam(lam)
    return np.concatenate([[0.0], np.cumsum(np.log1p(lam * scale.mu[:-1]))])


def axis_log_weights(domain: ProductDomain, lam: float) -> Tuple[np.ndarray, ...]:
    return tuple(scale_log_weights(scale, lam) for scale in (domain.t1, domain.t2, domain.zscale))


def log_weight_table(domain: ProductDomain, lam: float) -> np.ndarray:
    """log E_lambda at every grid point; finite where E_lambda itself overflows."""
    lx, ly, lz = axis_log_weights(domain, lam)
    return lx[:, None, None] + ly[None, :, None] + lz[None, None, :]


def decay_matrix(scale: TimeScale, lam: float) -> np.ndarray:
    """
    A[i, s] = mu(s) * e_lam(s) / e_lam(i) for s < i, zero otherwise.

    A @ (g * e_lam) / e_lam is the left sum of g weighted back to each point,
    built from log differences so neither exponential is formed.
    """
    logs = scale_log_weights(scale, lam)
    below = np.tril(np.ones((len(logs), len(logs)), dtype=bool), k=-1)
    with np.errstate(under="ignore"):
        ratios = np.exp(np.where(below, logs[None, :] - logs[:, None], -np.inf))
    return ratios * scale.mu[None, :]


def weight_table(domain: ProductDomain, lam: float) -> np.ndarray:
    """E_lambda at every grid point: e_lam(x, x0) * e_lam(y, y0) * e_lam(z, a)."""
    ex, ey, ez = _axis_exponentials(domain, lam)
    return ex[:, None, None] * ey[None, :, None] * ez[None, None, :]


def weight(domain: ProductDomain, lam: float, at: Index) -> float:
    ex, ey, ez = _axis_exponentials(domain, lam)
    i, j, k = at
    return float(ex[i] * ey[j] * ez[k])


def s_norm(s: SolutionTriple, lam: float) -> float:
    """Weighted supremum of the W-seminorm: max over the grid of |s|_W / E_lambda."""
    with np.errstate(under="ignore"):
        inverse = np.exp(-log_weight_table(s.domain, lam))
    return float(np.max(w_seminorm_table(s) * inverse))


def sup_norm(s: SolutionTriple) -> float:
    """Unweighted maximum of the W-seminorm."""
    return float(np.max(w_seminorm_table(s)))
