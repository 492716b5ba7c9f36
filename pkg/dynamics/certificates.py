"""
Certificates: numerical checks of the existence, uniqueness, boundedness and
continuous-dependence results, each reported as an immutable record with a
verdict instead of an exception.
"""

import logging
from enum import Enum
from typing import Dict, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from expr_parser import Expression
from timescales import Coefficient, SampledFunction, delta_derivative
from .grid import GridFunction, ProductDomain, SolutionTriple, double_integral_table, s_norm, z_integral
from .inequalities import (
    ContractionConstants,
    Kernel,
    NegativeKernelError,
    as_tables,
    estimate_constants,
    gronwall_bound,
    gronwall_premise_rhs,
    lemma_bound,
)
from .problem import ProblemKind, ProblemSpec
from .solver import SolveReport, eval_h, forcing_values, solve_picard

logger = logging.getLogger(__name__)

# Pass slack relative to 1 + max|bound|; absorbs rounding only.
REL_SLACK = 1e-9

Constant = Union[float, int, str, bool, None]


class CertificateKind(str, Enum):
    GRONWALL = "gronwall"
    BOUNDEDNESS = "boundedness"
    DEPENDENCE = "dependence"
    UNIQUENESS = "uniqueness"
    CONTRACTION = "contraction"


class Verdict(str, Enum):
    PASS = "pass"
    FAIL = "fail"
    PREMISE_FAILED = "premise_failed"
    INCONCLUSIVE = "inconclusive"
    REFUSED = "refused"


class WorstOffender(BaseModel):
    model_config = ConfigDict(frozen=True)

    x: float
    y: Optional[float] = None
    z: Optional[float] = None
    bound: float
    observed: float


class Certificate(BaseModel):
    """Outcome of one check. A bound is asserted only when the verdict is pass or fail."""

    model_config = ConfigDict(frozen=True)

    kind: CertificateKind
    verdict: Verdict
    bound: Optional[GridFunction] = None
    observed: Optional[GridFunction] = None
    margin: Optional[float] = None
    slack: float = 0.0
    metadata: Dict[str, Constant] = Field(default_factory=dict)
    notes: Tuple[str, ...] = ()
    worst: Optional[WorstOffender] = None

    @property
    def passed(self) -> bool:
        return self.verdict == Verdict.PASS


def _not_asserted(kind: CertificateKind, verdict: Verdict, note: str, **metadata: Constant) -> Certificate:
    logger.info("%s certificate: %s (%s)", kind.value, verdict.value, note)
    return Certificate(kind=kind, verdict=verdict, notes=(note,), metadata=metadata)


def _slack(values) -> float:
    """REL_SLACK * (1 + max |finite value|); entries past the floating range do not widen it."""
    array = np.abs(np.asarray(values, dtype=float))
    finite = array[np.isfinite(array)]
    return REL_SLACK * (1.0 + (float(np.max(finite)) if finite.size else 0.0))


def compare_surfaces(
    kind: CertificateKind,
    bound: GridFunction,
    observed: GridFunction,
    metadata: Dict[str, Constant],
    notes: Sequence[str] = (),
) -> Certificate:
    """
    Pass iff min(bound - observed) >= -REL_SLACK * (1 + max|bound|).

    Points where the bound is infinite hold trivially and are left out of the
    margin, the slack and the worst offender. A bound infinite everywhere asserts
    nothing and is inconclusive.
    """
    finite = np.isfinite(bound.values)
    overflowed = int(np.count_nonzero(~finite))
    notes = tuple(notes)
    if overflowed:
        metadata = {**metadata, "overflowed_points": overflowed}
        if not finite.any():
            return _not_asserted(kind, Verdict.INCONCLUSIVE, "bound exceeds the floating range at every point", **metadata)
        notes += (f"bound exceeds the floating range at {overflowed} points; compared at the rest",)
    gap = np.where(finite, bound.values - observed.values, np.inf)
    at = np.unravel_index(int(np.argmin(gap)), gap.shape)
    margin = float(gap[at])
    slack = _slack(bound.values)
    x, y, z = bound.domain.coordinates(tuple(int(i) for i in at))
    verdict = Verdict.PASS if margin >= -slack else Verdict.FAIL
    logger.info("%s certificate: %s (margin %.6g)", kind.value, verdict.value, margin)
    return Certificate(
        kind=kind,
        verdict=verdict,
        bound=bound,
        observed=observed,
        margin=margin,
        slack=slack,
        metadata=metadata,
        notes=notes,
        worst=WorstOffender(x=x, y=y, z=z, bound=float(bound.values[at]), observed=float(observed.values[at])),
    )


def verify_gronwall(w: GridFunction, k: Kernel, c: float, uniform_in_z: bool = False) -> Certificate:
    """
    Check the Gronwall premise for w pointwise and, when it holds, compare w
    against the bound surface.
    """
    kind = CertificateKind.GRONWALL
    metadata: Dict[str, Constant] = {"c": float(c), "uniform_in_z": uniform_in_z}
    try:
        tables = as_tables(k, w.domain)
    except NegativeKernelError as exc:
        return _not_asserted(kind, Verdict.REFUSED, str(exc), **metadata)
    if c < 0 or np.any(w.values < 0):
        return _not_asserted(kind, Verdict.PREMISE_FAILED, "w and c must be nonnegative", **metadata)

    rhs = gronwall_premise_rhs(w, tables, c)
    excess = w.values - rhs
    slack = _slack(rhs)
    if np.max(excess) > slack:
        at = tuple(int(i) for i in np.unravel_index(int(np.argmax(excess)), excess.shape))
        x, y, z = w.domain.coordinates(at)
        return _not_asserted(
            kind, Verdict.PREMISE_FAILED,
            f"premise violated at (x={x!r}, y={y!r}, z={z!r}) by {float(excess[at]):.6g}",
            **metadata,
        )
    bound = gronwall_bound(tables, c, w.domain, uniform_in_z=uniform_in_z)
    return compare_surfaces(kind, bound, w, metadata)


def verify_lemma(u: SampledFunction, a: Coefficient) -> Certificate:
    """One-variable Gronwall: u >= 0 and u^delta <= a u imply u(t) <= u(t0) e_a(t, t0)."""
    kind = CertificateKind.GRONWALL
    ts = u.scale
    coefficient = exp_coefficients(a, ts)
    if min(u.values) < 0:
        return _not_asserted(kind, Verdict.PREMISE_FAILED, "u must be nonnegative")
    for t, a_t, u_t in zip(ts.points[:-1], coefficient, u.values):
        if delta_derivative(u, t) > a_t * u_t + REL_SLACK * (1.0 + abs(a_t * u_t)):
            return _not_asserted(kind, Verdict.PREMISE_FAILED, f"u^delta > a u at t={t!r}")

    bound = lemma_bound(u, a)
    gaps = [b - v for b, v in zip(bound.values, u.values)]
    worst = int(np.argmin(gaps))
    slack = _slack(bound.values)
    margin = float(gaps[worst])
    return Certificate(
        kind=kind,
        verdict=Verdict.PASS if margin >= -slack else Verdict.FAIL,
        margin=margin,
        slack=slack,
        metadata={"u0": u.values[0]},
        notes=("one-variable lemma",),
        worst=WorstOffender(x=ts.points[worst], bound=bound.values[worst], observed=u.values[worst]),
    )


def exp_coefficients(a: Coefficient, ts) -> Tuple[float, ...]:
    if isinstance(a, SampledFunction):
        return a.values
    if callable(a):
        return tuple(float(a(t)) for t in ts.points)
    return (float(a),) * len(ts)


def condition_surface(spec: ProblemSpec) -> np.ndarray:
    """alpha(x, z) + beta(y, z) - alpha(x0, z) on the grid."""
    alpha = spec.alpha_table()
    return alpha[:, None, :] + spec.beta_table()[None, :, :] - alpha[0][None, None, :]


def _reduced_only(kind: CertificateKind, spec: ProblemSpec) -> Optional[Certificate]:
    if spec.kind != ProblemKind.REDUCED:
        return _not_asserted(kind, Verdict.REFUSED, "this certificate applies to reduced problems (f, j)")
    return None


def growth_premise(report: SolveReport, k: Kernel) -> Optional[str]:
    """|f| <= p1 (|u| + |hu|) and |j| <= p2 |u| on the solution; returns a description of the first violation."""
    spec = report.spec
    d = spec.domain
    tables = as_tables(k, d)
    s = report.solution
    h = eval_h(s.u, spec)
    f = forcing_values(s, spec, h)
    slack = _slack(f)
    if np.any(np.abs(f) > tables.p * (np.abs(s.u.values) + np.abs(h)) + slack):
        return f"|{spec.forcing_label}| exceeds p1 (|u| + |hu|) on the solution"
    x, y, z = d.mesh()
    env = {"x": x[..., None], "y": y[..., None], "z": z[..., None],
           "q": d.zscale.array[None, None, None, :], "u": s.u.values[:, :, None, :]}
    j = spec.evaluate(spec.kernel, env, d.shape + (len(d.zscale),))
    if np.any(np.abs(j) > tables.r * np.abs(s.u.values[:, :, None, :]) + slack):
        return f"|{spec.kernel_label}| exceeds p2 |u| on the solution"
    return None


def lipschitz_premise(spec: ProblemSpec, first: SolutionTriple, second: SolutionTriple, k: Kernel,
                      other: Optional[ProblemSpec] = None) -> Optional[str]:
    """|f(u, hu) - f(v, hv)| <= p1 (|u - v| + |hu - hv|) and |j(u) - j(v)| <= p2 |u - v| on a pair of solutions."""
    other = other or spec
    d = spec.domain
    tables = as_tables(k, d)
    hu, hv = eval_h(first.u, spec), eval_h(second.u, other)
    fu, fv = forcing_values(first, spec, hu), forcing_values(second, other, hv)
    du = np.abs(first.u.values - second.u.values)
    slack = max(_slack(fu), _slack(fv))
    if np.any(np.abs(fu - fv) > tables.p * (du + np.abs(hu - hv)) + slack):
        return f"{spec.forcing_label} is not p1-Lipschitz on the compared solutions"
    x, y, z = d.mesh()
    base = {"x": x[..., None], "y": y[..., None], "z": z[..., None], "q": d.zscale.array[None, None, None, :]}
    shape = d.shape + (len(d.zscale),)
    ju = spec.evaluate(spec.kernel, {**base, "u": first.u.values[:, :, None, :]}, shape)
    jv = other.evaluate(other.kernel, {**base, "u": second.u.values[:, :, None, :]}, shape)
    if np.any(np.abs(ju - jv) > tables.r * du[:, :, None, :] + slack):
        return f"{spec.kernel_label} is not p2-Lipschitz on the compared solutions"
    return None


def boundedness_certificate(report: SolveReport, k: Kernel, c: Optional[float] = None) -> Certificate:
    """
    |u| <= c * e_Q with the kernel pair (p1, p1 p2).

    Args:
        report: a converged solve of a reduced problem
        k: growth kernels p1(x, y, z) of f and p2(x, y, z, q) of j
        c: bound on |alpha + beta - alpha(x0, .)|; the grid maximum when omitted
    """
    kind = CertificateKind.BOUNDEDNESS
    refused = _reduced_only(kind, report.spec)
    if refused:
        return refused
    if not report.converged:
        return _not_asserted(kind, Verdict.INCONCLUSIVE, "the solve did not converge")
    d = report.spec.domain
    try:
        tables = as_tables(k, d)
    except NegativeKernelError as exc:
        return _not_asserted(kind, Verdict.REFUSED, str(exc))

    tightest = float(np.max(np.abs(condition_surface(report.spec))))
    c = tightest if c is None else float(c)
    metadata: Dict[str, Constant] = {"c": c, "lambda": report.spec.lam}
    if c < tightest:
        return _not_asserted(kind, Verdict.PREMISE_FAILED, f"|alpha + beta - alpha(x0)| reaches {tightest:.6g} > c", **metadata)
    violation = growth_premise(report, tables)
    if violation:
        return _not_asserted(kind, Verdict.PREMISE_FAILED, violation, **metadata)

    bound = gronwall_bound(tables.composed(), c, d)
    return compare_surfaces(kind, bound, abs(report.solution.u), metadata)


class MismatchedProblemsError(ValueError):
    """Two problems compared by a certificate differ in more than their conditions."""


def _check_same_equation(spec1: ProblemSpec, spec2: ProblemSpec) -> None:
    if spec1.domain != spec2.domain:
        raise MismatchedProblemsError("the two problems live on different domains")
    if spec1.kind != spec2.kind:
        raise MismatchedProblemsError("the two problems are of different kinds")
    same_forcing = (
        isinstance(spec1.forcing, Expression) and isinstance(spec2.forcing, Expression)
        and spec1.forcing.text == spec2.forcing.text
    ) or spec1.forcing is spec2.forcing
    if not same_forcing or spec1.kernel.text != spec2.kernel.text:
        raise MismatchedProblemsError("the two problems have different equations")


def dependence_certificate(spec1: ProblemSpec, spec2: ProblemSpec, k: Kernel,
                           reports: Optional[Tuple[SolveReport, SolveReport]] = None) -> Certificate:
    """|u - v| <= a * e_Q, a the grid maximum of the difference of the two condition surfaces."""
    kind = CertificateKind.DEPENDENCE
    try:
        _check_same_equation(spec1, spec2)
    except MismatchedProblemsError as exc:
        return _not_asserted(kind, Verdict.REFUSED, str(exc))
    refused = _reduced_only(kind, spec1)
    if refused:
        return refused
    try:
        tables = as_tables(k, spec1.domain)
    except NegativeKernelError as exc:
        return _not_asserted(kind, Verdict.REFUSED, str(exc))

    first, second = reports or (solve_picard(spec1), solve_picard(spec2))
    if not (first.converged and second.converged):
        return _not_asserted(kind, Verdict.INCONCLUSIVE, "at least one solve did not converge")

    a = float(np.max(np.abs(condition_surface(spec1) - condition_surface(spec2))))
    metadata: Dict[str, Constant] = {"a": a, "lambda": spec1.lam}
    violation = lipschitz_premise(spec1, first.solution, second.solution, tables, other=spec2)
    if violation:
        return _not_asserted(kind, Verdict.PREMISE_FAILED, violation, **metadata)

    bound = gronwall_bound(tables.composed(), a, spec1.domain)
    return compare_surfaces(kind, bound, abs(first.solution.u - second.solution.u), metadata)


def kernel_mass(k: Kernel, domain: ProductDomain) -> float:
    """Grid value of the double sum of p1 + integral of p2 over q; always finite here."""
    tables = as_tables(k, domain)
    inner = tables.p + z_integral(tables.r, domain.zscale)
    d = double_integral_table(inner, domain)
    return float(np.max(d))


def uniqueness_check(spec: ProblemSpec, seeds: Tuple[SolutionTriple, SolutionTriple],
                     k: Optional[Kernel] = None) -> Certificate:
    """Solve from both seeds; pass iff the two results are within 2 tol in the S-norm."""
    kind = CertificateKind.UNIQUENESS
    first, second = (solve_picard(spec, seed) for seed in seeds)
    metadata: Dict[str, Constant] = {"tol": spec.tol, "lambda": spec.lam}
    notes = []
    if k is not None:
        try:
            metadata["kernel_mass"] = kernel_mass(k, spec.domain)
            if spec.kind == ProblemKind.REDUCED and first.converged and second.converged:
                violation = lipschitz_premise(spec, first.solution, second.solution, k)
                metadata["lipschitz_premise"] = violation is None
                if violation:
                    notes.append(violation)
        except NegativeKernelError as exc:
            return _not_asserted(kind, Verdict.REFUSED, str(exc), **metadata)
    if not (first.converged and second.converged):
        return _not_asserted(kind, Verdict.INCONCLUSIVE, "at least one solve did not converge", **metadata)

    distance = s_norm(first.solution - second.solution, spec.lam)
    metadata["distance"] = distance
    margin = 2.0 * spec.tol - distance
    verdict = Verdict.PASS if margin >= 0 else Verdict.FAIL
    logger.info("uniqueness certificate: %s (distance %.3e)", verdict.value, distance)
    return Certificate(kind=kind, verdict=verdict, margin=margin, metadata=metadata, notes=tuple(notes))


def contraction_certificate(spec: ProblemSpec, M: Expression, K: Expression) -> Certificate:
    """Pass iff gamma = gamma1 + gamma2 + gamma3 < 1 strictly."""
    kind = CertificateKind.CONTRACTION
    try:
        constants: ContractionConstants = estimate_constants(spec, M, K)
    except NegativeKernelError as exc:
        return _not_asserted(kind, Verdict.REFUSED, str(exc))
    names = ("gamma1", "gamma2", "gamma3", "eta1", "eta2", "eta3")
    metadata: Dict[str, Constant] = {name: getattr(constants, name) for name in names}
    metadata.update(gamma=constants.gamma, lam=constants.lam, apriori_bound=constants.apriori_bound)
    out_of_range = sorted(name for name, value in metadata.items() if isinstance(value, float) and not np.isfinite(value))
    notes: Tuple[str, ...] = ()
    if out_of_range:
        notes = (f"{', '.join(out_of_range)} exceed the floating range",)
        metadata.update({name: None for name in out_of_range})
    margin = 1.0 - constants.gamma
    return Certificate(
        kind=kind,
        verdict=Verdict.PASS if constants.contracting else Verdict.FAIL,
        margin=margin if np.isfinite(margin) else None,
        metadata=metadata,
        notes=notes,
    )
