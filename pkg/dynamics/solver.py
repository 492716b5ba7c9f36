"""
Picard iteration for the integral form of the problem.

One sweep maps a triple (u, u1, u2) to

    Pu  = alpha(x, z) + beta(y, z) - alpha(x0, z) + sum_{s<x} sum_{t<y} mu1 mu2 F(s, t, z, ...)
    Pu1 = alpha^delta1(x, z) + sum_{t<y} mu2(t) F(x, t, z, ...)
    Pu2 = beta^delta2(y, z) + sum_{s<x} mu1(s) F(s, y, z, ...)

with F evaluated on the previous triple. The derivative layers are iterated,
not re-differenced from Pu.
"""

import logging
from typing import List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict

from .grid import (
    GridFunction,
    SolutionTriple,
    double_integral_table,
    forward_quotient,
    left_sum_table,
    mixed_delta,
    s_norm,
    sup_norm,
    z_integral,
)
from .problem import ProblemKind, ProblemSpec

logger = logging.getLogger(__name__)

# Relative threshold of the Darboux compatibility check alpha(x0, z) = beta(y0, z).
COMPATIBILITY_REL_TOL = 1e-9


class SolveReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    spec: ProblemSpec
    solution: SolutionTriple
    iterations: int
    residual_history: Tuple[float, ...]
    sup_residual_history: Tuple[float, ...]
    gamma_hat: float
    converged: bool

    @property
    def final_residual(self) -> Optional[float]:
        return self.residual_history[-1] if self.residual_history else None


class CompatibilityVerdict(BaseModel):
    model_config = ConfigDict(frozen=True)

    passed: bool
    max_gap: float
    threshold: float
    offending_z: Tuple[float, ...]


def _kernel_env(s: SolutionTriple, spec: ProblemSpec, rows: slice, cols: slice) -> dict:
    """Bindings of shape (n1, n2, nz, nq); u and its layers are read at level q."""
    d = s.domain
    env = {
        "x": d.t1.array[rows, None, None, None],
        "y": d.t2.array[None, cols, None, None],
        "z": d.zscale.array[None, None, :, None],
        "q": d.zscale.array[None, None, None, :],
        "u": s.u.values[rows, cols, None, :],
    }
    if spec.kind == ProblemKind.FULL:
        env["u1"] = s.u_d1.values[rows, cols, None, :]
        env["u2"] = s.u_d2.values[rows, cols, None, :]
    return env


def _integral_operator(s: SolutionTriple, spec: ProblemSpec, rows: slice, cols: slice) -> np.ndarray:
    d = s.domain
    n1 = len(range(*rows.indices(len(d.t1))))
    n2 = len(range(*cols.indices(len(d.t2))))
    nz = len(d.zscale)
    values = spec.evaluate(spec.kernel, _kernel_env(s, spec, rows, cols), (n1, n2, nz, nz))
    return z_integral(values, d.zscale)


def eval_H(s: SolutionTriple, spec: ProblemSpec, at: Optional[Tuple[int, int]] = None) -> np.ndarray:
    """
    (Hu)(x, y, z), the delta integral over q in [a, b) of G (or j for a reduced problem).

    Args:
        s: current triple
        spec: problem whose kernel is integrated
        at: (i, j) grid column; None evaluates the whole grid

    Returns:
        Values on zscale for one column, or an array of the domain's shape
    """
    if at is None:
        return _integral_operator(s, spec, slice(None), slice(None))
    i, j = at
    return _integral_operator(s, spec, slice(i, i + 1), slice(j, j + 1))[0, 0]


def eval_h(u: GridFunction, spec: ProblemSpec, at: Optional[Tuple[int, int]] = None) -> np.ndarray:
    """(hu) of a reduced problem: j only reads u, so the derivative layers are not needed."""
    if spec.kind != ProblemKind.REDUCED:
        raise ValueError("eval_h applies to reduced problems; use eval_H for full ones")
    zero = GridFunction.zeros(u.domain)
    return eval_H(SolutionTriple(u=u, u_d1=zero, u_d2=zero), spec, at)


def forcing_values(s: SolutionTriple, spec: ProblemSpec, h: Optional[np.ndarray] = None) -> np.ndarray:
    """F (or f) evaluated on the triple at every grid point."""
    d = s.domain
    if isinstance(spec.forcing, GridFunction):
        return spec.forcing.values
    if h is None:
        h = eval_H(s, spec)
    x, y, z = d.mesh()
    env = {"x": x, "y": y, "z": z, "u": s.u.values, "Hu": h}
    if spec.kind == ProblemKind.FULL:
        env["u1"] = s.u_d1.values
        env["u2"] = s.u_d2.values
    return spec.evaluate(spec.forcing, env, d.shape)


def apply_P(s: SolutionTriple, spec: ProblemSpec) -> SolutionTriple:
    """One Picard sweep."""
    d = spec.domain
    alpha = spec.alpha_table()
    beta = spec.beta_table()
    f = forcing_values(s, spec)

    u = alpha[:, None, :] + beta[None, :, :] - alpha[0][None, None, :] + double_integral_table(f, d)
    u_d1 = forward_quotient(alpha, d.t1.mu, 0)[:, None, :] + left_sum_table(f, d.t2.mu, 1)
    u_d2 = forward_quotient(beta, d.t2.mu, 0)[None, :, :] + left_sum_table(f, d.t1.mu, 0)
    return SolutionTriple(
        u=GridFunction(domain=d, values=u),
        u_d1=GridFunction(domain=d, values=u_d1),
        u_d2=GridFunction(domain=d, values=u_d2),
    )


def contraction_ratio(history: Sequence[float]) -> float:
    """Largest ratio r[n+1] / r[n] from the second sweep on; zero residuals are skipped."""
    ratios = [
        later / earlier
        for earlier, later in zip(history[1:], history[2:])
        if earlier > 0
    ]
    return max(ratios, default=0.0)


def solve_picard(spec: ProblemSpec, seed: Optional[SolutionTriple] = None) -> SolveReport:
    """
    Iterate u_{n+1} = P(u_n) until the S-norm step is at most tol or max_iter sweeps ran.

    A sweep that still moves the triple by more than tol counts as an iteration;
    the sweep confirming the fixed point does not. A seed that is already the
    fixed point (alpha = beta = F = 0 from the zero seed) therefore converges with
    zero iterations after one sweep. Non-convergence is reported, not raised.
    """
    current = seed if seed is not None else SolutionTriple.zero(spec.domain)
    if current.domain != spec.domain:
        raise ValueError("seed lives on a different domain than the problem")

    history: List[float] = []
    sup_history: List[float] = []
    iterations = 0
    converged = False
    for sweep in range(1, spec.max_iter + 1):
        updated = apply_P(current, spec)
        step = updated - current
        residual = s_norm(step, spec.lam)
        history.append(residual)
        sup_history.append(sup_norm(step))
        logger.debug("sweep %d: S-norm step %.6e, sup-norm step %.6e", sweep, residual, sup_history[-1])
        current = updated
        if residual <= spec.tol:
            converged = True
            break
        iterations += 1

    report = SolveReport(
        spec=spec,
        solution=current,
        iterations=iterations,
        residual_history=tuple(history),
        sup_residual_history=tuple(sup_history),
        gamma_hat=contraction_ratio(history),
        converged=converged,
    )
    if converged:
        logger.info("%s converged after %d iterations", spec.name or "problem", iterations)
    else:
        logger.warning(
            "%s did not converge within %d sweeps (last step %.3e)",
            spec.name or "problem", spec.max_iter, history[-1],
        )
    return report


def residual_equation(report: SolveReport) -> np.ndarray:
    """u^{delta1 delta2} - F(..., u, u1, u2, Hu) at the interior points (x < max, y < max)."""
    s = report.solution
    f = forcing_values(s, report.spec)
    return (mixed_delta(s.u).values - f)[:-1, :-1]


def check_compatibility(spec: ProblemSpec) -> CompatibilityVerdict:
    """Darboux corner condition alpha(x0, z) = beta(y0, z) for every z."""
    alpha = spec.alpha_table()
    gap = np.abs(alpha[0] - spec.beta_table()[0])
    threshold = COMPATIBILITY_REL_TOL * (1.0 + float(np.max(np.abs(alpha))))
    offending = tuple(float(z) for z, g in zip(spec.domain.zscale.points, gap) if g > threshold)
    return CompatibilityVerdict(
        passed=not offending,
        max_gap=float(np.max(gap)),
        threshold=threshold,
        offending_z=offending,
    )
